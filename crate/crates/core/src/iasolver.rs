//! Integro-algebraic eigen-solver: fixed-point solution of the half-line
//! integral equations for p±, q±, the algebraic phase condition fixing ν, and
//! eigenfunction reconstruction by Laplace inversion.

use std::f64::consts::PI;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{leading_oscillation, nu_fbm, nu_fbn, Order};
use crate::error::{domain, Error, Result};
use crate::nystrom::{Lu, Mat};
use crate::quad::{brent, gauss, Rule};
use crate::specfun::{aux_table, b_alpha, gamma, AuxFunctionTable, Family, HurstParams};

const S_MIN: f64 = 1e-10;
const PANEL: f64 = 1.0;
const ORDER: usize = 10;
const MAX_ITER: usize = 500;

/// Quadrature for the s-variable of the integral equations.
#[derive(Debug, Clone)]
pub struct HalfLineGrid {
    pub nu: f64,
    pub s_max: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl HalfLineGrid {
    pub fn new(nu: f64) -> Result<HalfLineGrid> {
        if !(nu > 0.0) || !nu.is_finite() {
            return domain(format!("nu must be positive, got {nu}"));
        }
        let s_max = (40.0 / nu).max(10.0);
        let (mut nodes, mut weights): (Vec<f64>, Vec<f64>) = gauss(ORDER).on(0.0, S_MIN).unzip();
        let r = Rule::log_panels(S_MIN.ln(), s_max.ln(), PANEL, ORDER);
        nodes.extend(r.nodes);
        weights.extend(r.weights);
        Ok(HalfLineGrid { nu, s_max, nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Discretised (Af)(t) = (1/π)∫₀^∞ h₀(s)e^{−νs}/(s+t) f(s) ds.
#[derive(Debug, Clone)]
pub struct AOperator {
    pub grid: HalfLineGrid,
    /// Column weights h₀(s_j)e^{−νs_j}w_j/π.
    kw: Vec<f64>,
    /// Row-major A_ij = kw_j/(s_i+s_j).
    mat: Vec<f64>,
    norm: OnceLock<f64>,
}

// h₀ on the node set shared by every ν ≥ 4 (s_max = 10)
fn h0_on_grid(grid: &HalfLineGrid, p: &HurstParams) -> Arc<Vec<f64>> {
    type Key = (Family, u64, u64);
    static CACHE: OnceLock<Mutex<HashMap<Key, Arc<Vec<f64>>>>> = OnceLock::new();
    let t = aux_table(p);
    let compute = || Arc::new(grid.nodes.iter().map(|&s| t.h0_at(s)).collect::<Vec<f64>>());
    if grid.s_max != 10.0 {
        return compute();
    }
    let key = (p.family, p.h.to_bits(), grid.s_max.to_bits());
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().unwrap().get(&key) {
        return v.clone();
    }
    let v = compute();
    cache.lock().unwrap().entry(key).or_insert(v).clone()
}

impl AOperator {
    pub fn new(nu: f64, p: &HurstParams) -> Result<AOperator> {
        let grid = HalfLineGrid::new(nu)?;
        let h0 = h0_on_grid(&grid, p);
        let kw: Vec<f64> = grid
            .nodes
            .iter()
            .zip(&grid.weights)
            .zip(h0.iter())
            .map(|((&s, &w), &h)| h * (-nu * s).exp() * w / PI)
            .collect();
        let s = &grid.nodes;
        let mut mat = Vec::with_capacity(s.len() * s.len());
        for &si in s {
            mat.extend(s.iter().zip(&kw).map(|(&sj, &k)| k / (si + sj)));
        }
        Ok(AOperator { grid, kw, mat, norm: OnceLock::new() })
    }

    /// Spectral norm estimate of A on L²(0,∞).
    pub fn norm(&self) -> f64 {
        *self.norm.get_or_init(|| self.estimate_norm())
    }

    pub fn contracting(&self) -> bool {
        self.norm() < 1.0
    }

    /// sign·(Af)(t_i) on the grid.
    pub fn apply(&self, f: &[f64], sign: f64) -> Vec<f64> {
        let n = self.grid.len();
        self.mat.chunks_exact(n).map(|row| sign * row.iter().zip(f).map(|(a, b)| a * b).sum::<f64>()).collect()
    }

    /// sign·(1/π)∫h₀(s)e^{−νs}f(s)/(s+z)ds at complex z off (−∞, 0].
    pub fn extend(&self, f: &[f64], sign: f64, z: C64) -> C64 {
        let s = &self.grid.nodes;
        let mut acc = C64::new(0.0, 0.0);
        for ((&sj, &k), &fj) in s.iter().zip(&self.kw).zip(f) {
            acc += k * fj / (sj + z);
        }
        sign * acc
    }

    // power iteration on (W^½ K W^½ D)ᵀ(W^½ K W^½ D), D = diag(h₀e^{−νs})
    fn estimate_norm(&self) -> f64 {
        let n = self.grid.len();
        let s = &self.grid.nodes;
        let w = &self.grid.weights;
        let d: Vec<f64> = (0..n).map(|j| if w[j] > 0.0 { self.kw[j] * PI / w[j] } else { 0.0 }).collect();
        let b = Mat::from_fn(n, |i, j| (w[i] * w[j]).sqrt() / (PI * (s[i] + s[j])));
        let mul = |v: &[f64]| -> Vec<f64> { (0..n).map(|i| b.row(i).iter().zip(v).map(|(x, y)| x * y).sum()).collect() };
        let mut v: Vec<f64> = vec![1.0; n];
        let mut est = 0.0;
        for _ in 0..60 {
            let dv: Vec<f64> = v.iter().zip(&d).map(|(x, y)| x * y).collect();
            let mut u = mul(&mul(&dv));
            u.iter_mut().zip(&d).for_each(|(x, y)| *x *= y);
            let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if nu == 0.0 {
                return 0.0;
            }
            let next = (nu / nv).sqrt();
            v = u.into_iter().map(|x| x / nu).collect();
            if (next - est).abs() < 1e-10 * next {
                return next;
            }
            est = next;
        }
        est
    }

    /// Solves f = rhs + sign·Af by fixed-point iteration, falling back to a
    /// dense solve when the iteration stalls. Returns the solution and its
    /// relative max-norm residual.
    pub fn solve(&self, rhs: &[f64], sign: f64) -> Result<(Vec<f64>, f64)> {
        let scale = rhs.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let mut f = rhs.to_vec();
        let mut converged = false;
        let mut last = f64::INFINITY;
        for _ in 0..MAX_ITER {
            let af = self.apply(&f, sign);
            let next: Vec<f64> = rhs.iter().zip(&af).map(|(r, a)| r + a).collect();
            let diff = next.iter().zip(&f).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            f = next;
            if diff <= 1e-13 * scale {
                converged = true;
                break;
            }
            // contraction factor too close to one for the iteration to pay off
            if diff > 0.95 * last {
                break;
            }
            last = diff;
        }
        if !converged {
            let n = self.grid.len();
            let m = Mat::from_fn(n, |i, j| f64::from(u8::from(i == j)) - sign * self.mat[i * n + j]);
            f = Lu::new(&m)?.solve(rhs);
        }
        let af = self.apply(&f, sign);
        let res = f.iter().zip(rhs).zip(&af).fold(0.0f64, |m, ((x, r), a)| m.max((x - r - a).abs())) / scale;
        if !(res <= 1e-10) {
            return Err(Error::NotContracting(format!("fixed-point residual {res:e}")));
        }
        Ok((f, res))
    }
}

/// Applies sign·A to `f` given on the ν-dependent half-line grid.
pub fn apply_a(f: &[f64], nu: f64, p: &HurstParams, sign: f64) -> Result<Vec<f64>> {
    let a = AOperator::new(nu, p)?;
    if f.len() != a.grid.len() {
        return Err(Error::GridMismatch(format!("{} values for a grid of {}", f.len(), a.grid.len())));
    }
    Ok(a.apply(f, sign))
}

fn lambda_of(p: &HurstParams, nu: f64) -> f64 {
    match p.family {
        Family::FbmCovariance => p.lambda_prefactor() * nu.powf(-2.0 * p.h - 1.0),
        Family::FbnNoise => p.lambda_prefactor() * nu.powf(1.0 - 2.0 * p.h),
    }
}

/// Integro-algebraic solution for the fBm covariance operator at one ν.
#[derive(Debug, Clone)]
pub struct IaSolutionFbm {
    pub n: usize,
    pub params: HurstParams,
    pub nu: f64,
    pub op: AOperator,
    pub p_plus: Vec<f64>,
    pub p_minus: Vec<f64>,
    pub q_plus: Vec<f64>,
    pub q_minus: Vec<f64>,
    pub xi: C64,
    pub eta: C64,
    pub residual: f64,
    b: f64,
    table: Arc<AuxFunctionTable>,
}

impl IaSolutionFbm {
    fn p_ext(&self, sign: f64, z: C64) -> C64 {
        let v = if sign > 0.0 { &self.p_plus } else { &self.p_minus };
        1.0 + self.op.extend(v, sign, z)
    }

    fn q_ext(&self, sign: f64, z: C64) -> C64 {
        let v = if sign > 0.0 { &self.q_plus } else { &self.q_minus };
        z + self.op.extend(v, sign, z)
    }

    pub fn a_plus(&self, z: C64) -> C64 {
        self.p_ext(1.0, z) + self.p_ext(-1.0, z)
    }

    pub fn a_minus(&self, z: C64) -> C64 {
        self.p_ext(1.0, z) - self.p_ext(-1.0, z)
    }

    pub fn b_plus(&self, z: C64) -> C64 {
        self.q_ext(1.0, z) + self.q_ext(-1.0, z)
    }

    pub fn b_minus(&self, z: C64) -> C64 {
        self.q_ext(1.0, z) - self.q_ext(-1.0, z)
    }

    /// Normalised phase condition Im{ξη̄}/|ξη̄|.
    pub fn phase(&self) -> f64 {
        let z = self.xi * self.eta.conj();
        z.im / z.norm()
    }

    pub fn lambda(&self) -> f64 {
        lambda_of(&self.params, self.nu)
    }

    /// Φ₀(νw) up to the common factor, for w off the cut.
    pub fn phi0_scaled(&self, w: C64) -> C64 {
        let r = self.xi / self.eta;
        self.table.x0(w) * (self.b_plus(-w) - self.b * self.a_plus(-w) - r * self.a_minus(-w))
    }

    /// Φ₁(νw) up to the common factor, for w off the cut.
    pub fn phi1_scaled(&self, w: C64) -> C64 {
        let r = self.xi / self.eta;
        self.table.x0(w) * (self.b_minus(-w) - self.b * self.a_minus(-w) - r * self.a_plus(-w))
    }

    /// [ν|a₋(i)|, ν|a₊(i)−2|, ν²|b₋(i)|, ν²|b₊(i)−2i|] and the same at −i.
    pub fn lemma_bounds(&self) -> [f64; 8] {
        let nu = self.nu;
        let mut out = [0.0; 8];
        for (k, s) in [1.0, -1.0].into_iter().enumerate() {
            let z = C64::new(0.0, s);
            out[4 * k] = nu * self.a_minus(z).norm();
            out[4 * k + 1] = nu * (self.a_plus(z) - 2.0).norm();
            out[4 * k + 2] = nu * nu * self.b_minus(z).norm();
            out[4 * k + 3] = nu * nu * (self.b_plus(z) - 2.0 * z).norm();
        }
        out
    }
}

fn solve_pq_inner(nu: f64, p: &HurstParams, n: usize) -> Result<IaSolutionFbm> {
    let op = AOperator::new(nu, p)?;
    let ones = vec![1.0; op.grid.len()];
    let s = op.grid.nodes.clone();
    let (p_plus, r1) = op.solve(&ones, 1.0)?;
    let (p_minus, r2) = op.solve(&ones, -1.0)?;
    let (q_plus, r3) = op.solve(&s, 1.0)?;
    let (q_minus, r4) = op.solve(&s, -1.0)?;
    let table = aux_table(p);
    let x0_i = table.x0(C64::i());
    let b = if p.h == 0.5 { 0.0 } else { b_alpha(p.alpha)? };
    let mut sol = IaSolutionFbm {
        n,
        params: *p,
        nu,
        op,
        p_plus,
        p_minus,
        q_plus,
        q_minus,
        xi: C64::new(0.0, 0.0),
        eta: C64::new(0.0, 0.0),
        residual: r1.max(r2).max(r3).max(r4),
        b,
        table,
    };
    let (i, mi) = (C64::i(), -C64::i());
    let ep = C64::from_polar(1.0, nu / 2.0);
    let em = ep.conj();
    let xc = x0_i.conj();
    sol.xi = ep * x0_i * (sol.b_plus(mi) - b * sol.a_plus(mi)) + em * xc * (sol.b_minus(i) - b * sol.a_minus(i));
    sol.eta = ep * x0_i * sol.a_minus(mi) + em * xc * sol.a_plus(i);
    Ok(sol)
}

/// p±, q±, a±, b±, ξ, η at a fixed ν (no phase condition imposed).
pub fn solve_pq_fbm(nu: f64, h: f64) -> Result<IaSolutionFbm> {
    let p = HurstParams::fbm(h)?;
    if h == 1.0 {
        return domain("integro-algebraic system needs H < 1");
    }
    solve_pq_inner(nu, &p, 0)
}

/// Sign-change scan of `f` over `[lo, hi]` followed by Brent; keeps the root
/// nearest `target` among those where |f| really vanishes.
fn bracketed_root(f: impl Fn(f64) -> Result<f64>, lo: f64, hi: f64, target: f64, scan: usize) -> Result<f64> {
    let xs: Vec<f64> = (0..scan).map(|k| lo + (hi - lo) * k as f64 / (scan - 1) as f64).collect();
    let mut ys = Vec::with_capacity(scan);
    for &x in &xs {
        ys.push(f(x)?);
    }
    let mut best: Option<f64> = None;
    for k in 0..scan - 1 {
        if ys[k] * ys[k + 1] > 0.0 {
            continue;
        }
        let r = brent(|x| f(x).unwrap_or(f64::NAN), xs[k], xs[k + 1], 1e-13)?;
        if f(r)?.abs() > 1e-6 {
            continue;
        }
        if best.is_none_or(|b| (r - target).abs() < (b - target).abs()) {
            best = Some(r);
        }
    }
    best.ok_or_else(|| Error::Numerical(format!("no phase root in [{lo}, {hi}]")))
}

// Bracket half-width and scan size around the closed-form frequency: the
// residual is below 0.2/n for every H tried, so large n get a narrow window.
fn bracket_width(n: usize, wide: f64) -> (f64, usize) {
    if n < 8 {
        (wide, 13)
    } else {
        ((2.0 / n as f64).min(wide), 3)
    }
}

/// Solves the algebraic condition Im{ξη̄} = 0 on the branch of mode `n`.
pub fn solve_nu_fbm(n: usize, h: f64) -> Result<IaSolutionFbm> {
    let p = HurstParams::fbm(h)?;
    if h == 1.0 {
        return domain("integro-algebraic system needs H < 1");
    }
    let guess = nu_fbm(n, h, Order::SecondOrder)?;
    let (hw, scan) = bracket_width(n, 1.2);
    let lo = (guess - hw).max(0.3);
    let nu = bracketed_root(|v| Ok(solve_pq_inner(v, &p, n)?.phase()), lo, guess + hw, guess, scan)?;
    solve_pq_inner(nu, &p, n)
}

/// Smallest mode index whose discretised A is a contraction at the
/// second-order ν.
pub fn n_min_fbm(h: f64) -> Result<usize> {
    let p = HurstParams::fbm(h)?;
    for n in 1..200 {
        if AOperator::new(nu_fbm(n, h, Order::SecondOrder)?, &p)?.contracting() {
            return Ok(n);
        }
    }
    Err(Error::NotContracting(format!("no contracting branch below n = 200 at H = {h}")))
}

/// Eigenfunction reconstructed from an integro-algebraic solution.
#[derive(Debug, Clone)]
pub struct IaEigenfunction {
    pub nu: f64,
    /// Coefficient c of the oscillatory part Re{c·e^{iνx}}.
    osc: C64,
    /// (u, weight toward x=0, weight toward x=1) on the layer grid.
    layer: Vec<(f64, f64, f64)>,
    /// L² norm of the unnormalised function, with sign so that the
    /// normalised function overlaps the leading oscillation positively.
    pub scale: f64,
}

impl IaEigenfunction {
    /// Unnormalised value.
    pub fn raw(&self, x: f64) -> f64 {
        let o = (self.osc * C64::from_polar(1.0, self.nu * x)).re;
        let mut l = 0.0;
        for &(u, k0, k1) in &self.layer {
            let e0 = -u * self.nu * x;
            let e1 = -u * self.nu * (1.0 - x);
            if e0 > -745.0 {
                l += k0 * e0.exp();
            }
            if e1 > -745.0 {
                l += k1 * e1.exp();
            }
        }
        o + l / PI
    }

    /// L²-normalised value.
    pub fn eval(&self, x: f64) -> f64 {
        self.raw(x) / self.scale
    }

    fn finish(mut self, p: &HurstParams, n: usize) -> Result<IaEigenfunction> {
        let r = Rule::graded_unit(16);
        let vals: Vec<f64> = r.nodes.iter().map(|&x| self.raw(x)).collect();
        let nrm = r.weights.iter().zip(&vals).map(|(w, v)| w * v * v).sum::<f64>().sqrt();
        if !(nrm > 0.0) || !nrm.is_finite() {
            return Err(Error::Numerical("eigenfunction has zero norm".into()));
        }
        let ov: f64 = r.weights.iter().zip(&r.nodes).zip(&vals).map(|((w, &x), v)| w * v * leading_oscillation(p, n, x)).sum();
        self.scale = if ov < 0.0 { -nrm } else { nrm };
        Ok(self)
    }
}

/// φ(x) = −(2/(3−α))Re{e^{iνx}Φ₀(iν)} + (1/π)∫(sinθ₀/γ₀)[e^{−uν(1−x)}Φ₁(−uν) − e^{−uνx}Φ₀(−uν)]du.
pub fn eigenfunction_fbm(sol: &IaSolutionFbm) -> Result<IaEigenfunction> {
    let p = &sol.params;
    let t = &sol.table;
    let osc = -2.0 / (3.0 - p.alpha) * sol.phi0_scaled(C64::i());
    let mut layer = Vec::with_capacity(t.grid.len());
    for (i, &u) in t.grid.iter().enumerate() {
        let c = t.weights[i] * t.theta0[i].sin() / t.gamma0[i];
        if c == 0.0 {
            continue;
        }
        let x0 = t.x0_neg[i];
        let uu = C64::new(u, 0.0);
        let r = sol.xi / sol.eta;
        let p0 = x0 * (sol.b_plus(uu) - sol.b * sol.a_plus(uu) - r * sol.a_minus(uu)).re;
        let p1 = x0 * (sol.b_minus(uu) - sol.b * sol.a_minus(uu) - r * sol.a_plus(uu)).re;
        layer.push((u, -c * p0, c * p1));
    }
    IaEigenfunction { nu: sol.nu, osc, layer, scale: 1.0 }.finish(p, sol.n)
}

/// Which decoupled subsystem a noise mode belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// Even mode index.
    Minus,
    /// Odd mode index.
    Plus,
}

impl Branch {
    pub fn of(n: usize) -> Branch {
        if n.is_multiple_of(2) {
            Branch::Minus
        } else {
            Branch::Plus
        }
    }

    fn sign(self) -> f64 {
        match self {
            Branch::Minus => -1.0,
            Branch::Plus => 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IaSolutionFbn {
    pub n: usize,
    pub params: HurstParams,
    pub nu: f64,
    pub branch: Branch,
    pub op: AOperator,
    pub p: Vec<f64>,
    pub residual: f64,
    table: Arc<AuxFunctionTable>,
}

impl IaSolutionFbn {
    pub fn p_ext(&self, z: C64) -> C64 {
        1.0 + self.op.extend(&self.p, self.branch.sign(), z)
    }

    pub fn lambda(&self) -> f64 {
        lambda_of(&self.params, self.nu)
    }

    /// max over the grid of |p(τ)−1|·ν·τ.
    pub fn decay_constant(&self) -> f64 {
        self.op.grid.nodes.iter().zip(&self.p).fold(0.0f64, |m, (&t, &v)| m.max((v - 1.0).abs() * self.nu * t))
    }
}

fn fbn_at(nu: f64, n: usize, p: &HurstParams) -> Result<(IaSolutionFbn, f64)> {
    let branch = Branch::of(n);
    let op = AOperator::new(nu, p)?;
    let (pv, res) = op.solve(&vec![1.0; op.grid.len()], branch.sign())?;
    let sol = IaSolutionFbn { n, params: *p, nu, branch, op, p: pv, residual: res, table: aux_table(p) };
    let pi_ = sol.p_ext(C64::i());
    let (m, base) = match branch {
        Branch::Minus => ((n / 2) as f64, -PI / 2.0),
        Branch::Plus => (n.div_ceil(2) as f64, -1.5 * PI),
    };
    let f = nu - (base + (p.alpha - 1.0) * PI / 4.0 + 2.0 * (pi_.im / pi_.re).atan() + 2.0 * PI * m);
    Ok((sol, f))
}

/// Solves the decoupled noise subsystem for mode `n` (odd: plus, even: minus).
pub fn solve_fbn(n: usize, h: f64) -> Result<IaSolutionFbn> {
    let p = HurstParams::fbn(h)?;
    let guess = nu_fbn(n, h, Order::SecondOrder)?;
    let (hw, scan) = bracket_width(n, 1.5);
    let lo = (guess - hw).max(0.05);
    let nu = bracketed_root(|v| Ok(fbn_at(v, n, &p)?.1), lo, guess + hw, guess, scan)?;
    if !(nu > 0.0) {
        return Err(Error::Numerical(format!("non-positive frequency {nu}")));
    }
    Ok(fbn_at(nu, n, &p)?.0)
}

/// Noise-family eigenfunction by Laplace inversion of the subsystem solution.
pub fn eigenfunction_fbn(sol: &IaSolutionFbn) -> Result<IaEigenfunction> {
    let p = &sol.params;
    let t = &sol.table;
    let a1 = p.alpha - 1.0;
    let sgn0 = -sol.branch.sign();
    let osc = sgn0 * 2.0 / a1 * C64::i() * t.x0(C64::i()) * sol.p_ext(-C64::i());
    let rot = C64::from_polar(1.0, -PI * a1 / 2.0);
    let mut layer = Vec::with_capacity(t.grid.len());
    for (i, &u) in t.grid.iter().enumerate() {
        let lam = 1.0 - u.powf(a1) * rot;
        let c = t.weights[i] * lam.arg().sin() / lam.norm() * t.x0_neg[i] * sol.p_ext(C64::new(u, 0.0)).re;
        layer.push((u, sgn0 * c, -c));
    }
    IaEigenfunction { nu: sol.nu, osc, layer, scale: 1.0 }.finish(p, sol.n)
}

/// Asymptotic ∫₀¹x^{−β}φ_n dx ≈ C(α,β)ν_n^{β−1} for noise eigenfunctions.
pub fn scalar_product_power(n: usize, h: f64, beta: f64) -> Result<f64> {
    Ok(power_constant(h, beta)? * nu_fbn(n, h, Order::SecondOrder)?.powf(beta - 1.0))
}

/// C(α,β) = Γ(1−β)·sin((1−β)π)/π·∫₀^∞ρ₀(t)/h₀(t)·t^{β−1}dt.
pub fn power_constant(h: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return domain(format!("beta = {beta} outside (0,1)"));
    }
    let p = HurstParams::fbn(h)?;
    let t = aux_table(&p);
    let g: Vec<f64> = (0..t.grid.len())
        .map(|i| if t.h0[i] == 0.0 { 0.0 } else { t.rho0[i] / t.h0[i] * t.grid[i].powf(beta - 1.0) })
        .collect();
    let full = tailed_integral(&t, &g, 0, t.grid.len());
    let lo = t.grid.partition_point(|&u| u < 1e-15);
    let hi = t.grid.partition_point(|&u| u < 1e15);
    let inner = tailed_integral(&t, &g, lo, hi);
    if !full.is_finite() || (full - inner).abs() > 1e-6 * full.abs() {
        return Err(Error::Quadrature(format!("rho0/h0 integral unresolved: {full} vs {inner}")));
    }
    Ok(gamma(1.0 - beta) * ((1.0 - beta) * PI).sin() / PI * full)
}

// grid sum over [lo, hi) plus power-law tails fitted at both ends
fn tailed_integral(t: &AuxFunctionTable, g: &[f64], lo: usize, hi: usize) -> f64 {
    let u = &t.grid;
    let body: f64 = (lo..hi).map(|i| t.weights[i] * g[i]).sum();
    let slope = |a: usize, b: usize| (g[b] / g[a]).ln() / (u[b] / u[a]).ln();
    let mut tails = 0.0;
    let k = ORDER_TAB;
    if g[lo] != 0.0 && g[lo + k] != 0.0 {
        let e = slope(lo, lo + k);
        let a = u[lo] - 0.5 * t.weights[lo];
        tails += g[lo] * (a / u[lo]).powf(e) * a / (e + 1.0);
    }
    if g[hi - 1] != 0.0 && g[hi - 1 - k] != 0.0 {
        let e = slope(hi - 1 - k, hi - 1);
        let b = u[hi - 1] + 0.5 * t.weights[hi - 1];
        tails += -g[hi - 1] * (b / u[hi - 1]).powf(e) * b / (e + 1.0);
    }
    body + tails
}

const ORDER_TAB: usize = 16;
