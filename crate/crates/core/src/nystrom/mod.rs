//! Reference spectra: Galerkin discretisations of the three kernels (hat functions
//! for the covariance and noise kernels, cell functions for the inverse kernel) and
//! the classical Gauss–Legendre Nyström matrix for the covariance kernel.

pub mod eig;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use eig::{symmetric_eig, top_eigenpairs, BidiagonalCholesky, Eigen, Lu, Mat};

use crate::asymptotics::leading_oscillation;
use crate::error::{Error, Result};
use crate::operators::{cell_pair_moments, fbm_cov, KernelFamily, KernelSpec};
use crate::quad::{gauss, Gauss};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Global Gauss–Legendre Nyström (covariance kernel only).
    GaussLegendre,
    /// Piecewise-linear Galerkin on a uniform mesh.
    HatGalerkin,
    /// Piecewise-constant Galerkin on a uniform mesh.
    CellGalerkin,
}

/// Sample nodes with lumped quadrature weights (Σw = 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub scheme: Scheme,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymmetricSpectrum {
    pub kernel: KernelSpec,
    pub scheme: Scheme,
    pub n_grid: usize,
    /// Operator eigenvalues λ_1, λ_2, … in the natural order (decreasing for compact
    /// operators, increasing for the noise operator with H < 1/2).
    pub eigenvalues: Vec<f64>,
    /// Every eigenvalue of the discrete problem (descending; reciprocals not taken).
    pub discrete_eigenvalues: Vec<f64>,
    pub grid: Grid,
    /// Normalised eigenfunctions sampled at the grid nodes.
    pub vectors: Vec<Vec<f64>>,
    pub n_reliable: usize,
    pub reliability_checked: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceConfig {
    pub n_grid: usize,
    pub n_max: usize,
    pub scheme: Option<Scheme>,
    /// Repeat at n_grid/2 and fail if fewer than n_max eigenvalues agree to 0.1%.
    pub check_reliability: bool,
}

impl ReferenceConfig {
    pub fn new(n_grid: usize, n_max: usize) -> ReferenceConfig {
        ReferenceConfig { n_grid, n_max, scheme: None, check_reliability: true }
    }

    pub fn unchecked(mut self) -> ReferenceConfig {
        self.check_reliability = false;
        self
    }

    pub fn scheme(mut self, s: Scheme) -> ReferenceConfig {
        self.scheme = Some(s);
        self
    }
}

pub fn default_scheme(k: &KernelSpec) -> Scheme {
    match k.family {
        KernelFamily::FbnInverse => Scheme::CellGalerkin,
        _ => Scheme::HatGalerkin,
    }
}

/// First `n_max` eigenpairs on a grid of `n_grid` cells, gated on two-grid agreement.
pub fn reference_spectrum(k: &KernelSpec, n_grid: usize, n_max: usize) -> Result<SymmetricSpectrum> {
    reference_spectrum_with(k, ReferenceConfig::new(n_grid, n_max))
}

pub fn reference_spectrum_with(k: &KernelSpec, cfg: ReferenceConfig) -> Result<SymmetricSpectrum> {
    if cfg.n_max == 0 {
        return Err(Error::Config("n_max must be at least 1".into()));
    }
    if cfg.n_grid < 8 * cfg.n_max {
        return Err(Error::Config(format!("grid {} below 8·n_max = {}", cfg.n_grid, 8 * cfg.n_max)));
    }
    let scheme = cfg.scheme.unwrap_or_else(|| default_scheme(k));
    let mut spec = solve(k, scheme, cfg.n_grid, cfg.n_max)?;
    if cfg.check_reliability {
        let coarse = solve_values(k, scheme, cfg.n_grid / 2, cfg.n_max)?;
        let n_ok = spec
            .eigenvalues
            .iter()
            .zip(&coarse)
            .take_while(|(a, b)| ((*a - *b) / *a).abs() < 1e-3)
            .count();
        spec.n_reliable = n_ok;
        spec.reliability_checked = true;
        if n_ok < cfg.n_max {
            return Err(Error::Resolution { requested: cfg.n_max, reliable: n_ok });
        }
    }
    Ok(spec)
}

fn solve_values(k: &KernelSpec, scheme: Scheme, n: usize, n_max: usize) -> Result<Vec<f64>> {
    let d = discretize(k, scheme, n)?;
    let vals = eig::tridiagonalize(d.matrix).eigenvalues()?;
    Ok(natural_values(&vals, d.invert, d.negated, n_max))
}

fn natural_values(desc: &[f64], invert: bool, negated: bool, n_max: usize) -> Vec<f64> {
    desc.iter()
        .take(n_max)
        .map(|&v| if invert { 1.0 / v } else if negated { -v } else { v })
        .collect()
}

/// Symmetric standard-form matrix whose top eigenpairs give the operator spectrum.
struct Discrete {
    matrix: Mat,
    /// maps standard eigenvector y to nodal values
    to_nodes: Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    grid: Grid,
    /// eigenvalues are reciprocals (inverse kernel)
    invert: bool,
    /// matrix was negated to bring the smallest eigenvalues to the top
    negated: bool,
}

fn discretize(k: &KernelSpec, scheme: Scheme, n: usize) -> Result<Discrete> {
    let h = k.p.h;
    match (k.family, scheme) {
        (KernelFamily::FbmCovariance, Scheme::GaussLegendre) => Ok(gl_nystrom(k, n)),
        (KernelFamily::FbmCovariance, Scheme::HatGalerkin) => fbm_hat(h, n),
        (KernelFamily::FbnDirect, Scheme::HatGalerkin) => fbn_hat(h, n),
        (KernelFamily::FbnInverse, Scheme::HatGalerkin) => fbn_hat(h, n),
        (KernelFamily::FbnInverse, Scheme::CellGalerkin) => Ok(kappa_cells(k, n)),
        (f, s) => Err(Error::Config(format!("scheme {s:?} not available for kernel {f:?}"))),
    }
}

fn solve(k: &KernelSpec, scheme: Scheme, n: usize, n_max: usize) -> Result<SymmetricSpectrum> {
    let d = discretize(k, scheme, n)?;
    let Discrete { matrix, to_nodes, grid, invert, negated } = d;
    let e = top_eigenpairs(matrix, n_max)?;
    let eigenvalues = natural_values(&e.values, invert, negated, n_max);
    let discrete_eigenvalues = if negated { e.values.iter().rev().map(|v| -v).collect() } else { e.values.clone() };
    let mut vectors: Vec<Vec<f64>> = e.vectors.iter().map(|y| to_nodes(y)).collect();
    for (i, v) in vectors.iter_mut().enumerate() {
        fix_sign(&k.p, i + 1, &grid, v);
    }
    Ok(SymmetricSpectrum {
        kernel: *k,
        scheme,
        n_grid: n,
        eigenvalues,
        discrete_eigenvalues,
        grid,
        vectors,
        n_reliable: n_max,
        reliability_checked: false,
    })
}

/// Positive overlap with the leading asymptotic oscillation; if the overlap is
/// weak, the largest-magnitude sample is made positive.
fn fix_sign(p: &crate::specfun::HurstParams, n: usize, grid: &Grid, v: &mut [f64]) {
    let overlap: f64 = grid
        .nodes
        .iter()
        .zip(&grid.weights)
        .zip(v.iter())
        .map(|((&x, &w), &f)| w * f * leading_oscillation(p, n, x))
        .sum();
    let flip = if overlap.abs() > 0.3 {
        overlap < 0.0
    } else {
        let m = v.iter().fold(0.0f64, |m, &x| if x.abs() > m.abs() { x } else { m });
        m < 0.0
    };
    if flip {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn uniform_nodes(n: usize) -> Vec<f64> {
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

fn trapezoid_weights(n: usize) -> Vec<f64> {
    let h = 1.0 / n as f64;
    (0..=n).map(|i| if i == 0 || i == n { h / 2.0 } else { h }).collect()
}

/// Moments G(m) for m = −n..=n, stored at index m + n.
fn moment_table(n: usize, p: f64) -> Vec<[f64; 4]> {
    (-(n as i64)..=n as i64).into_par_iter().map(|m| cell_pair_moments(m, p)).collect()
}

/// D_ij = ∫∫ψ_i(s)ψ_j(t)|s−t|^p for hats at mesh nodes `first..=n`.
fn hat_power_matrix(n: usize, p: f64, first: usize, g: &[[f64; 4]]) -> Mat {
    let h = 1.0 / n as f64;
    let scale = h.powf(p + 2.0);
    let size = n + 1 - first;
    let ni = n as i64;
    let term = |ci: i64, cj: i64, kind: u8| -> f64 {
        if ci < 0 || cj < 0 || ci >= ni || cj >= ni {
            return 0.0;
        }
        let [g00, g10, g01, g11] = g[(ci - cj + ni) as usize];
        match kind {
            0 => g11,
            1 => g10 - g11,
            2 => g01 - g11,
            _ => g00 - g10 - g01 + g11,
        }
    };
    let rows: Vec<Vec<f64>> = (0..size)
        .into_par_iter()
        .map(|a| {
            let i = (a + first) as i64;
            (0..size)
                .map(|b| {
                    let j = (b + first) as i64;
                    scale * (term(i - 1, j - 1, 0) + term(i - 1, j, 1) + term(i, j - 1, 2) + term(i, j, 3))
                })
                .collect()
        })
        .collect();
    Mat { n: size, data: rows.concat() }
}

/// Tridiagonal hat mass matrix for nodes `first..=n`.
fn hat_mass(n: usize, first: usize) -> (Vec<f64>, Vec<f64>) {
    let h = 1.0 / n as f64;
    let diag = (first..=n).map(|i| if i == 0 || i == n { h / 3.0 } else { 2.0 * h / 3.0 }).collect();
    let off = vec![h / 6.0; n - first];
    (diag, off)
}

fn galerkin(kmat: Mat, n: usize, first: usize, negate: bool) -> Result<Discrete> {
    let (md, mo) = hat_mass(n, first);
    let chol = BidiagonalCholesky::new(&md, &mo)?;
    let mut c = chol.congruence(&kmat);
    if negate {
        c.data.iter_mut().for_each(|x| *x = -*x);
    }
    let to_nodes = move |y: &[f64]| {
        let mut v = vec![0.0; first];
        v.extend(chol.back_solve(y));
        v
    };
    Ok(Discrete {
        matrix: c,
        to_nodes: Box::new(to_nodes),
        grid: Grid { nodes: uniform_nodes(n), weights: trapezoid_weights(n), scheme: Scheme::HatGalerkin },
        invert: false,
        negated: negate,
    })
}

/// ∫ψ_i t^p dt for the hat at node i.
fn hat_power_moment(n: usize, i: usize, p: f64, g8: &Gauss) -> f64 {
    let h = 1.0 / n as f64;
    let x = |k: usize| k as f64 * h;
    let mut acc = 0.0;
    // rising part on cell i−1, falling part on cell i
    for (c, up) in [(i.wrapping_sub(1), true), (i, false)] {
        if c >= n {
            continue;
        }
        let (a, b) = (x(c), x(c + 1));
        if c < 8 {
            let m1 = (b.powf(p + 2.0) - a.powf(p + 2.0)) / (p + 2.0);
            let m0 = (b.powf(p + 1.0) - a.powf(p + 1.0)) / (p + 1.0);
            acc += if up { (m1 - a * m0) / h } else { (b * m0 - m1) / h };
        } else {
            acc += g8.integrate(a, b, |t| t.powf(p) * if up { (t - a) / h } else { (b - t) / h });
        }
    }
    acc
}

fn fbm_hat(hurst: f64, n: usize) -> Result<Discrete> {
    let p = 2.0 * hurst;
    let g = moment_table(n, p);
    let d = hat_power_matrix(n, p, 1, &g);
    let h = 1.0 / n as f64;
    let g8 = gauss(8);
    let a: Vec<f64> = (1..=n).map(|i| hat_power_moment(n, i, p, g8)).collect();
    let m: Vec<f64> = (1..=n).map(|i| if i == n { h / 2.0 } else { h }).collect();
    let mut k = d;
    for i in 0..n {
        for j in 0..n {
            k[(i, j)] = 0.5 * (a[i] * m[j] + m[i] * a[j] - k[(i, j)]);
        }
    }
    galerkin(k, n, 1, false)
}

/// −½∫∫(Dψ_i)(s)(Dψ_j)(t)|s−t|^{2H}, D the derivative with boundary deltas
/// (+δ₀ for the first hat, −δ₁ for the last).
fn fbn_hat(hurst: f64, n: usize) -> Result<Discrete> {
    let p = 2.0 * hurst;
    let g = moment_table(n, p);
    let h = 1.0 / n as f64;
    let ni = n as i64;
    let scale = h.powf(p + 2.0) / (h * h);
    let cc = |c: i64, d: i64| -> f64 {
        if c < 0 || d < 0 || c >= ni || d >= ni {
            0.0
        } else {
            g[(c - d + ni) as usize][0]
        }
    };
    let size = n + 1;
    let mut k = Mat::zeros(size);
    for i in 0..size {
        let ii = i as i64;
        for j in 0..size {
            let jj = j as i64;
            k[(i, j)] = scale * (cc(ii - 1, jj - 1) - cc(ii - 1, jj) - cc(ii, jj - 1) + cc(ii, jj));
        }
    }
    let xs = uniform_nodes(n);
    let cell = |pt: f64, c: usize| {
        let f = |x: f64| (x - pt).signum() * (x - pt).abs().powf(p + 1.0) / (p + 1.0);
        f(xs[c + 1]) - f(xs[c])
    };
    let slope_int = |pt: f64, i: usize| {
        let mut s = 0.0;
        if i > 0 {
            s += cell(pt, i - 1) / h;
        }
        if i < n {
            s -= cell(pt, i) / h;
        }
        s
    };
    let e0: Vec<f64> = (0..size).map(|i| slope_int(0.0, i)).collect();
    let e1: Vec<f64> = (0..size).map(|i| slope_int(1.0, i)).collect();
    for i in 0..size {
        k[(0, i)] += e0[i];
        k[(i, 0)] += e0[i];
        k[(n, i)] -= e1[i];
        k[(i, n)] -= e1[i];
    }
    k[(0, n)] -= 1.0;
    k[(n, 0)] -= 1.0;
    k.data.iter_mut().for_each(|x| *x *= -0.5);
    galerkin(k, n, 0, hurst < 0.5)
}

fn gl_nystrom(k: &KernelSpec, n: usize) -> Discrete {
    let g = Gauss::new(n);
    let nodes: Vec<f64> = g.x.iter().map(|x| 0.5 * (x + 1.0)).collect();
    let weights: Vec<f64> = g.w.iter().map(|w| 0.5 * w).collect();
    let sw: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let p = k.p;
    let m = Mat::from_fn(n, |i, j| sw[i] * fbm_cov(nodes[i], nodes[j], &p).unwrap() * sw[j]);
    let sw2 = sw.clone();
    Discrete {
        matrix: m,
        to_nodes: Box::new(move |y: &[f64]| y.iter().zip(&sw2).map(|(a, b)| a / b).collect()),
        grid: Grid { nodes, weights, scheme: Scheme::GaussLegendre },
        invert: false,
        negated: false,
    }
}

/// ∫_{lo}^{hi} (r−u)^a u^b du for 0 ≤ lo < hi ≤ r, a ∈ (−1,0), b ≥ 0.
fn weighted_segment(r: f64, lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    let len = hi - lo;
    if len <= 0.0 {
        return 0.0;
    }
    let near_r = r - hi < len;
    let at_zero = lo == 0.0;
    if at_zero && near_r {
        let mid = 0.5 * (lo + hi);
        return weighted_segment(r, lo, mid, a, b) + weighted_segment(r, mid, hi, a, b);
    }
    let g = gauss(12);
    if at_zero {
        // u = hi·t^{1/(1+b)}
        let e = 1.0 / (1.0 + b);
        return hi.powf(1.0 + b) * e * g.integrate(0.0, 1.0, |t| (r - hi * t.powf(e)).powf(a));
    }
    if near_r {
        // σ = r − u = τ^{1/(1+a)}
        let e = 1.0 / (1.0 + a);
        let (t0, t1) = ((r - hi).powf(1.0 + a), (r - lo).powf(1.0 + a));
        return e * g.integrate(t0, t1, |t| (r - t.powf(e)).powf(b));
    }
    let rule = if r - hi > 4.0 * len { gauss(4) } else { g };
    rule.integrate(lo, hi, |u| (r - u).powf(a) * u.powf(b))
}

/// Cell Galerkin for κ through its factorisation κ = β Sᵀ S, with
/// (S f)(r) = r^{(1−α)/2}∫₀^r (r−u)^{(α−3)/2} u^{(α−1)/2} f(u) du.
fn kappa_cells(k: &KernelSpec, n: usize) -> Discrete {
    let alpha = k.p.alpha;
    let (a, b) = ((alpha - 3.0) / 2.0, (alpha - 1.0) / 2.0);
    let h = 1.0 / n as f64;
    let grade = (2.0 / (alpha - 1.0)).min(6.0);
    let rq = gauss(10);
    let beta = k.kappa_beta;
    // contributions of r-cell k to the Gram matrix, computed independently
    let parts: Vec<(usize, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|kc| {
            let size = kc + 1;
            let mut acc = vec![0.0; size * size];
            let xk = kc as f64 * h;
            for (s, ws) in rq.on(0.0, 1.0) {
                let r = xk + h * s.powf(grade);
                let w = ws * h * grade * s.powf(grade - 1.0) * beta * r.powf(1.0 - alpha);
                let t: Vec<f64> = (0..size)
                    .map(|j| weighted_segment(r, j as f64 * h, ((j + 1) as f64 * h).min(r), a, b))
                    .collect();
                for i in 0..size {
                    let wi = w * t[i];
                    for j in 0..=i {
                        acc[i * size + j] += wi * t[j];
                    }
                }
            }
            (size, acc)
        })
        .collect();
    let mut m = Mat::zeros(n);
    for (size, acc) in parts {
        for i in 0..size {
            for j in 0..=i {
                m[(i, j)] += acc[i * size + j] / h;
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            m[(j, i)] = m[(i, j)];
        }
    }
    let nodes: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
    let sh = h.sqrt();
    Discrete {
        matrix: m,
        to_nodes: Box::new(move |y: &[f64]| y.iter().map(|v| v / sh).collect()),
        grid: Grid { nodes, weights: vec![h; n], scheme: Scheme::CellGalerkin },
        invert: true,
        negated: false,
    }
}

impl SymmetricSpectrum {
    /// Sum of all eigenvalues of the discrete problem.
    pub fn trace(&self) -> f64 {
        self.discrete_eigenvalues.iter().sum()
    }

    fn check_index(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.vectors.len() || n > self.n_reliable {
            return Err(Error::Index { index: n, available: self.vectors.len().min(self.n_reliable) });
        }
        Ok(())
    }

    /// L² inner product ⟨φ_m, φ_n⟩ in the discretisation's own inner product.
    pub fn gram(&self, m: usize, n: usize) -> Result<f64> {
        self.check_index(m)?;
        self.check_index(n)?;
        let (u, v) = (&self.vectors[m - 1], &self.vectors[n - 1]);
        Ok(match self.scheme {
            Scheme::HatGalerkin => {
                let (d, o) = hat_mass(self.n_grid, 0);
                let mut s = 0.0;
                for i in 0..u.len() {
                    s += d[i] * u[i] * v[i];
                    if i + 1 < u.len() {
                        s += o[i] * (u[i] * v[i + 1] + u[i + 1] * v[i]);
                    }
                }
                s
            }
            _ => self.grid.weights.iter().zip(u.iter().zip(v)).map(|(w, (a, b))| w * a * b).sum(),
        })
    }

    /// ∫₀¹ φ_n.
    pub fn average(&self, n: usize) -> Result<f64> {
        self.check_index(n)?;
        Ok(self.grid.weights.iter().zip(&self.vectors[n - 1]).map(|(w, f)| w * f).sum())
    }
}

/// φ_n(x): linear interpolation of the Galerkin function (hats), of the cell
/// midpoint values (cells), or the Nyström natural interpolant (Gauss–Legendre).
pub fn eigenfunction_at(spec: &SymmetricSpectrum, n: usize, x: f64) -> Result<f64> {
    spec.check_index(n)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [0,1]")));
    }
    let v = &spec.vectors[n - 1];
    let nodes = &spec.grid.nodes;
    Ok(match spec.scheme {
        Scheme::GaussLegendre => {
            let lam = spec.eigenvalues[n - 1];
            let p = spec.kernel.p;
            nodes
                .iter()
                .zip(&spec.grid.weights)
                .zip(v)
                .map(|((&t, &w), &f)| w * fbm_cov(x, t, &p).unwrap() * f)
                .sum::<f64>()
                / lam
        }
        _ => {
            if x <= nodes[0] {
                v[0]
            } else if x >= nodes[nodes.len() - 1] {
                v[v.len() - 1]
            } else {
                let i = nodes.partition_point(|&t| t <= x) - 1;
                let th = (x - nodes[i]) / (nodes[i + 1] - nodes[i]);
                v[i] + th * (v[i + 1] - v[i])
            }
        }
    })
}
