//! Kernels of the fBm covariance, fBn covariance (H > 1/2) and inverse fBn (H < 1/2)
//! operators, grid application, and the exact cell-pair moments used by the
//! Galerkin reference.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quad::{gauss, Rule};
use crate::specfun::{beta_fn, HurstParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelFamily {
    FbmCovariance,
    /// H(2H−1)|s−t|^{2H−2}, H > 1/2.
    FbnDirect,
    /// κ(u,v), kernel of the inverse of the fBn operator, H < 1/2.
    FbnInverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub p: HurstParams,
    /// β_α for the inverse kernel, 0 otherwise.
    pub kappa_beta: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, h: f64) -> Result<KernelSpec> {
        let p = match family {
            KernelFamily::FbmCovariance => HurstParams::fbm(h)?,
            KernelFamily::FbnDirect => {
                if !(h > 0.5 && h < 1.0) {
                    return domain(format!("direct noise kernel needs 1/2 < H < 1, got {h}"));
                }
                HurstParams::fbn(h)?
            }
            KernelFamily::FbnInverse => {
                if !(h > 0.0 && h < 0.5) {
                    return domain(format!("inverse kernel needs 0 < H < 1/2, got {h}"));
                }
                HurstParams::fbn(h)?
            }
        };
        let kappa_beta = if family == KernelFamily::FbnInverse { kappa_beta(p.alpha)? } else { 0.0 };
        Ok(KernelSpec { family, p, kappa_beta })
    }

    /// fBn kernel for either side of H = 1/2.
    pub fn fbn(h: f64) -> Result<KernelSpec> {
        if h > 0.5 {
            KernelSpec::new(KernelFamily::FbnDirect, h)
        } else {
            KernelSpec::new(KernelFamily::FbnInverse, h)
        }
    }

    pub fn fbm(h: f64) -> Result<KernelSpec> {
        KernelSpec::new(KernelFamily::FbmCovariance, h)
    }

    pub fn eval(&self, s: f64, t: f64) -> Result<f64> {
        match self.family {
            KernelFamily::FbmCovariance => fbm_cov(s, t, &self.p),
            KernelFamily::FbnDirect => fbn_kernel(s, t, &self.p),
            KernelFamily::FbnInverse => inverse_kernel_kappa(s, t, &self.p),
        }
    }
}

fn unit(x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return domain(format!("point {x} outside [0,1]"));
    }
    Ok(())
}

/// R(s,t) = ½(t^{2H}+s^{2H}−|t−s|^{2H}).
pub fn fbm_cov(s: f64, t: f64, p: &HurstParams) -> Result<f64> {
    unit(s)?;
    unit(t)?;
    let e = 2.0 * p.h;
    Ok(0.5 * (t.powf(e) + s.powf(e) - (t - s).abs().powf(e)))
}

/// H(2H−1)|s−t|^{2H−2}.
pub fn fbn_kernel(s: f64, t: f64, p: &HurstParams) -> Result<f64> {
    if p.h <= 0.5 {
        return domain("pointwise noise kernel needs H > 1/2");
    }
    unit(s)?;
    unit(t)?;
    if s == t {
        return Err(Error::Singular);
    }
    Ok(p.c_alpha * (s - t).abs().powf(2.0 * p.h - 2.0))
}

/// β_α = sin((α−1)π/2)/π · 1/(2−α) · B((α+1)/2, (α−1)/2)^{−1}.
pub fn kappa_beta(alpha: f64) -> Result<f64> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return domain(format!("kappa needs 1 < alpha < 2, got {alpha}"));
    }
    Ok(((alpha - 1.0) * PI / 2.0).sin() / PI / (2.0 - alpha)
        / beta_fn((alpha + 1.0) / 2.0, (alpha - 1.0) / 2.0)?)
}

/// κ(u,v) = β_α(uv)^{(α−1)/2} ∫_{u∨v}^1 r^{1−α}(r−u)^{(α−3)/2}(r−v)^{(α−3)/2} dr.
pub fn inverse_kernel_kappa(u: f64, v: f64, p: &HurstParams) -> Result<f64> {
    if p.h >= 0.5 {
        return domain("inverse kernel needs H < 1/2");
    }
    if !(u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0) {
        return domain(format!("kappa needs u, v in (0,1), got {u}, {v}"));
    }
    if u == v {
        return Err(Error::Singular);
    }
    let a = p.alpha;
    Ok(kappa_beta(a)? * (u * v).powf((a - 1.0) / 2.0) * kappa_inner(u.max(v), u.min(v), a))
}

/// ∫_m^1 r^{1−α}(r−m)^e(r−l)^e dr with e = (α−3)/2, via r = m + w^{2/(α−1)}.
fn kappa_inner(m: f64, l: f64, alpha: f64) -> f64 {
    let e = (alpha - 3.0) / 2.0;
    let g = 2.0 / (alpha - 1.0);
    let wmax = (1.0 - m).powf(1.0 / g);
    let wd = (m - l).powf(1.0 / g);
    let rule = gauss(16);
    let f = |w: f64| {
        let d = w.powf(g);
        let r = m + d;
        g * r.powf(1.0 - alpha) * (d + m - l).powf(e)
    };
    // geometric panels in w above the scale where (r−l)^e turns over
    let mut edges = vec![0.0];
    let mut x = (0.25 * wd).min(wmax);
    edges.push(x);
    while x < wmax {
        x = (2.0 * x).min(wmax);
        edges.push(x);
    }
    edges.windows(2).map(|s| rule.integrate(s[0], s[1], f)).sum()
}

/// Values of a function on a quadrature grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>, values: Vec<f64>) -> Result<GridFunction> {
        if nodes.len() != weights.len() || nodes.len() != values.len() {
            return Err(Error::GridMismatch(format!(
                "{} nodes, {} weights, {} values",
                nodes.len(),
                weights.len(),
                values.len()
            )));
        }
        Ok(GridFunction { nodes, weights, values })
    }

    /// Gauss–Legendre grid on [0,1] with values f(t).
    pub fn gauss_legendre(n: usize, f: impl Fn(f64) -> f64) -> GridFunction {
        let r = Rule::composite(0.0, 1.0, n.div_ceil(16), 16.min(n));
        let values = r.nodes.iter().map(|&t| f(t)).collect();
        GridFunction { nodes: r.nodes, weights: r.weights, values }
    }

    /// Midpoint grid on [0,1] with values f(t).
    pub fn midpoint(n: usize, f: impl Fn(f64) -> f64) -> GridFunction {
        let h = 1.0 / n as f64;
        let nodes: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
        let values = nodes.iter().map(|&t| f(t)).collect();
        GridFunction { nodes, weights: vec![h; n], values }
    }

    pub fn with_values(&self, values: Vec<f64>) -> GridFunction {
        GridFunction { nodes: self.nodes.clone(), weights: self.weights.clone(), values }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integral(&self) -> f64 {
        self.weights.iter().zip(&self.values).map(|(w, v)| w * v).sum()
    }

    pub fn dot(&self, other: &GridFunction) -> f64 {
        self.weights
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Cell edges: midpoints between nodes, closed by 0 and 1.
    pub fn cell_edges(&self) -> Vec<f64> {
        let mut e = Vec::with_capacity(self.len() + 1);
        e.push(0.0);
        for w in self.nodes.windows(2) {
            e.push(0.5 * (w[0] + w[1]));
        }
        e.push(1.0);
        e
    }

    fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::GridMismatch("empty grid".into()));
        }
        if self.weights.len() != self.len() || self.values.len() != self.len() {
            return Err(Error::GridMismatch("length mismatch".into()));
        }
        let s: f64 = self.weights.iter().sum();
        if self.weights.iter().any(|&w| !(w > 0.0)) || (s - 1.0).abs() > 1e-10 {
            return Err(Error::GridMismatch(format!("weights must be positive and sum to 1 (sum {s})")));
        }
        if self.nodes.windows(2).any(|w| w[1] <= w[0]) || self.nodes[0] < 0.0 || self.nodes[self.len() - 1] > 1.0 {
            return Err(Error::GridMismatch("nodes must increase inside [0,1]".into()));
        }
        Ok(())
    }
}

/// (Af)(t_i) = Σ_j w_j k(t_i,t_j) f(t_j); singular kernels use exact (noise) or graded
/// (inverse) integrals over the cell around each node instead of point values.
pub fn apply_operator(f: &GridFunction, k: &KernelSpec) -> Result<GridFunction> {
    f.validate()?;
    let n = f.len();
    let p = &k.p;
    let out: Vec<f64> = match k.family {
        KernelFamily::FbmCovariance => (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| f.weights[j] * fbm_cov(f.nodes[i], f.nodes[j], p).unwrap() * f.values[j])
                    .sum()
            })
            .collect(),
        KernelFamily::FbnDirect => {
            let edges = f.cell_edges();
            let q = 2.0 * p.h - 1.0;
            // antiderivative of H(2H−1)|t−s|^{2H−2} in s
            let prim = |t: f64, s: f64| p.h * (s - t).signum() * (s - t).abs().powf(q);
            (0..n)
                .map(|i| {
                    let t = f.nodes[i];
                    (0..n).map(|j| (prim(t, edges[j + 1]) - prim(t, edges[j])) * f.values[j]).sum()
                })
                .collect()
        }
        KernelFamily::FbnInverse => {
            let edges = f.cell_edges();
            let g = gauss(8);
            let a = p.alpha;
            (0..n)
                .map(|i| {
                    let t = f.nodes[i];
                    let mut acc = 0.0;
                    for j in 0..n {
                        let cell = if j == i {
                            // |u−v|^{α−2} singularity: d = x^{1/(α−1)} makes each half smooth
                            let e = 1.0 / (a - 1.0);
                            let mut c = 0.0;
                            for (lo, sgn) in [(t - edges[j], -1.0), (edges[j + 1] - t, 1.0)] {
                                let top = lo.powf(a - 1.0);
                                c += g.integrate(0.0, top, |x| {
                                    let d = x.powf(e);
                                    let v = (t + sgn * d).clamp(1e-300, 1.0 - 1e-16);
                                    e * x.powf(e - 1.0) * inverse_kernel_kappa(t, v, p).unwrap_or(0.0)
                                });
                            }
                            c / f.weights[j]
                        } else {
                            inverse_kernel_kappa(t, f.nodes[j], p)?
                        };
                        acc += f.weights[j] * cell * f.values[j];
                    }
                    Ok(acc)
                })
                .collect::<Result<Vec<f64>>>()?
        }
    };
    Ok(f.with_values(out))
}

/// Exact cell-pair moments of |s−t|^p. For cells offset by m (unit width, local
/// coordinates σ, τ ∈ [0,1]) returns [∫∫|m+σ−τ|^p, ∫∫..σ, ∫∫..τ, ∫∫..στ].
pub fn cell_pair_moments(m: i64, p: f64) -> [f64; 4] {
    // weights of d = σ − τ on [0,1] and [−1,0] for 1, σ, τ, στ
    const POS: [[f64; 4]; 4] = [
        [1.0, -1.0, 0.0, 0.0],
        [0.5, 0.0, -0.5, 0.0],
        [0.5, -1.0, 0.5, 0.0],
        [1.0 / 3.0, -0.5, 0.0, 1.0 / 6.0],
    ];
    const NEG: [[f64; 4]; 4] = [
        [1.0, 1.0, 0.0, 0.0],
        [0.5, 1.0, 0.5, 0.0],
        [0.5, 0.0, -0.5, 0.0],
        [1.0 / 3.0, 0.5, 0.0, -1.0 / 6.0],
    ];
    let g = gauss(20);
    let mf = m as f64;
    let mut out = [0.0; 4];
    for (idx, o) in out.iter_mut().enumerate() {
        for (w, d0, d1) in [(&NEG[idx], -1.0, 0.0), (&POS[idx], 0.0, 1.0)] {
            let (e0, e1) = (mf + d0, mf + d1);
            if e0 >= 0.5 || e1 <= -0.5 {
                *o += g.integrate(d0, d1, |d| {
                    (mf + d).abs().powf(p) * (w[0] + d * (w[1] + d * (w[2] + d * w[3])))
                });
            } else {
                let c = shift_poly(w, mf);
                for (k, ck) in c.iter().enumerate() {
                    let prim = |x: f64| {
                        if x == 0.0 {
                            0.0
                        } else {
                            x.signum().powi(k as i32 + 1) * x.abs().powf(p + k as f64 + 1.0) / (p + k as f64 + 1.0)
                        }
                    };
                    *o += ck * (prim(e1) - prim(e0));
                }
            }
        }
    }
    out
}

/// Coefficients in e of q(e − m).
fn shift_poly(c: &[f64; 4], m: f64) -> [f64; 4] {
    const BINOM: [[f64; 4]; 4] = [[1.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0], [1.0, 2.0, 1.0, 0.0], [1.0, 3.0, 3.0, 1.0]];
    let mut out = [0.0; 4];
    for k in 0..4 {
        for j in 0..=k {
            out[j] += c[k] * BINOM[k][j] * (-m).powi((k - j) as i32);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn covariance_values() {
        let p = HurstParams::fbm(0.5).unwrap();
        assert!((fbm_cov(0.3, 0.7, &p).unwrap() - 0.3).abs() < 1e-15);
        for h in [0.2, 0.75, 1.0] {
            let p = HurstParams::fbm(h).unwrap();
            assert!((fbm_cov(1.0, 1.0, &p).unwrap() - 1.0).abs() < 1e-15);
            assert_eq!(fbm_cov(0.0, 0.4, &p).unwrap(), 0.0);
        }
        assert!(fbm_cov(1.2, 0.1, &p).is_err());
    }

    #[test]
    fn noise_kernel_values() {
        let p = HurstParams::fbn(0.75).unwrap();
        assert!((fbn_kernel(0.0, 1.0, &p).unwrap() - 0.375).abs() < 1e-15);
        assert!((fbn_kernel(0.5, 0.75, &p).unwrap() - 0.75).abs() < 1e-14);
        assert_eq!(fbn_kernel(0.3, 0.3, &p), Err(Error::Singular));
        let p = HurstParams::fbn(0.5 + 1e-9).unwrap();
        assert!(fbn_kernel(0.1, 0.6, &p).unwrap() < 1e-8);
        assert!(fbn_kernel(0.1, 0.6, &HurstParams::fbn(0.3).unwrap()).is_err());
    }

    /// Adaptive Simpson oracle for the defining integral of κ (endpoint singularity
    /// removed by r = m + w² and then bisection on the remaining near-singularity).
    fn kappa_oracle(u: f64, v: f64, alpha: f64) -> f64 {
        let (m, l) = (u.max(v), u.min(v));
        let e = (alpha - 3.0) / 2.0;
        let f = |w: f64| {
            let r = m + w * w;
            if w == 0.0 {
                return 0.0;
            }
            2.0 * w * r.powf(1.0 - alpha) * (w * w).powf(e) * (r - l).powf(e)
        };
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        // w^{2e+1} is integrable but unbounded at 0 for e < −1/2: peel geometric pieces
        let top = (1.0 - m).sqrt();
        let mut acc = 0.0;
        let mut b = top;
        for _ in 0..60 {
            let a = b / 2.0;
            let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
            acc += simpson(&f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), 1e-13, 40);
            b = a;
        }
        kappa_beta(alpha).unwrap() * (u * v).powf((alpha - 1.0) / 2.0) * acc
    }

    #[test]
    fn kappa_matches_oracle_and_is_positive() {
        let p = HurstParams::fbn(0.25).unwrap();
        for i in 0..20 {
            for j in 0..20 {
                if i == j {
                    continue;
                }
                let (u, v) = ((i as f64 + 0.5) / 20.0, (j as f64 + 0.5) / 20.0);
                let k = inverse_kernel_kappa(u, v, &p).unwrap();
                assert!(k > 0.0);
                if (i + j) % 7 == 0 {
                    let o = kappa_oracle(u, v, p.alpha);
                    assert!((k - o).abs() < 1e-8 * o, "{u} {v}: {k} vs {o}");
                }
            }
        }
        assert!((inverse_kernel_kappa(0.2, 0.7, &p).unwrap() - inverse_kernel_kappa(0.7, 0.2, &p).unwrap()).abs() < 1e-15);
    }

    /// Nodes on [a, b] refined geometrically toward the point c (if inside or at an end).
    fn graded(g: &crate::quad::Gauss, a: f64, b: f64, c: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let c = c.clamp(a, b);
        for (lo, hi, toward_lo) in [(a, c, false), (c, b, true)] {
            let len = hi - lo;
            if len <= 0.0 {
                continue;
            }
            let mut d = len;
            for _ in 0..70 {
                let (x0, x1) = if toward_lo { (lo + d / 2.0, lo + d) } else { (hi - d, hi - d / 2.0) };
                out.extend(g.on(x0, x1));
                d /= 2.0;
            }
        }
        out
    }

    #[test]
    fn kappa_row_integral_bound() {
        for h in [0.15, 0.25, 0.4] {
            let p = HurstParams::fbn(h).unwrap();
            let a = p.alpha;
            let bound = ((a - 1.0) * PI / 2.0).sin() / PI * 2f64.powf(2.0 - a) / ((a - 1.0) * (2.0 - a));
            for v in [0.05, 0.3, 0.5, 0.8, 0.97] {
                let g = gauss(12);
                let mut row = 0.0;
                for (lo, hi) in [(0.0, v), (v, 1.0)] {
                    let mid = 0.5 * (lo + hi);
                    for (a, b) in [(lo, mid), (mid, hi)] {
                        for (u, w) in graded(g, a, b, if a == lo { lo } else { hi }) {
                            row += w * inverse_kernel_kappa(u.clamp(1e-300, 1.0 - 1e-16), v, &p).unwrap_or(0.0);
                        }
                    }
                }
                assert!(row > 0.0 && row <= bound * (1.0 + 1e-6), "H={h} v={v}: {row} > {bound}");
            }
        }
    }

    #[test]
    fn apply_examples() {
        let k = KernelSpec::fbm(0.5).unwrap();
        let f = GridFunction::gauss_legendre(496, |_| 1.0);
        let g = apply_operator(&f, &k).unwrap();
        // (K1)(t) = t − t²/2; at t→1 this is 1/2
        let last = g.len() - 1;
        let t = f.nodes[last];
        assert!((g.values[last] - (t - t * t / 2.0)).abs() < 1e-5);
        assert!((g.values[last] - 0.5).abs() < 1e-4);
        let lam = 4.0 / PI / PI;
        let phi = GridFunction::gauss_legendre(496, |x| 2f64.sqrt() * (PI * x / 2.0).sin());
        let kp = apply_operator(&phi, &k).unwrap();
        let err = kp.values.iter().zip(&phi.values).map(|(a, b)| (a - lam * b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
        let z = apply_operator(&f.with_values(vec![0.0; f.len()]), &k).unwrap();
        assert!(z.values.iter().all(|&v| v == 0.0));
        let bad = GridFunction::new(vec![0.5], vec![0.5], vec![1.0]).unwrap();
        assert!(matches!(apply_operator(&bad, &k), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn noise_row_sums_are_exact() {
        let h = 0.75;
        let k = KernelSpec::fbn(h).unwrap();
        let f = GridFunction::midpoint(400, |_| 1.0);
        let g = apply_operator(&f, &k).unwrap();
        for (t, v) in f.nodes.iter().zip(&g.values) {
            let want = h * (t.powf(2.0 * h - 1.0) + (1.0 - t).powf(2.0 * h - 1.0));
            assert!((v - want).abs() < 1e-8);
        }
    }

    #[test]
    fn inverse_kernel_operator_is_positive() {
        let k = KernelSpec::fbn(0.25).unwrap();
        let f = GridFunction::midpoint(40, |x| x * (1.0 - x));
        let g = apply_operator(&f, &k).unwrap();
        assert!(g.values.iter().all(|&v| v > 0.0));
        assert!(g.dot(&f) > 0.0);
    }

    #[test]
    fn cell_moments_against_brute_force() {
        let g = gauss(40);
        for p in [0.5, 1.5, 0.9] {
            for m in [-3i64, -1, 0, 1, 2, 7] {
                let got = cell_pair_moments(m, p);
                let mut want = [0.0; 4];
                // split at the kink σ − τ = −m to keep the brute force accurate
                for (s, ws) in g.on(0.0, 1.0) {
                    let kink = s + m as f64;
                    for (t, wt) in graded(g, 0.0, 1.0, kink) {
                        let k = (m as f64 + s - t).abs().powf(p) * ws * wt;
                        want[0] += k;
                        want[1] += k * s;
                        want[2] += k * t;
                        want[3] += k * s * t;
                    }
                }
                for i in 0..4 {
                    assert!((got[i] - want[i]).abs() < 1e-9 * (1.0 + want[i].abs()), "p={p} m={m} i={i}: {} vs {}", got[i], want[i]);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn kernels_symmetric(s in 0.001f64..0.999, t in 0.001f64..0.999, h in 0.05f64..0.95) {
            let p = HurstParams::fbm(h).unwrap();
            prop_assert_eq!(fbm_cov(s, t, &p).unwrap(), fbm_cov(t, s, &p).unwrap());
            prop_assume!(s != t);
            if h > 0.5 {
                let p = HurstParams::fbn(h).unwrap();
                prop_assert_eq!(fbn_kernel(s, t, &p).unwrap(), fbn_kernel(t, s, &p).unwrap());
            }
            if h < 0.5 {
                let p = HurstParams::fbn(h).unwrap();
                prop_assert_eq!(inverse_kernel_kappa(s, t, &p).unwrap(), inverse_kernel_kappa(t, s, &p).unwrap());
            }
        }

        #[test]
        fn apply_is_linear(a in -3f64..3.0, b in -3f64..3.0, h in 0.55f64..0.95) {
            let f = GridFunction::midpoint(60, |x| x.sin());
            let g = GridFunction::midpoint(60, |x| (3.0 * x).cos());
            let fg = f.with_values(f.values.iter().zip(&g.values).map(|(x, y)| a * x + b * y).collect());
            for k in [KernelSpec::fbm(h).unwrap(), KernelSpec::fbn(h).unwrap()] {
                let (af, ag, afg) = (apply_operator(&f, &k).unwrap(), apply_operator(&g, &k).unwrap(), apply_operator(&fg, &k).unwrap());
                for i in 0..60 {
                    let want = a * af.values[i] + b * ag.values[i];
                    prop_assert!((afg.values[i] - want).abs() < 1e-12 * (1.0 + want.abs()));
                }
            }
        }
    }
}
