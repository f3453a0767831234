//! Special functions and the auxiliary functions θ₀, γ₀, h₀, ρ₀, X₀ for both operator families.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::quad::{gauss, Rule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// Covariance operator of fractional Brownian motion.
    FbmCovariance,
    /// Covariance operator of fractional Brownian noise.
    FbnNoise,
}

/// Hurst exponent with the derived constants α = 2−2H, c_α = (1−α/2)(1−α), C_α = 1−α/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HurstParams {
    pub h: f64,
    pub alpha: f64,
    pub c_alpha: f64,
    pub cap_c_alpha: f64,
    pub family: Family,
}

impl HurstParams {
    pub fn new(h: f64, family: Family) -> Result<HurstParams> {
        if !(h > 0.0 && h <= 1.0) {
            return domain(format!("Hurst exponent {h} outside (0,1]"));
        }
        if family == Family::FbnNoise && (h == 0.5 || h == 1.0) {
            return domain(format!("noise family needs H in (0,1) without 1/2, got {h}"));
        }
        let alpha = 2.0 - 2.0 * h;
        Ok(HurstParams {
            h,
            alpha,
            c_alpha: (1.0 - alpha / 2.0) * (1.0 - alpha),
            cap_c_alpha: 1.0 - alpha / 2.0,
            family,
        })
    }

    pub fn fbm(h: f64) -> Result<HurstParams> {
        HurstParams::new(h, Family::FbmCovariance)
    }

    pub fn fbn(h: f64) -> Result<HurstParams> {
        HurstParams::new(h, Family::FbnNoise)
    }

    /// sin(πH)Γ(2H+1), the eigenvalue prefactor.
    pub fn lambda_prefactor(&self) -> f64 {
        sin_pi(self.h) * gamma(2.0 * self.h + 1.0)
    }
}

/// cos(πx), exactly zero at x = 1/2.
pub fn cos_pi(x: f64) -> f64 {
    if x == 0.5 {
        0.0
    } else {
        (PI * x).cos()
    }
}

/// sin(πx), exactly one at x = 1/2 and zero at x = 1.
pub fn sin_pi(x: f64) -> f64 {
    if x == 0.5 {
        1.0
    } else if x == 1.0 {
        0.0
    } else {
        (PI * x).sin()
    }
}

const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(x) for any real x off the poles (Lanczos, g = 7, with reflection below 1/2).
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        if x == x.floor() {
            return f64::NAN;
        }
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + 7.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// Γ(x) for x > 0.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return domain(format!("gamma needs x > 0, got {x}"));
    }
    Ok(gamma(x))
}

pub fn beta_fn(a: f64, b: f64) -> Result<f64> {
    Ok(gamma_fn(a)? * gamma_fn(b)? / gamma_fn(a + b)?)
}

/// ℓ_H = sin(π/2·(H−½)/(H+½)) / sin(π/2/(H+½)).
pub fn ell_h(h: f64) -> Result<f64> {
    if !(h > 0.0 && h < 1.0) {
        return domain(format!("ell_H needs H in (0,1), got {h}"));
    }
    if h == 0.5 {
        return Ok(0.0);
    }
    Ok((0.5 * PI * (h - 0.5) / (h + 0.5)).sin() / (0.5 * PI / (h + 0.5)).sin())
}

/// b_α = sin(π/(3−α)·(1−α)/2) / sin(π/(3−α)).
pub fn b_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return domain(format!("b_alpha needs alpha in (0,2), got {alpha}"));
    }
    if alpha == 1.0 {
        return Ok(0.0);
    }
    let r = PI / (3.0 - alpha);
    Ok((r * (1.0 - alpha) / 2.0).sin() / r.sin())
}

fn check_u(u: f64) -> Result<()> {
    if !(u > 0.0) || !u.is_finite() {
        return domain(format!("auxiliary functions need 0 < u < inf, got {u}"));
    }
    Ok(())
}

fn theta_raw(u: f64, p: &HurstParams) -> f64 {
    let h = p.h;
    let (c, s) = (cos_pi(h), sin_pi(h));
    match p.family {
        Family::FbmCovariance => {
            if c == 0.0 {
                0.0
            } else {
                -(c / (u.powf(2.0 * h + 1.0) + s)).atan()
            }
        }
        // atan2 form picks the branch continuous on (0,∞) for both signs of cos(πH)
        Family::FbnNoise => c.abs().atan2(c.signum() * (u.powf(2.0 * h - 1.0) - s)),
    }
}

fn gamma_raw(u: f64, p: &HurstParams) -> f64 {
    let h = p.h;
    let (c, s) = (cos_pi(h), sin_pi(h));
    match p.family {
        Family::FbmCovariance => {
            let v = u.powf(-2.0 * h);
            (u + v * s).hypot(v * c)
        }
        Family::FbnNoise => {
            let v = u.powf(1.0 - 2.0 * h);
            (1.0 - v * s).hypot(v * c)
        }
    }
}

pub fn theta0(u: f64, p: &HurstParams) -> Result<f64> {
    check_u(u)?;
    Ok(theta_raw(u, p))
}

pub fn gamma0(u: f64, p: &HurstParams) -> Result<f64> {
    check_u(u)?;
    Ok(gamma_raw(u, p))
}

/// dθ₀/du from the closed form.
pub fn theta0_prime(u: f64, p: &HurstParams) -> Result<f64> {
    check_u(u)?;
    let h = p.h;
    let (c, s) = (cos_pi(h), sin_pi(h));
    Ok(match p.family {
        Family::FbmCovariance => {
            let d = u.powf(2.0 * h + 1.0) + s;
            c * (2.0 * h + 1.0) * u.powf(2.0 * h) / (d * d + c * c)
        }
        Family::FbnNoise => {
            let e = u.powf(2.0 * h - 1.0) - s;
            -c * (2.0 * h - 1.0) * u.powf(2.0 * h - 2.0) / (e * e + c * c)
        }
    })
}

/// lim θ₀(u) as u → 0+.
pub fn theta0_zero(p: &HurstParams) -> f64 {
    match p.family {
        Family::FbmCovariance => (1.0 - p.alpha) * PI / 2.0,
        Family::FbnNoise if p.h < 0.5 => 0.0,
        Family::FbnNoise => (2.0 * p.h - 1.0) * PI / 2.0,
    }
}

/// lim θ₀(u) as u → ∞.
pub fn theta0_inf(p: &HurstParams) -> f64 {
    match p.family {
        Family::FbmCovariance => 0.0,
        Family::FbnNoise if p.h < 0.5 => (1.0 + 2.0 * p.h) * PI / 2.0,
        Family::FbnNoise => PI,
    }
}

const LOG_LO: f64 = -45.0;
const LOG_HI: f64 = 45.0;
const PANEL: f64 = 0.5;
const ORDER: usize = 16;

/// θ₀, γ₀, h₀, ρ₀ and X₀(−u) tabulated on a log-panel half-line grid, plus the
/// machinery to evaluate X₀ and h₀ anywhere.
#[derive(Debug, Clone)]
pub struct AuxFunctionTable {
    pub family: Family,
    pub h: f64,
    pub params: HurstParams,
    pub grid: Vec<f64>,
    pub weights: Vec<f64>,
    pub theta0: Vec<f64>,
    pub gamma0: Vec<f64>,
    pub h0: Vec<f64>,
    pub rho0: Vec<f64>,
    /// X₀(−u) on the grid (real and positive).
    pub x0_neg: Vec<f64>,
    pub theta0_inf: f64,
}

impl AuxFunctionTable {
    pub fn new(p: &HurstParams) -> AuxFunctionTable {
        let rule = Rule::log_panels(LOG_LO, LOG_HI, PANEL, ORDER);
        let theta: Vec<f64> = rule.nodes.iter().map(|&u| theta_raw(u, p)).collect();
        let gam: Vec<f64> = rule.nodes.iter().map(|&u| gamma_raw(u, p)).collect();
        let mut t = AuxFunctionTable {
            family: p.family,
            h: p.h,
            params: *p,
            grid: rule.nodes,
            weights: rule.weights,
            theta0: theta,
            gamma0: gam,
            h0: Vec::new(),
            rho0: Vec::new(),
            x0_neg: Vec::new(),
            theta0_inf: theta0_inf(p),
        };
        let h0: Vec<f64> = t.grid.iter().map(|&u| t.h0_at(u)).collect();
        let x0n: Vec<f64> = t.grid.iter().map(|&u| t.x0(C64::new(-u, 0.0)).re).collect();
        let rho0 = (0..t.grid.len())
            .map(|i| t.theta0[i].sin() / t.gamma0[i] * x0n[i])
            .collect();
        t.h0 = h0;
        t.x0_neg = x0n;
        t.rho0 = rho0;
        t
    }

    fn degenerate(&self) -> bool {
        self.family == Family::FbmCovariance && self.h == 0.5
    }

    /// (1/π)∫₀^∞ (θ₀(t)−θ∞)/(t−z) dt including both analytic tails.
    fn cauchy_exponent(&self, z: C64) -> C64 {
        let ti = self.theta0_inf;
        let mut acc = C64::new(0.0, 0.0);
        for ((&t, &w), &th) in self.grid.iter().zip(&self.weights).zip(&self.theta0) {
            acc += w * (th - ti) / (C64::new(t, 0.0) - z);
        }
        let eps = LOG_LO.exp();
        acc += (theta0_zero(&self.params) - ti) * ((C64::new(eps, 0.0) - z) / (-z)).ln();
        let tm = LOG_HI.exp();
        acc += self.upper_tail(tm);
        acc / PI
    }

    /// ∫_{tm}^∞ (θ₀−θ∞)/t dt from the large-u expansion.
    fn upper_tail(&self, tm: f64) -> f64 {
        let p = &self.params;
        match p.family {
            Family::FbmCovariance => {
                let q = 2.0 * p.h + 1.0;
                -cos_pi(p.h) * tm.powf(-q) / q
            }
            Family::FbnNoise => {
                // θ₀ − θ∞ = −Σ sin(kφ) y^k / k with y = t^{-q}
                let q = (1.0 - 2.0 * p.h).abs();
                let phi = PI * q / 2.0;
                let y = tm.powf(-q);
                let mut s = 0.0;
                let mut yk = 1.0;
                for k in 1..5000 {
                    let kf = k as f64;
                    yk *= y;
                    let term = -(kf * phi).sin() * yk / (kf * kf * q);
                    s += term;
                    if yk / (kf * kf * q) < 1e-18 {
                        break;
                    }
                }
                s
            }
        }
    }

    /// Cauchy transform X₀(z) for z off [0, ∞).
    pub fn x0(&self, z: C64) -> C64 {
        if self.degenerate() {
            return C64::new(1.0, 0.0);
        }
        let e = self.cauchy_exponent(z).exp();
        let ti = self.theta0_inf;
        if ti == 0.0 {
            e
        } else {
            (-z).powf(-ti / PI) * e
        }
    }

    /// h₀(t) = sin θ₀(t) · exp(−(2t/π) PV∫₀^∞ (θ₀(τ)−θ₀(t))/(τ²−t²) dτ).
    pub fn h0_at(&self, t: f64) -> f64 {
        if self.degenerate() {
            return 0.0;
        }
        let p = &self.params;
        let tht = theta_raw(t, p);
        let lt = t.ln();
        let g = gauss(ORDER);
        let npan = self.grid.len() / ORDER;
        let split = if lt > LOG_LO && lt < LOG_HI {
            Some((((lt - LOG_LO) / PANEL).floor() as usize).min(npan - 1))
        } else {
            None
        };
        let t2 = t * t;
        let mut acc = 0.0;
        for k in 0..npan {
            if Some(k) == split {
                let l = LOG_LO + k as f64 * PANEL;
                for (a, b) in [(l, lt), (lt, l + PANEL)] {
                    if b - a <= 0.0 {
                        continue;
                    }
                    for (s, w) in g.on(a, b) {
                        let tau = s.exp();
                        acc += w * tau * (theta_raw(tau, p) - tht) / (tau * tau - t2);
                    }
                }
                continue;
            }
            for i in k * ORDER..(k + 1) * ORDER {
                let tau = self.grid[i];
                acc += self.weights[i] * (self.theta0[i] - tht) / (tau * tau - t2);
            }
        }
        let eps = LOG_LO.exp();
        acc += (theta0_zero(p) - tht) * (-eps / t2);
        acc += (self.theta0_inf - tht) / LOG_HI.exp();
        tht.sin() * (-2.0 * t / PI * acc).exp()
    }

    /// ρ₀(u) = sin θ₀(u)/γ₀(u) · X₀(−u).
    pub fn rho0_at(&self, u: f64) -> f64 {
        if self.degenerate() {
            return 0.0;
        }
        let p = &self.params;
        theta_raw(u, p).sin() / gamma_raw(u, p) * self.x0(C64::new(-u, 0.0)).re
    }

    /// ∫₀^∞ f(u) du over the table grid.
    pub fn integrate(&self, f: impl Fn(usize, f64) -> f64) -> f64 {
        self.grid
            .iter()
            .zip(&self.weights)
            .enumerate()
            .map(|(i, (&u, &w))| w * f(i, u))
            .sum()
    }
}

type TableKey = (Family, u64);

/// Shared table for the given parameters, built once.
pub fn aux_table(p: &HurstParams) -> Arc<AuxFunctionTable> {
    static CACHE: OnceLock<Mutex<HashMap<TableKey, Arc<AuxFunctionTable>>>> = OnceLock::new();
    let key = (p.family, p.h.to_bits());
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().unwrap().get(&key) {
        return t.clone();
    }
    let t = Arc::new(AuxFunctionTable::new(p));
    cache.lock().unwrap().entry(key).or_insert(t).clone()
}

pub fn h0(u: f64, p: &HurstParams) -> Result<f64> {
    check_u(u)?;
    Ok(aux_table(p).h0_at(u))
}

pub fn x0_eval(z: C64, p: &HurstParams) -> Result<C64> {
    if !z.is_finite() {
        return domain("X0 needs a finite argument");
    }
    if z.im == 0.0 && z.re >= 0.0 {
        return domain(format!("X0 evaluated on the cut at {}", z.re));
    }
    Ok(aux_table(p).x0(z))
}

pub fn rho0(u: f64, p: &HurstParams) -> Result<f64> {
    check_u(u)?;
    Ok(aux_table(p).rho0_at(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn gamma_values() {
        assert!(rel(gamma_fn(2.0).unwrap(), 1.0) < 1e-14);
        assert!(rel(gamma_fn(1.5).unwrap(), PI.sqrt() / 2.0) < 1e-14);
        // Γ(2.5) = 1.5·0.5·√π
        assert!(rel(gamma_fn(2.5).unwrap(), 0.75 * PI.sqrt()) < 1e-14);
        assert!(gamma_fn(0.0).is_err());
        assert!(gamma_fn(-1.5).is_err());
        // factorial recursion on [0.5, 10]
        let mut f = 1.0;
        for k in 1..10 {
            f *= k as f64;
            assert!(rel(gamma(k as f64 + 1.0), f) < 1e-13);
        }
        // Γ(−0.5) = −2√π
        assert!(rel(gamma(-0.5), -2.0 * PI.sqrt()) < 1e-13);
    }

    #[test]
    fn ell_and_b() {
        assert_eq!(ell_h(0.5).unwrap(), 0.0);
        let want = (0.1 * PI).sin() / (0.4 * PI).sin();
        assert!((ell_h(0.75).unwrap() - want).abs() < 1e-15);
        assert!((want - 0.324_919_696_2).abs() < 1e-10);
        assert!((b_alpha(0.5).unwrap() - want).abs() < 1e-14);
        assert_eq!(b_alpha(1.0).unwrap(), 0.0);
        // sin(−π/6)/sin(2π/3) = −1/√3
        let b = b_alpha(1.5).unwrap();
        assert!((b + 1.0 / 3f64.sqrt()).abs() < 1e-14);
        assert!((b - ell_h(0.25).unwrap()).abs() < 1e-15);
        assert!(ell_h(1.0).is_err() && b_alpha(2.0).is_err());
    }

    #[test]
    fn theta_limits_and_brownian_case() {
        let p = HurstParams::fbm(0.5).unwrap();
        for u in [0.1, 1.0, 7.0] {
            assert_eq!(theta0(u, &p).unwrap(), 0.0);
            assert!((gamma0(u, &p).unwrap() - (u + 1.0 / u)).abs() < 1e-14);
        }
        let p = HurstParams::fbm(0.75).unwrap();
        let mut last = theta0(1e-6, &p).unwrap();
        assert!((last - PI / 4.0).abs() < 1e-6);
        for k in 1..60 {
            let v = theta0(10f64.powf(-6.0 + k as f64 * 0.2), &p).unwrap();
            assert!(v < last);
            last = v;
        }
        assert!(last.abs() < 1e-10);
        for h in [0.25, 0.75] {
            let p = HurstParams::fbn(h).unwrap();
            assert!((theta0(1e-12, &p).unwrap() - theta0_zero(&p)).abs() < 1e-5);
            assert!((theta0(1e14, &p).unwrap() - theta0_inf(&p)).abs() < 1e-5);
        }
        assert!(theta0(0.0, &p).is_err());
    }

    #[test]
    fn theta_prime_matches_difference() {
        for p in [HurstParams::fbm(0.3).unwrap(), HurstParams::fbn(0.7).unwrap(), HurstParams::fbn(0.2).unwrap()] {
            for u in [0.01, 0.5, 3.0] {
                let d = 1e-6 * u;
                let fd = (theta_raw(u + d, &p) - theta_raw(u - d, &p)) / (2.0 * d);
                assert!((theta0_prime(u, &p).unwrap() - fd).abs() < 1e-7 * (1.0 + fd.abs()));
            }
        }
    }

    #[test]
    fn x0_closed_forms() {
        for h in [0.25, 0.6, 0.75, 0.9] {
            let p = HurstParams::fbm(h).unwrap();
            let a = p.alpha;
            let x = x0_eval(C64::new(0.0, 1.0), &p).unwrap();
            assert!((x.norm() - ((3.0 - a) / 2.0).sqrt()).abs() < 1e-6, "fbm {h}");
            assert!((x.arg() - (1.0 - a) * PI / 8.0).abs() < 1e-6, "fbm {h}");
            let y = x0_eval(C64::new(0.0, -1.0), &p).unwrap();
            assert!((y - x.conj()).norm() < 1e-12);
            let p = HurstParams::fbn(h).unwrap();
            let x = x0_eval(C64::new(0.0, 1.0), &p).unwrap();
            assert!((x.norm() - ((a - 1.0).abs() / 2.0).sqrt()).abs() < 1e-6, "fbn {h}");
            assert!((x.arg() - (3.0 - a) * PI / 8.0).abs() < 1e-6, "fbn {h}");
        }
        let p = HurstParams::fbm(0.75).unwrap();
        let x = x0_eval(C64::new(-1.0, 0.0), &p).unwrap();
        assert!(x.re > 0.0 && x.im.abs() < 1e-15);
        assert!(x0_eval(C64::new(2.0, 0.0), &p).is_err());
    }

    #[test]
    fn h0_limits() {
        let p = HurstParams::fbm(0.5).unwrap();
        assert_eq!(h0(0.7, &p).unwrap(), 0.0);
        let p = HurstParams::fbm(0.75).unwrap();
        assert!((h0(1e-9, &p).unwrap() - (PI / 4.0).sin()).abs() < 1e-6);
        let p = HurstParams::fbn(0.75).unwrap();
        let t = aux_table(&p);
        let cap = (0.75 * PI).sin();
        assert!(t.h0.iter().all(|&v| (-1e-12..=cap + 1e-12).contains(&v)));
    }

    /// h₀ via the log-kernel form with the singularity removed by τ = t(1 ∓ e^{−w}).
    fn h0_log_form(t: f64, p: &HurstParams) -> f64 {
        let g = gauss(16);
        let mut acc = 0.0;
        let f = |tau: f64| {
            theta0_prime(tau, p).unwrap() * ((t + tau) / (t - tau)).abs().ln()
        };
        // geometric panels at w = 0 where θ₀′ may blow up like τ^{2H−2}
        let mut panels: Vec<(f64, f64)> = (0..40).map(|k| (0.5 * 0.5f64.powi(k + 1), 0.5 * 0.5f64.powi(k))).collect();
        panels.extend((1..68).map(|k| (k as f64 * 0.5, k as f64 * 0.5 + 0.5)));
        for (a, b) in panels {
            for (w, wt) in g.on(a, b) {
                let tau = t * (1.0 - (-w).exp());
                if tau > 0.0 {
                    acc += wt * t * (-w).exp() * f(tau);
                }
            }
        }
        let lo = -(45.0 - t.ln());
        let n = ((34.0 - lo) / 0.5).ceil() as usize;
        for k in 0..n {
            let a = lo + k as f64 * 0.5;
            for (w, wt) in g.on(a, a + 0.5) {
                let tau = t * (1.0 + (-w).exp());
                acc += wt * t * (-w).exp() * f(tau);
            }
        }
        theta_raw(t, p).sin() * (-acc / PI).exp()
    }

    #[test]
    fn h0_two_forms_agree() {
        for p in [
            HurstParams::fbm(0.75).unwrap(),
            HurstParams::fbm(0.25).unwrap(),
            HurstParams::fbn(0.75).unwrap(),
            HurstParams::fbn(0.25).unwrap(),
        ] {
            let tab = aux_table(&p);
            for t in [1e-3, 0.05, 0.3, 1.0, 2.7, 40.0] {
                let a = tab.h0_at(t);
                let b = h0_log_form(t, &p);
                assert!((a - b).abs() < 1e-8, "{:?} t={t}: {a} vs {b}", p.family);
            }
        }
    }

    #[test]
    fn rho0_positive_and_slopes() {
        let p = HurstParams::fbm(0.75).unwrap();
        for k in 0..=40 {
            let u = 10f64.powf(-4.0 + 0.2 * k as f64);
            assert!(rho0(u, &p).unwrap() > 0.0);
        }
        // local power law near 0 is u^{H+1/2}
        let s0 = (rho0(2e-4, &p).unwrap() / rho0(1e-4, &p).unwrap()).ln() / 2f64.ln();
        assert!((s0 - 1.25).abs() < 0.02, "{s0}");
        let s1 = (rho0(2e4, &p).unwrap() / rho0(1e4, &p).unwrap()).ln() / 2f64.ln();
        assert!((s1 + 3.5).abs() < 0.02, "{s1}");
        assert!(aux_table(&HurstParams::fbm(0.5).unwrap()).rho0.iter().all(|&r| r == 0.0));
        for h in [0.25, 0.75] {
            let t = aux_table(&HurstParams::fbn(h).unwrap());
            assert!(t.rho0.iter().all(|&r| r >= 0.0));
        }
    }

    proptest! {
        #[test]
        fn ell_equals_b(h in 0.01f64..0.99) {
            prop_assert!((ell_h(h).unwrap() - b_alpha(2.0 - 2.0 * h).unwrap()).abs() < 1e-12);
            prop_assert!((ell_h(h).unwrap().atan() - PI / 2.0 * (h - 0.5) / (h + 0.5)).abs() < 1e-12);
        }

        #[test]
        fn theta_reflection(h in 0.05f64..0.95, lu in -8f64..8.0) {
            let u = lu.exp();
            let p = HurstParams::fbm(h).unwrap();
            let s = theta0(u, &p).unwrap() + theta0(1.0 / u, &p).unwrap();
            prop_assert!((s - theta0_zero(&p)).abs() < 1e-12);
            prop_assume!((h - 0.5).abs() > 1e-3);
            let p = HurstParams::fbn(h).unwrap();
            let s = theta0(u, &p).unwrap() + theta0(1.0 / u, &p).unwrap();
            prop_assert!((s - (1.0 + 2.0 * h) * PI / 2.0).abs() < 1e-12);
        }

        #[test]
        fn gamma_positive_positive_axis(x in 0.01f64..20.0) {
            let g = gamma_fn(x).unwrap();
            prop_assert!(g > 0.0);
            prop_assert!((gamma(x + 1.0) / g - x).abs() < 1e-12 * x.max(1.0));
        }
    }
}
