//! Closed-form asymptotic eigenvalues and eigenfunctions for the fBm and fBn
//! covariance operators.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::specfun::{aux_table, Family, HurstParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Order {
    /// ν_n = nπ: the leading term of λ_n.
    FirstOrder,
    /// ν_n = (n−½)π + shift, dropping O(1/n).
    SecondOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Asymptotic,
    Nystrom,
    IaSolver,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenEstimate {
    pub n: usize,
    pub nu: f64,
    pub lambda: f64,
    pub family: Family,
    pub order: Order,
    /// Second-order constant of the λ_n expansion (fBm only).
    pub c_h: Option<f64>,
    pub provenance: Provenance,
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return domain("mode index starts at 1");
    }
    Ok(())
}

fn check_fbm_h(h: f64) -> Result<()> {
    if !(h > 0.0 && h <= 1.0) {
        return domain(format!("H = {h} outside (0,1]"));
    }
    Ok(())
}

fn check_fbn_h(h: f64) -> Result<()> {
    if !(h > 0.0 && h < 1.0) || h == 0.5 {
        return domain(format!("noise family needs H in (0,1) without 1/2, got {h}"));
    }
    Ok(())
}

/// arctan ℓ_H = (π/2)(H−½)/(H+½), valid on (0,1].
fn atan_ell(h: f64) -> f64 {
    0.5 * PI * (h - 0.5) / (h + 0.5)
}

pub fn nu_fbm(n: usize, h: f64, order: Order) -> Result<f64> {
    check_n(n)?;
    check_fbm_h(h)?;
    let nf = n as f64;
    Ok(match order {
        Order::FirstOrder => nf * PI,
        Order::SecondOrder => (nf - 0.5) * PI + (1.0 - 2.0 * h) * PI / 4.0 + atan_ell(h),
    })
}

/// λ_n = sin(πH)Γ(2H+1)ν_n^{−2H−1}; at H = 1 the operator has rank one.
pub fn lambda_fbm(n: usize, h: f64, order: Order) -> Result<f64> {
    let nu = nu_fbm(n, h, order)?;
    if h == 1.0 {
        return Ok(if n == 1 { 1.0 / 3.0 } else { 0.0 });
    }
    let p = HurstParams::fbm(h)?;
    Ok(p.lambda_prefactor() * nu.powf(-2.0 * h - 1.0))
}

/// Constant of λ_n = sin(πH)Γ(2H+1)(nπ)^{−2H−1}(1 − C_H/n + O(n⁻²)).
pub fn c_h(h: f64) -> Result<f64> {
    check_fbm_h(h)?;
    Ok((2.0 * h + 1.0) * (-0.5 + (1.0 - 2.0 * h) / 4.0 + atan_ell(h) / PI))
}

/// Two-term expansion of λ_n in powers of 1/n.
pub fn lambda_fbm_expansion(n: usize, h: f64) -> Result<f64> {
    let lead = lambda_fbm(n, h, Order::FirstOrder)?;
    Ok(lead * (1.0 - c_h(h)? / n as f64))
}

pub fn estimate_fbm(n: usize, h: f64, order: Order) -> Result<EigenEstimate> {
    Ok(EigenEstimate {
        n,
        nu: nu_fbm(n, h, order)?,
        lambda: lambda_fbm(n, h, order)?,
        family: Family::FbmCovariance,
        order,
        c_h: Some(c_h(h)?),
        provenance: Provenance::Asymptotic,
    })
}

pub fn nu_fbn(n: usize, h: f64, order: Order) -> Result<f64> {
    check_n(n)?;
    check_fbn_h(h)?;
    let nf = n as f64;
    Ok(match order {
        Order::FirstOrder => nf * PI,
        Order::SecondOrder => (nf - 0.5) * PI + (1.0 - 2.0 * h) * PI / 4.0,
    })
}

/// λ_n = sin(πH)Γ(2H+1)ν_n^{1−2H}.
pub fn lambda_fbn(n: usize, h: f64, order: Order) -> Result<f64> {
    let nu = nu_fbn(n, h, order)?;
    Ok(HurstParams::fbn(h)?.lambda_prefactor() * nu.powf(1.0 - 2.0 * h))
}

pub fn estimate_fbn(n: usize, h: f64, order: Order) -> Result<EigenEstimate> {
    Ok(EigenEstimate {
        n,
        nu: nu_fbn(n, h, order)?,
        lambda: lambda_fbn(n, h, order)?,
        family: Family::FbnNoise,
        order,
        c_h: None,
        provenance: Provenance::Asymptotic,
    })
}

/// Oscillatory part √2 sin(ν_n x + phase) of the asymptotic eigenfunction.
pub fn leading_oscillation(p: &HurstParams, n: usize, x: f64) -> f64 {
    let (h, nf) = (p.h, n as f64);
    match p.family {
        Family::FbmCovariance => {
            if h == 1.0 {
                return 3f64.sqrt() * x;
            }
            let nu = (nf - 0.5) * PI + (1.0 - 2.0 * h) * PI / 4.0 + atan_ell(h);
            SQRT_2 * (nu * x + (2.0 * h - 1.0) * PI / 8.0 - atan_ell(h)).sin()
        }
        Family::FbnNoise => {
            let nu = (nf - 0.5) * PI + (1.0 - 2.0 * h) * PI / 4.0;
            SQRT_2 * (nu * x + (2.0 * h + 1.0) * PI / 8.0).sin()
        }
    }
}

fn check_x(x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return domain(format!("x = {x} outside [0,1]"));
    }
    Ok(())
}

/// √2 sin(ν x + (2H−1)π/8 − arctan ℓ) + (√(2H+1)/π)∫ρ₀(u)[e^{−xνu}(u−ℓ)/√(1+ℓ²) − (−1)ⁿe^{−(1−x)νu}]du.
pub fn eigfun_fbm(n: usize, h: f64, x: f64) -> Result<f64> {
    check_x(x)?;
    let nu = nu_fbm(n, h, Order::SecondOrder)?;
    let p = HurstParams::fbm(h)?;
    if h == 1.0 {
        return Ok(if n == 1 { 3f64.sqrt() * x } else { 0.0 });
    }
    let osc = leading_oscillation(&p, n, x);
    if h == 0.5 {
        return Ok(osc);
    }
    let ell = atan_ell(h).tan();
    let norm = (1.0 + ell * ell).sqrt();
    let par = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let t = aux_table(&p);
    let layer = t.integrate(|i, u| {
        t.rho0[i] * (exp_cut(-x * nu * u) * (u - ell) / norm - par * exp_cut(-(1.0 - x) * nu * u))
    });
    Ok(osc + (2.0 * h + 1.0).sqrt() / PI * layer)
}

fn exp_cut(e: f64) -> f64 {
    if e < -745.0 {
        0.0
    } else {
        e.exp()
    }
}

/// Leading value of φ_n(1) and the average ∫φ_n = √((2H+1)/(1+ℓ²))/ν_n.
pub fn endpoint_and_average_fbm(n: usize, h: f64) -> Result<(f64, f64)> {
    let nu = nu_fbm(n, h, Order::SecondOrder)?;
    let ell = atan_ell(h).tan();
    let sgn = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok((-sgn * (2.0 * h + 1.0).sqrt(), ((2.0 * h + 1.0) / (1.0 + ell * ell)).sqrt() / nu))
}

/// √2 sin(νx + (2H+1)π/8) − (√|2H−1|/π)∫ρ₀(u)[e^{−xνu} − (−1)ⁿe^{−(1−x)νu}]du.
pub fn eigfun_fbn(n: usize, h: f64, x: f64) -> Result<f64> {
    check_x(x)?;
    let nu = nu_fbn(n, h, Order::SecondOrder)?;
    let p = HurstParams::fbn(h)?;
    let osc = leading_oscillation(&p, n, x);
    let par = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let t = aux_table(&p);
    let layer = t.integrate(|i, u| t.rho0[i] * (exp_cut(-x * nu * u) - par * exp_cut(-(1.0 - x) * nu * u)));
    Ok(osc - (2.0 * h - 1.0).abs().sqrt() / PI * layer)
}

/// Exponent of ⟨1, φ_{2n−1}⟩ ∼ ν^{exponent} for the symmetric fBn eigenfunctions.
pub fn average_rate_fbn(n: usize, h: f64) -> Result<f64> {
    check_n(n)?;
    check_fbn_h(h)?;
    Ok(-(1.0f64).max(0.5 + h))
}
