//! Karhunen–Loève sampling of fBm paths from the computed spectrum.
//!
//! Normals: ChaCha8 seeded with `seed`, stream = path index, Box–Muller on
//! 53-bit uniforms taken as `1 − (u64 >> 11)·2⁻⁵³` (never 0).

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{eigfun_fbm, lambda_fbm, Order};
use crate::error::{domain, Error, Result};
use crate::nystrom::{eigenfunction_at, reference_spectrum_with, ReferenceConfig, Scheme};
use crate::operators::{fbm_cov, KernelSpec};
use crate::specfun::HurstParams;

/// Modes beyond this need a spectrum the crate does not provide.
pub const MAX_MODES: usize = 20_000;
const REF_MODES: usize = 40;
const REF_GRID: usize = 1200;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathSample {
    pub h: f64,
    pub grid: Vec<f64>,
    /// `count` rows of `grid.len()` values.
    pub paths: Vec<Vec<f64>>,
    pub n_modes: usize,
    /// Modes 1..=n_reference come from the discretised operator, the rest
    /// from the asymptotic formulas.
    pub n_reference: usize,
    pub seed: u64,
}

fn normals(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    let unif = |r: &mut ChaCha8Rng| 1.0 - (r.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    for pair in out.chunks_mut(2) {
        let (u1, u2) = (unif(rng), unif(rng));
        let r = (-2.0 * u1.ln()).sqrt();
        let a = std::f64::consts::TAU * u2;
        pair[0] = r * a.cos();
        if pair.len() > 1 {
            pair[1] = r * a.sin();
        }
    }
}

/// Rows √λ_n φ_n(t) for n = 1..=n_modes, and the number of reference modes.
fn kl_basis(h: f64, n_modes: usize, grid: &[f64]) -> Result<(Vec<Vec<f64>>, usize)> {
    let k = KernelSpec::fbm(h)?;
    let want = n_modes.min(REF_MODES);
    let cfg = ReferenceConfig::new(REF_GRID, want).scheme(Scheme::HatGalerkin);
    let spec = match reference_spectrum_with(&k, cfg) {
        Ok(s) => s,
        Err(Error::Resolution { .. }) => reference_spectrum_with(&k, cfg.unchecked())?,
        Err(e) => return Err(e),
    };
    let n_ref = spec.n_reliable.min(want);
    (1..=n_modes)
        .into_par_iter()
        .map(|n| {
            let (lam, f): (f64, Box<dyn Fn(f64) -> Result<f64>>) = if n <= n_ref {
                (spec.eigenvalues[n - 1], Box::new(|x| eigenfunction_at(&spec, n, x)))
            } else {
                (lambda_fbm(n, h, Order::SecondOrder)?, Box::new(move |x| eigfun_fbm(n, h, x)))
            };
            let s = lam.sqrt();
            // every eigenfunction vanishes at the origin
            grid.iter().map(|&t| if t == 0.0 { Ok(0.0) } else { f(t).map(|v| s * v) }).collect()
        })
        .collect::<Result<Vec<Vec<f64>>>>()
        .map(|b| (b, n_ref))
}

/// X(t) = Σ_{n≤n_modes} √λ_n ξ_n φ_n(t) on `grid` for `count` independent paths.
pub fn kl_sample(h: f64, n_modes: usize, grid: &[f64], count: usize, seed: u64) -> Result<PathSample> {
    HurstParams::fbm(h)?;
    if count == 0 {
        return Err(Error::Config("count must be at least 1".into()));
    }
    if n_modes == 0 || n_modes > MAX_MODES {
        return Err(Error::InsufficientSpectrum { needed: n_modes, have: MAX_MODES });
    }
    if grid.is_empty() || grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return domain("time grid must be non-empty and inside [0,1]");
    }
    let (basis, n_reference) = kl_basis(h, n_modes, grid)?;
    let paths = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut xi = vec![0.0; n_modes];
            normals(&mut rng, &mut xi);
            let mut x = vec![0.0; grid.len()];
            for (z, row) in xi.iter().zip(&basis) {
                for (xv, b) in x.iter_mut().zip(row) {
                    *xv += z * b;
                }
            }
            x
        })
        .collect();
    Ok(PathSample { h, grid: grid.to_vec(), paths, n_modes, n_reference, seed })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovarianceCheck {
    /// Largest |Ê[X_sX_t] − R(s,t)|/SE over the check pairs.
    pub max_z: f64,
    /// Largest standardised deviation of Ê[X_t²] from t^{2H}.
    pub max_z_variance: f64,
    /// Check times (grid points, t > 0).
    pub times: Vec<f64>,
    pub count: usize,
    /// Fewer than 1000 paths: z-scores are not meaningful.
    pub insufficient: bool,
}

fn pick(grid: &[f64], m: usize) -> Vec<usize> {
    let pos: Vec<usize> = (0..grid.len()).filter(|&i| grid[i] > 0.0).collect();
    if pos.len() <= m {
        return pos;
    }
    (1..=m).map(|k| pos[(k * pos.len()) / m - 1]).collect()
}

fn z_score(sample: &PathSample, i: usize, j: usize, target: f64) -> f64 {
    let c = sample.paths.len() as f64;
    let prods = sample.paths.iter().map(|p| p[i] * p[j]);
    let mean = prods.clone().sum::<f64>() / c;
    let var = prods.map(|v| (v - mean).powi(2)).sum::<f64>() / (c - 1.0).max(1.0);
    let se = (var / c).sqrt();
    if se > 0.0 {
        (mean - target).abs() / se
    } else if mean == target {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Empirical covariance against ½(s^{2H}+t^{2H}−|s−t|^{2H}) on a 5×5 pair grid
/// and the variance function at up to 10 grid points.
pub fn empirical_cov_check(sample: &PathSample) -> Result<CovarianceCheck> {
    let p = HurstParams::fbm(sample.h)?;
    let count = sample.paths.len();
    let idx = pick(&sample.grid, 5);
    let mut max_z: f64 = 0.0;
    for &i in &idx {
        for &j in &idx {
            let r = fbm_cov(sample.grid[i], sample.grid[j], &p)?;
            max_z = max_z.max(z_score(sample, i, j, r));
        }
    }
    let mut max_zv: f64 = 0.0;
    for i in pick(&sample.grid, 10) {
        max_zv = max_zv.max(z_score(sample, i, i, sample.grid[i].powf(2.0 * sample.h)));
    }
    Ok(CovarianceCheck {
        max_z,
        max_z_variance: max_zv,
        times: idx.iter().map(|&i| sample.grid[i]).collect(),
        count,
        insufficient: count < 1000,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(m: usize) -> Vec<f64> {
        (0..=m).map(|k| k as f64 / m as f64).collect()
    }

    #[test]
    fn reproducible_and_anchored() {
        let g = grid(20);
        let a = kl_sample(0.75, 60, &g, 50, 7).unwrap();
        let b = kl_sample(0.75, 60, &g, 50, 7).unwrap();
        assert_eq!(a.paths, b.paths);
        let c = kl_sample(0.75, 60, &g, 50, 8).unwrap();
        assert_ne!(a.paths, c.paths);
        assert!(a.paths.iter().all(|p| p[0] == 0.0));
        assert_eq!(a.n_reference, 40);
    }

    #[test]
    fn box_muller_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut z = vec![0.0; 200_001];
        normals(&mut rng, &mut z);
        let m = z.iter().sum::<f64>() / z.len() as f64;
        let v = z.iter().map(|x| x * x).sum::<f64>() / z.len() as f64;
        assert!(m.abs() < 0.01 && (v - 1.0).abs() < 0.01);
    }

    #[test]
    fn truncated_trace() {
        let spec = crate::nystrom::reference_spectrum(&KernelSpec::fbm(0.75).unwrap(), 800, 40).unwrap();
        let s: f64 = spec.eigenvalues.iter().sum::<f64>() + (41..=200).map(|n| lambda_fbm(n, 0.75, Order::SecondOrder).unwrap()).sum::<f64>();
        assert!(s >= 0.999 / 2.5, "{s}");
    }

    #[test]
    fn single_path_flagged() {
        let s = kl_sample(0.5, 10, &grid(10), 1, 0).unwrap();
        assert!(empirical_cov_check(&s).unwrap().insufficient);
        assert!(kl_sample(0.5, 10, &grid(10), 0, 0).is_err());
        assert!(kl_sample(0.5, MAX_MODES + 1, &grid(10), 1, 0).is_err());
    }
}
