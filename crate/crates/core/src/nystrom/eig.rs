//! Dense symmetric eigensolvers: cyclic Jacobi for full decompositions, and
//! Householder tridiagonalisation + implicit QL + inverse iteration for a few
//! eigenvectors of large matrices.

use crate::error::{Error, Result};

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(n: usize) -> Mat {
        Mat { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Mat {
        let mut m = Mat::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Mat {
        let mut m = Mat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let scale = self.data.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
        (0..self.n).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol * scale))
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Eigenvalues in descending order; `vectors[k]` belongs to `values[k]`.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

const MAX_SWEEPS: usize = 100;

/// Full decomposition by cyclic Jacobi rotations with threshold sweeps.
pub fn symmetric_eig(a: &Mat) -> Result<Eigen> {
    let n = a.n;
    if !a.is_symmetric(1e-12) {
        return Err(Error::Domain("matrix is not symmetric".into()));
    }
    let mut m = a.clone();
    let mut v = Mat::identity(n);
    let norm = a.frobenius();
    let mut sweep = 0;
    loop {
        let off: f64 = (0..n).map(|i| (0..i).map(|j| m[(i, j)] * m[(i, j)]).sum::<f64>()).sum::<f64>();
        if off.sqrt() <= 1e-15 * norm || norm == 0.0 {
            break;
        }
        if sweep == MAX_SWEEPS {
            return Err(Error::NoConvergence(MAX_SWEEPS));
        }
        sweep += 1;
        let thresh = if sweep < 4 { 0.2 * off.sqrt() / (n * n) as f64 } else { 0.0 };
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() <= thresh || apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    Ok(Eigen {
        values: idx.iter().map(|&i| m[(i, i)]).collect(),
        vectors: idx.iter().map(|&i| (0..n).map(|k| v[(k, i)]).collect()).collect(),
    })
}

/// Householder reduction A = Q T Qᵀ with the reflectors kept for back-transformation.
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    /// off[i] couples i and i+1.
    pub off: Vec<f64>,
    reflectors: Vec<(Vec<f64>, f64)>,
}

pub fn tridiagonalize(mut a: Mat) -> Tridiagonal {
    let n = a.n;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
    for k in 0..n.saturating_sub(2) {
        diag[k] = a[(k, k)];
        let m = n - k - 1;
        let mut v: Vec<f64> = a.row(k)[k + 1..].to_vec();
        let xnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            off[k] = 0.0;
            reflectors.push((v, 0.0));
            continue;
        }
        let alpha = if v[0] > 0.0 { -xnorm } else { xnorm };
        off[k] = alpha;
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        let tau = 2.0 / vv;
        // p = τ B v, w = p − (τ/2)(pᵀv) v, B ← B − v wᵀ − w vᵀ
        let mut p = vec![0.0; m];
        for i in 0..m {
            let row = &a.data[(k + 1 + i) * n + k + 1..(k + 2 + i) * n];
            p[i] = tau * row.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>();
        }
        let kk = 0.5 * tau * p.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>();
        let w: Vec<f64> = p.iter().zip(&v).map(|(pi, vi)| pi - kk * vi).collect();
        for i in 0..m {
            let (vi, wi) = (v[i], w[i]);
            let row = &mut a.data[(k + 1 + i) * n + k + 1..(k + 2 + i) * n];
            for ((r, &vj), &wj) in row.iter_mut().zip(&v).zip(&w) {
                *r -= vi * wj + wi * vj;
            }
        }
        reflectors.push((v, tau));
    }
    if n >= 2 {
        diag[n - 2] = a[(n - 2, n - 2)];
        off[n - 2] = a[(n - 1, n - 2)];
    }
    if n >= 1 {
        diag[n - 1] = a[(n - 1, n - 1)];
    }
    Tridiagonal { diag, off, reflectors }
}

impl Tridiagonal {
    /// All eigenvalues, descending (implicit QL with Wilkinson shifts).
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let n = self.diag.len();
        let mut d = self.diag.clone();
        let mut e = self.off.clone();
        if n > 0 {
            e[n - 1] = 0.0;
        }
        for l in 0..n {
            let mut iter = 0;
            loop {
                let mut m = l;
                while m + 1 < n {
                    let dd = d[m].abs() + d[m + 1].abs();
                    if e[m].abs() <= f64::EPSILON * dd {
                        break;
                    }
                    m += 1;
                }
                if m == l {
                    break;
                }
                iter += 1;
                if iter > 100 {
                    return Err(Error::NoConvergence(iter));
                }
                let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                let mut r = g.hypot(1.0);
                g = d[m] - d[l] + e[l] / (g + r.copysign(g));
                let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
                let mut underflow = false;
                let mut i = m;
                while i > l {
                    i -= 1;
                    let f = s * e[i];
                    let b = c * e[i];
                    r = f.hypot(g);
                    e[i + 1] = r;
                    if r == 0.0 {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        underflow = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                }
                if underflow {
                    continue;
                }
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        }
        d.sort_by(|a, b| b.total_cmp(a));
        Ok(d)
    }

    /// Eigenvector of the tridiagonal matrix for eigenvalue `mu` by inverse iteration,
    /// orthogonalised against `against`.
    fn tri_vector(&self, mu: f64, against: &[Vec<f64>], seed: u64) -> Vec<f64> {
        let n = self.diag.len();
        let scale = self.diag.iter().chain(&self.off).fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
        let shift = mu + 4.0 * f64::EPSILON * scale;
        // deterministic start vector
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut x: Vec<f64> = (0..n)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            })
            .collect();
        for _ in 0..4 {
            for q in against {
                let d: f64 = q.iter().zip(&x).map(|(a, b)| a * b).sum();
                x.iter_mut().zip(q).for_each(|(xi, qi)| *xi -= d * qi);
            }
            x = tri_solve(&self.diag, &self.off, shift, &x);
            for q in against {
                let d: f64 = q.iter().zip(&x).map(|(a, b)| a * b).sum();
                x.iter_mut().zip(q).for_each(|(xi, qi)| *xi -= d * qi);
            }
            let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter_mut().for_each(|v| *v /= nrm);
        }
        x
    }

    /// Apply Q to a vector of the tridiagonal basis.
    pub fn back_transform(&self, z: &mut [f64]) {
        for (k, (v, tau)) in self.reflectors.iter().enumerate().rev() {
            if *tau == 0.0 {
                continue;
            }
            let seg = &mut z[k + 1..];
            let d: f64 = seg.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() * tau;
            seg.iter_mut().zip(v).for_each(|(s, vi)| *s -= d * vi);
        }
    }
}

/// Solve (T − μI)x = b by Gaussian elimination with partial pivoting.
fn tri_solve(diag: &[f64], off: &[f64], mu: f64, b: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let tiny = f64::EPSILON * diag.iter().chain(off).fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let nz = |v: f64| if v == 0.0 { tiny } else { v };
    // pivot rows: entries in columns i, i+1, i+2
    let mut u = vec![[0.0f64; 3]; n];
    let mut rhs = vec![0.0; n];
    let mut cur = [diag[0] - mu, if n > 1 { off[0] } else { 0.0 }, 0.0];
    let mut rc = b[0];
    for i in 0..n - 1 {
        let next = [off[i], diag[i + 1] - mu, if i + 2 < n { off[i + 1] } else { 0.0 }];
        let rn = b[i + 1];
        let (piv, rp, other, ro) = if next[0].abs() > cur[0].abs() { (next, rn, cur, rc) } else { (cur, rc, next, rn) };
        let piv = [nz(piv[0]), piv[1], piv[2]];
        let f = other[0] / piv[0];
        u[i] = piv;
        rhs[i] = rp;
        cur = [other[1] - f * piv[1], other[2] - f * piv[2], 0.0];
        rc = ro - f * rp;
    }
    u[n - 1] = [nz(cur[0]), 0.0, 0.0];
    rhs[n - 1] = rc;
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        if i + 1 < n {
            s -= u[i][1] * x[i + 1];
        }
        if i + 2 < n {
            s -= u[i][2] * x[i + 2];
        }
        x[i] = s / u[i][0];
    }
    x
}

/// All eigenvalues (descending) and the eigenvectors of the `k` largest.
pub fn top_eigenpairs(a: Mat, k: usize) -> Result<Eigen> {
    let n = a.n;
    let k = k.min(n);
    let t = tridiagonalize(a);
    let values = t.eigenvalues()?;
    let mut tri_vecs: Vec<Vec<f64>> = Vec::with_capacity(k);
    let scale = values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for j in 0..k {
        // orthogonalise only against numerically close eigenvalues
        let close: Vec<Vec<f64>> = (0..j)
            .filter(|&i| (values[i] - values[j]).abs() < 1e-7 * scale)
            .map(|i| tri_vecs[i].clone())
            .collect();
        tri_vecs.push(t.tri_vector(values[j], &close, j as u64 + 1));
    }
    let vectors = tri_vecs
        .into_iter()
        .map(|mut z| {
            t.back_transform(&mut z);
            z
        })
        .collect();
    Ok(Eigen { values, vectors })
}

/// Cholesky factor of a symmetric positive-definite tridiagonal matrix: L with
/// diagonal `d` and subdiagonal `s` (s[i] = L[i+1][i]).
#[derive(Debug, Clone)]
pub struct BidiagonalCholesky {
    pub d: Vec<f64>,
    pub s: Vec<f64>,
}

impl BidiagonalCholesky {
    pub fn new(diag: &[f64], off: &[f64]) -> Result<BidiagonalCholesky> {
        let n = diag.len();
        let mut d = vec![0.0; n];
        let mut s = vec![0.0; n.saturating_sub(1)];
        for i in 0..n {
            let mut v = diag[i];
            if i > 0 {
                v -= s[i - 1] * s[i - 1];
            }
            if v <= 0.0 {
                return Err(Error::Numerical("mass matrix not positive definite".into()));
            }
            d[i] = v.sqrt();
            if i + 1 < n {
                s[i] = off[i] / d[i];
            }
        }
        Ok(BidiagonalCholesky { d, s })
    }

    /// L⁻¹ K L⁻ᵀ for symmetric K.
    pub fn congruence(&self, k: &Mat) -> Mat {
        let n = k.n;
        let mut x = k.clone();
        self.forward_rows(&mut x);
        let mut xt = Mat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                xt[(j, i)] = x[(i, j)];
            }
        }
        self.forward_rows(&mut xt);
        // symmetrise round-off
        for i in 0..n {
            for j in 0..i {
                let m = 0.5 * (xt[(i, j)] + xt[(j, i)]);
                xt[(i, j)] = m;
                xt[(j, i)] = m;
            }
        }
        xt
    }

    /// Row-wise forward substitution: X ← L⁻¹ X.
    fn forward_rows(&self, x: &mut Mat) {
        let n = x.n;
        for i in 0..n {
            if i > 0 {
                let (prev, cur) = x.data.split_at_mut(i * n);
                let prev = &prev[(i - 1) * n..];
                let si = self.s[i - 1];
                cur[..n].iter_mut().zip(prev).for_each(|(c, p)| *c -= si * p);
            }
            let di = self.d[i];
            x.data[i * n..(i + 1) * n].iter_mut().for_each(|c| *c /= di);
        }
    }

    /// Solve Lᵀ c = y.
    pub fn back_solve(&self, y: &[f64]) -> Vec<f64> {
        let n = y.len();
        let mut c = vec![0.0; n];
        for i in (0..n).rev() {
            let mut v = y[i];
            if i + 1 < n {
                v -= self.s[i] * c[i + 1];
            }
            c[i] = v / self.d[i];
        }
        c
    }
}

/// LU factorisation with partial pivoting for general dense systems.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn new(a: &Mat) -> Result<Lu> {
        let n = a.n;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.frobenius().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let (piv, big) = (k..n)
                .map(|i| (i, lu[i * n + k].abs()))
                .fold((k, -1.0), |b, c| if c.1 > b.1 { c } else { b });
            if big <= 1e-14 * scale {
                return Err(Error::Numerical(format!("singular matrix: pivot {big:e} at column {k}")));
            }
            if piv != k {
                for j in 0..n {
                    lu.swap(k * n + j, piv * n + j);
                }
                perm.swap(k, piv);
            }
            let d = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / d;
                lu[i * n + k] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= f * lu[k * n + j];
                    }
                }
            }
        }
        Ok(Lu { n, lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        x
    }
}
