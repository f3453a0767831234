//! Gauss–Legendre rules and composite rules on [0,1] and on the half line.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on [-1, 1], nodes ascending.
#[derive(Debug, Clone)]
pub struct Gauss {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

impl Gauss {
    pub fn new(n: usize) -> Gauss {
        assert!(n >= 1);
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, z);
            if d != 0.0 {
                dp = d;
            }
            x[i] = -z;
            x[n - 1 - i] = z;
            let wi = 2.0 / ((1.0 - z * z) * dp * dp);
            w[i] = wi;
            w[n - 1 - i] = wi;
        }
        if n % 2 == 1 {
            x[n / 2] = 0.0;
        }
        Gauss { x, w }
    }

    /// Nodes and weights mapped to [a, b].
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        self.x.iter().zip(&self.w).map(move |(&x, &w)| (c + r * x, r * w))
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

const CACHED: usize = 65;

/// Shared rule of order `n` (computed once per order up to 64).
pub fn gauss(n: usize) -> &'static Gauss {
    static CACHE: [OnceLock<Gauss>; CACHED] = [const { OnceLock::new() }; CACHED];
    assert!((1..CACHED).contains(&n), "gauss order {n} not cached");
    CACHE[n].get_or_init(|| Gauss::new(n))
}

/// Quadrature rule: nodes ascending with weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Composite Gauss rule with equal panels on [a, b].
    pub fn composite(a: f64, b: f64, panels: usize, order: usize) -> Rule {
        let g = gauss(order);
        let h = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for k in 0..panels {
            let l = a + k as f64 * h;
            for (x, w) in g.on(l, l + h) {
                nodes.push(x);
                weights.push(w);
            }
        }
        Rule { nodes, weights }
    }

    /// Half-line rule: Gauss panels of width `width` in log t over [e^lo, e^hi],
    /// weights for dt.
    pub fn log_panels(lo: f64, hi: f64, width: f64, order: usize) -> Rule {
        let panels = ((hi - lo) / width).ceil().max(1.0) as usize;
        let mut r = Rule::composite(lo, hi, panels, order);
        for (x, w) in r.nodes.iter_mut().zip(r.weights.iter_mut()) {
            *x = x.exp();
            *w *= *x;
        }
        r
    }

    /// Rule on [0, 1] with 64 uniform panels, the outer ones refined
    /// geometrically down to width 2^-46 to resolve endpoint layers.
    pub fn graded_unit(order: usize) -> Rule {
        let mut edges: Vec<f64> = (6..=46).rev().map(|k| 0.5f64.powi(k)).collect();
        edges.insert(0, 0.0);
        for k in 2..63 {
            edges.push(k as f64 / 64.0);
        }
        let tail: Vec<f64> = (6..=46).map(|k| 1.0 - 0.5f64.powi(k)).collect();
        edges.extend(tail);
        edges.push(1.0);
        let g = gauss(order);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for w in edges.windows(2) {
            for (x, wt) in g.on(w[0], w[1]) {
                nodes.push(x);
                weights.push(wt);
            }
        }
        Rule { nodes, weights }
    }
}

/// Brent's method on a bracketing interval.
pub fn brent(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, xtol: f64) -> Result<f64> {
    let (mut fa, mut fb) = (f(a), f(b));
    if !(fa.is_finite() && fb.is_finite()) || fa * fb > 0.0 {
        return Err(Error::Numerical(format!("root not bracketed in [{a}, {b}]")));
    }
    if fa == 0.0 {
        return Ok(a);
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb * fc > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Err(Error::NoConvergence(200))
}
