//! One pass/fail line per acceptance criterion.

use std::f64::consts::PI;
use std::io::Write;
use std::time::{Duration, Instant};

use num_complex::Complex64 as C64;

use fracspec::applications::{filtering_error, p_inf, perturbation_rates};
use fracspec::asymptotics::{endpoint_and_average_fbm, lambda_fbm, nu_fbm, nu_fbn, Order};
use fracspec::iasolver::{eigenfunction_fbm, solve_nu_fbm};
use fracspec::nystrom::{eigenfunction_at, reference_spectrum_with, ReferenceConfig, Scheme};
use fracspec::operators::KernelSpec;
use fracspec::sampler::{empirical_cov_check, kl_sample};
use fracspec::specfun::{x0_eval, HurstParams};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn brownian(elapsed: &mut Duration) -> Outcome {
    let t = Instant::now();
    let k = KernelSpec::fbm(0.5).unwrap();
    let s = reference_spectrum_with(&k, ReferenceConfig::new(2000, 20).unchecked()).unwrap();
    let (mut ny, mut asy, mut ia, mut fun) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for n in 1..=20 {
        let exact = 1.0 / ((n as f64 - 0.5) * PI).powi(2);
        ny = ny.max(((s.eigenvalues[n - 1] - exact) / exact).abs());
        asy = asy.max(((lambda_fbm(n, 0.5, Order::SecondOrder).unwrap() - exact) / exact).abs());
        let sol = solve_nu_fbm(n, 0.5).unwrap();
        ia = ia.max(((sol.lambda() - exact) / exact).abs());
        let f = eigenfunction_fbm(&sol).unwrap();
        let sg = eigenfunction_at(&s, n, 1.0).unwrap().signum() * (-1f64).powi(n as i32 + 1);
        for i in 0..=50 {
            let x = i as f64 / 50.0;
            let want = 2f64.sqrt() * ((n as f64 - 0.5) * PI * x).sin();
            fun = fun.max((sg * eigenfunction_at(&s, n, x).unwrap() - want).abs());
            fun = fun.max((f.eval(x) - want).abs());
        }
    }
    *elapsed = t.elapsed();
    let pass = ny <= 1e-5 && asy <= 1e-9 && ia <= 1e-9 && fun < 1e-3 && elapsed.as_secs() <= 60;
    outcome(pass, format!("reference {ny:.1e}, asymptotic {asy:.1e}, solver {ia:.1e}, sup|phi diff| {fun:.1e}, {:.1?}", elapsed))
}

fn figure_errors() -> Outcome {
    let t = Instant::now();
    let k = KernelSpec::fbm(0.75).unwrap();
    let s = reference_spectrum_with(&k, ReferenceConfig::new(2000, 40).unchecked()).unwrap();
    let err = |n: usize, o: Order| {
        let l = s.eigenvalues[n - 1];
        100.0 * (l - lambda_fbm(n, 0.75, o).unwrap()) / l
    };
    let mut pass = true;
    let mut d = Vec::new();
    for (n, want) in [(1, 85.3658), (10, 12.5946), (40, 3.2462)] {
        let e = err(n, Order::FirstOrder);
        pass &= (e - want).abs() <= 0.3;
        d.push(format!("1st n={n} {e:.4}"));
    }
    for (n, want) in [(1, 5.8901), (3, 0.7073), (10, -0.0207f64)] {
        let e = err(n, Order::SecondOrder);
        pass &= (e - want).abs() <= (0.02f64).max(0.15 * want.abs());
        d.push(format!("2nd n={n} {e:.4}"));
    }
    pass &= t.elapsed().as_secs() <= 600;
    outcome(pass, format!("{} ({:.1?})", d.join(", "), t.elapsed()))
}

fn residuals() -> Outcome {
    let cases = [(0.75, 1, -0.035800, 2e-3), (0.75, 10, 0.0024677, 2e-3), (0.75, 40, 0.0013073, 2e-3), (0.25, 1, -0.181108, 3e-3), (0.25, 40, 0.0024622, 3e-3)];
    let mut pass = true;
    let mut d = Vec::new();
    for (h, n, want, tol) in cases {
        let r = solve_nu_fbm(n, h).unwrap().nu - nu_fbm(n, h, Order::SecondOrder).unwrap();
        pass &= (r - want).abs() <= tol;
        d.push(format!("H={h} n={n} {r:.7}"));
    }
    outcome(pass, d.join(", "))
}

fn cauchy_gate() -> Outcome {
    let mut worst = 0.0f64;
    for h in [0.25, 0.6, 0.75, 0.9] {
        let a = HurstParams::fbm(h).unwrap().alpha;
        for (p, want) in [
            (HurstParams::fbm(h).unwrap(), C64::from_polar(((3.0 - a) / 2.0).sqrt(), (1.0 - a) * PI / 8.0)),
            (HurstParams::fbn(h).unwrap(), C64::from_polar(((a - 1.0).abs() / 2.0).sqrt(), (3.0 - a) * PI / 8.0)),
        ] {
            let xp = x0_eval(C64::new(0.0, 1.0), &p).unwrap();
            let xm = x0_eval(C64::new(0.0, -1.0), &p).unwrap();
            worst = worst.max((xp - want).norm()).max((xm - want.conj()).norm());
        }
    }
    outcome(worst <= 1e-6, format!("max |X0(±i) - closed form| = {worst:.1e}"))
}

fn trace_identity() -> Outcome {
    let mut worst = 0.0f64;
    for h in [0.25, 0.5, 0.75] {
        let k = KernelSpec::fbm(h).unwrap();
        let s = reference_spectrum_with(&k, ReferenceConfig::new(400, 3).unchecked().scheme(Scheme::GaussLegendre)).unwrap();
        worst = worst.max((s.trace() - 1.0 / (2.0 * h + 1.0)).abs());
    }
    outcome(worst <= 1e-6, format!("max |trace - 1/(2H+1)| = {worst:.1e}"))
}

fn boundary_data() -> Outcome {
    let k = KernelSpec::fbm(0.75).unwrap();
    let s = reference_spectrum_with(&k, ReferenceConfig::new(1600, 30)).unwrap();
    let (mut end, mut avg) = (0.0f64, 0.0f64);
    for n in 10..=30 {
        let e = eigenfunction_at(&s, n, 1.0).unwrap();
        let (e0, a0) = endpoint_and_average_fbm(n, 0.75).unwrap();
        end = end.max((e.abs() / 2.5f64.sqrt() - 1.0).abs());
        // align the arbitrary eigenvector sign through the endpoint value
        let a = s.average(n).unwrap() * e.signum() * e0.signum();
        avg = avg.max((a / a0 - 1.0).abs());
    }
    outcome(end <= 0.05 && avg <= 0.02, format!("max endpoint deviation {end:.1e}, max average deviation {avg:.2e}"))
}

fn noise_structure() -> Outcome {
    let k = KernelSpec::fbn(0.75).unwrap();
    let s = reference_spectrum_with(&k, ReferenceConfig::new(1000, 30)).unwrap();
    let mut parity = 0.0f64;
    for n in 1..=20 {
        let sg = if n % 2 == 1 { 1.0 } else { -1.0 };
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            parity = parity.max((eigenfunction_at(&s, n, x).unwrap() - sg * eigenfunction_at(&s, n, 1.0 - x).unwrap()).abs());
        }
    }
    let c_of = |h: f64, ev: &[f64]| {
        let pre = HurstParams::fbn(h).unwrap().lambda_prefactor();
        (5..=30)
            .map(|n| {
                let nu = (ev[n - 1] / pre).powf(1.0 / (1.0 - 2.0 * h));
                n as f64 * (nu - nu_fbn(n, h, Order::SecondOrder).unwrap()).abs()
            })
            .fold(0.0f64, f64::max)
    };
    let c75 = c_of(0.75, &s.eigenvalues);
    // H < 1/2 goes through the inverse kernel κ
    let k = KernelSpec::fbn(0.25).unwrap();
    let s = reference_spectrum_with(&k, ReferenceConfig::new(1000, 30).unchecked()).unwrap();
    let c25 = c_of(0.25, &s.eigenvalues);
    outcome(
        parity <= 1e-4 && c75 <= 10.0 && c25 <= 20.0 && s.scheme == Scheme::CellGalerkin,
        format!("parity {parity:.1e}, C(0.75) = {c75:.3}, C(0.25) = {c25:.3} via {:?}", s.scheme),
    )
}

fn phase_transition() -> Outcome {
    let eps: Vec<f64> = (0..9).map(|k| 10f64.powf(-2.0 - 0.5 * k as f64)).collect();
    let a = perturbation_rates(0.8, &eps).unwrap();
    let b = perturbation_rates(0.6, &eps).unwrap();
    let c = perturbation_rates(2.0 / 3.0, &eps).unwrap();
    let pass = (a.l2_slope - 1.0 / 3.0).abs() <= 0.1
        && (b.l2_slope - 1.0).abs() <= 0.1
        && (a.endpoint_slope + 0.5).abs() <= 0.05
        && (b.endpoint_slope + 0.5).abs() <= 0.05
        && c.sqrt_log_r2 >= 0.98;
    outcome(
        pass,
        format!(
            "slopes {:.4} (H=0.8), {:.4} (H=0.6); endpoint {:.4}, {:.4}; R2 at 2/3 {:.5}",
            a.l2_slope, b.l2_slope, a.endpoint_slope, b.endpoint_slope, c.sqrt_log_r2
        ),
    )
}

fn filtering() -> Outcome {
    let exact = p_inf(0.5, 1.0).unwrap();
    let mut best = (0.0, f64::MIN);
    for k in 1..100 {
        let h = k as f64 / 100.0;
        let v = p_inf(h, 1.0).unwrap();
        if v > best.1 {
            best = (h, v);
        }
    }
    let r = filtering_error(0.75, 1.0, &[1e4]).unwrap();
    let rel = (r.p_t[0] - r.p_inf).abs() / r.p_inf;
    outcome(
        exact == 1.0 && (best.0 - 2.0 / 3.0).abs() <= 0.01 && rel <= 0.02,
        format!("P_inf(0.5,1) = {exact}, argmax H = {}, |P_T/P_inf - 1| at T=1e4 = {rel:.1e}", best.0),
    )
}

fn sampler() -> Outcome {
    let g: Vec<f64> = (0..=25).map(|k| k as f64 / 25.0).collect();
    let mut z = Vec::new();
    let mut same = true;
    for h in [0.5, 0.75] {
        let s = kl_sample(h, 200, &g, 10_000, 2024).unwrap();
        z.push(empirical_cov_check(&s).unwrap().max_z);
        let again = kl_sample(h, 200, &g, 50, 2024).unwrap();
        same &= again.paths[..] == s.paths[..50];
    }
    outcome(z.iter().all(|&v| v <= 4.0) && same, format!("max z {:.3} (H=0.5), {:.3} (H=0.75), reproducible {same}", z[0], z[1]))
}

#[test]
fn acceptance() {
    let mut t1 = Duration::ZERO;
    let results = [
        brownian(&mut t1),
        figure_errors(),
        residuals(),
        cauchy_gate(),
        trace_identity(),
        boundary_data(),
        noise_structure(),
        phase_transition(),
        filtering(),
        sampler(),
    ];
    // written to the raw handle so the lines survive output capture
    let mut err = std::io::stderr().lock();
    for (i, r) in results.iter().enumerate() {
        let _ = writeln!(
            err,
            "criterion {:>2}: {} | {}",
            i + 1,
            if r.pass { "PASS" } else { "FAIL" },
            r.detail
        );
    }
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, r)| !r.pass).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
