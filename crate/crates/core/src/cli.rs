//! Command-line front end. Exit codes: 0 success, 2 invalid input,
//! 3 numerical failure, 1 I/O.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{Map, Value};

use crate::applications::{
    a_h, filtering_error, fit_line, mixed_bracket, p_inf, small_ball, solve_perturbed, Forcing,
};
use crate::asymptotics::{eigfun_fbm, eigfun_fbn, lambda_fbm, lambda_fbn, nu_fbm, nu_fbn, Order};
use crate::error::Error;
use crate::iasolver::{eigenfunction_fbm, eigenfunction_fbn, solve_fbn, solve_nu_fbm};
use crate::nystrom::{eigenfunction_at, reference_spectrum_with, ReferenceConfig, SymmetricSpectrum};
use crate::operators::{KernelFamily, KernelSpec};
use crate::sampler::{empirical_cov_check, kl_sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Fbm,
    Fbn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "fracspec", version, about = "Spectra of fractional Brownian covariance operators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalue table: asymptotic, integro-algebraic and reference values.
    Eigs {
        #[arg(long, value_enum, default_value_t = Model::Fbm)]
        model: Model,
        #[arg(long)]
        hurst: f64,
        #[arg(long, default_value_t = 10)]
        n_max: usize,
        /// Reference grid size (default max(8·n_max, 400)).
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Eigenfunctions on a uniform grid, long format.
    Eigfun {
        #[arg(long, value_enum, default_value_t = Model::Fbm)]
        model: Model,
        #[arg(long)]
        hurst: f64,
        #[arg(long, default_value_t = 5)]
        n_max: usize,
        /// Number of output intervals.
        #[arg(long, default_value_t = 200)]
        grid: usize,
    },
    /// Small-ball rate, power and distortion constant.
    Smallball {
        #[arg(long)]
        hurst: f64,
        /// Modes in the distortion product.
        #[arg(long, default_value_t = 100)]
        modes: usize,
    },
    /// Singularly perturbed noise equation with f = 1.
    Perturbed {
        #[arg(long)]
        hurst: f64,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1e-2, 1e-3, 1e-4, 1e-5])]
        eps: Vec<f64>,
    },
    /// Filtering error P_T and the mixed-fBm bracket.
    Filter {
        #[arg(long)]
        hurst: f64,
        #[arg(long, default_value_t = 1.0)]
        gain: f64,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1e2, 1e3, 1e4])]
        t_grid: Vec<f64>,
    },
    /// Karhunen–Loève fBm paths, long format.
    Sample {
        #[arg(long)]
        hurst: f64,
        #[arg(long, default_value_t = 200)]
        modes: usize,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of time intervals.
        #[arg(long, default_value_t = 100)]
        grid: usize,
    },
}

/// Validated run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: Model,
    pub hurst: f64,
    pub n_max: usize,
    pub grid: usize,
}

impl RunConfig {
    pub fn new(model: Model, hurst: f64, n_max: usize, grid: Option<usize>) -> Result<RunConfig, Error> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::Config(format!("--hurst must lie in (0,1), got {hurst}")));
        }
        if model == Model::Fbn && hurst == 0.5 {
            return Err(Error::Config("--model fbn needs H != 0.5".into()));
        }
        if n_max == 0 {
            return Err(Error::Config("--n-max must be positive".into()));
        }
        let grid = grid.unwrap_or((8 * n_max).max(400));
        if grid < 8 * n_max {
            return Err(Error::Config(format!("--grid {grid} below 8·n_max = {}", 8 * n_max)));
        }
        Ok(RunConfig { model, hurst, n_max, grid })
    }

    fn kernel(&self) -> Result<KernelSpec, Error> {
        match self.model {
            Model::Fbm => KernelSpec::fbm(self.hurst),
            Model::Fbn => KernelSpec::fbn(self.hurst),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
}

/// Column-major table with stable headers.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(headers: &[&'static str]) -> Table {
        Table { headers: headers.to_vec(), rows: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.headers.iter().position(|h| *h == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match r[j] {
                    Cell::Int(i) => i as f64,
                    Cell::Num(x) => x,
                })
                .collect(),
        )
    }

    pub fn write_csv(&self, w: impl Write) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.headers)?;
        for r in &self.rows {
            out.write_record(r.iter().map(|c| match c {
                Cell::Int(i) => i.to_string(),
                Cell::Num(x) if x.is_finite() => format!("{x:.16e}"),
                Cell::Num(x) => x.to_string(),
            }))?;
        }
        out.flush()?;
        Ok(())
    }

    /// `{header: [values…]}`; non-finite numbers become null.
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        for (j, h) in self.headers.iter().enumerate() {
            let col = self
                .rows
                .iter()
                .map(|r| match r[j] {
                    Cell::Int(i) => Value::from(i),
                    Cell::Num(x) => serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number),
                })
                .collect();
            m.insert(h.to_string(), Value::Array(col));
        }
        Value::Object(m)
    }
}

fn pct(reference: f64, approx: f64) -> f64 {
    100.0 * (reference - approx) / reference
}

fn reference(cfg: &RunConfig) -> Result<SymmetricSpectrum, Error> {
    let k = cfg.kernel()?;
    let c = ReferenceConfig::new(cfg.grid, cfg.n_max);
    match reference_spectrum_with(&k, c) {
        Err(Error::Resolution { reliable, .. }) => {
            eprintln!("warning: only {reliable} reference eigenvalues stable at grid {}", cfg.grid);
            reference_spectrum_with(&k, c.unchecked())
        }
        r => r,
    }
}

pub fn cmd_eigs(cfg: &RunConfig) -> Result<Table, Error> {
    let spec = reference(cfg)?;
    let h = cfg.hurst;
    let ia: Vec<f64> = (1..=cfg.n_max)
        .into_par_iter()
        .map(|n| match cfg.model {
            Model::Fbm if h == 0.5 => lambda_fbm(n, h, Order::SecondOrder),
            Model::Fbm => solve_nu_fbm(n, h).map(|s| s.lambda()),
            Model::Fbn => solve_fbn(n, h).map(|s| s.lambda()),
        })
        .collect::<Result<_, _>>()?;
    let mut t = Table::new(&[
        "n",
        "nu_first",
        "nu_second",
        "lambda_first",
        "lambda_second",
        "lambda_iasolver",
        "lambda_nystrom",
        "rel_err_first_pct",
        "rel_err_second_pct",
    ]);
    for n in 1..=cfg.n_max {
        let (nu1, nu2, l1, l2) = match cfg.model {
            Model::Fbm => (
                nu_fbm(n, h, Order::FirstOrder)?,
                nu_fbm(n, h, Order::SecondOrder)?,
                lambda_fbm(n, h, Order::FirstOrder)?,
                lambda_fbm(n, h, Order::SecondOrder)?,
            ),
            Model::Fbn => (
                nu_fbn(n, h, Order::FirstOrder)?,
                nu_fbn(n, h, Order::SecondOrder)?,
                lambda_fbn(n, h, Order::FirstOrder)?,
                lambda_fbn(n, h, Order::SecondOrder)?,
            ),
        };
        let lr = spec.eigenvalues[n - 1];
        t.rows.push(vec![
            Cell::Int(n as i64),
            Cell::Num(nu1),
            Cell::Num(nu2),
            Cell::Num(l1),
            Cell::Num(l2),
            Cell::Num(ia[n - 1]),
            Cell::Num(lr),
            Cell::Num(pct(lr, l1)),
            Cell::Num(pct(lr, l2)),
        ]);
    }
    Ok(t)
}

pub fn cmd_eigfun(cfg: &RunConfig) -> Result<Table, Error> {
    let h = cfg.hurst;
    let n_grid = (8 * cfg.n_max).max(800);
    let spec = reference(&RunConfig { grid: n_grid, ..cfg.clone() })?;
    let xs: Vec<f64> = (0..=cfg.grid).map(|k| k as f64 / cfg.grid as f64).collect();
    let blocks: Vec<Vec<Vec<Cell>>> = (1..=cfg.n_max)
        .into_par_iter()
        .map(|n| {
            let ia = match cfg.model {
                Model::Fbm if h == 0.5 => None,
                Model::Fbm => Some(eigenfunction_fbm(&solve_nu_fbm(n, h)?)?),
                Model::Fbn => Some(eigenfunction_fbn(&solve_fbn(n, h)?)?),
            };
            let asym = |x: f64| match cfg.model {
                Model::Fbm => eigfun_fbm(n, h, x),
                Model::Fbn => eigfun_fbn(n, h, x),
            };
            let mut rows = Vec::with_capacity(xs.len());
            let mut dot = 0.0;
            let mut vals = Vec::with_capacity(xs.len());
            for &x in &xs {
                let a = asym(x)?;
                let r = eigenfunction_at(&spec, n, x)?;
                dot += a * r;
                vals.push((x, a, ia.as_ref().map_or(a, |f| f.eval(x)), r));
            }
            // reference eigenvectors carry an arbitrary sign
            let s = if dot < 0.0 { -1.0 } else { 1.0 };
            for (x, a, i, r) in vals {
                rows.push(vec![Cell::Int(n as i64), Cell::Num(x), Cell::Num(a), Cell::Num(i), Cell::Num(s * r)]);
            }
            Ok(rows)
        })
        .collect::<Result<_, Error>>()?;
    let mut t = Table::new(&["n", "x", "phi_asymptotic", "phi_iasolver", "phi_nystrom"]);
    t.rows = blocks.into_iter().flatten().collect();
    Ok(t)
}

pub fn cmd_smallball(hurst: f64, modes: usize) -> Result<Table, Error> {
    RunConfig::new(Model::Fbm, hurst, 1, None)?;
    let s = small_ball(hurst, modes)?;
    let mut t = Table::new(&["hurst", "beta", "gamma", "c_d", "c_d_error", "n_used"]);
    t.rows.push(vec![
        Cell::Num(s.h),
        Cell::Num(s.beta),
        Cell::Num(s.gamma),
        Cell::Num(s.c_d),
        Cell::Num(s.c_d_error),
        Cell::Int(s.n_used as i64),
    ]);
    Ok(t)
}

pub fn cmd_perturbed(hurst: f64, eps: &[f64]) -> Result<Table, Error> {
    a_h(hurst)?;
    if eps.len() < 2 {
        return Err(Error::Config("--eps needs at least two values".into()));
    }
    let k = KernelSpec::new(KernelFamily::FbnDirect, hurst)?;
    let sols = eps
        .par_iter()
        .map(|&e| solve_perturbed(&k, e, Forcing::One))
        .collect::<Result<Vec<_>, _>>()?;
    let le: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let l2: Vec<f64> = sols.iter().map(|s| s.diagnostics.l2_error.unwrap_or(f64::NAN)).collect();
    let end: Vec<f64> = sols.iter().map(|s| s.diagnostics.endpoint_value).collect();
    let (slope, _, _) = fit_line(&le, &l2.iter().map(|v| v.ln()).collect::<Vec<_>>())?;
    let (end_slope, _, _) = fit_line(&le, &end.iter().map(|v| v.ln()).collect::<Vec<_>>())?;
    let mut t = Table::new(&["eps", "l2_error", "endpoint_value", "weak_error", "slope", "endpoint_slope"]);
    for (i, s) in sols.iter().enumerate() {
        t.rows.push(vec![
            Cell::Num(eps[i]),
            Cell::Num(l2[i]),
            Cell::Num(end[i]),
            Cell::Num(s.diagnostics.weak_error.unwrap_or(f64::NAN)),
            Cell::Num(slope),
            Cell::Num(end_slope),
        ]);
    }
    Ok(t)
}

/// Maximiser of P_∞(·, gain) over H = 0.01, …, 0.99.
pub fn p_inf_argmax(gain: f64) -> Result<f64, Error> {
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for k in 1..100 {
        let h = k as f64 / 100.0;
        let v = p_inf(h, gain)?;
        if v > best.1 {
            best = (h, v);
        }
    }
    Ok(best.0)
}

pub fn cmd_filter(hurst: f64, gain: f64, t_grid: &[f64]) -> Result<Table, Error> {
    RunConfig::new(Model::Fbm, hurst, 1, None)?;
    let r = filtering_error(hurst, gain, t_grid)?;
    if r.truncated {
        eprintln!("warning: truncated spectral tail exceeds 1% of P_T");
    }
    let arg = p_inf_argmax(gain)?;
    let mut t = Table::new(&["t", "p_t", "p_inf", "tail_fraction", "bracket", "bracket_derivative", "argmax_hurst"]);
    for (i, &tt) in t_grid.iter().enumerate() {
        let (b, d) = if hurst > 0.5 { mixed_bracket(tt, hurst)? } else { (f64::NAN, f64::NAN) };
        t.rows.push(vec![
            Cell::Num(tt),
            Cell::Num(r.p_t[i]),
            Cell::Num(r.p_inf),
            Cell::Num(r.tail_fraction[i]),
            Cell::Num(b),
            Cell::Num(d),
            Cell::Num(arg),
        ]);
    }
    Ok(t)
}

pub fn cmd_sample(hurst: f64, modes: usize, count: usize, seed: u64, grid: usize) -> Result<Table, Error> {
    RunConfig::new(Model::Fbm, hurst, 1, None)?;
    if grid == 0 {
        return Err(Error::Config("--grid must be positive".into()));
    }
    let ts: Vec<f64> = (0..=grid).map(|k| k as f64 / grid as f64).collect();
    let s = kl_sample(hurst, modes, &ts, count, seed)?;
    if count >= 1000 {
        let c = empirical_cov_check(&s)?;
        eprintln!("covariance check: max z = {:.3}, reference modes = {}", c.max_z, s.n_reference);
    }
    let mut t = Table::new(&["path", "t", "x"]);
    for (i, p) in s.paths.iter().enumerate() {
        for (tt, x) in ts.iter().zip(p) {
            t.rows.push(vec![Cell::Int(i as i64), Cell::Num(*tt), Cell::Num(*x)]);
        }
    }
    Ok(t)
}

pub fn execute(command: &Command) -> Result<Table, Error> {
    match command {
        Command::Eigs { model, hurst, n_max, grid } => cmd_eigs(&RunConfig::new(*model, *hurst, *n_max, *grid)?),
        Command::Eigfun { model, hurst, n_max, grid } => {
            if *grid == 0 {
                return Err(Error::Config("--grid must be positive".into()));
            }
            let mut cfg = RunConfig::new(*model, *hurst, *n_max, None)?;
            cfg.grid = *grid;
            cmd_eigfun(&cfg)
        }
        Command::Smallball { hurst, modes } => cmd_smallball(*hurst, *modes),
        Command::Perturbed { hurst, eps } => cmd_perturbed(*hurst, eps),
        Command::Filter { hurst, gain, t_grid } => cmd_filter(*hurst, *gain, t_grid),
        Command::Sample { hurst, modes, count, seed, grid } => cmd_sample(*hurst, *modes, *count, *seed, *grid),
    }
}

fn emit(t: &Table, format: Format, out: Option<&PathBuf>) -> std::io::Result<()> {
    let mut w: Box<dyn Write> = match out {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    match format {
        Format::Csv => t.write_csv(&mut w).map_err(std::io::Error::other)?,
        Format::Json => {
            serde_json::to_writer(&mut w, &t.to_json())?;
            writeln!(w)?;
        }
    }
    w.flush()
}

/// Runs the CLI on `args` and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(t) => match emit(&t, cli.format, cli.out.as_ref()) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                2
            } else {
                3
            }
        }
    }
}
