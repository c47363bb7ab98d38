//! Experiment drivers behind the `muskat` command line.
//!
//! Every driver takes a validated [`RunConfig`] and an output directory,
//! writes its artifacts there and returns an [`Outcome`]. Configuration
//! problems are reported as `Err`; a run that completes but fails its own
//! pass criterion is reported through `Outcome::passed`.

pub mod config;
pub mod output;
pub mod plot;
pub mod verify;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{MuskatError, Result};
use crate::evolution::{
    bootstrap_monitor, rk_step, run_with_observer, BootstrapReport, Stepper, Termination,
};
use crate::geometry::{from_htheta, init_profile, Grid1D, InitialReport, PhysicalParams, Shape};
use crate::norms::NormReport;
use crate::spectral;
use crate::velocity::{linearized_symbol, rhs_twophase, Quadrature};

use config::{RunConfig, SnapshotFormat};
use output::{ensure_dir, write_json, CsvWriter};
use verify::IdentityRecord;

/// Result of one command.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub passed: bool,
    /// Human-readable lines for the terminal.
    pub messages: Vec<String>,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    fn new(passed: bool) -> Self {
        Self {
            passed,
            messages: Vec::new(),
            files: Vec::new(),
        }
    }

    fn say(&mut self, line: impl Into<String>) {
        self.messages.push(line.into());
    }
}

fn config_error(e: MuskatError) -> MuskatError {
    match e {
        MuskatError::Config(_) | MuskatError::Io(_) | MuskatError::Parse { .. } => e,
        other => MuskatError::Config(other.to_string()),
    }
}

/// Parameters, grid and sampled initial data for gap `sigma`.
fn setup(
    cfg: &RunConfig,
    sigma: f64,
) -> Result<(PhysicalParams, Grid1D, crate::geometry::InterfaceState, InitialReport)> {
    let params = cfg.params.physical()?.with_sigma(sigma).map_err(config_error)?;
    let grid = cfg.grid.build(sigma)?;
    let (state, report) =
        init_profile(&cfg.profile, &grid, &params, cfg.stepper.k).map_err(config_error)?;
    Ok((params, grid, state, report))
}

fn sigma_tag(sigma: f64) -> String {
    format!("{sigma:e}").replace('.', "p").replace('-', "m")
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    config_sha256: &'a str,
    sigma: f64,
    n: usize,
    dt: f64,
    steps: usize,
    termination: Termination,
    lifespan: f64,
    initial: InitialReport,
    final_norms: Option<&'a NormReport>,
    bootstrap: Option<BootstrapReport>,
}

/// Evolves the configured profile to the horizon, writing `norms.csv`,
/// `summary.json` and optionally snapshots and charts. Early termination is
/// recorded in the summary and does not fail the command.
pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    ensure_dir(out)?;
    let hash = cfg.hash();
    let (params, grid, initial, init_report) = setup(cfg, cfg.params.sigma)?;
    let norms_path = out.join("norms.csv");
    let mut csv = CsvWriter::create(&norms_path, NormReport::CSV_HEADER, &hash)?;
    let mut write_err: Option<MuskatError> = None;
    let traj = run_with_observer(&initial, &params, &grid, &cfg.stepper, |r, _| {
        if write_err.is_none() {
            if let Err(e) = csv.row(&r.csv_row()) {
                write_err = Some(e);
            }
        }
    })?;
    if let Some(e) = write_err {
        return Err(e);
    }
    let mut outcome = Outcome::new(true);
    outcome.files.push(csv.finish()?);

    match cfg.output.snapshots {
        SnapshotFormat::None => {}
        fmt => {
            let dir = out.join("snapshots");
            ensure_dir(&dir)?;
            for (i, s) in traj.snapshots.iter().enumerate() {
                let path = match fmt {
                    SnapshotFormat::Json => {
                        let p = dir.join(format!("snapshot_{i:05}.json"));
                        output::write_snapshot_json(&p, s, &hash)?;
                        p
                    }
                    _ => {
                        let p = dir.join(format!("snapshot_{i:05}.bin"));
                        output::write_snapshot_binary(&p, s, &hash)?;
                        p
                    }
                };
                outcome.files.push(path);
            }
        }
    }

    let bootstrap = bootstrap_monitor(&traj).ok();
    let summary = SimulateSummary {
        config_sha256: &hash,
        sigma: params.sigma,
        n: grid.n(),
        dt: traj.dt,
        steps: traj.steps,
        termination: traj.termination,
        lifespan: traj.lifespan,
        initial: init_report,
        final_norms: traj.reports.last(),
        bootstrap,
    };
    let summary_path = out.join("summary.json");
    write_json(&summary_path, &summary)?;
    outcome.files.push(summary_path);
    if cfg.output.plots {
        outcome.files.extend(plot::plot_file(&norms_path, out)?);
    }
    outcome.say(format!(
        "sigma={} n={} dt={:.3e} steps={} termination={} lifespan={:.6}",
        params.sigma,
        grid.n(),
        traj.dt,
        traj.steps,
        traj.termination.as_str(),
        traj.lifespan
    ));
    if let Some(b) = bootstrap {
        outcome.say(format!(
            "energy_ratio={:.6} gap_ratio_growth={:.6} gamma_min={:.6} min_distance={:.6}",
            b.energy_ratio, b.gap_ratio_growth, b.gamma_min, b.min_distance
        ));
    }
    Ok(outcome)
}

/// One row of the gap sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub sigma: f64,
    pub n: usize,
    pub dt: f64,
    pub steps: usize,
    pub termination: Termination,
    pub lifespan: f64,
    pub gap_ratio_initial: f64,
    pub bootstrap: BootstrapReport,
    pub pass: bool,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str = "sigma,n,dt,steps,termination,lifespan,energy_ratio,gap_ratio_initial,gap_ratio_sup,gap_ratio_growth,gamma_min,min_distance,pass";

    fn csv_row(&self) -> String {
        let b = &self.bootstrap;
        format!(
            "{:e},{},{:e},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}",
            self.sigma,
            self.n,
            self.dt,
            self.steps,
            self.termination.as_str(),
            self.lifespan,
            b.energy_ratio,
            self.gap_ratio_initial,
            b.gap_ratio_sup,
            b.gap_ratio_growth,
            b.gamma_min,
            b.min_distance,
            self.pass
        )
    }
}

fn sweep_row(cfg: &RunConfig, sigma: f64, out: &Path, hash: &str) -> Result<(SweepRow, PathBuf)> {
    let (params, grid, initial, init_report) = setup(cfg, sigma)?;
    let path = out.join(format!("norms_sigma_{}.csv", sigma_tag(sigma)));
    let mut csv = CsvWriter::create(&path, NormReport::CSV_HEADER, hash)?;
    let mut write_err = None;
    let traj = run_with_observer(&initial, &params, &grid, &cfg.stepper, |r, _| {
        if write_err.is_none() {
            write_err = csv.row(&r.csv_row()).err();
        }
    })?;
    if let Some(e) = write_err {
        return Err(e);
    }
    let path = csv.finish()?;
    let bootstrap = bootstrap_monitor(&traj)?;
    let pass = traj.termination == Termination::Horizon
        && bootstrap.gap_ratio_growth <= cfg.sweep.gap_ratio_bound
        && bootstrap.energy_ratio <= cfg.sweep.energy_bound;
    Ok((
        SweepRow {
            sigma,
            n: grid.n(),
            dt: traj.dt,
            steps: traj.steps,
            termination: traj.termination,
            lifespan: traj.lifespan,
            gap_ratio_initial: init_report.gap_ratio,
            bootstrap,
            pass,
        },
        path,
    ))
}

/// Runs the configured profile for every gap in `params.sigmas` and checks
/// that the bootstrap quantities stay bounded uniformly in the gap.
pub fn sigma_sweep(cfg: &RunConfig, out: &Path) -> Result<(Outcome, Vec<SweepRow>)> {
    ensure_dir(out)?;
    let hash = cfg.hash();
    let sigmas = cfg.params.sigma_list()?;
    let results: Vec<Result<(SweepRow, PathBuf)>> = sigmas
        .par_iter()
        .map(|&s| sweep_row(cfg, s, out, &hash))
        .collect();
    let mut rows = Vec::new();
    let mut outcome = Outcome::new(true);
    outcome.say(format!(
        "resolution rule: smallest power of two n >= {} with 2L/n <= sigma/4{}",
        cfg.grid.n,
        if cfg.grid.escalate { "" } else { " (disabled)" }
    ));
    for r in results {
        let (row, path) = r?;
        outcome.files.push(path);
        outcome.say(format!(
            "sigma={:<8} n={:<5} termination={:<15} gap_ratio_growth={:.4} energy_ratio={:.4} {}",
            row.sigma,
            row.n,
            row.termination.as_str(),
            row.bootstrap.gap_ratio_growth,
            row.bootstrap.energy_ratio,
            if row.pass { "PASS" } else { "FAIL" }
        ));
        outcome.passed &= row.pass;
        rows.push(row);
    }
    let csv_path = out.join("sweep.csv");
    let mut csv = CsvWriter::create(&csv_path, SweepRow::CSV_HEADER, &hash)?;
    for row in &rows {
        csv.row(&row.csv_row())?;
    }
    outcome.files.push(csv.finish()?);
    let json_path = out.join("sweep.json");
    write_json(&json_path, &rows)?;
    outcome.files.push(json_path);
    if cfg.output.plots {
        outcome.files.extend(plot::plot_file(&csv_path, out)?);
    }
    Ok((outcome, rows))
}

/// Distance between the three-phase and two-phase evolutions for one gap.
#[derive(Debug, Clone, Serialize)]
pub struct TwophaseRow {
    pub sigma: f64,
    pub n: usize,
    pub termination: Termination,
    /// `sup_t max(|f - f_2p|_inf, |g - f_2p|_inf)`.
    pub deviation: f64,
}

fn twophase_row(cfg: &RunConfig, sigma: f64) -> Result<TwophaseRow> {
    let (params, grid, initial, _) = setup(cfg, sigma)?;
    let mut st = Stepper::new(&initial, &params, &grid, &cfg.stepper)?;
    let quad = Quadrature::new(&grid, cfg.stepper.kernel_sum);
    let jump = params.rho2 - params.rho0;
    let mut f2 = initial.f.clone();
    let dist = |st: &Stepper, f2: &[f64]| {
        let iface = from_htheta(st.state(), &params);
        iface
            .f
            .iter()
            .zip(&iface.g)
            .zip(f2)
            .map(|((a, b), c)| (a - c).abs().max((b - c).abs()))
            .fold(0.0, f64::max)
    };
    let mut deviation = dist(&st, &f2);
    let termination = loop {
        if let Some(t) = st.check() {
            break t;
        }
        if let Err(e) = st.step() {
            match Termination::from_error(&e) {
                Some(t) => break t,
                None => return Err(e),
            }
        }
        f2 = rk_step(cfg.stepper.integrator, &f2, st.dt(), |v| rhs_twophase(v, jump, &quad))?;
        deviation = deviation.max(dist(&st, &f2));
    };
    Ok(TwophaseRow {
        sigma,
        n: grid.n(),
        termination,
        deviation,
    })
}

/// Compares the three-phase flow with the two-phase flow from `f0 = g0` for
/// each gap. Passes when every run reaches the horizon and the deviation
/// strictly decreases with the gap (or vanishes identically).
pub fn twophase_limit(cfg: &RunConfig, out: &Path) -> Result<(Outcome, Vec<TwophaseRow>)> {
    if !cfg.profile.has_equal_interfaces() {
        return Err(MuskatError::Config(
            "the two-phase comparison needs f0 = g0 (equal f and g, or theta_over_sigma absent)".into(),
        ));
    }
    ensure_dir(out)?;
    let hash = cfg.hash();
    let sigmas = cfg.params.sigma_list()?;
    let rows: Vec<TwophaseRow> = sigmas
        .par_iter()
        .map(|&s| twophase_row(cfg, s))
        .collect::<Result<_>>()?;
    let all_zero = rows.iter().all(|r| r.deviation == 0.0);
    let decreasing = rows.windows(2).all(|w| w[1].deviation < w[0].deviation);
    let horizon = rows.iter().all(|r| r.termination == Termination::Horizon);
    let mut outcome = Outcome::new(horizon && (all_zero || decreasing));
    let path = out.join("twophase.csv");
    let mut csv = CsvWriter::create(&path, "sigma,n,termination,deviation", &hash)?;
    for r in &rows {
        csv.row(&format!("{:e},{},{},{:e}", r.sigma, r.n, r.termination.as_str(), r.deviation))?;
        outcome.say(format!(
            "sigma={:<8} n={:<5} termination={:<15} deviation={:.6e}",
            r.sigma,
            r.n,
            r.termination.as_str(),
            r.deviation
        ));
    }
    outcome.files.push(csv.finish()?);
    outcome.say(if all_zero {
        "deviation vanishes identically".to_string()
    } else if decreasing {
        "deviation strictly decreasing in sigma: PASS".to_string()
    } else {
        "deviation not strictly decreasing in sigma: FAIL".to_string()
    });
    Ok((outcome, rows))
}

/// Fitted against predicted decay rate of one eigen-direction.
#[derive(Debug, Clone, Serialize)]
pub struct RateRecord {
    pub eigenvalue: f64,
    /// `None` when the initial data does not excite the direction.
    pub fitted: Option<f64>,
    pub rel_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearReport {
    pub mode: u32,
    pub xi: f64,
    pub sigma: f64,
    pub n: usize,
    pub termination: Termination,
    pub rates: Vec<RateRecord>,
    /// `|c_{2m}| / |c_m|` at the final time, maximised over `f` and `g`.
    pub harmonic_ratio: f64,
    pub pass: bool,
}

fn single_mode(cfg: &RunConfig) -> Result<u32> {
    let mut mode = None;
    for s in cfg.profile.all_shapes() {
        match *s {
            Shape::Mode { amplitude, mode: m, .. } => {
                if amplitude.abs() > 1e-5 {
                    return Err(MuskatError::Config(format!(
                        "linear check needs amplitudes at most 1e-5 (got {amplitude})"
                    )));
                }
                if m == 0 || mode.is_some_and(|p| p != m) {
                    return Err(MuskatError::Config(
                        "linear check needs one nonzero mode number shared by all shapes".into(),
                    ));
                }
                mode = Some(m);
            }
            _ => {
                return Err(MuskatError::Config(
                    "linear check accepts only `mode` shapes".into(),
                ))
            }
        }
    }
    mode.ok_or_else(|| MuskatError::Config("linear check needs a `mode` shape".into()))
}

fn least_squares_slope(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let sxy: f64 = t.iter().zip(y).map(|(a, b)| (a - tm) * (b - ym)).sum();
    let sxx: f64 = t.iter().map(|a| (a - tm) * (a - tm)).sum();
    sxy / sxx
}

/// Evolves an infinitesimal single-mode perturbation of the flat state and
/// compares the decay of its eigen-components with the linearized symbol.
pub fn linear_check(cfg: &RunConfig, out: &Path) -> Result<(Outcome, LinearReport)> {
    let m = single_mode(cfg)?;
    ensure_dir(out)?;
    let hash = cfg.hash();
    let (params, grid, initial, _) = setup(cfg, cfg.params.sigma)?;
    let idx = m as usize;
    if 3 * idx > grid.n() {
        return Err(MuskatError::Config(format!(
            "mode {m} is removed by dealiasing on n = {}",
            grid.n()
        )));
    }
    let xi = grid.wavenumber(idx);
    let symbol = linearized_symbol(xi, &params)?;
    let left = symbol.left_eigenvectors();
    let project = |f: &[f64], g: &[f64]| {
        let cf = spectral::forward(&grid, f);
        let cg = spectral::forward(&grid, g);
        let z = left.map(|l| (cf[idx] * l[0] + cg[idx] * l[1]).norm());
        let h2 = if 2 * idx < grid.n() / 2 {
            let r = |c: &[crate::Complex64]| {
                if c[idx].norm() > 0.0 {
                    c[2 * idx].norm() / c[idx].norm()
                } else {
                    0.0
                }
            };
            r(&cf).max(r(&cg))
        } else {
            0.0
        };
        (z, h2)
    };

    let mut st = Stepper::new(&initial, &params, &grid, &cfg.stepper)?;
    let mut times = vec![0.0];
    let (z0, _) = project(&initial.f, &initial.g);
    let mut zs = vec![z0];
    let mut harmonic = 0.0;
    let termination = loop {
        if let Some(t) = st.check() {
            break t;
        }
        if let Err(e) = st.step() {
            match Termination::from_error(&e) {
                Some(t) => break t,
                None => return Err(e),
            }
        }
        let iface = from_htheta(st.state(), &params);
        let (z, h2) = project(&iface.f, &iface.g);
        times.push(st.state().t);
        zs.push(z);
        harmonic = h2;
    };

    let zmax = z0[0].max(z0[1]);
    let big = symbol.eigenvalues[0].abs().max(symbol.eigenvalues[1].abs());
    let rates: Vec<RateRecord> = (0..2)
        .map(|i| {
            let lam = symbol.eigenvalues[i];
            if zmax == 0.0 || z0[i] < 1e-3 * zmax || times.len() < 3 {
                return RateRecord {
                    eigenvalue: lam,
                    fitted: None,
                    rel_err: 0.0,
                };
            }
            let logs: Vec<f64> = zs.iter().map(|z| z[i].ln()).collect();
            let fitted = least_squares_slope(&times, &logs);
            let scale = if lam.abs() < 1e-3 * big { big } else { lam.abs() };
            RateRecord {
                eigenvalue: lam,
                fitted: Some(fitted),
                rel_err: (fitted - lam).abs() / scale,
            }
        })
        .collect();
    let pass = termination == Termination::Horizon
        && rates.iter().all(|r| r.rel_err <= cfg.linear.tolerance)
        && rates.iter().any(|r| r.fitted.is_some())
        && harmonic <= cfg.linear.harmonic_limit;

    let path = out.join("linear.csv");
    let mut csv = CsvWriter::create(&path, "t,z1,z2", &hash)?;
    for (t, z) in times.iter().zip(&zs) {
        csv.row(&format!("{t:e},{:e},{:e}", z[0], z[1]))?;
    }
    let report = LinearReport {
        mode: m,
        xi,
        sigma: params.sigma,
        n: grid.n(),
        termination,
        rates,
        harmonic_ratio: harmonic,
        pass,
    };
    let mut outcome = Outcome::new(pass);
    outcome.files.push(csv.finish()?);
    let json = out.join("linear.json");
    write_json(&json, &report)?;
    outcome.files.push(json);
    for (i, r) in report.rates.iter().enumerate() {
        outcome.say(match r.fitted {
            Some(f) => format!(
                "direction {}: predicted {:.8e} fitted {:.8e} rel_err {:.3e}",
                i + 1,
                r.eigenvalue,
                f,
                r.rel_err
            ),
            None => format!("direction {}: predicted {:.8e} not excited", i + 1, r.eigenvalue),
        });
    }
    outcome.say(format!(
        "harmonic ratio {:.3e}; termination {}; {}",
        harmonic,
        termination.as_str(),
        if pass { "PASS" } else { "FAIL" }
    ));
    Ok((outcome, report))
}

/// Runs every kernel suite and writes `verify.json`.
pub fn verify_kernels(cfg: &RunConfig, out: &Path) -> Result<(Outcome, Vec<IdentityRecord>)> {
    ensure_dir(out)?;
    let records = verify::verify_all(&cfg.verify);
    let mut outcome = Outcome::new(!records.iter().any(IdentityRecord::blocking_failure));
    if cfg.verify.samples == 0 {
        outcome.say("warning: zero samples requested; the suites pass vacuously");
    }
    for r in &records {
        outcome.say(format!(
            "{:<24} samples={:<7} max_rel_err={:.3e} {}",
            r.identity, r.samples, r.max_rel_err, r.status
        ));
    }
    let path = out.join("verify.json");
    write_json(&path, &records)?;
    outcome.files.push(path);
    Ok((outcome, records))
}
