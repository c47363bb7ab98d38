//! Time stepping of `(h, theta, gamma)` with runtime monitors.
//!
//! The strip width `gamma` is part of the evolved state. Each Runge-Kutta
//! stage evaluates the width equation at the stage fields and stage width.

use serde::{Deserialize, Serialize};

use crate::error::{MuskatError, Result};
use crate::geometry::{
    from_htheta, min_distance, to_htheta, Grid1D, HThetaState, InterfaceState, PhysicalParams,
};
use crate::norms::{self, NormReport};
use crate::spectral;
use crate::velocity::{rhs_htheta, rhs_twophase, KernelSum, Quadrature};

/// Time-step policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeStep {
    /// A fixed step (shortened so that it divides the horizon).
    Fixed(f64),
    /// `c_cfl * dx / delta_rho`.
    Cfl(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Classical fourth-order Runge-Kutta.
    #[default]
    Rk4,
    /// Three-stage strong-stability-preserving Runge-Kutta.
    SspRk3,
}

fn default_dt() -> TimeStep {
    TimeStep::Cfl(0.25)
}
fn default_horizon() -> f64 {
    0.5
}
fn default_c2() -> f64 {
    1.0
}
fn default_k() -> u32 {
    3
}
fn default_report_every() -> usize {
    10
}
fn default_tail() -> f64 {
    1e-10
}
fn default_collision() -> f64 {
    0.5
}
fn default_floor() -> f64 {
    1e-3
}

/// Stepping and monitoring parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperConfig {
    #[serde(default = "default_dt")]
    pub dt: TimeStep,
    #[serde(default)]
    pub integrator: Integrator,
    /// Constant in front of the width equation.
    #[serde(default = "default_c2")]
    pub c2: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Regularity index of the monitored norms.
    #[serde(default = "default_k")]
    pub k: u32,
    /// Steps between recorded reports.
    #[serde(default = "default_report_every")]
    pub report_every: usize,
    /// Largest admissible ratio of the dealiased-out spectral tail to the peak.
    #[serde(default = "default_tail")]
    pub tail_threshold: f64,
    /// Stop when the minimum distance drops below this multiple of sigma.
    #[serde(default = "default_collision")]
    pub collision_factor: f64,
    #[serde(default = "default_floor")]
    pub gamma_floor: f64,
    #[serde(default)]
    pub kernel_sum: KernelSum,
}

impl StepperConfig {
    pub fn new(horizon: f64) -> Self {
        Self {
            dt: default_dt(),
            integrator: Integrator::default(),
            c2: default_c2(),
            horizon,
            k: default_k(),
            report_every: default_report_every(),
            tail_threshold: default_tail(),
            collision_factor: default_collision(),
            gamma_floor: default_floor(),
            kernel_sum: KernelSum::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(MuskatError::Config(m));
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return bad(format!("horizon must be positive (got {})", self.horizon));
        }
        match self.dt {
            TimeStep::Fixed(v) | TimeStep::Cfl(v) if !(v.is_finite() && v > 0.0) => {
                return bad(format!("time step parameter must be positive (got {v})"))
            }
            _ => {}
        }
        if !(self.c2.is_finite() && self.c2 >= 0.0) {
            return bad(format!("c2 must be non-negative (got {})", self.c2));
        }
        if self.k < 3 {
            return bad(format!("k must be at least 3 (got {})", self.k));
        }
        if self.report_every == 0 {
            return bad("report_every must be at least 1".into());
        }
        if !(self.gamma_floor >= 0.0 && self.collision_factor >= 0.0 && self.tail_threshold > 0.0) {
            return bad("monitor thresholds must be non-negative".into());
        }
        Ok(())
    }

    /// Number of steps and step size for the horizon.
    pub fn schedule(&self, grid: &Grid1D, params: &PhysicalParams) -> (usize, f64) {
        let raw = match self.dt {
            TimeStep::Fixed(dt) => dt,
            TimeStep::Cfl(c) => c * grid.spacing() / params.delta_rho,
        };
        let steps = ((self.horizon / raw) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        (steps, self.horizon / steps as f64)
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Horizon,
    ResolutionLoss,
    Collision,
    WidthCollapse,
    #[serde(rename = "nan")]
    NonFinite,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Horizon => "horizon",
            Termination::ResolutionLoss => "resolution_loss",
            Termination::Collision => "collision",
            Termination::WidthCollapse => "width_collapse",
            Termination::NonFinite => "nan",
        }
    }

    pub fn from_error(e: &MuskatError) -> Option<Self> {
        match e {
            MuskatError::Collision { .. } => Some(Termination::Collision),
            MuskatError::ResolutionLoss(_) => Some(Termination::ResolutionLoss),
            MuskatError::WidthCollapse(_) => Some(Termination::WidthCollapse),
            MuskatError::NonFinite(_) => Some(Termination::NonFinite),
            _ => None,
        }
    }
}

/// `d gamma / dt = -c2 (F) / (2 tanh(2 gamma))` for a given forcing `F`.
pub fn gamma_rhs_from_forcing(gamma: f64, forcing: f64, c2: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(MuskatError::WidthCollapse(gamma));
    }
    if forcing == 0.0 {
        return Ok(0.0);
    }
    Ok(-c2 * forcing / (2.0 * (2.0 * gamma).tanh()))
}

/// Width equation with forcing `|dh|_{L^inf_gamma} + |dtheta|_{L^inf_gamma}`.
pub fn gamma_rhs(state: &HThetaState, c2: f64, grid: &Grid1D) -> Result<f64> {
    if !(state.gamma > 0.0) {
        return Err(MuskatError::WidthCollapse(state.gamma));
    }
    let forcing = norms::linf_gamma_derivative(&state.h, 1, state.gamma, grid)?
        + norms::linf_gamma_derivative(&state.theta, 1, state.gamma, grid)?;
    gamma_rhs_from_forcing(state.gamma, forcing, c2)
}

/// One explicit Runge-Kutta step of `y' = rhs(y)`.
pub fn rk_step<F>(integrator: Integrator, y: &[f64], dt: f64, mut rhs: F) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + s * y).collect()
    };
    match integrator {
        Integrator::Rk4 => {
            let k1 = rhs(y)?;
            let k2 = rhs(&axpy(y, 0.5 * dt, &k1))?;
            let k3 = rhs(&axpy(y, 0.5 * dt, &k2))?;
            let k4 = rhs(&axpy(y, dt, &k3))?;
            Ok((0..y.len())
                .map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                .collect())
        }
        Integrator::SspRk3 => {
            let k1 = rhs(y)?;
            let y1 = axpy(y, dt, &k1);
            let k2 = rhs(&y1)?;
            let y2: Vec<f64> = (0..y.len())
                .map(|i| 0.75 * y[i] + 0.25 * (y1[i] + dt * k2[i]))
                .collect();
            let k3 = rhs(&y2)?;
            Ok((0..y.len())
                .map(|i| y[i] / 3.0 + 2.0 / 3.0 * (y2[i] + dt * k3[i]))
                .collect())
        }
    }
}

fn pack(s: &HThetaState) -> Vec<f64> {
    let mut y = Vec::with_capacity(2 * s.h.len() + 1);
    y.extend_from_slice(&s.h);
    y.extend_from_slice(&s.theta);
    y.push(s.gamma);
    y
}

fn unpack(y: &[f64], n: usize, t: f64) -> HThetaState {
    HThetaState {
        h: y[..n].to_vec(),
        theta: y[n..2 * n].to_vec(),
        gamma: y[2 * n],
        t,
    }
}

/// Largest Fourier coefficient beyond the dealiasing cut-off relative to the peak.
pub fn spectral_tail_ratio(field: &[f64], grid: &Grid1D) -> f64 {
    let c = spectral::forward(grid, field);
    let peak = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let tail = c
        .iter()
        .enumerate()
        .filter(|(m, _)| !spectral::kept_by_dealias(grid, *m))
        .map(|(_, z)| z.norm())
        .fold(0.0, f64::max);
    tail / peak
}

/// Incremental stepper holding the current state.
#[derive(Debug, Clone)]
pub struct Stepper {
    params: PhysicalParams,
    quad: Quadrature,
    cfg: StepperConfig,
    state: HThetaState,
    dt: f64,
    total_steps: usize,
    steps_taken: usize,
}

impl Stepper {
    pub fn new(
        initial: &InterfaceState,
        params: &PhysicalParams,
        grid: &Grid1D,
        cfg: &StepperConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if initial.f.len() != grid.n() || initial.g.len() != grid.n() {
            return Err(MuskatError::Shape(format!(
                "initial data has {}/{} samples, grid has {}",
                initial.f.len(),
                initial.g.len(),
                grid.n()
            )));
        }
        let (total_steps, dt) = cfg.schedule(grid, params);
        Ok(Self {
            params: *params,
            quad: Quadrature::new(grid, cfg.kernel_sum),
            cfg: cfg.clone(),
            state: to_htheta(initial, params),
            dt,
            total_steps,
            steps_taken: 0,
        })
    }

    pub fn state(&self) -> &HThetaState {
        &self.state
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    pub fn total_steps(&self) -> usize {
        self.total_steps
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn grid(&self) -> &Grid1D {
        self.quad.grid()
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    pub fn finished(&self) -> bool {
        self.steps_taken >= self.total_steps
    }

    /// Right-hand side of the full system on the packed vector `[h, theta, gamma]`.
    fn rhs_packed(&self, y: &[f64]) -> Result<Vec<f64>> {
        let n = self.grid().n();
        if y.iter().any(|v| !v.is_finite()) {
            return Err(MuskatError::NonFinite("stage state".into()));
        }
        let s = unpack(y, n, 0.0);
        let (dh, dth) = rhs_htheta(&s, &self.params, &self.quad)?;
        let dg = gamma_rhs(&s, self.cfg.c2, self.grid())?;
        let mut out = dh;
        out.extend(dth);
        out.push(dg);
        Ok(out)
    }

    /// Advances one step. On failure the state is left unchanged.
    pub fn step(&mut self) -> Result<()> {
        let y = pack(&self.state);
        let next = rk_step(self.cfg.integrator, &y, self.dt, |v| self.rhs_packed(v))?;
        self.steps_taken += 1;
        let t = if self.steps_taken == self.total_steps {
            self.cfg.horizon
        } else {
            self.state.t + self.dt
        };
        self.state = unpack(&next, self.grid().n(), t);
        Ok(())
    }

    /// Checks the monitors on the current state.
    pub fn check(&self) -> Option<Termination> {
        let s = &self.state;
        if !s.is_finite() {
            return Some(Termination::NonFinite);
        }
        if s.gamma <= self.cfg.gamma_floor {
            return Some(Termination::WidthCollapse);
        }
        let iface = from_htheta(s, &self.params);
        let (d, _) = min_distance(&iface.f, &iface.g, self.params.sigma, self.grid());
        if d < self.cfg.collision_factor * self.params.sigma {
            return Some(Termination::Collision);
        }
        let tail = spectral_tail_ratio(&s.h, self.grid()).max(spectral_tail_ratio(&s.theta, self.grid()));
        if tail > self.cfg.tail_threshold {
            return Some(Termination::ResolutionLoss);
        }
        if self.finished() {
            return Some(Termination::Horizon);
        }
        None
    }

    pub fn report(&self) -> Result<NormReport> {
        NormReport::compute(&self.state, self.cfg.k, &self.params, self.grid())
    }
}

/// Recorded history of a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub reports: Vec<NormReport>,
    pub snapshots: Vec<HThetaState>,
    pub termination: Termination,
    /// Time reached when the run stopped.
    pub lifespan: f64,
    pub steps: usize,
    pub dt: f64,
}

/// Runs to the horizon or until a monitor fires. `observer` sees every
/// recorded report together with the state it was computed from.
pub fn run_with_observer(
    initial: &InterfaceState,
    params: &PhysicalParams,
    grid: &Grid1D,
    cfg: &StepperConfig,
    mut observer: impl FnMut(&NormReport, &HThetaState),
) -> Result<Trajectory> {
    let mut st = Stepper::new(initial, params, grid, cfg)?;
    let mut reports = Vec::new();
    let mut snapshots = Vec::new();
    let mut record = |st: &Stepper, reports: &mut Vec<NormReport>, snaps: &mut Vec<HThetaState>| -> Result<()> {
        let r = st.report()?;
        observer(&r, st.state());
        reports.push(r);
        snaps.push(st.state().clone());
        Ok(())
    };

    let termination = loop {
        if let Some(t) = st.check() {
            break t;
        }
        if st.steps_taken() % cfg.report_every == 0 {
            if let Err(e) = record(&st, &mut reports, &mut snapshots) {
                match Termination::from_error(&e) {
                    Some(t) => break t,
                    None => return Err(e),
                }
            }
        }
        if let Err(e) = st.step() {
            match Termination::from_error(&e) {
                Some(t) => break t,
                None => return Err(e),
            }
        }
    };
    if st.state().is_finite() {
        // The final state is always recorded; a failing report is not fatal here.
        let _ = record(&st, &mut reports, &mut snapshots);
    }
    Ok(Trajectory {
        reports,
        snapshots,
        termination,
        lifespan: st.state().t,
        steps: st.steps_taken(),
        dt: st.dt(),
    })
}

pub fn run(
    initial: &InterfaceState,
    params: &PhysicalParams,
    grid: &Grid1D,
    cfg: &StepperConfig,
) -> Result<Trajectory> {
    run_with_observer(initial, params, grid, cfg, |_, _| {})
}

/// Evolves the two-phase equation with the same step schedule as `cfg`
/// would use for `params`, calling `observer(t, f)` after every step.
pub fn run_twophase(
    f0: &[f64],
    params: &PhysicalParams,
    grid: &Grid1D,
    cfg: &StepperConfig,
    mut observer: impl FnMut(f64, &[f64]),
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let quad = Quadrature::new(grid, cfg.kernel_sum);
    let (steps, dt) = cfg.schedule(grid, params);
    let jump = params.rho2 - params.rho0;
    let mut f = f0.to_vec();
    observer(0.0, &f);
    for i in 1..=steps {
        f = rk_step(cfg.integrator, &f, dt, |v| rhs_twophase(v, jump, &quad))?;
        if f.iter().any(|v| !v.is_finite()) {
            return Err(MuskatError::NonFinite("two-phase state".into()));
        }
        observer(i as f64 * dt, &f);
    }
    Ok(f)
}

/// Suprema of the bootstrap quantities over a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    /// `sup_t E(t) / E(0)`.
    pub energy_ratio: f64,
    /// `sup_t |theta|_{H^{k-3}_gamma} / sigma`.
    pub gap_ratio_sup: f64,
    /// `gap_ratio_sup` divided by its initial value.
    pub gap_ratio_growth: f64,
    pub gamma_min: f64,
    pub min_distance: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

pub fn bootstrap_monitor(traj: &Trajectory) -> Result<BootstrapReport> {
    let first = traj
        .reports
        .first()
        .ok_or_else(|| MuskatError::InvalidParameter("empty trajectory".into()))?;
    let sup = |f: fn(&NormReport) -> f64| traj.reports.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let inf = |f: fn(&NormReport) -> f64| traj.reports.iter().map(f).fold(f64::INFINITY, f64::min);
    let gap_sup = sup(|r| r.gap_ratio);
    Ok(BootstrapReport {
        energy_ratio: ratio(sup(|r| r.energy), first.energy),
        gap_ratio_sup: gap_sup,
        gap_ratio_growth: ratio(gap_sup, first.gap_ratio),
        gamma_min: inf(|r| r.gamma),
        min_distance: inf(|r| r.min_distance),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rk4_order_on_scalar_problem() {
        let err = |dt: f64| {
            let mut y = vec![1.0];
            let steps = (1.0 / dt).round() as usize;
            for _ in 0..steps {
                y = rk_step(Integrator::Rk4, &y, dt, |v| Ok(vec![-v[0] * v[0]])).unwrap();
            }
            (y[0] - 0.5).abs()
        };
        let order = (err(0.1) / err(0.05)).log2();
        assert!(order > 3.8, "order {order}");
        let e3 = |dt: f64| {
            let mut y = vec![1.0];
            for _ in 0..(1.0 / dt).round() as usize {
                y = rk_step(Integrator::SspRk3, &y, dt, |v| Ok(vec![-v[0]])).unwrap();
            }
            (y[0] - (-1.0_f64).exp()).abs()
        };
        let order3 = (e3(0.1) / e3(0.05)).log2();
        assert!(order3 > 2.8 && order3 < 3.3, "order {order3}");
    }

    #[test]
    fn width_equation_rejects_nonpositive_gamma() {
        assert!(matches!(
            gamma_rhs_from_forcing(0.0, 1.0, 1.0),
            Err(MuskatError::WidthCollapse(_))
        ));
        assert_eq!(gamma_rhs_from_forcing(0.2, 0.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn schedule_divides_horizon() {
        let g = Grid1D::new(PI, 64).unwrap();
        let p = PhysicalParams::new(0.0, 1.0, 2.0, 0.1).unwrap();
        let mut c = StepperConfig::new(0.5);
        c.dt = TimeStep::Fixed(0.1);
        assert_eq!(c.schedule(&g, &p), (5, 0.1));
        c.dt = TimeStep::Fixed(0.3);
        assert_eq!(c.schedule(&g, &p).0, 2);
    }

    #[test]
    fn config_validation() {
        let mut c = StepperConfig::new(-1.0);
        assert!(c.validate().is_err());
        c.horizon = 1.0;
        c.k = 2;
        assert!(c.validate().is_err());
        c.k = 3;
        c.dt = TimeStep::Cfl(0.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn collision_monitor_fires() {
        let g = Grid1D::new(PI, 32).unwrap();
        let p = PhysicalParams::new(0.0, 1.0, 2.0, 0.1).unwrap();
        let init = InterfaceState {
            f: vec![-0.17; 32],
            g: vec![0.0; 32],
            gamma: 0.1,
            t: 0.0,
        };
        let traj = run(&init, &p, &g, &StepperConfig::new(0.1)).unwrap();
        assert_eq!(traj.termination, Termination::Collision);
        assert_eq!(traj.lifespan, 0.0);
    }

    #[test]
    fn tail_ratio() {
        let g = Grid1D::new(PI, 32).unwrap();
        let low: Vec<f64> = g.nodes().iter().map(|x| x.cos()).collect();
        assert!(spectral_tail_ratio(&low, &g) < 1e-15);
        let high: Vec<f64> = g.nodes().iter().map(|x| x.cos() + 0.1 * (14.0 * x).cos()).collect();
        assert!((spectral_tail_ratio(&high, &g) - 0.1).abs() < 1e-12);
        assert_eq!(spectral_tail_ratio(&[0.0; 32], &g), 0.0);
    }
}
