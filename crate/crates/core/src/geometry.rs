//! Physical parameters, the periodic grid, interface states and initial data.
//!
//! The three fluids sit in layers: density `rho2` above the interface `f`,
//! `rho1` between `f` and `g`, and `rho0` below `g`. The interfaces are
//! `y = f(x) + sigma` and `y = g(x) - sigma`. The working variables are
//! `h = mu2 f + mu1 g` and `theta = f - g`.

use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{MuskatError, Result};
use crate::norms;

/// Densities and the half-gap, plus the derived coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub rho0: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub sigma: f64,
    /// `(rho2 - rho0) / (2 pi)`.
    pub delta_rho: f64,
    /// `(rho2 - rho1) / (rho2 - rho0)`.
    pub mu1: f64,
    /// `(rho1 - rho0) / (rho2 - rho0)`.
    pub mu2: f64,
}

impl PhysicalParams {
    /// Validates `rho0 < rho1 < rho2` and `sigma > 0` and derives the rest.
    ///
    /// The gap is allowed to be arbitrarily small so that the two-phase
    /// limit can be approached numerically; values of order one are allowed
    /// as well since the linear theory makes sense for any gap.
    pub fn new(rho0: f64, rho1: f64, rho2: f64, sigma: f64) -> Result<Self> {
        let all = [rho0, rho1, rho2, sigma];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(MuskatError::InvalidParameter(
                "densities and sigma must be finite".into(),
            ));
        }
        if !(rho0 < rho1 && rho1 < rho2) {
            return Err(MuskatError::InvalidParameter(format!(
                "densities must satisfy rho0 < rho1 < rho2 (got {rho0}, {rho1}, {rho2})"
            )));
        }
        if sigma <= 0.0 {
            return Err(MuskatError::InvalidParameter(format!(
                "sigma must be positive (got {sigma})"
            )));
        }
        let jump = rho2 - rho0;
        Ok(Self {
            rho0,
            rho1,
            rho2,
            sigma,
            delta_rho: jump / (2.0 * std::f64::consts::PI),
            mu1: (rho2 - rho1) / jump,
            mu2: (rho1 - rho0) / jump,
        })
    }

    /// Same densities with a different half-gap.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.rho0, self.rho1, self.rho2, sigma)
    }

    /// `mu1 * mu2`.
    pub fn mu_product(&self) -> f64 {
        self.mu1 * self.mu2
    }
}

/// Uniform periodic grid on `[-L, L)` with `n` nodes and cached FFT plans.
#[derive(Clone)]
pub struct Grid1D {
    half_length: f64,
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid1D")
            .field("half_length", &self.half_length)
            .field("n", &self.n)
            .finish()
    }
}

impl PartialEq for Grid1D {
    fn eq(&self, other: &Self) -> bool {
        self.half_length == other.half_length && self.n == other.n
    }
}

impl Grid1D {
    /// `n` must be a power of two, at least 8.
    pub fn new(half_length: f64, n: usize) -> Result<Self> {
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(MuskatError::InvalidParameter(format!(
                "half length must be positive (got {half_length})"
            )));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(MuskatError::InvalidParameter(format!(
                "grid size must be a power of two, at least 8 (got {n})"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            half_length,
            n,
            fft: planner.plan_fft_forward(n),
            ifft: planner.plan_fft_inverse(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    /// Node spacing `2L / n`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.n as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        -self.half_length + i as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Signed mode number of FFT slot `m`; the Nyquist slot maps to `-n/2`.
    pub fn signed_mode(&self, m: usize) -> i64 {
        let n = self.n as i64;
        let m = m as i64;
        if 2 * m < n {
            m
        } else {
            m - n
        }
    }

    /// Angular wavenumber of FFT slot `m`.
    pub fn wavenumber(&self, m: usize) -> f64 {
        self.signed_mode(m) as f64 * std::f64::consts::PI / self.half_length
    }

    /// Largest representable wavenumber `pi n / (2L)`.
    pub fn max_wavenumber(&self) -> f64 {
        std::f64::consts::PI * self.n as f64 / (2.0 * self.half_length)
    }

    /// Smallest power of two `n >= n_min` with `2L/n <= sigma/4`.
    pub fn resolution_for_gap(half_length: f64, sigma: f64, n_min: usize) -> usize {
        let mut n = n_min.max(8).next_power_of_two();
        while 2.0 * half_length / n as f64 > sigma / 4.0 {
            n *= 2;
        }
        n
    }

    pub(crate) fn fft_forward(&self) -> &Arc<dyn Fft<f64>> {
        &self.fft
    }

    pub(crate) fn fft_inverse(&self) -> &Arc<dyn Fft<f64>> {
        &self.ifft
    }
}

/// Interface displacements `f`, `g` on the grid, with strip width and time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceState {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub gamma: f64,
    pub t: f64,
}

/// The same state in the variables `h = mu2 f + mu1 g`, `theta = f - g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HThetaState {
    pub h: Vec<f64>,
    pub theta: Vec<f64>,
    pub gamma: f64,
    pub t: f64,
}

impl HThetaState {
    /// `theta / sigma`.
    pub fn theta_over_sigma(&self, params: &PhysicalParams) -> Vec<f64> {
        self.theta.iter().map(|v| v / params.sigma).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.gamma.is_finite()
            && self.h.iter().chain(&self.theta).all(|v| v.is_finite())
    }
}

/// Forward change of variables.
pub fn to_htheta(state: &InterfaceState, params: &PhysicalParams) -> HThetaState {
    let (h, theta) = state
        .f
        .iter()
        .zip(&state.g)
        .map(|(&f, &g)| (params.mu2 * f + params.mu1 * g, f - g))
        .unzip();
    HThetaState {
        h,
        theta,
        gamma: state.gamma,
        t: state.t,
    }
}

/// Inverse change of variables: `f = h + mu1 theta`, `g = h - mu2 theta`.
pub fn from_htheta(state: &HThetaState, params: &PhysicalParams) -> InterfaceState {
    let (f, g) = state
        .h
        .iter()
        .zip(&state.theta)
        .map(|(&h, &th)| (h + params.mu1 * th, h - params.mu2 * th))
        .unzip();
    InterfaceState {
        f,
        g,
        gamma: state.gamma,
        t: state.t,
    }
}

/// Smallest vertical distance `2 sigma + f - g` and where it occurs.
pub fn min_distance(f: &[f64], g: &[f64], sigma: f64, grid: &Grid1D) -> (f64, f64) {
    let mut best = (f64::INFINITY, grid.node(0));
    for (i, (a, b)) in f.iter().zip(g).enumerate() {
        let d = 2.0 * sigma + a - b;
        if d < best.0 {
            best = (d, grid.node(i));
        }
    }
    best
}

/// Errors when the interfaces touch.
pub fn check_separation(f: &[f64], g: &[f64], sigma: f64, grid: &Grid1D) -> Result<f64> {
    let (d, x) = min_distance(f, g, sigma, grid);
    if d.is_nan() || d <= 0.0 {
        return Err(MuskatError::Collision { distance: d, x });
    }
    Ok(d)
}

/// One analytic building block of an initial profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    /// `a exp(-(x - c)^2 / (2 w^2))`.
    Gaussian {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: f64,
    },
    /// Raised cosine `a (1 + cos(pi (x - c) / w)) / 2` on `|x - c| < w`.
    /// Only once differentiable at the edges of its support.
    CosineBump {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: f64,
    },
    /// Periodic mode `a cos(m pi x / L + phase)`.
    Mode {
        amplitude: f64,
        mode: u32,
        #[serde(default)]
        phase: f64,
    },
}

impl Shape {
    fn validate(&self) -> Result<()> {
        match *self {
            Shape::Gaussian {
                amplitude,
                width,
                center,
            }
            | Shape::CosineBump {
                amplitude,
                width,
                center,
            } => {
                if !(amplitude.is_finite() && center.is_finite() && width.is_finite() && width > 0.0)
                {
                    return Err(MuskatError::InvalidParameter(format!(
                        "bad shape parameters {self:?}"
                    )));
                }
            }
            Shape::Mode {
                amplitude, phase, ..
            } => {
                if !(amplitude.is_finite() && phase.is_finite()) {
                    return Err(MuskatError::InvalidParameter(format!(
                        "bad shape parameters {self:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Whether the shape is meant to vanish away from its center.
    pub fn is_localized(&self) -> bool {
        !matches!(self, Shape::Mode { .. })
    }

    pub fn eval(&self, x: f64, half_length: f64) -> f64 {
        match *self {
            Shape::Gaussian {
                amplitude,
                width,
                center,
            } => {
                // Sum over periodic images so the sampled profile is analytic
                // on the circle, not merely small at the ends of the period.
                let period = 2.0 * half_length;
                let reach = (40.0 * width / period).ceil() as i64 + 1;
                (-reach..=reach)
                    .map(|k| {
                        let z = (x - center - k as f64 * period) / width;
                        (-0.5 * z * z).exp()
                    })
                    .sum::<f64>()
                    * amplitude
            }
            Shape::CosineBump {
                amplitude,
                width,
                center,
            } => {
                let z = (x - center) / width;
                if z.abs() < 1.0 {
                    0.5 * amplitude * (1.0 + (std::f64::consts::PI * z).cos())
                } else {
                    0.0
                }
            }
            Shape::Mode {
                amplitude,
                mode,
                phase,
            } => amplitude * (mode as f64 * std::f64::consts::PI * x / half_length + phase).cos(),
        }
    }
}

fn sample(shapes: &[Shape], grid: &Grid1D, scale: f64) -> Vec<f64> {
    grid.nodes()
        .iter()
        .map(|&x| scale * shapes.iter().map(|s| s.eval(x, grid.half_length())).sum::<f64>())
        .collect()
}

fn default_tail_tolerance() -> f64 {
    1e-10
}

/// Initial data, either as the two interfaces or as `h` and `theta / sigma`.
///
/// Exactly one of the pairs (`f`, `g`) or (`h`, `theta_over_sigma`) is used;
/// a missing member of the chosen pair means zero. Giving `theta / sigma`
/// instead of `theta` keeps the gap ratio fixed while sigma is varied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub gamma0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<Shape>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<Shape>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<Shape>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_over_sigma: Option<Vec<Shape>>,
    /// Largest admissible `|f|`, `|g|` at the domain ends for localized data.
    #[serde(default = "default_tail_tolerance")]
    pub tail_tolerance: f64,
}

impl ProfileSpec {
    fn uses_interfaces(&self) -> Result<bool> {
        let iface = self.f.is_some() || self.g.is_some();
        let ht = self.h.is_some() || self.theta_over_sigma.is_some();
        match (iface, ht) {
            (true, true) => Err(MuskatError::Config(
                "profile mixes (f, g) with (h, theta_over_sigma)".into(),
            )),
            _ => Ok(!ht),
        }
    }

    pub fn all_shapes(&self) -> impl Iterator<Item = &Shape> {
        [&self.f, &self.g, &self.h, &self.theta_over_sigma]
            .into_iter()
            .flatten()
            .flatten()
    }

    /// True when `f0 = g0`, i.e. the data is admissible for the two-phase comparison.
    pub fn has_equal_interfaces(&self) -> bool {
        match self.uses_interfaces() {
            Ok(true) => self.f.as_deref().unwrap_or(&[]) == self.g.as_deref().unwrap_or(&[]),
            Ok(false) => self.theta_over_sigma.as_deref().unwrap_or(&[]).is_empty(),
            Err(_) => false,
        }
    }
}

/// Smallness quantities of the initial data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialReport {
    /// `|h0|^2 + mu1 mu2 |theta0|^2` in the weighted `H^k` norm.
    pub energy_hk: f64,
    /// `|theta0|_{H^{k-3}} / sigma`.
    pub gap_ratio: f64,
    /// `min (2 sigma + f0 - g0)`.
    pub min_distance: f64,
}

/// Samples the initial profile and checks it is admissible.
pub fn init_profile(
    spec: &ProfileSpec,
    grid: &Grid1D,
    params: &PhysicalParams,
    k: u32,
) -> Result<(InterfaceState, InitialReport)> {
    if !(spec.gamma0.is_finite() && spec.gamma0 > 0.0) {
        return Err(MuskatError::InvalidParameter(format!(
            "gamma0 must be positive (got {})",
            spec.gamma0
        )));
    }
    if k < 3 {
        return Err(MuskatError::InvalidParameter(format!(
            "regularity index k must be at least 3 (got {k})"
        )));
    }
    for s in spec.all_shapes() {
        s.validate()?;
    }
    let empty: Vec<Shape> = Vec::new();
    let state = if spec.uses_interfaces()? {
        InterfaceState {
            f: sample(spec.f.as_ref().unwrap_or(&empty), grid, 1.0),
            g: sample(spec.g.as_ref().unwrap_or(&empty), grid, 1.0),
            gamma: spec.gamma0,
            t: 0.0,
        }
    } else {
        let ht = HThetaState {
            h: sample(spec.h.as_ref().unwrap_or(&empty), grid, 1.0),
            theta: sample(
                spec.theta_over_sigma.as_ref().unwrap_or(&empty),
                grid,
                params.sigma,
            ),
            gamma: spec.gamma0,
            t: 0.0,
        };
        from_htheta(&ht, params)
    };

    if spec.all_shapes().all(Shape::is_localized) {
        let last = grid.n() - 1;
        for (name, field) in [("f", &state.f), ("g", &state.g)] {
            let tail = field[0].abs().max(field[last].abs());
            if tail > spec.tail_tolerance {
                return Err(MuskatError::TailNotDecayed {
                    field: name.into(),
                    tail,
                    tolerance: spec.tail_tolerance,
                });
            }
        }
    }
    let min_distance = check_separation(&state.f, &state.g, params.sigma, grid)?;

    let ht = to_htheta(&state, params);
    let energy_hk = norms::hk_gamma_norm_sq(&ht.h, k, spec.gamma0, grid)?
        + params.mu_product() * norms::hk_gamma_norm_sq(&ht.theta, k, spec.gamma0, grid)?;
    let gap_ratio = norms::hk_gamma_norm_sq(&ht.theta, k - 3, spec.gamma0, grid)?.sqrt() / params.sigma;
    Ok((
        state,
        InitialReport {
            energy_hk,
            gap_ratio,
            min_distance,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_spacing_gives_equal_weights() {
        let p = PhysicalParams::new(0.0, 1.0, 2.0, 0.1).unwrap();
        assert_eq!(p.mu1, 0.5);
        assert_eq!(p.mu2, 0.5);
        assert!((p.delta_rho - 1.0 / std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn mu_values_for_uneven_layers() {
        let p = PhysicalParams::new(0.0, 0.5, 2.0, 0.2).unwrap();
        assert_eq!(p.mu1, 0.75);
        assert_eq!(p.mu2, 0.25);
    }

    #[test]
    fn density_order_is_enforced() {
        assert!(PhysicalParams::new(1.0, 1.0, 2.0, 0.1).is_err());
        assert!(PhysicalParams::new(0.0, 3.0, 2.0, 0.1).is_err());
        assert!(PhysicalParams::new(0.0, 1.0, 2.0, 0.0).is_err());
        assert!(PhysicalParams::new(0.0, 1.0, f64::NAN, 0.1).is_err());
    }

    #[test]
    fn grid_wavenumbers() {
        let g = Grid1D::new(std::f64::consts::PI, 8).unwrap();
        let ks: Vec<i64> = (0..8).map(|m| g.signed_mode(m)).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert!((g.wavenumber(3) - 3.0).abs() < 1e-15);
        assert!(Grid1D::new(1.0, 7).is_err());
        assert!(Grid1D::new(1.0, 6).is_err());
        assert!(Grid1D::new(1.0, 24).is_err());
        assert!(Grid1D::new(-1.0, 16).is_err());
    }

    #[test]
    fn resolution_rule() {
        let pi = std::f64::consts::PI;
        assert_eq!(Grid1D::resolution_for_gap(pi, 0.1, 64), 256);
        assert_eq!(Grid1D::resolution_for_gap(pi, 0.05, 64), 512);
        assert_eq!(Grid1D::resolution_for_gap(pi, 0.0125, 64), 2048);
        assert_eq!(Grid1D::resolution_for_gap(pi, 0.1, 1024), 1024);
    }

    #[test]
    fn collision_is_reported_with_location() {
        let grid = Grid1D::new(1.0, 8).unwrap();
        let f = vec![0.0; 8];
        let mut g = vec![0.0; 8];
        g[3] = 0.5;
        let err = check_separation(&f, &g, 0.2, &grid).unwrap_err();
        match err {
            MuskatError::Collision { distance, x } => {
                assert!((distance + 0.1).abs() < 1e-15);
                assert_eq!(x, grid.node(3));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn profile_rejects_mixed_variables() {
        let spec: ProfileSpec = serde_json::from_str(
            r#"{"gamma0":0.1,"f":[],"h":[{"kind":"gaussian","amplitude":1e-3,"width":0.3}]}"#,
        )
        .unwrap();
        let grid = Grid1D::new(std::f64::consts::PI, 64).unwrap();
        let p = PhysicalParams::new(0.0, 1.0, 2.0, 0.1).unwrap();
        assert!(init_profile(&spec, &grid, &p, 3).is_err());
    }

    #[test]
    fn profile_rejects_slow_tails() {
        let spec: ProfileSpec = serde_json::from_str(
            r#"{"gamma0":0.1,"f":[{"kind":"gaussian","amplitude":1.0,"width":2.0}]}"#,
        )
        .unwrap();
        let grid = Grid1D::new(std::f64::consts::PI, 64).unwrap();
        let p = PhysicalParams::new(0.0, 1.0, 2.0, 0.1).unwrap();
        assert!(matches!(
            init_profile(&spec, &grid, &p, 3),
            Err(MuskatError::TailNotDecayed { .. })
        ));
    }

    #[test]
    fn profile_unknown_field_rejected() {
        let r: std::result::Result<ProfileSpec, _> =
            serde_json::from_str(r#"{"gamma0":0.1,"amplitude":3}"#);
        assert!(r.is_err());
    }
}
