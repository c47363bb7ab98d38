//! Interface velocities and the right-hand sides of the evolution equations.
//!
//! Principal-value integrals over `alpha` are approximated with the midpoint
//! rule on the half-offset nodes `alpha_j = (j + 1/2) dx`, which are symmetric
//! about the singularity. Values at `x_i - alpha_j` then fall on the half
//! nodes `x_m - dx/2` and are obtained by exact band-limited interpolation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MuskatError, Result};
use crate::geometry::{check_separation, from_htheta, Grid1D, HThetaState, InterfaceState, PhysicalParams};
use crate::kernels::cauchy;
use crate::spectral;

/// How the kernels are summed over the real line for periodic data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSum {
    /// Kernels summed over all periodic images in closed form; exact for
    /// periodic data.
    #[default]
    Periodic,
    /// The bare kernel on one period, `|alpha| < L`.
    Truncated,
}

/// Precomputed quadrature nodes and kernel factors for one grid.
#[derive(Debug, Clone)]
pub struct Quadrature {
    grid: Grid1D,
    mode: KernelSum,
    alpha: Vec<f64>,
    /// `sin u cos u` with `u = pi alpha / (2L)`.
    sin_cos: Vec<f64>,
    /// `sin^2 u`.
    sin_sq: Vec<f64>,
}

impl Quadrature {
    pub fn new(grid: &Grid1D, mode: KernelSum) -> Self {
        let n = grid.n();
        let h = grid.spacing();
        let scale = std::f64::consts::PI / (2.0 * grid.half_length());
        let alpha: Vec<f64> = (0..n)
            .map(|j| (j as f64 - (n / 2) as f64 + 0.5) * h)
            .collect();
        let sin_cos = alpha
            .iter()
            .map(|a| {
                let (s, c) = (scale * a).sin_cos();
                s * c
            })
            .collect();
        let sin_sq = alpha.iter().map(|a| (scale * a).sin().powi(2)).collect();
        Self {
            grid: grid.clone(),
            mode,
            alpha,
            sin_cos,
            sin_sq,
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn mode(&self) -> KernelSum {
        self.mode
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// Kernel `alpha / (alpha^2 + b^2)`, summed over images in periodic mode.
    #[inline]
    fn kernel(&self, j: usize, b: f64) -> f64 {
        match self.mode {
            KernelSum::Truncated => cauchy(self.alpha[j], b),
            KernelSum::Periodic => {
                let c = std::f64::consts::PI / (2.0 * self.grid.half_length());
                c * self.sin_cos[j] / (sinh_sq(c * b) + self.sin_sq[j])
            }
        }
    }

    /// Kernel sums for every node. `a` and `b` are the two transported
    /// slopes, given at the half nodes.
    fn sums(&self, d: &PairData<'_>) -> Vec<KernelSums> {
        let n = self.grid.n();
        let h = self.grid.spacing();
        let s = 2.0 * d.sigma;
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut acc = KernelSums::default();
                let (fi, gi) = (d.f[i], d.g[i]);
                let mut k = (i + n / 2) % n;
                for j in 0..n {
                    let (fk, gk) = (d.f_half[k], d.g_half[k]);
                    let (ak, bk) = (d.a_half[k], d.b_half[k]);
                    let p = [
                        self.kernel(j, fi - fk),
                        self.kernel(j, s + fi - gk),
                        self.kernel(j, s + fk - gi),
                        self.kernel(j, gi - gk),
                    ];
                    for q in 0..4 {
                        acc.s[q] += p[q];
                        acc.a[q] += p[q] * ak;
                        acc.b[q] += p[q] * bk;
                    }
                    k = if k == 0 { n - 1 } else { k - 1 };
                }
                for q in 0..4 {
                    acc.s[q] *= h;
                    acc.a[q] *= h;
                    acc.b[q] *= h;
                }
                acc
            })
            .collect()
    }

    /// `int P11` and `int P11 f'(x - alpha)` for a single interface.
    fn single_sums(&self, f: &[f64], f_half: &[f64], df_half: &[f64]) -> Vec<(f64, f64)> {
        let n = self.grid.n();
        let h = self.grid.spacing();
        (0..n)
            .into_par_iter()
            .map(|i| {
                let (mut s, mut a) = (0.0, 0.0);
                let mut k = (i + n / 2) % n;
                for j in 0..n {
                    let p = self.kernel(j, f[i] - f_half[k]);
                    s += p;
                    a += p * df_half[k];
                    k = if k == 0 { n - 1 } else { k - 1 };
                }
                (s * h, a * h)
            })
            .collect()
    }
}

#[inline]
fn sinh_sq(y: f64) -> f64 {
    let y = y.abs();
    if y > 300.0 {
        return f64::INFINITY;
    }
    let e = y.exp_m1();
    let s = 0.5 * (e + e / (1.0 + e));
    s * s
}

/// Kernel integrals at one node, indexed `[P11, P12, P21, P22]`.
#[derive(Debug, Clone, Copy, Default)]
struct KernelSums {
    s: [f64; 4],
    a: [f64; 4],
    b: [f64; 4],
}

struct PairData<'a> {
    f: &'a [f64],
    g: &'a [f64],
    f_half: Vec<f64>,
    g_half: Vec<f64>,
    a_half: Vec<f64>,
    b_half: Vec<f64>,
    sigma: f64,
}

fn check_len(name: &str, v: &[f64], grid: &Grid1D) -> Result<()> {
    if v.len() != grid.n() {
        return Err(MuskatError::Shape(format!(
            "{name} has {} samples, grid has {}",
            v.len(),
            grid.n()
        )));
    }
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(MuskatError::NonFinite(format!("{name}[{i}]")));
    }
    Ok(())
}

fn half_derivative(grid: &Grid1D, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let c = spectral::forward(grid, v);
    let dc = spectral::derivative_coeffs(grid, &c, 1);
    let at_nodes = spectral::inverse_real(grid, dc.clone());
    (at_nodes, spectral::half_shift_coeffs(grid, dc))
}

/// Velocities `u+` (upper interface) and `u-` (lower interface).
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    pub u_plus: Vec<f64>,
    pub u_minus: Vec<f64>,
}

fn prepare<'a>(
    f: &'a [f64],
    g: &'a [f64],
    a: &[f64],
    b: &[f64],
    sigma: f64,
    grid: &Grid1D,
) -> (PairData<'a>, Vec<f64>, Vec<f64>) {
    let (da, da_half) = half_derivative(grid, a);
    let (db, db_half) = half_derivative(grid, b);
    (
        PairData {
            f,
            g,
            f_half: spectral::half_shift(grid, f),
            g_half: spectral::half_shift(grid, g),
            a_half: da_half,
            b_half: db_half,
            sigma,
        },
        da,
        db,
    )
}

fn validate_pair(f: &[f64], g: &[f64], params: &PhysicalParams, grid: &Grid1D) -> Result<()> {
    check_len("f", f, grid)?;
    check_len("g", g, grid)?;
    check_separation(f, g, params.sigma, grid)?;
    Ok(())
}

pub fn compute_velocity(
    state: &InterfaceState,
    params: &PhysicalParams,
    quad: &Quadrature,
) -> Result<VelocityField> {
    let grid = quad.grid();
    validate_pair(&state.f, &state.g, params, grid)?;
    let (data, _, _) = prepare(&state.f, &state.g, &state.f, &state.g, params.sigma, grid);
    let sums = quad.sums(&data);
    let dr = params.delta_rho;
    let (m1, m2) = (params.mu1, params.mu2);
    Ok(VelocityField {
        u_plus: sums.iter().map(|s| -dr * (m2 * s.s[0] + m1 * s.s[1])).collect(),
        u_minus: sums.iter().map(|s| -dr * (m2 * s.s[2] + m1 * s.s[3])).collect(),
    })
}

/// Time derivatives `(df/dt, dg/dt)`.
pub fn rhs_fg(
    state: &InterfaceState,
    params: &PhysicalParams,
    quad: &Quadrature,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let grid = quad.grid();
    validate_pair(&state.f, &state.g, params, grid)?;
    let (data, df, dg) = prepare(&state.f, &state.g, &state.f, &state.g, params.sigma, grid);
    let sums = quad.sums(&data);
    let dr = params.delta_rho;
    let (m1, m2) = (params.mu1, params.mu2);
    let mut out_f = Vec::with_capacity(grid.n());
    let mut out_g = Vec::with_capacity(grid.n());
    for (i, s) in sums.iter().enumerate() {
        let up = -dr * (m2 * s.s[0] + m1 * s.s[1]);
        let um = -dr * (m2 * s.s[2] + m1 * s.s[3]);
        out_f.push(-up * df[i] - dr * (m2 * s.a[0] + m1 * s.b[1]));
        out_g.push(-um * dg[i] - dr * (m2 * s.a[2] + m1 * s.b[3]));
    }
    Ok((out_f, out_g))
}

/// Time derivatives `(dh/dt, dtheta/dt)`.
pub fn rhs_htheta(
    state: &HThetaState,
    params: &PhysicalParams,
    quad: &Quadrature,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let grid = quad.grid();
    check_len("h", &state.h, grid)?;
    check_len("theta", &state.theta, grid)?;
    let iface = from_htheta(state, params);
    validate_pair(&iface.f, &iface.g, params, grid)?;
    let (data, dh, dth) = prepare(&iface.f, &iface.g, &state.h, &state.theta, params.sigma, grid);
    let sums = quad.sums(&data);
    let dr = params.delta_rho;
    let (m1, m2) = (params.mu1, params.mu2);
    let m12 = m1 * m2;
    let mut out_h = Vec::with_capacity(grid.n());
    let mut out_t = Vec::with_capacity(grid.n());
    for (i, s) in sums.iter().enumerate() {
        let up = -dr * (m2 * s.s[0] + m1 * s.s[1]);
        let um = -dr * (m2 * s.s[2] + m1 * s.s[3]);
        let [a11, a12, a21, a22] = s.a;
        let [b11, b12, b21, b22] = s.b;
        out_h.push(
            -(m2 * up + m1 * um) * dh[i]
                - m12 * (up - um) * dth[i]
                - dr * (m2 * m2 * a11 + m12 * (a12 + a21) + m1 * m1 * a22)
                - m12 * dr * (m2 * (b11 - b12) - m1 * (b22 - b21)),
        );
        out_t.push(
            -(up - um) * dh[i]
                - (m1 * up + m2 * um) * dth[i]
                - dr * (m2 * (a11 - a21) - m1 * (a22 - a12))
                - m12 * dr * (b11 + b22 - b12 - b21),
        );
    }
    Ok((out_h, out_t))
}

/// Two-phase equation `df/dt = (jump / 2pi) PV int alpha (f'(x) - f'(x - alpha)) / (alpha^2 + (f(x) - f(x - alpha))^2)`.
pub fn rhs_twophase(f: &[f64], density_jump: f64, quad: &Quadrature) -> Result<Vec<f64>> {
    let grid = quad.grid();
    check_len("f", f, grid)?;
    if !(density_jump.is_finite() && density_jump > 0.0) {
        return Err(MuskatError::InvalidParameter(format!(
            "density jump must be positive (got {density_jump})"
        )));
    }
    let (df, df_half) = half_derivative(grid, f);
    let f_half = spectral::half_shift(grid, f);
    let c = density_jump / (2.0 * std::f64::consts::PI);
    Ok(quad
        .single_sums(f, &f_half, &df_half)
        .iter()
        .zip(&df)
        .map(|(&(s, a), &d)| c * (d * s - a))
        .collect())
}

/// Symbol of the linearisation about flat interfaces acting on `(f_hat, g_hat)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearSymbol {
    pub matrix: [[f64; 2]; 2],
    /// Ascending, so the faster decaying mode comes first.
    pub eigenvalues: [f64; 2],
}

impl LinearSymbol {
    /// Row vectors `l` with `l M = lambda l`, one per eigenvalue.
    pub fn left_eigenvectors(&self) -> [[f64; 2]; 2] {
        let m = self.matrix;
        let scale = m.iter().flatten().fold(0.0_f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
        self.eigenvalues.map(|lam| {
            let cand1 = [m[1][0], lam - m[0][0]];
            let cand2 = [lam - m[1][1], m[0][1]];
            let n1 = cand1[0].hypot(cand1[1]);
            let n2 = cand2[0].hypot(cand2[1]);
            if n1.max(n2) <= 1e-14 * scale {
                // Diagonal matrix; pick the coordinate whose diagonal matches.
                if (lam - m[0][0]).abs() <= (lam - m[1][1]).abs() {
                    [1.0, 0.0]
                } else {
                    [0.0, 1.0]
                }
            } else if n1 >= n2 {
                [cand1[0] / n1, cand1[1] / n1]
            } else {
                [cand2[0] / n2, cand2[1] / n2]
            }
        })
    }
}

pub fn linearized_symbol(xi: f64, params: &PhysicalParams) -> Result<LinearSymbol> {
    if !xi.is_finite() {
        return Err(MuskatError::InvalidParameter(format!("wavenumber {xi}")));
    }
    let a = xi.abs();
    let c = params.delta_rho * std::f64::consts::PI * a;
    let e = (-2.0 * params.sigma * a).exp();
    let (m1, m2) = (params.mu1, params.mu2);
    let matrix = [[-c * m2, -c * m1 * e], [-c * m2 * e, -c * m1]];
    let tr = -c * (m1 + m2);
    let det = c * c * m1 * m2 * (1.0 - e * e);
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    // The root of smaller magnitude is computed from the product to avoid cancellation.
    let big = 0.5 * (tr - disc);
    let small = if big != 0.0 { det / big } else { 0.0 };
    Ok(LinearSymbol {
        matrix,
        eigenvalues: [big, small],
    })
}
