//! Weighted analytic norms, dissipation, energy and strip-width diagnostics.
//!
//! Norms use the transform `f_hat(xi) = int f(x) e^{-i xi x} dx` with the
//! `1/(2 pi)` Plancherel factor. The space `H^k_gamma` collects functions
//! analytic in the strip `|Im z| < gamma`; its squared norm adds the squared
//! `H^k` norms of both boundary traces, which is
//! `(1/2pi) sum_{j<=k} int |xi|^{2j} |f_hat|^2 2 cosh(2 gamma xi) dxi`.
//!
//! Fourier coefficients smaller than [`NOISE_FLOOR`] times the largest one
//! are treated as zero, so that rounding noise at high frequency is not
//! amplified by `e^{gamma |xi|}`.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{MuskatError, Result};
use crate::geometry::{min_distance, from_htheta, Grid1D, HThetaState, PhysicalParams};
use crate::spectral;

/// Relative size below which Fourier coefficients are ignored.
pub const NOISE_FLOOR: f64 = 1e-13;
/// Largest exponent `2 gamma |xi|` accepted in a weight.
pub const MAX_EXPONENT: f64 = 700.0;

fn check_field(field: &[f64], grid: &Grid1D) -> Result<()> {
    if field.len() != grid.n() {
        return Err(MuskatError::Shape(format!(
            "field has {} samples, grid has {}",
            field.len(),
            grid.n()
        )));
    }
    if let Some(i) = field.iter().position(|v| !v.is_finite()) {
        return Err(MuskatError::NonFinite(format!("field sample {i}")));
    }
    Ok(())
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(MuskatError::InvalidParameter(format!(
            "gamma must be non-negative (got {gamma})"
        )));
    }
    Ok(())
}

/// Coefficients of `field` with sub-floor entries zeroed.
fn retained_spectrum(field: &[f64], grid: &Grid1D) -> Vec<Complex64> {
    let mut c = spectral::forward(grid, field);
    floor_coefficients(&mut c);
    c
}

fn floor_coefficients(c: &mut [Complex64]) {
    let peak = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let cut = NOISE_FLOOR * peak;
    for z in c.iter_mut() {
        if z.norm() <= cut {
            *z = Complex64::new(0.0, 0.0);
        }
    }
}

fn guard(c: &[Complex64], grid: &Grid1D, gamma: f64) -> Result<()> {
    for (m, z) in c.iter().enumerate() {
        if *z != Complex64::new(0.0, 0.0) {
            let e = 2.0 * gamma * grid.wavenumber(m).abs();
            if e > MAX_EXPONENT {
                return Err(MuskatError::ResolutionLoss(format!(
                    "weight exp({e:.1}) at wavenumber {:.1} exceeds the overflow guard",
                    grid.wavenumber(m)
                )));
            }
        }
    }
    Ok(())
}

/// `sum_m w(xi_m) |f_hat_m|^2 dxi / (2 pi)` for an arbitrary weight.
fn weighted_sum(c: &[Complex64], grid: &Grid1D, weight: impl Fn(f64) -> f64) -> f64 {
    let two_l = 2.0 * grid.half_length();
    c.iter()
        .enumerate()
        .filter(|(_, z)| z.norm_sqr() > 0.0)
        .map(|(m, z)| weight(grid.wavenumber(m)) * z.norm_sqr())
        .sum::<f64>()
        * two_l
}

fn sobolev_weight(xi: f64, k: u32) -> f64 {
    let x2 = xi * xi;
    let mut acc = 1.0;
    let mut p = 1.0;
    for _ in 0..k {
        p *= x2;
        acc += p;
    }
    acc
}

/// Squared `H^k_gamma` norm.
pub fn hk_gamma_norm_sq(field: &[f64], k: u32, gamma: f64, grid: &Grid1D) -> Result<f64> {
    check_field(field, grid)?;
    check_gamma(gamma)?;
    let c = retained_spectrum(field, grid);
    guard(&c, grid, gamma)?;
    Ok(weighted_sum(&c, grid, |xi| {
        sobolev_weight(xi, k) * 2.0 * (2.0 * gamma * xi).cosh()
    }))
}

/// Squared `L^2_gamma` norm of `Lambda^{1/2} d^k f`.
pub fn lambda_half_sq(field: &[f64], k: u32, gamma: f64, grid: &Grid1D) -> Result<f64> {
    check_field(field, grid)?;
    check_gamma(gamma)?;
    let c = retained_spectrum(field, grid);
    guard(&c, grid, gamma)?;
    Ok(weighted_sum(&c, grid, |xi| {
        xi.abs().powi(2 * k as i32 + 1) * 2.0 * (2.0 * gamma * xi).cosh()
    }))
}

/// Sup of `|f|` over both boundary lines `Im z = +gamma` and `Im z = -gamma`,
/// sampled at the grid abscissae.
pub fn linf_gamma_norm(field: &[f64], gamma: f64, grid: &Grid1D) -> Result<f64> {
    check_field(field, grid)?;
    check_gamma(gamma)?;
    let c = retained_spectrum(field, grid);
    linf_from_coeffs(&c, gamma, grid)
}

/// As [`linf_gamma_norm`] for the dealiased `k`-th derivative.
pub fn linf_gamma_derivative(field: &[f64], k: u32, gamma: f64, grid: &Grid1D) -> Result<f64> {
    check_field(field, grid)?;
    check_gamma(gamma)?;
    let mut c = spectral::derivative_coeffs(grid, &spectral::forward(grid, field), k);
    floor_coefficients(&mut c);
    linf_from_coeffs(&c, gamma, grid)
}

fn linf_from_coeffs(c: &[Complex64], gamma: f64, grid: &Grid1D) -> Result<f64> {
    guard(c, grid, gamma)?;
    let n = grid.n();
    let mut best: f64 = 0.0;
    for sign in [1.0, -1.0] {
        let weighted: Vec<Complex64> = c
            .iter()
            .enumerate()
            .map(|(m, z)| {
                let xi = grid.wavenumber(m);
                if 2 * m == n {
                    *z * (gamma * xi).cosh()
                } else {
                    *z * (-sign * gamma * xi).exp()
                }
            })
            .collect();
        let mut buf = weighted.clone();
        grid.fft_inverse().process(&mut buf);
        let values: Vec<f64> = buf.iter().map(|z| z.norm()).collect();
        let peak = values.iter().copied().fold(0.0, f64::max);
        if peak == 0.0 {
            continue;
        }
        best = best.max(peak);
        // The node maximum only approximates the supremum and jumps between
        // nodes as the field moves; polish each competitive local maximum on
        // the trigonometric interpolant.
        for j in 0..n {
            let v = values[j];
            if v >= 0.9 * peak && v >= values[(j + n - 1) % n] && v >= values[(j + 1) % n] {
                best = best.max(refine_peak(&weighted, j, grid));
            }
        }
    }
    Ok(best)
}

/// Interpolant `u(s) = sum_m w_m e^{i xi_m s}` and its first two derivatives,
/// with `s` measured from the first node.
fn interpolant(w: &[Complex64], s: f64, grid: &Grid1D) -> [Complex64; 3] {
    let n = grid.n();
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for (m, z) in w.iter().enumerate() {
        let xi = grid.wavenumber(m);
        let e = if 2 * m == n {
            Complex64::new((xi * s).cos(), 0.0)
        } else {
            Complex64::from_polar(1.0, xi * s)
        };
        let (d1, d2) = if 2 * m == n {
            (Complex64::new(-xi * (xi * s).sin(), 0.0), -xi * xi * e)
        } else {
            (Complex64::new(0.0, xi) * e, -xi * xi * e)
        };
        out[0] += z * e;
        out[1] += z * d1;
        out[2] += z * d2;
    }
    out
}

/// Newton ascent on `|u|^2` started at node `j`, kept within one spacing.
fn refine_peak(w: &[Complex64], j: usize, grid: &Grid1D) -> f64 {
    let dx = grid.spacing();
    let start = j as f64 * dx;
    let mut s = start;
    let mut best = interpolant(w, s, grid)[0].norm();
    for _ in 0..12 {
        let [u, du, ddu] = interpolant(w, s, grid);
        let g = 2.0 * (u.conj() * du).re;
        let h = 2.0 * (du.norm_sqr() + (u.conj() * ddu).re);
        if h >= 0.0 {
            break;
        }
        let next = (s - g / h).clamp(start - dx, start + dx);
        let value = interpolant(w, next, grid)[0].norm();
        if value < best {
            break;
        }
        let moved = (next - s).abs();
        best = value;
        s = next;
        if moved <= 1e-14 * dx {
            break;
        }
    }
    best
}

/// The two quadratic pieces of the dissipation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dissipation {
    pub h_block: f64,
    pub theta_block: f64,
}

impl Dissipation {
    /// `Diss_k = sqrt(h_block + theta_block)`.
    pub fn total(&self) -> f64 {
        (self.h_block + self.theta_block).sqrt()
    }
}

/// Symbol of the flat-interface `h` dissipation.
pub fn h_dissipation_symbol(xi: f64, params: &PhysicalParams) -> f64 {
    let a = xi.abs();
    let (m1, m2) = (params.mu1, params.mu2);
    2.0 * std::f64::consts::PI
        * a
        * (m1 * m1 + m2 * m2 + 2.0 * m1 * m2 * (-2.0 * params.sigma * a).exp())
}

/// `|xi| - (1 - e^{-2 sigma |xi|}) / (2 sigma)`, the gap-smoothed half derivative.
pub fn theta_weight(xi: f64, sigma: f64) -> f64 {
    let a = xi.abs();
    let z = 2.0 * sigma * a;
    // 1 - e^{-z} loses digits for small z; expm1 keeps them.
    a + (-z).exp_m1() / (2.0 * sigma)
}

/// Symbol of the flat-interface `theta` dissipation, without `mu1^2 mu2^2`.
pub fn theta_dissipation_symbol(xi: f64, sigma: f64) -> f64 {
    2.0 * std::f64::consts::PI * theta_weight(xi, sigma)
}

/// Dissipation of `d^k h` and `d^k theta` at strip width `gamma`.
pub fn diss_k(
    h: &[f64],
    theta: &[f64],
    k: u32,
    gamma: f64,
    params: &PhysicalParams,
    grid: &Grid1D,
) -> Result<Dissipation> {
    for f in [h, theta] {
        check_field(f, grid)?;
    }
    check_gamma(gamma)?;
    let ch = retained_spectrum(h, grid);
    let ct = retained_spectrum(theta, grid);
    guard(&ch, grid, gamma)?;
    guard(&ct, grid, gamma)?;
    let pk = |xi: f64| xi.abs().powi(2 * k as i32) * 2.0 * (2.0 * gamma * xi).cosh();
    let m12 = params.mu_product();
    Ok(Dissipation {
        h_block: weighted_sum(&ch, grid, |xi| pk(xi) * h_dissipation_symbol(xi, params)),
        theta_block: m12
            * m12
            * weighted_sum(&ct, grid, |xi| {
                pk(xi) * theta_dissipation_symbol(xi, params.sigma)
            }),
    })
}

/// `E = |h|^2_{H^k} + mu1 mu2 |theta|^2_{H^k} + |theta/sigma|^2_{H^{k-3}}`.
pub fn energy(state: &HThetaState, k: u32, params: &PhysicalParams, grid: &Grid1D) -> Result<f64> {
    if k < 3 {
        return Err(MuskatError::InvalidParameter(format!(
            "energy needs k >= 3 (got {k})"
        )));
    }
    let g = state.gamma;
    let th = hk_gamma_norm_sq(&state.theta, k, g, grid)?;
    let low = hk_gamma_norm_sq(&state.theta, k - 3, g, grid)?;
    Ok(hk_gamma_norm_sq(&state.h, k, g, grid)?
        + params.mu_product() * th
        + low / (params.sigma * params.sigma))
}

/// Exponential decay rate of the Fourier coefficients, from a least-squares
/// fit of `log |f_hat|` against `xi > 0`. `None` when fewer than two
/// positive wavenumbers carry signal.
pub fn strip_width_estimate(field: &[f64], grid: &Grid1D) -> Result<Option<f64>> {
    check_field(field, grid)?;
    let c = retained_spectrum(field, grid);
    let pts: Vec<(f64, f64)> = c
        .iter()
        .enumerate()
        .filter(|(m, z)| grid.signed_mode(*m) > 0 && 2 * m != grid.n() && z.norm() > 0.0)
        .map(|(m, z)| (grid.wavenumber(m), z.norm().ln()))
        .collect();
    if pts.len() < 2 {
        return Ok(None);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(Some((-sxy / sxx).max(0.0)))
}

/// One row of diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub t: f64,
    pub gamma: f64,
    /// `|h|^2_{H^k_gamma}`.
    pub hk_h: f64,
    /// `|theta|^2_{H^k_gamma}`.
    pub hk_theta: f64,
    /// `|theta|_{H^{k-3}_gamma} / sigma`.
    pub gap_ratio: f64,
    pub lambda_half_h: f64,
    pub lambda_half_theta: f64,
    pub linf_dh: f64,
    pub linf_dtheta: f64,
    pub diss: f64,
    pub energy: f64,
    pub min_distance: f64,
    /// Strip width fitted to the spectrum of `h`; `NaN` when undefined.
    pub width_estimate: f64,
}

impl NormReport {
    pub const CSV_HEADER: &'static str = "t,gamma,hk_h,hk_theta,gap_ratio,lambda_half_h,lambda_half_theta,linf_dh,linf_dtheta,diss,energy,min_distance,width_estimate";

    pub fn compute(
        state: &HThetaState,
        k: u32,
        params: &PhysicalParams,
        grid: &Grid1D,
    ) -> Result<Self> {
        let g = state.gamma;
        let hk_h = hk_gamma_norm_sq(&state.h, k, g, grid)?;
        let hk_theta = hk_gamma_norm_sq(&state.theta, k, g, grid)?;
        let low = hk_gamma_norm_sq(&state.theta, k.saturating_sub(3), g, grid)?;
        let iface = from_htheta(state, params);
        Ok(Self {
            t: state.t,
            gamma: g,
            hk_h,
            hk_theta,
            gap_ratio: low.sqrt() / params.sigma,
            lambda_half_h: lambda_half_sq(&state.h, k, g, grid)?,
            lambda_half_theta: lambda_half_sq(&state.theta, k, g, grid)?,
            linf_dh: linf_gamma_derivative(&state.h, 1, g, grid)?,
            linf_dtheta: linf_gamma_derivative(&state.theta, 1, g, grid)?,
            diss: diss_k(&state.h, &state.theta, k, g, params, grid)?.total(),
            energy: hk_h
                + params.mu_product() * hk_theta
                + low / (params.sigma * params.sigma),
            min_distance: min_distance(&iface.f, &iface.g, params.sigma, grid).0,
            width_estimate: strip_width_estimate(&state.h, grid)?.unwrap_or(f64::NAN),
        })
    }

    pub fn csv_row(&self) -> String {
        let v = [
            self.t,
            self.gamma,
            self.hk_h,
            self.hk_theta,
            self.gap_ratio,
            self.lambda_half_h,
            self.lambda_half_theta,
            self.linf_dh,
            self.linf_dtheta,
            self.diss,
            self.energy,
            self.min_distance,
            self.width_estimate,
        ];
        v.iter()
            .map(|x| format!("{x:.12e}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> Grid1D {
        Grid1D::new(PI, 64).unwrap()
    }

    fn cos_field(g: &Grid1D) -> Vec<f64> {
        g.nodes().iter().map(|x| x.cos()).collect()
    }

    #[test]
    fn sup_between_nodes_is_found() {
        let g = Grid1D::new(PI, 16).unwrap();
        let shift = 0.37 * g.spacing();
        let u: Vec<f64> = g.nodes().iter().map(|x| (3.0 * (x - shift)).cos()).collect();
        let v = linf_gamma_norm(&u, 0.2, &g).unwrap();
        assert!((v - 0.6_f64.cosh()).abs() < 1e-13, "{v}");
    }

    #[test]
    fn cosine_norms() {
        let g = grid();
        let f = cos_field(&g);
        assert!((hk_gamma_norm_sq(&f, 0, 0.0, &g).unwrap() - 2.0 * PI).abs() < 1e-12);
        assert!((hk_gamma_norm_sq(&f, 1, 0.0, &g).unwrap() - 4.0 * PI).abs() < 1e-12);
        let gam: f64 = 0.3;
        let want = 2.0 * PI * (2.0 * gam).cosh();
        assert!((hk_gamma_norm_sq(&f, 0, gam, &g).unwrap() - want).abs() < 1e-12);
        // cos(x + i gamma) has modulus sqrt(cos^2 x + sinh^2 gamma), largest at x = 0.
        let linf = linf_gamma_norm(&f, gam, &g).unwrap();
        assert!((linf - gam.cosh()).abs() < 1e-12);
    }

    #[test]
    fn zero_field_has_zero_norms() {
        let g = grid();
        let z = vec![0.0; 64];
        assert_eq!(hk_gamma_norm_sq(&z, 5, 0.5, &g).unwrap(), 0.0);
        assert_eq!(linf_gamma_norm(&z, 0.5, &g).unwrap(), 0.0);
        assert_eq!(strip_width_estimate(&z, &g).unwrap(), None);
    }

    #[test]
    fn overflow_guard() {
        let g = Grid1D::new(PI, 64).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|x| (30.0 * x).cos()).collect();
        assert!(matches!(
            hk_gamma_norm_sq(&f, 0, 20.0, &g),
            Err(MuskatError::ResolutionLoss(_))
        ));
        assert!(hk_gamma_norm_sq(&f, 0, 10.0, &g).is_ok());
    }

    #[test]
    fn theta_weight_small_argument() {
        let w = theta_weight(1e-6, 0.1);
        // |xi| - (1 - e^{-z})/(2 sigma) ~ sigma xi^2 for small xi.
        assert!((w - 0.1 * 1e-12).abs() < 1e-20);
        assert_eq!(theta_weight(0.0, 0.1), 0.0);
    }

    #[test]
    fn width_of_exponential_spectrum() {
        let g = Grid1D::new(PI, 128).unwrap();
        let a = 0.7;
        let f: Vec<f64> = g
            .nodes()
            .iter()
            .map(|x| (1..20).map(|m| (-a * m as f64).exp() * (m as f64 * x).cos()).sum())
            .collect();
        let w = strip_width_estimate(&f, &g).unwrap().unwrap();
        assert!((w - a).abs() < 1e-9);
        let single = cos_field(&g);
        assert_eq!(strip_width_estimate(&single, &g).unwrap(), None);
    }

    #[test]
    fn csv_row_matches_header() {
        let g = grid();
        let p = PhysicalParams::new(0.0, 1.0, 2.0, 0.1).unwrap();
        let s = HThetaState {
            h: cos_field(&g).iter().map(|v| 1e-3 * v).collect(),
            theta: vec![0.0; 64],
            gamma: 0.1,
            t: 0.0,
        };
        let r = NormReport::compute(&s, 3, &p, &g).unwrap();
        assert_eq!(
            r.csv_row().split(',').count(),
            NormReport::CSV_HEADER.split(',').count()
        );
    }

    #[test]
    fn shape_mismatch() {
        let g = grid();
        assert!(matches!(
            hk_gamma_norm_sq(&[1.0; 3], 0, 0.0, &g),
            Err(MuskatError::Shape(_))
        ));
    }
}
