//! FFT helpers on the periodic grid.
//!
//! Coefficients are stored in FFT order and normalised so that
//! `f[i] = sum_m c[m] exp(2 pi i m i / n)`. The continuous transform used by
//! the norms is `f_hat(xi_m) = 2L (-1)^m c[m]`.

use rustfft::num_complex::Complex64;

use crate::geometry::Grid1D;

/// Normalised forward transform of real samples.
pub fn forward(grid: &Grid1D, values: &[f64]) -> Vec<Complex64> {
    let n = grid.n();
    debug_assert_eq!(values.len(), n);
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    grid.fft_forward().process(&mut buf);
    let scale = 1.0 / n as f64;
    for c in &mut buf {
        *c *= scale;
    }
    buf
}

/// Inverse of [`forward`], keeping the real part.
pub fn inverse_real(grid: &Grid1D, mut coeffs: Vec<Complex64>) -> Vec<f64> {
    grid.fft_inverse().process(&mut coeffs);
    coeffs.into_iter().map(|c| c.re).collect()
}

/// True when mode `m` (FFT order) survives the two-thirds truncation.
pub fn kept_by_dealias(grid: &Grid1D, m: usize) -> bool {
    let n = grid.n() as i64;
    let mm = grid.signed_mode(m);
    3 * mm.abs() <= n && 2 * mm.abs() != n
}

/// Dealiased `order`-th derivative on the grid nodes.
pub fn derivative(grid: &Grid1D, values: &[f64], order: u32) -> Vec<f64> {
    let coeffs = forward(grid, values);
    inverse_real(grid, derivative_coeffs(grid, &coeffs, order))
}

/// Multiplies coefficients by `(i xi)^order` and applies the dealias mask.
pub fn derivative_coeffs(grid: &Grid1D, coeffs: &[Complex64], order: u32) -> Vec<Complex64> {
    coeffs
        .iter()
        .enumerate()
        .map(|(m, &c)| {
            if !kept_by_dealias(grid, m) {
                return Complex64::new(0.0, 0.0);
            }
            let xi = grid.wavenumber(m);
            c * Complex64::new(0.0, xi).powu(order)
        })
        .collect()
}

/// Values at the half nodes `x_i - dx/2` by exact band-limited interpolation.
pub fn half_shift(grid: &Grid1D, values: &[f64]) -> Vec<f64> {
    let coeffs = forward(grid, values);
    half_shift_coeffs(grid, coeffs)
}

/// Same as [`half_shift`] starting from coefficients.
pub fn half_shift_coeffs(grid: &Grid1D, mut coeffs: Vec<Complex64>) -> Vec<f64> {
    let h = grid.spacing();
    let n = grid.n();
    for (m, c) in coeffs.iter_mut().enumerate() {
        if 2 * m == n {
            *c = Complex64::new(0.0, 0.0);
            continue;
        }
        let phase = -grid.wavenumber(m) * h * 0.5;
        *c *= Complex64::from_polar(1.0, phase);
    }
    inverse_real(grid, coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_low_mode_is_exact() {
        let grid = Grid1D::new(std::f64::consts::PI, 64).unwrap();
        let f: Vec<f64> = grid.nodes().iter().map(|x| (3.0 * x).sin()).collect();
        let df = derivative(&grid, &f, 1);
        for (x, d) in grid.nodes().iter().zip(&df) {
            assert!((d - 3.0 * (3.0 * x).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn half_shift_interpolates_band_limited_data() {
        let grid = Grid1D::new(2.0, 32).unwrap();
        let k = std::f64::consts::PI / 2.0 * 3.0;
        let f: Vec<f64> = grid.nodes().iter().map(|x| (k * x).cos()).collect();
        let fh = half_shift(&grid, &f);
        let h = grid.spacing();
        for (x, v) in grid.nodes().iter().zip(&fh) {
            assert!((v - (k * (x - 0.5 * h)).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn roundtrip() {
        let grid = Grid1D::new(1.0, 16).unwrap();
        let f: Vec<f64> = (0..16).map(|i| (i as f64 * 0.37).sin() + 0.1 * i as f64).collect();
        let back = inverse_real(&grid, forward(&grid, &f));
        for (a, b) in f.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}
