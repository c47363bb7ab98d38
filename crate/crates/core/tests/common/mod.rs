//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use muskat_core::geometry::{Grid1D, PhysicalParams};
use rand::Rng;

/// Trigonometric polynomial `sum_j (a_j cos(m_j pi x / L) + b_j sin(m_j pi x / L))`
/// evaluated together with its derivatives from the closed form.
#[derive(Debug, Clone)]
pub struct BandLimited {
    pub half_length: f64,
    pub modes: Vec<(u32, f64, f64)>,
}

impl BandLimited {
    pub fn random<R: Rng>(rng: &mut R, half_length: f64, max_mode: u32, terms: usize) -> Self {
        let modes = (0..terms)
            .map(|_| {
                (
                    rng.gen_range(1..=max_mode),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                )
            })
            .collect();
        Self { half_length, modes }
    }

    /// `d^k/dx^k` of the polynomial at `x`.
    pub fn eval(&self, x: f64, k: u32) -> f64 {
        self.modes
            .iter()
            .map(|&(m, a, b)| {
                let w = m as f64 * PI / self.half_length;
                let phase = w * x + k as f64 * PI / 2.0;
                w.powi(k as i32) * (a * phase.cos() + b * phase.sin())
            })
            .sum()
    }

    pub fn sample(&self, grid: &Grid1D, k: u32) -> Vec<f64> {
        grid.nodes().iter().map(|&x| self.eval(x, k)).collect()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            half_length: self.half_length,
            modes: self.modes.iter().map(|&(m, a, b)| (m, s * a, s * b)).collect(),
        }
    }
}

/// `sum_{Gamma_+, Gamma_-} int_x int_R K(alpha) |u(x) - u(x - alpha)|^2 dalpha dx`
/// at `gamma = 0` for a periodic sampled field, by the trapezoid rule on grid
/// shifts over `periods` periods plus the analytic far-field tail.
///
/// `kernel` must stay finite times `alpha^2` at zero; `limit0` is
/// `lim_{alpha -> 0} K(alpha) alpha^2` and `tail` is `int_A^inf K`.
pub fn real_space_dissipation(
    u: &[f64],
    du: &[f64],
    spacing: f64,
    periods: usize,
    kernel: impl Fn(f64) -> f64,
    limit0: f64,
    tail: impl Fn(f64) -> f64,
) -> f64 {
    let n = u.len();
    let reach = periods * n;
    let mut total = 0.0;
    // alpha = 0 contributes limit0 * |u'|^2.
    total += du.iter().map(|d| limit0 * d * d).sum::<f64>() * spacing;
    for j in 1..=reach {
        let alpha = j as f64 * spacing;
        let k = kernel(alpha);
        let mut s = 0.0;
        for i in 0..n {
            let d = u[i] - u[(i + n - j % n) % n];
            s += d * d;
        }
        // Symmetric in alpha: count +alpha and -alpha.
        total += 2.0 * k * s * spacing;
    }
    total *= spacing;
    // Far field: the alpha-average of int_x |u(x) - u(x - alpha)|^2 is
    // 2 (int u^2 - (int u)^2 / period).
    let period = n as f64 * spacing;
    let int_u2: f64 = u.iter().map(|v| v * v).sum::<f64>() * spacing;
    let int_u: f64 = u.iter().sum::<f64>() * spacing;
    let mean_sq_diff = 2.0 * (int_u2 - int_u * int_u / period);
    let a = (reach as f64 + 0.5) * spacing;
    total += 2.0 * mean_sq_diff * tail(a);
    // Two boundary lines, identical at gamma = 0.
    2.0 * total
}

/// `D0_11` kernel of the `h` block.
pub fn d11_kernel(params: &PhysicalParams) -> (impl Fn(f64) -> f64 + '_, f64, impl Fn(f64) -> f64 + '_) {
    let s2 = 4.0 * params.sigma * params.sigma;
    let (m1, m2) = (params.mu1, params.mu2);
    let kernel = move |a: f64| {
        let x2 = a * a;
        (m1 * m1 + m2 * m2) / x2 + 2.0 * m1 * m2 * (x2 - s2) / ((x2 + s2) * (x2 + s2))
    };
    let limit0 = m1 * m1 + m2 * m2;
    let tail = move |a: f64| (m1 * m1 + m2 * m2) / a + 2.0 * m1 * m2 * a / (a * a + s2);
    (kernel, limit0, tail)
}

/// `(2 sigma)^2 / ((alpha^2 + (2 sigma)^2) alpha^2)`, the gap-smoothed kernel.
pub fn theta_kernel(sigma: f64) -> (impl Fn(f64) -> f64, f64, impl Fn(f64) -> f64) {
    let s = 2.0 * sigma;
    let kernel = move |a: f64| s * s / ((a * a + s * s) * a * a);
    let tail = move |a: f64| 1.0 / a - (PI / 2.0 - (a / s).atan()) / s;
    (kernel, 1.0, tail)
}

/// Closed orbit of `gamma' = -c2 c / (2 tanh(2 gamma))` under constant forcing `c`.
pub fn gamma_closed_form(gamma0: f64, c2: f64, forcing: f64, t: f64) -> f64 {
    let arg = (2.0 * gamma0).cosh() * (-c2 * forcing * t).exp();
    arg.acosh() / 2.0
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}
