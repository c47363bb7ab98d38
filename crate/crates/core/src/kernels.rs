//! Singular interaction kernels and the exact algebra around them.
//!
//! All functions here are pure and evaluate closed-form rational
//! expressions in the chord `dx = x - x1` and the interface values at the two
//! points. They back both the simulator and the verification suites.

use rand::Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{MuskatError, Result};
use crate::geometry::PhysicalParams;

/// Interface data at the pair of points `x` and `x1 = x - dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelArgs {
    pub dx: f64,
    pub f_x: f64,
    pub f_x1: f64,
    pub g_x: f64,
    pub g_x1: f64,
    /// `f'(x1)`.
    pub df_x1: f64,
    /// `g'(x1)`.
    pub dg_x1: f64,
    pub sigma: f64,
}

impl KernelArgs {
    pub fn delta_f(&self) -> f64 {
        self.f_x - self.f_x1
    }
    pub fn delta_g(&self) -> f64 {
        self.g_x - self.g_x1
    }
    pub fn theta_x(&self) -> f64 {
        self.f_x - self.g_x
    }
    pub fn theta_x1(&self) -> f64 {
        self.f_x1 - self.g_x1
    }
    pub fn dtheta_x1(&self) -> f64 {
        self.df_x1 - self.dg_x1
    }
    /// `2 sigma`, the unperturbed distance between the interfaces.
    pub fn gap(&self) -> f64 {
        2.0 * self.sigma
    }

    fn check(&self) -> Result<()> {
        if self.dx == 0.0 {
            return Err(MuskatError::InvalidParameter(
                "kernel evaluated at dx = 0".into(),
            ));
        }
        if !(self.sigma > 0.0) {
            return Err(MuskatError::InvalidParameter(format!(
                "sigma must be positive (got {})",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// Which of the four interaction kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelId {
    P11,
    P12,
    P21,
    P22,
}

impl KernelId {
    pub const ALL: [KernelId; 4] = [KernelId::P11, KernelId::P12, KernelId::P21, KernelId::P22];
}

#[inline]
pub(crate) fn cauchy(dx: f64, b: f64) -> f64 {
    dx / (dx * dx + b * b)
}

/// `P_ij(x, x1) = dx / (dx^2 + b^2)` with the vertical offset `b` of the pair.
pub fn eval_p(which: KernelId, args: &KernelArgs) -> Result<f64> {
    args.check()?;
    let b = match which {
        KernelId::P11 => args.delta_f(),
        KernelId::P12 => args.gap() + args.f_x - args.g_x1,
        KernelId::P21 => args.gap() + args.f_x1 - args.g_x,
        KernelId::P22 => args.delta_g(),
    };
    Ok(cauchy(args.dx, b))
}

/// The pieces of `d/dx1 P_ij` split into a part without slopes (`K`) and
/// a part linear in the slopes at `x1` (`J`). `P12` and `P21` each admit a
/// second splitting (the tilde pieces) written in terms of `g` instead of `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub k11: f64,
    pub j11: f64,
    pub k12: f64,
    pub j12: f64,
    pub k12_t: f64,
    pub j12_t: f64,
    pub k21: f64,
    pub j21: f64,
    pub k21_t: f64,
    pub j21_t: f64,
    pub k22: f64,
    pub j22: f64,
}

impl Decomposition {
    /// The six sums `K + J`, in the order
    /// `P11, P12, P12 (tilde), P21, P21 (tilde), P22`.
    pub fn sums(&self) -> [f64; 6] {
        [
            self.k11 + self.j11,
            self.k12 + self.j12,
            self.k12_t + self.j12_t,
            self.k21 + self.j21,
            self.k21_t + self.j21_t,
            self.k22 + self.j22,
        ]
    }
}

/// Kernel that each entry of [`Decomposition::sums`] differentiates.
pub const DECOMPOSITION_TARGETS: [KernelId; 6] = [
    KernelId::P11,
    KernelId::P12,
    KernelId::P12,
    KernelId::P21,
    KernelId::P21,
    KernelId::P22,
];

pub fn eval_decomposition(args: &KernelArgs) -> Result<Decomposition> {
    args.check()?;
    let dx = args.dx;
    let dx2 = dx * dx;
    let df = args.delta_f();
    let dg = args.delta_g();
    let s = args.gap();
    let th = args.theta_x();
    let th1 = args.theta_x1();
    let fp1 = args.df_x1;
    let gp1 = args.dg_x1;
    let thp1 = args.dtheta_x1();

    let d11 = dx2 + df * df;
    let d22 = dx2 + dg * dg;

    let a12 = df + s + th1;
    let d12 = dx2 + a12 * a12;
    let a12t = dg + s + th;
    let d12t = dx2 + a12t * a12t;
    let a21 = df - s - th;
    let d21 = dx2 + a21 * a21;
    let a21t = dg - s - th1;
    let d21t = dx2 + a21t * a21t;

    Ok(Decomposition {
        k11: 1.0 / d11,
        j11: 2.0 * df * (fp1 * dx - df) / (d11 * d11),
        k12: (dx2 + df * df - (s + th1).powi(2)) / (d12 * d12),
        j12: (2.0 * a12 * (fp1 * dx - df) - 2.0 * dx * thp1 * a12) / (d12 * d12),
        k12_t: (dx2 + dg * dg - (s + th).powi(2)) / (d12t * d12t),
        j12_t: 2.0 * a12t * (gp1 * dx - dg) / (d12t * d12t),
        k21: (dx2 + df * df - (s + th).powi(2)) / (d21 * d21),
        j21: 2.0 * a21 * (fp1 * dx - df) / (d21 * d21),
        k21_t: (dx2 + dg * dg - (s + th1).powi(2)) / (d21t * d21t),
        j21_t: (2.0 * a21t * (gp1 * dx - dg) + 2.0 * dx * thp1 * a21t) / (d21t * d21t),
        k22: 1.0 / d22,
        j22: 2.0 * dg * (gp1 * dx - dg) / (d22 * d22),
    })
}

/// Scaled arguments `w1` (chord slope), `w2`, `w3` (gap perturbations at the
/// two points relative to `2 sigma`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaArgs {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

/// Even coefficients `c0, c2, c4, c6`.
pub fn even_coefficients(w: LemmaArgs) -> [f64; 4] {
    let LemmaArgs { w1, w2, w3 } = w;
    let a = w1 * w1;
    let u = 1.0 + w2;
    let v = 1.0 + w3;
    let (u2, v2) = (u * u, v * v);
    let d2 = (w2 - w3) * (w2 - w3);
    let p = 1.0 + a;
    let c0 = u2 * u2 * v2 * v2;
    let c2 = 0.5 * (5.0 - 3.0 * a) * u2 * v2 * (u2 + v2) + 8.0 * a * u2 * v2 * d2;
    let c4 = 0.5 * p * (1.0 - 15.0 * a) * (u2 * u2 + v2 * v2)
        + (6.0 + 16.0 * a + 26.0 * a * a) * u2 * v2
        + 8.0 * a * p * (u2 + v2) * d2;
    let c6 = 1.5 * p * p * (1.0 - 3.0 * a) * (u2 + v2) + 8.0 * a * p * p * d2;
    [c0, c2, c4, c6]
}

/// Odd coefficients `c1, c3, c5, c7` divided by `w1 (w2 - w3)`.
pub fn odd_coefficients_reduced(w: LemmaArgs) -> [f64; 4] {
    let LemmaArgs { w1, w2, w3 } = w;
    let a = w1 * w1;
    let u = 1.0 + w2;
    let v = 1.0 + w3;
    let p = 1.0 + a;
    let q = u * u + u * v + v * v;
    let r = 10.0 + 26.0 * a;
    [
        4.0 * u.powi(3) * v.powi(3),
        -r * u * u * v * v + 4.0 * p * u * v * q,
        -2.0 * p * p * q + p * r * u * v,
        -2.0 * p * p * p,
    ]
}

/// All eight coefficients `c0 ... c7`.
pub fn lemma_coefficients(w: LemmaArgs) -> [f64; 8] {
    let e = even_coefficients(w);
    let o = odd_coefficients_reduced(w);
    let m = w.w1 * (w.w2 - w.w3);
    [e[0], m * o[0], e[1], m * o[1], e[2], m * o[2], e[3], m * o[3]]
}

/// Common denominator `G` of the splitting `K_f + e_f`.
pub fn poly_g(dx: f64, s: f64, w: LemmaArgs) -> f64 {
    let dx2 = dx * dx;
    let b1 = dx2 + (w.w1 * dx + s * (1.0 + w.w3)).powi(2);
    let b2 = dx2 + (-w.w1 * dx + s * (1.0 + w.w2)).powi(2);
    (1.0 + w.w1 * w.w1) * dx2 * b1 * b1 * b2 * b2
}

/// Even part `F = sum c_{2j} dx^{2j} s^{8-2j}`.
pub fn poly_f(dx: f64, s: f64, w: LemmaArgs) -> f64 {
    let c = even_coefficients(w);
    horner_even(&c, dx * dx, s * s) * s * s
}

/// Reduced odd part `E = sum c_{2j+1} / (w1 (w2 - w3)) dx^{2j} s^{6-2j}`.
pub fn poly_e(dx: f64, s: f64, w: LemmaArgs) -> f64 {
    let c = odd_coefficients_reduced(w);
    horner_even(&c, dx * dx, s * s)
}

// sum_j c[j] x^j y^(3-j)
fn horner_even(c: &[f64; 4], x: f64, y: f64) -> f64 {
    ((c[3] * x + c[2] * y) * x + c[1] * y * y) * x + c[0] * y * y * y
}

/// `(K_f, e_f)` with `K11 - K12/2 - K21/2 = K_f + e_f`.
pub fn eval_kf_ef(args: &KernelArgs) -> Result<(f64, f64)> {
    args.check()?;
    let s = args.gap();
    let dx = args.dx;
    let df = args.delta_f();
    let w = LemmaArgs {
        w1: df / dx,
        w2: args.theta_x() / s,
        w3: args.theta_x1() / s,
    };
    let g = poly_g(dx, s, w);
    let dtheta = args.theta_x() - args.theta_x1();
    Ok((poly_f(dx, s, w) / g, dtheta * df * poly_e(dx, s, w) / g))
}

/// `(K_g, e_g)` with `K22 - K12~/2 - K21~/2 = K_g + e_g`.
pub fn eval_kg_eg(args: &KernelArgs) -> Result<(f64, f64)> {
    args.check()?;
    let s = args.gap();
    let dx = args.dx;
    let dg = args.delta_g();
    let w = LemmaArgs {
        w1: dg / dx,
        w2: args.theta_x1() / s,
        w3: args.theta_x() / s,
    };
    let g = poly_g(dx, s, w);
    let dtheta = args.theta_x() - args.theta_x1();
    Ok((poly_f(dx, s, w) / g, -dtheta * dg * poly_e(dx, s, w) / g))
}

/// Flat-interface limits `(D0_11, D0_22)`.
pub fn eval_d0(dx: f64, params: &PhysicalParams) -> Result<(f64, f64)> {
    if dx == 0.0 {
        return Err(MuskatError::InvalidParameter("D0 evaluated at dx = 0".into()));
    }
    let s2 = 4.0 * params.sigma * params.sigma;
    let x2 = dx * dx;
    let (m1, m2) = (params.mu1, params.mu2);
    let d11 = (m1 * m1 + m2 * m2) / x2 + 2.0 * m1 * m2 * (x2 - s2) / (x2 + s2).powi(2);
    let f0 = s2 * (s2 * s2 * s2 + 5.0 * x2 * s2 * s2 + 7.0 * x2 * x2 * s2 + 3.0 * x2 * x2 * x2);
    let g0 = x2 * (x2 + s2).powi(4);
    Ok((d11, 2.0 * f0 / g0))
}

/// `P12 - P21` in factored form.
pub fn eval_antisym(args: &KernelArgs) -> Result<f64> {
    args.check()?;
    let dx = args.dx;
    let s = args.gap();
    let df = args.delta_f();
    let dg = args.delta_g();
    let th = args.theta_x();
    let th1 = args.theta_x1();
    let num = -dx * (2.0 * s + th + th1) * (df + dg);
    let den = (dx * dx + (df + s + th1).powi(2)) * (dx * dx + (-df + s + th).powi(2));
    Ok(num / den)
}

/// Quadratic form of the linearised energy estimate for complex amplitudes
/// `a` (the `h` component) and `b` (the `theta` component).
pub fn quadratic_form(
    args: &KernelArgs,
    params: &PhysicalParams,
    a: Complex64,
    b: Complex64,
) -> Result<f64> {
    let d = eval_decomposition(args)?;
    let (m1, m2) = (params.mu1, params.mu2);
    let m12 = m1 * m2;
    let d11 = m2 * m2 * d.k11 + 0.5 * m12 * (d.k12 + d.k21 + d.k12_t + d.k21_t) + m1 * m1 * d.k22;
    let lf = d.k11 - 0.5 * d.k12 - 0.5 * d.k21;
    let lg = d.k22 - 0.5 * d.k12_t - 0.5 * d.k21_t;
    let cross = m12 * (m2 * lf - m1 * lg);
    let bb = 0.5 * m12 * m12 * (lf + lg);
    Ok(0.5 * d11 * a.norm_sqr() + cross * (a * b.conj()).re + bb * b.norm_sqr())
}

/// Lower bound `margin (D0_11 |a|^2 + mu1^2 mu2^2 D0_22 |b|^2)` that the
/// quadratic form must dominate in the small-slope regime.
pub fn positivity_floor(
    dx: f64,
    params: &PhysicalParams,
    a: Complex64,
    b: Complex64,
    margin: f64,
) -> Result<f64> {
    let (d11, d22) = eval_d0(dx, params)?;
    let m12 = params.mu_product();
    Ok(margin * (d11 * a.norm_sqr() + m12 * m12 * d22 * b.norm_sqr()))
}

/// Both sides of `|prod a - prod b| <= prod max(|a_j|,|b_j|) * sum |a_j - b_j| / max(|a_j|,|b_j|)`.
pub fn product_perturbation(a: &[Complex64], b: &[Complex64]) -> Result<(f64, f64)> {
    if a.len() != b.len() {
        return Err(MuskatError::Shape(format!(
            "tuples of different length {} and {}",
            a.len(),
            b.len()
        )));
    }
    let pa: Complex64 = a.iter().product();
    let pb: Complex64 = b.iter().product();
    let mut pmax = 1.0;
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b) {
        let m = x.norm().max(y.norm());
        pmax *= m;
        if m > 0.0 {
            sum += (x - y).norm() / m;
        }
    }
    Ok(((pa - pb).norm(), pmax * sum))
}

/// Draws kernel arguments in the small-slope regime: chord slopes of both
/// interfaces, slopes at `x1` and `theta / sigma` at both points are each
/// bounded by `w0 / 3`.
#[derive(Debug, Clone, Copy)]
pub struct RegimeSampler {
    pub w0: f64,
    pub sigma_range: (f64, f64),
    /// Range of `|dx| / sigma`, sampled log-uniformly.
    pub ratio_range: (f64, f64),
}

impl RegimeSampler {
    pub fn new(w0: f64) -> Self {
        Self {
            w0,
            sigma_range: (1e-3, 0.5),
            ratio_range: (1e-2, 1e2),
        }
    }

    fn log_uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
        (rng.gen_range(lo.ln()..=hi.ln())).exp()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> KernelArgs {
        let bound = self.w0 / 3.0;
        let sym = |rng: &mut R| {
            if bound > 0.0 {
                rng.gen_range(-bound..=bound)
            } else {
                0.0
            }
        };
        loop {
            let sigma = Self::log_uniform(rng, self.sigma_range);
            let mut dx = sigma * Self::log_uniform(rng, self.ratio_range);
            if rng.gen::<bool>() {
                dx = -dx;
            }
            let s = 2.0 * sigma;
            let th = sym(rng) * sigma;
            let th1 = sym(rng) * sigma;
            let slope_f = sym(rng);
            let slope_g = slope_f - (th - th1) / dx;
            if slope_g.abs() > bound {
                continue;
            }
            let f_x1 = rng.gen_range(-1.0..=1.0) * s;
            let f_x = f_x1 + slope_f * dx;
            let g_x1 = f_x1 - th1;
            let g_x = f_x - th;
            return KernelArgs {
                dx,
                f_x,
                f_x1,
                g_x,
                g_x1,
                df_x1: sym(rng),
                dg_x1: sym(rng),
                sigma,
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn flat(dx: f64, sigma: f64) -> KernelArgs {
        KernelArgs {
            dx,
            f_x: 0.0,
            f_x1: 0.0,
            g_x: 0.0,
            g_x1: 0.0,
            df_x1: 0.0,
            dg_x1: 0.0,
            sigma,
        }
    }

    #[test]
    fn flat_kernels() {
        let a = flat(1.0, 0.5);
        assert_eq!(eval_p(KernelId::P11, &a).unwrap(), 1.0);
        assert_eq!(eval_p(KernelId::P12, &a).unwrap(), 0.5);
        assert_eq!(eval_p(KernelId::P21, &a).unwrap(), 0.5);
        assert!(eval_p(KernelId::P11, &flat(0.0, 0.5)).is_err());
    }

    #[test]
    fn lemma_polynomials_at_zero_perturbation() {
        let w = LemmaArgs {
            w1: 0.0,
            w2: 0.0,
            w3: 0.0,
        };
        assert_eq!(even_coefficients(w), [1.0, 5.0, 7.0, 3.0]);
        assert_eq!(lemma_coefficients(w)[1], 0.0);
        let (dx, s) = (1.0, 1.0);
        assert_eq!(poly_f(dx, s, w), 16.0);
        assert_eq!(poly_g(dx, s, w), 16.0);
    }

    #[test]
    fn d0_examples() {
        let p = PhysicalParams::new(0.0, 1.0, 2.0, 0.5).unwrap();
        let (d11, d22) = eval_d0(1.0, &p).unwrap();
        assert!((d11 - 0.5).abs() < 1e-15);
        assert!((d22 - 2.0).abs() < 1e-15);
        let x: f64 = 1e4;
        let (_, d22) = eval_d0(x, &p).unwrap();
        assert!((d22 * x.powi(4) - 6.0).abs() < 1e-6);
        assert!(eval_d0(0.0, &p).is_err());
    }

    #[test]
    fn antisym_vanishes_on_trivial_configurations() {
        let mut a = flat(0.3, 0.1);
        a.f_x = 0.02;
        a.f_x1 = 0.02;
        a.g_x = 0.02;
        a.g_x1 = 0.02;
        assert_eq!(eval_antisym(&a).unwrap(), 0.0);
        a.g_x = -0.02;
        a.g_x1 = -0.02;
        assert_eq!(eval_antisym(&a).unwrap(), 0.0);
    }

    #[test]
    fn sampler_respects_regime() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = RegimeSampler::new(1e-2);
        for _ in 0..1000 {
            let a = s.sample(&mut rng);
            let b = 1e-2 / 3.0 * (1.0 + 1e-12);
            assert!((a.delta_f() / a.dx).abs() <= b);
            assert!((a.delta_g() / a.dx).abs() <= b);
            assert!(a.theta_x().abs() / a.sigma <= b);
            assert!(a.theta_x1().abs() / a.sigma <= b);
        }
    }

    #[test]
    fn product_bound_simple() {
        let a = [Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)];
        let b = [Complex64::new(1.0, 0.0), Complex64::new(3.0, 0.0)];
        let (l, r) = product_perturbation(&a, &b).unwrap();
        assert_eq!(l, 1.0);
        assert_eq!(r, 1.0);
        assert!(product_perturbation(&a, &b[..1]).is_err());
    }
}
