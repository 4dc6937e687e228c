//! Variance-preserving diffusion schedule.
//!
//! Cosine noise schedule `σ_τ = (1 − cos(πτ))/2` over continuous diffusion
//! time τ ∈ [0, 1], with `α_τ = sqrt(1 − σ_τ²)` so that `α² + σ² = 1`.
//! From these the conditional forward coefficients and the reverse-step
//! multipliers (f, g, h) are derived. All schedule math is carried out in
//! `f64`: the reverse coefficients cancel heavily near τ ∈ {0, 1} and need
//! the headroom.
//!
//! The reverse-step multipliers implemented here are the ones obtained by
//! substituting the noise-estimation reparameterization into the Gaussian
//! posterior of the forward chain:
//!
//! ```text
//! f = 1/α_{τ|s}
//! g = σ²_{τ|s} / (α_{τ|s} σ_τ)
//! h = sqrt(σ²_{τ|s} σ²_s / σ²_τ)
//! ```
//!
//! so that `z_s = f z_τ − g ε̂ + h ε` has exactly the posterior mean and
//! standard deviation. The Monte-Carlo posterior test at the bottom of this
//! file checks the three multipliers against simulated forward chains.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Floor applied to α_τ inside coefficient computation. The schedule reaches
/// α = 0 exactly at τ = 1, which would make the first reverse step singular.
pub const ALPHA_MIN: f64 = 1e-4;

/// Continuous diffusion index τ ∈ [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct DiffusionTime(f64);

impl DiffusionTime {
    pub fn new(tau: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau) || !tau.is_finite() {
            return Err(Error::domain(
                "schedule",
                format!("diffusion time {tau} outside [0, 1]"),
            ));
        }
        Ok(DiffusionTime(tau))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Grid point i/T used by the discretized samplers.
    pub fn from_grid(i: usize, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::domain("schedule", "step count must be >= 1"));
        }
        DiffusionTime::new(i as f64 / steps as f64)
    }
}

/// The (σ, α) pair at one diffusion time.
#[derive(Debug, Clone, Copy)]
pub struct SchedulePoint {
    pub tau: DiffusionTime,
    pub sigma: f64,
    pub alpha: f64,
}

impl SchedulePoint {
    pub fn at(tau: DiffusionTime) -> Self {
        SchedulePoint { tau, sigma: sigma(tau), alpha: alpha(tau) }
    }
}

/// Multipliers of one reverse step from τ down to s:
/// `z_s = f·z_τ − g·ε̂ + h·ε`.
#[derive(Debug, Clone, Copy)]
pub struct StepCoefficients {
    pub f: f64,
    pub g: f64,
    pub h: f64,
}

/// Noise standard deviation `σ_τ = (1 − cos(πτ))/2`.
pub fn sigma(tau: DiffusionTime) -> f64 {
    (1.0 - (PI * tau.value()).cos()) / 2.0
}

/// Mean coefficient `α_τ = sqrt(1 − σ_τ²)`, floored at [`ALPHA_MIN`].
pub fn alpha(tau: DiffusionTime) -> f64 {
    let s = sigma(tau);
    (1.0 - s * s).max(0.0).sqrt().max(ALPHA_MIN)
}

/// Conditional mean coefficient `α_{τ|s} = α_τ / α_s`, for s ≤ τ.
pub fn alpha_ratio(tau: DiffusionTime, s: DiffusionTime) -> Result<f64> {
    check_order(tau, s)?;
    Ok(alpha(tau) / alpha(s))
}

/// Conditional noise variance `σ²_{τ|s} = σ²_τ − α²_{τ|s} σ²_s`, for s ≤ τ.
/// Round-off can push the exact-zero case slightly negative; clamp to 0.
pub fn sigma_cond_sq(tau: DiffusionTime, s: DiffusionTime) -> Result<f64> {
    check_order(tau, s)?;
    let ar = alpha(tau) / alpha(s);
    let st = sigma(tau);
    let ss = sigma(s);
    Ok((st * st - ar * ar * ss * ss).max(0.0))
}

/// Reverse-step multipliers (f, g, h) for one step from τ down to s < τ.
pub fn reverse_coefficients(tau: DiffusionTime, s: DiffusionTime) -> Result<StepCoefficients> {
    if s.value() >= tau.value() {
        return Err(Error::domain(
            "schedule",
            format!("reverse step needs s < tau, got s={} tau={}", s.value(), tau.value()),
        ));
    }
    if tau.value() == 0.0 {
        return Err(Error::domain("schedule", "reverse step from tau=0 is undefined"));
    }
    let ar = alpha(tau) / alpha(s);
    let st = sigma(tau);
    let ss = sigma(s);
    let var_cond = (st * st - ar * ar * ss * ss).max(0.0);
    let f = 1.0 / ar;
    let g = var_cond / (ar * st);
    let h = (var_cond * ss * ss / (st * st)).max(0.0).sqrt();
    Ok(StepCoefficients { f, g, h })
}

fn check_order(tau: DiffusionTime, s: DiffusionTime) -> Result<()> {
    if s.value() > tau.value() {
        return Err(Error::domain(
            "schedule",
            format!("expected s <= tau, got s={} tau={}", s.value(), tau.value()),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{rng_from_seed, standard_normal};

    fn t(x: f64) -> DiffusionTime {
        DiffusionTime::new(x).unwrap()
    }

    #[test]
    fn diffusion_time_rejects_out_of_range() {
        assert!(DiffusionTime::new(-0.01).is_err());
        assert!(DiffusionTime::new(1.01).is_err());
        assert!(DiffusionTime::new(f64::NAN).is_err());
        assert!(DiffusionTime::new(0.0).is_ok());
        assert!(DiffusionTime::new(1.0).is_ok());
    }

    #[test]
    fn sigma_endpoints_and_midpoint() {
        assert_eq!(sigma(t(0.0)), 0.0);
        assert_eq!(sigma(t(1.0)), 1.0);
        // (1 − cos(π/2))/2 = 1/2
        assert!((sigma(t(0.5)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn alpha_endpoints_and_midpoint() {
        assert_eq!(alpha(t(0.0)), 1.0);
        // unclamped value is 0 at τ=1
        assert_eq!(alpha(t(1.0)), ALPHA_MIN);
        assert!((alpha(t(0.5)) - 0.75f64.sqrt()).abs() < 1e-12);
        assert!((alpha(t(0.5)) - 0.8660254).abs() < 1e-7);
    }

    #[test]
    fn alpha_ratio_values() {
        assert!((alpha_ratio(t(0.3), t(0.3)).unwrap() - 1.0).abs() < 1e-15);
        assert!((alpha_ratio(t(0.5), t(0.0)).unwrap() - 0.8660254).abs() < 1e-7);
        // direct evaluation in double precision
        let expected = alpha(t(0.5)) / alpha(t(0.25));
        assert!((alpha_ratio(t(0.5), t(0.25)).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.87547).abs() < 1e-5);
        assert!(alpha_ratio(t(0.25), t(0.5)).is_err());
    }

    #[test]
    fn sigma_cond_sq_values() {
        assert_eq!(sigma_cond_sq(t(0.4), t(0.4)).unwrap(), 0.0);
        // s=0 has σ=0, so the conditional variance is σ²_τ
        assert!((sigma_cond_sq(t(0.5), t(0.0)).unwrap() - 0.25).abs() < 1e-15);
        // oracle: σ²_τ − α²_{τ|s} σ²_s evaluated directly
        let ar = alpha(t(0.5)) / alpha(t(0.25));
        let expected = 0.25 - ar * ar * sigma(t(0.25)) * sigma(t(0.25));
        assert!((sigma_cond_sq(t(0.5), t(0.25)).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.23356).abs() < 1e-5);
        assert!(sigma_cond_sq(t(0.25), t(0.5)).is_err());
    }

    #[test]
    fn reverse_coefficients_half_to_zero() {
        let c = reverse_coefficients(t(0.5), t(0.0)).unwrap();
        assert!((c.f - 1.154701).abs() < 1e-6);
        assert!((c.g - 0.57735).abs() < 1e-5);
        assert_eq!(c.h, 0.0);
    }

    #[test]
    fn reverse_coefficients_degenerate_limit() {
        // s → τ: f → 1, g → 0, h → 0.
        let c = reverse_coefficients(t(0.500001), t(0.5)).unwrap();
        assert!((c.f - 1.0).abs() < 1e-5);
        assert!(c.g.abs() < 1e-5);
        assert!(c.h.abs() < 1e-2); // h ~ sqrt of a tiny variance, slower limit
        assert!(reverse_coefficients(t(0.5), t(0.5)).is_err());
        assert!(reverse_coefficients(t(0.0), t(0.0)).is_err());
    }

    #[test]
    fn variance_preservation_on_grid() {
        for i in 0..=1000 {
            let tau = t(i as f64 / 1000.0);
            let a = (1.0 - sigma(tau) * sigma(tau)).max(0.0).sqrt(); // unclamped
            let s = sigma(tau);
            assert!((a * a + s * s - 1.0).abs() < 1e-12, "tau={}", tau.value());
        }
    }

    #[test]
    fn composition_identities_on_grid() {
        // α_{τ|s}·α_{s|r} = α_{τ|r} and σ²_τ = α²_{τ|s}σ²_s + σ²_{τ|s}
        let grid: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
        for (ri, &r) in grid.iter().enumerate() {
            for (si, &s) in grid.iter().enumerate().skip(ri) {
                for &tau in grid.iter().skip(si) {
                    let (r, s, tau) = (t(r), t(s), t(tau));
                    let lhs = alpha_ratio(tau, s).unwrap() * alpha_ratio(s, r).unwrap();
                    let rhs = alpha_ratio(tau, r).unwrap();
                    assert!((lhs - rhs).abs() < 1e-12);
                    let ar = alpha_ratio(tau, s).unwrap();
                    let marginal = ar * ar * sigma(s) * sigma(s) + sigma_cond_sq(tau, s).unwrap();
                    assert!((marginal - sigma(tau) * sigma(tau)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn sigma_strictly_increasing() {
        let mut prev = sigma(t(0.0005));
        for i in 2..2000 {
            let cur = sigma(t(i as f64 * 0.0005));
            assert!(cur > prev, "sigma not increasing at i={i}");
            prev = cur;
        }
    }

    /// Monte-Carlo posterior oracle. Simulate scalar forward chains
    /// x → z_s → z_τ at fixed x, then regress z_s on z_τ. The reverse step
    /// with the exact ε = (z_τ − α_τ x)/σ_τ is affine in z_τ:
    ///   f z_τ − g ε = (f − g/σ_τ) z_τ + (g α_τ/σ_τ) x
    /// so the regression slope, intercept, and residual std must match
    /// (f − g/σ_τ), (g α_τ/σ_τ)·x, and h within Monte-Carlo error.
    #[test]
    fn posterior_regression_oracle() {
        let n = 200_000;
        let mut rng = rng_from_seed(11);
        for &(tau_v, s_v) in &[(0.5, 0.25), (0.8, 0.6), (0.3, 0.1)] {
            let (tau, s) = (t(tau_v), t(s_v));
            let x = 0.7;
            let a_s = alpha(s);
            let sg_s = sigma(s);
            let ar = alpha_ratio(tau, s).unwrap();
            let var_c = sigma_cond_sq(tau, s).unwrap();
            let mut zs = Vec::with_capacity(n);
            let mut zt = Vec::with_capacity(n);
            for _ in 0..n {
                let z_s = a_s * x + sg_s * standard_normal(&mut rng);
                let z_t = ar * z_s + var_c.sqrt() * standard_normal(&mut rng);
                zs.push(z_s);
                zt.push(z_t);
            }
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            let mz = mean(&zt);
            let ms = mean(&zs);
            let cov: f64 =
                zt.iter().zip(&zs).map(|(a, b)| (a - mz) * (b - ms)).sum::<f64>() / n as f64;
            let var: f64 = zt.iter().map(|a| (a - mz) * (a - mz)).sum::<f64>() / n as f64;
            let slope = cov / var;
            let intercept = ms - slope * mz;
            let resid_var: f64 = zt
                .iter()
                .zip(&zs)
                .map(|(a, b)| {
                    let r = b - (slope * a + intercept);
                    r * r
                })
                .sum::<f64>()
                / n as f64;

            let c = reverse_coefficients(tau, s).unwrap();
            let st = sigma(tau);
            let slope_pred = c.f - c.g / st;
            let intercept_pred = c.g * alpha(tau) / st * x;
            // standard errors of the regression estimates
            let se_slope = resid_var.sqrt() / (var.sqrt() * (n as f64).sqrt());
            let se_intercept = resid_var.sqrt() / (n as f64).sqrt()
                * (1.0 + mz * mz / var).sqrt();
            let se_var = resid_var * (2.0 / n as f64).sqrt();
            assert!(
                (slope - slope_pred).abs() < 3.0 * se_slope,
                "slope {slope} vs {slope_pred} at (tau={tau_v}, s={s_v})"
            );
            assert!(
                (intercept - intercept_pred).abs() < 3.0 * se_intercept,
                "intercept {intercept} vs {intercept_pred}"
            );
            assert!(
                (resid_var - c.h * c.h).abs() < 3.0 * se_var,
                "residual var {resid_var} vs {}",
                c.h * c.h
            );
        }
    }

    #[test]
    fn posterior_mean_closed_form_identity() {
        // With the exact ε used in the forward perturbation, f z_τ − g ε must
        // equal the posterior mean (α_{τ|s}σ²_s/σ²_τ) z_τ + (α_s σ²_{τ|s}/σ²_τ) x.
        let mut rng = rng_from_seed(3);
        for &(tau_v, s_v) in &[(0.5, 0.25), (0.9, 0.7), (0.2, 0.05)] {
            let (tau, s) = (t(tau_v), t(s_v));
            for _ in 0..50 {
                let x = standard_normal(&mut rng);
                let eps = standard_normal(&mut rng);
                let z_t = alpha(tau) * x + sigma(tau) * eps;
                let c = reverse_coefficients(tau, s).unwrap();
                let lhs = c.f * z_t - c.g * eps;
                let ar = alpha_ratio(tau, s).unwrap();
                let st2 = sigma(tau) * sigma(tau);
                let rhs = ar * sigma(s) * sigma(s) / st2 * z_t
                    + alpha(s) * sigma_cond_sq(tau, s).unwrap() / st2 * x;
                assert!((lhs - rhs).abs() < 1e-10, "mismatch {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn grid_constructor() {
        assert_eq!(DiffusionTime::from_grid(0, 4).unwrap().value(), 0.0);
        assert_eq!(DiffusionTime::from_grid(4, 4).unwrap().value(), 1.0);
        assert!(DiffusionTime::from_grid(1, 0).is_err());
    }
}
