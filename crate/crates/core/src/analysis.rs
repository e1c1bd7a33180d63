//! Comparisons against Shannon's R(D): reverse water-filling, the exact
//! rate loss when every band is active, the Wiener-filter distortion ratio,
//! and a finite-difference check of `dR⊥/dD = −2/α`.

use serde::Serialize;

use crate::bisect;
use crate::error::Result;
use crate::vector::{
    self, band_variance, check_alpha, check_distortion, distortion_unchecked, rate_unchecked,
    SourceCovariance,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaterfillSolution {
    /// Water level θ.
    pub theta: f64,
    /// Nats per dimension.
    pub rate: f64,
    pub distortion: f64,
    pub active_bands: usize,
}

/// Shannon rate-distortion of a Gaussian vector by reverse water-filling.
///
/// Targets at or beyond `tr(K_X)/N` give rate 0 with `θ = max λ`.
pub fn shannon_rd(src: &SourceCovariance, target_d: f64) -> Result<WaterfillSolution> {
    check_distortion(target_d)?;
    Ok(waterfill(src.eigenvalues(), target_d))
}

pub(crate) fn waterfill(lambdas: &[f64], target_d: f64) -> WaterfillSolution {
    let n = lambdas.len() as f64;
    let min = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let max = lambdas.iter().copied().fold(0.0, f64::max);
    let total = lambdas.iter().sum::<f64>() / n;

    let theta = if target_d <= min {
        target_d
    } else if target_d >= total {
        max
    } else {
        let level = |t: f64| lambdas.iter().map(|&l| l.min(t)).sum::<f64>() / n;
        // The map is piecewise linear and strictly increasing below max λ.
        bisect::solve_monotone(level, target_d, true, 1e-13)
            .map(|r| r.x.min(max))
            .unwrap_or(max)
    };
    from_level(lambdas, theta)
}

fn from_level(lambdas: &[f64], theta: f64) -> WaterfillSolution {
    let n = lambdas.len() as f64;
    let distortion = lambdas.iter().map(|&l| l.min(theta)).sum::<f64>() / n;
    let rate = lambdas
        .iter()
        .map(|&l| if l > theta { (l / theta).ln() } else { 0.0 })
        .sum::<f64>()
        / (2.0 * n);
    let active_bands = lambdas.iter().filter(|&&l| l > theta).count();
    WaterfillSolution {
        theta,
        rate,
        distortion,
        active_bands,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RateLossMode {
    /// `D(α) ≤ min λ`; the closed form is the rate loss itself.
    Exact,
    /// Some Shannon band is inactive; the closed form only bounds the loss from above.
    Bound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateLoss {
    /// `R⊥ − R` in nats.
    pub value: f64,
    /// The all-bands-active closed form.
    pub closed_form: f64,
    pub mode: RateLossMode,
}

/// Rate loss `R⊥(D) − R(D)` at parameter α.
pub fn rate_loss(src: &SourceCovariance, alpha: f64) -> Result<RateLoss> {
    check_alpha(alpha)?;
    let lambdas = src.eigenvalues();
    let d = distortion_unchecked(lambdas, alpha);
    let closed_form = rate_loss_closed_form(lambdas, alpha);
    if d <= src.min_eigenvalue() {
        Ok(RateLoss {
            value: closed_form,
            closed_form,
            mode: RateLossMode::Exact,
        })
    } else {
        let value = rate_unchecked(lambdas, alpha) - waterfill(lambdas, d).rate;
        Ok(RateLoss {
            value,
            closed_form,
            mode: RateLossMode::Bound,
        })
    }
}

/// `1/N Σ log((√(λ+α)+√λ)/√λ) + ½ log(1/(2N) Σ λ/(s+λ))` with `s = √(λ²+λα)`.
pub fn rate_loss_closed_form(lambdas: &[f64], alpha: f64) -> f64 {
    let n = lambdas.len() as f64;
    let first = lambdas
        .iter()
        .map(|&l| (1.0 + (1.0 + alpha / l).sqrt()).ln())
        .sum::<f64>()
        / n;
    let inner = lambdas
        .iter()
        .map(|&l| l / ((l * l + l * alpha).sqrt() + l))
        .sum::<f64>()
        / (2.0 * n);
    first + 0.5 * inner.ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WienerBound {
    /// Distortion of the uncorrelated reconstruction, `tr(K_Z*)/N`.
    pub d_perp: f64,
    /// Distortion after Wiener filtering, `tr[(K_X+K_Z*)⁻¹K_Z*K_X]/N`.
    pub d_prime: f64,
    /// `α Σ(s−λ) / (2 Σ(s−λ)²)`.
    pub ratio: f64,
}

pub fn wiener_ratio(src: &SourceCovariance, alpha: f64) -> Result<WienerBound> {
    check_alpha(alpha)?;
    let lambdas = src.eigenvalues();
    let n = lambdas.len() as f64;
    let z: Vec<f64> = lambdas.iter().map(|&l| band_variance(l, alpha)).collect();
    let d_perp = z.iter().sum::<f64>() / n;
    let d_prime = lambdas
        .iter()
        .zip(&z)
        .map(|(&l, &zk)| zk * l / (l + zk))
        .sum::<f64>()
        / n;
    // s − λ = 2·z
    let num: f64 = z.iter().map(|&zk| 2.0 * zk).sum();
    let den: f64 = z.iter().map(|&zk| 4.0 * zk * zk).sum();
    Ok(WienerBound {
        d_perp,
        d_prime,
        ratio: 0.5 * alpha * num / den,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeCheck {
    pub alpha: f64,
    pub distortion: f64,
    pub analytic: f64,
    pub numeric: f64,
    pub relative_error: f64,
    pub richardson: bool,
}

/// Tolerance on the relative gap between the finite difference and `−2/α`.
pub const DERIVATIVE_REL_TOL: f64 = 1e-5;

/// Compares `−2/α` with a central difference of `R⊥` over `D`.
///
/// The step is `h_rel·D(α)`. Both neighbours go through [`vector::solve_alpha`]
/// and the quotient uses the achieved distortions, so solver residuals do not
/// enter the slope. When the plain difference misses the tolerance a
/// Richardson extrapolation with `h/2` is used instead.
pub fn derivative_check(src: &SourceCovariance, alpha: f64, h_rel: f64) -> Result<DerivativeCheck> {
    check_alpha(alpha)?;
    let d = vector::distortion_of_alpha(src, alpha)?;
    let analytic = -2.0 / alpha;
    let slope = |h: f64| -> Result<f64> {
        let hi = vector::solve_alpha(src, d + h)?;
        let lo = vector::solve_alpha(src, d - h)?;
        let r_hi = vector::rate_perp(src, hi.alpha)?;
        let r_lo = vector::rate_perp(src, lo.alpha)?;
        Ok((r_hi - r_lo) / (hi.achieved_distortion - lo.achieved_distortion))
    };
    let h = h_rel * d;
    let mut numeric = slope(h)?;
    let mut richardson = false;
    if ((numeric - analytic) / analytic).abs() > DERIVATIVE_REL_TOL {
        let half = slope(0.5 * h)?;
        numeric = (4.0 * half - numeric) / 3.0;
        richardson = true;
    }
    Ok(DerivativeCheck {
        alpha,
        distortion: d,
        analytic,
        numeric,
        relative_error: ((numeric - analytic) / analytic).abs(),
        richardson,
    })
}

/// `R⊥ − R` at a given distortion, in nats.
pub fn gap_at_distortion(src: &SourceCovariance, d: f64) -> Result<f64> {
    let sol = vector::solve_alpha(src, d)?;
    let perp = rate_unchecked(src.eigenvalues(), sol.alpha);
    Ok(perp - shannon_rd(src, d)?.rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn src(l: &[f64]) -> SourceCovariance {
        SourceCovariance::from_eigenvalues(l).unwrap()
    }

    #[test]
    fn waterfill_scalar() {
        let w = shannon_rd(&src(&[1.0]), 0.5).unwrap();
        assert_eq!(w.theta, 0.5);
        assert_relative_eq!(w.rate, 0.5 * 2.0_f64.ln(), epsilon = 1e-15);
        assert_eq!(w.active_bands, 1);

        let w = shannon_rd(&src(&[1.0]), 1.0).unwrap();
        assert_eq!(w.rate, 0.0);
        assert_eq!(w.active_bands, 0);

        let w = shannon_rd(&src(&[1.0]), 7.0).unwrap();
        assert_eq!(w.rate, 0.0);
        assert_eq!(w.theta, 1.0);
    }

    #[test]
    fn waterfill_two_active_bands() {
        let w = shannon_rd(&src(&[1.0, 4.0]), 0.5).unwrap();
        assert_eq!(w.theta, 0.5);
        let expect = 0.25 * (2.0_f64.ln() + 8.0_f64.ln());
        assert_relative_eq!(w.rate, expect, epsilon = 1e-15);
        assert_relative_eq!(w.rate, 2.0_f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn waterfill_partial_activity() {
        // θ = 2 gives D = (1 + 2)/2 = 1.5 with only the λ = 4 band active.
        let w = shannon_rd(&src(&[1.0, 4.0]), 1.5).unwrap();
        assert_relative_eq!(w.theta, 2.0, max_relative = 1e-12);
        assert_eq!(w.active_bands, 1);
        assert_relative_eq!(w.rate, 0.25 * 2.0_f64.ln(), max_relative = 1e-12);
        assert_relative_eq!(w.distortion, 1.5, max_relative = 1e-12);
    }

    #[test]
    fn waterfill_rejects_non_positive() {
        assert!(shannon_rd(&src(&[1.0]), 0.0).is_err());
    }

    #[test]
    fn scalar_rate_loss_closed_form() {
        let loss = rate_loss(&src(&[1.0]), 3.0).unwrap();
        assert_eq!(loss.mode, RateLossMode::Exact);
        let expect = 3.0_f64.ln() + 0.5 * (1.0_f64 / 6.0).ln();
        assert_relative_eq!(loss.value, expect, epsilon = 1e-15);
        let diff = 3.0_f64.sqrt().ln() - 0.5 * 2.0_f64.ln();
        assert_relative_eq!(loss.value, diff, epsilon = 1e-14);
    }

    #[test]
    fn rate_loss_vanishes_at_small_alpha() {
        assert!(rate_loss(&src(&[1.0]), 1e-12).unwrap().value.abs() < 1e-10);
        let l = rate_loss(&src(&[1.0, 4.0]), 1e-6).unwrap();
        assert_eq!(l.mode, RateLossMode::Exact);
        assert!(l.value >= 0.0 && l.value <= 1e-3);
    }

    #[test]
    fn rate_loss_bound_mode_is_upper_bound() {
        let s = src(&[0.2, 5.0]);
        let alpha = 4.0;
        let loss = rate_loss(&s, alpha).unwrap();
        assert_eq!(loss.mode, RateLossMode::Bound);
        assert!(loss.value > 0.0);
        assert!(loss.closed_form >= loss.value);
    }

    #[test]
    fn scalar_wiener_ratio() {
        let w = wiener_ratio(&src(&[1.0]), 3.0).unwrap();
        assert_relative_eq!(w.d_perp, 0.5, epsilon = 1e-15);
        assert_relative_eq!(w.d_prime, 1.0 / 3.0, epsilon = 1e-15);
        assert!((w.ratio - 1.5).abs() <= 1e-12);
        assert_relative_eq!(w.d_perp / w.d_prime, w.ratio, max_relative = 1e-14);
    }

    #[test]
    fn wiener_ratio_grows_without_bound() {
        let s = src(&[1.0]);
        let r1 = wiener_ratio(&s, 1e2).unwrap().ratio;
        let r2 = wiener_ratio(&s, 1e6).unwrap().ratio;
        assert!(r2 > r1 && r2 > 400.0);
    }

    #[test]
    fn derivative_matches_analytic() {
        let c = derivative_check(&src(&[1.0]), 3.0, 1e-6).unwrap();
        assert_relative_eq!(c.analytic, -2.0 / 3.0);
        assert!(c.relative_error <= DERIVATIVE_REL_TOL, "{c:?}");
        let c = derivative_check(&src(&[1.0, 4.0]), 10.0, 1e-6).unwrap();
        assert_relative_eq!(c.analytic, -0.2);
        assert!(c.relative_error <= DERIVATIVE_REL_TOL, "{c:?}");
    }

    #[test]
    fn slope_flattens_with_distortion() {
        let s = src(&[0.5, 2.0, 3.0]);
        let a = derivative_check(&s, 1.0, 1e-6).unwrap();
        let b = derivative_check(&s, 5.0, 1e-6).unwrap();
        assert!(b.distortion > a.distortion);
        assert!(b.numeric > a.numeric);
    }
}
