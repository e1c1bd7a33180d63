//! Stationary Gaussian processes.
//!
//! The spectral counterparts of the vector formulas integrate over the
//! spectrum `S_X(ω)`:
//!
//! ```text
//! D(α) = 1/(4π) ∫ (√(S+α) − √S)·√S dω
//! R(α) = 1/(2π) ∫ log((√(S+α) + √S)/√α) dω
//! S_Z*(ω) = ½ (√(S+α) − √S)·√S
//! ```
//!
//! Real processes have even spectra, so every integral is evaluated on
//! `[0, π]` and doubled. The finite-order Toeplitz covariances of the process
//! feed back into [`crate::vector`], which is how [`convergence_experiment`]
//! measures the approach of `R⊥⁽ᴺ⁾` to the spectral value.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::WaterfillSolution;
use crate::bisect;
use crate::error::{Error, Result};
use crate::linalg::{SquareMatrix, SymmetricMatrix};
use crate::registry::{Named, Registry};
use crate::vector::{
    self, check_alpha, check_distortion, AlphaSolution, RdPoint, SourceCovariance, Units,
    ALPHA_REL_TOL,
};

/// Default number of quadrature intervals on `[0, π]`.
pub const DEFAULT_QUAD_INTERVALS: usize = 4096;

/// Spectra whose sampled minimum falls below this fraction of the maximum are rejected.
pub const DEFAULT_ADMISSIBILITY_FLOOR: f64 = 1e-9;

/// Nodes and positive weights on `[0, π]`; the weights sum to π.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫_0^π f`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&w, &c)| c * f(w))
            .sum()
    }

    /// `∫_0^π` of pre-sampled values.
    pub fn integrate_samples(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(c, v)| c * v).sum()
    }

    pub fn simpson(intervals: usize) -> Result<Self> {
        Simpson.grid(intervals)
    }

    pub fn default_simpson() -> Self {
        Self::simpson(DEFAULT_QUAD_INTERVALS).expect("default interval count is even")
    }
}

/// A composite quadrature rule on `[0, π]`.
pub trait QuadratureRule: Named + Send + Sync {
    fn grid(&self, intervals: usize) -> Result<QuadratureGrid>;
}

fn uniform_nodes(intervals: usize) -> Vec<f64> {
    let h = PI / intervals as f64;
    (0..=intervals).map(|i| i as f64 * h).collect()
}

/// Composite Simpson; needs an even, positive number of intervals.
#[derive(Debug, Clone, Copy, Default)]
pub struct Simpson;

impl Named for Simpson {
    fn name(&self) -> &'static str {
        "simpson"
    }
}

impl QuadratureRule for Simpson {
    fn grid(&self, intervals: usize) -> Result<QuadratureGrid> {
        if intervals < 2 || !intervals.is_multiple_of(2) {
            return Err(Error::Domain(format!(
                "Simpson's rule needs an even number of intervals, got {intervals}"
            )));
        }
        let h = PI / intervals as f64;
        let weights = (0..=intervals)
            .map(|i| {
                let c = if i == 0 || i == intervals {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                c * h / 3.0
            })
            .collect();
        Ok(QuadratureGrid {
            nodes: uniform_nodes(intervals),
            weights,
        })
    }
}

/// Composite trapezoid. Spectrally accurate for smooth periodic integrands.
#[derive(Debug, Clone, Copy, Default)]
pub struct Trapezoid;

impl Named for Trapezoid {
    fn name(&self) -> &'static str {
        "trapezoid"
    }
}

impl QuadratureRule for Trapezoid {
    fn grid(&self, intervals: usize) -> Result<QuadratureGrid> {
        if intervals < 1 {
            return Err(Error::Domain(
                "trapezoid rule needs at least one interval".into(),
            ));
        }
        let h = PI / intervals as f64;
        let weights = (0..=intervals)
            .map(|i| if i == 0 || i == intervals { 0.5 * h } else { h })
            .collect();
        Ok(QuadratureGrid {
            nodes: uniform_nodes(intervals),
            weights,
        })
    }
}

pub fn quadrature_rules() -> &'static Registry<dyn QuadratureRule> {
    static REGISTRY: OnceLock<Registry<dyn QuadratureRule>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        Registry::<dyn QuadratureRule>::new("quadrature rule")
            .with("simpson", || Box::new(Simpson))
            .with("trapezoid", || Box::new(Trapezoid))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumKind {
    /// `S(ω) = σ_w² / |1 − Σ a_m e^{−jmω}|²`.
    Ar {
        coeffs: Vec<f64>,
        innovation_variance: f64,
    },
    /// Samples of `S` on a uniform grid of `[0, π]`, linearly interpolated.
    Tabulated { samples: Vec<f64> },
    /// `S(ω) = r_0 + 2 Σ_{k≥1} r_k cos(kω)`.
    Autocorrelation { lags: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumModel {
    pub kind: SpectrumKind,
    pub floor: f64,
}

impl SpectrumModel {
    pub fn ar(coeffs: Vec<f64>, innovation_variance: f64) -> Result<Self> {
        if !(innovation_variance > 0.0 && innovation_variance.is_finite()) {
            return Err(Error::Admissibility(format!(
                "innovation variance must be positive, got {innovation_variance}"
            )));
        }
        if coeffs.iter().any(|a| !a.is_finite()) {
            return Err(Error::Admissibility(
                "AR coefficients must be finite".into(),
            ));
        }
        if !ar_is_stable(&coeffs) {
            return Err(Error::Admissibility(
                "AR polynomial has a root on or outside the unit circle".into(),
            ));
        }
        Ok(Self::unchecked(SpectrumKind::Ar {
            coeffs,
            innovation_variance,
        }))
    }

    pub fn white(variance: f64) -> Result<Self> {
        Self::ar(Vec::new(), variance)
    }

    pub fn tabulated(samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Admissibility(
                "a tabulated spectrum needs at least two samples".into(),
            ));
        }
        if samples.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Admissibility(
                "tabulated spectrum samples must be positive and finite".into(),
            ));
        }
        Ok(Self::unchecked(SpectrumKind::Tabulated { samples }))
    }

    pub fn autocorrelation(lags: Vec<f64>) -> Result<Self> {
        if lags.is_empty() || !(lags[0] > 0.0) || lags.iter().any(|r| !r.is_finite()) {
            return Err(Error::Admissibility(
                "autocorrelation needs a positive lag-0 value and finite lags".into(),
            ));
        }
        Ok(Self::unchecked(SpectrumKind::Autocorrelation { lags }))
    }

    fn unchecked(kind: SpectrumKind) -> Self {
        Self {
            kind,
            floor: DEFAULT_ADMISSIBILITY_FLOOR,
        }
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }

    /// `S_X(ω)`; `ω` is folded into `[0, π]` by evenness and periodicity.
    pub fn eval(&self, omega: f64) -> Result<f64> {
        let w = fold_frequency(omega);
        let s = match &self.kind {
            SpectrumKind::Ar {
                coeffs,
                innovation_variance,
            } => {
                let (mut re, mut im) = (1.0, 0.0);
                for (m, a) in coeffs.iter().enumerate() {
                    let phase = (m + 1) as f64 * w;
                    re -= a * phase.cos();
                    im += a * phase.sin();
                }
                innovation_variance / (re * re + im * im)
            }
            SpectrumKind::Tabulated { samples } => {
                let pos = w / PI * (samples.len() - 1) as f64;
                let i = (pos.floor() as usize).min(samples.len() - 2);
                let t = pos - i as f64;
                samples[i] * (1.0 - t) + samples[i + 1] * t
            }
            SpectrumKind::Autocorrelation { lags } => {
                lags[0]
                    + 2.0
                        * lags[1..]
                            .iter()
                            .enumerate()
                            .map(|(k, r)| r * ((k + 1) as f64 * w).cos())
                            .sum::<f64>()
            }
        };
        if s > 0.0 && s.is_finite() {
            Ok(s)
        } else {
            Err(Error::Admissibility(format!(
                "S({w}) = {s} is not positive"
            )))
        }
    }

    /// Samples the model on `grid` and checks the admissibility floor.
    pub fn sample(&self, grid: &QuadratureGrid) -> Result<SampledSpectrum> {
        let values = grid
            .nodes
            .iter()
            .map(|&w| self.eval(w))
            .collect::<Result<Vec<_>>>()?;
        let max = values.iter().copied().fold(0.0, f64::max);
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        if min <= self.floor * max {
            return Err(Error::Admissibility(format!(
                "spectrum minimum {min:e} is below {:e} x maximum {max:e}",
                self.floor
            )));
        }
        Ok(SampledSpectrum {
            grid: grid.clone(),
            values,
        })
    }

    /// Autocorrelation lags `r_0..=r_max_lag`.
    ///
    /// Closed forms for white and AR(1) models; explicit lags are zero-padded;
    /// everything else uses `r_k = (1/π) ∫_0^π S(ω) cos(kω) dω` on `grid`.
    pub fn autocorrelation_lags(&self, max_lag: usize, grid: &QuadratureGrid) -> Result<Vec<f64>> {
        match &self.kind {
            SpectrumKind::Ar {
                coeffs,
                innovation_variance,
            } if coeffs.len() <= 1 => {
                let a = coeffs.first().copied().unwrap_or(0.0);
                let r0 = innovation_variance / (1.0 - a * a);
                let mut lags = Vec::with_capacity(max_lag + 1);
                let mut r = r0;
                for _ in 0..=max_lag {
                    lags.push(r);
                    r *= a;
                }
                Ok(lags)
            }
            SpectrumKind::Autocorrelation { lags } => {
                let mut out = lags.clone();
                out.resize(max_lag + 1, 0.0);
                Ok(out)
            }
            _ => {
                let sampled = self.sample(grid)?;
                Ok((0..=max_lag)
                    .into_par_iter()
                    .map(|k| {
                        let k = k as f64;
                        grid.nodes
                            .iter()
                            .zip(&grid.weights)
                            .zip(&sampled.values)
                            .map(|((&w, &c), &s)| c * s * (k * w).cos())
                            .sum::<f64>()
                            / PI
                    })
                    .collect())
            }
        }
    }
}

fn fold_frequency(omega: f64) -> f64 {
    let w = omega.abs() % (2.0 * PI);
    if w > PI {
        2.0 * PI - w
    } else {
        w
    }
}

// Schur-Cohn step-down on 1 − Σ a_m z^{−m}; stable iff every reflection
// coefficient has magnitude below one.
fn ar_is_stable(coeffs: &[f64]) -> bool {
    let mut c: Vec<f64> = std::iter::once(1.0)
        .chain(coeffs.iter().map(|a| -a))
        .collect();
    while c.len() > 1 {
        let m = c.len() - 1;
        let k = c[m];
        if k.abs() >= 1.0 {
            return false;
        }
        let denom = 1.0 - k * k;
        let next: Vec<f64> = (0..m).map(|i| (c[i] - k * c[m - i]) / denom).collect();
        c = next;
    }
    true
}

/// Spectrum values at the nodes of a grid.
#[derive(Debug, Clone)]
pub struct SampledSpectrum {
    grid: QuadratureGrid,
    values: Vec<f64>,
}

impl SampledSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// `(1/2π)∫_{−π}^{π} g(S(ω)) dω`.
    pub fn mean_of(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.grid
            .weights
            .iter()
            .zip(&self.values)
            .map(|(c, &s)| c * g(s))
            .sum::<f64>()
            / PI
    }

    pub fn distortion(&self, alpha: f64) -> f64 {
        self.mean_of(|s| spectral_band_variance(s, alpha))
    }

    pub fn rate(&self, alpha: f64) -> f64 {
        self.mean_of(|s| vector::band_rate(s, alpha))
    }
}

/// `½(√(S+α) − √S)·√S` without cancellation.
pub fn spectral_band_variance(s: f64, alpha: f64) -> f64 {
    let root = s.sqrt();
    0.5 * alpha * root / ((s + alpha).sqrt() + root)
}

pub fn eval_spectrum(model: &SpectrumModel, omega: f64) -> Result<f64> {
    model.eval(omega)
}

pub fn spectral_distortion_of_alpha(
    model: &SpectrumModel,
    alpha: f64,
    grid: &QuadratureGrid,
) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(model.sample(grid)?.distortion(alpha))
}

pub fn spectral_rate_perp(model: &SpectrumModel, alpha: f64, grid: &QuadratureGrid) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(model.sample(grid)?.rate(alpha))
}

pub fn solve_alpha_sampled(spectrum: &SampledSpectrum, target_d: f64) -> Result<AlphaSolution> {
    check_distortion(target_d)?;
    let root = bisect::solve_monotone(|a| spectrum.distortion(a), target_d, true, ALPHA_REL_TOL)?;
    Ok(AlphaSolution::from_root(root, target_d))
}

pub fn solve_alpha_spectral(
    model: &SpectrumModel,
    target_d: f64,
    grid: &QuadratureGrid,
) -> Result<AlphaSolution> {
    check_distortion(target_d)?;
    solve_alpha_sampled(&model.sample(grid)?, target_d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDistortionLaw {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    pub alpha: f64,
    /// `(1/2π)∫ S_Z*`.
    pub distortion: f64,
}

pub fn optimal_spectrum(
    model: &SpectrumModel,
    alpha: f64,
    grid: &QuadratureGrid,
) -> Result<SpectralDistortionLaw> {
    check_alpha(alpha)?;
    let sampled = model.sample(grid)?;
    let values: Vec<f64> = sampled
        .values
        .iter()
        .map(|&s| spectral_band_variance(s, alpha))
        .collect();
    let distortion = grid.integrate_samples(&values) / PI;
    Ok(SpectralDistortionLaw {
        nodes: grid.nodes.clone(),
        values,
        alpha,
        distortion,
    })
}

/// Shannon R(D) of the process by reverse water-filling over the spectrum.
///
/// `active_bands` counts the quadrature nodes above the water level.
pub fn spectral_shannon_rd(spectrum: &SampledSpectrum, target_d: f64) -> Result<WaterfillSolution> {
    check_distortion(target_d)?;
    let level = |t: f64| spectrum.mean_of(|s| s.min(t));
    let (min, max) = (spectrum.min(), spectrum.max());
    let theta = if target_d <= min {
        target_d
    } else if target_d >= level(max) {
        max
    } else {
        bisect::solve_monotone(level, target_d, true, 1e-12)?
            .x
            .min(max)
    };
    let rate = spectrum.mean_of(|s| {
        if s > theta {
            0.5 * (s / theta).ln()
        } else {
            0.0
        }
    });
    Ok(WaterfillSolution {
        theta,
        rate,
        distortion: level(theta),
        active_bands: spectrum.values.iter().filter(|&&s| s > theta).count(),
    })
}

pub fn spectral_rd_point(
    spectrum: &SampledSpectrum,
    target_d: f64,
    units: Units,
) -> Result<RdPoint> {
    let sol = solve_alpha_sampled(spectrum, target_d)?;
    spectral_point_at_alpha(spectrum, sol.alpha, target_d, units)
}

pub fn spectral_distortion_of_rate(
    spectrum: &SampledSpectrum,
    target_rate: f64,
    units: Units,
) -> Result<RdPoint> {
    if !(target_rate > 0.0 && target_rate.is_finite()) {
        return Err(Error::Domain(format!(
            "rate must be positive and finite, got {target_rate}"
        )));
    }
    let root = bisect::solve_monotone(
        |a| spectrum.rate(a),
        units.to_nats(target_rate),
        false,
        ALPHA_REL_TOL,
    )?;
    let d = spectrum.distortion(root.x);
    spectral_point_at_alpha(spectrum, root.x, d, units)
}

fn spectral_point_at_alpha(
    spectrum: &SampledSpectrum,
    alpha: f64,
    distortion: f64,
    units: Units,
) -> Result<RdPoint> {
    let perp = spectrum.rate(alpha);
    let shannon = spectral_shannon_rd(spectrum, distortion)?.rate;
    Ok(RdPoint {
        distortion,
        alpha,
        rate_perp: units.from_nats(perp),
        rate_shannon: units.from_nats(shannon),
        rate_loss: units.from_nats(perp - shannon),
        units,
    })
}

/// Covariance of `order` consecutive samples of the process.
pub fn toeplitz_truncation(
    model: &SpectrumModel,
    order: usize,
    grid: &QuadratureGrid,
) -> Result<SourceCovariance> {
    if order == 0 {
        return Err(Error::Domain("Toeplitz order must be at least 1".into()));
    }
    let lags = model.autocorrelation_lags(order - 1, grid)?;
    let m = SquareMatrix::from_fn(order, |i, j| lags[i.abs_diff(j)]);
    let m = SymmetricMatrix::new(m)?;
    SourceCovariance::new(m).map_err(|e| match e {
        Error::InvalidMatrix(_) => Error::DegenerateToeplitz { order },
        other => other,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub order: usize,
    pub alpha: f64,
    pub rate_perp: f64,
    /// `|R⊥⁽ᴺ⁾ − R⊥|` in nats.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub distortion: f64,
    pub spectral_alpha: f64,
    pub spectral_rate_perp: f64,
    pub rows: Vec<ConvergenceRow>,
}

/// Finite-order `R⊥⁽ᴺ⁾(D)` for each Toeplitz truncation against the spectral value.
pub fn convergence_experiment(
    model: &SpectrumModel,
    target_d: f64,
    orders: &[usize],
    grid: &QuadratureGrid,
) -> Result<ConvergenceTable> {
    check_distortion(target_d)?;
    if orders.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("orders must be strictly ascending".into()));
    }
    let sampled = model.sample(grid)?;
    let spectral = solve_alpha_sampled(&sampled, target_d)?;
    let spectral_rate = sampled.rate(spectral.alpha);
    let rows = orders
        .par_iter()
        .map(|&order| {
            let src = toeplitz_truncation(model, order, grid)?;
            let sol = vector::solve_alpha(&src, target_d)?;
            let rate = vector::rate_perp(&src, sol.alpha)?;
            Ok(ConvergenceRow {
                order,
                alpha: sol.alpha,
                rate_perp: rate,
                gap: (rate - spectral_rate).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceTable {
        distortion: target_d,
        spectral_alpha: spectral.alpha,
        spectral_rate_perp: spectral_rate,
        rows,
    })
}
