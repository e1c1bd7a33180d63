//! Independent numerical oracles for the optimizer outputs.
//!
//! Nothing here reuses the closed forms of [`crate::vector`]: mutual
//! information goes through generalized eigenvalues of `(K_X, K_Z)`, the
//! optimum is recovered by grid search, feasibility is sampled, and the
//! scalar non-Gaussian comparison integrates densities directly.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis;
use crate::error::{Error, Result};
use crate::linalg::{self, SquareMatrix, SymmetricMatrix};
use crate::process::{QuadratureGrid, QuadratureRule, Simpson};
use crate::registry::{Named, Registry};
use crate::vector::{self, DistortionLaw, SourceCovariance};

/// `(1/2N) log det(K_Z⁻¹K_X + I)` in nats.
///
/// Computed from the eigenvalues `μ` of `K_Z^{-1/2} K_X K_Z^{-1/2}`, which are
/// the generalized eigenvalues of the pair.
pub fn gaussian_mi(src: &SourceCovariance, kz: &SymmetricMatrix) -> Result<f64> {
    let n = src.order();
    if kz.order() != n {
        return Err(Error::Domain(format!(
            "distortion covariance has order {}, source has {n}",
            kz.order()
        )));
    }
    let eig = linalg::eigh(kz)?;
    let max = eig.eigenvalues.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
    if !(eig.eigenvalues[0] > 1e-12 * max) {
        return Err(Error::Domain("distortion covariance is singular".into()));
    }
    let inv_sqrt = eig.synthesize(
        &eig.eigenvalues
            .iter()
            .map(|l| 1.0 / l.sqrt())
            .collect::<Vec<_>>(),
    )?;
    let w = inv_sqrt.matrix();
    let whitened = SymmetricMatrix::symmetrize(&w.matmul(src.matrix().matrix()).matmul(w))?;
    let mu = linalg::eigh(&whitened)?.eigenvalues;
    Ok(mu.iter().map(|&m| m.max(0.0).ln_1p()).sum::<f64>() / (2.0 * n as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BruteForceOptimum {
    /// Grid-best noise variances in the eigenbasis, ascending-eigenvalue order.
    pub band_variances: Vec<f64>,
    pub mutual_information: f64,
    /// Spacing of the search grid.
    pub cell: f64,
}

/// Grid search over diagonal-in-eigenbasis `K_Z` with `d₁ + d₂ = 2D` for a
/// two-dimensional source.
pub fn brute_force_optimum(
    src: &SourceCovariance,
    target_d: f64,
    grid_steps: usize,
) -> Result<BruteForceOptimum> {
    if src.order() != 2 {
        return Err(Error::Domain(format!(
            "brute force search needs a 2-dimensional source, got {}",
            src.order()
        )));
    }
    if grid_steps < 100 {
        return Err(Error::Domain(format!(
            "grid needs at least 100 steps, got {grid_steps}"
        )));
    }
    if !(target_d > 0.0 && target_d.is_finite()) {
        return Err(Error::Domain(format!(
            "distortion must be positive, got {target_d}"
        )));
    }
    let budget = 2.0 * target_d;
    let cell = budget / grid_steps as f64;
    let eig = src.decomposition();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for i in 1..grid_steps {
        let d1 = i as f64 * cell;
        let bands = vec![d1, budget - d1];
        let kz = eig.synthesize(&bands)?;
        let mi = gaussian_mi(src, &kz)?;
        if best.as_ref().is_none_or(|(m, _)| mi < *m) {
            best = Some((mi, bands));
        }
    }
    let (mutual_information, band_variances) =
        best.ok_or_else(|| Error::Domain("empty search grid".into()))?;
    Ok(BruteForceOptimum {
        band_variances,
        mutual_information,
        cell,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbationReport {
    pub trials: usize,
    /// Smallest objective change observed; negative means a perturbation improved it.
    pub min_increase: f64,
}

/// Adds random symmetric off-diagonal perturbations (in the eigenbasis of
/// `K_X`, trace preserved) to a diagonal noise allocation and records the
/// smallest change of the objective.
pub fn perturbation_check(
    src: &SourceCovariance,
    band_variances: &[f64],
    trials: usize,
    magnitude: f64,
    seed: u64,
) -> Result<PerturbationReport> {
    let n = src.order();
    let eig = src.decomposition();
    let base = gaussian_mi(src, &eig.synthesize(band_variances)?)?;
    let q = &eig.eigenvectors;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_increase = f64::INFINITY;
    for _ in 0..trials {
        let mut inner = SquareMatrix::from_diagonal(band_variances);
        for i in 0..n {
            for j in (i + 1)..n {
                let g: f64 = StandardNormal.sample(&mut rng);
                let e = magnitude * g;
                inner[(i, j)] = e;
                inner[(j, i)] = e;
            }
        }
        let kz = SymmetricMatrix::symmetrize(&q.matmul(&inner).matmul(&q.transpose()))?;
        if linalg::eigh(&kz)?.eigenvalues[0] <= 0.0 {
            continue;
        }
        min_increase = min_increase.min(gaussian_mi(src, &kz)? - base);
    }
    Ok(PerturbationReport {
        trials,
        min_increase,
    })
}

/// Additive noise independent of a scalar Gaussian source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseModel {
    Gaussian {
        variance: f64,
    },
    /// Zero-mean uniform noise with the given variance.
    Uniform {
        variance: f64,
    },
}

impl NoiseModel {
    pub fn variance(&self) -> f64 {
        match *self {
            NoiseModel::Gaussian { variance } | NoiseModel::Uniform { variance } => variance,
        }
    }

    fn pdf(&self, z: f64) -> f64 {
        match *self {
            NoiseModel::Gaussian { variance } => gaussian_pdf(z, variance),
            NoiseModel::Uniform { variance } => {
                let half = (3.0 * variance).sqrt();
                if z.abs() <= half {
                    0.5 / half
                } else {
                    0.0
                }
            }
        }
    }

    /// Integration range carrying all but a negligible part of the mass.
    fn support(&self, span_sigmas: f64) -> (f64, f64) {
        match *self {
            NoiseModel::Gaussian { variance } => {
                let r = span_sigmas * variance.sqrt();
                (-r, r)
            }
            NoiseModel::Uniform { variance } => {
                let half = (3.0 * variance).sqrt();
                (-half, half)
            }
        }
    }
}

fn gaussian_pdf(x: f64, variance: f64) -> f64 {
    (-0.5 * x * x / variance).exp() / (2.0 * PI * variance).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiQuadrature {
    /// Simpson intervals per axis (must be even).
    pub intervals: usize,
    /// Half-width of the output grid in combined standard deviations.
    pub span_sigmas: f64,
    /// Largest accepted change between this resolution and half of it.
    pub refinement_tol: f64,
}

impl Default for MiQuadrature {
    fn default() -> Self {
        Self {
            intervals: 2048,
            span_sigmas: 8.0,
            refinement_tol: 1e-3,
        }
    }
}

fn scaled_grid(intervals: usize, a: f64, b: f64) -> Result<QuadratureGrid> {
    let unit = Simpson.grid(intervals)?;
    let scale = (b - a) / PI;
    Ok(QuadratureGrid {
        nodes: unit.nodes.iter().map(|&x| a + x * scale).collect(),
        weights: unit.weights.iter().map(|&w| w * scale).collect(),
    })
}

fn neg_p_log_p(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.ln()
    } else {
        0.0
    }
}

fn scalar_mi_at(source_var: f64, noise: NoiseModel, intervals: usize, span: f64) -> Result<f64> {
    let (za, zb) = noise.support(span);
    let sy = (source_var + noise.variance()).sqrt();
    let ygrid = scaled_grid(intervals, -span * sy, span * sy)?;
    // Integrate the convolution over whichever variable keeps the integrand
    // smooth and well resolved: the noise support for uniform noise, the
    // narrower of source and noise for Gaussian noise.
    let over_noise = match noise {
        NoiseModel::Uniform { .. } => true,
        NoiseModel::Gaussian { variance } => variance <= source_var,
    };
    let inner = if over_noise {
        scaled_grid(intervals, za, zb)?
    } else {
        let r = span * source_var.sqrt();
        scaled_grid(intervals, -r, r)?
    };
    let inner_pdf: Vec<f64> = inner
        .nodes
        .iter()
        .zip(&inner.weights)
        .map(|(&t, &w)| {
            w * if over_noise {
                noise.pdf(t.clamp(za, zb))
            } else {
                gaussian_pdf(t, source_var)
            }
        })
        .collect();
    let h_y: f64 = ygrid
        .nodes
        .par_iter()
        .zip(ygrid.weights.par_iter())
        .map(|(&y, &wy)| {
            let p: f64 = inner
                .nodes
                .iter()
                .zip(&inner_pdf)
                .map(|(&t, &c)| {
                    c * if over_noise {
                        gaussian_pdf(y - t, source_var)
                    } else {
                        noise.pdf(y - t)
                    }
                })
                .sum();
            wy * neg_p_log_p(p)
        })
        .sum();
    let zgrid = scaled_grid(intervals, za, zb)?;
    let h_z = zgrid.integrate(|z| neg_p_log_p(noise.pdf(z.clamp(za, zb))));
    Ok(h_y - h_z)
}

/// `I(X; X+Z) = h(X+Z) − h(Z)` for scalar `X ~ N(0, source_var)` and
/// independent noise `Z`, by density quadrature.
///
/// Fails with [`Error::Precision`] when halving the resolution moves the
/// result by more than `spec.refinement_tol`.
pub fn scalar_mi_quadrature(source_var: f64, noise: NoiseModel, spec: MiQuadrature) -> Result<f64> {
    if !(source_var > 0.0 && noise.variance() > 0.0) {
        return Err(Error::Domain("variances must be positive".into()));
    }
    let fine = scalar_mi_at(source_var, noise, spec.intervals, spec.span_sigmas)?;
    let coarse = scalar_mi_at(source_var, noise, spec.intervals / 2, spec.span_sigmas)?;
    if (fine - coarse).abs() > spec.refinement_tol || !fine.is_finite() {
        return Err(Error::Precision(format!(
            "MI estimate moved by {:e} between refinements",
            (fine - coarse).abs()
        )));
    }
    Ok(fine)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McReport {
    pub sample_count: usize,
    /// Largest |entry| of the sample estimate of `E[X Zᵀ]`.
    pub empirical_cross_cov_max: f64,
    pub cross_cov_bound: f64,
    pub empirical_distortion: f64,
    pub target_distortion: f64,
}

impl McReport {
    pub fn cross_cov_ok(&self) -> bool {
        self.empirical_cross_cov_max <= self.cross_cov_bound
    }

    pub fn distortion_ok(&self) -> bool {
        (self.empirical_distortion - self.target_distortion).abs() <= 0.02 * self.target_distortion
    }

    pub fn passed(&self) -> bool {
        self.cross_cov_ok() && self.distortion_ok()
    }
}

pub const MC_BATCH: usize = 8192;

/// Samples `X ~ N(0, K_X)` and `Z ~ N(0, K_Z*)` independently.
///
/// Batch `b` draws from ChaCha8 stream `b` of `seed`, and batch sums are
/// combined in batch order, so results are bit-reproducible regardless of
/// thread scheduling.
pub fn monte_carlo_feasibility(
    src: &SourceCovariance,
    law: &DistortionLaw,
    sample_count: usize,
    seed: u64,
) -> Result<McReport> {
    if sample_count == 0 {
        return Err(Error::Domain("sample count must be positive".into()));
    }
    let n = src.order();
    let sqrt_x = linalg::apply_spectral(
        src.decomposition(),
        src.matrix().frobenius_norm(),
        f64::sqrt,
    )?;
    let sqrt_z = linalg::matrix_function(&law.covariance, f64::sqrt)?;
    let batches = sample_count.div_ceil(MC_BATCH);

    let partials: Vec<(Vec<f64>, f64)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let count = MC_BATCH.min(sample_count - b * MC_BATCH);
            let mut cross = vec![0.0; n * n];
            let mut power = 0.0;
            let mut g = vec![0.0; n];
            for _ in 0..count {
                g.iter_mut()
                    .for_each(|v| *v = StandardNormal.sample(&mut rng));
                let x = sqrt_x.matrix().matvec(&g);
                g.iter_mut()
                    .for_each(|v| *v = StandardNormal.sample(&mut rng));
                let z = sqrt_z.matrix().matvec(&g);
                for i in 0..n {
                    for j in 0..n {
                        cross[i * n + j] += x[i] * z[j];
                    }
                }
                power += z.iter().map(|v| v * v).sum::<f64>();
            }
            (cross, power)
        })
        .collect();

    let mut cross = vec![0.0; n * n];
    let mut power = 0.0;
    for (c, p) in &partials {
        for (acc, v) in cross.iter_mut().zip(c) {
            *acc += v;
        }
        power += p;
    }
    let m = sample_count as f64;
    let cross_max = cross.iter().fold(0.0_f64, |a, v| a.max((v / m).abs()));
    let max_noise = law.band_variances.iter().copied().fold(0.0, f64::max);
    Ok(McReport {
        sample_count,
        empirical_cross_cov_max: cross_max,
        cross_cov_bound: 5.0 * (src.max_eigenvalue() * max_noise / m).sqrt(),
        empirical_distortion: power / (m * n as f64),
        target_distortion: law.covariance.trace() / n as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub status: CheckStatus,
    pub detail: String,
    pub metrics: BTreeMap<&'static str, f64>,
}

impl CheckOutcome {
    fn new(name: &'static str, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name,
            status: if pass {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            detail: detail.into(),
            metrics: BTreeMap::new(),
        }
    }

    fn skip(name: &'static str, detail: impl Into<String>) -> Self {
        Self {
            name,
            status: CheckStatus::Skip,
            detail: detail.into(),
            metrics: BTreeMap::new(),
        }
    }

    fn metric(mut self, key: &'static str, value: f64) -> Self {
        self.metrics.insert(key, value);
        self
    }
}

/// Everything a check may look at.
pub struct CheckContext<'a> {
    pub source: &'a SourceCovariance,
    pub distortion: f64,
    pub alpha: f64,
    pub law: &'a DistortionLaw,
    pub samples: usize,
    pub seed: u64,
    /// Alternative per-band noise allocation to test for optimality.
    pub candidate: Option<&'a [f64]>,
}

impl<'a> CheckContext<'a> {
    fn rate(&self) -> f64 {
        vector::rate_perp(self.source, self.alpha).unwrap_or(f64::NAN)
    }
}

pub trait ValidationCheck: Named + Send + Sync {
    fn run(&self, ctx: &CheckContext<'_>) -> Result<CheckOutcome>;
}

/// Grid-search tolerance above the analytic minimum.
pub const BRUTE_FORCE_SLACK: f64 = 1e-4;

struct MiIdentity;
impl Named for MiIdentity {
    fn name(&self) -> &'static str {
        "mi-identity"
    }
}
impl ValidationCheck for MiIdentity {
    fn run(&self, ctx: &CheckContext<'_>) -> Result<CheckOutcome> {
        let mi = gaussian_mi(ctx.source, &ctx.law.covariance)?;
        let rate = ctx.rate();
        let diff = (mi - rate).abs();
        Ok(CheckOutcome::new(
            self.name(),
            diff <= 1e-10,
            "log-det MI of K_Z* equals R_perp",
        )
        .metric("mutual_information", mi)
        .metric("rate_perp", rate)
        .metric("abs_diff", diff))
    }
}

struct BruteForce;
impl Named for BruteForce {
    fn name(&self) -> &'static str {
        "brute-force"
    }
}
impl ValidationCheck for BruteForce {
    fn run(&self, ctx: &CheckContext<'_>) -> Result<CheckOutcome> {
        if ctx.source.order() != 2 {
            return Ok(CheckOutcome::skip(
                self.name(),
                "grid search runs on 2-dimensional sources only",
            ));
        }
        let opt = brute_force_optimum(ctx.source, ctx.distortion, 400)?;
        let rate = ctx.rate();
        let excess = opt.mutual_information - rate;
        let offset = opt
            .band_variances
            .iter()
            .zip(&ctx.law.band_variances)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        // Shrinking the optimum below the budget must cost rate.
        let eig = ctx.source.decomposition();
        let shrunk: Vec<f64> = ctx.law.band_variances.iter().map(|v| 0.9 * v).collect();
        let shrunk_mi = gaussian_mi(ctx.source, &eig.synthesize(&shrunk)?)?;
        let pass = offset <= opt.cell
            && (-1e-12..=BRUTE_FORCE_SLACK).contains(&excess)
            && shrunk_mi > rate;
        Ok(CheckOutcome::new(
            self.name(),
            pass,
            "400-step grid minimizer matches the analytic allocation",
        )
        .metric("grid_mi", opt.mutual_information)
        .metric("excess_over_rate", excess)
        .metric("max_band_offset", offset)
        .metric("cell", opt.cell)
        .metric("shrunk_budget_mi", shrunk_mi))
    }
}

struct Perturbation;
impl Named for Perturbation {
    fn name(&self) -> &'static str {
        "perturbation"
    }
}
impl ValidationCheck for Perturbation {
    fn run(&self, ctx: &CheckContext<'_>) -> Result<CheckOutcome> {
        if ctx.source.order() < 2 {
            return Ok(CheckOutcome::skip(
                self.name(),
                "no off-diagonal entries in one dimension",
            ));
        }
        let report = perturbation_check(
            ctx.source,
            &ctx.law.band_variances,
            100,
            1e-2 * ctx.distortion,
            ctx.seed,
        )?;
        Ok(CheckOutcome::new(
            self.name(),
            report.min_increase >= -1e-12,
            "off-diagonal perturbations of K_Z* never lower the objective",
        )
        .metric("trials", report.trials as f64)
        .metric("min_increase", report.min_increase))
    }
}

struct MonteCarlo;
impl Named for MonteCarlo {
    fn name(&self) -> &'static str {
        "monte-carlo"
    }
}
impl ValidationCheck for MonteCarlo {
    fn run(&self, ctx: &CheckContext<'_>) -> Result<CheckOutcome> {
        let r = monte_carlo_feasibility(ctx.source, ctx.law, ctx.samples, ctx.seed)?;
        Ok(CheckOutcome::new(
            self.name(),
            r.passed(),
            "sampled error is uncorrelated with the source and meets the budget",
        )
        .metric("samples", r.sample_count as f64)
        .metric("cross_cov_max", r.empirical_cross_cov_max)
        .metric("cross_cov_bound", r.cross_cov_bound)
        .metric("empirical_distortion", r.empirical_distortion)
        .metric("target_distortion", r.target_distortion))
    }
}

struct CandidateOptimality;
impl Named for CandidateOptimality {
    fn name(&self) -> &'static str {
        "candidate"
    }
}
impl ValidationCheck for CandidateOptimality {
    fn run(&self, ctx: &CheckContext<'_>) -> Result<CheckOutcome> {
        let Some(bands) = ctx.candidate else {
            return Ok(CheckOutcome::skip(
                self.name(),
                "no candidate allocation given",
            ));
        };
        let n = ctx.source.order();
        if bands.len() != n || bands.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Domain(format!(
                "candidate needs {n} positive band variances, got {bands:?}"
            )));
        }
        let mean = bands.iter().sum::<f64>() / n as f64;
        let mi = gaussian_mi(ctx.source, &ctx.source.decomposition().synthesize(bands)?)?;
        let rate = ctx.rate();
        let feasible = mean <= ctx.distortion * (1.0 + 1e-9);
        let optimal = mi <= rate + 1e-9;
        let detail = match (feasible, optimal) {
            (false, _) => "candidate exceeds the distortion budget",
            (true, false) => "candidate allocation is suboptimal",
            (true, true) => "candidate allocation attains R_perp",
        };
        Ok(CheckOutcome::new(self.name(), feasible && optimal, detail)
            .metric("candidate_mi", mi)
            .metric("rate_perp", rate)
            .metric("candidate_distortion", mean))
    }
}

struct Derivative;
impl Named for Derivative {
    fn name(&self) -> &'static str {
        "derivative"
    }
}
impl ValidationCheck for Derivative {
    fn run(&self, ctx: &CheckContext<'_>) -> Result<CheckOutcome> {
        let c = analysis::derivative_check(ctx.source, ctx.alpha, 1e-6)?;
        Ok(CheckOutcome::new(
            self.name(),
            c.relative_error <= analysis::DERIVATIVE_REL_TOL,
            "finite-difference slope equals -2/alpha",
        )
        .metric("analytic", c.analytic)
        .metric("numeric", c.numeric)
        .metric("relative_error", c.relative_error))
    }
}

struct Wiener;
impl Named for Wiener {
    fn name(&self) -> &'static str {
        "wiener-ratio"
    }
}
impl ValidationCheck for Wiener {
    fn run(&self, ctx: &CheckContext<'_>) -> Result<CheckOutcome> {
        let w = analysis::wiener_ratio(ctx.source, ctx.alpha)?;
        let direct = w.d_perp / w.d_prime;
        let pass = w.ratio > 1.0 && (direct - w.ratio).abs() <= 1e-10 * w.ratio;
        Ok(CheckOutcome::new(
            self.name(),
            pass,
            "Wiener post-filter strictly lowers distortion",
        )
        .metric("ratio", w.ratio)
        .metric("d_perp", w.d_perp)
        .metric("d_prime", w.d_prime))
    }
}

pub fn validation_checks() -> &'static Registry<dyn ValidationCheck> {
    static REGISTRY: OnceLock<Registry<dyn ValidationCheck>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        Registry::<dyn ValidationCheck>::new("validation check")
            .with("mi-identity", || Box::new(MiIdentity))
            .with("brute-force", || Box::new(BruteForce))
            .with("perturbation", || Box::new(Perturbation))
            .with("monte-carlo", || Box::new(MonteCarlo))
            .with("candidate", || Box::new(CandidateOptimality))
            .with("derivative", || Box::new(Derivative))
            .with("wiener-ratio", || Box::new(Wiener))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn src(l: &[f64]) -> SourceCovariance {
        SourceCovariance::from_eigenvalues(l).unwrap()
    }

    #[test]
    fn scalar_gaussian_mi() {
        let kz = SymmetricMatrix::diagonal(&[0.5]).unwrap();
        assert_relative_eq!(
            gaussian_mi(&src(&[1.0]), &kz).unwrap(),
            0.5 * 3.0_f64.ln(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn unit_snr_mi() {
        let m = SymmetricMatrix::from_rows(&[vec![2.0, 0.3], vec![0.3, 1.0]]).unwrap();
        let s = SourceCovariance::new(m.clone()).unwrap();
        assert_relative_eq!(
            gaussian_mi(&s, &m).unwrap(),
            0.5 * 2.0_f64.ln(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn singular_noise_is_rejected() {
        let kz = SymmetricMatrix::diagonal(&[1.0, 0.0]).unwrap();
        assert!(matches!(
            gaussian_mi(&src(&[1.0, 2.0]), &kz),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn brute_force_symmetric_source() {
        let opt = brute_force_optimum(&src(&[1.0, 1.0]), 0.5, 400).unwrap();
        assert_relative_eq!(opt.band_variances[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(opt.band_variances[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn brute_force_alpha_three_case() {
        let s = src(&[1.0, 4.0]);
        let d = vector::distortion_of_alpha(&s, 3.0).unwrap();
        let opt = brute_force_optimum(&s, d, 400).unwrap();
        assert!((opt.band_variances[0] - 0.5).abs() <= opt.cell);
        assert!((opt.band_variances[1] - 0.645_751_311_064_590_6).abs() <= opt.cell);
        assert_relative_eq!(
            opt.band_variances.iter().sum::<f64>(),
            2.0 * d,
            max_relative = 1e-14
        );
    }

    #[test]
    fn brute_force_rejects_bad_input() {
        assert!(brute_force_optimum(&src(&[1.0]), 0.5, 400).is_err());
        assert!(brute_force_optimum(&src(&[1.0, 2.0]), 0.5, 50).is_err());
    }

    #[test]
    fn perturbations_never_help_at_the_optimum() {
        let s = src(&[0.7, 3.0]);
        let law = vector::optimal_distortion_law(&s, 2.0).unwrap();
        let r = perturbation_check(&s, &law.band_variances, 100, 1e-2, 9).unwrap();
        assert!(r.min_increase >= 0.0);
    }

    #[test]
    fn gaussian_quadrature_mi() {
        let mi = scalar_mi_quadrature(
            1.0,
            NoiseModel::Gaussian { variance: 1.0 },
            MiQuadrature::default(),
        )
        .unwrap();
        assert!((mi - 0.5 * 2.0_f64.ln()).abs() < 1e-4, "{mi}");
    }

    #[test]
    fn uniform_noise_carries_more_information() {
        let spec = MiQuadrature::default();
        let g = scalar_mi_quadrature(1.0, NoiseModel::Gaussian { variance: 1.0 }, spec).unwrap();
        let u = scalar_mi_quadrature(1.0, NoiseModel::Uniform { variance: 1.0 }, spec).unwrap();
        assert!(u > g + 1e-3, "uniform {u} gaussian {g}");
        assert!((u - 0.520_405_853_065_623_7).abs() < 1e-8, "{u}");
    }

    #[test]
    fn huge_noise_kills_information() {
        let mi = scalar_mi_quadrature(
            1.0,
            NoiseModel::Gaussian { variance: 1e6 },
            MiQuadrature::default(),
        )
        .unwrap();
        assert!(mi.abs() < 1e-5, "{mi}");
    }

    #[test]
    fn coarse_grid_is_a_precision_error() {
        let spec = MiQuadrature {
            intervals: 4,
            span_sigmas: 8.0,
            refinement_tol: 1e-3,
        };
        let err =
            scalar_mi_quadrature(1.0, NoiseModel::Uniform { variance: 1.0 }, spec).unwrap_err();
        assert!(matches!(err, Error::Precision(_)));
    }

    #[test]
    fn monte_carlo_white_source() {
        let s = src(&[1.0, 1.0]);
        let law = vector::optimal_distortion_law(&s, 3.0).unwrap();
        let r = monte_carlo_feasibility(&s, &law, 100_000, 42).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_relative_eq!(r.target_distortion, 0.5, epsilon = 1e-14);
        assert_eq!(r, monte_carlo_feasibility(&s, &law, 100_000, 42).unwrap());
    }

    #[test]
    fn cross_covariance_shrinks_as_inverse_root_n() {
        let s = src(&[1.0, 4.0]);
        let law = vector::optimal_distortion_law(&s, 3.0).unwrap();
        let mean_stat = |n: usize| {
            (0..8)
                .map(|seed| {
                    monte_carlo_feasibility(&s, &law, n, seed)
                        .unwrap()
                        .empirical_cross_cov_max
                })
                .sum::<f64>()
                / 8.0
        };
        let slope = (mean_stat(1_000_000) / mean_stat(10_000)).log10() / 2.0;
        assert!((slope + 0.5).abs() <= 0.1, "slope {slope}");
    }

    #[test]
    fn registry_lists_all_checks() {
        let names = validation_checks().names();
        assert_eq!(names.len(), 7);
        assert!(names.contains(&"brute-force"));
    }
}
