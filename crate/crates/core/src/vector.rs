//! Uncorrelated-distortion rate-distortion function of Gaussian vectors.
//!
//! For a source with covariance eigenvalues `λ_k` the optimal end-to-end
//! distortion is Gaussian with covariance
//! `K_Z* = ½·sqrt(K_X² + α·K_X) − ½·K_X`, where the scalar `α > 0` is fixed
//! by the distortion budget
//!
//! ```text
//! D(α) = 1/(2N) Σ_k ( sqrt(λ_k² + λ_k α) − λ_k )
//! R(α) = 1/N    Σ_k log( (sqrt(λ_k + α) + sqrt(λ_k)) / sqrt(α) )
//! ```
//!
//! All rates are computed in nats; [`Units`] converts at the edges.

use serde::Serialize;

use crate::analysis;
use crate::bisect::{self, Root};
use crate::error::{Error, Result};
use crate::linalg::{self, EigenDecomposition, SquareMatrix, SymmetricMatrix};

/// Relative distortion residual accepted from the α solver.
pub const ALPHA_REL_TOL: f64 = 1e-10;

/// Relative threshold below which an eigenvalue counts as zero.
pub const DEGENERACY_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    Nats,
    Bits,
}

impl Units {
    /// Converts a rate in nats into these units.
    pub fn from_nats(self, nats: f64) -> f64 {
        match self {
            Units::Nats => nats,
            Units::Bits => nats / std::f64::consts::LN_2,
        }
    }

    pub fn to_nats(self, value: f64) -> f64 {
        match self {
            Units::Nats => value,
            Units::Bits => value * std::f64::consts::LN_2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Units::Nats => "nats",
            Units::Bits => "bits",
        }
    }
}

impl std::str::FromStr for Units {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nats" => Ok(Units::Nats),
            "bits" => Ok(Units::Bits),
            other => Err(Error::Domain(format!("unknown units `{other}`"))),
        }
    }
}

/// Positive-definite source covariance with its cached eigendecomposition.
#[derive(Debug, Clone)]
pub struct SourceCovariance {
    matrix: SymmetricMatrix,
    eig: EigenDecomposition,
}

impl SourceCovariance {
    pub fn new(matrix: SymmetricMatrix) -> Result<Self> {
        let eig = linalg::eigh(&matrix)?;
        Self::with_decomposition(matrix, eig)
    }

    /// Diagonal covariance with the given variances.
    pub fn from_eigenvalues(eigenvalues: &[f64]) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidMatrix("no eigenvalues given".into()));
        }
        let matrix = SymmetricMatrix::diagonal(eigenvalues)?;
        Self::new(matrix)
    }

    pub fn with_decomposition(matrix: SymmetricMatrix, eig: EigenDecomposition) -> Result<Self> {
        let max = eig.eigenvalues.iter().fold(0.0_f64, |m, &l| m.max(l.abs()));
        let min = eig.eigenvalues.first().copied().unwrap_or(0.0);
        if !(max > 0.0) || min <= DEGENERACY_REL_TOL * max {
            return Err(Error::InvalidMatrix(format!(
                "covariance is not positive definite (eigenvalues in [{min:e}, {max:e}])"
            )));
        }
        Ok(Self { matrix, eig })
    }

    pub fn order(&self) -> usize {
        self.matrix.order()
    }

    pub fn matrix(&self) -> &SymmetricMatrix {
        &self.matrix
    }

    pub fn decomposition(&self) -> &EigenDecomposition {
        &self.eig
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig.eigenvalues
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eig.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eig.eigenvalues.last().unwrap()
    }

    /// `tr(K_X)/N`, the per-dimension source variance.
    pub fn mean_variance(&self) -> f64 {
        self.eigenvalues().iter().sum::<f64>() / self.order() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaSolution {
    pub alpha: f64,
    pub target_distortion: f64,
    pub achieved_distortion: f64,
    pub iterations: usize,
    pub residual: f64,
}

impl AlphaSolution {
    pub(crate) fn from_root(root: Root, target: f64) -> Self {
        Self {
            alpha: root.x,
            target_distortion: target,
            achieved_distortion: root.value,
            iterations: root.iterations,
            residual: (root.value - target).abs(),
        }
    }
}

/// Optimal distortion statistics of a vector source.
#[derive(Debug, Clone)]
pub struct DistortionLaw {
    pub covariance: SymmetricMatrix,
    /// Noise variance per KLT band, aligned with the ascending eigenvalues.
    pub band_variances: Vec<f64>,
    pub klt: EigenDecomposition,
    pub alpha: f64,
}

/// One evaluated point of the rate-distortion curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RdPoint {
    pub distortion: f64,
    pub alpha: f64,
    pub rate_perp: f64,
    pub rate_shannon: f64,
    pub rate_loss: f64,
    pub units: Units,
}

/// Analysis/synthesis transform pair of the KLT coder plus per-band noise.
#[derive(Debug, Clone)]
pub struct KltCoder {
    pub analysis: SquareMatrix,
    pub synthesis: SquareMatrix,
    pub band_variances: Vec<f64>,
}

impl KltCoder {
    /// `T·diag(σ²_E)·Tᵀ`, the end-to-end distortion covariance.
    pub fn distortion_covariance(&self) -> Result<SymmetricMatrix> {
        let t = &self.analysis;
        let scaled = SquareMatrix::from_fn(t.order(), |i, j| t[(i, j)] * self.band_variances[j]);
        SymmetricMatrix::symmetrize(&scaled.matmul(&t.transpose()))
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "alpha must be positive and finite, got {alpha}"
        )))
    }
}

pub(crate) fn check_distortion(d: f64) -> Result<()> {
    if d > 0.0 && d.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "distortion must be positive and finite, got {d}"
        )))
    }
}

/// `½(sqrt(λ² + λα) − λ)`, written without cancellation.
pub fn band_variance(lambda: f64, alpha: f64) -> f64 {
    0.5 * lambda * alpha / ((lambda * lambda + lambda * alpha).sqrt() + lambda)
}

/// `log((sqrt(λ+α) + sqrt(λ))/sqrt(α))` in nats.
pub fn band_rate(lambda: f64, alpha: f64) -> f64 {
    let x = lambda / alpha;
    // sqrt(1+x) + sqrt(x) = 1 + x/(sqrt(1+x)+1) + sqrt(x)
    (x / ((1.0 + x).sqrt() + 1.0) + x.sqrt()).ln_1p()
}

/// The same band rate written as `½ log((s+λ)/(s−λ))` with `s = sqrt(λ²+λα)`.
pub fn band_rate_alt(lambda: f64, alpha: f64) -> f64 {
    let s = (lambda * lambda + lambda * alpha).sqrt();
    let gap = lambda * alpha / (s + lambda);
    0.5 * ((s + lambda) / gap).ln()
}

pub fn distortion_of_alpha(src: &SourceCovariance, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(distortion_unchecked(src.eigenvalues(), alpha))
}

pub(crate) fn distortion_unchecked(eigenvalues: &[f64], alpha: f64) -> f64 {
    eigenvalues
        .iter()
        .map(|&l| band_variance(l, alpha))
        .sum::<f64>()
        / eigenvalues.len() as f64
}

pub(crate) fn rate_unchecked(eigenvalues: &[f64], alpha: f64) -> f64 {
    eigenvalues
        .iter()
        .map(|&l| band_rate(l, alpha))
        .sum::<f64>()
        / eigenvalues.len() as f64
}

/// Finds the unique α whose distortion equals `target_d`.
pub fn solve_alpha(src: &SourceCovariance, target_d: f64) -> Result<AlphaSolution> {
    check_distortion(target_d)?;
    let lambdas = src.eigenvalues();
    let root = bisect::solve_monotone(
        |a| distortion_unchecked(lambdas, a),
        target_d,
        true,
        ALPHA_REL_TOL,
    )?;
    Ok(AlphaSolution::from_root(root, target_d))
}

/// `R⊥` in nats per dimension at parameter α.
pub fn rate_perp(src: &SourceCovariance, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(rate_unchecked(src.eigenvalues(), alpha))
}

/// `R⊥` through the alternative `½ log((s+λ)/(s−λ))` form.
pub fn rate_perp_alt(src: &SourceCovariance, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let n = src.order() as f64;
    Ok(src
        .eigenvalues()
        .iter()
        .map(|&l| band_rate_alt(l, alpha))
        .sum::<f64>()
        / n)
}

pub fn optimal_distortion_law(src: &SourceCovariance, alpha: f64) -> Result<DistortionLaw> {
    check_alpha(alpha)?;
    let eig = src.decomposition();
    let covariance = linalg::apply_spectral(eig, src.matrix().frobenius_norm(), |l| {
        band_variance(l, alpha)
    })?;
    let band_variances = eig
        .eigenvalues
        .iter()
        .map(|&l| band_variance(l, alpha))
        .collect();
    Ok(DistortionLaw {
        covariance,
        band_variances,
        klt: eig.clone(),
        alpha,
    })
}

/// Evaluates all curves at distortion `target_d`.
pub fn rd_point(src: &SourceCovariance, target_d: f64, units: Units) -> Result<RdPoint> {
    let sol = solve_alpha(src, target_d)?;
    point_at_alpha(src, sol.alpha, target_d, units)
}

fn point_at_alpha(
    src: &SourceCovariance,
    alpha: f64,
    distortion: f64,
    units: Units,
) -> Result<RdPoint> {
    let perp = rate_perp(src, alpha)?;
    let shannon = analysis::shannon_rd(src, distortion)?.rate;
    Ok(RdPoint {
        distortion,
        alpha,
        rate_perp: units.from_nats(perp),
        rate_shannon: units.from_nats(shannon),
        rate_loss: units.from_nats(perp - shannon),
        units,
    })
}

/// Inverse of [`rd_point`]: the distortion at which `R⊥` equals `target_rate`.
pub fn distortion_of_rate(
    src: &SourceCovariance,
    target_rate: f64,
    units: Units,
) -> Result<RdPoint> {
    if !(target_rate > 0.0 && target_rate.is_finite()) {
        return Err(Error::Domain(format!(
            "rate must be positive and finite, got {target_rate}"
        )));
    }
    let nats = units.to_nats(target_rate);
    let lambdas = src.eigenvalues();
    let root = bisect::solve_monotone(|a| rate_unchecked(lambdas, a), nats, false, ALPHA_REL_TOL)?;
    let alpha = root.x;
    let d = distortion_unchecked(lambdas, alpha);
    point_at_alpha(src, alpha, d, units)
}

/// KLT coder realizing the optimal distortion: analysis `T` (eigenvectors of
/// `K_X`), synthesis `T̃ = Tᵀ`, and Gaussian band noises.
pub fn klt_coder_realization(src: &SourceCovariance, alpha: f64) -> Result<KltCoder> {
    check_alpha(alpha)?;
    let eig = src.decomposition();
    let analysis = eig.eigenvectors.clone();
    let synthesis = analysis.transpose();
    let band_variances = eig
        .eigenvalues
        .iter()
        .map(|&l| band_variance(l, alpha))
        .collect();
    Ok(KltCoder {
        analysis,
        synthesis,
        band_variances,
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
    fn scalar_distortion_closed_form() {
        assert_relative_eq!(
            distortion_of_alpha(&src(&[1.0]), 3.0).unwrap(),
            0.5,
            epsilon = 1e-15
        );
    }

    #[test]
    fn two_band_distortion() {
        // (0.5 + (sqrt(28)-4)/2)/2
        let expect = 0.572_875_655_532_295_3;
        assert_relative_eq!(
            distortion_of_alpha(&src(&[1.0, 4.0]), 3.0).unwrap(),
            expect,
            max_relative = 1e-14
        );
    }

    #[test]
    fn vanishing_alpha_gives_vanishing_distortion() {
        let d = distortion_of_alpha(&src(&[1.0, 4.0]), 1e-300).unwrap();
        assert!(d > 0.0 && d < 1e-299);
    }

    #[test]
    fn rejects_bad_alpha_and_distortion() {
        let s = src(&[1.0]);
        assert!(matches!(
            distortion_of_alpha(&s, 0.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(rate_perp(&s, -1.0), Err(Error::Domain(_))));
        assert!(matches!(solve_alpha(&s, 0.0), Err(Error::Domain(_))));
        assert!(matches!(
            solve_alpha(&s, f64::INFINITY),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            distortion_of_rate(&s, 0.0, Units::Nats),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn rejects_singular_covariance() {
        let m = SymmetricMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(
            SourceCovariance::new(m),
            Err(Error::InvalidMatrix(_))
        ));
        assert!(SourceCovariance::from_eigenvalues(&[1.0, 1e-13]).is_err());
    }

    #[test]
    fn solve_alpha_scalar_cases() {
        let s = src(&[1.0]);
        let sol = solve_alpha(&s, 0.5).unwrap();
        assert_relative_eq!(sol.alpha, 3.0, max_relative = 1e-9);
        assert!(sol.residual <= 1e-10);

        let d = 0.5 * (11.0_f64.sqrt() - 1.0);
        assert_relative_eq!(solve_alpha(&s, d).unwrap().alpha, 10.0, max_relative = 1e-9);
    }

    #[test]
    fn identical_eigenvalues_match_scalar_case() {
        for d in [0.01, 0.7, 3.0, 50.0] {
            let a = solve_alpha(&src(&[2.0, 2.0]), d).unwrap().alpha;
            let b = solve_alpha(&src(&[2.0]), d).unwrap().alpha;
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn scalar_rate() {
        assert_relative_eq!(
            rate_perp(&src(&[1.0]), 3.0).unwrap(),
            3.0_f64.sqrt().ln(),
            epsilon = 1e-15
        );
        assert!(rate_perp(&src(&[1.0]), 1e300).unwrap() < 1e-149);
    }

    #[test]
    fn two_band_rate() {
        // 0.5·[log(3/sqrt3) + log((sqrt7+2)/sqrt3)], evaluated in 30-digit arithmetic.
        let expect = 0.767_976_552_689_444_5;
        let s = src(&[1.0, 4.0]);
        assert_relative_eq!(rate_perp(&s, 3.0).unwrap(), expect, max_relative = 1e-14);
        assert_relative_eq!(
            rate_perp_alt(&s, 3.0).unwrap(),
            expect,
            max_relative = 1e-14
        );
    }

    #[test]
    fn distortion_law_examples() {
        let law = optimal_distortion_law(&src(&[1.0]), 3.0).unwrap();
        assert_relative_eq!(law.covariance[(0, 0)], 0.5, epsilon = 1e-15);

        let law = optimal_distortion_law(&src(&[1.0, 4.0]), 3.0).unwrap();
        assert_relative_eq!(law.covariance[(0, 0)], 0.5, epsilon = 1e-14);
        assert_relative_eq!(
            law.covariance[(1, 1)],
            0.645_751_311_064_590_6,
            epsilon = 1e-14
        );
        assert!(law.covariance[(0, 1)].abs() < 1e-15);

        let m = SymmetricMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let s = SourceCovariance::new(m).unwrap();
        let law = optimal_distortion_law(&s, 3.0).unwrap();
        assert_relative_eq!(law.band_variances[0], 0.5, epsilon = 1e-14);
        assert_relative_eq!(
            law.band_variances[1],
            (18.0_f64.sqrt() - 3.0) / 2.0,
            epsilon = 1e-14
        );
        let eig = linalg::eigh(&law.covariance).unwrap();
        assert_relative_eq!(eig.eigenvalues[0], 0.5, epsilon = 1e-13);
        assert_relative_eq!(eig.eigenvalues[1], 0.621_320_343_559_642_6, epsilon = 1e-13);
        let trace = law.covariance.trace() / 2.0;
        assert_relative_eq!(
            trace,
            distortion_of_alpha(&s, 3.0).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn rd_point_examples() {
        let s = src(&[1.0]);
        let p = rd_point(&s, 0.5, Units::Nats).unwrap();
        assert_relative_eq!(p.alpha, 3.0, max_relative = 1e-9);
        assert_relative_eq!(p.rate_perp, 0.549_306_144_334_054_8, epsilon = 1e-9);
        assert_relative_eq!(p.rate_shannon, 0.5 * 2.0_f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(p.rate_loss, 0.202_732_554_054_082_2, epsilon = 1e-9);

        let b = rd_point(&s, 0.5, Units::Bits).unwrap();
        assert_relative_eq!(b.rate_perp, 0.792_481_250_360_578, epsilon = 1e-9);
        assert_eq!(b.units, Units::Bits);

        let small = rd_point(&s, 1e-8, Units::Nats).unwrap();
        assert!(small.rate_loss > 0.0 && small.rate_loss < 1e-7);
    }

    #[test]
    fn distortion_of_rate_inverts() {
        let s = src(&[1.0]);
        let p = distortion_of_rate(&s, 3.0_f64.sqrt().ln(), Units::Nats).unwrap();
        assert_relative_eq!(p.distortion, 0.5, max_relative = 1e-9);

        let tiny = distortion_of_rate(&s, 1e-6, Units::Nats).unwrap();
        assert!(tiny.distortion > 1e5);

        let p = distortion_of_rate(&s, 10.0, Units::Nats).unwrap();
        let back = solve_alpha(&s, p.distortion).unwrap();
        assert_relative_eq!(back.alpha, p.alpha, max_relative = 1e-8);
        assert_relative_eq!(
            rate_perp(&s, back.alpha).unwrap(),
            10.0,
            max_relative = 1e-9
        );

        let bits = distortion_of_rate(&s, 1.0, Units::Bits).unwrap();
        assert_relative_eq!(bits.rate_perp, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn klt_coder_examples() {
        let s = src(&[3.0, 1.0]);
        let coder = klt_coder_realization(&s, 3.0).unwrap();
        for v in coder.analysis.as_slice() {
            assert!(v.abs() == 0.0 || v.abs() == 1.0);
        }
        let law = optimal_distortion_law(&s, 3.0).unwrap();
        assert_eq!(coder.band_variances, law.band_variances);

        let m = SymmetricMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let s = SourceCovariance::new(m).unwrap();
        let coder = klt_coder_realization(&s, 3.0).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let t = &coder.analysis;
        // Columns are (1,-1)/sqrt2 and (1,1)/sqrt2 up to sign.
        assert_relative_eq!(t[(0, 0)].abs(), h, epsilon = 1e-14);
        assert_relative_eq!(t[(0, 0)] * t[(1, 0)], -0.5, epsilon = 1e-14);
        assert_relative_eq!(t[(0, 1)] * t[(1, 1)], 0.5, epsilon = 1e-14);
        assert_relative_eq!(
            coder.band_variances[1],
            0.621_320_343_559_642_6,
            epsilon = 1e-14
        );
        let id = coder.analysis.matmul(&coder.synthesis);
        assert!(id.sub(&SquareMatrix::identity(2)).max_abs() < 1e-12);
        let kz = coder.distortion_covariance().unwrap();
        let law = optimal_distortion_law(&s, 3.0).unwrap();
        let diff = kz.matrix().sub(law.covariance.matrix()).frobenius_norm();
        assert!(diff <= 1e-10 * law.covariance.frobenius_norm());
    }
}
