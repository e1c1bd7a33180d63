//! Source documents: a JSON object with exactly one source key.

use std::path::Path;

use serde::Deserialize;
use udrd::linalg::{eigensolvers, SymmetricMatrix};
use udrd::process::{quadrature_rules, QuadratureGrid, DEFAULT_QUAD_INTERVALS};
use udrd::{SourceCovariance, SpectrumModel};

use crate::CliError;

pub const QUAD_POINTS_ENV: &str = "UDRD_QUAD_POINTS";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArSpec {
    pub coeffs: Vec<f64>,
    pub noise_var: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub covariance: Option<Vec<Vec<f64>>>,
    pub eigenvalues: Option<Vec<f64>>,
    pub autocorrelation: Option<Vec<f64>>,
    pub ar: Option<ArSpec>,
    pub spectrum_samples: Option<Vec<f64>>,
}

pub enum Source {
    Vector(SourceCovariance),
    Process(SpectrumModel),
}

impl SourceSpec {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let spec: SourceSpec = serde_json::from_str(text)
            .map_err(|e| CliError::input(format!("malformed source document: {e}")))?;
        let keys = [
            spec.covariance.is_some(),
            spec.eigenvalues.is_some(),
            spec.autocorrelation.is_some(),
            spec.ar.is_some(),
            spec.spectrum_samples.is_some(),
        ]
        .iter()
        .filter(|&&k| k)
        .count();
        if keys != 1 {
            return Err(CliError::input(format!(
                "source document must contain exactly one of covariance, eigenvalues, \
                 autocorrelation, ar, spectrum_samples; found {keys}"
            )));
        }
        Ok(spec)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Builds the source; invalid content is an input error.
    pub fn build(self, eigensolver: Option<&str>) -> Result<Source, CliError> {
        if let Some(name) = eigensolver {
            eigensolvers()
                .create(name)
                .map_err(|e| CliError::input(e.to_string()))?;
        }
        let built = if let Some(rows) = self.covariance {
            SymmetricMatrix::from_rows(&rows)
                .and_then(|m| match eigensolver {
                    Some(name) => {
                        let eig = eigensolvers().create(name)?.decompose(&m)?;
                        SourceCovariance::with_decomposition(m, eig)
                    }
                    None => SourceCovariance::new(m),
                })
                .map(Source::Vector)
        } else if let Some(l) = self.eigenvalues {
            SourceCovariance::from_eigenvalues(&l).map(Source::Vector)
        } else if let Some(lags) = self.autocorrelation {
            SpectrumModel::autocorrelation(lags).map(Source::Process)
        } else if let Some(ar) = self.ar {
            SpectrumModel::ar(ar.coeffs, ar.noise_var).map(Source::Process)
        } else if let Some(samples) = self.spectrum_samples {
            SpectrumModel::tabulated(samples).map(Source::Process)
        } else {
            unreachable!("parse guarantees one source key")
        };
        built.map_err(|e| CliError::input(format!("invalid source: {e}")))
    }
}

/// Quadrature grid from `--quadrature` and the interval-count override.
pub fn quadrature_grid(rule: &str, env_value: Option<String>) -> Result<QuadratureGrid, CliError> {
    let intervals = match env_value {
        None => DEFAULT_QUAD_INTERVALS,
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => n,
            _ => {
                return Err(CliError::input(format!(
                    "{QUAD_POINTS_ENV} must be a positive integer, got `{v}`"
                )))
            }
        },
    };
    quadrature_rules()
        .create(rule)
        .and_then(|r| r.grid(intervals))
        .map_err(|e| CliError::input(e.to_string()))
}
