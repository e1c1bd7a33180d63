//! Subcommand implementations. Each writes its result and returns the exit code.

use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde_json::json;
use udrd::process::{self, SampledSpectrum};
use udrd::validation::{validation_checks, CheckContext, CheckStatus};
use udrd::{vector, RdPoint, SourceCovariance, Units};

use crate::output::{self, sig12};
use crate::source::{quadrature_grid, Source, SourceSpec, QUAD_POINTS_ENV};
use crate::{CliError, Common, Format, UnitsArg, EXIT_VALIDATION};

/// A source ready for curve evaluation.
enum Evaluator {
    Vector(SourceCovariance),
    Spectrum(SampledSpectrum),
}

impl Evaluator {
    fn load(common: &Common) -> Result<Self, CliError> {
        let source = SourceSpec::read(&common.input)?.build(common.eigensolver.as_deref())?;
        match source {
            Source::Vector(src) => Ok(Evaluator::Vector(src)),
            Source::Process(model) => {
                let grid =
                    quadrature_grid(&common.quadrature, std::env::var(QUAD_POINTS_ENV).ok())?;
                Ok(Evaluator::Spectrum(model.sample(&grid)?))
            }
        }
    }

    fn at_distortion(&self, d: f64, units: Units) -> udrd::Result<RdPoint> {
        match self {
            Evaluator::Vector(src) => vector::rd_point(src, d, units),
            Evaluator::Spectrum(s) => process::spectral_rd_point(s, d, units),
        }
    }

    fn at_rate(&self, r: f64, units: Units) -> udrd::Result<RdPoint> {
        match self {
            Evaluator::Vector(src) => vector::distortion_of_rate(src, r, units),
            Evaluator::Spectrum(s) => process::spectral_distortion_of_rate(s, r, units),
        }
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::input(format!("cannot write output: {e}")))
        }
    }
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::input(format!(
            "--{name} must be positive and finite, got {v}"
        )))
    }
}

#[derive(Debug, Args)]
pub struct PointArgs {
    #[command(flatten)]
    pub common: Common,
    /// Target average per-component distortion.
    #[arg(long, conflicts_with = "rate", required_unless_present = "rate")]
    pub distortion: Option<f64>,
    /// Target rate, in the selected units.
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long, value_enum, default_value = "nats")]
    pub units: UnitsArg,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

pub fn point(a: &PointArgs) -> Result<u8, CliError> {
    let eval = Evaluator::load(&a.common)?;
    let units = a.units.into();
    let p = match (a.distortion, a.rate) {
        (Some(d), None) => eval.at_distortion(positive("distortion", d)?, units)?,
        (None, Some(r)) => eval.at_rate(positive("rate", r)?, units)?,
        _ => {
            return Err(CliError::input(
                "give exactly one of --distortion and --rate",
            ))
        }
    };
    let text = match a.format {
        Format::Csv => output::curve_csv(&[p]),
        Format::Json => output::curve_json(&[p], true),
    };
    emit(None, &text)?;
    Ok(0)
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub d_min: f64,
    #[arg(long)]
    pub d_max: f64,
    /// Number of distortion values, endpoints included.
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    /// Space the distortions geometrically instead of linearly.
    #[arg(long)]
    pub log_spaced: bool,
    #[arg(long, value_enum, default_value = "nats")]
    pub units: UnitsArg,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Write the curve here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Interior points are rounded to the printed precision so each row reports
/// the distortion it was evaluated at.
pub fn sweep_grid(d_min: f64, d_max: f64, points: usize, log: bool) -> Vec<f64> {
    let (a, b) = if log {
        (d_min.ln(), d_max.ln())
    } else {
        (d_min, d_max)
    };
    (0..points)
        .map(|k| {
            if k == 0 {
                return d_min;
            }
            if k + 1 == points {
                return d_max;
            }
            let x = a + (b - a) * (k as f64 / (points - 1) as f64);
            output::rounded(if log { x.exp() } else { x })
        })
        .collect()
}

pub fn sweep(a: &SweepArgs) -> Result<u8, CliError> {
    let d_min = positive("d-min", a.d_min)?;
    let d_max = positive("d-max", a.d_max)?;
    if d_min >= d_max {
        return Err(CliError::input("--d-min must be below --d-max"));
    }
    if a.points < 2 {
        return Err(CliError::input("--points must be at least 2"));
    }
    let eval = Evaluator::load(&a.common)?;
    let units: Units = a.units.into();
    let points = sweep_grid(d_min, d_max, a.points, a.log_spaced)
        .par_iter()
        .map(|&d| eval.at_distortion(d, units))
        .collect::<udrd::Result<Vec<_>>>()?;
    let text = match a.format {
        Format::Csv => output::curve_csv(&points),
        Format::Json => output::curve_json(&points, false),
    };
    emit(a.out.as_ref(), &text)?;
    Ok(0)
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub distortion: f64,
    /// Strictly ascending Toeplitz orders.
    #[arg(long, value_delimiter = ',', default_value = "16,64,256,512")]
    pub orders: Vec<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

pub fn converge(a: &ConvergeArgs) -> Result<u8, CliError> {
    let d = positive("distortion", a.distortion)?;
    if a.orders.is_empty() || a.orders.contains(&0) {
        return Err(CliError::input("--orders needs positive orders"));
    }
    let source = SourceSpec::read(&a.common.input)?.build(a.common.eigensolver.as_deref())?;
    let Source::Process(model) = source else {
        return Err(CliError::domain(
            "converge needs a process source (ar, autocorrelation or spectrum_samples)",
        ));
    };
    let grid = quadrature_grid(&a.common.quadrature, std::env::var(QUAD_POINTS_ENV).ok())?;
    let table = process::convergence_experiment(&model, d, &a.orders, &grid)?;
    let text = match a.format {
        Format::Csv => {
            let mut s = String::from("N,alpha,R_perp,R_perp_spectral,gap\n");
            for r in &table.rows {
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.order,
                    sig12(r.alpha),
                    sig12(r.rate_perp),
                    sig12(table.spectral_rate_perp),
                    sig12(r.gap)
                ));
            }
            s
        }
        Format::Json => {
            let v = output::round_json(serde_json::to_value(&table).expect("serializable"));
            serde_json::to_string_pretty(&v).expect("serializable") + "\n"
        }
    };
    emit(None, &text)?;
    Ok(0)
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub distortion: f64,
    /// Monte Carlo sample count.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Candidate per-band noise variances (ascending-eigenvalue order) to test.
    #[arg(long, value_delimiter = ',')]
    pub band_variances: Option<Vec<f64>>,
    /// Toeplitz order used for process sources.
    #[arg(long, default_value_t = 16)]
    pub order: usize,
    /// Restrict to these checks.
    #[arg(long, value_delimiter = ',')]
    pub checks: Option<Vec<String>>,
}

pub fn validate(a: &ValidateArgs) -> Result<u8, CliError> {
    let d = positive("distortion", a.distortion)?;
    if a.samples < 10_000 {
        return Err(CliError::input("--samples must be at least 10000"));
    }
    let registry = validation_checks();
    let names: Vec<&str> = match &a.checks {
        Some(list) => list.iter().map(String::as_str).collect(),
        None => registry.names(),
    };
    let checks = names
        .iter()
        .map(|n| registry.create(n))
        .collect::<udrd::Result<Vec<_>>>()?;

    let src = match SourceSpec::read(&a.common.input)?.build(a.common.eigensolver.as_deref())? {
        Source::Vector(src) => src,
        Source::Process(model) => {
            if a.order == 0 {
                return Err(CliError::input("--order must be positive"));
            }
            let grid = quadrature_grid(&a.common.quadrature, std::env::var(QUAD_POINTS_ENV).ok())?;
            process::toeplitz_truncation(&model, a.order, &grid)?
        }
    };
    if let Some(bands) = &a.band_variances {
        if bands.len() != src.order() || bands.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(CliError::input(format!(
                "--band-variances needs {} positive values",
                src.order()
            )));
        }
    }
    let sol = vector::solve_alpha(&src, d)?;
    let law = vector::optimal_distortion_law(&src, sol.alpha)?;
    let ctx = CheckContext {
        source: &src,
        distortion: d,
        alpha: sol.alpha,
        law: &law,
        samples: a.samples,
        seed: a.seed,
        candidate: a.band_variances.as_deref(),
    };
    let outcomes = checks
        .iter()
        .map(|c| c.run(&ctx))
        .collect::<udrd::Result<Vec<_>>>()?;
    let failed = outcomes.iter().any(|o| o.status == CheckStatus::Fail);
    let report = json!({
        "order": src.order(),
        "distortion": d,
        "alpha": sol.alpha,
        "rate_perp": vector::rate_perp(&src, sol.alpha)?,
        "samples": a.samples,
        "seed": a.seed,
        "passed": !failed,
        "checks": serde_json::to_value(&outcomes).expect("serializable"),
    });
    let text =
        serde_json::to_string_pretty(&output::round_json(report)).expect("serializable") + "\n";
    emit(None, &text)?;
    Ok(if failed { EXIT_VALIDATION } else { 0 })
}
