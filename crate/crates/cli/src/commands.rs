//! Command handlers: load inputs, call the core solvers, shape the reports.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use fairsolve_core::{
    classifier, error::ErrorKind, oracle, representation, solvers, Error, JointDistribution,
    Notion, RandomizedClassifier, Rat,
};
use serde_json::json;

use crate::{Command, CommonArgs, Format};

pub enum Failure {
    Core(Error),
    Io { path: PathBuf, detail: String },
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    /// Single-line JSON diagnostic for stderr.
    pub fn diagnostic(&self) -> String {
        let (code, detail) = match self {
            Failure::Core(e) => (e.code().to_string(), e.to_string()),
            Failure::Io { path, detail } => {
                ("Io".to_string(), format!("{}: {detail}", path.display()))
            }
            Failure::Usage(msg) => ("Usage".to_string(), msg.clone()),
        };
        json!({ "error": code, "detail": detail }).to_string()
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            Failure::Core(e) => match e.kind() {
                ErrorKind::Validation => ExitCode::from(2),
                ErrorKind::UndefinedMetric => ExitCode::from(3),
                ErrorKind::ResourceCap => ExitCode::from(4),
            },
            Failure::Io { .. } | Failure::Usage(_) => ExitCode::from(2),
        }
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })
}

fn load_distribution(path: &Path) -> Result<JointDistribution, Failure> {
    let text = read_file(path)?;
    let dist = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        JointDistribution::from_csv_str(&text)?
    } else {
        JointDistribution::from_json_str(&text)?
    };
    Ok(dist)
}

/// Accepts a bare classifier file or a solve report with an embedded one.
fn load_classifier(path: &Path) -> Result<RandomizedClassifier, Failure> {
    let text = read_file(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Failure::Core(Error::Schema(format!("classifier json: {e}"))))?;
    let body = value.get("classifier").unwrap_or(&value);
    Ok(RandomizedClassifier::from_json_str(&body.to_string())?)
}

fn parse_alpha(raw: &str) -> Result<Rat, Failure> {
    let alpha = Rat::parse(raw)?;
    fairsolve_core::distribution::check_alpha(&alpha)?;
    Ok(alpha)
}

fn emit(output: &Option<PathBuf>, report: &str) -> Result<(), Failure> {
    match output {
        Some(path) => fs::write(path, report).map_err(|e| Failure::Io {
            path: path.clone(),
            detail: e.to_string(),
        }),
        None => {
            print!("{report}");
            Ok(())
        }
    }
}

fn pretty(value: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

struct Loaded {
    dist: JointDistribution,
    notion: Notion,
    alpha: Rat,
}

fn load_common(common: &CommonArgs) -> Result<Loaded, Failure> {
    Ok(Loaded {
        dist: load_distribution(&common.input)?,
        notion: common.notion.into(),
        alpha: parse_alpha(&common.alpha)?,
    })
}

pub fn run(command: Command) -> Result<ExitCode, Failure> {
    match command {
        Command::Solve { common, format } => {
            if format == Format::Csv {
                return Err(Failure::Usage(
                    "csv output is only supported for the curve command".into(),
                ));
            }
            let Loaded {
                dist,
                notion,
                alpha,
            } = load_common(&common)?;
            let solution = solvers::solve(&dist, notion, &alpha)?;
            emit(&common.output, &pretty(&solution))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Curve { common, format } => {
            let Loaded {
                dist,
                notion,
                alpha,
            } = load_common(&common)?;
            let curve = solvers::loss_curve(&dist, notion, &alpha)?;
            // At alpha = 1/2 the curve is reported in the 0-1 convention.
            let zero_one = alpha == Rat::one_half();
            let curve = if zero_one { curve.to_zero_one() } else { curve };
            let report = match format {
                Format::Csv => {
                    let mut out = String::from("rate,loss\n");
                    for (bp, v) in curve.breakpoints.iter().zip(&curve.values) {
                        out.push_str(&format!("{bp},{v}\n"));
                    }
                    out
                }
                Format::Json => pretty(&json!({
                    "notion": notion,
                    "alpha": alpha,
                    "loss_convention": if zero_one { "zero-one" } else { "alpha-weighted" },
                    "breakpoints": curve.breakpoints,
                    "values": curve.values,
                })),
            };
            emit(&common.output, &report)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Represent { common, cap } => {
            let Loaded {
                dist,
                notion,
                alpha,
            } = load_common(&common)?;
            let rep = representation::build_representation(&dist, notion, &alpha)?;
            let audit = representation::audit_representation(&rep, &dist, &alpha, cap)?;
            let report = pretty(&json!({
                "representation": rep,
                "audit": audit,
            }));
            emit(&common.output, &report)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { common, classifier } => {
            let Loaded {
                dist,
                notion,
                alpha,
            } = load_common(&common)?;
            let f = load_classifier(&classifier)?;
            let report = classifier::check_fairness(&f, &dist, notion)?;
            let loss = classifier::loss(&f, &dist, &alpha)?;
            let mut body = serde_json::to_value(&report).expect("report serializes");
            body["alpha"] = serde_json::to_value(&alpha).unwrap();
            body["loss"] = serde_json::to_value(&loss).unwrap();
            if alpha == Rat::one_half() {
                body["loss01"] =
                    serde_json::to_value(classifier::loss01(&f, &dist)?).unwrap();
            }
            emit(&common.output, &pretty(&body))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle { common, cap } => {
            let Loaded {
                dist,
                notion,
                alpha,
            } = load_common(&common)?;
            let solution = solvers::solve(&dist, notion, &alpha)?;
            let vertex = oracle::vertex_enumerate_optimal(&dist, notion, &alpha, cap)?;
            let deterministic = oracle::best_deterministic_fair(&dist, notion, &alpha, cap)?;
            let agree = solution.loss == vertex.optimal_loss;
            let gap = &deterministic.optimal_loss - &vertex.optimal_loss;
            let mut body = json!({
                "notion": notion,
                "alpha": alpha,
                "solver": {
                    "rate": solution.rate,
                    "loss": solution.loss,
                    "loss01": solution.loss01,
                },
                "oracle": vertex,
                "deterministic": deterministic,
                "agree": agree,
                "randomization_gap": gap,
            });
            if alpha == Rat::one_half() {
                body["randomization_gap01"] =
                    serde_json::to_value(&gap * Rat::from_int(2)).unwrap();
            }
            emit(&common.output, &pretty(&body))?;
            Ok(if agree {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}
