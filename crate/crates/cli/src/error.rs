use serde::Serialize;
use thiserror::Error;

use abnoninterf::eigen::EigenError;
use abnoninterf::evolve::EvolveError;
use abnoninterf::experiment::ExperimentError;
use abnoninterf::gauge::GaugeError;
use abnoninterf::weyl::WeylError;

pub const OFFSET_RULE: &str = "offset rule: flux centres must sit strictly inside a grid cell, off every grid line \
     and translation segment; the standard choice is cell (i, j) plus (0.5 + 1/√2931, 0.5 + 1/√4099)";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("schema error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Schema { message: String, line: Option<usize>, field: Option<String> },
    #[error("range error in {field}: {message}")]
    Range { field: String, message: String },
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Runtime(String),
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    field: Option<&'a str>,
}

impl CliError {
    pub fn range(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Range { field: field.into(), message: message.into() }
    }

    pub fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Schema { message: message.into(), line: None, field: Some(field.into()) }
    }

    pub fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        CliError::Io { path: path.display().to_string(), message: err.to_string() }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Schema { .. } => "schema",
            CliError::Range { .. } => "range",
            CliError::Io { .. } => "io",
            CliError::Runtime(_) => "runtime",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema { .. } | CliError::Range { .. } => 2,
            CliError::Io { .. } => 3,
            CliError::Runtime(_) => 1,
        }
    }

    pub fn to_json(&self) -> String {
        let (line, field) = match self {
            CliError::Schema { line, field, .. } => (*line, field.as_deref()),
            CliError::Range { field, .. } => (None, Some(field.as_str())),
            _ => (None, None),
        };
        let body = ErrorBody { kind: self.kind(), message: self.to_string(), line, field };
        serde_json::json!({ "error": body }).to_string()
    }
}

/// Builder errors are range errors against the config section they came from.
pub fn from_experiment(section: &str, err: ExperimentError) -> CliError {
    match err {
        ExperimentError::Evolve(EvolveError::FluxOnLink { index, i, j }) => {
            let which = if index == 0 { "flux_a" } else { "flux_b" };
            CliError::range(
                format!("{section}.{which}"),
                format!("flux centre lies on a grid line next to node ({i}, {j}); {OFFSET_RULE}"),
            )
        }
        ExperimentError::GeometryOverlap(_)
        | ExperimentError::FluxOutsideChamber { .. }
        | ExperimentError::InvalidParams(_)
        | ExperimentError::InvalidSweep(_) => CliError::range(section, err.to_string()),
        other => CliError::Runtime(other.to_string()),
    }
}

pub fn from_gauge(field: &str, err: GaugeError) -> CliError {
    CliError::range(field, err.to_string())
}

pub fn from_weyl(field: &str, err: WeylError) -> CliError {
    match err {
        WeylError::SegmentThroughFlux { .. } | WeylError::OnAxis { .. } | WeylError::NotGridMultiple { .. } => {
            CliError::range(field, format!("{err}; {OFFSET_RULE}"))
        }
        other => CliError::range(field, other.to_string()),
    }
}

pub fn from_eigen(field: &str, err: EigenError) -> CliError {
    CliError::range(field, err.to_string())
}

pub fn from_evolve(field: &str, err: EvolveError) -> CliError {
    match err {
        EvolveError::FluxOnLink { i, j, .. } => {
            CliError::range(field, format!("flux centre lies on a grid line next to node ({i}, {j}); {OFFSET_RULE}"))
        }
        EvolveError::InvalidGrid(_) | EvolveError::InvalidParams(_) | EvolveError::StepTooLarge { .. } => {
            CliError::range(field, err.to_string())
        }
        other => CliError::Runtime(other.to_string()),
    }
}
