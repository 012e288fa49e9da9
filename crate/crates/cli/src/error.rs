use serde::Serialize;

/// Failure record printed as one JSON line on stderr.
#[derive(Debug, Clone, PartialEq, Serialize, thiserror::Error)]
#[error("{module}: {message}")]
pub struct CliError {
    /// Stage that failed: `config`, `io`, `simulate`, `estimate`,
    /// `identify`, `diagnostics`.
    pub module: &'static str,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            module: "config",
            kind: "validation",
            message: message.into(),
        }
    }

    pub fn io(module: &'static str, message: impl Into<String>) -> Self {
        Self {
            module,
            kind: "io",
            message: message.into(),
        }
    }

    pub fn core(module: &'static str, e: pseudo_id::Error) -> Self {
        use pseudo_id::Error as E;
        let kind = match &e {
            E::Domain(_) => "domain",
            E::UndefinedPseudo => "undefined_pseudo",
            E::DegenerateReducedForm { .. } => "degenerate_reduced_form",
            E::NoEndogeneityInformation => "no_endogeneity_information",
            E::FlatLocus { .. } => "flat_locus",
            E::Validation { .. } => "validation",
            E::RankDeficient { .. } => "rank_deficient",
            E::InsufficientPeriods { .. } => "insufficient_periods",
            E::MissingInput(_) => "missing_input",
            E::Dimension(_) => "dimension",
            E::EmptyGrid => "empty_grid",
            E::Internal(_) => "internal",
        };
        Self {
            module,
            kind,
            message: e.to_string(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}
