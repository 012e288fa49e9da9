use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("pseudo point undefined: theta is zero")]
    UndefinedPseudo,

    /// The discriminant of the two-branch inversion is not positive. This is
    /// what an equal-persistence (rho_omega == rho_x) reduced form produces.
    #[error("degenerate reduced form: discriminant {discriminant:e} <= 0 (equal persistence or inconsistent reduced form)")]
    DegenerateReducedForm { discriminant: f64 },

    #[error("reduced form carries no endogeneity information: pi_xy = 0")]
    NoEndogeneityInformation,

    /// Estimated reduced form is statistically indistinguishable from the
    /// equal-persistence locus.
    #[error("flat locus suspected: pi_xy = {pi_xy:.3e} (t = {t_stat:.2}), discriminant = {discriminant:.3e}")]
    FlatLocus {
        pi_xy: f64,
        t_stat: f64,
        discriminant: f64,
    },

    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },

    #[error("rank-deficient cross-product matrix: smallest pivot {smallest_pivot:e}")]
    RankDeficient { smallest_pivot: f64 },

    #[error("not enough periods: need {needed}, panel has {available}")]
    InsufficientPeriods { needed: usize, available: usize },

    #[error("panel is missing input `{0}`")]
    MissingInput(&'static str),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("empty grid")]
    EmptyGrid,

    #[error("internal consistency: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
