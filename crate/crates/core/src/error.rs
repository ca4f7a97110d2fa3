//! Error type shared by every module.

use thiserror::Error;

/// Broad class of a failure, used to pick a process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numerical,
    Io,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Config => 2,
            ErrorClass::Data => 3,
            ErrorClass::Numerical => 4,
            ErrorClass::Io => 5,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorClass::Config => "config",
            ErrorClass::Data => "data",
            ErrorClass::Numerical => "numerical",
            ErrorClass::Io => "io",
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("missing column '{0}'")]
    MissingColumn(String),
    #[error("duplicate column '{0}'")]
    DuplicateColumn(String),
    #[error("non-numeric value '{value}' in column '{column}' at row {row}")]
    NonNumeric {
        column: String,
        row: usize,
        value: String,
    },
    #[error("non-finite value in column '{column}' at row {row}")]
    NonFinite { column: String, row: usize },
    #[error("invalid treatment label '{value}' at row {row}")]
    InvalidTreatmentLabel { row: usize, value: String },
    #[error("treatment group {0} is empty")]
    EmptyGroup(i64),
    #[error("non-positive base weight at row {0}")]
    NonPositiveBaseWeight(usize),
    #[error("dataset has no outcome column")]
    MissingOutcome,
    #[error("dataset has no base-weight column")]
    MissingBaseWeights,
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("length mismatch for {what}: expected {expected}, got {got}")]
    LengthMismatch {
        what: String,
        expected: usize,
        got: usize,
    },
    #[error("group {group} has {size} units but at least {required} are needed")]
    GroupTooSmall {
        group: i64,
        size: usize,
        required: usize,
    },
    #[error("covariate '{column}' is constant in group {group}")]
    ConstantColumn { group: i64, column: String },
    #[error("singular {what}: reciprocal condition {rcond:.3e}")]
    Singular { what: String, rcond: f64 },
    #[error("design matrix for group {group} is not invertible (reciprocal condition {rcond:.3e})")]
    GroupDesignSingular { group: i64, rcond: f64 },
    #[error("rank-deficient design: reciprocal condition {rcond:.3e}")]
    RankDeficient { rcond: f64 },
    #[error("least-squares normal-equation residual {residual:.3e} exceeds tolerance")]
    NormalEquationResidual { residual: f64 },
    #[error("unit {0} has leverage 1; its leave-one-out fit is undefined")]
    DegenerateLeverage(usize),
    #[error("weights must be nonnegative, finite and not all zero: {0}")]
    InvalidWeights(String),
    #[error("base weights are not normalized within group {group} (sum {sum})")]
    BaseNotNormalized { group: i64, sum: f64 },
    #[error("unsupported estimand: {0}")]
    UnsupportedEstimand(String),
    #[error("unsupported feature: {0}")]
    Unsupported(String),
    #[error("estimand {estimand} is not valid for method {method}")]
    MethodEstimandMismatch { method: String, estimand: String },
    #[error("treatment is not binary")]
    NotBinary,
    #[error("treatment is not multi-valued")]
    NotMultiValued,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("singular KKT system (reciprocal condition {rcond:.3e})")]
    KktSingular { rcond: f64 },
    #[error("simulation produced an empty group after {0} attempts")]
    EmptyGroupAfterRetries(usize),
    #[error("i/o failure on '{path}': {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            MissingColumn(_)
            | DuplicateColumn(_)
            | NonNumeric { .. }
            | NonFinite { .. }
            | InvalidTreatmentLabel { .. }
            | EmptyGroup(_)
            | NonPositiveBaseWeight(_)
            | MissingOutcome
            | MissingBaseWeights
            | Malformed(_)
            | LengthMismatch { .. }
            | GroupTooSmall { .. }
            | InvalidWeights(_)
            | BaseNotNormalized { .. }
            | NotBinary
            | NotMultiValued
            | EmptyGroupAfterRetries(_) => ErrorClass::Data,
            ConstantColumn { .. }
            | Singular { .. }
            | GroupDesignSingular { .. }
            | RankDeficient { .. }
            | NormalEquationResidual { .. }
            | DegenerateLeverage(_)
            | KktSingular { .. } => ErrorClass::Numerical,
            UnsupportedEstimand(_) | Unsupported(_) | MethodEstimandMismatch { .. } | Config(_) => {
                ErrorClass::Config
            }
            Io { .. } => ErrorClass::Io,
        }
    }

    /// Stable machine-readable identifier.
    pub fn code(&self) -> &'static str {
        use Error::*;
        match self {
            MissingColumn(_) => "missing_column",
            DuplicateColumn(_) => "duplicate_column",
            NonNumeric { .. } => "non_numeric",
            NonFinite { .. } => "non_finite",
            InvalidTreatmentLabel { .. } => "invalid_treatment_label",
            EmptyGroup(_) => "empty_group",
            NonPositiveBaseWeight(_) => "non_positive_base_weight",
            MissingOutcome => "missing_outcome",
            MissingBaseWeights => "missing_base_weights",
            Malformed(_) => "malformed_input",
            LengthMismatch { .. } => "length_mismatch",
            GroupTooSmall { .. } => "group_too_small",
            ConstantColumn { .. } => "constant_column",
            Singular { .. } => "singular_matrix",
            GroupDesignSingular { .. } => "group_design_singular",
            RankDeficient { .. } => "rank_deficient",
            NormalEquationResidual { .. } => "normal_equation_residual",
            DegenerateLeverage(_) => "degenerate_leverage",
            InvalidWeights(_) => "invalid_weights",
            BaseNotNormalized { .. } => "base_not_normalized",
            UnsupportedEstimand(_) => "unsupported_estimand",
            Unsupported(_) => "unsupported_feature",
            MethodEstimandMismatch { .. } => "method_estimand_mismatch",
            NotBinary => "not_binary",
            NotMultiValued => "not_multi_valued",
            Config(_) => "config",
            KktSingular { .. } => "kkt_singular",
            EmptyGroupAfterRetries(_) => "empty_group_after_retries",
            Io { .. } => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
