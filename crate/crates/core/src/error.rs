use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum KnotError {
    #[error("K({p}, {q}) is not a 2-bridge knot: {reason}")]
    NotTwoBridge { p: i64, q: i64, reason: &'static str },
    #[error("continued fraction evaluates to {numer}/{denom}, which is not a knot")]
    NotAKnot { numer: String, denom: String },
    #[error("continued fraction entry {index} is zero")]
    DegenerateEntry { index: usize },
    #[error("invalid family: {0}")]
    InvalidFamily(String),
    #[error("invalid double-twist parameters C({k}, {m}): {reason}")]
    InvalidDoubleTwist { k: i64, m: i64, reason: &'static str },
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("cannot parse number {text:?}: {reason}")]
    Number { text: String, reason: String },
    #[error("cannot parse polynomial line {line}: {reason}")]
    Poly { line: usize, reason: String },
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("evaluation at t = 0")]
    ZeroT,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum RileyError {
    #[error("t must be positive and different from 1 (got {0})")]
    InvalidT(String),
    #[error("((t - 1/t)^2 - u) * B^2 = {0} is not positive; no real slope at this point")]
    NonPositiveArgument(String),
    #[error("B vanishes at the point")]
    ZeroB,
    #[error("slope component {0} has an even numerator or denominator")]
    EvenSlopeComponent(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TraceError {
    #[error("no real seed point found: {0}")]
    NoRealSeed(String),
    #[error("guard derivative degenerates at t = {t}, u = {u} (|guard| = {guard})")]
    GuardDegenerate { t: String, u: String, guard: String },
    #[error("corrector diverged near parameter {0}")]
    CorrectorDiverged(String),
    #[error("slope {requested} is outside the observed span ({inf}, {sup})")]
    OutOfRange {
        requested: String,
        inf: String,
        sup: String,
    },
    #[error("seed residual {0} exceeds tolerance")]
    SeedResidual(String),
    #[error(transparent)]
    Riley(#[from] RileyError),
}

impl From<EvalError> for TraceError {
    fn from(e: EvalError) -> Self {
        TraceError::Riley(RileyError::Eval(e))
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CertifyError {
    #[error("inadmissible representation data: {0}")]
    Inadmissible(String),
    #[error("recheck at doubled precision failed: {what} residual {value} exceeds {tolerance}")]
    RecheckFailed {
        what: &'static str,
        value: String,
        tolerance: String,
    },
    #[error("K({p}, {q}) is a torus knot; the representation pipeline does not apply")]
    TorusKnot { p: i64, q: i64 },
    #[error("degree d = {0} is even")]
    EvenD(i64),
    #[error("slope {0} is not covered by any traced branch")]
    Uncovered(String),
    #[error("branch slope spans do not form a single interval")]
    DisconnectedSpans,
    #[error("certificate slope {slope} does not match point slope {point_slope}")]
    SlopeMismatch { slope: String, point_slope: String },
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Riley(#[from] RileyError),
    #[error(transparent)]
    Format(#[from] FormatError),
}

/// Crate-level error with a stable machine-readable code.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Knot(#[from] KnotError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Riley(#[from] RileyError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Certify(#[from] CertifyError),
}

/// Failure classes used for process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Domain,
    Numerical,
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Knot(e) => match e {
                KnotError::NotTwoBridge { .. } => "NotTwoBridge",
                KnotError::NotAKnot { .. } => "NotAKnot",
                KnotError::DegenerateEntry { .. } => "DegenerateEntry",
                KnotError::InvalidFamily(_) => "InvalidFamily",
                KnotError::InvalidDoubleTwist { .. } => "InvalidDoubleTwist",
            },
            Error::Format(_) => "FormatError",
            Error::Eval(EvalError::ZeroT) => "ZeroT",
            Error::Riley(e) => riley_code(e),
            Error::Trace(e) => trace_code(e),
            Error::Certify(e) => match e {
                CertifyError::Inadmissible(_) => "Inadmissible",
                CertifyError::RecheckFailed { .. } => "RecheckFailed",
                CertifyError::TorusKnot { .. } => "TorusKnot",
                CertifyError::EvenD(_) => "EvenD",
                CertifyError::Uncovered(_) => "Uncovered",
                CertifyError::DisconnectedSpans => "DisconnectedSpans",
                CertifyError::SlopeMismatch { .. } => "SlopeMismatch",
                CertifyError::Trace(e) => trace_code(e),
                CertifyError::Riley(e) => riley_code(e),
                CertifyError::Format(_) => "FormatError",
            },
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self.code() {
            "GuardDegenerate" | "CorrectorDiverged" | "RecheckFailed" | "SeedResidual" => ErrorClass::Numerical,
            _ => ErrorClass::Domain,
        }
    }
}

fn riley_code(e: &RileyError) -> &'static str {
    match e {
        RileyError::InvalidT(_) => "InvalidT",
        RileyError::NonPositiveArgument(_) => "NonPositiveArgument",
        RileyError::ZeroB => "ZeroB",
        RileyError::EvenSlopeComponent(_) => "EvenSlopeComponent",
        RileyError::Eval(EvalError::ZeroT) => "ZeroT",
    }
}

fn trace_code(e: &TraceError) -> &'static str {
    match e {
        TraceError::NoRealSeed(_) => "NoRealSeed",
        TraceError::GuardDegenerate { .. } => "GuardDegenerate",
        TraceError::CorrectorDiverged(_) => "CorrectorDiverged",
        TraceError::OutOfRange { .. } => "OutOfRange",
        TraceError::SeedResidual(_) => "SeedResidual",
        TraceError::Riley(e) => riley_code(e),
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
