use thiserror::Error;

/// Errors raised across the library.
///
/// Variants split into two families: input validation (a malformed problem,
/// data set or graph) and numerical failure (a computation that could not be
/// certified). [`Error::is_validation`] tells them apart; the CLI maps them to
/// exit codes 1 and 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("NotProjector: {0}")]
    NotProjector(String),
    #[error("BadH: {0}")]
    BadH(String),
    #[error("NotHermitian: {0}")]
    NotHermitian(String),
    #[error("BadDiamond: {0}")]
    BadDiamond(String),
    #[error("IndexMismatch: {0}")]
    IndexMismatch(String),
    #[error("InvalidData: {0}")]
    InvalidData(String),
    #[error("IrrationalLengths: {0}")]
    IrrationalLengths(String),
    #[error("Disconnected: {0}")]
    Disconnected(String),
    #[error("OrientationConflict: {0}")]
    OrientationConflict(String),

    #[error("RootCountMismatch: found {found} roots with multiplicity, expected {expected}")]
    RootCountMismatch { found: usize, expected: usize },
    #[error("ContourTooClose: contour radius {radius:e} around r = {root}")]
    ContourTooClose { root: f64, radius: f64 },
    #[error("ExpOverflow: |Im sqrt(lambda)| * span = {0} exceeds the cap")]
    ExpOverflow(f64),
    #[error("MissedRootSuspicion: {0}")]
    MissedRootSuspicion(String),
    #[error("NonRealResidual: {0}")]
    NonRealResidual(String),
    #[error("NearPole: condition number {cond:e} at lambda = {lambda}")]
    NearPole { lambda: String, cond: f64 },
    #[error("GroupNotIsolated: {0}")]
    GroupNotIsolated(String),
    #[error("NotPSD: minimum eigenvalue {min_eig:e} relative to norm {norm:e}")]
    NotPsd { min_eig: f64, norm: f64 },
    #[error("NoConvergence: {0}")]
    NoConvergence(String),
    #[error("RankMismatch: {0}")]
    RankMismatch(String),
    #[error("PoleHit: lambda = {0}")]
    PoleHit(String),
    #[error("SingularCombination: det(tA + B) vanishes (t = {0})")]
    SingularCombination(String),
    #[error("RhoStarUnusable: {0}")]
    RhoStarUnusable(String),
    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by malformed input rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Dimension(_)
                | Error::NotProjector(_)
                | Error::BadH(_)
                | Error::NotHermitian(_)
                | Error::BadDiamond(_)
                | Error::IndexMismatch(_)
                | Error::InvalidData(_)
                | Error::IrrationalLengths(_)
                | Error::Disconnected(_)
                | Error::OrientationConflict(_)
                | Error::Io(_)
                | Error::Json(_)
        )
    }

    /// Short machine-readable name of the variant.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "Dimension",
            Error::NotProjector(_) => "NotProjector",
            Error::BadH(_) => "BadH",
            Error::NotHermitian(_) => "NotHermitian",
            Error::BadDiamond(_) => "BadDiamond",
            Error::IndexMismatch(_) => "IndexMismatch",
            Error::InvalidData(_) => "InvalidData",
            Error::IrrationalLengths(_) => "IrrationalLengths",
            Error::Disconnected(_) => "Disconnected",
            Error::OrientationConflict(_) => "OrientationConflict",
            Error::RootCountMismatch { .. } => "RootCountMismatch",
            Error::ContourTooClose { .. } => "ContourTooClose",
            Error::ExpOverflow(_) => "ExpOverflow",
            Error::MissedRootSuspicion(_) => "MissedRootSuspicion",
            Error::NonRealResidual(_) => "NonRealResidual",
            Error::NearPole { .. } => "NearPole",
            Error::GroupNotIsolated(_) => "GroupNotIsolated",
            Error::NotPsd { .. } => "NotPSD",
            Error::NoConvergence(_) => "NoConvergence",
            Error::RankMismatch(_) => "RankMismatch",
            Error::PoleHit(_) => "PoleHit",
            Error::SingularCombination(_) => "SingularCombination",
            Error::RhoStarUnusable(_) => "RhoStarUnusable",
            Error::Singular(_) => "Singular",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
