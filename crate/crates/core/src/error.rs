use thiserror::Error;

use crate::design::Effect;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("design grid has no clusters")]
    EmptyGrid,
    #[error("design needs at least 2 periods, got {0}")]
    TooFewPeriods(usize),
    #[error("ragged design: cluster {cluster} has {found} periods, expected {expected}")]
    RaggedRows {
        cluster: usize,
        expected: usize,
        found: usize,
    },
    #[error("design label must be a single line")]
    MultilineLabel,
    #[error("design row {row}: unknown condition code {code:?}")]
    UnknownCondition { row: usize, code: String },
    #[error("malformed design file: {0}")]
    Malformed(String),
    #[error("designs have different period counts ({0} vs {1})")]
    PeriodMismatch(usize, usize),
    #[error("concurrent design needs one Trt1-only grid and one Trt2-only grid")]
    OverlappingTreatments,
    #[error("unknown catalog design {0:?}")]
    UnknownCatalogId(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("singular cluster covariance: diagonal {diag} must exceed off-diagonal {offdiag}")]
    SingularCovariance { diag: f64, offdiag: f64 },
    #[error("no treatment effect is estimable from this design")]
    NoEstimableEffects,
    #[error("{} is not estimable (condition estimate {condition:.3e})", effect_name(.effect))]
    RankDeficient {
        effect: Option<Effect>,
        condition: f64,
    },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("contrast {0:?} puts weight on an effect absent from the design")]
    ContrastOnAbsentEffect(String),
}

fn effect_name(effect: &Option<Effect>) -> String {
    match effect {
        Some(e) => e.label().to_string(),
        None => "the treatment block".to_string(),
    }
}

impl Error {
    /// True for errors meaning the design cannot identify an effect, as opposed
    /// to malformed input.
    pub fn is_estimability(&self) -> bool {
        matches!(
            self,
            Error::NoEstimableEffects | Error::RankDeficient { .. }
        )
    }
}
