use alloc::string::String;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("empty rule set")]
    EmptyRuleSet,
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("unknown attribute `{relation}[{attribute}]`")]
    UnknownAttribute { relation: String, attribute: String },
    #[error("duplicate {what} `{name}`")]
    Duplicate { what: &'static str, name: String },
    #[error("domain mismatch: {left} ({left_domain}) vs {right} ({right_domain})")]
    DomainMismatch {
        left: String,
        left_domain: String,
        right: String,
        right_domain: String,
    },
    #[error("unknown similarity operator `{0}`")]
    UnknownOperator(String),
    #[error("domain `{domain}` used with operators `{first}` and `{second}`")]
    OperatorConflict {
        domain: String,
        first: String,
        second: String,
    },
    #[error("invalid MD: {0}")]
    InvalidMd(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("arity mismatch for `{relation}`: expected {expected}, found {found}")]
    ArityMismatch {
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("duplicate tid `{tid}` in `{relation}`")]
    DuplicateTid { relation: String, tid: String },
    #[error("missing column `{attribute}` for `{relation}`")]
    MissingColumn { relation: String, attribute: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("operator `{0}` has no more mutually dissimilar values")]
    CapacityExhausted(String),
    #[error("budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error("invalid cover-subset instance: {0}")]
    InvalidCoverSubset(String),
}
