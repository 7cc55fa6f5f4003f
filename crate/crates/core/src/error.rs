use alloc::string::String;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("no label found in response")]
    NoLabel,
    #[error("response names more than one label")]
    AmbiguousLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error("no recorded response for request {digest}")]
    ReplayMiss { digest: String },
    #[error("provider error: {0}")]
    Provider(String),
    #[error("gateway configuration error: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProfileError {
    #[error("profile {0:?} has no query aliases")]
    NoAliases(String),
    #[error("canonical name {0:?} is not among its query aliases")]
    CanonicalNotAlias(String),
    #[error("profile {0:?} is in a scandal cohort but has no scandal year")]
    MissingScandalYear(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AspectError {
    #[error("no mention sentences to categorize")]
    EmptyInput,
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JudgmentError {
    #[error("retrieved context requested but the aspect set is empty")]
    MissingContext,
    #[error("aspect {0:?} has an empty description")]
    EmptyDescription(String),
    #[error("few-shot mode needs at least one example per label")]
    IncompleteExamples,
    #[error("few-shot example names a study celebrity: {0:?}")]
    ExampleNamesCelebrity(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("invalid mapping: {0}")]
    InvalidMapping(String),
    #[error("no reference label for {0}")]
    MissingReference(String),
    #[error("no celebrities to average")]
    NoRows,
    #[error("accuracy cross-check failed: {0}")]
    Inconsistent(String),
}
