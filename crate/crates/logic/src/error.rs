use std::time::Duration;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("unsafe variable '{variable}' in rule at {line}:{col}: {rule}")]
    Safety {
        line: usize,
        col: usize,
        rule: String,
        variable: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroundError {
    #[error("grounding exceeded the budget of {limit} ground rules")]
    GroundingBudgetExceeded { limit: usize },
    #[error("condition on predicate {predicate} must only use predicates defined by facts")]
    NonDomainCondition { predicate: String },
    #[error("minimize weight and level must be integers, got {weight}@{level}")]
    NonIntegerWeight { weight: String, level: String },
    #[error("arithmetic on non-integer value in {context}")]
    BadArithmetic { context: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("solver exceeded its time budget of {0:?}")]
    Timeout(Duration),
    #[error("solver exceeded its conflict budget of {0}")]
    ConflictLimit(u64),
}
