//! Error type shared by every stage of the pipeline.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid schema document: {0}")]
    SchemaFormat(String),
    #[error("duplicate {kind} name `{name}`")]
    Duplicate { kind: &'static str, name: String },
    #[error("unknown domain `{0}`")]
    UnknownDomain(String),
    #[error("unknown domain kind `{0}`")]
    UnknownKind(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relation `{relation}` has no attribute `{attribute}`")]
    UnknownAttribute { relation: String, attribute: String },
    #[error("position {position} out of range for `{relation}` of arity {arity}")]
    PositionOutOfRange { relation: String, position: usize, arity: usize },
    #[error("foreign key {from} -> {to} joins different domains")]
    ForeignKeyDomain { from: String, to: String },
    #[error("foreign key graph is cyclic through `{0}`")]
    CyclicForeignKeys(String),
    #[error("relation `{0}` has no attributes")]
    EmptyRelation(String),
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("`{relation}` expects {expected} arguments, got {found}")]
    Arity { relation: String, expected: usize, found: usize },
    #[error("variable `{0}` has no relational occurrence, its domain cannot be inferred")]
    NoDomain(String),
    #[error("domain clash: {0}")]
    DomainClash(String),
    #[error("unsupported LIKE pattern `{0}`: only `literal%` and plain literals are allowed")]
    LikePattern(String),
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("queries are not compatible: {0}")]
    Incompatible(String),
    #[error("query is not conjunctive with negation: {0}")]
    NotCqNeg(String),
    #[error("tree rewrite precondition failed: {0}")]
    Tree(String),
    #[error("variable `{0}` is not mapped")]
    Unmapped(String),
    #[error("registry conflict on `{0}`")]
    Registry(String),
    #[error("invalid instance document: {0}")]
    InstanceFormat(String),
    #[error("no possible world: {0}")]
    NoWorld(String),
}

pub type Result<T> = std::result::Result<T, Error>;
