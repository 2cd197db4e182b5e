//! A desk-scale reference evaluator for the SPARQL subset the compiler emits,
//! and a second evaluator that interprets query documents directly. Running
//! both on the same graph is how compiled queries are checked without a
//! triplestore.

mod direct;
mod eval;
mod lexer;
mod parser;

use thiserror::Error;

use crate::rdf::Term;

pub use direct::{eval_direct, DirectError};
pub use eval::evaluate;
pub use parser::parse_sparql_subset;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unsupported or malformed SPARQL at line {line}, column {column} near {token:?}: {message}")]
pub struct SubsetSyntaxError {
    pub line: usize,
    pub column: usize,
    pub token: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryAst {
    /// Declared prefixes in declaration order. Prefixed names in the body
    /// are already expanded.
    pub prefixes: Vec<(String, String)>,
    pub distinct: bool,
    /// `None` for `SELECT *`.
    pub projection: Option<Vec<String>>,
    pub pattern: GroupPattern,
    pub order_by: Vec<OrderKey>,
    pub limit: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroupPattern {
    pub elements: Vec<GroupElement>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroupElement {
    Triples(Vec<TriplePattern>),
    Optional(GroupPattern),
    /// One branch is a plain nested group.
    Union(Vec<GroupPattern>),
    Filter(Expr),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternTerm {
    Var(String),
    Term(Term),
}

impl PatternTerm {
    pub fn var(&self) -> Option<&str> {
        match self {
            PatternTerm::Var(v) => Some(v),
            PatternTerm::Term(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriplePattern {
    pub subject: PatternTerm,
    /// Always an IRI when constant.
    pub predicate: PatternTerm,
    pub object: PatternTerm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Or(Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    Arith(ArithOp, Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Var(String),
    Const(Term),
    Str(Box<Expr>),
    Lcase(Box<Expr>),
    Contains(Box<Expr>, Box<Expr>),
    Regex(Box<Expr>, Box<Expr>, Option<Box<Expr>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderKey {
    pub expr: Expr,
    pub descending: bool,
}
