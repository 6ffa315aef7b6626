//! Label algebra, parser, security type checker, trace-emitting evaluator and
//! security-condition harness for a nonmalleable information flow calculus.

pub mod lattice;
pub mod syntax;
pub mod typecheck;
pub mod eval;
pub mod security;
pub mod program;
pub mod gen;
