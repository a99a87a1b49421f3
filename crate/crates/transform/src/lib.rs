//! A direct-style script language with `!` marks, its CPS rewrite and an
//! interpreter that dispatches keywords through an instance registry.

pub mod ast;
pub mod builtins;
pub mod corpus;
pub mod cps;
pub mod error;
pub mod eval;
pub mod lexer;
pub mod parser;
pub mod printer;

pub use ast::{BinOp, ContLambda, Def, Expr, Lambda, Lit, SeqKind, Stmt};
pub use cps::{auto_reset, cps_transform, eta_reduce_tail, has_bang, TransformContext};
pub use error::ScriptError;
pub use eval::{evaluate, Interpreter};
pub use parser::{parse, parse_type};
pub use printer::pretty_print;

/// Parses, marks reset boundaries and rewrites `!` into `cpsApply` calls,
/// optionally removing tail wrappers.
pub fn compile(source: &str, eta: bool) -> Result<Expr, ScriptError> {
    let ast = cps_transform(auto_reset(parse(source)?))?;
    Ok(if eta { eta_reduce_tail(ast) } else { ast })
}
