//! Immersion DSL: parsing, canonical printing and second-order jets.

mod ast;
mod immersion;
mod jet;
mod parser;

pub use ast::{BinOp, DisplayExpr, Expr, Func};
pub use immersion::{parse_immersion_file, ImmersionError, ImmersionSpec, Interval};
pub use jet::{eval, eval_jet2, EvalError, Jet2};
pub use parser::{is_valid_parameter_name, parse_expression, ParseError};
