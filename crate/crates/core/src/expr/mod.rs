//! Expression language for chart-local component functions.
//!
//! ```text
//! expr    = sum ;
//! sum     = product , { ("+" | "-") , product } ;
//! product = unary , { ("*" | "/") , unary } ;
//! unary   = ("-" | "+") , unary | power ;
//! power   = atom , [ "^" , unary ] ;                  (* right-associative *)
//! atom    = number | variable | "pi" | func , "(" , expr , ")" | "(" , expr , ")" ;
//! func    = "sin" | "cos" | "tan" | "exp" | "ln" | "sqrt" | "abs" ;
//! variable= "x1" .. "xN" | alias ;
//! number  = digits , [ "." , digits ] , [ ("e" | "E") , [ "+" | "-" ] , digits ] ;
//! ```
//!
//! Expressions evaluate either to plain reals or to [`Jet2`] values carrying
//! exact first and second partial derivatives.

mod ast;
mod eval;
mod jet;
mod lexer;
mod parser;

pub use ast::{BinOp, Expr, Func};
pub use eval::{eval_jet2, eval_scalar};
pub use jet::Jet2;
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::{parse, parse_with, VarTable};
