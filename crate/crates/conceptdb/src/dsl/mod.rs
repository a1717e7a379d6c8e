//! Script/REPL language: schema declarations, the four primitive state
//! operations, derived-function definitions, evaluation and display.

pub mod ast;
pub mod exec;
pub mod lex;
pub mod parse;

pub use ast::{render, render_script, RefLit, Statement, StatementKind};
pub use exec::{render_error, run_script, Session};
pub use lex::tokenize;
pub use parse::{parse, parse_literal_text};
