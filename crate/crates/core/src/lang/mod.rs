//! MiniPencil: lexer, indentation-sensitive parser, AST and canonical printer.

pub mod ast;
pub mod diag;
pub mod lexer;
pub mod parser;
pub mod printer;

pub use ast::{BinOp, ElseIf, Expr, Program, Stmt, StmtKind};
pub use diag::{DiagCode, Diagnostic, Severity};
pub use lexer::{tokenize, Token, TokenKind, INDENT_UNIT};
pub use parser::parse;
pub use printer::{print, print_expr};
