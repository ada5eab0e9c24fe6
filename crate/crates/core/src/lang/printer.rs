//! Canonical pretty-printer.
//!
//! Output rules: two spaces per nesting level, one statement per line, a
//! single space around binary operators and after the command name, single
//! quoted strings, and a trailing newline after every statement. Parentheses
//! are emitted only where precedence requires them.

use std::fmt::Write;

use super::ast::{Expr, Program, Stmt, StmtKind};
use super::lexer::INDENT_UNIT;

pub fn print(program: &Program) -> String {
    let mut out = String::new();
    print_body(&program.statements, 0, &mut out);
    out
}

pub fn print_body(stmts: &[Stmt], depth: usize, out: &mut String) {
    for s in stmts {
        print_stmt(s, depth, out);
    }
}

pub fn indent(depth: usize) -> String {
    " ".repeat(depth * INDENT_UNIT)
}

fn print_stmt(stmt: &Stmt, depth: usize, out: &mut String) {
    let pad = indent(depth);
    out.push_str(&pad);
    out.push_str(&header_line(stmt));
    out.push('\n');
    match &stmt.kind {
        StmtKind::If {
            then_body,
            elifs,
            else_body,
            ..
        } => {
            print_body(then_body, depth + 1, out);
            for elif in elifs {
                let _ = writeln!(out, "{pad}else if {}", print_expr(&elif.cond));
                print_body(&elif.body, depth + 1, out);
            }
            if let Some(body) = else_body {
                let _ = writeln!(out, "{pad}else");
                print_body(body, depth + 1, out);
            }
        }
        StmtKind::ForIn { body, .. } | StmtKind::FuncDef { body, .. } => {
            print_body(body, depth + 1, out)
        }
        StmtKind::Assign { .. } | StmtKind::Call { .. } => {}
    }
}

/// The first line of a statement, without indentation or newline.
pub fn header_line(stmt: &Stmt) -> String {
    match &stmt.kind {
        StmtKind::Assign { name, value } => format!("{name} = {}", print_expr(value)),
        StmtKind::If { cond, .. } => format!("if {}", print_expr(cond)),
        StmtKind::ForIn { var, range, .. } => match var {
            Some(v) => format!("for {v} in {}", print_expr(range)),
            None => format!("for {}", print_expr(range)),
        },
        StmtKind::Call { name, args } => {
            if args.is_empty() {
                format!("{name}()")
            } else {
                format!("{name} {}", print_args(args))
            }
        }
        StmtKind::FuncDef { name, params, .. } => {
            if params.is_empty() {
                format!("{name} = ->")
            } else {
                format!("{name} = ({}) ->", params.join(", "))
            }
        }
    }
}

pub fn print_args(args: &[Expr]) -> String {
    args.iter().map(print_expr).collect::<Vec<_>>().join(", ")
}

pub fn print_expr(expr: &Expr) -> String {
    let mut out = String::new();
    write_expr(expr, 0, &mut out);
    out
}

fn write_expr(expr: &Expr, min_prec: u8, out: &mut String) {
    match expr {
        Expr::Int { value } => {
            let _ = write!(out, "{value}");
        }
        Expr::Float { value } => out.push_str(&format_float_literal(*value)),
        Expr::Str { value } => out.push_str(&quote(value)),
        Expr::Var { name } => out.push_str(name),
        Expr::Binary { op, lhs, rhs } => {
            let prec = op.precedence();
            let paren = prec < min_prec;
            if paren {
                out.push('(');
            }
            write_expr(lhs, prec, out);
            let _ = write!(out, " {op} ");
            write_expr(rhs, prec + 1, out);
            if paren {
                out.push(')');
            }
        }
        Expr::Range { lo, hi } => {
            out.push('[');
            write_expr(lo, 0, out);
            out.push_str("..");
            write_expr(hi, 0, out);
            out.push(']');
        }
    }
}

/// Shortest round-trip decimal that still lexes as a float literal.
fn format_float_literal(v: f64) -> String {
    let s = format!("{v}");
    if s.contains('.') {
        s
    } else {
        format!("{s}.0")
    }
}

pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::ast::BinOp;
    use crate::lang::parse;

    #[test]
    fn empty_program_prints_empty() {
        assert_eq!(print(&Program::default()), "");
    }

    #[test]
    fn single_command() {
        let p = Program::new(vec![StmtKind::Call {
            name: "fd".into(),
            args: vec![Expr::int(100)],
        }
        .into()]);
        assert_eq!(print(&p), "fd 100\n");
    }

    #[test]
    fn canonical_sample_is_a_fixpoint() {
        let src = "x = 7\nif x > 0\n  write 'x is a positive number.'\nelse\n  write 'x is a negative number.'\n";
        assert_eq!(print(&parse(src).unwrap()), src);
    }

    #[test]
    fn normalizes_spacing_and_quotes() {
        let src = "sum=0\nfor x in [0..10]\n  if x>8\n    sum=sum+x\n    write \"sum= \" + sum\n";
        let expected =
            "sum = 0\nfor x in [0..10]\n  if x > 8\n    sum = sum + x\n    write 'sum= ' + sum\n";
        assert_eq!(print(&parse(src).unwrap()), expected);
    }

    #[test]
    fn minimal_parentheses() {
        use BinOp::*;
        let e = Expr::binary(
            Mul,
            Expr::binary(Add, Expr::var("a"), Expr::int(1)),
            Expr::binary(Sub, Expr::var("b"), Expr::var("c")),
        );
        assert_eq!(print_expr(&e), "(a + 1) * (b - c)");
        let e = Expr::binary(
            Sub,
            Expr::var("a"),
            Expr::binary(Sub, Expr::var("b"), Expr::var("c")),
        );
        assert_eq!(print_expr(&e), "a - (b - c)");
        let e = Expr::binary(
            Sub,
            Expr::binary(Sub, Expr::var("a"), Expr::var("b")),
            Expr::var("c"),
        );
        assert_eq!(print_expr(&e), "a - b - c");
    }

    #[test]
    fn float_literals_keep_a_decimal_point() {
        assert_eq!(print_expr(&Expr::float(2.0)), "2.0");
        assert_eq!(print_expr(&Expr::float(0.1)), "0.1");
        assert_eq!(print_expr(&Expr::float(-1.5)), "-1.5");
    }

    #[test]
    fn string_escaping_round_trips() {
        let e = Expr::str("it's a \\ \"test\"\n");
        let printed = format!("write {}\n", print_expr(&e));
        let p = parse(&printed).unwrap();
        let StmtKind::Call { args, .. } = &p.statements[0].kind else {
            panic!()
        };
        assert_eq!(args[0], e);
    }

    #[test]
    fn zero_arg_call_and_function() {
        let src = "f = ->\n  home()\n";
        assert_eq!(print(&parse(src).unwrap()), src);
        assert_eq!(print(&parse("f = () ->\n  home\n").unwrap()), src);
    }
}
