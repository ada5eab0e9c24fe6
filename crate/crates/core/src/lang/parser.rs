//! Indentation-aware recursive-descent parser.
//!
//! The token stream is first split into logical lines. A block header
//! (`if`, `else`, `for`, function definition) must be followed by a line
//! indented exactly one unit deeper; anything else is reported instead of
//! being read as a different tree.

use super::ast::{is_keyword, BinOp, ElseIf, Expr, Program, Stmt, StmtKind};
use super::diag::{DiagCode, Diagnostic};
use super::lexer::{tokenize, Token, TokenKind, INDENT_UNIT};

/// Parses MiniPencil source into a [`Program`].
pub fn parse(source: &str) -> Result<Program, Vec<Diagnostic>> {
    let tokens = tokenize(source)?;
    let lines = split_lines(&tokens);
    let eof = tokens.last().expect("token stream always ends with eof");
    let mut p = Parser { lines, pos: 0, eof };
    p.program().map_err(|d| vec![d])
}

#[derive(Clone, Copy)]
struct Line<'t> {
    indent: usize,
    toks: &'t [Token],
}

impl Line<'_> {
    fn line_no(&self) -> usize {
        self.toks[0].line
    }

    fn starts_with_ident(&self, name: &str) -> bool {
        self.toks[0].is_ident(name)
    }
}

fn split_lines(tokens: &[Token]) -> Vec<Line<'_>> {
    let mut lines = Vec::new();
    let mut i = 0;
    while i < tokens.len() && tokens[i].kind != TokenKind::Eof {
        let mut indent = 0;
        if tokens[i].kind == TokenKind::Indent {
            indent = tokens[i].indent_width();
            i += 1;
        }
        let start = i;
        while !matches!(tokens[i].kind, TokenKind::Newline | TokenKind::Eof) {
            i += 1;
        }
        if i > start {
            lines.push(Line {
                indent,
                toks: &tokens[start..i],
            });
        }
        if tokens[i].kind == TokenKind::Newline {
            i += 1;
        }
    }
    lines
}

type PResult<T> = Result<T, Diagnostic>;

struct Parser<'t> {
    lines: Vec<Line<'t>>,
    pos: usize,
    eof: &'t Token,
}

impl<'t> Parser<'t> {
    fn program(&mut self) -> PResult<Program> {
        let statements = self.body(0)?;
        debug_assert!(self.pos == self.lines.len());
        Ok(Program { statements })
    }

    fn peek_line(&self) -> Option<&Line<'t>> {
        self.lines.get(self.pos)
    }

    fn body(&mut self, indent: usize) -> PResult<Vec<Stmt>> {
        let mut stmts = Vec::new();
        while let Some(line) = self.peek_line() {
            if line.indent < indent {
                break;
            }
            if line.indent > indent {
                return Err(Diagnostic::error(
                    DiagCode::IndentMismatch,
                    format!(
                        "unexpected indentation: expected {indent} spaces, found {}",
                        line.indent
                    ),
                    line.line_no(),
                    1,
                ));
            }
            if line.starts_with_ident("else") {
                let t = &line.toks[0];
                return Err(Diagnostic::error(
                    DiagCode::UnexpectedToken,
                    "`else` without a matching `if` at this indentation",
                    t.line,
                    t.col,
                ));
            }
            stmts.push(self.statement()?);
        }
        Ok(stmts)
    }

    /// Parses the body that must follow a header line at `header_indent`.
    fn header_body(&mut self, header: &Line<'t>, header_indent: usize) -> PResult<Vec<Stmt>> {
        let expected = header_indent + INDENT_UNIT;
        let last = header.toks.last().unwrap();
        let empty = || {
            Diagnostic::error(
                DiagCode::EmptyBody,
                "block header has no indented body",
                last.line,
                last.col + last.lexeme.chars().count(),
            )
        };
        let Some(next) = self.peek_line() else {
            return Err(empty());
        };
        if next.indent == expected {
            self.body(expected)
        } else if next.indent == header_indent {
            if next.starts_with_ident("else") {
                Err(empty())
            } else {
                Err(Diagnostic::error(
                    DiagCode::IndentMismatch,
                    format!(
                        "statement after a block header must be indented by {expected} spaces, \
                         found {}",
                        next.indent
                    ),
                    next.line_no(),
                    next.indent + 1,
                ))
            }
        } else if next.indent < header_indent {
            Err(empty())
        } else {
            Err(Diagnostic::error(
                DiagCode::IndentMismatch,
                format!(
                    "body must be indented by exactly {expected} spaces, found {}",
                    next.indent
                ),
                next.line_no(),
                1,
            ))
        }
    }

    fn statement(&mut self) -> PResult<Stmt> {
        let idx = self.pos;
        self.pos += 1;
        let line = self.lines[idx];
        let line_no = line.line_no();
        let mut cur = Cursor::new(line.toks, self.eof);
        let first = cur.next().unwrap();

        let kind = if first.is_ident("if") {
            let cond = cur.expr()?;
            cur.finish()?;
            let then_body = self.header_body(&line, line.indent)?;
            let mut elifs = Vec::new();
            let mut else_body = None;
            while let Some(next) = self.peek_line() {
                if next.indent != line.indent || !next.starts_with_ident("else") {
                    break;
                }
                let else_line = *next;
                self.pos += 1;
                let mut ec = Cursor::new(else_line.toks, self.eof);
                ec.next();
                if ec.peek().is_ident("if") {
                    ec.next();
                    let cond = ec.expr()?;
                    ec.finish()?;
                    let body = self.header_body(&else_line, line.indent)?;
                    elifs.push(ElseIf { cond, body });
                } else {
                    ec.finish()?;
                    else_body = Some(self.header_body(&else_line, line.indent)?);
                    break;
                }
            }
            StmtKind::If {
                cond,
                then_body,
                elifs,
                else_body,
            }
        } else if first.is_ident("for") {
            let var = if cur.peek().kind == TokenKind::Ident {
                let v = cur.name()?;
                cur.expect_ident("in")?;
                Some(v)
            } else {
                None
            };
            let range = cur.range()?;
            cur.finish()?;
            let body = self.header_body(&line, line.indent)?;
            StmtKind::ForIn { var, range, body }
        } else if first.kind == TokenKind::Ident && !is_keyword(&first.lexeme) {
            let name = first.lexeme.clone();
            if cur.peek().is_op("=") {
                cur.next();
                if let Some(params) = cur.try_func_header()? {
                    cur.finish()?;
                    let body = self.header_body(&line, line.indent)?;
                    StmtKind::FuncDef { name, params, body }
                } else {
                    let value = cur.expr()?;
                    cur.finish()?;
                    StmtKind::Assign { name, value }
                }
            } else if cur.at_end() {
                StmtKind::Call {
                    name,
                    args: Vec::new(),
                }
            } else if cur.peek().is_op("(") && cur.peek_at(1).is_op(")") && cur.remaining() == 2 {
                cur.next();
                cur.next();
                StmtKind::Call {
                    name,
                    args: Vec::new(),
                }
            } else {
                let mut args = vec![cur.expr()?];
                while cur.peek().is_op(",") {
                    cur.next();
                    args.push(cur.expr()?);
                }
                cur.finish()?;
                StmtKind::Call { name, args }
            }
        } else {
            return Err(unexpected(first, "expected a statement"));
        };
        Ok(Stmt::at(kind, line_no))
    }
}

fn unexpected(tok: &Token, what: &str) -> Diagnostic {
    let found = match tok.kind {
        TokenKind::Eof | TokenKind::Newline => "end of line".to_string(),
        _ => format!("`{}`", tok.lexeme),
    };
    Diagnostic::error(
        DiagCode::UnexpectedToken,
        format!("{what}, found {found}"),
        tok.line,
        tok.col,
    )
}

/// Cursor over the tokens of one logical line.
struct Cursor<'t> {
    toks: &'t [Token],
    pos: usize,
    end: Token,
}

impl<'t> Cursor<'t> {
    fn new(toks: &'t [Token], eof: &Token) -> Self {
        let end = match toks.last() {
            Some(last) => Token {
                kind: TokenKind::Newline,
                lexeme: String::new(),
                line: last.line,
                col: last.col + last.lexeme.chars().count(),
                span: last.span.end..last.span.end,
            },
            None => eof.clone(),
        };
        Self { toks, pos: 0, end }
    }

    fn peek(&self) -> &Token {
        self.peek_at(0)
    }

    fn peek_at(&self, n: usize) -> &Token {
        self.toks.get(self.pos + n).unwrap_or(&self.end)
    }

    fn remaining(&self) -> usize {
        self.toks.len() - self.pos
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn next(&mut self) -> Option<&'t Token> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn finish(&self) -> PResult<()> {
        if self.at_end() {
            Ok(())
        } else {
            Err(unexpected(self.peek(), "expected end of line"))
        }
    }

    fn name(&mut self) -> PResult<String> {
        let t = self.peek();
        if t.kind == TokenKind::Ident && !is_keyword(&t.lexeme) {
            let s = t.lexeme.clone();
            self.pos += 1;
            Ok(s)
        } else {
            Err(unexpected(t, "expected a name"))
        }
    }

    fn expect_ident(&mut self, kw: &str) -> PResult<()> {
        if self.peek().is_ident(kw) {
            self.pos += 1;
            Ok(())
        } else {
            Err(unexpected(self.peek(), &format!("expected `{kw}`")))
        }
    }

    fn expect_op(&mut self, op: &str) -> PResult<()> {
        if self.peek().is_op(op) {
            self.pos += 1;
            Ok(())
        } else {
            Err(unexpected(self.peek(), &format!("expected `{op}`")))
        }
    }

    /// After `name =`: recognizes `->` or `(a, b) ->` and returns the
    /// parameter list, leaving the cursor untouched otherwise.
    fn try_func_header(&mut self) -> PResult<Option<Vec<String>>> {
        if self.peek().is_op("->") {
            self.pos += 1;
            return Ok(Some(Vec::new()));
        }
        if !self.peek().is_op("(") {
            return Ok(None);
        }
        let mut j = self.pos + 1;
        let mut params = Vec::new();
        loop {
            let Some(t) = self.toks.get(j) else {
                return Ok(None);
            };
            if t.is_op(")") && params.is_empty() {
                break;
            }
            if t.kind != TokenKind::Ident || is_keyword(&t.lexeme) {
                return Ok(None);
            }
            params.push(t.lexeme.clone());
            j += 1;
            match self.toks.get(j) {
                Some(t) if t.is_op(",") => j += 1,
                Some(t) if t.is_op(")") => break,
                _ => return Ok(None),
            }
        }
        if self.toks.get(j + 1).is_some_and(|t| t.is_op("->")) {
            self.pos = j + 2;
            Ok(Some(params))
        } else {
            Ok(None)
        }
    }

    fn range(&mut self) -> PResult<Expr> {
        if self.peek().kind != TokenKind::RangeOpen {
            return Err(unexpected(self.peek(), "expected a range `[a..b]`"));
        }
        self.pos += 1;
        let lo = self.expr()?;
        self.expect_op("..")?;
        let hi = self.expr()?;
        if self.peek().kind != TokenKind::RangeClose {
            return Err(unexpected(self.peek(), "expected `]`"));
        }
        self.pos += 1;
        Ok(Expr::range(lo, hi))
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let t = self.peek();
            let op = match (t.kind, BinOp::from_symbol(&t.lexeme)) {
                (TokenKind::Op, Some(op)) if op.precedence() >= min_prec => op,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.peek().is_op("-") {
            let minus = self.peek().clone();
            self.pos += 1;
            let t = self.peek().clone();
            return match t.kind {
                TokenKind::Int => {
                    self.pos += 1;
                    int_literal(&format!("-{}", t.lexeme), &minus)
                }
                TokenKind::Float => {
                    self.pos += 1;
                    Ok(Expr::float(-float_literal(&t)))
                }
                _ => Ok(Expr::binary(BinOp::Sub, Expr::int(0), self.unary()?)),
            };
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let t = self.peek().clone();
        match t.kind {
            TokenKind::Int => {
                self.pos += 1;
                int_literal(&t.lexeme, &t)
            }
            TokenKind::Float => {
                self.pos += 1;
                Ok(Expr::float(float_literal(&t)))
            }
            TokenKind::Str => {
                self.pos += 1;
                Ok(Expr::str(decode_string(&t.lexeme)))
            }
            TokenKind::Ident if !is_keyword(&t.lexeme) => {
                self.pos += 1;
                Ok(Expr::var(t.lexeme))
            }
            TokenKind::Op if t.lexeme == "(" => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_op(")")?;
                Ok(e)
            }
            TokenKind::RangeOpen => Err(unexpected(
                &t,
                "a range is only allowed as the iterable of a `for` loop",
            )),
            _ => Err(unexpected(&t, "expected an expression")),
        }
    }
}

fn int_literal(text: &str, at: &Token) -> PResult<Expr> {
    text.parse::<i64>().map(Expr::int).map_err(|_| {
        Diagnostic::error(
            DiagCode::UnexpectedToken,
            format!("integer literal `{text}` is out of range"),
            at.line,
            at.col,
        )
    })
}

fn float_literal(t: &Token) -> f64 {
    t.lexeme
        .parse::<f64>()
        .expect("lexer only produces digits '.' digits")
}

/// Decodes a quoted literal, including its surrounding quotes.
pub(crate) fn decode_string(lexeme: &str) -> String {
    let inner = &lexeme[1..lexeme.len() - 1];
    let mut out = String::with_capacity(inner.len());
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}
