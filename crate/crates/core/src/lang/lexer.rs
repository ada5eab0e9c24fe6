//! Line-oriented tokenizer.
//!
//! Blank and comment-only lines produce no tokens at all. Every other line
//! produces an optional [`TokenKind::Indent`] (only when it is indented), the
//! line's tokens, and a [`TokenKind::Newline`] when the line is terminated by
//! `\n`. The parser reads indentation from the `Indent` token alone.

use std::ops::Range;

use serde::Serialize;

use super::diag::{DiagCode, Diagnostic};

/// Width of one nesting level, in spaces.
pub const INDENT_UNIT: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenKind {
    Ident,
    Int,
    Float,
    Str,
    Op,
    RangeOpen,
    RangeClose,
    Newline,
    Indent,
    Eof,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    /// 1-based line.
    pub line: usize,
    /// 1-based column, in characters.
    pub col: usize,
    /// Byte range into the LF-normalized source.
    #[serde(skip)]
    pub span: Range<usize>,
}

impl Token {
    pub fn is_op(&self, op: &str) -> bool {
        self.kind == TokenKind::Op && self.lexeme == op
    }

    pub fn is_ident(&self, name: &str) -> bool {
        self.kind == TokenKind::Ident && self.lexeme == name
    }

    /// Indentation width carried by an `Indent` token.
    pub fn indent_width(&self) -> usize {
        debug_assert_eq!(self.kind, TokenKind::Indent);
        self.lexeme.len()
    }
}

/// Converts CRLF line endings to LF. All positions refer to the normalized text.
pub fn normalize_newlines(source: &str) -> std::borrow::Cow<'_, str> {
    if source.contains("\r\n") {
        std::borrow::Cow::Owned(source.replace("\r\n", "\n"))
    } else {
        std::borrow::Cow::Borrowed(source)
    }
}

const TWO_CHAR_OPS: [&str; 6] = ["..", "->", ">=", "<=", "==", "!="];
const ONE_CHAR_OPS: &str = "=+-*/%><(),";

/// Tokenizes `source`. Lexing continues past errors so that every problem in
/// the text is reported at once.
pub fn tokenize(source: &str) -> Result<Vec<Token>, Vec<Diagnostic>> {
    let source = normalize_newlines(source);
    let mut lexer = Lexer {
        tokens: Vec::new(),
        diags: Vec::new(),
    };
    let mut offset = 0;
    let mut line_no = 0;
    let mut last_line_len = 0;
    let mut ended_with_newline = false;
    for raw in source.split_inclusive('\n') {
        line_no += 1;
        let (body, terminated) = match raw.strip_suffix('\n') {
            Some(b) => (b, true),
            None => (raw, false),
        };
        lexer.line(body, offset, line_no, terminated);
        offset += raw.len();
        last_line_len = body.chars().count();
        ended_with_newline = terminated;
    }
    let (eof_line, eof_col) = if line_no == 0 {
        (1, 1)
    } else if ended_with_newline {
        (line_no + 1, 1)
    } else {
        (line_no, last_line_len + 1)
    };
    lexer.tokens.push(Token {
        kind: TokenKind::Eof,
        lexeme: String::new(),
        line: eof_line,
        col: eof_col,
        span: offset..offset,
    });
    if lexer.diags.is_empty() {
        Ok(lexer.tokens)
    } else {
        Err(lexer.diags)
    }
}

struct Lexer {
    tokens: Vec<Token>,
    diags: Vec<Diagnostic>,
}

impl Lexer {
    fn line(&mut self, body: &str, base: usize, line: usize, terminated: bool) {
        let chars: Vec<(usize, char)> = body.char_indices().collect();
        let mut i = 0;
        let mut tab_at = None;
        while i < chars.len() && (chars[i].1 == ' ' || chars[i].1 == '\t') {
            if chars[i].1 == '\t' && tab_at.is_none() {
                tab_at = Some(i);
            }
            i += 1;
        }
        let indent_chars = i;
        let first_token = self.tokens.len();
        let mut pending_diags = Vec::new();

        while i < chars.len() {
            let c = chars[i].1;
            let col = i + 1;
            match c {
                ' ' | '\t' => i += 1,
                '/' if chars.get(i + 1).map(|p| p.1) == Some('/') => break,
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let j = scan_while(&chars, i, |c| c.is_ascii_alphanumeric() || c == '_');
                    self.push(TokenKind::Ident, body, &chars, i, j, base, line);
                    i = j;
                }
                c if c.is_ascii_digit() => {
                    let mut j = scan_while(&chars, i, |c| c.is_ascii_digit());
                    let mut kind = TokenKind::Int;
                    let frac_follows = chars.get(j).map(|p| p.1) == Some('.')
                        && chars.get(j + 1).is_some_and(|p| p.1.is_ascii_digit());
                    if frac_follows {
                        j = scan_while(&chars, j + 1, |c| c.is_ascii_digit());
                        kind = TokenKind::Float;
                    }
                    self.push(kind, body, &chars, i, j, base, line);
                    i = j;
                }
                '\'' | '"' => {
                    let mut j = i + 1;
                    let mut closed = false;
                    while j < chars.len() {
                        match chars[j].1 {
                            '\\' => j += 2,
                            q if q == c => {
                                closed = true;
                                j += 1;
                                break;
                            }
                            _ => j += 1,
                        }
                    }
                    if closed {
                        self.push(TokenKind::Str, body, &chars, i, j, base, line);
                        i = j;
                    } else {
                        pending_diags.push(Diagnostic::error(
                            DiagCode::UnterminatedString,
                            "string literal is not closed before the end of the line",
                            line,
                            col,
                        ));
                        break;
                    }
                }
                '[' => {
                    self.push(TokenKind::RangeOpen, body, &chars, i, i + 1, base, line);
                    i += 1;
                }
                ']' => {
                    self.push(TokenKind::RangeClose, body, &chars, i, i + 1, base, line);
                    i += 1;
                }
                _ => {
                    let two: String = chars[i..chars.len().min(i + 2)]
                        .iter()
                        .map(|p| p.1)
                        .collect();
                    if TWO_CHAR_OPS.contains(&two.as_str()) {
                        self.push(TokenKind::Op, body, &chars, i, i + 2, base, line);
                        i += 2;
                    } else if ONE_CHAR_OPS.contains(c) {
                        self.push(TokenKind::Op, body, &chars, i, i + 1, base, line);
                        i += 1;
                    } else {
                        pending_diags.push(Diagnostic::error(
                            DiagCode::UnexpectedCharacter,
                            format!("unexpected character {c:?}"),
                            line,
                            col,
                        ));
                        i += 1;
                    }
                }
            }
        }

        let has_content = self.tokens.len() > first_token || !pending_diags.is_empty();
        if !has_content {
            return;
        }
        if let Some(t) = tab_at {
            self.diags.push(Diagnostic::error(
                DiagCode::IndentTab,
                "tab character in indentation; indent with spaces",
                line,
                t + 1,
            ));
        } else if indent_chars % INDENT_UNIT != 0 {
            self.diags.push(Diagnostic::error(
                DiagCode::IndentMismatch,
                format!("indentation of {indent_chars} spaces is not a multiple of {INDENT_UNIT}"),
                line,
                1,
            ));
        }
        self.diags.extend(pending_diags);
        if indent_chars > 0 {
            let end = chars.get(indent_chars).map_or(body.len(), |p| p.0);
            self.tokens.insert(
                first_token,
                Token {
                    kind: TokenKind::Indent,
                    lexeme: body[..end].to_string(),
                    line,
                    col: 1,
                    span: base..base + end,
                },
            );
        }
        if terminated {
            self.tokens.push(Token {
                kind: TokenKind::Newline,
                lexeme: "\n".to_string(),
                line,
                col: chars.len() + 1,
                span: base + body.len()..base + body.len() + 1,
            });
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        kind: TokenKind,
        body: &str,
        chars: &[(usize, char)],
        from: usize,
        to: usize,
        base: usize,
        line: usize,
    ) {
        let b0 = chars[from].0;
        let b1 = chars.get(to).map_or(body.len(), |p| p.0);
        self.tokens.push(Token {
            kind,
            lexeme: body[b0..b1].to_string(),
            line,
            col: from + 1,
            span: base + b0..base + b1,
        });
    }
}

fn scan_while(chars: &[(usize, char)], mut i: usize, pred: impl Fn(char) -> bool) -> usize {
    while i < chars.len() && pred(chars[i].1) {
        i += 1;
    }
    i
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds_and_lexemes(src: &str) -> Vec<(TokenKind, String)> {
        tokenize(src)
            .unwrap()
            .into_iter()
            .map(|t| (t.kind, t.lexeme))
            .collect()
    }

    #[test]
    fn assignment_tokens() {
        use TokenKind::*;
        assert_eq!(
            kinds_and_lexemes("x = 7"),
            vec![
                (Ident, "x".into()),
                (Op, "=".into()),
                (Int, "7".into()),
                (Eof, "".into())
            ]
        );
    }

    #[test]
    fn empty_source_is_just_eof() {
        let toks = tokenize("").unwrap();
        assert_eq!(toks.len(), 1);
        assert_eq!(toks[0].kind, TokenKind::Eof);
    }

    #[test]
    fn command_tokens() {
        use TokenKind::*;
        assert_eq!(
            kinds_and_lexemes("fd 100"),
            vec![(Ident, "fd".into()), (Int, "100".into()), (Eof, "".into())]
        );
    }

    #[test]
    fn range_does_not_lex_as_float() {
        use TokenKind::*;
        let k: Vec<_> = kinds_and_lexemes("[1..10]")
            .into_iter()
            .map(|p| p.0)
            .collect();
        assert_eq!(k, vec![RangeOpen, Int, Op, Int, RangeClose, Eof]);
        let k: Vec<_> = kinds_and_lexemes("1.5..2")
            .into_iter()
            .map(|p| p.0)
            .collect();
        assert_eq!(k, vec![Float, Op, Int, Eof]);
    }

    #[test]
    fn comments_are_stripped() {
        let toks = tokenize("    sum=sum+x //<----- Syntax Error\n").unwrap();
        let lex: Vec<_> = toks.iter().map(|t| t.lexeme.as_str()).collect();
        assert_eq!(lex, vec!["    ", "sum", "=", "sum", "+", "x", "\n", ""]);
    }

    #[test]
    fn blank_and_comment_lines_produce_nothing() {
        let toks = tokenize("\n   \n// note\nfd 1\n").unwrap();
        assert_eq!(toks.len(), 4);
        assert_eq!(toks[0].line, 4);
    }

    #[test]
    fn indent_token_only_when_indented() {
        let toks = tokenize("for [1..2]\n  fd 1\n").unwrap();
        let indents: Vec<_> = toks
            .iter()
            .filter(|t| t.kind == TokenKind::Indent)
            .collect();
        assert_eq!(indents.len(), 1);
        assert_eq!(indents[0].indent_width(), 2);
        assert_eq!(indents[0].line, 2);
    }

    #[test]
    fn tab_indent_is_an_error() {
        let errs = tokenize("if x\n\tfd 1\n").unwrap_err();
        assert_eq!(errs[0].code, DiagCode::IndentTab);
        assert_eq!((errs[0].line, errs[0].col), (2, 1));
    }

    #[test]
    fn odd_indent_is_a_mismatch() {
        let errs = tokenize("if x\n fd 1\n").unwrap_err();
        assert_eq!(errs[0].code, DiagCode::IndentMismatch);
    }

    #[test]
    fn unterminated_string() {
        let errs = tokenize("write 'abc\nfd 1").unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].code, DiagCode::UnterminatedString);
        assert_eq!((errs[0].line, errs[0].col), (1, 7));
    }

    #[test]
    fn escaped_quote_stays_inside_string() {
        let toks = tokenize(r"write 'it\'s'").unwrap();
        assert_eq!(toks[1].kind, TokenKind::Str);
        assert_eq!(toks[1].lexeme, r"'it\'s'");
    }

    #[test]
    fn crlf_is_normalized() {
        let a = kinds_and_lexemes("fd 1\r\nrt 2\r\n");
        let b = kinds_and_lexemes("fd 1\nrt 2\n");
        assert_eq!(a, b);
    }

    #[test]
    fn spans_match_lexemes() {
        let src = "sum = 0\nfor x in [0..10]\n  write 'sum= ' + sum // c\n";
        for t in tokenize(src).unwrap() {
            assert_eq!(&src[t.span.clone()], t.lexeme);
        }
    }

    #[test]
    fn stray_character_is_reported() {
        let errs = tokenize("fd 1 $").unwrap_err();
        assert_eq!(errs[0].code, DiagCode::UnexpectedCharacter);
        assert_eq!(errs[0].col, 6);
    }
}
