//! Droplet-style block model: a token stream marked up with `<block>` and
//! `<socket>` tags, its XML-like serialization, and the row layout pass.
//!
//! Serialized form, one element per block:
//!
//! ```text
//! <block type="for-range" id="1">for <socket name="range">[1..3]</socket>
//!   <block type="fd" id="2">fd <socket name="args">100</socket>
//! </block></block>
//! ```
//!
//! A raw `\n` is a line break and each pair of spaces at the start of a line
//! is an indent marker. Text escapes `&`, `<` and `>` as entities.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Palette kind carried in a block's `type` attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BlockKind {
    #[serde(rename = "fd")]
    Forward,
    #[serde(rename = "bk")]
    Back,
    #[serde(rename = "rt")]
    Right,
    #[serde(rename = "lt")]
    Left,
    #[serde(rename = "speed")]
    Speed,
    #[serde(rename = "pen")]
    Pen,
    #[serde(rename = "write")]
    Write,
    #[serde(rename = "if-else")]
    IfElse,
    #[serde(rename = "for-range")]
    ForRange,
    #[serde(rename = "for-in")]
    ForIn,
    #[serde(rename = "assignment")]
    Assignment,
    #[serde(rename = "func-def")]
    FuncDef,
    #[serde(rename = "func-call")]
    FuncCall,
}

impl BlockKind {
    pub const ALL: [BlockKind; 13] = [
        BlockKind::Forward,
        BlockKind::Back,
        BlockKind::Right,
        BlockKind::Left,
        BlockKind::Speed,
        BlockKind::Pen,
        BlockKind::Write,
        BlockKind::IfElse,
        BlockKind::ForRange,
        BlockKind::ForIn,
        BlockKind::Assignment,
        BlockKind::FuncDef,
        BlockKind::FuncCall,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BlockKind::Forward => "fd",
            BlockKind::Back => "bk",
            BlockKind::Right => "rt",
            BlockKind::Left => "lt",
            BlockKind::Speed => "speed",
            BlockKind::Pen => "pen",
            BlockKind::Write => "write",
            BlockKind::IfElse => "if-else",
            BlockKind::ForRange => "for-range",
            BlockKind::ForIn => "for-in",
            BlockKind::Assignment => "assignment",
            BlockKind::FuncDef => "func-def",
            BlockKind::FuncCall => "func-call",
        }
    }

    /// Built-in command blocks, keyed by the command word they emit.
    pub fn for_command(name: &str) -> Option<BlockKind> {
        BlockKind::ALL[..7]
            .iter()
            .copied()
            .find(|k| k.as_str() == name)
    }
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BlockKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        BlockKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MarkupToken {
    BlockStart {
        #[serde(rename = "type")]
        block_type: BlockKind,
        id: u32,
    },
    BlockEnd,
    SocketStart {
        name: String,
    },
    SocketEnd,
    Text {
        lexeme: String,
    },
    LineBreak,
    IndentMarker,
}

impl MarkupToken {
    pub fn text(s: impl Into<String>) -> Self {
        MarkupToken::Text { lexeme: s.into() }
    }

    pub fn socket(name: impl Into<String>) -> Self {
        MarkupToken::SocketStart { name: name.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct BlockDocument {
    pub tokens: Vec<MarkupToken>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("MARKUP_MALFORMED at byte {offset}: {message}")]
pub struct MarkupError {
    /// Byte offset into the markup text. For in-memory documents this is the
    /// offset in the document's own serialization.
    pub offset: usize,
    pub message: String,
}

impl MarkupError {
    pub const CODE: &'static str = "MARKUP_MALFORMED";

    fn new(offset: usize, message: impl Into<String>) -> Self {
        Self {
            offset,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LayoutRow {
    pub row: usize,
    pub depth: usize,
    pub block_ids: Vec<u32>,
    pub leading_blank: bool,
}

#[derive(Clone, Copy, PartialEq)]
enum Open {
    Block,
    Socket,
}

impl BlockDocument {
    pub fn new(tokens: Vec<MarkupToken>) -> Self {
        Self { tokens }
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Checks nesting, id uniqueness and socket placement.
    pub fn validate(&self) -> Result<(), MarkupError> {
        let mut stack = Vec::new();
        let mut ids = HashSet::new();
        let mut offset = 0;
        for tok in &self.tokens {
            check_token(tok, &mut stack, &mut ids, offset)?;
            offset += serialized_len(tok);
        }
        if !stack.is_empty() {
            return Err(MarkupError::new(
                offset,
                "unclosed element at end of document",
            ));
        }
        Ok(())
    }

    /// Ids of all blocks in document order.
    pub fn block_ids(&self) -> Vec<u32> {
        self.tokens
            .iter()
            .filter_map(|t| match t {
                MarkupToken::BlockStart { id, .. } => Some(*id),
                _ => None,
            })
            .collect()
    }

    /// Kinds of the top-level blocks, in order.
    pub fn top_level_kinds(&self) -> Vec<BlockKind> {
        let mut depth = 0usize;
        let mut out = Vec::new();
        for t in &self.tokens {
            match t {
                MarkupToken::BlockStart { block_type, .. } => {
                    if depth == 0 {
                        out.push(*block_type);
                    }
                    depth += 1;
                }
                MarkupToken::BlockEnd => depth = depth.saturating_sub(1),
                _ => {}
            }
        }
        out
    }

    /// Concatenates text, line breaks and indent markers: the source text the
    /// document stands for.
    pub fn text_projection(&self) -> String {
        let mut out = String::new();
        for t in &self.tokens {
            match t {
                MarkupToken::Text { lexeme } => out.push_str(lexeme),
                MarkupToken::LineBreak => out.push('\n'),
                MarkupToken::IndentMarker => out.push_str("  "),
                _ => {}
            }
        }
        out
    }
}

fn check_token(
    tok: &MarkupToken,
    stack: &mut Vec<Open>,
    ids: &mut HashSet<u32>,
    offset: usize,
) -> Result<(), MarkupError> {
    let in_socket = stack.last() == Some(&Open::Socket);
    match tok {
        MarkupToken::BlockStart { id, .. } => {
            if in_socket {
                return Err(MarkupError::new(offset, "block inside a socket"));
            }
            if !ids.insert(*id) {
                return Err(MarkupError::new(offset, format!("duplicate block id {id}")));
            }
            stack.push(Open::Block);
        }
        MarkupToken::BlockEnd => {
            if stack.pop() != Some(Open::Block) {
                return Err(MarkupError::new(offset, "</block> does not close a block"));
            }
        }
        MarkupToken::SocketStart { name } => {
            if stack.last() != Some(&Open::Block) {
                return Err(MarkupError::new(offset, "socket outside a block"));
            }
            if !valid_socket_name(name) {
                return Err(MarkupError::new(
                    offset,
                    format!("invalid socket name {name:?}"),
                ));
            }
            stack.push(Open::Socket);
        }
        MarkupToken::SocketEnd => {
            if stack.pop() != Some(Open::Socket) {
                return Err(MarkupError::new(
                    offset,
                    "</socket> does not close a socket",
                ));
            }
        }
        MarkupToken::LineBreak | MarkupToken::IndentMarker if in_socket => {
            return Err(MarkupError::new(offset, "line structure inside a socket"));
        }
        MarkupToken::Text { lexeme } if lexeme.contains('\n') => {
            return Err(MarkupError::new(offset, "text token contains a newline"));
        }
        _ => {}
    }
    Ok(())
}

fn valid_socket_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-')
}

fn serialized_len(tok: &MarkupToken) -> usize {
    let mut s = String::new();
    write_token(tok, &mut s);
    s.len()
}

fn write_token(tok: &MarkupToken, out: &mut String) {
    match tok {
        MarkupToken::BlockStart { block_type, id } => {
            out.push_str(&format!("<block type=\"{block_type}\" id=\"{id}\">"));
        }
        MarkupToken::BlockEnd => out.push_str("</block>"),
        MarkupToken::SocketStart { name } => {
            out.push_str(&format!("<socket name=\"{name}\">"));
        }
        MarkupToken::SocketEnd => out.push_str("</socket>"),
        MarkupToken::Text { lexeme } => {
            for c in lexeme.chars() {
                match c {
                    '&' => out.push_str("&amp;"),
                    '<' => out.push_str("&lt;"),
                    '>' => out.push_str("&gt;"),
                    c => out.push(c),
                }
            }
        }
        MarkupToken::LineBreak => out.push('\n'),
        MarkupToken::IndentMarker => out.push_str("  "),
    }
}

/// Serializes a document. Attribute order is fixed (`type`, `id`; `name`).
pub fn to_markup(doc: &BlockDocument) -> String {
    let mut out = String::new();
    for t in &doc.tokens {
        write_token(t, &mut out);
    }
    out
}

/// Parses serialized markup back into a document.
///
/// Adjacent text is merged into one token, so `from_markup` inverts
/// [`to_markup`] on documents without adjacent or empty text tokens, which
/// is every document the adapter produces.
pub fn from_markup(text: &str) -> Result<BlockDocument, MarkupError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut stack = Vec::new();
    let mut ids = HashSet::new();
    let mut at_line_start = true;
    let mut i = 0;

    let push = |tok: MarkupToken,
                tokens: &mut Vec<MarkupToken>,
                stack: &mut Vec<Open>,
                ids: &mut HashSet<u32>,
                at: usize|
     -> Result<(), MarkupError> {
        check_token(&tok, stack, ids, at)?;
        tokens.push(tok);
        Ok(())
    };

    while i < bytes.len() {
        match bytes[i] {
            b'<' => {
                let end = text[i..]
                    .find('>')
                    .map(|e| i + e)
                    .ok_or_else(|| MarkupError::new(i, "unterminated tag"))?;
                let tag = &text[i + 1..end];
                let tok = parse_tag(tag)
                    .ok_or_else(|| MarkupError::new(i, format!("unrecognized tag <{tag}>")))?;
                push(tok, &mut tokens, &mut stack, &mut ids, i)?;
                i = end + 1;
            }
            b'\n' => {
                push(MarkupToken::LineBreak, &mut tokens, &mut stack, &mut ids, i)?;
                at_line_start = true;
                i += 1;
            }
            b' ' if at_line_start && bytes.get(i + 1) == Some(&b' ') => {
                push(
                    MarkupToken::IndentMarker,
                    &mut tokens,
                    &mut stack,
                    &mut ids,
                    i,
                )?;
                i += 2;
            }
            _ => {
                let start = i;
                let end = text[i..].find(['<', '\n']).map_or(text.len(), |e| i + e);
                let lexeme = unescape(&text[start..end], start)?;
                push(
                    MarkupToken::Text { lexeme },
                    &mut tokens,
                    &mut stack,
                    &mut ids,
                    start,
                )?;
                at_line_start = false;
                i = end;
            }
        }
    }
    if !stack.is_empty() {
        let what = if stack.last() == Some(&Open::Socket) {
            "socket"
        } else {
            "block"
        };
        return Err(MarkupError::new(text.len(), format!("unclosed <{what}>")));
    }
    Ok(BlockDocument { tokens })
}

fn parse_tag(tag: &str) -> Option<MarkupToken> {
    match tag {
        "/block" => return Some(MarkupToken::BlockEnd),
        "/socket" => return Some(MarkupToken::SocketEnd),
        _ => {}
    }
    if let Some(rest) = tag.strip_prefix("block type=\"") {
        let (ty, rest) = rest.split_once('"')?;
        let id = rest.strip_prefix(" id=\"")?.strip_suffix('"')?;
        if id.is_empty() || !id.bytes().all(|b| b.is_ascii_digit()) || id.starts_with('0') {
            return None;
        }
        return Some(MarkupToken::BlockStart {
            block_type: ty.parse().ok()?,
            id: id.parse().ok()?,
        });
    }
    let name = tag.strip_prefix("socket name=\"")?.strip_suffix('"')?;
    valid_socket_name(name).then(|| MarkupToken::socket(name))
}

fn unescape(raw: &str, base: usize) -> Result<String, MarkupError> {
    let mut out = String::with_capacity(raw.len());
    let mut rest = raw;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        let tail = &rest[amp..];
        let (ch, len) = [("&amp;", '&'), ("&lt;", '<'), ("&gt;", '>')]
            .iter()
            .find(|(ent, _)| tail.starts_with(ent))
            .map(|(ent, c)| (*c, ent.len()))
            .ok_or_else(|| {
                MarkupError::new(base + (raw.len() - rest.len()) + amp, "unknown entity")
            })?;
        out.push(ch);
        rest = &tail[len..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Splits the document into source rows.
///
/// A row's depth is its number of indent markers. `leading_blank` marks a
/// row that starts a top-level block whose kind differs from the previous
/// top-level block, so the renderer can add vertical space there.
pub fn layout(doc: &BlockDocument) -> Vec<LayoutRow> {
    let mut rows = Vec::new();
    let mut open: Vec<u32> = Vec::new();
    let mut prev_top: Option<BlockKind> = None;

    let mut depth = 0;
    let mut ids = Vec::new();
    let mut leading_blank = false;
    let mut row_has_content = false;
    let mut row_first_open: Option<u32> = None;

    for t in &doc.tokens {
        match t {
            MarkupToken::IndentMarker => {
                if !row_has_content {
                    depth += 1;
                }
            }
            MarkupToken::BlockStart { block_type, id } => {
                if !row_has_content {
                    row_first_open = open.last().copied();
                }
                if open.is_empty() {
                    if prev_top.is_some_and(|k| k != *block_type) && ids.is_empty() {
                        leading_blank = true;
                    }
                    prev_top = Some(*block_type);
                }
                open.push(*id);
                ids.push(*id);
                row_has_content = true;
            }
            MarkupToken::BlockEnd => {
                open.pop();
            }
            MarkupToken::LineBreak => {
                if ids.is_empty() {
                    ids.extend(row_first_open.or(open.last().copied()));
                }
                rows.push(LayoutRow {
                    row: rows.len(),
                    depth,
                    block_ids: std::mem::take(&mut ids),
                    leading_blank,
                });
                depth = 0;
                leading_blank = false;
                row_has_content = false;
                row_first_open = None;
            }
            MarkupToken::Text { .. } | MarkupToken::SocketStart { .. } | MarkupToken::SocketEnd => {
                if !row_has_content {
                    row_first_open = open.last().copied();
                }
                row_has_content = true;
            }
        }
    }
    if row_has_content {
        if ids.is_empty() {
            ids.extend(row_first_open.or(open.last().copied()));
        }
        rows.push(LayoutRow {
            row: rows.len(),
            depth,
            block_ids: ids,
            leading_blank,
        });
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_doc() -> BlockDocument {
        BlockDocument::new(vec![
            MarkupToken::BlockStart {
                block_type: BlockKind::Forward,
                id: 1,
            },
            MarkupToken::text("fd "),
            MarkupToken::socket("args"),
            MarkupToken::text("100"),
            MarkupToken::SocketEnd,
            MarkupToken::LineBreak,
            MarkupToken::BlockEnd,
        ])
    }

    #[test]
    fn single_block_markup() {
        assert_eq!(
            to_markup(&fd_doc()),
            "<block type=\"fd\" id=\"1\">fd <socket name=\"args\">100</socket>\n</block>"
        );
        assert_eq!(from_markup(&to_markup(&fd_doc())).unwrap(), fd_doc());
    }

    #[test]
    fn empty_document() {
        assert_eq!(to_markup(&BlockDocument::default()), "");
        assert_eq!(from_markup("").unwrap(), BlockDocument::default());
        assert!(layout(&BlockDocument::default()).is_empty());
    }

    #[test]
    fn unclosed_block_is_malformed() {
        let err = from_markup("<block type=\"fd\" id=\"1\">").unwrap_err();
        assert_eq!(err.offset, 24);
    }

    #[test]
    fn top_level_socket_is_malformed() {
        let err = from_markup("<socket name=\"x\">1</socket>").unwrap_err();
        assert_eq!(err.offset, 0);
        assert!(err.message.contains("outside"));
    }

    #[test]
    fn mismatched_and_duplicate() {
        let err = from_markup("<block type=\"fd\" id=\"1\"></socket>").unwrap_err();
        assert_eq!(err.offset, 24);
        let dup = "<block type=\"fd\" id=\"1\"></block><block type=\"rt\" id=\"1\"></block>";
        let err = from_markup(dup).unwrap_err();
        assert_eq!(err.offset, 32);
        assert!(err.message.contains("duplicate"));
    }

    #[test]
    fn unknown_block_type_or_entity() {
        assert!(from_markup("<block type=\"jump\" id=\"1\"></block>").is_err());
        let err = from_markup("<block type=\"fd\" id=\"1\">a &b</block>").unwrap_err();
        assert_eq!(err.offset, 26);
    }

    #[test]
    fn entities_round_trip() {
        let doc = BlockDocument::new(vec![
            MarkupToken::BlockStart {
                block_type: BlockKind::Write,
                id: 3,
            },
            MarkupToken::text("write "),
            MarkupToken::socket("args"),
            MarkupToken::text("'a < b && c > d'"),
            MarkupToken::SocketEnd,
            MarkupToken::LineBreak,
            MarkupToken::BlockEnd,
        ]);
        let m = to_markup(&doc);
        assert!(m.contains("&lt;") && m.contains("&amp;&amp;") && m.contains("&gt;"));
        assert_eq!(from_markup(&m).unwrap(), doc);
    }

    #[test]
    fn validate_reports_serialized_offset() {
        let mut doc = fd_doc();
        doc.tokens.pop();
        let err = doc.validate().unwrap_err();
        assert_eq!(err.offset, to_markup(&doc).len());
        assert!(fd_doc().validate().is_ok());
    }

    #[test]
    fn spacing_rule_on_type_change() {
        let src = "<block type=\"fd\" id=\"1\">fd <socket name=\"args\">100</socket>\n</block>\
                   <block type=\"rt\" id=\"2\">rt <socket name=\"args\">45</socket>\n</block>\
                   <block type=\"rt\" id=\"3\">rt <socket name=\"args\">45</socket>\n</block>";
        let rows = layout(&from_markup(src).unwrap());
        assert_eq!(rows.len(), 3);
        assert_eq!(
            rows.iter().map(|r| r.leading_blank).collect::<Vec<_>>(),
            vec![false, true, false]
        );
        assert!(rows.iter().all(|r| r.depth == 0));
        assert_eq!(rows[1].block_ids, vec![2]);
    }
}
