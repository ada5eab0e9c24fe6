//! Hybrid editing sessions.
//!
//! The program text is authoritative and the block document is always
//! derived from it by a full reparse. A failed reparse keeps the blocks of
//! the last valid revision and marks them stale until the text parses again.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use uuid::Uuid;

use crate::adapter::{ast_to_blocks, instantiate, palette_item};
use crate::blocks::{layout, BlockDocument, LayoutRow};
use crate::interp::{self, ExecutionTrace, RuntimeDiagnostic};
use crate::lang::lexer::normalize_newlines;
use crate::lang::{parse, Diagnostic, Program, INDENT_UNIT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionId(Uuid);

impl SessionId {
    pub fn random() -> Self {
        SessionId(Uuid::new_v4())
    }
}

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for SessionId {
    type Err = uuid::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Uuid::parse_str(s).map(SessionId)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EditError {
    #[error("unknown palette id `{0}`")]
    UnknownPaletteId(String),
    #[error("line {line} is outside 0..={line_count}")]
    LineOutOfRange { line: usize, line_count: usize },
    #[error("range {0} is outside the document or reversed")]
    RangeOutOfBounds(TextRange),
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("revision conflict: expected {expected}, current {current}")]
    RevisionConflict { expected: u64, current: u64 },
}

impl EditError {
    pub fn code(&self) -> &'static str {
        match self {
            EditError::UnknownPaletteId(_) => "UNKNOWN_PALETTE_ID",
            EditError::LineOutOfRange { .. } => "LINE_OUT_OF_RANGE",
            EditError::RangeOutOfBounds(_) => "RANGE_OUT_OF_BOUNDS",
            EditError::UnknownSession(_) => "UNKNOWN_SESSION",
            EditError::RevisionConflict { .. } => "REVISION_CONFLICT",
        }
    }
}

/// A text range with 0-based lines and 0-based character columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextRange {
    pub start_line: usize,
    pub start_col: usize,
    pub end_line: usize,
    pub end_col: usize,
}

impl TextRange {
    pub fn new(start_line: usize, start_col: usize, end_line: usize, end_col: usize) -> Self {
        Self {
            start_line,
            start_col,
            end_line,
            end_col,
        }
    }
}

impl fmt::Display for TextRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}-{}:{}",
            self.start_line, self.start_col, self.end_line, self.end_col
        )
    }
}

/// Half-open range of 0-based line indices in the new text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LineRange {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub id: SessionId,
    pub text: String,
    pub blocks: BlockDocument,
    pub layout: Vec<LayoutRow>,
    pub diagnostics: Vec<Diagnostic>,
    pub revision: u64,
    pub stale: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EditResult {
    pub text: String,
    pub blocks: BlockDocument,
    pub layout: Vec<LayoutRow>,
    pub diagnostics: Vec<Diagnostic>,
    pub revision: u64,
    pub stale: bool,
    pub changed_lines: LineRange,
}

#[derive(Debug, Clone, PartialEq, Error, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RunFailure {
    #[error("program has {} diagnostic(s)", diagnostics.len())]
    NotRunnable { diagnostics: Vec<Diagnostic> },
    #[error("{error}")]
    Runtime { error: RuntimeDiagnostic },
}

#[derive(Debug, Clone)]
pub struct Session {
    id: SessionId,
    text: String,
    program: Option<Program>,
    blocks: BlockDocument,
    diagnostics: Vec<Diagnostic>,
    revision: u64,
    stale: bool,
}

impl Session {
    pub fn new(initial_text: &str) -> Self {
        let mut s = Session {
            id: SessionId::random(),
            text: normalize_newlines(initial_text).into_owned(),
            program: None,
            blocks: BlockDocument::default(),
            diagnostics: Vec::new(),
            revision: 0,
            stale: false,
        };
        s.sync();
        s
    }

    pub fn id(&self) -> SessionId {
        self.id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn blocks(&self) -> &BlockDocument {
        &self.blocks
    }

    pub fn diagnostics(&self) -> &[Diagnostic] {
        &self.diagnostics
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn is_stale(&self) -> bool {
        self.stale
    }

    /// Number of lines, not counting the empty remainder after a final `\n`.
    pub fn line_count(&self) -> usize {
        line_count(&self.text)
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            id: self.id,
            text: self.text.clone(),
            blocks: self.blocks.clone(),
            layout: layout(&self.blocks),
            diagnostics: self.diagnostics.clone(),
            revision: self.revision,
            stale: self.stale,
        }
    }

    fn sync(&mut self) {
        match parse(&self.text) {
            Ok(p) => {
                self.blocks = ast_to_blocks(&p);
                self.program = Some(p);
                self.diagnostics.clear();
                self.stale = false;
            }
            Err(diags) => {
                self.program = None;
                self.diagnostics = diags;
                self.stale = true;
            }
        }
    }

    fn commit(&mut self, new_text: String) -> EditResult {
        let changed_lines = changed_lines(&self.text, &new_text);
        self.text = new_text;
        self.revision += 1;
        self.sync();
        EditResult {
            text: self.text.clone(),
            blocks: self.blocks.clone(),
            layout: layout(&self.blocks),
            diagnostics: self.diagnostics.clone(),
            revision: self.revision,
            stale: self.stale,
            changed_lines,
        }
    }

    /// Inserts a palette template before `target_line`, indented into the
    /// body that encloses that line.
    pub fn drop_block(
        &mut self,
        palette_id: &str,
        target_line: usize,
    ) -> Result<EditResult, EditError> {
        let item = palette_item(palette_id)
            .ok_or_else(|| EditError::UnknownPaletteId(palette_id.to_string()))?;
        let lines: Vec<&str> = self.text.split_terminator('\n').collect();
        if target_line > lines.len() {
            return Err(EditError::LineOutOfRange {
                line: target_line,
                line_count: lines.len(),
            });
        }
        let level = insertion_level(&lines, target_line);
        let snippet = instantiate(item, level);
        let mut out = String::with_capacity(self.text.len() + snippet.len() + 1);
        for l in &lines[..target_line] {
            out.push_str(l);
            out.push('\n');
        }
        out.push_str(&snippet);
        for l in &lines[target_line..] {
            out.push_str(l);
            out.push('\n');
        }
        Ok(self.commit(out))
    }

    /// Replaces the text between two positions.
    pub fn edit_text(
        &mut self,
        range: TextRange,
        replacement: &str,
    ) -> Result<EditResult, EditError> {
        let start = byte_offset(&self.text, range.start_line, range.start_col);
        let end = byte_offset(&self.text, range.end_line, range.end_col);
        let (Some(start), Some(end)) = (start, end) else {
            return Err(EditError::RangeOutOfBounds(range));
        };
        if start > end {
            return Err(EditError::RangeOutOfBounds(range));
        }
        let replacement = normalize_newlines(replacement);
        let mut out = String::with_capacity(self.text.len() + replacement.len());
        out.push_str(&self.text[..start]);
        out.push_str(&replacement);
        out.push_str(&self.text[end..]);
        Ok(self.commit(out))
    }

    /// Runs the current text if it parses.
    pub fn run(&self, step_limit: u64) -> Result<ExecutionTrace, RunFailure> {
        let Some(program) = &self.program else {
            return Err(RunFailure::NotRunnable {
                diagnostics: self.diagnostics.clone(),
            });
        };
        interp::run(program, step_limit).map_err(|error| RunFailure::Runtime { error })
    }
}

pub fn line_count(text: &str) -> usize {
    text.split_terminator('\n').count()
}

fn byte_offset(text: &str, line: usize, col: usize) -> Option<usize> {
    let mut base = 0;
    for (i, piece) in text.split('\n').enumerate() {
        if i == line {
            if col == 0 {
                return Some(base);
            }
            return match piece.char_indices().nth(col) {
                Some((b, _)) => Some(base + b),
                None if piece.chars().count() == col => Some(base + piece.len()),
                None => None,
            };
        }
        base += piece.len() + 1;
    }
    None
}

fn changed_lines(old: &str, new: &str) -> LineRange {
    let a: Vec<&str> = old.split('\n').collect();
    let b: Vec<&str> = new.split('\n').collect();
    let prefix = a.iter().zip(&b).take_while(|(x, y)| x == y).count();
    let max_suffix = a.len().min(b.len()) - prefix;
    let suffix = a
        .iter()
        .rev()
        .zip(b.iter().rev())
        .take(max_suffix)
        .take_while(|(x, y)| x == y)
        .count();
    LineRange {
        start: prefix,
        end: b.len() - suffix,
    }
}

struct LineShape {
    indent: usize,
    header: bool,
    is_else: bool,
}

/// Leading spaces and statement shape of a line, ignoring comments.
/// `None` for blank or comment-only lines.
fn line_shape(line: &str) -> Option<LineShape> {
    let mut code = String::new();
    let mut quote = None;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match quote {
            Some(q) => {
                if c == '\\' {
                    code.push(c);
                    if let Some(n) = chars.next() {
                        code.push(n);
                    }
                    continue;
                }
                if c == q {
                    quote = None;
                }
            }
            None => {
                if c == '/' && chars.peek() == Some(&'/') {
                    break;
                }
                if c == '\'' || c == '"' {
                    quote = Some(c);
                }
            }
        }
        code.push(c);
    }
    let trimmed = code.trim();
    if trimmed.is_empty() {
        return None;
    }
    let indent = code.len() - code.trim_start().len();
    let first = trimmed
        .split(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .next()
        .unwrap_or("");
    Some(LineShape {
        indent,
        header: matches!(first, "if" | "else" | "for") || trimmed.ends_with("->"),
        is_else: first == "else",
    })
}

/// Nesting level for a block inserted before `target` (0-based).
fn insertion_level(lines: &[&str], target: usize) -> usize {
    let prev = lines[..target].iter().rev().find_map(|l| line_shape(l));
    let next = lines[target..].iter().find_map(|l| line_shape(l));
    let indent = match (prev, next) {
        (Some(p), _) if p.header => p.indent + INDENT_UNIT,
        (Some(p), Some(n)) if n.is_else => p.indent,
        (_, Some(n)) => n.indent,
        _ => 0,
    };
    indent / INDENT_UNIT
}

struct Entry {
    session: Session,
    last_access: Instant,
}

/// Concurrent session registry. Mutations of one session are serialized by
/// its lock; requests may carry an expected revision and are rejected
/// without effect when it is stale.
pub struct SessionStore {
    sessions: RwLock<HashMap<SessionId, Arc<Mutex<Entry>>>>,
    ttl: Duration,
}

pub const DEFAULT_SESSION_TTL: Duration = Duration::from_secs(30 * 60);

impl Default for SessionStore {
    fn default() -> Self {
        Self::new(DEFAULT_SESSION_TTL)
    }
}

impl SessionStore {
    pub fn new(ttl: Duration) -> Self {
        Self {
            sessions: RwLock::new(HashMap::new()),
            ttl,
        }
    }

    pub fn ttl(&self) -> Duration {
        self.ttl
    }

    pub fn create(&self, initial_text: &str) -> Snapshot {
        let session = Session::new(initial_text);
        let snap = session.snapshot();
        self.sessions.write().insert(
            session.id(),
            Arc::new(Mutex::new(Entry {
                session,
                last_access: Instant::now(),
            })),
        );
        snap
    }

    pub fn len(&self) -> usize {
        self.sessions.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn entry(&self, id: SessionId) -> Result<Arc<Mutex<Entry>>, EditError> {
        self.sessions
            .read()
            .get(&id)
            .cloned()
            .ok_or_else(|| EditError::UnknownSession(id.to_string()))
    }

    fn with_session<T>(
        &self,
        id: SessionId,
        expected_revision: Option<u64>,
        f: impl FnOnce(&mut Session) -> Result<T, EditError>,
    ) -> Result<T, EditError> {
        let entry = self.entry(id)?;
        let mut guard = entry.lock();
        guard.last_access = Instant::now();
        if let Some(expected) = expected_revision {
            let current = guard.session.revision();
            if expected != current {
                return Err(EditError::RevisionConflict { expected, current });
            }
        }
        f(&mut guard.session)
    }

    pub fn snapshot(&self, id: SessionId) -> Result<Snapshot, EditError> {
        self.with_session(id, None, |s| Ok(s.snapshot()))
    }

    pub fn drop_block(
        &self,
        id: SessionId,
        palette_id: &str,
        target_line: usize,
        expected_revision: Option<u64>,
    ) -> Result<EditResult, EditError> {
        self.with_session(id, expected_revision, |s| {
            s.drop_block(palette_id, target_line)
        })
    }

    pub fn edit_text(
        &self,
        id: SessionId,
        range: TextRange,
        replacement: &str,
        expected_revision: Option<u64>,
    ) -> Result<EditResult, EditError> {
        self.with_session(id, expected_revision, |s| s.edit_text(range, replacement))
    }

    /// Runs the session's current text. Returns the revision it reflects.
    pub fn run(
        &self,
        id: SessionId,
        step_limit: u64,
        expected_revision: Option<u64>,
    ) -> Result<(u64, Result<ExecutionTrace, RunFailure>), EditError> {
        self.with_session(id, expected_revision, |s| {
            Ok((s.revision(), s.run(step_limit)))
        })
    }

    pub fn remove(&self, id: SessionId) -> bool {
        self.sessions.write().remove(&id).is_some()
    }

    /// Drops sessions idle for longer than the TTL as of `now`.
    pub fn evict_idle(&self, now: Instant) -> usize {
        let mut map = self.sessions.write();
        let before = map.len();
        map.retain(|_, e| {
            let last = e.lock().last_access;
            now.saturating_duration_since(last) <= self.ttl
        });
        before - map.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::DiagCode;

    const SAMPLE_1: &str = "x = 7\nif x > 0\n  write 'x is a positive number.'\nelse\n  write 'x is a negative number.'\n";
    const SAMPLE_2: &str = "sum=0\nfor x in [0..10]\n  if x>8\n  sum=sum+x //<----- Syntax Error\n  write 'sum= ' + sum\n";

    #[test]
    fn new_empty_session() {
        let s = Session::new("");
        assert!(s.blocks().is_empty());
        assert!(s.diagnostics().is_empty());
        assert_eq!(s.revision(), 0);
        assert!(!s.is_stale());
    }

    #[test]
    fn new_session_sample_one() {
        let s = Session::new(SAMPLE_1);
        assert_eq!(s.blocks().top_level_kinds().len(), 2);
    }

    #[test]
    fn new_session_sample_two_reports_indent() {
        let s = Session::new(SAMPLE_2);
        assert_eq!(s.diagnostics()[0].code, DiagCode::IndentMismatch);
        assert!(s.is_stale());
    }

    #[test]
    fn drop_into_empty() {
        let mut s = Session::new("");
        let r = s.drop_block("fd", 0).unwrap();
        assert_eq!(r.text, "fd 100\n");
        assert_eq!(r.blocks.block_ids().len(), 1);
        assert_eq!(r.revision, 1);
        assert_eq!(r.changed_lines, LineRange { start: 0, end: 1 });
    }

    #[test]
    fn drop_into_loop_body() {
        let mut s = Session::new("for [1..10]\n  rt 45");
        let r = s.drop_block("fd", 1).unwrap();
        assert_eq!(r.text, "for [1..10]\n  fd 100\n  rt 45\n");
        assert!(r.diagnostics.is_empty());
    }

    #[test]
    fn drop_if_else_into_empty() {
        let mut s = Session::new("");
        let r = s.drop_block("if-else", 0).unwrap();
        assert!(r.diagnostics.is_empty());
        assert_eq!(r.blocks.top_level_kinds().len(), 1);
    }

    #[test]
    fn drop_before_else_stays_in_branch() {
        let mut s = Session::new(SAMPLE_1);
        let r = s.drop_block("fd", 3).unwrap();
        assert!(r.diagnostics.is_empty(), "{:?}", r.diagnostics);
        assert_eq!(r.text.lines().nth(3), Some("  fd 100"));
    }

    #[test]
    fn drop_errors() {
        let mut s = Session::new("fd 1\n");
        assert_eq!(
            s.drop_block("jump", 0).unwrap_err().code(),
            "UNKNOWN_PALETTE_ID"
        );
        assert_eq!(
            s.drop_block("fd", 2).unwrap_err(),
            EditError::LineOutOfRange {
                line: 2,
                line_count: 1
            }
        );
        assert_eq!(s.revision(), 0);
    }

    #[test]
    fn edit_condition() {
        let mut s = Session::new(SAMPLE_1);
        let r = s.edit_text(TextRange::new(1, 3, 1, 8), "x >= 0").unwrap();
        assert!(r.diagnostics.is_empty());
        assert!(r.text.starts_with("x = 7\nif x >= 0\n"));
        let m = crate::blocks::to_markup(&r.blocks);
        assert!(m.contains("<socket name=\"cond\">x &gt;= 0</socket>"));
        assert_eq!(r.changed_lines, LineRange { start: 1, end: 2 });
    }

    #[test]
    fn broken_indent_marks_stale() {
        let mut s = Session::new(SAMPLE_1);
        let before = s.blocks().clone();
        let r = s.edit_text(TextRange::new(2, 0, 2, 1), "").unwrap();
        assert_eq!(r.diagnostics[0].code, DiagCode::IndentMismatch);
        assert!(r.stale);
        assert_eq!(r.blocks, before);
        let r = s.edit_text(TextRange::new(2, 0, 2, 0), " ").unwrap();
        assert!(!r.stale);
        assert_eq!(r.text, SAMPLE_1);
    }

    #[test]
    fn replace_everything_with_empty() {
        let mut s = Session::new(SAMPLE_1);
        let r = s.edit_text(TextRange::new(0, 0, 5, 0), "").unwrap();
        assert_eq!(r.text, "");
        assert!(r.blocks.is_empty());
        assert!(r.diagnostics.is_empty());
    }

    #[test]
    fn edit_range_errors() {
        let mut s = Session::new("fd 1\n");
        for r in [
            TextRange::new(0, 5, 0, 5),
            TextRange::new(2, 0, 2, 0),
            TextRange::new(0, 3, 0, 1),
        ] {
            assert_eq!(
                s.edit_text(r, "x").unwrap_err().code(),
                "RANGE_OUT_OF_BOUNDS"
            );
        }
        assert_eq!(s.revision(), 0);
    }

    #[test]
    fn multibyte_columns_are_characters() {
        let mut s = Session::new("write 'é'\n");
        let r = s.edit_text(TextRange::new(0, 8, 0, 9), "!").unwrap();
        assert_eq!(r.text, "write 'é!\n");
    }

    #[test]
    fn run_requires_clean_parse() {
        let s = Session::new(SAMPLE_2);
        assert!(matches!(s.run(1000), Err(RunFailure::NotRunnable { .. })));
        let s = Session::new(SAMPLE_1);
        assert_eq!(s.run(1000).unwrap().output, vec!["x is a positive number."]);
    }

    #[test]
    fn store_revision_conflict() {
        let store = SessionStore::default();
        let snap = store.create("");
        store.drop_block(snap.id, "fd", 0, Some(0)).unwrap();
        let err = store.drop_block(snap.id, "fd", 0, Some(0)).unwrap_err();
        assert_eq!(
            err,
            EditError::RevisionConflict {
                expected: 0,
                current: 1
            }
        );
        assert_eq!(store.snapshot(snap.id).unwrap().revision, 1);
    }

    #[test]
    fn store_unknown_session() {
        let store = SessionStore::default();
        let err = store.snapshot(SessionId::random()).unwrap_err();
        assert_eq!(err.code(), "UNKNOWN_SESSION");
    }

    #[test]
    fn store_eviction() {
        let store = SessionStore::new(Duration::from_secs(60));
        let a = store.create("fd 1\n");
        assert_eq!(store.evict_idle(Instant::now()), 0);
        assert_eq!(
            store.evict_idle(Instant::now() + Duration::from_secs(61)),
            1
        );
        assert!(store.snapshot(a.id).is_err());
    }

    #[test]
    fn changed_line_ranges() {
        assert_eq!(
            changed_lines("a\nb\nc", "a\nX\nc"),
            LineRange { start: 1, end: 2 }
        );
        assert_eq!(
            changed_lines("a\nc", "a\nb\nc"),
            LineRange { start: 1, end: 2 }
        );
        assert_eq!(
            changed_lines("a\nb\nc", "a\nc"),
            LineRange { start: 1, end: 1 }
        );
        assert_eq!(changed_lines("a", "a"), LineRange { start: 1, end: 1 });
    }

    #[test]
    fn session_id_parses() {
        let id = SessionId::random();
        assert_eq!(id.to_string().parse::<SessionId>().unwrap(), id);
    }
}
