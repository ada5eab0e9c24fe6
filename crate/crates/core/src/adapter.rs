//! Language adapter between MiniPencil trees and block documents, plus the
//! palette of reserved-command blocks.
//!
//! Blocks are statement-level only. Expressions are printed into sockets as
//! text, so a document's text projection is exactly the canonical source.

use std::sync::LazyLock;

use serde::Serialize;

use crate::blocks::{BlockDocument, BlockKind, MarkupError, MarkupToken};
use crate::lang::printer::{print_args, print_expr};
use crate::lang::{Program, Stmt, StmtKind, INDENT_UNIT};

/// Block kind used for a statement.
pub fn block_kind(stmt: &Stmt) -> BlockKind {
    match &stmt.kind {
        StmtKind::Assign { .. } => BlockKind::Assignment,
        StmtKind::If { .. } => BlockKind::IfElse,
        StmtKind::ForIn { var: None, .. } => BlockKind::ForRange,
        StmtKind::ForIn { var: Some(_), .. } => BlockKind::ForIn,
        StmtKind::FuncDef { .. } => BlockKind::FuncDef,
        StmtKind::Call { name, args } => match BlockKind::for_command(name) {
            Some(kind) if !args.is_empty() => kind,
            _ => BlockKind::FuncCall,
        },
    }
}

pub fn ast_to_blocks(program: &Program) -> BlockDocument {
    let mut b = Builder {
        tokens: Vec::new(),
        next_id: 1,
    };
    for s in &program.statements {
        b.stmt(s, 0);
    }
    BlockDocument::new(b.tokens)
}

struct Builder {
    tokens: Vec<MarkupToken>,
    next_id: u32,
}

impl Builder {
    fn indent(&mut self, depth: usize) {
        for _ in 0..depth {
            self.tokens.push(MarkupToken::IndentMarker);
        }
    }

    fn text(&mut self, s: &str) {
        if s.is_empty() {
            return;
        }
        if let Some(MarkupToken::Text { lexeme }) = self.tokens.last_mut() {
            lexeme.push_str(s);
        } else {
            self.tokens.push(MarkupToken::text(s));
        }
    }

    fn socket(&mut self, name: &str, content: &str) {
        self.tokens.push(MarkupToken::socket(name));
        if !content.is_empty() {
            self.tokens.push(MarkupToken::text(content));
        }
        self.tokens.push(MarkupToken::SocketEnd);
    }

    fn body(&mut self, stmts: &[Stmt], depth: usize) {
        for s in stmts {
            self.stmt(s, depth);
        }
    }

    fn stmt(&mut self, stmt: &Stmt, depth: usize) {
        let kind = block_kind(stmt);
        self.indent(depth);
        self.tokens.push(MarkupToken::BlockStart {
            block_type: kind,
            id: self.next_id,
        });
        self.next_id += 1;
        match &stmt.kind {
            StmtKind::Assign { name, value } => {
                self.socket("name", name);
                self.text(" = ");
                self.socket("value", &print_expr(value));
            }
            StmtKind::Call { name, args } => {
                if kind == BlockKind::FuncCall {
                    self.socket("name", name);
                    if args.is_empty() {
                        self.text("()");
                    } else {
                        self.text(" ");
                        self.socket("args", &print_args(args));
                    }
                } else {
                    self.text(&format!("{name} "));
                    self.socket("args", &print_args(args));
                }
            }
            StmtKind::If { cond, .. } => {
                self.text("if ");
                self.socket("cond", &print_expr(cond));
            }
            StmtKind::ForIn { var, range, .. } => {
                self.text("for ");
                if let Some(v) = var {
                    self.socket("var", v);
                    self.text(" in ");
                }
                self.socket("range", &print_expr(range));
            }
            StmtKind::FuncDef { name, params, .. } => {
                self.socket("name", name);
                if params.is_empty() {
                    self.text(" = ->");
                } else {
                    self.text(" = (");
                    self.socket("params", &params.join(", "));
                    self.text(") ->");
                }
            }
        }
        self.tokens.push(MarkupToken::LineBreak);
        match &stmt.kind {
            StmtKind::If {
                then_body,
                elifs,
                else_body,
                ..
            } => {
                self.body(then_body, depth + 1);
                for elif in elifs {
                    self.indent(depth);
                    self.text("else if ");
                    self.socket("elif-cond", &print_expr(&elif.cond));
                    self.tokens.push(MarkupToken::LineBreak);
                    self.body(&elif.body, depth + 1);
                }
                if let Some(body) = else_body {
                    self.indent(depth);
                    self.text("else");
                    self.tokens.push(MarkupToken::LineBreak);
                    self.body(body, depth + 1);
                }
            }
            StmtKind::ForIn { body, .. } | StmtKind::FuncDef { body, .. } => {
                self.body(body, depth + 1)
            }
            _ => {}
        }
        self.tokens.push(MarkupToken::BlockEnd);
    }
}

/// Rebuilds source text from a document, one row at a time.
pub fn blocks_to_text(doc: &BlockDocument) -> Result<String, MarkupError> {
    doc.validate()?;
    let mut out = String::new();
    let mut line = String::new();
    for t in &doc.tokens {
        match t {
            MarkupToken::IndentMarker => line.push_str(&" ".repeat(INDENT_UNIT)),
            MarkupToken::Text { lexeme } => line.push_str(lexeme),
            MarkupToken::LineBreak => {
                out.push_str(&line);
                out.push('\n');
                line.clear();
            }
            _ => {}
        }
    }
    out.push_str(&line);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Movement,
    Output,
    Control,
    Variables,
    Functions,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PaletteItem {
    pub id: &'static str,
    pub category: Category,
    pub label: &'static str,
    pub template: &'static str,
    pub sockets: &'static [&'static str],
}

impl PaletteItem {
    pub fn kind(&self) -> BlockKind {
        self.id.parse().expect("palette ids are block kinds")
    }
}

static PALETTE: LazyLock<Vec<PaletteItem>> = LazyLock::new(|| {
    use Category::*;
    let item = |id, category, label, template, sockets| PaletteItem {
        id,
        category,
        label,
        template,
        sockets,
    };
    vec![
        item("fd", Movement, "forward", "fd 100\n", &["args"]),
        item("bk", Movement, "back", "bk 100\n", &["args"]),
        item("rt", Movement, "turn right", "rt 45\n", &["args"]),
        item("lt", Movement, "turn left", "lt 45\n", &["args"]),
        item("speed", Movement, "speed", "speed 2\n", &["args"]),
        item("pen", Movement, "pen color", "pen red\n", &["args"]),
        item("write", Output, "write", "write 'hello'\n", &["args"]),
        item(
            "if-else",
            Control,
            "if / else",
            "if 1 > 0\n  write 'yes'\nelse\n  write 'no'\n",
            &["cond"],
        ),
        item(
            "for-range",
            Control,
            "repeat",
            "for [1..5]\n  fd 100\n",
            &["range"],
        ),
        item(
            "for-in",
            Control,
            "for each number",
            "for i in [1..5]\n  write i\n",
            &["var", "range"],
        ),
        item(
            "assignment",
            Variables,
            "set variable",
            "x = 0\n",
            &["name", "value"],
        ),
        item(
            "func-def",
            Functions,
            "define function",
            "draw = (size) ->\n  fd size\n  rt 90\n",
            &["name", "params"],
        ),
        item(
            "func-call",
            Functions,
            "call function",
            "draw 100\n",
            &["name", "args"],
        ),
    ]
});

/// The fixed toolbox, in display order.
pub fn palette() -> &'static [PaletteItem] {
    &PALETTE
}

pub fn palette_item(id: &str) -> Option<&'static PaletteItem> {
    palette().iter().find(|p| p.id == id)
}

/// Palette as the JSON document served to the UI.
pub fn palette_json() -> String {
    serde_json::to_string_pretty(palette()).expect("palette serializes")
}

/// The item's template re-indented by `indent_level` nesting levels.
pub fn instantiate(item: &PaletteItem, indent_level: usize) -> String {
    let pad = " ".repeat(indent_level * INDENT_UNIT);
    let mut out = String::with_capacity(item.template.len() + 16);
    for line in item.template.lines() {
        if !line.is_empty() {
            out.push_str(&pad);
        }
        out.push_str(line);
        out.push('\n');
    }
    out
}
