use std::fmt;

use serde::Serialize;

/// Root of a parsed MiniPencil program.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Program {
    pub statements: Vec<Stmt>,
}

/// A statement plus the 1-based source line it started on.
///
/// Equality is structural: `line` is ignored, so a tree compares equal to
/// the tree obtained by printing and reparsing it.
#[derive(Debug, Clone, Serialize)]
pub struct Stmt {
    pub kind: StmtKind,
    pub line: usize,
}

impl PartialEq for Stmt {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Stmt {
    pub fn new(kind: StmtKind) -> Self {
        Self { kind, line: 0 }
    }

    pub fn at(kind: StmtKind, line: usize) -> Self {
        Self { kind, line }
    }
}

impl From<StmtKind> for Stmt {
    fn from(kind: StmtKind) -> Self {
        Stmt::new(kind)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum StmtKind {
    Assign {
        name: String,
        value: Expr,
    },
    If {
        cond: Expr,
        then_body: Vec<Stmt>,
        elifs: Vec<ElseIf>,
        else_body: Option<Vec<Stmt>>,
    },
    ForIn {
        var: Option<String>,
        range: Expr,
        body: Vec<Stmt>,
    },
    Call {
        name: String,
        args: Vec<Expr>,
    },
    FuncDef {
        name: String,
        params: Vec<String>,
        body: Vec<Stmt>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElseIf {
    pub cond: Expr,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BinOp {
    #[serde(rename = "+")]
    Add,
    #[serde(rename = "-")]
    Sub,
    #[serde(rename = "*")]
    Mul,
    #[serde(rename = "/")]
    Div,
    #[serde(rename = "%")]
    Rem,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "==")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
}

impl BinOp {
    pub const ALL: [BinOp; 11] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Rem,
        BinOp::Gt,
        BinOp::Lt,
        BinOp::Ge,
        BinOp::Le,
        BinOp::Eq,
        BinOp::Ne,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Gt => ">",
            BinOp::Lt => "<",
            BinOp::Ge => ">=",
            BinOp::Le => "<=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
        }
    }

    pub fn from_symbol(s: &str) -> Option<BinOp> {
        BinOp::ALL.into_iter().find(|op| op.symbol() == s)
    }

    /// Binding strength; all levels are left-associative.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Eq | BinOp::Ne => 1,
            BinOp::Gt | BinOp::Lt | BinOp::Ge | BinOp::Le => 2,
            BinOp::Add | BinOp::Sub => 3,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 4,
        }
    }
}

impl fmt::Display for BinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Expr {
    Int {
        value: i64,
    },
    Float {
        value: f64,
    },
    Str {
        value: String,
    },
    Var {
        name: String,
    },
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    /// Inclusive integer-stepped range; only valid as a `for` iterable.
    Range {
        lo: Box<Expr>,
        hi: Box<Expr>,
    },
}

impl Expr {
    pub fn int(value: i64) -> Expr {
        Expr::Int { value }
    }

    pub fn float(value: f64) -> Expr {
        Expr::Float { value }
    }

    pub fn str(value: impl Into<String>) -> Expr {
        Expr::Str {
            value: value.into(),
        }
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var { name: name.into() }
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn range(lo: Expr, hi: Expr) -> Expr {
        Expr::Range {
            lo: Box::new(lo),
            hi: Box::new(hi),
        }
    }
}

pub const KEYWORDS: [&str; 4] = ["if", "else", "for", "in"];

pub fn is_keyword(name: &str) -> bool {
    KEYWORDS.contains(&name)
}

impl Program {
    pub fn new(statements: Vec<Stmt>) -> Self {
        Self { statements }
    }

    /// Visits every statement, parents before children, with its nesting depth.
    pub fn walk<'a>(&'a self, mut f: impl FnMut(&'a Stmt, usize)) {
        fn go<'a>(stmts: &'a [Stmt], depth: usize, f: &mut impl FnMut(&'a Stmt, usize)) {
            for s in stmts {
                f(s, depth);
                for body in s.bodies() {
                    go(body, depth + 1, f);
                }
            }
        }
        go(&self.statements, 0, &mut f);
    }
}

impl Stmt {
    /// Child bodies in source order.
    pub fn bodies(&self) -> Vec<&Vec<Stmt>> {
        match &self.kind {
            StmtKind::If {
                then_body,
                elifs,
                else_body,
                ..
            } => {
                let mut v = vec![then_body];
                v.extend(elifs.iter().map(|e| &e.body));
                v.extend(else_body.iter());
                v
            }
            StmtKind::ForIn { body, .. } | StmtKind::FuncDef { body, .. } => vec![body],
            StmtKind::Assign { .. } | StmtKind::Call { .. } => Vec::new(),
        }
    }
}
