//! Seeded generator of random, well-formed programs.
//!
//! Used by the round-trip property tests, the acceptance suite and the
//! benches. Every generated tree satisfies the AST invariants: bodies are
//! non-empty, names are never keywords, and ranges only appear as `for`
//! iterables.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::lang::{BinOp, ElseIf, Expr, Program, Stmt, StmtKind};

const VARS: [&str; 8] = ["x", "y", "sum", "n", "size", "count", "a1", "total_len"];
const COMMANDS: [&str; 11] = [
    "fd", "bk", "rt", "lt", "speed", "pen", "write", "draw", "spin", "home", "dot",
];
const STRING_ALPHABET: &[char] = &[
    'a', 'b', 'z', ' ', '=', '<', '>', '&', '"', '\'', '\\', '/', '\n', '\t', 'é', '1',
];

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub max_depth: usize,
    pub max_body: usize,
    pub max_top_level: usize,
    pub max_expr_depth: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            max_depth: 3,
            max_body: 3,
            max_top_level: 6,
            max_expr_depth: 3,
        }
    }
}

pub struct ProgramGen {
    rng: ChaCha8Rng,
    cfg: GenConfig,
}

impl ProgramGen {
    pub fn new(seed: u64) -> Self {
        Self::with_config(seed, GenConfig::default())
    }

    pub fn with_config(seed: u64, cfg: GenConfig) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            cfg,
        }
    }

    pub fn program(&mut self) -> Program {
        let n = self.rng.random_range(0..=self.cfg.max_top_level);
        Program::new((0..n).map(|_| self.stmt(0)).collect())
    }

    fn body(&mut self, depth: usize) -> Vec<Stmt> {
        let n = self.rng.random_range(1..=self.cfg.max_body);
        (0..n).map(|_| self.stmt(depth)).collect()
    }

    fn stmt(&mut self, depth: usize) -> Stmt {
        let compound = depth < self.cfg.max_depth && self.rng.random_bool(0.35);
        let kind = if compound {
            match self.rng.random_range(0..3) {
                0 => {
                    let elifs = (0..self.rng.random_range(0..=2))
                        .map(|_| ElseIf {
                            cond: self.expr(0),
                            body: self.body(depth + 1),
                        })
                        .collect();
                    let else_body = self.rng.random_bool(0.5).then(|| self.body(depth + 1));
                    StmtKind::If {
                        cond: self.expr(0),
                        then_body: self.body(depth + 1),
                        elifs,
                        else_body,
                    }
                }
                1 => StmtKind::ForIn {
                    var: self.rng.random_bool(0.5).then(|| self.var_name()),
                    range: Expr::range(self.expr(1), self.expr(1)),
                    body: self.body(depth + 1),
                },
                _ => {
                    let mut params: Vec<String> = Vec::new();
                    for _ in 0..self.rng.random_range(0..=3) {
                        let p = self.var_name();
                        if !params.contains(&p) {
                            params.push(p);
                        }
                    }
                    StmtKind::FuncDef {
                        name: self.pick(&COMMANDS[7..]).to_string(),
                        params,
                        body: self.body(depth + 1),
                    }
                }
            }
        } else if self.rng.random_bool(0.3) {
            StmtKind::Assign {
                name: self.var_name(),
                value: self.expr(0),
            }
        } else {
            let argc = self.rng.random_range(0..=3);
            StmtKind::Call {
                name: self.pick(&COMMANDS).to_string(),
                args: (0..argc).map(|_| self.expr(0)).collect(),
            }
        };
        Stmt::new(kind)
    }

    fn expr(&mut self, depth: usize) -> Expr {
        if depth >= self.cfg.max_expr_depth || self.rng.random_bool(0.45) {
            return self.leaf();
        }
        let op = *self.pick(&BinOp::ALL);
        Expr::binary(op, self.expr(depth + 1), self.expr(depth + 1))
    }

    fn leaf(&mut self) -> Expr {
        match self.rng.random_range(0..4) {
            0 => Expr::int(self.rng.random_range(-50..=500)),
            1 => {
                let v = self.rng.random_range(-1.0e4..1.0e4);
                Expr::float(if self.rng.random_bool(0.5) {
                    (v * 8.0_f64).round() / 8.0
                } else {
                    v
                })
            }
            2 => {
                let len = self.rng.random_range(0..8);
                Expr::str(
                    (0..len)
                        .map(|_| *self.pick(STRING_ALPHABET))
                        .collect::<String>(),
                )
            }
            _ => Expr::var(self.var_name()),
        }
    }

    fn var_name(&mut self) -> String {
        self.pick(&VARS).to_string()
    }

    fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.rng.random_range(0..items.len())]
    }
}

/// `count` programs from consecutive seeds starting at `seed`.
pub fn programs(seed: u64, count: usize) -> Vec<Program> {
    (0..count as u64)
        .map(|i| ProgramGen::new(seed.wrapping_add(i)).program())
        .collect()
}
