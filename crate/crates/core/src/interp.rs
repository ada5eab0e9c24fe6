//! Deterministic evaluator producing an execution trace of written lines and
//! turtle segments.
//!
//! Turtle conventions: origin at (0, 0), heading 0 points north (+y) and
//! `rt` turns clockwise. The pen starts down in black.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::lang::{BinOp, Expr, Program, Stmt, StmtKind};

pub const DEFAULT_STEP_LIMIT: u64 = 100_000;

/// Nested user-function calls allowed before the run is stopped with
/// `STEP_LIMIT`.
pub const MAX_CALL_DEPTH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PenColor {
    Red,
    Green,
    Blue,
    Black,
    Purple,
    Orange,
    None,
}

impl PenColor {
    pub fn from_word(word: &str) -> Option<PenColor> {
        Some(match word {
            "red" => PenColor::Red,
            "green" => PenColor::Green,
            "blue" => PenColor::Blue,
            "black" => PenColor::Black,
            "purple" => PenColor::Purple,
            "orange" => PenColor::Orange,
            "none" => PenColor::None,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TurtleState {
    pub x: f64,
    pub y: f64,
    /// Degrees clockwise from north, in `[0, 360)`.
    pub heading: f64,
    pub pen: PenColor,
    pub speed: f64,
}

impl Default for TurtleState {
    fn default() -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            heading: 0.0,
            pen: PenColor::Black,
            speed: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segment {
    pub from: [f64; 2],
    pub to: [f64; 2],
    pub color: PenColor,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExecutionTrace {
    pub output: Vec<String>,
    pub segments: Vec<Segment>,
    #[serde(rename = "final")]
    pub final_state: TurtleState,
    pub steps: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RuntimeCode {
    UndefinedVariable,
    UnknownCommand,
    TypeError,
    StepLimit,
    DivisionByZero,
}

impl fmt::Display for RuntimeCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuntimeCode::UndefinedVariable => "UNDEFINED_VARIABLE",
            RuntimeCode::UnknownCommand => "UNKNOWN_COMMAND",
            RuntimeCode::TypeError => "TYPE_ERROR",
            RuntimeCode::StepLimit => "STEP_LIMIT",
            RuntimeCode::DivisionByZero => "DIVISION_BY_ZERO",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("line {line}: {code}: {message}")]
pub struct RuntimeDiagnostic {
    pub code: RuntimeCode,
    pub message: String,
    pub line: usize,
}

impl RuntimeDiagnostic {
    fn new(code: RuntimeCode, message: impl Into<String>, line: usize) -> Self {
        Self {
            code,
            message: message.into(),
            line,
        }
    }
}

#[derive(Debug)]
pub struct Function {
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone)]
pub enum Value {
    Num(f64),
    Str(String),
    Bool(bool),
    Func(Arc<Function>),
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Num(a), Value::Num(b)) => a == b,
            (Value::Str(a), Value::Str(b)) => a == b,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Func(a), Value::Func(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl Value {
    fn type_name(&self) -> &'static str {
        match self {
            Value::Num(_) => "number",
            Value::Str(_) => "string",
            Value::Bool(_) => "boolean",
            Value::Func(_) => "function",
        }
    }

    pub fn truthy(&self) -> bool {
        match self {
            Value::Num(n) => *n != 0.0 && !n.is_nan(),
            Value::Str(s) => !s.is_empty(),
            Value::Bool(b) => *b,
            Value::Func(_) => true,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(n) => f.write_str(&format_number(*n)),
            Value::Str(s) => f.write_str(s),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Func(_) => f.write_str("[function]"),
        }
    }
}

/// Numbers within 1e-9 of an integer print without a decimal point; others
/// use the shortest decimal that round-trips.
pub fn format_number(n: f64) -> String {
    if n.is_nan() {
        return "NaN".into();
    }
    if n.is_infinite() {
        return if n > 0.0 { "Infinity" } else { "-Infinity" }.into();
    }
    let r = n.round();
    if (n - r).abs() < 1e-9 && r.abs() < 1e15 {
        let i = r as i64;
        return i.to_string();
    }
    format!("{n}")
}

pub type Env = HashMap<String, Value>;

/// Evaluates an expression against a flat variable map.
pub fn eval_expr(expr: &Expr, env: &Env) -> Result<Value, RuntimeDiagnostic> {
    eval(expr, &|name| env.get(name).cloned(), 0)
}

fn eval(
    expr: &Expr,
    lookup: &dyn Fn(&str) -> Option<Value>,
    line: usize,
) -> Result<Value, RuntimeDiagnostic> {
    match expr {
        Expr::Int { value } => Ok(Value::Num(*value as f64)),
        Expr::Float { value } => Ok(Value::Num(*value)),
        Expr::Str { value } => Ok(Value::Str(value.clone())),
        Expr::Var { name } => lookup(name).ok_or_else(|| {
            RuntimeDiagnostic::new(
                RuntimeCode::UndefinedVariable,
                format!("`{name}` is not defined"),
                line,
            )
        }),
        Expr::Range { .. } => Err(RuntimeDiagnostic::new(
            RuntimeCode::TypeError,
            "a range can only be iterated by `for`",
            line,
        )),
        Expr::Binary { op, lhs, rhs } => {
            let a = eval(lhs, lookup, line)?;
            let b = eval(rhs, lookup, line)?;
            binary(*op, a, b, line)
        }
    }
}

fn binary(op: BinOp, a: Value, b: Value, line: usize) -> Result<Value, RuntimeDiagnostic> {
    use Value::*;
    let type_error = |a: &Value, b: &Value| {
        RuntimeDiagnostic::new(
            RuntimeCode::TypeError,
            format!(
                "cannot apply `{op}` to {} and {}",
                a.type_name(),
                b.type_name()
            ),
            line,
        )
    };
    match op {
        BinOp::Add => match (&a, &b) {
            (Num(x), Num(y)) => Ok(Num(x + y)),
            (Str(_), Str(_) | Num(_) | Bool(_)) | (Num(_) | Bool(_), Str(_)) => {
                Ok(Str(format!("{a}{b}")))
            }
            _ => Err(type_error(&a, &b)),
        },
        BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem => {
            let (Num(x), Num(y)) = (&a, &b) else {
                return Err(type_error(&a, &b));
            };
            if matches!(op, BinOp::Div | BinOp::Rem) && *y == 0.0 {
                return Err(RuntimeDiagnostic::new(
                    RuntimeCode::DivisionByZero,
                    format!("`{op}` by zero"),
                    line,
                ));
            }
            Ok(Num(match op {
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => x / y,
                _ => x % y,
            }))
        }
        BinOp::Gt | BinOp::Lt | BinOp::Ge | BinOp::Le => {
            let ord = match (&a, &b) {
                (Num(x), Num(y)) => x.partial_cmp(y),
                (Str(x), Str(y)) => Some(x.cmp(y)),
                _ => return Err(type_error(&a, &b)),
            };
            let Some(ord) = ord else {
                return Ok(Bool(false));
            };
            Ok(Bool(match op {
                BinOp::Gt => ord.is_gt(),
                BinOp::Lt => ord.is_lt(),
                BinOp::Ge => ord.is_ge(),
                _ => ord.is_le(),
            }))
        }
        BinOp::Eq => Ok(Bool(a == b)),
        BinOp::Ne => Ok(Bool(a != b)),
    }
}

/// Runs a program to completion or to the first runtime error.
pub fn run(program: &Program, step_limit: u64) -> Result<ExecutionTrace, RuntimeDiagnostic> {
    let mut m = Machine {
        frames: vec![Env::new()],
        turtle: TurtleState::default(),
        output: Vec::new(),
        segments: Vec::new(),
        steps: 0,
        step_limit,
    };
    m.block(&program.statements)?;
    Ok(ExecutionTrace {
        output: m.output,
        segments: m.segments,
        final_state: m.turtle,
        steps: m.steps,
    })
}

struct Machine {
    /// Global scope first; at most one function frame on top is visible.
    frames: Vec<Env>,
    turtle: TurtleState,
    output: Vec<String>,
    segments: Vec<Segment>,
    steps: u64,
    step_limit: u64,
}

impl Machine {
    fn lookup(&self, name: &str) -> Option<Value> {
        let top = self.frames.last().unwrap();
        top.get(name).or_else(|| self.frames[0].get(name)).cloned()
    }

    fn assign(&mut self, name: &str, value: Value) {
        let depth = self.frames.len();
        if depth > 1
            && !self.frames[depth - 1].contains_key(name)
            && self.frames[0].contains_key(name)
        {
            self.frames[0].insert(name.to_string(), value);
        } else {
            self.frames[depth - 1].insert(name.to_string(), value);
        }
    }

    fn eval(&self, expr: &Expr, line: usize) -> Result<Value, RuntimeDiagnostic> {
        eval(expr, &|n| self.lookup(n), line)
    }

    fn number(&self, expr: &Expr, line: usize, what: &str) -> Result<f64, RuntimeDiagnostic> {
        match self.eval(expr, line)? {
            Value::Num(n) => Ok(n),
            other => Err(RuntimeDiagnostic::new(
                RuntimeCode::TypeError,
                format!("{what} expects a number, got {}", other.type_name()),
                line,
            )),
        }
    }

    fn block(&mut self, stmts: &[Stmt]) -> Result<(), RuntimeDiagnostic> {
        for s in stmts {
            self.stmt(s)?;
        }
        Ok(())
    }

    fn tick(&mut self, line: usize) -> Result<(), RuntimeDiagnostic> {
        if self.steps >= self.step_limit {
            return Err(RuntimeDiagnostic::new(
                RuntimeCode::StepLimit,
                format!("step limit of {} reached", self.step_limit),
                line,
            ));
        }
        self.steps += 1;
        Ok(())
    }

    fn stmt(&mut self, stmt: &Stmt) -> Result<(), RuntimeDiagnostic> {
        let line = stmt.line;
        self.tick(line)?;
        match &stmt.kind {
            StmtKind::Assign { name, value } => {
                let v = self.eval(value, line)?;
                self.assign(name, v);
            }
            StmtKind::If {
                cond,
                then_body,
                elifs,
                else_body,
            } => {
                if self.eval(cond, line)?.truthy() {
                    return self.block(then_body);
                }
                for elif in elifs {
                    if self.eval(&elif.cond, line)?.truthy() {
                        return self.block(&elif.body);
                    }
                }
                if let Some(body) = else_body {
                    self.block(body)?;
                }
            }
            StmtKind::ForIn { var, range, body } => {
                let Expr::Range { lo, hi } = range else {
                    return Err(RuntimeDiagnostic::new(
                        RuntimeCode::TypeError,
                        "`for` expects a range",
                        line,
                    ));
                };
                let lo = self.number(lo, line, "range start")?;
                let hi = self.number(hi, line, "range end")?;
                let mut i = lo;
                while i <= hi {
                    if let Some(v) = var {
                        self.assign(v, Value::Num(i));
                    }
                    self.block(body)?;
                    i += 1.0;
                }
            }
            StmtKind::FuncDef { name, params, body } => {
                let f = Function {
                    params: params.clone(),
                    body: body.clone(),
                };
                self.assign(name, Value::Func(Arc::new(f)));
            }
            StmtKind::Call { name, args } => self.call(name, args, line)?,
        }
        Ok(())
    }

    fn call(&mut self, name: &str, args: &[Expr], line: usize) -> Result<(), RuntimeDiagnostic> {
        match self.lookup(name) {
            Some(Value::Func(f)) => return self.call_user(name, &f, args, line),
            Some(other) if !is_builtin(name) => {
                return Err(RuntimeDiagnostic::new(
                    RuntimeCode::TypeError,
                    format!("`{name}` is a {}, not a command", other.type_name()),
                    line,
                ))
            }
            _ => {}
        }
        if !is_builtin(name) {
            return Err(RuntimeDiagnostic::new(
                RuntimeCode::UnknownCommand,
                format!("unknown command `{name}`"),
                line,
            ));
        }
        if args.len() != 1 {
            return Err(RuntimeDiagnostic::new(
                RuntimeCode::TypeError,
                format!("`{name}` takes exactly one argument, got {}", args.len()),
                line,
            ));
        }
        let arg = &args[0];
        match name {
            "fd" | "bk" => {
                let d = self.number(arg, line, name)?;
                self.advance(if name == "fd" { d } else { -d });
            }
            "rt" | "lt" => {
                let a = self.number(arg, line, name)?;
                self.turn(if name == "rt" { a } else { -a });
            }
            "speed" => self.turtle.speed = self.number(arg, line, name)?,
            "pen" => self.turtle.pen = self.pen_color(arg, line)?,
            "write" => {
                let v = self.eval(arg, line)?;
                self.output.push(v.to_string());
            }
            _ => unreachable!("is_builtin covers every command"),
        }
        Ok(())
    }

    fn call_user(
        &mut self,
        name: &str,
        f: &Function,
        args: &[Expr],
        line: usize,
    ) -> Result<(), RuntimeDiagnostic> {
        if args.len() != f.params.len() {
            return Err(RuntimeDiagnostic::new(
                RuntimeCode::TypeError,
                format!(
                    "`{name}` expects {} argument(s), got {}",
                    f.params.len(),
                    args.len()
                ),
                line,
            ));
        }
        if self.frames.len() > MAX_CALL_DEPTH {
            return Err(RuntimeDiagnostic::new(
                RuntimeCode::StepLimit,
                format!("call depth limit of {MAX_CALL_DEPTH} reached in `{name}`"),
                line,
            ));
        }
        let mut frame = Env::new();
        for (p, a) in f.params.iter().zip(args) {
            frame.insert(p.clone(), self.eval(a, line)?);
        }
        self.frames.push(frame);
        let result = self.block(&f.body);
        self.frames.pop();
        result
    }

    fn pen_color(&self, arg: &Expr, line: usize) -> Result<PenColor, RuntimeDiagnostic> {
        if let Expr::Var { name } = arg {
            if self.lookup(name).is_none() {
                if let Some(c) = PenColor::from_word(name) {
                    return Ok(c);
                }
            }
        }
        let v = self.eval(arg, line)?;
        match &v {
            Value::Str(s) => PenColor::from_word(s),
            _ => None,
        }
        .ok_or_else(|| {
            RuntimeDiagnostic::new(
                RuntimeCode::TypeError,
                format!("`{v}` is not a pen color"),
                line,
            )
        })
    }

    fn advance(&mut self, distance: f64) {
        let (s, c) = sin_cos_deg(self.turtle.heading);
        let from = [self.turtle.x, self.turtle.y];
        self.turtle.x += distance * s;
        self.turtle.y += distance * c;
        if self.turtle.pen != PenColor::None {
            self.segments.push(Segment {
                from,
                to: [self.turtle.x, self.turtle.y],
                color: self.turtle.pen,
            });
        }
    }

    fn turn(&mut self, degrees: f64) {
        let mut h = (self.turtle.heading + degrees).rem_euclid(360.0);
        if h >= 360.0 {
            h = 0.0;
        }
        self.turtle.heading = h;
    }
}

fn is_builtin(name: &str) -> bool {
    matches!(name, "fd" | "bk" | "rt" | "lt" | "speed" | "pen" | "write")
}

/// Sine and cosine of an angle in degrees, exact on multiples of 90.
fn sin_cos_deg(deg: f64) -> (f64, f64) {
    if deg.fract() == 0.0 && (deg as i64) % 90 == 0 {
        return match (deg as i64).rem_euclid(360) {
            0 => (0.0, 1.0),
            90 => (1.0, 0.0),
            180 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        };
    }
    deg.to_radians().sin_cos()
}
