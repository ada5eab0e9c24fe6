//! Task corpus and grader.
//!
//! Three task kinds are supported: code modification and syntax fixing are
//! graded by running the submission against a list of io cases, and output
//! prediction is graded by comparing a chosen answer with the key. Every
//! corpus is checked against the interpreter when loaded.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interp::{run, ExecutionTrace, DEFAULT_STEP_LIMIT};
use crate::lang::{parse, Expr, Program, Stmt, StmtKind};

const BUNDLED: &str = include_str!("../data/corpus.json");

/// Closure tolerance for `shape` expectations.
const CLOSE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    Modification,
    SyntaxFix,
    OutputPrediction,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Modification => "modification",
            TaskKind::SyntaxFix => "syntax-fix",
            TaskKind::OutputPrediction => "output-prediction",
        }
    }
}

/// Initial value substituted for a top-level variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OverrideValue {
    Int(i64),
    Float(f64),
    Str(String),
}

impl OverrideValue {
    fn to_expr(&self) -> Expr {
        match self {
            OverrideValue::Int(v) => Expr::int(*v),
            OverrideValue::Float(v) => Expr::float(*v),
            OverrideValue::Str(s) => Expr::str(s.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoCase {
    #[serde(default)]
    pub overrides: BTreeMap<String, OverrideValue>,
    pub expected: Vec<String>,
}

/// What a prediction choice claims about running the source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Expectation {
    /// The program does not parse or stops with a runtime error.
    NotRun,
    Output {
        lines: Vec<String>,
    },
    /// A drawing with this many segments, ending where it started or not.
    Shape {
        segments: usize,
        closed: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Choice {
    pub id: String,
    pub label: String,
    pub expect: Expectation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub id: String,
    pub kind: TaskKind,
    #[serde(default)]
    pub prompt: String,
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub io_spec: Vec<IoCase>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub choices: Vec<Choice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct_choice: Option<String>,
}

impl Task {
    /// The submission that should score 100: the reference solution for
    /// program tasks and the key for prediction tasks.
    pub fn reference_submission(&self) -> Submission {
        match self.kind {
            TaskKind::OutputPrediction => {
                Submission::Choice(self.correct_choice.clone().unwrap_or_default())
            }
            _ => Submission::Text(self.reference.clone().unwrap_or_default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Submission {
    Text(String),
    Choice(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("CORPUS_MALFORMED{}: {reason}", task_id.as_ref().map(|id| format!(" [{id}]")).unwrap_or_default())]
pub struct CorpusError {
    pub task_id: Option<String>,
    pub reason: String,
}

impl CorpusError {
    pub const CODE: &'static str = "CORPUS_MALFORMED";

    fn task(task: &Task, reason: impl Into<String>) -> Self {
        Self {
            task_id: Some(task.id.clone()),
            reason: reason.into(),
        }
    }

    fn file(reason: impl Into<String>) -> Self {
        Self {
            task_id: None,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GradeError {
    #[error("UNKNOWN_CHOICE: `{choice}` is not a choice of task {task_id}")]
    UnknownChoice { task_id: String, choice: String },
    #[error("task {task_id} is {actual}, not {expected}")]
    WrongKind {
        task_id: String,
        expected: &'static str,
        actual: &'static str,
    },
}

impl GradeError {
    pub fn code(&self) -> &'static str {
        match self {
            GradeError::UnknownChoice { .. } => "UNKNOWN_CHOICE",
            GradeError::WrongKind { .. } => "WRONG_TASK_KIND",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CaseOutcome {
    Pass,
    WrongOutput,
    Syntax,
    Runtime,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CaseResult {
    pub outcome: CaseOutcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub actual: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl CaseResult {
    pub fn passed(&self) -> bool {
        self.outcome == CaseOutcome::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GradeDetail {
    Cases { cases: Vec<CaseResult> },
    Choice { chosen: String, correct: String },
    Missing,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GradeReport {
    pub task_id: String,
    pub score: u32,
    pub detail: GradeDetail,
}

impl GradeReport {
    /// Short human summary of the detail, e.g. `2/3 cases` or `chose B, key D`.
    pub fn summary(&self) -> String {
        match &self.detail {
            GradeDetail::Cases { cases } => {
                let passed = cases.iter().filter(|c| c.passed()).count();
                let mut s = format!("{passed}/{} cases", cases.len());
                if cases.iter().any(|c| c.outcome == CaseOutcome::Syntax) {
                    s.push_str(" (SYNTAX)");
                }
                s
            }
            GradeDetail::Choice { chosen, correct } => format!("chose {chosen}, key {correct}"),
            GradeDetail::Missing => "no submission".to_string(),
        }
    }
}

/// `100 * passed / total`, rounded half-up. An empty case list scores 0.
pub fn percent(passed: usize, total: usize) -> u32 {
    if total == 0 {
        return 0;
    }
    let (p, t) = (passed.min(total) as u64, total as u64);
    ((200 * p + t) / (2 * t)) as u32
}

pub fn parse_corpus(json: &str) -> Result<Vec<Task>, CorpusError> {
    if json.trim().is_empty() {
        return Err(CorpusError::file("corpus file is empty"));
    }
    let tasks: Vec<Task> =
        serde_json::from_str(json).map_err(|e| CorpusError::file(e.to_string()))?;
    if tasks.is_empty() {
        return Err(CorpusError::file("corpus contains no tasks"));
    }
    let mut seen = HashSet::new();
    for task in &tasks {
        if !seen.insert(task.id.as_str()) {
            return Err(CorpusError::task(task, "duplicate task id"));
        }
        check_task(task)?;
    }
    Ok(tasks)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Task>, CorpusError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| CorpusError::file(format!("{}: {e}", path.display())))?;
    parse_corpus(&text)
}

pub fn bundled_corpus_json() -> &'static str {
    BUNDLED
}

/// The corpus shipped with the crate, already checked.
pub fn bundled_corpus() -> &'static [Task] {
    static TASKS: LazyLock<Vec<Task>> = LazyLock::new(|| match parse_corpus(BUNDLED) {
        Ok(t) => t,
        Err(e) => panic!("bundled corpus is malformed: {e}"),
    });
    &TASKS
}

fn check_task(task: &Task) -> Result<(), CorpusError> {
    match task.kind {
        TaskKind::Modification | TaskKind::SyntaxFix => {
            if task.kind == TaskKind::Modification {
                if let Err(d) = parse(&task.source) {
                    return Err(CorpusError::task(
                        task,
                        format!("source does not parse: {}", d[0]),
                    ));
                }
            }
            if !task.choices.is_empty() || task.correct_choice.is_some() {
                return Err(CorpusError::task(
                    task,
                    "choices are only allowed on prediction tasks",
                ));
            }
            if task.io_spec.is_empty() {
                return Err(CorpusError::task(task, "io_spec is empty"));
            }
            let Some(reference) = &task.reference else {
                return Err(CorpusError::task(task, "missing reference solution"));
            };
            let report = grade_cases(task, reference);
            if report.score != 100 {
                return Err(CorpusError::task(
                    task,
                    format!("reference solution scores {}, not 100", report.score),
                ));
            }
        }
        TaskKind::OutputPrediction => {
            if !task.io_spec.is_empty() || task.reference.is_some() {
                return Err(CorpusError::task(
                    task,
                    "prediction tasks take choices only",
                ));
            }
            if task.choices.len() < 2 {
                return Err(CorpusError::task(task, "fewer than two choices"));
            }
            let mut ids = HashSet::new();
            if let Some(dup) = task.choices.iter().find(|c| !ids.insert(c.id.as_str())) {
                return Err(CorpusError::task(
                    task,
                    format!("duplicate choice `{}`", dup.id),
                ));
            }
            let Some(correct) = &task.correct_choice else {
                return Err(CorpusError::task(task, "missing correct_choice"));
            };
            if !ids.contains(correct.as_str()) {
                return Err(CorpusError::task(
                    task,
                    format!("correct_choice `{correct}` is not a choice"),
                ));
            }
            let behavior = Behavior::of(&task.source);
            let key = task.choices.iter().find(|c| &c.id == correct);
            if !key.is_some_and(|c| behavior.matches(&c.expect)) {
                return Err(CorpusError::task(
                    task,
                    format!("key `{correct}` disagrees with the interpreter ({behavior})"),
                ));
            }
            if let Some(other) = task
                .choices
                .iter()
                .find(|c| &c.id != correct && behavior.matches(&c.expect))
            {
                return Err(CorpusError::task(
                    task,
                    format!("choice `{}` also matches the interpreter", other.id),
                ));
            }
        }
    }
    Ok(())
}

/// Observable result of running a prediction task's source.
#[derive(Debug, Clone, PartialEq)]
pub enum Behavior {
    NotRun,
    Ran(ExecutionTrace),
}

impl Behavior {
    pub fn of(source: &str) -> Behavior {
        match parse(source) {
            Ok(p) => match run(&p, DEFAULT_STEP_LIMIT) {
                Ok(trace) => Behavior::Ran(trace),
                Err(_) => Behavior::NotRun,
            },
            Err(_) => Behavior::NotRun,
        }
    }

    pub fn matches(&self, expect: &Expectation) -> bool {
        match (self, expect) {
            (Behavior::NotRun, Expectation::NotRun) => true,
            (Behavior::Ran(t), Expectation::Output { lines }) => &t.output == lines,
            (Behavior::Ran(t), Expectation::Shape { segments, closed }) => {
                t.segments.len() == *segments && is_closed(t) == *closed
            }
            _ => false,
        }
    }
}

impl std::fmt::Display for Behavior {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Behavior::NotRun => f.write_str("not run"),
            Behavior::Ran(t) => write!(
                f,
                "output {:?}, {} segment(s), closed: {}",
                t.output,
                t.segments.len(),
                is_closed(t)
            ),
        }
    }
}

fn is_closed(trace: &ExecutionTrace) -> bool {
    match (trace.segments.first(), trace.segments.last()) {
        (Some(first), Some(last)) => {
            (first.from[0] - last.to[0]).abs() <= CLOSE_EPS
                && (first.from[1] - last.to[1]).abs() <= CLOSE_EPS
        }
        _ => false,
    }
}

/// Rewrites the first top-level assignment to each overridden name, or
/// prepends one when the program never assigns it at top level.
pub fn apply_overrides(program: &Program, overrides: &BTreeMap<String, OverrideValue>) -> Program {
    let mut out = program.clone();
    let mut prepend = Vec::new();
    for (name, value) in overrides {
        let slot = out.statements.iter_mut().find_map(|s| match &mut s.kind {
            StmtKind::Assign { name: n, value } if n == name => Some(value),
            _ => None,
        });
        match slot {
            Some(v) => *v = value.to_expr(),
            None => prepend.push(Stmt::new(StmtKind::Assign {
                name: name.clone(),
                value: value.to_expr(),
            })),
        }
    }
    if !prepend.is_empty() {
        prepend.append(&mut out.statements);
        out.statements = prepend;
    }
    out
}

fn grade_cases(task: &Task, submission: &str) -> GradeReport {
    let cases = match parse(submission) {
        Err(diags) => {
            let message = diags.first().map(|d| d.to_string());
            task.io_spec
                .iter()
                .map(|_| CaseResult {
                    outcome: CaseOutcome::Syntax,
                    actual: None,
                    message: message.clone(),
                })
                .collect()
        }
        Ok(program) => task
            .io_spec
            .iter()
            .map(|case| {
                let p = apply_overrides(&program, &case.overrides);
                match run(&p, DEFAULT_STEP_LIMIT) {
                    Ok(trace) => CaseResult {
                        outcome: if trace.output == case.expected {
                            CaseOutcome::Pass
                        } else {
                            CaseOutcome::WrongOutput
                        },
                        actual: Some(trace.output),
                        message: None,
                    },
                    Err(e) => CaseResult {
                        outcome: CaseOutcome::Runtime,
                        actual: None,
                        message: Some(e.to_string()),
                    },
                }
            })
            .collect::<Vec<_>>(),
    };
    let passed = cases.iter().filter(|c| c.passed()).count();
    GradeReport {
        task_id: task.id.clone(),
        score: percent(passed, cases.len()),
        detail: GradeDetail::Cases { cases },
    }
}

fn expect_kind(task: &Task, kind: TaskKind) -> Result<(), GradeError> {
    if task.kind == kind {
        Ok(())
    } else {
        Err(GradeError::WrongKind {
            task_id: task.id.clone(),
            expected: kind.as_str(),
            actual: task.kind.as_str(),
        })
    }
}

pub fn grade_modification(task: &Task, submission: &str) -> Result<GradeReport, GradeError> {
    expect_kind(task, TaskKind::Modification)?;
    Ok(grade_cases(task, submission))
}

pub fn grade_syntax_fix(task: &Task, submission: &str) -> Result<GradeReport, GradeError> {
    expect_kind(task, TaskKind::SyntaxFix)?;
    Ok(grade_cases(task, submission))
}

pub fn grade_prediction(task: &Task, choice: &str) -> Result<GradeReport, GradeError> {
    expect_kind(task, TaskKind::OutputPrediction)?;
    if !task.choices.iter().any(|c| c.id == choice) {
        return Err(GradeError::UnknownChoice {
            task_id: task.id.clone(),
            choice: choice.to_string(),
        });
    }
    let correct = task.correct_choice.clone().unwrap_or_default();
    Ok(GradeReport {
        task_id: task.id.clone(),
        score: if choice == correct { 100 } else { 0 },
        detail: GradeDetail::Choice {
            chosen: choice.to_string(),
            correct,
        },
    })
}

/// Grades any task kind. Program text given for a prediction task, or a
/// choice given for a program task, is a kind mismatch.
pub fn grade(task: &Task, submission: &Submission) -> Result<GradeReport, GradeError> {
    match (task.kind, submission) {
        (TaskKind::Modification, Submission::Text(t)) => grade_modification(task, t),
        (TaskKind::SyntaxFix, Submission::Text(t)) => grade_syntax_fix(task, t),
        (TaskKind::OutputPrediction, Submission::Choice(c)) => grade_prediction(task, c),
        (kind, _) => Err(GradeError::WrongKind {
            task_id: task.id.clone(),
            expected: kind.as_str(),
            actual: match submission {
                Submission::Text(_) => "program text",
                Submission::Choice(_) => "a choice",
            },
        }),
    }
}

pub fn missing_report(task: &Task) -> GradeReport {
    GradeReport {
        task_id: task.id.clone(),
        score: 0,
        detail: GradeDetail::Missing,
    }
}

/// File name a submission for `task` is stored under in a submission
/// directory: `<id>.mp` for program tasks, `<id>.choice` for predictions.
pub fn submission_file_name(task: &Task) -> String {
    match task.kind {
        TaskKind::OutputPrediction => format!("{}.choice", task.id),
        _ => format!("{}.mp", task.id),
    }
}

/// Reads a task's submission from `dir`; `None` if the file is absent.
pub fn read_submission(task: &Task, dir: &Path) -> std::io::Result<Option<Submission>> {
    let path = dir.join(submission_file_name(task));
    match std::fs::read_to_string(&path) {
        Ok(text) => Ok(Some(match task.kind {
            TaskKind::OutputPrediction => Submission::Choice(text.trim().to_string()),
            _ => Submission::Text(text),
        })),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e),
    }
}

/// Writes every task's reference submission into `dir`.
pub fn write_reference_submissions(tasks: &[Task], dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for task in tasks {
        let body = match task.reference_submission() {
            Submission::Text(t) => t,
            Submission::Choice(c) => format!("{c}\n"),
        };
        std::fs::write(dir.join(submission_file_name(task)), body)?;
    }
    Ok(())
}

/// Plain-text table of reports, one row per task plus a mean.
pub fn render_table(reports: &[GradeReport]) -> String {
    let width = reports
        .iter()
        .map(|r| r.task_id.len())
        .max()
        .unwrap_or(4)
        .max(4);
    let mut out = format!("{:<width$}  {:>5}  detail\n", "task", "score");
    for r in reports {
        out.push_str(&format!(
            "{:<width$}  {:>5}  {}\n",
            r.task_id,
            r.score,
            r.summary()
        ));
    }
    if !reports.is_empty() {
        let mean = reports.iter().map(|r| r.score as f64).sum::<f64>() / reports.len() as f64;
        out.push_str(&format!("{:<width$}  {:>5.1}\n", "mean", mean));
    }
    out
}
