//! Whole-corpus checks and runs, data-parallel when the `parallel` feature
//! is enabled.
//!
//! Every function takes an [`Exec`] so callers (and the benches) can pick
//! the sequential path explicitly. Results always come back in input order.

use crate::adapter::{ast_to_blocks, blocks_to_text, palette};
use crate::assess::{grade, missing_report, GradeReport, Submission, Task};
use crate::blocks::{from_markup, to_markup};
use crate::editor::{line_count, Session};
use crate::interp::{run, ExecutionTrace, RuntimeDiagnostic};
use crate::lang::{parse, print, Program};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How batch work is spread. The default is parallel when available.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Exec {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

impl Exec {
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            Exec::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => items.par_iter().map(f).collect(),
        }
    }
}

/// Which of the three round trips held for one program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundTrip {
    pub text: bool,
    pub blocks: bool,
    pub markup: bool,
}

impl RoundTrip {
    pub fn ok(&self) -> bool {
        self.text && self.blocks && self.markup
    }
}

/// `parse(print(p)) == p`, `parse(blocks_to_text(ast_to_blocks(p))) == p`
/// and `from_markup(to_markup(d)) == d` for one program.
pub fn round_trip(program: &Program) -> RoundTrip {
    let text = parse(&print(program)).is_ok_and(|q| &q == program);
    let doc = ast_to_blocks(program);
    let blocks = blocks_to_text(&doc)
        .ok()
        .and_then(|t| parse(&t).ok())
        .is_some_and(|q| &q == program);
    let markup = from_markup(&to_markup(&doc)).is_ok_and(|d| d == doc);
    RoundTrip {
        text,
        blocks,
        markup,
    }
}

pub fn round_trip_all(programs: &[Program], exec: Exec) -> Vec<RoundTrip> {
    exec.map(programs, round_trip)
}

/// A palette drop that left diagnostics behind.
#[derive(Debug, Clone, PartialEq)]
pub struct DropFailure {
    pub program: usize,
    pub palette_id: &'static str,
    pub line: usize,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DropSweep {
    pub attempts: usize,
    pub failures: Vec<DropFailure>,
}

/// Drops every palette item at every legal line of every program. Sources
/// that do not parse are skipped.
pub fn drop_sweep(sources: &[String], exec: Exec) -> DropSweep {
    let per_program = exec.map(
        &sources.iter().enumerate().collect::<Vec<_>>(),
        |(i, src)| {
            let base = Session::new(src);
            let mut sweep = DropSweep::default();
            if !base.diagnostics().is_empty() {
                return sweep;
            }
            for item in palette() {
                for line in 0..=line_count(base.text()) {
                    let mut s = base.clone();
                    sweep.attempts += 1;
                    match s.drop_block(item.id, line) {
                        Ok(r) if r.diagnostics.is_empty() => {}
                        _ => sweep.failures.push(DropFailure {
                            program: *i,
                            palette_id: item.id,
                            line,
                            text: s.text().to_string(),
                        }),
                    }
                }
            }
            sweep
        },
    );
    per_program
        .into_iter()
        .fold(DropSweep::default(), |mut acc, s| {
            acc.attempts += s.attempts;
            acc.failures.extend(s.failures);
            acc
        })
}

/// Grades each task against its submission, `None` meaning absent.
pub fn grade_all(
    tasks: &[Task],
    submissions: &[Option<Submission>],
    exec: Exec,
) -> Vec<GradeReport> {
    let pairs: Vec<_> = tasks.iter().zip(submissions).collect();
    exec.map(&pairs, |(task, sub)| match sub {
        Some(s) => grade(task, s).unwrap_or_else(|_| missing_report(task)),
        None => missing_report(task),
    })
}

pub fn run_many(
    programs: &[Program],
    step_limit: u64,
    exec: Exec,
) -> Vec<Result<ExecutionTrace, RuntimeDiagnostic>> {
    exec.map(programs, |p| run(p, step_limit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::programs;

    #[test]
    fn sequential_round_trips() {
        let ps = programs(1, 50);
        assert!(round_trip_all(&ps, Exec::Sequential)
            .iter()
            .all(RoundTrip::ok));
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn modes_agree() {
        let ps = programs(7, 80);
        assert_eq!(
            round_trip_all(&ps, Exec::Sequential),
            round_trip_all(&ps, Exec::Parallel)
        );
        assert_eq!(
            run_many(&ps, 10_000, Exec::Sequential),
            run_many(&ps, 10_000, Exec::Parallel)
        );
    }

    #[test]
    fn drop_sweep_small() {
        let srcs = vec![
            "for [1..10]\n  rt 45\n".to_string(),
            "broken =\n".to_string(),
        ];
        let sweep = drop_sweep(&srcs, Exec::default());
        assert_eq!(sweep.attempts, palette().len() * 3);
        assert!(sweep.failures.is_empty(), "{:?}", sweep.failures);
    }

    #[test]
    fn missing_submission_scores_zero() {
        let tasks = crate::assess::bundled_corpus();
        let subs = vec![None; tasks.len()];
        assert!(grade_all(tasks, &subs, Exec::Sequential)
            .iter()
            .all(|r| r.score == 0));
    }
}
