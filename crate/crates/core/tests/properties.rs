use hybrid_core::adapter::{ast_to_blocks, blocks_to_text, palette};
use hybrid_core::assess::percent;
use hybrid_core::blocks::{from_markup, to_markup};
use hybrid_core::editor::{Session, TextRange};
use hybrid_core::gen::ProgramGen;
use hybrid_core::interp::run;
use hybrid_core::lang::{parse, print, DiagCode, Program};
use proptest::prelude::*;

fn program(seed: u64) -> Program {
    ProgramGen::new(seed).program()
}

fn indent_of(line: &str) -> usize {
    line.len() - line.trim_start_matches(' ').len()
}

const REPLACEMENTS: &[&str] = &[
    "",
    " ",
    "  ",
    "\n",
    "fd 10",
    "if x > 1\n",
    "x",
    "else",
    "\t",
    "'",
    "for [1..2]\n  ",
    "rt 9\n",
    "\n  write 'a'\n",
    "-> ",
    "draw = ->\n",
];

#[derive(Debug, Clone)]
enum Op {
    Drop {
        item: usize,
        line: usize,
    },
    Edit {
        a: usize,
        b: usize,
        ca: usize,
        cb: usize,
        rep: usize,
    },
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (any::<usize>(), any::<usize>()).prop_map(|(item, line)| Op::Drop { item, line }),
        (
            any::<usize>(),
            any::<usize>(),
            any::<usize>(),
            any::<usize>(),
            any::<usize>()
        )
            .prop_map(|(a, b, ca, cb, rep)| Op::Edit { a, b, ca, cb, rep }),
    ]
}

/// Maps raw random numbers onto a valid, ordered edit range of `text`.
fn pick_range(text: &str, a: usize, b: usize, ca: usize, cb: usize) -> TextRange {
    let lines: Vec<&str> = text.split('\n').collect();
    let (mut l1, mut l2) = (a % lines.len(), b % lines.len());
    let mut c1 = ca % (lines[l1].chars().count() + 1);
    let mut c2 = cb % (lines[l2].chars().count() + 1);
    if (l2, c2) < (l1, c1) {
        std::mem::swap(&mut l1, &mut l2);
        std::mem::swap(&mut c1, &mut c2);
    }
    TextRange::new(l1, c1, l2, c2)
}

fn check_synced(s: &Session) -> Result<(), TestCaseError> {
    if s.diagnostics().is_empty() {
        let fresh = ast_to_blocks(&parse(s.text()).unwrap());
        prop_assert_eq!(s.blocks(), &fresh);
        prop_assert!(!s.is_stale());
    } else {
        prop_assert!(s.is_stale());
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn print_then_parse_is_identity(seed in any::<u64>()) {
        let p = program(seed);
        prop_assert_eq!(parse(&print(&p)).unwrap(), p);
    }

    #[test]
    fn printing_is_a_fixpoint(seed in any::<u64>()) {
        let text = print(&program(seed));
        prop_assert_eq!(print(&parse(&text).unwrap()), text);
    }

    #[test]
    fn blocks_round_trip(seed in any::<u64>()) {
        let p = program(seed);
        let text = blocks_to_text(&ast_to_blocks(&p)).unwrap();
        prop_assert_eq!(parse(&text).unwrap(), p);
    }

    #[test]
    fn block_text_projection_is_the_printed_text(seed in any::<u64>()) {
        let p = program(seed);
        let doc = ast_to_blocks(&p);
        prop_assert_eq!(doc.text_projection(), print(&p));
        prop_assert_eq!(blocks_to_text(&doc).unwrap(), print(&p));
    }

    #[test]
    fn markup_is_a_bijection(seed in any::<u64>()) {
        let doc = ast_to_blocks(&program(seed));
        let m = to_markup(&doc);
        let back = from_markup(&m).unwrap();
        prop_assert_eq!(to_markup(&back), m);
        prop_assert_eq!(back, doc);
    }

    #[test]
    fn indentation_is_strict(seed in any::<u64>()) {
        let text = print(&program(seed));
        let lines: Vec<&str> = text.lines().collect();
        for (i, line) in lines.iter().enumerate() {
            let ind = indent_of(line);
            if ind == 0 {
                continue;
            }
            let mut broken: Vec<String> = lines.iter().map(|l| l.to_string()).collect();
            broken[i].remove(0);
            let diags = parse(&(broken.join("\n") + "\n")).unwrap_err();
            prop_assert!(diags.iter().any(|d| d.code == DiagCode::IndentMismatch));

            let first_in_body = i > 0 && indent_of(lines[i - 1]) + 2 == ind;
            if first_in_body {
                let mut dedented: Vec<String> = lines.iter().map(|l| l.to_string()).collect();
                dedented[i] = dedented[i][2..].to_string();
                let diags = parse(&(dedented.join("\n") + "\n")).unwrap_err();
                prop_assert!(diags.iter().any(|d| d.code == DiagCode::IndentMismatch));
            }
        }
    }

    #[test]
    fn diagnostics_point_inside_the_text(seed in any::<u64>(), ops in prop::collection::vec(op(), 1..6)) {
        let mut s = Session::new(&print(&program(seed)));
        for o in ops {
            if let Op::Edit { a, b, ca, cb, rep } = o {
                let r = pick_range(s.text(), a, b, ca, cb);
                s.edit_text(r, REPLACEMENTS[rep % REPLACEMENTS.len()]).unwrap();
            }
            let lines: Vec<&str> = s.text().split('\n').collect();
            for d in s.diagnostics() {
                prop_assert!(d.line >= 1 && d.line <= lines.len(), "{d} in {:?}", s.text());
                prop_assert!(d.col >= 1 && d.col <= lines[d.line - 1].chars().count() + 1, "{d} in {:?}", s.text());
            }
        }
    }

    #[test]
    fn sessions_stay_in_sync(seed in any::<u64>(), ops in prop::collection::vec(op(), 1..12)) {
        let mut s = Session::new(&print(&program(seed)));
        check_synced(&s)?;
        for o in ops {
            let before = s.revision();
            let applied = match o {
                Op::Drop { item, line } => {
                    let item = &palette()[item % palette().len()];
                    let line = line % (hybrid_core::editor::line_count(s.text()) + 2);
                    s.drop_block(item.id, line).is_ok()
                }
                Op::Edit { a, b, ca, cb, rep } => {
                    let r = pick_range(s.text(), a, b, ca, cb);
                    s.edit_text(r, REPLACEMENTS[rep % REPLACEMENTS.len()]).is_ok()
                }
            };
            prop_assert_eq!(s.revision(), before + applied as u64);
            check_synced(&s)?;
        }
    }

    #[test]
    fn drops_keep_valid_programs_valid(seed in any::<u64>(), item in any::<usize>(), line in any::<usize>()) {
        let mut s = Session::new(&print(&program(seed)));
        let item = &palette()[item % palette().len()];
        let line = line % (s.line_count() + 1);
        let r = s.drop_block(item.id, line).unwrap();
        prop_assert!(r.diagnostics.is_empty(), "{} at {line}: {:?}\n{}", item.id, r.diagnostics, r.text);
    }

    #[test]
    fn replacing_text_matches_a_fresh_session(a in any::<u64>(), b in any::<u64>()) {
        let (ta, tb) = (print(&program(a)), print(&program(b)));
        let mut s = Session::new(&ta);
        let end = ta.split('\n').count() - 1;
        s.edit_text(TextRange::new(0, 0, end, 0), &tb).unwrap();
        let fresh = Session::new(&tb);
        prop_assert_eq!(s.text(), fresh.text());
        prop_assert_eq!(s.blocks(), fresh.blocks());
        prop_assert_eq!(s.diagnostics(), fresh.diagnostics());
    }

    #[test]
    fn runs_are_deterministic(seed in any::<u64>()) {
        let p = program(seed);
        prop_assert_eq!(run(&p, 5_000), run(&p, 5_000));
    }

    #[test]
    fn regular_polygons_close(n in 3u32..=12, d in 1u32..500) {
        let src = format!("for [1..{n}]\n  fd {d}\n  rt 360 / {n}\n");
        let t = run(&parse(&src).unwrap(), 10_000).unwrap();
        prop_assert!(t.final_state.x.abs() < 1e-9 && t.final_state.y.abs() < 1e-9,
            "n={n} d={d} ended at ({}, {})", t.final_state.x, t.final_state.y);
        prop_assert_eq!(t.segments.len(), n as usize);
    }

    #[test]
    fn segments_match_pen_down_moves(cmds in prop::collection::vec((0usize..6, -400i32..400), 0..40)) {
        let mut src = String::new();
        let mut down = true;
        let mut expected = 0;
        for (c, v) in cmds {
            match c {
                0 => { src += &format!("fd {v}\n"); expected += down as usize; }
                1 => { src += &format!("bk {v}\n"); expected += down as usize; }
                2 => src += &format!("rt {v}\n"),
                3 => src += &format!("lt {v}\n"),
                4 => { src += "pen none\n"; down = false; }
                _ => { src += "pen red\n"; down = true; }
            }
        }
        let t = run(&parse(&src).unwrap(), 10_000).unwrap();
        prop_assert_eq!(t.segments.len(), expected);
        prop_assert!((0.0..360.0).contains(&t.final_state.heading));
    }

    #[test]
    fn scores_are_bounded_and_monotone(total in 1usize..50, passed in 0usize..50) {
        let passed = passed.min(total);
        prop_assert!(percent(passed, total) <= 100);
        if passed < total {
            prop_assert!(percent(passed, total) <= percent(passed + 1, total));
        }
    }
}
