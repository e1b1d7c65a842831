//! Acceptance gate: every shipped criterion must pass at its pinned
//! tolerance. One line per criterion.

use pluripot::verify;

#[test]
fn acceptance_suite() {
    let outcomes = verify::run_all(7);
    assert_eq!(outcomes.len(), 14);
    let mut failed = 0;
    for out in &outcomes {
        println!(
            "criterion {:2} [{}] {}",
            out.id,
            if out.passed { "PASS" } else { "FAIL" },
            out.name
        );
        print!("{}", out.details);
        if !out.passed {
            failed += 1;
        }
    }
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
