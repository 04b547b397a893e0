//! The eleven acceptance criteria, one line each.
//!
//! Set `HOMOG_QUICK=1` to skip the finite-element criteria.

use homog_core::validation::{Status, Suite, SuiteOptions};

fn main() {
    let quick = std::env::var("HOMOG_QUICK").is_ok_and(|v| v == "1");
    let suite = Suite::new(SuiteOptions {
        quick,
        ..SuiteOptions::default()
    });
    println!("running acceptance criteria{}", if quick { " (quick)" } else { "" });
    let results = suite.run(|r| println!("{}", r.line()));
    let failed = results.iter().filter(|r| r.status == Status::Fail).count();
    let passed = results.iter().filter(|r| r.status == Status::Pass).count();
    println!("acceptance: {passed} passed, {failed} failed, {} skipped", results.len() - passed - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
