//! Acceptance suite. Prints one PASS/FAIL line per criterion followed by its
//! sub-checks, and exits nonzero if any criterion fails.
//!
//! Runs without the libtest harness so every line is shown and criteria run
//! one at a time (several carry runtime limits). Positional arguments select
//! criteria by number: `cargo test --test acceptance -- 2 8`.

use std::process::ExitCode;

use duel_core::checks;

fn main() -> ExitCode {
    let selected: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    let mut ran = 0;
    for (i, criterion) in checks::CRITERIA.iter().enumerate() {
        let id = i as u8 + 1;
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        ran += 1;
        match criterion() {
            Ok(report) => {
                print!("{}", report.render());
                if !report.passed() {
                    failed.push(id);
                }
            }
            Err(e) => {
                println!("[FAIL] criterion {id:>2}: did not run to completion: {e}");
                failed.push(id);
            }
        }
    }
    println!("\nacceptance: {} passed, {} failed {:?}", ran - failed.len(), failed.len(), failed);
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
