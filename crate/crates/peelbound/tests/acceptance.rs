//! Runs the twelve acceptance criteria, one line each.

use std::process::ExitCode;
use std::time::Instant;

use peelbound::lab;

fn main() -> ExitCode {
    let start = Instant::now();
    let outcomes = lab::verify(lab::DEFAULT_SEED, &mut |c| {
        println!(
            "[{}] criterion {:>2} {:<26} {:>7.1}s  {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            start.elapsed().as_secs_f64(),
            c.detail
        );
    });
    let passed = outcomes.iter().filter(|c| c.pass).count();
    println!("{passed}/{} criteria passed", outcomes.len());
    if passed == outcomes.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
