//! Runs every acceptance criterion at full scope and prints one line each.
//! Built without the libtest harness so the lines are never captured.

use std::process::ExitCode;
use std::time::Instant;

use crwave::acceptance::{run, Outcome, Scope, CRITERIA};

fn main() -> ExitCode {
    let start = Instant::now();
    let outcomes: Vec<(Outcome, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = CRITERIA
            .iter()
            .map(|&(id, _)| {
                s.spawn(move || {
                    let t = Instant::now();
                    let o = run(id, Scope::Full);
                    (o, t.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("criterion panicked")).collect()
    });
    for (o, secs) in &outcomes {
        println!(
            "criterion {:>2} {:<22} {} ({secs:.1}s) {}",
            o.id,
            o.name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("acceptance total {:.1}s", start.elapsed().as_secs_f64());
    let failing: Vec<u8> = outcomes.iter().filter(|(o, _)| !o.pass).map(|(o, _)| o.id).collect();
    if failing.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failing criteria: {failing:?}");
        ExitCode::FAILURE
    }
}
