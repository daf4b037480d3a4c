//! Acceptance suite: one line per criterion.
//!
//! Runs without the libtest harness so the lines are always printed. Exits
//! non-zero when a criterion fails that is not listed in `KNOWN_RED`.
//! `ACCEPTANCE_ONLY=4,7` runs a subset of the criterion groups.

use scalecalc::acceptance;

fn main() {
    let only: Option<Vec<String>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').map(|t| t.trim().to_string()).collect());
    let lines = acceptance::run(only.as_deref(), |l| {
        let took = l.seconds.map_or(String::new(), |s| format!(" ({s:.1} s)"));
        println!("{} [{}] {}: {}{took}", l.status(), l.id, l.title, l.detail);
    });
    let unexpected: Vec<&str> = lines.iter().filter(|l| l.unexpected()).map(|l| l.id.as_str()).collect();
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
