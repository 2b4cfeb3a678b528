//! The acceptance suite: every criterion at its stated tolerance, one PASS/FAIL line each.
//!
//! Built without the test harness: `cargo test -p wfgem --test acceptance` prints the table
//! and exits non-zero if any criterion fails.

use std::time::Instant;

use wfgem::verify::{run_suite, CheckReport, SuiteConfig, CRITERIA};

fn suite_on(threads: usize) -> (Vec<CheckReport>, f64) {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let start = Instant::now();
    let reports = pool.install(|| run_suite(&SuiteConfig::default()));
    (reports, start.elapsed().as_secs_f64())
}

fn main() {
    let (first, secs) = suite_on(1);
    let (second, _) = suite_on(4);

    let mut lines = Vec::new();
    let mut all = true;
    for &(id, title, names) in CRITERIA {
        let mut ok = true;
        let mut parts = Vec::new();
        for name in names {
            let r = first.iter().find(|r| r.name == *name).expect("report present");
            ok &= r.passed();
            parts.push(format!("{name}={} ({:.3e})", r.status, r.margin));
            for f in &r.failures {
                parts.push(format!("  {name}: {f}"));
            }
        }
        all &= ok;
        lines.push(format!("{} criterion {id} {title}: {}", verdict(ok), parts.join(", ")));
    }

    let a = serde_json::to_string(&first).unwrap();
    let b = serde_json::to_string(&second).unwrap();
    let same = a == b;
    let fast = secs < 15.0 * 60.0;
    all &= same && fast;
    lines.push(format!(
        "{} criterion 8 determinism: reports identical on 1 and 4 threads: {same}; suite {secs:.0} s (limit 900 s)",
        verdict(same && fast)
    ));

    for l in &lines {
        println!("{l}");
    }
    if !all {
        eprintln!("acceptance: at least one criterion failed");
        std::process::exit(1);
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}
