//! Runs the full harness over one system of every construction.

use clustered_regen::capacity::ratio;
use clustered_regen::harness::{run_suite, RunOptions};
use clustered_regen::CodeSpec;

fn main() -> clustered_regen::Result<()> {
    let opts = RunOptions { seed: 11, ..RunOptions::default() };
    let specs = [
        CodeSpec::mbr_zero(12, 6, 3)?,
        CodeSpec::mbr(6, 3, 2, 3)?,
        CodeSpec::msr_zero(6, 3, 2)?,
        CodeSpec::msr_zero(6, 4, 2)?,
        CodeSpec::msr_stacked(6, 2, 3)?,
        CodeSpec::msr_wrapped(9, 5, 3, ratio(1, 2))?,
    ];
    let entries: Vec<_> = specs.into_iter().map(|s| (s, opts)).collect();
    for report in run_suite(&entries)? {
        println!("{} ({} ms)", report.system["code"], report.elapsed_ms);
        for c in &report.checks {
            println!("  [{}] {}", if c.pass { "ok" } else { "FAIL" }, c.name);
        }
    }
    Ok(())
}
