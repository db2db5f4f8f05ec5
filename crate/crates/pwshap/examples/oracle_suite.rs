//! Run the closed-form oracle regression suite at a reduced draw budget and
//! print one line per entry.
//!
//! Run with: cargo run --example oracle_suite

use pwshap::oracle::{check_entry, oracle_table};

fn main() -> pwshap::Result<()> {
    let entries = oracle_table();
    println!("{} oracle entries", entries.len());
    let mut failures = 0;
    for entry in &entries {
        let check = check_entry(entry, 10_000, 42, 5.0)?;
        println!(
            "{} {:>22}/{:<14} oracle={:>9.5} est={:>9.5} z={:.2}",
            if check.pass { "PASS" } else { "FAIL" },
            check.scenario,
            check.quantity,
            check.oracle,
            check.estimate,
            check.z
        );
        if !check.pass {
            failures += 1;
            println!("        note: {}", entry.provenance);
        }
    }
    println!("{failures} failures");
    assert_eq!(failures, 0);
    Ok(())
}
