//! Explain one instance of the moderation scenario with the exact sampler
//! and compare every reported effect to its closed form.
//!
//! Run with: cargo run --example explain_instance

use pwshap::oracle::{oracle_value, scenario};
use pwshap::pwshap::{PwshapExplainer, PwshapSettings};

fn main() -> pwshap::Result<()> {
    let spec = scenario("moderation")?;
    let explainer = PwshapExplainer {
        dag: &spec.dag,
        model: &spec.model,
        sampler: &spec.scenario,
        propensity: None,
    };

    // Instance: c1 = 0.25, c2 = 0.5, treated.
    let features = [0.25, 0.5, 1.0];
    let args: &[(&str, f64)] = &[("C1", 0.25), ("C2", 0.5), ("T", 1.0)];
    let settings = PwshapSettings {
        n_draws: 20_000,
        seed: 7,
        ..PwshapSettings::default()
    };
    let report = explainer.explain(&features, &settings)?;

    println!("coalition effects (psi, weight, phi = weight * psi):");
    for c in &report.coalitions {
        println!(
            "  {:<10} psi={:>7.4} +-{:.4}  w={:>7.4}  phi={:>7.4}  [{}]",
            c.coalition, c.psi.mean, c.psi.se, c.weight.value, c.phi.mean, c.interpretation
        );
    }

    println!("\npath-wise effects vs closed form:");
    for p in &report.paths {
        let truth = match p.path.as_str() {
            "direct" => oracle_value("moderation", "psi_full", args)?,
            "C1" => oracle_value("moderation", "path_c1", args)?,
            "C2" => oracle_value("moderation", "path_c2", args)?,
            other => panic!("unexpected path {other}"),
        };
        println!(
            "  {:<7} role={:<11?} delta={:>7.4} +-{:.4}   closed form {:>7.4}",
            p.path, p.role, p.delta.mean, p.delta.se, truth
        );
        assert!((p.delta.mean - truth).abs() <= 5.0 * p.delta.se.max(1e-9));
    }

    println!("\nCSV summary:\n{}", report.summary_csv());
    Ok(())
}
