//! Validate a DAG, query d-separation, and enumerate treatment-to-outcome
//! paths with their causal roles.
//!
//! Run with: cargo run --example validate_dag

use pwshap::graph::DagSpec;

fn main() -> pwshap::Result<()> {
    let dag = DagSpec::from_json(
        r#"{
            "nodes": ["T", "C1", "C2", "Q", "D", "Y"],
            "edges": [
                ["C1", "T"], ["C1", "Q"], ["C1", "D"], ["T", "D"],
                ["C1", "Y"], ["C2", "Y"], ["Q", "Y"], ["D", "Y"], ["T", "Y"]
            ],
            "treatment": "T",
            "outcome": "Y"
        }"#,
    )?;

    let issues = dag.validate();
    println!("validation issues: {issues:?}");
    assert!(issues.is_empty());

    for (x, y, z) in [
        ("C2", "T", vec![]),
        ("Q", "D", vec![]),
        ("Q", "D", vec!["C1", "T"]),
        ("T", "Q", vec!["C1"]),
    ] {
        let sep = dag.d_separated(&[x], &[y], &z)?;
        println!("{x} _||_ {y} | {z:?}  ->  {sep}");
    }

    println!("\npaths from T to Y:");
    for path in dag.enumerate_paths(true)? {
        println!(
            "  {:<8} role={:?} merged={} inner={:?}",
            path.label(),
            path.role,
            path.merged,
            path.inner_nodes
        );
    }
    Ok(())
}
