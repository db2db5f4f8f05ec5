//! Split the treatment's causal Shapley value into its direct part and the
//! indirect part flowing through the mediator, and check both against their
//! closed forms.
//!
//! Run with: cargo run --example causal_split

use pwshap::oracle::{oracle_value, scenario};
use pwshap::shapley::{causal_shapley_split, ReferenceMode, ShapleyConfig};

fn main() -> pwshap::Result<()> {
    let spec = scenario("mediation")?;
    let config = ShapleyConfig {
        mode: ReferenceMode::Causal,
        n_draws: 50_000,
        seed: 3,
    };

    for t in [0.0, 1.0] {
        // Columns are [D, Q, T]; the treatment is feature index 2.
        let features = [1.0, 0.3, t];
        let args: &[(&str, f64)] = &[("D", 1.0), ("Q", 0.3), ("T", t)];
        let (direct, indirect) =
            causal_shapley_split(&spec.model, &spec.scenario, &features, 2, &config)?;
        let want_direct = oracle_value("mediation", "cs_direct", args)?;
        let want_indirect = oracle_value("mediation", "cs_indirect", args)?;
        println!(
            "t = {t}: direct {:.4} +-{:.4} (closed form {:.4}), indirect {:.4} +-{:.4} (closed form {:.4})",
            direct.mean, direct.se, want_direct, indirect.mean, indirect.se, want_indirect
        );
        assert!((direct.mean - want_direct).abs() <= 5.0 * direct.se.max(1e-9));
        assert!((indirect.mean - want_indirect).abs() <= 5.0 * indirect.se.max(1e-9));
    }

    // In the bias scenario the treatment has no downstream covariates, so
    // the indirect part is identically zero.
    let bias = scenario("bias")?;
    let (_, indirect) =
        causal_shapley_split(&bias.model, &bias.scenario, &[0.25, 0.5, 1.0], 2, &config)?;
    println!("bias scenario indirect part: {:.5} +-{:.5}", indirect.mean, indirect.se);
    assert!(indirect.mean.abs() <= 5.0 * indirect.se.max(1e-9));
    Ok(())
}
