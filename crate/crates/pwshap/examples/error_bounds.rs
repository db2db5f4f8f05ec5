//! Stress the worst-case error bounds: perturb the black box by a bounded
//! wiggle and verify the observed drift of the attributions never exceeds
//! the advertised bound.
//!
//! Run with: cargo run --release --example error_bounds

use pwshap::model::PredictiveModel;
use pwshap::oracle::scenario;
use pwshap::pwshap::{
    path_perturbation_bound, phi_perturbation_bound, PwshapExplainer, PwshapSettings,
};
use pwshap::rng::rng_from_seed;
use rand::Rng;

/// A model shifted by e * cos(w . x + b), which is bounded by e in sup norm.
struct Perturbed<'a> {
    base: &'a dyn PredictiveModel,
    e: f64,
    w: Vec<f64>,
    b: f64,
}

impl PredictiveModel for Perturbed<'_> {
    fn predict(&self, features: &[f64]) -> f64 {
        let dot: f64 = self.w.iter().zip(features).map(|(w, x)| w * x).sum();
        self.base.predict(features) + self.e * (dot + self.b).cos()
    }
}

fn main() -> pwshap::Result<()> {
    let spec = scenario("moderation")?;
    let features = [0.25, 0.5, 1.0];
    let settings = PwshapSettings {
        n_draws: 20_000,
        seed: 5,
        ..PwshapSettings::default()
    };
    let explain = |model: &dyn PredictiveModel| {
        PwshapExplainer {
            dag: &spec.dag,
            model,
            sampler: &spec.scenario,
            propensity: None,
        }
        .explain(&features, &settings)
    };
    // Shared seeds: the Monte Carlo draws cancel in the difference, leaving
    // only the perturbation itself.
    let base = explain(&spec.model)?;

    let mut rng = rng_from_seed(17);
    let mut worst_phi: f64 = 0.0;
    let mut worst_path: f64 = 0.0;
    let e = 0.05;
    for _ in 0..20 {
        let perturbed_model = Perturbed {
            base: &spec.model,
            e,
            w: (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            b: rng.gen_range(0.0..6.28),
        };
        let report = explain(&perturbed_model)?;
        for (a, b) in base.coalitions.iter().zip(&report.coalitions) {
            worst_phi = worst_phi.max((a.phi.mean - b.phi.mean).abs());
        }
        for (a, b) in base.paths.iter().zip(&report.paths) {
            worst_path = worst_path.max((a.delta.mean - b.delta.mean).abs());
        }
    }
    println!(
        "perturbation sup-norm e = {e}: worst phi drift {worst_phi:.4} <= bound {}",
        phi_perturbation_bound(e)
    );
    println!(
        "                         worst path drift {worst_path:.4} <= bound {}",
        path_perturbation_bound(e)
    );
    assert!(worst_phi <= phi_perturbation_bound(e));
    assert!(worst_path <= path_perturbation_bound(e));

    // The sup norm of the fitted linear-interaction model itself, needed for
    // the division-route bound, is exact over a box domain.
    let sup = spec.model.sup_norm_bound(&[(0.0, 1.0), (0.0, 1.0)])?;
    println!("sup |f| over the unit box: {sup}");
    Ok(())
}
