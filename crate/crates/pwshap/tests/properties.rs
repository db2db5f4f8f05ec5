//! Property tests for the crate's algebraic invariants: things that must
//! hold for *every* input, independent of Monte Carlo accuracy.

use proptest::prelude::*;
use pwshap::model::{clip_propensity, LinearInteractionModel, PredictiveModel};
use pwshap::oracle::scenario;
use pwshap::pwshap::{PwshapExplainer, PwshapSettings};
use pwshap::rng::derive_seed;
use pwshap::shapley::{shapley_weight, Coalition, ValueEstimate};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Clipping always lands in [eps, 1 - eps] and is idempotent.
    #[test]
    fn clip_propensity_is_a_projection(p in -1.0f64..2.0, eps in 0.001f64..0.49) {
        let c = clip_propensity(p, eps);
        prop_assert!((eps..=1.0 - eps).contains(&c));
        prop_assert_eq!(clip_propensity(c, eps).to_bits(), c.to_bits());
        if (eps..=1.0 - eps).contains(&p) {
            prop_assert_eq!(c.to_bits(), p.to_bits());
        }
    }

    /// Exact-enumeration weights sum to one over all proper subsets.
    #[test]
    fn shapley_weights_normalize(m in 1usize..=20) {
        let mut total = 0.0;
        let mut binom = 1.0; // C(m-1, s)
        for s in 0..m {
            prop_assert!(shapley_weight(m, s) > 0.0);
            total += binom * shapley_weight(m, s);
            binom *= (m - 1 - s) as f64 / (s + 1) as f64;
        }
        prop_assert!((total - 1.0).abs() < 1e-9, "sum = {}", total);
    }

    /// Coalition bitmask algebra round-trips through the member list.
    #[test]
    fn coalition_members_round_trip(mask in 0u32..(1 << 10), extra in 0usize..10) {
        let m = 10;
        let c = Coalition { mask, m };
        prop_assert_eq!(Coalition::from_members(&c.members(), m).mask, mask);
        prop_assert_eq!(c.size(), mask.count_ones() as usize);
        let with = c.with(extra);
        prop_assert!(with.contains(extra));
        prop_assert_eq!(with.without(extra).mask, mask & !(1 << extra));
    }

    /// Estimate algebra: difference and scaling keep standard errors sane.
    #[test]
    fn value_estimate_algebra(a in -10.0f64..10.0, sa in 0.0f64..2.0,
                              b in -10.0f64..10.0, sb in 0.0f64..2.0,
                              c in -3.0f64..3.0) {
        let x = ValueEstimate { mean: a, se: sa, n_draws: 100 };
        let y = ValueEstimate { mean: b, se: sb, n_draws: 100 };
        let d = x.minus(&y);
        prop_assert!((d.mean - (a - b)).abs() < 1e-12);
        prop_assert!(d.se >= sa.max(sb) - 1e-12);
        let s = x.scale(c);
        prop_assert!((s.mean - c * a).abs() < 1e-12);
        prop_assert!((s.se - c.abs() * sa).abs() < 1e-12);
    }

    /// Seed derivation is deterministic and tag-sensitive.
    #[test]
    fn derived_seeds_are_stable_and_distinct(master in any::<u64>(), tag in "[a-z]{1,12}") {
        prop_assert_eq!(derive_seed(master, &tag), derive_seed(master, &tag));
        prop_assert_ne!(derive_seed(master, &tag), derive_seed(master, &format!("{tag}!")));
    }

    /// The linear-interaction model's box sup-norm bound really bounds it.
    #[test]
    fn sup_norm_bound_dominates_samples(
        g1 in -3.0f64..3.0, g2 in -3.0f64..3.0,
        a1 in -3.0f64..3.0, a2 in -3.0f64..3.0,
        c1 in 0.0f64..1.0, c2 in 0.0f64..1.0, t in 0usize..2,
    ) {
        let model = LinearInteractionModel::new(0.5, 1.0, vec![g1, g2], vec![a1, a2]);
        let sup = model.sup_norm_bound(&[(0.0, 1.0), (0.0, 1.0)]).unwrap();
        let v = model.predict(&[c1, c2, t as f64]);
        prop_assert!(v.abs() <= sup + 1e-12, "{} vs {}", v, sup);
    }
}

proptest! {
    // Monte Carlo inside: fewer, cheaper cases.
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// phi = w * psi holds bit-for-bit for every coalition, model and
    /// instance — the identity is structural, not statistical.
    #[test]
    fn weighted_identity_is_structural(
        g1 in -2.0f64..2.0, a1 in -2.0f64..2.0, a2 in -2.0f64..2.0,
        c1 in 0.0f64..1.0, c2 in 0.0f64..1.0, t in 0usize..2,
        mask in 0u32..4, seed in 0u64..1000,
    ) {
        let spec = scenario("moderation").unwrap();
        let model = LinearInteractionModel::new(0.0, 1.0, vec![g1, 1.0], vec![a1, a2]);
        let explainer = PwshapExplainer {
            dag: &spec.dag,
            model: &model,
            sampler: &spec.scenario,
            propensity: None,
        };
        let settings = PwshapSettings { n_draws: 200, seed, ..PwshapSettings::default() };
        let (effect, _) = explainer
            .coalition_effect(Coalition { mask, m: 2 }, &[c1, c2, t as f64], &settings)
            .unwrap();
        prop_assert_eq!(
            effect.phi.mean.to_bits(),
            (effect.weight.value * effect.psi.mean).to_bits()
        );
    }
}
