mod support;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use muse::record::{BinaryDist, Member, PredictionPool};
use muse::select::{aggregate, confidence, muse_conservative, muse_greedy, Aggregation, MuseParams};
use support::replay::{replay, ReplayParams, Variant};

fn pool_of(ps: &[f64]) -> PredictionPool {
    PredictionPool::from_probabilities("x", ps).unwrap()
}

fn params_strategy() -> impl Strategy<Value = MuseParams> {
    (
        0.0f64..2.0,
        prop_oneof![Just(0.001), Just(0.01), Just(0.04), Just(0.2)],
        prop_oneof![Just(0.0), Just(0.01)],
        1usize..10,
        any::<bool>(),
        any::<bool>(),
    )
        .prop_map(|(beta, eps_tol, tau, m_min, square_jsd, weighted)| MuseParams {
            beta,
            eps_tol,
            tau,
            m_min,
            square_jsd,
            aggregation: if weighted { Aggregation::AleatoricWeighted } else { Aggregation::Mean },
        })
}

/// Probabilities whose confidences are pairwise distinct.
fn distinct_confidence_pool(max: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0f64..=1.0, 1..max).prop_filter("distinct confidences", |ps| {
        let mut cs: Vec<f64> = ps.iter().map(|p| (p - 0.5).abs()).collect();
        cs.sort_by(f64::total_cmp);
        cs.windows(2).all(|w| w[1] - w[0] > 1e-9)
    })
}

fn select(variant: Variant, pool: &PredictionPool, params: &MuseParams) -> muse::SelectionResult {
    match variant {
        Variant::Greedy => muse_greedy(pool, params).unwrap(),
        Variant::Conservative => muse_conservative(pool, params).unwrap(),
    }
}

fn top_member(ps: &[f64]) -> String {
    let mut best = 0;
    for (i, p) in ps.iter().enumerate() {
        if confidence(BinaryDist::new(*p).unwrap()) > confidence(BinaryDist::new(ps[best]).unwrap()) {
            best = i;
        }
    }
    format!("s{best}")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn contains_most_confident_member(ps in proptest::collection::vec(0.0f64..=1.0, 1..30), params in params_strategy()) {
        for v in [Variant::Greedy, Variant::Conservative] {
            let r = select(v, &pool_of(&ps), &params);
            prop_assert!(!r.chosen.is_empty());
            prop_assert_eq!(&r.chosen[0], &top_member(&ps));
            prop_assert!((0.0..=1.0).contains(&r.p_hat_yes));
            prop_assert_eq!(r.u_total, r.u_epis + r.beta * r.u_alea);
        }
    }

    #[test]
    fn permutation_invariant(ps in distinct_confidence_pool(12), params in params_strategy(), seed in any::<u64>()) {
        let members: Vec<Member> = ps.iter().enumerate()
            .map(|(i, &p)| Member::new(format!("s{i}"), BinaryDist::new(p).unwrap()))
            .collect();
        let mut shuffled = members.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = PredictionPool::new("x", members, None).unwrap();
        let b = PredictionPool::new("x", shuffled, None).unwrap();
        for v in [Variant::Greedy, Variant::Conservative] {
            let (ra, rb) = (select(v, &a, &params), select(v, &b, &params));
            let mut ca = ra.chosen.clone();
            let mut cb = rb.chosen.clone();
            ca.sort();
            cb.sort();
            prop_assert_eq!(ca, cb);
            prop_assert!((ra.p_hat_yes - rb.p_hat_yes).abs() < 1e-12);
            prop_assert!((ra.u_epis - rb.u_epis).abs() < 1e-12);
            prop_assert!((ra.u_alea - rb.u_alea).abs() < 1e-12);
        }
    }

    #[test]
    fn label_flip_symmetry(ps in distinct_confidence_pool(12), params in params_strategy()) {
        let flipped: Vec<f64> = ps.iter().map(|p| 1.0 - p).collect();
        for v in [Variant::Greedy, Variant::Conservative] {
            let a = select(v, &pool_of(&ps), &params);
            let b = select(v, &pool_of(&flipped), &params);
            prop_assert_eq!(&a.chosen, &b.chosen);
            prop_assert!((a.p_hat_yes - (1.0 - b.p_hat_yes)).abs() < 1e-9);
        }
    }

    #[test]
    fn greedy_accepted_steps_respect_tolerance(ps in proptest::collection::vec(0.0f64..=1.0, 1..40), params in params_strategy()) {
        let r = muse_greedy(&pool_of(&ps), &params).unwrap();
        let mut prev = 0.0;
        for (t, step) in r.trace.iter().enumerate() {
            let size = t + 2;
            if step.accepted {
                if size >= params.m_min {
                    prop_assert!(step.u_epis - prev <= params.eps_tol);
                }
                prev = step.u_epis;
            } else {
                prop_assert_eq!(t, r.trace.len() - 1, "only the last visit can be a rejection");
            }
        }
    }

    #[test]
    fn identical_members_select_all(p in 0.0f64..=1.0, n in 1usize..30, params in params_strategy()) {
        let r = muse_greedy(&pool_of(&vec![p; n]), &params).unwrap();
        prop_assert_eq!(r.chosen.len(), n);
        prop_assert_eq!(r.u_epis, 0.0);
    }

    #[test]
    fn replay_equivalence(ps in proptest::collection::vec(0.0f64..=1.0, 1..=8), params in params_strategy()) {
        let rp = ReplayParams {
            beta: params.beta,
            eps_tol: params.eps_tol,
            tau: params.tau,
            m_min: params.m_min,
            square: params.square_jsd,
            weighted: params.aggregation == Aggregation::AleatoricWeighted,
        };
        let pool = pool_of(&ps);
        for v in [Variant::Greedy, Variant::Conservative] {
            let got = select(v, &pool, &params);
            let want = replay(&ps, v, &rp);
            let ids: Vec<String> = want.chosen.iter().map(|i| format!("s{i}")).collect();
            prop_assert_eq!(&got.chosen, &ids);
            prop_assert!((got.p_hat_yes - want.p_hat).abs() < 1e-12);
            prop_assert!((got.u_total - want.u_total).abs() < 1e-12);
        }
    }

    #[test]
    fn aggregation_is_convex(ps in proptest::collection::vec(0.0f64..=1.0, 1..30)) {
        let dists: Vec<BinaryDist> = ps.iter().map(|&p| BinaryDist::new(p).unwrap()).collect();
        let lo = ps.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for s in [Aggregation::Mean, Aggregation::AleatoricWeighted] {
            let p = aggregate(&dists, s).p_yes();
            prop_assert!(lo <= p && p <= hi);
        }
    }
}

#[test]
fn m_min_above_pool_size_takes_everything() {
    let ps = [0.95, 0.05, 0.5, 0.7];
    let params = MuseParams { m_min: 10, eps_tol: 0.0, tau: 1.0, ..Default::default() };
    for v in [Variant::Greedy, Variant::Conservative] {
        let r = select(v, &pool_of(&ps), &params);
        assert_eq!(r.chosen.len(), 4);
        assert!(r.m_min_unreachable);
    }
}
