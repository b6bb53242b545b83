mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use repaint_core::approximator::{Action, ActionDistribution, Checkpoint};
use repaint_core::envs::cosine_similarity;
use repaint_core::ppo::{clip_ratio, clipped_term};
use repaint_core::rollout::{gae_from_values, GaeConfig, Policy};
use repaint_core::transfer::{gradient_diagnostic, selected_indices, BetaSchedule, Schedule, SelectionRule, Slot};
use repaint_core::TeacherPolicy;

fn finite_vec(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, len)
}

fn nonzero_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, n).prop_filter("non-zero", |v| v.iter().any(|x| x.abs() > 1e-3))
}

proptest! {
    #[test]
    fn softmax_is_a_distribution(logits in finite_vec(1..8)) {
        let d = ActionDistribution::categorical_from_logits(&logits).unwrap();
        let ActionDistribution::Categorical { probs, log_probs } = &d else { unreachable!() };
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (p, lp) in probs.iter().zip(log_probs) {
            prop_assert!(*p >= 0.0);
            prop_assert!((p.ln() - lp).abs() < 1e-9 || *p < 1e-300);
        }
        let h = d.entropy();
        prop_assert!(h >= -1e-12 && h <= (logits.len() as f64).ln() + 1e-12);
    }

    #[test]
    fn cross_entropy_bounds_entropy(a in finite_vec(4..5), b in finite_vec(4..5)) {
        let p = ActionDistribution::categorical_from_logits(&a).unwrap();
        let q = ActionDistribution::categorical_from_logits(&b).unwrap();
        // H(p || q) >= H(p), with the gap equal to KL(p || q) >= 0.
        let ce = q.cross_entropy_from(&p).unwrap();
        let kl = p.kl_to(&q).unwrap();
        prop_assert!(kl >= -1e-12);
        prop_assert!((ce - p.entropy() - kl).abs() < 1e-9);
    }

    #[test]
    fn gaussian_kl_is_non_negative(
        m1 in finite_vec(2..3), m2 in finite_vec(2..3),
        s1 in prop::collection::vec(-2.0f64..1.0, 2), s2 in prop::collection::vec(-2.0f64..1.0, 2),
    ) {
        let p = ActionDistribution::gaussian(m1, s1).unwrap();
        let q = ActionDistribution::gaussian(m2, s2).unwrap();
        prop_assert!(p.kl_to(&q).unwrap() >= -1e-12);
        prop_assert!(p.kl_to(&p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn clipped_term_matches_hand_composition(ratio in 0.0f64..3.0, adv in -5.0f64..5.0, eps in 0.05f64..0.5) {
        let clipped = ratio.max(1.0 - eps).min(1.0 + eps);
        let expected = if ratio * adv < clipped * adv { ratio * adv } else { clipped * adv };
        prop_assert!((clipped_term(ratio, adv, eps) - expected).abs() <= 1e-10);
        prop_assert!(clipped_term(ratio, adv, eps) <= ratio * adv + 1e-12);
        prop_assert_eq!(clip_ratio(ratio, eps), clipped);
    }

    #[test]
    fn gae_matches_double_sum(seed in any::<u64>(), gamma in 0.0f64..=1.0, lambda in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ep = common::Episode::random(&mut rng, 32);
        let (r, v, nv, d, t) = ep.arrays();
        let (adv, ret) = gae_from_values(&r, &v, &nv, &d, &t, GaeConfig { gamma, lambda });
        let oracle = ep.double_sum_advantages(gamma, lambda);
        for i in 0..adv.len() {
            prop_assert!((adv[i] - oracle[i]).abs() <= 1e-10);
            prop_assert!((ret[i] - adv[i] - v[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn gae_with_zero_lambda_is_td_error(seed in any::<u64>(), gamma in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ep = common::Episode::random(&mut rng, 32);
        let (r, v, nv, d, t) = ep.arrays();
        let (adv, _) = gae_from_values(&r, &v, &nv, &d, &t, GaeConfig { gamma, lambda: 0.0 });
        for i in 0..adv.len() {
            let boot = if t[i] { 0.0 } else { nv[i] };
            prop_assert!((adv[i] - (r[i] + gamma * boot - v[i])).abs() <= 1e-12);
        }
    }

    #[test]
    fn threshold_is_monotone(adv in finite_vec(0..40), z1 in -5.0f64..5.0, dz in 0.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let lo = selected_indices(&adv, SelectionRule::Threshold { zeta: z1 }, &mut rng).unwrap();
        let hi = selected_indices(&adv, SelectionRule::Threshold { zeta: z1 + dz }, &mut rng).unwrap();
        prop_assert!(hi.iter().all(|i| lo.contains(i)));
        prop_assert!(lo.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn top_fraction_keeps_the_best(adv in finite_vec(1..40), fraction in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let kept = selected_indices(&adv, SelectionRule::TopFraction { fraction }, &mut rng).unwrap();
        prop_assert_eq!(kept.len(), ((fraction * adv.len() as f64) - 1e-9).ceil().max(0.0) as usize);
        let worst_kept = kept.iter().map(|&i| adv[i]).fold(f64::INFINITY, f64::min);
        for i in 0..adv.len() {
            if !kept.contains(&i) {
                prop_assert!(adv[i] <= worst_kept);
            }
        }
    }

    #[test]
    fn abs_threshold_ignores_sign(adv in finite_vec(0..40), zeta in 0.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let neg: Vec<f64> = adv.iter().map(|a| -a).collect();
        let rule = SelectionRule::AbsThreshold { zeta };
        prop_assert_eq!(
            selected_indices(&adv, rule, &mut rng).unwrap(),
            selected_indices(&neg, rule, &mut rng).unwrap()
        );
    }

    #[test]
    fn prioritized_draws_are_reproducible(adv in finite_vec(1..40), samples in 0usize..64, seed in any::<u64>()) {
        let rule = SelectionRule::Prioritized { exponent: 1.0, samples };
        let a = selected_indices(&adv, rule, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let b = selected_indices(&adv, rule, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(a.len(), samples);
        prop_assert!(a.iter().all(|&i| i < adv.len()));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn schedule_windows_match_the_ratio(rep in 0u32..5, ins in 0u32..5, start in 1u64..100, periods in 1u64..5) {
        prop_assume!(rep + ins > 0);
        let s = Schedule::Alternating { rep_steps: rep, ins_steps: ins };
        let len = periods * u64::from(rep + ins);
        let slots: Vec<Slot> = (start..start + len).map(|k| s.slot(k).unwrap()).collect();
        let n_rep = slots.iter().filter(|x| **x == Slot::Representation).count() as u64;
        prop_assert_eq!(n_rep, periods * u64::from(rep));
        prop_assert_eq!(slots.len() as u64 - n_rep, periods * u64::from(ins));
    }

    #[test]
    fn beta_never_increases(beta0 in 0.0f64..5.0, decay in 0.0f64..=1.0, k in 1u64..200) {
        let b = BetaSchedule::new(beta0, decay).unwrap();
        prop_assert!(b.beta(k + 1) <= b.beta(k));
        prop_assert!(b.beta(k) >= 0.0);
    }

    #[test]
    fn cosine_is_bounded_symmetric_and_scale_free(w1 in nonzero_vec(4), w2 in nonzero_vec(4), c in 1e-3f64..1e3) {
        let s = cosine_similarity(&w1, &w2).unwrap();
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&s));
        prop_assert!((s - cosine_similarity(&w2, &w1).unwrap()).abs() <= 1e-12);
        let scaled: Vec<f64> = w1.iter().map(|x| c * x).collect();
        prop_assert!((s - cosine_similarity(&scaled, &w2).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn diagnostic_with_unit_a_is_squared_sum(g1 in finite_vec(6..7), g2 in finite_vec(6..7)) {
        let d = gradient_diagnostic(&g1, &g2, 1.0).unwrap();
        let sum_sq: f64 = g1.iter().zip(&g2).map(|(a, b)| (a + b) * (a + b)).sum();
        prop_assert!((d.value - sum_sq).abs() <= 1e-10 * sum_sq.max(1.0));
    }

    #[test]
    fn teacher_log_probs_are_floored(seed in any::<u64>(), floor in 1e-9f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = common::random_policy(&mut rng, common::HeadKind::Categorical, 3);
        let teacher = TeacherPolicy::new("t", net).with_floor(floor).unwrap();
        let state = [0.3, -0.2, 1.0];
        let dist = teacher.action_distribution(&state).unwrap();
        for a in 0..3 {
            let lp = teacher.behavior_log_prob(&dist, &Action::Discrete(a)).unwrap();
            prop_assert!(lp >= floor.ln());
            prop_assert_eq!(lp, dist.log_prob(&Action::Discrete(a)).unwrap().max(floor.ln()));
        }
    }

    #[test]
    fn checkpoints_round_trip_bit_exactly(seed in any::<u64>(), gaussian in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let head = if gaussian { common::HeadKind::Gaussian } else { common::HeadKind::Categorical };
        let net = common::random_policy(&mut rng, head, 3);
        let json = Checkpoint::from_policy(&net).to_json().unwrap();
        let back = Checkpoint::from_json(&json).unwrap().into_policy().unwrap();
        for s in common::random_states(&mut rng, 5, 3) {
            prop_assert_eq!(net.forward(&s).unwrap(), back.forward(&s).unwrap());
        }
    }
}
