//! Property tests for invariants that must hold on every input.

use proptest::prelude::*;

use netdiff::fdr::{run_baseline_test, threshold_search};
use netdiff::gap::{
    adjust_pvalues, bh_procedure, build_grid, group_weights, run_enhanced_test, scan_candidates,
    GapConfig, GroupPartition,
};
use netdiff::global::run_global_test;
use netdiff::harness::{
    emit_reports, parse_reports, ReplicationRecord, ReplicationReport, ReportFormat,
};
use netdiff::netdata::{
    decode_binary, encode_binary, link_count, Group, LinkIndexMap, NetworkSampleStack,
};
use netdiff::simgen::{generate_scenario, Family, ScenarioSpec};
use netdiff::stats::{link_summaries, two_sided_pvalues, LinkStatistics};
use netdiff::Method;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 128,
        ..ProptestConfig::default()
    }
}

/// Values on a dyadic grid so sums, means and squares are exact in binary.
fn dyadic_stack(p: usize, n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    let q = link_count(p);
    prop::collection::vec(
        prop::collection::vec((-64i32..64).prop_map(|k| k as f64 / 8.0), q),
        n,
    )
}

fn stack_pair() -> impl Strategy<Value = (usize, Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    (
        3usize..7,
        prop::sample::select(vec![2usize, 4, 8, 16]),
        prop::sample::select(vec![2usize, 4, 8]),
    )
        .prop_flat_map(|(p, n1, n2)| (Just(p), dyadic_stack(p, n1), dyadic_stack(p, n2)))
}

fn stats_of(p: usize, s1: &[Vec<f64>], s2: &[Vec<f64>]) -> Option<LinkStatistics> {
    let a = NetworkSampleStack::from_links(Group::First, p, s1.to_vec()).unwrap();
    let b = NetworkSampleStack::from_links(Group::Second, p, s2.to_vec()).unwrap();
    // zero variance with unequal means has no statistic
    LinkStatistics::compute(&a, &b).ok()
}

fn statistics(max_q: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(
        prop_oneof![
            3 => -3.0f64..3.0,
            1 => 2.0f64..8.0,
            1 => -8.0f64..-2.0,
        ],
        3..max_q,
    )
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn flatten_round_trip(p in 2usize..=20) {
        let map = LinkIndexMap::new(p).unwrap();
        prop_assert_eq!(map.q(), p * (p - 1) / 2);
        for k in 0..map.q() {
            let (i, j) = map.unflatten(k).unwrap();
            prop_assert!(i < j && j < p);
            prop_assert_eq!(map.flatten(i, j), Some(k));
            prop_assert_eq!(map.flatten(j, i), Some(k));
        }
        prop_assert_eq!(map.unflatten(map.q()), None);
    }

    #[test]
    fn binary_round_trip_is_bit_exact(
        p in 2usize..8,
        n in 2usize..5,
        bits in prop::collection::vec(any::<u64>(), 200),
    ) {
        let q = link_count(p);
        let mut it = bits.iter().cycle();
        let samples: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..q)
                    .map(|_| {
                        let v = f64::from_bits(*it.next().unwrap());
                        if v.is_finite() { v } else { 0.5 }
                    })
                    .collect()
            })
            .collect();
        let stack = NetworkSampleStack::from_links(Group::First, p, samples).unwrap();
        let back = decode_binary(&encode_binary(&stack), Group::First).unwrap();
        let same = back.as_flat().iter().zip(stack.as_flat()).all(|(a, b)| a.to_bits() == b.to_bits());
        prop_assert!(same);
        prop_assert_eq!(back.n(), n);
    }

    #[test]
    fn swapping_groups_negates_t((p, s1, s2) in stack_pair()) {
        let a = NetworkSampleStack::from_links(Group::First, p, s1).unwrap();
        let b = NetworkSampleStack::from_links(Group::Second, p, s2).unwrap();
        if let (Ok(fwd), Ok(rev)) = (LinkStatistics::compute(&a, &b), LinkStatistics::compute(&b, &a)) {
            for k in 0..fwd.t.len() {
                prop_assert_eq!(fwd.t[k], -rev.t[k]);
                prop_assert_eq!(fwd.pvalue[k], rev.pvalue[k]);
            }
        }
    }

    #[test]
    fn common_shift_leaves_t_unchanged((p, s1, s2) in stack_pair(), c in -16i32..16) {
        let shift = |s: &[Vec<f64>]| -> Vec<Vec<f64>> {
            s.iter().map(|r| r.iter().map(|x| x + c as f64).collect()).collect()
        };
        if let (Some(base), Some(moved)) = (stats_of(p, &s1, &s2), stats_of(p, &shift(&s1), &shift(&s2))) {
            prop_assert_eq!(&base.t, &moved.t);
            prop_assert_eq!(&base.pvalue, &moved.pvalue);
            prop_assert_eq!(&base.summaries.v1, &moved.summaries.v1);
            prop_assert_eq!(&base.summaries.v2, &moved.summaries.v2);
        }
    }

    #[test]
    fn positive_scale_leaves_t_and_a_unchanged((p, s1, s2) in stack_pair(), e in -3i32..4) {
        let c = 2f64.powi(e);
        let scale = |s: &[Vec<f64>]| -> Vec<Vec<f64>> {
            s.iter().map(|r| r.iter().map(|x| x * c).collect()).collect()
        };
        if let (Some(base), Some(scaled)) = (stats_of(p, &s1, &s2), stats_of(p, &scale(&s1), &scale(&s2))) {
            for k in 0..base.t.len() {
                prop_assert_eq!(base.t[k], scaled.t[k]);
                prop_assert_eq!(base.pvalue[k], scaled.pvalue[k]);
                if !base.degenerate[k] {
                    prop_assert_eq!(base.a[k], scaled.a[k]);
                }
            }
        }
    }

    #[test]
    fn global_decision_duality(t in statistics(400), alpha in 0.001f64..0.5) {
        let r = run_global_test(&t, alpha, t.len()).unwrap();
        prop_assert_eq!(r.reject, r.pvalue <= alpha);
        prop_assert_eq!(r.m_n >= r.critical_value, r.reject);
    }

    #[test]
    fn baseline_is_monotone_in_alpha(t in statistics(400), lo in 0.001f64..0.2, gap in 0.0f64..0.3) {
        let q = t.len();
        let small = run_baseline_test(&t, lo, q).unwrap().rejected;
        let large = run_baseline_test(&t, lo + gap, q).unwrap().rejected;
        prop_assert!(small.iter().all(|k| large.contains(k)));
    }

    #[test]
    fn baseline_is_permutation_equivariant(t in statistics(300), seed in any::<u64>()) {
        let q = t.len();
        let mut order: Vec<usize> = (0..q).collect();
        let mut state = seed;
        for i in (1..q).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (state >> 33) as usize % (i + 1));
        }
        let permuted: Vec<f64> = order.iter().map(|&k| t[k]).collect();
        let base = run_baseline_test(&t, 0.05, q).unwrap();
        let perm = run_baseline_test(&permuted, 0.05, q).unwrap();
        prop_assert_eq!(base.threshold, perm.threshold);
        let mut mapped: Vec<usize> = perm.rejected.iter().map(|&i| order[i]).collect();
        mapped.sort_unstable();
        prop_assert_eq!(mapped, base.rejected);
    }

    #[test]
    fn baseline_rejects_at_threshold(t in statistics(300), alpha in 0.01f64..0.3) {
        let q = t.len();
        let r = run_baseline_test(&t, alpha, q).unwrap();
        prop_assert_eq!(r.threshold, threshold_search(&t, alpha, q).unwrap());
        let expect: Vec<usize> = (0..q).filter(|&k| t[k].abs() >= r.threshold).collect();
        prop_assert_eq!(&r.rejected, &expect);
        if r.threshold < netdiff::fdr::max_threshold(q) {
            prop_assert!(r.estimated_fdp.unwrap() <= alpha);
        }
    }

    #[test]
    fn partition_is_complete(
        a in prop::collection::vec(-5.0f64..5.0, 1..200),
        mut cuts in prop::collection::vec(-6.0f64..6.0, 0..4),
    ) {
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let p = vec![0.5; a.len()];
        let part = GroupPartition::build(&a, &p, &cuts, &GapConfig::default()).unwrap();
        prop_assert_eq!(part.groups.len(), cuts.len() + 1);
        let mut seen = vec![0u8; a.len()];
        for (g, members) in part.groups.iter().enumerate() {
            for &i in members {
                seen[i] += 1;
                let lower = if g == 0 { f64::NEG_INFINITY } else { cuts[g - 1] };
                let upper = cuts.get(g).copied().unwrap_or(f64::INFINITY);
                prop_assert!(lower < a[i] && a[i] <= upper);
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        let total: f64 = part.sizes.iter().zip(&part.weights).map(|(&n, &w)| n as f64 * w).sum();
        prop_assert!((total - a.len() as f64).abs() <= 1e-9 * a.len() as f64);
    }

    #[test]
    fn uniform_proportions_give_unit_weights(
        sizes in prop::collection::vec(1usize..50, 1..5),
        pi in 1e-5f64..0.99999,
    ) {
        let w = group_weights(&sizes, &vec![pi; sizes.len()]);
        prop_assert!(w.iter().all(|&x| (x - 1.0).abs() <= 1e-12));
    }

    #[test]
    fn scanned_candidates_match_direct_evaluation(t in statistics(160), noise in prop::collection::vec(-1.0f64..1.0, 160)) {
        let q = t.len();
        let a: Vec<f64> = t.iter().zip(&noise).map(|(x, e)| 2.0 + x.abs() + e).collect();
        let p = two_sided_pvalues(&t);
        let cfg = GapConfig::default();
        let grid = build_grid(&a, &cfg).unwrap();
        let mut best = 0;
        let mut result = Ok(());
        scan_candidates(&a, &p, &grid, &cfg, |c| {
            if result.is_err() {
                return;
            }
            best = best.max(c.rejections);
            let part = GroupPartition::build(&a, &p, &c.lambdas, &cfg).unwrap();
            let direct = bh_procedure(&adjust_pvalues(&p, &part.link_weights()), cfg.alpha).rejected.len();
            let total: f64 = c.sizes.iter().zip(&c.weights).map(|(&n, &w)| n as f64 * w).sum();
            if direct != c.rejections || part.sizes != c.sizes {
                result = Err(format!("candidate {:?}: scan {} direct {}", c.lambdas, c.rejections, direct));
            } else if (total - q as f64).abs() > 1e-9 * q as f64 {
                result = Err(format!("weights sum to {total}, q = {q}"));
            }
        }).unwrap();
        prop_assert!(result.is_ok(), "{}", result.unwrap_err());
        let enhanced = run_enhanced_test(&t, &a, &cfg).unwrap();
        prop_assert_eq!(enhanced.n_rejections(), best);
    }

    #[test]
    fn single_group_equals_bh(t in statistics(300), a in prop::collection::vec(-2.0f64..9.0, 300)) {
        let a = &a[..t.len()];
        let cfg = GapConfig { k_groups: 1, ..GapConfig::default() };
        let enhanced = run_enhanced_test(&t, a, &cfg).unwrap();
        prop_assert_eq!(enhanced.rejected, bh_procedure(&two_sided_pvalues(&t), cfg.alpha).rejected);
    }

    #[test]
    fn bh_rejects_a_prefix(p in prop::collection::vec(0.0f64..=1.0, 1..80), alpha in 0.001f64..0.5) {
        let out = bh_procedure(&p, alpha);
        prop_assert!(out.rejected.len() >= out.tau);
        if let Some(c) = out.cutoff {
            prop_assert!(p.iter().enumerate().all(|(i, &x)| (x <= c) == out.rejected.contains(&i)));
        } else {
            prop_assert!(out.rejected.is_empty());
        }
    }

    #[test]
    fn report_round_trip(
        records in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0, 0usize..3000, -1e3f64..1e3), 1..12),
        seed in any::<u64>(),
    ) {
        let spec = ScenarioSpec::new(Family::Poisson, 9, 5, 4, seed);
        let records: Vec<ReplicationRecord> = records
            .into_iter()
            .enumerate()
            .map(|(i, (fdp, power, n_rejections, threshold))| ReplicationRecord {
                index: i as u64,
                fdp,
                power,
                n_rejections,
                threshold,
            })
            .collect();
        let report = ReplicationReport::from_records(spec, Method::Enhanced, 0.05, Some(GapConfig::default()), 0, records).unwrap();
        let mean: f64 = report.per_replication.iter().map(|r| r.fdp).sum::<f64>() / report.n_replications as f64;
        prop_assert!((report.empirical_fdr - 100.0 * mean).abs() <= 1e-9);
        for format in [ReportFormat::Tsv, ReportFormat::Jsonl] {
            let text = emit_reports(std::slice::from_ref(&report), format).unwrap();
            let back = parse_reports(&text, format).unwrap();
            prop_assert_eq!(&back, std::slice::from_ref(&report));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn scenarios_are_deterministic_and_symmetric(
        family in prop::sample::select(Family::ALL.to_vec()),
        seed in any::<u64>(),
        rep in 0u64..1000,
    ) {
        let spec = ScenarioSpec::new(family, 9, 6, 8, seed);
        let a = generate_scenario(&spec, rep).unwrap();
        let b = generate_scenario(&spec, rep).unwrap();
        prop_assert_eq!(a.stack1.as_flat(), b.stack1.as_flat());
        prop_assert_eq!(a.stack2.as_flat(), b.stack2.as_flat());
        prop_assert_eq!(&a.truth.h1_set, &b.truth.h1_set);
        let sizes = spec.support_sizes();
        prop_assert_eq!(a.truth.first_only.len(), sizes.first_only);
        prop_assert_eq!(a.truth.second_only.len(), sizes.second_only);
        prop_assert_eq!(a.truth.shared.len(), sizes.shared);
        // every sample rebuilt as a full matrix passes strict validation
        let matrices: Vec<_> = (0..a.stack1.n()).map(|l| a.stack1.matrix(l)).collect();
        let rebuilt = NetworkSampleStack::from_matrices(Group::First, &matrices).unwrap();
        prop_assert_eq!(rebuilt.as_flat(), a.stack1.as_flat());
        prop_assert!(link_summaries(&a.stack1, &a.stack2).is_ok());
    }
}
