mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wrr_nc::bounds::{wrr_linear_curve, wrr_m_curve};
use wrr_nc::curve::{horizontal_deviation, Curve, Delay, RateLatencySpec, TokenBucketSpec};
use wrr_nc::experiments::four_flow_scenario;
use wrr_nc::num::{int, ratio, Rational};
use wrr_nc::scenario::{AggregateService, FlowSpec, Scenario};
use wrr_nc::search::*;

use common::random_scenario;

const CONVENTIONS: [Convention; 2] = [Convention::HorizontalDeviation, Convention::BurstInstant];
const VARIANTS: [Scheduler; 2] = [Scheduler::WrrM, Scheduler::IwrrM];

/// Every subset containing the flow of interest.
fn all_subsets(s: &Scenario) -> Vec<Vec<usize>> {
    let cross: Vec<usize> = s.cross_flows().collect();
    (0..1u32 << cross.len())
        .map(|mask| {
            let mut m = vec![s.foi()];
            m.extend(cross.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &k)| k));
            m.sort_unstable();
            m
        })
        .collect()
}

/// Subsets that contain every unconstrained flow.
fn feasible(s: &Scenario, m: &[usize]) -> bool {
    (0..s.n()).all(|k| s.flows()[k].arrival.is_some() || m.contains(&k))
}

#[test]
fn closed_form_agrees_with_curves() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..80 {
        let n = rng.gen_range(1..=5);
        let s = random_scenario(&mut rng, n, false);
        for m in all_subsets(&s) {
            for v in VARIANTS {
                for conv in CONVENTIONS {
                    let closed = closed_form_subset_delay(&s, v, &m, conv).unwrap();
                    let curve = subset_bound(&s, v, &m, conv).unwrap().bound;
                    assert_eq!(closed, curve, "case {case} {v} {conv:?} M {m:?}");
                }
            }
        }
    }
}

#[test]
fn exhaustive_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..40 {
        let n = rng.gen_range(1..=6);
        let mut s = random_scenario(&mut rng, n, true);
        if case % 3 == 0 {
            // duplicate a cross-flow to exercise grouping
            let mut flows = s.flows().to_vec();
            let k = rng.gen_range(0..flows.len());
            flows.push(flows[k].clone());
            s = Scenario::new(flows, s.server().clone(), s.foi()).unwrap();
        }
        let alpha = s.foi_flow().arrival_curve().unwrap();
        for v in VARIANTS {
            for conv in CONVENTIONS {
                let ex = exhaustive_best(&s, v, 20, conv, Arithmetic::Exact).unwrap();
                let mut best: Option<(Delay, Vec<usize>)> = None;
                let mut envelope: Option<Curve> = None;
                for m in all_subsets(&s).into_iter().filter(|m| feasible(&s, m)) {
                    let r = subset_bound(&s, v, &m, conv).unwrap();
                    assert!(ex.per_subset.bound <= r.bound, "case {case}");
                    let key = (r.bound.clone(), m.len(), m.clone());
                    if best.as_ref().is_none_or(|(d, bm)| key < (d.clone(), bm.len(), bm.clone())) {
                        best = Some((r.bound, m));
                    }
                    envelope = Some(match envelope {
                        None => r.curve,
                        Some(e) => e.max(&r.curve),
                    });
                }
                let (d, m) = best.unwrap();
                assert_eq!(ex.per_subset.bound, d, "case {case} {v} {conv:?}");
                assert_eq!(ex.per_subset.subset, m, "case {case} {v} {conv:?}");
                let envelope = envelope.unwrap();
                assert!(ex.max_curve.curve.same_function(&envelope), "case {case} {v}");
                assert_eq!(ex.max_curve.bound, conv.delay(&alpha, &envelope));
                assert!(ex.max_curve.bound <= ex.per_subset.bound);
            }
        }
    }
}

#[test]
fn general_server_path_agrees_with_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10 {
        let n = rng.gen_range(1..=4);
        let s = random_scenario(&mut rng, n, false);
        let general = s
            .with_server(AggregateService::General {
                curve: s.server().curve(),
                convex: true,
            })
            .unwrap();
        for v in VARIANTS {
            let a = exhaustive_best(&s, v, 20, Convention::HorizontalDeviation, Arithmetic::Exact).unwrap();
            let b = exhaustive_best(&general, v, 20, Convention::HorizontalDeviation, Arithmetic::Exact)
                .unwrap();
            assert_eq!(a.per_subset.bound, b.per_subset.bound);
            assert_eq!(a.per_subset.subset, b.per_subset.subset);
            assert_eq!(a.max_curve.bound, b.max_curve.bound);
            let ga = greedy_heuristic(&s, v, Convention::HorizontalDeviation, Arithmetic::Exact).unwrap();
            let gb = greedy_heuristic(&general, v, Convention::HorizontalDeviation, Arithmetic::Exact)
                .unwrap();
            assert_eq!(ga.subset, gb.subset);
            assert_eq!(ga.bound, gb.bound);
        }
    }
}

#[test]
fn heuristic_never_beats_exhaustive() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..60 {
        let n = rng.gen_range(1..=8);
        let s = random_scenario(&mut rng, n, true);
        for v in VARIANTS {
            for conv in CONVENTIONS {
                let ex = exhaustive_best(&s, v, 20, conv, Arithmetic::Exact).unwrap();
                let h = greedy_heuristic(&s, v, conv, Arithmetic::Exact).unwrap();
                assert!(h.bound >= ex.per_subset.bound);
                assert!(h.subset.contains(&s.foi()));
                let again = greedy_heuristic(&s, v, conv, Arithmetic::Exact).unwrap();
                assert_eq!(again.subset, h.subset);
            }
        }
    }
}

#[test]
fn float_ranking_finds_the_same_optimum_on_four_flows() {
    let s = four_flow_scenario(&ratio(6, 10)).unwrap();
    for conv in CONVENTIONS {
        let exact = exhaustive_best(&s, Scheduler::WrrM, 20, conv, Arithmetic::Exact).unwrap();
        let float = exhaustive_best(&s, Scheduler::WrrM, 20, conv, Arithmetic::Float).unwrap();
        assert_eq!(exact.per_subset.subset, float.per_subset.subset);
        assert_eq!(exact.per_subset.bound, float.per_subset.bound);
        assert!(exact.per_subset.bound.to_f64() <= 0.0386416);
    }
}

#[test]
fn single_flow_uses_the_server() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let s = random_scenario(&mut rng, 1, false);
    let ex = exhaustive_best(&s, Scheduler::WrrM, 20, Convention::HorizontalDeviation, Arithmetic::Exact)
        .unwrap();
    assert_eq!(ex.per_subset.subset, vec![0]);
    let alpha = s.foi_flow().arrival_curve().unwrap();
    assert_eq!(ex.per_subset.bound, delay_bound(&alpha, &s.server().curve()));
}

#[test]
fn unconstrained_flows_are_forced_into_m() {
    let tb = TokenBucketSpec::new(int(1000), int(4000)).unwrap();
    let flows = vec![
        FlowSpec::new(2, int(100), int(300), Some(tb)),
        FlowSpec::new(3, int(200), int(400), None),
    ];
    let s = Scenario::new(flows, AggregateService::ConstantRate(int(10_000)), 0).unwrap();
    let ex = exhaustive_best(&s, Scheduler::WrrM, 20, Convention::HorizontalDeviation, Arithmetic::Exact)
        .unwrap();
    assert_eq!(ex.per_subset.subset, vec![0, 1]);
    let alpha = s.foi_flow().arrival_curve().unwrap();
    let linear = delay_bound(&alpha, &wrr_linear_curve(&s).unwrap());
    assert_eq!(ex.per_subset.bound, linear);
    assert_eq!(ex.per_subset.subsets_evaluated, 1);
}

#[test]
fn subset_limit_is_enforced() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let s = random_scenario(&mut rng, 8, false);
    let r = exhaustive_best(&s, Scheduler::WrrM, 2, Convention::HorizontalDeviation, Arithmetic::Exact);
    assert!(matches!(r, Err(SearchError::TooManySubsets { .. })));
    assert!(matches!(
        exhaustive_best(&s, Scheduler::Iwrr, 20, Convention::HorizontalDeviation, Arithmetic::Exact),
        Err(SearchError::NotSubsetVariant(_))
    ));
}

fn scaled(s: &Scenario, lambda: &Rational) -> Scenario {
    let flows = s
        .flows()
        .iter()
        .map(|f| {
            FlowSpec::new(
                f.weight,
                &f.l_min * lambda,
                &f.l_max * lambda,
                f.arrival
                    .as_ref()
                    .map(|a| TokenBucketSpec::new(&a.rate * lambda, &a.burst * lambda).unwrap()),
            )
        })
        .collect();
    let c = s.server().rate().unwrap() * lambda;
    Scenario::new(flows, AggregateService::ConstantRate(c), s.foi()).unwrap()
}

#[test]
fn scaling_bits_leaves_bounds_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..15 {
        let n = rng.gen_range(1..=5);
        let s = random_scenario(&mut rng, n, false);
        let t = scaled(&s, &ratio(7, 3));
        for v in [Scheduler::WrrLinear, Scheduler::WrrStair, Scheduler::Iwrr] {
            for conv in CONVENTIONS {
                assert_eq!(
                    state_of_the_art(&s, v, conv).unwrap().bound,
                    state_of_the_art(&t, v, conv).unwrap().bound
                );
            }
        }
        for v in VARIANTS {
            let a = exhaustive_best(&s, v, 20, Convention::HorizontalDeviation, Arithmetic::Exact).unwrap();
            let b = exhaustive_best(&t, v, 20, Convention::HorizontalDeviation, Arithmetic::Exact).unwrap();
            assert_eq!(a.per_subset.bound, b.per_subset.bound);
        }
    }
}

#[test]
fn adding_a_cross_flow_never_helps() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for _ in 0..40 {
        let n = rng.gen_range(1..=5);
        let s = random_scenario(&mut rng, n, false);
        let mut flows = s.flows().to_vec();
        let extra = random_scenario(&mut rng, 1, false).flows()[0].clone();
        flows.push(extra);
        let t = Scenario::new(flows, s.server().clone(), s.foi()).unwrap();
        for conv in CONVENTIONS {
            let a = exhaustive_best(&s, Scheduler::WrrM, 20, conv, Arithmetic::Exact).unwrap();
            let b = exhaustive_best(&t, Scheduler::WrrM, 20, conv, Arithmetic::Exact).unwrap();
            assert!(b.per_subset.bound >= a.per_subset.bound);
        }
    }
}

#[test]
fn rate_latency_envelope_matches_curve_maximum() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..100 {
        let terms: Vec<(Rational, Rational)> = (0..rng.gen_range(1..6))
            .map(|_| (int(rng.gen_range(1..=9)), ratio(rng.gen_range(0..=12), 4)))
            .collect();
        let env = max_of_rate_latencies(&terms);
        let folded = terms
            .iter()
            .map(|(r, t)| {
                Curve::rate_latency(&RateLatencySpec {
                    rate: r.clone(),
                    latency: t.clone(),
                })
                .unwrap()
            })
            .reduce(|a, b| a.max(&b))
            .unwrap();
        assert!(env.same_function(&folded), "{terms:?}");
    }
}

#[test]
fn burst_instant_is_the_closed_form_for_unstable_flows() {
    // the flow of interest alone outpaces its leftover rate
    let s = four_flow_scenario(&ratio(6, 10)).unwrap();
    let c = wrr_m_curve(&s, &[0, 1, 2, 3]).unwrap();
    let alpha = s.foi_flow().arrival_curve().unwrap();
    assert_eq!(horizontal_deviation(&alpha, &c), Delay::Infinite);
    let bi = Convention::BurstInstant.delay(&alpha, &c);
    let r = int(5_000_000) * ratio(16384, 178688);
    let expected = ratio(162304, 5_000_000) + ratio(30208, 1) / r;
    assert_eq!(bi, Delay::Finite(expected));
}
