//! Delay bounds and the choice of the subset `M`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::time::{Duration, Instant};

use num::traits::{Num, Signed, Zero};
use thiserror::Error;

use crate::bounds::{
    iwrr_bsp_params, iwrr_curve, iwrr_m_curve, wrr_bsp_params, wrr_linear_curve, wrr_m_curve,
    wrr_stair_curve, BoundsError, BspParams,
};
use crate::curve::{burst_instant_delay, horizontal_deviation, Curve, Delay, Piece, Tail};
use crate::num::{to_f64, Rational};
use crate::scenario::{AggregateService, Scenario};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheduler {
    WrrStair,
    WrrLinear,
    Iwrr,
    WrrM,
    IwrrM,
}

impl Scheduler {
    pub const ALL: [Scheduler; 5] = [
        Scheduler::WrrLinear,
        Scheduler::WrrStair,
        Scheduler::Iwrr,
        Scheduler::WrrM,
        Scheduler::IwrrM,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Scheduler::WrrStair => "wrr_stair",
            Scheduler::WrrLinear => "wrr_linear",
            Scheduler::Iwrr => "iwrr",
            Scheduler::WrrM => "wrr_m",
            Scheduler::IwrrM => "iwrr_m",
        }
    }

    pub fn is_subset_variant(self) -> bool {
        matches!(self, Scheduler::WrrM | Scheduler::IwrrM)
    }
}

impl fmt::Display for Scheduler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Which delay a bound reports.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Convention {
    /// `h(α, β)`, the sound worst-case bound; infinite when the flow of
    /// interest can outpace its leftover service.
    #[default]
    HorizontalDeviation,
    /// The virtual delay of the initial burst, `lim_{t→0+} d(t)`. For a
    /// token bucket against a rate-latency curve this is `T + b/R`
    /// whatever the rates.
    BurstInstant,
}

impl Convention {
    pub fn delay(self, alpha: &Curve, beta: &Curve) -> Delay {
        match self {
            Convention::HorizontalDeviation => horizontal_deviation(alpha, beta),
            Convention::BurstInstant => burst_instant_delay(alpha, beta),
        }
    }
}

/// Number type used to rank subsets before the exact recomputation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Arithmetic {
    #[default]
    Exact,
    Float,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SearchError {
    #[error("the flow of interest has no arrival curve")]
    FoiUnconstrained,
    #[error("{combinations} subset choices exceed the limit of 2^{limit}; use the greedy heuristic")]
    TooManySubsets { combinations: u128, limit: u32 },
    #[error("{0} is not a subset variant")]
    NotSubsetVariant(Scheduler),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
}

#[derive(Clone, Debug)]
pub struct DelayBoundResult {
    pub scheduler: Scheduler,
    /// Sorted 0-based flow indices; empty for the state-of-the-art curves.
    pub subset: Vec<usize>,
    pub bound: Delay,
    pub curve: Curve,
    pub subsets_evaluated: u64,
    pub wall_time: Duration,
}

/// Both outcomes of an exhaustive search.
#[derive(Clone, Debug)]
pub struct ExhaustiveResult {
    /// `min_M h(α, β_M)`.
    pub per_subset: DelayBoundResult,
    /// `h(α, max_M β_M)`.
    pub max_curve: DelayBoundResult,
}

/// `h(α, β)`.
pub fn delay_bound(alpha: &Curve, beta: &Curve) -> Delay {
    horizontal_deviation(alpha, beta)
}

fn foi_arrival(s: &Scenario) -> Result<Curve, SearchError> {
    s.foi_flow().arrival_curve().ok_or(SearchError::FoiUnconstrained)
}

/// Bound from one of the traffic-agnostic curves.
pub fn state_of_the_art(
    s: &Scenario,
    scheduler: Scheduler,
    convention: Convention,
) -> Result<DelayBoundResult, SearchError> {
    let start = Instant::now();
    let alpha = foi_arrival(s)?;
    let curve = match scheduler {
        Scheduler::WrrStair => wrr_stair_curve(s)?,
        Scheduler::WrrLinear => wrr_linear_curve(s)?,
        Scheduler::Iwrr => iwrr_curve(s)?,
        other => return Err(SearchError::NotSubsetVariant(other)),
    };
    Ok(DelayBoundResult {
        scheduler,
        subset: Vec::new(),
        bound: convention.delay(&alpha, &curve),
        curve,
        subsets_evaluated: 1,
        wall_time: start.elapsed(),
    })
}

pub fn subset_curve(s: &Scenario, variant: Scheduler, m: &[usize]) -> Result<Curve, SearchError> {
    match variant {
        Scheduler::WrrM => Ok(wrr_m_curve(s, m)?),
        Scheduler::IwrrM => Ok(iwrr_m_curve(s, m)?),
        other => Err(SearchError::NotSubsetVariant(other)),
    }
}

fn params_for(s: &Scenario, variant: Scheduler) -> Vec<BspParams> {
    match variant {
        Scheduler::IwrrM => {
            let (a, b) = iwrr_bsp_params(s, s.foi());
            vec![a, b]
        }
        _ => vec![wrr_bsp_params(s, s.foi())],
    }
}

/// Flows outside the flow of interest, split into those that must be in
/// `M` and classes of interchangeable flows.
#[derive(Clone, Debug)]
pub struct FlowGroups {
    pub forced: Vec<usize>,
    pub groups: Vec<Vec<usize>>,
}

impl FlowGroups {
    pub fn of(s: &Scenario) -> FlowGroups {
        let mut forced = Vec::new();
        let mut by_key: BTreeMap<(u64, Rational, Rational, Rational, Rational), Vec<usize>> =
            BTreeMap::new();
        for k in s.cross_flows() {
            let f = &s.flows()[k];
            match &f.arrival {
                None => forced.push(k),
                Some(a) => by_key
                    .entry((
                        f.weight,
                        f.l_min.clone(),
                        f.l_max.clone(),
                        a.rate.clone(),
                        a.burst.clone(),
                    ))
                    .or_default()
                    .push(k),
            }
        }
        let mut groups: Vec<Vec<usize>> = by_key.into_values().collect();
        groups.sort();
        FlowGroups { forced, groups }
    }

    /// Number of distinct subset choices up to exchanging equal flows.
    pub fn combinations(&self) -> u128 {
        self.groups
            .iter()
            .map(|g| g.len() as u128 + 1)
            .fold(1u128, |a, b| a.saturating_mul(b))
    }

    /// Lexicographically smallest subset with `counts[g]` members taken
    /// from group `g`.
    pub fn subset(&self, foi: usize, counts: &[usize]) -> Vec<usize> {
        let mut m = vec![foi];
        m.extend(&self.forced);
        for (g, &c) in self.groups.iter().zip(counts) {
            m.extend(&g[..c]);
        }
        m.sort_unstable();
        m
    }
}

/// Per-flow quantities of the closed forms, in the ranking number type.
#[derive(Clone, Debug)]
struct Terms<T> {
    rate: T,
    burst: T,
    phi: Vec<T>,
    penalty: Vec<T>,
}

trait Field: Num + PartialOrd + Clone + fmt::Debug {
    fn from_rational(r: &Rational) -> Self;
}

impl Field for Rational {
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
}

impl Field for f64 {
    fn from_rational(r: &Rational) -> Self {
        to_f64(r)
    }
}

/// Closed-form evaluation of subset bounds for a constant-rate server.
struct FastEval<T> {
    capacity: T,
    alpha_rate: T,
    alpha_burst: T,
    params: usize,
    foi_phi: Vec<T>,
    base: Terms<T>,
    groups: Vec<Terms<T>>,
    sizes: Vec<usize>,
    convention: Convention,
}

/// Running sums for one subset: outside rate and burst, and the inside
/// weight and penalty per parameter set.
#[derive(Clone, Debug)]
struct Sums<T> {
    rate_out: T,
    burst_out: T,
    phi_in: Vec<T>,
    penalty_in: Vec<T>,
}

impl<T: Field> FastEval<T> {
    fn new(s: &Scenario, fg: &FlowGroups, variant: Scheduler, convention: Convention) -> Option<Self> {
        let AggregateService::ConstantRate(c) = s.server() else {
            return None;
        };
        let a = s.foi_flow().arrival.as_ref()?;
        let params = params_for(s, variant);
        let conv = T::from_rational;
        let terms = |k: usize| {
            let f = &s.flows()[k];
            let (rate, burst) = f
                .arrival
                .as_ref()
                .map_or((T::zero(), T::zero()), |a| (conv(&a.rate), conv(&a.burst)));
            Terms {
                rate,
                burst,
                phi: params.iter().map(|p| conv(&p.phi[k])).collect(),
                penalty: params.iter().map(|p| conv(&p.penalty[k])).collect(),
            }
        };
        let mut base = Terms {
            rate: T::zero(),
            burst: T::zero(),
            phi: vec![T::zero(); params.len()],
            penalty: vec![T::zero(); params.len()],
        };
        for &k in &fg.forced {
            let t = terms(k);
            for p in 0..params.len() {
                base.phi[p] = base.phi[p].clone() + t.phi[p].clone();
                base.penalty[p] = base.penalty[p].clone() + t.penalty[p].clone();
            }
        }
        Some(FastEval {
            capacity: conv(c),
            alpha_rate: conv(&a.rate),
            alpha_burst: conv(&a.burst),
            params: params.len(),
            foi_phi: params.iter().map(|p| conv(&p.phi[s.foi()])).collect(),
            base,
            groups: fg.groups.iter().map(|g| terms(g[0])).collect(),
            sizes: fg.groups.iter().map(Vec::len).collect(),
            convention,
        })
    }

    /// Sums for `M = {i} ∪ forced`.
    fn empty_sums(&self) -> Sums<T> {
        let mut rate_out = T::zero();
        let mut burst_out = T::zero();
        for (g, &size) in self.groups.iter().zip(&self.sizes) {
            for _ in 0..size {
                rate_out = rate_out + g.rate.clone();
                burst_out = burst_out + g.burst.clone();
            }
        }
        Sums {
            rate_out,
            burst_out,
            phi_in: (0..self.params)
                .map(|p| self.foi_phi[p].clone() + self.base.phi[p].clone())
                .collect(),
            penalty_in: self.base.penalty.clone(),
        }
    }

    fn with_group_member(&self, sums: &Sums<T>, g: usize, add: bool) -> Sums<T> {
        let t = &self.groups[g];
        let mut out = sums.clone();
        let step = |x: T, d: &T| if add { x + d.clone() } else { x - d.clone() };
        out.rate_out = if add {
            out.rate_out - t.rate.clone()
        } else {
            out.rate_out + t.rate.clone()
        };
        out.burst_out = if add {
            out.burst_out - t.burst.clone()
        } else {
            out.burst_out + t.burst.clone()
        };
        for p in 0..self.params {
            out.phi_in[p] = step(out.phi_in[p].clone(), &t.phi[p]);
            out.penalty_in[p] = step(out.penalty_in[p].clone(), &t.penalty[p]);
        }
        out
    }

    /// `(R, T)` per parameter set; `None` for a zero residual.
    fn terms(&self, sums: &Sums<T>) -> Vec<Option<(T, T)>> {
        let residual = self.capacity.clone() - sums.rate_out.clone();
        (0..self.params)
            .map(|p| {
                if residual <= T::zero() {
                    return None;
                }
                let rate = self.foi_phi[p].clone() / sums.phi_in[p].clone() * residual.clone();
                let latency =
                    (sums.burst_out.clone() + sums.penalty_in[p].clone()) / residual.clone();
                Some((rate, latency))
            })
            .collect()
    }

    /// Delay of a token bucket against the max of rate-latency curves;
    /// `None` is infinite.
    fn delay(&self, sums: &Sums<T>) -> Option<T> {
        closed_form_delay(
            &self.terms(sums),
            &self.alpha_rate,
            &self.alpha_burst,
            self.convention,
        )
    }
}

/// Delay of `γ_{r,b}` against `max_k β_{R_k, T_k}`.
fn closed_form_delay<T: Field>(
    terms: &[Option<(T, T)>],
    r: &T,
    b: &T,
    convention: Convention,
) -> Option<T> {
    if r.is_zero() && b.is_zero() {
        return Some(T::zero());
    }
    let lines: Vec<(T, T)> = terms
        .iter()
        .flatten()
        .map(|(rate, lat)| {
            (
                lat.clone() + b.clone() / rate.clone(),
                r.clone() / rate.clone() - T::one(),
            )
        })
        .collect();
    if lines.is_empty() {
        return None;
    }
    let at = |t: &T| {
        lines
            .iter()
            .map(|(c, s)| c.clone() + s.clone() * t.clone())
            .reduce(|a, b| if b < a { b } else { a })
            .unwrap()
    };
    let mut best = at(&T::zero());
    if convention == Convention::HorizontalDeviation {
        if lines.iter().all(|(_, s)| *s > T::zero()) {
            return None;
        }
        for (j, (cj, sj)) in lines.iter().enumerate() {
            for (ck, sk) in &lines[j + 1..] {
                if sj == sk {
                    continue;
                }
                let t = (ck.clone() - cj.clone()) / (sj.clone() - sk.clone());
                if t > T::zero() {
                    let v = at(&t);
                    if v > best {
                        best = v;
                    }
                }
            }
        }
    }
    Some(if best < T::zero() { T::zero() } else { best })
}

fn cmp_delay<T: PartialOrd>(a: &Option<T>, b: &Option<T>) -> Ordering {
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Greater,
        (Some(_), None) => Ordering::Less,
        (Some(x), Some(y)) => x.partial_cmp(y).unwrap_or(Ordering::Equal),
    }
}

/// Visits every count vector `0 ≤ c_g ≤ |group g|` in mixed-radix order.
fn for_each_count(sizes: &[usize], mut visit: impl FnMut(&[usize], Option<(usize, bool)>)) {
    // Gray-code-like walk: each step changes one count by one, reported as
    // (group, added) so callers can update running sums.
    let n = sizes.len();
    let mut counts = vec![0usize; n];
    let mut dir = vec![true; n];
    visit(&counts, None);
    loop {
        let mut g = 0;
        while g < n {
            let can = if dir[g] { counts[g] < sizes[g] } else { counts[g] > 0 };
            if can {
                break;
            }
            dir[g] = !dir[g];
            g += 1;
        }
        if g == n {
            return;
        }
        if dir[g] {
            counts[g] += 1;
        } else {
            counts[g] -= 1;
        }
        visit(&counts, Some((g, dir[g])));
    }
}

/// Upper envelope of rate-latency curves as one exact curve.
pub fn max_of_rate_latencies(terms: &[(Rational, Rational)]) -> Curve {
    // lines y = R t − R T, plus the zero line
    let mut lines: Vec<(Rational, Rational)> = terms
        .iter()
        .filter(|(r, _)| r.is_positive())
        .map(|(r, t)| (r.clone(), -(r * t)))
        .collect();
    lines.push((Rational::zero(), Rational::zero()));
    lines.sort();
    let mut by_slope: Vec<(Rational, Rational)> = Vec::new();
    // largest intercept per slope
    for l in lines.into_iter().rev() {
        if by_slope.last().is_none_or(|p| p.0 != l.0) {
            by_slope.push(l);
        }
    }
    by_slope.reverse();
    let mut pieces: Vec<Piece> = Vec::new();
    let mut x = Rational::zero();
    let mut cur = by_slope
        .iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)))
        .cloned()
        .unwrap();
    loop {
        pieces.push(Piece::new(x.clone(), &cur.0 * &x + &cur.1, cur.0.clone()));
        let next = by_slope
            .iter()
            .filter(|l| l.0 > cur.0)
            .map(|l| ((&cur.1 - &l.1) / (&l.0 - &cur.0), l))
            .filter(|(t, _)| *t >= x)
            .min_by(|a, b| a.0.cmp(&b.0).then(b.1 .0.cmp(&a.1 .0)));
        match next {
            Some((t, l)) => {
                x = t;
                cur = l.clone();
            }
            None => break,
        }
    }
    Curve::new(Rational::zero(), pieces, Tail::Affine).expect("envelope of rate-latency curves")
}

fn check_variant(variant: Scheduler) -> Result<(), SearchError> {
    if variant.is_subset_variant() {
        Ok(())
    } else {
        Err(SearchError::NotSubsetVariant(variant))
    }
}

struct Candidate<T> {
    delay: Option<T>,
    subset: Vec<usize>,
}

fn better<T: PartialOrd>(delay: &Option<T>, subset: &[usize], best: &Candidate<T>) -> bool {
    match cmp_delay(delay, &best.delay) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => (subset.len(), subset) < (best.subset.len(), &best.subset[..]),
    }
}

fn exhaustive_fast<T: Field>(
    s: &Scenario,
    fg: &FlowGroups,
    eval: &FastEval<T>,
) -> (Vec<usize>, u64) {
    let sizes: Vec<usize> = fg.groups.iter().map(Vec::len).collect();
    let mut sums = eval.empty_sums();
    let mut best = Candidate {
        delay: eval.delay(&sums),
        subset: fg.subset(s.foi(), &vec![0; sizes.len()]),
    };
    let mut evaluated = 0u64;
    for_each_count(&sizes, |counts, step| {
        if let Some((g, added)) = step {
            sums = eval.with_group_member(&sums, g, added);
        }
        evaluated += 1;
        let d = eval.delay(&sums);
        let card = 1 + fg.forced.len() + counts.iter().sum::<usize>();
        let pre = cmp_delay(&d, &best.delay);
        if pre == Ordering::Less || (pre == Ordering::Equal && card <= best.subset.len()) {
            let subset = fg.subset(s.foi(), counts);
            if better(&d, &subset, &best) {
                best = Candidate {
                    delay: d,
                    subset,
                };
            }
        }
    });
    (best.subset, evaluated)
}

/// Exact rate-latency terms of every subset choice, for the max-curve bound.
fn all_terms(s: &Scenario, fg: &FlowGroups, variant: Scheduler, convention: Convention) -> Vec<(Rational, Rational)> {
    let eval: FastEval<Rational> =
        FastEval::new(s, fg, variant, convention).expect("constant-rate server");
    let sizes: Vec<usize> = fg.groups.iter().map(Vec::len).collect();
    let mut sums = eval.empty_sums();
    let mut out = Vec::new();
    for_each_count(&sizes, |_, step| {
        if let Some((g, added)) = step {
            sums = eval.with_group_member(&sums, g, added);
        }
        out.extend(eval.terms(&sums).into_iter().flatten());
    });
    out
}

/// Minimum over subsets `M ∋ i` of the per-subset bound, and the bound of
/// the maximum of all subset curves.
pub fn exhaustive_best(
    s: &Scenario,
    variant: Scheduler,
    n_limit: u32,
    convention: Convention,
    arithmetic: Arithmetic,
) -> Result<ExhaustiveResult, SearchError> {
    check_variant(variant)?;
    let start = Instant::now();
    let alpha = foi_arrival(s)?;
    let fg = FlowGroups::of(s);
    let combinations = fg.combinations();
    if n_limit < 127 && combinations > 1u128 << n_limit {
        return Err(SearchError::TooManySubsets {
            combinations,
            limit: n_limit,
        });
    }
    let fast = matches!(s.server(), AggregateService::ConstantRate(_));
    let (subset, evaluated, envelope) = if fast {
        let (subset, evaluated) = match arithmetic {
            Arithmetic::Exact => exhaustive_fast::<Rational>(
                s,
                &fg,
                &FastEval::new(s, &fg, variant, convention).expect("constant-rate server"),
            ),
            Arithmetic::Float => exhaustive_fast::<f64>(
                s,
                &fg,
                &FastEval::new(s, &fg, variant, convention).expect("constant-rate server"),
            ),
        };
        let envelope = max_of_rate_latencies(&all_terms(s, &fg, variant, convention));
        (subset, evaluated, envelope)
    } else {
        exhaustive_curves(s, &fg, variant, convention, &alpha)?
    };
    let curve = subset_curve(s, variant, &subset)?;
    let per_subset = DelayBoundResult {
        scheduler: variant,
        bound: convention.delay(&alpha, &curve),
        subset,
        curve,
        subsets_evaluated: evaluated,
        wall_time: start.elapsed(),
    };
    let max_curve = DelayBoundResult {
        scheduler: variant,
        subset: (0..s.n()).collect(),
        bound: convention.delay(&alpha, &envelope),
        curve: envelope,
        subsets_evaluated: evaluated,
        wall_time: start.elapsed(),
    };
    Ok(ExhaustiveResult {
        per_subset,
        max_curve,
    })
}

fn exhaustive_curves(
    s: &Scenario,
    fg: &FlowGroups,
    variant: Scheduler,
    convention: Convention,
    alpha: &Curve,
) -> Result<(Vec<usize>, u64, Curve), SearchError> {
    let sizes: Vec<usize> = fg.groups.iter().map(Vec::len).collect();
    let mut best: Option<(Delay, Vec<usize>)> = None;
    let mut envelope: Option<Curve> = None;
    let mut evaluated = 0u64;
    let mut failure = None;
    for_each_count(&sizes, |counts, _| {
        if failure.is_some() {
            return;
        }
        let subset = fg.subset(s.foi(), counts);
        let curve = match subset_curve(s, variant, &subset) {
            Ok(c) => c,
            Err(e) => {
                failure = Some(e);
                return;
            }
        };
        evaluated += 1;
        let d = convention.delay(alpha, &curve);
        let replace = match &best {
            None => true,
            Some((bd, bm)) => (&d, subset.len(), &subset) < (bd, bm.len(), bm),
        };
        if replace {
            best = Some((d, subset));
        }
        envelope = Some(match envelope.take() {
            None => curve,
            Some(e) => e.max(&curve),
        });
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let (_, subset) = best.expect("at least one subset");
    Ok((subset, evaluated, envelope.expect("at least one subset")))
}

/// The greedy search: cross-flows sorted by burst (largest first, ties by
/// index) are added to `M` one at a time and kept only when the bound
/// strictly improves.
pub fn greedy_heuristic(
    s: &Scenario,
    variant: Scheduler,
    convention: Convention,
    arithmetic: Arithmetic,
) -> Result<DelayBoundResult, SearchError> {
    check_variant(variant)?;
    let start = Instant::now();
    let alpha = foi_arrival(s)?;
    let mut order: Vec<usize> = s
        .cross_flows()
        .filter(|&k| s.flows()[k].arrival.is_some())
        .collect();
    order.sort_by(|&a, &b| {
        let ba = &s.flows()[a].arrival.as_ref().unwrap().burst;
        let bb = &s.flows()[b].arrival.as_ref().unwrap().burst;
        bb.cmp(ba).then(a.cmp(&b))
    });
    let fast = matches!(s.server(), AggregateService::ConstantRate(_));
    let (subset, evaluated) = match (fast, arithmetic) {
        (true, Arithmetic::Exact) => greedy_fast::<Rational>(s, variant, convention, &order),
        (true, Arithmetic::Float) => greedy_fast::<f64>(s, variant, convention, &order),
        (false, _) => greedy_curves(s, variant, convention, &alpha, &order)?,
    };
    let curve = subset_curve(s, variant, &subset)?;
    Ok(DelayBoundResult {
        scheduler: variant,
        bound: convention.delay(&alpha, &curve),
        subset,
        curve,
        subsets_evaluated: evaluated,
        wall_time: start.elapsed(),
    })
}

fn greedy_fast<T: Field>(
    s: &Scenario,
    variant: Scheduler,
    convention: Convention,
    order: &[usize],
) -> (Vec<usize>, u64) {
    // every flow is its own group so that sums track single flows
    let fg = FlowGroups {
        forced: FlowGroups::of(s).forced,
        groups: order.iter().map(|&k| vec![k]).collect(),
    };
    let eval: FastEval<T> = FastEval::new(s, &fg, variant, convention).expect("constant-rate server");
    let mut sums = eval.empty_sums();
    let mut m: Vec<usize> = std::iter::once(s.foi()).chain(fg.forced.iter().copied()).collect();
    let mut d_opt: Option<T> = None;
    let mut evaluated = 0u64;
    for (g, &j) in order.iter().enumerate() {
        let trial = eval.with_group_member(&sums, g, true);
        let d = eval.delay(&trial);
        evaluated += 1;
        if cmp_delay(&d, &d_opt) == Ordering::Less {
            d_opt = d;
            sums = trial;
            m.push(j);
        }
    }
    m.sort_unstable();
    (m, evaluated)
}

fn greedy_curves(
    s: &Scenario,
    variant: Scheduler,
    convention: Convention,
    alpha: &Curve,
    order: &[usize],
) -> Result<(Vec<usize>, u64), SearchError> {
    let mut m: Vec<usize> = std::iter::once(s.foi())
        .chain(FlowGroups::of(s).forced)
        .collect();
    let mut d_opt = Delay::Infinite;
    let mut evaluated = 0u64;
    for &j in order {
        let mut trial = m.clone();
        trial.push(j);
        trial.sort_unstable();
        let d = convention.delay(alpha, &subset_curve(s, variant, &trial)?);
        evaluated += 1;
        if d < d_opt {
            d_opt = d;
            m = trial;
        }
    }
    m.sort_unstable();
    Ok((m, evaluated))
}

/// Bound of one given subset.
pub fn subset_bound(
    s: &Scenario,
    variant: Scheduler,
    m: &[usize],
    convention: Convention,
) -> Result<DelayBoundResult, SearchError> {
    let start = Instant::now();
    let alpha = foi_arrival(s)?;
    let mut subset = m.to_vec();
    subset.sort_unstable();
    subset.dedup();
    let curve = subset_curve(s, variant, &subset)?;
    Ok(DelayBoundResult {
        scheduler: variant,
        bound: convention.delay(&alpha, &curve),
        subset,
        curve,
        subsets_evaluated: 1,
        wall_time: start.elapsed(),
    })
}

/// Closed-form rank of one subset, exposed for cross-checking against the
/// curve computation.
pub fn closed_form_subset_delay(
    s: &Scenario,
    variant: Scheduler,
    m: &[usize],
    convention: Convention,
) -> Result<Delay, SearchError> {
    check_variant(variant)?;
    crate::bounds::membership(s, m)?;
    foi_arrival(s)?;
    let fg = FlowGroups {
        forced: FlowGroups::of(s).forced,
        groups: s
            .cross_flows()
            .filter(|&k| s.flows()[k].arrival.is_some())
            .map(|k| vec![k])
            .collect(),
    };
    let eval: FastEval<Rational> =
        FastEval::new(s, &fg, variant, convention).ok_or(BoundsError::NoClosedForm)?;
    let mut sums = eval.empty_sums();
    for (g, members) in fg.groups.iter().enumerate() {
        if m.contains(&members[0]) {
            sums = eval.with_group_member(&sums, g, true);
        }
    }
    Ok(match eval.delay(&sums) {
        Some(d) => Delay::Finite(d),
        None => Delay::Infinite,
    })
}
