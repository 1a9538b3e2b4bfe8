//! Simulated delays against computed bounds.

use num::traits::Zero;

use super::engine::{run, Discipline, SimResult};
use super::trace::{greedy_trace, SizePolicy};
use super::SimError;
use crate::curve::Delay;
use crate::num::{format_exact, int, Rational};
use crate::scenario::Scenario;
use crate::search::{
    exhaustive_best, greedy_heuristic, state_of_the_art, Arithmetic, Convention, DelayBoundResult,
    FlowGroups, Scheduler,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CheckStatus {
    Holds,
    Skipped(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundCheck {
    pub scheduler: Scheduler,
    pub subset: Vec<usize>,
    pub bound: Delay,
    /// `bound − observed` when the check ran.
    pub gap: Option<Rational>,
    pub status: CheckStatus,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub flow: usize,
    pub observed: Option<Rational>,
    pub checks: Vec<BoundCheck>,
}

/// 50 saturated rounds, `50 · Σ w l_max / C`.
pub fn default_horizon(s: &Scenario) -> Option<Rational> {
    let c = s.server().rate()?;
    let round: Rational = s.flows().iter().map(|f| f.quantum_max()).sum();
    Some(int(50) * round / c)
}

/// The bounds that apply to `discipline` for the flow of interest of `s`:
/// the WRR curves for both schedulers, the IWRR curves only for IWRR.
pub fn sound_bounds(
    s: &Scenario,
    discipline: Discipline,
    n_limit: u32,
) -> Result<Vec<DelayBoundResult>, SimError> {
    let conv = Convention::HorizontalDeviation;
    let exhaustive = FlowGroups::of(s).combinations() <= 1u128 << n_limit.min(127);
    let subset = |v| {
        if exhaustive {
            exhaustive_best(s, v, n_limit, conv, Arithmetic::Exact).map(|r| r.per_subset)
        } else {
            greedy_heuristic(s, v, conv, Arithmetic::Exact)
        }
    };
    let mut out = vec![
        state_of_the_art(s, Scheduler::WrrLinear, conv)?,
        state_of_the_art(s, Scheduler::WrrStair, conv)?,
        subset(Scheduler::WrrM)?,
    ];
    if discipline == Discipline::Iwrr {
        out.push(state_of_the_art(s, Scheduler::Iwrr, conv)?);
        out.push(subset(Scheduler::IwrrM)?);
    }
    Ok(out)
}

/// Checks the largest delay of `flow` against every finite bound. A bound
/// is skipped when it is infinite or when a trace it relies on breaks its
/// token bucket.
pub fn validate_bounds(
    sim: &SimResult,
    flow: usize,
    bounds: &[DelayBoundResult],
) -> Result<ValidationReport, SimError> {
    let observed = sim.max_delay.get(flow).cloned().flatten();
    let mut checks = Vec::new();
    for b in bounds {
        let relies_on = |k: usize| k == flow || (b.scheduler.is_subset_variant() && !b.subset.contains(&k));
        let broken: Vec<usize> = (0..sim.conformant.len())
            .filter(|&k| relies_on(k) && !sim.conformant[k])
            .collect();
        let status = if let Delay::Infinite = b.bound {
            CheckStatus::Skipped("infinite bound".into())
        } else if !broken.is_empty() {
            let names: Vec<String> = broken.iter().map(|k| (k + 1).to_string()).collect();
            CheckStatus::Skipped(format!("non-conformant trace of flow {}", names.join(",")))
        } else {
            CheckStatus::Holds
        };
        let mut gap = None;
        if let (CheckStatus::Holds, Delay::Finite(d)) = (&status, &b.bound) {
            let seen = observed.clone().unwrap_or_else(Rational::zero);
            if seen > *d {
                let rec = sim.flows[flow]
                    .iter()
                    .find(|r| r.delay() > *d)
                    .expect("a packet above the bound");
                let log = if sim.events.is_empty() {
                    "run with logging for the event trace".to_string()
                } else {
                    sim.events_around(rec)
                        .iter()
                        .map(|e| e.line())
                        .collect::<Vec<_>>()
                        .join("\n")
                };
                return Err(SimError::BoundViolated {
                    flow: flow + 1,
                    scheduler: b.scheduler,
                    bound: b.bound.to_string(),
                    observed: format_exact(&rec.delay()),
                    arrival: format_exact(&rec.arrival),
                    events: log,
                });
            }
            gap = Some(d - seen);
        }
        checks.push(BoundCheck {
            scheduler: b.scheduler,
            subset: b.subset.clone(),
            bound: b.bound.clone(),
            gap,
            status,
        });
    }
    Ok(ValidationReport {
        flow,
        observed,
        checks,
    })
}

/// Simulates greedy traffic and validates the bounds of every constrained
/// flow taken in turn as the flow of interest.
pub fn simulate_and_validate(
    s: &Scenario,
    discipline: Discipline,
    policy: SizePolicy,
    horizon: Option<Rational>,
    n_limit: u32,
    log: bool,
) -> Result<(SimResult, Vec<ValidationReport>), SimError> {
    let c = s.server().rate().cloned().ok_or(SimError::UnsupportedServer)?;
    let horizon = match horizon {
        Some(h) => h,
        None => default_horizon(s).ok_or(SimError::UnsupportedServer)?,
    };
    let trace = greedy_trace(s.flows(), policy, &c, &horizon)?;
    let sim = run(s, &trace, discipline, log)?;
    let mut reports = Vec::new();
    for k in 0..s.n() {
        if s.flows()[k].arrival.is_none() {
            continue;
        }
        let sk = s.with_foi(k).expect("index in range");
        let bounds = sound_bounds(&sk, discipline, n_limit)?;
        reports.push(validate_bounds(&sim, k, &bounds)?);
    }
    Ok((sim, reports))
}
