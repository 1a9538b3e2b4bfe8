//! Scenario families and sweeps behind the evaluation figures and table.

use std::time::{Duration, Instant};

use num::traits::{One, Signed, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::curve::{Curve, Delay, TokenBucketSpec};
use crate::num::{int, ratio, Rational};
use crate::scenario::{AggregateService, FlowSpec, Scenario, ScenarioError};
use crate::search::{
    exhaustive_best, greedy_heuristic, state_of_the_art, Arithmetic, Convention, DelayBoundResult,
    FlowGroups, Scheduler, SearchError,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExperimentError {
    #[error("invalid {axis} value {value}: {reason}")]
    InvalidAxis {
        axis: &'static str,
        value: String,
        reason: String,
    },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Search(#[from] SearchError),
}

fn invalid(axis: &'static str, value: impl ToString, reason: &str) -> ExperimentError {
    ExperimentError::InvalidAxis {
        axis,
        value: value.to_string(),
        reason: reason.into(),
    }
}

/// How bounds are computed for every point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Settings {
    pub convention: Convention,
    pub arithmetic: Arithmetic,
    /// Exhaustive search up to `2^n_limit` subset choices, greedy beyond.
    pub n_limit: u32,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            convention: Convention::default(),
            arithmetic: Arithmetic::default(),
            n_limit: 20,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Exhaustive,
    Heuristic,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Exhaustive => "exhaustive",
            Method::Heuristic => "heuristic",
        }
    }
}

/// The five bounds of one scenario.
#[derive(Clone, Debug)]
pub struct BoundRow {
    pub wrr_linear: DelayBoundResult,
    pub wrr_stair: DelayBoundResult,
    pub iwrr: DelayBoundResult,
    pub wrr_m: DelayBoundResult,
    pub iwrr_m: DelayBoundResult,
    /// Bounds against the maximum of all subset curves, exhaustive only.
    pub wrr_m_max_curve: Option<Delay>,
    pub iwrr_m_max_curve: Option<Delay>,
    pub method: Method,
}

impl BoundRow {
    pub fn get(&self, s: Scheduler) -> &DelayBoundResult {
        match s {
            Scheduler::WrrLinear => &self.wrr_linear,
            Scheduler::WrrStair => &self.wrr_stair,
            Scheduler::Iwrr => &self.iwrr,
            Scheduler::WrrM => &self.wrr_m,
            Scheduler::IwrrM => &self.iwrr_m,
        }
    }

    /// Smallest of the three traffic-agnostic bounds.
    pub fn best_state_of_the_art(&self) -> Delay {
        [&self.wrr_linear, &self.wrr_stair, &self.iwrr]
            .iter()
            .map(|r| r.bound.clone())
            .min()
            .unwrap()
    }
}

pub fn bound_row(s: &Scenario, settings: Settings) -> Result<BoundRow, ExperimentError> {
    let sota = |v| state_of_the_art(s, v, settings.convention);
    let exhaustive = FlowGroups::of(s).combinations() <= 1u128 << settings.n_limit.min(127);
    let subset = |v| -> Result<(DelayBoundResult, Option<Delay>), SearchError> {
        if exhaustive {
            let r = exhaustive_best(s, v, settings.n_limit, settings.convention, settings.arithmetic)?;
            Ok((r.per_subset, Some(r.max_curve.bound)))
        } else {
            Ok((greedy_heuristic(s, v, settings.convention, settings.arithmetic)?, None))
        }
    };
    let (wrr_m, wrr_m_max_curve) = subset(Scheduler::WrrM)?;
    let (iwrr_m, iwrr_m_max_curve) = subset(Scheduler::IwrrM)?;
    Ok(BoundRow {
        wrr_linear: sota(Scheduler::WrrLinear)?,
        wrr_stair: sota(Scheduler::WrrStair)?,
        iwrr: sota(Scheduler::Iwrr)?,
        wrr_m,
        iwrr_m,
        wrr_m_max_curve,
        iwrr_m_max_curve,
        method: if exhaustive {
            Method::Exhaustive
        } else {
            Method::Heuristic
        },
    })
}

fn tb(rate: Rational, burst: Rational) -> Option<TokenBucketSpec> {
    Some(TokenBucketSpec::new(rate, burst).expect("nonnegative token bucket"))
}

/// The four-flow example with weights {4, 6, 7, 10}, flow 1 of interest.
pub fn four_flow_scenario(utilization: &Rational) -> Result<Scenario, ExperimentError> {
    let weights = [4, 6, 7, 10];
    let l_min = [4096, 3072, 4608, 3072];
    let l_max = [8704, 5632, 6656, 8192];
    let bursts = [30208, 19968, 24576, 27648];
    let rates = [650_000, 850_000, 950_000, 550_000];
    let flows = (0..4)
        .map(|k| {
            FlowSpec::new(
                weights[k],
                int(l_min[k]),
                int(l_max[k]),
                tb(int(rates[k]), int(bursts[k])),
            )
        })
        .collect();
    let s = Scenario::new(flows, AggregateService::ConstantRate(int(1)), 0)?;
    at_utilization(&s, utilization)
}

/// Same flows on a constant-rate server with `C = Σ r / u`.
pub fn at_utilization(s: &Scenario, u: &Rational) -> Result<Scenario, ExperimentError> {
    if !u.is_positive() || *u >= Rational::one() {
        return Err(invalid("utilization", u, "must lie in (0, 1)"));
    }
    let total = s
        .total_arrival_rate()
        .ok_or_else(|| invalid("utilization", u, "every flow needs an arrival curve"))?;
    if !total.is_positive() {
        return Err(invalid("utilization", u, "total arrival rate is zero"));
    }
    Ok(s.with_server(AggregateService::ConstantRate(total / u))?)
}

/// Utilization of a constant-rate scenario, `Σ r / C`.
pub fn utilization_of(s: &Scenario) -> Option<Rational> {
    let c = s.server().rate()?;
    Some(s.total_arrival_rate()? / c)
}

/// A flow of interest plus low, mid and high burstiness cross-flow
/// templates, at a fixed server utilization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassConfig {
    pub foi: FlowSpec,
    pub classes: [FlowSpec; 3],
    pub utilization: Rational,
}

impl ClassConfig {
    /// Weights {4, 5, 6} and bursts {70, 700, 7000} Kbit for the classes,
    /// weight 5 and burst 3000 Kbit for the flow of interest, packets of
    /// 576 to 1500 bytes, 7 Mb/s per flow, utilization 0.7.
    pub fn standard() -> ClassConfig {
        let flow = |w: u64, kbit: i64| {
            FlowSpec::new(w, int(576 * 8), int(1500 * 8), tb(int(7_000_000), int(kbit * 1000)))
        };
        ClassConfig {
            foi: flow(5, 3000),
            classes: [flow(4, 70), flow(5, 700), flow(6, 7000)],
            utilization: ratio(7, 10),
        }
    }

    /// Reads a four-flow template: the flow of interest and then the low,
    /// mid and high classes in flow order. The utilization is `Σ r / C`.
    pub fn from_template(s: &Scenario) -> Result<ClassConfig, ExperimentError> {
        if s.n() != 4 {
            return Err(invalid(
                "class template",
                s.n(),
                "needs the flow of interest and exactly three class flows",
            ));
        }
        let u = utilization_of(s).ok_or_else(|| {
            invalid(
                "class template",
                "server",
                "needs a constant-rate server and constrained flows",
            )
        })?;
        let cross: Vec<FlowSpec> = s.cross_flows().map(|k| s.flows()[k].clone()).collect();
        Ok(ClassConfig {
            foi: s.foi_flow().clone(),
            classes: [cross[0].clone(), cross[1].clone(), cross[2].clone()],
            utilization: u,
        })
    }

    /// Flow of interest first, then `mix.0` low, `mix.1` mid and `mix.2`
    /// high burstiness flows.
    pub fn scenario(&self, mix: (usize, usize, usize)) -> Result<Scenario, ExperimentError> {
        let mut flows = vec![self.foi.clone()];
        for (class, count) in self.classes.iter().zip([mix.0, mix.1, mix.2]) {
            flows.extend(std::iter::repeat_n(class.clone(), count));
        }
        let s = Scenario::new(flows, AggregateService::ConstantRate(int(1)), 0)?;
        at_utilization(&s, &self.utilization)
    }

    /// Every `l_min` set to `max l_max / psr`.
    pub fn with_psr(&self, psr: &Rational) -> Result<ClassConfig, ExperimentError> {
        if *psr < Rational::one() {
            return Err(invalid("psr", psr, "must be at least 1"));
        }
        let top = std::iter::once(&self.foi)
            .chain(&self.classes)
            .map(|f| f.l_max.clone())
            .max()
            .unwrap();
        let l_min = top / psr;
        let fix = |f: &FlowSpec| -> Result<FlowSpec, ExperimentError> {
            if l_min > f.l_max {
                return Err(invalid("psr", psr, "minimum packet size exceeds a maximum"));
            }
            Ok(FlowSpec {
                l_min: l_min.clone(),
                ..f.clone()
            })
        };
        Ok(ClassConfig {
            foi: fix(&self.foi)?,
            classes: [
                fix(&self.classes[0])?,
                fix(&self.classes[1])?,
                fix(&self.classes[2])?,
            ],
            utilization: self.utilization.clone(),
        })
    }
}

/// Runs `f` on every point in parallel, keeping input order.
fn par_points<P, R>(
    points: &[P],
    f: impl Fn(&P) -> Result<R, ExperimentError> + Sync + Send,
) -> Result<Vec<R>, ExperimentError>
where
    P: Sync,
    R: Send,
{
    points.par_iter().map(f).collect()
}

pub fn default_utilizations() -> Vec<Rational> {
    let (from, to, steps) = (ratio(1, 10), ratio(95, 100), 18);
    linspace(&from, &to, steps)
}

/// `steps` evenly spaced points from `from` to `to` inclusive.
pub fn linspace(from: &Rational, to: &Rational, steps: usize) -> Vec<Rational> {
    if steps <= 1 {
        return vec![from.clone()];
    }
    let step = (to - from) / int(steps as i64 - 1);
    (0..steps).map(|k| from + &step * int(k as i64)).collect()
}

pub fn delay_sweep(
    template: &Scenario,
    utilizations: &[Rational],
    settings: Settings,
) -> Result<Vec<(Rational, BoundRow)>, ExperimentError> {
    par_points(utilizations, |u| {
        let s = at_utilization(template, u)?;
        Ok((u.clone(), bound_row(&s, settings)?))
    })
}

pub fn default_mixes() -> Vec<(usize, usize, usize)> {
    vec![(7, 1, 1), (5, 2, 2), (3, 3, 3), (2, 2, 5), (1, 1, 7)]
}

pub fn burst_classes(
    config: &ClassConfig,
    mixes: &[(usize, usize, usize)],
    settings: Settings,
) -> Result<Vec<((usize, usize, usize), BoundRow)>, ExperimentError> {
    par_points(mixes, |&mix| Ok((mix, bound_row(&config.scenario(mix)?, settings)?)))
}

pub fn default_psrs() -> Vec<Rational> {
    vec![int(1), ratio(3, 2), int(2), ratio(5, 2), int(3), int(4)]
}

/// Mix of cross-flows used for the packet size range sweep.
pub const PSR_MIX: (usize, usize, usize) = (3, 3, 3);

pub fn psr_sweep(
    config: &ClassConfig,
    psrs: &[Rational],
    settings: Settings,
) -> Result<Vec<(Rational, BoundRow)>, ExperimentError> {
    par_points(psrs, |psr| {
        let s = config.with_psr(psr)?.scenario(PSR_MIX)?;
        Ok((psr.clone(), bound_row(&s, settings)?))
    })
}

pub fn flow_count(
    config: &ClassConfig,
    per_class: &[usize],
    settings: Settings,
) -> Result<Vec<(usize, BoundRow)>, ExperimentError> {
    par_points(per_class, |&k| {
        if k == 0 {
            return Err(invalid("flows per class", k, "must be positive"));
        }
        Ok((k, bound_row(&config.scenario((k, k, k))?, settings)?))
    })
}

pub const TABLE_TOTALS: [usize; 5] = [13, 49, 100, 499, 1000];

#[derive(Clone, Debug)]
pub struct HeuristicRow {
    pub total_flows: usize,
    pub heuristic: DelayBoundResult,
    pub iwrr: DelayBoundResult,
    /// Time of the greedy search alone.
    pub wall_time: Duration,
}

/// Greedy WRR-M against the IWRR curve, with `(total − 1) / 3` flows per
/// class.
pub fn heuristic_table(
    config: &ClassConfig,
    totals: &[usize],
    settings: Settings,
) -> Result<Vec<HeuristicRow>, ExperimentError> {
    totals
        .iter()
        .map(|&n| {
            if n < 4 || (n - 1) % 3 != 0 {
                return Err(invalid("total flows", n, "must be 1 + 3k with k ≥ 1"));
            }
            let k = (n - 1) / 3;
            let s = config.scenario((k, k, k))?;
            let start = Instant::now();
            let heuristic =
                greedy_heuristic(&s, Scheduler::WrrM, settings.convention, settings.arithmetic)?;
            let wall_time = start.elapsed();
            let iwrr = state_of_the_art(&s, Scheduler::Iwrr, settings.convention)?;
            Ok(HeuristicRow {
                total_flows: n,
                heuristic,
                iwrr,
                wall_time,
            })
        })
        .collect()
}

/// Leftover curves sampled for plotting.
#[derive(Clone, Debug)]
pub struct CurveTable {
    pub columns: Vec<String>,
    pub times: Vec<Rational>,
    /// One row per time, one value per column.
    pub values: Vec<Vec<Rational>>,
    pub warnings: Vec<String>,
}

/// Samples the state-of-the-art curves and, when every flow is
/// constrained, the subset curves of the optimal `M`.
pub fn curve_table(
    s: &Scenario,
    t_max: &Rational,
    samples: usize,
    settings: Settings,
) -> Result<CurveTable, ExperimentError> {
    if !t_max.is_positive() || samples < 2 {
        return Err(invalid("samples", samples, "need t_max > 0 and at least two samples"));
    }
    let mut columns = Vec::new();
    let mut curves: Vec<Curve> = Vec::new();
    let mut warnings = Vec::new();
    for v in [Scheduler::WrrLinear, Scheduler::WrrStair, Scheduler::Iwrr] {
        columns.push(v.label().to_string());
        curves.push(state_of_the_art(s, v, settings.convention)?.curve);
    }
    for (v, name) in [(Scheduler::WrrM, "wrr_m_best"), (Scheduler::IwrrM, "iwrr_m_best")] {
        let best = if FlowGroups::of(s).combinations() <= 1u128 << settings.n_limit.min(127) {
            exhaustive_best(s, v, settings.n_limit, settings.convention, settings.arithmetic)
                .map(|r| r.per_subset)
        } else {
            greedy_heuristic(s, v, settings.convention, settings.arithmetic)
        };
        match best {
            Ok(r) => {
                columns.push(name.to_string());
                curves.push(r.curve);
            }
            Err(e) => warnings.push(format!("{name} omitted: {e}")),
        }
    }
    let times = linspace(&Rational::zero(), t_max, samples);
    let values = times
        .iter()
        .map(|t| curves.iter().map(|c| c.value(t)).collect())
        .collect();
    Ok(CurveTable {
        columns,
        times,
        values,
        warnings,
    })
}
