//! Leftover service curves of WRR and IWRR for the flow of interest.

use num::traits::{Signed, Zero};
use thiserror::Error;

use crate::curve::{Curve, CurveError, RateLatencySpec, StairSpec};
use crate::num::{floor_int, int, Rational};
use crate::scenario::{AggregateService, FlowSpec, Scenario};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoundsError {
    #[error("the flow of interest {0} must belong to the subset")]
    FoiNotInSubset(usize),
    #[error("flow {0} is unconstrained and must belong to the subset")]
    Unconstrained(usize),
    #[error("subset refers to flow {0}, which does not exist")]
    OutOfRange(usize),
    #[error("subset curves need a constant-rate or declared-convex server")]
    NotConvex,
    #[error("closed form needs a constant-rate server and token-bucket flows")]
    NoClosedForm,
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// `q_i = w_i l_i^min`.
pub fn q_of(flow: &FlowSpec) -> Rational {
    flow.quantum_min()
}

/// `Q_i = Σ_{j≠i} w_j l_j^max`.
#[allow(non_snake_case)]
pub fn Q_of(s: &Scenario, i: usize) -> Rational {
    s.flows()
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, f)| f.quantum_max())
        .sum()
}

fn rate_latency(rate: Rational, latency: Rational) -> Curve {
    Curve::rate_latency(&RateLatencySpec { rate, latency }).expect("nonnegative parameters")
}

/// WRR stair curve `γ'([β − Q_i]^+)` with `γ' = β_{1,0} ⊗ ν_{q_i, q_i+Q_i}`.
pub fn wrr_stair_curve(s: &Scenario) -> Result<Curve, BoundsError> {
    let i = s.foi();
    let q = q_of(s.foi_flow());
    let big_q = Q_of(s, i);
    let nu = Curve::stair(&StairSpec {
        height: q.clone(),
        period: &q + &big_q,
    })?;
    let gamma = Curve::affine_rate(int(1)).conv(&nu);
    let shifted = s.server().curve().sub_positive(&Curve::constant(big_q))?;
    Ok(gamma.compose(&shifted))
}

/// WRR linear curve `q_i/(q_i+Q_i) [β − Q_i]^+`.
pub fn wrr_linear_curve(s: &Scenario) -> Result<Curve, BoundsError> {
    let q = q_of(s.foi_flow());
    let big_q = Q_of(s, s.foi());
    let share = &q / (&q + &big_q);
    Ok(s
        .server()
        .curve()
        .sub_positive(&Curve::constant(big_q))?
        .scale(&share))
}

/// `Ψ_ij(p) = ⌊p/w_i⌋ w_j + [w_j − w_i]^+ + min{(p mod w_i) + 1, w_j}`.
pub fn psi_cap(w_i: u64, w_j: u64, p: u64) -> u64 {
    (p / w_i) * w_j + w_j.saturating_sub(w_i) + ((p % w_i) + 1).min(w_j)
}

/// `ψ_i(x) = x + Σ_{j≠i} Ψ_ij(⌊x / l_i^min⌋) l_j^max`.
pub fn psi_total(s: &Scenario, i: usize, x: &Rational) -> Rational {
    let fi = &s.flows()[i];
    let p: u64 = floor_int(&(x / &fi.l_min))
        .try_into()
        .expect("packet count fits in u64");
    let cross: Rational = s
        .flows()
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, fj)| int(psi_cap(fi.weight, fj.weight, p) as i64) * &fj.l_max)
        .sum();
    x + cross
}

/// `U_i(t) = Σ_{k<w_i} ν_{l_i^min, L_tot}([t − ψ_i(k l_i^min)]^+)`.
pub fn iwrr_u(s: &Scenario) -> Result<Curve, BoundsError> {
    let i = s.foi();
    let fi = s.foi_flow();
    let period = q_of(fi) + Q_of(s, i);
    let nu = Curve::stair(&StairSpec {
        height: fi.l_min.clone(),
        period,
    })?;
    let mut u = Curve::zero();
    for k in 0..fi.weight {
        let shift = psi_total(s, i, &(int(k as i64) * &fi.l_min));
        u = u.add(&nu.compose(&rate_latency(int(1), shift)));
    }
    Ok(u)
}

/// IWRR curve `γ''(β(t))` with `γ'' = β_{1,0} ⊗ U_i`.
pub fn iwrr_curve(s: &Scenario) -> Result<Curve, BoundsError> {
    let gamma = Curve::affine_rate(int(1)).conv(&iwrr_u(s)?);
    Ok(gamma.compose(&s.server().curve()))
}

/// Weights `φ` and penalties `H_ij` of a bandwidth-sharing policy, seen
/// from one flow of interest `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BspParams {
    pub phi: Vec<Rational>,
    /// `penalty[j] = H_ij`, zero for `j = i`.
    pub penalty: Vec<Rational>,
}

pub fn wrr_bsp_params(s: &Scenario, i: usize) -> BspParams {
    let phi = s
        .flows()
        .iter()
        .enumerate()
        .map(|(j, f)| if j == i { f.quantum_min() } else { f.quantum_max() })
        .collect();
    let penalty = s
        .flows()
        .iter()
        .enumerate()
        .map(|(j, f)| if j == i { Rational::zero() } else { f.quantum_max() })
        .collect();
    BspParams { phi, penalty }
}

/// The IWRR-specific parameters and the WRR ones, which IWRR also meets.
pub fn iwrr_bsp_params(s: &Scenario, i: usize) -> (BspParams, BspParams) {
    let w_i = s.flows()[i].weight;
    let phi = s
        .flows()
        .iter()
        .enumerate()
        .map(|(j, f)| {
            if j == i {
                f.quantum_min()
            } else {
                int((f.weight + w_i) as i64) * &f.l_max
            }
        })
        .collect();
    let penalty = s
        .flows()
        .iter()
        .enumerate()
        .map(|(j, f)| {
            if j == i {
                Rational::zero()
            } else {
                int((f.weight.saturating_sub(w_i) + 1) as i64) * &f.l_max
            }
        })
        .collect();
    (BspParams { phi, penalty }, wrr_bsp_params(s, i))
}

/// Membership vector for a subset, checked against the scenario.
pub fn membership(s: &Scenario, m: &[usize]) -> Result<Vec<bool>, BoundsError> {
    let mut inside = vec![false; s.n()];
    for &k in m {
        if k >= s.n() {
            return Err(BoundsError::OutOfRange(k));
        }
        inside[k] = true;
    }
    if !inside[s.foi()] {
        return Err(BoundsError::FoiNotInSubset(s.foi()));
    }
    if let Some(k) = (0..s.n()).find(|&k| !inside[k] && s.flows()[k].arrival.is_none()) {
        return Err(BoundsError::Unconstrained(k));
    }
    Ok(inside)
}

fn require_convex(s: &Scenario) -> Result<(), BoundsError> {
    match s.server() {
        AggregateService::ConstantRate(_) => Ok(()),
        AggregateService::General { convex: true, .. } => Ok(()),
        AggregateService::General { convex: false, .. } => Err(BoundsError::NotConvex),
    }
}

/// One term of the bandwidth-sharing leftover curve:
/// `φ_i/Σ_{k∈M} φ_k · [β − Σ_{k∉M} α_k − Σ_{k∈M} H_ik]^+`.
///
/// A server too slow for the flows outside `M` yields the zero curve.
pub fn bsp_leftover_for_subset(
    s: &Scenario,
    params: &BspParams,
    m: &[usize],
) -> Result<Curve, BoundsError> {
    require_convex(s)?;
    let inside = membership(s, m)?;
    let i = s.foi();
    let mut load = Curve::constant(
        (0..s.n())
            .filter(|&k| inside[k])
            .map(|k| params.penalty[k].clone())
            .sum(),
    );
    for (k, f) in s.flows().iter().enumerate() {
        if !inside[k] {
            load = load.add(&f.arrival_curve().expect("checked by membership"));
        }
    }
    let phi_m: Rational = (0..s.n()).filter(|&k| inside[k]).map(|k| params.phi[k].clone()).sum();
    let share = &params.phi[i] / phi_m;
    Ok(s.server().curve().sub_positive(&load)?.scale(&share))
}

/// WRR M: the bandwidth-sharing term with the WRR parameters.
pub fn wrr_m_curve(s: &Scenario, m: &[usize]) -> Result<Curve, BoundsError> {
    bsp_leftover_for_subset(s, &wrr_bsp_params(s, s.foi()), m)
}

/// IWRR M: the larger of the IWRR-parameter term and the WRR M term.
pub fn iwrr_m_curve(s: &Scenario, m: &[usize]) -> Result<Curve, BoundsError> {
    let (iwrr, wrr) = iwrr_bsp_params(s, s.foi());
    Ok(bsp_leftover_for_subset(s, &iwrr, m)?.max(&bsp_leftover_for_subset(s, &wrr, m)?))
}

/// `R·[t − T]^+` with `R > 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RateLatency {
    pub rate: Rational,
    pub latency: Rational,
}

impl RateLatency {
    pub fn curve(&self) -> Curve {
        rate_latency(self.rate.clone(), self.latency.clone())
    }
}

/// Closed form of [`bsp_leftover_for_subset`] for a constant-rate server
/// and token-bucket flows; `None` when nothing is left for the flow.
pub fn bsp_rate_latency(
    s: &Scenario,
    params: &BspParams,
    m: &[usize],
) -> Result<Option<RateLatency>, BoundsError> {
    let c = s.server().rate().ok_or(BoundsError::NoClosedForm)?;
    let inside = membership(s, m)?;
    let mut rate_out = Rational::zero();
    let mut burst = Rational::zero();
    let mut phi_m = Rational::zero();
    for (k, f) in s.flows().iter().enumerate() {
        if inside[k] {
            burst += &params.penalty[k];
            phi_m += &params.phi[k];
        } else {
            let a = f.arrival.as_ref().ok_or(BoundsError::NoClosedForm)?;
            rate_out += &a.rate;
            burst += &a.burst;
        }
    }
    let residual = c - rate_out;
    if !residual.is_positive() {
        return Ok(None);
    }
    Ok(Some(RateLatency {
        rate: &params.phi[s.foi()] / phi_m * &residual,
        latency: burst / residual,
    }))
}
