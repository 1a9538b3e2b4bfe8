//! Flows, servers and the flow of interest.

use num::traits::{Signed, Zero};
use thiserror::Error;

use crate::curve::{Curve, TokenBucketSpec};
use crate::num::{int, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("scenario has no flows")]
    Empty,
    #[error("flow of interest {foi} out of range for {n} flows")]
    FoiOutOfRange { foi: usize, n: usize },
    #[error("flow {flow}: {msg}")]
    Flow { flow: usize, msg: String },
    #[error("server: {0}")]
    Server(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowSpec {
    pub weight: u64,
    pub l_min: Rational,
    pub l_max: Rational,
    /// `None` marks an unconstrained flow.
    pub arrival: Option<TokenBucketSpec>,
}

impl FlowSpec {
    pub fn new(weight: u64, l_min: Rational, l_max: Rational, arrival: Option<TokenBucketSpec>) -> Self {
        FlowSpec {
            weight,
            l_min,
            l_max,
            arrival,
        }
    }

    fn check(&self) -> Result<(), String> {
        if self.weight == 0 {
            return Err("weight must be a positive integer".into());
        }
        if !self.l_min.is_positive() {
            return Err(format!("l_min must be positive, got {}", self.l_min));
        }
        if self.l_max < self.l_min {
            return Err(format!("l_max {} below l_min {}", self.l_max, self.l_min));
        }
        if let Some(a) = &self.arrival {
            TokenBucketSpec::new(a.rate.clone(), a.burst.clone()).map_err(|e| e.to_string())?;
        }
        Ok(())
    }

    pub fn arrival_curve(&self) -> Option<Curve> {
        self.arrival
            .as_ref()
            .map(|a| Curve::token_bucket(a).expect("validated token bucket"))
    }

    /// `q = w · l_min`.
    pub fn quantum_min(&self) -> Rational {
        int(self.weight as i64) * &self.l_min
    }

    /// `w · l_max`.
    pub fn quantum_max(&self) -> Rational {
        int(self.weight as i64) * &self.l_max
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AggregateService {
    ConstantRate(Rational),
    General { curve: Curve, convex: bool },
}

impl AggregateService {
    pub fn curve(&self) -> Curve {
        match self {
            AggregateService::ConstantRate(c) => Curve::affine_rate(c.clone()),
            AggregateService::General { curve, .. } => curve.clone(),
        }
    }

    pub fn rate(&self) -> Option<&Rational> {
        match self {
            AggregateService::ConstantRate(c) => Some(c),
            AggregateService::General { .. } => None,
        }
    }

    fn check(&self) -> Result<(), String> {
        match self {
            AggregateService::ConstantRate(c) if !c.is_positive() => {
                Err(format!("constant rate must be positive, got {c}"))
            }
            AggregateService::General { curve, .. } if !curve.origin().is_zero() => {
                Err("service curve must be 0 at t = 0".into())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    flows: Vec<FlowSpec>,
    server: AggregateService,
    foi: usize,
}

impl Scenario {
    /// `foi` is a 0-based index into `flows`, which also fixes the
    /// round-robin service order.
    pub fn new(flows: Vec<FlowSpec>, server: AggregateService, foi: usize) -> Result<Self, ScenarioError> {
        if flows.is_empty() {
            return Err(ScenarioError::Empty);
        }
        if foi >= flows.len() {
            return Err(ScenarioError::FoiOutOfRange { foi, n: flows.len() });
        }
        for (k, f) in flows.iter().enumerate() {
            f.check().map_err(|msg| ScenarioError::Flow { flow: k, msg })?;
        }
        server.check().map_err(ScenarioError::Server)?;
        Ok(Scenario { flows, server, foi })
    }

    pub fn flows(&self) -> &[FlowSpec] {
        &self.flows
    }

    pub fn server(&self) -> &AggregateService {
        &self.server
    }

    pub fn foi(&self) -> usize {
        self.foi
    }

    pub fn n(&self) -> usize {
        self.flows.len()
    }

    pub fn foi_flow(&self) -> &FlowSpec {
        &self.flows[self.foi]
    }

    pub fn with_server(&self, server: AggregateService) -> Result<Self, ScenarioError> {
        Scenario::new(self.flows.clone(), server, self.foi)
    }

    pub fn with_foi(&self, foi: usize) -> Result<Self, ScenarioError> {
        Scenario::new(self.flows.clone(), self.server.clone(), foi)
    }

    /// Indices of the flows other than the flow of interest.
    pub fn cross_flows(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.flows.len()).filter(move |&k| k != self.foi)
    }

    /// `Σ r` over all flows, `None` if some flow is unconstrained.
    pub fn total_arrival_rate(&self) -> Option<Rational> {
        self.flows
            .iter()
            .map(|f| f.arrival.as_ref().map(|a| a.rate.clone()))
            .sum()
    }
}
