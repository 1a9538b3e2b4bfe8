//! JSON scenario files.
//!
//! Numbers may be JSON numbers, read through their shortest decimal form,
//! or strings such as `"1/3"` or `"0.65e6"`. The optional `unit` block
//! scales packet sizes, bursts and rates to bits and bits per second.

use std::fmt;
use std::path::Path;

use num::traits::{One, Signed};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::curve::TokenBucketSpec;
use crate::num::{format_exact, int, parse_decimal, Rational};
use crate::scenario::{AggregateService, FlowSpec, Scenario, ScenarioError};

#[derive(Debug, Error)]
pub enum ScenarioFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed scenario file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid scenario file: {0}")]
    Invalid(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// An exact number in a scenario file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Num(pub Rational);

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(serde_json::Number),
            Text(String),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Number(n) => n.to_string(),
            Raw::Text(s) => s,
        };
        parse_decimal(&text)
            .map(Num)
            .ok_or_else(|| serde::de::Error::custom(format!("not a number: {text:?}")))
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0.to_integer().to_string().parse::<i64>() {
            Ok(v) if self.0.is_integer() => s.serialize_i64(v),
            _ => s.serialize_str(&format_exact(&self.0)),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    #[default]
    #[serde(rename = "bits")]
    Bits,
    #[serde(rename = "bytes")]
    Bytes,
    Kbit,
    Mbit,
}

impl Unit {
    /// Bits per unit, with decimal prefixes.
    pub fn bits(self) -> Rational {
        match self {
            Unit::Bits => int(1),
            Unit::Bytes => int(8),
            Unit::Kbit => int(1000),
            Unit::Mbit => int(1_000_000),
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unit::Bits => "bits",
            Unit::Bytes => "bytes",
            Unit::Kbit => "Kbit",
            Unit::Mbit => "Mbit",
        })
    }
}

/// Units of the packet sizes, the bursts and the rates (per second).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    #[serde(default)]
    pub size: Unit,
    #[serde(default)]
    pub burst: Unit,
    #[serde(default)]
    pub rate: Unit,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServerEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_bits_per_s: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utilization: Option<Num>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrivalEntry {
    pub rate_bits_per_s: Num,
    pub burst_bits: Num,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowEntry {
    pub weight: u64,
    pub l_min_bits: Num,
    pub l_max_bits: Num,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrival: Option<ArrivalEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<Units>,
    pub server: ServerEntry,
    /// 1-based.
    pub foi: usize,
    pub flows: Vec<FlowEntry>,
}

fn invalid(msg: impl Into<String>) -> ScenarioFileError {
    ScenarioFileError::Invalid(msg.into())
}

impl ScenarioFile {
    pub fn to_scenario(&self) -> Result<Scenario, ScenarioFileError> {
        let units = self.unit.clone().unwrap_or_default();
        let (size, burst, rate) = (units.size.bits(), units.burst.bits(), units.rate.bits());
        if self.foi == 0 || self.foi > self.flows.len() {
            return Err(invalid(format!(
                "foi {} must be between 1 and the number of flows ({})",
                self.foi,
                self.flows.len()
            )));
        }
        let flows: Vec<FlowSpec> = self
            .flows
            .iter()
            .enumerate()
            .map(|(k, f)| {
                let arrival = f
                    .arrival
                    .as_ref()
                    .map(|a| TokenBucketSpec::new(&a.rate_bits_per_s.0 * &rate, &a.burst_bits.0 * &burst))
                    .transpose()
                    .map_err(|e| invalid(format!("flow {}: {e}", k + 1)))?;
                Ok(FlowSpec::new(f.weight, &f.l_min_bits.0 * &size, &f.l_max_bits.0 * &size, arrival))
            })
            .collect::<Result<_, ScenarioFileError>>()?;
        let c = match (&self.server.rate_bits_per_s, &self.server.utilization) {
            (Some(c), None) => &c.0 * &rate,
            (None, Some(u)) => {
                let u = &u.0;
                if !u.is_positive() || *u >= Rational::one() {
                    return Err(invalid(format!("utilization {u} must lie in (0, 1)")));
                }
                let total: Option<Rational> = flows
                    .iter()
                    .map(|f| f.arrival.as_ref().map(|a| a.rate.clone()))
                    .sum();
                let total = total.ok_or_else(|| invalid("utilization needs every flow constrained"))?;
                total / u
            }
            _ => {
                return Err(invalid(
                    "server needs exactly one of rate_bits_per_s and utilization",
                ))
            }
        };
        Ok(Scenario::new(flows, AggregateService::ConstantRate(c), self.foi - 1)?)
    }

    /// Bits and bits per second, explicit server rate.
    pub fn from_scenario(s: &Scenario) -> Result<ScenarioFile, ScenarioFileError> {
        let c = s
            .server()
            .rate()
            .ok_or_else(|| invalid("only constant-rate servers can be saved"))?;
        Ok(ScenarioFile {
            unit: None,
            server: ServerEntry {
                rate_bits_per_s: Some(Num(c.clone())),
                utilization: None,
            },
            foi: s.foi() + 1,
            flows: s
                .flows()
                .iter()
                .map(|f| FlowEntry {
                    weight: f.weight,
                    l_min_bits: Num(f.l_min.clone()),
                    l_max_bits: Num(f.l_max.clone()),
                    arrival: f.arrival.as_ref().map(|a| ArrivalEntry {
                        rate_bits_per_s: Num(a.rate.clone()),
                        burst_bits: Num(a.burst.clone()),
                    }),
                })
                .collect(),
        })
    }
}

pub fn from_json_str(text: &str) -> Result<Scenario, ScenarioFileError> {
    serde_json::from_str::<ScenarioFile>(text)?.to_scenario()
}

pub fn to_json_string(s: &Scenario) -> Result<String, ScenarioFileError> {
    Ok(serde_json::to_string_pretty(&ScenarioFile::from_scenario(s)?)?)
}

pub fn load(path: &Path) -> Result<Scenario, ScenarioFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    from_json_str(&text)
}

pub fn save(s: &Scenario, path: &Path) -> Result<(), ScenarioFileError> {
    std::fs::write(path, to_json_string(s)? + "\n").map_err(|source| ScenarioFileError::Io {
        path: path.display().to_string(),
        source,
    })
}
