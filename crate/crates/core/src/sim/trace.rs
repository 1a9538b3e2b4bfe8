//! Token-bucket conformant packet traces.

use num::traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SimError;
use crate::curve::TokenBucketSpec;
use crate::num::{int, min_of, Rational};
use crate::scenario::FlowSpec;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Packet {
    pub time: Rational,
    pub size: Rational,
}

/// Arrivals per flow, in flow order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PacketTrace {
    pub flows: Vec<Vec<Packet>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SizePolicy {
    Min,
    Max,
    /// `l_min`, `l_max`, `l_min`, ...
    Alternating,
    /// Uniform over 17 evenly spaced sizes in `[l_min, l_max]`.
    Random(u64),
}

impl SizePolicy {
    pub fn label(self) -> &'static str {
        match self {
            SizePolicy::Min => "min",
            SizePolicy::Max => "max",
            SizePolicy::Alternating => "alternating",
            SizePolicy::Random(_) => "random",
        }
    }
}

/// Packet sizes of one flow drawn from `policy`.
struct Sizes {
    policy: SizePolicy,
    l_min: Rational,
    l_max: Rational,
    k: u64,
    rng: ChaCha8Rng,
}

impl Sizes {
    fn new(flow: &FlowSpec, policy: SizePolicy, index: usize) -> Sizes {
        let seed = match policy {
            SizePolicy::Random(s) => s ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            _ => 0,
        };
        Sizes {
            policy,
            l_min: flow.l_min.clone(),
            l_max: flow.l_max.clone(),
            k: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn next(&mut self) -> Rational {
        self.k += 1;
        match self.policy {
            SizePolicy::Min => self.l_min.clone(),
            SizePolicy::Max => self.l_max.clone(),
            SizePolicy::Alternating if self.k % 2 == 1 => self.l_min.clone(),
            SizePolicy::Alternating => self.l_max.clone(),
            SizePolicy::Random(_) => {
                let j: i64 = self.rng.gen_range(0..=16);
                &self.l_min + (&self.l_max - &self.l_min) * int(j) / int(16)
            }
        }
    }
}

/// Packets sent as early as the token bucket allows, starting with a full
/// bucket at time 0, for arrival times in `[0, horizon)`.
///
/// A packet larger than the bucket depth is cut to the depth when that
/// stays within `[l_min, l_max]`. When even `l_min` exceeds the depth the
/// flow is paced at its rate and the trace is not conformant.
pub fn greedy_source(
    flow: &FlowSpec,
    policy: SizePolicy,
    horizon: &Rational,
    index: usize,
) -> Result<Vec<Packet>, SimError> {
    let a = flow.arrival.as_ref().ok_or_else(|| SimError::Trace {
        flow: index,
        msg: "greedy sources need a token bucket".into(),
    })?;
    let mut sizes = Sizes::new(flow, policy, index);
    let mut out = Vec::new();
    let mut level = a.burst.clone();
    let mut t = Rational::zero();
    loop {
        let mut size = sizes.next();
        if size > a.burst && a.burst >= flow.l_min {
            size = a.burst.clone();
        }
        if level < size {
            if !a.rate.is_positive() {
                break;
            }
            t = &t + (&size - &level) / &a.rate;
            level = size.clone();
        }
        if t >= *horizon {
            break;
        }
        level = &level - &size;
        out.push(Packet {
            time: t.clone(),
            size,
        });
    }
    Ok(out)
}

/// `A(t) − A(s) ≤ b + r (t − s)` over packet instants, by running the
/// bucket once.
pub fn is_conformant(trace: &[Packet], a: &TokenBucketSpec) -> bool {
    let mut level = a.burst.clone();
    let mut last = Rational::zero();
    for p in trace {
        if p.time < last {
            return false;
        }
        level = min_of(&a.burst, &(&level + &a.rate * (&p.time - &last)));
        last = p.time.clone();
        level = &level - &p.size;
        if level.is_negative() {
            return false;
        }
    }
    true
}

/// Back-to-back packets at `line_rate`, keeping an unconstrained flow
/// backlogged for the whole horizon.
pub fn saturating_source(
    flow: &FlowSpec,
    policy: SizePolicy,
    line_rate: &Rational,
    horizon: &Rational,
    index: usize,
) -> Vec<Packet> {
    let mut sizes = Sizes::new(flow, policy, index);
    let mut out = Vec::new();
    let mut t = Rational::zero();
    while t < *horizon {
        let size = sizes.next();
        out.push(Packet {
            time: t.clone(),
            size: size.clone(),
        });
        t = &t + size / line_rate;
    }
    out
}

/// Greedy traces for constrained flows and saturating ones for the rest.
pub fn greedy_trace(
    flows: &[FlowSpec],
    policy: SizePolicy,
    line_rate: &Rational,
    horizon: &Rational,
) -> Result<PacketTrace, SimError> {
    let flows = flows
        .iter()
        .enumerate()
        .map(|(k, f)| {
            if f.arrival.is_some() {
                greedy_source(f, policy, horizon, k)
            } else {
                Ok(saturating_source(f, policy, line_rate, horizon, k))
            }
        })
        .collect::<Result<_, _>>()?;
    Ok(PacketTrace { flows })
}
