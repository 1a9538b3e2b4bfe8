//! Event-driven WRR and IWRR on a constant-rate link.

use std::collections::VecDeque;
use std::fmt;

use num::traits::Zero;

use super::trace::{is_conformant, Packet, PacketTrace};
use super::SimError;
use crate::num::{format_exact, max_of, Rational};
use crate::scenario::Scenario;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Discipline {
    Wrr,
    Iwrr,
}

impl Discipline {
    pub fn label(self) -> &'static str {
        match self {
            Discipline::Wrr => "wrr",
            Discipline::Iwrr => "iwrr",
        }
    }
}

impl fmt::Display for Discipline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PacketRecord {
    pub arrival: Rational,
    pub start: Rational,
    pub departure: Rational,
    pub size: Rational,
}

impl PacketRecord {
    pub fn delay(&self) -> Rational {
        &self.departure - &self.arrival
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    Arrive,
    Start,
    Depart,
}

impl EventKind {
    fn label(self) -> &'static str {
        match self {
            EventKind::Arrive => "arrive",
            EventKind::Start => "start",
            EventKind::Depart => "depart",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event {
    pub time: Rational,
    pub kind: EventKind,
    pub flow: usize,
    pub size: Rational,
    /// Queue lengths in packets right after the event.
    pub queues: Vec<usize>,
}

impl Event {
    /// `time, kind, flow, size, queue lengths`, tab separated; flows are
    /// 1-based and queue lengths comma separated.
    pub fn line(&self) -> String {
        let q: Vec<String> = self.queues.iter().map(usize::to_string).collect();
        format!(
            "{}\t{}\t{}\t{}\t{}",
            format_exact(&self.time),
            self.kind.label(),
            self.flow + 1,
            format_exact(&self.size),
            q.join(",")
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimResult {
    pub discipline: Discipline,
    /// Served packets per flow in arrival order.
    pub flows: Vec<Vec<PacketRecord>>,
    pub max_delay: Vec<Option<Rational>>,
    pub bits_served: Rational,
    /// Completion time of the last packet.
    pub horizon: Rational,
    /// Whether each constrained flow's trace respects its token bucket.
    pub conformant: Vec<bool>,
    /// Filled when the run was asked to log.
    pub events: Vec<Event>,
}

impl SimResult {
    /// Events between the arrival and the departure of one packet.
    pub fn events_around(&self, rec: &PacketRecord) -> Vec<&Event> {
        self.events
            .iter()
            .filter(|e| e.time >= rec.arrival && e.time <= rec.departure)
            .collect()
    }
}

/// Round-robin position.
#[derive(Clone, Debug)]
enum Position {
    /// Flow and packets already sent in its current turn.
    Wrr { flow: usize, sent: u64 },
    /// Cycle in `1..=w_max` and flow.
    Iwrr { cycle: u64, flow: usize },
}

struct Scheduler<'a> {
    weights: &'a [u64],
    w_max: u64,
    pos: Position,
}

impl Scheduler<'_> {
    fn advance(&mut self) {
        let n = self.weights.len();
        match &mut self.pos {
            Position::Wrr { flow, sent } => {
                *flow = (*flow + 1) % n;
                *sent = 0;
            }
            Position::Iwrr { cycle, flow } => {
                *flow += 1;
                if *flow == n {
                    *flow = 0;
                    *cycle = if *cycle == self.w_max { 1 } else { *cycle + 1 };
                }
            }
        }
    }

    /// Next flow to serve, or `None` with the position unchanged when all
    /// queues are empty.
    fn pick(&mut self, backlogged: impl Fn(usize) -> bool) -> Option<usize> {
        let n = self.weights.len();
        let saved = self.pos.clone();
        let steps = match self.pos {
            Position::Wrr { .. } => n + 1,
            Position::Iwrr { .. } => n * self.w_max as usize + 1,
        };
        for _ in 0..steps {
            match &mut self.pos {
                Position::Wrr { flow, sent } => {
                    let f = *flow;
                    if *sent < self.weights[f] && backlogged(f) {
                        *sent += 1;
                        return Some(f);
                    }
                }
                Position::Iwrr { cycle, flow } => {
                    let f = *flow;
                    if *cycle <= self.weights[f] && backlogged(f) {
                        self.advance();
                        return Some(f);
                    }
                }
            }
            self.advance();
        }
        self.pos = saved;
        None
    }
}

fn check_trace(s: &Scenario, trace: &PacketTrace) -> Result<(), SimError> {
    if trace.flows.len() != s.n() {
        return Err(SimError::Trace {
            flow: trace.flows.len(),
            msg: format!("trace has {} flows, scenario {}", trace.flows.len(), s.n()),
        });
    }
    for (k, (packets, f)) in trace.flows.iter().zip(s.flows()).enumerate() {
        let mut last = Rational::zero();
        for p in packets {
            if p.time < last {
                return Err(SimError::Trace {
                    flow: k,
                    msg: format!("arrival at {} after {}", p.time, last),
                });
            }
            if p.size < f.l_min || p.size > f.l_max {
                return Err(SimError::Trace {
                    flow: k,
                    msg: format!("packet size {} outside [{}, {}]", p.size, f.l_min, f.l_max),
                });
            }
            last = p.time.clone();
        }
    }
    Ok(())
}

/// Runs the scheduler until every packet of `trace` has left.
pub fn run(
    s: &Scenario,
    trace: &PacketTrace,
    discipline: Discipline,
    log: bool,
) -> Result<SimResult, SimError> {
    let c = s.server().rate().cloned().ok_or(SimError::UnsupportedServer)?;
    check_trace(s, trace)?;
    let n = s.n();
    let weights: Vec<u64> = s.flows().iter().map(|f| f.weight).collect();
    let mut sched = Scheduler {
        weights: &weights,
        w_max: weights.iter().copied().max().unwrap_or(1),
        pos: match discipline {
            Discipline::Wrr => Position::Wrr { flow: 0, sent: 0 },
            Discipline::Iwrr => Position::Iwrr { cycle: 1, flow: 0 },
        },
    };
    let mut arrivals: Vec<(&Rational, usize, usize)> = trace
        .flows
        .iter()
        .enumerate()
        .flat_map(|(k, ps)| ps.iter().enumerate().map(move |(j, p)| (&p.time, k, j)))
        .collect();
    arrivals.sort();
    let mut next_arrival = 0;
    let mut queues: Vec<VecDeque<&Packet>> = vec![VecDeque::new(); n];
    let mut records: Vec<Vec<PacketRecord>> = vec![Vec::new(); n];
    let mut events = Vec::new();
    let mut bits = Rational::zero();
    let mut t = Rational::zero();
    let mut in_service: Option<(usize, Rational)> = None;
    let lengths = |q: &Vec<VecDeque<&Packet>>| q.iter().map(VecDeque::len).collect::<Vec<_>>();
    loop {
        // arrivals strictly before the departure, the departure, then
        // arrivals at the same instant
        for strict in [true, false] {
            while next_arrival < arrivals.len() {
                let (at, k, j) = arrivals[next_arrival];
                if (strict && *at >= t) || *at > t {
                    break;
                }
                let p = &trace.flows[k][j];
                queues[k].push_back(p);
                next_arrival += 1;
                if log {
                    events.push(Event {
                        time: p.time.clone(),
                        kind: EventKind::Arrive,
                        flow: k,
                        size: p.size.clone(),
                        queues: lengths(&queues),
                    });
                }
            }
            if strict {
                if let Some((k, size)) = in_service.take() {
                    if log {
                        events.push(Event {
                            time: t.clone(),
                            kind: EventKind::Depart,
                            flow: k,
                            size,
                            queues: lengths(&queues),
                        });
                    }
                }
            }
        }
        match sched.pick(|k| !queues[k].is_empty()) {
            Some(k) => {
                let p = queues[k].pop_front().unwrap();
                let departure = &t + &p.size / &c;
                if log {
                    events.push(Event {
                        time: t.clone(),
                        kind: EventKind::Start,
                        flow: k,
                        size: p.size.clone(),
                        queues: lengths(&queues),
                    });
                }
                records[k].push(PacketRecord {
                    arrival: p.time.clone(),
                    start: t.clone(),
                    departure: departure.clone(),
                    size: p.size.clone(),
                });
                bits += &p.size;
                in_service = Some((k, p.size.clone()));
                t = departure;
            }
            None => match arrivals.get(next_arrival) {
                Some((at, _, _)) => t = (*at).clone(),
                None => break,
            },
        }
    }
    let max_delay = records
        .iter()
        .map(|rs| rs.iter().map(PacketRecord::delay).reduce(|a, b| max_of(&a, &b)))
        .collect();
    let conformant = s
        .flows()
        .iter()
        .zip(&trace.flows)
        .map(|(f, ps)| f.arrival.as_ref().is_none_or(|a| is_conformant(ps, a)))
        .collect();
    Ok(SimResult {
        discipline,
        flows: records,
        max_delay,
        bits_served: bits,
        horizon: t,
        conformant,
        events,
    })
}

pub fn run_wrr(s: &Scenario, trace: &PacketTrace) -> Result<SimResult, SimError> {
    run(s, trace, Discipline::Wrr, false)
}

pub fn run_iwrr(s: &Scenario, trace: &PacketTrace) -> Result<SimResult, SimError> {
    run(s, trace, Discipline::Iwrr, false)
}
