//! Random curves and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use num::traits::Zero;
use rand::Rng;
use wrr_nc::curve::{Curve, Piece, Tail, TokenBucketSpec};
use wrr_nc::num::{int, ratio, to_f64, Rational};
use wrr_nc::scenario::{AggregateService, FlowSpec, Scenario};

/// A curve kept as plain numbers and evaluated without the library.
#[derive(Clone, Debug)]
pub struct RawCurve {
    pub origin: f64,
    /// (start, right-limit value, slope)
    pub pieces: Vec<(f64, f64, f64)>,
    /// (end, period, increment)
    pub periodic: Option<(f64, f64, f64)>,
    pub curve: Curve,
}

impl RawCurve {
    fn from_exact(origin: Rational, pieces: Vec<Piece>, tail: Tail) -> RawCurve {
        let curve = Curve::new(origin.clone(), pieces.clone(), tail.clone()).expect("valid random curve");
        RawCurve {
            origin: to_f64(&origin),
            pieces: pieces
                .iter()
                .map(|p| (to_f64(&p.start), to_f64(&p.value), to_f64(&p.slope)))
                .collect(),
            periodic: match tail {
                Tail::Affine => None,
                Tail::Periodic {
                    end,
                    period,
                    increment,
                } => Some((to_f64(&end), to_f64(&period), to_f64(&increment))),
            },
            curve,
        }
    }

    fn local(&self, t: f64) -> f64 {
        let mut idx = 0;
        for (k, p) in self.pieces.iter().enumerate() {
            if p.0 < t {
                idx = k;
            }
        }
        let (s, v, r) = self.pieces[idx];
        v + r * (t - s)
    }

    fn local_right(&self, t: f64) -> f64 {
        let mut idx = 0;
        for (k, p) in self.pieces.iter().enumerate() {
            if p.0 <= t {
                idx = k;
            }
        }
        let (s, v, r) = self.pieces[idx];
        v + r * (t - s)
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.origin;
        }
        if let Some((end, period, inc)) = self.periodic {
            if t > end {
                let k = ((t - end) / period).ceil();
                return self.eval(t - k * period) + k * inc;
            }
        }
        self.local(t)
    }

    pub fn right_limit(&self, t: f64) -> f64 {
        if let Some((end, period, inc)) = self.periodic {
            if t >= end {
                let k = ((t - end) / period).floor() + 1.0;
                return self.right_limit(t - k * period) + k * inc;
            }
        }
        self.local_right(t)
    }

    /// Every abscissa in `[0, h]` where the curve may bend or jump.
    pub fn breakpoints(&self, h: f64) -> Vec<f64> {
        let mut out: Vec<f64> = self.pieces.iter().map(|p| p.0).filter(|x| *x <= h).collect();
        if let Some((end, period, _)) = self.periodic {
            let window: Vec<f64> = self
                .pieces
                .iter()
                .map(|p| p.0)
                .filter(|x| *x >= end - period && *x < end)
                .chain([end - period])
                .collect();
            let mut k = 1.0;
            while end - period + k * period <= h {
                for x in &window {
                    let y = x + k * period;
                    if y <= h {
                        out.push(y);
                    }
                }
                k += 1.0;
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup();
        out
    }

    pub fn rate(&self) -> f64 {
        match self.periodic {
            Some((_, p, inc)) => inc / p,
            None => self.pieces.last().unwrap().2,
        }
    }

    pub fn transient_end(&self) -> f64 {
        match self.periodic {
            Some((end, _, _)) => end,
            None => self.pieces.last().unwrap().0,
        }
    }
}

fn quarter<R: Rng>(rng: &mut R, max_quarters: i64) -> Rational {
    ratio(rng.gen_range(0..=max_quarters), 4)
}

fn slope<R: Rng>(rng: &mut R) -> Rational {
    [int(0), ratio(1, 2), int(1), int(2), int(3)][rng.gen_range(0..5)].clone()
}

/// Random nondecreasing curve with integer breakpoints and dyadic values,
/// so that floating evaluation on quarter grids is exact.
pub fn random_curve<R: Rng>(rng: &mut R) -> RawCurve {
    let n = rng.gen_range(1..=4);
    let origin = if rng.gen_bool(0.3) {
        quarter(rng, 8)
    } else {
        Rational::zero()
    };
    let mut pieces: Vec<Piece> = Vec::new();
    let mut x = int(0);
    let mut span = 0i64;
    let mut level = origin.clone();
    for _ in 0..n {
        let jump = if rng.gen_bool(0.5) {
            quarter(rng, 12)
        } else {
            Rational::zero()
        };
        let value = &level + jump;
        let s = slope(rng);
        let steps = rng.gen_range(1..=3);
        span += steps;
        let len = int(steps);
        level = &value + &s * &len;
        pieces.push(Piece::new(x.clone(), value, s));
        x = &x + len;
    }
    let tail = if rng.gen_bool(0.5) {
        Tail::Affine
    } else {
        let end = x.clone();
        let period = int(rng.gen_range(1..=span.min(4)));
        let probe = Curve::new(origin.clone(), pieces.clone(), Tail::Affine).unwrap();
        let at_end = probe.eval(&end).unwrap();
        let back = probe.right_limit(&(&end - &period));
        let need = at_end - back;
        let increment = need + quarter(rng, 8);
        Tail::Periodic {
            end,
            period,
            increment,
        }
    };
    RawCurve::from_exact(origin, pieces, tail)
}

/// Random nondecreasing curve that is 0 at the origin.
pub fn random_curve_from_zero<R: Rng>(rng: &mut R) -> RawCurve {
    loop {
        let c = random_curve(rng);
        if c.origin == 0.0 {
            return c;
        }
    }
}

/// `inf_{0 ≤ s ≤ t} f(t − s) + g(s)` over the quarter grid, exact for
/// integer breakpoints and quarter-grid `t`.
pub fn conv_oracle(f: &RawCurve, g: &RawCurve, t: f64) -> f64 {
    let steps = (t * 4.0).round() as i64;
    (0..=steps)
        .map(|k| {
            let s = k as f64 / 4.0;
            f.eval(t - s) + g.eval(s)
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

/// `α(t) ≤ β(t + d)` for all `t ∈ [0, h]`, checked at every candidate
/// abscissa and just after it.
fn shifted_dominates(alpha: &RawCurve, beta: &RawCurve, d: f64, h: f64) -> bool {
    let tol = 1e-14 * (1.0 + alpha.eval(h).abs());
    let mut cand = alpha.breakpoints(h);
    cand.extend(
        beta.breakpoints(h + d + 1.0)
            .into_iter()
            .map(|x| x - d)
            .filter(|x| *x >= 0.0 && *x <= h),
    );
    cand.push(h);
    cand.iter().all(|&t| {
        alpha.eval(t) <= beta.eval(t + d) + tol && alpha.right_limit(t) <= beta.right_limit(t + d) + tol
    })
}

/// Horizontal deviation by bisection on the shift.
pub fn hdev_oracle(alpha: &RawCurve, beta: &RawCurve) -> f64 {
    if alpha.rate() > beta.rate() {
        return f64::INFINITY;
    }
    let h = 4.0 * (alpha.transient_end() + beta.transient_end() + 8.0)
        + 64.0 * (1.0 + alpha.eval(alpha.transient_end() + 8.0));
    let mut hi = 1.0;
    while !shifted_dominates(alpha, beta, hi, h) {
        hi *= 2.0;
        if hi > 1e7 {
            return f64::INFINITY;
        }
    }
    if shifted_dominates(alpha, beta, 0.0, h) {
        return 0.0;
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if shifted_dominates(alpha, beta, mid, h) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Random constant-rate scenario with `n` flows. With `unconstrained`, some
/// cross-flows lose their arrival curve.
pub fn random_scenario<R: Rng>(rng: &mut R, n: usize, unconstrained: bool) -> Scenario {
    let foi = rng.gen_range(0..n);
    let flows: Vec<FlowSpec> = (0..n)
        .map(|k| {
            let l_min = int(100 * rng.gen_range(1..=8));
            let l_max = &l_min + int(100 * rng.gen_range(0..=8));
            let arrival = if unconstrained && k != foi && rng.gen_bool(0.2) {
                None
            } else {
                Some(
                    TokenBucketSpec::new(
                        int(1000 * rng.gen_range(1..=10)),
                        int(500 * rng.gen_range(0..=20)),
                    )
                    .unwrap(),
                )
            };
            FlowSpec::new(rng.gen_range(1..=4), l_min, l_max, arrival)
        })
        .collect();
    let total: Rational = flows
        .iter()
        .filter_map(|f| f.arrival.as_ref().map(|a| a.rate.clone()))
        .sum();
    let u = ratio(rng.gen_range(2..=9), 10);
    Scenario::new(flows, AggregateService::ConstantRate(total / u), foi).unwrap()
}

/// Sampling grid of `count` points over `[0, t_max]`.
pub fn grid(t_max: &Rational, count: i64) -> Vec<Rational> {
    (0..=count).map(|k| t_max * ratio(k, count)).collect()
}

/// `f(t) ≥ g(t)` at every grid point.
pub fn above_on(f: &Curve, g: &Curve, ts: &[Rational]) -> bool {
    ts.iter().all(|t| f.eval(t).unwrap() >= g.eval(t).unwrap())
}
