//! Ultimately pseudo-periodic piecewise-affine curves.
//!
//! A [`Curve`] is a nondecreasing function on `[0, ∞)` made of a finite
//! transient of affine pieces followed either by an affine tail (the last
//! piece extends forever) or a periodic tail that repeats the final window
//! of the transient with a fixed increment. The class contains the token
//! bucket, rate-latency and stair functions and is closed under the
//! operations the toolkit needs: pointwise min/max/sum, positive-part
//! difference, min-plus convolution and composition.
//!
//! All curves are left-continuous: at a jump abscissa the value is the limit
//! from the left. Piece `k` covers the half-open interval
//! `(start_k, start_{k+1}]` and stores its right-limit at `start_k`.

mod compose;
mod conv;
mod deviation;
mod pointwise;

pub use deviation::{burst_instant_delay, horizontal_deviation, Delay};

use num::traits::{Signed, Zero};
use thiserror::Error;

use crate::num::{ceil_int, floor_int, from_bigint, int, lcm, max_of, min_of, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CurveError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unstable-combination: {0}")]
    NotMonotone(String),
    #[error("malformed curve: {0}")]
    Malformed(String),
}

/// One affine piece on `(start, next_start]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Piece {
    pub start: Rational,
    /// Right-limit of the curve at `start`.
    pub value: Rational,
    pub slope: Rational,
}

impl Piece {
    pub fn new(start: Rational, value: Rational, slope: Rational) -> Self {
        Piece { start, value, slope }
    }

    pub fn at(&self, t: &Rational) -> Rational {
        &self.value + &self.slope * (t - &self.start)
    }

    fn shifted(&self, dt: &Rational, dy: &Rational) -> Piece {
        Piece::new(&self.start + dt, &self.value + dy, self.slope.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tail {
    /// The last piece extends to infinity.
    Affine,
    /// For `t > end`: `f(t) = f(t - period) + increment`.
    Periodic {
        end: Rational,
        period: Rational,
        increment: Rational,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenBucketSpec {
    pub rate: Rational,
    pub burst: Rational,
}

impl TokenBucketSpec {
    pub fn new(rate: Rational, burst: Rational) -> Result<Self, CurveError> {
        if rate.is_negative() || burst.is_negative() {
            return Err(CurveError::InvalidParameter(format!(
                "token bucket needs nonnegative rate and burst, got r={rate}, b={burst}"
            )));
        }
        Ok(TokenBucketSpec { rate, burst })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RateLatencySpec {
    pub rate: Rational,
    pub latency: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StairSpec {
    pub height: Rational,
    pub period: Rational,
}

/// Where the tail of an operation result starts and how it repeats.
#[derive(Clone, Debug)]
pub(crate) enum TailPlan {
    /// Affine from `from` on.
    Affine { from: Rational },
    /// `f(t + period) = f(t) + increment` for all `t > from`.
    Periodic {
        from: Rational,
        period: Rational,
        increment: Rational,
    },
}

impl TailPlan {
    pub(crate) fn horizon(&self) -> Rational {
        match self {
            TailPlan::Affine { from } => from + int(1),
            TailPlan::Periodic { from, period, .. } => from + period,
        }
    }

    /// Plan for a result with long-term `rate` that is periodic with
    /// `period` (or affine when `None`) after `from`.
    pub(crate) fn with(from: Rational, period: Option<Rational>, rate: &Rational) -> TailPlan {
        let from = max_of(&from, &Rational::zero());
        match period {
            None => TailPlan::Affine { from },
            Some(p) => TailPlan::Periodic {
                increment: rate * &p,
                from,
                period: p,
            },
        }
    }
}

/// Combines two optional periods; `None` stands for an affine tail which
/// is periodic with any period.
pub(crate) fn common_period(a: Option<&Rational>, b: Option<&Rational>) -> Option<Rational> {
    match (a, b) {
        (None, None) => None,
        (Some(p), None) | (None, Some(p)) => Some(p.clone()),
        (Some(p), Some(q)) => Some(lcm(p, q)),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Curve {
    origin: Rational,
    pieces: Vec<Piece>,
    tail: Tail,
}

impl Curve {
    /// Builds a curve after checking every representation invariant.
    pub fn new(origin: Rational, pieces: Vec<Piece>, tail: Tail) -> Result<Curve, CurveError> {
        let curve = Curve {
            origin,
            pieces,
            tail,
        };
        curve.validate()?;
        Ok(curve.normalized())
    }

    fn validate(&self) -> Result<(), CurveError> {
        let bad = |m: String| Err(CurveError::Malformed(m));
        if self.pieces.is_empty() {
            return bad("no pieces".into());
        }
        if !self.pieces[0].start.is_zero() {
            return bad("first piece must start at 0".into());
        }
        if self.origin.is_negative() {
            return bad(format!("negative value {} at 0", self.origin));
        }
        if self.pieces[0].value < self.origin {
            return bad("decreasing jump at 0".into());
        }
        for (k, p) in self.pieces.iter().enumerate() {
            if p.slope.is_negative() {
                return bad(format!("negative slope on piece {k}"));
            }
            if k > 0 {
                let prev = &self.pieces[k - 1];
                if p.start <= prev.start {
                    return bad(format!("piece {k} does not start after piece {}", k - 1));
                }
                if p.value < prev.at(&p.start) {
                    return bad(format!("decreasing jump at {}", p.start));
                }
            }
        }
        if let Tail::Periodic {
            end,
            period,
            increment,
        } = &self.tail
        {
            if !period.is_positive() {
                return bad("period must be positive".into());
            }
            if increment.is_negative() {
                return bad("periodic increment must be nonnegative".into());
            }
            if end < period {
                return bad("periodic window must lie inside the transient".into());
            }
            let last = self.pieces.last().unwrap();
            if last.start >= *end {
                return bad("piece starts past the transient end".into());
            }
            let wrapped = self.right_limit(&(end - period)) + increment;
            if wrapped < last.at(end) {
                return bad("decreasing jump where the period wraps".into());
            }
        }
        Ok(())
    }

    pub fn zero() -> Curve {
        Curve::constant(Rational::zero())
    }

    /// `f(t) = v` for every `t ≥ 0`, including 0.
    pub fn constant(v: Rational) -> Curve {
        Curve {
            origin: v.clone(),
            pieces: vec![Piece::new(Rational::zero(), v, Rational::zero())],
            tail: Tail::Affine,
        }
    }

    /// `γ_{r,b}`: 0 at the origin and `b + r t` afterwards.
    pub fn token_bucket(spec: &TokenBucketSpec) -> Result<Curve, CurveError> {
        TokenBucketSpec::new(spec.rate.clone(), spec.burst.clone())?;
        Ok(Curve {
            origin: Rational::zero(),
            pieces: vec![Piece::new(
                Rational::zero(),
                spec.burst.clone(),
                spec.rate.clone(),
            )],
            tail: Tail::Affine,
        })
    }

    /// `β_{R,T}(t) = R·max(t − T, 0)`.
    pub fn rate_latency(spec: &RateLatencySpec) -> Result<Curve, CurveError> {
        if spec.rate.is_negative() || spec.latency.is_negative() {
            return Err(CurveError::InvalidParameter(format!(
                "rate-latency needs R ≥ 0 and T ≥ 0, got R={}, T={}",
                spec.rate, spec.latency
            )));
        }
        let mut pieces = Vec::with_capacity(2);
        if spec.latency.is_positive() {
            pieces.push(Piece::new(Rational::zero(), Rational::zero(), Rational::zero()));
        }
        pieces.push(Piece::new(
            spec.latency.clone(),
            Rational::zero(),
            spec.rate.clone(),
        ));
        Curve::new(Rational::zero(), pieces, Tail::Affine)
    }

    /// Constant-rate function `R t`.
    pub fn affine_rate(rate: Rational) -> Curve {
        Curve::rate_latency(&RateLatencySpec {
            rate,
            latency: Rational::zero(),
        })
        .expect("nonnegative rate")
    }

    /// `ν_{h,P}(t) = h ⌈t/P⌉`.
    pub fn stair(spec: &StairSpec) -> Result<Curve, CurveError> {
        if !spec.height.is_positive() || !spec.period.is_positive() {
            return Err(CurveError::InvalidParameter(format!(
                "stair needs h > 0 and P > 0, got h={}, P={}",
                spec.height, spec.period
            )));
        }
        Ok(Curve {
            origin: Rational::zero(),
            pieces: vec![Piece::new(
                Rational::zero(),
                spec.height.clone(),
                Rational::zero(),
            )],
            tail: Tail::Periodic {
                end: spec.period.clone(),
                period: spec.period.clone(),
                increment: spec.height.clone(),
            },
        })
    }

    pub fn origin(&self) -> &Rational {
        &self.origin
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn tail(&self) -> &Tail {
        &self.tail
    }

    pub fn is_zero(&self) -> bool {
        self.origin.is_zero()
            && self.pieces.len() == 1
            && self.pieces[0].value.is_zero()
            && self.pieces[0].slope.is_zero()
            && self.tail == Tail::Affine
    }

    /// `lim_{t→∞} f(t)/t`.
    pub fn long_term_rate(&self) -> Rational {
        match &self.tail {
            Tail::Affine => self.pieces.last().unwrap().slope.clone(),
            Tail::Periodic {
                period, increment, ..
            } => increment / period,
        }
    }

    /// Abscissa after which the curve is periodic (or affine).
    pub(crate) fn periodic_from(&self) -> Rational {
        match &self.tail {
            Tail::Affine => self.pieces.last().unwrap().start.clone(),
            Tail::Periodic { end, period, .. } => end - period,
        }
    }

    pub(crate) fn period(&self) -> Option<&Rational> {
        match &self.tail {
            Tail::Affine => None,
            Tail::Periodic { period, .. } => Some(period),
        }
    }

    /// End of the explicitly stored transient.
    pub(crate) fn transient_end(&self) -> Rational {
        match &self.tail {
            Tail::Affine => self.pieces.last().unwrap().start.clone(),
            Tail::Periodic { end, .. } => end.clone(),
        }
    }

    /// Value at `t` under the left-continuity convention.
    pub fn eval(&self, t: &Rational) -> Result<Rational, CurveError> {
        if t.is_negative() {
            return Err(CurveError::Domain(format!("curve evaluated at t = {t} < 0")));
        }
        Ok(self.value(t))
    }

    /// Convenience evaluation in floating point.
    pub fn eval_f64(&self, t: f64) -> f64 {
        let t = crate::num::from_f64_decimal(t.max(0.0)).unwrap_or_else(Rational::zero);
        crate::num::to_f64(&self.value(&t))
    }

    pub(crate) fn value(&self, t: &Rational) -> Rational {
        debug_assert!(!t.is_negative());
        if t.is_zero() {
            return self.origin.clone();
        }
        if let Tail::Periodic {
            end,
            period,
            increment,
        } = &self.tail
        {
            if t > end {
                let k = ceil_int(&((t - end) / period));
                let k = from_bigint(k);
                let inner = t - &k * period;
                return self.value(&inner) + k * increment;
            }
        }
        let idx = self.pieces.partition_point(|p| &p.start < t) - 1;
        self.pieces[idx].at(t)
    }

    /// `f(t+)`.
    pub fn right_limit(&self, t: &Rational) -> Rational {
        self.piece_after(t).0
    }

    /// Right-limit value and slope of the piece covering `(t, t + ε)`.
    pub(crate) fn piece_after(&self, t: &Rational) -> (Rational, Rational) {
        if let Tail::Periodic {
            end,
            period,
            increment,
        } = &self.tail
        {
            if t >= end {
                let k = from_bigint(floor_int(&((t - end) / period))) + int(1);
                let inner = t - &k * period;
                let (v, s) = self.piece_after(&inner);
                return (v + k * increment, s);
            }
        }
        let idx = self.pieces.partition_point(|p| &p.start <= t) - 1;
        let p = &self.pieces[idx];
        (p.at(t), p.slope.clone())
    }

    /// Pieces covering `(lo, hi]`; the first start is clipped to `lo`.
    pub(crate) fn unroll_range(&self, lo: &Rational, hi: &Rational) -> Vec<Piece> {
        debug_assert!(lo < hi);
        let mut out = Vec::new();
        let clip = |p: &Piece, lo: &Rational| -> Piece {
            if &p.start < lo {
                Piece::new(lo.clone(), p.at(lo), p.slope.clone())
            } else {
                p.clone()
            }
        };
        let transient_hi = match &self.tail {
            Tail::Affine => hi.clone(),
            Tail::Periodic { end, .. } => min_of(end, hi),
        };
        if lo < &transient_hi {
            let first = self.pieces.partition_point(|p| &p.start <= lo) - 1;
            for p in &self.pieces[first..] {
                if p.start >= transient_hi {
                    break;
                }
                out.push(clip(p, lo));
            }
        }
        if let Tail::Periodic {
            end,
            period,
            increment,
        } = &self.tail
        {
            if hi > end {
                let window_start = end - period;
                let window = self.unroll_range(&window_start, end);
                let start_at = max_of(lo, end);
                let mut k = from_bigint(floor_int(&((&start_at - end) / period))) + int(1);
                loop {
                    let dt = &k * period;
                    let dy = &k * increment;
                    if &window_start + &dt >= *hi {
                        break;
                    }
                    for p in &window {
                        let q = p.shifted(&dt, &dy);
                        if &q.start >= hi {
                            break;
                        }
                        // skip pieces that end before lo
                        out.push(q);
                    }
                    k += int(1);
                }
                let keep_from = out
                    .iter()
                    .rposition(|p| &p.start <= lo)
                    .unwrap_or(0);
                out.drain(..keep_from);
                if let Some(first) = out.first_mut() {
                    if &first.start < lo {
                        *first = clip(first, lo);
                    }
                }
            }
        }
        out
    }

    pub(crate) fn unroll(&self, hi: &Rational) -> Vec<Piece> {
        self.unroll_range(&Rational::zero(), hi)
    }

    /// Tight constants `(lo, hi)` with `ρt + lo ≤ f(t) ≤ ρt + hi` for all
    /// `t ≥ 0`, where `ρ` is the long-term rate.
    pub(crate) fn offsets(&self) -> (Rational, Rational) {
        let rate = self.long_term_rate();
        let mut lo = self.origin.clone();
        let mut hi = self.origin.clone();
        let mut note = |v: Rational| {
            if v < lo {
                lo = v.clone();
            }
            if v > hi {
                hi = v;
            }
        };
        let end = self.transient_end();
        let n = self.pieces.len();
        for (k, p) in self.pieces.iter().enumerate() {
            note(&p.value - &rate * &p.start);
            let stop = if k + 1 < n {
                self.pieces[k + 1].start.clone()
            } else {
                end.clone()
            };
            if stop > p.start {
                note(p.at(&stop) - &rate * &stop);
            }
        }
        (lo, hi)
    }

    /// Rebuilds a curve from pieces covering `(0, plan.horizon()]`.
    pub(crate) fn fold(origin: Rational, pieces: Vec<Piece>, plan: TailPlan) -> Curve {
        let curve = Curve::try_fold(origin, pieces, plan);
        debug_assert!(curve.is_ok(), "{curve:?}");
        curve.expect("operation preserves the curve invariants")
    }

    pub(crate) fn try_fold(
        origin: Rational,
        pieces: Vec<Piece>,
        plan: TailPlan,
    ) -> Result<Curve, CurveError> {
        let pieces = merge_pieces(pieces);
        let curve = match plan {
            TailPlan::Affine { from } => {
                let keep = pieces.partition_point(|p| p.start <= from).max(1);
                let mut pieces = pieces;
                debug_assert!(
                    pieces.len() <= keep,
                    "affine tail expected after {from}, found breakpoints beyond"
                );
                pieces.truncate(keep);
                Curve {
                    origin,
                    pieces,
                    tail: Tail::Affine,
                }
            }
            TailPlan::Periodic {
                from,
                period,
                increment,
            } => {
                let end = &from + &period;
                let mut pieces = pieces;
                let keep = pieces.partition_point(|p| p.start < end);
                pieces.truncate(keep);
                Curve {
                    origin,
                    pieces,
                    tail: Tail::Periodic {
                        end,
                        period,
                        increment,
                    },
                }
            }
        };
        curve.validate()?;
        Ok(curve.normalized())
    }

    fn normalized(mut self) -> Curve {
        self.pieces = merge_pieces(std::mem::take(&mut self.pieces));
        if let Tail::Periodic { .. } = self.tail {
            self.shrink_period();
            self.try_affine_tail();
        }
        self
    }

    /// Moves the periodic window earlier while the curve already repeats.
    fn shrink_period(&mut self) {
        loop {
            let Tail::Periodic {
                end,
                period,
                increment,
            } = &self.tail
            else {
                return;
            };
            let two = period * int(2);
            if end < &two {
                return;
            }
            let prev = self.unroll_range(&(end - &two), &(end - period));
            let last = self.unroll_range(&(end - period), end);
            let shifted: Vec<Piece> = prev.iter().map(|p| p.shifted(period, increment)).collect();
            if merge_pieces(shifted) != merge_pieces(last) {
                return;
            }
            let new_end = end - period;
            let keep = self.pieces.partition_point(|p| p.start < new_end);
            self.pieces.truncate(keep);
            self.tail = Tail::Periodic {
                end: new_end,
                period: period.clone(),
                increment: increment.clone(),
            };
        }
    }

    fn try_affine_tail(&mut self) {
        let Tail::Periodic {
            end,
            period,
            increment,
        } = &self.tail
        else {
            return;
        };
        let last = self.pieces.last().unwrap();
        let window_start = end - period;
        if last.start <= window_start && &last.slope * period == *increment {
            self.tail = Tail::Affine;
        }
    }

    /// Exact functional equality.
    pub fn same_function(&self, other: &Curve) -> bool {
        if self.origin != other.origin || self.long_term_rate() != other.long_term_rate() {
            return false;
        }
        let from = max_of(&self.periodic_from(), &other.periodic_from());
        let horizon = TailPlan::with(
            from,
            common_period(self.period(), other.period()),
            &self.long_term_rate(),
        )
        .horizon();
        let a = self.unroll(&horizon);
        let b = other.unroll(&horizon);
        let mut cuts: Vec<&Rational> = a.iter().chain(b.iter()).map(|p| &p.start).collect();
        cuts.sort();
        cuts.dedup();
        cuts.iter().all(|t| self.piece_after(t) == other.piece_after(t))
            && cuts
                .iter()
                .skip(1)
                .all(|t| self.value(t) == other.value(t))
    }

    /// `self(t) ≥ other(t)` for every `t ≥ 0`.
    pub fn dominates(&self, other: &Curve) -> bool {
        self.min(other).same_function(other)
    }
}

fn merge_pieces(pieces: Vec<Piece>) -> Vec<Piece> {
    let mut out: Vec<Piece> = Vec::with_capacity(pieces.len());
    for p in pieces {
        if let Some(last) = out.last() {
            if last.start == p.start {
                out.pop();
            } else if last.slope == p.slope && last.at(&p.start) == p.value {
                continue;
            }
        }
        out.push(p);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::ratio;

    fn tb(r: i64, b: i64) -> Curve {
        Curve::token_bucket(&TokenBucketSpec::new(int(r), int(b)).unwrap()).unwrap()
    }

    fn stair(h: i64, p: i64) -> Curve {
        Curve::stair(&StairSpec {
            height: int(h),
            period: int(p),
        })
        .unwrap()
    }

    #[test]
    fn token_bucket_jumps_after_origin() {
        let c = tb(1_000_000, 30_000);
        assert_eq!(c.eval(&int(0)).unwrap(), int(0));
        assert_eq!(c.eval(&int(1)).unwrap(), int(1_030_000));
        let fig = Curve::token_bucket(
            &TokenBucketSpec::new(int(650_000), int(30208)).unwrap(),
        )
        .unwrap();
        assert_eq!(fig.eval(&ratio(1, 10)).unwrap(), int(95208));
        assert!(tb(0, 0).is_zero());
        assert!(TokenBucketSpec::new(int(-1), int(0)).is_err());
        assert!(TokenBucketSpec::new(int(1), int(-1)).is_err());
    }

    #[test]
    fn rate_latency_values() {
        let c = Curve::rate_latency(&RateLatencySpec {
            rate: int(2),
            latency: int(3),
        })
        .unwrap();
        assert_eq!(c.value(&int(3)), int(0));
        assert_eq!(c.value(&int(5)), int(4));
        assert_eq!(c.long_term_rate(), int(2));
    }

    #[test]
    fn stair_is_left_continuous() {
        let c = stair(2, 5);
        assert_eq!(c.value(&int(0)), int(0));
        assert_eq!(c.value(&ratio(1, 10)), int(2));
        assert_eq!(c.value(&int(5)), int(2));
        assert_eq!(c.value(&ratio(51, 10)), int(4));
        assert_eq!(c.value(&int(12)), int(6));
        assert_eq!(stair(1, 1).value(&int(3)), int(3));
        assert_eq!(c.long_term_rate(), ratio(2, 5));
        assert_eq!(c.right_limit(&int(5)), int(4));
        assert!(c.eval(&int(-1)).is_err());
    }

    #[test]
    fn periodic_tail_shifts_by_increment() {
        let c = stair(3, 7);
        for k in 1..40 {
            let t = ratio(k, 3);
            assert_eq!(c.value(&(&t + int(7))), c.value(&t) + int(3));
        }
    }

    #[test]
    fn unroll_matches_eval() {
        let c = stair(2, 5);
        let pieces = c.unroll_range(&int(3), &int(17));
        assert_eq!(pieces[0].start, int(3));
        let starts: Vec<_> = pieces.iter().map(|p| p.start.clone()).collect();
        assert_eq!(starts, vec![int(3), int(5), int(10), int(15)]);
        for p in &pieces {
            assert_eq!(c.right_limit(&p.start), p.value);
        }
    }

    #[test]
    fn validation_rejects_decreasing() {
        let bad = Curve::new(
            int(0),
            vec![
                Piece::new(int(0), int(5), int(0)),
                Piece::new(int(1), int(3), int(0)),
            ],
            Tail::Affine,
        );
        assert!(matches!(bad, Err(CurveError::Malformed(_))));
        let neg = Curve::new(int(0), vec![Piece::new(int(0), int(0), int(-1))], Tail::Affine);
        assert!(neg.is_err());
    }

    #[test]
    fn linear_periodic_collapses_to_affine() {
        let c = Curve::new(
            int(0),
            vec![Piece::new(int(0), int(0), int(2))],
            Tail::Periodic {
                end: int(3),
                period: int(3),
                increment: int(6),
            },
        )
        .unwrap();
        assert_eq!(c.tail(), &Tail::Affine);
        assert!(c.same_function(&Curve::affine_rate(int(2))));
    }

    #[test]
    fn offsets_bound_the_curve() {
        let c = stair(2, 5);
        let (lo, hi) = c.offsets();
        assert_eq!(lo, int(0));
        assert_eq!(hi, int(2));
    }
}
