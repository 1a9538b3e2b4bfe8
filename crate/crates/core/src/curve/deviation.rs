//! Pseudo-inverses and horizontal deviation.

use std::fmt;

use num::traits::{Signed, Zero};

use super::{common_period, Curve, Tail, TailPlan};
use crate::num::{ceil_int, floor_int, from_bigint, int, max_of, to_f64, Rational};

/// A delay in seconds, possibly unbounded. Orders with `Infinite` last.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Delay {
    Finite(Rational),
    Infinite,
}

impl Delay {
    pub fn is_finite(&self) -> bool {
        matches!(self, Delay::Finite(_))
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Delay::Finite(d) => Some(d),
            Delay::Infinite => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Delay::Finite(d) => to_f64(d),
            Delay::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Delay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Delay::Finite(d) => write!(f, "{}", crate::num::format_sig(to_f64(d), 12)),
            Delay::Infinite => f.write_str("inf"),
        }
    }
}

impl Curve {
    /// First abscissa inside the stored transient where the curve reaches
    /// `y` (`strict`: exceeds `y`).
    fn search_transient(&self, y: &Rational, strict: bool) -> Option<Rational> {
        let reached = |v: &Rational| if strict { v > y } else { v >= y };
        let end = match &self.tail {
            Tail::Affine => None,
            Tail::Periodic { end, .. } => Some(end),
        };
        for (k, p) in self.pieces.iter().enumerate() {
            if reached(&p.value) {
                return Some(p.start.clone());
            }
            if !p.slope.is_positive() {
                continue;
            }
            let next = self.pieces.get(k + 1).map(|q| &q.start).or(end);
            let t = &p.start + (y - &p.value) / &p.slope;
            match next {
                Some(e) if &t > e || (strict && &t == e) => continue,
                _ => return Some(t),
            }
        }
        None
    }

    fn inverse(&self, y: &Rational, strict: bool) -> Option<Rational> {
        if if strict { &self.origin > y } else { &self.origin >= y } {
            return Some(Rational::zero());
        }
        if let Some(t) = self.search_transient(y, strict) {
            return Some(t);
        }
        let Tail::Periodic {
            end,
            period,
            increment,
        } = &self.tail
        else {
            return None;
        };
        if increment.is_zero() {
            return None;
        }
        let f_end = self.value(end);
        let steps = (y - &f_end) / increment;
        let k = if strict {
            from_bigint(floor_int(&steps)) + int(1)
        } else {
            from_bigint(ceil_int(&steps))
        };
        let target = y - &k * increment;
        let window_start = end - period;
        let reached = |v: &Rational| if strict { *v > target } else { *v >= target };
        let window = self.unroll_range(&window_start, end);
        for (j, p) in window.iter().enumerate() {
            if reached(&p.value) {
                return Some(&p.start + &k * period);
            }
            if p.slope.is_positive() {
                let e = window.get(j + 1).map_or(end, |q| &q.start);
                let t = &p.start + (&target - &p.value) / &p.slope;
                if &t < e || (!strict && &t == e) {
                    return Some(t + &k * period);
                }
            }
        }
        unreachable!("periodic window must reach the shifted level")
    }

    /// `inf { s ≥ 0 : f(s) ≥ y }`, `None` when the curve never reaches `y`.
    pub fn lower_inverse(&self, y: &Rational) -> Option<Rational> {
        self.inverse(y, false)
    }

    /// `inf { s ≥ 0 : f(s) > y }`.
    pub fn upper_inverse(&self, y: &Rational) -> Option<Rational> {
        self.inverse(y, true)
    }
}

/// Last abscissa that can carry the supremum of the virtual delay.
fn horizon(alpha: &Curve, beta: &Curve) -> Option<Rational> {
    let (ra, rb) = (alpha.long_term_rate(), beta.long_term_rate());
    let (lo_a, hi_a) = alpha.offsets();
    if ra > rb {
        return None;
    }
    if ra < rb {
        let (lo_b, _) = beta.offsets();
        let h = (hi_a - lo_b) / (rb - ra);
        return Some(max_of(&h, &alpha.periodic_from()) + int(1));
    }
    if ra.is_zero() {
        return Some(alpha.periodic_from() + int(1));
    }
    let level = beta.right_limit(&beta.periodic_from());
    let start = max_of(&alpha.periodic_from(), &((level - lo_a) / &ra));
    let plan = TailPlan::with(start, common_period(alpha.period(), beta.period()), &ra);
    Some(plan.horizon())
}

fn delay_at(
    beta: &Curve,
    level: &Rational,
    t: &Rational,
    strict: bool,
) -> Option<Rational> {
    let s = beta.inverse(level, strict)?;
    Some(max_of(&(s - t), &Rational::zero()))
}

/// `sup_{t ≥ 0} inf { d ≥ 0 : α(t) ≤ β(t + d) }`.
pub fn horizontal_deviation(alpha: &Curve, beta: &Curve) -> Delay {
    let Some(h) = horizon(alpha, beta) else {
        return Delay::Infinite;
    };
    let Some(mut best) = delay_at(beta, alpha.origin(), &Rational::zero(), false) else {
        return Delay::Infinite;
    };
    let pieces = alpha.unroll(&h);
    let top = alpha.value(&h);
    let reach = match beta.lower_inverse(&top) {
        Some(s) => max_of(&s, &beta.transient_end()) + int(1),
        None => return Delay::Infinite,
    };
    let mut levels: Vec<Rational> = Vec::new();
    for p in beta.unroll(&reach) {
        levels.push(beta.value(&p.start));
        levels.push(p.value);
    }
    levels.sort();
    levels.dedup();
    let mut note = |d: Option<Rational>| -> bool {
        match d {
            Some(d) => {
                if d > best {
                    best = d;
                }
                true
            }
            None => false,
        }
    };
    for (k, p) in pieces.iter().enumerate() {
        let e = pieces.get(k + 1).map_or_else(|| h.clone(), |q| q.start.clone());
        let rising = p.slope.is_positive();
        if !note(delay_at(beta, &p.value, &p.start, rising)) {
            return Delay::Infinite;
        }
        let v_end = p.at(&e);
        if rising {
            let from = levels.partition_point(|l| l <= &p.value);
            for l in levels[from..].iter().take_while(|l| *l < &v_end) {
                let t = &p.start + (l - &p.value) / &p.slope;
                if !note(delay_at(beta, l, &t, true)) {
                    return Delay::Infinite;
                }
            }
        }
        if !note(delay_at(beta, &v_end, &e, false)) {
            return Delay::Infinite;
        }
    }
    Delay::Finite(best)
}

/// `lim_{t → 0+}` of the virtual delay, the delay seen by the burst that
/// arrives immediately after time 0.
pub fn burst_instant_delay(alpha: &Curve, beta: &Curve) -> Delay {
    let (v, slope) = alpha.piece_after(&Rational::zero());
    match beta.inverse(&v, slope.is_positive()) {
        Some(s) => Delay::Finite(s),
        None => Delay::Infinite,
    }
}
