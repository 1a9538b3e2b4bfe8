//! Pointwise sum, minimum, maximum and positive-part difference.

use num::traits::{Signed, Zero};

use super::{common_period, Curve, CurveError, Piece, TailPlan};
use crate::num::{max_of, min_of, Rational};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Op {
    Add,
    Min,
    Max,
    SubPos,
}

/// Constant `T` after which `low` stays strictly below `high`, given
/// `rate(low) < rate(high)`.
fn crossing_bound(low: &Curve, high: &Curve) -> Rational {
    let (_, hi_low) = low.offsets();
    let (lo_high, _) = high.offsets();
    (hi_low - lo_high) / (high.long_term_rate() - low.long_term_rate())
}

fn tail_like(c: &Curve, from: Rational) -> TailPlan {
    TailPlan::with(
        max_of(&from, &c.periodic_from()),
        c.period().cloned(),
        &c.long_term_rate(),
    )
}

fn aligned(f: &Curve, g: &Curve, rate: &Rational) -> TailPlan {
    TailPlan::with(
        max_of(&f.periodic_from(), &g.periodic_from()),
        common_period(f.period(), g.period()),
        rate,
    )
}

fn plan(op: Op, f: &Curve, g: &Curve) -> TailPlan {
    let (rf, rg) = (f.long_term_rate(), g.long_term_rate());
    match op {
        Op::Add => aligned(f, g, &(&rf + &rg)),
        Op::Min | Op::Max if rf == rg => aligned(f, g, &rf),
        Op::Min | Op::Max => {
            let (low, high) = if rf < rg { (f, g) } else { (g, f) };
            let t = crossing_bound(low, high);
            if op == Op::Min {
                tail_like(low, t)
            } else {
                tail_like(high, t)
            }
        }
        Op::SubPos => {
            if rf == rg {
                aligned(f, g, &Rational::zero())
            } else if rf > rg {
                let t = crossing_bound(g, f);
                let from = max_of(&t, &max_of(&f.periodic_from(), &g.periodic_from()));
                TailPlan::with(from, common_period(f.period(), g.period()), &(rf - rg))
            } else {
                TailPlan::with(crossing_bound(f, g), None, &Rational::zero())
            }
        }
    }
}

/// Appends the result of `op` on one elementary interval `(s, e]` where
/// both operands are affine.
fn combine_segment(
    op: Op,
    s: &Rational,
    e: &Rational,
    (va, sa): (Rational, Rational),
    (vb, sb): (Rational, Rational),
    out: &mut Vec<Piece>,
) {
    let split = |first: Piece, second_at_cross: &dyn Fn(&Rational) -> Piece, x: Rational,
                 out: &mut Vec<Piece>| {
        out.push(first);
        if &x < e {
            out.push(second_at_cross(&x));
        }
    };
    match op {
        Op::Add => out.push(Piece::new(s.clone(), va + vb, sa + sb)),
        Op::Min | Op::Max => {
            let pick_a = if va == vb {
                (sa <= sb) == (op == Op::Min)
            } else {
                (va < vb) == (op == Op::Min)
            };
            let ((v1, s1), (v2, s2)) = if pick_a {
                ((va, sa), (vb, sb))
            } else {
                ((vb, sb), (va, sa))
            };
            let overtaken = if op == Op::Min { s2 < s1 } else { s2 > s1 };
            if overtaken && v1 != v2 {
                let x = s + (&v2 - &v1) / (&s1 - &s2);
                let other = Piece::new(s.clone(), v2, s2);
                split(
                    Piece::new(s.clone(), v1, s1),
                    &|x| Piece::new(x.clone(), other.at(x), other.slope.clone()),
                    x,
                    out,
                );
            } else {
                out.push(Piece::new(s.clone(), v1, s1));
            }
        }
        Op::SubPos => {
            let d = &va - &vb;
            let ds = &sa - &sb;
            let zero = Rational::zero();
            if d.is_positive() && ds.is_negative() {
                let x = s + &d / (-&ds);
                split(
                    Piece::new(s.clone(), d, ds),
                    &|x| Piece::new(x.clone(), zero.clone(), zero.clone()),
                    x,
                    out,
                );
            } else if d.is_negative() && ds.is_positive() {
                let x = s + (-&d) / &ds;
                let slope = ds.clone();
                split(
                    Piece::new(s.clone(), zero.clone(), zero.clone()),
                    &|x| Piece::new(x.clone(), zero.clone(), slope.clone()),
                    x,
                    out,
                );
            } else if d.is_negative() || (d.is_zero() && !ds.is_positive()) {
                out.push(Piece::new(s.clone(), zero.clone(), zero));
            } else {
                out.push(Piece::new(s.clone(), d, ds));
            }
        }
    }
}

fn apply(op: Op, f: &Curve, g: &Curve) -> Result<Curve, CurveError> {
    let plan = plan(op, f, g);
    let horizon = plan.horizon();
    let mut cuts: Vec<Rational> = f
        .unroll(&horizon)
        .into_iter()
        .chain(g.unroll(&horizon))
        .map(|p| p.start)
        .collect();
    cuts.sort();
    cuts.dedup();
    cuts.push(horizon);
    let mut pieces = Vec::with_capacity(cuts.len());
    for w in cuts.windows(2) {
        combine_segment(op, &w[0], &w[1], f.piece_after(&w[0]), g.piece_after(&w[0]), &mut pieces);
    }
    let (f0, g0) = (f.origin(), g.origin());
    let origin = match op {
        Op::Add => f0 + g0,
        Op::Min => min_of(f0, g0),
        Op::Max => max_of(f0, g0),
        Op::SubPos => max_of(&(f0 - g0), &Rational::zero()),
    };
    if op == Op::SubPos {
        return Curve::try_fold(origin, pieces, plan).map_err(|e| match e {
            CurveError::Malformed(m) => CurveError::NotMonotone(m),
            other => other,
        });
    }
    Ok(Curve::fold(origin, pieces, plan))
}

impl Curve {
    pub fn add(&self, other: &Curve) -> Curve {
        apply(Op::Add, self, other).expect("sum of nondecreasing curves")
    }

    pub fn min(&self, other: &Curve) -> Curve {
        apply(Op::Min, self, other).expect("minimum of nondecreasing curves")
    }

    pub fn max(&self, other: &Curve) -> Curve {
        apply(Op::Max, self, other).expect("maximum of nondecreasing curves")
    }

    /// `max(self − other, 0)`; fails when the result is not nondecreasing.
    pub fn sub_positive(&self, other: &Curve) -> Result<Curve, CurveError> {
        apply(Op::SubPos, self, other)
    }

    /// `k · self` for `k ≥ 0`.
    pub fn scale(&self, k: &Rational) -> Curve {
        assert!(!k.is_negative(), "negative scale factor");
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece::new(p.start.clone(), &p.value * k, &p.slope * k))
            .collect();
        let tail = match &self.tail {
            super::Tail::Affine => super::Tail::Affine,
            super::Tail::Periodic {
                end,
                period,
                increment,
            } => super::Tail::Periodic {
                end: end.clone(),
                period: period.clone(),
                increment: increment * k,
            },
        };
        Curve::new(&self.origin * k, pieces, tail).expect("scaled curve")
    }

    /// Folds [`Curve::max`] over a nonempty list.
    pub fn max_all<'a>(curves: impl IntoIterator<Item = &'a Curve>) -> Option<Curve> {
        curves.into_iter().fold(None, |acc, c| match acc {
            None => Some(c.clone()),
            Some(a) => Some(a.max(c)),
        })
    }
}
