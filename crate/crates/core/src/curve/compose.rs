//! Composition `outer ∘ inner`.

use num::traits::Zero;

use super::{Curve, Piece, TailPlan};
use crate::num::{from_bigint, max_of, Rational};

fn plan(outer: &Curve, inner: &Curve) -> TailPlan {
    let rate_in = inner.long_term_rate();
    let rate = outer.long_term_rate() * &rate_in;
    if rate_in.is_zero() {
        return TailPlan::with(inner.periodic_from(), None, &rate);
    }
    let (lo_in, _) = inner.offsets();
    let from = max_of(
        &inner.periodic_from(),
        &((outer.periodic_from() - lo_in) / &rate_in),
    );
    let period = match (outer.period(), inner.period()) {
        (None, None) => None,
        (None, Some(p_in)) => Some(p_in.clone()),
        (Some(p_out), None) => Some(p_out / &rate_in),
        (Some(p_out), Some(p_in)) => {
            let inc_in = &rate_in * p_in;
            // smallest m with m·inc_in a multiple of the outer period
            let r = inc_in / p_out;
            Some(p_in * from_bigint(r.denom().clone()))
        }
    };
    TailPlan::with(from, period, &rate)
}

impl Curve {
    /// `t ↦ outer(inner(t))`.
    pub fn compose(&self, inner: &Curve) -> Curve {
        let outer = self;
        let plan = plan(outer, inner);
        let h = plan.horizon();
        let src = inner.unroll(&h);
        let mut pieces = Vec::with_capacity(src.len() * 2);
        for (k, p) in src.iter().enumerate() {
            let e = src.get(k + 1).map_or_else(|| h.clone(), |q| q.start.clone());
            if p.slope.is_zero() {
                pieces.push(Piece::new(
                    p.start.clone(),
                    outer.value(&p.value),
                    Rational::zero(),
                ));
                continue;
            }
            let top = p.at(&e);
            for q in outer.unroll_range(&p.value, &top) {
                let t = &p.start + (&q.start - &p.value) / &p.slope;
                pieces.push(Piece::new(t, q.value, &q.slope * &p.slope));
            }
        }
        Curve::fold(outer.value(inner.origin()), pieces, plan)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{RateLatencySpec, StairSpec, TokenBucketSpec};
    use crate::num::{int, ratio};

    fn stair(h: i64, p: i64) -> Curve {
        Curve::stair(&StairSpec {
            height: int(h),
            period: int(p),
        })
        .unwrap()
    }

    #[test]
    fn stair_of_line() {
        let c = stair(2, 5).compose(&Curve::affine_rate(int(2)));
        assert_eq!(c.value(&int(2)), int(2));
        assert_eq!(c.value(&int(3)), int(4));
        assert_eq!(c.value(&ratio(5, 2)), int(2));
        assert_eq!(c.long_term_rate(), ratio(4, 5));
    }

    #[test]
    fn identity_on_both_sides() {
        let id = Curve::affine_rate(int(1));
        let f = stair(3, 7).max(
            &Curve::rate_latency(&RateLatencySpec {
                rate: int(2),
                latency: int(4),
            })
            .unwrap(),
        );
        assert!(f.compose(&id).same_function(&f));
        assert!(id.compose(&f).same_function(&f));
        let tb = Curve::token_bucket(&TokenBucketSpec::new(int(1), int(2)).unwrap()).unwrap();
        assert!(tb.compose(&id).same_function(&tb));
        assert!(id.compose(&tb).same_function(&tb));
    }

    #[test]
    fn stair_of_stair() {
        let c = stair(2, 3).compose(&stair(5, 4));
        for k in 0..120 {
            let t = ratio(k, 5);
            assert_eq!(c.value(&t), stair(2, 3).value(&stair(5, 4).value(&t)), "t = {t}");
        }
    }
}
