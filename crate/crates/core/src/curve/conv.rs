//! Min-plus convolution.

use num::traits::{Signed, Zero};

use super::{common_period, Curve, Piece, TailPlan};
use crate::num::{int, max_of, Rational};

/// Closed segment `[x0, x1]` starting at value `v` with slope `slope`;
/// `x0 == x1` is a single point.
#[derive(Clone, Debug)]
struct Seg {
    x0: Rational,
    x1: Rational,
    v: Rational,
    slope: Rational,
}

impl Seg {
    fn at(&self, x: &Rational) -> Rational {
        &self.v + &self.slope * (x - &self.x0)
    }
}

/// The origin point followed by the closed pieces covering `[0, h]`.
fn elements(c: &Curve, h: &Rational) -> Vec<Seg> {
    let pieces = c.unroll(h);
    let mut out = Vec::with_capacity(pieces.len() + 1);
    out.push(Seg {
        x0: Rational::zero(),
        x1: Rational::zero(),
        v: c.origin().clone(),
        slope: Rational::zero(),
    });
    for (k, p) in pieces.iter().enumerate() {
        let x1 = pieces.get(k + 1).map_or_else(|| h.clone(), |q| q.start.clone());
        out.push(Seg {
            x0: p.start.clone(),
            x1,
            v: p.value.clone(),
            slope: p.slope.clone(),
        });
    }
    out
}

/// Convolution of two closed segments, clipped to `[0, h]`: the cheaper
/// slope is spent first.
fn pair(a: &Seg, b: &Seg, h: &Rational, out: &mut Vec<Seg>) {
    let mut x = &a.x0 + &b.x0;
    let mut v = &a.v + &b.v;
    let (first, second) = if a.slope <= b.slope { (a, b) } else { (b, a) };
    for s in [first, second] {
        let len = &s.x1 - &s.x0;
        if len.is_zero() {
            continue;
        }
        if &x >= h {
            return;
        }
        let end = &x + &len;
        out.push(Seg {
            x0: x.clone(),
            x1: if &end > h { h.clone() } else { end.clone() },
            v: v.clone(),
            slope: s.slope.clone(),
        });
        v += &s.slope * &len;
        x = end;
    }
}

/// Lower envelope on `(0, h]` of closed segments that jointly cover it.
fn lower_envelope(mut segs: Vec<Seg>, h: &Rational) -> Vec<Piece> {
    segs.retain(|s| s.x1 > s.x0);
    let mut cuts: Vec<Rational> = segs
        .iter()
        .flat_map(|s| [s.x0.clone(), s.x1.clone()])
        .filter(|x| x < h)
        .collect();
    cuts.push(h.clone());
    cuts.sort();
    cuts.dedup();
    segs.sort_by(|a, b| a.x0.cmp(&b.x0));
    let mut out = Vec::new();
    let mut active: Vec<Seg> = Vec::new();
    let mut next = 0;
    for w in cuts.windows(2) {
        let (lo, hi) = (&w[0], &w[1]);
        while next < segs.len() && &segs[next].x0 <= lo {
            active.push(segs[next].clone());
            next += 1;
        }
        active.retain(|s| &s.x1 > lo);
        let lines: Vec<(Rational, &Rational)> =
            active.iter().map(|s| (s.at(lo), &s.slope)).collect();
        assert!(!lines.is_empty(), "convolution envelope has a gap at {lo}");
        envelope_of_lines(lo, hi, &lines, &mut out);
    }
    out
}

/// Lower envelope of lines `(value at lo, slope)` on `(lo, hi]`.
fn envelope_of_lines(
    lo: &Rational,
    hi: &Rational,
    lines: &[(Rational, &Rational)],
    out: &mut Vec<Piece>,
) {
    let better = |a: &(Rational, &Rational), b: &(Rational, &Rational)| {
        a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
    };
    let mut cur = lines[0].clone();
    for l in &lines[1..] {
        if better(l, &cur) {
            cur = l.clone();
        }
    }
    let mut x = lo.clone();
    loop {
        let v_cur = &cur.0 + cur.1 * (&x - lo);
        out.push(Piece::new(x.clone(), v_cur.clone(), cur.1.clone()));
        let mut best: Option<(Rational, (Rational, &Rational))> = None;
        for l in lines {
            if l.1 >= cur.1 {
                continue;
            }
            let v_l = &l.0 + l.1 * (&x - lo);
            let cross = &x + (&v_l - &v_cur) / (cur.1 - l.1);
            let replace = match &best {
                None => true,
                Some((bx, bl)) => cross < *bx || (cross == *bx && l.1 < bl.1),
            };
            if replace {
                best = Some((cross, l.clone()));
            }
        }
        match best {
            Some((cross, l)) if &cross < hi => {
                x = max_of(&cross, &x);
                cur = l;
            }
            _ => break,
        }
    }
}

fn plan(f: &Curve, g: &Curve) -> TailPlan {
    let (rf, rg) = (f.long_term_rate(), g.long_term_rate());
    if rf == rg {
        let period = common_period(f.period(), g.period());
        let step = period.clone().unwrap_or_else(|| int(1));
        return TailPlan::with(f.periodic_from() + g.periodic_from() + step, period, &rf);
    }
    let (slow, fast) = if rf < rg { (f, g) } else { (g, f) };
    let (lo_s, hi_s) = slow.offsets();
    let (lo_f, _) = fast.offsets();
    // beyond this share of time the faster curve only adds cost
    let share = (hi_s - lo_s + fast.origin() - lo_f) / (fast.long_term_rate() - slow.long_term_rate());
    let share = max_of(&share, &Rational::zero());
    TailPlan::with(
        slow.periodic_from() + share,
        slow.period().cloned(),
        &slow.long_term_rate(),
    )
}

impl Curve {
    /// `(f ⊗ g)(t) = inf_{0≤s≤t} f(t − s) + g(s)`.
    pub fn conv(&self, other: &Curve) -> Curve {
        let plan = plan(self, other);
        let h = plan.horizon();
        let ea = elements(self, &h);
        let eb = elements(other, &h);
        let mut segs = Vec::with_capacity(ea.len() * eb.len() * 2);
        for a in &ea {
            for b in &eb {
                pair(a, b, &h, &mut segs);
            }
        }
        debug_assert!(segs.iter().all(|s| !s.slope.is_negative()));
        let pieces = lower_envelope(segs, &h);
        Curve::fold(self.origin() + other.origin(), pieces, plan)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{RateLatencySpec, StairSpec, TokenBucketSpec};
    use crate::num::ratio;

    fn rl(r: Rational, t: Rational) -> Curve {
        Curve::rate_latency(&RateLatencySpec {
            rate: r,
            latency: t,
        })
        .unwrap()
    }

    #[test]
    fn smoothed_stair() {
        let nu = Curve::stair(&StairSpec {
            height: int(2),
            period: int(5),
        })
        .unwrap();
        let c = rl(int(1), int(0)).conv(&nu);
        assert_eq!(c.value(&int(1)), int(1));
        assert_eq!(c.value(&int(3)), int(2));
        assert_eq!(c.value(&int(6)), int(3));
        for k in 0..200 {
            let t = ratio(k, 7);
            let p = (&t / int(5)).floor();
            let rem = &t - &p * int(5);
            let expected = &p * int(2) + if rem < int(2) { rem } else { int(2) };
            assert_eq!(c.value(&t), expected, "t = {t}");
        }
    }

    #[test]
    fn rate_latency_convolution() {
        let f = rl(int(3), int(2));
        assert!(f.conv(&f).same_function(&rl(int(3), int(4))));
        let g = rl(ratio(1, 2), ratio(7, 3));
        assert!(f.conv(&g).same_function(&rl(ratio(1, 2), ratio(13, 3))));
    }

    #[test]
    fn token_buckets_follow_smaller_rate() {
        let a = Curve::token_bucket(&TokenBucketSpec::new(int(1), int(5)).unwrap()).unwrap();
        let b = Curve::token_bucket(&TokenBucketSpec::new(int(3), int(1)).unwrap()).unwrap();
        let c = a.conv(&b);
        assert_eq!(c.long_term_rate(), int(1));
        assert_eq!(c.value(&int(0)), int(0));
        // concave curves through the origin: min(5 + t, 1 + 3t)
        assert_eq!(c.value(&ratio(1, 2)), ratio(5, 2));
        assert_eq!(c.value(&int(100)), int(105));
    }
}
