//! Subsets of a unit-periodic boundary parameter.
//!
//! Every endpoint remembers what produced it: the leaf whose interior begins
//! or ends there, the window edge, or the artificial seam at `u = 0 ≡ 1`.

/// Spans shorter than this (in parameter units) are dropped.
pub const SPAN_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cause {
    Seam,
    Leaf(u32),
    Window,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span {
    pub a: f64,
    pub b: f64,
    pub ca: Cause,
    pub cb: Cause,
}

impl Span {
    pub fn len(&self) -> f64 {
        self.b - self.a
    }
}

/// Sorted disjoint spans inside `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoopSet {
    spans: Vec<Span>,
}

impl LoopSet {
    pub fn empty() -> Self {
        Self { spans: Vec::new() }
    }

    pub fn full() -> Self {
        Self {
            spans: vec![Span {
                a: 0.0,
                b: 1.0,
                ca: Cause::Seam,
                cb: Cause::Seam,
            }],
        }
    }

    /// Union of arcs `(start, end, cause)` with `start < end ≤ start + 1`.
    pub fn from_arcs<I: IntoIterator<Item = (f64, f64, Cause)>>(arcs: I) -> Self {
        let mut raw: Vec<Span> = Vec::new();
        for (a, b, c) in arcs {
            if b - a >= 1.0 - SPAN_EPS {
                raw.push(Span {
                    a: 0.0,
                    b: 1.0,
                    ca: Cause::Seam,
                    cb: Cause::Seam,
                });
                continue;
            }
            let a0 = a.rem_euclid(1.0);
            let b0 = a0 + (b - a);
            if b0 <= 1.0 {
                raw.push(Span {
                    a: a0,
                    b: b0,
                    ca: c,
                    cb: c,
                });
            } else {
                raw.push(Span {
                    a: a0,
                    b: 1.0,
                    ca: c,
                    cb: Cause::Seam,
                });
                raw.push(Span {
                    a: 0.0,
                    b: b0 - 1.0,
                    ca: Cause::Seam,
                    cb: c,
                });
            }
        }
        Self::normalize(raw)
    }

    fn normalize(mut raw: Vec<Span>) -> Self {
        raw.retain(|s| s.b - s.a > SPAN_EPS);
        raw.sort_by(|x, y| x.a.total_cmp(&y.a));
        let mut spans: Vec<Span> = Vec::with_capacity(raw.len());
        for s in raw {
            if let Some(cur) = spans.last_mut() {
                if s.a <= cur.b + SPAN_EPS {
                    if s.b > cur.b {
                        cur.b = s.b;
                        cur.cb = s.cb;
                    }
                    continue;
                }
            }
            spans.push(s);
        }
        Self { spans }
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.spans.len() == 1 && self.spans[0].a <= 0.0 && self.spans[0].b >= 1.0
    }

    pub fn measure(&self) -> f64 {
        self.spans.iter().map(Span::len).sum()
    }

    pub fn contains(&self, u: f64) -> bool {
        let u = u.rem_euclid(1.0);
        self.spans.iter().any(|s| s.a <= u && u <= s.b)
    }

    pub fn complement(&self) -> LoopSet {
        let mut out = Vec::with_capacity(self.spans.len() + 1);
        let mut prev_b = 0.0;
        let mut prev_c = Cause::Seam;
        for s in &self.spans {
            if s.a - prev_b > SPAN_EPS {
                out.push(Span {
                    a: prev_b,
                    b: s.a,
                    ca: prev_c,
                    cb: s.ca,
                });
            }
            prev_b = s.b;
            prev_c = s.cb;
        }
        if 1.0 - prev_b > SPAN_EPS {
            out.push(Span {
                a: prev_b,
                b: 1.0,
                ca: prev_c,
                cb: Cause::Seam,
            });
        }
        LoopSet { spans: out }
    }

    pub fn intersect(&self, other: &LoopSet) -> LoopSet {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.spans.len() && j < other.spans.len() {
            let x = self.spans[i];
            let y = other.spans[j];
            let (a, ca) = if x.a > y.a || (x.a == y.a && x.ca != Cause::Seam) {
                (x.a, x.ca)
            } else {
                (y.a, y.ca)
            };
            let (b, cb) = if x.b < y.b || (x.b == y.b && x.cb != Cause::Seam) {
                (x.b, x.cb)
            } else {
                (y.b, y.cb)
            };
            if b - a > SPAN_EPS {
                out.push(Span { a, b, ca, cb });
            }
            if x.b < y.b {
                i += 1;
            } else {
                j += 1;
            }
        }
        LoopSet { spans: out }
    }

    pub fn union(&self, other: &LoopSet) -> LoopSet {
        let mut raw = self.spans.clone();
        raw.extend_from_slice(&other.spans);
        Self::normalize(raw)
    }

    pub fn subtract(&self, other: &LoopSet) -> LoopSet {
        if other.is_empty() {
            return self.clone();
        }
        self.intersect(&other.complement())
    }

    /// Maximal arcs with the seam joined; `end` may exceed 1 for an arc
    /// running through the seam. A full loop is returned as `(0, 1)` with
    /// both causes `Seam`.
    pub fn arcs(&self) -> Vec<Span> {
        let n = self.spans.len();
        if n == 0 {
            return Vec::new();
        }
        let first = self.spans[0];
        let last = self.spans[n - 1];
        let joined = n >= 2
            && first.a <= 0.0
            && first.ca == Cause::Seam
            && last.b >= 1.0
            && last.cb == Cause::Seam;
        if !joined {
            return self.spans.clone();
        }
        let mut out: Vec<Span> = self.spans[1..n - 1].to_vec();
        out.push(Span {
            a: last.a,
            b: 1.0 + first.b,
            ca: last.ca,
            cb: first.cb,
        });
        out
    }

    /// Genuine endpoints `(u, cause, is_start)`, excluding seam joins.
    pub fn endpoints(&self) -> Vec<(f64, Cause, bool)> {
        let mut out = Vec::new();
        for s in self.arcs() {
            if s.ca != Cause::Seam {
                out.push((s.a.rem_euclid(1.0), s.ca, true));
            }
            if s.cb != Cause::Seam {
                out.push((s.b.rem_euclid(1.0), s.cb, false));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn wrap_and_complement() {
        let s = LoopSet::from_arcs([(0.9, 1.2, Cause::Leaf(1))]);
        assert_eq!(s.spans().len(), 2);
        assert_abs_diff_eq!(s.measure(), 0.3, epsilon = 1e-15);
        let c = s.complement();
        assert_eq!(c.spans().len(), 1);
        assert_eq!(c.spans()[0].ca, Cause::Leaf(1));
        assert_eq!(c.spans()[0].cb, Cause::Leaf(1));
        assert_eq!(s.endpoints().len(), 2);
        assert_eq!(s.arcs().len(), 1);
    }

    #[test]
    fn union_keeps_outer_causes() {
        let s = LoopSet::from_arcs([(0.1, 0.4, Cause::Leaf(1)), (0.3, 0.6, Cause::Leaf(2))]);
        assert_eq!(s.spans().len(), 1);
        assert_eq!(s.spans()[0].ca, Cause::Leaf(1));
        assert_eq!(s.spans()[0].cb, Cause::Leaf(2));
        let vis = s.complement();
        let ends = vis.endpoints();
        assert_eq!(ends.len(), 2);
    }

    #[test]
    fn full_loop_has_no_endpoints() {
        assert!(LoopSet::full().endpoints().is_empty());
        assert!(LoopSet::full().complement().is_empty());
        assert!(LoopSet::empty().complement().is_full());
    }

    fn arb_set() -> impl Strategy<Value = LoopSet> {
        prop::collection::vec((0.0..1.0f64, 0.0..0.5f64), 0..6).prop_map(|v| {
            LoopSet::from_arcs(
                v.into_iter()
                    .enumerate()
                    .map(|(i, (a, l))| (a, a + l, Cause::Leaf(i as u32))),
            )
        })
    }

    proptest! {
        #[test]
        fn measure_identities(a in arb_set(), b in arb_set()) {
            let inter = a.intersect(&b).measure();
            let diff = a.subtract(&b).measure();
            prop_assert!((inter + diff - a.measure()).abs() < 1e-9);
            prop_assert!((a.complement().measure() + a.measure() - 1.0).abs() < 1e-9);
            prop_assert!(inter <= a.measure().min(b.measure()) + 1e-12);
        }
    }
}
