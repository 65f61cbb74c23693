//! One-dimensional dead leaves tessellation: perfect simulation on `[0, n]`,
//! the boundary point process `η`, interval statistics and forward evolution.

use crate::engine::{self, Arrival, EngineError, Segment, SimulationWindow};
use crate::grains::{GrainLaw1D, Shape1D};
use crate::rng::{SimRng, StreamKey};
use rand::Rng;
use std::collections::BTreeMap;

/// Gaps shorter than this multiple of the window length are closed.
pub const SLIVER: f64 = 1e-12;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum Dlm1dError {
    #[error("every leaf component has zero length; the window can never be covered")]
    ZeroLengthLeaves,
    #[error("window length must be positive, got {0}")]
    BadWindow(f64),
    #[error("point or segment lies outside the window interior")]
    OutsideWindow,
    #[error("need at least 3 cells, found {0}")]
    TooFewCells(usize),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// A visible interval. Zero-length cells mark exposed zero-length components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell1D {
    pub start: f64,
    pub end: f64,
    pub leaf: u32,
    /// The cell is an entire leaf component.
    pub full: bool,
}

impl Cell1D {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// Leaf as recorded for space-time diagrams.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafRecord {
    pub id: u32,
    pub time: f64,
    pub position: f64,
    pub shape: Shape1D,
    pub visible: bool,
    /// False for arrivals thinned out by [`simulate_thinned`].
    pub leaf: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tessellation1D {
    pub length: f64,
    /// Sorted by start; partitions `[0, length]`.
    pub cells: Vec<Cell1D>,
    /// Interior cell endpoints, strictly increasing.
    pub eta: Vec<f64>,
    pub coverage_time: f64,
    pub arrivals: u32,
    /// Filled only by [`simulate_recorded`].
    pub history: Vec<LeafRecord>,
}

impl Tessellation1D {
    pub(crate) fn from_cells(
        length: f64,
        mut cells: Vec<Cell1D>,
        coverage_time: f64,
        arrivals: u32,
    ) -> Self {
        cells.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.end.total_cmp(&b.end)));
        let mut eta: Vec<f64> = cells
            .iter()
            .map(|c| c.start)
            .filter(|&s| s > 0.0 && s < length)
            .collect();
        eta.dedup();
        Self {
            length,
            cells,
            eta,
            coverage_time,
            arrivals,
            history: Vec::new(),
        }
    }

    /// Cells of positive length.
    pub fn proper_cells(&self) -> impl Iterator<Item = &Cell1D> {
        self.cells.iter().filter(|c| !c.is_empty())
    }

    /// A cell touching `0` or `n`.
    pub fn is_edge(&self, c: &Cell1D) -> bool {
        c.start <= 0.0 || c.end >= self.length
    }

    /// Number of `η` points in `[a, b]`.
    pub fn eta_count(&self, a: f64, b: f64) -> usize {
        let lo = self.eta.partition_point(|&x| x < a);
        let hi = self.eta.partition_point(|&x| x <= b);
        hi - lo
    }
}

pub(crate) fn components_at(shape: &Shape1D, x: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
    shape
        .components()
        .iter()
        .map(move |&(s, l)| (x + s, x + s + l))
}

fn key(x: f64) -> u64 {
    debug_assert!(x >= 0.0);
    x.to_bits()
}

struct Gaps {
    map: BTreeMap<u64, (f64, f64)>,
    eps: f64,
}

impl Gaps {
    fn new(n: f64) -> Self {
        let mut map = BTreeMap::new();
        map.insert(key(0.0), (0.0, n));
        Self {
            map,
            eps: SLIVER * n,
        }
    }

    fn overlapping(&self, p: f64, q: f64, out: &mut Vec<(f64, f64)>) {
        out.clear();
        let upper = if q <= 0.0 { return } else { key(q) };
        for (_, &(a, b)) in self.map.range(..upper).rev() {
            if b <= p {
                break;
            }
            out.push((a, b));
        }
    }

    fn remove(&mut self, a: f64) {
        self.map.remove(&key(a));
    }

    fn insert(&mut self, a: f64, b: f64) {
        self.map.insert(key(a), (a, b));
    }
}

/// Perfect sample of the stationary tessellation restricted to `[0, n]`.
pub fn simulate(n: f64, law: &GrainLaw1D, key: StreamKey) -> Result<Tessellation1D, Dlm1dError> {
    run(n, law, key, false, &|_| true)
}

/// As [`simulate`], also keeping every arrival for rendering.
pub fn simulate_recorded(
    n: f64,
    law: &GrainLaw1D,
    key: StreamKey,
) -> Result<Tessellation1D, Dlm1dError> {
    run(n, law, key, true, &|_| true)
}

/// Recorded simulation in which only arrivals with `is_leaf(id)` cover;
/// the others are kept in the history with `leaf == false`.
pub fn simulate_thinned(
    n: f64,
    law: &GrainLaw1D,
    key: StreamKey,
    is_leaf: &dyn Fn(u32) -> bool,
) -> Result<Tessellation1D, Dlm1dError> {
    run(n, law, key, true, is_leaf)
}

fn run(
    n: f64,
    law: &GrainLaw1D,
    skey: StreamKey,
    record: bool,
    is_leaf: &dyn Fn(u32) -> bool,
) -> Result<Tessellation1D, Dlm1dError> {
    if !(n > 0.0 && n.is_finite()) {
        return Err(Dlm1dError::BadWindow(n));
    }
    if law.all_components_zero() {
        return Err(Dlm1dError::ZeroLengthLeaves);
    }
    let window = SimulationWindow::for_law(Segment::new(0.0, n), law);
    let mut stream = engine::reversed_stream(&window, law, skey)?;
    let mut gaps = Gaps::new(n);
    let mut cells = Vec::new();
    let mut hits = Vec::new();
    let mut history = Vec::new();
    let mut last_time = 0.0;
    while !gaps.map.is_empty() {
        let arr = stream.next().expect("positive arrival rate");
        if !is_leaf(arr.id) {
            if record {
                history.push(LeafRecord {
                    id: arr.id,
                    time: arr.time,
                    position: arr.position,
                    shape: arr.shape,
                    visible: false,
                    leaf: false,
                });
            }
            continue;
        }
        last_time = arr.time;
        let before = cells.len();
        for (p, q) in components_at(&arr.shape, arr.position) {
            if q <= 0.0 && p < q || p >= n {
                continue;
            }
            gaps.overlapping(p, q, &mut hits);
            if p == q {
                // zero-length component: pins its gap if it lands inside one
                if let Some(&(a, b)) = hits.first() {
                    if a < p && p < b {
                        gaps.remove(a);
                        gaps.insert(a, p);
                        gaps.insert(p, b);
                        cells.push(Cell1D {
                            start: p,
                            end: p,
                            leaf: arr.id,
                            full: true,
                        });
                    }
                }
                continue;
            }
            let single = hits.len() == 1 && hits[0].0 <= p && q <= hits[0].1;
            for &(a, b) in &hits {
                let mut lo = p.max(a);
                let mut hi = q.min(b);
                gaps.remove(a);
                if lo > a {
                    if lo - a < gaps.eps {
                        lo = a;
                    } else {
                        gaps.insert(a, lo);
                    }
                }
                if hi < b {
                    if b - hi < gaps.eps {
                        hi = b;
                    } else {
                        gaps.insert(hi, b);
                    }
                }
                cells.push(Cell1D {
                    start: lo,
                    end: hi,
                    leaf: arr.id,
                    full: single,
                });
            }
        }
        if record {
            history.push(LeafRecord {
                id: arr.id,
                time: arr.time,
                position: arr.position,
                shape: arr.shape,
                visible: cells.len() > before,
                leaf: true,
            });
        }
    }
    let mut t = Tessellation1D::from_cells(n, cells, last_time, stream.consumed());
    t.history = history;
    Ok(t)
}

/// Length of the cell containing `origin`; a boundary point belongs to the
/// cell on its right.
pub fn cell_length_at(tess: &Tessellation1D, origin: f64) -> Result<f64, Dlm1dError> {
    if !(origin > 0.0 && origin < tess.length) {
        return Err(Dlm1dError::OutsideWindow);
    }
    let i = tess.cells.partition_point(|c| c.start <= origin);
    tess.cells[..i]
        .iter()
        .rev()
        .find(|c| c.start <= origin && origin < c.end)
        .map(Cell1D::len)
        .ok_or(Dlm1dError::OutsideWindow)
}

/// [`cell_length_at`] at the window midpoint.
pub fn cell_length_at_origin(tess: &Tessellation1D) -> Result<f64, Dlm1dError> {
    cell_length_at(tess, 0.5 * tess.length)
}

/// Length of a uniformly chosen cell with both endpoints inside the open window.
pub fn typical_interval_sample<R: Rng + ?Sized>(
    tess: &Tessellation1D,
    rng: &mut R,
) -> Result<f64, Dlm1dError> {
    let interior: Vec<&Cell1D> = tess.proper_cells().filter(|c| !tess.is_edge(c)).collect();
    let total = tess.proper_cells().count();
    if total < 3 || interior.is_empty() {
        return Err(Dlm1dError::TooFewCells(total));
    }
    Ok(interior[rng.random_range(0..interior.len())].len())
}

/// True when `η` has no point in `[origin, origin + h]`.
pub fn vacancy_indicator(tess: &Tessellation1D, h: f64, origin: f64) -> Result<bool, Dlm1dError> {
    if !(h >= 0.0 && origin > 0.0 && origin + h < tess.length) {
        return Err(Dlm1dError::OutsideWindow);
    }
    Ok(tess.eta_count(origin, origin + h) == 0)
}

// ---------------------------------------------------------------------------
// Forward evolution

#[derive(Debug, Clone, Copy, PartialEq)]
struct Seg {
    start: f64,
    end: f64,
    leaf: u32,
    full: bool,
}

/// Tessellation state advanced by forward arrivals.
#[derive(Debug, Clone)]
pub struct EvolvingState1D {
    length: f64,
    time: f64,
    next_id: u32,
    law: GrainLaw1D,
    segs: BTreeMap<(u64, u64), Seg>,
}

impl EvolvingState1D {
    /// Starts from a tessellation, taken to be the state at time `time`.
    pub fn new(tess: &Tessellation1D, law: &GrainLaw1D, time: f64) -> Self {
        let mut segs = BTreeMap::new();
        for c in &tess.cells {
            segs.insert(
                (key(c.start), key(c.end)),
                Seg {
                    start: c.start,
                    end: c.end,
                    leaf: c.leaf,
                    full: c.full,
                },
            );
        }
        Self {
            length: tess.length,
            time,
            next_id: tess.arrivals,
            law: law.clone(),
            segs,
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// `η_t([0, n])`.
    pub fn eta_count(&self) -> usize {
        let mut last = f64::NAN;
        let mut count = 0;
        for s in self.segs.values() {
            if s.start > 0.0 && s.start < self.length && s.start != last {
                count += 1;
                last = s.start;
            }
        }
        count
    }

    pub fn tessellation(&self) -> Tessellation1D {
        let cells = self
            .segs
            .values()
            .map(|s| Cell1D {
                start: s.start,
                end: s.end,
                leaf: s.leaf,
                full: s.full,
            })
            .collect();
        Tessellation1D::from_cells(self.length, cells, f64::NAN, self.next_id)
    }

    /// Places one leaf on top.
    pub fn apply(&mut self, arr: &Arrival<f64, Shape1D>) {
        let n = self.length;
        for (p, q) in components_at(&arr.shape, arr.position) {
            if q < 0.0 || p > n || (p == q && (p <= 0.0 || p >= n)) {
                continue;
            }
            let lo = p.max(0.0);
            let hi = q.min(n);
            // segments meeting [lo, hi]
            let hit: Vec<Seg> = self
                .segs
                .range(..(key(hi), u64::MAX))
                .rev()
                .map(|(_, s)| *s)
                .take_while(|s| s.end >= lo)
                .filter(|s| {
                    if p == q {
                        s.start < p && p < s.end
                    } else {
                        s.end > lo && s.start < hi
                    }
                })
                .collect();
            for s in &hit {
                self.segs.remove(&(key(s.start), key(s.end)));
            }
            for s in hit {
                if s.start < lo {
                    self.insert(Seg {
                        end: lo,
                        full: false,
                        ..s
                    });
                }
                if s.end > hi {
                    self.insert(Seg {
                        start: hi,
                        full: false,
                        ..s
                    });
                }
            }
            self.insert(Seg {
                start: lo,
                end: hi,
                leaf: arr.id,
                full: p >= 0.0 && q <= n,
            });
        }
    }

    fn insert(&mut self, s: Seg) {
        self.segs.insert((key(s.start), key(s.end)), s);
    }

    /// Applies forward arrivals up to `until`, returning `η_t([0,n])` at each
    /// time of `grid` (which must be sorted and lie in `[now, until]`).
    pub fn evolve(
        &mut self,
        until: f64,
        grid: &[f64],
        rng: &mut SimRng,
    ) -> Result<Vec<usize>, Dlm1dError> {
        let window = SimulationWindow::for_law(Segment::new(0.0, self.length), &self.law);
        let arrivals =
            engine::forward_stream(&window, &self.law, self.time, until, self.next_id, rng)?;
        self.next_id += arrivals.len() as u32;
        let mut out = Vec::with_capacity(grid.len());
        let mut g = grid.iter().peekable();
        for a in &arrivals {
            while let Some(&&t) = g.peek() {
                if t < a.time {
                    out.push(self.eta_count());
                    g.next();
                } else {
                    break;
                }
            }
            self.apply(a);
        }
        out.extend(g.map(|_| self.eta_count()));
        self.time = until;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grains::{Component1D, LengthLaw};
    use crate::rng::{substream, Purpose};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn k(seed: u64, rep: u64) -> StreamKey {
        StreamKey::new(seed, rep, Purpose::Arrivals)
    }

    fn check_partition(t: &Tessellation1D) {
        let total: f64 = t.cells.iter().map(Cell1D::len).sum();
        assert_abs_diff_eq!(total, t.length, epsilon = 1e-9);
        assert_eq!(t.cells[0].start, 0.0);
        assert_eq!(t.cells.last().unwrap().end, t.length);
        for w in t.cells.windows(2) {
            assert!((w[0].end - w[1].start).abs() < 1e-9);
        }
        assert!(t.eta.windows(2).all(|w| w[0] < w[1]));
        let cuts = t.cells.windows(2).filter(|w| w[1].start > 0.0).count();
        assert!(t.eta.len() <= cuts);
    }

    #[test]
    fn partition_and_eta() {
        let law = GrainLaw1D::fixed_length(1.0);
        for r in 0..20 {
            let t = simulate(50.0, &law, k(1, r)).unwrap();
            check_partition(&t);
            assert_eq!(t.eta.len(), t.cells.len() - 1);
        }
    }

    #[test]
    fn big_leaf_can_cover_window() {
        let law = GrainLaw1D::fixed_length(10.0);
        let single = (0..200)
            .map(|r| simulate(1.0, &law, k(2, r)).unwrap())
            .find(|t| t.cells.len() == 1)
            .expect("some replicate is covered by one leaf");
        assert!(single.eta.is_empty());
        assert_eq!(cell_length_at_origin(&single).unwrap(), 1.0);
    }

    #[test]
    fn zero_length_components_pin() {
        let law = GrainLaw1D::MultiComponent {
            components: vec![
                Component1D {
                    offset: 0.0,
                    length: LengthLaw::Fixed { value: 1.0 },
                },
                Component1D {
                    offset: 1.5,
                    length: LengthLaw::Fixed { value: 0.0 },
                },
            ],
        };
        let t = simulate(200.0, &law, k(3, 0)).unwrap();
        check_partition(&t);
        assert!(t.cells.iter().any(|c| c.is_empty()));
        let only_zero = GrainLaw1D::MultiComponent {
            components: vec![Component1D {
                offset: 0.0,
                length: LengthLaw::Fixed { value: 0.0 },
            }],
        };
        assert_eq!(
            simulate(1.0, &only_zero, k(3, 0)),
            Err(Dlm1dError::ZeroLengthLeaves)
        );
    }

    #[test]
    fn reproducible() {
        let law = GrainLaw1D::LengthLaw {
            length: LengthLaw::Uniform { lo: 0.2, hi: 1.0 },
        };
        assert_eq!(simulate(30.0, &law, k(4, 2)), simulate(30.0, &law, k(4, 2)));
    }

    #[test]
    fn interval_queries() {
        let law = GrainLaw1D::fixed_length(1.0);
        let t = simulate(20.0, &law, k(5, 0)).unwrap();
        assert!(vacancy_indicator(&t, 0.0, 3.3).unwrap());
        assert!(!vacancy_indicator(&t, 1.0, 3.3).unwrap());
        assert!(vacancy_indicator(&t, 1.0, 19.5).is_err());
        assert!(cell_length_at(&t, 0.0).is_err());
        let x = cell_length_at(&t, t.eta[3]).unwrap();
        let right = t.cells.iter().find(|c| c.start == t.eta[3]).unwrap();
        assert_eq!(x, right.len());
        let mut rng = substream(5, 0, Purpose::Selection);
        let y = typical_interval_sample(&t, &mut rng).unwrap();
        assert!(y > 0.0 && y <= 1.0);
    }

    #[test]
    fn three_cell_tessellation_picks_middle() {
        let t = Tessellation1D::from_cells(
            3.0,
            vec![
                Cell1D {
                    start: 0.0,
                    end: 1.0,
                    leaf: 0,
                    full: false,
                },
                Cell1D {
                    start: 1.0,
                    end: 1.7,
                    leaf: 1,
                    full: false,
                },
                Cell1D {
                    start: 1.7,
                    end: 3.0,
                    leaf: 2,
                    full: false,
                },
            ],
            1.0,
            3,
        );
        let mut rng = substream(0, 0, Purpose::Selection);
        assert_abs_diff_eq!(
            typical_interval_sample(&t, &mut rng).unwrap(),
            0.7,
            epsilon = 1e-15
        );
    }

    #[test]
    fn evolution_keeps_partition() {
        let law = GrainLaw1D::fixed_length(1.0);
        let t = simulate(40.0, &law, k(6, 0)).unwrap();
        let mut st = EvolvingState1D::new(&t, &law, 0.0);
        assert_eq!(st.eta_count(), t.eta.len());
        let mut rng = substream(6, 0, Purpose::ForwardArrivals);
        let series = st.evolve(3.0, &[0.0, 1.0, 2.0, 3.0], &mut rng).unwrap();
        assert_eq!(series[0], t.eta.len());
        let now = st.tessellation();
        check_partition(&now);
        assert_eq!(series[3], now.eta.len());
        // nothing happens over an empty span
        let before = st.tessellation();
        st.evolve(3.0, &[3.0], &mut rng).unwrap();
        assert_eq!(st.tessellation().cells, before.cells);
    }

    #[test]
    fn covering_leaf_leaves_one_cell() {
        let law = GrainLaw1D::fixed_length(1.0);
        let t = simulate(5.0, &law, k(7, 0)).unwrap();
        let big = GrainLaw1D::fixed_length(10.0);
        let mut st = EvolvingState1D::new(&t, &big, 0.0);
        st.apply(&Arrival {
            id: 999_999,
            position: -2.0,
            time: 0.5,
            shape: Shape1D::interval(10.0),
        });
        let now = st.tessellation();
        assert_eq!(now.cells.len(), 1);
        assert!(now.eta.is_empty());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn random_laws_partition(seed in 0u64..1000, lo in 0.05..1.0f64, w in 0.0..2.0f64, n in 1.0..40.0f64) {
            let law = GrainLaw1D::LengthLaw { length: LengthLaw::Uniform { lo, hi: lo + w + 1e-3 } };
            let t = simulate(n, &law, k(seed, 0)).unwrap();
            check_partition(&t);
        }
    }
}
