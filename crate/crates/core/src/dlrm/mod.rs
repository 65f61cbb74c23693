//! Dead leaves random measures: a mark measure per leaf, restricted to the
//! part of the leaf not covered by later leaves.

mod marks;
mod testfn;

pub use marks::{MarkError, MarkKind};
pub use testfn::{BoxTerm, TestFunction};

use crate::closedform::{self, ClosedFormError, Leaf};
use crate::dlm1d::{self, components_at, Dlm1dError, EvolvingState1D, Tessellation1D};
use crate::dlm2d::{self, Dlm2dError, EvolvingState2D, PlanarTessellation, TessellationBuilder};
use crate::engine::{self, Arrival, EngineError, Segment, SimulationWindow};
use crate::geom::shapes::Shape2D;
use crate::geom::vec2::{Aabb, Vec2};
use crate::grains::{GrainLaw1D, Law2D, Shape1D};
use crate::rng::{Purpose, SimRng, StreamKey};
use rand::Rng;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum DlrmError {
    #[error(transparent)]
    Mark(#[from] MarkError),
    #[error("invalid test function: {0}")]
    BadFunction(String),
    #[error("test function support must lie inside the simulation window")]
    OutsideWindow,
    #[error("seed offset {0} exceeds the leaf radius bound {1}")]
    OffsetTooFar(f64, f64),
    #[error("starting from the zero measure needs an atomic mark (seeds or corners)")]
    NeedsTessellation,
    #[error(transparent)]
    Dlm1d(#[from] Dlm1dError),
    #[error(transparent)]
    Dlm2d(#[from] Dlm2dError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum LeafLaw {
    D1(GrainLaw1D),
    D2(Law2D),
}

impl LeafLaw {
    pub fn dim(&self) -> usize {
        match self {
            LeafLaw::D1(_) => 1,
            LeafLaw::D2(_) => 2,
        }
    }

    pub fn as_leaf(&self) -> Leaf<'_> {
        match self {
            LeafLaw::D1(l) => Leaf::D1(l),
            LeafLaw::D2(l) => Leaf::D2(l),
        }
    }

    pub fn lambda(&self) -> f64 {
        match self {
            LeafLaw::D1(l) => l.lambda(),
            LeafLaw::D2(l) => l.lambda(),
        }
    }

    pub fn radius_bound(&self) -> f64 {
        match self {
            LeafLaw::D1(l) => l.radius_bound(),
            LeafLaw::D2(l) => l.radius_bound(),
        }
    }
}

/// A leaf law together with its mark kind.
#[derive(Debug, Clone, PartialEq)]
pub struct Dlrm {
    pub leaf: LeafLaw,
    pub mark: MarkKind,
}

impl Dlrm {
    pub fn new(leaf: LeafLaw, mark: MarkKind) -> Result<Self, DlrmError> {
        mark.validate(leaf.dim())?;
        if let (MarkKind::CornerCounting, LeafLaw::D2(l)) = (&mark, &leaf) {
            if l.polygon().is_none() {
                return Err(MarkError::Incompatible {
                    mark: mark.name(),
                    shape: "disk leaves".into(),
                }
                .into());
            }
        }
        if let MarkKind::Seeds { offsets, .. } = &mark {
            let r = leaf.radius_bound();
            for o in offsets {
                let norm = o.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > r {
                    return Err(DlrmError::OffsetTooFar(norm, r));
                }
            }
        }
        Ok(Self { leaf, mark })
    }

    pub fn dim(&self) -> usize {
        self.leaf.dim()
    }

    /// `α = E|M| / λ` with `λ` the covering rate of a fixed point.
    pub fn intensity(&self) -> Result<f64, ClosedFormError> {
        closedform::mark_intensity(self.leaf.as_leaf(), &self.mark)
    }

    /// Rate at which a fixed point gets covered.
    pub fn cover_rate(&self) -> f64 {
        self.mark.leaf_probability() * self.leaf.lambda()
    }

    fn is_atomic(&self) -> bool {
        matches!(self.mark, MarkKind::Seeds { .. } | MarkKind::CornerCounting)
    }

    fn draws(&self, key: StreamKey) -> Draws {
        Draws {
            levels: self.mark.levels(),
            q: 1.0 - self.mark.leaf_probability(),
            marks: key.with_purpose(Purpose::Marks).rng(),
            select: key.with_purpose(Purpose::Selection).rng(),
        }
    }
}

/// Per-arrival random marks with random access by arrival id.
#[derive(Debug, Clone)]
struct Draws {
    levels: Option<Vec<(f64, f64)>>,
    q: f64,
    marks: SimRng,
    select: SimRng,
}

fn uniform_at(rng: &mut SimRng, id: u32) -> f64 {
    // one f64 consumes two 32-bit words
    rng.set_word_pos(2 * u128::from(id));
    rng.random::<f64>()
}

impl Draws {
    fn is_leaf(&mut self, id: u32) -> bool {
        self.q == 0.0 || uniform_at(&mut self.select, id) >= self.q
    }

    fn level(&mut self, id: u32) -> f64 {
        let Some(levels) = &self.levels else {
            return 0.0;
        };
        let u = uniform_at(&mut self.marks, id);
        let mut acc = 0.0;
        for &(c, p) in levels {
            acc += p;
            if u < acc {
                return c;
            }
        }
        levels.last().map_or(0.0, |l| l.0)
    }
}

fn seed_offsets(mark: &MarkKind) -> &[Vec<f64>] {
    match mark {
        MarkKind::Seeds { offsets, .. } => offsets,
        _ => &[],
    }
}

fn window_box(lo: &[f64], hi: &[f64]) -> Aabb {
    Aabb::new(Vec2::new(lo[0], lo[1]), Vec2::new(hi[0], hi[1]))
}

fn box_aabb(b: &BoxTerm) -> Aabb {
    window_box(&b.lo, &b.hi)
}

fn check_window(lo: &[f64], hi: &[f64], dim: usize) -> Result<(), DlrmError> {
    let w = TestFunction::indicator(lo, hi);
    w.validate(dim)
        .map_err(|_| DlrmError::BadFunction("window corners must be finite with lo < hi".into()))
}

fn check_inside(f: &TestFunction, lo: &[f64], hi: &[f64], dim: usize) -> Result<(), DlrmError> {
    f.validate(dim)?;
    let eps = 1e-12 * hi.iter().zip(lo).map(|(a, b)| a - b).fold(1.0, f64::max);
    let ok = f
        .boxes
        .iter()
        .all(|b| (0..dim).all(|k| b.lo[k] >= lo[k] - eps && b.hi[k] <= hi[k] + eps));
    if ok {
        Ok(())
    } else {
        Err(DlrmError::OutsideWindow)
    }
}

/// Cell of a 1D tessellation containing `x` (half-open on the right).
fn leaf_at(t: &Tessellation1D, x: f64) -> Option<u32> {
    let i = t.cells.partition_point(|c| c.start <= x);
    t.cells[..i]
        .iter()
        .rev()
        .find(|c| c.end > x)
        .map(|c| c.leaf)
}

#[derive(Debug, Clone)]
enum Field {
    D1 { tess: Tessellation1D },
    D2 { tess: PlanarTessellation },
}

/// One perfect sample of `ξ` on a window. Every test function supported in
/// the window is evaluated on the same realization.
#[derive(Debug, Clone)]
pub struct Realization {
    model: Dlrm,
    lo: Vec<f64>,
    hi: Vec<f64>,
    key: StreamKey,
    field: Field,
    /// Surviving atoms, absolute coordinates (second coordinate 0 in 1D).
    atoms: Vec<[f64; 2]>,
}

impl Realization {
    pub fn sample(model: &Dlrm, lo: &[f64], hi: &[f64], key: StreamKey) -> Result<Self, DlrmError> {
        let dim = model.dim();
        check_window(lo, hi, dim)?;
        let mut draws = model.draws(key);
        let offsets = seed_offsets(&model.mark);
        let mut atoms = Vec::new();
        let field = match &model.leaf {
            LeafLaw::D1(law) => {
                let len = hi[0] - lo[0];
                let tess = if offsets.is_empty() {
                    dlm1d::simulate(len, law, key)?
                } else {
                    let sel = std::cell::RefCell::new(draws.clone());
                    let t =
                        dlm1d::simulate_thinned(len, law, key, &|id| sel.borrow_mut().is_leaf(id))?;
                    for r in t.history.iter().filter(|r| !r.leaf) {
                        for o in offsets {
                            let x = r.position + o[0];
                            if x >= 0.0 && x < len && leaf_at(&t, x).is_some_and(|l| l > r.id) {
                                atoms.push([x + lo[0], 0.0]);
                            }
                        }
                    }
                    t
                };
                Field::D1 { tess }
            }
            LeafLaw::D2(law) => {
                let window = window_box(lo, hi);
                let tess = if offsets.is_empty() {
                    dlm2d::simulate2d(window, law, key)?
                } else {
                    seeds_2d(window, law, key, &mut draws, offsets, &mut atoms)?
                };
                if let MarkKind::CornerCounting = model.mark {
                    let mut idx = tess.cover_index();
                    for l in &tess.leaves {
                        if let Shape2D::Polygon(p) = &l.shape {
                            for &v in p.vertices() {
                                if window.contains(v) && !idx.covered_before(v, l.id) {
                                    atoms.push([v.x, v.y]);
                                }
                            }
                        }
                    }
                }
                Field::D2 { tess }
            }
        };
        Ok(Self {
            model: model.clone(),
            lo: lo.to_vec(),
            hi: hi.to_vec(),
            key,
            field,
            atoms,
        })
    }

    pub fn tessellation_1d(&self) -> Option<&Tessellation1D> {
        match &self.field {
            Field::D1 { tess } => Some(tess),
            Field::D2 { .. } => None,
        }
    }

    pub fn tessellation_2d(&self) -> Option<&PlanarTessellation> {
        match &self.field {
            Field::D2 { tess } => Some(tess),
            Field::D1 { .. } => None,
        }
    }

    pub fn atoms(&self) -> &[[f64; 2]] {
        &self.atoms
    }

    /// `ξ(box)` for every box of `f`, unweighted.
    pub fn xi_boxes(&self, f: &TestFunction) -> Result<Vec<f64>, DlrmError> {
        let dim = self.model.dim();
        check_inside(f, &self.lo, &self.hi, dim)?;
        let mut draws = self.model.draws(self.key);
        if self.model.is_atomic() {
            return Ok(atom_counts(&self.atoms, f, dim));
        }
        Ok(match &self.field {
            Field::D1 { tess } => field_1d(tess, self.lo[0], f, &self.model.mark, &mut draws),
            Field::D2 { tess } => match self.model.mark {
                MarkKind::BoundarySurface => f
                    .boxes
                    .iter()
                    .map(|b| tess.boundary_length_in(&box_aabb(b)))
                    .collect(),
                _ => {
                    let whole = window_box(&self.lo, &self.hi);
                    let probes: Vec<Aabb> = f.boxes.iter().map(box_aabb).collect();
                    let with_areas;
                    let (t, offset) = if probes.iter().all(|p| *p == whole) {
                        (tess, 0)
                    } else {
                        let law = match &self.model.leaf {
                            LeafLaw::D2(l) => l,
                            LeafLaw::D1(_) => unreachable!(),
                        };
                        let mut b =
                            TessellationBuilder::new(whole, &probes, 2.0 * law.radius_bound())?;
                        for l in &tess.leaves {
                            b.add(l.id, l.time, l.shape.clone());
                        }
                        with_areas = b.finish(tess.arrivals);
                        (&with_areas, 1)
                    };
                    (0..probes.len())
                        .map(|k| {
                            t.leaves
                                .iter()
                                .map(|l| {
                                    draws.level(l.id) * l.areas[if offset == 0 { 0 } else { k + 1 }]
                                })
                                .sum()
                        })
                        .collect()
                }
            },
        })
    }

    /// `ξ(f)`.
    pub fn xi(&self, f: &TestFunction) -> Result<f64, DlrmError> {
        Ok(self
            .xi_boxes(f)?
            .iter()
            .zip(&f.boxes)
            .map(|(v, b)| v * b.weight)
            .sum())
    }
}

fn seeds_2d(
    window: Aabb,
    law: &Law2D,
    key: StreamKey,
    draws: &mut Draws,
    offsets: &[Vec<f64>],
    atoms: &mut Vec<[f64; 2]>,
) -> Result<PlanarTessellation, DlrmError> {
    let sw = SimulationWindow::for_law(window, law);
    let mut stream = engine::reversed_stream(&sw, law, key)?;
    let mut b = TessellationBuilder::new(window, &[], 2.0 * law.radius_bound())?;
    loop {
        if stream.consumed() >= dlm2d::DEFAULT_MAX_ARRIVALS {
            return Err(Dlm2dError::ArrivalBudget(dlm2d::DEFAULT_MAX_ARRIVALS).into());
        }
        let a = stream.next().expect("positive arrival rate");
        if draws.is_leaf(a.id) {
            b.add(a.id, a.time, a.shape.translated(a.position));
            if b.is_covered() {
                break;
            }
        } else {
            for o in offsets {
                let p = a.position + Vec2::new(o[0], o[1]);
                if window.contains(p) && !b.covers(p) {
                    atoms.push([p.x, p.y]);
                }
            }
        }
    }
    let n = stream.consumed();
    Ok(b.finish(n))
}

fn atom_counts(atoms: &[[f64; 2]], f: &TestFunction, dim: usize) -> Vec<f64> {
    f.boxes
        .iter()
        .map(|b| atoms.iter().filter(|a| b.contains(&a[..dim])).count() as f64)
        .collect()
}

/// Boundary or Lebesgue-type mass of a 1D tessellation whose origin sits at `lo`.
fn field_1d(
    tess: &Tessellation1D,
    lo: f64,
    f: &TestFunction,
    mark: &MarkKind,
    draws: &mut Draws,
) -> Vec<f64> {
    match mark {
        MarkKind::BoundarySurface => f
            .boxes
            .iter()
            .map(|b| tess.eta.iter().filter(|&&x| b.contains(&[x + lo])).count() as f64)
            .collect(),
        _ => f
            .boxes
            .iter()
            .map(|b| {
                tess.cells
                    .iter()
                    .filter(|c| !c.is_empty())
                    .map(|c| {
                        let o = b.overlap_1d(c.start + lo, c.end + lo);
                        if o > 0.0 {
                            draws.level(c.leaf) * o
                        } else {
                            0.0
                        }
                    })
                    .sum()
            })
            .collect(),
    }
}

/// `ξ(f)` on a fresh realization over the support of `f`.
pub fn evaluate_xi(model: &Dlrm, f: &TestFunction, key: StreamKey) -> Result<f64, DlrmError> {
    f.validate(model.dim())?;
    let (lo, hi) = f.support();
    Realization::sample(model, &lo, &hi, key)?.xi(f)
}

#[derive(Debug, Clone)]
enum State {
    Atoms,
    D1(EvolvingState1D),
    D2(EvolvingState2D),
}

/// Forward dynamics of `ξ_t` on a window.
#[derive(Debug, Clone)]
pub struct DlrmEvolution {
    model: Dlrm,
    lo: Vec<f64>,
    hi: Vec<f64>,
    time: f64,
    next_id: u32,
    draws: Draws,
    state: State,
    atoms: Vec<[f64; 2]>,
}

impl DlrmEvolution {
    /// Stationary start at time 0.
    pub fn from_realization(r: &Realization) -> Self {
        let (state, next_id) = match (&r.field, &r.model.leaf) {
            (_, _) if r.model.is_atomic() => (State::Atoms, arrivals_of(&r.field)),
            (Field::D1 { tess }, LeafLaw::D1(law)) => (
                State::D1(EvolvingState1D::new(tess, law, 0.0)),
                tess.arrivals,
            ),
            (Field::D2 { tess }, LeafLaw::D2(law)) => (
                State::D2(EvolvingState2D::new(tess, law, 0.0)),
                tess.arrivals,
            ),
            _ => unreachable!("realization matches its model"),
        };
        Self {
            model: r.model.clone(),
            lo: r.lo.clone(),
            hi: r.hi.clone(),
            time: 0.0,
            next_id,
            draws: r.model.draws(r.key),
            state,
            atoms: r.atoms.clone(),
        }
    }

    /// Start from the zero measure at time 0; atomic marks only.
    pub fn empty(model: &Dlrm, lo: &[f64], hi: &[f64], key: StreamKey) -> Result<Self, DlrmError> {
        check_window(lo, hi, model.dim())?;
        if !model.is_atomic() {
            return Err(DlrmError::NeedsTessellation);
        }
        Ok(Self {
            model: model.clone(),
            lo: lo.to_vec(),
            hi: hi.to_vec(),
            time: 0.0,
            next_id: 0,
            draws: model.draws(key),
            state: State::Atoms,
            atoms: Vec::new(),
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn atoms(&self) -> &[[f64; 2]] {
        &self.atoms
    }

    pub fn xi(&mut self, f: &TestFunction) -> Result<f64, DlrmError> {
        let dim = self.model.dim();
        check_inside(f, &self.lo, &self.hi, dim)?;
        let vals = match &mut self.state {
            State::Atoms => atom_counts(&self.atoms, f, dim),
            State::D1(s) => field_1d(
                &s.tessellation(),
                self.lo[0],
                f,
                &self.model.mark,
                &mut self.draws,
            ),
            State::D2(s) => match self.model.mark {
                MarkKind::BoundarySurface => {
                    let t = s.snapshot(&[])?;
                    f.boxes
                        .iter()
                        .map(|b| t.boundary_length_in(&box_aabb(b)))
                        .collect()
                }
                _ => {
                    let probes: Vec<Aabb> = f.boxes.iter().map(box_aabb).collect();
                    let t = s.snapshot(&probes)?;
                    (0..probes.len())
                        .map(|k| {
                            t.leaves
                                .iter()
                                .map(|l| self.draws.level(l.id) * l.areas[k + 1])
                                .sum()
                        })
                        .collect()
                }
            },
        };
        Ok(vals.iter().zip(&f.boxes).map(|(v, b)| v * b.weight).sum())
    }

    fn add_seeds(&mut self, pos: [f64; 2]) {
        let dim = self.model.dim();
        let offsets = seed_offsets(&self.model.mark).to_vec();
        for o in &offsets {
            let p = [pos[0] + o[0], if dim == 2 { pos[1] + o[1] } else { 0.0 }];
            if (0..dim).all(|k| p[k] >= self.lo[k] && p[k] < self.hi[k]) {
                self.atoms.push(p);
            }
        }
    }

    fn apply_1d(&mut self, a: &Arrival<f64, Shape1D>) {
        let lo = self.lo[0];
        if !self.draws.is_leaf(a.id) {
            self.add_seeds([a.position + lo, 0.0]);
            return;
        }
        let comps: Vec<(f64, f64)> = components_at(&a.shape, a.position + lo).collect();
        self.atoms
            .retain(|x| !comps.iter().any(|&(p, q)| p < x[0] && x[0] < q));
        if let State::D1(s) = &mut self.state {
            s.apply(a);
        }
    }

    fn apply_2d(&mut self, a: &Arrival<Vec2, Shape2D>) {
        if !self.draws.is_leaf(a.id) {
            self.add_seeds([a.position.x, a.position.y]);
            return;
        }
        let shape = a.shape.translated(a.position);
        self.atoms
            .retain(|x| shape.depth(Vec2::new(x[0], x[1])) <= 0.0);
        if let (MarkKind::CornerCounting, Shape2D::Polygon(p)) = (&self.model.mark, &shape) {
            let w = window_box(&self.lo, &self.hi);
            for &v in p.vertices() {
                if w.contains(v) {
                    self.atoms.push([v.x, v.y]);
                }
            }
        }
        if let State::D2(s) = &mut self.state {
            s.apply(a);
        }
    }

    /// Applies all arrivals in `(now, until]`.
    pub fn advance(&mut self, until: f64, rng: &mut SimRng) -> Result<(), DlrmError> {
        match self.model.leaf.clone() {
            LeafLaw::D1(law) => {
                let w = SimulationWindow::for_law(Segment::new(0.0, self.hi[0] - self.lo[0]), &law);
                let arr = engine::forward_stream(&w, &law, self.time, until, self.next_id, rng)?;
                self.next_id += arr.len() as u32;
                arr.iter().for_each(|a| self.apply_1d(a));
            }
            LeafLaw::D2(law) => {
                let w = SimulationWindow::for_law(window_box(&self.lo, &self.hi), &law);
                let arr = engine::forward_stream(&w, &law, self.time, until, self.next_id, rng)?;
                self.next_id += arr.len() as u32;
                arr.iter().for_each(|a| self.apply_2d(a));
            }
        }
        self.time = until;
        Ok(())
    }
}

fn arrivals_of(f: &Field) -> u32 {
    match f {
        Field::D1 { tess } => tess.arrivals,
        Field::D2 { tess } => tess.arrivals,
    }
}

/// `ξ_t(f)` at each time of the sorted `grid` (all at or after the current time).
pub fn evolve_xi(
    state: &mut DlrmEvolution,
    f: &TestFunction,
    grid: &[f64],
    rng: &mut SimRng,
) -> Result<Vec<f64>, DlrmError> {
    let mut out = Vec::with_capacity(grid.len());
    for &t in grid {
        if t > state.time {
            state.advance(t, rng)?;
        }
        out.push(state.xi(f)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grains::GrainLaw2D;
    use approx::assert_abs_diff_eq;

    fn key(r: u64) -> StreamKey {
        StreamKey::new(21, r, Purpose::Arrivals)
    }

    fn d1(mark: MarkKind) -> Dlrm {
        Dlrm::new(LeafLaw::D1(GrainLaw1D::fixed_length(1.0)), mark).unwrap()
    }

    fn d2(law: GrainLaw2D, mark: MarkKind) -> Dlrm {
        Dlrm::new(LeafLaw::D2(law.build().unwrap()), mark).unwrap()
    }

    #[test]
    fn colour_one_gives_lebesgue() {
        let f = TestFunction::indicator(&[0.0], &[1.0]);
        let v = evaluate_xi(&d1(MarkKind::Colour { p: 1.0 }), &f, key(0)).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
        let f = TestFunction::indicator(&[0.0, 0.0], &[3.0, 2.0]);
        let v = evaluate_xi(
            &d2(GrainLaw2D::unit_disk(), MarkKind::Colour { p: 1.0 }),
            &f,
            key(0),
        )
        .unwrap();
        assert_abs_diff_eq!(v, 6.0, epsilon = 1e-9);
    }

    #[test]
    fn boundary_mark_matches_tessellations() {
        let m = d1(MarkKind::BoundarySurface);
        let r = Realization::sample(&m, &[0.0], &[30.0], key(1)).unwrap();
        let t = dlm1d::simulate(30.0, &GrainLaw1D::fixed_length(1.0), key(1)).unwrap();
        let f = TestFunction::indicator(&[0.0], &[30.0]);
        assert_eq!(r.xi(&f).unwrap(), t.eta.len() as f64);

        let law = GrainLaw2D::unit_disk();
        let m = d2(law.clone(), MarkKind::BoundarySurface);
        let r = Realization::sample(&m, &[0.0, 0.0], &[6.0, 6.0], key(2)).unwrap();
        let t = dlm2d::simulate2d(Aabb::square(6.0), &law.build().unwrap(), key(2)).unwrap();
        let f = TestFunction::indicator(&[0.0, 0.0], &[6.0, 6.0]);
        assert_eq!(r.xi(&f).unwrap(), t.total_boundary_length);
    }

    #[test]
    fn linear_in_f() {
        let f = TestFunction {
            boxes: vec![
                BoxTerm {
                    lo: vec![0.5, 0.5],
                    hi: vec![2.0, 3.0],
                    weight: 2.0,
                },
                BoxTerm {
                    lo: vec![3.0, 1.0],
                    hi: vec![5.0, 4.0],
                    weight: -1.0,
                },
            ],
        };
        let g = TestFunction {
            boxes: vec![BoxTerm {
                lo: vec![1.0, 1.0],
                hi: vec![4.5, 2.5],
                weight: 0.5,
            }],
        };
        let sq = GrainLaw2D::square(1.0, true);
        for m in [
            d2(GrainLaw2D::unit_disk(), MarkKind::Colour { p: 0.4 }),
            d2(GrainLaw2D::unit_disk(), MarkKind::BoundarySurface),
            d2(sq.clone(), MarkKind::CornerCounting),
            d2(
                sq,
                MarkKind::Seeds {
                    q: 0.3,
                    offsets: vec![vec![0.0, 0.0], vec![0.1, 0.2]],
                },
            ),
        ] {
            let r = Realization::sample(&m, &[0.0, 0.0], &[5.0, 5.0], key(3)).unwrap();
            let lhs = r.xi(&f.plus(&g)).unwrap();
            let rhs = r.xi(&f).unwrap() + r.xi(&g).unwrap();
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn incompatible_marks_rejected() {
        let disk = GrainLaw2D::unit_disk().build().unwrap();
        assert!(Dlrm::new(LeafLaw::D2(disk), MarkKind::CornerCounting).is_err());
        assert!(Dlrm::new(
            LeafLaw::D1(GrainLaw1D::fixed_length(1.0)),
            MarkKind::CornerCounting
        )
        .is_err());
        let far = MarkKind::Seeds {
            q: 0.5,
            offsets: vec![vec![3.0]],
        };
        assert!(matches!(
            Dlrm::new(LeafLaw::D1(GrainLaw1D::fixed_length(1.0)), far),
            Err(DlrmError::OffsetTooFar(..))
        ));
        let m = d1(MarkKind::Colour { p: 0.5 });
        let r = Realization::sample(&m, &[0.0], &[5.0], key(0)).unwrap();
        assert_eq!(
            r.xi(&TestFunction::indicator(&[4.0], &[6.0])),
            Err(DlrmError::OutsideWindow)
        );
        assert_eq!(
            DlrmEvolution::empty(&m, &[0.0], &[5.0], key(0)).err(),
            Some(DlrmError::NeedsTessellation)
        );
    }

    #[test]
    fn old_mass_never_increases() {
        // colour ≡ 1 on the first generation only: track its mass forward
        let m = d1(MarkKind::Colour { p: 0.5 });
        let r = Realization::sample(&m, &[0.0], &[20.0], key(4)).unwrap();
        let mut ev = DlrmEvolution::from_realization(&r);
        let f = TestFunction::indicator(&[0.0], &[20.0]);
        assert_abs_diff_eq!(ev.xi(&f).unwrap(), r.xi(&f).unwrap(), epsilon = 1e-9);
        let first = r.tessellation_1d().unwrap().arrivals;
        let mut rng = key(4).with_purpose(Purpose::ForwardArrivals).rng();
        let mut prev = f64::INFINITY;
        for k in 1..=10 {
            ev.advance(0.2 * k as f64, &mut rng).unwrap();
            let State::D1(s) = &ev.state else {
                unreachable!()
            };
            let old: f64 = s
                .tessellation()
                .cells
                .iter()
                .filter(|c| c.leaf < first)
                .map(|c| c.len())
                .sum();
            assert!(old <= prev + 1e-12);
            prev = old;
        }
    }

    #[test]
    fn no_arrivals_constant_series() {
        let m = d2(GrainLaw2D::square(1.0, true), MarkKind::CornerCounting);
        let r = Realization::sample(&m, &[0.0, 0.0], &[4.0, 4.0], key(5)).unwrap();
        let mut ev = DlrmEvolution::from_realization(&r);
        let f = TestFunction::indicator(&[0.0, 0.0], &[4.0, 4.0]);
        let mut rng = key(5).rng();
        let v = evolve_xi(&mut ev, &f, &[0.0, 0.0, 0.0], &mut rng).unwrap();
        assert!(v.iter().all(|&x| x == r.xi(&f).unwrap()));
    }

    #[test]
    fn evolution_snapshot_matches_realization_2d() {
        let m = d2(GrainLaw2D::unit_disk(), MarkKind::Colour { p: 0.5 });
        let r = Realization::sample(&m, &[0.0, 0.0], &[5.0, 5.0], key(6)).unwrap();
        let mut ev = DlrmEvolution::from_realization(&r);
        let f = TestFunction::indicator(&[1.0, 1.0], &[4.0, 3.0]);
        assert_abs_diff_eq!(ev.xi(&f).unwrap(), r.xi(&f).unwrap(), epsilon = 1e-9);
    }
}
