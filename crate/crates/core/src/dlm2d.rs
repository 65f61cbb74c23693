//! Two-dimensional dead leaves tessellation for disk and convex-polygon
//! leaves.
//!
//! Leaves arrive in reversed time and each one keeps the part of its
//! boundary not covered by earlier arrivals. Coverage is detected exactly:
//! the still-exposed boundary of the window and of every placed leaf is kept
//! as a set of boundary parameters, and the window is covered once that set
//! is empty. Patch areas follow from Green's theorem along the same arcs.

use crate::engine::{self, Arrival, EngineError, SimulationWindow};
use crate::geom::grid::BucketGrid;
use crate::geom::loopset::{Cause, LoopSet, Span};
use crate::geom::shapes::{ConvexPolygon, Shape2D};
use crate::geom::vec2::{Aabb, Vec2};
use crate::grains::Law2D;
use crate::rng::{SimRng, StreamKey};
use serde::Serialize;
use std::collections::HashMap;

/// Leaves whose radius bound is below this fraction of the window side are
/// rejected: covering the window would take more than ~10⁸ arrivals.
pub const RESOLUTION: f64 = 1e-4;
/// Branch points closer than this are treated as one vertex.
pub const MERGE_RADIUS: f64 = 1e-9;
pub const DEFAULT_MAX_ARRIVALS: u32 = 50_000_000;
pub const DEFAULT_RASTER: usize = 2048;

/// Height direction for the Morse cell count; any direction that is not
/// parallel to a polygon edge will do.
const HEIGHT_ANGLE: f64 = 1.234_567_9;

pub fn height_direction() -> Vec2 {
    Vec2::from_angle(HEIGHT_ANGLE)
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum Dlm2dError {
    #[error("window must have positive finite width and height")]
    BadWindow,
    #[error("probe box must lie inside the window")]
    ProbeOutsideWindow,
    #[error("leaves of radius at most {radius} are below the coverage resolution of a window of side {side}")]
    Resolution { radius: f64, side: f64 },
    #[error("window not covered after {0} arrivals")]
    ArrivalBudget(u32),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacedLeaf {
    pub id: u32,
    pub time: f64,
    pub shape: Shape2D,
    /// Boundary parameters visible inside the window.
    pub visible: LoopSet,
    /// Visible patch area inside the window, then inside each probe box.
    pub areas: Vec<f64>,
}

impl PlacedLeaf {
    pub fn visible_length(&self) -> f64 {
        self.visible.measure() * self.shape.perimeter()
    }

    pub fn area(&self) -> f64 {
        self.areas[0]
    }
}

/// T-junction where the visible boundary of `ending` stops on `top`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchPoint {
    pub point: Vec2,
    pub top: u32,
    pub ending: u32,
    pub top_param: f64,
    pub ending_param: f64,
    /// Unit tangent of the ending arc, pointing away from the junction.
    pub direction: Vec2,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArcGeometry {
    /// Counter-clockwise from `start` to `end` (radians, `end > start`).
    Circle {
        center: Vec2,
        radius: f64,
        start: f64,
        end: f64,
    },
    Segment {
        from: Vec2,
        to: Vec2,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryArc {
    pub leaf: u32,
    pub geometry: ArcGeometry,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Connectivity {
    pub components: usize,
    pub touching_window: usize,
    /// Components that never reach the window edge.
    pub isolated: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RasterCells {
    pub resolution: usize,
    pub total: usize,
    /// Components not touching the raster border.
    pub interior: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanarTessellation {
    pub window: Aabb,
    pub probes: Vec<Aabb>,
    /// Every leaf that reached the window before coverage, in arrival order.
    pub leaves: Vec<PlacedLeaf>,
    pub branch_points: Vec<BranchPoint>,
    pub total_boundary_length: f64,
    /// Reversed time of the covering arrival; infinite if never covered.
    pub coverage_time: f64,
    pub arrivals: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sim2dOptions {
    pub max_arrivals: u32,
    /// Boxes inside the window for which patch areas are also computed.
    pub probes: Vec<Aabb>,
}

impl Default for Sim2dOptions {
    fn default() -> Self {
        Self {
            max_arrivals: DEFAULT_MAX_ARRIVALS,
            probes: Vec::new(),
        }
    }
}

fn frame_of(b: &Aabb) -> Shape2D {
    Shape2D::Polygon(ConvexPolygon::from_aabb(b))
}

/// Parameters of `∂a` strictly inside `b`.
fn inside(a: &Shape2D, b: &Shape2D, cause: Cause) -> LoopSet {
    LoopSet::from_arcs(a.arcs_inside(b).into_iter().map(|(s, e)| (s, e, cause)))
}

fn green(shape: &Shape2D, set: &LoopSet) -> f64 {
    set.spans().iter().map(|s| shape.x_dy(s.a, s.b)).sum()
}

fn check_window(w: &Aabb) -> Result<(), Dlm2dError> {
    let ok = [w.min.x, w.min.y, w.max.x, w.max.y]
        .iter()
        .all(|v| v.is_finite())
        && w.width() > 0.0
        && w.height() > 0.0;
    if ok {
        Ok(())
    } else {
        Err(Dlm2dError::BadWindow)
    }
}

/// Incremental reversed-time construction. Leaves are added earliest
/// (topmost) first.
pub struct TessellationBuilder {
    window: Aabb,
    frames: Vec<(Aabb, Shape2D, LoopSet)>,
    leaves: Vec<PlacedLeaf>,
    bboxes: Vec<Aabb>,
    alive: Vec<LoopSet>,
    alive_count: usize,
    grid: BucketGrid,
    branch_points: Vec<BranchPoint>,
    buf: Vec<u32>,
    last_time: f64,
}

impl TessellationBuilder {
    /// `cell` is the bucket size of the spatial index; about the leaf diameter.
    pub fn new(window: Aabb, probes: &[Aabb], cell: f64) -> Result<Self, Dlm2dError> {
        check_window(&window)?;
        let mut frames = vec![(window, frame_of(&window), LoopSet::full())];
        for p in probes {
            check_window(p)?;
            if !window.contains_box(p) {
                return Err(Dlm2dError::ProbeOutsideWindow);
            }
            frames.push((*p, frame_of(p), LoopSet::full()));
        }
        let side = window.width().max(window.height());
        let cell = cell.max(side / 256.0).min(side);
        Ok(Self {
            window,
            frames,
            leaves: Vec::new(),
            bboxes: Vec::new(),
            alive: Vec::new(),
            alive_count: 0,
            grid: BucketGrid::new(window, cell),
            branch_points: Vec::new(),
            buf: Vec::new(),
            last_time: 0.0,
        })
    }

    pub fn is_covered(&self) -> bool {
        self.alive_count == 0 && self.frames[0].2.is_empty()
    }

    fn index_of(&self, id: u32) -> usize {
        self.leaves
            .binary_search_by_key(&id, |l| l.id)
            .expect("placed leaf")
    }

    /// Whether `p` lies inside a leaf placed so far.
    pub fn covers(&mut self, p: Vec2) -> bool {
        let b = Aabb::new(p, p);
        self.grid.query_into(&b, &mut self.buf);
        self.buf
            .iter()
            .any(|&k| self.leaves[k as usize].shape.depth(p) > 0.0)
    }

    /// Places a leaf below everything added so far. Ids must increase.
    pub fn add(&mut self, id: u32, time: f64, shape: Shape2D) {
        self.last_time = time;
        let bb = shape.bbox();
        if !bb.intersects(&self.window) {
            return;
        }
        debug_assert!(self.leaves.last().is_none_or(|l| l.id < id));
        self.grid.query_into(&bb, &mut self.buf);
        self.buf.sort_unstable();
        let near: Vec<usize> = self
            .buf
            .iter()
            .map(|&k| k as usize)
            .filter(|&k| self.bboxes[k].intersects(&bb))
            .collect();

        let mut cover = Vec::new();
        for &k in &near {
            let c = Cause::Leaf(self.leaves[k].id);
            cover.extend(
                shape
                    .arcs_inside(&self.leaves[k].shape)
                    .into_iter()
                    .map(|(a, b)| (a, b, c)),
            );
        }
        let visible =
            inside(&shape, &self.frames[0].1, Cause::Window).subtract(&LoopSet::from_arcs(cover));

        for s in visible.arcs() {
            for (u, cause, start) in [(s.a, s.ca, true), (s.b, s.cb, false)] {
                if let Cause::Leaf(j) = cause {
                    let u = u.rem_euclid(1.0);
                    let point = shape.point_at(u);
                    let t = shape.tangent_at(u);
                    let top = &self.leaves[self.index_of(j)];
                    self.branch_points.push(BranchPoint {
                        point,
                        top: j,
                        ending: id,
                        top_param: top.shape.param_of(point),
                        ending_param: u,
                        direction: if start { t } else { -t },
                    });
                }
            }
        }

        let mut areas = vec![0.0; self.frames.len()];
        for (f, (_, frame, alive)) in self.frames.iter_mut().enumerate() {
            areas[f] += if f == 0 {
                green(&shape, &visible)
            } else {
                green(
                    &shape,
                    &visible.intersect(&inside(&shape, frame, Cause::Window)),
                )
            };
            let ins = inside(frame, &shape, Cause::Leaf(id));
            if !alive.is_empty() {
                areas[f] += green(frame, &alive.intersect(&ins));
                *alive = alive.subtract(&ins);
            }
        }
        for &k in &near {
            if self.alive[k].is_empty() {
                continue;
            }
            let other = &self.leaves[k].shape;
            let ins = inside(other, &shape, Cause::Leaf(id));
            let killed = self.alive[k].intersect(&ins);
            if killed.is_empty() {
                continue;
            }
            for (f, (_, frame, _)) in self.frames.iter().enumerate() {
                areas[f] -= if f == 0 {
                    green(other, &killed)
                } else {
                    green(
                        other,
                        &killed.intersect(&inside(other, frame, Cause::Window)),
                    )
                };
            }
            self.alive[k] = self.alive[k].subtract(&ins);
            if self.alive[k].is_empty() {
                self.alive_count -= 1;
            }
        }

        let idx = self.leaves.len() as u32;
        self.grid.insert(idx, &bb);
        self.bboxes.push(bb);
        if !visible.is_empty() {
            self.alive_count += 1;
        }
        self.alive.push(visible.clone());
        self.leaves.push(PlacedLeaf {
            id,
            time,
            shape,
            visible,
            areas,
        });
    }

    pub fn finish(self, arrivals: u32) -> PlanarTessellation {
        let coverage_time = if self.is_covered() {
            self.last_time
        } else {
            f64::INFINITY
        };
        let total = self.leaves.iter().map(PlacedLeaf::visible_length).sum();
        PlanarTessellation {
            window: self.window,
            probes: self.frames[1..].iter().map(|f| f.0).collect(),
            leaves: self.leaves,
            branch_points: self.branch_points,
            total_boundary_length: total,
            coverage_time,
            arrivals,
        }
    }
}

fn check_resolution(window: &Aabb, law: &Law2D) -> Result<(), Dlm2dError> {
    let side = window.width().min(window.height());
    let radius = law.radius_bound();
    if radius < RESOLUTION * side {
        return Err(Dlm2dError::Resolution { radius, side });
    }
    Ok(())
}

pub fn simulate2d(
    window: Aabb,
    law: &Law2D,
    key: StreamKey,
) -> Result<PlanarTessellation, Dlm2dError> {
    simulate2d_with(window, law, key, &Sim2dOptions::default())
}

pub fn simulate2d_with(
    window: Aabb,
    law: &Law2D,
    key: StreamKey,
    opts: &Sim2dOptions,
) -> Result<PlanarTessellation, Dlm2dError> {
    check_window(&window)?;
    check_resolution(&window, law)?;
    let sw = SimulationWindow::for_law(window, law);
    let mut stream = engine::reversed_stream(&sw, law, key)?;
    let mut b = TessellationBuilder::new(window, &opts.probes, 2.0 * law.radius_bound())?;
    loop {
        if stream.consumed() >= opts.max_arrivals {
            return Err(Dlm2dError::ArrivalBudget(opts.max_arrivals));
        }
        let a = stream.next().expect("positive arrival rate");
        b.add(a.id, a.time, a.shape.translated(a.position));
        if b.is_covered() {
            break;
        }
    }
    let n = stream.consumed();
    Ok(b.finish(n))
}

/// Reversed time at which the window is first covered.
pub fn coverage_stop_2d(
    window: Aabb,
    law: &Law2D,
    key: StreamKey,
    max_arrivals: u32,
) -> Result<f64, Dlm2dError> {
    let opts = Sim2dOptions {
        max_arrivals,
        probes: Vec::new(),
    };
    Ok(simulate2d_with(window, law, key, &opts)?.coverage_time)
}

/// Tessellation from explicitly given leaves, topmost first.
pub fn tessellate<I: IntoIterator<Item = Shape2D>>(
    window: Aabb,
    leaves: I,
) -> Result<PlanarTessellation, Dlm2dError> {
    let mut b = TessellationBuilder::new(window, &[], 0.0)?;
    let mut n = 0;
    for (i, s) in leaves.into_iter().enumerate() {
        b.add(i as u32, i as f64, s);
        n += 1;
        if b.is_covered() {
            break;
        }
    }
    Ok(b.finish(n))
}

fn in_box(b: &Aabb, p: Vec2) -> bool {
    p.x >= b.min.x && p.x < b.max.x && p.y >= b.min.y && p.y < b.max.y
}

/// Index of the arc in `arcs` containing parameter `u`, or the nearest one.
fn arc_index(arcs: &[Span], u: f64) -> Option<usize> {
    let mut best = (f64::INFINITY, None);
    for (i, s) in arcs.iter().enumerate() {
        let v = if u < s.a { u + 1.0 } else { u };
        let d = if v <= s.b {
            0.0
        } else {
            (v - s.b).min(s.a + 1.0 - v)
        };
        if d < best.0 {
            best = (d, Some(i));
        }
    }
    best.1
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.0[a.max(b)] = a.min(b);
        }
    }
}

impl PlanarTessellation {
    pub fn leaf(&self, id: u32) -> Option<&PlacedLeaf> {
        self.leaves
            .binary_search_by_key(&id, |l| l.id)
            .ok()
            .map(|i| &self.leaves[i])
    }

    /// The window shrunk by `r` on every side.
    pub fn eroded(&self, r: f64) -> Aabb {
        let d = Vec2::new(r, r);
        Aabb::new(self.window.min + d, self.window.max - d)
    }

    pub fn boundary_length_in(&self, b: &Aabb) -> f64 {
        let frame = frame_of(b);
        self.leaves
            .iter()
            .filter(|l| !l.visible.is_empty() && l.shape.bbox().intersects(b))
            .map(|l| {
                l.visible
                    .intersect(&inside(&l.shape, &frame, Cause::Window))
                    .measure()
                    * l.shape.perimeter()
            })
            .sum()
    }

    pub fn branch_points_in(&self, b: &Aabb) -> usize {
        self.branch_points
            .iter()
            .filter(|p| in_box(b, p.point))
            .count()
    }

    /// Arc endpoints on the window edge.
    pub fn window_crossings(&self) -> usize {
        self.leaves
            .iter()
            .flat_map(|l| l.visible.endpoints())
            .filter(|e| e.1 == Cause::Window)
            .count()
    }

    /// Morse count of cells over critical points in `b`: the lowest point
    /// of each visible leaf boundary adds one, the highest subtracts one,
    /// and a junction adds one when its ending arc leaves upwards. The sum
    /// is the Euler characteristic of the cells, i.e. cells minus holes.
    pub fn cells_in(&self, b: &Aabb) -> i64 {
        let up = height_direction();
        let mut n: i64 = 0;
        for l in &self.leaves {
            if l.visible.is_empty() {
                continue;
            }
            for (dir, w) in [(up, 1), (-up, -1)] {
                let u = l.shape.support_param(dir);
                if l.visible.contains(u) && in_box(b, l.shape.point_at(u)) {
                    n += w;
                }
            }
        }
        n + self
            .branch_points
            .iter()
            .filter(|p| in_box(b, p.point) && p.direction.dot(up) > 0.0)
            .count() as i64
    }

    fn cuts_by_leaf(&self) -> HashMap<u32, Vec<f64>> {
        let mut cuts: HashMap<u32, Vec<f64>> = HashMap::new();
        for p in &self.branch_points {
            cuts.entry(p.top).or_default().push(p.top_param);
        }
        for v in cuts.values_mut() {
            v.sort_by(f64::total_cmp);
        }
        cuts
    }

    /// Edges of the arrangement (visible arcs split at junctions), as
    /// `(leaf, start, end)` boundary parameters with `end > start`.
    pub fn edges(&self) -> Vec<(u32, f64, f64)> {
        let cuts = self.cuts_by_leaf();
        let empty = Vec::new();
        let mut out = Vec::new();
        for l in &self.leaves {
            let cs = cuts.get(&l.id).unwrap_or(&empty);
            for s in l.visible.arcs() {
                let full = s.ca == Cause::Seam && s.cb == Cause::Seam;
                let mut inner: Vec<f64> = cs
                    .iter()
                    .map(|&c| if c < s.a { c + 1.0 } else { c })
                    .filter(|&c| c > s.a && c < s.b)
                    .collect();
                inner.sort_by(f64::total_cmp);
                if full && !inner.is_empty() {
                    let k = inner.len();
                    for i in 0..k {
                        let a = inner[i];
                        let b = if i + 1 < k {
                            inner[i + 1]
                        } else {
                            inner[0] + 1.0
                        };
                        out.push((l.id, a, b));
                    }
                } else {
                    let mut prev = s.a;
                    for c in inner {
                        out.push((l.id, prev, c));
                        prev = c;
                    }
                    out.push((l.id, prev, s.b));
                }
            }
        }
        out
    }

    /// Edges whose midpoint lies in `b`.
    pub fn edges_in(&self, b: &Aabb) -> usize {
        self.edges()
            .into_iter()
            .filter(|&(id, s, e)| {
                let l = self.leaf(id).expect("edge leaf");
                in_box(b, l.shape.point_at(0.5 * (s + e)))
            })
            .count()
    }

    pub fn arcs(&self) -> Vec<BoundaryArc> {
        let mut out = Vec::new();
        for l in &self.leaves {
            let per = l.shape.perimeter();
            for s in l.visible.arcs() {
                match &l.shape {
                    Shape2D::Disk(d) => out.push(BoundaryArc {
                        leaf: l.id,
                        geometry: ArcGeometry::Circle {
                            center: d.center,
                            radius: d.radius,
                            start: std::f64::consts::TAU * s.a,
                            end: std::f64::consts::TAU * s.b,
                        },
                        length: s.len() * per,
                    }),
                    Shape2D::Polygon(_) => {
                        let pts = l.shape.polyline(s.a, s.b, 0);
                        for w in pts.windows(2) {
                            let length = w[0].dist(w[1]);
                            if length > 0.0 {
                                out.push(BoundaryArc {
                                    leaf: l.id,
                                    geometry: ArcGeometry::Segment {
                                        from: w[0],
                                        to: w[1],
                                    },
                                    length,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Components of the arc arrangement, glued at junctions.
    pub fn connectivity(&self) -> Connectivity {
        let mut base = HashMap::new();
        let mut arcs_of = Vec::new();
        let mut touches = Vec::new();
        for l in &self.leaves {
            let arcs = l.visible.arcs();
            if arcs.is_empty() {
                continue;
            }
            base.insert(l.id, (touches.len(), arcs_of.len()));
            for s in &arcs {
                touches.push(s.ca == Cause::Window || s.cb == Cause::Window);
            }
            arcs_of.push(arcs);
        }
        let mut uf = UnionFind((0..touches.len()).collect());
        for p in &self.branch_points {
            let node = |id: u32, u: f64| {
                let (b, k) = base[&id];
                b + arc_index(&arcs_of[k], u).expect("leaf has arcs")
            };
            uf.union(node(p.ending, p.ending_param), node(p.top, p.top_param));
        }
        let mut roots: HashMap<usize, bool> = HashMap::new();
        for (i, &t) in touches.iter().enumerate() {
            let r = uf.find(i);
            *roots.entry(r).or_insert(false) |= t;
        }
        let touching = roots.values().filter(|&&t| t).count();
        Connectivity {
            components: roots.len(),
            touching_window: touching,
            isolated: roots.len() - touching,
        }
    }

    /// Topmost-leaf labels on a `res × res` grid of pixel centres.
    pub fn raster_labels(&self, res: usize) -> Vec<u32> {
        let w = self.window;
        let (dx, dy) = (w.width() / res as f64, w.height() / res as f64);
        let mut labels = vec![u32::MAX; res * res];
        for l in &self.leaves {
            let b = l.shape.bbox().intersection(&w);
            if b.is_empty() {
                continue;
            }
            let ix0 = (((b.min.x - w.min.x) / dx - 0.5).ceil().max(0.0)) as usize;
            let ix1 = (((b.max.x - w.min.x) / dx - 0.5).floor()).min(res as f64 - 1.0);
            let iy0 = (((b.min.y - w.min.y) / dy - 0.5).ceil().max(0.0)) as usize;
            let iy1 = (((b.max.y - w.min.y) / dy - 0.5).floor()).min(res as f64 - 1.0);
            if ix1 < 0.0 || iy1 < 0.0 {
                continue;
            }
            for iy in iy0..=iy1 as usize {
                let y = w.min.y + (iy as f64 + 0.5) * dy;
                for ix in ix0..=ix1 as usize {
                    let cell = &mut labels[iy * res + ix];
                    if *cell == u32::MAX {
                        let x = w.min.x + (ix as f64 + 0.5) * dx;
                        if l.shape.contains(Vec2::new(x, y)) {
                            *cell = l.id;
                        }
                    }
                }
            }
        }
        labels
    }

    /// Flood-fill count of raster cells, a resolution-limited cross-check of
    /// [`cells_in`](Self::cells_in).
    pub fn raster_cells(&self, res: usize) -> RasterCells {
        let labels = self.raster_labels(res);
        let mut seen = vec![false; res * res];
        let (mut total, mut interior) = (0, 0);
        let mut stack = Vec::new();
        for start in 0..res * res {
            if seen[start] {
                continue;
            }
            total += 1;
            let lab = labels[start];
            let mut border = false;
            seen[start] = true;
            stack.push(start);
            while let Some(i) = stack.pop() {
                let (x, y) = (i % res, i / res);
                if x == 0 || y == 0 || x + 1 == res || y + 1 == res {
                    border = true;
                }
                let mut visit = |j: usize| {
                    if !seen[j] && labels[j] == lab {
                        seen[j] = true;
                        stack.push(j);
                    }
                };
                if x > 0 {
                    visit(i - 1);
                }
                if x + 1 < res {
                    visit(i + 1);
                }
                if y > 0 {
                    visit(i - res);
                }
                if y + 1 < res {
                    visit(i + res);
                }
            }
            if !border {
                interior += 1;
            }
        }
        RasterCells {
            resolution: res,
            total,
            interior,
        }
    }

    /// Point-location index over the placed leaves.
    pub fn cover_index(&self) -> CoverIndex<'_> {
        let side = self.window.width().max(self.window.height());
        let mean_d = self
            .leaves
            .iter()
            .map(|l| l.shape.bbox().width())
            .sum::<f64>()
            / self.leaves.len().max(1) as f64;
        let mut grid = BucketGrid::new(self.window, mean_d.max(side / 256.0));
        for (i, l) in self.leaves.iter().enumerate() {
            grid.insert(i as u32, &l.shape.bbox());
        }
        CoverIndex {
            tess: self,
            grid,
            buf: Vec::new(),
        }
    }
}

pub struct CoverIndex<'a> {
    tess: &'a PlanarTessellation,
    grid: BucketGrid,
    buf: Vec<u32>,
}

impl CoverIndex<'_> {
    /// Id of the earliest placed leaf whose interior contains `p`.
    pub fn first_cover(&mut self, p: Vec2) -> Option<u32> {
        self.grid.query_into(&Aabb::new(p, p), &mut self.buf);
        self.buf
            .iter()
            .map(|&k| &self.tess.leaves[k as usize])
            .filter(|l| l.shape.depth(p) > 0.0)
            .map(|l| l.id)
            .min()
    }

    /// Whether a leaf placed before `id` covers `p`.
    pub fn covered_before(&mut self, p: Vec2, id: u32) -> bool {
        self.first_cover(p).is_some_and(|f| f < id)
    }
}

/// Forward evolution. The current configuration is kept as a stack of
/// leaves; snapshots rebuild the tessellation top-down, which also drops
/// leaves that can no longer be seen.
#[derive(Debug, Clone)]
pub struct EvolvingState2D {
    window: Aabb,
    law: Law2D,
    /// Bottom first.
    stack: Vec<(u32, f64, Shape2D)>,
    time: f64,
    next_id: u32,
}

impl EvolvingState2D {
    pub fn new(tess: &PlanarTessellation, law: &Law2D, time: f64) -> Self {
        let stack = tess
            .leaves
            .iter()
            .rev()
            .filter(|l| l.area() > 0.0 || !l.visible.is_empty())
            .map(|l| (l.id, time - l.time, l.shape.clone()))
            .collect();
        Self {
            window: tess.window,
            law: law.clone(),
            stack,
            time,
            next_id: tess.arrivals,
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn window(&self) -> Aabb {
        self.window
    }

    pub fn apply(&mut self, a: &Arrival<Vec2, Shape2D>) {
        let shape = a.shape.translated(a.position);
        if shape.bbox().intersects(&self.window) {
            self.stack.push((a.id, a.time, shape));
        }
    }

    /// Current tessellation with patch areas for `probes`. Leaves without
    /// visible patch are removed from the stack.
    pub fn snapshot(&mut self, probes: &[Aabb]) -> Result<PlanarTessellation, Dlm2dError> {
        let mut b = TessellationBuilder::new(self.window, probes, 2.0 * self.law.radius_bound())?;
        // builder ids must increase top-down
        let n = self.stack.len();
        for (k, (_, t, s)) in self.stack.iter().rev().enumerate() {
            b.add(k as u32, self.time - t, s.clone());
            if b.is_covered() {
                break;
            }
        }
        let mut tess = b.finish(n as u32);
        let keep: Vec<bool> = {
            let mut keep = vec![false; n];
            for l in &tess.leaves {
                if l.area() > 0.0 || !l.visible.is_empty() {
                    keep[n - 1 - l.id as usize] = true;
                }
            }
            keep
        };
        // restore the original ids
        let ids: Vec<u32> = self.stack.iter().rev().map(|e| e.0).collect();
        for l in &mut tess.leaves {
            l.id = ids[l.id as usize];
        }
        for p in &mut tess.branch_points {
            p.top = ids[p.top as usize];
            p.ending = ids[p.ending as usize];
        }
        let mut i = 0;
        self.stack.retain(|_| {
            i += 1;
            keep[i - 1]
        });
        Ok(tess)
    }

    /// Current visible boundary length in the window.
    pub fn boundary_length(&mut self) -> Result<f64, Dlm2dError> {
        Ok(self.snapshot(&[])?.total_boundary_length)
    }

    /// Runs forward to `until`, returning the boundary length at each grid
    /// time (values just before any arrival at that time).
    pub fn evolve(
        &mut self,
        until: f64,
        grid: &[f64],
        rng: &mut SimRng,
    ) -> Result<Vec<f64>, Dlm2dError> {
        let window = SimulationWindow::for_law(self.window, &self.law);
        let arrivals =
            engine::forward_stream(&window, &self.law, self.time, until, self.next_id, rng)?;
        self.next_id += arrivals.len() as u32;
        let mut out = Vec::with_capacity(grid.len());
        let mut g = grid.iter().peekable();
        let mut ai = arrivals.iter().peekable();
        while let Some(&&t) = g.peek() {
            while let Some(a) = ai.next_if(|a| a.time <= t) {
                self.apply(a);
            }
            self.time = t;
            out.push(self.boundary_length()?);
            g.next();
        }
        for a in ai {
            self.apply(a);
        }
        self.time = until;
        Ok(out)
    }
}
