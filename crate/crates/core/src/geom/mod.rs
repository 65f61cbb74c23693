//! Planar geometry: vectors, boxes, disks, convex polygons and boundary
//! parameter sets.

pub mod grid;
pub mod loopset;
pub mod shapes;
pub mod vec2;

pub use grid::BucketGrid;
pub use loopset::{Cause, LoopSet, Span};
pub use shapes::{
    convex_hull, convex_intersection_area, difference_body_area, lens_area, shoelace,
    ConvexPolygon, Disk, GeomError, Shape2D,
};
pub use vec2::{Aabb, Vec2};
