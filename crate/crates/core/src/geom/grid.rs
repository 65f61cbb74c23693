//! Uniform bucket grid for bounding-box queries over dense `u32` ids.

use super::vec2::{Aabb, Vec2};

#[derive(Debug, Clone)]
pub struct BucketGrid {
    origin: Vec2,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
    stamp: Vec<u32>,
    epoch: u32,
}

impl BucketGrid {
    /// Grid over `extent` with square cells of side about `cell`.
    pub fn new(extent: Aabb, cell: f64) -> Self {
        let cell = cell.max(1e-9);
        let nx = ((extent.width() / cell).ceil() as usize).clamp(1, 4096);
        let ny = ((extent.height() / cell).ceil() as usize).clamp(1, 4096);
        let cell = (extent.width() / nx as f64)
            .max(extent.height() / ny as f64)
            .max(1e-9);
        Self {
            origin: extent.min,
            cell,
            nx,
            ny,
            buckets: vec![Vec::new(); nx * ny],
            stamp: Vec::new(),
            epoch: 0,
        }
    }

    fn range(&self, b: &Aabb) -> (usize, usize, usize, usize) {
        let clampx = |v: f64| {
            ((v - self.origin.x) / self.cell)
                .floor()
                .clamp(0.0, (self.nx - 1) as f64) as usize
        };
        let clampy = |v: f64| {
            ((v - self.origin.y) / self.cell)
                .floor()
                .clamp(0.0, (self.ny - 1) as f64) as usize
        };
        (
            clampx(b.min.x),
            clampx(b.max.x),
            clampy(b.min.y),
            clampy(b.max.y),
        )
    }

    pub fn insert(&mut self, id: u32, b: &Aabb) {
        let (x0, x1, y0, y1) = self.range(b);
        for y in y0..=y1 {
            for x in x0..=x1 {
                self.buckets[y * self.nx + x].push(id);
            }
        }
        if self.stamp.len() <= id as usize {
            self.stamp.resize(id as usize + 1, 0);
        }
    }

    pub fn remove(&mut self, id: u32, b: &Aabb) {
        let (x0, x1, y0, y1) = self.range(b);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let bucket = &mut self.buckets[y * self.nx + x];
                if let Some(pos) = bucket.iter().position(|&v| v == id) {
                    bucket.swap_remove(pos);
                }
            }
        }
    }

    /// Distinct ids whose registered boxes share a bucket with `b`.
    pub fn query_into(&mut self, b: &Aabb, out: &mut Vec<u32>) {
        out.clear();
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        let (x0, x1, y0, y1) = self.range(b);
        for y in y0..=y1 {
            for x in x0..=x1 {
                for &id in &self.buckets[y * self.nx + x] {
                    let s = &mut self.stamp[id as usize];
                    if *s != self.epoch {
                        *s = self.epoch;
                        out.push(id);
                    }
                }
            }
        }
    }

    pub fn query(&mut self, b: &Aabb) -> Vec<u32> {
        let mut out = Vec::new();
        self.query_into(b, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_query_remove() {
        let mut g = BucketGrid::new(Aabb::square(10.0), 1.0);
        let b1 = Aabb::new(Vec2::new(1.0, 1.0), Vec2::new(2.5, 2.5));
        let b2 = Aabb::new(Vec2::new(7.0, 7.0), Vec2::new(8.0, 8.0));
        g.insert(0, &b1);
        g.insert(1, &b2);
        let mut hits = g.query(&Aabb::new(Vec2::new(2.0, 2.0), Vec2::new(3.0, 3.0)));
        hits.sort();
        assert_eq!(hits, vec![0]);
        assert_eq!(g.query(&Aabb::square(10.0)).len(), 2);
        g.remove(0, &b1);
        assert_eq!(g.query(&Aabb::square(10.0)), vec![1]);
    }
}
