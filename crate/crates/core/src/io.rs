//! CSV tables for tessellations and time series.

use crate::dlm1d::{Cell1D, Tessellation1D};
use crate::dlm2d::{ArcGeometry, PlanarTessellation};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {row}: {msg}")]
    BadRow { row: usize, msg: String },
    #[error("cell table is empty")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellRow {
    pub start: f64,
    pub end: f64,
    pub leaf: u32,
    pub full: bool,
}

pub fn write_cells_1d<W: Write>(w: W, t: &Tessellation1D) -> Result<(), IoError> {
    let mut out = csv::Writer::from_writer(w);
    for c in &t.cells {
        out.serialize(CellRow {
            start: c.start,
            end: c.end,
            leaf: c.leaf,
            full: c.full,
        })?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Parses a 1D cell table. Cells must be finite, sorted and tile `[0, n]`
/// where `n` is the last end point.
pub fn read_cell_table<R: Read>(r: R) -> Result<Tessellation1D, IoError> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut cells = Vec::new();
    let mut at: f64 = 0.0;
    for (i, row) in rdr.deserialize::<CellRow>().enumerate() {
        let c = row?;
        let bad = |msg: &str| IoError::BadRow {
            row: i + 1,
            msg: msg.to_string(),
        };
        if !(c.start.is_finite() && c.end.is_finite()) {
            return Err(bad("non-finite endpoint"));
        }
        if c.end < c.start {
            return Err(bad("end before start"));
        }
        let tol = 1e-9 * at.max(1.0);
        if (c.start - at).abs() > tol {
            return Err(bad("cells must tile the interval from 0 in order"));
        }
        at = c.end;
        cells.push(Cell1D {
            start: c.start,
            end: c.end,
            leaf: c.leaf,
            full: c.full,
        });
    }
    if cells.is_empty() {
        return Err(IoError::Empty);
    }
    if !(at > 0.0) {
        return Err(IoError::BadRow {
            row: cells.len(),
            msg: "interval has zero length".into(),
        });
    }
    Ok(Tessellation1D::from_cells(at, cells, f64::NAN, 0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
struct ArcRow {
    leaf: u32,
    kind: &'static str,
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
    /// Circle arcs only.
    radius: Option<f64>,
    start_angle: Option<f64>,
    end_angle: Option<f64>,
    length: f64,
}

/// Visible boundary arcs; `x0, y0, x1, y1` are the arc endpoints.
pub fn write_arcs<W: Write>(w: W, t: &PlanarTessellation) -> Result<(), IoError> {
    let mut out = csv::Writer::from_writer(w);
    for a in t.arcs() {
        let row = match a.geometry {
            ArcGeometry::Circle {
                center,
                radius,
                start,
                end,
            } => ArcRow {
                leaf: a.leaf,
                kind: "circle",
                x0: center.x + radius * start.cos(),
                y0: center.y + radius * start.sin(),
                x1: center.x + radius * end.cos(),
                y1: center.y + radius * end.sin(),
                radius: Some(radius),
                start_angle: Some(start),
                end_angle: Some(end),
                length: a.length,
            },
            ArcGeometry::Segment { from, to } => ArcRow {
                leaf: a.leaf,
                kind: "segment",
                x0: from.x,
                y0: from.y,
                x1: to.x,
                y1: to.y,
                radius: None,
                start_angle: None,
                end_angle: None,
                length: a.length,
            },
        };
        out.serialize(row)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
struct BranchRow {
    x: f64,
    y: f64,
    top: u32,
    ending: u32,
}

pub fn write_branch_points<W: Write>(w: W, t: &PlanarTessellation) -> Result<(), IoError> {
    let mut out = csv::Writer::from_writer(w);
    for b in &t.branch_points {
        out.serialize(BranchRow {
            x: b.point.x,
            y: b.point.y,
            top: b.top,
            ending: b.ending,
        })?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
struct LeafRow {
    leaf: u32,
    time: f64,
    visible_length: f64,
    area: f64,
}

/// Visible patches: boundary length and area per leaf.
pub fn write_patches<W: Write>(w: W, t: &PlanarTessellation) -> Result<(), IoError> {
    let mut out = csv::Writer::from_writer(w);
    for l in t.leaves.iter().filter(|l| l.area() > 0.0) {
        out.serialize(LeafRow {
            leaf: l.id,
            time: l.time,
            visible_length: l.visible_length(),
            area: l.area(),
        })?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
struct SeriesRow {
    replicate: u64,
    t: f64,
    value: f64,
}

/// Long-format time series `(replicate, t, value)`.
pub fn write_series<W: Write>(w: W, times: &[f64], series: &[Vec<f64>]) -> Result<(), IoError> {
    let mut out = csv::Writer::from_writer(w);
    for (r, s) in series.iter().enumerate() {
        for (&t, &value) in times.iter().zip(s) {
            out.serialize(SeriesRow {
                replicate: r as u64,
                t,
                value,
            })?;
        }
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dlm1d;
    use crate::grains::GrainLaw1D;
    use crate::rng::{Purpose, StreamKey};

    #[test]
    fn cell_table_round_trip() {
        let t = dlm1d::simulate(
            50.0,
            &GrainLaw1D::fixed_length(1.0),
            StreamKey::new(1, 0, Purpose::Arrivals),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_cells_1d(&mut buf, &t).unwrap();
        let back = read_cell_table(buf.as_slice()).unwrap();
        assert_eq!(back.cells, t.cells);
        assert_eq!(back.eta, t.eta);
        assert_eq!(back.length, t.length);
    }

    #[test]
    fn rejects_bad_tables() {
        let gap = "start,end,leaf,full\n0,1,0,true\n2,3,1,true\n";
        assert!(matches!(
            read_cell_table(gap.as_bytes()),
            Err(IoError::BadRow { row: 2, .. })
        ));
        let back = "start,end,leaf,full\n0,1,0,true\n1,0.5,1,true\n";
        assert!(read_cell_table(back.as_bytes()).is_err());
        assert!(matches!(
            read_cell_table("start,end,leaf,full\n".as_bytes()),
            Err(IoError::Empty)
        ));
        assert!(read_cell_table("start,end,leaf,full\n0,nan,0,true\n".as_bytes()).is_err());
        assert!(read_cell_table("start,end\n0,1\n".as_bytes()).is_err());
    }

    #[test]
    fn zero_length_cells_allowed() {
        let ok = "start,end,leaf,full\n0,1,0,false\n1,1,3,true\n1,2,1,false\n";
        let t = read_cell_table(ok.as_bytes()).unwrap();
        assert_eq!(t.eta, vec![1.0]);
        assert_eq!(t.length, 2.0);
    }
}
