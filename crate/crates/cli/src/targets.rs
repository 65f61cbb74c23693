//! The `list-targets` table.

use crate::config::{Experiment, Law};
use anyhow::Result;
use deadleaves::closedform::{self, Leaf};
use deadleaves::dlrm::MarkKind;
use deadleaves::grains::{GrainLaw1D, GrainLaw2D, Law2D};
use std::f64::consts::PI;
use std::fmt::Write;

fn row(out: &mut String, name: &str, law: &str, formula: &str, value: f64) {
    let _ = writeln!(out, "{name:<28} {law:<22} {formula:<44} {value:.10}");
}

fn targets_1d(out: &mut String, label: &str, l: &GrainLaw1D) -> Result<()> {
    row(
        out,
        "boundary_intensity_1d",
        label,
        "E[boundary points] / lambda",
        closedform::intensity_1d(l),
    );
    for z in [0.5, 1.5] {
        row(
            out,
            &format!("pair_correlation({z})"),
            label,
            "pcf of eta at distance z",
            closedform::pcf_1d(l, z)?,
        );
    }
    for a in closedform::pair_atoms_1d(l)? {
        row(
            out,
            &format!("pair_atom({})", a.distance),
            label,
            "pairs per unit length at a full leaf",
            a.rate,
        );
    }
    row(
        out,
        "sigma1_sq",
        label,
        "lim Var eta([0,n]) / n",
        closedform::sigma1_sq(l)?,
    );
    row(
        out,
        "vacancy(0.5)",
        label,
        "P(eta misses [0, h])",
        closedform::vacancy(l, 0.5)?,
    );
    let ex = closedform::exposed_interval_law(l)?;
    let ty = closedform::typical_interval_law(l)?;
    row(
        out,
        "exposed_interval_atom_mass",
        label,
        "P(cell at origin is a full leaf)",
        ex.atom_mass(),
    );
    row(
        out,
        "exposed_interval_mean",
        label,
        "E length of the cell at the origin",
        ex.mean(),
    );
    row(
        out,
        "typical_interval_atom_mass",
        label,
        "P(typical cell is a full leaf)",
        ty.atom_mass(),
    );
    row(
        out,
        "typical_interval_mean",
        label,
        "E length of a typical cell",
        ty.mean(),
    );
    Ok(())
}

fn targets_2d(out: &mut String, label: &str, l: &Law2D) -> Result<()> {
    row(
        out,
        "boundary_intensity_2d",
        label,
        "E perimeter / E area",
        closedform::boundary_intensity_2d(l),
    );
    row(
        out,
        "branch_point_intensity",
        label,
        "beta3",
        closedform::beta3(l)?,
    );
    if let Ok(b1) = closedform::beta1(l) {
        row(out, "cell_intensity", label, "beta1 = beta3 / 2", b1);
    }
    row(
        out,
        "sigma2_sq",
        label,
        "lim Var boundary length / area",
        closedform::sigma2_sq(l)?.value,
    );
    Ok(())
}

fn targets_mark(out: &mut String, label: &str, leaf: Leaf<'_>, mark: &MarkKind) -> Result<()> {
    let name = mark.name();
    row(
        out,
        &format!("{name}_intensity"),
        label,
        "E|M| / (leaf probability * lambda)",
        closedform::mark_intensity(leaf, mark)?,
    );
    row(
        out,
        &format!("{name}_sigma0_sq"),
        label,
        "lim Var xi(W) / |W|",
        closedform::sigma0_sq(leaf, mark)?.value,
    );
    Ok(())
}

/// Closed-form targets for reference laws, or for the law of `exp`.
pub fn list(exp: Option<&Experiment>) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<28} {:<22} {:<44} value",
        "target", "law", "quantity"
    );
    if let Some(e) = exp {
        let label = e.config.name.as_str();
        match (&e.law, &e.dlrm) {
            (_, Some(m)) => targets_mark(&mut out, label, m.leaf.as_leaf(), &m.mark)?,
            (Some(Law::D1(l)), None) => targets_1d(&mut out, label, l)?,
            (Some(Law::D2(l)), None) => targets_2d(&mut out, label, l)?,
            (None, None) => {}
        }
        return Ok(out);
    }
    let seg = GrainLaw1D::fixed_length(1.0);
    targets_1d(&mut out, "segment(1)", &seg)?;
    let disk = GrainLaw2D::unit_disk().build()?;
    targets_2d(&mut out, "disk(1)", &disk)?;
    let square = GrainLaw2D::square(1.0, true).build()?;
    targets_2d(&mut out, "rotated square(1)", &square)?;
    for p in [0.3, 0.7] {
        targets_mark(
            &mut out,
            "disk(1)",
            Leaf::D2(&disk),
            &MarkKind::Colour { p },
        )?;
    }
    let seeds = MarkKind::Seeds {
        q: 0.5,
        offsets: vec![vec![0.0]],
    };
    targets_mark(&mut out, "segment(1)", Leaf::D1(&seg), &seeds)?;
    targets_mark(
        &mut out,
        "rotated square(1)",
        Leaf::D2(&square),
        &MarkKind::CornerCounting,
    )?;
    row(
        &mut out,
        "kinematic_crossings",
        "segments(1, 1)",
        "4 len(a) len(b)",
        4.0,
    );
    row(
        &mut out,
        "buffon_crossings",
        "segment(1), spacing 1",
        "2 len / (pi spacing)",
        2.0 / PI,
    );
    Ok(out)
}
