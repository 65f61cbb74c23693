use deadleaves::dlm1d;
use deadleaves::dlm2d::{self, PlanarTessellation};
use deadleaves::geom::vec2::{Aabb, Vec2};
use deadleaves::grains::{GrainLaw1D, GrainLaw2D, LengthLaw};
use deadleaves::rng::{Purpose, StreamKey};
use deadleaves_cli::app::{self, Command, Format, RunOptions};
use deadleaves_cli::render::{render_line, render_planar, RenderOptions};
use std::fs;
use std::path::Path;

fn opts(out: &Path) -> RunOptions {
    RunOptions {
        out: out.to_path_buf(),
        format: Format::Csv,
        seed: None,
        threads: Some(1),
    }
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, text).unwrap();
    p
}

const SIM_1D: &str = r#"{"name":"line","seed":7,"model":"dlm1d",
    "law":{"kind":"fixed_length","length":1},"window":[50],"replicates":3,
    "task":{"type":"simulate"}}"#;

#[test]
fn malformed_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad = SIM_1D.replace(r#""window":[50]"#, r#""window":"fifty""#);
    let o = app::run(
        Command::Simulate,
        Some(&write_config(dir.path(), &bad)),
        &opts(dir.path()),
    );
    assert_eq!(o.code, 2);
    assert!(o.message.contains("window"), "{}", o.message);

    let typo = SIM_1D.replace(r#""replicates""#, r#""replicats""#);
    let o = app::run(
        Command::Simulate,
        Some(&write_config(dir.path(), &typo)),
        &opts(dir.path()),
    );
    assert_eq!(o.code, 2);
    assert!(o.message.contains("replicats"), "{}", o.message);

    let o = app::run(
        Command::Simulate,
        Some(&write_config(dir.path(), "{")),
        &opts(dir.path()),
    );
    assert_eq!(o.code, 2);
}

#[test]
fn unsupported_combination_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let corners = r#"{"name":"c","seed":1,"model":"dlrm","dim":2,
        "law":{"kind":"disk","radius":{"type":"fixed","value":1}},
        "mark":{"kind":"corner_counting"},"window":[5,5],"task":{"type":"simulate"}}"#;
    let o = app::run(
        Command::Simulate,
        Some(&write_config(dir.path(), corners)),
        &opts(dir.path()),
    );
    assert_eq!(o.code, 3, "{}", o.message);

    let branch_1d = SIM_1D.replace(
        r#"{"type":"simulate"}"#,
        r#"{"type":"verify","statistic":{"name":"branch_points"}}"#,
    );
    let o = app::run(
        Command::Verify,
        Some(&write_config(dir.path(), &branch_1d)),
        &opts(dir.path()),
    );
    assert_eq!(o.code, 3, "{}", o.message);
}

#[test]
fn missing_config_file_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = app::run(
        Command::Simulate,
        Some(&dir.path().join("absent.json")),
        &opts(dir.path()),
    );
    assert_eq!(o.code, 1);
}

#[test]
fn simulate_writes_cells_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = app::run(
        Command::Simulate,
        Some(&write_config(dir.path(), SIM_1D)),
        &opts(&out),
    );
    assert_eq!(o.code, 0, "{}", o.message);
    for r in 0..3 {
        assert!(out.join(format!("line.r{r}.cells.csv")).exists());
    }
    assert!(out.join("line.summary.csv").exists());
    assert!(out.join("line.meta.json").exists());
}

#[test]
fn seed_flag_changes_output_and_reruns_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SIM_1D);
    let read = |out: &Path| fs::read(out.join("line.r0.cells.csv")).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    app::run(Command::Simulate, Some(&cfg), &opts(&a));
    app::run(Command::Simulate, Some(&cfg), &opts(&b));
    let mut o = opts(&c);
    o.seed = Some(8);
    app::run(Command::Simulate, Some(&cfg), &o);
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn verify_reports_value_near_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SIM_1D
        .replace(
            r#""window":[50],"replicates":3"#,
            r#""window":[1000],"replicates":40"#,
        )
        .replace(
            r#"{"type":"simulate"}"#,
            r#"{"type":"verify","statistic":{"name":"boundary_intensity"}}"#,
        );
    let o = app::run(
        Command::Verify,
        Some(&write_config(dir.path(), &cfg)),
        &opts(dir.path()),
    );
    assert_eq!(o.code, 0, "{}", o.message);
    let mut rd = csv::Reader::from_path(dir.path().join("line.report.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(&rows[0][2], "boundary_intensity");
    let value: f64 = rows[0][3].parse().unwrap();
    assert!((value - 2.0).abs() < 0.05, "{value}");
    assert_eq!(&rows[0][8], "pass");
}

#[test]
fn list_targets_needs_no_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = app::run(Command::ListTargets, None, &opts(dir.path()));
    assert_eq!(o.code, 0);
    assert!(o.message.contains("sigma1_sq"));
    assert!(o.message.contains("branch_point_intensity"));
}

fn parse_svg(svg: &str) -> roxmltree::Document<'_> {
    roxmltree::Document::parse(svg).expect("well-formed SVG")
}

fn class_count(doc: &roxmltree::Document<'_>, class: &str) -> usize {
    doc.descendants()
        .filter(|n| n.attribute("class") == Some(class))
        .count()
}

fn path_length(d: &str) -> f64 {
    let pts: Vec<(f64, f64)> = d
        .split(['M', 'L'])
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            let mut it = s.split_whitespace().map(|x| x.parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect();
    pts.windows(2)
        .map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1))
        .sum()
}

fn disks(radius: f64) -> deadleaves::grains::Law2D {
    GrainLaw2D::Disk {
        radius: LengthLaw::Fixed { value: radius },
    }
    .build()
    .unwrap()
}

fn planar(seed: u64, radius: f64, side: f64) -> PlanarTessellation {
    let window = Aabb::new(Vec2::ZERO, Vec2::new(side, side));
    dlm2d::simulate2d(
        window,
        &disks(radius),
        StreamKey::new(seed, 0, Purpose::Arrivals),
    )
    .unwrap()
}

#[test]
fn render_single_covering_leaf_is_window_outline_only() {
    let t = (0..100)
        .map(|s| planar(s, 50.0, 1.0))
        .find(|t| t.arcs().is_empty())
        .expect("some seed covers the window with its first leaf");
    let svg = render_planar(&t, &RenderOptions::default());
    let doc = parse_svg(&svg);
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    assert_eq!(class_count(&doc, "window"), 1);
    assert_eq!(class_count(&doc, "arc"), 0);
    assert_eq!(class_count(&doc, "branch"), 0);
}

#[test]
fn render_2d_path_length_matches_boundary_length() {
    for seed in 0..3 {
        let t = planar(seed, 1.0, 8.0);
        let svg = render_planar(
            &t,
            &RenderOptions {
                shade: true,
                ..RenderOptions::default()
            },
        );
        let doc = parse_svg(&svg);
        let total: f64 = doc
            .descendants()
            .filter(|n| n.attribute("class") == Some("arc"))
            .map(|n| path_length(n.attribute("d").unwrap()))
            .sum();
        let rel = (total - t.total_boundary_length).abs() / t.total_boundary_length;
        assert!(
            rel < 1e-3,
            "seed {seed}: {total} vs {}",
            t.total_boundary_length
        );
        assert_eq!(class_count(&doc, "branch"), t.branch_points.len());
        assert!(class_count(&doc, "cell") > 0);
    }
}

#[test]
fn render_1d_marks_every_boundary_point() {
    let law = GrainLaw1D::fixed_length(1.0);
    for seed in 0..5 {
        let t = dlm1d::simulate_recorded(40.0, &law, StreamKey::new(seed, 0, Purpose::Arrivals))
            .unwrap();
        let svg = render_line(&t, &RenderOptions::default());
        let doc = parse_svg(&svg);
        assert_eq!(class_count(&doc, "eta"), t.eta.len());
        assert!(class_count(&doc, "leaf") > 0);
    }
}

#[test]
fn render_task_reads_a_cell_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("cells.csv");
    fs::write(
        &table,
        "start,end,leaf,full\n0,0.4,3,false\n0.4,1.4,1,true\n1.4,2,0,false\n",
    )
    .unwrap();
    let cfg = SIM_1D.replace(
        r#"{"type":"simulate"}"#,
        &format!(
            r#"{{"type":"render","input":{:?}}}"#,
            table.display().to_string()
        ),
    );
    let o = app::run(
        Command::Render,
        Some(&write_config(dir.path(), &cfg)),
        &opts(dir.path()),
    );
    assert_eq!(o.code, 0, "{}", o.message);
    let svg = fs::read_to_string(dir.path().join("line.svg")).unwrap();
    let doc = parse_svg(&svg);
    assert_eq!(class_count(&doc, "eta"), 2);
    assert_eq!(class_count(&doc, "cell"), 3);
}
