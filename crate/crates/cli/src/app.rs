//! Task dispatch and artifact writing.

use crate::config::{
    self, ConfigError, EvolveParams, Experiment, ExperimentConfig, ModelKind, RenderParams, Start,
    Task,
};
use crate::render::{self, RenderOptions};
use crate::runner::{self, key, Check};
use anyhow::{Context, Result};
use deadleaves::dlm1d;
use deadleaves::dlm2d::{self, EvolvingState2D};
use deadleaves::dlrm::{evolve_xi, DlrmEvolution, Realization, TestFunction};
use deadleaves::io as dio;
use deadleaves::rng::{derive_seed, Purpose};
use deadleaves::stats;
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Simulate,
    Estimate,
    Verify,
    Evolve,
    Render,
    ListTargets,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub out: PathBuf,
    pub format: Format,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

/// Exit status and the files written.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: u8,
    pub artifacts: Vec<PathBuf>,
    pub message: String,
}

impl Outcome {
    fn fail(code: u8, message: String) -> Self {
        Self {
            code,
            artifacts: Vec::new(),
            message,
        }
    }
}

/// One verification attempt.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Attempt {
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub name: String,
    pub task: &'static str,
    pub model: ModelKind,
    pub statistic: &'static str,
    pub replicates: usize,
    pub attempts: Vec<Attempt>,
    pub pass: bool,
}

#[derive(Serialize)]
struct Meta<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    threads: usize,
    started_unix_seconds: u64,
    elapsed_seconds: f64,
    exit_code: u8,
    artifacts: Vec<String>,
}

fn load(path: &Path) -> Result<Experiment, Outcome> {
    let text = fs::read_to_string(path)
        .map_err(|e| Outcome::fail(1, format!("cannot read {}: {e}", path.display())))?;
    config::parse_config(&text)
        .map_err(|e| Outcome::fail(e.exit_code(), format!("{}: {e}", path.display())))
}

/// Applies the subcommand to the configuration, keeping the task parameters
/// when the task type matches.
fn retarget(exp: Experiment, cmd: Command, seed: Option<u64>) -> Result<Experiment, ConfigError> {
    let mut c: ExperimentConfig = exp.config;
    if let Some(s) = seed {
        c.seed = s;
    }
    c.task = match (cmd, c.task) {
        (Command::Simulate, _) => Task::Simulate,
        (Command::Estimate, Task::Estimate { statistic } | Task::Verify { statistic }) => {
            Task::Estimate { statistic }
        }
        (Command::Verify, Task::Estimate { statistic } | Task::Verify { statistic }) => {
            Task::Verify { statistic }
        }
        (Command::Estimate | Command::Verify, _) => {
            return Err(ConfigError::Schema(
                "task.statistic: this command needs an estimate or verify task".into(),
            ))
        }
        (Command::Evolve, Task::Evolve(p)) => Task::Evolve(p),
        (Command::Evolve, _) => Task::Evolve(EvolveParams {
            dt: 0.25,
            steps: 8,
            start: Start::Stationary,
            test_function: None,
        }),
        (Command::Render, Task::Render(p)) => Task::Render(p),
        (Command::Render, _) => Task::Render(RenderParams::default()),
        (Command::ListTargets, t) => t,
    };
    config::validate(c)
}

/// Runs one command against a configuration file.
pub fn run(cmd: Command, config_path: Option<&Path>, opts: &RunOptions) -> Outcome {
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    if cmd == Command::ListTargets {
        let exp = match config_path.map(load).transpose() {
            Ok(e) => e,
            Err(o) => return o,
        };
        return match crate::targets::list(exp.as_ref()) {
            Ok(text) => Outcome {
                code: 0,
                artifacts: Vec::new(),
                message: text,
            },
            Err(e) => Outcome::fail(1, format!("{e:#}")),
        };
    }
    let Some(path) = config_path else {
        return Outcome::fail(2, "--config: required for this command".into());
    };
    let exp = match load(path) {
        Ok(e) => e,
        Err(o) => return o,
    };
    let exp = match retarget(exp, cmd, opts.seed) {
        Ok(e) => e,
        Err(e) => return Outcome::fail(e.exit_code(), format!("{}: {e}", path.display())),
    };
    let threads = opts
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => return Outcome::fail(1, format!("thread pool: {e}")),
    };
    let result = fs::create_dir_all(&opts.out)
        .with_context(|| format!("cannot create {}", opts.out.display()))
        .and_then(|_| pool.install(|| execute(&exp, opts)));
    let mut outcome = match result {
        Ok(o) => o,
        Err(e) => Outcome::fail(1, format!("{e:#}")),
    };
    let meta = Meta {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: exp.config.task.name(),
        seed: exp.config.seed,
        threads,
        started_unix_seconds: started,
        elapsed_seconds: clock.elapsed().as_secs_f64(),
        exit_code: outcome.code,
        artifacts: outcome
            .artifacts
            .iter()
            .map(|p| p.display().to_string())
            .collect(),
    };
    let meta_path = opts.out.join(format!("{}.meta.json", exp.config.name));
    if let Err(e) = serde_json::to_vec_pretty(&meta)
        .map_err(anyhow::Error::from)
        .and_then(|b| Ok(fs::write(&meta_path, b)?))
    {
        return Outcome::fail(1, format!("cannot write {}: {e}", meta_path.display()));
    }
    outcome.artifacts.push(meta_path);
    outcome
}

fn write_file(path: PathBuf, bytes: &[u8], list: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
    list.push(path);
    Ok(())
}

fn execute(exp: &Experiment, opts: &RunOptions) -> Result<Outcome> {
    match &exp.config.task {
        Task::Estimate { statistic } | Task::Verify { statistic } => {
            let verify = matches!(exp.config.task, Task::Verify { .. });
            let mut attempts = Vec::new();
            let mut seed = exp.config.seed;
            loop {
                let checks = runner::compute(exp, statistic, seed)?;
                let pass = checks.iter().all(Check::passed);
                attempts.push(Attempt { seed, pass, checks });
                if pass || !verify || attempts.len() == 2 {
                    break;
                }
                log::warn!(
                    "{}: a check failed with seed {seed}; one reseed retry",
                    exp.config.name
                );
                seed = derive_seed(exp.config.seed, 1);
            }
            let report = Report {
                name: exp.config.name.clone(),
                task: exp.config.task.name(),
                model: exp.config.model,
                statistic: statistic.name(),
                replicates: exp.config.replicates,
                pass: attempts.last().is_some_and(|a| a.pass),
                attempts,
            };
            let mut artifacts = Vec::new();
            let path = opts
                .out
                .join(format!("{}.report.{}", report.name, opts.format.ext()));
            write_file(path, &report_bytes(&report, opts.format)?, &mut artifacts)?;
            let message = summary(&report);
            let code = if verify && !report.pass { 1 } else { 0 };
            Ok(Outcome {
                code,
                artifacts,
                message,
            })
        }
        Task::Simulate => simulate(exp, opts),
        Task::Evolve(p) => evolve(exp, p, opts),
        Task::Render(p) => render_task(exp, p, opts),
    }
}

fn summary(r: &Report) -> String {
    let mut s = String::new();
    for (i, a) in r.attempts.iter().enumerate() {
        for c in &a.checks {
            s.push_str(&format!(
                "{} attempt {} {}: value {:.6} target {} verdict {:?}\n",
                r.name,
                i + 1,
                c.check,
                c.value,
                c.target.map_or("-".into(), |t| format!("{t:.6}")),
                c.verdict
            ));
        }
    }
    s.push_str(&format!(
        "{}: {}",
        r.name,
        if r.pass { "PASS" } else { "FAIL" }
    ));
    s
}

#[derive(Serialize)]
struct CheckRow<'a> {
    attempt: usize,
    seed: u64,
    check: &'a str,
    value: f64,
    stderr: Option<f64>,
    target: Option<f64>,
    z_score: Option<f64>,
    rule: &'a str,
    verdict: stats::Verdict,
}

pub fn report_bytes(r: &Report, format: Format) -> Result<Vec<u8>> {
    Ok(match format {
        Format::Json => serde_json::to_vec_pretty(r)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for (i, a) in r.attempts.iter().enumerate() {
                for c in &a.checks {
                    w.serialize(CheckRow {
                        attempt: i + 1,
                        seed: a.seed,
                        check: &c.check,
                        value: c.value,
                        stderr: c.stderr,
                        target: c.target,
                        z_score: c.z_score,
                        rule: &c.rule,
                        verdict: c.verdict,
                    })?;
                }
            }
            w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?
        }
    })
}

#[derive(Debug, Clone, Serialize)]
struct SummaryRow {
    replicate: u64,
    arrivals: u32,
    coverage_time: f64,
    /// `η` count in 1D, boundary length in 2D, `ξ(W)` for random measures.
    total: f64,
    branch_points: Option<usize>,
}

fn table_bytes<T: Serialize>(rows: &[T], format: Format) -> Result<Vec<u8>> {
    Ok(match format {
        Format::Json => serde_json::to_vec_pretty(rows)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r)?;
            }
            w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?
        }
    })
}

fn csv_of<F: FnOnce(&mut Vec<u8>) -> Result<(), dio::IoError>>(f: F) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

type Files = Vec<(String, Vec<u8>)>;

fn simulate(exp: &Experiment, opts: &RunOptions) -> Result<Outcome> {
    let c = &exp.config;
    let seed = c.seed;
    let rows: Vec<Result<(SummaryRow, Files)>> = stats::replicate_map(c.replicates, |r| {
        let mut files = Vec::new();
        let row = match c.model {
            ModelKind::Dlm1d => {
                let t =
                    dlm1d::simulate(c.window[0], exp.law_1d().expect("validated"), key(seed, r))?;
                files.push((
                    format!("r{r}.cells.csv"),
                    csv_of(|b| dio::write_cells_1d(b, &t))?,
                ));
                SummaryRow {
                    replicate: r,
                    arrivals: t.arrivals,
                    coverage_time: t.coverage_time,
                    total: t.eta.len() as f64,
                    branch_points: None,
                }
            }
            ModelKind::Dlm2d => {
                let t = dlm2d::simulate2d(
                    exp.window_2d(),
                    exp.law_2d().expect("validated"),
                    key(seed, r),
                )?;
                files.push((
                    format!("r{r}.arcs.csv"),
                    csv_of(|b| dio::write_arcs(b, &t))?,
                ));
                files.push((
                    format!("r{r}.branch_points.csv"),
                    csv_of(|b| dio::write_branch_points(b, &t))?,
                ));
                files.push((
                    format!("r{r}.patches.csv"),
                    csv_of(|b| dio::write_patches(b, &t))?,
                ));
                SummaryRow {
                    replicate: r,
                    arrivals: t.arrivals,
                    coverage_time: t.coverage_time,
                    total: t.total_boundary_length,
                    branch_points: Some(t.branch_points.len()),
                }
            }
            ModelKind::Dlrm => {
                let model = exp.dlrm.as_ref().expect("validated");
                let zero = vec![0.0; c.window.len()];
                let real = Realization::sample(model, &zero, &c.window, key(seed, r))?;
                let total = real.xi(&TestFunction::indicator(&zero, &c.window))?;
                if !real.atoms().is_empty() {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    w.write_record(["x", "y"])?;
                    for a in real.atoms() {
                        w.write_record([a[0].to_string(), a[1].to_string()])?;
                    }
                    files.push((
                        format!("r{r}.atoms.csv"),
                        w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?,
                    ));
                }
                let (arrivals, coverage_time) =
                    match (real.tessellation_1d(), real.tessellation_2d()) {
                        (Some(t), _) => (t.arrivals, t.coverage_time),
                        (_, Some(t)) => (t.arrivals, t.coverage_time),
                        _ => unreachable!(),
                    };
                SummaryRow {
                    replicate: r,
                    arrivals,
                    coverage_time,
                    total,
                    branch_points: None,
                }
            }
            ModelKind::Noodle => unreachable!("rejected by validation"),
        };
        log::debug!("{}: replicate {r} simulated", c.name);
        Ok((row, files))
    });
    let mut artifacts = Vec::new();
    let mut summary = Vec::new();
    for row in rows {
        let (s, files) = row?;
        for (suffix, bytes) in files {
            write_file(
                opts.out.join(format!("{}.{suffix}", c.name)),
                &bytes,
                &mut artifacts,
            )?;
        }
        summary.push(s);
    }
    let path = opts
        .out
        .join(format!("{}.summary.{}", c.name, opts.format.ext()));
    write_file(path, &table_bytes(&summary, opts.format)?, &mut artifacts)?;
    Ok(Outcome {
        code: 0,
        message: format!("{}: simulated {} replicate(s)", c.name, c.replicates),
        artifacts,
    })
}

#[derive(Serialize)]
struct SeriesJson<'a> {
    times: &'a [f64],
    series: &'a [Vec<f64>],
}

fn evolve(exp: &Experiment, p: &EvolveParams, opts: &RunOptions) -> Result<Outcome> {
    let c = &exp.config;
    let seed = c.seed;
    let grid: Vec<f64> = (0..=p.steps).map(|k| k as f64 * p.dt).collect();
    let until = *grid.last().expect("steps ≥ 1");
    let zero = vec![0.0; c.window.len()];
    let series: Vec<Result<Vec<f64>>> = stats::replicate_map(c.replicates, |r| {
        let mut rng = key(seed, r).with_purpose(Purpose::ForwardArrivals).rng();
        let v = match c.model {
            ModelKind::Dlm1d => {
                let law = exp.law_1d().expect("validated");
                let t = dlm1d::simulate(c.window[0], law, key(seed, r))?;
                let mut s = dlm1d::EvolvingState1D::new(&t, law, 0.0);
                s.evolve(until, &grid, &mut rng)?
                    .into_iter()
                    .map(|x| x as f64)
                    .collect()
            }
            ModelKind::Dlm2d => {
                let law = exp.law_2d().expect("validated");
                let t = dlm2d::simulate2d(exp.window_2d(), law, key(seed, r))?;
                EvolvingState2D::new(&t, law, 0.0).evolve(until, &grid, &mut rng)?
            }
            ModelKind::Dlrm => {
                let model = exp.dlrm.as_ref().expect("validated");
                let f = p
                    .test_function
                    .clone()
                    .unwrap_or_else(|| TestFunction::indicator(&zero, &c.window));
                let mut ev = match p.start {
                    Start::Stationary => DlrmEvolution::from_realization(&Realization::sample(
                        model,
                        &zero,
                        &c.window,
                        key(seed, r),
                    )?),
                    Start::Empty => DlrmEvolution::empty(model, &zero, &c.window, key(seed, r))?,
                };
                evolve_xi(&mut ev, &f, &grid, &mut rng)?
            }
            ModelKind::Noodle => unreachable!("rejected by validation"),
        };
        log::debug!("{}: replicate {r} evolved", c.name);
        Ok(v)
    });
    let series: Vec<Vec<f64>> = series.into_iter().collect::<Result<_>>()?;
    let bytes = match opts.format {
        Format::Csv => csv_of(|b| dio::write_series(b, &grid, &series))?,
        Format::Json => serde_json::to_vec_pretty(&SeriesJson {
            times: &grid,
            series: &series,
        })?,
    };
    let mut artifacts = Vec::new();
    write_file(
        opts.out
            .join(format!("{}.series.{}", c.name, opts.format.ext())),
        &bytes,
        &mut artifacts,
    )?;
    Ok(Outcome {
        code: 0,
        message: format!(
            "{}: {} series of {} points",
            c.name,
            series.len(),
            grid.len()
        ),
        artifacts,
    })
}

fn render_task(exp: &Experiment, p: &RenderParams, opts: &RunOptions) -> Result<Outcome> {
    let c = &exp.config;
    let ro = RenderOptions {
        shade: p.shade,
        ..RenderOptions::default()
    };
    let svg = match c.model {
        ModelKind::Dlm1d => {
            let t = match &p.input {
                Some(path) => {
                    let f = fs::File::open(path).with_context(|| format!("cannot open {path}"))?;
                    dio::read_cell_table(f).with_context(|| format!("cannot parse {path}"))?
                }
                None => dlm1d::simulate_recorded(
                    c.window[0],
                    exp.law_1d().expect("validated"),
                    key(c.seed, p.replicate),
                )?,
            };
            render::render_line(&t, &ro)
        }
        ModelKind::Dlm2d => {
            let t = dlm2d::simulate2d(
                exp.window_2d(),
                exp.law_2d().expect("validated"),
                key(c.seed, p.replicate),
            )?;
            render::render_planar(&t, &ro)
        }
        _ => unreachable!("rejected by validation"),
    };
    let mut artifacts = Vec::new();
    write_file(
        opts.out.join(format!("{}.svg", c.name)),
        svg.as_bytes(),
        &mut artifacts,
    )?;
    Ok(Outcome {
        code: 0,
        message: format!("{}: rendered", c.name),
        artifacts,
    })
}
