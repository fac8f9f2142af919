//! `run`, `bench` and `inspect`.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;
use urdp_core::model::normalize_text;
use urdp_core::orchestrator::{self, IterationRecord, RunLedger};
use urdp_core::report::{metrics_rows, run_bench, summarize, BenchSummary};
use urdp_core::similarity::text_similarity;

use crate::config::{load, BenchConfigFile, ConfigError, RunConfigFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUN: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Run(String),
    #[error("writing {path}: {reason}")]
    Output { path: String, reason: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Run(_) | CliError::Output { .. } => EXIT_RUN,
        }
    }
}

fn output_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Output { path: path.display().to_string(), reason: e.to_string() }
}

/// Writes through a sibling temp file so readers never see a torn file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| output_err(path, e))?;
    tmp.write_all(bytes).map_err(|e| output_err(path, e))?;
    tmp.persist(path).map_err(|e| output_err(path, e.error))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| output_err(path, e))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(header).map_err(|e| output_err(path, e))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| output_err(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| output_err(path, e))?;
    write_atomic(path, &bytes)
}

const METRICS_HEADER: [&str; 7] = ["iteration", "NLC_cum", "NOE_cum", "best_fitness", "hns_if_configured", "std", "range"];

fn config_base(path: &Path) -> PathBuf {
    path.parent().filter(|p| !p.as_os_str().is_empty()).map_or_else(|| PathBuf::from("."), Path::to_path_buf)
}

pub fn cmd_run(config_path: &Path, output_override: Option<&Path>) -> Result<PathBuf, CliError> {
    let file: RunConfigFile = load(config_path)?;
    let prepared = file.prepare(&config_base(config_path))?;
    let llm = prepared.config.outer.llm.build().map_err(|e| ConfigError::Invalid(format!("llm: {e}")))?;
    let out = output_override.map_or_else(|| prepared.config.output_dir.clone(), Path::to_path_buf);
    std::fs::create_dir_all(&out).map_err(|e| output_err(&out, e))?;

    let cfg = &prepared.config.outer;
    let baselines = cfg.hns_baselines.map(|b| (b.human, b.sparse)).or_else(|| prepared.evaluator.hns_baselines());
    let ledger_path = out.join("ledger.json");
    let mut write_err = None;
    let mut persist = |l: &RunLedger| {
        if let Err(e) = write_json(&ledger_path, l) {
            log::error!("{e}");
            write_err.get_or_insert(e);
        }
    };
    let outcome = orchestrator::run(cfg, &prepared.task, prepared.evaluator.as_ref(), llm.as_ref(), &mut persist);
    if let Some(e) = write_err {
        return Err(e);
    }
    let (ledger, failure) = match outcome {
        Ok(l) => (l, None),
        Err(f) => (*f.ledger, Some(f.error)),
    };
    write_json(&ledger_path, &ledger)?;
    write_csv(&out.join("metrics.csv"), &metrics_rows(&ledger, baselines), &METRICS_HEADER)?;
    if let Some(e) = failure {
        return Err(CliError::Run(format!("run aborted: {e}; partial ledger at {}", ledger_path.display())));
    }
    if let Some(best) = &ledger.best {
        write_atomic(&out.join("best_reward.py"), best.code.as_bytes())?;
        println!(
            "best fitness {:.6} (iteration {}, sample {}){}; NOE {}, NLC {}; outputs in {}",
            best.fitness,
            best.iteration,
            best.sample_id,
            best.hns.map_or(String::new(), |h| format!(", HNS {h:.4}")),
            ledger.noe,
            ledger.nlc,
            out.display()
        );
    }
    Ok(out)
}

pub fn cmd_bench(config_path: &Path, output_override: Option<&Path>) -> Result<Vec<BenchSummary>, CliError> {
    let file: BenchConfigFile = load(config_path)?;
    file.validate()?;
    let out = output_override.map_or_else(|| file.output_dir.clone(), Path::to_path_buf);
    std::fs::create_dir_all(&out).map_err(|e| output_err(&out, e))?;
    let rows = run_bench(&file.bench).map_err(|e| CliError::Run(e.to_string()))?;
    write_csv(&out.join("bench.csv"), &rows, &["task", "mode", "seed", "evals_to_tolerance", "best_fitness"])?;
    let summary = summarize(&rows, file.bench.budget);
    write_csv(&out.join("bench_summary.csv"), &summary, &["task", "mode", "runs", "reached", "median_evals_to_tolerance", "median_best_fitness"])?;
    println!("{}", format_summary(&summary, file.bench.budget));
    Ok(summary)
}

pub fn format_summary(summary: &[BenchSummary], budget: usize) -> String {
    let mut s = format!("{:<18} {:<5} {:>5} {:>8} {:>14} {:>12}\n", "task", "mode", "runs", "reached", "median_evals", "median_best");
    for r in summary {
        let mode = serde_json::to_value(r.mode).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        let _ = writeln!(
            s,
            "{:<18} {:<5} {:>5} {:>8} {:>14.1} {:>12.4}",
            r.task, mode, r.runs, r.reached, r.median_evals_to_tolerance, r.median_best_fitness
        );
    }
    let _ = write!(s, "(evals_to_tolerance = {} marks a run that never reached tolerance)", budget + 1);
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InspectQuery {
    Summary,
    Iterations,
    Groups(usize),
    Sample { sample: usize, iteration: Option<usize> },
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

fn iteration_line(it: &IterationRecord) -> String {
    let retained = it.uncertainty.as_ref().map_or(0, |r| r.retained.len());
    format!(
        "iteration {}: {} calls, {} parsed, {} retained, {} evaluations, best {}, std {}, range {}{}",
        it.iteration,
        it.nlc(),
        it.samples.len(),
        retained,
        it.noe(),
        fmt_opt(it.best().map(|b| b.best_fitness)),
        fmt_opt(it.dispersion.map(|d| d.std)),
        fmt_opt(it.dispersion.map(|d| d.range)),
        if it.stopped { ", stopped" } else { "" }
    )
}

pub fn inspect(ledger: &RunLedger, query: InspectQuery) -> Result<String, CliError> {
    let mut s = String::new();
    match query {
        InspectQuery::Summary => {
            let _ = writeln!(s, "run {} ({:?}): {} iterations, NOE {}, NLC {}", ledger.run_id, ledger.status, ledger.iterations.len(), ledger.noe, ledger.nlc);
            if let Some(b) = &ledger.best {
                let theta: Vec<String> = b.named_theta.iter().map(|(k, v)| format!("{k}={v}")).collect();
                let _ = writeln!(s, "best: fitness {:.6}, iteration {}, sample {}, {}", b.fitness, b.iteration, b.sample_id, theta.join(", "));
            }
        }
        InspectQuery::Iterations => {
            for it in &ledger.iterations {
                let _ = writeln!(s, "{}", iteration_line(it));
            }
        }
        InspectQuery::Groups(n) => {
            let it = ledger.iterations.iter().find(|it| it.iteration == n).ok_or_else(|| ConfigError::Invalid(format!("no iteration {n} in ledger")))?;
            let report = it.uncertainty.as_ref().ok_or_else(|| ConfigError::Invalid(format!("iteration {n} has no uncertainty report")))?;
            let code = |id: usize| it.samples.iter().find(|x| x.sample_id == id).map(|x| normalize_text(&x.code_text)).unwrap_or_default();
            for g in &report.groups {
                let u = report.normalized_sample_u.get(&g.representative).copied();
                let _ = writeln!(s, "group rep {} (U(R) {}): members {:?}", g.representative, fmt_opt(u), g.members);
                let rep = code(g.representative);
                for &m in g.members.iter().filter(|&&m| m != g.representative) {
                    let sim = text_similarity(&rep, &code(m)).map(|x| x.value()).ok();
                    let _ = writeln!(s, "  sample {m}: text similarity {}", fmt_opt(sim));
                }
            }
        }
        InspectQuery::Sample { sample, iteration } => {
            let it = ledger
                .iterations
                .iter()
                .rev()
                .filter(|it| iteration.is_none_or(|n| it.iteration == n))
                .find(|it| it.inner_loops.iter().any(|r| r.sample_id == sample) || it.failed_inner_loops.iter().any(|f| f.sample_id == sample))
                .ok_or_else(|| ConfigError::Invalid(format!("sample {sample} was not evaluated")))?;
            let history = it
                .inner_loops
                .iter()
                .find(|r| r.sample_id == sample)
                .map(|r| &r.history)
                .or_else(|| it.failed_inner_loops.iter().find(|f| f.sample_id == sample).map(|f| &f.history))
                .expect("found above");
            let names: Vec<String> = it
                .samples
                .iter()
                .find(|x| x.sample_id == sample)
                .map(|x| x.hyperparameters.iter().map(|h| h.name.clone()).collect())
                .unwrap_or_default();
            let _ = writeln!(s, "iteration {}, sample {}: {}", it.iteration, sample, names.join(", "));
            let _ = writeln!(s, "{:>4}  {:>12}  {:>9}  theta", "#", "fitness", "wall_s");
            for (i, r) in history.iter().enumerate() {
                let theta: Vec<String> = r.theta.iter().map(|v| format!("{v:.6}")).collect();
                let fit = r.fitness.map_or_else(|| format!("failed: {}", r.error.as_deref().unwrap_or("?")), |f| format!("{f:.6}"));
                let _ = writeln!(s, "{:>4}  {:>12}  {:>9.3}  [{}]", i + 1, fit, r.wall_time, theta.join(", "));
            }
        }
    }
    Ok(s)
}

pub fn cmd_inspect(ledger_path: &Path, query: InspectQuery) -> Result<String, CliError> {
    let ledger: RunLedger = load_ledger(ledger_path)?;
    inspect(&ledger, query)
}

pub fn load_ledger(path: &Path) -> Result<RunLedger, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    serde_json::from_str(&text).map_err(|e| ConfigError::Parse { path: path.display().to_string(), reason: e.to_string() })
}
