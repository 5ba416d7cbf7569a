//! The four subcommands and their artifacts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use necklab::blowup_lab::{
    cross_validate, fit_exponent, homogeneous_for, run_single, spread, sweep, write_sweep_csv, FitResult,
    SweepRecord,
};
use necklab::geometry::ProblemConfig;
use necklab::harmonics::ModeIndex;
use necklab::manufactured::{min_ratio, mode_pde_convergence, radial_bvp_convergence};
use necklab::neck_solver::{write_field_binary, write_field_csv, Field2D, LateralData, CSV_SCHEMA_VERSION};
use necklab::oracle3d::{default_oracle_config, single_mode_check, x1_data, OracleParams, OracleReport};
use necklab::reduced_ode::{bootstrap_schedule, log_integrating_factor, Anchor};
use necklab::verify::{run_verify, sign_flipped_drift, VerifyOptions};
use serde::Serialize;

use crate::config::ExperimentConfig;

pub const SCHEMA_VERSION: u32 = CSV_SCHEMA_VERSION;

/// Why a command stopped; each kind has its own exit status.
#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Run(anyhow::Error),
    Verify(Vec<&'static str>),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Verify(_) => 1,
            Failure::Config(_) => 2,
            Failure::Run(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "configuration error: {e:#}"),
            Failure::Run(e) => write!(f, "run failed: {e:#}"),
            Failure::Verify(names) => write!(f, "failed checks: {}", names.join(", ")),
        }
    }
}

type Outcome = Result<(), Failure>;

fn run_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Run(e.into())
}

/// `--out`, then `NECKLAB_OUT`, then the document's `output_dir`.
pub fn output_dir(flag: Option<&Path>, cfg: &ExperimentConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os("NECKLAB_OUT").map(PathBuf::from))
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("necklab-out"))
}

fn load(path: &Path) -> Result<ExperimentConfig, Failure> {
    ExperimentConfig::load(path).map_err(Failure::Config)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create {}", dir.display()))
        .map_err(Failure::Run)?;
    let path = dir.join(name);
    let file = File::create(&path)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(Failure::Run)?;
    Ok(BufWriter::new(file))
}

fn finish(mut w: BufWriter<File>) -> Outcome {
    w.flush().map_err(run_err)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Outcome {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(run_err)?;
    writeln!(w).map_err(run_err)?;
    finish(w)
}

fn write_config(dir: &Path, cfg: &ExperimentConfig) -> Outcome {
    let text = cfg.to_toml().map_err(Failure::Run)?;
    let mut w = create(dir, "config.toml")?;
    w.write_all(text.as_bytes()).map_err(run_err)?;
    finish(w)
}

fn write_field(dir: &Path, name: &str, field: &Field2D, binary: bool) -> Outcome {
    let mut w = create(dir, &format!("{name}.csv"))?;
    write_field_csv(field, &mut w).map_err(run_err)?;
    finish(w)?;
    if binary {
        let mut w = create(dir, &format!("{name}.bin"))?;
        write_field_binary(field, &mut w).map_err(run_err)?;
        finish(w)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Manufactured {
    mode_pde_errors: Vec<f64>,
    mode_pde_ratio: f64,
    radial_errors: Vec<f64>,
    radial_ratio: f64,
}

#[derive(Serialize)]
struct CrossSummary {
    relative_error: f64,
    anchor: Anchor,
}

#[derive(Serialize, Default)]
struct OracleSummary {
    #[serde(skip_serializing_if = "Option::is_none")]
    three_d: Option<OracleReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    manufactured: Option<Manufactured>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cross_check: Option<CrossSummary>,
}

fn oracles(cfg: &ExperimentConfig, field: Option<&Field2D>) -> Result<Option<OracleSummary>, Failure> {
    let o = cfg.oracles;
    if !(o.three_d || o.manufactured || o.cross_check) {
        return Ok(None);
    }
    let mut out = OracleSummary::default();
    if o.three_d {
        let rep = single_mode_check(&default_oracle_config(), &OracleParams::default(), ModeIndex::new(1, 1), x1_data)
            .map_err(run_err)?;
        out.three_d = Some(rep);
    }
    if o.manufactured {
        let pde = mode_pde_convergence(&cfg.problem, 2).map_err(run_err)?;
        let radial = radial_bvp_convergence(&cfg.problem, 3).map_err(run_err)?;
        out.manufactured = Some(Manufactured {
            mode_pde_ratio: min_ratio(&pde),
            mode_pde_errors: pde,
            radial_ratio: min_ratio(&radial),
            radial_errors: radial,
        });
    }
    if let (true, Some(field)) = (o.cross_check, field) {
        let cc = cross_validate(&cfg.problem, field).map_err(run_err)?;
        out.cross_check = Some(CrossSummary {
            relative_error: cc.relative_error,
            anchor: cc.anchor,
        });
    }
    Ok(Some(out))
}

#[derive(Serialize)]
struct GridShape {
    nr: usize,
    nz: usize,
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    schema_version: u32,
    command: &'static str,
    control_case: bool,
    problem: &'a ProblemConfig,
    boundary: LateralData,
    grid: GridShape,
    #[serde(flatten)]
    record: &'a SweepRecord,
    oscillation_skipped: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracles: Option<OracleSummary>,
}

pub fn solve(config: &Path, out: Option<&Path>, binary: bool) -> Outcome {
    let cfg = load(config)?;
    let dir = output_dir(out, &cfg);
    write_config(&dir, &cfg)?;
    let rep = run_single(&cfg.lab()).map_err(run_err)?;
    let grid = rep.field.grid().clone();
    write_field(&dir, "field", &rep.field, binary)?;
    write_field(&dir, "gradient", &rep.gradient, binary)?;
    let summary = SolveSummary {
        schema_version: SCHEMA_VERSION,
        command: "solve",
        control_case: cfg.problem.is_control_case(),
        problem: &cfg.problem,
        boundary: cfg.lateral(),
        grid: GridShape {
            nr: grid.nr(),
            nz: grid.nz(),
        },
        record: &rep.record,
        oscillation_skipped: rep.oscillation.skipped,
        oracles: oracles(&cfg, Some(&rep.field))?,
    };
    write_json(&dir, "summary.json", &summary)?;
    if rep.oscillation.skipped > 0 {
        eprintln!("warning: {} probes left the domain and were skipped", rep.oscillation.skipped);
    }
    println!(
        "sup_grad {:.10e} at r = {:.6}, x_n = {:.6e}; wrote {}",
        rep.record.sup_grad,
        rep.record.r_star,
        rep.record.xn_star,
        dir.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    schema_version: u32,
    command: &'static str,
    control_case: bool,
    problem: &'a ProblemConfig,
    boundary: LateralData,
    epsilons: &'a [f64],
    records: &'a [SweepRecord],
    #[serde(skip_serializing_if = "Option::is_none")]
    failed_at: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracles: Option<OracleSummary>,
}

#[derive(Serialize)]
struct FitSummary {
    schema_version: u32,
    points: usize,
    #[serde(flatten)]
    fit: Option<FitResult>,
    spread: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

pub fn sweep_cmd(config: &Path, out: Option<&Path>, jobs: Option<usize>) -> Outcome {
    let cfg = load(config)?;
    if cfg.epsilons.is_empty() {
        return Err(Failure::Config(anyhow!("sweep needs a non-empty `epsilons` list")));
    }
    let dir = output_dir(out, &cfg);
    write_config(&dir, &cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(run_err)?;
    let lab = cfg.lab();
    let result = pool.install(|| sweep(&lab, &cfg.epsilons));
    let (records, failure) = match result {
        Ok(r) => (r, None),
        Err(f) => (f.completed.clone(), Some(f)),
    };
    let mut w = create(&dir, "sweep.csv")?;
    write_sweep_csv(&records, &mut w).map_err(run_err)?;
    finish(w)?;
    let summary = SweepSummary {
        schema_version: SCHEMA_VERSION,
        command: "sweep",
        control_case: cfg.problem.is_control_case(),
        problem: &cfg.problem,
        boundary: cfg.lateral(),
        epsilons: &cfg.epsilons,
        records: &records,
        failed_at: failure.as_ref().map(|f| f.epsilon),
        error: failure.as_ref().map(|f| f.error.to_string()),
        oracles: if failure.is_none() { oracles(&cfg, None)? } else { None },
    };
    write_json(&dir, "summary.json", &summary)?;
    if let Some(f) = failure {
        return Err(Failure::Run(f.into()));
    }
    let (fit, note) = match fit_exponent(&records) {
        Ok(fit) => (Some(fit), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let fit_summary = FitSummary {
        schema_version: SCHEMA_VERSION,
        points: records.len(),
        fit,
        spread: spread(&records),
        note,
    };
    write_json(&dir, "fit.json", &fit_summary)?;
    match &fit_summary.fit {
        Some(fit) => println!(
            "s = {:.6} (R^2 = {:.6}), spread {:.2}% over {} values; wrote {}",
            fit.exponent,
            fit.r_squared,
            100.0 * fit_summary.spread,
            records.len(),
            dir.display()
        ),
        None => println!(
            "no fit ({}); wrote {}",
            fit_summary.note.as_deref().unwrap_or(""),
            dir.display()
        ),
    }
    Ok(())
}

#[derive(Serialize)]
struct OdeSummary<'a> {
    schema_version: u32,
    command: &'static str,
    problem: &'a ProblemConfig,
    c1: Option<f64>,
    a_cut: f64,
    cutoff_history: &'a [(f64, f64)],
    comparison_excess: f64,
    bounds_slack: f64,
    verified: bool,
    max_difference_quotient: f64,
    integrating_factor_at_half: Option<f64>,
    bootstrap: Vec<f64>,
}

pub fn ode(config: &Path, out: Option<&Path>) -> Outcome {
    let cfg = load(config)?;
    let dir = output_dir(out, &cfg);
    write_config(&dir, &cfg)?;
    let p = &cfg.problem;
    let h = homogeneous_for(p).map_err(run_err)?;
    let mut w = create(&dir, "ode.csv")?;
    (|| -> std::io::Result<()> {
        writeln!(w, "schema_version,r,h,dh")?;
        for ((r, v), d) in h.h.nodes().iter().zip(h.h.values()).zip(h.h.derivatives()) {
            writeln!(w, "{SCHEMA_VERSION},{r:.16e},{v:.16e},{d:.16e}")?;
        }
        Ok(())
    })()
    .map_err(run_err)?;
    finish(w)?;
    let summary = OdeSummary {
        schema_version: SCHEMA_VERSION,
        command: "ode",
        problem: p,
        c1: h.c1,
        a_cut: h.a_cut,
        cutoff_history: &h.cutoff_history,
        comparison_excess: h.comparison_excess,
        bounds_slack: h.bounds_slack,
        verified: h.verified,
        max_difference_quotient: h.max_difference_quotient(),
        integrating_factor_at_half: log_integrating_factor(p, 0.5).ok().map(f64::exp),
        bootstrap: bootstrap_schedule(p.gamma, 0.5).map_err(run_err)?,
    };
    write_json(&dir, "ode.json", &summary)?;
    println!(
        "degree {}: c1 = {}, bounds slack {:.3e}; wrote {}",
        p.mode_k,
        h.c1.map_or("n/a".to_string(), |c| format!("{c:.12}")),
        h.bounds_slack,
        dir.display()
    );
    Ok(())
}

pub fn verify(inject_drift_sign_error: bool) -> Outcome {
    let opts = if inject_drift_sign_error {
        VerifyOptions {
            drift: sign_flipped_drift,
        }
    } else {
        VerifyOptions::default()
    };
    let report = run_verify(&opts);
    print!("{}", report.render());
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure::Verify(report.failures()))
    }
}
