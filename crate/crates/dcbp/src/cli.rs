//! Command-line surface: JSON model files in, CSV (plus a run manifest) out.
//!
//! Exit codes: 0 success, 2 model error, 3 degenerate spectrum, 4 solver
//! non-convergence, 5 verification failure. stdout carries the summary line
//! ("OK" / "FAIL: reason"); diagnostics go to stderr.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::analytics::{
    exclusive_shares_curve, extinction_probabilities_detailed, mixed_shares_coeffs,
    mixed_shares_curve, vdcbp_extinction_detailed,
};
use crate::error::{Error, Result};
use crate::linalg::{matexp_reference, triangular_matexp_closed, TriangularSpectrum};
use crate::model::{
    build_social_network_model, Atom, OffspringLaw, SdcbpModel, SocialNetworkParams, TcvdbpModel,
    VdcbpModel,
};
use crate::simulator::{simulate, ProcessRef, SimConfig};
use crate::verify::{
    mc_expectation, mc_extinction, mc_martingale_drift, mc_shares, predicted_means, retry_on_fail,
    McReport,
};

#[derive(Debug, Deserialize)]
struct AtomDto {
    counts: Vec<u32>,
    prob: f64,
}

#[derive(Debug, Deserialize)]
struct LawDto {
    atoms: Vec<AtomDto>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct SocialDto {
    eta1: f64,
    eta2: f64,
    delta_att: f64,
    theta: f64,
    lambda_v: f64,
    mean_friends: f64,
    read_probs: Vec<f64>,
    level_probs: Vec<f64>,
    p: f64,
    n_levels: usize,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct ModelFile {
    variant: String,
    #[serde(default)]
    rates: Vec<f64>,
    #[serde(default)]
    laws: Vec<LawDto>,
    // vdcbp
    n: Option<usize>,
    m: Option<usize>,
    // tcvdbp
    mixed: Option<usize>,
    exclusive: Option<usize>,
    theta: Option<f64>,
    lambda_v: Option<f64>,
    type_change_mixed: Option<Vec<Vec<f64>>>,
    type_change_exclusive: Option<Vec<Vec<f64>>>,
    // social
    social: Option<SocialDto>,
    target_post: Option<usize>,
}

/// Any of the three process variants, as loaded from a model file.
#[derive(Debug, Clone)]
pub enum AnyModel {
    Sdcbp(SdcbpModel),
    Vdcbp(VdcbpModel),
    Tcvdbp(TcvdbpModel),
}

impl AnyModel {
    pub fn as_process(&self) -> ProcessRef<'_> {
        match self {
            Self::Sdcbp(m) => ProcessRef::Sdcbp(m),
            Self::Vdcbp(m) => ProcessRef::Vdcbp(m),
            Self::Tcvdbp(m) => ProcessRef::Tcvdbp(m),
        }
    }

    pub fn n_types(&self) -> usize {
        self.as_process().n_types()
    }

    pub fn generator_matrix(&self) -> DMatrix<f64> {
        match self {
            Self::Sdcbp(m) => m.generator_matrix(),
            Self::Vdcbp(m) => m.generator_matrix(),
            Self::Tcvdbp(m) => m.generator_matrix(),
        }
    }
}

fn laws_from_dto(laws: Vec<LawDto>) -> Result<Vec<OffspringLaw>> {
    laws.into_iter()
        .map(|l| {
            OffspringLaw::new(
                l.atoms
                    .into_iter()
                    .map(|a| Atom {
                        counts: a.counts,
                        prob: a.prob,
                    })
                    .collect(),
            )
        })
        .collect()
}

fn matrix_from_rows(rows: Vec<Vec<f64>>, name: &str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::ModelFile(format!("{name} rows have uneven length")));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn missing(field: &str) -> Error {
    Error::ModelFile(format!("missing field `{field}`"))
}

/// Parses and validates a JSON model file.
pub fn load_model(path: &Path) -> Result<AnyModel> {
    let text = fs::read_to_string(path)?;
    let file: ModelFile =
        serde_json::from_str(&text).map_err(|e| Error::ModelFile(e.to_string()))?;
    let model = match file.variant.as_str() {
        "sdcbp" => AnyModel::Sdcbp(SdcbpModel::new(file.rates, laws_from_dto(file.laws)?)?),
        "vdcbp" => AnyModel::Vdcbp(VdcbpModel::new(
            file.n.ok_or_else(|| missing("n"))?,
            file.m.ok_or_else(|| missing("m"))?,
            file.rates,
            laws_from_dto(file.laws)?,
        )?),
        "tcvdbp" => AnyModel::Tcvdbp(TcvdbpModel::new(
            file.mixed.ok_or_else(|| missing("mixed"))?,
            file.exclusive.ok_or_else(|| missing("exclusive"))?,
            file.theta.ok_or_else(|| missing("theta"))?,
            file.lambda_v.ok_or_else(|| missing("lambdaV"))?,
            matrix_from_rows(
                file.type_change_mixed.ok_or_else(|| missing("typeChangeMixed"))?,
                "typeChangeMixed",
            )?,
            matrix_from_rows(
                file.type_change_exclusive
                    .ok_or_else(|| missing("typeChangeExclusive"))?,
                "typeChangeExclusive",
            )?,
            laws_from_dto(file.laws)?,
        )?),
        "social" => {
            let s = file.social.ok_or_else(|| missing("social"))?;
            let params = SocialNetworkParams {
                eta1: s.eta1,
                eta2: s.eta2,
                delta_att: s.delta_att,
                theta: s.theta,
                lambda_v: s.lambda_v,
                mean_friends: s.mean_friends,
                read_probs: s.read_probs,
                level_probs: s.level_probs,
                p: s.p,
                n_levels: s.n_levels,
            };
            AnyModel::Tcvdbp(build_social_network_model(
                &params,
                file.target_post.unwrap_or(1),
            )?)
        }
        other => return Err(Error::ModelFile(format!("unknown variant `{other}`"))),
    };
    let violations = match &model {
        AnyModel::Sdcbp(m) => m.validate(),
        AnyModel::Vdcbp(m) => m.validate(),
        AnyModel::Tcvdbp(m) => m.validate(),
    };
    if !violations.is_empty() {
        return Err(Error::ModelFile(violations.join("; ")));
    }
    Ok(model)
}

#[derive(Debug, Serialize)]
struct RunManifest {
    command: Vec<String>,
    model: String,
    seed: Option<u64>,
    grids: Vec<f64>,
    outputs: Vec<String>,
    version: &'static str,
}

fn write_manifest(dir_or_file: &Path, manifest: &RunManifest) -> Result<()> {
    let path = if dir_or_file.is_dir() {
        dir_or_file.join("manifest.json")
    } else {
        dir_or_file.with_extension("manifest.json")
    };
    fs::write(path, serde_json::to_string_pretty(manifest).unwrap())?;
    Ok(())
}

fn parse_list_u64(s: &str) -> Result<Vec<u64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| Error::Argument(format!("bad count `{x}`")))
        })
        .collect()
}

fn parse_list_f64(s: &str) -> Result<Vec<f64>> {
    if s.trim().is_empty() {
        return Ok(vec![]);
    }
    s.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| Error::Argument(format!("bad time `{x}`")))
        })
        .collect()
}

fn time_grid(t_max: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !(t_max >= 0.0) {
        return Err(Error::Argument("need dt > 0 and t-max >= 0".into()));
    }
    let mut grid = Vec::new();
    let mut k = 0usize;
    loop {
        let t = k as f64 * dt;
        if t > t_max + 1e-12 {
            break;
        }
        grid.push(t);
        k += 1;
    }
    Ok(grid)
}

fn write_gnuplot(csv: &Path, columns: &str) -> Result<()> {
    let script = format!(
        "set datafile separator ','\nset key autotitle columnhead\nplot '{}' using {columns} with lines\n",
        csv.display()
    );
    fs::write(csv.with_extension("gp"), script)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MatexpMethod {
    Closed,
    Reference,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VerifySuite {
    Expect,
    Extinction,
    Martingale,
    Shares,
    All,
}

#[derive(Parser, Debug)]
#[command(name = "dcbp", version, about = "branching-process analytics and simulation")]
pub struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Expected population curves per type, CSV `t,type,mean`.
    Expect {
        #[arg(long)]
        model: PathBuf,
        /// Start type (0-based); the initial state is one such particle.
        #[arg(long, default_value_t = 0)]
        start: usize,
        #[arg(long, default_value_t = 2.0)]
        t_max: f64,
        #[arg(long, default_value_t = 0.5)]
        dt: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = false)]
        gnuplot: bool,
    },
    /// Extinction probabilities, CSV `startType,targetClass,q,residual,iters`.
    Extinction {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, default_value_t = 1_000_000)]
        max_iter: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Event-driven simulation; snapshot CSVs per replication.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        /// Initial population, comma-separated per type.
        #[arg(long)]
        init: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10.0)]
        horizon: f64,
        #[arg(long, default_value_t = 10_000_000)]
        max_events: u64,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        /// Snapshot times, comma-separated.
        #[arg(long, default_value = "")]
        grid: String,
        #[arg(long)]
        out_dir: PathBuf,
        /// Write a single CSV of per-point ensemble means instead of one
        /// CSV per replication.
        #[arg(long, default_value_t = false)]
        aggregate: bool,
    },
    /// Share curves of a type-change model, CSV `t,shares`.
    Shares {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 0)]
        start: usize,
        #[arg(long, default_value_t = 4.0)]
        t_max: f64,
        #[arg(long, default_value_t = 0.5)]
        dt: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = false)]
        gnuplot: bool,
    },
    /// Monte Carlo verification suites with pass/fail verdicts.
    Verify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = VerifySuite::All)]
        suite: VerifySuite,
        #[arg(long, default_value_t = 20_000)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Debug surface for the generator exponential.
    Matexp {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, value_enum, default_value_t = MatexpMethod::Both)]
        method: MatexpMethod,
    },
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NearDegenerateSpectrum { .. } => 3,
        Error::Convergence { .. } => 4,
        _ => 2,
    }
}

/// Entry point; returns the process exit code.
pub fn run() -> i32 {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    match dispatch(cli.cmd, &argv) {
        Ok(Outcome::Ok) => {
            println!("OK");
            0
        }
        Ok(Outcome::VerificationFailed(reason)) => {
            println!("FAIL: {reason}");
            5
        }
        Err(e) => {
            eprintln!("error: {e}");
            println!("FAIL: {e}");
            exit_code(&e)
        }
    }
}

enum Outcome {
    Ok,
    VerificationFailed(String),
}

fn dispatch(cmd: Cmd, argv: &[String]) -> Result<Outcome> {
    match cmd {
        Cmd::Expect {
            model,
            start,
            t_max,
            dt,
            out,
            gnuplot,
        } => {
            let m = load_model(&model)?;
            let grid = time_grid(t_max, dt)?;
            let mut initial = vec![0u64; m.n_types()];
            if start >= initial.len() {
                return Err(Error::Argument("start type out of range".into()));
            }
            initial[start] = 1;
            let means = predicted_means(m.as_process(), &initial, &grid)?;
            let mut csv = String::from("t,type,mean\n");
            for (gi, &t) in grid.iter().enumerate() {
                for ty in 0..m.n_types() {
                    csv.push_str(&format!("{t},{ty},{}\n", means[gi][ty]));
                }
            }
            fs::write(&out, csv)?;
            if gnuplot {
                write_gnuplot(&out, "1:3")?;
            }
            write_manifest(
                &out,
                &RunManifest {
                    command: argv.to_vec(),
                    model: model.display().to_string(),
                    seed: None,
                    grids: grid,
                    outputs: vec![out.display().to_string()],
                    version: env!("CARGO_PKG_VERSION"),
                },
            )?;
            Ok(Outcome::Ok)
        }
        Cmd::Extinction {
            model,
            tol,
            max_iter,
            out,
        } => {
            let m = load_model(&model)?;
            let mut csv = String::from("startType,targetClass,q,residual,iters\n");
            match &m {
                AnyModel::Sdcbp(s) => {
                    let (table, details) = extinction_probabilities_detailed(s, tol, max_iter)?;
                    for i in 0..s.n_types() {
                        for k in 0..=i {
                            csv.push_str(&format!(
                                "{k},{i},{},{},{}\n",
                                table.q[k][i], details[i].residual, details[i].iters
                            ));
                        }
                    }
                }
                AnyModel::Vdcbp(v) => {
                    let (q1, q2, q12, d) = vdcbp_extinction_detailed(v, tol, max_iter)?;
                    for (j, q) in q1.iter().enumerate() {
                        csv.push_str(&format!("{j},1,{q},{},{}\n", d[0].residual, d[0].iters));
                    }
                    for (l, q) in q2.iter().enumerate() {
                        csv.push_str(&format!(
                            "{},2,{q},{},{}\n",
                            v.n + l,
                            d[1].residual,
                            d[1].iters
                        ));
                    }
                    for (j, q) in q12.iter().enumerate() {
                        csv.push_str(&format!("{j},12,{q},{},{}\n", d[2].residual, d[2].iters));
                    }
                }
                AnyModel::Tcvdbp(_) => {
                    return Err(Error::Argument(
                        "extinction analysis is not defined for type-change models".into(),
                    ))
                }
            }
            fs::write(&out, csv)?;
            write_manifest(
                &out,
                &RunManifest {
                    command: argv.to_vec(),
                    model: model.display().to_string(),
                    seed: None,
                    grids: vec![],
                    outputs: vec![out.display().to_string()],
                    version: env!("CARGO_PKG_VERSION"),
                },
            )?;
            Ok(Outcome::Ok)
        }
        Cmd::Simulate {
            model,
            init,
            seed,
            horizon,
            max_events,
            reps,
            grid,
            out_dir,
            aggregate,
        } => {
            let m = load_model(&model)?;
            let initial = parse_list_u64(&init)?;
            let grid = parse_list_f64(&grid)?;
            fs::create_dir_all(&out_dir)?;
            let mut cfg = SimConfig::new(horizon, seed, grid.clone())?;
            cfg.max_events = max_events;
            let mut outputs = Vec::new();
            if aggregate {
                let reports = mc_expectation(m.as_process(), &initial, &grid, reps, seed)?;
                let mut csv = String::from("t,type,mcMean,mcStdErr,predicted\n");
                for (ty, r) in reports.iter().enumerate() {
                    for gi in 0..r.grid.len() {
                        csv.push_str(&format!(
                            "{},{ty},{},{},{}\n",
                            r.grid[gi], r.mc_mean[gi], r.mc_std_err[gi], r.predicted[gi]
                        ));
                    }
                }
                let path = out_dir.join("aggregate.csv");
                fs::write(&path, csv)?;
                outputs.push(path.display().to_string());
            } else {
                for r in 0..reps {
                    let mut c = cfg.clone();
                    c.seed = crate::simulator::replication_seed(seed, r as u64);
                    let log = simulate(m.as_process(), &initial, &c)?;
                    let mut csv = String::from("t");
                    for ty in 0..m.n_types() {
                        csv.push_str(&format!(",pop_{ty}"));
                    }
                    for cl in 0..m.as_process().n_classes() {
                        csv.push_str(&format!(",shares_{cl}"));
                    }
                    csv.push_str(",totalProgeny\n");
                    for gi in 0..log.grid.len() {
                        csv.push_str(&format!("{}", log.grid[gi]));
                        for &p in &log.snapshots[gi] {
                            csv.push_str(&format!(",{p}"));
                        }
                        for &s in &log.shares_by_class[gi] {
                            csv.push_str(&format!(",{s}"));
                        }
                        csv.push_str(&format!(",{}\n", log.total_progeny[gi]));
                    }
                    let path = out_dir.join(format!("rep_{r}.csv"));
                    fs::write(&path, csv)?;
                    outputs.push(path.display().to_string());
                }
            }
            write_manifest(
                &out_dir,
                &RunManifest {
                    command: argv.to_vec(),
                    model: model.display().to_string(),
                    seed: Some(seed),
                    grids: grid,
                    outputs,
                    version: env!("CARGO_PKG_VERSION"),
                },
            )?;
            Ok(Outcome::Ok)
        }
        Cmd::Shares {
            model,
            start,
            t_max,
            dt,
            out,
            gnuplot,
        } => {
            let m = load_model(&model)?;
            let t = match &m {
                AnyModel::Tcvdbp(t) => t,
                _ => {
                    return Err(Error::Argument(
                        "share curves require a type-change model".into(),
                    ))
                }
            };
            let grid = time_grid(t_max, dt)?;
            let mut header = String::new();
            let curve = if t.is_mixed(start) {
                let c = mixed_shares_coeffs(t)?;
                header.push_str(&format!(
                    "# g={:?} h={:?} o={:?} alphaE={} alphaBar={} gho_sum={:?}\n",
                    c.gl,
                    c.hl,
                    c.ol,
                    c.alpha_e,
                    c.alpha_bar,
                    c.gl
                        .iter()
                        .zip(&c.hl)
                        .zip(&c.ol)
                        .map(|((g, h), o)| g + h + o)
                        .collect::<Vec<_>>()
                ));
                if let Some(w) = &c.warning {
                    header.push_str(&format!("# warning: {w}\n"));
                }
                mixed_shares_curve(t, start)?
            } else {
                exclusive_shares_curve(t, start - t.mixed)?
            };
            if t.theta == 0.0 {
                header.push_str("# theta = 0: this is the total-progeny curve\n");
            }
            let mut csv = header;
            csv.push_str("t,shares\n");
            for &tt in &grid {
                csv.push_str(&format!("{tt},{}\n", curve.eval(tt)));
            }
            fs::write(&out, csv)?;
            if gnuplot {
                write_gnuplot(&out, "1:2")?;
            }
            write_manifest(
                &out,
                &RunManifest {
                    command: argv.to_vec(),
                    model: model.display().to_string(),
                    seed: None,
                    grids: grid,
                    outputs: vec![out.display().to_string()],
                    version: env!("CARGO_PKG_VERSION"),
                },
            )?;
            Ok(Outcome::Ok)
        }
        Cmd::Verify {
            model,
            suite,
            reps,
            seed,
            out,
        } => {
            let m = load_model(&model)?;
            fs::create_dir_all(&out)?;
            let reports = run_verify_suites(&m, suite, reps, seed)?;
            let mut summary = String::new();
            let mut outputs = Vec::new();
            let mut failed = Vec::new();
            for (name, report) in &reports {
                let path = out.join(format!("{name}.csv"));
                fs::write(&path, report.to_csv())?;
                outputs.push(path.display().to_string());
                summary.push_str(&report.summary());
                summary.push('\n');
                if !report.pass() {
                    failed.push(report.quantity.clone());
                }
            }
            fs::write(out.join("summary.txt"), &summary)?;
            write_manifest(
                &out,
                &RunManifest {
                    command: argv.to_vec(),
                    model: model.display().to_string(),
                    seed: Some(seed),
                    grids: vec![],
                    outputs,
                    version: env!("CARGO_PKG_VERSION"),
                },
            )?;
            eprint!("{summary}");
            if failed.is_empty() {
                Ok(Outcome::Ok)
            } else {
                Ok(Outcome::VerificationFailed(failed.join(", ")))
            }
        }
        Cmd::Matexp { model, t, method } => {
            let m = load_model(&model)?;
            let g = m.generator_matrix();
            let print = |label: &str, mat: &DMatrix<f64>| {
                println!("{label}:");
                for i in 0..mat.nrows() {
                    let row: Vec<String> =
                        (0..mat.ncols()).map(|j| format!("{:.9}", mat[(i, j)])).collect();
                    println!("  {}", row.join(" "));
                }
            };
            let closed = || -> Result<DMatrix<f64>> {
                let spec = TriangularSpectrum::from_matrix(&g)?;
                Ok(triangular_matexp_closed(&spec, t))
            };
            match method {
                MatexpMethod::Closed => print("closed form", &closed()?),
                MatexpMethod::Reference => print("reference", &matexp_reference(&g, t)),
                MatexpMethod::Both => {
                    let c = closed()?;
                    let r = matexp_reference(&g, t);
                    print("closed form", &c);
                    print("reference", &r);
                    let diff = (&c - &r).iter().map(|x| x.abs()).fold(0.0f64, f64::max);
                    println!("max-abs difference: {diff:e}");
                }
            }
            Ok(Outcome::Ok)
        }
    }
}

/// The verification suites applicable to each variant.
fn run_verify_suites(
    model: &AnyModel,
    suite: VerifySuite,
    reps: usize,
    seed: u64,
) -> Result<Vec<(String, McReport)>> {
    let want = |s: VerifySuite| suite == VerifySuite::All || suite == s;
    let mut reports: Vec<(String, McReport)> = Vec::new();
    let grid = [0.5, 1.0, 2.0];
    let n = model.n_types();
    let mut e0 = vec![0u64; n];
    e0[0] = 1;

    if want(VerifySuite::Expect) {
        let rs = mc_expectation(model.as_process(), &e0, &grid, reps, seed)?;
        for (ty, r) in rs.into_iter().enumerate() {
            reports.push((format!("expect_type{ty}"), r));
        }
    }
    if want(VerifySuite::Extinction) {
        match model {
            AnyModel::Sdcbp(_) | AnyModel::Vdcbp(_) => {
                let full = vec![true; n];
                let r = retry_on_fail(
                    |s| {
                        mc_extinction(model.as_process(), &e0, 25.0, reps, s, &full, 20_000)
                    },
                    seed,
                )?;
                reports.push(("extinction_full".into(), r));
            }
            AnyModel::Tcvdbp(_) => {}
        }
    }
    if want(VerifySuite::Martingale) {
        match model {
            AnyModel::Sdcbp(_) | AnyModel::Vdcbp(_) => {
                let target = n - 1;
                let r = retry_on_fail(
                    |s| mc_martingale_drift(model.as_process(), target, &e0, &grid, reps, s),
                    seed,
                )?;
                reports.push(("martingale".into(), r));
            }
            AnyModel::Tcvdbp(_) => {}
        }
    }
    if want(VerifySuite::Shares) {
        if let AnyModel::Tcvdbp(t) = model {
            let r = retry_on_fail(|s| mc_shares(t, 0, &grid, reps, s), seed)?;
            reports.push(("shares_mixed0".into(), r));
            let ex_start = t.mixed;
            let r = retry_on_fail(|s| mc_shares(t, ex_start, &grid, reps, s), seed)?;
            reports.push((format!("shares_exclusive{}", ex_start), r));
        }
    }
    if reports.is_empty() {
        return Err(Error::Argument(
            "selected suite is not applicable to this model variant".into(),
        ));
    }
    Ok(reports)
}
