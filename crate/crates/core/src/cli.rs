//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when a computation refuses or comes out
//! inconclusive, 2 on usage and config errors. Diagnostics go to standard
//! error; data goes to files (and, for `validate`, to standard output).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{read_json_file, Artifact, RunConfig};
use crate::error::{Error, Result};
use crate::estimators::{pair_correlation_estimate, rdf, RdfCurve};
use crate::frames::{read_frames_with_header, write_atomic, write_frames_with_header, FramesHeader};
use crate::gcmc::{run_replicas, SampleSet, GENERATOR};
use crate::inverse::{invert, uniqueness_experiment, Inversion, UniquenessReport};
use crate::oracle::{Bounded, JanossyTable, TruncationBound};
use crate::potentials::{estimate_stability_constant, validate_admissibility, AdmissibilityCertificate, PairPotential, SpaceDim};
use crate::system::{hamiltonian, Configuration, Point};
use crate::thermo::{oracle_report, variational_gap, Gap, ThermoReport};
use crate::FORMAT_VERSION;

#[derive(Parser, Debug)]
#[command(name = "gibbs-inverse", version, about = "Grand-canonical oracles, sampling and pair-potential inversion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a potential against an admissibility certificate.
    Validate {
        #[arg(long)]
        potential: PathBuf,
        #[arg(long)]
        certificate: PathBuf,
        #[arg(long)]
        dim: usize,
        /// Random-search restarts for the stability constant.
        #[arg(long, default_value_t = 60)]
        budget: usize,
        #[arg(long, default_value_t = 1)]
        search_seed: u64,
    },
    /// Quadrature-exact partition function, correlations and Janossy densities.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Grid points for the density profiles.
        #[arg(long, default_value_t = 21)]
        points: usize,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Grand-canonical Metropolis sampling.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        summary: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Pair correlation and RDF from a frames file.
    Rdf {
        #[arg(long)]
        frames: PathBuf,
        #[arg(long, default_value_t = crate::estimators::DEFAULT_BINS)]
        bins: usize,
        #[arg(long)]
        rmax: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Needed when the frames file has no header line.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Thermodynamic report from the oracle.
    Thermo {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Evaluate the energy with this potential instead of the config's.
        #[arg(long)]
        energy_of: Option<PathBuf>,
        /// Variational gap of the config's measure against this potential.
        #[arg(long, conflicts_with = "energy_of")]
        gap_against: Option<PathBuf>,
    },
    /// Iterative Boltzmann inversion of a target RDF.
    Invert {
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        history: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Compare the pair structure of two potentials.
    Uniqueness {
        #[arg(long)]
        u: PathBuf,
        #[arg(long)]
        v: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Validate { potential, certificate, dim, budget, search_seed } => {
            cmd_validate(&potential, &certificate, dim, budget, search_seed)
        }
        Command::Oracle { config, out, points, workers } => cmd_oracle(&config, &out, points, workers),
        Command::Simulate { config, seed, out, summary, workers } => cmd_simulate(&config, seed, &out, &summary, workers),
        Command::Rdf { frames, bins, rmax, out, config } => cmd_rdf(&frames, bins, rmax, &out, config.as_deref()),
        Command::Thermo { config, out, energy_of, gap_against } => {
            cmd_thermo(&config, &out, energy_of.as_deref(), gap_against.as_deref())
        }
        Command::Invert { target, config, out, history, seed, workers } => {
            cmd_invert(&target, &config, &out, &history, seed, workers)
        }
        Command::Uniqueness { u, v, config, out, seed, workers } => cmd_uniqueness(&u, &v, &config, &out, seed, workers),
    }
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let cfg = RunConfig::parse_file(path)?;
    for w in cfg.warnings() {
        eprintln!("{w}");
    }
    Ok(cfg)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")?;
        Ok(())
    })
}

fn worker_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Precondition(format!("worker pool: {e}")))
}

#[derive(Serialize)]
struct ValidateOutput<'a> {
    format_version: &'static str,
    potential: &'a PairPotential,
    certificate: &'a AdmissibilityCertificate,
    dim: usize,
    admissible: bool,
    report: crate::potentials::AdmissibilityReport,
    stability: crate::potentials::StabilityCertificate,
}

fn cmd_validate(potential: &Path, certificate: &Path, dim: usize, budget: usize, seed: u64) -> Result<i32> {
    let pot: PairPotential = read_json_file(potential)?;
    let cert: AdmissibilityCertificate = read_json_file(certificate)?;
    let d = SpaceDim::new(dim).map_err(|e| Error::config("--dim", e.to_string()))?;
    let report = validate_admissibility(&pot, &cert, d)?;
    let mut stability = estimate_stability_constant(&pot, d, budget, seed);
    stability.witnesses.clear();
    let admissible = report.admissible();
    let out = ValidateOutput { format_version: FORMAT_VERSION, potential: &pot, certificate: &cert, dim, admissible, report, stability };
    let mut stdout = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, &out)?;
    writeln!(stdout)?;
    if !admissible {
        eprintln!("potential is not admissible under this certificate");
        return Ok(1);
    }
    Ok(0)
}

#[derive(Serialize)]
struct ProfilePoint {
    x: Vec<f64>,
    value: f64,
    error: f64,
}

#[derive(Serialize)]
struct PairProfilePoint {
    r: f64,
    value: f64,
    error: f64,
}

#[derive(Serialize)]
struct OracleOutput {
    xi: f64,
    xi_error: f64,
    quadrature_error: f64,
    truncation: TruncationBound,
    engine: crate::oracle::Engine,
    pressure: Bounded,
    mean_count: f64,
    rho1: Vec<ProfilePoint>,
    /// `ρ₂(0, r e₁)`.
    rho2_grid: Vec<PairProfilePoint>,
    janossy: JanossyTable,
}

fn axis_point(x: f64) -> Point {
    [x, 0.0, 0.0]
}

fn cmd_oracle(config: &Path, out: &Path, points: usize, workers: usize) -> Result<i32> {
    let cfg = load_config(config)?;
    if points == 0 {
        return Err(Error::config("--points", "must be positive"));
    }
    let oracle = cfg.build_oracle()?;
    let gp = oracle.grand_partition()?;
    let pressure = oracle.pressure()?;
    let l = cfg.ell;
    let d = cfg.dim;
    let pool = worker_pool(workers)?;
    let xs: Vec<f64> = (0..points).map(|i| -l + (i as f64 + 0.5) * 2.0 * l / points as f64).collect();
    let rs: Vec<f64> = (0..points).map(|i| (i as f64 + 0.5) * l / points as f64).collect();
    let (rho1, rho2_grid) = pool.install(|| -> Result<_> {
        let rho1 = xs
            .par_iter()
            .map(|&x| {
                let p = axis_point(x);
                let b = oracle.correlation(&[p])?;
                Ok(ProfilePoint { x: p[..d].to_vec(), value: b.value, error: b.error })
            })
            .collect::<Result<Vec<_>>>()?;
        let rho2 = rs
            .par_iter()
            .map(|&r| {
                let b = oracle.correlation(&[axis_point(0.0), axis_point(r)])?;
                Ok(PairProfilePoint { r, value: b.value, error: b.error })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((rho1, rho2))
    })?;
    let janossy = oracle.janossy_table()?;
    let body = OracleOutput {
        xi: gp.xi,
        xi_error: gp.error_bound,
        quadrature_error: gp.quadrature_error,
        truncation: gp.truncation,
        engine: gp.engine,
        pressure,
        mean_count: gp.mean_count(),
        rho1,
        rho2_grid,
        janossy,
    };
    write_json(out, &Artifact::new(&cfg, body))?;
    Ok(0)
}

#[derive(Serialize)]
struct Rates {
    insert: f64,
    delete: f64,
    displace: f64,
}

#[derive(Serialize)]
struct SimulateSummary {
    generator: String,
    seed: u64,
    streams: Vec<u64>,
    frames: usize,
    mean_count: crate::stats::BlockEstimate,
    mean_energy: crate::stats::BlockEstimate,
    acceptance: crate::gcmc::AcceptanceCounters,
    acceptance_rates: Rates,
    tuning: Vec<crate::gcmc::TuningRecord>,
    final_max_displacement: Vec<f64>,
    max_resync_drift: f64,
    warnings: Vec<String>,
}

fn cmd_simulate(config: &Path, seed: Option<u64>, out: &Path, summary: &Path, workers: usize) -> Result<i32> {
    let cfg = load_config(config)?.with_seed(seed)?;
    let spec = cfg.chain_spec(cfg.seed()?)?;
    let samples = run_replicas(&spec, cfg.replicas, workers)?;
    for w in &samples.meta.warnings {
        eprintln!("warning: {w}");
    }
    let header = FramesHeader { format_version: FORMAT_VERSION.into(), config: serde_json::to_value(&cfg)? };
    let frames = samples.to_frames();
    write_atomic(out, |w| write_frames_with_header(w, &header, &frames))?;
    let m = &samples.meta;
    let body = SimulateSummary {
        generator: GENERATOR.into(),
        seed: m.seed,
        streams: m.streams.clone(),
        frames: samples.len(),
        mean_count: samples.mean_count(),
        mean_energy: samples.mean_energy(),
        acceptance: m.acceptance,
        acceptance_rates: Rates {
            insert: m.acceptance.insert.rate(),
            delete: m.acceptance.delete.rate(),
            displace: m.acceptance.displace.rate(),
        },
        tuning: m.tuning.clone(),
        final_max_displacement: m.final_max_displacement.clone(),
        max_resync_drift: m.max_resync_drift,
        warnings: m.warnings.clone(),
    };
    write_json(summary, &Artifact::new(&cfg, body))?;
    Ok(0)
}

#[derive(Serialize)]
struct RdfMeta {
    format_version: &'static str,
    config: RunConfig,
    frames: usize,
    bins: usize,
    r_max: f64,
    rho1: f64,
    rho1_err: f64,
    window_volume: f64,
}

/// Path of the JSON sidecar that describes a CSV artifact.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn cmd_rdf(frames_path: &Path, bins: usize, rmax: Option<f64>, out: &Path, config: Option<&Path>) -> Result<i32> {
    let file = std::fs::File::open(frames_path)
        .map_err(|e| Error::config("--frames", format!("cannot read {}: {e}", frames_path.display())))?;
    let (header, frames) = read_frames_with_header(std::io::BufReader::new(file))?;
    let cfg = match (config, header) {
        (Some(p), _) => load_config(p)?,
        (None, Some(h)) => RunConfig::parse_str(&h.config.to_string())?,
        (None, None) => return Err(Error::config("--config", "frames file has no header line; pass --config")),
    };
    let bx = cfg.box_spec()?;
    let mut points = Vec::with_capacity(frames.len());
    let mut energies = Vec::with_capacity(frames.len());
    for f in &frames {
        let c: Configuration = f.to_configuration(bx)?;
        let h = hamiltonian(&c, &cfg.potential)?.finite().ok_or_else(|| {
            Error::InvalidConfiguration(format!("frame {} has infinite energy under the config's potential", f.step))
        })?;
        energies.push(h);
        points.push(c.positions);
    }
    let samples = SampleSet::from_frames(bx, cfg.beta, cfg.mu, points, energies, cfg.blocks);
    let r_max = match rmax {
        Some(r) => r,
        None => cfg.binning()?.r_max,
    };
    let binning = crate::estimators::Binning::new(bins, r_max)?;
    let est = pair_correlation_estimate(&samples, binning, cfg.potential.hard_core_radius())?;
    let curve = rdf(&est)?;
    curve.write_csv_file(out)?;
    let meta = RdfMeta {
        format_version: FORMAT_VERSION,
        config: cfg,
        frames: samples.len(),
        bins,
        r_max,
        rho1: est.rho1,
        rho1_err: est.rho1_err,
        window_volume: est.window_volume,
    };
    write_json(&sidecar_path(out), &meta)?;
    Ok(0)
}

#[derive(Serialize)]
struct ThermoOutput {
    report: ThermoReport,
    identity_defect: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    energy_of: Option<PairPotential>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gap: Option<Gap>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gap_significance: Option<f64>,
}

fn cmd_thermo(config: &Path, out: &Path, energy_of: Option<&Path>, gap_against: Option<&Path>) -> Result<i32> {
    let cfg = load_config(config)?;
    let oracle = cfg.build_oracle()?;
    let cross = match energy_of.or(gap_against) {
        Some(p) => Some(read_json_file::<PairPotential>(p)?),
        None => None,
    };
    let report = oracle_report(&oracle, cross.as_ref())?;
    let mut body = ThermoOutput {
        identity_defect: report.identity_defect(),
        report,
        energy_of: cross.clone(),
        gap: None,
        gap_significance: None,
    };
    if let (Some(_), Some(u)) = (gap_against, cross) {
        let mut own = cfg.clone();
        own.potential = u;
        let p = own.build_oracle()?.pressure()?;
        let gap = variational_gap((p.value, p.error), &body.report, cfg.beta, cfg.mu)?;
        body.gap_significance = Some(gap.significance());
        body.gap = Some(gap);
    }
    write_json(out, &Artifact::new(&cfg, body))?;
    Ok(0)
}

#[derive(Serialize)]
struct InvertHistory<'a> {
    tolerance: f64,
    converged: bool,
    stagnated: bool,
    best_iteration: usize,
    best_linf: f64,
    potential: PairPotential,
    history: &'a [crate::inverse::IterationRecord],
}

fn cmd_invert(target: &Path, config: &Path, out: &Path, history: &Path, seed: Option<u64>, workers: usize) -> Result<i32> {
    let cfg = load_config(config)?.with_seed(seed)?;
    let g_target = RdfCurve::read_csv_file(target)
        .map_err(|e| Error::config("--target", format!("{}: {e}", target.display())))?;
    let master = cfg.seed()?;
    let base = cfg.chain_spec(master)?;
    let inv: Inversion = invert(&g_target, &base, &cfg.solver, master, workers)?;
    inv.best.write_csv_file(out)?;
    let body = InvertHistory {
        tolerance: inv.tolerance,
        converged: inv.converged,
        stagnated: inv.stagnated,
        best_iteration: inv.best_iteration,
        best_linf: inv.best_linf,
        potential: inv.best.to_potential()?,
        history: &inv.history,
    };
    write_json(history, &Artifact::new(&cfg, body))?;
    if inv.converged {
        Ok(0)
    } else {
        eprintln!(
            "inversion stopped without reaching tolerance {:.3e} (best ‖g - g*‖∞ = {:.3e} at iteration {}{})",
            inv.tolerance,
            inv.best_linf,
            inv.best_iteration,
            if inv.stagnated { ", stagnated" } else { "" }
        );
        Ok(1)
    }
}

fn cmd_uniqueness(u: &Path, v: &Path, config: &Path, out: &Path, seed: Option<u64>, workers: usize) -> Result<i32> {
    let cfg = load_config(config)?.with_seed(seed)?;
    let pu: PairPotential = read_json_file(u)?;
    let pv: PairPotential = read_json_file(v)?;
    let base = cfg.chain_spec(cfg.seed()?)?;
    let report: UniquenessReport = uniqueness_experiment(&pu, &pv, &base, cfg.binning()?, cfg.replicas, workers)?;
    if let Some(note) = &report.henderson_note {
        eprintln!("note: {note}");
    }
    let inconclusive = report.inconclusive;
    let verdict = report.verdict.clone();
    write_json(out, &Artifact::new(&cfg, report))?;
    if inconclusive {
        eprintln!("{verdict}");
        return Ok(1);
    }
    Ok(0)
}
