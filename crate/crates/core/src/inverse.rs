//! Iterative Boltzmann inversion of a target `g(r)` at fixed `(β, μ)` and the
//! two-potential uniqueness experiment.

use std::io::Write;
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{pair_correlation_estimate, rdf, Binning, CorrelationEstimate, RdfCurve};
use crate::frames::write_atomic;
use crate::gcmc::{run_replicas, ChainSpec};
use crate::potentials::PairPotential;
use crate::thermo::{henderson_cross_check, HendersonCheck};

pub const EPS_G: f64 = 1e-6;
pub const DEFAULT_ALPHA: f64 = 0.2;
pub const STAGNATION_WINDOW: usize = 5;

/// Tabulated potential on the RDF bin midpoints. Frozen bins are `+∞`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IbiState {
    pub k: usize,
    pub r: Vec<f64>,
    pub r_hi: Vec<f64>,
    pub u: Vec<f64>,
    pub frozen: Vec<bool>,
    pub alpha: f64,
    pub linf_history: Vec<f64>,
    pub l2_history: Vec<f64>,
}

impl IbiState {
    /// Upper edge of the leading run of frozen bins.
    pub fn core_radius(&self) -> f64 {
        self.frozen.iter().zip(&self.r_hi).take_while(|(f, _)| **f).last().map_or(0.0, |(_, r)| *r)
    }

    /// Tabulated pair potential: linear between active bin midpoints, a hard
    /// core below the frozen run, zero beyond the table.
    pub fn to_potential(&self) -> Result<PairPotential> {
        let core = self.core_radius();
        let knots: Vec<[f64; 2]> = self
            .r
            .iter()
            .zip(&self.u)
            .zip(&self.frozen)
            .filter(|(_, f)| !**f)
            .map(|((r, u), _)| [*r, *u])
            .collect();
        if knots.is_empty() {
            return Err(Error::Domain("every bin is frozen".into()));
        }
        PairPotential::tabulated(knots, (core > 0.0).then_some(core))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "r,u,frozen_flag")?;
        for i in 0..self.r.len() {
            if self.frozen[i] {
                writeln!(w, "{},inf,1", self.r[i])?;
            } else {
                writeln!(w, "{},{},0", self.r[i], self.u[i])?;
            }
        }
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        write_atomic(path, |w| self.write_csv(w))
    }
}

/// `u₀ = -(1/β) log g_target` on bins with `g_target ≥ ε_g`, frozen elsewhere.
pub fn pmf_initial_guess(g_target: &RdfCurve, beta: f64) -> Result<IbiState> {
    if g_target.g.iter().any(|g| *g < 0.0 || g.is_nan()) {
        return Err(Error::Domain("target g must be nonnegative".into()));
    }
    let frozen: Vec<bool> = g_target.g.iter().map(|g| *g < EPS_G).collect();
    if frozen.iter().all(|f| *f) {
        return Err(Error::Domain(format!("every target bin is below ε_g = {EPS_G}")));
    }
    let u = g_target
        .g
        .iter()
        .zip(&frozen)
        .map(|(g, f)| if *f { f64::INFINITY } else { -g.ln() / beta })
        .collect();
    Ok(IbiState {
        k: 0,
        r: g_target.r_mid.clone(),
        r_hi: g_target.r_hi.clone(),
        u,
        frozen,
        alpha: DEFAULT_ALPHA,
        linf_history: Vec::new(),
        l2_history: Vec::new(),
    })
}

/// `(‖g - g_target‖_∞, ‖g - g_target‖₂ / √bins)`.
pub fn residual(g: &RdfCurve, g_target: &RdfCurve) -> (f64, f64) {
    let diffs: Vec<f64> = g.g.iter().zip(&g_target.g).map(|(a, b)| (a - b).abs()).collect();
    let linf = diffs.iter().copied().fold(0.0, f64::max);
    let l2 = (diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len().max(1) as f64).sqrt();
    (linf, l2)
}

/// One damped update `u += (α/β) log(g_k / g_target)` on active bins.
/// Returns the indices skipped because `g_k = 0` there.
pub fn ibi_step(state: &mut IbiState, g_k: &RdfCurve, g_target: &RdfCurve, beta: f64) -> Result<Vec<usize>> {
    if g_k.len() != state.u.len() || g_target.len() != state.u.len() {
        return Err(Error::Domain("IBI curves must share the potential's binning".into()));
    }
    let (linf, l2) = residual(g_k, g_target);
    state.linf_history.push(linf);
    state.l2_history.push(l2);
    let mut skipped = Vec::new();
    for i in 0..state.u.len() {
        if state.frozen[i] {
            continue;
        }
        let (gk, gt) = (g_k.g[i], g_target.g[i]);
        if gk <= 0.0 {
            skipped.push(i);
            continue;
        }
        let du = state.alpha / beta * (gk / gt).ln();
        debug_assert!(du == 0.0 || (du > 0.0) == (gk > gt));
        state.u[i] += du;
    }
    state.k += 1;
    Ok(skipped)
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Stop once `‖g_k - g_target‖_∞` is below this; defaults to three times
    /// the median per-bin σ of the target.
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "one")]
    pub replicas: usize,
    /// Also match the target density by bisection on μ.
    #[serde(default)]
    pub match_density: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { max_iters: 50, tolerance: None, alpha: DEFAULT_ALPHA, replicas: 1, match_density: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub seed: u64,
    pub mu: f64,
    pub linf: f64,
    pub l2: f64,
    pub rho1: f64,
    pub skipped_bins: usize,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inversion {
    pub best: IbiState,
    pub best_iteration: usize,
    pub best_linf: f64,
    pub best_g: RdfCurve,
    pub tolerance: f64,
    pub converged: bool,
    pub stagnated: bool,
    pub history: Vec<IterationRecord>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.retain(|x| x.is_finite());
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn simulate_rdf(spec: &ChainSpec, binning: Binning, replicas: usize, workers: usize) -> Result<(RdfCurve, CorrelationEstimate, Vec<String>)> {
    let samples = run_replicas(spec, replicas, workers)?;
    let est = pair_correlation_estimate(&samples, binning, spec.potential.hard_core_radius())?;
    Ok((rdf(&est)?, est, samples.meta.warnings))
}

/// Damped IBI from the PMF guess. `base` supplies box, ensemble and chain
/// lengths; its potential and seed are replaced per iteration, with seeds
/// drawn from a generator keyed by `master_seed`.
pub fn invert(g_target: &RdfCurve, base: &ChainSpec, solver: &SolverConfig, master_seed: u64, workers: usize) -> Result<Inversion> {
    let tolerance = solver.tolerance.unwrap_or_else(|| 3.0 * median(g_target.g_err.clone()));
    let binning = g_target.binning();
    let mut state = pmf_initial_guess(g_target, base.beta)?;
    state.alpha = solver.alpha;
    let mut seeds = ChaCha8Rng::seed_from_u64(master_seed);
    let mut spec = base.clone();
    let mut mu_bracket = (base.mu - 2.0, base.mu + 2.0);

    let mut history = Vec::new();
    let mut best: Option<(IbiState, usize, f64, RdfCurve)> = None;
    let mut since_best = 0;
    let mut converged = false;
    let mut stagnated = false;
    for k in 0..solver.max_iters.max(1) {
        spec.potential = state.to_potential()?;
        spec.seed = seeds.next_u64();
        let (g_k, est, warnings) = simulate_rdf(&spec, binning, solver.replicas, workers)?;
        let (linf, l2) = residual(&g_k, g_target);
        let noise = median(g_k.g_err.clone());
        let improved = match &best {
            None => true,
            Some((_, _, b, _)) => linf < b - noise,
        };
        if improved || best.as_ref().is_some_and(|(_, _, b, _)| linf < *b) {
            best = Some((state.clone(), k, linf, g_k.clone()));
        }
        since_best = if improved { 0 } else { since_best + 1 };
        let mut record = IterationRecord {
            k,
            seed: spec.seed,
            mu: spec.mu,
            linf,
            l2,
            rho1: est.rho1,
            skipped_bins: 0,
            warnings,
        };
        if linf < tolerance {
            converged = true;
            history.push(record);
            break;
        }
        if since_best >= STAGNATION_WINDOW {
            stagnated = true;
            history.push(record);
            break;
        }
        let skipped = ibi_step(&mut state, &g_k, g_target, base.beta)?;
        if !skipped.is_empty() {
            record.warnings.push(format!("{} active bins had g_k = 0 and were skipped", skipped.len()));
        }
        record.skipped_bins = skipped.len();
        if solver.match_density && g_target.rho1.is_finite() {
            if est.rho1 < g_target.rho1 {
                mu_bracket.0 = spec.mu;
            } else {
                mu_bracket.1 = spec.mu;
            }
            spec.mu = 0.5 * (mu_bracket.0 + mu_bracket.1);
        }
        history.push(record);
    }
    let (best, best_iteration, best_linf, best_g) = best.expect("at least one iteration runs");
    Ok(Inversion { best, best_iteration, best_linf, best_g, tolerance, converged, stagnated, history })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    /// `max_r |g_u - g_v| / σ(r)`.
    pub max_significance: f64,
    pub argmax_r: f64,
    /// Significance at the bin where `g_u` peaks.
    pub peak_significance: f64,
    pub peak_r: f64,
    /// Four-term energy sum on the two sampled tables; `None` when one
    /// system puts pairs inside the other's hard core.
    pub henderson: Option<HendersonCheck>,
    pub henderson_note: Option<String>,
    pub inconclusive: bool,
    pub verdict: String,
    pub g_u: RdfCurve,
    pub g_v: RdfCurve,
}

fn potentials_agree(u: &PairPotential, v: &PairPotential) -> bool {
    let r_max = u.cutoff_radius().max(v.cutoff_radius()).max(1.0) * 1.05;
    (1..=20_000).all(|i| {
        let r = r_max * i as f64 / 20_000.0;
        match (u.energy(r).finite(), v.energy(r).finite()) {
            (None, None) => true,
            (Some(a), Some(b)) => (a - b).abs() <= 1e-12 * a.abs().max(1.0),
            _ => false,
        }
    })
}

/// Simulates `u` and `v` at the ensemble of `base` and compares their pair
/// structure. Equality is never claimed: weak differences are reported as
/// inconclusive.
pub fn uniqueness_experiment(
    u: &PairPotential,
    v: &PairPotential,
    base: &ChainSpec,
    binning: Binning,
    replicas: usize,
    workers: usize,
) -> Result<UniquenessReport> {
    if potentials_agree(u, v) {
        return Err(Error::Precondition("u and v coincide; the experiment needs two distinct potentials".into()));
    }
    let mut su = base.clone();
    su.potential = u.clone();
    let mut sv = base.clone();
    sv.potential = v.clone();
    sv.seed = base.seed.wrapping_add(1);
    let (g_u, est_u, _) = simulate_rdf(&su, binning, replicas, workers)?;
    let (g_v, est_v, _) = simulate_rdf(&sv, binning, replicas, workers)?;
    let sig: Vec<f64> = (0..g_u.len())
        .map(|i| {
            let s = g_u.g_err[i].hypot(g_v.g_err[i]);
            if s > 0.0 { (g_u.g[i] - g_v.g[i]).abs() / s } else { 0.0 }
        })
        .collect();
    let (arg, max_significance) = sig.iter().copied().enumerate().fold((0, 0.0f64), |a, (i, s)| if s > a.1 { (i, s) } else { a });
    let peak = g_u.g.iter().copied().enumerate().fold((0, f64::MIN), |a, (i, g)| if g > a.1 { (i, g) } else { a }).0;
    let (henderson, henderson_note) = match henderson_cross_check(u, v, &est_u, &est_v) {
        Ok(h) => (Some(h), None),
        Err(Error::InvalidConfiguration(msg)) => (None, Some(msg)),
        Err(e) => return Err(e),
    };
    let inconclusive = max_significance < 5.0;
    let verdict = if inconclusive {
        "inconclusive: increase sampling".to_string()
    } else {
        format!("pair structures differ at {max_significance:.1}σ")
    };
    Ok(UniquenessReport {
        max_significance,
        argmax_r: g_u.r_mid[arg],
        peak_significance: sig[peak],
        peak_r: g_u.r_mid[peak],
        henderson,
        henderson_note,
        inconclusive,
        verdict,
        g_u,
        g_v,
    })
}
