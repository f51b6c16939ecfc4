//! Radially symmetric pair potentials, admissibility certificates and
//! stability constants.
//!
//! A potential is admissible when it has a strongly repulsive core (either a
//! hard core or a power-law minorant `C₁ r^(-p)` with `p ≥ d` near the
//! origin) and an integrable tail (a power-law majorant `C₂ r^(-q)` with
//! `q > d` beyond some `r₀`). Because the bounds are power laws supplied by
//! the caller, both conditions are decided in closed form; the potential is
//! only spot-checked against them on a grid.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::Energy;
use crate::error::{Error, Result};

/// Default truncation radius in units of the potential's length scale.
pub const DEFAULT_CUTOFF_FACTOR: f64 = 3.5;
/// Tabulated values above this threshold at the first knot turn the region
/// below that knot into a hard core.
pub const DEFAULT_HUGE_THRESHOLD: f64 = 1e8;

/// Spatial dimension `d ∈ {1, 2, 3}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct SpaceDim(usize);

impl SpaceDim {
    pub const ONE: SpaceDim = SpaceDim(1);
    pub const TWO: SpaceDim = SpaceDim(2);
    pub const THREE: SpaceDim = SpaceDim(3);

    pub fn new(d: usize) -> Result<Self> {
        if (1..=3).contains(&d) {
            Ok(SpaceDim(d))
        } else {
            Err(Error::Domain(format!("dimension must be 1, 2 or 3, got {d}")))
        }
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// Volume of the ball of radius `r`.
    pub fn ball_volume(self, r: f64) -> f64 {
        match self.0 {
            1 => 2.0 * r,
            2 => PI * r * r,
            _ => 4.0 / 3.0 * PI * r * r * r,
        }
    }

    /// Surface area of the unit sphere (2, 2π, 4π).
    pub fn unit_surface(self) -> f64 {
        match self.0 {
            1 => 2.0,
            2 => 2.0 * PI,
            _ => 4.0 * PI,
        }
    }

    /// Exact volume of the shell `lo ≤ |x| < hi`.
    pub fn shell_volume(self, lo: f64, hi: f64) -> f64 {
        self.ball_volume(hi) - self.ball_volume(lo)
    }
}

impl TryFrom<usize> for SpaceDim {
    type Error = Error;
    fn try_from(d: usize) -> Result<Self> {
        SpaceDim::new(d)
    }
}

impl From<SpaceDim> for usize {
    fn from(d: SpaceDim) -> usize {
        d.0
    }
}

/// Piecewise-linear curve through `(r, u)` knots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabulatedCurve {
    pub knots: Vec<[f64; 2]>,
}

impl TabulatedCurve {
    fn validate(&self) -> Result<()> {
        if self.knots.is_empty() {
            return Err(Error::InvalidPotential("tabulated curve has no knots".into()));
        }
        for k in &self.knots {
            if !k[0].is_finite() || !k[1].is_finite() || k[0] < 0.0 {
                return Err(Error::InvalidPotential(format!(
                    "knot ({}, {}) must be finite with r ≥ 0",
                    k[0], k[1]
                )));
            }
        }
        if self.knots.windows(2).any(|w| w[1][0] <= w[0][0]) {
            return Err(Error::InvalidPotential(
                "knot radii must be strictly increasing".into(),
            ));
        }
        Ok(())
    }

    fn first_r(&self) -> f64 {
        self.knots[0][0]
    }

    fn last_r(&self) -> f64 {
        self.knots[self.knots.len() - 1][0]
    }

    /// Flat below the first knot, linear between knots, zero past the last.
    fn interpolate(&self, r: f64) -> f64 {
        let k = &self.knots;
        if r <= k[0][0] {
            return k[0][1];
        }
        if r > self.last_r() {
            return 0.0;
        }
        let i = k.partition_point(|p| p[0] < r);
        let (a, b) = (k[i - 1], k[i]);
        let t = (r - a[0]) / (b[0] - a[0]);
        a[1] + t * (b[1] - a[1])
    }

    fn min_value(&self) -> f64 {
        self.knots.iter().map(|k| k[1]).fold(f64::INFINITY, f64::min)
    }
}

/// Serialized form of a [`PairPotential`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    LennardJones {
        epsilon: f64,
        sigma: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cutoff: Option<f64>,
    },
    HardCore {
        core_radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail: Option<TabulatedCurve>,
    },
    Tabulated {
        knots: Vec<[f64; 2]>,
        /// Explicit hard core below which the potential is `+∞`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        core_radius: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        huge_threshold: Option<f64>,
    },
}

#[derive(Clone, Debug, PartialEq)]
enum Form {
    LennardJones { epsilon: f64, sigma: f64 },
    HardCore { tail: Option<TabulatedCurve> },
    Tabulated { curve: TabulatedCurve },
}

/// An admissible, radially symmetric pair potential `u(|x|)`.
///
/// Values are `+∞` exactly for `r < hard_core_radius` and `0` for
/// `r ≥ cutoff_radius`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialSpec", into = "PotentialSpec")]
pub struct PairPotential {
    spec: PotentialSpec,
    form: Form,
    cutoff_radius: f64,
    hard_core_radius: f64,
}

impl TryFrom<PotentialSpec> for PairPotential {
    type Error = Error;

    fn try_from(spec: PotentialSpec) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidPotential(m));
        let (form, cutoff, core) = match &spec {
            PotentialSpec::LennardJones { epsilon, sigma, cutoff } => {
                if !(epsilon.is_finite() && *epsilon >= 0.0) {
                    return bad(format!("epsilon must be finite and ≥ 0, got {epsilon}"));
                }
                if !(sigma.is_finite() && *sigma > 0.0) {
                    return bad(format!("sigma must be finite and > 0, got {sigma}"));
                }
                let rc = cutoff.unwrap_or(DEFAULT_CUTOFF_FACTOR * sigma);
                if !(rc.is_finite() && rc > 0.0) {
                    return bad(format!("cutoff must be positive, got {rc}"));
                }
                (
                    Form::LennardJones { epsilon: *epsilon, sigma: *sigma },
                    rc,
                    0.0,
                )
            }
            PotentialSpec::HardCore { core_radius, tail } => {
                if !(core_radius.is_finite() && *core_radius > 0.0) {
                    return bad(format!("core_radius must be positive, got {core_radius}"));
                }
                let mut rc = *core_radius;
                if let Some(t) = tail {
                    t.validate()?;
                    rc = rc.max(t.last_r());
                }
                (Form::HardCore { tail: tail.clone() }, rc, *core_radius)
            }
            PotentialSpec::Tabulated { knots, core_radius, huge_threshold } => {
                let curve = TabulatedCurve { knots: knots.clone() };
                curve.validate()?;
                let huge = huge_threshold.unwrap_or(DEFAULT_HUGE_THRESHOLD);
                let mut core = if curve.knots[0][1] > huge { curve.first_r() } else { 0.0 };
                if let Some(a) = core_radius {
                    if !(a.is_finite() && *a >= 0.0) {
                        return bad(format!("core_radius must be ≥ 0, got {a}"));
                    }
                    core = core.max(*a);
                }
                let rc = curve.last_r().max(core);
                (Form::Tabulated { curve }, rc, core)
            }
        };
        Ok(PairPotential { spec, form, cutoff_radius: cutoff, hard_core_radius: core })
    }
}

impl From<PairPotential> for PotentialSpec {
    fn from(p: PairPotential) -> Self {
        p.spec
    }
}

impl PairPotential {
    pub fn lennard_jones(epsilon: f64, sigma: f64, cutoff: Option<f64>) -> Result<Self> {
        PotentialSpec::LennardJones { epsilon, sigma, cutoff }.try_into()
    }

    pub fn hard_core(core_radius: f64, tail: Option<Vec<[f64; 2]>>) -> Result<Self> {
        PotentialSpec::HardCore {
            core_radius,
            tail: tail.map(|knots| TabulatedCurve { knots }),
        }
        .try_into()
    }

    /// Hard core of radius `a` with a square well of `depth` out to `range`.
    pub fn square_well(a: f64, depth: f64, range: f64) -> Result<Self> {
        if range <= a {
            return Err(Error::InvalidPotential(format!(
                "well range {range} must exceed the core {a}"
            )));
        }
        Self::hard_core(a, Some(vec![[a, -depth], [range, -depth]]))
    }

    pub fn tabulated(knots: Vec<[f64; 2]>, core_radius: Option<f64>) -> Result<Self> {
        PotentialSpec::Tabulated { knots, core_radius, huge_threshold: None }.try_into()
    }

    /// The non-interacting potential `u ≡ 0`.
    pub fn ideal() -> Self {
        PotentialSpec::Tabulated { knots: vec![[0.0, 0.0]], core_radius: None, huge_threshold: None }
            .try_into()
            .expect("ideal potential is valid")
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    pub fn cutoff_radius(&self) -> f64 {
        self.cutoff_radius
    }

    pub fn hard_core_radius(&self) -> f64 {
        self.hard_core_radius
    }

    /// True when `u` vanishes identically.
    pub fn is_ideal(&self) -> bool {
        match &self.form {
            Form::LennardJones { epsilon, .. } => *epsilon == 0.0,
            Form::HardCore { .. } => false,
            Form::Tabulated { curve } => {
                self.hard_core_radius == 0.0 && curve.knots.iter().all(|k| k[1] == 0.0)
            }
        }
    }

    /// Characteristic length used to scale searches and default binning.
    pub fn length_scale(&self) -> f64 {
        match &self.form {
            Form::LennardJones { sigma, .. } => *sigma,
            _ if self.hard_core_radius > 0.0 => self.hard_core_radius,
            _ => self.cutoff_radius.max(1.0),
        }
    }

    /// `u(r)` for `r ≥ 0`.
    pub fn evaluate(&self, r: f64) -> Result<Energy> {
        if r.is_nan() || r < 0.0 {
            return Err(Error::Domain(format!("distance must be ≥ 0, got {r}")));
        }
        Ok(self.energy(r))
    }

    /// Unchecked evaluation for hot loops; `r` must be non-negative.
    #[inline]
    pub fn energy(&self, r: f64) -> Energy {
        if r < self.hard_core_radius {
            return Energy::Infinite;
        }
        if r >= self.cutoff_radius {
            return Energy::ZERO;
        }
        match &self.form {
            Form::LennardJones { epsilon, sigma } => {
                if r == 0.0 {
                    return if *epsilon > 0.0 { Energy::Infinite } else { Energy::ZERO };
                }
                let s6 = (sigma / r).powi(6);
                Energy::Finite(4.0 * epsilon * (s6 * s6 - s6))
            }
            Form::HardCore { tail } => {
                Energy::Finite(tail.as_ref().map_or(0.0, |t| t.interpolate(r)))
            }
            Form::Tabulated { curve } => Energy::Finite(curve.interpolate(r)),
        }
    }

    /// Boltzmann factor `exp(-β u(r))`.
    #[inline]
    pub fn boltzmann(&self, r: f64, beta: f64) -> f64 {
        self.energy(r).boltzmann(beta)
    }

    /// Radii at which `u` may be discontinuous or non-smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = vec![self.hard_core_radius, self.cutoff_radius];
        match &self.form {
            Form::HardCore { tail: Some(t) } => pts.extend(t.knots.iter().map(|k| k[0])),
            Form::Tabulated { curve } => pts.extend(curve.knots.iter().map(|k| k[0])),
            _ => {}
        }
        pts.retain(|r| *r > 0.0);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Lower bound on `u` over its finite range.
    pub fn min_value(&self) -> f64 {
        match &self.form {
            Form::LennardJones { epsilon, sigma } => {
                let rmin = 2f64.powf(1.0 / 6.0) * sigma;
                if rmin < self.cutoff_radius {
                    -epsilon
                } else {
                    self.energy(self.cutoff_radius * (1.0 - 1e-12)).finite().unwrap_or(0.0).min(0.0)
                }
            }
            Form::HardCore { tail } => tail.as_ref().map_or(0.0, |t| t.min_value()).min(0.0),
            Form::Tabulated { curve } => curve.min_value().min(0.0),
        }
    }
}

/// Power-law minorant `φ(r) = C₁ r^(-p)` on `(0, r₀]` and majorant
/// `ψ(r) = C₂ r^(-q)` on `[r₀, ∞)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdmissibilityCertificate {
    pub p: f64,
    pub q: f64,
    pub r0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl AdmissibilityCertificate {
    pub fn minorant(&self, r: f64) -> f64 {
        self.c1 * r.powf(-self.p)
    }

    pub fn majorant(&self, r: f64) -> f64 {
        self.c2 * r.powf(-self.q)
    }

    /// `∫_{r_from}^∞ |S_d| r^(d-1) ψ(r) dr`, or `+∞` when the tail diverges.
    pub fn tail_integral(&self, r_from: f64, dim: SpaceDim) -> f64 {
        let d = dim.get() as f64;
        if self.q <= d {
            return f64::INFINITY;
        }
        dim.unit_surface() * self.c2 * r_from.powf(d - self.q) / (self.q - d)
    }
}

/// Condition 1: non-integrable repulsion at the origin.
pub fn condition1_holds(p: f64, dim: SpaceDim, hard_core_radius: f64) -> bool {
    hard_core_radius > 0.0 || p >= dim.get() as f64
}

/// Condition 2: integrable tail.
pub fn condition2_holds(q: f64, dim: SpaceDim) -> bool {
    q > dim.get() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub dim: usize,
    pub condition1: bool,
    pub condition1_reason: String,
    pub condition2: bool,
    pub condition2_reason: String,
    pub grid_points_checked: usize,
    /// ψ tail beyond the cutoff: bounds the truncated part of `∫ |u|`.
    pub truncation_tail: f64,
}

impl AdmissibilityReport {
    pub fn admissible(&self) -> bool {
        self.condition1 && self.condition2
    }
}

const CERT_GRID: usize = 400;

/// Checks both admissibility conditions for `potential` under `cert`.
pub fn validate_admissibility(
    potential: &PairPotential,
    cert: &AdmissibilityCertificate,
    dim: SpaceDim,
) -> Result<AdmissibilityReport> {
    let finite = [cert.p, cert.q, cert.r0, cert.c1, cert.c2].iter().all(|v| v.is_finite());
    if !finite || cert.r0 <= 0.0 {
        return Err(Error::Domain("certificate values must be finite with r0 > 0".into()));
    }
    if cert.p < 0.0 || cert.c1 < 0.0 {
        return Err(Error::CertificateViolated {
            r: cert.r0,
            reason: "minorant φ must be non-negative and decreasing (p ≥ 0, c1 ≥ 0)".into(),
        });
    }
    if cert.q < 0.0 || cert.c2 < 0.0 {
        return Err(Error::CertificateViolated {
            r: cert.r0,
            reason: "majorant ψ must be non-negative and decreasing (q ≥ 0, c2 ≥ 0)".into(),
        });
    }

    let tol = |x: f64| 1e-12 * x.abs().max(1.0);
    let mut checked = 0;
    for i in 1..=CERT_GRID {
        let r = cert.r0 * i as f64 / CERT_GRID as f64;
        checked += 1;
        if let Energy::Finite(u) = potential.energy(r) {
            let phi = cert.minorant(r);
            if u < phi - tol(phi) {
                return Err(Error::CertificateViolated {
                    r,
                    reason: format!("u(r) = {u} is below the minorant φ(r) = {phi}"),
                });
            }
        }
    }
    let hi = potential.cutoff_radius();
    if hi > cert.r0 {
        for i in 0..=CERT_GRID {
            let r = cert.r0 + (hi - cert.r0) * i as f64 / CERT_GRID as f64;
            checked += 1;
            let psi = cert.majorant(r);
            match potential.energy(r) {
                Energy::Infinite => {
                    return Err(Error::CertificateViolated {
                        r,
                        reason: "u is infinite beyond r0, no finite majorant applies".into(),
                    })
                }
                Energy::Finite(u) if u.abs() > psi + tol(psi) => {
                    return Err(Error::CertificateViolated {
                        r,
                        reason: format!("|u(r)| = {} exceeds the majorant ψ(r) = {psi}", u.abs()),
                    })
                }
                _ => {}
            }
        }
    }

    let d = dim.get() as f64;
    let core = potential.hard_core_radius();
    let c1 = condition1_holds(cert.p, dim, core);
    let c1_reason = if core > 0.0 {
        format!("hard core of radius {core}: φ = +∞ on (0, {core})")
    } else if c1 {
        format!("p = {} ≥ d = {d}: ∫₀^r₀ r^(d-1) φ dr diverges", cert.p)
    } else {
        format!("p = {} < d = {d}: ∫₀^r₀ r^(d-1) φ dr is finite", cert.p)
    };
    let c2 = condition2_holds(cert.q, dim);
    let c2_reason = if c2 {
        format!("q = {} > d = {d}: ∫_r₀^∞ r^(d-1) ψ dr converges", cert.q)
    } else {
        format!("q = {} ≤ d = {d}: ∫_r₀^∞ r^(d-1) ψ dr diverges", cert.q)
    };
    Ok(AdmissibilityReport {
        dim: dim.get(),
        condition1: c1,
        condition1_reason: c1_reason,
        condition2: c2,
        condition2_reason: c2_reason,
        grid_points_checked: checked,
        truncation_tail: cert.tail_integral(potential.cutoff_radius().max(cert.r0), dim),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityMethod {
    AnalyticNonnegative,
    AnalyticHardcoreBound,
    RandomSearch,
}

/// A configuration visited by the random search, kept for replay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityWitness {
    pub positions: Vec<Vec<f64>>,
    pub energy_per_particle: f64,
}

/// `B` such that `H_u(x_m) ≥ -B m` on every configuration examined.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityCertificate {
    pub b: f64,
    pub method: StabilityMethod,
    pub search_budget: usize,
    /// Largest `-H/m` seen; `-b` bounds it from below.
    pub worst_found: f64,
    pub unstable_suspected: bool,
    /// Best configuration of every random-search restart.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<StabilityWitness>,
}

fn cluster_energy(potential: &PairPotential, pts: &[Vec<f64>]) -> Energy {
    let mut total = 0.0;
    for i in 0..pts.len() {
        for j in 0..i {
            let r = pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            match potential.energy(r) {
                Energy::Finite(e) => total += e,
                Energy::Infinite => return Energy::Infinite,
            }
        }
    }
    Energy::Finite(total)
}

/// Maximum number of particles within `range` of a given particle when all
/// mutual distances are at least `a`.
fn packing_neighbours(a: f64, range: f64, dim: SpaceDim) -> usize {
    match dim.get() {
        1 => 2 * ((range / a).ceil() as usize).saturating_sub(1),
        d => {
            let ratio = 2.0 * range / a + 1.0;
            (ratio.powi(d as i32) - 1.0).floor() as usize
        }
    }
}

/// Estimates a stability constant `B` with `H_u(x_m) ≥ -B m`.
///
/// Nonnegative potentials give `B = 0`; hard-core potentials use a packing
/// count of the neighbours that can sit inside the interaction range. Anything
/// else falls back to a randomized maximization of `-H/m` over clusters of up
/// to 20 particles, which is a heuristic and not a proof.
pub fn estimate_stability_constant(
    potential: &PairPotential,
    dim: SpaceDim,
    budget: usize,
    rng_seed: u64,
) -> StabilityCertificate {
    let umin = potential.min_value();
    if umin >= 0.0 {
        return StabilityCertificate {
            b: 0.0,
            method: StabilityMethod::AnalyticNonnegative,
            search_budget: 0,
            worst_found: 0.0,
            unstable_suspected: false,
            witnesses: vec![],
        };
    }
    let a = potential.hard_core_radius();
    if a > 0.0 {
        let n = packing_neighbours(a, potential.cutoff_radius(), dim);
        let b = 0.5 * n as f64 * (-umin);
        return StabilityCertificate {
            b,
            method: StabilityMethod::AnalyticHardcoreBound,
            search_budget: 0,
            worst_found: b,
            unstable_suspected: false,
            witnesses: vec![],
        };
    }

    let d = dim.get();
    let scale = potential.length_scale();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut worst = 0.0f64;
    let mut best_by_m = [f64::NEG_INFINITY; 21];
    let mut witnesses = Vec::with_capacity(budget);
    for restart in 0..budget {
        let m = 2 + restart % 19;
        let side = if restart % 2 == 0 { scale * (m as f64).powf(1.0 / d as f64) * 1.2 } else { 0.5 * scale };
        let mut pts: Vec<Vec<f64>> =
            (0..m).map(|_| (0..d).map(|_| rng.gen::<f64>() * side).collect()).collect();
        let mut cur = match cluster_energy(potential, &pts) {
            Energy::Finite(e) => -e / m as f64,
            Energy::Infinite => f64::NEG_INFINITY,
        };
        let mut step = 0.3 * scale;
        for sweep in 0..60 {
            if sweep % 20 == 19 {
                step *= 0.5;
            }
            for i in 0..m {
                let old = pts[i].clone();
                for c in pts[i].iter_mut() {
                    *c += step * (2.0 * rng.gen::<f64>() - 1.0);
                }
                let trial = match cluster_energy(potential, &pts) {
                    Energy::Finite(e) => -e / m as f64,
                    Energy::Infinite => f64::NEG_INFINITY,
                };
                if trial >= cur {
                    cur = trial;
                } else {
                    pts[i] = old;
                }
            }
        }
        worst = worst.max(cur);
        best_by_m[m] = best_by_m[m].max(cur);
        witnesses.push(StabilityWitness { positions: pts, energy_per_particle: -cur });
    }

    let avg = |ms: std::ops::RangeInclusive<usize>| {
        let v: Vec<f64> = ms.filter_map(|m| Some(best_by_m[m]).filter(|x| x.is_finite())).collect();
        if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 }
    };
    let (small, large) = (avg(8..=11), avg(17..=20));
    let unstable_suspected = small > 0.0 && large / small > 1.6;

    StabilityCertificate {
        b: worst.max(0.0),
        method: StabilityMethod::RandomSearch,
        search_budget: budget,
        worst_found: worst,
        unstable_suspected,
        witnesses,
    }
}
