//! Density, pair correlation and radial distribution estimates from sample
//! frames, plus the single-insertion GNZ residual.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::write_atomic;
use crate::gcmc::SampleSet;
use crate::potentials::{PairPotential, SpaceDim};
use crate::stats::{combine_sigma, from_block_means, neumaier_sum, BlockEstimate};
use crate::system::{interaction_energy, Boundary, BoxSpec, Configuration, Point};

pub const DEFAULT_BINS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Binning {
    pub bins: usize,
    pub r_max: f64,
}

impl Binning {
    pub fn new(bins: usize, r_max: f64) -> Result<Self> {
        if bins == 0 {
            return Err(Error::config("binning.bins", "must be positive"));
        }
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::config("binning.r_max", "must be positive"));
        }
        Ok(Binning { bins, r_max })
    }

    /// 200 bins on `[0, min(ℓ, 4σ))`.
    pub fn default_for(bx: &BoxSpec, potential: &PairPotential) -> Self {
        Binning { bins: DEFAULT_BINS, r_max: bx.half_width.min(4.0 * potential.length_scale()) }
    }

    pub fn width(&self) -> f64 {
        self.r_max / self.bins as f64
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.bins).map(|i| i as f64 * self.width()).collect()
    }

    fn bin_of(&self, r: f64) -> Option<usize> {
        if r >= self.r_max {
            return None;
        }
        Some(((r / self.width()) as usize).min(self.bins - 1))
    }
}

/// Axis-aligned window `[-w, w]^d` centred in the box.
fn in_window(x: &Point, d: usize, w: f64) -> bool {
    x.iter().take(d).all(|c| c.abs() <= w)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub rho: f64,
    pub sigma: f64,
    pub margin: f64,
    pub frames: usize,
    /// Too few blocks for an error bar.
    pub degenerate: bool,
}

/// `⟨N⟩/|Λ|`, or the count density inside `Λ_{ℓ-margin}` when a margin is given.
pub fn density_estimate(samples: &SampleSet, margin: Option<f64>) -> Result<DensityEstimate> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let bx = samples.bx;
    let d = bx.d();
    let margin = margin.unwrap_or(0.0);
    let w = bx.half_width - margin;
    if !(w > 0.0) {
        return Err(Error::Domain(format!("margin {margin} leaves no window inside ℓ = {}", bx.half_width)));
    }
    let vol = (2.0 * w).powi(d as i32);
    let est = samples.block_estimate(|i| {
        samples.frames[i].iter().filter(|x| in_window(x, d, w)).count() as f64 / vol
    });
    let all_zero = samples.frames.iter().all(|f| f.is_empty());
    Ok(DensityEstimate {
        rho: est.mean,
        sigma: if all_zero { 0.0 } else { est.sigma },
        margin,
        frames: samples.len(),
        degenerate: !all_zero && est.is_degenerate(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub binning: Binning,
    pub dim: SpaceDim,
    pub rho2: Vec<f64>,
    pub rho2_err: Vec<f64>,
    pub rho1: f64,
    pub rho1_err: f64,
    pub frames: usize,
    pub boundary: Boundary,
    pub core_subbox_margin: f64,
    /// Raw ordered-pair counts per bin.
    pub pair_counts: Vec<u64>,
    /// Volume of the window holding the first particle of each pair.
    pub window_volume: f64,
}

impl CorrelationEstimate {
    /// Builds an estimate from tabulated values, for example from an oracle.
    pub fn from_table(binning: Binning, dim: SpaceDim, rho1: f64, rho2: Vec<f64>) -> Result<Self> {
        if rho2.len() != binning.bins {
            return Err(Error::Domain(format!("{} values for {} bins", rho2.len(), binning.bins)));
        }
        let n = rho2.len();
        Ok(CorrelationEstimate {
            binning,
            dim,
            rho2,
            rho2_err: vec![0.0; n],
            rho1,
            rho1_err: 0.0,
            frames: 0,
            boundary: Boundary::Free,
            core_subbox_margin: 0.0,
            pair_counts: vec![0; n],
            window_volume: 0.0,
        })
    }

    pub fn shell_volume(&self, bin: usize) -> f64 {
        let w = self.binning.width();
        self.dim.shell_volume(bin as f64 * w, (bin + 1) as f64 * w)
    }

    pub fn total_pair_count(&self) -> u64 {
        self.pair_counts.iter().sum()
    }

    /// `Σ_b ρ2_b · shell_b · window · frames`; equals the raw pair count.
    pub fn reconstructed_pair_count(&self) -> f64 {
        (0..self.binning.bins)
            .map(|b| self.rho2[b] * self.shell_volume(b) * self.window_volume * self.frames as f64)
            .sum()
    }

    pub fn same_binning(&self, other: &CorrelationEstimate) -> bool {
        self.binning == other.binning && self.dim == other.dim
    }
}

/// Histogram of ordered pair distances normalised to target `ρ^(2)(r)`.
///
/// In free mode the first particle of each pair must lie in `Λ_{ℓ-r_max}`;
/// in periodic mode every particle counts and distances use minimum image.
pub fn pair_correlation_estimate(samples: &SampleSet, binning: Binning, potential_core: f64) -> Result<CorrelationEstimate> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let bx = samples.bx;
    let d = bx.d();
    let (w, margin) = match bx.boundary {
        Boundary::Periodic => {
            if binning.r_max > bx.half_width {
                return Err(Error::Domain(format!(
                    "r_max = {} exceeds ℓ = {} (minimum image)",
                    binning.r_max, bx.half_width
                )));
            }
            (bx.half_width, 0.0)
        }
        Boundary::Free => {
            if binning.r_max >= bx.half_width {
                return Err(Error::Domain(format!(
                    "r_max = {} leaves no core sub-box inside ℓ = {}",
                    binning.r_max, bx.half_width
                )));
            }
            (bx.half_width - binning.r_max, binning.r_max)
        }
    };
    let window_volume = (2.0 * w).powi(d as i32);
    let nb = binning.bins;
    let dim = bx.dim;
    let shells: Vec<f64> = (0..nb)
        .map(|b| dim.shell_volume(b as f64 * binning.width(), (b + 1) as f64 * binning.width()))
        .collect();

    let mut totals = vec![0u64; nb];
    let mut block_rho2: Vec<Vec<f64>> = Vec::new();
    for range in samples.block_ranges() {
        let mut counts = vec![0u64; nb];
        for frame in &samples.frames[range.clone()] {
            for (i, x) in frame.iter().enumerate() {
                if !in_window(x, d, w) {
                    continue;
                }
                for (j, y) in frame.iter().enumerate() {
                    if i != j {
                        if let Some(b) = binning.bin_of(bx.distance(x, y)) {
                            counts[b] += 1;
                        }
                    }
                }
            }
        }
        let nf = range.len() as f64;
        block_rho2.push((0..nb).map(|b| counts[b] as f64 / (nf * shells[b] * window_volume)).collect());
        for (t, c) in totals.iter_mut().zip(&counts) {
            *t += c;
        }
    }
    for (b, &c) in totals.iter().enumerate() {
        let r_hi = (b + 1) as f64 * binning.width();
        if c > 0 && r_hi <= potential_core {
            return Err(Error::InvalidConfiguration(format!(
                "{c} pairs closer than the hard core {potential_core} in bin {b}"
            )));
        }
    }
    let frames = samples.len();
    let rho2: Vec<f64> = (0..nb)
        .map(|b| totals[b] as f64 / (frames as f64 * shells[b] * window_volume))
        .collect();
    let rho2_err: Vec<f64> = (0..nb)
        .map(|b| {
            let col: Vec<f64> = block_rho2.iter().map(|v| v[b]).collect();
            let s = from_block_means(&col).sigma;
            if totals[b] == 0 { 0.0 } else { s }
        })
        .collect();
    let dens = density_estimate(samples, Some(margin))?;
    Ok(CorrelationEstimate {
        binning,
        dim,
        rho2,
        rho2_err,
        rho1: dens.rho,
        rho1_err: dens.sigma,
        frames,
        boundary: bx.boundary,
        core_subbox_margin: margin,
        pair_counts: totals,
        window_volume,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RdfCurve {
    pub r_lo: Vec<f64>,
    pub r_mid: Vec<f64>,
    pub r_hi: Vec<f64>,
    pub rho2: Vec<f64>,
    pub rho2_err: Vec<f64>,
    pub g: Vec<f64>,
    pub g_err: Vec<f64>,
    pub rho1: f64,
    pub rho1_err: f64,
}

const CSV_HEADER: &str = "r_lo,r_mid,r_hi,rho2,rho2_err,g,g_err";

impl RdfCurve {
    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    /// Curve with the given `g` values on uniform bins, zero errors and `ρ = 1`.
    pub fn from_values(binning: Binning, g: Vec<f64>, g_err: Vec<f64>) -> Self {
        let e = binning.edges();
        let n = binning.bins;
        RdfCurve {
            r_lo: e[..n].to_vec(),
            r_mid: (0..n).map(|i| 0.5 * (e[i] + e[i + 1])).collect(),
            r_hi: e[1..].to_vec(),
            rho2: g.clone(),
            rho2_err: g_err.clone(),
            g,
            g_err,
            rho1: 1.0,
            rho1_err: 0.0,
        }
    }

    pub fn binning(&self) -> Binning {
        Binning { bins: self.len(), r_max: self.r_hi.last().copied().unwrap_or(0.0) }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                self.r_lo[i], self.r_mid[i], self.r_hi[i], self.rho2[i], self.rho2_err[i], self.g[i], self.g_err[i]
            )?;
        }
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        write_atomic(path, |w| self.write_csv(w))
    }

    /// Reads `g.csv`; the density is recovered as `sqrt(ρ2/g)` from the first
    /// bin with `g > 0`.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim() != CSV_HEADER {
            return Err(Error::config("target", format!("expected CSV header `{CSV_HEADER}`")));
        }
        let mut cols: [Vec<f64>; 7] = Default::default();
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::config("target", format!("line {}: {e}", n + 2)))?;
            if vals.len() != 7 {
                return Err(Error::config("target", format!("line {}: expected 7 columns", n + 2)));
            }
            for (c, v) in cols.iter_mut().zip(vals) {
                c.push(v);
            }
        }
        let [r_lo, r_mid, r_hi, rho2, rho2_err, g, g_err] = cols;
        let rho1 = g
            .iter()
            .zip(&rho2)
            .find(|(g, _)| **g > 0.0)
            .map_or(f64::NAN, |(g, r2)| (r2 / g).sqrt());
        Ok(RdfCurve { r_lo, r_mid, r_hi, rho2, rho2_err, g, g_err, rho1, rho1_err: f64::NAN })
    }

    pub fn read_csv_file(path: &Path) -> Result<Self> {
        Self::read_csv(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// `g = ρ^(2)/(ρ^(1))²` with first-order error propagation.
pub fn rdf(est: &CorrelationEstimate) -> Result<RdfCurve> {
    if !(est.rho1 > 0.0) {
        return Err(Error::Refusal("g(r) needs a nonzero density".into()));
    }
    let r2 = est.rho1 * est.rho1;
    let e = est.binning.edges();
    let n = est.binning.bins;
    let g: Vec<f64> = est.rho2.iter().map(|v| v / r2).collect();
    let rel1 = if est.rho1_err.is_finite() { est.rho1_err / est.rho1 } else { 0.0 };
    let g_err = est
        .rho2_err
        .iter()
        .zip(&g)
        .map(|(s, gv)| combine_sigma(s / r2, 2.0 * gv * rel1))
        .collect();
    Ok(RdfCurve {
        r_lo: e[..n].to_vec(),
        r_mid: (0..n).map(|i| 0.5 * (e[i] + e[i + 1])).collect(),
        r_hi: e[1..].to_vec(),
        rho2: est.rho2.clone(),
        rho2_err: est.rho2_err.clone(),
        g,
        g_err,
        rho1: est.rho1,
        rho1_err: est.rho1_err,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuelleFit {
    pub xi: f64,
    pub rho1: f64,
    pub sup_rho2: f64,
    pub argsup_bin: Option<usize>,
}

/// Smallest `ξ` with `ρ^(1) ≤ ξ` and `sup ρ^(2) ≤ ξ²`.
pub fn ruelle_bound_fit(est: &CorrelationEstimate) -> RuelleFit {
    let (arg, sup) = est
        .rho2
        .iter()
        .copied()
        .enumerate()
        .fold((None, 0.0f64), |(a, m), (i, v)| if v > m { (Some(i), v) } else { (a, m) });
    let rho1 = if est.rho1.is_finite() { est.rho1 } else { 0.0 };
    RuelleFit { xi: rho1.max(sup.sqrt()), rho1, sup_rho2: sup, argsup_bin: arg }
}

/// Bounded test function on the GNZ region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    Constant { value: f64 },
    /// `offset + slope · x_axis`
    Linear { offset: f64, slope: f64, axis: usize },
    Gaussian { centre: f64, width: f64, axis: usize },
}

impl TestFunction {
    pub fn eval(&self, x: &Point) -> f64 {
        match *self {
            TestFunction::Constant { value } => value,
            TestFunction::Linear { offset, slope, axis } => offset + slope * x[axis],
            TestFunction::Gaussian { centre, width, axis } => (-((x[axis] - centre) / width).powi(2) / 2.0).exp(),
        }
    }
}

/// Region `Δ = [lo, hi]^d` for the GNZ check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnzRow {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub sigma: f64,
}

impl GnzRow {
    pub fn significance(&self) -> f64 {
        self.residual.abs() / self.sigma
    }
}

/// Compares `⟨Σ_{x∈γ∩Δ} f(x)⟩` with `z ∫_Δ f(x) ⟨e^{-βW_u(x;γ)}⟩ dx`, both
/// from the same frames. The insertion integral uses midpoint nodes; `mu_shift`
/// perturbs the activity on the right side only.
#[allow(clippy::too_many_arguments)]
pub fn gnz_residual(
    samples: &SampleSet,
    potential: &PairPotential,
    region: Region,
    core_margin: f64,
    test_functions: &[TestFunction],
    nodes_per_axis: usize,
    mu_shift: f64,
) -> Result<Vec<GnzRow>> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let bx = samples.bx;
    let d = bx.d();
    let w = bx.half_width - core_margin;
    if !(region.lo < region.hi && region.lo >= -w && region.hi <= w) {
        return Err(Error::Domain(format!(
            "Δ = [{}, {}]^{d} is not inside the core sub-box [-{w}, {w}]^{d}",
            region.lo, region.hi
        )));
    }
    let z = (samples.beta * (samples.mu + mu_shift)).exp();
    let h = (region.hi - region.lo) / nodes_per_axis as f64;
    let cell = h.powi(d as i32);
    let nodes: Vec<Point> = (0..nodes_per_axis.pow(d as u32))
        .map(|mut idx| {
            let mut p = [0.0; 3];
            for c in p.iter_mut().take(d) {
                *c = region.lo + (idx % nodes_per_axis) as f64 * h + 0.5 * h;
                idx /= nodes_per_axis;
            }
            p
        })
        .collect();
    let inside = |x: &Point| x.iter().take(d).all(|c| *c >= region.lo && *c <= region.hi);

    let nt = test_functions.len();
    let mut per_frame: Vec<Vec<f64>> = vec![Vec::with_capacity(samples.len()); 3 * nt];
    for frame in &samples.frames {
        let conf = Configuration { bx, positions: frame.clone() };
        let boltz: Vec<f64> = nodes
            .iter()
            .map(|x| interaction_energy(x, &conf, potential, None).boltzmann(samples.beta))
            .collect();
        for (t, f) in test_functions.iter().enumerate() {
            let lhs = neumaier_sum(frame.iter().filter(|x| inside(x)).map(|x| f.eval(x)));
            let rhs = z * cell * neumaier_sum(nodes.iter().zip(&boltz).map(|(x, b)| f.eval(x) * b));
            per_frame[3 * t].push(lhs);
            per_frame[3 * t + 1].push(rhs);
            per_frame[3 * t + 2].push(lhs - rhs);
        }
    }
    let block = |series: &[f64]| -> BlockEstimate {
        let means: Vec<f64> = samples
            .block_ranges()
            .into_iter()
            .map(|r| neumaier_sum(series[r.clone()].iter().copied()) / r.len() as f64)
            .collect();
        from_block_means(&means)
    };
    Ok((0..nt)
        .map(|t| {
            let res = block(&per_frame[3 * t + 2]);
            GnzRow {
                lhs: block(&per_frame[3 * t]).mean,
                rhs: block(&per_frame[3 * t + 1]).mean,
                residual: res.mean,
                sigma: res.sigma,
            }
        })
        .collect())
}
