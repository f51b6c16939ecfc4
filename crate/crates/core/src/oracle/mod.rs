//! Quadrature-exact grand-canonical quantities for tiny free-boundary systems.
//!
//! Everything is built from the conditional configuration integrals
//!
//! ```text
//! a_n(x_m) = (1/n!) ∫_{Λ^n} e^{-β H(x_m, y_n)} dy_n ,   n = 0..=n_max
//! ```
//!
//! evaluated at two refinement levels. The partition function, correlation
//! functions, Janossy densities and energies are finite sums over these. The
//! series in `n` is cut at `n_max`, chosen from the stability constant so that
//! the discarded tail is below the requested tolerance.
//!
//! Two engines compute `a_n`: an ordered-chain transfer quadrature for 1D
//! nearest-neighbour potentials (hard rods, rods with short wells, the ideal
//! gas) and a brute-force tensor grid for everything else.

mod chain;
mod grid;
pub mod janossy;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_lr;

use crate::energy::Energy;
use crate::error::{Error, Result};
use crate::potentials::{estimate_stability_constant, PairPotential, StabilityCertificate};
use crate::system::{Boundary, BoxSpec, Point};

use chain::{ChainModel, End, Series};
use grid::GridModel;

pub use janossy::{janossy_series, JanossyEntry, JanossyTable, JanossyValue};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Midpoint,
    GaussLegendre,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    pub scheme: Scheme,
    /// Grid points per axis at the coarsest level (cells of the whole box for
    /// the chain engine).
    pub points_per_axis: usize,
    /// Number of levels, each doubling the resolution; at least 2.
    pub refinement_levels: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { scheme: Scheme::Midpoint, points_per_axis: 400, refinement_levels: 2 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.points_per_axis < 8 {
            return Err(Error::config("quadrature.points_per_axis", "must be at least 8"));
        }
        if self.refinement_levels < 2 {
            return Err(Error::config("quadrature.refinement_levels", "must be at least 2"));
        }
        Ok(())
    }

    fn level_points(&self) -> Vec<usize> {
        (0..self.refinement_levels).map(|i| self.points_per_axis << i).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationBound {
    pub n_max: usize,
    /// Bound on `Σ_{N > n_max} (z |Λ| e^{βB})^N / N!`, or zero when packing
    /// forbids more than `n_max` particles.
    pub tail_bound: f64,
}

/// `Σ_{N > n} x^N / N! = e^x · P(n + 1, x)` with `P` the regularised lower
/// incomplete gamma function.
pub fn poisson_tail(x: f64, n: usize) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    x.exp() * gamma_lr(n as f64 + 1.0, x)
}

/// Smallest `n_max` whose tail bound is at most `tol`.
pub fn choose_truncation(x: f64, tol: f64, packing_limit: Option<usize>) -> Result<TruncationBound> {
    const N_CAP: usize = 10_000;
    for n in 0..=N_CAP {
        if packing_limit.is_some_and(|p| n >= p) {
            return Ok(TruncationBound { n_max: n, tail_bound: 0.0 });
        }
        let tail = poisson_tail(x, n);
        if tail <= tol {
            return Ok(TruncationBound { n_max: n, tail_bound: tail });
        }
    }
    Err(Error::Refusal(format!(
        "truncation tolerance {tol:e} needs n_max > {N_CAP}"
    )))
}

/// Upper bound on the number of hard-core particles that fit in the box.
pub fn packing_limit(bx: &BoxSpec, core: f64) -> Option<usize> {
    if core <= 0.0 {
        return None;
    }
    let d = bx.d();
    let per_axis = if d == 1 {
        (bx.side() / core).floor() + 1.0
    } else {
        (bx.side() * (d as f64).sqrt() / core).ceil()
    };
    Some(per_axis.powi(d as i32) as usize)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Chain,
    Grid,
}

/// A value with its combined quadrature and truncation error bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounded {
    pub value: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrandPartition {
    pub xi: f64,
    pub error_bound: f64,
    pub quadrature_error: f64,
    pub truncation: TruncationBound,
    /// `z^N Z_N / N!` for `N = 0..=n_max` at the finest level.
    pub weights: Vec<f64>,
    pub engine: Engine,
}

impl GrandPartition {
    pub fn mean_count(&self) -> f64 {
        self.weights.iter().enumerate().map(|(n, w)| n as f64 * w).sum::<f64>() / self.xi
    }
}

/// Default ceiling on elementary kernel evaluations.
pub const DEFAULT_COST_CEILING: f64 = 2e9;
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Finite-volume grand-canonical system with empty boundary conditions.
#[derive(Clone, Debug)]
pub struct Oracle {
    pub bx: BoxSpec,
    pub beta: f64,
    pub mu: f64,
    pub potential: PairPotential,
    pub quad: QuadratureSpec,
    pub tolerance: f64,
    pub cost_ceiling: f64,
    pub stability: StabilityCertificate,
    pub truncation: TruncationBound,
    pub engine: Engine,
    cross: Option<PairPotential>,
}

#[derive(Clone, Debug)]
struct Refined {
    fine: Series,
    coarse: Series,
}

impl Oracle {
    pub fn new(bx: BoxSpec, beta: f64, mu: f64, potential: PairPotential, quad: QuadratureSpec) -> Result<Self> {
        Self::with_limits(bx, beta, mu, potential, quad, DEFAULT_TOLERANCE, DEFAULT_COST_CEILING)
    }

    pub fn with_limits(
        bx: BoxSpec,
        beta: f64,
        mu: f64,
        potential: PairPotential,
        quad: QuadratureSpec,
        tolerance: f64,
        cost_ceiling: f64,
    ) -> Result<Self> {
        if bx.boundary != Boundary::Free {
            return Err(Error::Precondition(
                "the oracle integrates the free-boundary measure only".into(),
            ));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::Domain(format!("beta must be positive, got {beta}")));
        }
        if !mu.is_finite() {
            return Err(Error::Domain("mu must be finite".into()));
        }
        if !(tolerance > 0.0) {
            return Err(Error::Refusal(format!(
                "truncation tolerance {tolerance:e} can never be met; no finite n_max suffices"
            )));
        }
        quad.validate()?;
        let stability = estimate_stability_constant(&potential, bx.dim, 40, 0);
        let z = (beta * mu).exp();
        let x = z * bx.volume() * (beta * stability.b).exp();
        let truncation = choose_truncation(x, tolerance, packing_limit(&bx, potential.hard_core_radius()))?;
        let engine = if bx.d() == 1 && chain::nearest_neighbour(&potential) {
            Engine::Chain
        } else {
            Engine::Grid
        };
        let oracle = Oracle {
            bx,
            beta,
            mu,
            potential,
            quad,
            tolerance,
            cost_ceiling,
            stability,
            truncation,
            engine,
            cross: None,
        };
        let cost = oracle.cost();
        if cost > cost_ceiling {
            return Err(Error::Refusal(format!(
                "oracle needs n_max = {} for tail bound {:e}; estimated cost {cost:.3e} exceeds ceiling {cost_ceiling:.3e}",
                truncation.n_max, truncation.tail_bound
            )));
        }
        Ok(oracle)
    }

    /// Adds a second potential whose energy is averaged against this measure.
    pub fn with_cross(mut self, cross: PairPotential) -> Result<Self> {
        if self.engine == Engine::Chain && !cross.is_ideal()
            && cross.cutoff_radius() > 2.0 * self.potential.hard_core_radius()
        {
            self.engine = Engine::Grid;
            let cost = self.cost();
            if cost > self.cost_ceiling {
                return Err(Error::Refusal(format!(
                    "cross energy needs the grid engine at cost {cost:.3e} (ceiling {:.3e})",
                    self.cost_ceiling
                )));
            }
        }
        self.cross = Some(cross);
        Ok(self)
    }

    pub fn activity(&self) -> f64 {
        (self.beta * self.mu).exp()
    }

    pub fn volume(&self) -> f64 {
        self.bx.volume()
    }

    fn cost(&self) -> f64 {
        let finest = *self.quad.level_points().last().unwrap();
        match self.engine {
            Engine::Chain => {
                let h = self.bx.side() / finest as f64;
                let reach = (self.potential.cutoff_radius() / h).ceil() + 2.0;
                self.quad.refinement_levels as f64 * self.truncation.n_max as f64 * finest as f64 * reach
            }
            Engine::Grid => self
                .quad
                .level_points()
                .iter()
                .map(|&p| grid::grid_cost(p, self.bx.d(), self.truncation.n_max))
                .sum(),
        }
    }

    fn series(&self, fixed: &[Point], points: usize) -> Series {
        let n_max = self.truncation.n_max;
        match self.engine {
            Engine::Chain => {
                let model = ChainModel::new(&self.potential, self.cross.as_ref(), self.beta);
                let l = self.bx.half_width;
                let cells = |len: f64| ((points as f64 * len / self.bx.side()).ceil() as usize).max(8);
                if fixed.is_empty() {
                    return model.gap(self.bx.side(), End::Wall, End::Wall, n_max, points);
                }
                let mut xs: Vec<f64> = fixed.iter().map(|p| p[0]).collect();
                xs.sort_by(f64::total_cmp);
                let mut acc = model.gap(xs[0] + l, End::Wall, End::Particle, n_max, cells(xs[0] + l));
                for w in xs.windows(2) {
                    let len = w[1] - w[0];
                    acc = acc.convolve(&model.gap(len, End::Particle, End::Particle, n_max, cells(len)), n_max);
                }
                let last = l - xs[xs.len() - 1];
                acc.convolve(&model.gap(last, End::Particle, End::Wall, n_max, cells(last)), n_max)
            }
            Engine::Grid => GridModel {
                bx: self.bx,
                measure: &self.potential,
                cross: self.cross.as_ref(),
                beta: self.beta,
            }
            .conditional(fixed, n_max, self.quad.scheme, points),
        }
    }

    fn refined(&self, fixed: &[Point]) -> Result<Refined> {
        if let Some(p) = fixed.iter().find(|p| !self.bx.contains(p)) {
            return Err(Error::Domain(format!("point {p:?} lies outside the box")));
        }
        let levels = self.quad.level_points();
        let n = levels.len();
        Ok(Refined {
            fine: self.series(fixed, levels[n - 1]),
            coarse: self.series(fixed, levels[n - 2]),
        })
    }

    /// `z^n a_n` summed over `n`, with its quadrature and truncation error.
    fn grand_sum(&self, r: &Refined, m: usize) -> Bounded {
        let z = self.activity();
        let sum = |s: &Series| s.z.iter().enumerate().map(|(n, a)| z.powi(n as i32) * a).sum::<f64>();
        let fine = sum(&r.fine);
        let quad_err = (fine - sum(&r.coarse)).abs();
        let trunc = (self.beta * self.stability.b * m as f64).exp() * self.truncation.tail_bound;
        Bounded { value: fine, error: quad_err + trunc }
    }

    pub fn grand_partition(&self) -> Result<GrandPartition> {
        let r = self.refined(&[])?;
        let z = self.activity();
        let fine: Vec<f64> = r.fine.z.iter().enumerate().map(|(n, a)| z.powi(n as i32) * a).collect();
        let coarse: f64 = r.coarse.z.iter().enumerate().map(|(n, a)| z.powi(n as i32) * a).sum();
        let xi: f64 = fine.iter().sum();
        let quadrature_error = (xi - coarse).abs();
        Ok(GrandPartition {
            xi,
            error_bound: quadrature_error + self.truncation.tail_bound,
            quadrature_error,
            truncation: self.truncation,
            weights: fine,
            engine: self.engine,
        })
    }

    /// `p_Λ = log Ξ / (β |Λ|)`.
    pub fn pressure(&self) -> Result<Bounded> {
        let gp = self.grand_partition()?;
        let scale = self.beta * self.volume();
        Ok(Bounded { value: gp.xi.ln() / scale, error: gp.error_bound / gp.xi / scale })
    }

    /// `⟨N⟩ = z ∂ log Ξ / ∂z` by a central difference in `log z`.
    pub fn mean_count_fd(&self, rel_step: f64) -> Result<Bounded> {
        let shifted = |dmu: f64| -> Result<GrandPartition> {
            let mut o = self.clone();
            o.mu += dmu;
            o.grand_partition()
        };
        let dmu = rel_step / self.beta;
        let (hi, lo) = (shifted(dmu)?, shifted(-dmu)?);
        let value = (hi.xi.ln() - lo.xi.ln()) / (2.0 * rel_step);
        let error = (hi.error_bound / hi.xi + lo.error_bound / lo.xi) / (2.0 * rel_step);
        Ok(Bounded { value, error })
    }

    /// `ρ^(m)(x_m)`; the empty tuple gives 1.
    pub fn correlation(&self, points: &[Point]) -> Result<Bounded> {
        let m = points.len();
        if m == 0 {
            return Ok(Bounded { value: 1.0, error: 0.0 });
        }
        let gp = self.grand_partition()?;
        let s = self.grand_sum(&self.refined(points)?, m);
        let pre = self.activity().powi(m as i32) / gp.xi;
        let value = pre * s.value;
        let error = pre * s.error + value * gp.error_bound / gp.xi;
        Ok(Bounded { value, error })
    }

    /// `ρ^(m)` at each of the supplied `m`-tuples.
    pub fn correlation_function(&self, m: usize, tuples: &[Vec<Point>]) -> Result<Vec<Bounded>> {
        tuples
            .iter()
            .map(|t| {
                if t.len() != m {
                    return Err(Error::Domain(format!("expected {m}-tuples, got {}", t.len())));
                }
                self.correlation(t)
            })
            .collect()
    }

    /// Finite-volume density `z^m e^{-βH(x_m)} / Ξ`.
    pub fn janossy_direct(&self, points: &[Point]) -> Result<Bounded> {
        let gp = self.grand_partition()?;
        let mut h = Energy::ZERO;
        for i in 0..points.len() {
            for j in 0..i {
                h += self.potential.energy(self.bx.distance(&points[i], &points[j]));
            }
        }
        let value = self.activity().powi(points.len() as i32) * h.boltzmann(self.beta) / gp.xi;
        Ok(Bounded { value, error: value * gp.error_bound / gp.xi })
    }

    /// `∫_{Λ^k} ρ^(m+k)(x_m, y_k) dy_k` for `k = 0..=n_max`.
    pub fn correlation_moments(&self, points: &[Point]) -> Result<Vec<Bounded>> {
        let m = points.len();
        let gp = self.grand_partition()?;
        let r = self.refined(points)?;
        let z = self.activity();
        let zm = z.powi(m as i32);
        let n_max = self.truncation.n_max;
        let trunc = (self.beta * self.stability.b * m as f64).exp() * self.truncation.tail_bound;
        Ok((0..=n_max)
            .map(|k| {
                let moment = |s: &Series| -> f64 {
                    (k..=n_max)
                        .map(|n| z.powi(n as i32) * s.z[n] * falling(n, k))
                        .sum::<f64>()
                };
                let fine = moment(&r.fine);
                let value = zm * fine / gp.xi;
                let error = zm * ((fine - moment(&r.coarse)).abs() + trunc) / gp.xi
                    + value * gp.error_bound / gp.xi;
                Bounded { value, error }
            })
            .collect())
    }

    /// `Σ_{x ∈ Λ} ρ^(1)` and `ρ^(2)` suprema over a uniform probe grid, giving
    /// the smallest `ξ` with `sup ρ^(m) ≤ ξ^m` for `m ≤ 2`.
    pub fn ruelle_fit(&self, probes: usize) -> Result<f64> {
        let l = self.bx.half_width;
        let d = self.bx.d();
        let axis: Vec<f64> = (0..probes).map(|i| -l + (i as f64 + 0.5) * 2.0 * l / probes as f64).collect();
        let mut pts = Vec::new();
        for idx in 0..probes.pow(d as u32) {
            let mut p = [0.0; 3];
            let mut rem = idx;
            for c in p.iter_mut().take(d) {
                *c = axis[rem % probes];
                rem /= probes;
            }
            pts.push(p);
        }
        let mut rho1 = 0.0f64;
        let mut rho2 = 0.0f64;
        for (i, a) in pts.iter().enumerate() {
            rho1 = rho1.max(self.correlation(&[*a])?.value);
            for b in pts.iter().skip(i + 1) {
                rho2 = rho2.max(self.correlation(&[*a, *b])?.value);
            }
        }
        Ok(rho1.max(rho2.sqrt()))
    }

    /// Janossy masses from the alternating series and entropy integrals from
    /// the direct finite-volume density.
    pub fn janossy_table(&self) -> Result<JanossyTable> {
        let gp = self.grand_partition()?;
        let r = self.refined(&[])?;
        let z = self.activity();
        let n_max = self.truncation.n_max;
        let ln_z = z.ln();
        let ln_xi = gp.xi.ln();
        let a: Vec<f64> = (0..=n_max).map(|n| z.powi(n as i32) * r.fine.z[n]).collect();
        let au: Vec<f64> = (0..=n_max).map(|n| z.powi(n as i32) * r.fine.u[n]).collect();
        // ∫_{Λ^j} ρ^(j) = (1/Ξ) Σ_{n≥j} a_n n!/(n-j)!
        let moment = |j: usize| -> f64 { (j..=n_max).map(|n| a[n] * falling(n, j)).sum::<f64>() / gp.xi };
        let mut entries = Vec::with_capacity(n_max + 1);
        for m in 0..=n_max {
            let mut mass = 0.0;
            let mut fact_k = 1.0;
            for k in 0..=(n_max - m) {
                if k > 0 {
                    fact_k *= k as f64;
                }
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                mass += sign * moment(m + k) / fact_k;
            }
            mass /= factorial(m);
            let entropy = if a[m] > 0.0 {
                ((m as f64 * ln_z - ln_xi) * a[m] - self.beta * au[m]) / gp.xi
            } else {
                0.0
            };
            entries.push(JanossyEntry { m, mass, entropy_integral: entropy });
        }
        Ok(JanossyTable::new(self.volume(), entries, self.truncation.tail_bound / gp.xi))
    }

    /// `⟨H_measure⟩` and `⟨H_cross⟩` under this measure, each with an error bound.
    pub fn mean_energies(&self) -> Result<(Bounded, Option<(Energy, f64)>)> {
        let gp = self.grand_partition()?;
        let r = self.refined(&[])?;
        let z = self.activity();
        let avg = |v: &[f64]| v.iter().enumerate().map(|(n, a)| z.powi(n as i32) * a).sum::<f64>() / gp.xi;
        let u_fine = avg(&r.fine.u);
        let u_err = (u_fine - avg(&r.coarse.u)).abs() + u_fine.abs() * gp.error_bound / gp.xi;
        let cross = self.cross.as_ref().map(|_| {
            let x_fine = avg(&r.fine.x);
            if x_fine.is_infinite() {
                (Energy::Infinite, 0.0)
            } else {
                let err = (x_fine - avg(&r.coarse.x)).abs() + x_fine.abs() * gp.error_bound / gp.xi;
                (Energy::Finite(x_fine), err)
            }
        });
        Ok((Bounded { value: u_fine, error: u_err }, cross))
    }
}

fn falling(n: usize, k: usize) -> f64 {
    ((n - k + 1)..=n).map(|i| i as f64).product()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::SpaceDim;

    #[test]
    fn ideal_tail_bound_closed_form() {
        // x = z|Λ| = 4: tail after 20 terms, independently summed
        let direct: f64 = (21..60).map(|n| 4f64.powi(n) / factorial(n as usize)).sum();
        let t = poisson_tail(4.0, 20);
        assert!((t - direct).abs() < 1e-3 * direct);
    }

    #[test]
    fn truncation_respects_packing() {
        let bx = BoxSpec::free_1d(2.0);
        assert_eq!(packing_limit(&bx, 1.0), Some(5));
        let t = choose_truncation(4.0, 1e-12, Some(5)).unwrap();
        assert_eq!(t, TruncationBound { n_max: 5, tail_bound: 0.0 });
    }

    #[test]
    fn periodic_box_is_refused() {
        let e = Oracle::new(BoxSpec::periodic_1d(2.0), 1.0, 0.0, PairPotential::ideal(), QuadratureSpec::default());
        assert!(matches!(e, Err(Error::Precondition(_))));
    }

    #[test]
    fn ideal_gas_partition_function() {
        let o = Oracle::new(BoxSpec::free_1d(2.0), 1.0, 0.0, PairPotential::ideal(), QuadratureSpec::default()).unwrap();
        assert_eq!(o.engine, Engine::Chain);
        let gp = o.grand_partition().unwrap();
        assert!((gp.xi - 4f64.exp()).abs() <= gp.error_bound, "{gp:?}");
        assert!(gp.error_bound < 1e-4 * gp.xi);
        assert!(gp.xi >= 1.0);
        assert!(gp.truncation.tail_bound < 1e-9);
    }

    #[test]
    fn tonks_partition_function() {
        let rods = PairPotential::hard_core(1.0, None).unwrap();
        let o = Oracle::new(BoxSpec::free_1d(2.0), 1.0, 0.0, rods, QuadratureSpec::default()).unwrap();
        let gp = o.grand_partition().unwrap();
        assert!((gp.xi - 10.875).abs() <= gp.error_bound.max(1e-12) + 1e-9, "{gp:?}");
        assert!(gp.error_bound <= 1e-4 * 10.875, "{gp:?}");
        let p = o.pressure().unwrap();
        assert!((p.value - 10.875f64.ln() / 4.0).abs() <= p.error + 1e-12);
    }

    #[test]
    fn grid_engine_agrees_with_chain_for_few_particles() {
        let well = PairPotential::square_well(1.0, 0.5, 1.5).unwrap();
        let bx = BoxSpec::free_1d(1.25);
        let quad = QuadratureSpec { scheme: Scheme::Midpoint, points_per_axis: 60, refinement_levels: 2 };
        let chain = Oracle::new(bx, 1.0, -0.5, well.clone(), quad).unwrap();
        assert_eq!(chain.engine, Engine::Chain);
        let mut grid = chain.clone();
        grid.engine = Engine::Grid;
        grid.quad = QuadratureSpec { scheme: Scheme::Midpoint, points_per_axis: 61, refinement_levels: 2 };
        // z = e^{-1/2}; N ≤ 3 fit, and the three-rod term sees two wells
        let z = (-0.5f64).exp();
        let exact = 1.0 + 2.5 * z + z * z * (0.625 * 0.5f64.exp() + 0.5) + z.powi(3) * std::f64::consts::E * 0.5f64.powi(3) / 6.0;
        let a = chain.grand_partition().unwrap();
        let b = grid.grand_partition().unwrap();
        assert!((a.xi - exact).abs() <= a.error_bound + 1e-12, "{} vs {exact}", a.xi);
        assert!((b.xi - exact).abs() <= b.error_bound, "{} vs {exact} ± {}", b.xi, b.error_bound);
    }

    #[test]
    fn ideal_correlations_are_activity_powers() {
        let z = 0.7f64;
        let o = Oracle::new(BoxSpec::free_1d(1.5), 1.0, z.ln(), PairPotential::ideal(), QuadratureSpec::default()).unwrap();
        for pts in [vec![[0.3, 0.0, 0.0]], vec![[-1.0, 0.0, 0.0], [1.2, 0.0, 0.0]]] {
            let c = o.correlation(&pts).unwrap();
            let exact = z.powi(pts.len() as i32);
            assert!((c.value - exact).abs() < 1e-6 * exact + c.error, "{c:?}");
        }
        assert_eq!(o.correlation(&[]).unwrap().value, 1.0);
    }

    #[test]
    fn grid_engine_in_two_dimensions() {
        let bx = BoxSpec::new(SpaceDim::TWO, 0.5, Boundary::Free).unwrap();
        let quad = QuadratureSpec { scheme: Scheme::GaussLegendre, points_per_axis: 8, refinement_levels: 2 };
        let o = Oracle::with_limits(bx, 1.0, (0.05f64).ln(), PairPotential::ideal(), quad, 1e-6, 1e9).unwrap();
        assert_eq!(o.engine, Engine::Grid);
        let gp = o.grand_partition().unwrap();
        let exact = (0.05f64).exp();
        assert!((gp.xi - exact).abs() <= gp.error_bound + 1e-12, "{gp:?}");
    }

    #[test]
    fn unmeetable_cost_names_n_max() {
        let bx = BoxSpec::new(SpaceDim::TWO, 1.0, Boundary::Free).unwrap();
        match Oracle::new(bx, 1.0, 0.0, PairPotential::ideal(), QuadratureSpec { scheme: Scheme::Midpoint, points_per_axis: 8, refinement_levels: 2 }) {
            Err(Error::Refusal(msg)) => assert!(msg.contains("n_max"), "{msg}"),
            other => panic!("expected refusal, got {other:?}"),
        }
    }
}
