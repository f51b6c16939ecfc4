//! Specific energy, entropy and grand potential, the finite-volume variational
//! gap and the Henderson four-term check.

use serde::{Deserialize, Serialize};

use crate::energy::Energy;
use crate::error::{Error, Result};
use crate::estimators::CorrelationEstimate;
use crate::gcmc::SampleSet;
use crate::oracle::{JanossyTable, Oracle};
use crate::potentials::{AdmissibilityCertificate, PairPotential};
use crate::stats::{combine_sigma, neumaier_sum};
use crate::system::Point;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Oracle,
    Sampled,
    Mixed,
}

/// Per-volume thermodynamic fields. `entropy` is `(1/|Λ|) Σ_m (1/m!) ∫ j log j`,
/// so the ideal gas has `S = z log z - z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermoReport {
    pub beta: f64,
    pub mu: f64,
    pub rho: f64,
    pub rho_err: f64,
    pub energy: f64,
    pub energy_err: f64,
    pub entropy: f64,
    pub entropy_err: f64,
    pub omega: f64,
    pub omega_err: f64,
    pub pressure: Option<f64>,
    pub pressure_err: Option<f64>,
    pub provenance: Provenance,
    /// Values are for a finite box and stand in for the infinite-volume ones.
    pub finite_volume_proxy: bool,
}

impl ThermoReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        beta: f64,
        mu: f64,
        (rho, rho_err): (f64, f64),
        (energy, energy_err): (f64, f64),
        (entropy, entropy_err): (f64, f64),
        provenance: Provenance,
    ) -> Result<Self> {
        let omega = grand_potential(beta, mu, rho, energy, entropy)?;
        let omega_err = (mu * rho_err).hypot(energy_err).hypot(entropy_err / beta);
        Ok(ThermoReport {
            beta,
            mu,
            rho,
            rho_err,
            energy,
            energy_err,
            entropy,
            entropy_err,
            omega,
            omega_err,
            pressure: None,
            pressure_err: None,
            provenance,
            finite_volume_proxy: true,
        })
    }

    /// Relative defect of `Ω = μρ - E - S/β` among the stored fields.
    pub fn identity_defect(&self) -> f64 {
        let again = self.mu * self.rho - self.energy - self.entropy / self.beta;
        (self.omega - again).abs() / self.omega.abs().max(f64::MIN_POSITIVE)
    }
}

/// `Ω = μρ - E - S/β`.
pub fn grand_potential(beta: f64, mu: f64, rho: f64, energy: f64, entropy: f64) -> Result<f64> {
    if ![beta, mu, rho, energy, entropy].iter().all(|v| v.is_finite()) || beta <= 0.0 {
        return Err(Error::Domain("grand potential needs finite inputs and β > 0".into()));
    }
    Ok(mu * rho - energy - entropy / beta)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    pub value: f64,
    pub sigma: f64,
    pub tail_bound: f64,
}

/// Separation at which to evaluate `u` for a bin; bins straddling the core
/// use the midpoint of their part outside it.
fn eval_radius(lo: f64, hi: f64, core: f64) -> f64 {
    let mid = 0.5 * (lo + hi);
    if mid < core && hi > core {
        0.5 * (core + hi)
    } else {
        mid
    }
}

/// `½ ∫ u ρ^(2) |S_d| r^{d-1} dr` over the bins by the midpoint rule.
pub fn pair_energy_integral(potential: &PairPotential, est: &CorrelationEstimate) -> Result<(f64, f64)> {
    let w = est.binning.width();
    let surf = est.dim.unit_surface();
    let d = est.dim.get() as i32;
    let core = potential.hard_core_radius();
    let mut terms = Vec::with_capacity(est.binning.bins);
    let mut var = 0.0;
    for b in 0..est.binning.bins {
        let (lo, hi) = (b as f64 * w, (b + 1) as f64 * w);
        let r = eval_radius(lo, hi, core);
        let shell = 0.5 * surf * r.powi(d - 1) * w;
        match potential.energy(r) {
            Energy::Infinite => {
                if est.rho2[b] != 0.0 {
                    return Err(Error::InvalidConfiguration(format!(
                        "ρ2 = {} in bin [{lo}, {hi}) inside the hard core",
                        est.rho2[b]
                    )));
                }
            }
            Energy::Finite(u) => {
                terms.push(u * est.rho2[b] * shell);
                var += (u * est.rho2_err[b] * shell).powi(2);
            }
        }
    }
    Ok((neumaier_sum(terms), var.sqrt()))
}

/// Specific energy from a pair-correlation table. The tail beyond `r_max` is
/// zero when the potential is cut off inside the table, and otherwise bounded
/// by `½ ξ² ∫_{r_max}^∞ ψ |S_d| r^{d-1} dr` with the certificate's majorant.
pub fn specific_energy(
    potential: &PairPotential,
    est: &CorrelationEstimate,
    certificate: Option<&AdmissibilityCertificate>,
    ruelle_xi: f64,
) -> Result<EnergyEstimate> {
    let (value, sigma) = pair_energy_integral(potential, est)?;
    let r_max = est.binning.r_max;
    let tail_bound = if potential.cutoff_radius() <= r_max {
        0.0
    } else {
        let cert = certificate.ok_or_else(|| {
            Error::Precondition(format!(
                "table ends at {r_max} inside the cutoff {}; a tail certificate is needed",
                potential.cutoff_radius()
            ))
        })?;
        0.5 * ruelle_xi * ruelle_xi * cert.tail_integral(r_max.max(cert.r0), est.dim)
    };
    Ok(EnergyEstimate { value, sigma, tail_bound })
}

fn pair_sum(potential: &PairPotential, frame: &[Point], dist: impl Fn(&Point, &Point) -> f64) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..frame.len() {
        for j in 0..i {
            match potential.energy(dist(&frame[i], &frame[j])) {
                Energy::Finite(e) => total += e,
                Energy::Infinite => {
                    return Err(Error::InvalidConfiguration("sampled frame contains an overlap".into()))
                }
            }
        }
    }
    Ok(total)
}

/// `(1/|Λ|)⟨½ Σ_{x≠y} u(x-y)⟩` with block σ. With `window = Some(w)` only
/// particles in `[-w, w]^d` count, pairs are taken without images, and the
/// volume is `(2w)^d`.
pub fn specific_energy_finite_volume(
    samples: &SampleSet,
    potential: &PairPotential,
    window: Option<f64>,
) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Ok((0.0, 0.0));
    }
    let bx = samples.bx;
    let d = bx.d();
    let mut per_frame = Vec::with_capacity(samples.len());
    match window {
        None => {
            let vol = bx.volume();
            for f in &samples.frames {
                per_frame.push(pair_sum(potential, f, |a, b| bx.distance(a, b))? / vol);
            }
        }
        Some(w) => {
            if !(w > 0.0 && w <= bx.half_width) {
                return Err(Error::Domain(format!("window {w} must lie in (0, ℓ]")));
            }
            let vol = (2.0 * w).powi(d as i32);
            for f in &samples.frames {
                let inside: Vec<Point> = f.iter().copied().filter(|x| x.iter().take(d).all(|c| c.abs() <= w)).collect();
                let plain = |a: &Point, b: &Point| {
                    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
                };
                per_frame.push(pair_sum(potential, &inside, plain)? / vol);
            }
        }
    }
    let est = samples.block_estimate(|i| per_frame[i]);
    let sigma = if per_frame.iter().all(|v| *v == per_frame[0]) { 0.0 } else { est.sigma };
    Ok((est.mean, sigma))
}

/// `S_Λ = (1/|Λ|) Σ_m (1/m!) ∫ j log j` with the table's tail mass as the
/// truncation diagnostic.
pub fn specific_entropy(table: &JanossyTable, tolerance: f64) -> Result<(f64, f64)> {
    let defect = table.normalization_defect();
    if defect > tolerance {
        return Err(Error::Refusal(format!(
            "Janossy normalisation defect {defect:e} exceeds tolerance {tolerance:e}"
        )));
    }
    Ok((table.entropy_sum() / table.volume, (defect + table.tail_mass) / table.volume))
}

struct Fields {
    rho: f64,
    energy: f64,
    entropy: f64,
    entropy_trunc: f64,
    rel: f64,
}

fn oracle_fields(o: &Oracle) -> Result<Fields> {
    let vol = o.volume();
    let gp = o.grand_partition()?;
    let (own, cross) = o.mean_energies()?;
    let energy = match cross {
        None => own.value / vol,
        Some((Energy::Finite(e), _)) => e / vol,
        Some((Energy::Infinite, _)) => {
            return Err(Error::Refusal(
                "trial measure charges configurations of infinite energy; Ω = -∞".into(),
            ))
        }
    };
    let (entropy, entropy_trunc) = specific_entropy(&o.janossy_table()?, 1e-6)?;
    Ok(Fields { rho: gp.mean_count() / vol, energy, entropy, entropy_trunc, rel: gp.truncation.tail_bound / gp.xi })
}

/// Thermodynamic report for the finite-volume measure of `oracle`. With
/// `energy_of = Some(u)` the energy field is `⟨H_u⟩/|Λ|` under this measure,
/// otherwise it uses the measure's own potential. Each error is the change
/// from one refinement level coarser plus the truncation tail.
pub fn oracle_report(oracle: &Oracle, energy_of: Option<&PairPotential>) -> Result<ThermoReport> {
    let o = match energy_of {
        Some(u) => oracle.clone().with_cross(u.clone())?,
        None => oracle.clone(),
    };
    let mut coarse = o.clone();
    coarse.quad.points_per_axis = (o.quad.points_per_axis / 2).max(1);
    let f = oracle_fields(&o)?;
    let c = oracle_fields(&coarse)?;
    let n_max = o.truncation.n_max as f64;
    let vol = o.volume();
    let mut report = ThermoReport::new(
        o.beta,
        o.mu,
        (f.rho, (f.rho - c.rho).abs() + f.rel * n_max / vol),
        (f.energy, (f.energy - c.energy).abs() + f.rel * f.energy.abs()),
        (f.entropy, (f.entropy - c.entropy).abs() + f.entropy_trunc + f.rel * f.entropy.abs().max(1.0)),
        Provenance::Oracle,
    )?;
    let p = o.pressure()?;
    report.pressure = Some(p.value);
    report.pressure_err = Some(p.error);
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub gap: f64,
    pub sigma: f64,
}

impl Gap {
    pub fn significance(&self) -> f64 {
        self.gap / self.sigma.max(f64::MIN_POSITIVE)
    }
}

/// `p_u - Ω(u, P_v)`; the trial's energy field must already be taken against `u`.
pub fn variational_gap(p_u: (f64, f64), trial: &ThermoReport, beta: f64, mu: f64) -> Result<Gap> {
    if trial.beta != beta || trial.mu != mu {
        return Err(Error::Precondition(format!(
            "trial report is at (β, μ) = ({}, {}), expected ({beta}, {mu})",
            trial.beta, trial.mu
        )));
    }
    Ok(Gap { gap: p_u.0 - trial.omega, sigma: combine_sigma(p_u.1, trial.omega_err) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HendersonCheck {
    pub sum: f64,
    /// Largest magnitude among the four terms.
    pub scale: f64,
    pub sigma: f64,
}

impl HendersonCheck {
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            0.0
        } else {
            self.sum.abs() / self.scale
        }
    }
}

/// `-E(u,P_v) + E(u,P_u) - E(v,P_u) + E(v,P_v)` on two tables sharing one binning.
pub fn henderson_cross_check(
    u: &PairPotential,
    v: &PairPotential,
    rho2_u: &CorrelationEstimate,
    rho2_v: &CorrelationEstimate,
) -> Result<HendersonCheck> {
    if !rho2_u.same_binning(rho2_v) {
        return Err(Error::Precondition("ρ2 tables use different binnings".into()));
    }
    let t = [
        pair_energy_integral(u, rho2_v)?,
        pair_energy_integral(u, rho2_u)?,
        pair_energy_integral(v, rho2_u)?,
        pair_energy_integral(v, rho2_v)?,
    ];
    let sum = (t[1].0 - t[0].0) + (t[3].0 - t[2].0);
    let scale = t.iter().map(|x| x.0.abs()).fold(0.0, f64::max);
    let sigma = t.iter().map(|x| x.1 * x.1).sum::<f64>().sqrt();
    Ok(HendersonCheck { sum, scale, sigma })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::Binning;
    use crate::oracle::QuadratureSpec;
    use crate::potentials::SpaceDim;
    use crate::system::BoxSpec;

    #[test]
    fn grand_potential_examples() {
        assert_eq!(grand_potential(1.0, 0.0, 1.0, 0.0, -1.0).unwrap(), 1.0);
        assert_eq!(grand_potential(1.0, 0.3, 0.0, 0.0, 0.0).unwrap(), 0.0);
        let a = grand_potential(2.0, 0.1, 0.7, -0.2, 0.4).unwrap();
        let b = grand_potential(2.0, 0.35, 0.7, -0.2, 0.4).unwrap();
        assert!((b - a - 0.25 * 0.7).abs() < 1e-15);
        assert!(grand_potential(1.0, 0.0, 1.0, f64::INFINITY, 0.0).is_err());
    }

    #[test]
    fn square_well_energy_by_hand() {
        // u = -1 on [1, 2) in 1D, ρ2 ≡ 1 on [0, 3)
        let well = PairPotential::tabulated(
            vec![[0.0, 0.0], [1.0 - 1e-12, 0.0], [1.0, -1.0], [2.0 - 1e-12, -1.0], [2.0, 0.0]],
            Some(0.0),
        )
        .unwrap();
        let binning = Binning::new(300, 3.0).unwrap();
        let est = CorrelationEstimate::from_table(binning, SpaceDim::ONE, 1.0, vec![1.0; 300]).unwrap();
        let e = specific_energy(&well, &est, None, 1.0).unwrap();
        assert!((e.value + 1.0).abs() < 1e-9, "{e:?}");
        assert_eq!(e.tail_bound, 0.0);
        let ideal = specific_energy(&PairPotential::ideal(), &est, None, 1.0).unwrap();
        assert_eq!(ideal.value, 0.0);
    }

    #[test]
    fn nonzero_pair_density_inside_core_fails() {
        let rods = PairPotential::hard_core(1.0, None).unwrap();
        let binning = Binning::new(4, 2.0).unwrap();
        let est = CorrelationEstimate::from_table(binning, SpaceDim::ONE, 1.0, vec![0.1, 0.0, 0.5, 0.5]).unwrap();
        assert!(matches!(pair_energy_integral(&rods, &est), Err(Error::InvalidConfiguration(_))));
    }

    #[test]
    fn finite_volume_energy_cases() {
        let bx = BoxSpec::free_1d(2.0);
        let lj = PairPotential::lennard_jones(1.0, 1.0, Some(2.5)).unwrap();
        let empty = SampleSet::from_frames(bx, 1.0, 0.0, vec![vec![]; 40], vec![0.0; 40], 32);
        assert_eq!(specific_energy_finite_volume(&empty, &lj, None).unwrap(), (0.0, 0.0));
        let pair = vec![[-0.6, 0.0, 0.0], [0.6, 0.0, 0.0]];
        let set = SampleSet::from_frames(bx, 1.0, 0.0, vec![pair; 40], vec![0.0; 40], 32);
        let (e, s) = specific_energy_finite_volume(&set, &lj, None).unwrap();
        let expected = lj.energy(1.2).finite().unwrap() / 4.0;
        assert!((e - expected).abs() < 1e-15);
        assert_eq!(s, 0.0);
    }

    #[test]
    fn ideal_entropy_closed_form() {
        for (z, exact) in [(1.0f64, -1.0f64), (std::f64::consts::E, 0.0), (0.5, 0.5 * 0.5f64.ln() - 0.5)] {
            let table = JanossyTable::ideal(z, 2.0, 1e-12).unwrap();
            let (s, _) = specific_entropy(&table, 1e-8).unwrap();
            assert!((s - exact).abs() < 1e-9, "z={z}: {s} vs {exact}");
        }
        let tiny = JanossyTable::ideal(1e-9, 2.0, 1e-12).unwrap();
        assert!(specific_entropy(&tiny, 1e-9).unwrap().0.abs() < 1e-6);
    }

    #[test]
    fn henderson_identities() {
        let u = PairPotential::lennard_jones(1.0, 1.0, Some(2.5)).unwrap();
        let v = PairPotential::lennard_jones(1.5, 1.0, Some(2.5)).unwrap();
        let binning = Binning::new(50, 2.5).unwrap();
        let table: Vec<f64> = (0..50).map(|b| if b < 18 { 0.0 } else { 0.3 + 0.01 * b as f64 }).collect();
        let other: Vec<f64> = table.iter().map(|x| x * 1.1).collect();
        let a = CorrelationEstimate::from_table(binning, SpaceDim::ONE, 0.5, table).unwrap();
        let b = CorrelationEstimate::from_table(binning, SpaceDim::ONE, 0.5, other).unwrap();
        assert!(henderson_cross_check(&u, &v, &a, &a).unwrap().relative() <= 1e-12);
        assert!(henderson_cross_check(&u, &u, &a, &b).unwrap().relative() <= 1e-12);
        assert!(henderson_cross_check(&u, &v, &a, &b).unwrap().relative() > 1e-6);
        let c = CorrelationEstimate::from_table(Binning::new(25, 2.5).unwrap(), SpaceDim::ONE, 0.5, vec![0.0; 25]).unwrap();
        assert!(matches!(henderson_cross_check(&u, &v, &a, &c), Err(Error::Precondition(_))));
    }

    #[test]
    fn own_and_foreign_gaps() {
        let bx = BoxSpec::free_1d(1.0);
        let quad = QuadratureSpec { points_per_axis: 200, ..QuadratureSpec::default() };
        let u = PairPotential::hard_core(0.5, None).unwrap();
        let v = PairPotential::hard_core(1.0, None).unwrap();
        let ou = Oracle::new(bx, 1.0, 0.0, u.clone(), quad).unwrap();
        let ov = Oracle::new(bx, 1.0, 0.0, v, quad).unwrap();
        let p = ou.pressure().unwrap();
        let own = oracle_report(&ou, None).unwrap();
        assert!(own.identity_defect() < 1e-14);
        let g = variational_gap((p.value, p.error), &own, 1.0, 0.0).unwrap();
        assert!(g.gap.abs() <= 3.0 * g.sigma + 1e-12, "{g:?}");
        let foreign = oracle_report(&ov, Some(&u)).unwrap();
        let g = variational_gap((p.value, p.error), &foreign, 1.0, 0.0).unwrap();
        assert!(g.significance() > 3.0, "{g:?}");
        assert!(variational_gap((p.value, p.error), &foreign, 2.0, 0.0).is_err());
    }
}
