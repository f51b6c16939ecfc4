//! Janossy densities from correlation-function moments.
//!
//! `j^(m)(x_m) = Σ_k (-1)^k / k! ∫_{Λ^k} ρ^(m+k)(x_m, y_k) dy_k`

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JanossyValue {
    pub value: f64,
    pub terms_used: usize,
    /// Bound on the discarded tail of the alternating series.
    pub tail_bound: f64,
    /// Set when the sum came out negative within tolerance.
    pub negative: bool,
}

/// Sums the alternating series given the moments `I_k` for `k = 0..moments.len()`.
///
/// Stops once a term falls below `tol` and the Ruelle bound
/// `ξ^{m+k+1} |Λ|^{k+1} / (k+1)!` on the next term does too. Refuses when the
/// terms are still significant at `k_max`.
pub fn janossy_series(
    m: usize,
    moments: &[f64],
    ruelle_xi: f64,
    volume: f64,
    tol: f64,
    k_max: usize,
) -> Result<JanossyValue> {
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut fact = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..=k_max {
        if k > 0 {
            fact *= k as f64;
        }
        let ik = moments.get(k).copied().unwrap_or(0.0);
        let term = if k % 2 == 0 { ik / fact } else { -ik / fact };
        let t = sum + term;
        comp += if sum.abs() >= term.abs() { (sum - t) + term } else { (term - t) + sum };
        sum = t;
        let next_bound = ruelle_xi.powi((m + k + 1) as i32) * volume.powi(k as i32 + 1) / (fact * (k + 1) as f64);
        let exhausted = k + 1 >= moments.len();
        if term.abs() <= tol && (next_bound <= tol || exhausted) {
            let value = sum + comp;
            let tail = if exhausted { 0.0 } else { next_bound };
            return finish(value, k + 1, tail, tol);
        }
        last = term.abs();
    }
    Err(Error::Refusal(format!(
        "Janossy series for m = {m} has not decayed by k_max = {k_max}: last term {last:e}, tolerance {tol:e}"
    )))
}

fn finish(value: f64, terms_used: usize, tail_bound: f64, tol: f64) -> Result<JanossyValue> {
    let slack = tol + tail_bound;
    if value < -slack {
        return Err(Error::Refusal(format!(
            "Janossy density came out at {value:e}, below zero by more than the error bound {slack:e}"
        )));
    }
    Ok(JanossyValue { value, terms_used, tail_bound, negative: value < 0.0 })
}

/// Ideal gas moments `I_k = z^{m+k} |Λ|^k`.
pub fn ideal_moments(z: f64, volume: f64, m: usize, k_max: usize) -> Vec<f64> {
    (0..=k_max).map(|k| z.powi((m + k) as i32) * volume.powi(k as i32)).collect()
}

/// Per-`m` Janossy mass `(1/m!) ∫ j^(m)` and entropy integral
/// `(1/m!) ∫ j^(m) log j^(m)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JanossyEntry {
    pub m: usize,
    pub mass: f64,
    pub entropy_integral: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JanossyTable {
    pub volume: f64,
    pub entries: Vec<JanossyEntry>,
    /// Mass that may sit beyond the last tabulated `m`.
    pub tail_mass: f64,
}

impl JanossyTable {
    pub fn new(volume: f64, entries: Vec<JanossyEntry>, tail_mass: f64) -> Self {
        JanossyTable { volume, entries, tail_mass }
    }

    /// Ideal gas with activity `z` in volume `|Λ|`, through the alternating
    /// series for the masses and `j^(m) = z^m e^{-z|Λ|}` for the entropy.
    pub fn ideal(z: f64, volume: f64, tol: f64) -> Result<Self> {
        let x = z * volume;
        let m_max = super::choose_truncation(x, tol, None)?.n_max;
        let k_max = m_max + 40 + (4.0 * x) as usize;
        let mut entries = Vec::new();
        let mut fact = 1.0;
        for m in 0..=m_max {
            if m > 0 {
                fact *= m as f64;
            }
            let j = janossy_series(m, &ideal_moments(z, volume, m, k_max), z, volume, tol * 1e-3, k_max)?;
            let mass = j.value * volume.powi(m as i32) / fact;
            let log_j = m as f64 * z.ln() - x;
            entries.push(JanossyEntry { m, mass, entropy_integral: mass * log_j });
        }
        Ok(JanossyTable::new(volume, entries, super::poisson_tail(x, m_max) * (-x).exp()))
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.mass).sum()
    }

    pub fn normalization_defect(&self) -> f64 {
        (1.0 - self.total_mass()).abs()
    }

    /// `Σ_m (1/m!) ∫ j log j`, the negative of the finite-volume entropy times `|Λ|`.
    pub fn entropy_sum(&self) -> f64 {
        self.entries.iter().map(|e| e.entropy_integral).sum()
    }
}
