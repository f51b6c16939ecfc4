//! Ordered-chain transfer quadrature for one-dimensional systems whose
//! interactions only couple neighbouring particles.
//!
//! When `cutoff ≤ 2·core` (or `u ≡ 0`) two particles with another particle
//! between them are at least two cores apart and never interact, so
//! `e^{-βH}` factorises along the ordered chain `y_1 < … < y_n`. Each gap
//! between fixed particles (or walls) is discretised into cells and the
//! cell-integrated chain weights are propagated with a piecewise-constant
//! Galerkin kernel whose entries are integrated exactly up to Gauss–Legendre
//! accuracy on each smooth piece of the potential.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::energy::Energy;
use crate::potentials::PairPotential;

/// Per-gap series indexed by the number `k` of free particles in the gap.
#[derive(Clone, Debug, Default)]
pub(crate) struct Series {
    /// Ordered configuration integrals of `e^{-βH}`.
    pub z: Vec<f64>,
    /// Same, weighted by the measure potential's energy.
    pub u: Vec<f64>,
    /// Same, weighted by the cross potential's energy.
    pub x: Vec<f64>,
}

impl Series {
    fn zeros(n: usize) -> Self {
        Series { z: vec![0.0; n + 1], u: vec![0.0; n + 1], x: vec![0.0; n + 1] }
    }

    /// Product of generating functions, with the energy channels following
    /// the product rule.
    pub fn convolve(&self, other: &Series, n_max: usize) -> Series {
        let mut out = Series::zeros(n_max);
        for (i, &za) in self.z.iter().enumerate() {
            for (j, &zb) in other.z.iter().enumerate() {
                if i + j > n_max {
                    break;
                }
                out.z[i + j] += za * zb;
                out.u[i + j] += self.u[i] * zb + za * other.u[j];
                out.x[i + j] += self.x[i] * zb + za * other.x[j];
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum End {
    Wall,
    Particle,
}

/// True when the potential only couples nearest neighbours on a line.
pub(crate) fn nearest_neighbour(potential: &PairPotential) -> bool {
    potential.is_ideal() || potential.cutoff_radius() <= 2.0 * potential.hard_core_radius()
}

pub(crate) struct ChainModel<'a> {
    measure: &'a PairPotential,
    cross: Option<&'a PairPotential>,
    beta: f64,
    breaks: Vec<f64>,
    range: f64,
    gl: GaussLegendre,
}

/// Kernel channels: `w = e^{-βu}`, `u·w`, `x·w`.
#[derive(Clone, Copy, Default)]
struct Triple {
    w: f64,
    u: f64,
    x: f64,
}

struct Kernels {
    h: f64,
    /// Two-cell kernel `(1/h)∫_{-h}^{h}(h-|s|) g(dh+s) ds`, `d ≥ 1`; entry 0 is
    /// the same-cell ordered kernel `(1/h)∫_0^h (h-r) g(r) dr`.
    pair: Vec<Triple>,
    /// One-sided cell integrals `∫_{jh}^{(j+1)h} g(r) dr`.
    edge: Vec<Triple>,
}

impl Kernels {
    #[inline]
    fn pair(&self, d: usize) -> Triple {
        self.pair.get(d).copied().unwrap_or(Triple { w: self.h, u: 0.0, x: 0.0 })
    }

    #[inline]
    fn edge(&self, j: usize) -> Triple {
        self.edge.get(j).copied().unwrap_or(Triple { w: self.h, u: 0.0, x: 0.0 })
    }
}

impl<'a> ChainModel<'a> {
    pub fn new(measure: &'a PairPotential, cross: Option<&'a PairPotential>, beta: f64) -> Self {
        let mut breaks = measure.breakpoints();
        if let Some(c) = cross {
            breaks.extend(c.breakpoints());
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let range = measure.cutoff_radius().max(cross.map_or(0.0, |c| c.cutoff_radius()));
        ChainModel {
            measure,
            cross,
            beta,
            breaks,
            range,
            gl: GaussLegendre::new(NonZeroUsize::new(10).unwrap()),
        }
    }

    #[inline]
    fn g(&self, r: f64) -> Triple {
        let w = self.measure.boltzmann(r, self.beta);
        if w == 0.0 {
            return Triple::default();
        }
        let u = match self.measure.energy(r) {
            Energy::Finite(e) => e * w,
            Energy::Infinite => 0.0,
        };
        let x = match self.cross.map(|c| c.energy(r)) {
            Some(Energy::Finite(e)) => e * w,
            // cross infinite where the measure has mass: reported separately
            Some(Energy::Infinite) => f64::INFINITY,
            None => 0.0,
        };
        Triple { w, u, x }
    }

    /// Value at a single separation, for adjacent fixed particles.
    pub fn point(&self, r: f64) -> (f64, f64, f64) {
        let t = self.g(r);
        (t.w, t.u, t.x)
    }

    /// `∫_lo^hi weight(r)·g(r) dr`, split at the potential breakpoints.
    fn integrate<F: Fn(f64) -> f64>(&self, lo: f64, hi: f64, weight: F) -> Triple {
        let mut cuts = vec![lo];
        cuts.extend(self.breaks.iter().copied().filter(|&b| b > lo && b < hi));
        cuts.push(hi);
        let mut acc = Triple::default();
        for seg in cuts.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            if b <= a {
                continue;
            }
            for &(node, wt) in self.gl.as_node_weight_pairs() {
                let r = 0.5 * ((b - a) * node + (b + a));
                let f = self.g(r);
                let s = 0.5 * (b - a) * wt * weight(r);
                acc.w += s * f.w;
                acc.u += s * f.u;
                acc.x += s * f.x;
            }
        }
        acc
    }

    fn kernels(&self, h: f64, cells: usize) -> Kernels {
        let reach = ((self.range / h).ceil() as usize + 2).min(cells + 1);
        let mut pair = Vec::with_capacity(reach);
        let mut edge = Vec::with_capacity(reach);
        for d in 0..reach {
            let c = d as f64 * h;
            let t = if d == 0 {
                self.integrate(0.0, h, |r| (h - r) / h)
            } else {
                let lo = self.integrate(c - h, c, |r| (h - (c - r)) / h);
                let hi = self.integrate(c, c + h, |r| (h - (r - c)) / h);
                Triple { w: lo.w + hi.w, u: lo.u + hi.u, x: lo.x + hi.x }
            };
            pair.push(t);
            edge.push(self.integrate(c, c + h, |_| 1.0));
        }
        Kernels { h, pair, edge }
    }

    /// Ordered configuration integrals for `k = 0..=n_max` free particles in a
    /// gap of length `len` bounded by walls or fixed particles.
    pub fn gap(&self, len: f64, left: End, right: End, n_max: usize, cells: usize) -> Series {
        let mut out = Series::zeros(n_max);
        if left == End::Particle && right == End::Particle {
            let (w, u, x) = self.point(len);
            out.z[0] = w;
            out.u[0] = u;
            out.x[0] = x;
        } else {
            out.z[0] = 1.0;
        }
        if n_max == 0 || len <= 0.0 {
            return out;
        }
        let cells = cells.max(1);
        let h = len / cells as f64;
        let k = self.kernels(h, cells);

        // chain weights of the rightmost particle, per cell
        let mut f = vec![0.0; cells];
        let mut fu = vec![0.0; cells];
        let mut fx = vec![0.0; cells];
        for j in 0..cells {
            match left {
                End::Wall => f[j] = h,
                End::Particle => {
                    let e = k.edge(j);
                    f[j] = e.w;
                    fu[j] = e.u;
                    fx[j] = e.x;
                }
            }
        }

        let far = k.pair.len();
        for n in 1..=n_max {
            // close the chain at the right end
            let (mut sz, mut su, mut sx) = (0.0, 0.0, 0.0);
            for j in 0..cells {
                match right {
                    End::Wall => {
                        sz += f[j];
                        su += fu[j];
                        sx += fx[j];
                    }
                    End::Particle => {
                        let e = k.edge(cells - 1 - j);
                        sz += f[j] * e.w / h;
                        su += (fu[j] * e.w + f[j] * e.u) / h;
                        sx += (fx[j] * e.w + f[j] * e.x) / h;
                    }
                }
            }
            out.z[n] = sz;
            out.u[n] = su;
            out.x[n] = sx;
            if n == n_max || f.iter().all(|&v| v == 0.0) {
                break;
            }

            // propagate one particle to the right
            let mut nf = vec![0.0; cells];
            let mut nfu = vec![0.0; cells];
            let mut nfx = vec![0.0; cells];
            // prefix sums of cells beyond the kernel reach, where w = 1 and u = x = 0
            let (mut pf, mut pu, mut px) = (0.0, 0.0, 0.0);
            for j in 0..cells {
                if j >= far {
                    let c = j - far;
                    pf += f[c];
                    pu += fu[c];
                    px += fx[c];
                }
                let mut a = pf * h;
                let mut b = pu * h;
                let mut c = px * h;
                let lo = j.saturating_sub(far - 1);
                for src in lo..=j {
                    let t = k.pair(j - src);
                    a += f[src] * t.w;
                    b += fu[src] * t.w + f[src] * t.u;
                    c += fx[src] * t.w + f[src] * t.x;
                }
                nf[j] = a;
                nfu[j] = b;
                nfx[j] = c;
            }
            f = nf;
            fu = nfu;
            fx = nfx;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|i| i as f64).product()
    }

    #[test]
    fn ideal_gap_gives_len_power_over_factorial() {
        let u = PairPotential::ideal();
        let m = ChainModel::new(&u, None, 1.0);
        let coarse = m.gap(4.0, End::Wall, End::Wall, 6, 200);
        let fine = m.gap(4.0, End::Wall, End::Wall, 6, 400);
        for n in 0..=6 {
            let exact = 4f64.powi(n as i32) / factorial(n);
            let (ec, ef) = ((coarse.z[n] - exact).abs(), (fine.z[n] - exact).abs());
            assert!(ef < 1e-4 * exact, "n={n}: {} vs {exact}", fine.z[n]);
            // second order: halving h quarters the error
            assert!(ef <= 0.3 * ec + 1e-13, "n={n}: {ec:e} -> {ef:e}");
        }
    }

    #[test]
    fn tonks_ordered_integrals() {
        let rods = PairPotential::hard_core(1.0, None).unwrap();
        let m = ChainModel::new(&rods, None, 1.0);
        let coarse = m.gap(4.0, End::Wall, End::Wall, 6, 400);
        let fine = m.gap(4.0, End::Wall, End::Wall, 6, 800);
        for n in 0..=6usize {
            let free = (4.0 - (n as f64 - 1.0).max(0.0)).max(0.0);
            let exact = free.powi(n as i32) / factorial(n);
            let err = (fine.z[n] - exact).abs();
            assert!(err < 1e-3 * exact.max(1e-3), "n={n}: {} vs {exact}", fine.z[n]);
            assert!(err <= (fine.z[n] - coarse.z[n]).abs() + 1e-13, "n={n}");
        }
    }

    #[test]
    fn fixed_pair_gap_counts_energy() {
        let well = PairPotential::square_well(1.0, 1.0, 1.5).unwrap();
        let m = ChainModel::new(&well, None, 1.0);
        let s = m.gap(1.2, End::Particle, End::Particle, 2, 32);
        assert!((s.z[0] - 1f64.exp()).abs() < 1e-12);
        assert!((s.u[0] + 1f64.exp()).abs() < 1e-12);
        assert_eq!(s.z[1], 0.0);
    }
}
