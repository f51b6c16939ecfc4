//! Tensor-product quadrature over `Λ^n`, for any dimension and a handful of
//! particles. Cost grows as `points^(d·n)`.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use super::chain::Series;
use super::Scheme;
use crate::energy::Energy;
use crate::potentials::PairPotential;
use crate::stats::neumaier_sum;
use crate::system::{BoxSpec, Point};

pub(crate) struct GridModel<'a> {
    pub bx: BoxSpec,
    pub measure: &'a PairPotential,
    pub cross: Option<&'a PairPotential>,
    pub beta: f64,
}

/// Nodes and weights of a per-axis rule on `[-ℓ, ℓ]`.
pub(crate) fn axis_rule(scheme: Scheme, points: usize, half_width: f64) -> Vec<(f64, f64)> {
    let side = 2.0 * half_width;
    match scheme {
        Scheme::Midpoint => (0..points)
            .map(|i| (-half_width + (i as f64 + 0.5) * side / points as f64, side / points as f64))
            .collect(),
        Scheme::GaussLegendre => GaussLegendre::new(NonZeroUsize::new(points.max(1)).unwrap())
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| (x * half_width, w * half_width))
            .collect(),
    }
}

pub(crate) fn grid_cost(points: usize, d: usize, n_max: usize) -> f64 {
    (0..=n_max).map(|n| (points as f64).powi((d * n) as i32)).sum()
}

impl<'a> GridModel<'a> {
    fn pair_energies(&self, a: &Point, b: &Point) -> (Energy, Energy) {
        let r = self.bx.distance(a, b);
        (self.measure.energy(r), self.cross.map_or(Energy::ZERO, |c| c.energy(r)))
    }

    /// `(1/n!)∫_{Λ^n} e^{-βH(fixed, y)} dy` for `n = 0..=n_max`, with the
    /// energy-weighted channels. Matches the ordered-chain normalisation.
    pub fn conditional(&self, fixed: &[Point], n_max: usize, scheme: Scheme, points: usize) -> Series {
        let d = self.bx.d();
        let axis = axis_rule(scheme, points, self.bx.half_width);
        let mut out = Series { z: vec![0.0; n_max + 1], u: vec![0.0; n_max + 1], x: vec![0.0; n_max + 1] };

        let (mut h0, mut x0) = (Energy::ZERO, Energy::ZERO);
        for i in 0..fixed.len() {
            for j in 0..i {
                let (u, x) = self.pair_energies(&fixed[i], &fixed[j]);
                h0 += u;
                x0 += x;
            }
        }

        let per_particle = axis.len().pow(d as u32);
        let node = |idx: usize| -> (Point, f64) {
            let mut p = [0.0; 3];
            let mut w = 1.0;
            let mut rem = idx;
            for c in p.iter_mut().take(d) {
                let (x, wx) = axis[rem % axis.len()];
                rem /= axis.len();
                *c = x;
                w *= wx;
            }
            (p, w)
        };
        let nodes: Vec<(Point, f64)> = (0..per_particle).map(node).collect();

        let mut factorial = 1.0;
        for n in 0..=n_max {
            if n > 0 {
                factorial *= n as f64;
            }
            let total = per_particle.pow(n as u32);
            let mut zs = Vec::with_capacity(total.min(1 << 20));
            let mut us = Vec::new();
            let mut xs = Vec::new();
            let mut pts: Vec<Point> = fixed.to_vec();
            for tuple in 0..total {
                pts.truncate(fixed.len());
                let mut weight = 1.0;
                let mut rem = tuple;
                let (mut h, mut hx) = (h0, x0);
                for _ in 0..n {
                    let (p, w) = nodes[rem % per_particle];
                    rem /= per_particle;
                    weight *= w;
                    for q in &pts {
                        let (u, x) = self.pair_energies(&p, q);
                        h += u;
                        hx += x;
                    }
                    pts.push(p);
                }
                let b = h.boltzmann(self.beta);
                if b == 0.0 {
                    continue;
                }
                zs.push(weight * b);
                us.push(weight * b * h.finite().unwrap_or(0.0));
                xs.push(match hx {
                    Energy::Finite(e) => weight * b * e,
                    Energy::Infinite => f64::INFINITY,
                });
            }
            out.z[n] = neumaier_sum(zs) / factorial;
            out.u[n] = neumaier_sum(us) / factorial;
            out.x[n] = xs.iter().sum::<f64>() / factorial;
        }
        out
    }
}
