//! Boxes, configurations and the pair Hamiltonian.

use serde::{Deserialize, Serialize};

use crate::energy::Energy;
use crate::error::{Error, Result};
use crate::potentials::{PairPotential, SpaceDim};

/// Point in up to three dimensions; coordinates past `d` are zero.
pub type Point = [f64; 3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Empty boundary conditions: no images, particles confined to the box.
    Free,
    /// Minimum-image periodic wrapping; a proxy for the infinite system.
    Periodic,
}

/// The box `Λ_ℓ = [-ℓ, ℓ]^d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub dim: SpaceDim,
    pub half_width: f64,
    pub boundary: Boundary,
}

impl BoxSpec {
    pub fn new(dim: SpaceDim, half_width: f64, boundary: Boundary) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::Domain(format!("half width must be positive, got {half_width}")));
        }
        Ok(BoxSpec { dim, half_width, boundary })
    }

    pub fn free_1d(half_width: f64) -> Self {
        BoxSpec::new(SpaceDim::ONE, half_width, Boundary::Free).unwrap()
    }

    pub fn periodic_1d(half_width: f64) -> Self {
        BoxSpec::new(SpaceDim::ONE, half_width, Boundary::Periodic).unwrap()
    }

    pub fn d(&self) -> usize {
        self.dim.get()
    }

    pub fn side(&self) -> f64 {
        2.0 * self.half_width
    }

    pub fn volume(&self) -> f64 {
        self.side().powi(self.d() as i32)
    }

    /// Rejects periodic boxes too small for a unique minimum image.
    pub fn check_potential(&self, potential: &PairPotential) -> Result<()> {
        if self.boundary == Boundary::Periodic && self.half_width < potential.cutoff_radius() {
            return Err(Error::InvalidConfiguration(format!(
                "periodic box needs 2ℓ ≥ 2·cutoff (ℓ = {}, cutoff = {})",
                self.half_width,
                potential.cutoff_radius()
            )));
        }
        Ok(())
    }

    pub fn contains(&self, x: &Point) -> bool {
        let l = self.half_width;
        (0..3).all(|k| if k < self.d() { x[k] >= -l && x[k] <= l } else { x[k] == 0.0 })
    }

    /// Wraps a point into `[-ℓ, ℓ)^d` (periodic mode only; identity otherwise).
    pub fn wrap(&self, mut x: Point) -> Point {
        if self.boundary == Boundary::Periodic {
            let (l, side) = (self.half_width, self.side());
            for c in x.iter_mut().take(self.d()) {
                *c -= side * ((*c + l) / side).floor();
                if *c >= l {
                    *c -= side;
                }
            }
        }
        x
    }

    /// Separation vector `b - a`, minimum image in periodic mode.
    #[inline]
    pub fn separation(&self, a: &Point, b: &Point) -> Point {
        let mut dx = [0.0; 3];
        let side = self.side();
        for k in 0..self.d() {
            let mut v = b[k] - a[k];
            if self.boundary == Boundary::Periodic {
                v -= side * (v / side).round();
            }
            dx[k] = v;
        }
        dx
    }

    #[inline]
    pub fn distance(&self, a: &Point, b: &Point) -> f64 {
        let dx = self.separation(a, b);
        (dx[0] * dx[0] + dx[1] * dx[1] + dx[2] * dx[2]).sqrt()
    }

    /// Uniform point in the box.
    pub fn random_point<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let mut x = [0.0; 3];
        for c in x.iter_mut().take(self.d()) {
            *c = self.half_width * (2.0 * rng.gen::<f64>() - 1.0);
        }
        x
    }
}

/// A finite configuration in a box. Particle order carries no meaning.
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    pub bx: BoxSpec,
    pub positions: Vec<Point>,
}

impl Configuration {
    pub fn empty(bx: BoxSpec) -> Self {
        Configuration { bx, positions: Vec::new() }
    }

    pub fn new(bx: BoxSpec, positions: Vec<Point>) -> Result<Self> {
        if let Some(p) = positions.iter().find(|p| !bx.contains(p)) {
            return Err(Error::InvalidConfiguration(format!("point {p:?} lies outside the box")));
        }
        Ok(Configuration { bx, positions })
    }

    /// Builds a 1D configuration from scalar coordinates.
    pub fn from_1d(bx: BoxSpec, xs: &[f64]) -> Result<Self> {
        Self::new(bx, xs.iter().map(|&x| [x, 0.0, 0.0]).collect())
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// `H_u(x_m) = Σ_{i<j} u(|x_i - x_j|)`.
pub fn hamiltonian(config: &Configuration, potential: &PairPotential) -> Result<Energy> {
    config.bx.check_potential(potential)?;
    let pos = &config.positions;
    let mut total = 0.0;
    for i in 0..pos.len() {
        for j in 0..i {
            match potential.energy(config.bx.distance(&pos[i], &pos[j])) {
                Energy::Finite(e) => total += e,
                Energy::Infinite => return Ok(Energy::Infinite),
            }
        }
    }
    Ok(Energy::Finite(total))
}

/// `W_u(x; γ) = Σ_{y ∈ γ} u(x - y)`, optionally skipping member `exclude`.
pub fn interaction_energy(
    x: &Point,
    config: &Configuration,
    potential: &PairPotential,
    exclude: Option<usize>,
) -> Energy {
    let mut total = 0.0;
    for (j, y) in config.positions.iter().enumerate() {
        if Some(j) == exclude {
            continue;
        }
        match potential.energy(config.bx.distance(x, y)) {
            Energy::Finite(e) => total += e,
            Energy::Infinite => return Energy::Infinite,
        }
    }
    Energy::Finite(total)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Move {
    Insert(Point),
    Delete(usize),
    Displace(usize, Point),
}

fn check_index(config: &Configuration, i: usize) -> Result<()> {
    if i >= config.len() {
        return Err(Error::IndexOutOfRange { index: i, len: config.len() });
    }
    Ok(())
}

fn leave(w: Energy) -> Result<Energy> {
    match -w {
        Some(e) => Ok(e),
        None => Err(Error::InvalidConfiguration(
            "current state contains a hard-core overlap".into(),
        )),
    }
}

/// `H(after) - H(before)` for a single move, computed incrementally.
pub fn delta_energy(config: &Configuration, potential: &PairPotential, mv: Move) -> Result<Energy> {
    match mv {
        Move::Insert(x) => Ok(interaction_energy(&x, config, potential, None)),
        Move::Delete(i) => {
            check_index(config, i)?;
            leave(interaction_energy(&config.positions[i], config, potential, Some(i)))
        }
        Move::Displace(i, x) => {
            check_index(config, i)?;
            let old = interaction_energy(&config.positions[i], config, potential, Some(i));
            let new = interaction_energy(&x, config, potential, Some(i));
            new.minus(old).ok_or_else(|| {
                Error::InvalidConfiguration("current state contains a hard-core overlap".into())
            })
        }
    }
}

/// Apply a move to a configuration. Deletion swaps the last particle into slot `i`.
pub fn apply_move(config: &mut Configuration, mv: Move) -> Result<()> {
    match mv {
        Move::Insert(x) => config.positions.push(x),
        Move::Delete(i) => {
            check_index(config, i)?;
            config.positions.swap_remove(i);
        }
        Move::Displace(i, x) => {
            check_index(config, i)?;
            config.positions[i] = x;
        }
    }
    Ok(())
}

const MAX_CELLS_PER_AXIS: usize = 512;

/// Uniform grid of cells with side at least the interaction cutoff.
#[derive(Clone, Debug, PartialEq)]
pub struct CellList {
    bx: BoxSpec,
    per_axis: usize,
    cell_side: f64,
    cells: Vec<Vec<usize>>,
    cell_of: Vec<usize>,
}

impl CellList {
    pub fn new(bx: BoxSpec, cutoff: f64, positions: &[Point]) -> Self {
        let side = bx.side();
        let cap = match bx.d() {
            1 => MAX_CELLS_PER_AXIS,
            2 => 64,
            _ => 16,
        };
        let per_axis = if cutoff > 0.0 {
            ((side / cutoff).floor() as usize).clamp(1, cap)
        } else {
            1
        };
        let n_cells = per_axis.pow(bx.d() as u32);
        let mut list = CellList {
            bx,
            per_axis,
            cell_side: side / per_axis as f64,
            cells: vec![Vec::new(); n_cells],
            cell_of: Vec::with_capacity(positions.len()),
        };
        for (i, p) in positions.iter().enumerate() {
            let c = list.cell_index(p);
            list.cells[c].push(i);
            list.cell_of.push(c);
        }
        list
    }

    pub fn cell_side(&self) -> f64 {
        self.cell_side
    }

    fn axis_cell(&self, x: f64) -> usize {
        let c = ((x + self.bx.half_width) / self.cell_side).floor();
        (c.max(0.0) as usize).min(self.per_axis - 1)
    }

    fn cell_index(&self, p: &Point) -> usize {
        (0..self.bx.d()).rev().fold(0, |acc, k| acc * self.per_axis + self.axis_cell(p[k]))
    }

    /// Cells adjacent to (and including) the cell of `p`, without duplicates.
    fn neighbour_cells(&self, p: &Point) -> Vec<usize> {
        let d = self.bx.d();
        let n = self.per_axis as isize;
        let periodic = self.bx.boundary == Boundary::Periodic;
        let centre: Vec<isize> = (0..d).map(|k| self.axis_cell(p[k]) as isize).collect();
        let mut out = Vec::with_capacity(3usize.pow(d as u32));
        let total = 3usize.pow(d as u32);
        'outer: for code in 0..total {
            let mut idx = 0isize;
            let mut rem = code;
            let mut stride = 1isize;
            for c in centre.iter() {
                let off = (rem % 3) as isize - 1;
                rem /= 3;
                let mut a = c + off;
                if periodic {
                    a = a.rem_euclid(n);
                } else if a < 0 || a >= n {
                    continue 'outer;
                }
                idx += a * stride;
                stride *= n;
            }
            out.push(idx as usize);
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Indices of particles that may lie within the cutoff of `p`.
    pub fn candidates(&self, p: &Point) -> impl Iterator<Item = usize> + '_ {
        self.neighbour_cells(p).into_iter().flat_map(move |c| self.cells[c].iter().copied())
    }

    pub fn insert(&mut self, p: &Point) {
        let c = self.cell_index(p);
        let i = self.cell_of.len();
        self.cells[c].push(i);
        self.cell_of.push(c);
    }

    /// Mirror of `Vec::swap_remove(i)` on the position list.
    pub fn swap_remove(&mut self, i: usize) {
        let c = self.cell_of[i];
        self.cells[c].retain(|&j| j != i);
        let last = self.cell_of.len() - 1;
        if i != last {
            let cl = self.cell_of[last];
            for j in self.cells[cl].iter_mut() {
                if *j == last {
                    *j = i;
                }
            }
            self.cell_of[i] = cl;
        }
        self.cell_of.pop();
    }

    pub fn displace(&mut self, i: usize, p: &Point) {
        let c = self.cell_index(p);
        let old = self.cell_of[i];
        if c != old {
            self.cells[old].retain(|&j| j != i);
            self.cells[c].push(i);
            self.cell_of[i] = c;
        }
    }

    /// Canonical form for comparing incremental and rebuilt lists.
    pub fn canonical(&self) -> Vec<Vec<usize>> {
        self.cells
            .iter()
            .map(|c| {
                let mut v = c.clone();
                v.sort_unstable();
                v
            })
            .collect()
    }

    /// `W_u(x; γ)` using only neighbouring cells.
    pub fn interaction_energy(
        &self,
        x: &Point,
        config: &Configuration,
        potential: &PairPotential,
        exclude: Option<usize>,
    ) -> Energy {
        let mut total = 0.0;
        for j in self.candidates(x) {
            if Some(j) == exclude {
                continue;
            }
            match potential.energy(config.bx.distance(x, &config.positions[j])) {
                Energy::Finite(e) => total += e,
                Energy::Infinite => return Energy::Infinite,
            }
        }
        Energy::Finite(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lj() -> PairPotential {
        PairPotential::lennard_jones(1.0, 1.0, Some(2.5)).unwrap()
    }

    fn random_config(bx: BoxSpec, n: usize, seed: u64) -> Configuration {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pos = (0..n).map(|_| bx.random_point(&mut rng)).collect();
        Configuration::new(bx, pos).unwrap()
    }

    #[test]
    fn empty_and_single_particle() {
        let bx = BoxSpec::free_1d(5.0);
        assert_eq!(hamiltonian(&Configuration::empty(bx), &lj()).unwrap(), Energy::ZERO);
        let one = Configuration::from_1d(bx, &[0.3]).unwrap();
        assert_eq!(hamiltonian(&one, &lj()).unwrap(), Energy::ZERO);
    }

    #[test]
    fn pair_matches_evaluate() {
        let bx = BoxSpec::free_1d(5.0);
        let c = Configuration::from_1d(bx, &[-0.6, 0.6]).unwrap();
        assert_eq!(hamiltonian(&c, &lj()).unwrap(), lj().energy(1.2));
        let hc = PairPotential::hard_core(1.0, None).unwrap();
        assert_eq!(hamiltonian(&c, &hc).unwrap(), Energy::ZERO);
        let close = Configuration::from_1d(bx, &[0.0, 0.5, 3.0]).unwrap();
        assert_eq!(hamiltonian(&close, &hc).unwrap(), Energy::Infinite);
    }

    #[test]
    fn minimum_image() {
        let bx = BoxSpec::periodic_1d(3.0);
        assert!((bx.distance(&[-2.9, 0.0, 0.0], &[2.9, 0.0, 0.0]) - 0.2).abs() < 1e-12);
        assert_eq!(bx.wrap([3.5, 0.0, 0.0])[0], -2.5);
        let small = BoxSpec::periodic_1d(2.0);
        assert!(hamiltonian(&Configuration::empty(small), &lj()).is_err());
    }

    #[test]
    fn interaction_energy_is_additive() {
        let bx = BoxSpec::new(SpaceDim::TWO, 4.0, Boundary::Free).unwrap();
        let a = random_config(bx, 6, 1);
        let b = random_config(bx, 5, 2);
        let mut ab = a.clone();
        ab.positions.extend(b.positions.iter().copied());
        let x = [0.1, -0.2, 0.0];
        let pot = PairPotential::lennard_jones(1.0, 0.5, None).unwrap();
        let wa = interaction_energy(&x, &a, &pot, None).finite().unwrap();
        let wb = interaction_energy(&x, &b, &pot, None).finite().unwrap();
        let wab = interaction_energy(&x, &ab, &pot, None).finite().unwrap();
        assert!((wa + wb - wab).abs() <= 1e-12 * wab.abs().max(1.0));
        assert_eq!(interaction_energy(&x, &Configuration::empty(bx), &pot, None), Energy::ZERO);
    }

    #[test]
    fn delta_energy_edge_cases() {
        let bx = BoxSpec::free_1d(5.0);
        let empty = Configuration::empty(bx);
        assert_eq!(delta_energy(&empty, &lj(), Move::Insert([0.0; 3])).unwrap(), Energy::ZERO);
        let one = Configuration::from_1d(bx, &[1.0]).unwrap();
        assert_eq!(delta_energy(&one, &lj(), Move::Delete(0)).unwrap(), Energy::ZERO);
        assert!(delta_energy(&one, &lj(), Move::Delete(3)).is_err());
        assert!(delta_energy(&one, &lj(), Move::Displace(1, [0.0; 3])).is_err());
        let hc = PairPotential::hard_core(1.0, None).unwrap();
        assert_eq!(
            delta_energy(&one, &hc, Move::Insert([1.5, 0.0, 0.0])).unwrap(),
            Energy::Infinite
        );
    }

    #[test]
    fn delta_energy_matches_full_recomputation() {
        let pot = PairPotential::lennard_jones(1.0, 1.0, Some(2.5)).unwrap();
        let bx = BoxSpec::new(SpaceDim::TWO, 6.0, Boundary::Periodic).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        // sparse enough that overlaps stay finite
        let c = random_config(bx, 8, 5);
        let before = hamiltonian(&c, &pot).unwrap().finite().unwrap();
        for trial in 0..200 {
            let mv = match trial % 3 {
                0 => Move::Insert(bx.random_point(&mut rng)),
                1 => Move::Delete(trial % c.len()),
                _ => Move::Displace(trial % c.len(), bx.random_point(&mut rng)),
            };
            let d = delta_energy(&c, &pot, mv).unwrap();
            let mut after = c.clone();
            apply_move(&mut after, mv).unwrap();
            let h = hamiltonian(&after, &pot).unwrap();
            match (d, h) {
                (Energy::Finite(d), Energy::Finite(h)) => {
                    assert!((h - before - d).abs() <= 1e-10 * h.abs().max(before.abs()).max(1.0))
                }
                (Energy::Infinite, Energy::Infinite) => {}
                other => panic!("mismatch {other:?}"),
            }
        }
    }

    fn brute_neighbours(c: &Configuration, x: &Point, rc: f64) -> Vec<usize> {
        (0..c.len()).filter(|&j| c.bx.distance(x, &c.positions[j]) < rc).collect()
    }

    #[test]
    fn cell_list_neighbours_match_all_pairs() {
        for (d, boundary) in [(1, Boundary::Free), (1, Boundary::Periodic), (2, Boundary::Periodic), (3, Boundary::Free), (3, Boundary::Periodic)] {
            let bx = BoxSpec::new(SpaceDim::new(d).unwrap(), 4.0, boundary).unwrap();
            let c = random_config(bx, 60, d as u64);
            let cl = CellList::new(bx, 1.3, &c.positions);
            assert!(cl.cell_side() >= 1.3);
            for x in &c.positions {
                let mut got: Vec<usize> =
                    cl.candidates(x).filter(|&j| bx.distance(x, &c.positions[j]) < 1.3).collect();
                got.sort_unstable();
                assert_eq!(got, brute_neighbours(&c, x, 1.3));
            }
        }
    }

    #[test]
    fn incremental_cell_list_equals_rebuild() {
        let bx = BoxSpec::new(SpaceDim::TWO, 5.0, Boundary::Periodic).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut c = random_config(bx, 30, 9);
        let mut cl = CellList::new(bx, 1.0, &c.positions);
        for step in 0..500 {
            match step % 3 {
                0 => {
                    let p = bx.random_point(&mut rng);
                    cl.insert(&p);
                    c.positions.push(p);
                }
                1 if !c.is_empty() => {
                    let i = step % c.len();
                    cl.swap_remove(i);
                    c.positions.swap_remove(i);
                }
                _ if !c.is_empty() => {
                    let i = step % c.len();
                    let p = bx.random_point(&mut rng);
                    cl.displace(i, &p);
                    c.positions[i] = p;
                }
                _ => {}
            }
        }
        assert_eq!(cl.canonical(), CellList::new(bx, 1.0, &c.positions).canonical());
    }

    proptest! {
        #[test]
        fn hamiltonian_permutation_invariant(seed in 0u64..1000, n in 0usize..12) {
            let bx = BoxSpec::new(SpaceDim::THREE, 4.0, Boundary::Periodic).unwrap();
            let c = random_config(bx, n, seed);
            let mut shuffled = c.clone();
            shuffled.positions.shuffle(&mut ChaCha8Rng::seed_from_u64(seed + 1));
            let pot = PairPotential::lennard_jones(1.0, 0.8, Some(2.0)).unwrap();
            let (a, b) = (hamiltonian(&c, &pot).unwrap(), hamiltonian(&shuffled, &pot).unwrap());
            match (a, b) {
                (Energy::Finite(a), Energy::Finite(b)) => prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0)),
                (a, b) => prop_assert_eq!(a, b),
            }
        }

        #[test]
        fn appending_adds_interaction(seed in 0u64..1000, n in 0usize..10) {
            let bx = BoxSpec::new(SpaceDim::TWO, 5.0, Boundary::Free).unwrap();
            let c = random_config(bx, n + 1, seed);
            let head = Configuration::new(bx, c.positions[..n].to_vec()).unwrap();
            let pot = PairPotential::lennard_jones(1.0, 0.5, None).unwrap();
            let full = hamiltonian(&c, &pot).unwrap();
            let sum = hamiltonian(&head, &pot).unwrap() + interaction_energy(&c.positions[n], &head, &pot, None);
            match (full, sum) {
                (Energy::Finite(a), Energy::Finite(b)) => prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0)),
                (a, b) => prop_assert_eq!(a, b),
            }
        }

        #[test]
        fn free_translation_invariance(seed in 0u64..1000, shift in -0.5f64..0.5) {
            let bx = BoxSpec::new(SpaceDim::TWO, 5.0, Boundary::Free).unwrap();
            let inner = BoxSpec::new(SpaceDim::TWO, 4.4, Boundary::Free).unwrap();
            let c = random_config(inner, 7, seed);
            let moved: Vec<Point> = c.positions.iter().map(|p| [p[0] + shift, p[1] - shift, 0.0]).collect();
            let pot = PairPotential::lennard_jones(1.0, 0.5, None).unwrap();
            let a = hamiltonian(&Configuration::new(bx, c.positions.clone()).unwrap(), &pot).unwrap();
            let b = hamiltonian(&Configuration::new(bx, moved).unwrap(), &pot).unwrap();
            match (a, b) {
                (Energy::Finite(a), Energy::Finite(b)) => prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0)),
                (a, b) => prop_assert_eq!(a, b),
            }
        }
    }
}
