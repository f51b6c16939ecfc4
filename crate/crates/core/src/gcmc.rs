//! Grand-canonical Metropolis sampler with insertion, deletion and
//! displacement moves.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::Energy;
use crate::error::{Error, Result};
use crate::frames::Frame;
use crate::potentials::PairPotential;
use crate::stats::{from_block_means, neumaier_sum, BlockEstimate};
use crate::system::{hamiltonian, BoxSpec, CellList, Configuration, Point};

pub const GENERATOR: &str = "ChaCha8Rng";
pub const RESYNC_INTERVAL: u64 = 100_000;
pub const MIN_BLOCKS: usize = 32;
const TUNE_WINDOW: u64 = 500;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoveMix {
    pub p_insert: f64,
    pub p_delete: f64,
    pub p_displace: f64,
}

impl Default for MoveMix {
    fn default() -> Self {
        MoveMix { p_insert: 0.25, p_delete: 0.25, p_displace: 0.5 }
    }
}

impl MoveMix {
    pub fn validate(&self) -> Result<()> {
        let ps = [self.p_insert, self.p_delete, self.p_displace];
        if ps.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::config("move_mix", "probabilities must lie in [0, 1]"));
        }
        if (ps.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::config("move_mix", "probabilities must sum to 1"));
        }
        if self.p_insert != self.p_delete {
            return Err(Error::config("move_mix", "p_insert must equal p_delete"));
        }
        Ok(())
    }
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    #[serde(rename = "box")]
    pub bx: BoxSpec,
    pub beta: f64,
    pub mu: f64,
    pub potential: PairPotential,
    #[serde(default)]
    pub move_mix: MoveMix,
    pub max_displacement: f64,
    pub steps: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub blocks: usize,
    pub seed: u64,
    /// Tune `max_displacement` during burn-in.
    #[serde(default = "default_true")]
    pub tune: bool,
}

impl ChainSpec {
    /// Spec with the default move mix and tuning on.
    #[allow(clippy::too_many_arguments)]
    pub fn new(bx: BoxSpec, beta: f64, mu: f64, potential: PairPotential, steps: u64, burn_in: u64, thin: u64, seed: u64) -> Self {
        ChainSpec {
            bx,
            beta,
            mu,
            max_displacement: 0.5 * potential.length_scale().max(1e-3).min(bx.half_width),
            potential,
            move_mix: MoveMix::default(),
            steps,
            burn_in,
            thin,
            blocks: MIN_BLOCKS,
            seed,
            tune: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.move_mix.validate()?;
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::config("beta", "must be positive and finite"));
        }
        if !self.mu.is_finite() {
            return Err(Error::config("mu", "must be finite"));
        }
        if !(self.max_displacement > 0.0) {
            return Err(Error::config("max_displacement", "must be positive"));
        }
        if self.blocks < MIN_BLOCKS {
            return Err(Error::config("blocks", format!("must be at least {MIN_BLOCKS}")));
        }
        if self.thin == 0 {
            return Err(Error::config("thin", "must be at least 1"));
        }
        if self.burn_in > self.steps {
            return Err(Error::config("burn_in", "must not exceed steps"));
        }
        self.bx.check_potential(&self.potential)
    }

    pub fn activity(&self) -> f64 {
        (self.beta * self.mu).exp()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub attempted: u64,
    pub accepted: u64,
}

impl Tally {
    pub fn rate(&self) -> f64 {
        if self.attempted == 0 {
            f64::NAN
        } else {
            self.accepted as f64 / self.attempted as f64
        }
    }

    fn record(&mut self, accepted: bool) {
        self.attempted += 1;
        self.accepted += accepted as u64;
    }

    fn add(&mut self, other: &Tally) {
        self.attempted += other.attempted;
        self.accepted += other.accepted;
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptanceCounters {
    pub insert: Tally,
    pub delete: Tally,
    pub displace: Tally,
}

impl AcceptanceCounters {
    fn add(&mut self, o: &AcceptanceCounters) {
        self.insert.add(&o.insert);
        self.delete.add(&o.delete);
        self.displace.add(&o.displace);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    Insert,
    Delete,
    Displace,
}

/// Metropolis acceptance probability. `n_before` is the particle count before
/// the move and `delta` is `H(after) - H(before)`.
pub fn acceptance_probability(kind: MoveKind, n_before: usize, z: f64, volume: f64, beta: f64, delta: Energy) -> f64 {
    let boltz = delta.boltzmann(beta);
    let ratio = match kind {
        MoveKind::Insert => z * volume / (n_before as f64 + 1.0) * boltz,
        MoveKind::Delete => {
            if n_before == 0 {
                return 0.0;
            }
            n_before as f64 / (z * volume) * boltz
        }
        MoveKind::Displace => boltz,
    };
    ratio.min(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuningRecord {
    pub step: u64,
    pub acceptance: f64,
    pub max_displacement: f64,
}

/// Live chain: configuration, generator, cell list and running energy.
#[derive(Clone, Debug)]
pub struct MarkovChainState {
    pub config: Configuration,
    rng: ChaCha8Rng,
    cells: CellList,
    pub energy: f64,
    pub counters: AcceptanceCounters,
    pub max_displacement: f64,
    pub steps_done: u64,
    pub max_resync_drift: f64,
    /// Insertion tallies indexed by the count before the attempt.
    pub insert_by_n: Vec<Tally>,
}

impl MarkovChainState {
    pub fn new(spec: &ChainSpec) -> Result<Self> {
        Self::with_stream(spec, 0)
    }

    /// Starts from the empty box on generator stream `stream`.
    pub fn with_stream(spec: &ChainSpec, stream: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(stream);
        let config = Configuration::empty(spec.bx);
        Ok(MarkovChainState {
            cells: CellList::new(spec.bx, spec.potential.cutoff_radius(), &config.positions),
            config,
            rng,
            energy: 0.0,
            counters: AcceptanceCounters::default(),
            max_displacement: spec.max_displacement,
            steps_done: 0,
            max_resync_drift: 0.0,
            insert_by_n: Vec::new(),
        })
    }

    fn local_energy(&self, x: &Point, potential: &PairPotential, exclude: Option<usize>) -> Energy {
        if potential.is_ideal() {
            return Energy::ZERO;
        }
        self.cells.interaction_energy(x, &self.config, potential, exclude)
    }

    /// One Metropolis move.
    pub fn step(&mut self, spec: &ChainSpec) -> Result<MoveKind> {
        let z = spec.activity();
        let vol = spec.bx.volume();
        let n = self.config.len();
        let pick: f64 = self.rng.gen();
        let kind = if pick < spec.move_mix.p_insert {
            MoveKind::Insert
        } else if pick < spec.move_mix.p_insert + spec.move_mix.p_delete {
            MoveKind::Delete
        } else {
            MoveKind::Displace
        };
        match kind {
            MoveKind::Insert => {
                let x = spec.bx.random_point(&mut self.rng);
                let de = self.local_energy(&x, &spec.potential, None);
                let acc = acceptance_probability(kind, n, z, vol, spec.beta, de);
                let ok = self.rng.gen::<f64>() < acc;
                if self.insert_by_n.len() <= n {
                    self.insert_by_n.resize(n + 1, Tally::default());
                }
                self.insert_by_n[n].record(ok);
                self.counters.insert.record(ok);
                if ok {
                    self.config.positions.push(x);
                    self.cells.insert(&x);
                    self.energy += de.finite().unwrap_or(0.0);
                }
            }
            MoveKind::Delete => {
                if n == 0 {
                    self.counters.delete.record(false);
                } else {
                    let i = self.rng.gen_range(0..n);
                    let w = self.local_energy(&self.config.positions[i], &spec.potential, Some(i));
                    let de = (-w).ok_or_else(|| Error::InvalidConfiguration("chain state holds an overlap".into()))?;
                    let acc = acceptance_probability(kind, n, z, vol, spec.beta, de);
                    let ok = self.rng.gen::<f64>() < acc;
                    self.counters.delete.record(ok);
                    if ok {
                        self.config.positions.swap_remove(i);
                        self.cells.swap_remove(i);
                        self.energy += de.finite().unwrap_or(0.0);
                    }
                }
            }
            MoveKind::Displace => {
                if n == 0 {
                    self.counters.displace.record(false);
                } else {
                    let i = self.rng.gen_range(0..n);
                    let mut x = self.config.positions[i];
                    for c in x.iter_mut().take(spec.bx.d()) {
                        *c += self.rng.gen_range(-self.max_displacement..=self.max_displacement);
                    }
                    let x = spec.bx.wrap(x);
                    if !spec.bx.contains(&x) {
                        self.counters.displace.record(false);
                    } else {
                        let old = self.local_energy(&self.config.positions[i], &spec.potential, Some(i));
                        let new = self.local_energy(&x, &spec.potential, Some(i));
                        let de = new
                            .minus(old)
                            .ok_or_else(|| Error::InvalidConfiguration("chain state holds an overlap".into()))?;
                        let acc = acceptance_probability(kind, n, z, vol, spec.beta, de);
                        let ok = self.rng.gen::<f64>() < acc;
                        self.counters.displace.record(ok);
                        if ok {
                            self.config.positions[i] = x;
                            self.cells.displace(i, &x);
                            self.energy += de.finite().unwrap_or(0.0);
                        }
                    }
                }
            }
        }
        self.steps_done += 1;
        if self.steps_done.is_multiple_of(RESYNC_INTERVAL) {
            self.resync(&spec.potential)?;
        }
        Ok(kind)
    }

    /// Replaces the running energy by a full recomputation; returns the
    /// relative drift.
    pub fn resync(&mut self, potential: &PairPotential) -> Result<f64> {
        let full = hamiltonian(&self.config, potential)?
            .finite()
            .ok_or_else(|| Error::InvalidConfiguration("chain state holds an overlap".into()))?;
        let drift = (self.energy - full).abs() / full.abs().max(1.0);
        self.max_resync_drift = self.max_resync_drift.max(drift);
        self.energy = full;
        Ok(drift)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub generator: String,
    pub seed: u64,
    pub streams: Vec<u64>,
    pub acceptance: AcceptanceCounters,
    pub tuning: Vec<TuningRecord>,
    pub final_max_displacement: Vec<f64>,
    pub max_resync_drift: f64,
    pub insert_by_n: Vec<Tally>,
    pub warnings: Vec<String>,
}

/// Frames recorded after burn-in, grouped into consecutive blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    #[serde(rename = "box")]
    pub bx: BoxSpec,
    pub beta: f64,
    pub mu: f64,
    pub steps: Vec<u64>,
    pub frames: Vec<Vec<Point>>,
    pub energies: Vec<f64>,
    /// Exclusive end index of each block in `frames`.
    pub block_ends: Vec<usize>,
    pub meta: RunMeta,
}

impl SampleSet {
    pub fn empty(spec: &ChainSpec) -> Self {
        SampleSet {
            bx: spec.bx,
            beta: spec.beta,
            mu: spec.mu,
            steps: Vec::new(),
            frames: Vec::new(),
            energies: Vec::new(),
            block_ends: Vec::new(),
            meta: RunMeta { generator: GENERATOR.into(), seed: spec.seed, ..RunMeta::default() },
        }
    }

    /// Wraps externally produced frames, split into `blocks` near-equal blocks.
    pub fn from_frames(bx: BoxSpec, beta: f64, mu: f64, frames: Vec<Vec<Point>>, energies: Vec<f64>, blocks: usize) -> Self {
        let n = frames.len();
        SampleSet {
            bx,
            beta,
            mu,
            steps: (0..n as u64).collect(),
            block_ends: block_ends(n, blocks),
            frames,
            energies,
            meta: RunMeta::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn counts(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.len() as f64).collect()
    }

    pub fn block_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0;
        self.block_ends
            .iter()
            .map(|&e| {
                let r = start..e;
                start = e;
                r
            })
            .filter(|r| !r.is_empty())
            .collect()
    }

    /// Block estimate of the per-frame statistic `f`.
    pub fn block_estimate<F: Fn(usize) -> f64>(&self, f: F) -> BlockEstimate {
        let means: Vec<f64> = self
            .block_ranges()
            .into_iter()
            .map(|r| neumaier_sum(r.clone().map(&f)) / r.len() as f64)
            .collect();
        from_block_means(&means)
    }

    pub fn mean_count(&self) -> BlockEstimate {
        self.block_estimate(|i| self.frames[i].len() as f64)
    }

    pub fn mean_energy(&self) -> BlockEstimate {
        self.block_estimate(|i| self.energies[i])
    }

    /// Sample variance of the particle count over all frames.
    pub fn count_variance(&self) -> f64 {
        let c = self.counts();
        if c.len() < 2 {
            return f64::NAN;
        }
        let m = neumaier_sum(c.iter().copied()) / c.len() as f64;
        c.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (c.len() - 1) as f64
    }

    /// Concatenates blocks; both sets must describe the same ensemble.
    pub fn merge(mut self, other: SampleSet) -> Result<SampleSet> {
        if self.bx != other.bx || self.beta != other.beta || self.mu != other.mu {
            return Err(Error::Precondition("merged sample sets must share box, beta and mu".into()));
        }
        let offset = self.frames.len();
        self.frames.extend(other.frames);
        self.steps.extend(other.steps);
        self.energies.extend(other.energies);
        self.block_ends.extend(other.block_ends.iter().map(|e| e + offset));
        let m = &mut self.meta;
        let o = other.meta;
        m.acceptance.add(&o.acceptance);
        m.streams.extend(o.streams);
        m.tuning.extend(o.tuning);
        m.final_max_displacement.extend(o.final_max_displacement);
        m.max_resync_drift = m.max_resync_drift.max(o.max_resync_drift);
        if m.insert_by_n.len() < o.insert_by_n.len() {
            m.insert_by_n.resize(o.insert_by_n.len(), Tally::default());
        }
        for (a, b) in m.insert_by_n.iter_mut().zip(&o.insert_by_n) {
            a.add(b);
        }
        m.warnings.extend(o.warnings);
        Ok(self)
    }

    pub fn to_frames(&self) -> Vec<Frame> {
        let d = self.bx.d();
        self.frames.iter().zip(&self.steps).map(|(p, &s)| Frame::from_points(s, p, d)).collect()
    }
}

fn block_ends(n: usize, blocks: usize) -> Vec<usize> {
    if n == 0 || blocks == 0 {
        return Vec::new();
    }
    (1..=blocks).map(|b| b * n / blocks).collect()
}

/// Runs one chain from the empty box on generator stream 0.
pub fn run(spec: &ChainSpec) -> Result<SampleSet> {
    run_stream(spec, 0)
}

pub fn run_stream(spec: &ChainSpec, stream: u64) -> Result<SampleSet> {
    let mut state = MarkovChainState::with_stream(spec, stream)?;
    let mut out = SampleSet::empty(spec);
    out.meta.streams.push(stream);

    let mut window = Tally::default();
    for _ in 0..spec.burn_in {
        let before = state.counters.displace;
        let kind = state.step(spec)?;
        if spec.tune && kind == MoveKind::Displace && !state.config.is_empty() {
            window.attempted += state.counters.displace.attempted - before.attempted;
            window.accepted += state.counters.displace.accepted - before.accepted;
            if window.attempted >= TUNE_WINDOW {
                let rate = window.rate();
                let cap = spec.bx.half_width;
                if rate < 0.3 {
                    state.max_displacement *= 0.8;
                } else if rate > 0.5 {
                    state.max_displacement = (state.max_displacement * 1.25).min(cap);
                }
                out.meta.tuning.push(TuningRecord {
                    step: state.steps_done,
                    acceptance: rate,
                    max_displacement: state.max_displacement,
                });
                window = Tally::default();
            }
        }
    }

    let production = spec.steps - spec.burn_in;
    let n_frames = (production / spec.thin) as usize;
    let step_blocks = spec.blocks as u64;
    let mut exchange_in_block = 0u64;
    let mut silent_blocks = 0usize;
    let mut block = 0u64;
    for s in 1..=production {
        let (i0, d0) = (state.counters.insert.accepted, state.counters.delete.accepted);
        state.step(spec)?;
        exchange_in_block += state.counters.insert.accepted - i0 + state.counters.delete.accepted - d0;
        if s % spec.thin == 0 {
            out.steps.push(state.steps_done);
            out.frames.push(state.config.positions.clone());
            out.energies.push(state.energy);
        }
        let b = s * step_blocks / production;
        if b != block {
            if exchange_in_block == 0 {
                silent_blocks += 1;
            }
            exchange_in_block = 0;
            block = b;
        }
    }
    state.resync(&spec.potential)?;
    if silent_blocks > 0 {
        out.meta.warnings.push(format!(
            "possible non-ergodicity: {silent_blocks} of {} blocks had no accepted insertion or deletion",
            spec.blocks
        ));
    }
    out.block_ends = block_ends(n_frames, spec.blocks);
    out.meta.acceptance = state.counters;
    out.meta.final_max_displacement.push(state.max_displacement);
    out.meta.max_resync_drift = state.max_resync_drift;
    out.meta.insert_by_n = state.insert_by_n;
    Ok(out)
}

/// Independent chains on streams `0..replicas`, run in parallel on up to
/// `workers` threads and merged in stream order.
pub fn run_replicas(spec: &ChainSpec, replicas: usize, workers: usize) -> Result<SampleSet> {
    let replicas = replicas.max(1);
    let sets: Vec<Result<SampleSet>> = if workers <= 1 {
        (0..replicas as u64).map(|s| run_stream(spec, s)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Precondition(format!("worker pool: {e}")))?;
        pool.install(|| (0..replicas as u64).into_par_iter().map(|s| run_stream(spec, s)).collect())
    };
    let mut iter = sets.into_iter();
    let mut acc = iter.next().unwrap()?;
    for s in iter {
        acc = acc.merge(s?)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::interaction_energy;

    fn ideal_spec(steps: u64, seed: u64) -> ChainSpec {
        ChainSpec::new(BoxSpec::free_1d(2.0), 1.0, 0.0, PairPotential::ideal(), steps, steps / 10, 10, seed)
    }

    #[test]
    fn move_mix_rules() {
        assert!(MoveMix::default().validate().is_ok());
        assert!(MoveMix { p_insert: 0.3, p_delete: 0.2, p_displace: 0.5 }.validate().is_err());
        assert!(MoveMix { p_insert: 0.3, p_delete: 0.3, p_displace: 0.5 }.validate().is_err());
        let mut s = ideal_spec(100, 1);
        s.blocks = 8;
        assert!(matches!(s.validate(), Err(Error::Config { .. })));
    }

    #[test]
    fn detailed_balance_ratio_is_exact() {
        let bx = BoxSpec::free_1d(3.0);
        let lj = PairPotential::lennard_jones(1.0, 1.0, Some(2.5)).unwrap();
        let (z, beta) = (0.7, 1.3);
        let gamma = Configuration::from_1d(bx, &[-2.0, -0.4, 1.1]).unwrap();
        for x in [-1.3, 0.55, 2.6] {
            let de = interaction_energy(&[x, 0.0, 0.0], &gamma, &lj, None);
            let n = gamma.len();
            let fwd = acceptance_probability(MoveKind::Insert, n, z, bx.volume(), beta, de);
            let back = acceptance_probability(MoveKind::Delete, n + 1, z, bx.volume(), beta, (-de).unwrap());
            let expected = z * bx.volume() / (n as f64 + 1.0) * (-beta * de.finite().unwrap()).exp();
            assert!((fwd / back - expected).abs() <= 1e-12 * expected, "x={x}");
        }
    }

    #[test]
    fn overlapping_insertion_always_rejects() {
        assert_eq!(acceptance_probability(MoveKind::Insert, 3, 1e9, 10.0, 1.0, Energy::Infinite), 0.0);
        assert_eq!(acceptance_probability(MoveKind::Delete, 0, 1.0, 4.0, 1.0, Energy::ZERO), 0.0);
    }

    #[test]
    fn empty_production_gives_empty_set() {
        let mut s = ideal_spec(1000, 3);
        s.burn_in = 1000;
        s.thin = 1;
        let out = run(&s).unwrap();
        assert!(out.is_empty());
        assert_eq!(out.meta.generator, GENERATOR);
        assert!(out.mean_count().is_degenerate());
    }

    #[test]
    fn runs_are_reproducible() {
        let s = ideal_spec(20_000, 11);
        let a = run(&s).unwrap();
        let b = run(&s).unwrap();
        assert_eq!(a, b);
        let c = run(&ideal_spec(20_000, 12)).unwrap();
        assert_ne!(a.frames, c.frames);
    }

    #[test]
    fn ideal_insertion_rates_follow_formula_per_n() {
        let s = ideal_spec(400_000, 5);
        let out = run(&s).unwrap();
        let zv = 4.0;
        for (n, t) in out.meta.insert_by_n.iter().enumerate() {
            if t.attempted < 2000 {
                continue;
            }
            let p = (zv / (n as f64 + 1.0)).min(1.0);
            let sd = (p * (1.0 - p) / t.attempted as f64).sqrt().max(1e-12);
            assert!((t.rate() - p).abs() < 4.0 * sd + 1e-9, "n={n}: {} vs {p}", t.rate());
        }
    }

    #[test]
    fn incremental_energy_tracks_hamiltonian() {
        let lj = PairPotential::lennard_jones(1.0, 1.0, Some(2.5)).unwrap();
        let mut s = ChainSpec::new(BoxSpec::periodic_1d(5.0), 1.0, 0.5, lj, 250_000, 10_000, 50, 9);
        s.blocks = 32;
        let out = run(&s).unwrap();
        assert!(out.meta.max_resync_drift < 1e-8, "{}", out.meta.max_resync_drift);
        assert!(out.meta.warnings.is_empty(), "{:?}", out.meta.warnings);
        let rate = out.meta.acceptance.displace.rate();
        assert!(rate > 0.2 && rate < 0.6, "{rate}");
    }

    #[test]
    fn hard_rods_never_overlap() {
        let rods = PairPotential::hard_core(1.0, None).unwrap();
        let s = ChainSpec::new(BoxSpec::free_1d(2.0), 1.0, 0.0, rods.clone(), 50_000, 5_000, 5, 2);
        let out = run(&s).unwrap();
        for f in &out.frames {
            let c = Configuration::new(s.bx, f.clone()).unwrap();
            assert!(hamiltonian(&c, &rods).unwrap().is_finite());
        }
    }

    #[test]
    fn merge_concatenates_blocks() {
        let s = ideal_spec(20_000, 4);
        let a = run_stream(&s, 0).unwrap();
        let b = run_stream(&s, 1).unwrap();
        let n = a.len() + b.len();
        let m = a.clone().merge(b.clone()).unwrap();
        assert_eq!(m.len(), n);
        assert_eq!(m.block_ranges().len(), a.block_ranges().len() + b.block_ranges().len());
        let par = run_replicas(&s, 2, 2).unwrap();
        assert_eq!(par, m);
    }
}
