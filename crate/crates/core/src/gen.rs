//! Deterministic random instances and Pareto-optimal allocations.
//!
//! The random source is SplitMix64, written out here so other
//! implementations can reproduce the same streams:
//!
//! ```text
//! state += 0x9E3779B97F4A7C15
//! z = state
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! return z ^ (z >> 31)
//! ```
//!
//! All arithmetic wraps modulo 2^64. A draw from `0..k` is `next_u64() % k`.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::lp::{solve_lp, LpProblem, LpStatus, Relation};
use crate::market::{Allocation, Instance};
use crate::maxmin::maxmin_lp;
use crate::rational::{int, ratio, Rational};

/// Mixed into the instance seed to get the allocation stream.
const ALLOCATION_STREAM: u64 = 0xD1B5_4A32_D192_ED03;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform-ish draw from `0..k`; `k` must be positive.
    pub fn below(&mut self, k: usize) -> usize {
        (self.next_u64() % k as u64) as usize
    }

    pub fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        &xs[self.below(xs.len())]
    }
}

/// Halves from 1/2 to 20: `k/2` for `k = 1..=40`.
pub fn default_value_grid() -> Vec<Rational> {
    (1..=40).map(|k| ratio(k, 2)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenConfig {
    pub seed: u64,
    pub agents: usize,
    pub items: usize,
    pub value_grid: Vec<Rational>,
}

impl GenConfig {
    pub fn new(seed: u64, agents: usize, items: usize) -> Self {
        GenConfig {
            seed,
            agents,
            items,
            value_grid: default_value_grid(),
        }
    }

    pub fn with_grid(mut self, grid: Vec<Rational>) -> Self {
        self.value_grid = grid;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.agents == 0 || self.items == 0 {
            return Err(Error::InvalidConfig(
                "agent and item counts must be positive".into(),
            ));
        }
        if self.value_grid.is_empty() {
            return Err(Error::InvalidConfig("value grid is empty".into()));
        }
        if self.value_grid.iter().any(|v| !v.is_positive()) {
            return Err(Error::InvalidConfig(
                "value grid entries must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// How [`gen_pareto_allocation`] produces its allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GenMode {
    /// A vertex maximizing randomly weighted welfare. Usually integral.
    Welfare,
    /// A max-min allocation followed by a few random utility-preserving
    /// exchanges, which leave items shared along cycles.
    MaxMinPerturbed,
}

/// Every valuation drawn independently from the grid, row by row.
pub fn gen_instance(cfg: &GenConfig) -> Result<Instance> {
    cfg.validate()?;
    let mut rng = SplitMix64::new(cfg.seed);
    let rows = (0..cfg.agents)
        .map(|_| {
            (0..cfg.items)
                .map(|_| rng.pick(&cfg.value_grid).clone())
                .collect()
        })
        .collect();
    Instance::new(rows)
}

/// Agents fall into `ceil(n/2)` types; each agent's row is her type's row
/// times a grid factor. Same-type agents then have proportional valuations,
/// which is what lets [`GenMode::MaxMinPerturbed`] shuffle shares between
/// them.
pub fn gen_typed_instance(cfg: &GenConfig) -> Result<Instance> {
    cfg.validate()?;
    let mut rng = SplitMix64::new(cfg.seed);
    let types = cfg.agents.div_ceil(2);
    let base: Vec<Vec<Rational>> = (0..types)
        .map(|_| {
            (0..cfg.items)
                .map(|_| rng.pick(&cfg.value_grid).clone())
                .collect()
        })
        .collect();
    let rows = (0..cfg.agents)
        .map(|_| {
            let row = &base[rng.below(types)];
            let scale = rng.pick(&cfg.value_grid).clone();
            row.iter().map(|v| v * &scale).collect()
        })
        .collect();
    Instance::new(rows)
}

pub fn gen_pareto_allocation(inst: &Instance, seed: u64, mode: GenMode) -> Result<Allocation> {
    let mut rng = SplitMix64::new(seed);
    match mode {
        GenMode::Welfare => {
            let weights: Vec<Rational> = (0..inst.agents())
                .map(|_| int(1 + rng.below(8) as i64))
                .collect();
            max_weighted_welfare(inst, &weights)
        }
        GenMode::MaxMinPerturbed => {
            let mut alloc = maxmin_lp(inst)?.allocation;
            let rounds = rng.below(5);
            for _ in 0..rounds {
                if !perturb(inst, &mut alloc, &mut rng) {
                    break;
                }
            }
            Ok(alloc)
        }
    }
}

/// An instance and a Pareto-optimal allocation for it. The welfare mode uses
/// [`gen_instance`], the max-min mode [`gen_typed_instance`].
pub fn gen_case(cfg: &GenConfig, mode: GenMode) -> Result<(Instance, Allocation)> {
    let inst = match mode {
        GenMode::Welfare => gen_instance(cfg)?,
        GenMode::MaxMinPerturbed => gen_typed_instance(cfg)?,
    };
    let alloc = gen_pareto_allocation(&inst, cfg.seed ^ ALLOCATION_STREAM, mode)?;
    Ok((inst, alloc))
}

/// Maximizes `Σ_i w_i Σ_j v_ij x_ij` over feasible allocations.
pub fn max_weighted_welfare(inst: &Instance, weights: &[Rational]) -> Result<Allocation> {
    let (n, m) = (inst.agents(), inst.items());
    if weights.len() != n || weights.iter().any(|w| !w.is_positive()) {
        return Err(Error::InvalidConfig(
            "welfare weights must be positive, one per agent".into(),
        ));
    }
    let objective = (0..n)
        .flat_map(|i| (0..m).map(move |j| &weights[i] * inst.value(i, j)))
        .collect();
    let mut lp = LpProblem::maximize(objective);
    for j in 0..m {
        let mut row = vec![Rational::zero(); n * m];
        for i in 0..n {
            row[i * m + j] = Rational::one();
        }
        lp.constrain(row, Relation::Le, Rational::one());
    }
    let solution = solve_lp(&lp)?;
    if solution.status != LpStatus::Optimal {
        return Err(Error::InternalVerificationFailed(format!(
            "welfare program ended {:?}",
            solution.status
        )));
    }
    Allocation::new(solution.x.chunks(m).map(<[Rational]>::to_vec).collect())
}

/// One utility-preserving exchange between two agents with proportional
/// valuations on two items: `i` passes `eps` of `j` to `k`, `k` passes
/// `eps·v_ij/v_il` of `l` back. Returns false when no such pair exists.
fn perturb(inst: &Instance, alloc: &mut Allocation, rng: &mut SplitMix64) -> bool {
    let (n, m) = (inst.agents(), inst.items());
    let mut candidates = Vec::new();
    for i in 0..n {
        for k in (0..n).filter(|&k| k != i) {
            for j in (0..m).filter(|&j| alloc.get(i, j).is_positive()) {
                for l in (0..m).filter(|&l| l != j && alloc.get(k, l).is_positive()) {
                    if inst.value(i, j) * inst.value(k, l) == inst.value(i, l) * inst.value(k, j) {
                        candidates.push((i, k, j, l));
                    }
                }
            }
        }
    }
    if candidates.is_empty() {
        return false;
    }
    let (i, k, j, l) = *rng.pick(&candidates);
    let rate = inst.value(i, j) / inst.value(i, l);
    let eps_max = alloc.get(i, j).clone().min(alloc.get(k, l) / &rate);
    let eps = eps_max * ratio(1 + rng.below(3) as i64, 4);
    let delta = &eps * &rate;
    alloc.add(i, j, &-eps.clone());
    alloc.add(k, j, &eps);
    alloc.add(k, l, &-delta.clone());
    alloc.add(i, l, &delta);
    true
}

/// A feasible allocation strictly dominated by `base`.
///
/// Picks agents `i`, `k` and items `j`, `l` with `k` holding `j`, `i` holding
/// `l`, and `v_ij·v_kl < v_il·v_kj`. Then `k` hands `i` some of `j` and takes
/// back exactly enough of `l` to stay indifferent, which leaves `i` strictly
/// worse off. Returns `None` when `base` has no such pair.
pub fn gen_dominated_allocation(
    inst: &Instance,
    base: &Allocation,
    seed: u64,
) -> Option<Allocation> {
    let (n, m) = (inst.agents(), inst.items());
    let mut candidates = Vec::new();
    for i in 0..n {
        for k in (0..n).filter(|&k| k != i) {
            for j in (0..m).filter(|&j| base.get(k, j).is_positive()) {
                for l in (0..m).filter(|&l| l != j && base.get(i, l).is_positive()) {
                    if inst.value(i, j) * inst.value(k, l) < inst.value(i, l) * inst.value(k, j) {
                        candidates.push((i, k, j, l));
                    }
                }
            }
        }
    }
    if candidates.is_empty() {
        return None;
    }
    let mut rng = SplitMix64::new(seed);
    let (i, k, j, l) = *rng.pick(&candidates);
    let rate = inst.value(k, j) / inst.value(k, l);
    let eps = base.get(k, j).clone().min(base.get(i, l) / &rate) / int(2);
    let delta = &eps * &rate;
    let mut alloc = base.clone();
    alloc.add(k, j, &-eps.clone());
    alloc.add(i, j, &eps);
    alloc.add(i, l, &-delta.clone());
    alloc.add(k, l, &delta);
    Some(alloc)
}
