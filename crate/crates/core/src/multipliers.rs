//! Tree multipliers that turn per-tree prices into one market equilibrium.
//!
//! Each tree of the cycle-free allocation is priced on its own scale. Scaling
//! tree `T`'s prices and budgets by `alpha[T] > 0` leaves incentives inside
//! the tree untouched; the multipliers are chosen by a linear program so that
//! no agent gains by spending on another tree's items. The capped gain table
//! and the fixed-point map over the simplex are kept as independent checks on
//! the program's output.

use num_traits::{One, Signed, Zero};

use crate::batch::{map_range, Execution};
use crate::error::{Error, ParetoWitness, Result};
use crate::graph::make_cycle_free;
use crate::lp::{solve_lp, LpProblem, LpStatus, Relation};
use crate::market::{
    verify_equilibrium, verify_pareto_optimal, Allocation, BudgetVector, EquilibriumReport,
    Instance, ParetoCheck, PriceVector,
};
use crate::pricing::{price_forest, ForestDecomposition, TreePricing};
use crate::rational::{format_rational, sum, Rational};

/// One multiplier per tree. Degenerate trees carry zero and are left out of
/// the simplex constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiplierVector(pub Vec<Rational>);

impl MultiplierVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> Rational {
        sum(&self.0)
    }

    pub fn in_simplex(&self) -> bool {
        self.0.iter().all(|a| !a.is_negative()) && self.total().is_one()
    }
}

/// Everything the gain computation needs about the unscaled forest pricing.
#[derive(Debug, Clone)]
pub struct GainState<'a> {
    inst: &'a Instance,
    pub forest: &'a ForestDecomposition,
    pub pricing: &'a TreePricing,
    /// Half the smallest valuation; caps every gain.
    pub v_min: Rational,
}

impl<'a> GainState<'a> {
    pub fn new(
        inst: &'a Instance,
        forest: &'a ForestDecomposition,
        pricing: &'a TreePricing,
    ) -> Self {
        let v_min = inst
            .rows()
            .iter()
            .flatten()
            .min()
            .expect("instances are nonempty")
            / Rational::from_integer(2.into());
        GainState {
            inst,
            forest,
            pricing,
            v_min,
        }
    }

    pub fn tree_count(&self) -> usize {
        self.forest.tree_count()
    }

    fn is_active_agent(&self, agent: usize) -> bool {
        !self.forest.is_degenerate(self.forest.tree_of_agent[agent])
    }

    fn active_trees(&self) -> Vec<usize> {
        (0..self.tree_count())
            .filter(|&t| !self.forest.is_degenerate(t))
            .collect()
    }

    fn check_alpha(&self, alpha: &MultiplierVector) -> Result<()> {
        if alpha.len() != self.tree_count() {
            return Err(Error::MultiplierLength {
                expected: self.tree_count(),
                found: alpha.len(),
            });
        }
        Ok(())
    }
}

/// Capped utility agent `agent` gains by redirecting her scaled budget to
/// `item`, which lies in another tree.
///
/// Three cases: the whole item is affordable, the item is free, or only part
/// of it is affordable. The result is clamped to `[0, v_min]`.
pub fn gain_ij(
    state: &GainState<'_>,
    alpha: &MultiplierVector,
    agent: usize,
    item: usize,
) -> Result<Rational> {
    state.check_alpha(alpha)?;
    let own_tree = state.forest.tree_of_agent[agent];
    let item_tree = state.forest.tree_of_item[item];
    if own_tree == item_tree {
        return Err(Error::SameTree { agent, item });
    }
    let budget = &state.pricing.budgets[agent];
    if !budget.is_positive() {
        return Err(Error::DegenerateAgent(agent));
    }
    let value = state.inst.value(agent, item);
    let utility = &state.pricing.utilities[agent];
    let scaled_budget = &alpha.0[own_tree] * budget;
    let scaled_price = &alpha.0[item_tree] * &state.pricing.prices[item];

    let gain = if scaled_price < scaled_budget {
        (value - &scaled_price * utility / &scaled_budget).max(Rational::zero())
    } else if alpha.0[item_tree].is_zero() {
        value.clone()
    } else {
        (value * &scaled_budget / &scaled_price - utility).max(Rational::zero())
    };
    Ok(gain.min(state.v_min.clone()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GainTable {
    /// `agent_item[i][j]`; zero for same-tree pairs and degenerate agents.
    pub agent_item: Vec<Vec<Rational>>,
    pub item: Vec<Rational>,
    pub tree: Vec<Rational>,
}

impl GainTable {
    pub fn is_zero(&self) -> bool {
        self.tree.iter().all(Zero::is_zero)
    }
}

pub fn gain_table(state: &GainState<'_>, alpha: &MultiplierVector) -> Result<GainTable> {
    gain_table_with(Execution::Parallel, state, alpha)
}

pub fn gain_table_with(
    exec: Execution,
    state: &GainState<'_>,
    alpha: &MultiplierVector,
) -> Result<GainTable> {
    state.check_alpha(alpha)?;
    let m = state.inst.items();
    let rows = map_range(exec, state.inst.agents(), |i| -> Result<Vec<Rational>> {
        (0..m)
            .map(|j| {
                if !state.is_active_agent(i)
                    || state.forest.tree_of_agent[i] == state.forest.tree_of_item[j]
                {
                    Ok(Rational::zero())
                } else {
                    gain_ij(state, alpha, i, j)
                }
            })
            .collect()
    });
    let agent_item = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let item: Vec<Rational> = (0..m)
        .map(|j| {
            agent_item
                .iter()
                .map(|row| &row[j])
                .max()
                .cloned()
                .unwrap_or_else(Rational::zero)
        })
        .collect();
    let mut tree = vec![Rational::zero(); state.tree_count()];
    for (j, g) in item.iter().enumerate() {
        let t = state.forest.tree_of_item[j];
        if *g > tree[t] {
            tree[t] = g.clone();
        }
    }
    Ok(GainTable {
        agent_item,
        item,
        tree,
    })
}

/// `F(alpha)_T = (alpha_T + GAIN_T) / (1 + Σ GAIN)`.
pub fn fixed_point_map(
    state: &GainState<'_>,
    alpha: &MultiplierVector,
) -> Result<MultiplierVector> {
    let table = gain_table(state, alpha)?;
    let denom = Rational::one() + sum(&table.tree);
    Ok(MultiplierVector(
        alpha
            .0
            .iter()
            .zip(&table.tree)
            .map(|(a, g)| (a + g) / &denom)
            .collect(),
    ))
}

/// Maximizes `lambda` subject to, for every active agent `i` and item `j` in
/// another tree, `(u_i/b_i)·alpha[T(j)] >= (v_ij/p_j)·alpha[T(i)]`, with
/// `Σ alpha = 1` over active trees and `lambda <= alpha_T <= 1`.
///
/// Returns the multipliers and `lambda`. An infeasible program means the
/// allocation was not Pareto optimal.
pub fn solve_multiplier_lp(state: &GainState<'_>) -> Result<(MultiplierVector, Rational)> {
    let active = state.active_trees();
    let k = active.len();
    let mut var_of_tree = vec![usize::MAX; state.tree_count()];
    for (var, &t) in active.iter().enumerate() {
        var_of_tree[t] = var;
    }
    let lambda = k;
    let zeros = || vec![Rational::zero(); k + 1];
    let mut objective = zeros();
    objective[lambda] = Rational::one();
    let mut lp = LpProblem::maximize(objective);

    for i in (0..state.inst.agents()).filter(|&i| state.is_active_agent(i)) {
        let own = state.forest.tree_of_agent[i];
        let bang_per_token = &state.pricing.utilities[i] / &state.pricing.budgets[i];
        // Only the best item of each foreign tree binds.
        let mut best: Vec<Option<Rational>> = vec![None; state.tree_count()];
        for j in 0..state.inst.items() {
            let t = state.forest.tree_of_item[j];
            if t == own {
                continue;
            }
            let ratio = state.inst.value(i, j) / &state.pricing.prices[j];
            if best[t].as_ref().is_none_or(|b| ratio > *b) {
                best[t] = Some(ratio);
            }
        }
        for (t, ratio) in best.into_iter().enumerate() {
            let Some(ratio) = ratio else { continue };
            let mut row = zeros();
            row[var_of_tree[t]] = bang_per_token.clone();
            row[var_of_tree[own]] = -ratio;
            lp.constrain(row, Relation::Ge, Rational::zero());
        }
    }
    let mut simplex = zeros();
    for a in simplex.iter_mut().take(k) {
        *a = Rational::one();
    }
    lp.constrain(simplex, Relation::Eq, Rational::one());
    for var in 0..k {
        let mut row = zeros();
        row[var] = Rational::one();
        row[lambda] = -Rational::one();
        lp.constrain(row, Relation::Ge, Rational::zero());
        lp.bound(var, Rational::zero(), Some(Rational::one()));
    }

    let solution = solve_lp(&lp)?;
    if solution.status != LpStatus::Optimal || !solution.objective_value.is_positive() {
        return Err(Error::not_pareto(ParetoWitness::InfeasibleMultipliers));
    }
    let mut alpha = vec![Rational::zero(); state.tree_count()];
    for (var, &t) in active.iter().enumerate() {
        alpha[t] = solution.x[var].clone();
    }
    Ok((MultiplierVector(alpha), solution.objective_value))
}

/// Scaled prices and budgets supporting a cycle-free allocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equilibrium {
    pub prices: PriceVector,
    pub budgets: BudgetVector,
    pub alpha: MultiplierVector,
    pub lambda: Rational,
    /// The cycle-free allocation the prices were built on.
    pub allocation: Allocation,
    pub forest: ForestDecomposition,
    pub unscaled: TreePricing,
    pub report: EquilibriumReport,
}

/// Applies `alpha` and re-verifies: demand sets, market clearing, and an
/// all-zero gain table.
pub fn assemble_equilibrium(
    inst: &Instance,
    alloc: &Allocation,
    forest: &ForestDecomposition,
    pricing: &TreePricing,
    alpha: &MultiplierVector,
    lambda: Rational,
) -> Result<Equilibrium> {
    let prices = PriceVector(
        pricing
            .prices
            .iter()
            .zip(&forest.tree_of_item)
            .map(|(p, &t)| p * &alpha.0[t])
            .collect(),
    );
    let budgets = BudgetVector(
        pricing
            .budgets
            .iter()
            .zip(&forest.tree_of_agent)
            .map(|(b, &t)| b * &alpha.0[t])
            .collect(),
    );
    let report = verify_equilibrium(inst, alloc, &prices, &budgets)?;
    if !report.is_clearing() {
        return Err(Error::InternalVerificationFailed(format!(
            "scaled prices do not clear the market for agents {:?}",
            report.failing_agents().map(|r| r.agent).collect::<Vec<_>>()
        )));
    }
    let state = GainState::new(inst, forest, pricing);
    if !gain_table(&state, alpha)?.is_zero() {
        return Err(Error::InternalVerificationFailed(
            "gain table is not zero at the multiplier solution".into(),
        ));
    }
    Ok(Equilibrium {
        prices,
        budgets,
        alpha: alpha.clone(),
        lambda,
        allocation: alloc.clone(),
        forest: forest.clone(),
        unscaled: pricing.clone(),
        report,
    })
}

/// An equilibrium together with its check against the caller's allocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Support {
    pub equilibrium: Equilibrium,
    pub original: Allocation,
    pub original_report: EquilibriumReport,
}

/// Prices and budgets supporting the Pareto-optimal allocation `y`.
///
/// Rejects `y` up front when the exchange-graph check finds an improving
/// trade; see [`support_unchecked`] for the path without that check.
pub fn support_pipeline(inst: &Instance, y: &Allocation) -> Result<Support> {
    match verify_pareto_optimal(inst, y)? {
        ParetoCheck::Optimal => support_unchecked(inst, y),
        ParetoCheck::TradingCycle(cert) => {
            Err(Error::not_pareto(ParetoWitness::TradingCycle(cert)))
        }
        ParetoCheck::UnallocatedMass(item) => {
            Err(Error::not_pareto(ParetoWitness::UnallocatedMass { item }))
        }
    }
}

/// [`support_pipeline`] without the up-front exchange-graph check. Non-optimal
/// inputs are still rejected, by cycle elimination, by an in-tree deviation,
/// or by an infeasible multiplier program.
pub fn support_unchecked(inst: &Instance, y: &Allocation) -> Result<Support> {
    y.check_dims(inst)?;
    if let Some(item) = (0..inst.items()).find(|&j| !y.column_sum(j).is_one()) {
        return Err(Error::not_pareto(ParetoWitness::UnallocatedMass { item }));
    }
    let x = make_cycle_free(inst, y)?;
    let (forest, pricing) = price_forest(inst, &x)?;
    check_tree_deviations(inst, &x, &forest, &pricing)?;
    let state = GainState::new(inst, &forest, &pricing);
    let (alpha, lambda) = solve_multiplier_lp(&state)?;
    let equilibrium = assemble_equilibrium(inst, &x, &forest, &pricing, &alpha, lambda)?;

    let original_report = verify_equilibrium(inst, y, &equilibrium.prices, &equilibrium.budgets)?;
    if !original_report.is_clearing() {
        let bad: Vec<String> = original_report
            .agents
            .iter()
            .filter(|r| !r.in_demand_set || r.spend != r.budget)
            .map(|r| {
                format!(
                    "agent {} (spend {}, budget {})",
                    r.agent,
                    format_rational(&r.spend),
                    format_rational(&r.budget)
                )
            })
            .collect();
        return Err(Error::InternalVerificationFailed(format!(
            "equilibrium does not support the input allocation: {}",
            bad.join(", ")
        )));
    }
    Ok(Support {
        equilibrium,
        original: y.clone(),
        original_report,
    })
}

/// No agent strictly prefers, per token, an item of her own tree she holds
/// none of.
fn check_tree_deviations(
    inst: &Instance,
    x: &Allocation,
    forest: &ForestDecomposition,
    pricing: &TreePricing,
) -> Result<()> {
    for i in 0..inst.agents() {
        let Some(held) = (0..inst.items()).find(|&j| x.get(i, j).is_positive()) else {
            continue;
        };
        let own_rate = inst.value(i, held) / &pricing.prices[held];
        let tree = forest.tree_of_agent[i];
        for j in forest.items_in(tree) {
            if x.get(i, j).is_zero() && inst.value(i, j) / &pricing.prices[j] > own_rate {
                return Err(Error::not_pareto(ParetoWitness::TreeDeviation {
                    agent: i,
                    item: j,
                }));
            }
        }
    }
    Ok(())
}
