//! Max-min (Rawlsian) allocations.
//!
//! The general case is a linear program. With positive valuations every
//! optimum gives all agents the same utility and hands out every item, so the
//! solver's vertex is checked for both rather than adjusted. Two agents or two
//! items admit direct algorithms that also emit supporting prices and budgets.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::lp::{solve_lp, LpProblem, LpStatus, Relation};
use crate::market::{
    utilities, verify_equilibrium, verify_pareto_optimal, Allocation, BudgetVector, Instance,
    PriceVector,
};
use crate::pricing::tree_budgets;
use crate::rational::{format_rational, sum, Rational};

/// Items (two agents) or agents (two items) sorted by relative preference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreferenceOrder {
    /// One ratio per item or agent, in original index order.
    pub ratios: Vec<Rational>,
    /// `permutation[pos]` is the original index at sorted position `pos`.
    pub permutation: Vec<usize>,
}

impl PreferenceOrder {
    fn sorted(ratios: Vec<Rational>, descending: bool) -> Self {
        let mut permutation: Vec<usize> = (0..ratios.len()).collect();
        // stable: ties keep index order
        if descending {
            permutation.sort_by(|&a, &b| ratios[b].cmp(&ratios[a]));
        } else {
            permutation.sort_by(|&a, &b| ratios[a].cmp(&ratios[b]));
        }
        PreferenceOrder {
            ratios,
            permutation,
        }
    }
}

/// Where the single shared good or shared agent sits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SplitPoint {
    /// Two agents: item `index` is split, agent 0 receiving `share` of it.
    Item { index: usize, share: Rational },
    /// Two items: agent `index` is the only one holding both, with these shares.
    Agent {
        index: usize,
        shares: (Rational, Rational),
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaxMinResult {
    pub allocation: Allocation,
    /// Common utility of every agent.
    pub lambda: Rational,
    pub prices: Option<PriceVector>,
    pub budgets: Option<BudgetVector>,
    pub order: Option<PreferenceOrder>,
    pub split: Option<SplitPoint>,
    /// Candidate split agents tried by the two-item search; zero elsewhere.
    pub candidates_evaluated: usize,
}

impl MaxMinResult {
    fn plain(allocation: Allocation, lambda: Rational) -> Self {
        MaxMinResult {
            allocation,
            lambda,
            prices: None,
            budgets: None,
            order: None,
            split: None,
            candidates_evaluated: 0,
        }
    }
}

/// Solves `max λ` s.t. `λ <= Σ_j v_ij x_ij`, `Σ_i x_ij <= 1`, `x >= 0`.
pub fn maxmin_lp(inst: &Instance) -> Result<MaxMinResult> {
    let (n, m) = (inst.agents(), inst.items());
    let var = |i: usize, j: usize| i * m + j;
    let lambda = n * m;
    let zeros = || vec![Rational::zero(); n * m + 1];

    let mut objective = zeros();
    objective[lambda] = Rational::one();
    let mut lp = LpProblem::maximize(objective);
    for i in 0..n {
        let mut row = zeros();
        row[lambda] = Rational::one();
        for j in 0..m {
            row[var(i, j)] = -inst.value(i, j);
        }
        lp.constrain(row, Relation::Le, Rational::zero());
    }
    for j in 0..m {
        let mut row = zeros();
        for i in 0..n {
            row[var(i, j)] = Rational::one();
        }
        lp.constrain(row, Relation::Le, Rational::one());
    }

    let solution = solve_lp(&lp)?;
    if solution.status != LpStatus::Optimal {
        return Err(Error::InternalVerificationFailed(format!(
            "max-min program ended {:?}",
            solution.status
        )));
    }
    let shares = (0..n)
        .map(|i| solution.x[var(i, 0)..var(i, 0) + m].to_vec())
        .collect();
    let allocation = Allocation::new(shares)?;
    let lambda = solution.objective_value;
    check_balanced(inst, &allocation, &lambda)?;
    Ok(MaxMinResult::plain(allocation, lambda))
}

fn check_balanced(inst: &Instance, alloc: &Allocation, lambda: &Rational) -> Result<()> {
    if !alloc.is_fully_allocated() {
        return Err(Error::InternalVerificationFailed(
            "max-min solution leaves an item partly unallocated".into(),
        ));
    }
    if let Some((i, u)) = utilities(inst, alloc)?
        .into_iter()
        .enumerate()
        .find(|(_, u)| u != lambda)
    {
        return Err(Error::InternalVerificationFailed(format!(
            "agent {i} has utility {}, expected {}",
            format_rational(&u),
            format_rational(lambda)
        )));
    }
    Ok(())
}

/// Two agents: agent 0 takes the items she values most relative to agent 1,
/// up to a median item that is split to equalize utilities.
///
/// Prices are agent 0's valuations.
pub fn maxmin_two_agents(inst: &Instance) -> Result<MaxMinResult> {
    if inst.agents() != 2 {
        return Err(Error::WrongAgentCount(inst.agents()));
    }
    let m = inst.items();
    let (v1, v2) = (inst.row(0), inst.row(1));
    let order = PreferenceOrder::sorted((0..m).map(|j| &v2[j] / &v1[j]).collect(), false);
    let perm = &order.permutation;

    let mut suffix2 = sum(v2);
    let mut prefix1 = Rational::zero();
    let mut pos = 0;
    loop {
        let j = perm[pos];
        suffix2 -= &v2[j];
        // prefix1 = Σ_{t<pos} v1, suffix2 = Σ_{t>pos} v2
        if &prefix1 + &v1[j] >= suffix2 || pos + 1 == m {
            break;
        }
        prefix1 += &v1[j];
        pos += 1;
    }
    let s = perm[pos];
    let share = (&suffix2 + &v2[s] - &prefix1) / (&v1[s] + &v2[s]);

    let mut alloc = Allocation::zeros(2, m);
    for (p, &j) in perm.iter().enumerate() {
        match p.cmp(&pos) {
            std::cmp::Ordering::Less => alloc.set(0, j, Rational::one()),
            std::cmp::Ordering::Greater => alloc.set(1, j, Rational::one()),
            std::cmp::Ordering::Equal => {
                alloc.set(0, j, share.clone());
                alloc.set(1, j, Rational::one() - &share);
            }
        }
    }
    let lambda = &prefix1 + &v1[s] * &share;
    let prices = PriceVector(v1.to_vec());
    finish(
        inst,
        alloc,
        lambda,
        prices,
        order,
        SplitPoint::Item { index: s, share },
        0,
    )
}

/// Two items: agents sorted by `v_i0 / v_i1` descending. Those before the
/// split agent `k` take only item 0, those after only item 1, and `k` shares.
/// `k` is found by binary search on the signs of her two shares.
///
/// Prices are the split agent's valuations.
pub fn maxmin_two_items(inst: &Instance) -> Result<MaxMinResult> {
    if inst.items() != 2 {
        return Err(Error::WrongItemCount(inst.items()));
    }
    let n = inst.agents();
    let order = PreferenceOrder::sorted(
        (0..n)
            .map(|i| inst.value(i, 0) / inst.value(i, 1))
            .collect(),
        true,
    );
    let perm = &order.permutation;
    // prefix[k] = Σ_{pos<k} 1/v_0, suffix[k] = Σ_{pos>=k} 1/v_1
    let mut prefix = vec![Rational::zero(); n + 1];
    for (pos, &i) in perm.iter().enumerate() {
        prefix[pos + 1] = &prefix[pos] + inst.value(i, 0).recip();
    }
    let mut suffix = vec![Rational::zero(); n + 1];
    for pos in (0..n).rev() {
        suffix[pos] = &suffix[pos + 1] + inst.value(perm[pos], 1).recip();
    }

    let (mut lo, mut hi) = (0usize, n - 1);
    let mut evaluated = 0;
    let (pos, x0, x1) = loop {
        let mid = lo + (hi - lo) / 2;
        evaluated += 1;
        let k = perm[mid];
        let (a, b) = (inst.value(k, 0), inst.value(k, 1));
        let (pa, sb) = (&prefix[mid], &suffix[mid + 1]);
        // x0(1 + A·a) + x1·A·b = 1,  x0·B·a + x1(1 + B·b) = 1
        let det = Rational::one() + pa * a + sb * b;
        let x0 = (Rational::one() + sb * b - pa * b) / &det;
        let x1 = (Rational::one() + pa * a - sb * a) / &det;
        if x0.is_negative() {
            if mid == lo {
                return Err(no_split_agent());
            }
            hi = mid - 1;
        } else if x1.is_negative() {
            if mid == hi {
                return Err(no_split_agent());
            }
            lo = mid + 1;
        } else {
            break (mid, x0, x1);
        }
    };

    let k = perm[pos];
    let lambda = inst.value(k, 0) * &x0 + inst.value(k, 1) * &x1;
    let mut alloc = Allocation::zeros(n, 2);
    for (p, &i) in perm.iter().enumerate() {
        match p.cmp(&pos) {
            std::cmp::Ordering::Less => alloc.set(i, 0, &lambda / inst.value(i, 0)),
            std::cmp::Ordering::Greater => alloc.set(i, 1, &lambda / inst.value(i, 1)),
            std::cmp::Ordering::Equal => {
                alloc.set(i, 0, x0.clone());
                alloc.set(i, 1, x1.clone());
            }
        }
    }
    let prices = PriceVector(inst.row(k).to_vec());
    finish(
        inst,
        alloc,
        lambda,
        prices,
        order,
        SplitPoint::Agent {
            index: k,
            shares: (x0, x1),
        },
        evaluated,
    )
}

fn no_split_agent() -> Error {
    Error::InternalVerificationFailed("binary search found no split agent".into())
}

fn finish(
    inst: &Instance,
    alloc: Allocation,
    lambda: Rational,
    prices: PriceVector,
    order: PreferenceOrder,
    split: SplitPoint,
    candidates_evaluated: usize,
) -> Result<MaxMinResult> {
    // Re-validate: column sums and share ranges.
    let alloc = Allocation::new(alloc.into_rows())?;
    check_balanced(inst, &alloc, &lambda)?;
    let budgets = tree_budgets(&alloc, &prices);
    let report = verify_equilibrium(inst, &alloc, &prices, &budgets)?;
    if !report.is_clearing() {
        return Err(Error::InternalVerificationFailed(
            "max-min prices do not support the allocation".into(),
        ));
    }
    Ok(MaxMinResult {
        allocation: alloc,
        lambda,
        prices: Some(prices),
        budgets: Some(budgets),
        order: Some(order),
        split: Some(split),
        candidates_evaluated,
    })
}

/// True iff `alloc` is Pareto optimal and gives every agent the same utility,
/// which together characterize max-min allocations.
pub fn check_maxmin_characterization(inst: &Instance, alloc: &Allocation) -> bool {
    let Ok(us) = utilities(inst, alloc) else {
        return false;
    };
    if us.windows(2).any(|w| w[0] != w[1]) {
        return false;
    }
    matches!(verify_pareto_optimal(inst, alloc), Ok(check) if check.is_optimal())
}
