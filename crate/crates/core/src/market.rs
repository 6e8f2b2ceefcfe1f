//! Market data model, demand oracle, and independent verifiers.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Deref;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::graph::Vertex;
use crate::rational::{dot, format_rational, is_unit_interval, sum, Rational};

/// `n` agents by `m` items, every valuation strictly positive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    values: Vec<Vec<Rational>>,
    items: usize,
}

impl Instance {
    /// Validates a raw valuation matrix.
    pub fn new(values: Vec<Vec<Rational>>) -> Result<Self> {
        let items = check_rectangular(&values)?;
        for (i, row) in values.iter().enumerate() {
            if let Some(j) = row.iter().position(|v| !v.is_positive()) {
                return Err(Error::NonPositiveValuation { agent: i, item: j });
            }
        }
        Ok(Instance { values, items })
    }

    pub fn agents(&self) -> usize {
        self.values.len()
    }

    pub fn items(&self) -> usize {
        self.items
    }

    pub fn value(&self, agent: usize, item: usize) -> &Rational {
        &self.values[agent][item]
    }

    pub fn row(&self, agent: usize) -> &[Rational] {
        &self.values[agent]
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.values
    }

    fn check_agent(&self, agent: usize) -> Result<()> {
        if agent >= self.agents() {
            return Err(Error::IndexOutOfRange {
                what: "agent",
                index: agent,
            });
        }
        Ok(())
    }
}

/// Same as [`Instance::new`].
pub fn validate_instance(raw_valuations: Vec<Vec<Rational>>) -> Result<Instance> {
    Instance::new(raw_valuations)
}

fn check_rectangular(rows: &[Vec<Rational>]) -> Result<usize> {
    let width = rows.first().map(Vec::len).ok_or(Error::EmptyMatrix)?;
    if width == 0 {
        return Err(Error::EmptyMatrix);
    }
    for (row, r) in rows.iter().enumerate() {
        if r.len() != width {
            return Err(Error::RaggedMatrix {
                row,
                expected: width,
                found: r.len(),
            });
        }
    }
    Ok(width)
}

/// Fractional assignment of items to agents; `x[i][j]` is the share of item
/// `j` held by agent `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    shares: Vec<Vec<Rational>>,
    items: usize,
}

impl Allocation {
    /// Checks box constraints and per-item supply.
    pub fn new(shares: Vec<Vec<Rational>>) -> Result<Self> {
        let items = check_rectangular(&shares)?;
        for (i, row) in shares.iter().enumerate() {
            if let Some(j) = row.iter().position(|x| !is_unit_interval(x)) {
                return Err(Error::EntryOutOfRange { agent: i, item: j });
            }
        }
        let alloc = Allocation { shares, items };
        if let Some(j) = (0..items).find(|&j| alloc.column_sum(j) > Rational::one()) {
            return Err(Error::OverAllocated { item: j });
        }
        Ok(alloc)
    }

    pub fn zeros(agents: usize, items: usize) -> Self {
        Allocation {
            shares: vec![vec![Rational::zero(); items]; agents],
            items,
        }
    }

    pub fn agents(&self) -> usize {
        self.shares.len()
    }

    pub fn items(&self) -> usize {
        self.items
    }

    pub fn get(&self, agent: usize, item: usize) -> &Rational {
        &self.shares[agent][item]
    }

    pub fn row(&self, agent: usize) -> &[Rational] {
        &self.shares[agent]
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.shares
    }

    pub fn column_sum(&self, item: usize) -> Rational {
        sum(self.shares.iter().map(|row| &row[item]))
    }

    pub fn is_fully_allocated(&self) -> bool {
        (0..self.items).all(|j| self.column_sum(j).is_one())
    }

    /// Number of strictly positive entries.
    pub fn support_size(&self) -> usize {
        self.shares
            .iter()
            .flatten()
            .filter(|x| x.is_positive())
            .count()
    }

    pub(crate) fn set(&mut self, agent: usize, item: usize, value: Rational) {
        self.shares[agent][item] = value;
    }

    pub(crate) fn add(&mut self, agent: usize, item: usize, delta: &Rational) {
        self.shares[agent][item] += delta;
    }

    pub fn check_dims(&self, inst: &Instance) -> Result<()> {
        if self.agents() != inst.agents() || self.items() != inst.items() {
            return Err(Error::DimensionMismatch(format!(
                "allocation is {}x{}, instance is {}x{}",
                self.agents(),
                self.items(),
                inst.agents(),
                inst.items()
            )));
        }
        Ok(())
    }

    pub fn into_rows(self) -> Vec<Vec<Rational>> {
        self.shares
    }
}

macro_rules! rational_vector {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq)]
        pub struct $name(pub Vec<Rational>);

        impl Deref for $name {
            type Target = [Rational];
            fn deref(&self) -> &[Rational] {
                &self.0
            }
        }

        impl From<Vec<Rational>> for $name {
            fn from(v: Vec<Rational>) -> Self {
                $name(v)
            }
        }
    };
}

rational_vector!(
    /// Tokens per whole item.
    PriceVector
);
rational_vector!(
    /// Tokens per agent.
    BudgetVector
);

/// `Σ_j x[i][j]·v[i][j]`.
pub fn utility(inst: &Instance, alloc: &Allocation, agent: usize) -> Result<Rational> {
    alloc.check_dims(inst)?;
    inst.check_agent(agent)?;
    Ok(dot(alloc.row(agent), inst.row(agent)))
}

pub fn utilities(inst: &Instance, alloc: &Allocation) -> Result<Vec<Rational>> {
    alloc.check_dims(inst)?;
    Ok((0..inst.agents())
        .map(|i| dot(alloc.row(i), inst.row(i)))
        .collect())
}

fn check_prices(inst: &Instance, prices: &[Rational]) -> Result<()> {
    if prices.len() != inst.items() {
        return Err(Error::DimensionMismatch(format!(
            "{} prices for {} items",
            prices.len(),
            inst.items()
        )));
    }
    if let Some(j) = prices.iter().position(|p| !p.is_positive()) {
        return Err(Error::ZeroPrice(j));
    }
    Ok(())
}

/// Best utility agent `agent` can buy with `budget` at `prices`, with at most
/// one unit of each item. Greedy by bang-per-buck, ties by item index.
pub fn max_affordable_utility(
    inst: &Instance,
    prices: &[Rational],
    budget: &Rational,
    agent: usize,
) -> Result<Rational> {
    check_prices(inst, prices)?;
    inst.check_agent(agent)?;
    if budget.is_negative() {
        return Err(Error::Negative("budget"));
    }
    let values = inst.row(agent);
    let mut order: Vec<usize> = (0..inst.items()).collect();
    // v_a/p_a > v_b/p_b  <=>  v_a·p_b > v_b·p_a
    order.sort_by(|&a, &b| (&values[b] * &prices[a]).cmp(&(&values[a] * &prices[b])));

    let mut remaining = budget.clone();
    let mut total = Rational::zero();
    for j in order {
        if remaining.is_zero() {
            break;
        }
        if prices[j] <= remaining {
            remaining -= &prices[j];
            total += &values[j];
        } else {
            total += &values[j] * &remaining / &prices[j];
            remaining = Rational::zero();
        }
    }
    Ok(total)
}

/// Outcome of checking one agent's bundle against the demand oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemandReport {
    pub agent: usize,
    pub achieved_utility: Rational,
    pub optimal_utility: Rational,
    pub spend: Rational,
    pub budget: Rational,
    pub in_demand_set: bool,
}

pub fn is_in_demand_set(
    inst: &Instance,
    prices: &[Rational],
    budget: &Rational,
    agent: usize,
    bundle: &[Rational],
) -> Result<DemandReport> {
    let optimal_utility = max_affordable_utility(inst, prices, budget, agent)?;
    if bundle.len() != inst.items() {
        return Err(Error::DimensionMismatch(format!(
            "bundle has {} entries for {} items",
            bundle.len(),
            inst.items()
        )));
    }
    let spend = dot(bundle, prices);
    let achieved_utility = dot(bundle, inst.row(agent));
    let in_demand_set = spend <= *budget && achieved_utility == optimal_utility;
    Ok(DemandReport {
        agent,
        achieved_utility,
        optimal_utility,
        spend,
        budget: budget.clone(),
        in_demand_set,
    })
}

/// Per-agent demand checks plus market-clearing flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquilibriumReport {
    pub agents: Vec<DemandReport>,
    pub items_fully_allocated: bool,
    pub budgets_exhausted: bool,
}

impl EquilibriumReport {
    /// Every agent holds a bundle from her demand set.
    pub fn passed(&self) -> bool {
        self.agents.iter().all(|r| r.in_demand_set)
    }

    /// Demand sets hold, every item is sold, and every token is spent.
    pub fn is_clearing(&self) -> bool {
        self.passed() && self.items_fully_allocated && self.budgets_exhausted
    }

    pub fn failing_agents(&self) -> impl Iterator<Item = &DemandReport> {
        self.agents.iter().filter(|r| !r.in_demand_set)
    }
}

pub fn verify_equilibrium(
    inst: &Instance,
    alloc: &Allocation,
    prices: &[Rational],
    budgets: &[Rational],
) -> Result<EquilibriumReport> {
    alloc.check_dims(inst)?;
    if budgets.len() != inst.agents() {
        return Err(Error::DimensionMismatch(format!(
            "{} budgets for {} agents",
            budgets.len(),
            inst.agents()
        )));
    }
    let agents = (0..inst.agents())
        .map(|i| is_in_demand_set(inst, prices, &budgets[i], i, alloc.row(i)))
        .collect::<Result<Vec<_>>>()?;
    let budgets_exhausted = agents.iter().all(|r| r.spend == r.budget);
    Ok(EquilibriumReport {
        agents,
        items_fully_allocated: alloc.is_fully_allocated(),
        budgets_exhausted,
    })
}

/// A cycle in the exchange graph along which every agent can trade to a
/// strict aggregate gain.
///
/// `vertices` alternates agent, item, agent, ... and closes back to the first
/// agent. Each agent receives the item that follows her; each item is given up
/// by the agent that follows it, who holds a positive share of it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TradingCycleCertificate {
    pub vertices: Vec<Vertex>,
    pub improvement_ratio: Rational,
}

/// One hop of a trading cycle: `receiver` takes some of `item` from `giver`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trade {
    pub receiver: usize,
    pub item: usize,
    pub giver: usize,
}

impl TradingCycleCertificate {
    pub fn trades(&self) -> Vec<Trade> {
        let k = self.vertices.len();
        (0..k)
            .step_by(2)
            .map(|s| {
                match (
                    self.vertices[s],
                    self.vertices[s + 1],
                    self.vertices[(s + 2) % k],
                ) {
                    (Vertex::Agent(receiver), Vertex::Item(item), Vertex::Agent(giver)) => Trade {
                        receiver,
                        item,
                        giver,
                    },
                    _ => unreachable!("certificate vertices alternate agent/item"),
                }
            })
            .collect()
    }
}

impl fmt::Display for TradingCycleCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.vertices {
            write!(f, "{v} -> ")?;
        }
        if let Some(first) = self.vertices.first() {
            write!(f, "{first}")?;
        }
        write!(f, " (ratio {})", format_rational(&self.improvement_ratio))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParetoCheck {
    Optimal,
    TradingCycle(TradingCycleCertificate),
    UnallocatedMass(usize),
}

impl ParetoCheck {
    pub fn is_optimal(&self) -> bool {
        matches!(self, ParetoCheck::Optimal)
    }
}

/// Searches the exchange graph for a cycle with ratio product above one.
///
/// Edges: agent `i -> item j` with weight `v[i][j]` always, and
/// `item j -> agent i` with weight `1/v[i][j]` when `x[i][j] > 0`. A cycle's
/// weight product is the factor by which the first agent gains when every
/// other agent on it trades at exact indifference. The search is a
/// multiplicative Bellman-Ford in exact arithmetic.
pub fn verify_pareto_optimal(inst: &Instance, alloc: &Allocation) -> Result<ParetoCheck> {
    alloc.check_dims(inst)?;
    if let Some(j) = (0..inst.items()).find(|&j| !alloc.column_sum(j).is_one()) {
        return Ok(ParetoCheck::UnallocatedMass(j));
    }
    let n = inst.agents();
    let m = inst.items();
    let node_count = n + m;

    let mut edges: Vec<(usize, usize, Rational)> = Vec::new();
    for i in 0..n {
        for j in 0..m {
            edges.push((i, n + j, inst.value(i, j).clone()));
            if alloc.get(i, j).is_positive() {
                edges.push((n + j, i, inst.value(i, j).recip()));
            }
        }
    }

    let mut best = vec![Rational::one(); node_count];
    let mut pred: Vec<Option<usize>> = vec![None; node_count];
    let mut last_updated = None;
    for _ in 0..node_count {
        last_updated = None;
        for (u, v, w) in &edges {
            let candidate = &best[*u] * w;
            if candidate > best[*v] {
                best[*v] = candidate;
                pred[*v] = Some(*u);
                last_updated = Some(*v);
            }
        }
        if last_updated.is_none() {
            return Ok(ParetoCheck::Optimal);
        }
    }

    let mut on_cycle = last_updated.expect("updated in final round");
    for _ in 0..node_count {
        on_cycle = pred[on_cycle].expect("relaxed vertex has a predecessor");
    }
    let mut backwards = vec![on_cycle];
    let mut cur = pred[on_cycle].expect("cycle vertex has a predecessor");
    while cur != on_cycle {
        backwards.push(cur);
        cur = pred[cur].expect("cycle vertex has a predecessor");
    }
    backwards.reverse();
    let start = backwards
        .iter()
        .position(|&v| v < n)
        .expect("exchange cycles contain agents");
    backwards.rotate_left(start);

    let vertices: Vec<Vertex> = backwards
        .iter()
        .map(|&v| {
            if v < n {
                Vertex::Agent(v)
            } else {
                Vertex::Item(v - n)
            }
        })
        .collect();
    let cert = TradingCycleCertificate {
        improvement_ratio: Rational::one(),
        vertices,
    };
    let improvement_ratio = cert
        .trades()
        .iter()
        .map(|t| inst.value(t.receiver, t.item) / inst.value(t.giver, t.item))
        .fold(Rational::one(), |acc, r| acc * r);
    if improvement_ratio.cmp(&Rational::one()) != Ordering::Greater {
        return Err(Error::InternalVerificationFailed(
            "extracted exchange cycle does not improve".into(),
        ));
    }
    Ok(ParetoCheck::TradingCycle(TradingCycleCertificate {
        improvement_ratio,
        ..cert
    }))
}
