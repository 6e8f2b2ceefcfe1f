//! Per-tree prices by indifference propagation, and matching budgets.

use std::collections::VecDeque;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::graph::{graph_of, AllocationGraph};
use crate::market::{utilities, Allocation, BudgetVector, Instance, PriceVector};
use crate::rational::{dot, Rational};

/// Connected components of a forest-shaped allocation graph.
///
/// Trees are numbered in order of their lowest-index agent, which is also the
/// tree's root. An agent with an empty bundle forms a degenerate tree with no
/// root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForestDecomposition {
    pub tree_of_agent: Vec<usize>,
    pub tree_of_item: Vec<usize>,
    pub roots: Vec<Option<usize>>,
}

impl ForestDecomposition {
    pub fn tree_count(&self) -> usize {
        self.roots.len()
    }

    pub fn is_degenerate(&self, tree: usize) -> bool {
        self.roots[tree].is_none()
    }

    pub fn agents_in(&self, tree: usize) -> impl Iterator<Item = usize> + '_ {
        self.tree_of_agent
            .iter()
            .enumerate()
            .filter(move |(_, &t)| t == tree)
            .map(|(i, _)| i)
    }

    pub fn items_in(&self, tree: usize) -> impl Iterator<Item = usize> + '_ {
        self.tree_of_item
            .iter()
            .enumerate()
            .filter(move |(_, &t)| t == tree)
            .map(|(j, _)| j)
    }
}

pub fn decompose_forest(graph: &AllocationGraph) -> Result<ForestDecomposition> {
    if !graph.is_forest() {
        return Err(Error::NotAForest);
    }
    let mut tree_of_agent = vec![usize::MAX; graph.agents()];
    let mut tree_of_item = vec![usize::MAX; graph.items()];
    let mut roots = Vec::new();
    for start in 0..graph.agents() {
        if tree_of_agent[start] != usize::MAX {
            continue;
        }
        let tree = roots.len();
        roots.push((!graph.items_of(start).is_empty()).then_some(start));
        tree_of_agent[start] = tree;
        let mut stack = vec![start];
        while let Some(agent) = stack.pop() {
            for &item in graph.items_of(agent) {
                if tree_of_item[item] != usize::MAX {
                    continue;
                }
                tree_of_item[item] = tree;
                for &other in graph.agents_of(item) {
                    if tree_of_agent[other] == usize::MAX {
                        tree_of_agent[other] = tree;
                        stack.push(other);
                    }
                }
            }
        }
    }
    if let Some(item) = tree_of_item.iter().position(|&t| t == usize::MAX) {
        return Err(Error::ItemWithoutAgent(item));
    }
    Ok(ForestDecomposition {
        tree_of_agent,
        tree_of_item,
        roots,
    })
}

/// Prices every item in `tree`, breadth-first from its root.
///
/// The root's items are priced at her valuations; each later agent reached
/// through an already-priced item `j'` prices her other items `k` at
/// `v[i][k]·p[j'] / v[i][j']`, making her indifferent per token across her
/// bundle. Returns `(item, price)` pairs sorted by item.
pub fn price_tree(
    inst: &Instance,
    graph: &AllocationGraph,
    decomp: &ForestDecomposition,
    tree: usize,
) -> Result<Vec<(usize, Rational)>> {
    let root = decomp
        .roots
        .get(tree)
        .ok_or(Error::IndexOutOfRange {
            what: "tree",
            index: tree,
        })?
        .ok_or(Error::DegenerateAgent(
            decomp.agents_in(tree).next().unwrap_or_default(),
        ))?;

    let mut prices: Vec<Option<Rational>> = vec![None; inst.items()];
    let mut agent_done = vec![false; inst.agents()];
    let mut queue = VecDeque::new();

    agent_done[root] = true;
    for &item in graph.items_of(root) {
        prices[item] = Some(inst.value(root, item).clone());
        queue.push_back(item);
    }
    while let Some(priced) = queue.pop_front() {
        let anchor = prices[priced].clone().expect("queued items are priced");
        for &agent in graph.agents_of(priced) {
            if agent_done[agent] {
                continue;
            }
            agent_done[agent] = true;
            let per_value = &anchor / inst.value(agent, priced);
            for &item in graph.items_of(agent) {
                if prices[item].is_none() {
                    prices[item] = Some(inst.value(agent, item) * &per_value);
                    queue.push_back(item);
                }
            }
        }
    }
    Ok(prices
        .into_iter()
        .enumerate()
        .filter_map(|(j, p)| p.map(|p| (j, p)))
        .collect())
}

/// `b[i] = Σ_j x[i][j]·p[j]`.
pub fn tree_budgets(alloc: &Allocation, prices: &[Rational]) -> BudgetVector {
    BudgetVector(
        (0..alloc.agents())
            .map(|i| dot(alloc.row(i), prices))
            .collect(),
    )
}

/// Unscaled prices and budgets for every tree, plus agent utilities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreePricing {
    pub prices: PriceVector,
    pub budgets: BudgetVector,
    pub utilities: Vec<Rational>,
}

/// Decomposes a cycle-free allocation and prices each tree independently.
pub fn price_forest(
    inst: &Instance,
    alloc: &Allocation,
) -> Result<(ForestDecomposition, TreePricing)> {
    alloc.check_dims(inst)?;
    let graph = graph_of(alloc);
    let decomp = decompose_forest(&graph)?;
    let trees: Vec<usize> = (0..decomp.tree_count())
        .filter(|&t| !decomp.is_degenerate(t))
        .collect();
    let per_tree = crate::batch::map(&trees, |&t| price_tree(inst, &graph, &decomp, t));

    let mut prices = vec![Rational::zero(); inst.items()];
    for priced in per_tree {
        for (j, p) in priced? {
            prices[j] = p;
        }
    }
    let budgets = tree_budgets(alloc, &prices);
    let utilities = utilities(inst, alloc)?;
    Ok((
        decomp,
        TreePricing {
            prices: PriceVector(prices),
            budgets,
            utilities,
        },
    ))
}
