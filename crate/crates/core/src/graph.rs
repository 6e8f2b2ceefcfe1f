//! Bipartite agent-item sharing graph and utility-preserving cycle removal.

use std::fmt;

use num_traits::{Signed, Zero};

use crate::error::{Error, ParetoWitness, Result};
use crate::market::{Allocation, Instance};
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Vertex {
    Agent(usize),
    Item(usize),
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Vertex::Agent(i) => write!(f, "agent {i}"),
            Vertex::Item(j) => write!(f, "item {j}"),
        }
    }
}

/// Undirected bipartite graph with an edge `(i, j)` exactly when `x[i][j] > 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationGraph {
    agent_items: Vec<Vec<usize>>,
    item_agents: Vec<Vec<usize>>,
    edge_count: usize,
}

impl AllocationGraph {
    pub fn agents(&self) -> usize {
        self.agent_items.len()
    }

    pub fn items(&self) -> usize {
        self.item_agents.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Items adjacent to `agent`, ascending.
    pub fn items_of(&self, agent: usize) -> &[usize] {
        &self.agent_items[agent]
    }

    /// Agents adjacent to `item`, ascending.
    pub fn agents_of(&self, item: usize) -> &[usize] {
        &self.item_agents[item]
    }

    pub fn has_edge(&self, agent: usize, item: usize) -> bool {
        self.agent_items
            .get(agent)
            .is_some_and(|items| items.binary_search(&item).is_ok())
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.agent_items
            .iter()
            .enumerate()
            .flat_map(|(i, items)| items.iter().map(move |&j| (i, j)))
    }

    fn neighbors(&self, v: Vertex) -> impl Iterator<Item = Vertex> + '_ {
        let (agents, items): (&[usize], &[usize]) = match v {
            Vertex::Agent(i) => (&[], &self.agent_items[i]),
            Vertex::Item(j) => (&self.item_agents[j], &[]),
        };
        agents
            .iter()
            .map(|&i| Vertex::Agent(i))
            .chain(items.iter().map(|&j| Vertex::Item(j)))
    }

    fn index(&self, v: Vertex) -> usize {
        match v {
            Vertex::Agent(i) => i,
            Vertex::Item(j) => self.agents() + j,
        }
    }

    /// Number of connected components, isolated vertices included.
    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.agents() + self.items()];
        let mut count = 0;
        let all = (0..self.agents())
            .map(Vertex::Agent)
            .chain((0..self.items()).map(Vertex::Item));
        for start in all {
            if seen[self.index(start)] {
                continue;
            }
            count += 1;
            seen[self.index(start)] = true;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for w in self.neighbors(v) {
                    let k = self.index(w);
                    if !seen[k] {
                        seen[k] = true;
                        stack.push(w);
                    }
                }
            }
        }
        count
    }

    pub fn is_forest(&self) -> bool {
        self.edge_count + self.component_count() == self.agents() + self.items()
    }
}

pub fn build_graph(inst: &Instance, alloc: &Allocation) -> Result<AllocationGraph> {
    alloc.check_dims(inst)?;
    Ok(graph_of(alloc))
}

pub(crate) fn graph_of(alloc: &Allocation) -> AllocationGraph {
    let mut agent_items = vec![Vec::new(); alloc.agents()];
    let mut item_agents = vec![Vec::new(); alloc.items()];
    let mut edge_count = 0;
    for (i, items) in agent_items.iter_mut().enumerate() {
        for (j, agents) in item_agents.iter_mut().enumerate() {
            if alloc.get(i, j).is_positive() {
                items.push(j);
                agents.push(i);
                edge_count += 1;
            }
        }
    }
    AllocationGraph {
        agent_items,
        item_agents,
        edge_count,
    }
}

/// `agents[0] - items[0] - agents[1] - items[1] - ... - items[k-1] - agents[0]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleCycle {
    pub agents: Vec<usize>,
    pub items: Vec<usize>,
}

impl SimpleCycle {
    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    /// Agent receiving more of `items[l]` in the forward direction.
    fn gainer(&self, l: usize) -> usize {
        self.agents[l]
    }

    /// Agent giving up `items[l]` in the forward direction.
    fn loser(&self, l: usize) -> usize {
        self.agents[(l + 1) % self.len()]
    }

    fn validate(&self, graph: &AllocationGraph) -> Result<()> {
        let k = self.len();
        if k < 2 || self.items.len() != k {
            return Err(Error::InvalidCycle(format!(
                "{} agents and {} items; need at least two of each, equally many",
                k,
                self.items.len()
            )));
        }
        let mut agents = self.agents.clone();
        agents.sort_unstable();
        agents.dedup();
        let mut items = self.items.clone();
        items.sort_unstable();
        items.dedup();
        if agents.len() != k || items.len() != k {
            return Err(Error::InvalidCycle("repeated vertex".into()));
        }
        for l in 0..k {
            for agent in [self.gainer(l), self.loser(l)] {
                if !graph.has_edge(agent, self.items[l]) {
                    return Err(Error::InvalidCycle(format!(
                        "agent {agent} does not hold item {}",
                        self.items[l]
                    )));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for SimpleCycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, j) in self.agents.iter().zip(&self.items) {
            write!(f, "agent {i} - item {j} - ")?;
        }
        match self.agents.first() {
            Some(i) => write!(f, "agent {i}"),
            None => write!(f, "(empty)"),
        }
    }
}

/// Depth-first search from the lowest-index agent, neighbours in ascending
/// order. Returns the first cycle closed by a back edge.
pub fn find_cycle(graph: &AllocationGraph) -> Option<SimpleCycle> {
    let total = graph.agents() + graph.items();
    let mut visited = vec![false; total];
    let starts = (0..graph.agents())
        .map(Vertex::Agent)
        .chain((0..graph.items()).map(Vertex::Item));
    for start in starts {
        if visited[graph.index(start)] {
            continue;
        }
        // (vertex, parent, neighbours) frames; the path is the stack itself.
        let mut stack: Vec<(Vertex, Option<Vertex>, Vec<Vertex>)> = Vec::new();
        let mut on_path = vec![false; total];
        visited[graph.index(start)] = true;
        on_path[graph.index(start)] = true;
        let mut first: Vec<Vertex> = graph.neighbors(start).collect();
        first.reverse();
        stack.push((start, None, first));

        while let Some((v, parent, pending)) = stack.last_mut() {
            let (v, parent) = (*v, *parent);
            let Some(w) = pending.pop() else {
                on_path[graph.index(v)] = false;
                stack.pop();
                continue;
            };
            if Some(w) == parent {
                continue;
            }
            let k = graph.index(w);
            if on_path[k] {
                let from = stack
                    .iter()
                    .position(|(u, _, _)| *u == w)
                    .expect("vertex on path is on the stack");
                let path: Vec<Vertex> = stack[from..].iter().map(|(u, _, _)| *u).collect();
                return Some(cycle_from_path(path));
            }
            if !visited[k] {
                visited[k] = true;
                on_path[k] = true;
                let mut next: Vec<Vertex> = graph.neighbors(w).collect();
                next.reverse();
                stack.push((w, Some(v), next));
            }
        }
    }
    None
}

fn cycle_from_path(mut path: Vec<Vertex>) -> SimpleCycle {
    if matches!(path[0], Vertex::Item(_)) {
        path.rotate_left(1);
    }
    let mut agents = Vec::with_capacity(path.len() / 2);
    let mut items = Vec::with_capacity(path.len() / 2);
    for v in path {
        match v {
            Vertex::Agent(i) => agents.push(i),
            Vertex::Item(j) => items.push(j),
        }
    }
    SimpleCycle { agents, items }
}

/// Amounts moved along a cycle by [`eliminate_cycle`].
///
/// `epsilons[l]` of `items[l]` moves from `agents[l+1]` to `agents[l]`; each
/// epsilon keeps its receiving-and-giving agent exactly indifferent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleShift {
    pub epsilons: Vec<Rational>,
    pub zeroed_edge: (usize, usize),
}

/// Shifts mass around `cycle` until one of its edges vanishes, keeping every
/// agent's utility unchanged.
///
/// For a Pareto-optimal input the first agent's net change along the cycle is
/// exactly zero; anything else means one direction strictly improves her and
/// is reported as [`Error::NotParetoOptimal`].
pub fn eliminate_cycle(
    inst: &Instance,
    alloc: &Allocation,
    cycle: &SimpleCycle,
) -> Result<(Allocation, CycleShift)> {
    alloc.check_dims(inst)?;
    cycle.validate(&graph_of(alloc))?;
    let k = cycle.len();

    // scale[l] = epsilon_l / epsilon_0
    let mut scale = Vec::with_capacity(k);
    scale.push(Rational::from_integer(1.into()));
    for l in 1..k {
        let agent = cycle.agents[l];
        let next = &scale[l - 1] * inst.value(agent, cycle.items[l - 1])
            / inst.value(agent, cycle.items[l]);
        scale.push(next);
    }
    let head = cycle.agents[0];
    let net =
        inst.value(head, cycle.items[0]) - &scale[k - 1] * inst.value(head, cycle.items[k - 1]);
    if !net.is_zero() {
        return Err(Error::not_pareto(ParetoWitness::CycleImbalance(
            cycle.clone(),
        )));
    }

    let (limit_pos, eps0) = (0..k)
        .map(|l| (l, alloc.get(cycle.loser(l), cycle.items[l]) / &scale[l]))
        .min_by(|a, b| a.1.cmp(&b.1))
        .expect("cycle is nonempty");

    let epsilons: Vec<Rational> = scale.iter().map(|s| s * &eps0).collect();
    let mut next = alloc.clone();
    for (l, eps) in epsilons.iter().enumerate() {
        let item = cycle.items[l];
        next.add(cycle.gainer(l), item, eps);
        next.add(cycle.loser(l), item, &-eps);
    }
    let zeroed_edge = (cycle.loser(limit_pos), cycle.items[limit_pos]);
    next.set(zeroed_edge.0, zeroed_edge.1, Rational::zero());
    Ok((
        next,
        CycleShift {
            epsilons,
            zeroed_edge,
        },
    ))
}

/// Result of [`make_cycle_free_traced`].
#[derive(Debug, Clone)]
pub struct CycleFreeTrace {
    pub allocation: Allocation,
    pub shifts: Vec<CycleShift>,
    /// Edge count before the first elimination and after each one.
    pub edge_counts: Vec<usize>,
}

pub fn make_cycle_free(inst: &Instance, alloc: &Allocation) -> Result<Allocation> {
    make_cycle_free_traced(inst, alloc).map(|t| t.allocation)
}

pub fn make_cycle_free_traced(inst: &Instance, alloc: &Allocation) -> Result<CycleFreeTrace> {
    alloc.check_dims(inst)?;
    let mut current = alloc.clone();
    let mut graph = graph_of(&current);
    let budget = graph.edge_count();
    let mut shifts = Vec::new();
    let mut edge_counts = vec![graph.edge_count()];
    while let Some(cycle) = find_cycle(&graph) {
        if shifts.len() == budget {
            return Err(Error::InternalVerificationFailed(
                "cycle elimination exceeded the edge bound".into(),
            ));
        }
        let (next, shift) = eliminate_cycle(inst, &current, &cycle)?;
        current = next;
        graph = graph_of(&current);
        shifts.push(shift);
        edge_counts.push(graph.edge_count());
    }
    Ok(CycleFreeTrace {
        allocation: current,
        shifts,
        edge_counts,
    })
}
