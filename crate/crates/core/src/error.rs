use thiserror::Error;

use crate::graph::SimpleCycle;
use crate::market::TradingCycleCertificate;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Evidence that an allocation is not Pareto optimal.
#[derive(Debug, Clone, PartialEq)]
pub enum ParetoWitness {
    /// An exchange cycle whose ratio product exceeds one.
    TradingCycle(TradingCycleCertificate),
    /// Some item is not fully allocated.
    UnallocatedMass { item: usize },
    /// Shifting along this sharing cycle changes the first agent's utility.
    CycleImbalance(SimpleCycle),
    /// The multiplier program has no feasible point.
    InfeasibleMultipliers,
    /// Under the tree prices, `agent` prefers an item of her own tree that she
    /// holds none of.
    TreeDeviation { agent: usize, item: usize },
}

impl std::fmt::Display for ParetoWitness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParetoWitness::TradingCycle(cert) => write!(f, "trading cycle {cert}"),
            ParetoWitness::UnallocatedMass { item } => {
                write!(f, "item {item} is not fully allocated")
            }
            ParetoWitness::CycleImbalance(cycle) => {
                write!(f, "sharing cycle {cycle} admits a strict improvement")
            }
            ParetoWitness::InfeasibleMultipliers => {
                write!(f, "no tree multipliers remove all inter-tree deviations")
            }
            ParetoWitness::TreeDeviation { agent, item } => {
                write!(
                    f,
                    "agent {agent} prefers unheld item {item} of her own tree"
                )
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("valuation matrix is empty")]
    EmptyMatrix,
    #[error("row {row} has {found} entries, expected {expected}")]
    RaggedMatrix {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("valuation of agent {agent} for item {item} is not strictly positive")]
    NonPositiveValuation { agent: usize, item: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("allocation entry ({agent}, {item}) is outside [0, 1]")]
    EntryOutOfRange { agent: usize, item: usize },
    #[error("item {item} is over-allocated")]
    OverAllocated { item: usize },
    #[error("price of item {0} is zero")]
    ZeroPrice(usize),
    #[error("negative value in {0}")]
    Negative(&'static str),
    #[error("index {index} out of range for {what}")]
    IndexOutOfRange { what: &'static str, index: usize },
    #[error("allocation is not Pareto optimal: {0}")]
    NotParetoOptimal(Box<ParetoWitness>),
    #[error("invalid cycle: {0}")]
    InvalidCycle(String),
    #[error("allocation graph is not a forest")]
    NotAForest,
    #[error("item {0} has no agent in its tree")]
    ItemWithoutAgent(usize),
    #[error("agent {agent} and item {item} are in the same tree")]
    SameTree { agent: usize, item: usize },
    #[error("agent {0} holds nothing and has no budget")]
    DegenerateAgent(usize),
    #[error("multiplier vector has {found} entries, expected {expected}")]
    MultiplierLength { expected: usize, found: usize },
    #[error("internal verification failed: {0}")]
    InternalVerificationFailed(String),
    #[error("malformed linear program: {0}")]
    MalformedProblem(String),
    #[error("expected exactly two agents, found {0}")]
    WrongAgentCount(usize),
    #[error("expected exactly two items, found {0}")]
    WrongItemCount(usize),
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("invalid rational {text:?}: {reason}")]
    ParseRational { text: String, reason: &'static str },
}

impl Error {
    pub(crate) fn not_pareto(witness: ParetoWitness) -> Self {
        Error::NotParetoOptimal(Box::new(witness))
    }
}
