//! Competitive equilibria with unequal budgets.
//!
//! Given additive valuations over divisible items and a Pareto-optimal
//! allocation, this crate computes anonymous item prices and per-agent token
//! budgets under which every agent's assigned bundle is in her demand set.
//! It also computes max-min (Rawlsian) allocations and ships independent
//! verifiers for equilibria and Pareto optimality.
//!
//! All arithmetic is exact: every quantity in the pipeline is a
//! [`Rational`].
//!
//! ```
//! use ceub_core::{rational::int, rational::ratio, support_pipeline, Allocation, Instance};
//!
//! let inst = Instance::new(vec![vec![int(1)], vec![int(99)]]).unwrap();
//! let alloc = Allocation::new(vec![vec![ratio(99, 100)], vec![ratio(1, 100)]]).unwrap();
//! let support = support_pipeline(&inst, &alloc).unwrap();
//! assert_eq!(support.equilibrium.prices[0], int(1));
//! assert_eq!(support.equilibrium.budgets[1], ratio(1, 100));
//! ```

pub mod batch;
pub mod error;
pub mod gen;
pub mod graph;
pub mod lp;
pub mod market;
pub mod maxmin;
pub mod multipliers;
pub mod pricing;
pub mod rational;

pub use error::{Error, ParetoWitness, Result};
pub use graph::{make_cycle_free, AllocationGraph, SimpleCycle, Vertex};
pub use market::{
    verify_equilibrium, verify_pareto_optimal, Allocation, BudgetVector, DemandReport,
    EquilibriumReport, Instance, ParetoCheck, PriceVector, TradingCycleCertificate,
};
pub use multipliers::{support_pipeline, Equilibrium, MultiplierVector, Support};
pub use rational::Rational;
