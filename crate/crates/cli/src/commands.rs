//! The four subcommands. Each returns `Ok(())` or a [`CliError`] carrying the
//! process exit code; human-readable output goes to the given writer.

use std::io::Write;
use std::path::{Path, PathBuf};

use ceub_core::gen::{gen_case, GenConfig, GenMode};
use ceub_core::maxmin::{maxmin_lp, maxmin_two_agents, maxmin_two_items};
use ceub_core::rational::format_rational;
use ceub_core::{support_pipeline, verify_equilibrium, verify_pareto_optimal, Error, ParetoCheck};
use log::{info, trace};
use thiserror::Error;

use crate::formats::{
    self, AllocationFile, EquilibriumFile, FormatError, InstanceFile, MaxMinFile,
};

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or invalid input, or bad usage.
    #[error("{0}")]
    Input(String),
    #[error("allocation is not Pareto optimal: {0}")]
    NotParetoOptimal(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::NotParetoOptimal(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NotParetoOptimal(w) => CliError::NotParetoOptimal(w.to_string()),
            Error::InternalVerificationFailed(msg) => CliError::Verification(msg),
            other => CliError::Input(other.to_string()),
        }
    }
}

fn io(e: std::io::Error) -> CliError {
    CliError::Input(format!("writing output: {e}"))
}

pub type CmdResult = Result<(), CliError>;

/// Computes prices and budgets supporting the allocation and writes an
/// equilibrium file.
pub fn price(
    instance: &Path,
    allocation: &Path,
    out_path: &Path,
    out: &mut dyn Write,
) -> CmdResult {
    let inst = formats::read_instance(instance)?;
    let alloc = formats::read_allocation(allocation)?;
    info!("pricing {}x{} instance", inst.agents(), inst.items());
    let support = support_pipeline(&inst, &alloc)?;
    let eq = &support.equilibrium;
    trace!(
        "multipliers {:?}",
        eq.alpha.0.iter().map(format_rational).collect::<Vec<_>>()
    );
    formats::write(
        out_path,
        &EquilibriumFile::new(eq, &support.original_report),
    )?;
    writeln!(
        out,
        "prices  {}\nbudgets {}",
        joined(&eq.prices),
        joined(&eq.budgets)
    )
    .map_err(io)?;
    info!("wrote {}", out_path.display());
    Ok(())
}

/// Computes a max-min allocation. `fast` selects the two-agent or two-item
/// algorithm, which also reports prices and budgets.
pub fn maxmin(instance: &Path, out_path: &Path, fast: bool, out: &mut dyn Write) -> CmdResult {
    let inst = formats::read_instance(instance)?;
    let (method, result) = if !fast {
        ("lp", maxmin_lp(&inst)?)
    } else if inst.agents() == 2 {
        ("two-agents", maxmin_two_agents(&inst)?)
    } else if inst.items() == 2 {
        ("two-items", maxmin_two_items(&inst)?)
    } else {
        return Err(CliError::Input(format!(
            "fast path requires n=2 or m=2 (instance is {}x{})",
            inst.agents(),
            inst.items()
        )));
    };
    info!("max-min via {method}");
    formats::write(out_path, &MaxMinFile::new(method, &result))?;
    writeln!(out, "lambda {}", format_rational(&result.lambda)).map_err(io)?;
    Ok(())
}

/// Checks Pareto optimality of the allocation and that the equilibrium
/// file's prices and budgets clear the market with it.
pub fn verify(
    instance: &Path,
    allocation: &Path,
    equilibrium: &Path,
    out: &mut dyn Write,
) -> CmdResult {
    let inst = formats::read_instance(instance)?;
    let alloc = formats::read_allocation(allocation)?;
    let eq_path = equilibrium.display().to_string();
    let (prices, budgets) = formats::read::<EquilibriumFile>(equilibrium)?.market(&eq_path)?;

    let report = verify_equilibrium(&inst, &alloc, &prices, &budgets)?;
    for r in &report.agents {
        writeln!(
            out,
            "agent {}: utility {} best {} spend {} budget {} {}",
            r.agent,
            format_rational(&r.achieved_utility),
            format_rational(&r.optimal_utility),
            format_rational(&r.spend),
            format_rational(&r.budget),
            if r.in_demand_set { "ok" } else { "FAIL" }
        )
        .map_err(io)?;
    }

    match verify_pareto_optimal(&inst, &alloc)? {
        ParetoCheck::Optimal => {}
        ParetoCheck::TradingCycle(cert) => {
            return Err(CliError::NotParetoOptimal(format!("trading cycle {cert}")))
        }
        ParetoCheck::UnallocatedMass(item) => {
            return Err(CliError::NotParetoOptimal(format!(
                "item {item} is not fully allocated"
            )))
        }
    }
    if !report.is_clearing() {
        let mut problems: Vec<String> = report
            .agents
            .iter()
            .filter(|r| !r.in_demand_set)
            .map(|r| format!("agent {} not in demand set", r.agent))
            .collect();
        problems.extend(
            report
                .agents
                .iter()
                .filter(|r| r.in_demand_set && r.spend != r.budget)
                .map(|r| format!("agent {} leaves budget unspent", r.agent)),
        );
        return Err(CliError::Verification(problems.join("; ")));
    }
    writeln!(out, "equilibrium verified").map_err(io)?;
    Ok(())
}

/// Paths written by [`gen`].
pub fn gen_paths(prefix: &Path) -> (PathBuf, PathBuf) {
    let with = |suffix: &str| {
        let mut p = prefix.as_os_str().to_owned();
        p.push(suffix);
        PathBuf::from(p)
    };
    (with(".instance.json"), with(".allocation.json"))
}

/// Writes a random instance and a Pareto-optimal allocation for it.
pub fn gen(
    seed: u64,
    agents: usize,
    items: usize,
    mode: GenMode,
    prefix: &Path,
    out: &mut dyn Write,
) -> CmdResult {
    let (inst, alloc) = gen_case(&GenConfig::new(seed, agents, items), mode)?;
    let (inst_path, alloc_path) = gen_paths(prefix);
    formats::write(&inst_path, &InstanceFile::from_instance(&inst))?;
    formats::write(&alloc_path, &AllocationFile::from_allocation(&alloc))?;
    writeln!(out, "{}\n{}", inst_path.display(), alloc_path.display()).map_err(io)?;
    Ok(())
}

fn joined(values: &[ceub_core::Rational]) -> String {
    values
        .iter()
        .map(format_rational)
        .collect::<Vec<_>>()
        .join(" ")
}
