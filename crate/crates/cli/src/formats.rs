//! JSON documents read and written by the `ceub` binary.
//!
//! Every rational is a string, `"k"` or `"num/den"` in lowest terms. Each
//! document carries a `format` tag and a `version`. Printing is canonical:
//! pretty JSON with two-space indent and a trailing newline, so parsing a
//! printed document and printing it again reproduces the same bytes.

use std::fs;
use std::path::Path;

use ceub_core::market::EquilibriumReport;
use ceub_core::maxmin::MaxMinResult;
use ceub_core::rational::{format_rational, parse_rational, Rational};
use ceub_core::{Allocation, Equilibrium, Instance};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const VERSION: u32 = 1;
pub const INSTANCE_FORMAT: &str = "ceub-instance";
pub const ALLOCATION_FORMAT: &str = "ceub-allocation";
pub const EQUILIBRIUM_FORMAT: &str = "ceub-equilibrium";
pub const MAXMIN_FORMAT: &str = "ceub-maxmin";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: invalid JSON: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("{path}: field `{field}`: {reason}")]
    Field {
        path: String,
        field: String,
        reason: String,
    },
    #[error("{path}: {reason}")]
    Schema { path: String, reason: String },
}

type Result<T> = std::result::Result<T, FormatError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub format: String,
    pub version: u32,
    pub agents: usize,
    pub items: usize,
    pub valuations: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationFile {
    pub format: String,
    pub version: u32,
    pub agents: usize,
    pub items: usize,
    pub shares: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentReport {
    pub agent: usize,
    pub achieved_utility: String,
    pub optimal_utility: String,
    pub spend: String,
    pub budget: String,
    pub in_demand_set: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Verification {
    pub passed: bool,
    pub items_fully_allocated: bool,
    pub budgets_exhausted: bool,
    pub agents: Vec<AgentReport>,
}

impl Verification {
    pub fn from_report(report: &EquilibriumReport) -> Self {
        Verification {
            passed: report.passed(),
            items_fully_allocated: report.items_fully_allocated,
            budgets_exhausted: report.budgets_exhausted,
            agents: report
                .agents
                .iter()
                .map(|r| AgentReport {
                    agent: r.agent,
                    achieved_utility: format_rational(&r.achieved_utility),
                    optimal_utility: format_rational(&r.optimal_utility),
                    spend: format_rational(&r.spend),
                    budget: format_rational(&r.budget),
                    in_demand_set: r.in_demand_set,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumFile {
    pub format: String,
    pub version: u32,
    pub prices: Vec<String>,
    pub budgets: Vec<String>,
    /// One multiplier per tree.
    pub multipliers: Vec<String>,
    /// Smallest multiplier over non-degenerate trees.
    pub min_multiplier: String,
    pub tree_of_agent: Vec<usize>,
    pub tree_of_item: Vec<usize>,
    pub cycle_free_shares: Vec<Vec<String>>,
    /// Demand reports for the input allocation at these prices and budgets.
    pub verification: Verification,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaxMinFile {
    pub format: String,
    pub version: u32,
    /// `lp`, `two-agents` or `two-items`.
    pub method: String,
    pub lambda: String,
    pub shares: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prices: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budgets: Option<Vec<String>>,
}

fn strings(values: &[Rational]) -> Vec<String> {
    values.iter().map(format_rational).collect()
}

fn matrix(rows: &[Vec<Rational>]) -> Vec<Vec<String>> {
    rows.iter().map(|r| strings(r)).collect()
}

impl InstanceFile {
    pub fn from_instance(inst: &Instance) -> Self {
        InstanceFile {
            format: INSTANCE_FORMAT.into(),
            version: VERSION,
            agents: inst.agents(),
            items: inst.items(),
            valuations: matrix(inst.rows()),
        }
    }

    pub fn to_instance(&self, path: &str) -> Result<Instance> {
        check_header(path, &self.format, INSTANCE_FORMAT, self.version)?;
        let rows = parse_matrix(
            path,
            "valuations",
            &self.valuations,
            self.agents,
            self.items,
        )?;
        Instance::new(rows).map_err(|e| schema(path, e))
    }
}

impl AllocationFile {
    pub fn from_allocation(alloc: &Allocation) -> Self {
        AllocationFile {
            format: ALLOCATION_FORMAT.into(),
            version: VERSION,
            agents: alloc.agents(),
            items: alloc.items(),
            shares: matrix(alloc.rows()),
        }
    }

    pub fn to_allocation(&self, path: &str) -> Result<Allocation> {
        check_header(path, &self.format, ALLOCATION_FORMAT, self.version)?;
        let rows = parse_matrix(path, "shares", &self.shares, self.agents, self.items)?;
        Allocation::new(rows).map_err(|e| schema(path, e))
    }
}

impl EquilibriumFile {
    pub fn new(eq: &Equilibrium, original_report: &EquilibriumReport) -> Self {
        EquilibriumFile {
            format: EQUILIBRIUM_FORMAT.into(),
            version: VERSION,
            prices: strings(&eq.prices),
            budgets: strings(&eq.budgets),
            multipliers: strings(&eq.alpha.0),
            min_multiplier: format_rational(&eq.lambda),
            tree_of_agent: eq.forest.tree_of_agent.clone(),
            tree_of_item: eq.forest.tree_of_item.clone(),
            cycle_free_shares: matrix(eq.allocation.rows()),
            verification: Verification::from_report(original_report),
        }
    }

    /// Prices and budgets, the only fields a verifier needs.
    pub fn market(&self, path: &str) -> Result<(Vec<Rational>, Vec<Rational>)> {
        check_header(path, &self.format, EQUILIBRIUM_FORMAT, self.version)?;
        Ok((
            parse_vec(path, "prices", &self.prices)?,
            parse_vec(path, "budgets", &self.budgets)?,
        ))
    }
}

impl MaxMinFile {
    pub fn new(method: &str, result: &MaxMinResult) -> Self {
        MaxMinFile {
            format: MAXMIN_FORMAT.into(),
            version: VERSION,
            method: method.into(),
            lambda: format_rational(&result.lambda),
            shares: matrix(result.allocation.rows()),
            prices: result.prices.as_ref().map(|p| strings(p)),
            budgets: result.budgets.as_ref().map(|b| strings(b)),
        }
    }

    pub fn lambda(&self, path: &str) -> Result<Rational> {
        check_header(path, &self.format, MAXMIN_FORMAT, self.version)?;
        parse_field(path, "lambda".into(), &self.lambda)
    }
}

fn schema(path: &str, e: impl ToString) -> FormatError {
    FormatError::Schema {
        path: path.into(),
        reason: e.to_string(),
    }
}

fn check_header(path: &str, found: &str, expected: &str, version: u32) -> Result<()> {
    if found != expected {
        return Err(schema(
            path,
            format!("expected format {expected:?}, found {found:?}"),
        ));
    }
    if version != VERSION {
        return Err(schema(path, format!("unsupported version {version}")));
    }
    Ok(())
}

fn parse_field(path: &str, field: String, text: &str) -> Result<Rational> {
    parse_rational(text).map_err(|e| FormatError::Field {
        path: path.into(),
        field,
        reason: e.to_string(),
    })
}

fn parse_vec(path: &str, name: &str, texts: &[String]) -> Result<Vec<Rational>> {
    texts
        .iter()
        .enumerate()
        .map(|(j, t)| parse_field(path, format!("{name}[{j}]"), t))
        .collect()
}

fn parse_matrix(
    path: &str,
    name: &str,
    texts: &[Vec<String>],
    rows: usize,
    cols: usize,
) -> Result<Vec<Vec<Rational>>> {
    if texts.len() != rows {
        return Err(schema(
            path,
            format!("`{name}` has {} rows, header says {rows}", texts.len()),
        ));
    }
    texts
        .iter()
        .enumerate()
        .map(|(i, row)| {
            if row.len() != cols {
                return Err(schema(
                    path,
                    format!(
                        "`{name}[{i}]` has {} entries, header says {cols}",
                        row.len()
                    ),
                ));
            }
            parse_vec(path, &format!("{name}[{i}]"), row)
        })
        .collect()
}

/// Canonical text of any document.
pub fn to_canonical<T: Serialize>(doc: &T) -> String {
    let mut text = serde_json::to_string_pretty(doc).expect("documents always serialize");
    text.push('\n');
    text
}

pub fn from_text<T: DeserializeOwned>(path: &str, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|source| FormatError::Json {
        path: path.into(),
        source,
    })
}

pub fn read<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let shown = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: shown.clone(),
        source,
    })?;
    from_text(&shown, &text)
}

pub fn write<T: Serialize>(path: &Path, doc: &T) -> Result<()> {
    fs::write(path, to_canonical(doc)).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    read::<InstanceFile>(path)?.to_instance(&path.display().to_string())
}

pub fn read_allocation(path: &Path) -> Result<Allocation> {
    read::<AllocationFile>(path)?.to_allocation(&path.display().to_string())
}
