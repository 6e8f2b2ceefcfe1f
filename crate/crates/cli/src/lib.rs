//! Library side of the `ceub` command-line tool: file formats and commands.
//!
//! Exit codes: 0 success, 1 input or usage error, 2 allocation not Pareto
//! optimal, 3 verification failure.

pub mod commands;
pub mod formats;

/// Log level named by `CEUB_LOG`: `quiet`, `info` or `trace`. Unset means
/// warnings only.
pub fn log_level(value: Option<&str>) -> Result<log::LevelFilter, String> {
    match value {
        None => Ok(log::LevelFilter::Warn),
        Some("quiet") => Ok(log::LevelFilter::Off),
        Some("info") => Ok(log::LevelFilter::Info),
        Some("trace") => Ok(log::LevelFilter::Trace),
        Some(other) => Err(format!(
            "CEUB_LOG must be quiet, info or trace, not {other:?}"
        )),
    }
}
