//! CSV and JSON writers.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use ppacdc_core::sim::sweep::SweepRow;
use ppacdc_core::{RunResult, SimConfig};
use serde_json::json;

use crate::error::{CliError, Result};

pub const TRACE_HEADER: &str = "k,agent,x,s,delta,sigma,zeta,consensus_error,bits_cumulative";
pub const SWEEP_HEADER: &str = "alpha,bits,seeds,converged_count,mean_iters,min_iters,max_iters";

/// Placeholder for statistics of a cell where no seed converged.
pub const MISSING: &str = "NA";

/// Writes to a sibling temporary file and renames it into place, so a failed
/// write never leaves a partial file at `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Config(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    let written = std::fs::File::create(&tmp).and_then(|mut f| {
        f.write_all(bytes)?;
        f.sync_all()
    });
    if let Err(e) = written {
        let _ = std::fs::remove_file(&tmp);
        return Err(CliError::io(path, e));
    }
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        CliError::io(path, e)
    })
}

pub fn trace_csv(result: &RunResult) -> String {
    let mut out = String::with_capacity(64 * result.trace.len().max(1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for rec in &result.trace {
        for agent in 0..rec.x.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                rec.k,
                agent,
                rec.x[agent],
                rec.s[agent],
                rec.delta,
                rec.sigma,
                rec.zeta[agent].as_i8(),
                rec.consensus_error,
                rec.bits_cumulative,
            );
        }
    }
    out
}

pub fn result_json(config: &SimConfig, result: &RunResult) -> String {
    let p = &config.protocol;
    let doc = json!({
        "seed": config.seed,
        "gamma": p.gamma,
        "alpha": p.alpha,
        "bits": p.bits,
        "d_bar": p.d_bar,
        "exact_mode": config.exact_mode,
        "converged": result.converged,
        "convergence_iter": result.convergence_iter,
        "average_reached": result.average_reached,
        "final_error": result.final_error,
        "final_spread": result.final_spread,
        "max_deviation": result.max_deviation,
        "x_ave": result.x_ave,
        "rounds": result.rounds,
        "bits_total": result.bits_total,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("summary serializes");
    s.push('\n');
    s
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
        v.map_or_else(|| MISSING.to_owned(), |v| v.to_string())
    }
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.alpha,
            r.bits,
            r.seeds,
            r.converged_count,
            opt(r.mean_iters),
            opt(r.min_iters),
            opt(r.max_iters),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ppacdc_core::sim::sweep::summarize;

    #[test]
    fn sweep_rows_mark_missing_stats() {
        let rows = [summarize(1.2, 8, &[Some(10), Some(21)]), summarize(10.0, 2, &[None, None])];
        let csv = sweep_csv(&rows);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], SWEEP_HEADER);
        assert_eq!(lines[1], "1.2,8,2,2,15.5,10,21");
        assert_eq!(lines[2], "10,2,2,0,NA,NA,NA");
    }

    #[test]
    fn atomic_write_replaces_and_cleans_up() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        assert!(write_atomic(&dir.path().join("missing/a.csv"), b"x").is_err());
    }

    #[test]
    fn trace_has_one_row_per_agent_and_round() {
        let config = SimConfig {
            max_iters: 3,
            ..SimConfig::default()
        };
        let result = ppacdc_core::sim::run(&config).unwrap();
        let csv = trace_csv(&result);
        assert_eq!(csv.lines().count(), 1 + 5 * result.trace.len());
        assert!(csv.lines().nth(1).unwrap().starts_with("0,0,"));
    }
}
