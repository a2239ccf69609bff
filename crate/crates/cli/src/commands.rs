//! Subcommand implementations. Each returns the process exit code on success;
//! errors map to codes through [`CliError::exit_code`].

use std::io::Write;
use std::path::{Path, PathBuf};

use ppacdc_core::analysis::{build_augmented, spectral_check, SPECTRAL_TOLERANCE};
use ppacdc_core::{sim, Digraph};
use serde_json::json;

use crate::error::{CliError, Result};
use crate::experiment::Experiment;
use crate::output::{result_json, sweep_csv, trace_csv, write_atomic};
use crate::parallel::par_sweep;
use crate::{edgelist, presets};

pub const EXIT_OK: u8 = 0;
pub const EXIT_NOT_CONVERGED: u8 = 2;
pub const EXIT_SPECTRAL_FAIL: u8 = 2;

/// Flags shared by every subcommand.
#[derive(Clone, Debug, Default)]
pub struct Options {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub overrides: Vec<String>,
}

impl Options {
    fn apply(&self, exp: &Experiment) -> Result<Experiment> {
        let mut exp = exp.with_overrides(&self.overrides)?;
        if let Some(seed) = self.seed {
            exp.file.seed = seed;
        }
        Ok(exp)
    }

    /// `--out` (or its environment default), then the config, then `.`.
    fn out_dir(&self, exp: &Experiment) -> Result<PathBuf> {
        let dir = match (&self.out, &exp.file.output.dir) {
            (Some(d), _) => d.clone(),
            (None, Some(d)) => exp.base_dir.join(d),
            (None, None) => PathBuf::from("."),
        };
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(dir)
    }
}

pub fn load_preset(name: &str) -> Result<Experiment> {
    let text = presets::source(name).ok_or_else(|| {
        let known: Vec<_> = presets::names().collect();
        CliError::Config(format!("unknown preset {name:?}; known: {}", known.join(", ")))
    })?;
    Experiment::parse(text, &format!("preset {name}"), Path::new("."))
}

fn warn_on_gain(g: &Digraph, gamma: f64, err: &mut dyn Write) {
    let report = build_augmented(g, gamma).and_then(|sys| spectral_check(&sys, SPECTRAL_TOLERANCE));
    match report {
        Ok(r) if !r.passes => {
            let _ = writeln!(
                err,
                "warning: gamma = {gamma} fails the spectral check on this graph (second modulus {}); the run may diverge",
                r.second_modulus
            );
        }
        Ok(_) => {}
        Err(e) => {
            let _ = writeln!(err, "warning: spectral check for gamma = {gamma} unavailable: {e}");
        }
    }
}

pub fn cmd_run(exp: &Experiment, opts: &Options, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8> {
    let exp = opts.apply(exp)?;
    let runs = exp.run_configs()?;
    let dir = opts.out_dir(&exp)?;
    let mut code = EXIT_OK;
    for (name, config) in &runs {
        let (graph, _) = config.resolve()?;
        warn_on_gain(&graph, config.protocol.gamma, err);
        let result = sim::run(config)?;
        let suffix = name.as_ref().map_or_else(String::new, |n| format!("-{n}"));
        let trace_path = dir.join(format!("trace{suffix}.csv"));
        write_atomic(&trace_path, trace_csv(&result).as_bytes())?;
        write_atomic(
            &dir.join(format!("result{suffix}.json")),
            result_json(config, &result).as_bytes(),
        )?;
        let label = name.as_deref().unwrap_or("run");
        let _ = match result.convergence_iter {
            Some(k) => writeln!(
                out,
                "{label}: converged at k = {k}, x_ave = {}, max deviation {:e}",
                result.x_ave, result.max_deviation
            ),
            None => writeln!(
                out,
                "{label}: not converged after {} rounds, spread {:e}",
                result.rounds, result.final_spread
            ),
        };
        if !result.converged {
            code = EXIT_NOT_CONVERGED;
        }
    }
    Ok(code)
}

pub fn cmd_sweep(exp: &Experiment, opts: &Options, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8> {
    let exp = opts.apply(exp)?;
    let grid = exp.sweep_grid()?;
    let base = exp.sim_config()?;
    let (graph, _) = base.resolve()?;
    warn_on_gain(&graph, base.protocol.gamma, err);
    let dir = opts.out_dir(&exp)?;
    let rows = par_sweep(&base, &grid)?;
    let path = dir.join("sweep.csv");
    write_atomic(&path, sweep_csv(&rows).as_bytes())?;
    for row in rows.iter().filter(|r| r.flagged()) {
        let _ = writeln!(
            err,
            "flagged: alpha = {}, bits = {}: {}/{} seeds converged",
            row.alpha, row.bits, row.converged_count, row.seeds
        );
    }
    let _ = writeln!(out, "{} cells written to {}", rows.len(), path.display());
    Ok(EXIT_OK)
}

pub fn cmd_analyze(graph: &Digraph, gamma: f64, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(CliError::Config(format!("gamma must be > 0, got {gamma}")));
    }
    let report = spectral_check(&build_augmented(graph, gamma)?, SPECTRAL_TOLERANCE)?;
    let doc = json!({
        "gamma": gamma,
        "dominant_re": report.dominant.re,
        "dominant_im": report.dominant.im,
        "second_modulus": report.second_modulus,
        "passes": report.passes,
    });
    let _ = writeln!(out, "{doc}");
    if report.passes {
        Ok(EXIT_OK)
    } else {
        let _ = writeln!(err, "warning: gamma = {gamma} fails the spectral check");
        Ok(EXIT_SPECTRAL_FAIL)
    }
}

pub fn cmd_gen_graph(n: usize, extra_edge_prob: f64, seed: u64, path: &Path, out: &mut dyn Write) -> Result<u8> {
    let g = Digraph::random_strongly_connected(n, extra_edge_prob, seed)?;
    edgelist::save(&g, path)?;
    let _ = writeln!(out, "n={} m={} diameter={}", g.node_count(), g.edge_count(), g.diameter()?);
    Ok(EXIT_OK)
}

/// Runs a built-in experiment: a sweep if it has a grid, runs otherwise.
pub fn cmd_preset(name: &str, opts: &Options, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8> {
    let exp = load_preset(name)?;
    if exp.file.sweep.is_some() {
        cmd_sweep(&exp, opts, out, err)
    } else {
        cmd_run(&exp, opts, out, err)
    }
}
