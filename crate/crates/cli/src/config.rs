//! Flat `key = value` experiment configuration.
//!
//! Keys: `true_theta` (array), `true_sigma2`, `d`, `n`, `n0`, `m`, `design`
//! (`uniform`, `lhs`, `maximin_lhs`), `family` (`geometric`, `tensorized`), `nu`,
//! `samples`, `burn_in`, `thin`, `proposal_sd`, `inner_steps`, `update`
//! (`metropolis`, `grid`), `mle_starts`, `level`, `seed`. Comments start with `#`.

use std::path::Path;

use krig_core::experiments::{AckleyConfig, DesignKind, ExperimentConfig};
use krig_core::kernels::KernelFamily;
use krig_core::pigs::{SamplerConfig, UpdateKind};
use toml::{Table, Value};

use crate::error::{CliError, CliResult};

pub fn read_table(path: &Path) -> CliResult<Table> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::parse(path.display(), e))?;
    text.parse::<Table>().map_err(|e| CliError::parse(path.display(), e))
}

/// Parses `key=value`; values that are not valid literals are taken as strings.
pub fn parse_override(item: &str) -> CliResult<(String, Value)> {
    let (k, v) = item
        .split_once('=')
        .ok_or_else(|| CliError::Parse(format!("override '{item}' is not of the form key=value")))?;
    let key = k.trim().to_string();
    let doc = format!("v = {}", v.trim());
    let value = match doc.parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => Value::String(v.trim().to_string()),
    };
    Ok((key, value))
}

fn bad(key: &str, want: &str) -> CliError {
    CliError::Parse(format!("config key '{key}' must be {want}"))
}

fn count(key: &str, v: &Value) -> CliResult<usize> {
    v.as_integer()
        .filter(|i| *i >= 0)
        .map(|i| i as usize)
        .ok_or_else(|| bad(key, "a nonnegative integer"))
}

fn real(key: &str, v: &Value) -> CliResult<f64> {
    v.as_float()
        .or_else(|| v.as_integer().map(|i| i as f64))
        .ok_or_else(|| bad(key, "a number"))
}

fn text<'a>(key: &str, v: &'a Value) -> CliResult<&'a str> {
    v.as_str().ok_or_else(|| bad(key, "a string"))
}

fn apply_sampler(s: &mut SamplerConfig, key: &str, v: &Value) -> CliResult<bool> {
    match key {
        "samples" => s.n_samples = count(key, v)?,
        "burn_in" => s.burn_in = count(key, v)?,
        "thin" => s.thin = count(key, v)?,
        "proposal_sd" => s.proposal_sd = real(key, v)?,
        "inner_steps" => s.inner_metropolis_steps = count(key, v)?,
        "update" => {
            s.update = match text(key, v)? {
                "metropolis" => UpdateKind::Metropolis,
                "grid" => UpdateKind::GridInversion,
                other => return Err(CliError::Parse(format!("unknown update '{other}'"))),
            }
        }
        _ => return Ok(false),
    }
    Ok(true)
}

fn design_kind(key: &str, v: &Value) -> CliResult<DesignKind> {
    text(key, v)?.parse().map_err(|e| CliError::parse(key, e))
}

fn family(key: &str, v: &Value) -> CliResult<KernelFamily> {
    text(key, v)?.parse().map_err(|e| CliError::parse(key, e))
}

pub fn apply_experiment(cfg: &mut ExperimentConfig, entries: &[(String, Value)]) -> CliResult<()> {
    for (key, v) in entries {
        if apply_sampler(&mut cfg.sampler, key, v)? {
            continue;
        }
        match key.as_str() {
            "true_theta" => {
                let arr = v.as_array().ok_or_else(|| bad(key, "an array of numbers"))?;
                cfg.true_theta = arr.iter().map(|x| real(key, x)).collect::<CliResult<_>>()?;
                cfg.spec.r = cfg.true_theta.len();
            }
            "true_sigma2" => cfg.true_sigma2 = real(key, v)?,
            "n" => cfg.n = count(key, v)?,
            "n0" => cfg.n0 = count(key, v)?,
            "m" => cfg.m = count(key, v)?,
            "design" => cfg.design_kind = design_kind(key, v)?,
            "family" => cfg.spec.family = family(key, v)?,
            "nu" => cfg.spec.nu = real(key, v)?,
            "mle_starts" => cfg.mle_starts = count(key, v)?,
            "level" => cfg.level = real(key, v)?,
            "seed" => cfg.master_seed = count(key, v)? as u64,
            other => return Err(CliError::Parse(format!("unknown config key '{other}'"))),
        }
    }
    Ok(())
}

pub fn apply_ackley(cfg: &mut AckleyConfig, entries: &[(String, Value)]) -> CliResult<()> {
    for (key, v) in entries {
        if apply_sampler(&mut cfg.sampler, key, v)? {
            continue;
        }
        match key.as_str() {
            "d" => {
                cfg.d = count(key, v)?;
                cfg.spec.r = cfg.d;
            }
            "n" => cfg.n = count(key, v)?,
            "n0" => cfg.n0 = count(key, v)?,
            "m" => cfg.m = count(key, v)?,
            "design" => cfg.design_kind = design_kind(key, v)?,
            "family" => cfg.spec.family = family(key, v)?,
            "nu" => cfg.spec.nu = real(key, v)?,
            "mle_starts" => cfg.mle_starts = count(key, v)?,
            "level" => cfg.level = real(key, v)?,
            "seed" => cfg.master_seed = count(key, v)? as u64,
            other => return Err(CliError::Parse(format!("unknown config key '{other}'"))),
        }
    }
    Ok(())
}
