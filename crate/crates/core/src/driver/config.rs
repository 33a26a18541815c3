//! `key = value` run configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys mirror the
//! command-line flags (`problem`, `nelx`, `nely`, `volfrac`, `penal`,
//! `rmin`, `etaf`, `betaf`, `lst`, `maxit`, `betamax`, `out`) plus
//! `change_tol`, `move_limit`, `drainage`, and the custom problem keys
//! `pressure`, `fix`, `solid`, `void`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::{ProblemSource, RunConfig};
use crate::error::{Error, Result};
use crate::problems::ProblemKind;

pub type ConfigMap = BTreeMap<String, String>;

pub fn parse_config(text: &str) -> Result<ConfigMap> {
    let mut map = ConfigMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("config line {}: expected key = value", n + 1)))?;
        let key = k.trim().to_ascii_lowercase();
        if key.is_empty() {
            return Err(Error::invalid(format!("config line {}: empty key", n + 1)));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

pub fn read_config(path: &Path) -> Result<ConfigMap> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

pub fn parse_bool(s: &str) -> Result<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        other => Err(Error::invalid(format!("expected a boolean, got '{other}'"))),
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::invalid(format!("bad value '{v}' for {key}")))
}

const CUSTOM_KEYS: [&str; 4] = ["pressure", "fix", "solid", "void"];

/// Problem named by the map, if any: a custom definition when any of the
/// custom keys is present, otherwise the `problem` key.
pub fn problem_from(map: &ConfigMap) -> Result<Option<ProblemSource>> {
    if CUSTOM_KEYS.iter().any(|k| map.contains_key(*k)) {
        if map.get("problem").is_some_and(|p| p != "custom") {
            return Err(Error::invalid("config mixes a named problem with custom boundary keys"));
        }
        let get = |k: &str| map.get(k).cloned().unwrap_or_default();
        return Ok(Some(ProblemSource::Custom {
            pressure: get("pressure"),
            fix: get("fix"),
            solid: get("solid"),
            void: get("void"),
        }));
    }
    match map.get("problem") {
        Some(name) => Ok(Some(ProblemSource::Named {
            name: name.parse::<ProblemKind>()?,
        })),
        None => Ok(None),
    }
}

/// Applies every recognised key to `cfg`; unknown keys are errors.
pub fn apply(cfg: &mut RunConfig, map: &ConfigMap) -> Result<()> {
    for (k, v) in map {
        match k.as_str() {
            "problem" | "pressure" | "fix" | "solid" | "void" => {}
            "nelx" => cfg.nelx = num(k, v)?,
            "nely" => cfg.nely = num(k, v)?,
            "volfrac" => cfg.volfrac = num(k, v)?,
            "penal" => cfg.penal = num(k, v)?,
            "rmin" => cfg.rmin = num(k, v)?,
            "etaf" => cfg.etaf = num(k, v)?,
            "betaf" => cfg.betaf = num(k, v)?,
            "lst" => cfg.lst = parse_bool(v)?,
            "maxit" => cfg.maxit = num(k, v)?,
            "betamax" => {
                cfg.betamax = match v.trim().to_ascii_lowercase().as_str() {
                    "" | "none" | "off" => None,
                    _ => Some(num(k, v)?),
                }
            }
            "out" => cfg.out = Some(PathBuf::from(v)),
            "change_tol" => cfg.change_tol = num(k, v)?,
            "move_limit" => cfg.move_limit = num(k, v)?,
            "drainage" => cfg.drainage = parse_bool(v)?,
            other => return Err(Error::invalid(format!("unknown config key '{other}'"))),
        }
    }
    if let Some(p) = problem_from(map)? {
        cfg.problem = p;
    }
    Ok(())
}
