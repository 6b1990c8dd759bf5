//! Built-in scenarios, shipped as TOML files.

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};

const BUILTIN: &[(&str, &str)] = &[
    ("convergence", include_str!("../scenarios/convergence.toml")),
    ("fastest-isotropic", include_str!("../scenarios/fastest-isotropic.toml")),
    ("fastest-anisotropic", include_str!("../scenarios/fastest-anisotropic.toml")),
    ("weather", include_str!("../scenarios/weather.toml")),
    ("avoid-observer", include_str!("../scenarios/avoid-observer.toml")),
    ("shortest-under-exposure", include_str!("../scenarios/shortest-under-exposure.toml")),
    ("seek-observer", include_str!("../scenarios/seek-observer.toml")),
    ("two-observers", include_str!("../scenarios/two-observers.toml")),
    ("time-vs-length", include_str!("../scenarios/time-vs-length.toml")),
    ("rcsp-check", include_str!("../scenarios/rcsp-check.toml")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    BUILTIN.iter().map(|(n, _)| *n)
}

pub fn source(name: &str) -> Option<&'static str> {
    BUILTIN.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn builtin(name: &str) -> Result<ScenarioConfig> {
    let text = source(name).ok_or_else(|| {
        Error::Config(format!(
            "unknown scenario `{name}`; built-in scenarios: {}",
            names().collect::<Vec<_>>().join(", ")
        ))
    })?;
    ScenarioConfig::from_toml(text)
}

/// A built-in name, or else a path to a TOML file.
pub fn load(name_or_path: &str) -> Result<ScenarioConfig> {
    if source(name_or_path).is_some() {
        return builtin(name_or_path);
    }
    let path = std::path::Path::new(name_or_path);
    if path.exists() {
        return ScenarioConfig::from_toml(&std::fs::read_to_string(path)?);
    }
    builtin(name_or_path)
}
