//! Flat `key = value` run configuration.
//!
//! Keys are `seed` plus prefixed fields of the parameter structs:
//! `tree.*`, `bagging.*`, `dsp.*` and `cv.*` (`cv.grid`,
//! `cv.inner_fraction`). Values are written as in JSON, except that bare
//! words are taken as strings and comma-separated lists need no brackets.

use pdadsv_core::{DspConfig, EvalParams};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub eval: EvalParams,
    pub dsp: DspConfig,
}

fn parse_value(raw: &str, current: &Value) -> Value {
    if let Ok(v) = serde_json::from_str::<Value>(raw) {
        if !(current.is_array() && !v.is_array()) {
            return v;
        }
    }
    if current.is_array() {
        let items = raw
            .trim_matches(|c| c == '[' || c == ']')
            .split(',')
            .map(|s| {
                serde_json::from_str(s.trim()).unwrap_or_else(|_| Value::String(s.trim().into()))
            })
            .collect();
        return Value::Array(items);
    }
    Value::String(raw.to_string())
}

fn set_field<T: Serialize + DeserializeOwned>(
    target: &mut T,
    field: &str,
    raw: &str,
    key: &str,
) -> Result<(), String> {
    let mut doc = serde_json::to_value(&*target).map_err(|e| e.to_string())?;
    let obj = doc
        .as_object_mut()
        .ok_or("internal: parameters are not an object")?;
    let slot = obj
        .get_mut(field)
        .ok_or_else(|| format!("unknown config key `{key}`"))?;
    *slot = parse_value(raw, slot);
    *target = serde_json::from_value(doc).map_err(|e| format!("bad value for `{key}`: {e}"))?;
    Ok(())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut cfg = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`", n + 1))?;
            let (key, value) = (key.trim(), value.trim());
            cfg.set(key, value)
                .map_err(|e| format!("line {}: {e}", n + 1))?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        if key == "seed" {
            self.seed = Some(
                value
                    .parse()
                    .map_err(|e| format!("bad value for `seed`: {e}"))?,
            );
            return Ok(());
        }
        let (section, field) = key
            .split_once('.')
            .ok_or_else(|| format!("unknown config key `{key}`"))?;
        match (section, field) {
            ("tree", "seed") | ("bagging", "seed") => Err(format!(
                "`{key}` is derived from the run seed; set `seed` instead"
            )),
            ("tree", f) => set_field(&mut self.eval.tree, f, value, key),
            ("bagging", f) => set_field(&mut self.eval.bagging, f, value, key),
            ("dsp", f) => set_field(&mut self.dsp, f, value, key),
            ("cv", f @ ("grid" | "inner_fraction")) => set_field(&mut self.eval, f, value, key),
            _ => Err(format!("unknown config key `{key}`")),
        }
    }
}
