use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::errors::{CliError, Result};

/// Keys accepted in a config file: the union of every subcommand's long
/// flag names. Irrelevant keys are ignored by subcommands that do not use
/// them; unknown keys are rejected to catch typos.
const KNOWN_KEYS: &[&str] = &[
    "seed",
    "variant",
    "scale",
    "scales",
    "convention",
    "channels",
    "ieeb-depth",
    "irb-depth",
    "hr-dir",
    "data",
    "out",
    "resume",
    "batch-size",
    "lr0",
    "beta1",
    "beta2",
    "epsilon",
    "total-steps",
    "halve-every",
    "patch",
    "checkpoint-every",
    "augment",
    "print-every",
    "ckpt",
    "float-y",
    "input",
    "size",
    "sizes",
    "repeats",
    "tolerance",
];

/// A loaded `--config` file: a flat JSON object whose keys mirror the long
/// flag names. Explicit flags take precedence over these values.
pub struct ConfigFile {
    map: Map<String, Value>,
    path: String,
}

impl ConfigFile {
    pub fn empty() -> Self {
        ConfigFile {
            map: Map::new(),
            path: String::new(),
        }
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::empty());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("config file {}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))?;
        let Value::Object(map) = value else {
            return Err(CliError::Usage(format!(
                "config file {}: expected a JSON object of flag names to values",
                path.display()
            )));
        };
        for key in map.keys() {
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!(
                    "config file {}: unknown key {key:?}",
                    path.display()
                )));
            }
        }
        Ok(ConfigFile {
            map,
            path: path.display().to_string(),
        })
    }

    fn wrong_type(&self, key: &str, want: &str) -> CliError {
        CliError::Usage(format!(
            "config file {}: key {key:?} must be {want}",
            self.path
        ))
    }

    pub fn get_string(&self, key: &str) -> Result<Option<String>> {
        match self.map.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(self.wrong_type(key, "a string")),
        }
    }

    pub fn get_path(&self, key: &str) -> Result<Option<PathBuf>> {
        Ok(self.get_string(key)?.map(PathBuf::from))
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>> {
        match self.map.get(key) {
            None => Ok(None),
            Some(Value::Number(n)) => n
                .as_u64()
                .map(Some)
                .ok_or_else(|| self.wrong_type(key, "a non-negative integer")),
            Some(_) => Err(self.wrong_type(key, "a non-negative integer")),
        }
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>> {
        Ok(self.get_u64(key)?.map(|v| v as usize))
    }

    pub fn get_u32(&self, key: &str) -> Result<Option<u32>> {
        match self.get_u64(key)? {
            None => Ok(None),
            Some(v) => u32::try_from(v)
                .map(Some)
                .map_err(|_| self.wrong_type(key, "a 32-bit integer")),
        }
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.map.get(key) {
            None => Ok(None),
            Some(Value::Number(n)) => n
                .as_f64()
                .map(Some)
                .ok_or_else(|| self.wrong_type(key, "a number")),
            Some(_) => Err(self.wrong_type(key, "a number")),
        }
    }

    pub fn get_bool(&self, key: &str) -> Result<Option<bool>> {
        match self.map.get(key) {
            None => Ok(None),
            Some(Value::Bool(b)) => Ok(Some(*b)),
            Some(_) => Err(self.wrong_type(key, "a boolean")),
        }
    }

    /// Scale lists may be written `"2,3,4"` or `[2, 3, 4]`.
    pub fn get_scales(&self, key: &str) -> Result<Option<String>> {
        match self.map.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(Value::Array(items)) => {
                let mut parts = Vec::with_capacity(items.len());
                for item in items {
                    match item.as_u64() {
                        Some(v) => parts.push(v.to_string()),
                        None => {
                            return Err(
                                self.wrong_type(key, "a list of integers or a string like \"2,3,4\"")
                            )
                        }
                    }
                }
                Ok(Some(parts.join(",")))
            }
            Some(_) => Err(self.wrong_type(key, "a list of integers or a string like \"2,3,4\"")),
        }
    }
}
