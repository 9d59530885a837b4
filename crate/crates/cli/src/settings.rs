use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::commands::CliError;
use crate::Common;

/// The fully resolved run configuration: the `--config` JSON object with
/// every command-line flag written over it.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    pub values: Map<String, Value>,
    /// Directory of the config file; relative paths inside it resolve here.
    pub base: PathBuf,
}

fn usage(m: impl Into<String>) -> CliError {
    CliError::Usage(m.into())
}

impl Settings {
    pub fn resolve(common: &Common) -> Result<Settings, CliError> {
        let (mut values, base) = match &common.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                let v: Value = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
                let Value::Object(m) = v else {
                    return Err(usage(format!("{}: expected a JSON object", path.display())));
                };
                (m, path.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (Map::new(), PathBuf::new()),
        };
        let mut set = |k: &str, v: Value| {
            values.insert(k.to_string(), v);
        };
        if let Some(v) = &common.out {
            set("out", json!(v));
        }
        if let Some(v) = common.jobs {
            set("jobs", json!(v));
        }
        if let Some(v) = common.seed {
            set("seed", json!(v));
        }
        if let Some(v) = &common.pipeline {
            set("pipeline", json!(v));
        }
        if let Some(v) = common.p_infect {
            set("p_infect", json!(v));
        }
        if let Some(v) = common.r {
            set("r", json!(v));
        }
        if let Some(v) = common.theta {
            set("theta", json!(v));
        }
        if let Some(v) = common.budget {
            set("budget", json!(v));
        }
        if let Some(v) = &common.strategy {
            set("strategy", json!(v));
        }
        Ok(Settings { values, base })
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.values.get(key).filter(|v| !v.is_null())
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>, CliError> {
        self.get(key)
            .map(|v| v.as_u64().ok_or_else(|| usage(format!("{key} must be a non-negative integer"))))
            .transpose()
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.get(key).map(|v| v.as_f64().ok_or_else(|| usage(format!("{key} must be a number")))).transpose()
    }

    pub fn string(&self, key: &str) -> Result<Option<String>, CliError> {
        self.get(key)
            .map(|v| match v {
                Value::String(s) => Ok(s.clone()),
                Value::Number(n) => Ok(n.to_string()),
                _ => Err(usage(format!("{key} must be a string"))),
            })
            .transpose()
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.u64("seed")?.ok_or_else(|| usage("--seed is required"))
    }

    pub fn out(&self) -> Result<PathBuf, CliError> {
        self.out_opt()?.ok_or_else(|| usage("--out is required"))
    }

    pub fn out_opt(&self) -> Result<Option<PathBuf>, CliError> {
        Ok(self.string("out")?.map(PathBuf::from))
    }

    /// Writes `run.json` (command name plus every resolved setting) into `out`.
    pub fn log_run(&self, command: &str, out: &Path, extra: Value) -> Result<(), CliError> {
        let mut m = self.values.clone();
        m.insert("command".into(), json!(command));
        if let Value::Object(e) = extra {
            m.extend(e);
        }
        crate::commands::write_json(&out.join("run.json"), &Value::Object(m))
    }
}
