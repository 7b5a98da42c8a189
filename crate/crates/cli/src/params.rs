//! Parameter resolution: command-line flag, then config file, then default.

use std::path::Path;

use anyhow::Context;
use serde::{de::DeserializeOwned, Serialize};
use serde_json::{Map, Value};

use crate::Failure;

pub struct Resolver {
    file: Map<String, Value>,
    echo: Map<String, Value>,
}

impl Resolver {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let file = match path {
            None => Map::new(),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                match serde_json::from_str(&text) {
                    Ok(Value::Object(m)) => m,
                    Ok(_) => return Err(Failure::Usage(format!("{} must hold a JSON object", p.display()))),
                    Err(e) => return Err(Failure::Usage(format!("{}: {e}", p.display()))),
                }
            }
        };
        Ok(Self { file, echo: Map::new() })
    }

    /// Value from the flag, the config file, or `fallback`, in that order.
    pub fn get<T: Serialize + DeserializeOwned>(
        &mut self,
        name: &str,
        flag: Option<T>,
        fallback: T,
    ) -> Result<T, Failure> {
        let v = self.get_opt(name, flag)?.unwrap_or(fallback);
        self.echo.insert(name.into(), to_value(&v));
        Ok(v)
    }

    pub fn get_opt<T: Serialize + DeserializeOwned>(
        &mut self,
        name: &str,
        flag: Option<T>,
    ) -> Result<Option<T>, Failure> {
        let from_file = match self.file.remove(name) {
            None => None,
            Some(v) => {
                Some(serde_json::from_value(v).map_err(|e| Failure::Usage(format!("config key {name:?}: {e}")))?)
            }
        };
        let v = flag.or(from_file);
        if let Some(v) = &v {
            self.echo.insert(name.into(), to_value(v));
        }
        Ok(v)
    }

    /// Records a value derived elsewhere (for instance read from another report).
    pub fn note<T: Serialize>(&mut self, name: &str, v: &T) {
        self.echo.insert(name.into(), to_value(v));
    }

    /// The resolved parameters; config keys the command did not read are an error.
    pub fn finish(self) -> Result<Map<String, Value>, Failure> {
        if let Some(k) = self.file.keys().next() {
            return Err(Failure::Usage(format!("unknown config key {k:?}")));
        }
        Ok(self.echo)
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}
