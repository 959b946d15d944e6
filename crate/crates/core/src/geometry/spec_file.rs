//! Text form of a [`MetricSpec`].
//!
//! ```toml
//! name = "sphere2"
//! coords = ["theta", "phi"]
//!
//! [params]
//! a = 1.0
//!
//! [components]
//! "0,0" = "a^2"
//! "1,1" = "a^2*sin(theta)^2"
//! ```
//!
//! Component keys are `"i,j"` with 0-based indices; either triangle may be
//! given but not both. Omitted components are zero. The same fields are
//! accepted as JSON.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::MetricSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MetricFile {
    pub name: String,
    pub coords: Vec<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub components: BTreeMap<String, String>,
}

fn parse_key(key: &str, n: usize) -> Result<(usize, usize)> {
    let bad = || Error::MetricSpec(format!("component key '{key}' is not of the form \"i,j\""));
    let (a, b) = key.split_once(',').ok_or_else(bad)?;
    let i: usize = a.trim().parse().map_err(|_| bad())?;
    let j: usize = b.trim().parse().map_err(|_| bad())?;
    if i >= n || j >= n {
        return Err(Error::MetricSpec(format!(
            "component key '{key}' out of range for {n} coordinates"
        )));
    }
    Ok((i, j))
}

impl MetricFile {
    pub fn from_toml_str(text: &str) -> Result<MetricFile> {
        toml::from_str(text).map_err(|e| Error::MetricSpec(e.to_string()))
    }

    pub fn from_json_str(text: &str) -> Result<MetricFile> {
        serde_json::from_str(text).map_err(|e| Error::MetricSpec(e.to_string()))
    }

    /// Reads `.json` files as JSON and anything else as TOML.
    pub fn load(path: &Path) -> Result<MetricFile> {
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_str(&text),
            _ => Self::from_toml_str(&text),
        }
    }

    pub fn into_spec(self) -> Result<MetricSpec> {
        let n = self.coords.len();
        let mut entries: Vec<((usize, usize), String)> = Vec::new();
        for (key, src) in self.components {
            let (i, j) = parse_key(&key, n)?;
            let (i, j) = if i >= j { (i, j) } else { (j, i) };
            if entries.iter().any(|(ij, _)| *ij == (i, j)) {
                return Err(Error::MetricSpec(format!(
                    "component ({i},{j}) given in both triangles"
                )));
            }
            entries.push(((i, j), src));
        }
        let params: Vec<(String, f64)> = self.params.into_iter().collect();
        let borrowed: Vec<((usize, usize), &str)> =
            entries.iter().map(|(ij, s)| (*ij, s.as_str())).collect();
        MetricSpec::new(&self.name, &self.coords, &params, &borrowed)
    }

    pub fn from_spec(spec: &MetricSpec) -> MetricFile {
        let n = spec.dim();
        let mut components = BTreeMap::new();
        for i in 0..n {
            for j in 0..=i {
                let text = spec.component(i, j).to_string();
                if text != "0.0" {
                    components.insert(format!("{i},{j}"), text);
                }
            }
        }
        MetricFile {
            name: spec.name().to_string(),
            coords: spec.coords().to_vec(),
            params: spec.params().iter().cloned().collect(),
            components,
        }
    }
}

impl MetricSpec {
    pub fn from_toml_str(text: &str) -> Result<MetricSpec> {
        MetricFile::from_toml_str(text)?.into_spec()
    }

    pub fn from_json_str(text: &str) -> Result<MetricSpec> {
        MetricFile::from_json_str(text)?.into_spec()
    }

    pub fn load(path: &Path) -> Result<MetricSpec> {
        MetricFile::load(path)?.into_spec()
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&MetricFile::from_spec(self)).expect("metric file serializes")
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&MetricFile::from_spec(self)).expect("metric file serializes")
    }
}
