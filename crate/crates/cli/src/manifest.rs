use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

/// Manifest as written by the user: the experiment name, an optional seed
/// and a `[params]` table of overrides.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub experiment: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: toml::Table,
}

impl Manifest {
    pub fn new(experiment: &str) -> Self {
        Manifest {
            experiment: experiment.to_string(),
            seed: 0,
            params: toml::Table::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Manifest(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }
}

/// Fills `P` from the override table, with every field not given taking its
/// default, and returns it together with the fully expanded table.
pub fn resolve<P>(params: &toml::Table) -> Result<(P, toml::Table)>
where
    P: Default + Serialize + DeserializeOwned,
{
    let p: P = toml::Value::Table(params.clone())
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Manifest(e.to_string()))?;
    let table = toml::Table::try_from(&p).map_err(|e| CliError::Manifest(e.to_string()))?;
    Ok((p, table))
}
