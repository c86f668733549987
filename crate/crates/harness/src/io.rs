//! Instance and report files (JSON, versioned).

use std::path::Path;

use nomafl_core::{Instance, SolveReport};
use serde::{Deserialize, Serialize};

use crate::config::SCHEMA_VERSION;
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub schema_version: u32,
    pub instance: Instance,
}

/// Reports of one instance. Per-device vectors are in canonical order
/// (ascending downlink gain); `index_map[i]` is the input index of
/// canonical device `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: u32,
    pub index_map: Vec<usize>,
    pub reports: Vec<SolveReport>,
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let file: InstanceFile = serde_json::from_str(&text)?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(HarnessError::Config(format!(
            "instance schema_version {} is not supported",
            file.schema_version
        )));
    }
    Ok(file.instance)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| HarnessError::io(path, e))
}

pub fn write_instance(instance: &Instance, path: &Path) -> Result<()> {
    write_json(
        &InstanceFile {
            schema_version: SCHEMA_VERSION,
            instance: instance.clone(),
        },
        path,
    )
}
