//! JSON file formats. Complex numbers are `[re, im]` pairs and matrices are
//! lists of rows.

use std::path::Path;

use qmeas::linalg::{c, CMat, DensityMatrix};
use qmeas::{Tolerances, WeightedAssemblage};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &CMat) -> JsonMatrix {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

pub fn matrix_from_json(rows: &JsonMatrix, dim: usize, what: &str) -> Result<CMat, CliError> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(CliError::Input(format!("{what}: expected a {dim}x{dim} matrix")));
    }
    Ok(CMat::from_fn(dim, dim, |i, j| c(rows[i][j][0], rows[i][j][1])))
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct Metadata {
    pub generator: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub labels: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AssemblageFile {
    pub dim: usize,
    pub settings: usize,
    pub outcomes: usize,
    pub weights: Vec<f64>,
    /// `effects[x][a]`.
    pub effects: Vec<Vec<JsonMatrix>>,
    #[serde(default)]
    pub metadata: Metadata,
}

impl AssemblageFile {
    pub fn from_assemblage(a: &WeightedAssemblage, metadata: Metadata) -> Self {
        AssemblageFile {
            dim: a.dim(),
            settings: a.settings(),
            outcomes: a.outcomes(),
            weights: a.weights().to_vec(),
            effects: a.povms().iter().map(|p| p.effects().iter().map(matrix_to_json).collect()).collect(),
            metadata,
        }
    }

    pub fn to_assemblage(&self) -> Result<WeightedAssemblage, CliError> {
        if self.effects.len() != self.settings || self.weights.len() != self.settings {
            return Err(CliError::Input(format!(
                "header says {} settings, found {} effect lists and {} weights",
                self.settings,
                self.effects.len(),
                self.weights.len()
            )));
        }
        let mut effects = Vec::with_capacity(self.settings);
        for (x, ex) in self.effects.iter().enumerate() {
            if ex.len() != self.outcomes {
                return Err(CliError::Input(format!("setting {x}: {} effects, header says {}", ex.len(), self.outcomes)));
            }
            effects.push(
                ex.iter()
                    .enumerate()
                    .map(|(a, m)| matrix_from_json(m, self.dim, &format!("effect ({x}, {a})")))
                    .collect::<Result<Vec<_>, _>>()?,
            );
        }
        Ok(WeightedAssemblage::from_effects(effects, self.weights.clone())?)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct StateFile {
    pub dim: usize,
    pub matrix: JsonMatrix,
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn read_assemblage(path: &Path) -> Result<WeightedAssemblage, CliError> {
    let file: AssemblageFile = serde_json::from_str(&read_text(path)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    file.to_assemblage()
}

/// `phi-plus` (in dimension `dim`) or a path to a state file.
pub fn read_state(spec: &str, dim: usize) -> Result<DensityMatrix, CliError> {
    if spec == "phi-plus" {
        return Ok(DensityMatrix::phi_plus(dim));
    }
    let file: StateFile =
        serde_json::from_str(&read_text(Path::new(spec))?).map_err(|e| CliError::Input(format!("{spec}: {e}")))?;
    let m = matrix_from_json(&file.matrix, file.dim, "state")?;
    Ok(DensityMatrix::new(m, &Tolerances::default())?)
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn pretty(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

pub fn matrices(ms: &[CMat]) -> Value {
    Value::Array(ms.iter().map(|m| serde_json::to_value(matrix_to_json(m)).unwrap()).collect())
}

pub fn matrix_grid(ms: &[Vec<CMat>]) -> Value {
    Value::Array(ms.iter().map(|row| matrices(row)).collect())
}
