//! JSON run configuration.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use num_complex::Complex64;
use refdiff_core::curve::AngleGrid;
use refdiff_core::error::ConfigError;
use refdiff_core::model::{GaussianLayer, Lattice, PotentialField, PotentialModel, ReciprocalRodSet, TabulatedPotential};
use refdiff_core::proposed::DEFAULT_THRESHOLD;
use refdiff_core::solver::{Method, Problem, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::UsageError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeConfig,
    pub rods: RodsConfig,
    /// Vacuum wavenumber (Å⁻¹).
    pub gamma: f64,
    pub field: FieldConfig,
    pub angles: AngleConfig,
    pub method: String,
    pub dz: f64,
    #[serde(default)]
    pub rhst_threshold: Threshold,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bench: Option<BenchConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub a1: [f64; 2],
    pub a2: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RodsConfig {
    /// All rods with `|k| ≤ cutoff` (Å⁻¹).
    Cutoff(f64),
    /// Explicit `(m1, m2)` list starting with `(0, 0)`.
    Indices(Vec<[i32; 2]>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub z_e: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bulk_period: Option<f64>,
    pub model: ModelConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Zero,
    GaussianLayers { layers: Vec<LayerConfig> },
    Tabulated { z: Vec<f64>, coefficients: Vec<CoefficientConfig> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerConfig {
    pub z_center: f64,
    pub amplitude: f64,
    pub lateral_width: f64,
    pub depth_width: f64,
    #[serde(default)]
    pub absorption: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientConfig {
    pub rod: [i32; 2],
    pub re: Vec<f64>,
    #[serde(default)]
    pub im: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngleConfig {
    pub theta0: Theta0Config,
    #[serde(default = "default_theta1")]
    pub theta1: Vec<f64>,
}

fn default_theta1() -> Vec<f64> {
    vec![0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Theta0Config {
    List(Vec<f64>),
    Range { start: f64, step: f64, count: usize },
}

/// A number, or `"inf"` for a transformation that never triggers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ThresholdRepr", into = "ThresholdRepr")]
pub struct Threshold(pub f64);

impl Default for Threshold {
    fn default() -> Self {
        Threshold(DEFAULT_THRESHOLD)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ThresholdRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<ThresholdRepr> for Threshold {
    type Error = String;

    fn try_from(r: ThresholdRepr) -> Result<Self, String> {
        match r {
            ThresholdRepr::Number(x) => Ok(Threshold(x)),
            ThresholdRepr::Text(s) => match s.to_ascii_lowercase().as_str() {
                "inf" | "infinity" | "+inf" => Ok(Threshold(f64::INFINITY)),
                _ => Err(format!("rhst_threshold must be a number or \"inf\", got \"{s}\"")),
            },
        }
    }
}

impl From<Threshold> for ThresholdRepr {
    fn from(t: Threshold) -> Self {
        if t.0.is_infinite() {
            ThresholdRepr::Text("inf".into())
        } else {
            ThresholdRepr::Number(t.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default = "default_reference")]
    pub reference: MethodStep,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<MethodStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodStep {
    pub method: String,
    pub dz: f64,
}

pub fn default_reference() -> MethodStep {
    MethodStep { method: "sp6".into(), dz: 0.001 }
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { reference: default_reference(), baseline: None }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn problem(&self) -> Result<Problem, ConfigError> {
        let lattice = Lattice::new(self.lattice.a1, self.lattice.a2)?;
        let rods = match &self.rods {
            RodsConfig::Cutoff(c) => ReciprocalRodSet::within_cutoff(lattice, *c)?,
            RodsConfig::Indices(list) => {
                let pairs: Vec<(i32, i32)> = list.iter().map(|r| (r[0], r[1])).collect();
                ReciprocalRodSet::from_indices(lattice, &pairs)?
            }
        };
        let model = match &self.field.model {
            ModelConfig::Zero => PotentialModel::Zero,
            ModelConfig::GaussianLayers { layers } => PotentialModel::GaussianLayers(
                layers
                    .iter()
                    .map(|l| GaussianLayer {
                        z_center: l.z_center,
                        amplitude: l.amplitude,
                        lateral_width: l.lateral_width,
                        depth_width: l.depth_width,
                        absorption: l.absorption,
                    })
                    .collect(),
            ),
            ModelConfig::Tabulated { z, coefficients } => {
                let mut samples = BTreeMap::new();
                for c in coefficients {
                    if !c.im.is_empty() && c.im.len() != c.re.len() {
                        return Err(ConfigError::Tabulated(format!(
                            "rod ({}, {}) has {} real and {} imaginary samples",
                            c.rod[0],
                            c.rod[1],
                            c.re.len(),
                            c.im.len()
                        )));
                    }
                    let values: Vec<Complex64> = (0..c.re.len())
                        .map(|i| Complex64::new(c.re[i], c.im.get(i).copied().unwrap_or(0.0)))
                        .collect();
                    if samples.insert((c.rod[0], c.rod[1]), values).is_some() {
                        return Err(ConfigError::DuplicateRod(c.rod[0], c.rod[1]));
                    }
                }
                PotentialModel::Tabulated(TabulatedPotential::new(z.clone(), samples)?)
            }
        };
        let field = PotentialField::new(model, self.field.z_e, self.field.bulk_period)?;
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(ConfigError::Wavenumber(self.gamma));
        }
        Ok(Problem { rods, gamma: self.gamma, field })
    }

    pub fn grid(&self) -> Result<AngleGrid, ConfigError> {
        match &self.angles.theta0 {
            Theta0Config::List(list) => AngleGrid::product(list, &self.angles.theta1),
            Theta0Config::Range { start, step, count } => {
                let theta0: Vec<f64> = (0..*count).map(|i| start + step * i as f64).collect();
                AngleGrid::product(&theta0, &self.angles.theta1)
            }
        }
    }

    pub fn method(&self) -> Result<Method> {
        Ok(self.method.parse::<Method>()?)
    }

    pub fn solver(&self) -> Result<SolverConfig> {
        Ok(SolverConfig::new(self.method()?, self.dz).with_threshold(self.rhst_threshold.0))
    }

    pub fn bench_config(&self) -> BenchConfig {
        self.bench.clone().unwrap_or_default()
    }
}

/// Parses a comma-separated method list.
pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(|s| Ok(s.parse::<Method>()?)).collect()
}

/// Parses a comma-separated list of step sizes.
pub fn parse_dz_list(list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            let dz: f64 = s.trim().parse().map_err(|_| UsageError(format!("bad dz value '{s}'")))?;
            if !(dz > 0.0) || !dz.is_finite() {
                return Err(ConfigError::StepSize(dz).into());
            }
            Ok(dz)
        })
        .collect()
}
