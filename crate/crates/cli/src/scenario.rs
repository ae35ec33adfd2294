//! Scenario files: one JSON document per experiment.

use anyhow::{bail, Context, Result};
use coopdyn_core::systems::QuadraticDiskFamily;
use coopdyn_core::{Complex64, DiscreteMeasure, GeneratorSystem, GridGeometry, MapSpec, RationalMap};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub maps: Vec<MapSpec>,
    #[serde(default)]
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_grid")]
    pub grid: GridGeometry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub solve: SolveOptions,
    #[serde(default)]
    pub classify: ClassifyOptions,
    #[serde(default)]
    pub julia: JuliaOptions,
    #[serde(default)]
    pub kernel: KernelOptions,
    #[serde(default)]
    pub stability: StabilityOptions,
    #[serde(default)]
    pub takagi: TakagiOptions,
    #[serde(default)]
    pub rate: RateOptions,
    #[serde(default)]
    pub exponents: ExponentOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyOptions>,
    #[serde(default)]
    pub oracle: OracleOptions,
}

fn default_name() -> String {
    "scenario".into()
}

fn default_grid() -> GridGeometry {
    GridGeometry {
        center: [0.0, 0.0],
        half_width: 2.0,
        resolution: 256,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyOptions {
    pub depth: usize,
    pub words: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { depth: 64, words: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JuliaOptions {
    pub points: usize,
    pub burn_in: usize,
    pub orbit_depth: usize,
    pub orbit_words: usize,
}

impl Default for JuliaOptions {
    fn default() -> Self {
        Self {
            points: 4096,
            burn_in: 100,
            orbit_depth: 40,
            orbit_words: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelOptions {
    pub word_depth: usize,
    pub branch_cap: usize,
    pub max_probes: usize,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self {
            word_depth: 20,
            branch_cap: 64,
            max_probes: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityOptions {
    pub coverage_depth: usize,
    pub level_cap: usize,
    pub search_depth: usize,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self {
            coverage_depth: 12,
            level_cap: 256,
            search_depth: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TakagiOptions {
    /// Non-pivot generator index.
    pub generator: usize,
    /// Minimal set whose `T` is differentiated; `None` picks `∞` when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    pub tol: f64,
    pub max_terms: usize,
    pub fd_delta: f64,
    pub fd_probes: usize,
}

impl Default for TakagiOptions {
    fn default() -> Self {
        Self {
            generator: 0,
            target: None,
            tol: 1e-6,
            max_terms: 2000,
            fd_delta: 1e-3,
            fd_probes: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RateOptions {
    pub iterations: usize,
}

impl Default for RateOptions {
    fn default() -> Self {
        Self { iterations: 60 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExponentOptions {
    pub omega_words: usize,
    pub word_len: usize,
    pub holder_points: usize,
    /// Dyadic scale exponents: scales are `step * 2^k` for `k` in this range.
    pub scale_range: [u32; 2],
}

impl Default for ExponentOptions {
    fn default() -> Self {
        Self {
            omega_words: 4000,
            word_len: 40,
            holder_points: 100,
            scale_range: [2, 6],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyOptions {
    pub radii: Vec<f64>,
    pub angles: usize,
    pub steps: usize,
}

impl FamilyOptions {
    pub fn family(&self) -> Result<QuadraticDiskFamily> {
        Ok(QuadraticDiskFamily::new(self.radii.clone(), self.angles)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleOptions {
    /// Lebesgue parameter.
    pub a: f64,
    pub points: usize,
    pub depth: usize,
    pub series_depth: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            a: 0.3,
            points: 4097,
            depth: 50,
            series_depth: 40,
        }
    }
}

/// Reads, deserializes (with field-path diagnostics) and validates.
pub fn parse_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_scenario_str(&text).with_context(|| format!("in scenario {}", path.display()))
}

pub fn parse_scenario_str(text: &str) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let sc: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        anyhow::anyhow!("schema error at `{path}`: {}", e.into_inner())
    })?;
    sc.validate()?;
    Ok(sc)
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.grid
            .validate()
            .map_err(|e| anyhow::anyhow!("schema error at `grid`: {e}"))?;
        if !self.maps.is_empty() || !self.weights.is_empty() {
            self.measure()?;
        }
        let positive = [
            ("solve.tol", self.solve.tol),
            ("takagi.tol", self.takagi.tol),
            ("takagi.fd_delta", self.takagi.fd_delta),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                bail!("schema error at `{name}`: tolerances must be positive");
            }
        }
        if !(self.oracle.a > 0.0 && self.oracle.a < 1.0) {
            bail!("schema error at `oracle.a`: must lie in (0, 1)");
        }
        if self.oracle.points < 2 {
            bail!("schema error at `oracle.points`: need at least two points");
        }
        let [lo, hi] = self.exponents.scale_range;
        if lo > hi || hi > 20 {
            bail!("schema error at `exponents.scale_range`: need lo <= hi <= 20");
        }
        if let Some(f) = &self.family {
            f.family()
                .map_err(|e| anyhow::anyhow!("schema error at `family`: {e}"))?;
            if f.steps < 2 {
                bail!("schema error at `family.steps`: need at least two steps");
            }
        }
        Ok(())
    }

    pub fn measure(&self) -> Result<DiscreteMeasure> {
        if self.maps.is_empty() {
            bail!("schema error at `maps`: this command needs a generator system");
        }
        let maps = self
            .maps
            .iter()
            .enumerate()
            .map(|(k, m)| RationalMap::from_spec(m).map_err(|e| anyhow::anyhow!("schema error at `maps[{k}]`: {e}")))
            .collect::<Result<Vec<_>>>()?;
        let system = GeneratorSystem::new(maps).map_err(|e| anyhow::anyhow!("schema error at `maps`: {e}"))?;
        DiscreteMeasure::new(system, self.weights.clone())
            .map_err(|e| anyhow::anyhow!("schema error at `weights`: {e}"))
    }

    pub fn seed(&self, command: &str) -> Result<u64> {
        self.seed
            .with_context(|| format!("`{command}` is stochastic and needs a seed (scenario `seed` or --seed)"))
    }

    pub fn grid_center(&self) -> Complex64 {
        Complex64::new(self.grid.center[0], self.grid.center[1])
    }
}
