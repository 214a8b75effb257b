//! JSON scenario files.
//!
//! ```json
//! {
//!   "horizon": 24,
//!   "tariff": { "retail_rate": [0.31, ...] },
//!   "system_load": [1250.0, ...],
//!   "prosumers": [
//!     { "id": "residential", "alpha": 0.8,
//!       "baseline_load": [...], "pv_generation": [...], "pv_gen_cost": [...],
//!       "dr_cap_fraction": 0.1 }
//!   ],
//!   "utility_cost": { "c0": 4207.5, "c1": -6.74, "c2": 0.0029 },
//!   "event_hours": [12, 13, 14]
//! }
//! ```
//!
//! `horizon` defaults to 24 and `dr_cap_fraction` to 0.10. Unknown keys are
//! rejected.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use drnash_core::scenario::{DEFAULT_DR_CAP_FRACTION, DEFAULT_HORIZON};
use drnash_core::{
    HourlySeries, ProsumerSpec, Scenario, TouTariff, UtilityCostCoefficients, ValidationError,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    pub tariff: TariffFile,
    pub system_load: Vec<f64>,
    pub prosumers: Vec<ProsumerFile>,
    pub utility_cost: CostFile,
    pub event_hours: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TariffFile {
    pub retail_rate: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProsumerFile {
    pub id: String,
    pub alpha: f64,
    pub baseline_load: Vec<f64>,
    pub pv_generation: Vec<f64>,
    pub pv_gen_cost: Vec<f64>,
    #[serde(default = "default_cap")]
    pub dr_cap_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostFile {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

fn default_horizon() -> usize {
    DEFAULT_HORIZON
}

fn default_cap() -> f64 {
    DEFAULT_DR_CAP_FRACTION
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<Scenario, ValidationError> {
        let mut hours = BTreeSet::new();
        for &h in &self.event_hours {
            if !hours.insert(h) {
                return Err(ValidationError::new(
                    "event_hours",
                    format!("hour {h} listed twice"),
                ));
            }
        }
        let prosumers = self
            .prosumers
            .into_iter()
            .map(|p| ProsumerSpec {
                id: p.id,
                alpha: p.alpha,
                baseline_load: p.baseline_load.into(),
                pv_generation: p.pv_generation.into(),
                pv_gen_cost: p.pv_gen_cost.into(),
                dr_cap_fraction: p.dr_cap_fraction,
            })
            .collect();
        Scenario::new(
            self.horizon,
            TouTariff {
                retail_rate: self.tariff.retail_rate.into(),
            },
            HourlySeries::new(self.system_load),
            prosumers,
            UtilityCostCoefficients::new(
                self.utility_cost.c0,
                self.utility_cost.c1,
                self.utility_cost.c2,
            ),
            hours,
        )
    }
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        let c = s.utility_cost();
        Self {
            horizon: s.horizon(),
            tariff: TariffFile {
                retail_rate: s.tariff().retail_rate.values().to_vec(),
            },
            system_load: s.system_load().values().to_vec(),
            prosumers: s
                .prosumers()
                .iter()
                .map(|p| ProsumerFile {
                    id: p.id.clone(),
                    alpha: p.alpha,
                    baseline_load: p.baseline_load.values().to_vec(),
                    pv_generation: p.pv_generation.values().to_vec(),
                    pv_gen_cost: p.pv_gen_cost.values().to_vec(),
                    dr_cap_fraction: p.dr_cap_fraction,
                })
                .collect(),
            utility_cost: CostFile {
                c0: c.c0,
                c1: c.c1,
                c2: c.c2,
            },
            event_hours: s.event_hours().iter().copied().collect(),
        }
    }
}

/// Parses scenario JSON; `origin` only labels error messages.
pub fn parse_scenario(text: &str, origin: &Path) -> Result<Scenario> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Ok(file.into_scenario()?)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenario(&text, path)
}

pub fn scenario_to_json(s: &Scenario) -> String {
    let mut out =
        serde_json::to_string_pretty(&ScenarioFile::from(s)).expect("scenario serializes");
    out.push('\n');
    out
}

pub fn save_scenario(s: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, scenario_to_json(s)).map_err(|e| Error::io(path, e))
}
