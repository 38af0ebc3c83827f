// Copyright 2026 The neo-lite Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Run configuration: embedded defaults, an optional TOML file, then flags.

use std::path::{Path, PathBuf};

use neo_core::driver::DriverConfig;
use neo_core::featurize::Variant;
use neo_core::rvec::SgnsParams;
use neo_core::search::Cutoff;
use neo_core::simdb::{CatalogConfig, WorkloadConfig};
use neo_core::{NeoError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub catalog: PathBuf,
    pub workload: PathBuf,
    pub embeddings: PathBuf,
    /// Directory holding state.json, experience.jsonl and model.json.
    pub state: PathBuf,
    pub metrics: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            catalog: "catalog.json".into(),
            workload: "workload.json".into(),
            embeddings: "embeddings.json".into(),
            state: "state".into(),
            metrics: "metrics.csv".into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub catalog: u64,
    pub workload: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub seeds: Seeds,
    pub catalog: CatalogConfig,
    pub workload: WorkloadConfig,
    pub sgns: SgnsParams,
    /// Add FK-joined rows to the embedding corpus.
    pub denormalize: bool,
    pub driver: DriverConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            paths: Paths::default(),
            seeds: Seeds::default(),
            catalog: CatalogConfig::default(),
            workload: WorkloadConfig::default(),
            sgns: SgnsParams::default(),
            denormalize: true,
            driver: DriverConfig::default(),
        }
    }
}

/// Flag values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub variant: Option<Variant>,
    pub cost_mode: Option<neo_core::valuemodel::CostMode>,
    pub expansions: Option<usize>,
    pub wallclock: bool,
    pub cold_start: bool,
    pub catalog: Option<PathBuf>,
    pub workload: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub state: Option<PathBuf>,
    pub metrics: Option<PathBuf>,
}

/// Wall-clock budget used by `--wallclock`.
pub const WALLCLOCK_MS: u64 = 250;

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                toml::from_str(&text).map_err(|e| NeoError::Config(format!("{}: {e}", p.display())))
            }
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seeds.catalog = s;
            self.seeds.workload = s;
            self.sgns.seed = s;
            self.driver.seed = s;
        }
        if let Some(v) = o.variant {
            self.driver.variant = v;
        }
        if let Some(m) = o.cost_mode {
            self.driver.cost_mode = m;
        }
        if let Some(n) = o.expansions {
            self.driver.search.cutoff = Cutoff::Expansions(n);
        }
        if o.wallclock {
            self.driver.search.cutoff = Cutoff::WallClock(WALLCLOCK_MS);
        }
        if o.cold_start {
            self.driver.cold_start = true;
        }
        let paths = [
            (&o.catalog, &mut self.paths.catalog),
            (&o.workload, &mut self.paths.workload),
            (&o.embeddings, &mut self.paths.embeddings),
            (&o.state, &mut self.paths.state),
            (&o.metrics, &mut self.paths.metrics),
        ];
        for (src, dst) in paths {
            if let Some(p) = src {
                *dst = p.clone();
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.driver.validate()?;
        self.sgns.validate()
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| NeoError::Config(format!("cannot render config: {e}")))
    }
}
