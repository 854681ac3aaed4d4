// SPDX-License-Identifier: Apache-2.0

//! Campaign configuration (TOML).
//!
//! ```toml
//! families = ["strobe", "arch", "crash", "hang"]
//! k_max = 12
//! budget_secs = 60.0
//! induction = true
//! workers = 0            # 0: one per core
//!
//! [core]
//! regfile_size = 8
//!
//! [env]
//! mode = "concrete"      # or "symbolic"
//! program = "loop"       # "loop", "wfi_free" or an image file
//! alignment_constraint = true
//!
//! [bits]
//! regex = "^pc_q:"       # over `register:bit` labels
//! range = [0, 63]        # inclusive census ids
//! ```

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::bmc::BmcOptions;
use crate::env::{loop_program, wfi_free_program, EnvConfig, EnvMode, ProgramImage};
use crate::property::Family;
use crate::rv32::{Census, CoreConfig};
use crate::sat::ExternalSolver;

use super::CampaignError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    #[default]
    Concrete,
    Symbolic,
}

impl std::str::FromStr for EnvKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "concrete" => Ok(EnvKind::Concrete),
            "symbolic" => Ok(EnvKind::Symbolic),
            _ => Err(format!("unknown environment `{s}` (concrete or symbolic)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvSection {
    pub mode: EnvKind,
    /// `loop`, `wfi_free`, or a path to an image file.
    pub program: String,
    /// Load address of the builtin programs.
    pub base: u32,
    pub alignment_constraint: bool,
}

impl Default for EnvSection {
    fn default() -> Self {
        EnvSection { mode: EnvKind::Concrete, program: "loop".into(), base: 0, alignment_constraint: true }
    }
}

impl EnvSection {
    /// Resolves the program image; relative paths are taken from `dir`.
    pub fn image(&self, dir: &Path) -> Result<ProgramImage, CampaignError> {
        Ok(match self.program.as_str() {
            "loop" => loop_program(self.base),
            "wfi_free" => wfi_free_program(self.base),
            p => ProgramImage::load(&dir.join(p))?,
        })
    }

    pub fn env_config(&self, dir: &Path) -> Result<EnvConfig, CampaignError> {
        let mode = match self.mode {
            EnvKind::Symbolic => EnvMode::Symbolic,
            EnvKind::Concrete => EnvMode::Concrete(self.image(dir)?),
        };
        Ok(EnvConfig { mode, alignment_constraint: self.alignment_constraint })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct BitFilter {
    pub regex: Option<String>,
    pub range: Option<[u32; 2]>,
}

impl BitFilter {
    pub fn select(&self, census: &Census) -> Result<Vec<u32>, CampaignError> {
        let re = match &self.regex {
            Some(r) => Some(regex::Regex::new(r).map_err(|e| CampaignError::Config(format!("bit regex: {e}")))?),
            None => None,
        };
        Ok((0..census.total_bits())
            .filter(|&b| self.range.is_none_or(|[lo, hi]| (lo..=hi).contains(&b)))
            .filter(|&b| re.as_ref().is_none_or(|re| re.is_match(&census.label(b))))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub core: CoreConfig,
    pub env: EnvSection,
    pub families: Vec<Family>,
    pub k_max: usize,
    /// Wall-clock budget per (bit, property) check, in seconds.
    pub budget_secs: f64,
    pub induction: bool,
    pub simple_path: bool,
    pub bits: BitFilter,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    /// External DIMACS solver for base-case queries; internal when unset.
    pub external_solver: Option<String>,
    pub external_args: Vec<String>,
    /// Free-location checks per property before the pinned pass; 0 skips
    /// the harvest.
    pub harvest_limit: usize,
    pub coi_prepass: bool,
    /// Cycle by which the halting instruction must have retired. When unset
    /// and the environment is concrete, the golden halt cycle plus
    /// `progress_margin` is used.
    pub progress_deadline: Option<u32>,
    pub progress_margin: Option<u32>,
    pub dead_state_n: u32,
    pub seed: u64,
    /// Directory for the resumable verdict cache.
    pub cache_dir: Option<PathBuf>,
    /// Directory that relative program paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            core: CoreConfig::default(),
            env: EnvSection::default(),
            families: Family::ALL.to_vec(),
            k_max: 12,
            budget_secs: 60.0,
            induction: true,
            simple_path: true,
            bits: BitFilter::default(),
            workers: 0,
            external_solver: None,
            external_args: Vec::new(),
            harvest_limit: 0,
            coi_prepass: true,
            progress_deadline: None,
            progress_margin: Some(16),
            dead_state_n: crate::property::DEAD_STATE_N,
            seed: 0,
            cache_dir: None,
            base_dir: PathBuf::from("."),
        }
    }
}

impl CampaignConfig {
    pub fn from_toml(text: &str) -> Result<Self, CampaignError> {
        let c: CampaignConfig = toml::from_str(text).map_err(|e| CampaignError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, CampaignError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CampaignError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut c = Self::from_toml(&text)?;
        c.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CampaignError> {
        if self.k_max < 1 {
            return Err(CampaignError::Config("k_max must be at least 1".into()));
        }
        if self.families.is_empty() {
            return Err(CampaignError::Config("no property family selected".into()));
        }
        if !(self.budget_secs > 0.0) {
            return Err(CampaignError::Config("budget_secs must be positive".into()));
        }
        self.core.validate().map_err(|e| CampaignError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn budget(&self) -> Duration {
        Duration::from_secs_f64(self.budget_secs)
    }

    /// Engine options for a check of `n` properties sharing one unrolling.
    pub fn bmc_options(&self, n: usize) -> BmcOptions {
        BmcOptions {
            bound: self.k_max,
            induction: self.induction,
            simple_path: self.simple_path,
            budget: Some(self.budget() * n.max(1) as u32),
            seed: self.seed,
            external: self.external_solver.as_ref().map(|p| {
                let mut s = ExternalSolver::new(p);
                s.args = self.external_args.clone();
                s
            }),
        }
    }
}
