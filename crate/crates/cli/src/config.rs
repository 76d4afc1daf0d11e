use psreg_core::fem::RegistrationConfig;
use psreg_core::matching::{MatchingConfig, OracleFeatureParams};
use psreg_core::workflow::FpfhParams;
use psreg_core::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const RUN_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ProviderName {
    /// FPFH descriptors, nearest-feature matching
    #[default]
    Fpfh,
    /// Precomputed `x`/`y` feature tensors, dual softmax + MNN
    FeaturesFile,
    /// Ground-truth coordinate features written per sample, dual softmax + MNN
    Oracle,
    /// Network forward pass from a weight file, dual softmax + MNN
    Network,
}

/// Which correspondences drive registration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MatchSource {
    /// `matches.json` written by the match step
    #[default]
    Predicted,
    /// The sample's ground-truth matches
    Gt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MatchSection {
    pub provider: ProviderName,
    pub features: Option<PathBuf>,
    pub weights: Option<PathBuf>,
    pub heads: usize,
    pub voxel_size: f64,
    pub temperature: f64,
    pub threshold: f64,
    pub fpfh: FpfhParams,
    pub oracle: OracleFeatureParams,
}

impl Default for MatchSection {
    fn default() -> Self {
        let m = MatchingConfig::default();
        Self {
            provider: ProviderName::Fpfh,
            features: None,
            weights: None,
            heads: 4,
            voxel_size: 0.02,
            temperature: m.temperature,
            threshold: m.threshold,
            fpfh: FpfhParams::default(),
            oracle: OracleFeatureParams::default(),
        }
    }
}

impl MatchSection {
    pub fn matching(&self) -> MatchingConfig {
        MatchingConfig {
            temperature: self.temperature,
            threshold: self.threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegisterSection {
    pub prealign: bool,
    pub matches: MatchSource,
    pub fem: RegistrationConfig,
}

impl Default for RegisterSection {
    fn default() -> Self {
        Self {
            prealign: true,
            matches: MatchSource::Predicted,
            fem: RegistrationConfig::default(),
        }
    }
}

/// Run configuration file. Command-line flags override its values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub schema_version: u32,
    pub patient: Option<PathBuf>,
    pub seed: u64,
    pub count: usize,
    pub out: Option<PathBuf>,
    /// Worker threads for per-sample parallelism; 0 uses every core.
    pub workers: usize,
    pub matching: MatchSection,
    pub registration: RegisterSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: RUN_SCHEMA_VERSION,
            patient: None,
            seed: 0,
            count: 1,
            out: None,
            workers: 0,
            matching: MatchSection::default(),
            registration: RegisterSection::default(),
        }
    }
}

impl RunConfig {
    /// Parses a TOML run file; relative paths resolve against its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if cfg.schema_version != RUN_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "{}: schema_version {} is not supported (expected {RUN_SCHEMA_VERSION})",
                path.display(),
                cfg.schema_version
            )));
        }
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.patient,
            &mut cfg.out,
            &mut cfg.matching.features,
            &mut cfg.matching.weights,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.matching.matching().validate()?;
        self.matching.fpfh.validate()?;
        self.registration.fem.validate()?;
        if self.matching.heads == 0 {
            return Err(Error::Config("heads must be at least 1".into()));
        }
        if !(self.matching.voxel_size > 0.0) {
            return Err(Error::Config("voxel_size must be positive".into()));
        }
        Ok(())
    }
}
