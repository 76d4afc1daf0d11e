use crate::arap::{ArapConfig, CompressionParams, LobeParams};
use crate::crop::CropConfig;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Which deformation generator a sample uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeformationMode {
    /// Fair coin between compression and lobe per sample.
    #[default]
    Mixed,
    Compression,
    Lobe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeformationKind {
    Compression,
    Lobe,
}

/// Bounds for the random rigid perturbation of the complete cloud.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RigidParams {
    /// Degrees.
    pub max_angle: f64,
    /// Per-axis bound, normalized units.
    pub max_translation: f64,
}

impl Default for RigidParams {
    fn default() -> Self {
        Self {
            max_angle: 45.0,
            max_translation: 0.2,
        }
    }
}

/// Everything that shapes a sample except the patient's geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationParams {
    #[serde(default)]
    pub deformation: DeformationMode,
    #[serde(default)]
    pub compression: CompressionParams,
    #[serde(default)]
    pub lobe: LobeParams,
    #[serde(default)]
    pub arap: ArapConfig,
    #[serde(default)]
    pub crop: CropConfig,
    #[serde(default)]
    pub rigid: RigidParams,
    /// Standard deviation of additive Gaussian noise on the partial cloud.
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default = "default_camera_retries")]
    pub camera_retries: usize,
}

fn default_camera_retries() -> usize {
    10
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self {
            deformation: DeformationMode::default(),
            compression: CompressionParams::default(),
            lobe: LobeParams::default(),
            arap: ArapConfig::default(),
            crop: CropConfig::default(),
            rigid: RigidParams::default(),
            noise_sigma: 0.0,
            camera_retries: default_camera_retries(),
        }
    }
}

impl GenerationParams {
    pub fn validate(&self) -> Result<()> {
        self.arap.validate()?;
        self.crop.validate()?;
        let c = &self.compression;
        let l = &self.lobe;
        if !(c.max_magnitude >= 0.0 && l.max_magnitude >= 0.0) {
            return Err(Error::Config("deformation magnitudes must be non-negative".into()));
        }
        for (name, f) in [
            ("compression.handle_fraction", c.handle_fraction),
            ("compression.anchor_fraction", c.anchor_fraction),
            ("lobe.patch_fraction", l.patch_fraction),
            ("lobe.anchor_fraction", l.anchor_fraction),
        ] {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::Config(format!("{name} = {f} not in (0, 1)")));
            }
        }
        if l.control_points == 0 {
            return Err(Error::Config("lobe.control_points must be at least 1".into()));
        }
        if !(0.0..=180.0).contains(&self.rigid.max_angle) || !(self.rigid.max_translation >= 0.0) {
            return Err(Error::Config("rigid ranges must satisfy 0 <= max_angle <= 180, max_translation >= 0".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Config(format!("noise_sigma {} must be >= 0", self.noise_sigma)));
        }
        if self.camera_retries == 0 {
            return Err(Error::Config("camera_retries must be at least 1".into()));
        }
        Ok(())
    }
}

/// Lobe region given inline or as a JSON array file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LobeLabels {
    Inline(Vec<usize>),
    File(PathBuf),
}

/// Patient description read from a TOML file.
///
/// ```toml
/// surface_mesh = "liver.ply"
/// tet_mesh = "liver.tet"
/// lobe_labels = "lobe.json"
/// noise_sigma = 0.0
///
/// [crop]
/// keep_fraction = 0.05
/// ```
///
/// Relative paths resolve against the config file's directory. Lobe labels
/// index the surface mesh after unreferenced vertices are pruned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "PatientFile", into = "PatientFile")]
pub struct PatientConfig {
    pub surface_mesh: PathBuf,
    pub tet_mesh: PathBuf,
    pub lobe_labels: LobeLabels,
    pub generation: GenerationParams,
}

/// Flat on-disk form; serde cannot combine `flatten` with `deny_unknown_fields`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PatientFile {
    surface_mesh: PathBuf,
    tet_mesh: PathBuf,
    lobe_labels: LobeLabels,
    #[serde(default)]
    noise_sigma: f64,
    #[serde(default = "default_camera_retries")]
    camera_retries: usize,
    #[serde(default)]
    deformation: DeformationMode,
    #[serde(default)]
    compression: CompressionParams,
    #[serde(default)]
    lobe: LobeParams,
    #[serde(default)]
    arap: ArapConfig,
    #[serde(default)]
    crop: CropConfig,
    #[serde(default)]
    rigid: RigidParams,
}

impl From<PatientFile> for PatientConfig {
    fn from(f: PatientFile) -> Self {
        Self {
            surface_mesh: f.surface_mesh,
            tet_mesh: f.tet_mesh,
            lobe_labels: f.lobe_labels,
            generation: GenerationParams {
                deformation: f.deformation,
                compression: f.compression,
                lobe: f.lobe,
                arap: f.arap,
                crop: f.crop,
                rigid: f.rigid,
                noise_sigma: f.noise_sigma,
                camera_retries: f.camera_retries,
            },
        }
    }
}

impl From<PatientConfig> for PatientFile {
    fn from(c: PatientConfig) -> Self {
        let g = c.generation;
        Self {
            surface_mesh: c.surface_mesh,
            tet_mesh: c.tet_mesh,
            lobe_labels: c.lobe_labels,
            noise_sigma: g.noise_sigma,
            camera_retries: g.camera_retries,
            deformation: g.deformation,
            compression: g.compression,
            lobe: g.lobe,
            arap: g.arap,
            crop: g.crop,
            rigid: g.rigid,
        }
    }
}

impl PatientConfig {
    pub fn from_toml_str(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: PatientConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.surface_mesh = base.join(&cfg.surface_mesh);
        cfg.tet_mesh = base.join(&cfg.tet_mesh);
        if let LobeLabels::File(p) = &mut cfg.lobe_labels {
            *p = base.join(&*p);
        }
        cfg.generation.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("patient config serializes")
    }

    pub fn load_lobe_labels(&self) -> Result<Vec<usize>> {
        match &self.lobe_labels {
            LobeLabels::Inline(v) => Ok(v.clone()),
            LobeLabels::File(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                serde_json::from_str(&text).map_err(|e| Error::Json {
                    path: p.clone(),
                    source: e,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults_and_resolves_paths() {
        let cfg = PatientConfig::from_toml_str(
            "surface_mesh = \"s.ply\"\ntet_mesh = \"v.tet\"\nlobe_labels = [1, 2, 3]\n",
            Path::new("/data"),
        )
        .unwrap();
        assert_eq!(cfg.surface_mesh, Path::new("/data/s.ply"));
        assert_eq!(cfg.lobe_labels, LobeLabels::Inline(vec![1, 2, 3]));
        assert_eq!(cfg.generation, GenerationParams::default());
    }

    #[test]
    fn nested_overrides() {
        let text = r#"
surface_mesh = "s.ply"
tet_mesh = "v.tet"
lobe_labels = "lobe.json"
noise_sigma = 0.001
deformation = "compression"

[crop]
keep_fraction = 0.1

[rigid]
max_angle = 0
max_translation = 0
"#;
        let cfg = PatientConfig::from_toml_str(text, Path::new("p")).unwrap();
        let g = &cfg.generation;
        assert_eq!(g.deformation, DeformationMode::Compression);
        assert_eq!(g.crop.keep_fraction, 0.1);
        assert_eq!(g.crop.max_angle, 80.0);
        assert_eq!(g.rigid.max_angle, 0.0);
        assert_eq!(g.noise_sigma, 0.001);
        assert_eq!(cfg.lobe_labels, LobeLabels::File(Path::new("p/lobe.json").into()));
    }

    #[test]
    fn unknown_keys_rejected() {
        for text in [
            "surface_mesh = \"s\"\ntet_mesh = \"v\"\nlobe_labels = []\nnoise = 1.0\n",
            "surface_mesh = \"s\"\ntet_mesh = \"v\"\nlobe_labels = []\n[crop]\nkeep = 0.1\n",
        ] {
            let err = PatientConfig::from_toml_str(text, Path::new(".")).unwrap_err();
            assert!(matches!(err, Error::Config(_)), "{err}");
        }
    }

    #[test]
    fn invalid_values_rejected() {
        let text = "surface_mesh = \"s\"\ntet_mesh = \"v\"\nlobe_labels = []\n[crop]\nkeep_fraction = 0.0\n";
        assert!(PatientConfig::from_toml_str(text, Path::new(".")).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = PatientConfig {
            surface_mesh: "a.ply".into(),
            tet_mesh: "b.tet".into(),
            lobe_labels: LobeLabels::Inline(vec![4, 5]),
            generation: GenerationParams::default(),
        };
        let back = PatientConfig::from_toml_str(&cfg.to_toml_string(), Path::new("")).unwrap();
        assert_eq!(back, cfg);
    }
}
