use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use galleryflow::flow::FlowConfig;
use galleryflow::ingest::IngestConfig;
use galleryflow::segmentation::SegmentationConfig;
use galleryflow::synth::GenConfig;
use galleryflow::text::GroupKey;
use serde::{Deserialize, Serialize};

/// Input and output locations, as written in the config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub events: Option<String>,
    pub reviews: Option<String>,
    /// Bundled toy museum when absent.
    pub museum: Option<String>,
    /// Bundled demo lexicon when absent.
    pub lexicon: Option<String>,
    pub outdir: Option<String>,
}

/// Which stages `all` runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Stages {
    pub ingest: bool,
    pub cluster: bool,
    pub flow: bool,
    pub tours: bool,
    pub sentiment: bool,
}

impl Default for Stages {
    fn default() -> Self {
        Stages {
            ingest: true,
            cluster: true,
            flow: true,
            tours: true,
            sentiment: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SentimentConfig {
    pub group_keys: Vec<GroupKey>,
    /// Grouping used for distinctive-term extraction.
    pub terms_key: GroupKey,
    pub top_terms: usize,
    /// Reviews are rejected when a larger share of lines is malformed.
    pub max_malformed_fraction: f64,
}

impl Default for SentimentConfig {
    fn default() -> Self {
        SentimentConfig {
            group_keys: vec![
                GroupKey::TripType,
                GroupKey::Month,
                GroupKey::Language,
                GroupKey::Rating,
            ],
            terms_key: GroupKey::Rating,
            top_terms: 10,
            max_malformed_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub stages: Stages,
    pub ingest: IngestConfig,
    pub segmentation: SegmentationConfig,
    pub flow: FlowConfig,
    pub sentiment: SentimentConfig,
    pub synth: GenConfig,
}

/// A parsed config plus the directory its relative paths are resolved against.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: PipelineConfig,
    pub base: PathBuf,
}

impl Loaded {
    pub fn from_file(path: &Path) -> Result<Loaded> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("cannot read config file {}", path.display()))?;
        let config: PipelineConfig =
            toml::from_str(&text).with_context(|| format!("invalid config file {}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Loaded { config, base })
    }

    pub fn defaults() -> Loaded {
        Loaded {
            config: PipelineConfig::default(),
            base: PathBuf::new(),
        }
    }

    pub fn resolve(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    /// SHA-256 of the canonical JSON form, with the output directory left out.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut c = self.config.clone();
        c.paths.outdir = None;
        let json = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}
