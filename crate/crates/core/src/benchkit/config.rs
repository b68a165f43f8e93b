use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chromanorm::NormalizeParams;
use crate::codebook::CodebookConfig;
use crate::error::Result;
use crate::lightsim::{Encoding, RenderParams};
use crate::texdesc::DescriptorConfig;

/// The synthetic evaluation corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    pub classes: usize,
    pub seed: u64,
    pub render: RenderParams,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            classes: 12,
            seed: 2016,
            render: RenderParams::default(),
        }
    }
}

impl CorpusConfig {
    /// The corpus variant whose images keep exact channel ratios under
    /// intensity changes.
    pub fn linear(classes: usize, seed: u64) -> Self {
        CorpusConfig {
            classes,
            seed,
            render: RenderParams {
                encoding: Encoding::Linear16,
                ..RenderParams::default()
            },
        }
    }
}

/// Every tunable parameter of the pipeline.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub corpus: CorpusConfig,
    pub descriptors: DescriptorConfig,
    pub normalize: NormalizeParams,
    pub codebook: CodebookConfig,
}

impl BenchConfig {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let mut c = BenchConfig::default();
        c.corpus.classes = 5;
        c.codebook.bovw_words = 32;
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<BenchConfig>(&text).unwrap(), c);
    }

    #[test]
    fn partial_json_takes_defaults() {
        let c: BenchConfig = serde_json::from_str(r#"{"corpus": {"classes": 3}}"#).unwrap();
        assert_eq!(c.corpus.classes, 3);
        assert_eq!(c.corpus.seed, CorpusConfig::default().seed);
        assert_eq!(c.codebook, CodebookConfig::default());
    }
}
