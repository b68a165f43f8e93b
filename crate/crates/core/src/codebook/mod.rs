//! Object-recognition descriptors: dense SIFT local features aggregated
//! through a learned vocabulary as bag of visual words, VLAD or Fisher
//! vectors.

mod encode;
mod gmm;
mod kmeans;
mod sift;
mod store;

use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::imgcore::extract_patches;
use crate::lightsim::{corpus_specs, find_condition, ImageSource, RenderParams, SyntheticCorpus};
use crate::texdesc::{Descriptor, PatchContext};

pub use encode::{encode_bovw, encode_fv, encode_vlad};
pub use gmm::{gmm_em, gmm_em_traced, GaussianMixture, GmmParams, VARIANCE_FLOOR};
pub use kmeans::{kmeans, kmeans_traced, Codebook, KmeansParams};
pub use sift::{dense_sift, normalize_sift, LocalDescriptorSet, SiftConfig, SIFT_DIM};
pub use store::{
    load_codebook, load_mixture, read_codebook, read_mixture, save_codebook, save_mixture,
    write_codebook, write_mixture,
};

/// Registry names of the codebook descriptors.
pub const CODEBOOK_DESCRIPTORS: [&str; 3] = ["bovw", "vlad", "fv"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CodebookConfig {
    pub sift: SiftConfig,
    pub bovw_words: usize,
    pub vlad_words: usize,
    pub fv_components: usize,
    /// Classes of the held-out training corpus.
    pub train_classes: usize,
    /// Seed of the training corpus; distinct from any evaluation corpus seed.
    pub train_corpus_seed: u64,
    /// Local descriptors drawn from each training patch.
    pub samples_per_patch: usize,
    pub seed: u64,
    pub kmeans: KmeansParams,
    pub gmm: GmmParams,
}

impl Default for CodebookConfig {
    fn default() -> Self {
        CodebookConfig {
            sift: SiftConfig::default(),
            bovw_words: 1024,
            vlad_words: 200,
            fv_components: 160,
            train_classes: 8,
            train_corpus_seed: 0x5eed_c0de,
            samples_per_patch: 200,
            seed: 17,
            kmeans: KmeansParams::default(),
            gmm: GmmParams::default(),
        }
    }
}

/// The three learned vocabularies.
#[derive(Clone, Debug, PartialEq)]
pub struct CodebookModels {
    pub bovw: Codebook,
    pub vlad: Codebook,
    pub fv: GaussianMixture,
}

const MODEL_FILES: [&str; 3] = ["bovw.rtcb", "vlad.rtcb", "fv.rtcb"];

impl CodebookModels {
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        save_codebook(&self.bovw, &dir.join(MODEL_FILES[0]))?;
        save_codebook(&self.vlad, &dir.join(MODEL_FILES[1]))?;
        save_mixture(&self.fv, &dir.join(MODEL_FILES[2]))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        Ok(CodebookModels {
            bovw: load_codebook(&dir.join(MODEL_FILES[0]))?,
            vlad: load_codebook(&dir.join(MODEL_FILES[1]))?,
            fv: load_mixture(&dir.join(MODEL_FILES[2]))?,
        })
    }
}

/// Local descriptors sampled from the neutral-light images of a synthetic
/// corpus, with a hash of the sample.
pub fn training_sample(config: &CodebookConfig) -> Result<(Vec<f32>, String)> {
    let corpus = SyntheticCorpus::with_conditions(
        corpus_specs(config.train_classes, config.train_corpus_seed),
        vec![find_condition("I100").expect("catalog has I100")],
        RenderParams::default(),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = Vec::new();
    for class in corpus.classes() {
        let img = corpus.image(class, "I100")?;
        for patch in extract_patches(&img, class, "I100")? {
            let ctx = PatchContext::new(&patch.image)?;
            let set = dense_sift(ctx.gray(), ctx.width(), ctx.height(), &config.sift)?;
            let take = config.samples_per_patch.min(set.len());
            let mut picked = sample(&mut rng, set.len(), take).into_vec();
            picked.sort_unstable();
            for i in picked {
                out.extend_from_slice(set.get(i));
            }
        }
    }
    let mut hash = Sha256::new();
    out.iter().for_each(|v| hash.update(v.to_le_bytes()));
    let digest: String = hash.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect();
    Ok((out, digest))
}

/// Learns the BoVW and VLAD vocabularies and the Fisher-vector mixture.
pub fn train_models(config: &CodebookConfig) -> Result<CodebookModels> {
    let (sample, digest) = training_sample(config)?;
    let fingerprint = |seed: u64| format!("{digest}:seed={seed}");
    let seeds = [config.seed, config.seed + 1, config.seed + 2];
    let mut bovw = kmeans(&sample, SIFT_DIM, config.bovw_words, seeds[0], &config.kmeans)?;
    bovw.training_fingerprint = fingerprint(seeds[0]);
    let mut vlad = kmeans(&sample, SIFT_DIM, config.vlad_words, seeds[1], &config.kmeans)?;
    vlad.training_fingerprint = fingerprint(seeds[1]);
    let mut fv = gmm_em(&sample, SIFT_DIM, config.fv_components, seeds[2], &config.gmm)?;
    fv.training_fingerprint = fingerprint(seeds[2]);
    Ok(CodebookModels { bovw, vlad, fv })
}

fn local_descriptors(ctx: &PatchContext, config: &SiftConfig) -> Result<std::rc::Rc<LocalDescriptorSet>> {
    let key = format!("sift:{}:{}:{}", config.bin_size, config.stride, config.scales);
    let set = ctx.memo(&key, || dense_sift(ctx.gray(), ctx.width(), ctx.height(), config).map_err(|e| e.to_string()));
    match &*set {
        Ok(s) => Ok(std::rc::Rc::new(s.clone())),
        Err(e) => Err(Error::invalid(e.clone())),
    }
}

#[derive(Clone, Debug)]
enum Model {
    Bovw(Arc<Codebook>),
    Vlad(Arc<Codebook>),
    Fv(Arc<GaussianMixture>),
}

/// Dense SIFT aggregated through one of the learned models.
pub struct CodebookDescriptor {
    model: Model,
    sift: SiftConfig,
}

impl CodebookDescriptor {
    pub fn bovw(cb: Arc<Codebook>, sift: SiftConfig) -> Self {
        CodebookDescriptor { model: Model::Bovw(cb), sift }
    }

    pub fn vlad(cb: Arc<Codebook>, sift: SiftConfig) -> Self {
        CodebookDescriptor { model: Model::Vlad(cb), sift }
    }

    pub fn fv(gmm: Arc<GaussianMixture>, sift: SiftConfig) -> Self {
        CodebookDescriptor { model: Model::Fv(gmm), sift }
    }
}

impl Descriptor for CodebookDescriptor {
    fn name(&self) -> &str {
        match self.model {
            Model::Bovw(_) => "bovw",
            Model::Vlad(_) => "vlad",
            Model::Fv(_) => "fv",
        }
    }

    fn dim(&self) -> usize {
        match &self.model {
            Model::Bovw(cb) => cb.k(),
            Model::Vlad(cb) => cb.k() * cb.dim,
            Model::Fv(g) => 2 * g.k() * g.dim,
        }
    }

    fn compute(&self, ctx: &PatchContext) -> Result<Vec<f64>> {
        let local = local_descriptors(ctx, &self.sift)?;
        match &self.model {
            Model::Bovw(cb) => encode_bovw(&local, cb),
            Model::Vlad(cb) => encode_vlad(&local, cb),
            Model::Fv(g) => encode_fv(&local, g),
        }
    }
}

/// Builds a codebook descriptor by registry name.
pub fn codebook_descriptor(name: &str, models: &CodebookModels, sift: &SiftConfig) -> Result<Box<dyn Descriptor>> {
    Ok(match name {
        "bovw" => Box::new(CodebookDescriptor::bovw(Arc::new(models.bovw.clone()), sift.clone())),
        "vlad" => Box::new(CodebookDescriptor::vlad(Arc::new(models.vlad.clone()), sift.clone())),
        "fv" => Box::new(CodebookDescriptor::fv(Arc::new(models.fv.clone()), sift.clone())),
        other => {
            return Err(Error::Unknown {
                kind: "descriptor",
                name: other.to_string(),
            })
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::{ColorSpace, Image};

    fn small_config() -> CodebookConfig {
        CodebookConfig {
            bovw_words: 16,
            vlad_words: 4,
            fv_components: 3,
            train_classes: 1,
            samples_per_patch: 8,
            kmeans: KmeansParams {
                max_iterations: 5,
                tolerance: 1e-4,
            },
            gmm: GmmParams {
                max_iterations: 5,
                ..GmmParams::default()
            },
            ..CodebookConfig::default()
        }
    }

    #[test]
    fn training_is_reproducible_and_persists() {
        let cfg = small_config();
        let a = train_models(&cfg).unwrap();
        let b = train_models(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.bovw.k(), a.vlad.k(), a.fv.k()), (16, 4, 3));
        assert!(a.bovw.training_fingerprint.ends_with(":seed=17"));
        let dir = tempfile::tempdir().unwrap();
        a.save(dir.path()).unwrap();
        assert_eq!(CodebookModels::load(dir.path()).unwrap(), a);
    }

    #[test]
    fn descriptors_share_local_features() {
        let models = train_models(&small_config()).unwrap();
        let img = Image::from_fn(60, 60, ColorSpace::Srgb8, |x, y| {
            let v = ((x * 3 + y * 5) % 13) as f32 / 13.0;
            [v, 0.5 * v, 0.3]
        })
        .unwrap();
        let ctx = PatchContext::new(&img).unwrap();
        let sift = SiftConfig::default();
        for (name, dim) in [("bovw", 16), ("vlad", 4 * 128), ("fv", 2 * 3 * 128)] {
            let d = codebook_descriptor(name, &models, &sift).unwrap();
            let f = d.extract_with(&ctx).unwrap();
            assert_eq!((f.descriptor(), f.dim()), (name, dim));
        }
        assert!(codebook_descriptor("lbp-l", &models, &sift).is_err());
    }
}
