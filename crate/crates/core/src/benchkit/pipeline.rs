use super::cache::{CacheEntry, FeatureCache};
use super::config::CorpusConfig;
use super::eval::{evaluate, EvalResult};
use super::tasks::TaskSuite;
use crate::chromanorm::{normalize, NormalizeParams, NormalizeScope, Normalizer};
use crate::codebook::{codebook_descriptor, CodebookModels, SiftConfig, CODEBOOK_DESCRIPTORS};
use crate::error::{Error, Result};
use crate::imgcore::{extract_patches, Image};
use crate::lightsim::{corpus_specs, ImageSource, SyntheticCorpus};
use crate::texdesc::{traditional_descriptor, Descriptor, DescriptorConfig, PatchContext};

pub fn synthetic_corpus(config: &CorpusConfig) -> SyntheticCorpus {
    SyntheticCorpus::new(corpus_specs(config.classes, config.seed), config.render.clone())
}

/// Resolves a descriptor name from either registry. Codebook descriptors
/// need trained models.
pub fn descriptor_by_name(
    name: &str,
    config: &DescriptorConfig,
    models: Option<&CodebookModels>,
    sift: &SiftConfig,
) -> Result<Box<dyn Descriptor>> {
    if CODEBOOK_DESCRIPTORS.contains(&name) {
        let models = models.ok_or_else(|| Error::invalid(format!("`{name}` needs trained codebook models")))?;
        return codebook_descriptor(name, models, sift);
    }
    traditional_descriptor(name, config)
}

/// Normalizes `img`, passing it through unchanged when a channel carries no
/// signal (as under a primary illuminant).
fn normalize_or_keep(img: Image, normalizer: Normalizer, params: &NormalizeParams) -> Result<Image> {
    match normalize(&img, normalizer, params) {
        Err(Error::DegenerateChannel { .. }) => Ok(img),
        r => r,
    }
}

/// Extracts every descriptor from every patch of `source`, visiting classes
/// in ascending order and conditions in catalog order. All descriptors of a
/// patch share one context. `progress` is called once per image.
pub fn extract_features(
    source: &dyn ImageSource,
    descriptors: &[Box<dyn Descriptor>],
    normalizer: Normalizer,
    params: &NormalizeParams,
    progress: &mut dyn FnMut(u16, &str),
) -> Result<Vec<FeatureCache>> {
    let mut caches: Vec<FeatureCache> = descriptors
        .iter()
        .map(|d| FeatureCache::new(d.name(), normalizer.name(), d.dim()))
        .collect();
    let mut classes = source.classes();
    classes.sort_unstable();
    for class in classes {
        for cond in source.conditions() {
            progress(class, &cond.id);
            let mut img = source.image(class, &cond.id)?;
            if params.scope == NormalizeScope::Image {
                img = normalize_or_keep(img, normalizer, params)?;
            }
            for mut patch in extract_patches(&img, class, &cond.id)? {
                if params.scope == NormalizeScope::Patch {
                    patch.image = normalize_or_keep(patch.image, normalizer, params)?;
                }
                let ctx = PatchContext::new(&patch.image)?;
                for (d, cache) in descriptors.iter().zip(&mut caches) {
                    cache.push(CacheEntry {
                        class,
                        condition: cond.id.clone(),
                        grid_pos: patch.grid_pos.index(),
                        values: d.extract_with(&ctx)?.into_values(),
                    })?;
                }
            }
        }
    }
    Ok(caches)
}

/// Evaluates one cache on several task suites.
pub fn evaluate_all(cache: &FeatureCache, suites: &[TaskSuite]) -> Result<Vec<EvalResult>> {
    suites.iter().map(|s| evaluate(cache, s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchkit::tasks::build_tasks;
    use crate::lightsim::{condition_catalog, find_condition, RenderParams};

    fn tiny_corpus() -> SyntheticCorpus {
        let conds = ["I100", "I50", "D65", "D95"].map(|id| find_condition(id).unwrap()).to_vec();
        SyntheticCorpus::with_conditions(corpus_specs(3, 1), conds, RenderParams::default())
    }

    fn extract(names: &[&str], normalizer: Normalizer) -> Vec<FeatureCache> {
        let cfg = DescriptorConfig::default();
        let ds: Vec<_> = names.iter().map(|n| descriptor_by_name(n, &cfg, None, &SiftConfig::default()).unwrap()).collect();
        extract_features(&tiny_corpus(), &ds, normalizer, &NormalizeParams::default(), &mut |_, _| {}).unwrap()
    }

    #[test]
    fn caches_follow_iteration_order() {
        let caches = extract(&["hist-l", "chrom-moments"], Normalizer::None);
        assert_eq!(caches.len(), 2);
        let c = &caches[0];
        assert_eq!((c.descriptor.as_str(), c.dim, c.entries.len()), ("hist-l", 256, 3 * 4 * 16));
        assert_eq!((c.entries[0].class, c.entries[0].condition.as_str(), c.entries[0].grid_pos), (0, "I100", 0));
        assert_eq!((c.entries[16].condition.as_str(), c.entries[64].class), ("I50", 1));
        assert_eq!(caches[1].normalizer, "none");
    }

    #[test]
    fn shared_context_matches_separate_extraction() {
        let both = extract(&["hist-l", "lbp-l"], Normalizer::GrayWorld);
        let alone = extract(&["lbp-l"], Normalizer::GrayWorld);
        assert_eq!(both[1], alone[0]);
    }

    #[test]
    fn cached_evaluation_matches_in_memory() {
        let cache = extract(&["hist-rgb"], Normalizer::None).remove(0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.rtfx");
        cache.save(&path).unwrap();
        let reloaded = FeatureCache::load(&path).unwrap();
        let suite = TaskSuite {
            task: crate::benchkit::Task::Intensity,
            subsets: build_tasks(&condition_catalog()).unwrap()[1]
                .subsets
                .iter()
                .filter(|s| s.train.id == "I100" && s.test.id == "I50")
                .cloned()
                .collect(),
        };
        assert_eq!(evaluate(&cache, &suite).unwrap(), evaluate(&reloaded, &suite).unwrap());
    }

    #[test]
    fn primary_light_skips_normalization() {
        let conds = ["I100", "PR"].map(|id| find_condition(id).unwrap()).to_vec();
        let corpus = SyntheticCorpus::with_conditions(corpus_specs(1, 1), conds, RenderParams::default());
        let d = vec![descriptor_by_name("hist-chrom-rgb", &DescriptorConfig::default(), None, &SiftConfig::default()).unwrap()];
        for scope in [NormalizeScope::Image, NormalizeScope::Patch] {
            let params = NormalizeParams { scope, ..NormalizeParams::default() };
            let plain = extract_features(&corpus, &d, Normalizer::None, &params, &mut |_, _| {}).unwrap();
            let gw = extract_features(&corpus, &d, Normalizer::GrayWorld, &params, &mut |_, _| {}).unwrap();
            assert_eq!(gw[0].entries[16..], plain[0].entries[16..]);
        }
    }

    #[test]
    fn codebook_names_need_models() {
        let cfg = DescriptorConfig::default();
        assert!(descriptor_by_name("fv", &cfg, None, &SiftConfig::default()).is_err());
        assert!(descriptor_by_name("nope", &cfg, None, &SiftConfig::default()).is_err());
    }
}
