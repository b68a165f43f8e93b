use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::condition::{condition_catalog, LightCondition};
use super::render::{render_condition, RenderParams};
use super::texture::{generate_texture, SyntheticClassSpec};
use crate::error::{Error, Result};
use crate::imgcore::{read_png, to_srgb, write_png, ColorSpace, Image};

/// Manifest written next to the class directories.
pub const CATALOG_FILE: &str = "catalog.json";

/// Anything that yields one image per (class, condition).
pub trait ImageSource: Sync {
    fn classes(&self) -> Vec<u16>;
    fn conditions(&self) -> &[LightCondition];
    fn image(&self, class: u16, condition: &str) -> Result<Image>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub conditions: Vec<LightCondition>,
    pub classes: Vec<u16>,
    #[serde(default)]
    pub specs: Vec<SyntheticClassSpec>,
}

/// Lazily rendered synthetic corpus. The albedo of the most recently
/// requested class is kept, so class-major iteration renders each texture once.
pub struct SyntheticCorpus {
    specs: Vec<SyntheticClassSpec>,
    conditions: Vec<LightCondition>,
    params: RenderParams,
    albedo: Mutex<Option<(u16, Arc<Image>)>>,
}

impl SyntheticCorpus {
    pub fn new(specs: Vec<SyntheticClassSpec>, params: RenderParams) -> Self {
        SyntheticCorpus::with_conditions(specs, condition_catalog(), params)
    }

    pub fn with_conditions(
        specs: Vec<SyntheticClassSpec>,
        conditions: Vec<LightCondition>,
        params: RenderParams,
    ) -> Self {
        SyntheticCorpus {
            specs,
            conditions,
            params,
            albedo: Mutex::new(None),
        }
    }

    pub fn specs(&self) -> &[SyntheticClassSpec] {
        &self.specs
    }

    pub fn params(&self) -> &RenderParams {
        &self.params
    }

    pub fn albedo(&self, class: u16) -> Result<Arc<Image>> {
        let mut slot = self.albedo.lock().expect("albedo cache poisoned");
        if let Some((c, img)) = slot.as_ref() {
            if *c == class {
                return Ok(img.clone());
            }
        }
        let spec = self
            .specs
            .iter()
            .find(|s| s.class_id == class)
            .ok_or_else(|| Error::Unknown {
                kind: "class",
                name: class.to_string(),
            })?;
        let img = Arc::new(generate_texture(spec)?);
        *slot = Some((class, img.clone()));
        Ok(img)
    }
}

impl ImageSource for SyntheticCorpus {
    fn classes(&self) -> Vec<u16> {
        self.specs.iter().map(|s| s.class_id).collect()
    }

    fn conditions(&self) -> &[LightCondition] {
        &self.conditions
    }

    fn image(&self, class: u16, condition: &str) -> Result<Image> {
        let cond = self
            .conditions
            .iter()
            .find(|c| c.id == condition)
            .ok_or_else(|| Error::Unknown {
                kind: "condition",
                name: condition.to_string(),
            })?;
        let albedo = self.albedo(class)?;
        render_condition(&albedo, cond, &self.params)
    }
}

/// Writes `<root>/<class>/<condition>.png` for every image plus the manifest.
pub fn write_dataset(source: &dyn ImageSource, root: &Path, specs: &[SyntheticClassSpec]) -> Result<()> {
    fs::create_dir_all(root)?;
    let classes = source.classes();
    for &class in &classes {
        let dir = root.join(class.to_string());
        fs::create_dir_all(&dir)?;
        for cond in source.conditions() {
            let img = source.image(class, &cond.id)?;
            let img = if img.space() == ColorSpace::LinearRgb { to_srgb(&img)? } else { img };
            write_png(&img, &dir.join(format!("{}.png", cond.id)))?;
        }
    }
    let catalog = Catalog {
        conditions: source.conditions().to_vec(),
        classes,
        specs: specs.to_vec(),
    };
    fs::write(root.join(CATALOG_FILE), serde_json::to_string_pretty(&catalog)?)?;
    Ok(())
}

/// A dataset on disk in `<root>/<class>/<condition>.png` layout.
#[derive(Debug)]
pub struct DiskDataset {
    root: PathBuf,
    conditions: Vec<LightCondition>,
    classes: BTreeMap<u16, PathBuf>,
    missing: Vec<String>,
}

impl DiskDataset {
    pub fn root(&self) -> &Path {
        &self.root
    }

    /// `<class>/<condition>` keys of absent images.
    pub fn missing(&self) -> &[String] {
        &self.missing
    }

    pub fn is_complete(&self) -> bool {
        self.missing.is_empty()
    }

    fn path(&self, class: u16, condition: &str) -> Result<PathBuf> {
        let dir = self.classes.get(&class).ok_or_else(|| Error::Unknown {
            kind: "class",
            name: class.to_string(),
        })?;
        Ok(dir.join(format!("{condition}.png")))
    }
}

impl ImageSource for DiskDataset {
    fn classes(&self) -> Vec<u16> {
        self.classes.keys().copied().collect()
    }

    fn conditions(&self) -> &[LightCondition] {
        &self.conditions
    }

    fn image(&self, class: u16, condition: &str) -> Result<Image> {
        let path = self.path(class, condition)?;
        read_png(&path).map_err(|e| Error::Dataset {
            message: e.to_string(),
            path,
        })
    }
}

fn dataset_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Dataset {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Scans a dataset directory. Absent images are reported through
/// [`DiskDataset::missing`]; files naming unknown conditions are an error.
pub fn load_dataset(root: &Path) -> Result<DiskDataset> {
    if !root.is_dir() {
        return Err(dataset_err(root, "not a directory"));
    }
    let manifest = root.join(CATALOG_FILE);
    let conditions = if manifest.exists() {
        let text = fs::read_to_string(&manifest)?;
        let catalog: Catalog =
            serde_json::from_str(&text).map_err(|e| dataset_err(&manifest, e.to_string()))?;
        catalog.conditions
    } else {
        condition_catalog()
    };
    let known: BTreeSet<&str> = conditions.iter().map(|c| c.id.as_str()).collect();
    let mut classes = BTreeMap::new();
    let mut missing = Vec::new();
    let mut entries: Vec<_> = fs::read_dir(root)?.collect::<std::io::Result<Vec<_>>>()?;
    entries.sort_by_key(|e| e.file_name());
    for entry in entries {
        let path = entry.path();
        if !path.is_dir() {
            continue;
        }
        let name = entry.file_name().to_string_lossy().into_owned();
        let class: u16 = match name.parse() {
            Ok(c) => c,
            Err(_) => return Err(dataset_err(&path, "class directory name is not an integer")),
        };
        let mut present = BTreeSet::new();
        for file in fs::read_dir(&path)? {
            let file = file?.path();
            if file.extension().and_then(|e| e.to_str()) != Some("png") {
                continue;
            }
            let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            if !known.contains(stem.as_str()) {
                return Err(dataset_err(&file, format!("unknown condition id '{stem}'")));
            }
            present.insert(stem);
        }
        for c in &conditions {
            if !present.contains(&c.id) {
                missing.push(format!("{class}/{}", c.id));
            }
        }
        classes.insert(class, path);
    }
    Ok(DiskDataset {
        root: root.to_path_buf(),
        conditions,
        classes,
        missing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::quantize8;
    use crate::lightsim::texture::corpus_specs;

    fn small_corpus() -> SyntheticCorpus {
        let conds: Vec<_> = condition_catalog()
            .into_iter()
            .filter(|c| ["I100", "D40", "MD65L27"].contains(&c.id.as_str()))
            .collect();
        SyntheticCorpus::with_conditions(corpus_specs(2, 3), conds, RenderParams::default())
    }

    #[test]
    fn write_then_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = small_corpus();
        write_dataset(&corpus, dir.path(), corpus.specs()).unwrap();
        let ds = load_dataset(dir.path()).unwrap();
        assert!(ds.is_complete());
        assert_eq!(ds.classes(), vec![0, 1]);
        assert_eq!(ds.conditions(), corpus.conditions());
        for class in [0, 1] {
            for c in ["I100", "MD65L27"] {
                let a = corpus.image(class, c).unwrap();
                let b = ds.image(class, c).unwrap();
                let qa: Vec<u8> = a.data().iter().map(|v| quantize8(*v)).collect();
                let qb: Vec<u8> = b.data().iter().map(|v| quantize8(*v)).collect();
                assert_eq!(qa, qb);
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn missing_file_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = small_corpus();
        write_dataset(&corpus, dir.path(), &[]).unwrap();
        fs::remove_file(dir.path().join("1").join("D40.png")).unwrap();
        let ds = load_dataset(dir.path()).unwrap();
        assert_eq!(ds.missing(), &["1/D40".to_string()]);
    }

    #[test]
    fn unknown_condition_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = small_corpus();
        write_dataset(&corpus, dir.path(), &[]).unwrap();
        fs::copy(dir.path().join("0/I100.png"), dir.path().join("0/X999.png")).unwrap();
        match load_dataset(dir.path()) {
            Err(Error::Dataset { path, message }) => {
                assert!(path.ends_with("X999.png"), "{}", path.display());
                assert!(message.contains("X999"));
            }
            other => panic!("expected dataset error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_class_is_an_error() {
        assert!(small_corpus().image(9, "I100").is_err());
        assert!(small_corpus().image(0, "nope").is_err());
    }
}
