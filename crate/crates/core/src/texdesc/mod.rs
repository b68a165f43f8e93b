//! Traditional color-texture descriptors. Each maps an RGB patch to a
//! fixed-length [`FeatureVector`].

mod context;
mod cooc;
mod dtcwt;
mod fft;
mod gabor;
mod granulometry;
mod hist;
mod hog;
mod lbp;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::Image;

pub use context::PatchContext;
pub use cooc::{cooccurrence, glcm, haralick, CooccurrenceDescriptor, OFFSETS};
pub use dtcwt::{dtcwt, Dtcwt, DtcwtCoeffs, DtcwtConfig, DtcwtDescriptor};
pub use gabor::{
    gabor, gist, opponent_gabor, GaborBank, GaborConfig, GaborDescriptor, GaborMode, GistConfig,
    GistDescriptor, OpponentGaborDescriptor,
};
pub use granulometry::{granulometry, opening_line, GranulometryConfig, GranulometryDescriptor};
pub use hist::{chromaticity_moments, hist, ChromMomentsDescriptor, HistDescriptor, HistVariant};
pub use hog::{hog, HogDescriptor};
pub use lbp::{
    lbp, lcc, oclbp, uniform_bin, LbpDescriptor, LbpSpace, LccDescriptor, OclbpDescriptor,
    LBP_BINS,
};

/// Fixed-dimension feature vector tagged with the descriptor that made it.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    descriptor: String,
    values: Vec<f32>,
}

impl FeatureVector {
    pub fn new(descriptor: impl Into<String>, values: Vec<f32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("empty feature vector"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite feature at index {i}")));
        }
        Ok(FeatureVector {
            descriptor: descriptor.into(),
            values,
        })
    }

    pub fn from_f64(descriptor: impl Into<String>, values: &[f64]) -> Result<Self> {
        FeatureVector::new(descriptor, values.iter().map(|v| *v as f32).collect())
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }
}

/// A patch-level feature extractor.
pub trait Descriptor: Send + Sync {
    fn name(&self) -> &str;

    /// Emitted dimensionality.
    fn dim(&self) -> usize;

    fn compute(&self, ctx: &PatchContext) -> Result<Vec<f64>>;

    /// Extracts from a shared context, asserting the dimensionality contract.
    fn extract_with(&self, ctx: &PatchContext) -> Result<FeatureVector> {
        let values = self.compute(ctx)?;
        if values.len() != self.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                actual: values.len(),
            });
        }
        FeatureVector::from_f64(self.name(), &values)
    }

    fn extract(&self, img: &Image) -> Result<FeatureVector> {
        self.extract_with(&PatchContext::new(img)?)
    }
}

/// Names of the traditional descriptors, in report order.
pub const TRADITIONAL: [&str; 20] = [
    "hist-l",
    "hist-hv",
    "hist-rgb",
    "hist-chrom-rgb",
    "chrom-moments",
    "coocc-rgb",
    "coocc-l",
    "dtcwt",
    "gabor-rgb",
    "gabor-l",
    "opp-gabor",
    "gist",
    "granulometry",
    "hog",
    "lbp-l",
    "lbp-rgb",
    "lbp-lab",
    "lbp-ohta",
    "oclbp",
    "lcc",
];

/// Parameters of the traditional descriptors.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DescriptorConfig {
    pub gabor: GaborConfig,
    pub gist: GistConfig,
    pub dtcwt: DtcwtConfig,
    pub granulometry: GranulometryConfig,
    pub cooccurrence_levels: CoocLevels,
}

/// Gray levels of the co-occurrence matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoocLevels(pub usize);

impl Default for CoocLevels {
    fn default() -> Self {
        CoocLevels(64)
    }
}

/// Builds a traditional descriptor by registry name.
pub fn traditional_descriptor(name: &str, config: &DescriptorConfig) -> Result<Box<dyn Descriptor>> {
    let levels = config.cooccurrence_levels.0;
    Ok(match name {
        "hist-l" => Box::new(HistDescriptor::new(HistVariant::Gray)),
        "hist-hv" => Box::new(HistDescriptor::new(HistVariant::Hv)),
        "hist-rgb" => Box::new(HistDescriptor::new(HistVariant::Rgb)),
        "hist-chrom-rgb" => Box::new(HistDescriptor::new(HistVariant::Chromaticity)),
        "chrom-moments" => Box::new(ChromMomentsDescriptor),
        "coocc-rgb" => Box::new(CooccurrenceDescriptor::new(true, levels)?),
        "coocc-l" => Box::new(CooccurrenceDescriptor::new(false, levels)?),
        "dtcwt" => Box::new(DtcwtDescriptor::new(config.dtcwt.clone())?),
        "gabor-rgb" => Box::new(GaborDescriptor::new(GaborMode::Rgb, config.gabor.clone())?),
        "gabor-l" => Box::new(GaborDescriptor::new(GaborMode::Gray, config.gabor.clone())?),
        "opp-gabor" => Box::new(OpponentGaborDescriptor::new(config.gabor.clone())?),
        "gist" => Box::new(GistDescriptor::new(config.gist.clone())?),
        "granulometry" => Box::new(GranulometryDescriptor::new(config.granulometry.clone())?),
        "hog" => Box::new(HogDescriptor),
        "lbp-l" => Box::new(LbpDescriptor::new(LbpSpace::Gray)),
        "lbp-rgb" => Box::new(LbpDescriptor::new(LbpSpace::Rgb)),
        "lbp-lab" => Box::new(LbpDescriptor::new(LbpSpace::Lab)),
        "lbp-ohta" => Box::new(LbpDescriptor::new(LbpSpace::Ohta)),
        "oclbp" => Box::new(OclbpDescriptor),
        "lcc" => Box::new(LccDescriptor),
        other => {
            return Err(Error::Unknown {
                kind: "descriptor",
                name: other.to_string(),
            })
        }
    })
}

/// Population mean and standard deviation.
pub(crate) fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (mut n, mut sum) = (0usize, 0.0);
    for v in values.clone() {
        sum += v;
        n += 1;
    }
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = sum / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    (mean, var.sqrt())
}

/// Turns counts into a distribution summing to one (all-zero stays zero).
pub(crate) fn normalize_hist(h: &mut [f64]) {
    let s: f64 = h.iter().sum();
    if s > 0.0 {
        for v in h.iter_mut() {
            *v /= s;
        }
    }
}
