//! Color texture descriptors and an illumination-robustness benchmark.
//!
//! The crate is organized along the processing chain:
//!
//! - [`imgcore`]: image carrier, color spaces, patch tiling;
//! - [`lightsim`]: the 46-condition lighting catalog, illuminant colors,
//!   synthetic texture generation and dataset loading;
//! - [`chromanorm`]: color-normalization preprocessors (Gray-World,
//!   Gray-Edge, weighted Gray-Edge, two Retinex variants);
//! - [`texdesc`]: the traditional texture descriptors;
//! - [`codebook`]: dense SIFT with BoVW, VLAD and Fisher-vector encodings;
//! - [`benchkit`]: task suites, 1-NN L1 classification, evaluation,
//!   reports, feature caches and configuration.

pub mod benchkit;
pub mod chromanorm;
pub mod codebook;
pub mod error;
pub mod imgcore;
pub mod lightsim;
pub mod texdesc;

pub use error::{Error, Result};
pub use imgcore::{ColorSpace, GridPos, Image, Patch};
pub use lightsim::LightCondition;
pub use texdesc::FeatureVector;
