//! Lighting conditions, illuminant colorimetry, synthetic rendering and
//! dataset access.

mod condition;
mod dataset;
mod illuminant;
mod render;
mod texture;

pub use condition::{
    color_direction_colors, condition_catalog, daylight_ccts, find_condition, ConditionKind,
    Illuminant, LightCondition, Primary, COLOR_DIRECTION_ANGLES, DIRECTION_ANGLES,
    INTENSITY_LEVELS, LED_CCTS,
};
pub use dataset::{
    load_dataset, write_dataset, Catalog, DiskDataset, ImageSource, SyntheticCorpus, CATALOG_FILE,
};
pub use illuminant::{
    cct_to_chromaticity, chromaticity_to_rgb, daylight_locus_y, daylight_x_high, daylight_x_low,
    planckian_chromaticity, Chromaticity, IlluminantTable,
};
pub use render::{
    apply_direction, apply_illuminant, apply_intensity, render_condition, shading_factor,
    shading_slope, Encoding, RenderParams,
};
pub use texture::{corpus_specs, generate_texture, Generator, SyntheticClassSpec};
