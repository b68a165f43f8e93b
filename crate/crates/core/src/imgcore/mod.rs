//! Image carrier, color conversions, PNG I/O and the patch protocol
//! (4x4 tiling plus chessboard train/test split).

mod convert;
mod filter;
mod image;
mod io;
mod patch;

pub use self::convert::{
    convert, linear_rgb_to_lab, mat3_mul, rgb_chromaticity, rgb_to_hsv, to_grayscale, D65_WHITE,
    D65_XY, RGB_TO_XYZ, XYZ_TO_RGB,
};
pub(crate) use self::convert::linear_triple;
pub use self::filter::{convolve_separable, gaussian_kernel, reflect};
pub use self::image::{
    linear_to_srgb, quantize8, srgb_to_linear, to_linear, to_srgb, ColorSpace, Image,
};
pub(crate) use self::image::restore_encoding;
pub use self::io::{read_png, write_png};
pub use self::patch::{
    chessboard_split, extract_patches, GridPos, Patch, GRID, IMAGE_SIDE, PATCH_SIDE,
};
