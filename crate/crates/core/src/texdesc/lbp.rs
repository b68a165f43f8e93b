use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use super::{normalize_hist, Descriptor, FeatureVector, PatchContext};
use crate::error::Result;
use crate::imgcore::{linear_rgb_to_lab, linear_triple, Image};

pub const LBP_POINTS: usize = 16;
pub const LBP_RADIUS: f64 = 2.0;
/// Uniform patterns by (ones, rotation), then all-ones, then the catch-all.
pub const LBP_BINS: usize = LBP_POINTS * (LBP_POINTS - 1) + 3;
const BORDER: usize = 2;
pub const CONTRAST_BINS: usize = 256;

/// Bilinear taps `(dx, dy, weight)` of one circular neighbor.
type Taps = Vec<(isize, isize, f64)>;

fn neighbor_taps() -> &'static [Taps; LBP_POINTS] {
    static TAPS: OnceLock<[Taps; LBP_POINTS]> = OnceLock::new();
    TAPS.get_or_init(|| {
        std::array::from_fn(|k| {
            let a = 2.0 * PI * k as f64 / LBP_POINTS as f64;
            let snap = |v: f64| if (v - v.round()).abs() < 1e-9 { v.round() } else { v };
            let (dx, dy) = (snap(LBP_RADIUS * a.cos()), snap(-LBP_RADIUS * a.sin()));
            let (ix, iy) = (dx.floor(), dy.floor());
            let (fx, fy) = (dx - ix, dy - iy);
            let (ix, iy) = (ix as isize, iy as isize);
            [
                (ix, iy, (1.0 - fx) * (1.0 - fy)),
                (ix + 1, iy, fx * (1.0 - fy)),
                (ix, iy + 1, (1.0 - fx) * fy),
                (ix + 1, iy + 1, fx * fy),
            ]
            .into_iter()
            .filter(|t| t.2 > 0.0)
            .collect()
        })
    })
}

fn uniform_table() -> &'static [u8] {
    static LUT: OnceLock<Vec<u8>> = OnceLock::new();
    LUT.get_or_init(|| (0..=u16::MAX).map(|c| compute_uniform_bin(c) as u8).collect())
}

fn compute_uniform_bin(code: u16) -> usize {
    let ones = code.count_ones() as usize;
    match ones {
        0 => 0,
        16 => LBP_BINS - 2,
        _ => {
            if (code ^ code.rotate_left(1)).count_ones() > 2 {
                return LBP_BINS - 1;
            }
            // Start of the run of ones: a set bit whose predecessor is clear.
            let start = (0..16).find(|&i| code >> i & 1 == 1 && code >> ((i + 15) % 16) & 1 == 0).unwrap_or(0);
            1 + (ones - 1) * LBP_POINTS + start
        }
    }
}

/// Histogram bin of a 16-bit pattern.
pub fn uniform_bin(code: u16) -> usize {
    uniform_table()[code as usize] as usize
}

/// Sum of the fixed-point tap weights of one neighbor.
const FIXED_ONE: i32 = 1 << 14;

/// Taps with integer weights summing exactly to `FIXED_ONE`, so 8-bit planes
/// interpolate and compare without rounding.
fn fixed_taps() -> &'static [Vec<(isize, isize, i32)>; LBP_POINTS] {
    static TAPS: OnceLock<[Vec<(isize, isize, i32)>; LBP_POINTS]> = OnceLock::new();
    TAPS.get_or_init(|| {
        std::array::from_fn(|k| {
            let mut t: Vec<(isize, isize, i32)> = neighbor_taps()[k]
                .iter()
                .map(|&(dx, dy, wt)| (dx, dy, (wt * FIXED_ONE as f64).round() as i32))
                .collect();
            let deficit = FIXED_ONE - t.iter().map(|e| e.2).sum::<i32>();
            let big = (0..t.len()).max_by_key(|i| t[*i].2).unwrap();
            t[big].2 += deficit;
            t
        })
    })
}

fn single_taps() -> &'static [Vec<(isize, isize, f32)>; LBP_POINTS] {
    static TAPS: OnceLock<[Vec<(isize, isize, f32)>; LBP_POINTS]> = OnceLock::new();
    TAPS.get_or_init(|| std::array::from_fn(|k| neighbor_taps()[k].iter().map(|t| (t.0, t.1, t.2 as f32)).collect()))
}

/// Interpolated value of one neighbor at every interior pixel, into `out`.
fn interpolate<T>(plane: &[T], taps: &[(isize, isize, T)], w: usize, h: usize, out: &mut Vec<T>)
where
    T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<Output = T>,
{
    let iw = w - 2 * BORDER;
    out.clear();
    out.resize(iw * (h - 2 * BORDER), T::default());
    for &(dx, dy, wt) in taps {
        for (row, y) in out.chunks_exact_mut(iw).zip(BORDER..h - BORDER) {
            let start = (y as isize + dy) as usize * w + (BORDER as isize + dx) as usize;
            for (o, v) in row.iter_mut().zip(&plane[start..start + iw]) {
                *o = *o + wt * *v;
            }
        }
    }
}

fn interior<T: Copy>(plane: &[T], w: usize, h: usize) -> Vec<T> {
    (BORDER..h - BORDER)
        .flat_map(|y| plane[y * w + BORDER..y * w + w - BORDER].iter().copied())
        .collect()
}

/// Patterns for several (center, neighbor) plane pairs. Bit `k` is set when
/// `set(neighbor, center)` holds.
fn codes<T, F>(
    planes: &[Vec<T>],
    taps: &[Vec<(isize, isize, T)>; LBP_POINTS],
    pairs: &[(usize, usize)],
    w: usize,
    h: usize,
    set: F,
) -> Vec<Vec<u16>>
where
    T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<Output = T>,
    F: Fn(T, T) -> bool,
{
    if w <= 2 * BORDER || h <= 2 * BORDER {
        return vec![Vec::new(); pairs.len()];
    }
    let centers: Vec<Vec<T>> = planes.iter().map(|p| interior(p, w, h)).collect();
    let n = centers[0].len();
    let mut out = vec![vec![0u16; n]; pairs.len()];
    let mut nb = Vec::new();
    for (src, plane) in planes.iter().enumerate() {
        if !pairs.iter().any(|p| p.1 == src) {
            continue;
        }
        for (k, tk) in taps.iter().enumerate() {
            interpolate(plane, tk, w, h, &mut nb);
            for (pi, &(c, _)) in pairs.iter().enumerate().filter(|(_, p)| p.1 == src) {
                let bit = 1u16 << k;
                for ((code, v), cv) in out[pi].iter_mut().zip(&nb).zip(&centers[c]) {
                    *code |= bit * set(*v, *cv) as u16;
                }
            }
        }
    }
    out
}

/// Patterns of integer planes, exact.
fn fixed_codes(planes: &[Vec<i32>], pairs: &[(usize, usize)], w: usize, h: usize) -> Vec<Vec<u16>> {
    codes(planes, fixed_taps(), pairs, w, h, |v, c| v >= c * FIXED_ONE)
}

/// Patterns of real planes, with a relative tolerance on the comparison.
fn float_codes(planes: &[Vec<f32>], pairs: &[(usize, usize)], w: usize, h: usize) -> Vec<Vec<u16>> {
    codes(planes, single_taps(), pairs, w, h, |v, c| {
        v - c >= -1e-5 * v.abs().max(c.abs()).max(1.0)
    })
}

fn histogram(codes: &[u16]) -> Vec<f64> {
    let mut h = vec![0.0; LBP_BINS];
    for &c in codes {
        h[uniform_bin(c)] += 1.0;
    }
    normalize_hist(&mut h);
    h
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LbpSpace {
    Gray,
    Rgb,
    Lab,
    Ohta,
}

impl LbpSpace {
    fn name(self) -> &'static str {
        match self {
            LbpSpace::Gray => "lbp-l",
            LbpSpace::Rgb => "lbp-rgb",
            LbpSpace::Lab => "lbp-lab",
            LbpSpace::Ohta => "lbp-ohta",
        }
    }

    fn channels(self) -> usize {
        if self == LbpSpace::Gray {
            1
        } else {
            3
        }
    }
}

fn integer_planes(ctx: &PatchContext, space: LbpSpace) -> Vec<Vec<i32>> {
    let to_i = |p: &[u8]| p.iter().map(|v| *v as i32).collect::<Vec<i32>>();
    match space {
        LbpSpace::Gray => vec![to_i(ctx.gray_q8())],
        LbpSpace::Rgb => ctx.q8().iter().map(|p| to_i(p)).collect(),
        LbpSpace::Ohta => {
            let [r, g, b] = ctx.q8();
            let n = r.len();
            let (mut i1, mut i2, mut i3) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
            for i in 0..n {
                let (r, g, b) = (r[i] as i32, g[i] as i32, b[i] as i32);
                i1.push(r + g + b);
                i2.push(r - b);
                i3.push(2 * g - r - b);
            }
            vec![i1, i2, i3]
        }
        LbpSpace::Lab => unreachable!("Lab planes are real-valued"),
    }
}

fn lab_planes(ctx: &PatchContext) -> Vec<Vec<f32>> {
    let img = ctx.image();
    let mut planes = vec![Vec::new(), Vec::new(), Vec::new()];
    for p in img.data().chunks_exact(3) {
        let lab = linear_rgb_to_lab(linear_triple(img.space(), p));
        for c in 0..3 {
            planes[c].push(lab[c] as f32);
        }
    }
    planes
}

/// Patterns of every within-channel and cross-channel pair of the 8-bit
/// RGB codes: RR, GG, BB, RG, RB, GB.
fn rgb_codes(ctx: &PatchContext) -> std::rc::Rc<Vec<Vec<u16>>> {
    ctx.memo("lbp:rgb", || {
        let planes = integer_planes(ctx, LbpSpace::Rgb);
        fixed_codes(&planes, &OCLBP_PAIRS, ctx.width(), ctx.height())
    })
}

fn gray_codes(ctx: &PatchContext) -> std::rc::Rc<Vec<Vec<u16>>> {
    ctx.memo("lbp:gray", || {
        fixed_codes(&integer_planes(ctx, LbpSpace::Gray), &[(0, 0)], ctx.width(), ctx.height())
    })
}

const WITHIN: [(usize, usize); 3] = [(0, 0), (1, 1), (2, 2)];

/// Uniform LBP(16, 2) histograms per channel of the chosen space.
pub struct LbpDescriptor {
    space: LbpSpace,
}

impl LbpDescriptor {
    pub fn new(space: LbpSpace) -> Self {
        LbpDescriptor { space }
    }
}

impl Descriptor for LbpDescriptor {
    fn name(&self) -> &str {
        self.space.name()
    }

    fn dim(&self) -> usize {
        self.space.channels() * LBP_BINS
    }

    fn compute(&self, ctx: &PatchContext) -> Result<Vec<f64>> {
        let blocks = match self.space {
            LbpSpace::Gray => gray_codes(ctx)[..1].to_vec(),
            LbpSpace::Rgb => rgb_codes(ctx)[..3].to_vec(),
            LbpSpace::Lab => float_codes(&lab_planes(ctx), &WITHIN, ctx.width(), ctx.height()),
            LbpSpace::Ohta => fixed_codes(&integer_planes(ctx, LbpSpace::Ohta), &WITHIN, ctx.width(), ctx.height()),
        };
        Ok(blocks.iter().flat_map(|c| histogram(c)).collect())
    }
}

pub fn lbp(img: &Image, space: LbpSpace) -> Result<FeatureVector> {
    LbpDescriptor::new(space).extract(img)
}

/// (center, neighbor) channel pairs of opponent-color LBP.
pub const OCLBP_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

/// Within-channel LBP on R, G, B plus cross-channel LBP whose center comes
/// from the first channel of a pair and neighbors from the second.
pub struct OclbpDescriptor;

impl Descriptor for OclbpDescriptor {
    fn name(&self) -> &str {
        "oclbp"
    }

    fn dim(&self) -> usize {
        OCLBP_PAIRS.len() * LBP_BINS
    }

    fn compute(&self, ctx: &PatchContext) -> Result<Vec<f64>> {
        Ok(rgb_codes(ctx).iter().flat_map(|c| histogram(c)).collect())
    }
}

pub fn oclbp(img: &Image) -> Result<FeatureVector> {
    OclbpDescriptor.extract(img)
}

/// Angle between each interior pixel's RGB vector and the mean RGB of its
/// 16 circular neighbors, histogrammed over [0, pi/2].
pub fn contrast_histogram(ctx: &PatchContext) -> Vec<f64> {
    let (w, h) = (ctx.width(), ctx.height());
    let mut hist = vec![0.0; CONTRAST_BINS];
    if w <= 2 * BORDER || h <= 2 * BORDER {
        return hist;
    }
    let planes = ctx.planes();
    let centers: Vec<Vec<f32>> = planes.iter().map(|p| interior(p, w, h)).collect();
    let mut means = vec![vec![0f32; centers[0].len()]; 3];
    let mut nb = Vec::new();
    for (c, plane) in planes.iter().enumerate() {
        for taps in single_taps() {
            interpolate(plane, taps, w, h, &mut nb);
            for (m, v) in means[c].iter_mut().zip(&nb) {
                *m += v;
            }
        }
    }
    for i in 0..centers[0].len() {
        let p = [centers[0][i] as f64, centers[1][i] as f64, centers[2][i] as f64];
        let m = [means[0][i] as f64, means[1][i] as f64, means[2][i] as f64];
        let np = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nm = m.iter().map(|v| v * v).sum::<f64>().sqrt();
        let angle = if np > 0.0 && nm > 0.0 {
            let c = (p[0] * m[0] + p[1] * m[1] + p[2] * m[2]) / (np * nm);
            c.clamp(-1.0, 1.0).acos()
        } else {
            0.0
        };
        let bin = ((angle / FRAC_PI_2 * CONTRAST_BINS as f64) as usize).min(CONTRAST_BINS - 1);
        hist[bin] += 1.0;
    }
    normalize_hist(&mut hist);
    hist
}

/// Gray LBP followed by the local color contrast histogram.
pub struct LccDescriptor;

impl Descriptor for LccDescriptor {
    fn name(&self) -> &str {
        "lcc"
    }

    fn dim(&self) -> usize {
        LBP_BINS + CONTRAST_BINS
    }

    fn compute(&self, ctx: &PatchContext) -> Result<Vec<f64>> {
        let mut out = histogram(&gray_codes(ctx)[0]);
        out.extend(contrast_histogram(ctx));
        Ok(out)
    }
}

pub fn lcc(img: &Image) -> Result<FeatureVector> {
    LccDescriptor.extract(img)
}
