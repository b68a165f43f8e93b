use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use super::{mean_std, Descriptor, FeatureVector, PatchContext};
use crate::error::{Error, Result};
use crate::imgcore::{reflect, Image};

/// Orthonormal two-channel filter pair, analysis form.
#[derive(Clone, Copy, Debug)]
struct FilterPair {
    lo: [f64; 10],
    hi: [f64; 10],
}

const FIRST_STAGE: [FilterPair; 2] = [
    FilterPair {
        lo: [
            0.0,
            -0.088_388_347_648_32,
            0.088_388_347_648_32,
            0.695_879_989_034_00,
            0.695_879_989_034_00,
            0.088_388_347_648_32,
            -0.088_388_347_648_32,
            0.011_226_792_152_54,
            0.011_226_792_152_54,
            0.0,
        ],
        hi: [
            0.0,
            -0.011_226_792_152_54,
            0.011_226_792_152_54,
            0.088_388_347_648_32,
            0.088_388_347_648_32,
            -0.695_879_989_034_00,
            0.695_879_989_034_00,
            -0.088_388_347_648_32,
            -0.088_388_347_648_32,
            0.0,
        ],
    },
    FilterPair {
        lo: [
            0.011_226_792_152_54,
            0.011_226_792_152_54,
            -0.088_388_347_648_32,
            0.088_388_347_648_32,
            0.695_879_989_034_00,
            0.695_879_989_034_00,
            0.088_388_347_648_32,
            -0.088_388_347_648_32,
            0.0,
            0.0,
        ],
        hi: [
            0.0,
            0.0,
            -0.088_388_347_648_32,
            -0.088_388_347_648_32,
            0.695_879_989_034_00,
            -0.695_879_989_034_00,
            0.088_388_347_648_32,
            0.088_388_347_648_32,
            0.011_226_792_152_54,
            -0.011_226_792_152_54,
        ],
    },
];

const TREE_A: FilterPair = FilterPair {
    lo: [
        0.035_163_84,
        0.0,
        -0.088_329_42,
        0.233_890_32,
        0.760_272_37,
        0.587_518_30,
        0.0,
        -0.114_301_84,
        0.0,
        0.0,
    ],
    hi: [
        0.0,
        0.0,
        -0.114_301_84,
        0.0,
        0.587_518_30,
        -0.760_272_37,
        0.233_890_32,
        0.088_329_42,
        0.0,
        -0.035_163_84,
    ],
};

fn reversed(f: FilterPair) -> FilterPair {
    let mut lo = f.lo;
    let mut hi = f.hi;
    lo.reverse();
    hi.reverse();
    FilterPair { lo, hi }
}

fn later_stage() -> [FilterPair; 2] {
    [TREE_A, reversed(TREE_A)]
}

#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    fn zeros(width: usize, height: usize) -> Self {
        Plane {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    fn transposed(&self) -> Plane {
        const B: usize = 16;
        let (w, h) = (self.width, self.height);
        let mut t = Plane::zeros(h, w);
        for by in (0..h).step_by(B) {
            for bx in (0..w).step_by(B) {
                for y in by..(by + B).min(h) {
                    for x in bx..(bx + B).min(w) {
                        t.data[x * h + y] = self.data[y * w + x];
                    }
                }
            }
        }
        t
    }
}

fn rows_analysis(p: &Plane, f: &FilterPair) -> (Plane, Plane) {
    let (lo, hi) = cols_analysis(&p.transposed(), f);
    (lo.transposed(), hi.transposed())
}

fn rows_synthesis(lo: &Plane, hi: &Plane, f: &FilterPair) -> Plane {
    cols_synthesis(&lo.transposed(), &hi.transposed(), f).transposed()
}

fn cols_analysis(p: &Plane, f: &FilterPair) -> (Plane, Plane) {
    let (w, n) = (p.width, p.height);
    let mut lo = Plane::zeros(w, n / 2);
    let mut hi = Plane::zeros(w, n / 2);
    for i in 0..n / 2 {
        let (lrow, hrow) = (&mut lo.data[i * w..(i + 1) * w], &mut hi.data[i * w..(i + 1) * w]);
        for k in 0..10 {
            let src = &p.data[(2 * i + k) % n * w..][..w];
            let (a, b) = (f.lo[k], f.hi[k]);
            for ((l, h), v) in lrow.iter_mut().zip(hrow.iter_mut()).zip(src) {
                *l += a * v;
                *h += b * v;
            }
        }
    }
    (lo, hi)
}

fn cols_synthesis(lo: &Plane, hi: &Plane, f: &FilterPair) -> Plane {
    let (w, half) = (lo.width, lo.height);
    let n = 2 * half;
    let mut out = Plane::zeros(w, n);
    for i in 0..half {
        let (lrow, hrow) = (&lo.data[i * w..(i + 1) * w], &hi.data[i * w..(i + 1) * w]);
        for k in 0..10 {
            let dst = &mut out.data[(2 * i + k) % n * w..][..w];
            let (a, b) = (f.lo[k], f.hi[k]);
            for ((d, l), h) in dst.iter_mut().zip(lrow).zip(hrow) {
                *d += a * l + b * h;
            }
        }
    }
    out
}

/// One separable stage: columns with `fc`, rows with `fr`.
fn afb2d(x: &Plane, fc: &FilterPair, fr: &FilterPair) -> (Plane, [Plane; 3]) {
    let (l, h) = cols_analysis(x, fc);
    rows_stage(&l, &h, fr)
}

fn rows_stage(l: &Plane, h: &Plane, fr: &FilterPair) -> (Plane, [Plane; 3]) {
    let (lo, hi1) = rows_analysis(l, fr);
    let (hi2, hi3) = rows_analysis(h, fr);
    (lo, [hi1, hi2, hi3])
}

fn sfb2d(lo: &Plane, hi: &[Plane; 3], fc: &FilterPair, fr: &FilterPair) -> Plane {
    let l = rows_synthesis(lo, &hi[0], fr);
    let h = rows_synthesis(&hi[1], &hi[2], fr);
    cols_synthesis(&l, &h, fc)
}

/// Sum/difference butterfly; its own inverse.
fn pm(a: &mut Plane, b: &mut Plane) {
    for (x, y) in a.data.iter_mut().zip(b.data.iter_mut()) {
        let (p, q) = (*x, *y);
        *x = (p + q) * FRAC_1_SQRT_2;
        *y = (p - q) * FRAC_1_SQRT_2;
    }
}

/// Coefficients of the four-tree transform. `detail[j][m][n][d]` holds
/// level `j`, trees `m` (columns) and `n` (rows), detail direction `d`,
/// after the butterfly that pairs trees into complex subbands.
#[derive(Clone, Debug)]
pub struct DtcwtCoeffs {
    pub width: usize,
    pub height: usize,
    pub detail: Vec<[[[Plane; 3]; 2]; 2]>,
    pub lowpass: [[Plane; 2]; 2],
}

impl DtcwtCoeffs {
    pub fn levels(&self) -> usize {
        self.detail.len()
    }

    /// Magnitudes of the six oriented complex subbands of level `j`.
    pub fn magnitudes(&self, j: usize) -> Vec<Vec<f64>> {
        let t = &self.detail[j];
        let mut out = Vec::with_capacity(6);
        for d in 0..3 {
            // Real parts from trees (0,0) and (0,1), imaginary from (1,0) and (1,1).
            for (re, im) in [(&t[0][0][d], &t[1][0][d]), (&t[0][1][d], &t[1][1][d])] {
                out.push(re.data.iter().zip(&im.data).map(|(a, b)| (a * a + b * b).sqrt()).collect());
            }
        }
        out
    }
}

/// Complex dual-tree wavelet transform with periodic boundaries.
#[derive(Clone, Copy, Debug)]
pub struct Dtcwt {
    levels: usize,
}

impl Dtcwt {
    pub fn new(levels: usize) -> Result<Self> {
        if levels == 0 {
            return Err(Error::invalid("DT-CWT needs at least one level"));
        }
        Ok(Dtcwt { levels })
    }

    pub fn forward(&self, x: &[f64], width: usize, height: usize) -> Result<DtcwtCoeffs> {
        let m = 1usize << self.levels;
        if width % m != 0 || height % m != 0 || x.len() != width * height {
            return Err(Error::invalid(format!(
                "DT-CWT with {} levels needs sides divisible by {m}, got {width}x{height}",
                self.levels
            )));
        }
        let input = Plane {
            width,
            height,
            data: x.to_vec(),
        };
        let later = later_stage();
        let mut lows: [[Plane; 2]; 2] = std::array::from_fn(|_| std::array::from_fn(|_| Plane::zeros(0, 0)));
        let mut detail = Vec::with_capacity(self.levels);
        for j in 0..self.levels {
            let bank = if j == 0 { &FIRST_STAGE } else { &later };
            let mut level: [[[Plane; 3]; 2]; 2] =
                std::array::from_fn(|_| std::array::from_fn(|_| std::array::from_fn(|_| Plane::zeros(0, 0))));
            for m in 0..2 {
                // Every tree starts from the input, so the column pass is shared.
                let shared = (j == 0).then(|| cols_analysis(&input, &bank[m]));
                for n in 0..2 {
                    let (lo, hi) = match &shared {
                        Some((l, h)) => rows_stage(l, h, &bank[n]),
                        None => afb2d(&lows[m][n], &bank[m], &bank[n]),
                    };
                    lows[m][n] = lo;
                    level[m][n] = hi;
                }
            }
            for d in 0..3 {
                let [r0, r1] = &mut level;
                let [a, b] = r0;
                let [c, e] = r1;
                pm(&mut a[d], &mut e[d]);
                pm(&mut b[d], &mut c[d]);
            }
            detail.push(level);
        }
        Ok(DtcwtCoeffs {
            width,
            height,
            detail,
            lowpass: lows,
        })
    }

    pub fn inverse(&self, coeffs: &DtcwtCoeffs) -> Vec<f64> {
        let later = later_stage();
        let mut detail = coeffs.detail.clone();
        for level in detail.iter_mut() {
            for d in 0..3 {
                let [r0, r1] = level;
                let [a, b] = r0;
                let [c, e] = r1;
                pm(&mut a[d], &mut e[d]);
                pm(&mut b[d], &mut c[d]);
            }
        }
        let mut out = vec![0.0; coeffs.width * coeffs.height];
        for m in 0..2 {
            for n in 0..2 {
                let mut y = coeffs.lowpass[m][n].clone();
                for j in (0..detail.len()).rev() {
                    let bank = if j == 0 { &FIRST_STAGE } else { &later };
                    y = sfb2d(&y, &detail[j][m][n], &bank[m], &bank[n]);
                }
                for (o, v) in out.iter_mut().zip(&y.data) {
                    *o += v / 4.0;
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DtcwtConfig {
    pub levels: usize,
}

impl Default for DtcwtConfig {
    fn default() -> Self {
        DtcwtConfig { levels: 4 }
    }
}

/// Reflect-pads a plane so both sides are multiples of `m`.
fn pad_to_multiple(plane: &[f32], w: usize, h: usize, m: usize) -> (Vec<f64>, usize, usize) {
    let pw = w.div_ceil(m) * m;
    let ph = h.div_ceil(m) * m;
    let (ox, oy) = (((pw - w) / 2) as isize, ((ph - h) / 2) as isize);
    let mut out = Vec::with_capacity(pw * ph);
    for y in 0..ph {
        let sy = reflect(y as isize - oy, h);
        for x in 0..pw {
            out.push(plane[sy * w + reflect(x as isize - ox, w)] as f64);
        }
    }
    (out, pw, ph)
}

/// Mean and standard deviation of the subband magnitudes, per RGB channel,
/// level and oriented subband.
pub struct DtcwtDescriptor {
    transform: Dtcwt,
}

impl DtcwtDescriptor {
    pub fn new(config: DtcwtConfig) -> Result<Self> {
        Ok(DtcwtDescriptor {
            transform: Dtcwt::new(config.levels)?,
        })
    }
}

impl Descriptor for DtcwtDescriptor {
    fn name(&self) -> &str {
        "dtcwt"
    }

    fn dim(&self) -> usize {
        3 * self.transform.levels * 6 * 2
    }

    fn compute(&self, ctx: &PatchContext) -> Result<Vec<f64>> {
        let m = 1 << self.transform.levels;
        let mut out = Vec::with_capacity(self.dim());
        for plane in ctx.planes() {
            let (x, w, h) = pad_to_multiple(plane, ctx.width(), ctx.height(), m);
            let coeffs = self.transform.forward(&x, w, h)?;
            for j in 0..coeffs.levels() {
                for mag in coeffs.magnitudes(j) {
                    let (mu, sd) = mean_std(mag.iter().copied());
                    out.push(mu);
                    out.push(sd);
                }
            }
        }
        Ok(out)
    }
}

pub fn dtcwt(img: &Image, config: &DtcwtConfig) -> Result<FeatureVector> {
    DtcwtDescriptor::new(config.clone())?.extract(img)
}
