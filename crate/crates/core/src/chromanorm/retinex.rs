use super::{from_linear_planes, linear_planes};
use crate::error::{Error, Result};
use crate::imgcore::Image;

const FLOOR: f64 = 1.0 / 255.0;

fn to_log(plane: &[f64]) -> Vec<f64> {
    plane.iter().map(|v| v.max(FLOOR).ln()).collect()
}

/// Ratio-product-reset-average step against the pixel `(dy, dx)` away.
fn compare(op: &mut [f64], r: &[f64], w: usize, h: usize, dy: isize, dx: isize, max: f64) {
    let prev = op.to_vec();
    for y in 0..h {
        let sy = y as isize - dy;
        if sy < 0 || sy >= h as isize {
            continue;
        }
        for x in 0..w {
            let sx = x as isize - dx;
            if sx < 0 || sx >= w as isize {
                continue;
            }
            let (i, j) = (y * w + x, sy as usize * w + sx as usize);
            let ip = (prev[j] + r[i] - r[j]).min(max);
            op[i] = (ip + prev[i]) / 2.0;
        }
    }
}

/// Frankle-McCann in the log domain on one channel.
fn frankle_mccann_log(r: &[f64], w: usize, h: usize, iterations: usize) -> Vec<f64> {
    let max = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut op = vec![max; r.len()];
    let longest = w.max(h).max(2);
    let mut shift: isize = 1 << (longest.ilog2() - 1);
    while shift != 0 {
        for _ in 0..iterations {
            compare(&mut op, r, w, h, 0, shift, max);
            compare(&mut op, r, w, h, shift, 0, max);
        }
        shift = -shift / 2;
    }
    op
}

fn downsample(p: &[f64], w: usize, h: usize) -> (Vec<f64>, usize, usize) {
    let (nw, nh) = (w.div_ceil(2), h.div_ceil(2));
    let mut out = vec![0.0; nw * nh];
    for y in 0..nh {
        for x in 0..nw {
            let (mut s, mut n) = (0.0, 0.0);
            for yy in 2 * y..(2 * y + 2).min(h) {
                for xx in 2 * x..(2 * x + 2).min(w) {
                    s += p[yy * w + xx];
                    n += 1.0;
                }
            }
            out[y * nw + x] = s / n;
        }
    }
    (out, nw, nh)
}

fn upsample(p: &[f64], w: usize, _h: usize, nw: usize, nh: usize) -> Vec<f64> {
    let mut out = vec![0.0; nw * nh];
    for y in 0..nh {
        for x in 0..nw {
            out[y * nw + x] = p[(y / 2) * w + x / 2];
        }
    }
    out
}

const NEIGHBORS: [(isize, isize); 8] = [(-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)];

/// McCann99 multiresolution Retinex in the log domain on one channel.
fn mccann99_log(r: &[f64], w: usize, h: usize, iterations: usize, coarsest: usize) -> Vec<f64> {
    let max = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut pyramid = vec![(r.to_vec(), w, h)];
    while {
        let (_, lw, lh) = pyramid.last().unwrap();
        lw * lh > coarsest
    } {
        let (p, lw, lh) = pyramid.last().unwrap();
        let next = downsample(p, *lw, *lh);
        pyramid.push(next);
    }
    let (_, cw, ch) = pyramid.last().unwrap();
    let mut op = vec![max; cw * ch];
    for level in (0..pyramid.len()).rev() {
        let (rl, lw, lh) = &pyramid[level];
        for _ in 0..iterations {
            for (dy, dx) in NEIGHBORS {
                compare(&mut op, rl, *lw, *lh, dy, dx, max);
            }
        }
        if level > 0 {
            let (_, fw, fh) = &pyramid[level - 1];
            op = upsample(&op, *lw, *lh, *fw, *fh);
        }
    }
    op
}

fn run(img: &Image, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Image> {
    let planes = linear_planes(img)?;
    let out = planes.map(|p| {
        let l = f(&to_log(&p));
        let e: Vec<f64> = l.iter().map(|v| v.exp()).collect();
        let m = e.iter().cloned().fold(0.0, f64::max);
        e.iter().map(|v| v / m).collect::<Vec<f64>>()
    });
    from_linear_planes(img, &out)
}

fn check_iterations(iterations: usize) -> Result<()> {
    if iterations == 0 {
        return Err(Error::invalid("Retinex needs at least one iteration"));
    }
    Ok(())
}

/// Frankle-McCann Retinex: shifts halve from the largest power of two
/// below the image size down to one pixel, alternating direction.
pub fn retinex_frankle_mccann(img: &Image, iterations: usize) -> Result<Image> {
    check_iterations(iterations)?;
    let (w, h) = (img.width(), img.height());
    run(img, |r| frankle_mccann_log(r, w, h, iterations))
}

/// McCann99 Retinex over a 2x pyramid whose coarsest level holds at most
/// `coarsest` pixels.
pub fn retinex_mccann99(img: &Image, iterations: usize, coarsest: usize) -> Result<Image> {
    check_iterations(iterations)?;
    if coarsest == 0 {
        return Err(Error::invalid("coarsest pyramid level must be positive"));
    }
    let (w, h) = (img.width(), img.height());
    run(img, |r| mccann99_log(r, w, h, iterations, coarsest))
}
