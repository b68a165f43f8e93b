use std::f64::consts::PI;
use std::sync::Mutex;

use rustfft::num_complex::Complex32;
use serde::{Deserialize, Serialize};

use super::fft::{freq, transpose, Fft2};
use super::{Descriptor, FeatureVector, PatchContext};
use crate::error::{Error, Result};
use crate::imgcore::Image;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaborConfig {
    pub orientations: usize,
    pub scales: usize,
    /// Highest center frequency (cycles per pixel); lower ones are octaves below.
    pub top_frequency: f64,
    /// Radial half-peak bandwidth in octaves.
    pub bandwidth_octaves: f64,
}

impl Default for GaborConfig {
    fn default() -> Self {
        GaborConfig {
            orientations: 6,
            scales: 4,
            top_frequency: 0.327,
            bandwidth_octaves: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GistConfig {
    pub orientations: usize,
    pub scales: usize,
    pub top_frequency: f64,
    pub bandwidth_octaves: f64,
    /// Pooling grid side.
    pub grid: usize,
}

impl Default for GistConfig {
    fn default() -> Self {
        GistConfig {
            orientations: 8,
            scales: 4,
            top_frequency: 0.25,
            bandwidth_octaves: 1.0,
            grid: 4,
        }
    }
}

/// Frequency-domain Gabor filters (Gaussians centered on the tuning
/// frequency, zero at DC) for one image size.
pub(crate) struct GaborFilters {
    pub fft: Fft2,
    /// Scale-major, then orientation.
    pub bands: Vec<Band>,
}

/// Memory order of a response plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Layout {
    RowMajor,
    ColMajor,
}

/// The nonzero rows (for a column-major response) or columns (row-major)
/// of one transfer function, stored back to back.
pub(crate) struct Band {
    pub layout: Layout,
    pub index: Vec<usize>,
    pub values: Vec<f32>,
}

/// A real plane's spectrum in both memory orders.
pub(crate) struct Spectrum {
    rows: Vec<Complex32>,
    cols: Vec<Complex32>,
}

/// Oriented band-pass bank; filters are built per image size on first use.
pub struct GaborBank {
    orientations: usize,
    frequencies: Vec<f64>,
    sigma_u: Vec<f64>,
    sigma_v: Vec<f64>,
    built: Mutex<Vec<std::sync::Arc<GaborFilters>>>,
}

impl GaborBank {
    pub fn new(orientations: usize, scales: usize, top_frequency: f64, bandwidth_octaves: f64) -> Result<Self> {
        if orientations == 0 || scales == 0 {
            return Err(Error::invalid("Gabor bank needs orientations and scales"));
        }
        if !(top_frequency > 0.0 && top_frequency <= 0.5) || !(bandwidth_octaves > 0.0) {
            return Err(Error::invalid(format!(
                "bad Gabor tuning: top {top_frequency}, bandwidth {bandwidth_octaves}"
            )));
        }
        let k = (2.0 * 2f64.ln()).sqrt();
        let b = 2f64.powf(bandwidth_octaves);
        let frequencies: Vec<f64> = (0..scales).map(|s| top_frequency / 2f64.powi(s as i32)).collect();
        let half_angle = PI / (2.0 * orientations as f64);
        Ok(GaborBank {
            orientations,
            sigma_u: frequencies.iter().map(|f| f * (b - 1.0) / (b + 1.0) / k).collect(),
            sigma_v: frequencies.iter().map(|f| f * half_angle.tan() / k).collect(),
            frequencies,
            built: Mutex::new(Vec::new()),
        })
    }

    pub fn from_config(c: &GaborConfig) -> Result<Self> {
        GaborBank::new(c.orientations, c.scales, c.top_frequency, c.bandwidth_octaves)
    }

    pub fn len(&self) -> usize {
        self.orientations * self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn scales(&self) -> usize {
        self.frequencies.len()
    }

    pub fn orientations(&self) -> usize {
        self.orientations
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn angle(&self, o: usize) -> f64 {
        PI * o as f64 / self.orientations as f64
    }

    /// Transfer function of filter (scale `s`, orientation `o`) at (u, v).
    pub fn transfer(&self, s: usize, o: usize, u: f64, v: f64) -> f64 {
        let (st, ct) = self.angle(o).sin_cos();
        let ur = u * ct + v * st;
        let vr = -u * st + v * ct;
        let (su, sv) = (self.sigma_u[s], self.sigma_v[s]);
        (-(ur - self.frequencies[s]).powi(2) / (2.0 * su * su) - vr * vr / (2.0 * sv * sv)).exp()
    }

    pub(crate) fn filters(&self, w: usize, h: usize) -> std::sync::Arc<GaborFilters> {
        let mut built = self.built.lock().expect("bank cache poisoned");
        if let Some(f) = built.iter().find(|f| f.fft.size() == (w, h)) {
            return f.clone();
        }
        // The inverse transform's 1 / (w h) is folded into the filters.
        let area = (w * h) as f64;
        let mut full = Vec::with_capacity(self.len());
        for s in 0..self.scales() {
            for o in 0..self.orientations {
                let mut hf = vec![0f32; w * h];
                for ky in 0..h {
                    let v = freq(ky, h);
                    for kx in 0..w {
                        let g = self.transfer(s, o, freq(kx, w), v);
                        // Tails below single precision are dropped.
                        hf[ky * w + kx] = if g < 1e-8 { 0.0 } else { (g / area) as f32 };
                    }
                }
                hf[0] = 0.0;
                full.push(hf);
            }
        }
        let rows = |hf: &[f32]| -> Vec<usize> { (0..h).filter(|y| hf[y * w..(y + 1) * w].iter().any(|g| *g != 0.0)).collect() };
        let cols = |hf: &[f32]| -> Vec<usize> { (0..w).filter(|x| (0..h).any(|y| hf[y * w + x] != 0.0)).collect() };
        // One layout per orientation keeps responses of different scales comparable.
        let layouts: Vec<Layout> = (0..self.orientations)
            .map(|o| {
                let (mut nr, mut nc) = (0, 0);
                for s in 0..self.scales() {
                    let hf = &full[s * self.orientations + o];
                    nr += rows(hf).len() * w;
                    nc += cols(hf).len() * h;
                }
                if nr <= nc {
                    Layout::ColMajor
                } else {
                    Layout::RowMajor
                }
            })
            .collect();
        let bands = full
            .iter()
            .enumerate()
            .map(|(f, hf)| match layouts[f % self.orientations] {
                Layout::ColMajor => {
                    let index = rows(hf);
                    let values = index.iter().flat_map(|y| hf[y * w..(y + 1) * w].iter().copied()).collect();
                    Band { layout: Layout::ColMajor, index, values }
                }
                Layout::RowMajor => {
                    let index = cols(hf);
                    let values = index.iter().flat_map(|x| (0..h).map(move |y| hf[y * w + x])).collect();
                    Band { layout: Layout::RowMajor, index, values }
                }
            })
            .collect();
        let f = std::sync::Arc::new(GaborFilters {
            fft: Fft2::new(w, h),
            bands,
        });
        built.push(f.clone());
        f
    }

    /// Complex responses of every filter to `plane`, in filter order.
    pub fn responses(&self, plane: &[f32], w: usize, h: usize) -> Vec<Vec<Complex32>> {
        let bank = self.filters(w, h);
        let spectrum = bank.spectrum(plane);
        let (mut band, mut scratch) = (Vec::new(), Vec::new());
        (0..self.len())
            .map(|i| {
                let mut r = Vec::new();
                if bank.respond(&spectrum, i, &mut band, &mut r, &mut scratch) == Layout::ColMajor {
                    let mut t = vec![Complex32::default(); r.len()];
                    transpose(&r, &mut t, h, w);
                    r = t;
                }
                r
            })
            .collect()
    }

    fn key(&self) -> String {
        format!(
            "gabor:{}:{}:{}:{}",
            self.orientations,
            self.frequencies.len(),
            self.frequencies[0],
            self.sigma_u[0]
        )
    }

    /// Statistics of the RGB and luminance responses plus the opponent
    /// terms, computed once per patch and bank configuration.
    pub(crate) fn stats(&self, ctx: &PatchContext) -> std::rc::Rc<GaborStats> {
        ctx.memo(&self.key(), || self.compute_stats(ctx))
    }

    fn compute_stats(&self, ctx: &PatchContext) -> GaborStats {
        let (w, h) = (ctx.width(), ctx.height());
        let n = w * h;
        let bank = self.filters(w, h);
        let spectra: Vec<Spectrum> = ctx.planes().iter().map(|p| bank.spectrum(p)).collect();
        let (ns, no) = (self.scales(), self.orientations);
        let mut mono = vec![vec![(0.0, 0.0); self.len()]; 4];
        let pairs = opponent_scale_pairs(ns);
        let mut sums = vec![[0.0f64; 4]; OPPONENT_PAIRS.len() * pairs.len()];
        let mut resp = vec![vec![Vec::<Complex32>::new(); ns]; 3];
        let mut mags = vec![vec![vec![0f32; n]; ns]; 3];
        let mut lum = vec![Complex32::default(); n];
        let mut lum_mag = vec![0f32; n];
        let (mut d1, mut d2) = (vec![0f32; n], vec![0f32; n]);
        let (mut band, mut scratch) = (Vec::new(), Vec::new());
        for o in 0..no {
            for s in 0..ns {
                let f = s * no + o;
                for c in 0..3 {
                    bank.respond(&spectra[c], f, &mut band, &mut resp[c][s], &mut scratch);
                    magnitudes(&resp[c][s], &mut mags[c][s]);
                    mono[c][f] = pooled_mean_std(&mags[c][s]);
                }
                for (z, ((r, g), b)) in lum.iter_mut().zip(resp[0][s].iter().zip(&resp[1][s]).zip(&resp[2][s])) {
                    *z = r * LUMA[0] + g * LUMA[1] + b * LUMA[2];
                }
                magnitudes(&lum, &mut lum_mag);
                mono[3][f] = pooled_mean_std(&lum_mag);
            }
            for (p, &(i, j)) in OPPONENT_PAIRS.iter().enumerate() {
                for (q, &(m, k)) in pairs.iter().enumerate() {
                    let acc = &mut sums[p * pairs.len() + q];
                    let (ra, rb) = (&resp[i][m], &resp[j][k]);
                    let (ma, mb) = (&mags[i][m], &mags[j][k]);
                    let (ra, rb, ma, mb) = (&ra[..n], &rb[..n], &ma[..n], &mb[..n]);
                    for i in 0..n {
                        let (dr, di) = (ra[i].re - rb[i].re, ra[i].im - rb[i].im);
                        d1[i] = (ma[i] - mb[i]).abs();
                        d2[i] = (dr * dr + di * di).sqrt();
                    }
                    acc[0] += lane_sum(&d1, |x| x);
                    acc[1] += lane_sum(&d1, |x| x * x);
                    acc[2] += lane_sum(&d2, |x| x);
                    acc[3] += lane_sum(&d2, |x| x * x);
                }
            }
        }
        let count = (n * no) as f64;
        let opponent = sums
            .iter()
            .map(|a| {
                let (m1, m2) = (a[0] / count, a[2] / count);
                let s1 = (a[1] / count - m1 * m1).max(0.0).sqrt();
                let s2 = (a[3] / count - m2 * m2).max(0.0).sqrt();
                [m1, s1, m2, s2]
            })
            .collect();
        GaborStats { mono, opponent }
    }
}

impl GaborFilters {
    fn spectrum(&self, plane: &[f32]) -> Spectrum {
        let (w, h) = self.fft.size();
        let rows = self.fft.spectrum(plane);
        let mut cols = vec![Complex32::default(); rows.len()];
        transpose(&rows, &mut cols, w, h);
        Spectrum { rows, cols }
    }

    /// Response to filter `f` of the plane with spectrum `spectrum`, in the
    /// returned memory order.
    fn respond(
        &self,
        spectrum: &Spectrum,
        f: usize,
        band: &mut Vec<Complex32>,
        out: &mut Vec<Complex32>,
        scratch: &mut Vec<Complex32>,
    ) -> Layout {
        let b = &self.bands[f];
        let (src, n) = match b.layout {
            Layout::ColMajor => (&spectrum.rows, self.fft.size().0),
            Layout::RowMajor => (&spectrum.cols, self.fft.size().1),
        };
        band.clear();
        for (i, &k) in b.index.iter().enumerate() {
            band.extend(src[k * n..(k + 1) * n].iter().zip(&b.values[i * n..(i + 1) * n]).map(|(x, g)| x * *g));
        }
        match b.layout {
            Layout::ColMajor => self.fft.inverse_row_band(band, &b.index, out, scratch),
            Layout::RowMajor => self.fft.inverse_col_band(band, &b.index, out, scratch),
        }
        b.layout
    }
}

const LUMA: [f32; 3] = [0.299, 0.587, 0.114];

fn magnitudes(r: &[Complex32], out: &mut Vec<f32>) {
    out.clear();
    out.extend(r.iter().map(|z| (z.re * z.re + z.im * z.im).sqrt()));
}

const LANES: usize = 8;

/// Sums of `f(x)` over `v`, in independent `f32` lanes folded into `f64`
/// every 256 samples.
fn lane_sum(v: &[f32], f: impl Fn(f32) -> f32) -> f64 {
    let mut total = 0.0f64;
    for chunk in v.chunks(256) {
        let mut lanes = [0f32; LANES];
        let mut it = chunk.chunks_exact(LANES);
        for c in &mut it {
            for k in 0..LANES {
                lanes[k] += f(c[k]);
            }
        }
        for (k, x) in it.remainder().iter().enumerate() {
            lanes[k] += f(*x);
        }
        total += lanes.iter().map(|x| *x as f64).sum::<f64>();
    }
    total
}

/// Population mean and standard deviation (two-pass).
fn pooled_mean_std(v: &[f32]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = lane_sum(v, |x| x) / n;
    let m = mean as f32;
    let ss = lane_sum(v, |x| (x - m) * (x - m));
    (mean, (ss / n).sqrt())
}

/// Per-patch Gabor statistics. `mono[c][f]` is (mean, std) of `|r|` for
/// channel `c` (R, G, B, luminance) and filter `f`; `opponent` holds
/// [mean d1, std d1, mean d2, std d2] per channel pair and scale pair.
pub(crate) struct GaborStats {
    mono: Vec<Vec<(f64, f64)>>,
    opponent: Vec<[f64; 4]>,
}

impl GaborStats {
    fn flatten(&self, channels: &[usize]) -> Vec<f64> {
        channels
            .iter()
            .flat_map(|c| self.mono[*c].iter().flat_map(|(m, s)| [*m, *s]))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GaborMode {
    Gray,
    Rgb,
}

/// Mean and standard deviation of the response magnitude of every filter.
/// Luminance responses are the luma-weighted sums of the channel responses.
pub struct GaborDescriptor {
    mode: GaborMode,
    bank: GaborBank,
}

impl GaborDescriptor {
    pub fn new(mode: GaborMode, config: GaborConfig) -> Result<Self> {
        Ok(GaborDescriptor {
            mode,
            bank: GaborBank::from_config(&config)?,
        })
    }

    pub fn bank(&self) -> &GaborBank {
        &self.bank
    }
}

impl Descriptor for GaborDescriptor {
    fn name(&self) -> &str {
        match self.mode {
            GaborMode::Gray => "gabor-l",
            GaborMode::Rgb => "gabor-rgb",
        }
    }

    fn dim(&self) -> usize {
        let ch = if self.mode == GaborMode::Rgb { 3 } else { 1 };
        ch * self.bank.len() * 2
    }

    fn compute(&self, ctx: &PatchContext) -> Result<Vec<f64>> {
        let channels: &[usize] = match self.mode {
            GaborMode::Gray => &[3],
            GaborMode::Rgb => &[0, 1, 2],
        };
        Ok(self.bank.stats(ctx).flatten(channels))
    }
}

pub fn gabor(img: &Image, mode: GaborMode, config: &GaborConfig) -> Result<FeatureVector> {
    GaborDescriptor::new(mode, config.clone())?.extract(img)
}

/// Channel pairs of the opponent block.
pub const OPPONENT_PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Ordered scale pairs (m, n) with |m - n| <= 1.
pub fn opponent_scale_pairs(scales: usize) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = (0..scales).map(|s| (s, s)).collect();
    for s in 0..scales.saturating_sub(1) {
        out.push((s, s + 1));
        out.push((s + 1, s));
    }
    out
}

/// RGB Gabor features plus opponent features between channel pairs at equal
/// and adjacent scales: for each pair and scale pair, mean and std (over
/// orientations and pixels) of the magnitude difference `||r_i| - |r_j||`
/// and of the complex difference `|r_i - r_j|`.
pub struct OpponentGaborDescriptor {
    bank: GaborBank,
}

impl OpponentGaborDescriptor {
    pub fn new(config: GaborConfig) -> Result<Self> {
        Ok(OpponentGaborDescriptor {
            bank: GaborBank::from_config(&config)?,
        })
    }

    pub fn monochrome_dim(&self) -> usize {
        3 * self.bank.len() * 2
    }
}

impl Descriptor for OpponentGaborDescriptor {
    fn name(&self) -> &str {
        "opp-gabor"
    }

    fn dim(&self) -> usize {
        self.monochrome_dim() + OPPONENT_PAIRS.len() * opponent_scale_pairs(self.bank.scales()).len() * 4
    }

    fn compute(&self, ctx: &PatchContext) -> Result<Vec<f64>> {
        let stats = self.bank.stats(ctx);
        let mut out = stats.flatten(&[0, 1, 2]);
        out.extend(stats.opponent.iter().flatten());
        Ok(out)
    }
}

pub fn opponent_gabor(img: &Image, config: &GaborConfig) -> Result<FeatureVector> {
    OpponentGaborDescriptor::new(config.clone())?.extract(img)
}

/// Luminance Gabor magnitudes averaged over a `grid x grid` block layout.
pub struct GistDescriptor {
    bank: GaborBank,
    grid: usize,
}

impl GistDescriptor {
    pub fn new(config: GistConfig) -> Result<Self> {
        if config.grid == 0 {
            return Err(Error::invalid("gist grid must be positive"));
        }
        Ok(GistDescriptor {
            bank: GaborBank::new(config.orientations, config.scales, config.top_frequency, config.bandwidth_octaves)?,
            grid: config.grid,
        })
    }
}

impl Descriptor for GistDescriptor {
    fn name(&self) -> &str {
        "gist"
    }

    fn dim(&self) -> usize {
        self.bank.len() * self.grid * self.grid
    }

    fn compute(&self, ctx: &PatchContext) -> Result<Vec<f64>> {
        let (w, h) = (ctx.width(), ctx.height());
        let g = self.grid;
        let bounds = |i: usize, n: usize| (i * n / g, (i + 1) * n / g);
        let bank = self.bank.filters(w, h);
        let spectrum = bank.spectrum(ctx.gray());
        let (mut r, mut mag, mut band, mut scratch) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        let mut out = Vec::with_capacity(self.dim());
        for f in 0..self.bank.len() {
            let layout = bank.respond(&spectrum, f, &mut band, &mut r, &mut scratch);
            magnitudes(&r, &mut mag);
            for by in 0..g {
                let (y0, y1) = bounds(by, h);
                for bx in 0..g {
                    let (x0, x1) = bounds(bx, w);
                    let mut s = 0.0f64;
                    match layout {
                        Layout::RowMajor => {
                            for y in y0..y1 {
                                s += mag[y * w + x0..y * w + x1].iter().sum::<f32>() as f64;
                            }
                        }
                        Layout::ColMajor => {
                            for x in x0..x1 {
                                s += mag[x * h + y0..x * h + y1].iter().sum::<f32>() as f64;
                            }
                        }
                    }
                    let n = ((y1 - y0) * (x1 - x0)).max(1);
                    out.push(s / n as f64);
                }
            }
        }
        Ok(out)
    }
}

pub fn gist(img: &Image, config: &GistConfig) -> Result<FeatureVector> {
    GistDescriptor::new(config.clone())?.extract(img)
}
