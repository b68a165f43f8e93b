use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::gmm::GaussianMixture;
use super::kmeans::Codebook;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"RTCB";
const VERSION: u16 = 1;
const KIND_CODEBOOK: u8 = 0;
const KIND_MIXTURE: u8 = 1;

fn header(out: &mut Vec<u8>, kind: u8, fingerprint: &str, k: usize, dim: usize) -> Result<()> {
    let fp = fingerprint.as_bytes();
    let len = u16::try_from(fp.len()).map_err(|_| Error::invalid("fingerprint too long"))?;
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(kind);
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(fp);
    out.extend_from_slice(&(k as u32).to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() < n {
            return Err(Error::Format("truncated model file".into()));
        }
        let (head, rest) = self.bytes.split_at(n);
        self.bytes = rest;
        Ok(head)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        Ok(self.take(4 * n)?.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect())
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        Ok(self.take(8 * n)?.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }

    /// Parses the header; returns (fingerprint, k, dim).
    fn header(&mut self, kind: u8) -> Result<(String, usize, usize)> {
        if self.take(4)? != MAGIC {
            return Err(Error::Format("not a model file".into()));
        }
        let version = self.u16()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported model version {version}")));
        }
        let found = self.take(1)?[0];
        if found != kind {
            return Err(Error::Format(format!("model kind {found}, expected {kind}")));
        }
        let len = self.u16()? as usize;
        let fp = String::from_utf8(self.take(len)?.to_vec()).map_err(|e| Error::Format(e.to_string()))?;
        Ok((fp, self.u32()? as usize, self.u32()? as usize))
    }

    fn finish(&self) -> Result<()> {
        if !self.bytes.is_empty() {
            return Err(Error::Format(format!("{} trailing bytes", self.bytes.len())));
        }
        Ok(())
    }
}

pub fn write_codebook(cb: &Codebook, w: &mut impl Write) -> Result<()> {
    let mut out = Vec::with_capacity(32 + 4 * cb.words.len());
    header(&mut out, KIND_CODEBOOK, &cb.training_fingerprint, cb.k(), cb.dim)?;
    cb.words.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
    w.write_all(&out)?;
    Ok(())
}

pub fn read_codebook(r: &mut impl Read) -> Result<Codebook> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut rd = Reader { bytes: &bytes };
    let (fp, k, dim) = rd.header(KIND_CODEBOOK)?;
    let words = rd.f32s(k * dim)?;
    rd.finish()?;
    Codebook::new(dim, words, fp)
}

pub fn write_mixture(g: &GaussianMixture, w: &mut impl Write) -> Result<()> {
    let mut out = Vec::new();
    header(&mut out, KIND_MIXTURE, &g.training_fingerprint, g.k(), g.dim)?;
    for v in g.weights.iter().chain(&g.means).chain(&g.variances) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&out)?;
    Ok(())
}

pub fn read_mixture(r: &mut impl Read) -> Result<GaussianMixture> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut rd = Reader { bytes: &bytes };
    let (fp, k, dim) = rd.header(KIND_MIXTURE)?;
    let weights = rd.f64s(k)?;
    let means = rd.f64s(k * dim)?;
    let variances = rd.f64s(k * dim)?;
    rd.finish()?;
    GaussianMixture::new(dim, weights, means, variances, fp)
}

pub fn save_codebook(cb: &Codebook, path: &Path) -> Result<()> {
    write_codebook(cb, &mut fs::File::create(path)?)
}

pub fn load_codebook(path: &Path) -> Result<Codebook> {
    read_codebook(&mut fs::File::open(path)?)
}

pub fn save_mixture(g: &GaussianMixture, path: &Path) -> Result<()> {
    write_mixture(g, &mut fs::File::create(path)?)
}

pub fn load_mixture(path: &Path) -> Result<GaussianMixture> {
    read_mixture(&mut fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codebook_round_trip() {
        let cb = Codebook::new(2, vec![0.5, -1.0, 3.25, 7.0], "abc:seed=1").unwrap();
        let mut buf = Vec::new();
        write_codebook(&cb, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"RTCB");
        assert_eq!(read_codebook(&mut &buf[..]).unwrap(), cb);
    }

    #[test]
    fn mixture_round_trip() {
        let g = GaussianMixture::new(1, vec![0.25, 0.75], vec![0.0, 1.5], vec![1.0, 0.5], "fp").unwrap();
        let mut buf = Vec::new();
        write_mixture(&g, &mut buf).unwrap();
        assert_eq!(read_mixture(&mut &buf[..]).unwrap(), g);
    }

    #[test]
    fn rejects_wrong_kind_and_truncation() {
        let cb = Codebook::new(1, vec![1.0, 2.0], "x").unwrap();
        let mut buf = Vec::new();
        write_codebook(&cb, &mut buf).unwrap();
        assert!(matches!(read_mixture(&mut &buf[..]), Err(Error::Format(_))));
        assert!(matches!(read_codebook(&mut &buf[..buf.len() - 1]), Err(Error::Format(_))));
        let mut extra = buf.clone();
        extra.push(0);
        assert!(read_codebook(&mut &extra[..]).is_err());
    }
}
