use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"RTFX";
const VERSION: u16 = 1;

/// Features of one patch.
#[derive(Clone, Debug, PartialEq)]
pub struct CacheEntry {
    pub class: u16,
    pub condition: String,
    pub grid_pos: u8,
    pub values: Vec<f32>,
}

/// All patch features of one descriptor under one normalizer.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureCache {
    pub descriptor: String,
    pub normalizer: String,
    pub dim: usize,
    pub entries: Vec<CacheEntry>,
}

impl FeatureCache {
    pub fn new(descriptor: impl Into<String>, normalizer: impl Into<String>, dim: usize) -> Self {
        FeatureCache {
            descriptor: descriptor.into(),
            normalizer: normalizer.into(),
            dim,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, entry: CacheEntry) -> Result<()> {
        if entry.values.len() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                actual: entry.values.len(),
            });
        }
        self.entries.push(entry);
        Ok(())
    }

    /// Lookup table from (class, condition, grid position) to entry index.
    pub fn index(&self) -> HashMap<(u16, &str, u8), usize> {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, e)| ((e.class, e.condition.as_str(), e.grid_pos), i))
            .collect()
    }

    pub fn write(&self, w: &mut impl Write) -> Result<()> {
        let mut w = BufWriter::new(w);
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        write_str(&mut w, &self.descriptor)?;
        write_str(&mut w, &self.normalizer)?;
        w.write_all(&u32_of(self.dim)?.to_le_bytes())?;
        w.write_all(&u32_of(self.entries.len())?.to_le_bytes())?;
        for e in &self.entries {
            if e.values.len() != self.dim {
                return Err(Error::DimMismatch {
                    expected: self.dim,
                    actual: e.values.len(),
                });
            }
            w.write_all(&e.class.to_le_bytes())?;
            write_str(&mut w, &e.condition)?;
            w.write_all(&[e.grid_pos])?;
            for v in &e.values {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(r: &mut impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let mut rd = Cursor { bytes: &bytes };
        if rd.take(4)? != MAGIC {
            return Err(Error::Format("not a feature cache".into()));
        }
        let version = rd.u16()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported cache version {version}")));
        }
        let descriptor = rd.string()?;
        let normalizer = rd.string()?;
        let dim = rd.u32()? as usize;
        let n = rd.u32()? as usize;
        let mut cache = FeatureCache::new(descriptor, normalizer, dim);
        for _ in 0..n {
            let class = rd.u16()?;
            let condition = rd.string()?;
            let grid_pos = rd.take(1)?[0];
            let values = rd
                .take(4 * dim)?
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect();
            cache.entries.push(CacheEntry {
                class,
                condition,
                grid_pos,
                values,
            });
        }
        if !rd.bytes.is_empty() {
            return Err(Error::Format(format!("{} trailing bytes", rd.bytes.len())));
        }
        Ok(cache)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write(&mut fs::File::create(path)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        FeatureCache::read(&mut fs::File::open(path)?)
    }
}

fn u32_of(n: usize) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::invalid(format!("{n} does not fit the cache format")))
}

fn write_str(w: &mut impl Write, s: &str) -> Result<()> {
    let len = u16::try_from(s.len()).map_err(|_| Error::invalid("string too long for the cache format"))?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() < n {
            return Err(Error::Format("truncated feature cache".into()));
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

    fn string(&mut self) -> Result<String> {
        let len = self.u16()? as usize;
        String::from_utf8(self.take(len)?.to_vec()).map_err(|e| Error::Format(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FeatureCache {
        let mut c = FeatureCache::new("hist-l", "none", 2);
        c.push(CacheEntry {
            class: 3,
            condition: "D65".into(),
            grid_pos: 5,
            values: vec![0.25, -1.5],
        })
        .unwrap();
        c.push(CacheEntry {
            class: 0,
            condition: "I100".into(),
            grid_pos: 0,
            values: vec![f32::MIN_POSITIVE, 7.0],
        })
        .unwrap();
        c
    }

    #[test]
    fn layout_is_exact() {
        let mut buf = Vec::new();
        sample().write(&mut buf).unwrap();
        let mut want = b"RTFX".to_vec();
        want.extend([1, 0]);
        want.extend([6, 0]);
        want.extend(b"hist-l");
        want.extend([4, 0]);
        want.extend(b"none");
        want.extend([2, 0, 0, 0, 2, 0, 0, 0]);
        want.extend([3, 0, 3, 0]);
        want.extend(b"D65");
        want.push(5);
        want.extend(0.25f32.to_le_bytes());
        want.extend((-1.5f32).to_le_bytes());
        assert_eq!(&buf[..want.len()], &want[..]);
        assert_eq!(buf.len(), want.len() + 2 + 2 + 4 + 1 + 8);
    }

    #[test]
    fn round_trip() {
        let c = sample();
        let mut buf = Vec::new();
        c.write(&mut buf).unwrap();
        assert_eq!(FeatureCache::read(&mut &buf[..]).unwrap(), c);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.rtfx");
        c.save(&path).unwrap();
        assert_eq!(FeatureCache::load(&path).unwrap(), c);
    }

    #[test]
    fn rejects_damage() {
        let mut buf = Vec::new();
        sample().write(&mut buf).unwrap();
        assert!(matches!(FeatureCache::read(&mut &buf[..buf.len() - 1]), Err(Error::Format(_))));
        let mut extra = buf.clone();
        extra.push(1);
        assert!(FeatureCache::read(&mut &extra[..]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(FeatureCache::read(&mut &bad[..]).is_err());
    }

    #[test]
    fn wrong_dim_rejected() {
        let mut c = FeatureCache::new("x", "none", 3);
        let e = CacheEntry {
            class: 0,
            condition: "I100".into(),
            grid_pos: 0,
            values: vec![1.0],
        };
        assert!(c.push(e).is_err());
    }
}
