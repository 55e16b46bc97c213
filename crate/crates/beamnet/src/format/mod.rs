//! Little-endian binary containers: datasets (`CBRN`), codebooks (`CBKB`)
//! and weight checkpoints (`CBWT`, with a JSON sidecar).
//!
//! Every file starts with a 4-byte magic and a u32 format version.

mod checkpoint;
mod codebook;
mod dataset;

pub use checkpoint::{load_checkpoint, save_checkpoint, sidecar_path, Sidecar};
pub use codebook::{load_codebook, save_codebook};
pub use dataset::{load_dataset, save_dataset};

use std::fs;
use std::path::Path;

use crate::{Error, Result};

pub(crate) struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new(magic: &[u8; 4], version: u32) -> Self {
        let mut w = Writer { buf: Vec::new() };
        w.buf.extend_from_slice(magic);
        w.u32(version);
        w
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f32s(&mut self, v: impl IntoIterator<Item = f32>) {
        for x in v {
            self.buf.extend_from_slice(&x.to_le_bytes());
        }
    }

    pub fn f64s(&mut self, v: impl IntoIterator<Item = f64>) {
        for x in v {
            self.buf.extend_from_slice(&x.to_le_bytes());
        }
    }

    /// u64 length prefix followed by the bytes.
    pub fn blob(&mut self, b: &[u8]) {
        self.u64(b.len() as u64);
        self.buf.extend_from_slice(b);
    }

    pub fn finish(self, path: &Path) -> Result<()> {
        fs::write(path, self.buf).map_err(|e| Error::io(path, e))
    }
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    /// Checks magic and version, returning a reader positioned after them.
    pub fn open(buf: &'a [u8], path: &'a Path, magic: &[u8; 4], version: u32) -> Result<Self> {
        let mut r = Reader { buf, pos: 0, path };
        let found = r.take(4)?;
        if found != magic {
            return Err(Error::format(
                path,
                format!(
                    "bad magic: expected {:?}, found {:?}",
                    String::from_utf8_lossy(magic),
                    String::from_utf8_lossy(found)
                ),
            ));
        }
        let v = r.u32()?;
        if v != version {
            return Err(Error::format(path, format!("unsupported version {v}, expected {version}")));
        }
        Ok(r)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            Error::format(self.path, format!("truncated: need {n} bytes at offset {}", self.pos))
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn count(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| self.error(format!("count {v} too large")))
    }

    pub fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| self.error("size overflow"))?)?;
        Ok(bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
    }

    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| self.error("size overflow"))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }

    pub fn blob(&mut self) -> Result<&'a [u8]> {
        let n = self.count()?;
        self.take(n)
    }

    pub fn error(&self, message: impl Into<String>) -> Error {
        Error::format(self.path, message)
    }

    pub fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(self.error(format!("{} trailing bytes", self.buf.len() - self.pos)));
        }
        Ok(())
    }
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}
