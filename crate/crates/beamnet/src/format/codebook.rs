use std::path::Path;

use beamnet_core::beamspace::{build_codebook, Codebook};

use super::{read_file, Reader, Writer};
use crate::Result;

const MAGIC: &[u8; 4] = b"CBKB";
const VERSION: u32 = 1;

/// Array dimensions, oversampling, then the `[elements × beams]` matrix as
/// interleaved f64 (re, im), row-major.
pub fn save_codebook(codebook: &Codebook, path: &Path) -> Result<()> {
    let mut w = Writer::new(MAGIC, VERSION);
    let (y, z) = codebook.elements();
    for d in [y, z, codebook.oversampling.0, codebook.n_elements(), codebook.n_beams()] {
        w.u32(d as u32);
    }
    w.f64s(codebook.vectors().as_slice().iter().flat_map(|c| [c.re, c.im]));
    w.finish(path)
}

/// Reads a codebook dump and checks it against a rebuild from its dimensions.
pub fn load_codebook(path: &Path) -> Result<Codebook> {
    let buf = read_file(path)?;
    let mut r = Reader::open(&buf, path, MAGIC, VERSION)?;
    let (y, z, os) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
    let (ne, nb) = (r.u32()? as usize, r.u32()? as usize);
    if y == 0 || z == 0 || os == 0 || ne != y * z || nb != y * os * z {
        return Err(r.error("inconsistent codebook dimensions"));
    }
    let data = r.f64s(2 * ne * nb)?;
    r.finish()?;
    let cb = build_codebook(y, z, os);
    let same = cb
        .vectors()
        .as_slice()
        .iter()
        .zip(data.chunks_exact(2))
        .all(|(c, p)| c.re == p[0] && c.im == p[1]);
    if !same {
        return Err(r.error("codebook entries do not match the DFT construction"));
    }
    Ok(cb)
}
