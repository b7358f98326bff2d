//! `EMBD` and `SIMM` little-endian binary containers.
//!
//! ```text
//! EMBD: "EMBD" | version u32 | count u32 | dim u32 | count*dim f32 | ids
//! SIMM: "SIMM" | version u32 | n_queries u32 | n_gallery u32 | n_q*n_g f32 | query ids | gallery ids
//! ids:  one (byte length u32, UTF-8 bytes) record per row
//! ```

use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{EmbeddingSet, SimilarityMatrix};
use crate::error::{DecorrError, Result};

pub const FORMAT_VERSION: u32 = 1;
const EMBD_MAGIC: &[u8; 4] = b"EMBD";
const SIMM_MAGIC: &[u8; 4] = b"SIMM";

fn parse_err(what: &str, message: impl ToString) -> DecorrError {
    DecorrError::parse(what, message)
}

fn write_ids<W: Write>(w: &mut W, ids: &[String]) -> std::io::Result<()> {
    for id in ids {
        w.write_u32::<LittleEndian>(id.len() as u32)?;
        w.write_all(id.as_bytes())?;
    }
    Ok(())
}

fn read_ids<R: Read>(r: &mut R, count: usize, what: &str) -> Result<Vec<String>> {
    let mut ids = Vec::with_capacity(count);
    for _ in 0..count {
        let len = r
            .read_u32::<LittleEndian>()
            .map_err(|e| parse_err(what, format!("truncated id table: {e}")))?
            as usize;
        let mut buf = vec![0u8; len];
        r.read_exact(&mut buf)
            .map_err(|e| parse_err(what, format!("truncated id: {e}")))?;
        ids.push(String::from_utf8(buf).map_err(|e| parse_err(what, e))?);
    }
    Ok(ids)
}

fn read_header<R: Read>(r: &mut R, magic: &[u8; 4], what: &str) -> Result<(u32, u32)> {
    let mut got = [0u8; 4];
    r.read_exact(&mut got)
        .map_err(|e| parse_err(what, format!("missing magic: {e}")))?;
    if &got != magic {
        return Err(parse_err(what, format!("bad magic {got:?}")));
    }
    let mut field = || {
        r.read_u32::<LittleEndian>()
            .map_err(|e| parse_err(what, format!("truncated header: {e}")))
    };
    let version = field()?;
    if version != FORMAT_VERSION {
        return Err(parse_err(what, format!("unsupported version {version}")));
    }
    Ok((field()?, field()?))
}

fn read_f32s<R: Read>(r: &mut R, n: usize, what: &str) -> Result<Vec<f32>> {
    let mut values = vec![0f32; n];
    r.read_f32_into::<LittleEndian>(&mut values)
        .map_err(|e| parse_err(what, format!("truncated payload: {e}")))?;
    Ok(values)
}

fn expect_eof<R: Read>(r: &mut R, what: &str) -> Result<()> {
    let mut rest = Vec::new();
    r.read_to_end(&mut rest).map_err(|e| parse_err(what, e))?;
    if !rest.is_empty() {
        return Err(parse_err(what, format!("{} trailing bytes", rest.len())));
    }
    Ok(())
}

pub fn encode_embd(set: &EmbeddingSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + set.values().len() * 4);
    out.extend_from_slice(EMBD_MAGIC);
    for v in [FORMAT_VERSION, set.count() as u32, set.dim() as u32] {
        out.write_u32::<LittleEndian>(v).unwrap();
    }
    for v in set.values() {
        out.write_f32::<LittleEndian>(*v).unwrap();
    }
    write_ids(&mut out, set.ids()).unwrap();
    out
}

pub fn decode_embd(mut bytes: &[u8]) -> Result<EmbeddingSet> {
    let what = "EMBD";
    let (count, dim) = read_header(&mut bytes, EMBD_MAGIC, what)?;
    let values = read_f32s(&mut bytes, count as usize * dim as usize, what)?;
    let ids = read_ids(&mut bytes, count as usize, what)?;
    expect_eof(&mut bytes, what)?;
    EmbeddingSet::new(ids, dim as usize, values)
}

pub fn encode_simm(sim: &SimilarityMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + sim.scores().len() * 4);
    out.extend_from_slice(SIMM_MAGIC);
    for v in [
        FORMAT_VERSION,
        sim.n_queries() as u32,
        sim.n_gallery() as u32,
    ] {
        out.write_u32::<LittleEndian>(v).unwrap();
    }
    for v in sim.scores() {
        out.write_f32::<LittleEndian>(*v).unwrap();
    }
    write_ids(&mut out, sim.query_ids()).unwrap();
    write_ids(&mut out, sim.gallery_ids()).unwrap();
    out
}

pub fn decode_simm(mut bytes: &[u8]) -> Result<SimilarityMatrix> {
    let what = "SIMM";
    let (nq, ng) = read_header(&mut bytes, SIMM_MAGIC, what)?;
    let scores = read_f32s(&mut bytes, nq as usize * ng as usize, what)?;
    let query_ids = read_ids(&mut bytes, nq as usize, what)?;
    let gallery_ids = read_ids(&mut bytes, ng as usize, what)?;
    expect_eof(&mut bytes, what)?;
    SimilarityMatrix::new(query_ids, gallery_ids, scores)
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| DecorrError::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| DecorrError::io(path, e))
}

pub fn read_embd(path: &Path) -> Result<EmbeddingSet> {
    decode_embd(&read_file(path)?)
}

pub fn write_embd(path: &Path, set: &EmbeddingSet) -> Result<()> {
    write_file(path, &encode_embd(set))
}

pub fn read_simm(path: &Path) -> Result<SimilarityMatrix> {
    decode_simm(&read_file(path)?)
}

pub fn write_simm(path: &Path, sim: &SimilarityMatrix) -> Result<()> {
    write_file(path, &encode_simm(sim))
}
