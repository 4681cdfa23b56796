//! On-disk segment cache.
//!
//! One file per segment payload, little-endian throughout:
//!
//! ```text
//! offset  size  field
//! 0       4     magic, b"TSV1" (bumped on any layout change)
//! 4       8     lo (u64)
//! 12      8     hi (u64)
//! 20      4     flags (u32): 0 = primality bit array, 1 = spf table
//! 24      ...   payload
//! ```
//!
//! The bit-array payload is `ceil((hi-lo)/64)` u64 words, bit `i` of the
//! array meaning `lo + i` is prime. The spf payload is `hi - lo` u32 entries.
//! Bit files are named `seg-{lo}-{hi}.tsv1`, spf files
//! `seg-{lo}-{hi}.spf.tsv1`. Files whose header does not match are treated
//! as absent and rebuilt; `clear` removes only files with a matching magic.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use super::{SieveError, SieveSegment};

pub const MAGIC: [u8; 4] = *b"TSV1";

const FLAG_BITS: u32 = 0;
const FLAG_SPF: u32 = 1;
const HEADER_LEN: usize = 24;

fn bits_path(dir: &Path, lo: u64, hi: u64) -> PathBuf {
    dir.join(format!("seg-{lo}-{hi}.tsv1"))
}

fn spf_path(dir: &Path, lo: u64, hi: u64) -> PathBuf {
    dir.join(format!("seg-{lo}-{hi}.spf.tsv1"))
}

fn io_err(path: &Path, source: std::io::Error) -> SieveError {
    SieveError::CacheIo {
        path: path.to_path_buf(),
        source,
    }
}

fn header(lo: u64, hi: u64, flags: u32) -> [u8; HEADER_LEN] {
    let mut h = [0u8; HEADER_LEN];
    h[0..4].copy_from_slice(&MAGIC);
    h[4..12].copy_from_slice(&lo.to_le_bytes());
    h[12..20].copy_from_slice(&hi.to_le_bytes());
    h[20..24].copy_from_slice(&flags.to_le_bytes());
    h
}

/// Reads a payload if the file exists and its header matches exactly.
fn read_payload(path: &Path, lo: u64, hi: u64, flags: u32) -> Result<Option<Vec<u8>>, SieveError> {
    let mut file = match fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(io_err(path, e)),
    };
    let mut buf = Vec::new();
    file.read_to_end(&mut buf).map_err(|e| io_err(path, e))?;
    if buf.len() < HEADER_LEN || buf[..HEADER_LEN] != header(lo, hi, flags) {
        return Ok(None);
    }
    Ok(Some(buf.split_off(HEADER_LEN)))
}

fn write_payload(path: &Path, lo: u64, hi: u64, flags: u32, payload: &[u8]) -> Result<(), SieveError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(path, e))?;
    }
    let mut file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    file.write_all(&header(lo, hi, flags)).map_err(|e| io_err(path, e))?;
    file.write_all(payload).map_err(|e| io_err(path, e))
}

pub(super) fn load_segment(
    dir: &Path,
    lo: u64,
    hi: u64,
    with_spf: bool,
) -> Result<Option<SieveSegment>, SieveError> {
    let len = hi - lo;
    let nwords = ((len + 63) / 64) as usize;
    let Some(raw) = read_payload(&bits_path(dir, lo, hi), lo, hi, FLAG_BITS)? else {
        return Ok(None);
    };
    if raw.len() != nwords * 8 {
        return Ok(None);
    }
    let words: Vec<u64> = raw
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let spf = if with_spf {
        let Some(raw) = read_payload(&spf_path(dir, lo, hi), lo, hi, FLAG_SPF)? else {
            return Ok(None);
        };
        if raw.len() != len as usize * 4 {
            return Ok(None);
        }
        Some(
            raw.chunks_exact(4)
                .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        )
    } else {
        None
    };
    Ok(Some(SieveSegment { lo, hi, words, spf }))
}

pub(super) fn store_segment(dir: &Path, seg: &SieveSegment) -> Result<(), SieveError> {
    let bytes: Vec<u8> = seg.words().iter().flat_map(|w| w.to_le_bytes()).collect();
    write_payload(&bits_path(dir, seg.lo(), seg.hi()), seg.lo(), seg.hi(), FLAG_BITS, &bytes)?;
    if let Some(table) = seg.spf_table() {
        let bytes: Vec<u8> = table.iter().flat_map(|v| v.to_le_bytes()).collect();
        write_payload(&spf_path(dir, seg.lo(), seg.hi()), seg.lo(), seg.hi(), FLAG_SPF, &bytes)?;
    }
    Ok(())
}

/// One cached span as reported by [`status`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CachedSpan {
    pub lo: u64,
    pub hi: u64,
    pub spf: bool,
    pub bytes: u64,
}

/// Inventory of version-matched cache files in `dir`.
pub fn status(dir: &Path) -> Result<Vec<CachedSpan>, SieveError> {
    let mut spans = Vec::new();
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(spans),
        Err(e) => return Err(io_err(dir, e)),
    };
    for entry in entries {
        let entry = entry.map_err(|e| io_err(dir, e))?;
        let path = entry.path();
        let Some((lo, hi, spf)) = parse_name(&path) else {
            continue;
        };
        let mut head = [0u8; HEADER_LEN];
        let Ok(mut f) = fs::File::open(&path) else { continue };
        if f.read_exact(&mut head).is_err() {
            continue;
        }
        let flags = if spf { FLAG_SPF } else { FLAG_BITS };
        if head != header(lo, hi, flags) {
            continue;
        }
        let bytes = entry.metadata().map_err(|e| io_err(&path, e))?.len();
        spans.push(CachedSpan { lo, hi, spf, bytes });
    }
    spans.sort_by_key(|s| (s.lo, s.hi, s.spf));
    Ok(spans)
}

/// Removes version-matched cache files only; returns how many were removed.
pub fn clear(dir: &Path) -> Result<usize, SieveError> {
    let spans = status(dir)?;
    let mut removed = 0;
    for span in spans {
        let path = if span.spf {
            spf_path(dir, span.lo, span.hi)
        } else {
            bits_path(dir, span.lo, span.hi)
        };
        fs::remove_file(&path).map_err(|e| io_err(&path, e))?;
        removed += 1;
    }
    Ok(removed)
}

/// Builds and stores every segment covering `[lo, hi)`; returns the spans.
pub fn prewarm(
    dir: &Path,
    lo: u64,
    hi: u64,
    with_spf: bool,
    segment_cap: u64,
) -> Result<Vec<(u64, u64)>, SieveError> {
    let sv = super::Sieve::new()
        .with_segment_cap(segment_cap)
        .with_cache_dir(dir);
    sv.map_segments(lo, hi, with_spf, |s| (s.lo(), s.hi()))
}

fn parse_name(path: &Path) -> Option<(u64, u64, bool)> {
    let name = path.file_name()?.to_str()?;
    let (body, spf) = if let Some(b) = name.strip_suffix(".spf.tsv1") {
        (b, true)
    } else if let Some(b) = name.strip_suffix(".tsv1") {
        (b, false)
    } else {
        return None;
    };
    let rest = body.strip_prefix("seg-")?;
    let (lo, hi) = rest.split_once('-')?;
    Some((lo.parse().ok()?, hi.parse().ok()?, spf))
}
