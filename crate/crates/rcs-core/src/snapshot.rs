//! Bit-exact state persistence with integrity checking.
//!
//! File layout (version 1, all integers little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "RCSS"
//! 4       4     format_version (u32) = 1
//! 8       4     n_qubits (u32)
//! 12      8     payload_bytes (u64) = 16 * 2^n_qubits
//! 20      32    SHA-256 digest of the payload
//! 52      ...   payload: amplitudes in basis-index order, each as
//!               little-endian IEEE-754 float64 (re, im)
//! ```
//!
//! Writes go to a temp file in the destination directory followed by an
//! atomic rename, so a snapshot path either does not exist or holds a
//! complete file. Loads verify the digest and revalidate the norm to 1e-6.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::engine::StateVector;

pub const SNAPSHOT_MAGIC: [u8; 4] = *b"RCSS";
pub const SNAPSHOT_VERSION: u32 = 1;
const HEADER_LEN: u64 = 52;
const IO_CHUNK_AMPS: usize = 4096;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("snapshot I/O failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a snapshot file (bad magic)")]
    BadMagic,
    #[error("unsupported snapshot format version {0}")]
    UnsupportedVersion(u32),
    #[error(
        "header inconsistent: {n_qubits} qubits imply {expected} payload bytes, header says {got}"
    )]
    HeaderInconsistent { n_qubits: u32, expected: u64, got: u64 },
    #[error("file truncated: expected {expected} bytes, found {got}")]
    Truncated { expected: u64, got: u64 },
    #[error("payload digest mismatch (file corrupted)")]
    DigestMismatch,
    #[error("snapshot state norm^2 is {norm_sqr}, outside 1 +/- 1e-6")]
    BadNorm { norm_sqr: f64 },
}

/// SHA-256 digest of a snapshot payload. Serialized as 64 hex characters.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SnapshotDigest(pub [u8; 32]);

impl SnapshotDigest {
    pub fn to_hex(self) -> String {
        let mut s = String::with_capacity(64);
        for b in self.0 {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        if s.len() != 64 {
            return None;
        }
        let mut out = [0u8; 32];
        for (i, chunk) in s.as_bytes().chunks_exact(2).enumerate() {
            let hi = (chunk[0] as char).to_digit(16)?;
            let lo = (chunk[1] as char).to_digit(16)?;
            out[i] = (hi * 16 + lo) as u8;
        }
        Some(SnapshotDigest(out))
    }
}

impl fmt::Display for SnapshotDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for SnapshotDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SnapshotDigest({})", self.to_hex())
    }
}

impl Serialize for SnapshotDigest {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for SnapshotDigest {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        SnapshotDigest::from_hex(&s)
            .ok_or_else(|| serde::de::Error::custom("expected 64 hex characters"))
    }
}

/// Decoded snapshot header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SnapshotHeader {
    pub format_version: u32,
    pub n_qubits: usize,
    pub payload_bytes: u64,
    pub digest: SnapshotDigest,
}

fn expected_payload_bytes(n_qubits: u32) -> Option<u64> {
    16u64.checked_shl(n_qubits)
}

/// Writes the state to `path` atomically and returns the payload digest.
pub fn save_snapshot(state: &StateVector, path: &Path) -> Result<SnapshotDigest, SnapshotError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    let tmp = tempfile::Builder::new()
        .prefix(".rcss-partial-")
        .tempfile_in(&dir)?;
    let mut writer = BufWriter::new(tmp);

    // reserve header space, stream the payload while hashing
    writer.write_all(&[0u8; HEADER_LEN as usize])?;
    let mut hasher = Sha256::new();
    let mut chunk = Vec::with_capacity(IO_CHUNK_AMPS * 16);
    for amps in state.amps().chunks(IO_CHUNK_AMPS) {
        chunk.clear();
        for a in amps {
            chunk.extend_from_slice(&a.re.to_le_bytes());
            chunk.extend_from_slice(&a.im.to_le_bytes());
        }
        hasher.update(&chunk);
        writer.write_all(&chunk)?;
    }
    let digest = SnapshotDigest(hasher.finalize().into());

    let payload_bytes = (state.amps().len() as u64) * 16;
    let mut header = [0u8; HEADER_LEN as usize];
    header[0..4].copy_from_slice(&SNAPSHOT_MAGIC);
    header[4..8].copy_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    header[8..12].copy_from_slice(&(state.n_qubits() as u32).to_le_bytes());
    header[12..20].copy_from_slice(&payload_bytes.to_le_bytes());
    header[20..52].copy_from_slice(&digest.0);

    let mut tmp = writer.into_inner().map_err(|e| e.into_error())?;
    {
        let file = tmp.as_file_mut();
        file.seek(SeekFrom::Start(0))?;
        file.write_all(&header)?;
        file.sync_all()?;
    }
    tmp.persist(path).map_err(|e| SnapshotError::Io(e.error))?;
    Ok(digest)
}

fn read_header(file: &mut File, path: &Path) -> Result<SnapshotHeader, SnapshotError> {
    let file_len = file.metadata()?.len();
    if file_len < HEADER_LEN {
        return Err(SnapshotError::Truncated { expected: HEADER_LEN, got: file_len });
    }
    let mut header = [0u8; HEADER_LEN as usize];
    file.read_exact(&mut header)?;
    if header[0..4] != SNAPSHOT_MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != SNAPSHOT_VERSION {
        return Err(SnapshotError::UnsupportedVersion(version));
    }
    let n_qubits = u32::from_le_bytes(header[8..12].try_into().unwrap());
    let payload_bytes = u64::from_le_bytes(header[12..20].try_into().unwrap());
    let expected = expected_payload_bytes(n_qubits);
    if expected != Some(payload_bytes) {
        return Err(SnapshotError::HeaderInconsistent {
            n_qubits,
            expected: expected.unwrap_or(u64::MAX),
            got: payload_bytes,
        });
    }
    let total = HEADER_LEN + payload_bytes;
    if file_len != total {
        return Err(SnapshotError::Truncated { expected: total, got: file_len });
    }
    let _ = path;
    Ok(SnapshotHeader {
        format_version: version,
        n_qubits: n_qubits as usize,
        payload_bytes,
        digest: SnapshotDigest(header[20..52].try_into().unwrap()),
    })
}

/// Reads only the header; the payload is never touched.
pub fn snapshot_info(path: &Path) -> Result<SnapshotHeader, SnapshotError> {
    let mut file = File::open(path)?;
    read_header(&mut file, path)
}

/// Loads and verifies a snapshot: digest must match, norm^2 within 1e-6 of 1.
pub fn load_snapshot(path: &Path) -> Result<StateVector, SnapshotError> {
    let mut file = File::open(path)?;
    let header = read_header(&mut file, path)?;
    let n_amps = 1usize << header.n_qubits;

    let mut reader = BufReader::new(file);
    let mut amps = Vec::with_capacity(n_amps);
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; IO_CHUNK_AMPS * 16];
    let mut remaining = header.payload_bytes as usize;
    while remaining > 0 {
        let take = remaining.min(buf.len());
        reader.read_exact(&mut buf[..take])?;
        hasher.update(&buf[..take]);
        for pair in buf[..take].chunks_exact(16) {
            let re = f64::from_le_bytes(pair[0..8].try_into().unwrap());
            let im = f64::from_le_bytes(pair[8..16].try_into().unwrap());
            amps.push(Complex64::new(re, im));
        }
        remaining -= take;
    }
    if SnapshotDigest(hasher.finalize().into()) != header.digest {
        return Err(SnapshotError::DigestMismatch);
    }
    let state = StateVector::from_amps(header.n_qubits, amps)
        .expect("length checked against header");
    let norm_sqr = state.norm_sqr();
    if (norm_sqr - 1.0).abs() > 1e-6 {
        return Err(SnapshotError::BadNorm { norm_sqr });
    }
    Ok(state)
}
