use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{MuskatError, Result};
use crate::geometry::HThetaState;

/// Version of the CSV column layouts, bumped whenever a column changes.
pub const CSV_LAYOUT_VERSION: u32 = 1;
/// Version of the snapshot encodings.
pub const SNAPSHOT_VERSION: u32 = 1;
const SNAPSHOT_MAGIC: &[u8; 4] = b"MSKT";

/// Resolves the output directory: the environment override wins over the
/// configured value.
pub fn output_dir(configured: &str) -> PathBuf {
    match std::env::var("MUSKAT_OUT_DIR") {
        Ok(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(configured),
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| MuskatError::Io(format!("{}: {e}", dir.display())))
}

fn header_comment(config_hash: &str) -> String {
    format!(
        "# muskat {} layout={} config_sha256={}\n",
        env!("CARGO_PKG_VERSION"),
        CSV_LAYOUT_VERSION,
        config_hash
    )
}

/// Streams CSV rows to a file that starts with a versioned comment line.
pub struct CsvWriter {
    out: BufWriter<fs::File>,
    path: PathBuf,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &str, config_hash: &str) -> Result<Self> {
        let file = fs::File::create(path).map_err(|e| MuskatError::Io(format!("{}: {e}", path.display())))?;
        let mut out = BufWriter::new(file);
        out.write_all(header_comment(config_hash).as_bytes())?;
        writeln!(out, "{header}")?;
        Ok(Self {
            out,
            path: path.to_path_buf(),
        })
    }

    pub fn row(&mut self, line: &str) -> Result<()> {
        writeln!(self.out, "{line}")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<PathBuf> {
        self.out.flush()?;
        Ok(self.path)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| MuskatError::Io(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct JsonSnapshot<'a> {
    format_version: u32,
    config_sha256: &'a str,
    state: &'a HThetaState,
}

pub fn write_snapshot_json(path: &Path, state: &HThetaState, config_hash: &str) -> Result<()> {
    write_json(
        path,
        &JsonSnapshot {
            format_version: SNAPSHOT_VERSION,
            config_sha256: config_hash,
            state,
        },
    )
}

/// Little-endian layout: magic, version (u32), config hash (32 bytes),
/// n (u64), t, gamma, then `n` values of `h` and `n` of `theta` (f64).
pub fn encode_snapshot(state: &HThetaState, config_hash: &str) -> Vec<u8> {
    let n = state.h.len();
    let mut buf = Vec::with_capacity(60 + 16 * n);
    buf.extend_from_slice(SNAPSHOT_MAGIC);
    buf.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    let mut hash = [0u8; 32];
    for (i, byte) in hash.iter_mut().enumerate() {
        *byte = config_hash
            .get(2 * i..2 * i + 2)
            .and_then(|s| u8::from_str_radix(s, 16).ok())
            .unwrap_or(0);
    }
    buf.extend_from_slice(&hash);
    buf.extend_from_slice(&(n as u64).to_le_bytes());
    buf.extend_from_slice(&state.t.to_le_bytes());
    buf.extend_from_slice(&state.gamma.to_le_bytes());
    for v in state.h.iter().chain(&state.theta) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<HThetaState> {
    let bad = |m: &str| MuskatError::Parse {
        row: 0,
        message: format!("snapshot: {m}"),
    };
    if bytes.len() < 64 || &bytes[..4] != SNAPSHOT_MAGIC {
        return Err(bad("missing header"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != SNAPSHOT_VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let n = u64::from_le_bytes(bytes[40..48].try_into().unwrap()) as usize;
    let f = |off: usize| f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
    if bytes.len() != 64 + 16 * n {
        return Err(bad("truncated payload"));
    }
    let vals: Vec<f64> = (0..2 * n).map(|i| f(64 + 8 * i)).collect();
    Ok(HThetaState {
        h: vals[..n].to_vec(),
        theta: vals[n..].to_vec(),
        t: f(48),
        gamma: f(56),
    })
}

pub fn write_snapshot_binary(path: &Path, state: &HThetaState, config_hash: &str) -> Result<()> {
    fs::write(path, encode_snapshot(state, config_hash))
        .map_err(|e| MuskatError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_snapshot_roundtrip() {
        let s = HThetaState {
            h: vec![1.0, -2.5, 3.25],
            theta: vec![0.0, 1e-300, f64::MAX],
            gamma: 0.125,
            t: 7.0,
        };
        let hash = "ab".repeat(32);
        let bytes = encode_snapshot(&s, &hash);
        assert_eq!(&bytes[8..10], &[0xab, 0xab]);
        assert_eq!(decode_snapshot(&bytes).unwrap(), s);
        assert!(decode_snapshot(&bytes[..bytes.len() - 1]).is_err());
    }
}
