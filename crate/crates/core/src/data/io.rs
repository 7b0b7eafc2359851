//! Count-prefixed little-endian key files: an 8-byte `u64` count, then
//! `count` 8-byte keys.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::{Error, Key, Result};

pub fn write_keys(path: impl AsRef<Path>, keys: &[Key]) -> Result<()> {
    let path = path.as_ref();
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    write_keys_to(&mut w, keys).map_err(io)?;
    w.flush().map_err(io)
}

pub fn write_keys_to<W: Write>(w: &mut W, keys: &[Key]) -> std::io::Result<()> {
    w.write_all(&(keys.len() as u64).to_le_bytes())?;
    for &k in keys {
        w.write_all(&k.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_keys(path: impl AsRef<Path>) -> Result<Vec<Key>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_keys_from_bytes(&bytes, path)
}

/// Decodes a key file already in memory; `path` is used for error context.
pub fn read_keys_from_bytes(bytes: &[u8], path: &Path) -> Result<Vec<Key>> {
    let actual = bytes.len() as u64;
    let Some((header, body)) = bytes.split_first_chunk::<8>() else {
        return Err(Error::MissingHeader {
            path: path.to_path_buf(),
            actual,
        });
    };
    let count = u64::from_le_bytes(*header);
    let expected = 8u128 + 8 * count as u128;
    if expected != actual as u128 {
        let expected = u64::try_from(expected).unwrap_or(u64::MAX);
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            count,
            expected,
            actual,
            offset: expected.min(actual),
        });
    }
    Ok(body.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect())
}
