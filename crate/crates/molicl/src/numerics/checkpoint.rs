//! Versioned checkpoint container: the `GCKP\x01` magic, a length-prefixed
//! JSON metadata string, then named tensors as length-prefixed name, u32
//! rows, u32 cols, and row-major little-endian f64 values, sorted by name.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{NumericsError, ParamStore, Tensor2};
use crate::binio;

const MAGIC: &[u8] = b"GCKP\x01";

/// Write parameter values (not optimizer state) with a metadata string.
/// Non-finite values are rejected.
pub fn save_checkpoint(path: &Path, store: &ParamStore, meta: &str) -> Result<(), NumericsError> {
    for (name, param) in store.params_iter() {
        if !param.value.is_finite() {
            return Err(NumericsError::NonFiniteTensor(name.clone()));
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    let meta_bytes = meta.as_bytes();
    binio::write_u32(&mut w, meta_bytes.len() as u32)?;
    w.write_all(meta_bytes)?;
    binio::write_u32(&mut w, store.len() as u32)?;
    for (name, param) in store.params_iter() {
        binio::write_str(&mut w, name)?;
        binio::write_u32(&mut w, param.value.rows() as u32)?;
        binio::write_u32(&mut w, param.value.cols() as u32)?;
        for v in param.value.data() {
            binio::write_f64(&mut w, *v)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a checkpoint back as a fresh store (zeroed gradients and moments)
/// plus its metadata string.
pub fn load_checkpoint(path: &Path) -> Result<(ParamStore, String), NumericsError> {
    let mut r = BufReader::new(File::open(path)?);
    if !binio::expect_magic(&mut r, MAGIC)? {
        return Err(NumericsError::BadMagic);
    }
    let meta_len = binio::read_u32(&mut r)? as usize;
    let mut meta_bytes = vec![0u8; meta_len];
    r.read_exact(&mut meta_bytes)?;
    let meta = String::from_utf8(meta_bytes)
        .map_err(|e| NumericsError::Io(format!("metadata is not utf-8: {e}")))?;
    let count = binio::read_u32(&mut r)? as usize;
    let mut store = ParamStore::new(0);
    for _ in 0..count {
        let name = binio::read_str(&mut r)?;
        let rows = binio::read_u32(&mut r)? as usize;
        let cols = binio::read_u32(&mut r)? as usize;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            data.push(binio::read_f64(&mut r)?);
        }
        let tensor = Tensor2::new(rows, cols, data);
        if !tensor.is_finite() {
            return Err(NumericsError::NonFiniteTensor(name));
        }
        store.insert(name, tensor);
    }
    Ok((store, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_values_and_meta() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.gckp");
        let mut store = ParamStore::new(3);
        store.insert("layer.w", Tensor2::new(2, 2, vec![1.0, -2.5, 0.0, 4.0]));
        store.insert("layer.b", Tensor2::new(1, 2, vec![0.1, 0.2]));
        save_checkpoint(&path, &store, r#"{"kind":"test"}"#).unwrap();
        let (back, meta) = load_checkpoint(&path).unwrap();
        assert_eq!(meta, r#"{"kind":"test"}"#);
        assert_eq!(back.get("layer.w"), store.get("layer.w"));
        assert_eq!(back.get("layer.b"), store.get("layer.b"));
    }

    #[test]
    fn non_finite_values_are_rejected_on_save() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.gckp");
        let mut store = ParamStore::new(0);
        store.insert("w", Tensor2::new(1, 1, vec![f64::NAN]));
        assert!(matches!(
            save_checkpoint(&path, &store, "{}"),
            Err(NumericsError::NonFiniteTensor(_))
        ));
    }

    #[test]
    fn bad_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.gckp");
        std::fs::write(&path, b"WHAT\x01...").unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(NumericsError::BadMagic)
        ));
    }
}
