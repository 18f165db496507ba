use std::fs;
use std::path::Path;

use lesr_tensor::Scalar;

use crate::config::ModelConfig;
use crate::graph::{build_model, ModelGraph};
use crate::{ModelError, Result};

const MAGIC: &[u8; 4] = b"LESR";
const VERSION: u32 = 1;

/// One named tensor in a value container: dims in row-major order, values
/// flattened. Rank 0 means a single scalar.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueRecord {
    pub name: String,
    pub dims: Vec<usize>,
    pub values: Vec<f32>,
}

impl ValueRecord {
    pub fn scalar(name: impl Into<String>, value: f32) -> Self {
        ValueRecord {
            name: name.into(),
            dims: Vec::new(),
            values: vec![value],
        }
    }
}

/// Writes records to a little-endian container: magic, format version,
/// record count, then per record the name, rank, dims, and f32 values.
pub fn save_values(path: impl AsRef<Path>, records: &[ValueRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&u32::try_from(records.len()).map_err(|_| too_big(path, "record count"))?.to_le_bytes());
    for rec in records {
        let name = rec.name.as_bytes();
        let name_len = u16::try_from(name.len()).map_err(|_| too_big(path, "name length"))?;
        buf.extend_from_slice(&name_len.to_le_bytes());
        buf.extend_from_slice(name);
        let rank = u8::try_from(rec.dims.len()).map_err(|_| too_big(path, "rank"))?;
        buf.push(rank);
        let mut expect = 1usize;
        for &d in &rec.dims {
            buf.extend_from_slice(&u32::try_from(d).map_err(|_| too_big(path, "dimension"))?.to_le_bytes());
            expect *= d;
        }
        if rec.values.len() != expect {
            return Err(ModelError::Checkpoint {
                path: path.display().to_string(),
                detail: format!(
                    "record {} has {} values but dims {:?} imply {}",
                    rec.name,
                    rec.values.len(),
                    rec.dims,
                    expect
                ),
            });
        }
        for v in &rec.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, buf)?;
    Ok(())
}

/// Reads a container written by [`save_values`], checking the magic, the
/// version, and that the file holds exactly the declared records.
pub fn load_values(path: impl AsRef<Path>) -> Result<Vec<ValueRecord>> {
    let path = path.as_ref();
    let buf = fs::read(path)?;
    let mut r = Reader { buf: &buf, pos: 0 };
    let err = |detail: String| ModelError::Checkpoint {
        path: path.display().to_string(),
        detail,
    };

    let magic = r.bytes(4).map_err(&err)?;
    if magic != MAGIC {
        return Err(err(format!("bad magic {magic:?}, expected {MAGIC:?}")));
    }
    let version = r.u32().map_err(&err)?;
    if version != VERSION {
        return Err(err(format!("unsupported format version {version}, expected {VERSION}")));
    }
    let count = r.u32().map_err(&err)? as usize;
    let mut records = Vec::with_capacity(count);
    for i in 0..count {
        let in_record = |detail: String| format!("record {i}: {detail}");
        let name_len = r.u16().map_err(|d| err(in_record(d)))? as usize;
        let name_bytes = r.bytes(name_len).map_err(|d| err(in_record(d)))?;
        let name = std::str::from_utf8(name_bytes)
            .map_err(|_| err(in_record("name is not valid utf-8".into())))?
            .to_string();
        let rank = r.u8().map_err(|d| err(in_record(d)))? as usize;
        let mut dims = Vec::with_capacity(rank);
        let mut len = 1usize;
        for _ in 0..rank {
            let d = r.u32().map_err(|d| err(in_record(d)))? as usize;
            len = len
                .checked_mul(d)
                .ok_or_else(|| err(in_record("dimension product overflows".into())))?;
            dims.push(d);
        }
        let raw = r.bytes(len * 4).map_err(|d| err(in_record(d)))?;
        let values = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        records.push(ValueRecord { name, dims, values });
    }
    if r.pos != buf.len() {
        return Err(err(format!(
            "{} trailing bytes after the last record",
            buf.len() - r.pos
        )));
    }
    Ok(records)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn bytes(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        if self.pos + n > self.buf.len() {
            return Err(format!(
                "truncated: wanted {n} bytes at offset {}, file has {}",
                self.pos,
                self.buf.len()
            ));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> std::result::Result<u8, String> {
        Ok(self.bytes(1)?[0])
    }

    fn u16(&mut self) -> std::result::Result<u16, String> {
        let b = self.bytes(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        let b = self.bytes(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

fn too_big(path: &Path, what: &str) -> ModelError {
    ModelError::Checkpoint {
        path: path.display().to_string(),
        detail: format!("{what} exceeds the format limit"),
    }
}

/// Saves all model parameters in registration order.
pub fn save_checkpoint<T: Scalar>(graph: &ModelGraph<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut records = Vec::new();
    graph.visit_params(|p| {
        records.push(ValueRecord {
            name: p.name,
            dims: p.dims,
            values: p.values.iter().map(|&v| Scalar::to_f64(v) as f32).collect(),
        });
    });
    save_values(path, &records)
}

/// Builds a model for `config` and fills its parameters from a checkpoint,
/// requiring the stored records to match the model's parameters one for one
/// in name, order, and shape.
pub fn load_checkpoint<T: Scalar>(path: impl AsRef<Path>, config: &ModelConfig) -> Result<ModelGraph<T>> {
    let records = load_values(&path)?;
    let mut graph = build_model::<T>(config, 0)?;

    let mut expected = Vec::new();
    graph.visit_params(|p| expected.push((p.name, p.dims, p.values.len())));
    if records.len() != expected.len() {
        return Err(ModelError::CheckpointMismatch(format!(
            "parameter count {} does not match the {} parameters of a {} model",
            records.len(),
            expected.len(),
            config.variant
        )));
    }
    for (rec, (name, dims, _)) in records.iter().zip(&expected) {
        if &rec.name != name {
            return Err(ModelError::CheckpointMismatch(format!(
                "parameter {} where {} was expected",
                rec.name, name
            )));
        }
        if &rec.dims != dims {
            return Err(ModelError::CheckpointMismatch(format!(
                "{} has dims {:?}, expected {:?}",
                rec.name, rec.dims, dims
            )));
        }
    }

    let mut idx = 0;
    graph.store_mut().visit_params_mut(|name, values| {
        let rec = &records[idx];
        debug_assert_eq!(rec.name, name);
        debug_assert_eq!(rec.values.len(), values.len());
        for (dst, &src) in values.iter_mut().zip(&rec.values) {
            *dst = T::from_f64(src as f64);
        }
        idx += 1;
    });
    Ok(graph)
}
