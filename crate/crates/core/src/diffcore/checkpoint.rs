//! Flat checkpoint format: one line of JSON header terminated by `\n`,
//! followed by every parameter value as little-endian `f64`, in parameter
//! order. The header must carry a `param_count` field.

use std::io::{BufRead, Write};

use serde::{de::DeserializeOwned, Serialize};

use super::param::Parameterized;
use crate::error::{Error, Result};

pub fn write_checkpoint<W, H, P>(mut w: W, header: &H, model: &P) -> Result<()>
where
    W: Write,
    H: Serialize,
    P: Parameterized + ?Sized,
{
    let mut json = serde_json::to_value(header)?;
    let values = model.flat_values();
    match json.as_object_mut() {
        Some(obj) => {
            obj.insert("param_count".into(), values.len().into());
        }
        None => return Err(Error::Checkpoint("header must be a JSON object".into())),
    }
    serde_json::to_writer(&mut w, &json)?;
    w.write_all(b"\n")?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a header and the raw values. The caller builds the model from the
/// header and loads the values with [`Parameterized::load_flat`].
pub fn read_checkpoint<R, H>(r: R) -> Result<(H, Vec<f64>)>
where
    R: BufRead,
    H: DeserializeOwned,
{
    let mut r = r;
    let mut line = Vec::new();
    r.read_until(b'\n', &mut line)?;
    if line.last() != Some(&b'\n') {
        return Err(Error::Checkpoint("missing header terminator".into()));
    }
    let raw: serde_json::Value = serde_json::from_slice(&line[..line.len() - 1])?;
    let count = raw
        .get("param_count")
        .and_then(|c| c.as_u64())
        .ok_or_else(|| Error::Checkpoint("header lacks param_count".into()))? as usize;
    let header: H = serde_json::from_value(raw)?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != count * 8 {
        return Err(Error::Checkpoint(format!(
            "expected {} value bytes, found {}",
            count * 8,
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((header, values))
}
