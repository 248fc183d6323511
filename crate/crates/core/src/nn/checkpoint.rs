//! `FDDNN001` model checkpoints.
//!
//! Little-endian:
//!
//! ```text
//! magic      8 bytes  "FDDNN001"
//! version    u32      1
//! rank       u32      input rank, followed by `rank` x u32 dims
//! n_layers   u32
//! n_layers x layer record:
//!   kind       u32  0 dense, 1 conv1d, 2 avg_pool1d, 3 flatten, 4 reshape
//!   activation u32  0 linear, 1 relu
//!   p0, p1     u32  dense: units, 0 | conv1d: filters, kernel | pool: size, 0
//!   ndims      u32  reshape target rank (0 otherwise), then ndims x u32
//! weights: per layer, weight tensor then bias as f32, in layer order
//! ```

use std::fs;
use std::path::Path;

use byteorder::{ByteOrder, LittleEndian, WriteBytesExt};

use super::layer::{Activation, LayerKind, LayerSpec};
use super::model::NetworkModel;
use crate::error::{Error, FormatError, Result};

pub const MAGIC: &[u8; 8] = b"FDDNN001";
pub const VERSION: u32 = 1;

fn put(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v)
        .map_err(|_| Error::from(FormatError::InvalidField(format!("{v} exceeds u32"))))?;
    out.write_u32::<LittleEndian>(v).unwrap();
    Ok(())
}

pub fn encode(model: &NetworkModel) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(64 + 4 * model.num_params());
    out.extend_from_slice(MAGIC);
    put(&mut out, VERSION as usize)?;
    put(&mut out, model.input_shape().len())?;
    for &d in model.input_shape() {
        put(&mut out, d)?;
    }
    put(&mut out, model.layers().len())?;
    for layer in model.layers() {
        let spec = &layer.spec;
        let (kind, p0, p1, dims): (usize, usize, usize, &[usize]) = match &spec.kind {
            LayerKind::Dense { units } => (0, *units, 0, &[]),
            LayerKind::Conv1d {
                filters,
                kernel_size,
            } => (1, *filters, *kernel_size, &[]),
            LayerKind::AvgPool1d { pool_size } => (2, *pool_size, 0, &[]),
            LayerKind::Flatten => (3, 0, 0, &[]),
            LayerKind::Reshape { dims } => (4, 0, 0, dims.as_slice()),
        };
        put(&mut out, kind)?;
        put(
            &mut out,
            match spec.activation {
                Activation::Linear => 0,
                Activation::Relu => 1,
            },
        )?;
        put(&mut out, p0)?;
        put(&mut out, p1)?;
        put(&mut out, dims.len())?;
        for &d in dims {
            put(&mut out, d)?;
        }
    }
    for layer in model.layers() {
        for &w in layer.weights.iter().chain(&layer.bias) {
            out.write_f32::<LittleEndian>(w as f32).unwrap();
        }
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn u32(&mut self) -> Result<usize> {
        if self.pos + 4 > self.buf.len() {
            return Err(FormatError::Truncated {
                needed: self.pos + 4,
                available: self.buf.len(),
            }
            .into());
        }
        let v = LittleEndian::read_u32(&self.buf[self.pos..]);
        self.pos += 4;
        Ok(v as usize)
    }
}

pub fn decode(bytes: &[u8]) -> Result<NetworkModel> {
    if bytes.len() < 8 || &bytes[..8] != MAGIC {
        return Err(FormatError::BadMagic {
            expected: String::from_utf8_lossy(MAGIC).into_owned(),
            found: String::from_utf8_lossy(&bytes[..bytes.len().min(8)]).into_owned(),
        }
        .into());
    }
    let mut r = Reader { buf: bytes, pos: 8 };
    let version = r.u32()? as u32;
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion(version).into());
    }
    let rank = r.u32()?;
    let input_shape = (0..rank).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
    let n_layers = r.u32()?;
    let mut specs = Vec::with_capacity(n_layers);
    for i in 0..n_layers {
        let kind = r.u32()?;
        let activation = match r.u32()? {
            0 => Activation::Linear,
            1 => Activation::Relu,
            a => {
                return Err(FormatError::InvalidField(format!("layer {i}: activation {a}")).into())
            }
        };
        let p0 = r.u32()?;
        let p1 = r.u32()?;
        let ndims = r.u32()?;
        let dims = (0..ndims).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let kind = match kind {
            0 => LayerKind::Dense { units: p0 },
            1 => LayerKind::Conv1d {
                filters: p0,
                kernel_size: p1,
            },
            2 => LayerKind::AvgPool1d { pool_size: p0 },
            3 => LayerKind::Flatten,
            4 => LayerKind::Reshape { dims },
            k => return Err(FormatError::InvalidField(format!("layer {i}: kind {k}")).into()),
        };
        specs.push(LayerSpec { kind, activation });
    }
    let mut model = NetworkModel::new(input_shape, specs)
        .map_err(|e| FormatError::DimensionMismatch(e.to_string()))?;
    let needed = r.pos + 4 * model.num_params();
    if needed > bytes.len() {
        return Err(FormatError::Truncated {
            needed,
            available: bytes.len(),
        }
        .into());
    }
    let mut pos = r.pos;
    for layer in model.layers_mut() {
        for w in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
            *w = LittleEndian::read_f32(&bytes[pos..]) as f64;
            pos += 4;
        }
    }
    if pos != bytes.len() {
        return Err(FormatError::TrailingData(bytes.len() - pos).into());
    }
    Ok(model)
}

pub fn save(model: &NetworkModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(model)?).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<NetworkModel> {
    let path = path.as_ref();
    decode(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::arch::{build_conv_net, build_los_net};

    fn as_f32(model: &NetworkModel) -> NetworkModel {
        let mut m = model.clone();
        for l in m.layers_mut() {
            for w in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *w = *w as f32 as f64;
            }
        }
        m
    }

    #[test]
    fn round_trip_at_f32() {
        for model in [
            build_los_net().with_init(4),
            build_conv_net(64, 2, &[8, 8]).unwrap().with_init(5),
        ] {
            let back = decode(&encode(&model).unwrap()).unwrap();
            assert_eq!(back, as_f32(&model));
        }
    }

    #[test]
    fn corrupt_checkpoints() {
        let bytes = encode(&build_los_net()).unwrap();
        let mut bad = bytes.clone();
        bad[3] = b'X';
        assert!(matches!(decode(&bad), Err(Error::Format(FormatError::BadMagic { .. }))));
        assert!(matches!(
            decode(&bytes[..bytes.len() - 1]),
            Err(Error::Format(FormatError::Truncated { .. }))
        ));
        let mut long = bytes.clone();
        long.extend_from_slice(&[0; 4]);
        assert!(matches!(decode(&long), Err(Error::Format(FormatError::TrailingData(4)))));
    }
}
