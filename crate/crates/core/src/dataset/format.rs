//! `FDDCSI01` dataset files.
//!
//! Little-endian throughout:
//!
//! ```text
//! magic     8 bytes  "FDDCSI01"
//! version   u32      1
//! M         u32      antennas
//! n_sub     u32      subcarrier grid size (uplink band)
//! n_used    u32      used subcarriers per antenna
//! N         u32      sample count
//! flags     u32      bits 0-1: scenario (0 unspecified, 1 los_scalar, 2 synthetic_env)
//! band_ul   f64 center_freq, f64 bandwidth, u32 n_sub, u32 n_used, u32 cp_len
//! band_dl   same layout
//! N x sample:
//!   3 x f32  UE position (m)
//!   M*n_used x (f32 re, f32 im)  uplink, antenna-major
//!   M*n_used x (f32 re, f32 im)  downlink
//! ```

use std::fs;
use std::path::Path;

use byteorder::{ByteOrder, LittleEndian, WriteBytesExt};
use num_complex::Complex64;

use super::{CsiDataset, CsiSample, Scenario};
use crate::channel::{BandConfig, CsiMatrix};
use crate::error::{Error, FormatError, Result};

pub const MAGIC: &[u8; 8] = b"FDDCSI01";
pub const FORMAT_VERSION: u32 = 1;

const HEADER_LEN: usize = 8 + 6 * 4 + 2 * BAND_LEN;
const BAND_LEN: usize = 2 * 8 + 3 * 4;
const SCENARIO_MASK: u32 = 0b11;

fn scenario_code(s: Scenario) -> u32 {
    match s {
        Scenario::Unspecified => 0,
        Scenario::LosScalar => 1,
        Scenario::SyntheticEnv => 2,
    }
}

fn to_u32(value: usize, what: &str) -> Result<u32> {
    u32::try_from(value)
        .map_err(|_| Error::from(FormatError::InvalidField(format!("{what} {value} exceeds u32"))))
}

fn write_band(out: &mut Vec<u8>, band: &BandConfig) -> Result<()> {
    out.write_f64::<LittleEndian>(band.center_freq).unwrap();
    out.write_f64::<LittleEndian>(band.bandwidth).unwrap();
    out.write_u32::<LittleEndian>(to_u32(band.n_sub, "n_sub")?).unwrap();
    out.write_u32::<LittleEndian>(to_u32(band.n_used, "n_used")?).unwrap();
    out.write_u32::<LittleEndian>(to_u32(band.cp_len, "cp_len")?).unwrap();
    Ok(())
}

fn write_csi(out: &mut Vec<u8>, h: &CsiMatrix) {
    for v in h.as_slice() {
        out.write_f32::<LittleEndian>(v.re as f32).unwrap();
        out.write_f32::<LittleEndian>(v.im as f32).unwrap();
    }
}

pub fn encode(ds: &CsiDataset) -> Result<Vec<u8>> {
    let entries = ds.antennas() * ds.subcarriers();
    let mut out = Vec::with_capacity(HEADER_LEN + ds.len() * (12 + 16 * entries));
    out.extend_from_slice(MAGIC);
    for (value, what) in [
        (FORMAT_VERSION as usize, "version"),
        (ds.antennas(), "M"),
        (ds.band_ul().n_sub, "n_sub"),
        (ds.subcarriers(), "n_used"),
        (ds.len(), "N"),
    ] {
        out.write_u32::<LittleEndian>(to_u32(value, what)?).unwrap();
    }
    out.write_u32::<LittleEndian>(scenario_code(ds.scenario())).unwrap();
    write_band(&mut out, ds.band_ul())?;
    write_band(&mut out, ds.band_dl())?;
    for s in ds.samples() {
        for x in s.ue_position {
            out.write_f32::<LittleEndian>(x as f32).unwrap();
        }
        write_csi(&mut out, &s.h_ul);
        write_csi(&mut out, &s.h_dl);
    }
    Ok(out)
}

pub fn save(ds: &CsiDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(ds)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<CsiDataset> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], FormatError> {
        let available = self.buf.len() - self.pos;
        if n > available {
            return Err(FormatError::Truncated {
                needed: self.pos + n,
                available: self.buf.len(),
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> std::result::Result<u32, FormatError> {
        Ok(LittleEndian::read_u32(self.take(4)?))
    }

    fn f64(&mut self) -> std::result::Result<f64, FormatError> {
        Ok(LittleEndian::read_f64(self.take(8)?))
    }

    fn band(&mut self) -> std::result::Result<BandConfig, FormatError> {
        Ok(BandConfig {
            center_freq: self.f64()?,
            bandwidth: self.f64()?,
            n_sub: self.u32()? as usize,
            n_used: self.u32()? as usize,
            cp_len: self.u32()? as usize,
        })
    }
}

fn read_csi(raw: &[u8], antennas: usize, subcarriers: usize) -> Result<CsiMatrix> {
    let values = raw
        .chunks_exact(8)
        .map(|c| {
            Complex64::new(
                LittleEndian::read_f32(&c[..4]) as f64,
                LittleEndian::read_f32(&c[4..]) as f64,
            )
        })
        .collect();
    CsiMatrix::from_vec(antennas, subcarriers, values)
        .map_err(|e| FormatError::InvalidField(e.to_string()).into())
}

pub fn decode(bytes: &[u8]) -> Result<CsiDataset> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let magic = r.take(8).map_err(|_| FormatError::BadMagic {
        expected: String::from_utf8_lossy(MAGIC).into_owned(),
        found: String::from_utf8_lossy(bytes).into_owned(),
    })?;
    if magic != MAGIC {
        return Err(FormatError::BadMagic {
            expected: String::from_utf8_lossy(MAGIC).into_owned(),
            found: String::from_utf8_lossy(magic).into_owned(),
        }
        .into());
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(FormatError::UnsupportedVersion(version).into());
    }
    let antennas = r.u32()? as usize;
    let n_sub = r.u32()? as usize;
    let n_used = r.u32()? as usize;
    let n = r.u32()? as usize;
    let flags = r.u32()?;
    let band_ul = r.band()?;
    let band_dl = r.band()?;

    if flags & !SCENARIO_MASK != 0 {
        return Err(FormatError::InvalidField(format!("unknown flag bits {flags:#x}")).into());
    }
    let scenario = match flags & SCENARIO_MASK {
        0 => Scenario::Unspecified,
        1 => Scenario::LosScalar,
        2 => Scenario::SyntheticEnv,
        code => {
            return Err(FormatError::InvalidField(format!("scenario code {code}")).into());
        }
    };
    if antennas == 0 {
        return Err(FormatError::DimensionMismatch("zero antennas".into()).into());
    }
    if n_used == 0 || n_used > n_sub {
        return Err(FormatError::DimensionMismatch(format!(
            "n_used {n_used} incompatible with n_sub {n_sub}"
        ))
        .into());
    }
    for (name, band) in [("uplink", &band_ul), ("downlink", &band_dl)] {
        if band.n_sub != n_sub || band.n_used != n_used {
            return Err(FormatError::DimensionMismatch(format!(
                "{name} band grid {}/{} disagrees with header {n_sub}/{n_used}",
                band.n_used, band.n_sub
            ))
            .into());
        }
        band.validate()
            .map_err(|e| FormatError::InvalidField(format!("{name} band: {e}")))?;
    }

    let entries = antennas * n_used;
    let sample_len = 12 + 16 * entries;
    let needed = r.pos + n * sample_len;
    if needed > bytes.len() {
        return Err(FormatError::Truncated {
            needed,
            available: bytes.len(),
        }
        .into());
    }
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let pos = r.take(12)?;
        let ue_position = [
            LittleEndian::read_f32(&pos[0..4]) as f64,
            LittleEndian::read_f32(&pos[4..8]) as f64,
            LittleEndian::read_f32(&pos[8..12]) as f64,
        ];
        let h_ul = read_csi(r.take(8 * entries)?, antennas, n_used)?;
        let h_dl = read_csi(r.take(8 * entries)?, antennas, n_used)?;
        samples.push(CsiSample {
            ue_position,
            h_ul,
            h_dl,
        });
    }
    if r.pos != bytes.len() {
        return Err(FormatError::TrailingData(bytes.len() - r.pos).into());
    }
    CsiDataset::new(band_ul, band_dl, antennas, scenario, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_los_scalar_dataset, LosScalarConfig};

    fn sample_set() -> CsiDataset {
        generate_los_scalar_dataset(&LosScalarConfig::default(), 7, 3).unwrap()
    }

    fn format_err(r: Result<CsiDataset>) -> FormatError {
        match r {
            Err(Error::Format(f)) => f,
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn header_layout_is_fixed() {
        let bytes = encode(&sample_set()).unwrap();
        assert_eq!(&bytes[..8], b"FDDCSI01");
        assert_eq!(LittleEndian::read_u32(&bytes[8..12]), 1);
        assert_eq!(LittleEndian::read_u32(&bytes[12..16]), 1);
        assert_eq!(LittleEndian::read_u32(&bytes[24..28]), 7);
        assert_eq!(LittleEndian::read_u32(&bytes[28..32]), 1);
        assert_eq!(LittleEndian::read_f64(&bytes[32..40]), 1.25e9);
        assert_eq!(bytes.len(), HEADER_LEN + 7 * (12 + 16));
    }

    #[test]
    fn wrong_magic() {
        let mut bytes = encode(&sample_set()).unwrap();
        bytes[0] = b'X';
        assert!(matches!(format_err(decode(&bytes)), FormatError::BadMagic { .. }));
        assert!(matches!(format_err(decode(b"FDD")), FormatError::BadMagic { .. }));
    }

    #[test]
    fn truncated_payload() {
        let bytes = encode(&sample_set()).unwrap();
        let cut = &bytes[..bytes.len() - 5];
        assert!(matches!(format_err(decode(cut)), FormatError::Truncated { .. }));
        let mut inflated = bytes.clone();
        LittleEndian::write_u32(&mut inflated[24..28], 8);
        assert!(matches!(format_err(decode(&inflated)), FormatError::Truncated { .. }));
    }

    #[test]
    fn dimension_mismatch() {
        let mut bytes = encode(&sample_set()).unwrap();
        LittleEndian::write_u32(&mut bytes[16..20], 4);
        assert!(matches!(
            format_err(decode(&bytes)),
            FormatError::DimensionMismatch(_)
        ));
    }

    #[test]
    fn trailing_bytes_and_version() {
        let mut bytes = encode(&sample_set()).unwrap();
        bytes.push(0);
        assert_eq!(format_err(decode(&bytes)), FormatError::TrailingData(1));
        let mut bytes = encode(&sample_set()).unwrap();
        LittleEndian::write_u32(&mut bytes[8..12], 9);
        assert_eq!(format_err(decode(&bytes)), FormatError::UnsupportedVersion(9));
    }
}
