use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex frequency response, antennas x used subcarriers, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiMatrix {
    antennas: usize,
    subcarriers: usize,
    values: Vec<Complex64>,
}

impl CsiMatrix {
    pub fn zeros(antennas: usize, subcarriers: usize) -> Self {
        CsiMatrix {
            antennas,
            subcarriers,
            values: vec![Complex64::new(0.0, 0.0); antennas * subcarriers],
        }
    }

    pub fn from_vec(antennas: usize, subcarriers: usize, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != antennas * subcarriers {
            return Err(Error::shape(
                format!("{antennas}x{subcarriers} = {} values", antennas * subcarriers),
                values.len(),
            ));
        }
        if let Some(bad) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::domain(format!("non-finite CSI entry at index {bad}")));
        }
        Ok(CsiMatrix {
            antennas,
            subcarriers,
            values,
        })
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let antennas = rows.len();
        let subcarriers = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != subcarriers) {
            return Err(Error::shape("rows of equal length", "ragged rows"));
        }
        Self::from_vec(antennas, subcarriers, rows.into_iter().flatten().collect())
    }

    pub fn scalar(value: Complex64) -> Self {
        CsiMatrix {
            antennas: 1,
            subcarriers: 1,
            values: vec![value],
        }
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.antennas, self.subcarriers)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.values
    }

    pub fn row(&self, antenna: usize) -> &[Complex64] {
        &self.values[antenna * self.subcarriers..(antenna + 1) * self.subcarriers]
    }

    pub fn row_mut(&mut self, antenna: usize) -> &mut [Complex64] {
        &mut self.values[antenna * self.subcarriers..(antenna + 1) * self.subcarriers]
    }

    pub fn get(&self, antenna: usize, subcarrier: usize) -> Complex64 {
        self.values[antenna * self.subcarriers + subcarrier]
    }

    /// Squared Frobenius norm.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.energy().sqrt()
    }

    /// Mean per-entry energy.
    pub fn mean_power(&self) -> f64 {
        if self.values.is_empty() {
            0.0
        } else {
            self.energy() / self.values.len() as f64
        }
    }

    /// Hermitian inner product `<self, other> = sum conj(self) * other`.
    pub fn inner(&self, other: &CsiMatrix) -> Complex64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scaled(&self, factor: Complex64) -> CsiMatrix {
        CsiMatrix {
            antennas: self.antennas,
            subcarriers: self.subcarriers,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> CsiMatrix {
        CsiMatrix {
            antennas: self.antennas,
            subcarriers: self.subcarriers,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn ensure_dims(&self, antennas: usize, subcarriers: usize) -> Result<()> {
        if self.dims() != (antennas, subcarriers) {
            return Err(Error::shape(
                format!("{antennas}x{subcarriers}"),
                format!("{}x{}", self.antennas, self.subcarriers),
            ));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}
