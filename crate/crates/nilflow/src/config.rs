//! On-disk formats: algebra, metric, lattice and family description files.
//!
//! Matrices are stored as flat row-major arrays of decimal floats.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraVector, TwoStepAlgebra};
use crate::error::{Error, Result};
use crate::heisenberg;
use crate::integrals::FirstIntegral;
use crate::lattice::Lattice;
use crate::pmetric::{self, PMetric};

fn matrix_from_flat(rows: usize, cols: usize, data: &[f64], what: &str) -> Result<DMatrix<f64>> {
    if data.len() != rows * cols {
        return Err(Error::Config(format!(
            "{what}: expected {rows}x{cols} = {} entries, got {}",
            rows * cols,
            data.len()
        )));
    }
    Ok(DMatrix::from_row_slice(rows, cols, data))
}

/// Algebra file: `{ "dim_v": .., "dim_z": .., "j_mats": [[..]], "metric": [..] }`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlgebraFile {
    pub dim_v: usize,
    pub dim_z: usize,
    /// One flat row-major `dim_v x dim_v` matrix per central direction.
    pub j_mats: Vec<Vec<f64>>,
    /// Optional flat row-major `(dim_v + dim_z)^2` matrix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<f64>>,
}

impl AlgebraFile {
    pub fn build(&self) -> Result<TwoStepAlgebra> {
        let j_mats = self
            .j_mats
            .iter()
            .enumerate()
            .map(|(i, flat)| {
                matrix_from_flat(self.dim_v, self.dim_v, flat, &format!("j_mats[{i}]"))
            })
            .collect::<Result<Vec<_>>>()?;
        match &self.metric {
            Some(flat) => {
                let d = self.dim_v + self.dim_z;
                let metric = matrix_from_flat(d, d, flat, "metric")?;
                TwoStepAlgebra::with_metric(self.dim_v, self.dim_z, j_mats, metric)
            }
            None => TwoStepAlgebra::new(self.dim_v, self.dim_z, j_mats),
        }
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Metric file: `{ "type": "canonical" }` or
/// `{ "type": "P", "P_tilde": [..], "lambda": .. }`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum MetricFile {
    #[serde(rename = "canonical")]
    Canonical,
    #[serde(rename = "P")]
    P {
        #[serde(rename = "P_tilde")]
        p_tilde: Vec<f64>,
        lambda: f64,
    },
}

impl MetricFile {
    pub fn build(&self, n: usize) -> Result<Option<PMetric>> {
        match self {
            MetricFile::Canonical => Ok(None),
            MetricFile::P { p_tilde, lambda } => {
                let m = matrix_from_flat(2 * n, 2 * n, p_tilde, "P_tilde")?;
                Ok(Some(pmetric::build_p_metric(n, m, *lambda)?))
            }
        }
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Lattice file: `{ "r": [1, 2, ...] }` with the divisibility chain
/// validated at load.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LatticeFile {
    pub r: Vec<u64>,
}

impl LatticeFile {
    pub fn build(&self) -> Result<Lattice> {
        Lattice::new(self.r.clone())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// One custom integral: kind tag plus the data it needs.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IntegralDescriptor {
    Energy,
    LinearCentral { z0: Vec<f64> },
    Quadratic { matrix_v: Vec<f64> },
    KillingTranslation { k: usize },
    KillingRotation { rotation: Vec<f64> },
    SmoothedKilling { k: usize },
}

impl IntegralDescriptor {
    pub fn build(&self, algebra: &TwoStepAlgebra) -> Result<FirstIntegral> {
        match self {
            IntegralDescriptor::Energy => Ok(FirstIntegral::energy()),
            IntegralDescriptor::LinearCentral { z0 } => {
                if z0.len() != algebra.dim_z() {
                    return Err(Error::Config(format!(
                        "z0 must have {} entries",
                        algebra.dim_z()
                    )));
                }
                FirstIntegral::linear_central(algebra, DVector::from_row_slice(z0))
            }
            IntegralDescriptor::Quadratic { matrix_v } => {
                let dv = algebra.dim_v();
                let m = matrix_from_flat(dv, dv, matrix_v, "quadratic matrix")?;
                FirstIntegral::quadratic_on_v(algebra, m)
            }
            IntegralDescriptor::KillingTranslation { k } => {
                FirstIntegral::killing_translation(algebra, *k)
            }
            IntegralDescriptor::KillingRotation { rotation } => {
                let dv = algebra.dim_v();
                let m = matrix_from_flat(dv, dv, rotation, "rotation matrix")?;
                FirstIntegral::killing_rotation(algebra, m)
            }
            IntegralDescriptor::SmoothedKilling { k } => {
                FirstIntegral::smoothed_killing(algebra, *k)
            }
        }
    }

    /// Embeds `AlgebraVector`-valued translations for the generic case.
    pub fn killing_vector(algebra: &TwoStepAlgebra, coords: &[f64]) -> Result<FirstIntegral> {
        if coords.len() != algebra.dim() {
            return Err(Error::Config(format!(
                "killing vector must have {} coordinates",
                algebra.dim()
            )));
        }
        FirstIntegral::killing_vector(
            algebra,
            AlgebraVector::from_vector(DVector::from_row_slice(coords), algebra.dim_v()),
        )
    }
}

/// Family file: the named families or an explicit list of descriptors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilyFile {
    pub family: String,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom: Option<Vec<IntegralDescriptor>>,
}

impl FamilyFile {
    pub fn build(&self) -> Result<Vec<FirstIntegral>> {
        match self.family.as_str() {
            "custom" => {
                let descriptors = self.custom.as_ref().ok_or_else(|| {
                    Error::Config("custom family needs a 'custom' descriptor list".into())
                })?;
                let algebra = heisenberg::canonical_algebra(self.n);
                descriptors.iter().map(|d| d.build(&algebra)).collect()
            }
            token => {
                let kind = heisenberg::FamilyKind::parse(token)?;
                Ok(heisenberg::family(self.n, kind))
            }
        }
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}
