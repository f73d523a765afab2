//! Declarative description of the built-in model families.

use serde::{Deserialize, Serialize};

use super::{
    AnalyticModel, BumpedDensity, CylindricalBase, CylindricalBumpDensity, GaussianDensity, ProductExpDensity,
};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// `π ∝ e^{-|x|²}`, drift `-x`.
    Ou { d: usize },
    ProductExp { eta: f64, d: usize },
    Bumped {
        eta: f64,
        d: usize,
        m_t: f64,
        h: Vec<f64>,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    Cylindrical { eta: f64, d: usize },
    CylindricalBump { eta: f64, d: usize, m_t: f64, r_min: f64, r_max: f64, h: Vec<f64> },
}

impl ModelSpec {
    pub fn dim(&self) -> usize {
        match self {
            Self::Ou { d }
            | Self::ProductExp { d, .. }
            | Self::Bumped { d, .. }
            | Self::Cylindrical { d, .. }
            | Self::CylindricalBump { d, .. } => *d,
        }
    }

    pub fn build(&self) -> Result<AnalyticModel> {
        Ok(match self {
            Self::Ou { d } => {
                if *d == 0 {
                    return Err(crate::Error::Parameter("d must be positive".into()));
                }
                AnalyticModel::new(GaussianDensity::new(*d))
            }
            Self::ProductExp { eta, d } => AnalyticModel::new(ProductExpDensity::new(*eta, *d)?),
            Self::Bumped { eta, d, m_t, h, center } => {
                let base = ProductExpDensity::new(*eta, *d)?;
                let center = center.clone().unwrap_or_else(|| vec![0.0; *d]);
                AnalyticModel::new(BumpedDensity::new(base, *m_t, h.clone(), center)?)
            }
            Self::Cylindrical { eta, d } => AnalyticModel::new(CylindricalBase::new(*eta, *d)?),
            Self::CylindricalBump { eta, d, m_t, r_min, r_max, h } => {
                let base = CylindricalBase::new(*eta, *d)?;
                AnalyticModel::new(CylindricalBumpDensity::new(base, *m_t, *r_min, *r_max, h.clone())?)
            }
        })
    }
}
