//! Covariance of cluster-period means under the three random-effects models.
//!
//! Each model makes the `T×T` covariance of one cluster's period means
//! compound symmetric, so it is fully described by a diagonal `d` and an
//! off-diagonal `o`. Downstream code only ever sees that pair.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CovarianceModel {
    /// Repeated cross-sections: cluster intercept plus residual.
    CrossSectional,
    /// Cohort: adds an individual intercept shared across periods.
    Cohort,
    /// Nested exchangeable: adds a cluster-by-period effect.
    NestedExchangeable,
}

impl CovarianceModel {
    pub fn short_name(self) -> &'static str {
        match self {
            CovarianceModel::CrossSectional => "cs",
            CovarianceModel::Cohort => "cohort",
            CovarianceModel::NestedExchangeable => "nex",
        }
    }
}

/// Variance components on the outcome scale.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RawComponents {
    pub sigma_alpha_sq: f64,
    /// Individual intercept; cohort model only.
    pub sigma_psi_sq: f64,
    /// Cluster-period effect; nested exchangeable model only.
    pub sigma_nu_sq: f64,
    pub sigma_e_sq: f64,
}

impl RawComponents {
    pub fn validate(&self, model: CovarianceModel) -> Result<()> {
        let all = [
            ("sigma_alpha_sq", self.sigma_alpha_sq),
            ("sigma_psi_sq", self.sigma_psi_sq),
            ("sigma_nu_sq", self.sigma_nu_sq),
            ("sigma_e_sq", self.sigma_e_sq),
        ];
        for (name, v) in all {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if self.sigma_e_sq <= 0.0 {
            return Err(Error::InvalidParameter("sigma_e_sq must be > 0".into()));
        }
        if model != CovarianceModel::Cohort && self.sigma_psi_sq != 0.0 {
            return Err(Error::InvalidParameter(
                "sigma_psi_sq only applies to the cohort model".into(),
            ));
        }
        if model != CovarianceModel::NestedExchangeable && self.sigma_nu_sq != 0.0 {
            return Err(Error::InvalidParameter(
                "sigma_nu_sq only applies to the nested exchangeable model".into(),
            ));
        }
        Ok(())
    }

    /// Total individual-level outcome variance σ_y².
    pub fn total(&self) -> f64 {
        self.sigma_alpha_sq + self.sigma_psi_sq + self.sigma_nu_sq + self.sigma_e_sq
    }
}

/// Correlation parameterization with σ_y² = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StandardizedParams {
    CrossSectional { rho_w: f64 },
    Cohort { rho_w: f64, pi: f64 },
    NestedExchangeable { rho_w: f64, rho_a: f64 },
}

impl StandardizedParams {
    pub fn model(&self) -> CovarianceModel {
        match self {
            StandardizedParams::CrossSectional { .. } => CovarianceModel::CrossSectional,
            StandardizedParams::Cohort { .. } => CovarianceModel::Cohort,
            StandardizedParams::NestedExchangeable { .. } => CovarianceModel::NestedExchangeable,
        }
    }

    /// Within-period ICC.
    pub fn rho_w(&self) -> f64 {
        match *self {
            StandardizedParams::CrossSectional { rho_w }
            | StandardizedParams::Cohort { rho_w, .. }
            | StandardizedParams::NestedExchangeable { rho_w, .. } => rho_w,
        }
    }

    /// Across-period correlation implied by the model. For the cohort model
    /// this is the same-individual correlation ρ_w + π(1−ρ_w).
    pub fn rho_a(&self) -> f64 {
        match *self {
            StandardizedParams::CrossSectional { rho_w } => rho_w,
            StandardizedParams::Cohort { rho_w, pi } => rho_w + pi * (1.0 - rho_w),
            StandardizedParams::NestedExchangeable { rho_a, .. } => rho_a,
        }
    }

    /// Individual autocorrelation; zero outside the cohort model.
    pub fn pi(&self) -> f64 {
        match *self {
            StandardizedParams::Cohort { pi, .. } => pi,
            _ => 0.0,
        }
    }

    /// Cluster autocorrelation ρ_a/ρ_w for the nested exchangeable model,
    /// 1 for the cross-sectional model.
    pub fn cac(&self) -> Option<f64> {
        match *self {
            StandardizedParams::CrossSectional { .. } => Some(1.0),
            StandardizedParams::NestedExchangeable { rho_w, rho_a } if rho_w > 0.0 => {
                Some(rho_a / rho_w)
            }
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rho_w = self.rho_w();
        if !(0.0..1.0).contains(&rho_w) {
            return Err(Error::InvalidParameter(format!(
                "rho_w must lie in [0, 1), got {rho_w}"
            )));
        }
        match *self {
            StandardizedParams::CrossSectional { .. } => Ok(()),
            StandardizedParams::Cohort { pi, .. } => {
                if (0.0..=1.0).contains(&pi) {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "pi must lie in [0, 1], got {pi}"
                    )))
                }
            }
            StandardizedParams::NestedExchangeable { rho_a, .. } => {
                if (0.0..=rho_w).contains(&rho_a) {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "rho_a must lie in [0, rho_w = {rho_w}], got {rho_a}"
                    )))
                }
            }
        }
    }
}

/// Compound-symmetric `T×T` covariance of one cluster's period means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompoundSymmetry {
    diag: f64,
    offdiag: f64,
}

impl CompoundSymmetry {
    pub fn new(diag: f64, offdiag: f64) -> Result<Self> {
        if !diag.is_finite() || !offdiag.is_finite() || offdiag < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "compound symmetry needs finite d and o >= 0, got ({diag}, {offdiag})"
            )));
        }
        if diag <= offdiag {
            return Err(Error::SingularCovariance { diag, offdiag });
        }
        Ok(Self { diag, offdiag })
    }

    pub fn diag(&self) -> f64 {
        self.diag
    }

    pub fn offdiag(&self) -> f64 {
        self.offdiag
    }

    /// Effective within-cluster-period variance σ_c² = d − o.
    pub fn sigma_c_sq(&self) -> f64 {
        self.diag - self.offdiag
    }

    /// Effective cluster variance σ_α² = o.
    pub fn sigma_alpha_sq(&self) -> f64 {
        self.offdiag
    }
}

fn check_cluster_size(n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "cluster-period size N must be >= 1".into(),
        ));
    }
    Ok(f64::from(n))
}

/// `(d, o)` in standardized units for `n` individuals per cluster-period.
pub fn cluster_cov_entries(params: &StandardizedParams, n: u32) -> Result<CompoundSymmetry> {
    params.validate()?;
    let n = check_cluster_size(n)?;
    let rho_w = params.rho_w();
    let diag = rho_w + (1.0 - rho_w) / n;
    let offdiag = match *params {
        StandardizedParams::CrossSectional { .. } => rho_w,
        StandardizedParams::Cohort { pi, .. } => rho_w + pi * (1.0 - rho_w) / n,
        StandardizedParams::NestedExchangeable { rho_a, .. } => rho_a,
    };
    CompoundSymmetry::new(diag, offdiag)
}

/// `(d, o)` on the outcome scale.
pub fn raw_cov_entries(
    raw: &RawComponents,
    model: CovarianceModel,
    n: u32,
) -> Result<CompoundSymmetry> {
    raw.validate(model)?;
    let n = check_cluster_size(n)?;
    let sigma_c_sq = raw.sigma_e_sq / n;
    let (diag, offdiag) = match model {
        CovarianceModel::CrossSectional => (raw.sigma_alpha_sq + sigma_c_sq, raw.sigma_alpha_sq),
        CovarianceModel::Cohort => {
            let psi = raw.sigma_psi_sq / n;
            (
                raw.sigma_alpha_sq + sigma_c_sq + psi,
                raw.sigma_alpha_sq + psi,
            )
        }
        CovarianceModel::NestedExchangeable => (
            raw.sigma_alpha_sq + sigma_c_sq + raw.sigma_nu_sq,
            raw.sigma_alpha_sq,
        ),
    };
    CompoundSymmetry::new(diag, offdiag)
}

pub fn standardize(raw: &RawComponents, model: CovarianceModel) -> Result<StandardizedParams> {
    raw.validate(model)?;
    let total = raw.total();
    if total <= 0.0 {
        return Err(Error::InvalidParameter(
            "total outcome variance is zero".into(),
        ));
    }
    let params = match model {
        CovarianceModel::CrossSectional => StandardizedParams::CrossSectional {
            rho_w: raw.sigma_alpha_sq / total,
        },
        CovarianceModel::Cohort => StandardizedParams::Cohort {
            rho_w: raw.sigma_alpha_sq / total,
            pi: raw.sigma_psi_sq / (raw.sigma_psi_sq + raw.sigma_e_sq),
        },
        CovarianceModel::NestedExchangeable => StandardizedParams::NestedExchangeable {
            rho_w: (raw.sigma_alpha_sq + raw.sigma_nu_sq) / total,
            rho_a: raw.sigma_alpha_sq / total,
        },
    };
    Ok(params)
}

/// Components with total variance `sigma_y_sq` that standardize to `params`.
pub fn unstandardize(params: &StandardizedParams, sigma_y_sq: f64) -> Result<RawComponents> {
    params.validate()?;
    if !(sigma_y_sq.is_finite() && sigma_y_sq > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma_y_sq must be > 0, got {sigma_y_sq}"
        )));
    }
    let rho_w = params.rho_w();
    let raw = match *params {
        StandardizedParams::CrossSectional { .. } => RawComponents {
            sigma_alpha_sq: rho_w * sigma_y_sq,
            sigma_e_sq: (1.0 - rho_w) * sigma_y_sq,
            ..Default::default()
        },
        StandardizedParams::Cohort { pi, .. } => RawComponents {
            sigma_alpha_sq: rho_w * sigma_y_sq,
            sigma_psi_sq: pi * (1.0 - rho_w) * sigma_y_sq,
            sigma_e_sq: (1.0 - pi) * (1.0 - rho_w) * sigma_y_sq,
            ..Default::default()
        },
        StandardizedParams::NestedExchangeable { rho_a, .. } => RawComponents {
            sigma_alpha_sq: rho_a * sigma_y_sq,
            sigma_nu_sq: (rho_w - rho_a) * sigma_y_sq,
            sigma_e_sq: (1.0 - rho_w) * sigma_y_sq,
            ..Default::default()
        },
    };
    raw.validate(params.model())?;
    Ok(raw)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Parameterization {
    Standardized(StandardizedParams),
    Raw {
        model: CovarianceModel,
        components: RawComponents,
    },
}

/// Covariance model, its parameters, and the cluster-period size N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSpec {
    pub params: Parameterization,
    pub cluster_size: u32,
}

impl CorrelationSpec {
    pub fn standardized(params: StandardizedParams, cluster_size: u32) -> Self {
        Self {
            params: Parameterization::Standardized(params),
            cluster_size,
        }
    }

    pub fn raw(model: CovarianceModel, components: RawComponents, cluster_size: u32) -> Self {
        Self {
            params: Parameterization::Raw { model, components },
            cluster_size,
        }
    }

    pub fn model(&self) -> CovarianceModel {
        match &self.params {
            Parameterization::Standardized(p) => p.model(),
            Parameterization::Raw { model, .. } => *model,
        }
    }

    /// σ_y² of the scale results are reported on (1 when standardized).
    pub fn outcome_variance(&self) -> f64 {
        match &self.params {
            Parameterization::Standardized(_) => 1.0,
            Parameterization::Raw { components, .. } => components.total(),
        }
    }

    /// Correlation parameters, derived from the components when raw.
    pub fn standardized_params(&self) -> Result<StandardizedParams> {
        match &self.params {
            Parameterization::Standardized(p) => Ok(*p),
            Parameterization::Raw { model, components } => standardize(components, *model),
        }
    }

    pub fn compound_symmetry(&self) -> Result<CompoundSymmetry> {
        match &self.params {
            Parameterization::Standardized(p) => cluster_cov_entries(p, self.cluster_size),
            Parameterization::Raw { model, components } => {
                raw_cov_entries(components, *model, self.cluster_size)
            }
        }
    }
}
