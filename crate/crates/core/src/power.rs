//! Wald-test power for treatment effects, the interaction, and contrasts.

use libm::erfc;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::erf::erfc_inv;

use crate::covariance::{CorrelationSpec, CovarianceModel, StandardizedParams};
use crate::design::{DesignGrid, Effect, MeanModel};
use crate::error::{Error, Result};
use crate::variance::{closed_form_covariance, contrast_variance, TreatmentCovariance};

pub const DEFAULT_ALPHA: f64 = 0.05;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Two-sided critical value `z_{1−α/2}`.
pub fn critical_value(alpha: f64) -> f64 {
    // Newton steps on erfc(x) = α tighten the inverse to full precision.
    let mut x = erfc_inv(alpha);
    for _ in 0..3 {
        let slope = -std::f64::consts::FRAC_2_SQRT_PI * (-x * x).exp();
        if slope == 0.0 {
            break;
        }
        x -= (erfc(x) - alpha) / slope;
    }
    std::f64::consts::SQRT_2 * x
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

/// Power of the two-sided Wald test, counting both rejection tails.
pub fn wald_power(effect: f64, se: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(se > 0.0 && se.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "standard error must be > 0, got {se}"
        )));
    }
    if !effect.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "effect size must be finite, got {effect}"
        )));
    }
    let z = critical_value(alpha);
    let ratio = effect.abs() / se;
    Ok(normal_cdf(ratio - z) + normal_cdf(-ratio - z))
}

/// A linear combination of (θ₁, θ₂, θ₃) and the value it should detect.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contrast {
    pub label: String,
    pub weights: [f64; 3],
    pub effect: f64,
}

/// Which effects to test, at what sizes and level.
///
/// Effect sizes are on the scale of the correlation spec: standardized units
/// of σ_y when standardized, outcome units when raw.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectSpec {
    pub deltas: [Option<f64>; 3],
    pub alpha: f64,
    pub contrasts: Vec<Contrast>,
    pub mean_model: MeanModel,
}

impl Default for EffectSpec {
    fn default() -> Self {
        Self {
            deltas: [None; 3],
            alpha: DEFAULT_ALPHA,
            contrasts: Vec::new(),
            mean_model: MeanModel::Interaction,
        }
    }
}

impl EffectSpec {
    pub fn with_effect(mut self, effect: Effect, delta: f64) -> Self {
        self.deltas[effect.index()] = Some(delta);
        self
    }

    pub fn with_contrast(
        mut self,
        label: impl Into<String>,
        weights: [f64; 3],
        effect: f64,
    ) -> Self {
        self.contrasts.push(Contrast {
            label: label.into(),
            weights,
            effect,
        });
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn additive(mut self) -> Self {
        self.mean_model = MeanModel::Additive;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.deltas.iter().all(Option::is_none) && self.contrasts.is_empty() {
            return Err(Error::InvalidParameter(
                "no effect or contrast requested".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerEntry {
    pub label: String,
    pub effect_size: f64,
    pub se: f64,
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerResult {
    pub design: String,
    pub model: CovarianceModel,
    pub params: StandardizedParams,
    pub cluster_size: u32,
    /// σ_y² of the scale SEs are reported on.
    pub outcome_variance: f64,
    pub alpha: f64,
    pub entries: Vec<PowerEntry>,
    pub covariance: TreatmentCovariance,
}

impl PowerResult {
    pub fn entry(&self, label: &str) -> Option<&PowerEntry> {
        self.entries.iter().find(|e| e.label == label)
    }

    pub fn power(&self, label: &str) -> Option<f64> {
        self.entry(label).map(|e| e.power)
    }
}

/// SEs from the closed form and power for every requested effect the design
/// can estimate, plus every contrast. Requested main effects the design does
/// not contain are skipped.
pub fn design_power(
    grid: &DesignGrid,
    correlation: &CorrelationSpec,
    effects: &EffectSpec,
) -> Result<PowerResult> {
    effects.validate()?;
    let params = correlation.standardized_params()?;
    let cs = correlation.compound_symmetry()?;
    let covariance = closed_form_covariance(grid, &cs, effects.mean_model)?;

    let mut entries = Vec::new();
    for &effect in covariance.effects() {
        if let Some(delta) = effects.deltas[effect.index()] {
            let se = covariance
                .standard_error(effect)
                .expect("effect is present");
            entries.push(PowerEntry {
                label: effect.label().to_string(),
                effect_size: delta,
                se,
                power: wald_power(delta, se, effects.alpha)?,
            });
        }
    }
    for contrast in &effects.contrasts {
        let weights = covariance.project_weights(&contrast.label, &contrast.weights)?;
        let se = contrast_variance(&weights, &covariance)?.sqrt();
        entries.push(PowerEntry {
            label: contrast.label.clone(),
            effect_size: contrast.effect,
            se,
            power: wald_power(contrast.effect, se, effects.alpha)?,
        });
    }
    if entries.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "none of the requested effects are present in design {:?}",
            grid.label()
        )));
    }

    Ok(PowerResult {
        design: grid.label().to_string(),
        model: correlation.model(),
        params,
        cluster_size: correlation.cluster_size,
        outcome_variance: correlation.outcome_variance(),
        alpha: effects.alpha,
        entries,
        covariance,
    })
}

/// One point of a correlation sweep. `rho_a` is used by the nested
/// exchangeable model and `pi` by the cohort model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub rho_w: f64,
    pub rho_a: Option<f64>,
    pub pi: Option<f64>,
}

/// How the companion parameter moves along a ρ_w series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pairing {
    None,
    FixedRhoA(f64),
    /// ρ_a = cac · ρ_w.
    Cac(f64),
    FixedPi(f64),
}

impl SweepPoint {
    pub fn rho_w(rho_w: f64) -> Self {
        Self {
            rho_w,
            rho_a: None,
            pi: None,
        }
    }

    pub fn series(rho_ws: &[f64], pairing: Pairing) -> Vec<Self> {
        rho_ws
            .iter()
            .map(|&rho_w| {
                let mut p = Self::rho_w(rho_w);
                match pairing {
                    Pairing::None => {}
                    Pairing::FixedRhoA(a) => p.rho_a = Some(a),
                    Pairing::Cac(r) => p.rho_a = Some(r * rho_w),
                    Pairing::FixedPi(pi) => p.pi = Some(pi),
                }
                p
            })
            .collect()
    }

    pub fn params(&self, model: CovarianceModel) -> Result<StandardizedParams> {
        let params = match model {
            CovarianceModel::CrossSectional => {
                StandardizedParams::CrossSectional { rho_w: self.rho_w }
            }
            CovarianceModel::Cohort => StandardizedParams::Cohort {
                rho_w: self.rho_w,
                pi: self
                    .pi
                    .ok_or_else(|| Error::InvalidParameter("cohort sweep point needs pi".into()))?,
            },
            CovarianceModel::NestedExchangeable => StandardizedParams::NestedExchangeable {
                rho_w: self.rho_w,
                rho_a: self.rho_a.ok_or_else(|| {
                    Error::InvalidParameter("nested exchangeable sweep point needs rho_a".into())
                })?,
            },
        };
        params.validate()?;
        Ok(params)
    }
}

/// ρ_w = 0.001, 0.002, …, 0.300.
pub fn default_rho_grid() -> Vec<f64> {
    (1..=300).map(|i| f64::from(i) / 1000.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub point: SweepPoint,
    pub result: Result<PowerResult>,
}

/// Power at every point, in input order. A failing point keeps its error and
/// does not stop the others.
pub fn sweep(
    grid: &DesignGrid,
    model: CovarianceModel,
    cluster_size: u32,
    effects: &EffectSpec,
    points: &[SweepPoint],
) -> Vec<SweepRow> {
    points
        .par_iter()
        .enumerate()
        .map(|(index, &point)| {
            let result = point.params(model).and_then(|params| {
                design_power(
                    grid,
                    &CorrelationSpec::standardized(params, cluster_size),
                    effects,
                )
            });
            SweepRow {
                index,
                point,
                result,
            }
        })
        .collect()
}
