//! Turns parsed flags into core inputs.

use std::path::Path;

use swedge_core::{
    catalog_design, catalog_ids, parse_design, CorrelationSpec, CovarianceModel, DesignGrid,
    EffectSpec, Pairing, RawComponents, StandardizedParams, TransitionPolicy,
};
use thiserror::Error;

use crate::args::{EffectArgs, Model, ModelArgs, RawArgs};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] swedge_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("design {name:?} has {} disallowed transition(s):\n{}", violations.len(), violations.join("\n"))]
    Invalid {
        name: String,
        violations: Vec<String>,
    },
    #[error("{failed} of {total} sweep points failed")]
    Points {
        failed: usize,
        total: usize,
        code: u8,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_estimability() => 3,
            CliError::Points { code, .. } => *code,
            _ => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

pub struct LoadedDesign {
    /// Catalog id or file stem; used to name comparison columns.
    pub name: String,
    pub grid: DesignGrid,
    pub reconstructed: bool,
}

/// A catalog id, or else a design file path. The design is validated under
/// the given policy.
pub fn load_design(spec: &str, policy: TransitionPolicy) -> CliResult<LoadedDesign> {
    let loaded = if catalog_ids().any(|id| id == spec) {
        let entry = catalog_design(spec)?;
        LoadedDesign {
            name: spec.to_string(),
            grid: entry.grid,
            reconstructed: entry.reconstructed,
        }
    } else {
        let path = Path::new(spec);
        let content = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: format!("design {spec:?} is not a catalog id and cannot be read"),
            source,
        })?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| spec.to_string());
        let mut grid = parse_design(&content)?;
        if grid.label().is_empty() {
            grid = grid.with_label(name.clone())?;
        }
        LoadedDesign {
            name,
            grid,
            reconstructed: false,
        }
    };
    let validation = loaded.grid.validate(policy);
    if !validation.is_valid() {
        return Err(CliError::Invalid {
            name: loaded.name,
            violations: validation
                .violations
                .iter()
                .map(|v| v.to_string())
                .collect(),
        });
    }
    for v in &validation.violations {
        eprintln!("warning: {}: {v}", loaded.name);
    }
    Ok(loaded)
}

pub fn policy(permissive: bool) -> TransitionPolicy {
    if permissive {
        TransitionPolicy::Permissive
    } else {
        TransitionPolicy::Strict
    }
}

pub fn covariance_model(model: Model) -> CovarianceModel {
    match model {
        Model::Cs => CovarianceModel::CrossSectional,
        Model::Cohort => CovarianceModel::Cohort,
        Model::Nex => CovarianceModel::NestedExchangeable,
    }
}

/// How the model's companion parameter follows ρ_w; rejects companions the
/// model does not use.
pub fn pairing(args: &ModelArgs) -> CliResult<Pairing> {
    match args.model {
        Model::Cs => {
            if args.rho_a.is_some() || args.cac.is_some() || args.pi.is_some() {
                return usage("--rho-a, --cac and --pi do not apply to --model cs");
            }
            Ok(Pairing::None)
        }
        Model::Cohort => {
            if args.rho_a.is_some() || args.cac.is_some() {
                return usage("--rho-a and --cac apply to --model nex only");
            }
            match args.pi {
                Some(pi) => Ok(Pairing::FixedPi(pi)),
                None => usage("--model cohort needs --pi"),
            }
        }
        Model::Nex => {
            if args.pi.is_some() {
                return usage("--pi applies to --model cohort only");
            }
            match (args.rho_a, args.cac) {
                (Some(a), None) => Ok(Pairing::FixedRhoA(a)),
                (None, Some(r)) => Ok(Pairing::Cac(r)),
                _ => usage("--model nex needs --rho-a or --cac"),
            }
        }
    }
}

/// Exactly one of the standardized (`--rho-w` and companions) or raw
/// (`--sigma-*-sq`) parameterizations.
pub fn correlation(
    args: &ModelArgs,
    rho_w: Option<f64>,
    raw: &RawArgs,
) -> CliResult<CorrelationSpec> {
    let model = covariance_model(args.model);
    let spec = if raw.any() {
        if rho_w.is_some() || args.rho_a.is_some() || args.cac.is_some() || args.pi.is_some() {
            return usage(
                "give either standardized (--rho-w ...) or raw (--sigma-*-sq) parameters, not both",
            );
        }
        let Some(sigma_e_sq) = raw.sigma_e_sq else {
            return usage("raw parameters need --sigma-e-sq");
        };
        let components = RawComponents {
            sigma_alpha_sq: raw.sigma_alpha_sq.unwrap_or(0.0),
            sigma_psi_sq: raw.sigma_psi_sq.unwrap_or(0.0),
            sigma_nu_sq: raw.sigma_nu_sq.unwrap_or(0.0),
            sigma_e_sq,
        };
        CorrelationSpec::raw(model, components, args.n)
    } else {
        let Some(rho_w) = rho_w else {
            return usage("give --rho-w (or raw --sigma-*-sq parameters)");
        };
        let params = match pairing(args)? {
            Pairing::None => StandardizedParams::CrossSectional { rho_w },
            Pairing::FixedPi(pi) => StandardizedParams::Cohort { rho_w, pi },
            Pairing::FixedRhoA(rho_a) => StandardizedParams::NestedExchangeable { rho_w, rho_a },
            Pairing::Cac(r) => StandardizedParams::NestedExchangeable {
                rho_w,
                rho_a: r * rho_w,
            },
        };
        CorrelationSpec::standardized(params, args.n)
    };
    spec.compound_symmetry()?;
    Ok(spec)
}

fn parse_contrast(text: &str) -> CliResult<(String, [f64; 3], f64)> {
    let bad = || CliError::Usage(format!("contrast {text:?} is not LABEL:w1,w2[,w3]:EFFECT"));
    let parts: Vec<&str> = text.split(':').collect();
    let [label, weights, effect] = parts[..] else {
        return Err(bad());
    };
    if label.is_empty() || label.contains(',') {
        return Err(bad());
    }
    let ws = weights
        .split(',')
        .map(|w| w.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| bad())?;
    if !(2..=3).contains(&ws.len()) {
        return Err(bad());
    }
    let mut out = [0.0; 3];
    out[..ws.len()].copy_from_slice(&ws);
    let effect = effect.trim().parse().map_err(|_| bad())?;
    Ok((label.to_string(), out, effect))
}

pub fn effect_spec(args: &EffectArgs) -> CliResult<EffectSpec> {
    let mut spec = EffectSpec::default().with_alpha(args.alpha);
    spec.deltas = match args.delta[..] {
        [] => [None; 3],
        [d] => [Some(d); 3],
        [d1, d2] => [Some(d1), Some(d2), None],
        [d1, d2, d3] => [Some(d1), Some(d2), Some(d3)],
        _ => return usage("--delta takes at most three values"),
    };
    for c in &args.contrast {
        let (label, weights, effect) = parse_contrast(c)?;
        if ["theta1", "theta2", "theta3"].contains(&label.as_str()) {
            return usage(format!(
                "contrast label {label:?} clashes with an effect name"
            ));
        }
        spec = spec.with_contrast(label, weights, effect);
    }
    if args.additive {
        spec = spec.additive();
    }
    spec.validate()?;
    Ok(spec)
}

/// `start:stop:step` (inclusive) or a comma-separated list.
pub fn rho_grid(text: Option<&str>) -> CliResult<Vec<f64>> {
    let Some(text) = text else {
        return Ok(swedge_core::default_rho_grid());
    };
    let bad = || {
        CliError::Usage(format!(
            "--rho-grid {text:?} is not start:stop:step or a list"
        ))
    };
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    if text.contains(':') {
        let parts = text
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| bad())?;
        let [start, stop, step] = parts[..] else {
            return Err(bad());
        };
        if !(step > 0.0 && stop >= start) {
            return Err(bad());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        // Rounded so that 0.1 + 2 * 0.1 prints as 0.3.
        Ok((0..count)
            .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
            .collect())
    } else {
        text.split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect()
    }
}
