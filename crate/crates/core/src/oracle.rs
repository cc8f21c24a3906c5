//! Dense generalized-least-squares reference.
//!
//! Builds `Z′V⁻¹Z = Σᵢ Zᵢ′Vᵢ⁻¹Zᵢ` from the explicit design matrix, with each
//! `Vᵢ` inverted by LU, then inverts the whole precision matrix by Cholesky
//! and reads off the treatment block. Shares nothing with the closed form
//! beyond the design itself.

use nalgebra::DMatrix;

use crate::covariance::CompoundSymmetry;
use crate::design::{build_design_matrix, DesignGrid, MeanModel};
use crate::error::{Error, Result};
use crate::variance::{TreatmentCovariance, CONDITION_LIMIT};

/// The full `(T+k)×(T+k)` precision matrix for the active effect columns.
pub fn precision_matrix(
    grid: &DesignGrid,
    cs: &CompoundSymmetry,
    model: MeanModel,
) -> Result<DMatrix<f64>> {
    let effects = grid.active_effects(model);
    let t = grid.periods();
    let v = DMatrix::from_fn(t, t, |i, j| if i == j { cs.diag() } else { cs.offdiag() });
    let v_inv = v.lu().try_inverse().ok_or(Error::SingularCovariance {
        diag: cs.diag(),
        offdiag: cs.offdiag(),
    })?;
    let z = build_design_matrix(grid).reduced(&effects);
    let p = z.ncols();
    let mut precision = DMatrix::zeros(p, p);
    for i in 0..grid.clusters() {
        let zi = z.rows(i * t, t);
        precision += zi.transpose() * &v_inv * zi;
    }
    Ok(precision)
}

pub fn oracle_covariance(
    grid: &DesignGrid,
    cs: &CompoundSymmetry,
    model: MeanModel,
) -> Result<TreatmentCovariance> {
    let effects = grid.active_effects(model);
    if effects.is_empty() {
        return Err(Error::NoEstimableEffects);
    }
    let precision = precision_matrix(grid, cs, model)?;
    let eig = precision.clone().symmetric_eigenvalues();
    let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| {
        (lo.min(v), hi.max(v.abs()))
    });
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if condition.is_nan() || condition > CONDITION_LIMIT {
        return Err(Error::RankDeficient {
            effect: None,
            condition,
        });
    }
    let chol = precision.cholesky().ok_or(Error::RankDeficient {
        effect: None,
        condition,
    })?;
    let full = chol.inverse();
    let t = grid.periods();
    let k = effects.len();
    let block = full.view((t, t), (k, k));
    let matrix = DMatrix::from_fn(k, k, |r, c| 0.5 * (block[(r, c)] + block[(c, r)]));
    TreatmentCovariance::new(effects, matrix)
}
