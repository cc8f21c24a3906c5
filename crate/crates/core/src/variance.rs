//! Closed-form covariance of the treatment-effect estimates.
//!
//! The precision matrix `Z′V⁻¹Z` of the full fixed-effects model is never
//! formed. Instead the Schur complement of the intercept/period block is
//! assembled directly from a handful of design counts (the scalar terms in
//! [`PrecisionTerms`]) and the effective compound-symmetry variances
//! `σ_c² = d − o`, `σ_α² = o`. Only that ≤3×3 matrix is inverted.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::covariance::CompoundSymmetry;
use crate::design::{DesignGrid, Effect, MeanModel};
use crate::error::{Error, Result};

/// Condition-number ceiling for the treatment Schur complement.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Entries of `V_i⁻¹` for a compound-symmetric `V_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseEntries {
    pub diag: f64,
    pub offdiag: f64,
}

pub fn sherman_morrison_entries(cs: &CompoundSymmetry, periods: usize) -> InverseEntries {
    let sc = cs.sigma_c_sq();
    let sa = cs.sigma_alpha_sq();
    let t = periods as f64;
    let denom = sc * (t * sa + sc);
    InverseEntries {
        diag: ((t - 1.0) * sa + sc) / denom,
        offdiag: -sa / denom,
    }
}

/// Scalar building blocks of the precision matrix.
///
/// Index 0, 1, 2 of each array refers to the X, W and XW columns. The paired
/// terms `q` and `w_pair` are ordered (X,W), (X,XW), (W,XW).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrecisionTerms {
    pub clusters: usize,
    pub periods: usize,
    pub sigma_c_sq: f64,
    pub sigma_alpha_sq: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub f: f64,
    pub g: f64,
    pub y: [f64; 3],
    pub h: [f64; 3],
    pub z: [f64; 3],
    pub l: [f64; 3],
    pub q: [f64; 3],
    pub w: [f64; 3],
    pub w_pair: [f64; 3],
}

const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

fn pair_slot(j: usize, k: usize) -> usize {
    let key = if j < k { (j, k) } else { (k, j) };
    PAIRS
        .iter()
        .position(|&p| p == key)
        .expect("distinct columns")
}

impl PrecisionTerms {
    /// Entry `(j, k)` of `(Z′V⁻¹Z)₂₂ − M`, the Schur complement of the
    /// intercept/period block, for columns indexed as in the struct docs.
    pub fn schur_entry(&self, j: usize, k: usize) -> f64 {
        let t = self.periods as f64;
        let ft = self.f * t;
        let fgt = self.f + self.g * t;
        if j == k {
            self.l[j]
                - self.z[j]
                - self.y[j] * self.y[j] / ft
                - (self.w[j] - self.l[j] * self.l[j] / t) / fgt
        } else {
            let m = pair_slot(j, k);
            self.q[m]
                - self.y[j] * self.y[k] / ft
                - (self.w_pair[m] - self.l[j] * self.l[k] / t) / fgt
        }
    }
}

pub fn precision_terms(grid: &DesignGrid, cs: &CompoundSymmetry) -> PrecisionTerms {
    let (clusters, periods) = (grid.clusters(), grid.periods());
    let sc = cs.sigma_c_sq();
    let sa = cs.sigma_alpha_sq();
    let t = periods as f64;

    let a = 1.0 / (sc + t * sa);
    let b = 1.0 / sc;
    let c = a * b;
    let f = clusters as f64 * a;
    let g = clusters as f64 * c * sa;

    // Grand totals X^{IT}, per-cluster products of totals X^T, per-period column sums.
    let mut total = [0.0; 3];
    let mut cluster_sq = [0.0; 3];
    let mut cluster_cross = [0.0; 3];
    let mut period_sums = vec![[0.0; 3]; periods];
    for row in grid.rows() {
        let mut per_cluster = [0.0; 3];
        for (j, &cell) in row.iter().enumerate() {
            for e in Effect::ALL {
                if e.indicator(cell) {
                    per_cluster[e.index()] += 1.0;
                    period_sums[j][e.index()] += 1.0;
                }
            }
        }
        for k in 0..3 {
            total[k] += per_cluster[k];
            cluster_sq[k] += per_cluster[k] * per_cluster[k];
        }
        for (m, &(j, k)) in PAIRS.iter().enumerate() {
            cluster_cross[m] += per_cluster[j] * per_cluster[k];
        }
    }

    let mut w = [0.0; 3];
    let mut w_pair = [0.0; 3];
    for sums in &period_sums {
        let scaled = sums.map(|s| s / sc);
        for k in 0..3 {
            w[k] += scaled[k] * scaled[k];
        }
        for (m, &(j, k)) in PAIRS.iter().enumerate() {
            w_pair[m] += scaled[j] * scaled[k];
        }
    }

    // X·W = X·XW = W·XW = XW elementwise, so every paired raw count is (XW)^{IT}.
    let l = total.map(|n| b * n);
    PrecisionTerms {
        clusters,
        periods,
        sigma_c_sq: sc,
        sigma_alpha_sq: sa,
        a,
        b,
        c,
        f,
        g,
        y: total.map(|n| a * n),
        h: total.map(|n| c * n),
        z: cluster_sq.map(|s| c * sa * s),
        l,
        q: cluster_cross.map(|s| l[2] - c * sa * s),
        w,
        w_pair,
    }
}

/// Covariance of the estimated treatment effects present in a design.
#[derive(Debug, Clone, PartialEq)]
pub struct TreatmentCovariance {
    effects: Vec<Effect>,
    matrix: DMatrix<f64>,
}

impl TreatmentCovariance {
    pub fn new(effects: Vec<Effect>, matrix: DMatrix<f64>) -> Result<Self> {
        let n = effects.len();
        if matrix.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: matrix.nrows(),
            });
        }
        Ok(Self { effects, matrix })
    }

    pub fn dim(&self) -> usize {
        self.effects.len()
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn position(&self, effect: Effect) -> Option<usize> {
        self.effects.iter().position(|&e| e == effect)
    }

    pub fn variance(&self, effect: Effect) -> Option<f64> {
        self.position(effect).map(|k| self.matrix[(k, k)])
    }

    pub fn covariance(&self, a: Effect, b: Effect) -> Option<f64> {
        Some(self.matrix[(self.position(a)?, self.position(b)?)])
    }

    pub fn standard_error(&self, effect: Effect) -> Option<f64> {
        self.variance(effect).map(f64::sqrt)
    }

    /// Expands a weight vector over (θ₁, θ₂, θ₃) onto this matrix's effects.
    /// Weight on an absent effect is an error.
    pub fn project_weights(&self, label: &str, weights: &[f64; 3]) -> Result<Vec<f64>> {
        for e in Effect::ALL {
            if weights[e.index()] != 0.0 && self.position(e).is_none() {
                return Err(Error::ContrastOnAbsentEffect(label.to_string()));
            }
        }
        Ok(self.effects.iter().map(|e| weights[e.index()]).collect())
    }
}

/// `cᵀ C c` for a contrast laid out in the covariance's effect order.
pub fn contrast_variance(contrast: &[f64], cov: &TreatmentCovariance) -> Result<f64> {
    let n = cov.dim();
    if contrast.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: contrast.len(),
        });
    }
    if contrast.iter().all(|&c| c == 0.0) {
        return Err(Error::InvalidParameter(
            "contrast weights are all zero".into(),
        ));
    }
    let m = cov.matrix();
    let mut v = 0.0;
    for i in 0..n {
        for j in 0..n {
            v += contrast[i] * m[(i, j)] * contrast[j];
        }
    }
    Ok(v)
}

type Small = [[f64; 3]; 3];

/// Inverse of the leading `n×n` block of a symmetric matrix.
fn invert_small(s: &Small, n: usize) -> Option<Small> {
    let mut inv = [[0.0; 3]; 3];
    match n {
        1 => {
            inv[0][0] = 1.0 / s[0][0];
        }
        2 => {
            let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
            if det == 0.0 {
                return None;
            }
            inv[0][0] = s[1][1] / det;
            inv[1][1] = s[0][0] / det;
            inv[0][1] = -s[0][1] / det;
            inv[1][0] = -s[1][0] / det;
        }
        3 => {
            // Symmetric cofactors; averaging the first two row expansions
            // keeps the result exactly equivariant under swapping columns 0 and 1.
            let (a, b, c) = (s[0][0], s[1][1], s[2][2]);
            let (d, e, f) = (s[0][1], s[0][2], s[1][2]);
            let c00 = b * c - f * f;
            let c11 = a * c - e * e;
            let c22 = a * b - d * d;
            let c01 = e * f - d * c;
            let c02 = d * f - b * e;
            let c12 = d * e - a * f;
            let det = 0.5 * (a * c00 + b * c11) + d * c01 + 0.5 * (e * c02 + f * c12);
            if det == 0.0 {
                return None;
            }
            inv = [
                [c00 / det, c01 / det, c02 / det],
                [c01 / det, c11 / det, c12 / det],
                [c02 / det, c12 / det, c22 / det],
            ];
        }
        _ => return None,
    }
    Some(inv)
}

fn norm1(m: &Small, n: usize) -> f64 {
    (0..n)
        .map(|c| (0..n).map(|r| m[r][c].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Covariance of the treatment effects from the closed-form Schur complement.
///
/// Effects whose indicator column is identically zero are dropped first, so a
/// design without combined cells yields the 2×2 additive block and a
/// single-treatment design the 1×1 reciprocal.
pub fn closed_form_covariance(
    grid: &DesignGrid,
    cs: &CompoundSymmetry,
    model: MeanModel,
) -> Result<TreatmentCovariance> {
    let effects = grid.active_effects(model);
    if effects.is_empty() {
        return Err(Error::NoEstimableEffects);
    }
    let terms = precision_terms(grid, cs);
    let n = effects.len();
    let mut schur = [[0.0; 3]; 3];
    for (r, er) in effects.iter().enumerate() {
        for (c, ec) in effects.iter().enumerate() {
            schur[r][c] = terms.schur_entry(er.index(), ec.index());
        }
    }

    // Elimination pivots locate the first column that is (numerically) a
    // combination of the period columns and earlier treatment columns.
    let mut work = schur;
    for k in 0..n {
        let scale = terms.l[effects[k].index()];
        let pivot = work[k][k];
        if pivot.is_nan() || pivot <= scale / CONDITION_LIMIT {
            return Err(Error::RankDeficient {
                effect: Some(effects[k]),
                condition: if pivot > 0.0 {
                    scale / pivot
                } else {
                    f64::INFINITY
                },
            });
        }
        let pivot_row = work[k];
        for row in work.iter_mut().take(n).skip(k + 1) {
            let factor = row[k] / pivot;
            for (x, p) in row[k..n].iter_mut().zip(&pivot_row[k..n]) {
                *x -= factor * p;
            }
        }
    }

    let inv = invert_small(&schur, n).ok_or(Error::RankDeficient {
        effect: None,
        condition: f64::INFINITY,
    })?;
    let condition = norm1(&schur, n) * norm1(&inv, n);
    if condition.is_nan() || condition > CONDITION_LIMIT {
        let worst = (0..n)
            .max_by(|&i, &j| (inv[i][i] * schur[i][i]).total_cmp(&(inv[j][j] * schur[j][j])))
            .unwrap_or(0);
        return Err(Error::RankDeficient {
            effect: Some(effects[worst]),
            condition,
        });
    }

    let matrix = DMatrix::from_fn(n, n, |r, c| 0.5 * (inv[r][c] + inv[c][r]));
    TreatmentCovariance::new(effects, matrix)
}
