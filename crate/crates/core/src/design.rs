//! Stepped wedge layouts with two treatments and their fixed-effects design
//! matrices.
//!
//! A [`DesignGrid`] assigns one [`Condition`] to every cluster-period. Rows are
//! clusters, columns are periods, and all downstream matrices use the same
//! cluster-major, period-minor ordering.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Condition of one cluster-period. `Both` is the combined condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Condition {
    Control,
    Trt1,
    Trt2,
    Both,
}

impl Condition {
    pub const ALL: [Condition; 4] = [
        Condition::Control,
        Condition::Trt1,
        Condition::Trt2,
        Condition::Both,
    ];

    /// Design-file code: 0 Control, 1 Trt1, 2 Trt2, 3 Both.
    pub fn code(self) -> u8 {
        match self {
            Condition::Control => 0,
            Condition::Trt1 => 1,
            Condition::Trt2 => 2,
            Condition::Both => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    /// Treatment 1 indicator X.
    pub fn x(self) -> bool {
        matches!(self, Condition::Trt1 | Condition::Both)
    }

    /// Treatment 2 indicator W.
    pub fn w(self) -> bool {
        matches!(self, Condition::Trt2 | Condition::Both)
    }

    /// Swaps the roles of the two treatments.
    pub fn swapped(self) -> Self {
        match self {
            Condition::Trt1 => Condition::Trt2,
            Condition::Trt2 => Condition::Trt1,
            other => other,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Condition::Control => "Control",
            Condition::Trt1 => "Trt1",
            Condition::Trt2 => "Trt2",
            Condition::Both => "Both",
        };
        f.write_str(name)
    }
}

/// A treatment-effect coefficient: θ₁, θ₂ or the interaction θ₃.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Effect {
    Trt1,
    Trt2,
    Interaction,
}

impl Effect {
    pub const ALL: [Effect; 3] = [Effect::Trt1, Effect::Trt2, Effect::Interaction];

    pub fn index(self) -> usize {
        match self {
            Effect::Trt1 => 0,
            Effect::Trt2 => 1,
            Effect::Interaction => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Effect::Trt1 => "theta1",
            Effect::Trt2 => "theta2",
            Effect::Interaction => "theta3",
        }
    }

    /// Indicator value of this effect's column in a cell.
    pub fn indicator(self, cell: Condition) -> bool {
        match self {
            Effect::Trt1 => cell.x(),
            Effect::Trt2 => cell.w(),
            Effect::Interaction => cell.x() && cell.w(),
        }
    }
}

/// Whether the mean model carries the X·W interaction column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MeanModel {
    /// Main effects plus interaction (the interaction is dropped automatically
    /// when the design has no combined cells).
    #[default]
    Interaction,
    /// Additive treatment effects; no interaction column.
    Additive,
}

/// Which transitions between consecutive periods count as violations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TransitionPolicy {
    /// Contamination-prone transitions make the design invalid.
    #[default]
    Strict,
    /// Same checks, reported as warnings only.
    Permissive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignGrid {
    label: String,
    periods: usize,
    cells: Vec<Condition>,
}

impl DesignGrid {
    pub fn new(label: impl Into<String>, rows: Vec<Vec<Condition>>) -> Result<Self> {
        let label = label.into();
        if label.contains(['\n', '\r']) {
            return Err(Error::MultilineLabel);
        }
        let Some(first) = rows.first() else {
            return Err(Error::EmptyGrid);
        };
        let periods = first.len();
        for (cluster, row) in rows.iter().enumerate() {
            if row.len() != periods {
                return Err(Error::RaggedRows {
                    cluster,
                    expected: periods,
                    found: row.len(),
                });
            }
        }
        if periods < 2 {
            return Err(Error::TooFewPeriods(periods));
        }
        Ok(Self {
            label,
            periods,
            cells: rows.into_iter().flatten().collect(),
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if label.contains(['\n', '\r']) {
            return Err(Error::MultilineLabel);
        }
        self.label = label;
        Ok(self)
    }

    pub fn clusters(&self) -> usize {
        self.cells.len() / self.periods
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    pub fn cell(&self, cluster: usize, period: usize) -> Condition {
        self.cells[cluster * self.periods + period]
    }

    pub fn row(&self, cluster: usize) -> &[Condition] {
        &self.cells[cluster * self.periods..(cluster + 1) * self.periods]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Condition]> + '_ {
        self.cells.chunks(self.periods)
    }

    pub fn to_rows(&self) -> Vec<Vec<Condition>> {
        self.rows().map(<[Condition]>::to_vec).collect()
    }

    /// Number of cluster-periods in `condition`.
    pub fn count(&self, condition: Condition) -> usize {
        self.cells.iter().filter(|&&c| c == condition).count()
    }

    pub fn contains(&self, condition: Condition) -> bool {
        self.cells.contains(&condition)
    }

    /// Same layout with Trt1 and Trt2 exchanged.
    pub fn swap_treatments(&self) -> Self {
        Self {
            label: self.label.clone(),
            periods: self.periods,
            cells: self.cells.iter().map(|c| c.swapped()).collect(),
        }
    }

    /// Rows reordered so that new row `k` is old row `order[k]`.
    pub fn permute_clusters(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.clusters()];
        if order.len() != seen.len() {
            return Err(Error::DimensionMismatch {
                expected: seen.len(),
                found: order.len(),
            });
        }
        for &k in order {
            if k >= seen.len() || std::mem::replace(&mut seen[k], true) {
                return Err(Error::InvalidParameter(format!(
                    "cluster order is not a permutation: {order:?}"
                )));
            }
        }
        let rows = order.iter().map(|&k| self.row(k).to_vec()).collect();
        Self::new(self.label.clone(), rows)
    }

    /// Row-stacks `other` below `self`.
    pub fn stack(&self, other: &DesignGrid) -> Result<Self> {
        if self.periods != other.periods {
            return Err(Error::PeriodMismatch(self.periods, other.periods));
        }
        let mut cells = self.cells.clone();
        cells.extend_from_slice(&other.cells);
        Ok(Self {
            label: self.label.clone(),
            periods: self.periods,
            cells,
        })
    }

    /// Effects that have a nonzero column under `model`, in θ order.
    pub fn active_effects(&self, model: MeanModel) -> Vec<Effect> {
        Effect::ALL
            .into_iter()
            .filter(|&e| model == MeanModel::Interaction || e != Effect::Interaction)
            .filter(|&e| self.cells.iter().any(|&c| e.indicator(c)))
            .collect()
    }

    /// Lists every disallowed period-to-period transition.
    pub fn validate(&self, policy: TransitionPolicy) -> Validation {
        let mut violations = Vec::new();
        for (cluster, row) in self.rows().enumerate() {
            for (period, pair) in row.windows(2).enumerate() {
                if !transition_allowed(pair[0], pair[1]) {
                    violations.push(Violation {
                        cluster,
                        period: period + 1,
                        from: pair[0],
                        to: pair[1],
                    });
                }
            }
        }
        Validation { policy, violations }
    }
}

/// Control may precede anything and either single treatment may be followed by
/// the combined condition; everything else that changes condition is
/// contamination-prone.
pub fn transition_allowed(from: Condition, to: Condition) -> bool {
    use Condition::*;
    from == to || matches!((from, to), (Control, _) | (Trt1, Both) | (Trt2, Both))
}

/// A disallowed transition, located at the (0-based) cell it enters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub cluster: usize,
    pub period: usize,
    pub from: Condition,
    pub to: Condition,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "cluster {} period {}: {} -> {}",
            self.cluster + 1,
            self.period + 1,
            self.from,
            self.to
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Validation {
    pub policy: TransitionPolicy,
    pub violations: Vec<Violation>,
}

impl Validation {
    /// Under the permissive policy violations are warnings and never reject.
    pub fn is_valid(&self) -> bool {
        self.policy == TransitionPolicy::Permissive || self.violations.is_empty()
    }
}

/// Classic single-treatment stepped wedge: sequence `s` (1-based) is in
/// control for periods `1..=s` and on `treatment` afterwards, so there are
/// `sequences + 1` periods and every cluster is treated in the last one.
pub fn generate_standard_swd(
    sequences: usize,
    clusters_per_sequence: usize,
    treatment: Condition,
) -> Result<DesignGrid> {
    if sequences == 0 || clusters_per_sequence == 0 {
        return Err(Error::InvalidParameter(
            "need at least one sequence and one cluster per sequence".into(),
        ));
    }
    if treatment == Condition::Control {
        return Err(Error::InvalidParameter(
            "stepped wedge treatment cannot be Control".into(),
        ));
    }
    let periods = sequences + 1;
    let rows = (1..=sequences)
        .flat_map(|s| {
            let row: Vec<Condition> = (0..periods)
                .map(|j| if j < s { Condition::Control } else { treatment })
                .collect();
            std::iter::repeat_n(row, clusters_per_sequence)
        })
        .collect();
    DesignGrid::new(
        format!("swd-{sequences}x{clusters_per_sequence}-{treatment}"),
        rows,
    )
}

/// Stacks a Trt1-only trial and a Trt2-only trial into one concurrent trial.
pub fn concurrent_design(a: &DesignGrid, b: &DesignGrid) -> Result<DesignGrid> {
    if a.periods() != b.periods() {
        return Err(Error::PeriodMismatch(a.periods(), b.periods()));
    }
    let only =
        |g: &DesignGrid, t: Condition| g.cells.iter().all(|&c| c == Condition::Control || c == t);
    let ok = (only(a, Condition::Trt1) && only(b, Condition::Trt2))
        || (only(a, Condition::Trt2) && only(b, Condition::Trt1));
    if !ok {
        return Err(Error::OverlappingTreatments);
    }
    a.stack(b)?
        .with_label(format!("{} + {}", a.label(), b.label()))
}

/// Fixed-effects design matrix Z, `I·T` rows by `T+3` columns:
/// intercept, `T−1` period indicators (the last period is the reference),
/// then the X, W and XW treatment columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedEffectsMatrix {
    clusters: usize,
    periods: usize,
    matrix: DMatrix<f64>,
}

impl FixedEffectsMatrix {
    pub fn clusters(&self) -> usize {
        self.clusters
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Column index of an effect's indicator.
    pub fn effect_column(&self, effect: Effect) -> usize {
        self.periods + effect.index()
    }

    /// The `T×(T+3)` block of cluster `i`.
    pub fn cluster_block(&self, i: usize) -> DMatrix<f64> {
        self.matrix
            .rows(i * self.periods, self.periods)
            .into_owned()
    }

    /// Intercept and period columns followed by the given effect columns.
    pub fn reduced(&self, effects: &[Effect]) -> DMatrix<f64> {
        let mut cols: Vec<usize> = (0..self.periods).collect();
        cols.extend(effects.iter().map(|&e| self.effect_column(e)));
        self.matrix.select_columns(&cols)
    }
}

pub fn build_design_matrix(grid: &DesignGrid) -> FixedEffectsMatrix {
    let (clusters, periods) = (grid.clusters(), grid.periods());
    let mut matrix = DMatrix::zeros(clusters * periods, periods + 3);
    for i in 0..clusters {
        for j in 0..periods {
            let r = i * periods + j;
            let cell = grid.cell(i, j);
            matrix[(r, 0)] = 1.0;
            if j + 1 < periods {
                matrix[(r, 1 + j)] = 1.0;
            }
            for e in Effect::ALL {
                if e.indicator(cell) {
                    matrix[(r, periods + e.index())] = 1.0;
                }
            }
        }
    }
    FixedEffectsMatrix {
        clusters,
        periods,
        matrix,
    }
}

#[cfg(test)]
mod tests {
    use super::Condition::*;
    use super::*;

    fn fig1() -> DesignGrid {
        generate_standard_swd(3, 2, Trt1).unwrap()
    }

    #[test]
    fn standard_swd_shape() {
        let g = fig1();
        assert_eq!((g.clusters(), g.periods()), (6, 4));
        assert_eq!(g.row(0), &[Control, Trt1, Trt1, Trt1]);
        assert_eq!(g.row(3), &[Control, Control, Trt1, Trt1]);
        assert_eq!(g.row(5), &[Control, Control, Control, Trt1]);
        assert_eq!(g.count(Trt1), 12);
        assert!(g.validate(TransitionPolicy::Strict).violations.is_empty());
    }

    #[test]
    fn smallest_swd() {
        let g = generate_standard_swd(1, 1, Trt1).unwrap();
        assert_eq!(g.to_rows(), vec![vec![Control, Trt1]]);
    }

    #[test]
    fn swd_with_trt2_is_a_label_swap() {
        let g = generate_standard_swd(3, 2, Trt2).unwrap();
        assert_eq!(g.cells, fig1().swap_treatments().cells);
        assert!(generate_standard_swd(3, 2, Control).is_err());
        assert!(generate_standard_swd(0, 2, Trt1).is_err());
    }

    #[test]
    fn all_control_has_no_violations() {
        let g = DesignGrid::new("", vec![vec![Control; 4]; 3]).unwrap();
        assert!(g.validate(TransitionPolicy::Strict).is_valid());
    }

    #[test]
    fn trt1_to_trt2_is_flagged() {
        let g = DesignGrid::new("", vec![vec![Control, Trt1, Trt2]]).unwrap();
        let strict = g.validate(TransitionPolicy::Strict);
        assert_eq!(
            strict.violations,
            vec![Violation {
                cluster: 0,
                period: 2,
                from: Trt1,
                to: Trt2
            }]
        );
        assert!(!strict.is_valid());
        let permissive = g.validate(TransitionPolicy::Permissive);
        assert_eq!(permissive.violations.len(), 1);
        assert!(permissive.is_valid());
    }

    #[test]
    fn transition_table() {
        let allowed: Vec<(Condition, Condition)> = Condition::ALL
            .into_iter()
            .flat_map(|a| Condition::ALL.into_iter().map(move |b| (a, b)))
            .filter(|&(a, b)| a != b && transition_allowed(a, b))
            .collect();
        assert_eq!(
            allowed,
            vec![
                (Control, Trt1),
                (Control, Trt2),
                (Control, Both),
                (Trt1, Both),
                (Trt2, Both)
            ]
        );
    }

    #[test]
    fn structural_errors() {
        assert_eq!(DesignGrid::new("", vec![]), Err(Error::EmptyGrid));
        assert_eq!(
            DesignGrid::new("", vec![vec![Control, Trt1], vec![Control]]),
            Err(Error::RaggedRows {
                cluster: 1,
                expected: 2,
                found: 1
            })
        );
        assert_eq!(
            DesignGrid::new("", vec![vec![Control]]),
            Err(Error::TooFewPeriods(1))
        );
        assert_eq!(
            DesignGrid::new("a\nb", vec![vec![Control, Trt1]]),
            Err(Error::MultilineLabel)
        );
    }

    #[test]
    fn design_matrix_single_cluster() {
        let g = DesignGrid::new("", vec![vec![Control, Trt1]]).unwrap();
        let z = build_design_matrix(&g);
        // intercept, beta_1, X, W, XW
        let expected = DMatrix::from_row_slice(2, 5, &[1., 1., 0., 0., 0., 1., 0., 1., 0., 0.]);
        assert_eq!(z.matrix(), &expected);
    }

    #[test]
    fn design_matrix_combined_condition() {
        let g = DesignGrid::new("", vec![vec![Control, Both]]).unwrap();
        let z = build_design_matrix(&g);
        for e in Effect::ALL {
            let col = z
                .matrix()
                .column(z.effect_column(e))
                .iter()
                .copied()
                .collect::<Vec<_>>();
            assert_eq!(col, vec![0.0, 1.0]);
        }
    }

    #[test]
    fn design_matrix_invariants_fig1() {
        let g = fig1();
        let z = build_design_matrix(&g);
        let m = z.matrix();
        assert_eq!(m.shape(), (24, 7));
        assert_eq!(m.column(z.effect_column(Effect::Trt1)).sum(), 12.0);
        assert!(m.column(0).iter().all(|&v| v == 1.0));
        for i in 0..g.clusters() {
            let last = i * 4 + 3;
            assert!((1..4).all(|c| m[(last, c)] == 0.0));
        }
        assert_eq!(z.cluster_block(2), m.rows(8, 4).into_owned());
    }

    #[test]
    fn concurrent_design_stacks_rows() {
        let a = fig1();
        let b = generate_standard_swd(3, 2, Trt2).unwrap();
        let c = concurrent_design(&a, &b).unwrap();
        assert_eq!(c.clusters(), 12);
        for i in 0..6 {
            assert_eq!(c.row(i), a.row(i));
            assert_eq!(c.row(6 + i), b.row(i));
        }
        assert!(concurrent_design(&b, &a).is_ok());
        assert_eq!(concurrent_design(&a, &a), Err(Error::OverlappingTreatments));
        let short = generate_standard_swd(2, 2, Trt2).unwrap();
        assert_eq!(
            concurrent_design(&a, &short),
            Err(Error::PeriodMismatch(4, 3))
        );
    }

    #[test]
    fn active_effects_follow_columns() {
        assert_eq!(
            fig1().active_effects(MeanModel::Interaction),
            vec![Effect::Trt1]
        );
        let g = DesignGrid::new("", vec![vec![Control, Trt2, Both]]).unwrap();
        assert_eq!(
            g.active_effects(MeanModel::Interaction),
            Effect::ALL.to_vec()
        );
        assert_eq!(
            g.active_effects(MeanModel::Additive),
            vec![Effect::Trt1, Effect::Trt2]
        );
        let none = DesignGrid::new("", vec![vec![Control; 3]]).unwrap();
        assert!(none.active_effects(MeanModel::Interaction).is_empty());
    }

    #[test]
    fn permute_rejects_non_permutations() {
        let g = fig1();
        assert!(g.permute_clusters(&[0, 1, 2]).is_err());
        assert!(g.permute_clusters(&[0, 0, 1, 2, 3, 4]).is_err());
        let p = g.permute_clusters(&[5, 4, 3, 2, 1, 0]).unwrap();
        assert_eq!(p.row(0), g.row(5));
    }
}
