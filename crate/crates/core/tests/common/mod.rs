#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::Rng;
use swedge_core::{
    CompoundSymmetry, Condition, CorrelationSpec, DesignGrid, StandardizedParams,
    TreatmentCovariance,
};

/// A monotone row: some control periods, then one treatment, then possibly
/// both treatments to the end.
pub fn random_row(rng: &mut StdRng, periods: usize) -> Vec<Condition> {
    let controls = rng.gen_range(0..=periods);
    let single = if rng.gen_bool(0.5) {
        Condition::Trt1
    } else {
        Condition::Trt2
    };
    let single_len = rng.gen_range(0..=periods - controls);
    let tail = if rng.gen_bool(0.5) {
        Condition::Both
    } else {
        single
    };
    let mut row = vec![Condition::Control; controls];
    row.extend(std::iter::repeat_n(single, single_len));
    row.resize(periods, tail);
    row
}

pub fn random_grid(rng: &mut StdRng, max_clusters: usize, max_periods: usize) -> DesignGrid {
    let clusters = rng.gen_range(1..=max_clusters);
    let periods = rng.gen_range(2..=max_periods);
    let rows = (0..clusters).map(|_| random_row(rng, periods)).collect();
    DesignGrid::new("random", rows).unwrap()
}

/// Control then Trt1 only.
pub fn random_single_treatment_grid(
    rng: &mut StdRng,
    max_clusters: usize,
    max_periods: usize,
) -> DesignGrid {
    let clusters = rng.gen_range(2..=max_clusters);
    let periods = rng.gen_range(2..=max_periods);
    let rows = (0..clusters)
        .map(|_| {
            let controls = rng.gen_range(0..=periods);
            let mut row = vec![Condition::Control; controls];
            row.resize(periods, Condition::Trt1);
            row
        })
        .collect();
    DesignGrid::new("single", rows).unwrap()
}

pub fn random_params(rng: &mut StdRng, model: usize) -> StandardizedParams {
    let rho_w = rng.gen_range(0.001..0.6);
    match model {
        0 => StandardizedParams::CrossSectional { rho_w },
        1 => StandardizedParams::Cohort {
            rho_w,
            pi: rng.gen_range(0.0..0.99),
        },
        _ => StandardizedParams::NestedExchangeable {
            rho_w,
            rho_a: rho_w * rng.gen_range(0.0..1.0),
        },
    }
}

pub fn random_cs(rng: &mut StdRng, model: usize) -> CompoundSymmetry {
    let n = rng.gen_range(1..=50);
    CorrelationSpec::standardized(random_params(rng, model), n)
        .compound_symmetry()
        .unwrap()
}

/// Largest entrywise error, each entry scaled by the larger of the two
/// values and the geometric mean of the matching variances.
pub fn max_relative_error(a: &TreatmentCovariance, b: &TreatmentCovariance) -> f64 {
    assert_eq!(a.effects(), b.effects());
    let (ma, mb) = (a.matrix(), b.matrix());
    let k = a.dim();
    let mut worst = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            let scale = ma[(i, j)]
                .abs()
                .max(mb[(i, j)].abs())
                .max((ma[(i, i)] * ma[(j, j)]).sqrt());
            worst = worst.max((ma[(i, j)] - mb[(i, j)]).abs() / scale);
        }
    }
    worst
}

/// Hussey and Hughes' closed-form variance for a single-treatment stepped
/// wedge, written in cluster-period-mean terms.
pub fn hussey_hughes_variance(grid: &DesignGrid, cs: &CompoundSymmetry) -> f64 {
    let (i, t) = (grid.clusters() as f64, grid.periods() as f64);
    let x = |r: usize, c: usize| if grid.cell(r, c).x() { 1.0 } else { 0.0 };
    let u: f64 = (0..grid.clusters())
        .flat_map(|r| (0..grid.periods()).map(move |c| (r, c)))
        .map(|(r, c)| x(r, c))
        .sum();
    let w: f64 = (0..grid.periods())
        .map(|c| (0..grid.clusters()).map(|r| x(r, c)).sum::<f64>().powi(2))
        .sum();
    let v: f64 = (0..grid.clusters())
        .map(|r| (0..grid.periods()).map(|c| x(r, c)).sum::<f64>().powi(2))
        .sum();
    let (s2, tau2) = (cs.sigma_c_sq(), cs.sigma_alpha_sq());
    i * s2 * (s2 + t * tau2) / ((i * u - w) * s2 + (u * u + i * t * u - t * w - i * v) * tau2)
}
