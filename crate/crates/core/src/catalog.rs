//! Built-in example designs.
//!
//! Layouts whose cell-by-cell arrangement is only known through their stated
//! counts and sequence descriptions are marked `reconstructed`.

use crate::design::{concurrent_design, generate_standard_swd, Condition, DesignGrid};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub description: &'static str,
    pub reconstructed: bool,
    pub grid: DesignGrid,
}

const IDS: [(&str, &str, bool); 11] = [
    ("fig1", "single-treatment SWD, 6 clusters, 4 periods", false),
    (
        "fig2a-trt1",
        "separate single-treatment SWD for treatment 1",
        false,
    ),
    (
        "fig2a-trt2",
        "separate single-treatment SWD for treatment 2",
        false,
    ),
    ("fig2b", "concurrent two-treatment SWD, 12 clusters", false),
    ("fig2c", "concurrent two-treatment SWD, 10 clusters", true),
    (
        "fig5a",
        "late factorial SWD, 12 clusters, combined condition in period 4",
        false,
    ),
    (
        "fig5b",
        "earlier factorial SWD, 10 clusters, combined condition from period 3",
        true,
    ),
    (
        "fig8-design1",
        "8 clusters, one transition per cluster (concurrent style)",
        true,
    ),
    (
        "fig8-design2",
        "8 clusters, control -> single -> combined sequences",
        true,
    ),
    (
        "fig8-design3",
        "8 clusters, classic stepped single treatments, all combined at the end",
        true,
    ),
    (
        "fig8-design4",
        "8 clusters, two clusters never combined, earlier combined starts",
        true,
    ),
];

pub fn catalog_ids() -> impl Iterator<Item = &'static str> {
    IDS.iter().map(|(id, _, _)| *id)
}

pub fn catalog_design(id: &str) -> Result<CatalogEntry> {
    let &(id, description, reconstructed) = IDS
        .iter()
        .find(|(k, _, _)| *k == id)
        .ok_or_else(|| Error::UnknownCatalogId(id.to_string()))?;
    let grid = build(id)?.with_label(id)?;
    Ok(CatalogEntry {
        id,
        description,
        reconstructed,
        grid,
    })
}

fn rows(spec: &[(&str, usize)]) -> Vec<Vec<Condition>> {
    spec.iter()
        .flat_map(|&(seq, times)| {
            let row: Vec<Condition> = seq
                .chars()
                .map(|ch| match ch {
                    'C' => Condition::Control,
                    '1' => Condition::Trt1,
                    '2' => Condition::Trt2,
                    'B' => Condition::Both,
                    _ => unreachable!("bad catalog cell {ch}"),
                })
                .collect();
            std::iter::repeat_n(row, times)
        })
        .collect()
}

fn build(id: &str) -> Result<DesignGrid> {
    let grid = |spec: &[(&str, usize)]| DesignGrid::new(id, rows(spec));
    match id {
        "fig1" | "fig2a-trt1" => generate_standard_swd(3, 2, Condition::Trt1),
        "fig2a-trt2" => generate_standard_swd(3, 2, Condition::Trt2),
        "fig2b" => concurrent_design(
            &generate_standard_swd(3, 2, Condition::Trt1)?,
            &generate_standard_swd(3, 2, Condition::Trt2)?,
        ),
        "fig2c" => grid(&[
            ("C111", 2),
            ("CC11", 2),
            ("CCC1", 1),
            ("C222", 2),
            ("CC22", 2),
            ("CCC2", 1),
        ]),
        "fig5a" => grid(&[
            ("C11B", 2),
            ("CC1B", 2),
            ("CCCB", 2),
            ("C22B", 2),
            ("CC2B", 2),
            ("CCCB", 2),
        ]),
        "fig5b" => grid(&[("C11B", 3), ("C22B", 3), ("CCBB", 2), ("CCCB", 2)]),
        "fig8-design1" => grid(&[
            ("C1111", 1),
            ("CC111", 1),
            ("C2222", 1),
            ("CC222", 1),
            ("CBBBB", 1),
            ("CCBBB", 1),
            ("CCCBB", 1),
            ("CCCCB", 1),
        ]),
        "fig8-design2" => grid(&[
            ("C1BBB", 1),
            ("C11BB", 1),
            ("CC11B", 1),
            ("C22BB", 1),
            ("CC22B", 2),
            ("CCC11", 1),
            ("CCCC2", 1),
        ]),
        "fig8-design3" => grid(&[
            ("C111B", 1),
            ("CC11B", 2),
            ("C222B", 1),
            ("CC22B", 2),
            ("CCCBB", 2),
        ]),
        "fig8-design4" => grid(&[
            ("C1111", 1),
            ("CC11B", 1),
            ("CCC1B", 1),
            ("C2222", 1),
            ("CC22B", 1),
            ("CCC2B", 1),
            ("CCBBB", 2),
        ]),
        _ => Err(Error::UnknownCatalogId(id.to_string())),
    }
}
