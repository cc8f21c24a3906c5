mod args;
mod inputs;
mod render;

use std::process::ExitCode;

use clap::Parser;
use serde_json::{Map, Value};
use swedge_core::{
    catalog_design, catalog_ids, design_power, serialize_design, serialize_design_json, sweep,
    CorrelationSpec, EffectSpec, MeanModel, Pairing, PowerResult, StandardizedParams, SweepPoint,
    SweepRow,
};

use args::{
    CatalogArgs, Cli, Command, CompareArgs, Format, ModelArgs, OutputArgs, PowerArgs, SweepArgs,
    ValidateArgs,
};
use inputs::{
    correlation, covariance_model, effect_spec, load_design, pairing, policy, rho_grid, CliError,
    CliResult, LoadedDesign,
};
use render::{emit, json_document, json_num, Cell, Table};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Power(a) => cmd_power(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Catalog(a) => cmd_catalog(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn mean_model_name(m: MeanModel) -> &'static str {
    match m {
        MeanModel::Interaction => "interaction",
        MeanModel::Additive => "additive",
    }
}

fn effects_meta(effects: &EffectSpec) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("alpha".into(), json_num(effects.alpha));
    m.insert(
        "mean_model".into(),
        mean_model_name(effects.mean_model).into(),
    );
    let deltas: Map<String, Value> = ["theta1", "theta2", "theta3"]
        .iter()
        .zip(effects.deltas)
        .filter_map(|(k, d)| d.map(|d| (k.to_string(), json_num(d))))
        .collect();
    m.insert("deltas".into(), Value::Object(deltas));
    let contrasts: Vec<Value> = effects
        .contrasts
        .iter()
        .map(|c| {
            let mut o = Map::new();
            o.insert("label".into(), c.label.clone().into());
            o.insert(
                "weights".into(),
                c.weights.iter().map(|&w| json_num(w)).collect(),
            );
            o.insert("effect".into(), json_num(c.effect));
            Value::Object(o)
        })
        .collect();
    m.insert("contrasts".into(), Value::Array(contrasts));
    m
}

fn design_meta(m: &mut Map<String, Value>, d: &LoadedDesign) {
    m.insert("design".into(), d.grid.label().into());
    m.insert("clusters".into(), d.grid.clusters().into());
    m.insert("periods".into(), d.grid.periods().into());
    m.insert("reconstructed".into(), d.reconstructed.into());
}

fn params_meta(m: &mut Map<String, Value>, params: &StandardizedParams) {
    m.insert("rho_w".into(), json_num(params.rho_w()));
    match params {
        StandardizedParams::CrossSectional { .. } => {}
        StandardizedParams::Cohort { pi, .. } => {
            m.insert("pi".into(), json_num(*pi));
        }
        StandardizedParams::NestedExchangeable { rho_a, .. } => {
            m.insert("rho_a".into(), json_num(*rho_a));
        }
    }
}

fn cmd_power(a: PowerArgs) -> CliResult<()> {
    let design = load_design(&a.design, policy(a.effects.permissive))?;
    let spec = correlation(&a.model, a.rho_w, &a.raw)?;
    let effects = effect_spec(&a.effects)?;
    let result = design_power(&design.grid, &spec, &effects)?;

    let mut table = Table::new(vec![
        "label".into(),
        "effect".into(),
        "se".into(),
        "power".into(),
    ]);
    for e in &result.entries {
        table.rows.push(vec![
            Cell::Text(e.label.clone()),
            Cell::Num(e.effect_size),
            Cell::Num(e.se),
            Cell::Num(e.power),
        ]);
    }

    let text = match a.output.format {
        Format::Csv => table.csv(),
        Format::Table => format!(
            "{}\n{}",
            power_header(&design, &spec, &result),
            table.text()
        ),
        Format::Json => {
            let mut meta = Map::new();
            meta.insert("command".into(), "power".into());
            design_meta(&mut meta, &design);
            meta.insert("model".into(), result.model.short_name().into());
            meta.insert(
                "parameterization".into(),
                if a.raw.any() { "raw" } else { "standardized" }.into(),
            );
            meta.insert("n".into(), result.cluster_size.into());
            params_meta(&mut meta, &result.params);
            meta.insert("sigma_y_sq".into(), json_num(result.outcome_variance));
            meta.extend(effects_meta(&effects));
            let cov = &result.covariance;
            let mut c = Map::new();
            c.insert(
                "effects".into(),
                cov.effects()
                    .iter()
                    .map(|e| Value::from(e.label()))
                    .collect(),
            );
            let matrix = cov.matrix();
            c.insert(
                "matrix".into(),
                (0..cov.dim())
                    .map(|r| {
                        (0..cov.dim())
                            .map(|k| json_num(matrix[(r, k)]))
                            .collect::<Value>()
                    })
                    .collect(),
            );
            meta.insert("covariance".into(), Value::Object(c));
            json_document(meta, &table)
        }
    };
    emit(&text, a.output.output.as_deref())
}

fn power_header(design: &LoadedDesign, spec: &CorrelationSpec, r: &PowerResult) -> String {
    let mut params = format!("rho_w {}", render::human(r.params.rho_w()));
    match r.params {
        StandardizedParams::CrossSectional { .. } => {}
        StandardizedParams::Cohort { pi, .. } => params += &format!(", pi {}", render::human(pi)),
        StandardizedParams::NestedExchangeable { rho_a, .. } => {
            params += &format!(", rho_a {}", render::human(rho_a))
        }
    }
    format!(
        "design {} ({} clusters x {} periods{})\nmodel {}, N {}, {params}, sigma_y^2 {}, alpha {}\n",
        design.grid.label(),
        design.grid.clusters(),
        design.grid.periods(),
        if design.reconstructed { ", reconstructed layout" } else { "" },
        r.model.short_name(),
        spec.cluster_size,
        render::human(r.outcome_variance),
        r.alpha,
    )
}

struct SweepSetup {
    pairing: Pairing,
    effects: EffectSpec,
    points: Vec<SweepPoint>,
}

fn sweep_setup(
    model: &ModelArgs,
    grid: Option<&str>,
    effects: &args::EffectArgs,
) -> CliResult<SweepSetup> {
    let pairing = pairing(model)?;
    let effects = effect_spec(effects)?;
    let points = SweepPoint::series(&rho_grid(grid)?, pairing);
    Ok(SweepSetup {
        pairing,
        effects,
        points,
    })
}

/// Leading `rho_w[,rho_a][,pi]` columns and their values for each point.
fn point_columns(pairing: Pairing) -> Vec<String> {
    match pairing {
        Pairing::None => vec!["rho_w".into()],
        Pairing::FixedRhoA(_) | Pairing::Cac(_) => vec!["rho_w".into(), "rho_a".into()],
        Pairing::FixedPi(_) => vec!["rho_w".into(), "pi".into()],
    }
}

fn point_cells(p: &SweepPoint) -> Vec<Cell> {
    let mut cells = vec![Cell::Num(p.rho_w)];
    cells.extend(p.rho_a.map(Cell::Num));
    cells.extend(p.pi.map(Cell::Num));
    cells
}

/// Entry labels in the order of the first successful point.
fn entry_labels(rows: &[SweepRow]) -> Vec<String> {
    rows.iter()
        .find_map(|r| r.result.as_ref().ok())
        .map(|r| r.entries.iter().map(|e| e.label.clone()).collect())
        .unwrap_or_default()
}

fn value(row: &SweepRow, label: &str, pick: fn(&swedge_core::PowerEntry) -> f64) -> Cell {
    row.result
        .as_ref()
        .ok()
        .and_then(|r| r.entry(label))
        .map_or(Cell::Missing, |e| Cell::Num(pick(e)))
}

/// Reports failed points on stderr and turns them into an error carrying the
/// exit code, after the table has been written.
fn check_points(name: &str, rows: &[SweepRow]) -> CliResult<()> {
    let mut failed = 0;
    let mut code = 2;
    for row in rows {
        if let Err(e) = &row.result {
            eprintln!(
                "{name}: point {} (rho_w {}): {e}",
                row.index, row.point.rho_w
            );
            failed += 1;
            if e.is_estimability() {
                code = 3;
            }
        }
    }
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::Points {
            failed,
            total: rows.len(),
            code,
        })
    }
}

fn sweep_meta(command: &str, model: &ModelArgs, s: &SweepSetup) -> Map<String, Value> {
    let mut meta = Map::new();
    meta.insert("command".into(), command.into());
    meta.insert(
        "model".into(),
        covariance_model(model.model).short_name().into(),
    );
    meta.insert("n".into(), model.n.into());
    match s.pairing {
        Pairing::None => {}
        Pairing::FixedRhoA(a) => {
            meta.insert("rho_a".into(), json_num(a));
        }
        Pairing::Cac(r) => {
            meta.insert("cac".into(), json_num(r));
        }
        Pairing::FixedPi(pi) => {
            meta.insert("pi".into(), json_num(pi));
        }
    }
    meta.extend(effects_meta(&s.effects));
    meta.insert("points".into(), s.points.len().into());
    meta
}

fn render_sweep(format: Format, meta: Map<String, Value>, table: &Table) -> String {
    match format {
        Format::Csv => table.csv(),
        Format::Table => table.text(),
        Format::Json => json_document(meta, table),
    }
}

fn cmd_sweep(a: SweepArgs) -> CliResult<()> {
    let design = load_design(&a.design, policy(a.effects.permissive))?;
    let setup = sweep_setup(&a.model, a.rho_grid.as_deref(), &a.effects)?;
    let rows = sweep(
        &design.grid,
        covariance_model(a.model.model),
        a.model.n,
        &setup.effects,
        &setup.points,
    );
    let labels = entry_labels(&rows);

    let mut columns = point_columns(setup.pairing);
    columns.extend(labels.iter().map(|l| format!("se_{l}")));
    columns.extend(labels.iter().map(|l| format!("power_{l}")));
    let mut table = Table::new(columns);
    for row in &rows {
        let mut cells = point_cells(&row.point);
        cells.extend(labels.iter().map(|l| value(row, l, |e| e.se)));
        cells.extend(labels.iter().map(|l| value(row, l, |e| e.power)));
        table.rows.push(cells);
    }

    let mut meta = sweep_meta("sweep", &a.model, &setup);
    design_meta(&mut meta, &design);
    write_output(&a.output, &render_sweep(a.output.format, meta, &table))?;
    check_points(&design.name, &rows)
}

fn write_output(output: &OutputArgs, text: &str) -> CliResult<()> {
    emit(text, output.output.as_deref())
}

fn unique_names(designs: &[LoadedDesign]) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for d in designs {
        let mut name = d.name.clone();
        let mut k = 2;
        while names.contains(&name) {
            name = format!("{}_{k}", d.name);
            k += 1;
        }
        names.push(name);
    }
    names
}

fn cmd_compare(a: CompareArgs) -> CliResult<()> {
    if a.design.len() < 2 {
        return Err(CliError::Usage("compare needs at least two designs".into()));
    }
    let designs = a
        .design
        .iter()
        .map(|d| load_design(d, policy(a.effects.permissive)))
        .collect::<CliResult<Vec<_>>>()?;
    let names = unique_names(&designs);
    let setup = sweep_setup(&a.model, a.rho_grid.as_deref(), &a.effects)?;
    let model = covariance_model(a.model.model);
    let sweeps: Vec<Vec<SweepRow>> = designs
        .iter()
        .map(|d| sweep(&d.grid, model, a.model.n, &setup.effects, &setup.points))
        .collect();
    let labels: Vec<Vec<String>> = sweeps.iter().map(|s| entry_labels(s)).collect();

    let mut columns = point_columns(setup.pairing);
    for (name, ls) in names.iter().zip(&labels) {
        columns.extend(ls.iter().map(|l| format!("se_{l}_{name}")));
        columns.extend(ls.iter().map(|l| format!("power_{l}_{name}")));
    }
    let shared = |k: usize| -> Vec<String> {
        labels[k]
            .iter()
            .filter(|l| labels[0].contains(l))
            .cloned()
            .collect()
    };
    for (k, name) in names.iter().enumerate().skip(1) {
        columns.extend(shared(k).iter().map(|l| format!("diff_{l}_{name}")));
    }

    let mut table = Table::new(columns);
    for (i, point) in setup.points.iter().enumerate() {
        let mut cells = point_cells(point);
        for (rows, ls) in sweeps.iter().zip(&labels) {
            cells.extend(ls.iter().map(|l| value(&rows[i], l, |e| e.se)));
            cells.extend(ls.iter().map(|l| value(&rows[i], l, |e| e.power)));
        }
        for k in 1..designs.len() {
            for l in shared(k) {
                cells.push(
                    match (
                        value(&sweeps[k][i], &l, |e| e.power),
                        value(&sweeps[0][i], &l, |e| e.power),
                    ) {
                        (Cell::Num(p), Cell::Num(base)) => Cell::Num(p - base),
                        _ => Cell::Missing,
                    },
                );
            }
        }
        table.rows.push(cells);
    }

    let mut meta = sweep_meta("compare", &a.model, &setup);
    let ds: Vec<Value> = designs
        .iter()
        .zip(&names)
        .map(|(d, name)| {
            let mut m = Map::new();
            m.insert("name".into(), name.clone().into());
            design_meta(&mut m, d);
            Value::Object(m)
        })
        .collect();
    meta.insert("designs".into(), Value::Array(ds));
    meta.insert("baseline".into(), names[0].clone().into());
    write_output(&a.output, &render_sweep(a.output.format, meta, &table))?;
    for (name, rows) in names.iter().zip(&sweeps) {
        check_points(name, rows)?;
    }
    Ok(())
}

fn cmd_catalog(a: CatalogArgs) -> CliResult<()> {
    let text = match &a.id {
        None if a.json => {
            let entries: Vec<Value> = catalog_ids()
                .map(|id| {
                    let e = catalog_design(id).expect("listed ids exist");
                    let mut m = Map::new();
                    m.insert("id".into(), id.into());
                    m.insert("description".into(), e.description.into());
                    m.insert("clusters".into(), e.grid.clusters().into());
                    m.insert("periods".into(), e.grid.periods().into());
                    m.insert("reconstructed".into(), e.reconstructed.into());
                    Value::Object(m)
                })
                .collect();
            serde_json::to_string_pretty(&entries).expect("JSON values serialize") + "\n"
        }
        None => {
            let mut table = Table::new(vec!["id".into(), "size".into(), "description".into()]);
            for id in catalog_ids() {
                let e = catalog_design(id).expect("listed ids exist");
                let note = if e.reconstructed {
                    " (reconstructed)"
                } else {
                    ""
                };
                table.rows.push(vec![
                    Cell::Text(id.into()),
                    Cell::Text(format!("{}x{}", e.grid.clusters(), e.grid.periods())),
                    Cell::Text(format!("{}{note}", e.description)),
                ]);
            }
            table.text()
        }
        Some(id) => {
            let e = catalog_design(id)?;
            if a.json {
                serialize_design_json(&e.grid, Some(e.reconstructed)) + "\n"
            } else {
                let body = serialize_design(&e.grid);
                let (header, rows) = body.split_once('\n').expect("header line present");
                let flag = if e.reconstructed {
                    "# reconstructed=true\n"
                } else {
                    ""
                };
                format!("{header}\n{flag}{rows}")
            }
        }
    };
    emit(&text, a.output.as_deref())
}

fn cmd_validate(a: ValidateArgs) -> CliResult<()> {
    let d = load_design(&a.design, policy(a.permissive))?;
    println!(
        "{}: {} clusters x {} periods, {}",
        d.name,
        d.grid.clusters(),
        d.grid.periods(),
        match d.grid.validate(policy(false)).violations.len() {
            0 => "no disallowed transitions".to_string(),
            n => format!("{n} disallowed transition(s) accepted under --permissive"),
        }
    );
    Ok(())
}
