//! Scripted parameter sweeps emitting CSV-ready tables for the ten bundled
//! figure scenarios, with the qualitative trend assertions evaluated and
//! reported as pass/fail flags.
//!
//! Scenario defaults live in `data/figures.json`, which ships with the crate
//! and tags every value's provenance (scenario default, swept, family,
//! required input, or unused filler). Sweep ranges and point counts are
//! configuration, not ground truth, and can be overridden.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::Deserialize;

use crate::error::Error;
use crate::model::{validate, InfoLevel, ModelParams, ParamsBuilder};
use crate::observable::equilibrium_threshold;
use crate::strategy::{compare_welfare, equilibrium_q, social_n, social_q, SweepVar};

const MANIFEST_JSON: &str = include_str!("../data/figures.json");

/// Identifier of a bundled figure scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigureId {
    F5a,
    F5b,
    F6a,
    F6b,
    F7a,
    F7b,
    F8a,
    F8b,
    F9,
    F10,
}

impl FigureId {
    pub const ALL: [FigureId; 10] = [
        FigureId::F5a,
        FigureId::F5b,
        FigureId::F6a,
        FigureId::F6b,
        FigureId::F7a,
        FigureId::F7b,
        FigureId::F8a,
        FigureId::F8b,
        FigureId::F9,
        FigureId::F10,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            FigureId::F5a => "5a",
            FigureId::F5b => "5b",
            FigureId::F6a => "6a",
            FigureId::F6b => "6b",
            FigureId::F7a => "7a",
            FigureId::F7b => "7b",
            FigureId::F8a => "8a",
            FigureId::F8b => "8b",
            FigureId::F9 => "9",
            FigureId::F10 => "10",
        }
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        FigureId::ALL
            .iter()
            .find(|id| id.key() == s)
            .copied()
            .ok_or_else(|| Error::UnknownFigure(s.to_string()))
    }
}

#[derive(Debug, Clone, Deserialize)]
struct SweepSpec {
    var: String,
    min: f64,
    max: f64,
    integer: bool,
}

#[derive(Debug, Clone, Deserialize)]
struct FamilySpec {
    var: String,
    values: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
struct FigureSpec {
    #[allow(dead_code)]
    source: String,
    quantity: String,
    params: BTreeMap<String, f64>,
    #[allow(dead_code)]
    provenance: BTreeMap<String, String>,
    required: Vec<String>,
    sweep: SweepSpec,
    family: Option<FamilySpec>,
    trends: Vec<String>,
}

fn manifest() -> &'static BTreeMap<String, FigureSpec> {
    static MANIFEST: OnceLock<BTreeMap<String, FigureSpec>> = OnceLock::new();
    MANIFEST.get_or_init(|| serde_json::from_str(MANIFEST_JSON).expect("bundled manifest parses"))
}

/// Overrides applied on top of a figure's bundled defaults.
#[derive(Debug, Clone, Default)]
pub struct FigureOverrides {
    /// Parameter overrides by field name.
    pub params: Vec<(String, f64)>,
    /// Number of sweep points (default 25; integer sweeps use unit steps).
    pub points: Option<usize>,
    pub sweep_min: Option<f64>,
    pub sweep_max: Option<f64>,
}

/// A single table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Empty,
}

/// One evaluated trend assertion.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendCheck {
    pub name: String,
    pub pass: bool,
}

/// The sweep output: a column-labelled table plus trend flags.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureTable {
    pub figure: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub trends: Vec<TrendCheck>,
}

fn sweep_grid(spec: &SweepSpec, ov: &FigureOverrides) -> Result<Vec<f64>, Error> {
    let min = ov.sweep_min.unwrap_or(spec.min);
    let max = ov.sweep_max.unwrap_or(spec.max);
    if min.partial_cmp(&max) != Some(std::cmp::Ordering::Less) {
        return Err(Error::InvalidSweep(format!("min {min} >= max {max}")));
    }
    if spec.integer {
        let lo = min.ceil() as i64;
        let hi = max.floor() as i64;
        if hi < lo {
            return Err(Error::InvalidSweep("empty integer range".to_string()));
        }
        return Ok((lo..=hi).map(|v| v as f64).collect());
    }
    let points = ov.points.unwrap_or(25);
    if points < 2 {
        return Err(Error::InvalidSweep("need at least 2 points".to_string()));
    }
    Ok((0..points)
        .map(|i| min + (max - min) * i as f64 / (points - 1) as f64)
        .collect())
}

fn build_params(
    spec: &FigureSpec,
    ov: &FigureOverrides,
    extra: &[(&str, f64)],
) -> Result<ModelParams, Error> {
    let mut b = ParamsBuilder::new();
    for (k, v) in &spec.params {
        b.set(k, *v)?;
    }
    for (k, v) in &ov.params {
        b.set(k, *v)?;
    }
    for (k, v) in extra {
        b.set(k, *v)?;
    }
    b.build()
}

/// Runs one figure sweep with overrides; every row is a pure function of
/// `(figure id, overrides)`, and per-point failures are recorded in the
/// row's `error` column.
pub fn run_figure(id: FigureId, overrides: &FigureOverrides) -> Result<FigureTable, Error> {
    let spec = &manifest()[id.key()];
    for req in &spec.required {
        let provided = overrides.params.iter().any(|(k, _)| k == req);
        if !provided {
            // sadly leaks a &'static str through the error; map known keys
            let field = ParamsBuilder::field_names()
                .iter()
                .find(|f| *f == req)
                .copied()
                .unwrap_or("parameter");
            return Err(Error::MissingOverride(field));
        }
    }
    let grid = sweep_grid(&spec.sweep, overrides)?;
    let family_values: Vec<Option<f64>> = match &spec.family {
        Some(f) => f.values.iter().copied().map(Some).collect(),
        None => vec![None],
    };

    let mut columns: Vec<String> = Vec::new();
    if let Some(f) = &spec.family {
        columns.push(f.var.clone());
    }
    columns.push(spec.sweep.var.clone());
    let value_columns: Vec<&str> = match spec.quantity.as_str() {
        "equilibrium_q" => vec!["q_e", "regime"],
        "social_q" => vec!["q_star", "s_at_opt"],
        "equilibrium_threshold" => vec!["n_e"],
        "social_n" => vec!["n_star", "s_at_opt"],
        "compare_lambda" | "compare_alpha" => {
            vec!["q_star", "s_star_partial", "n_star", "s_star_observable"]
        }
        other => panic!("manifest names unknown quantity {other}"),
    };
    columns.extend(value_columns.iter().map(|c| c.to_string()));
    columns.push("error".to_string());

    let mut rows = Vec::new();
    for family in &family_values {
        // the compare quantities evaluate the whole grid in one call
        if spec.quantity.starts_with("compare_") {
            let params = build_params(spec, overrides, &[])?;
            let var = if spec.quantity == "compare_lambda" {
                SweepVar::Lambda
            } else {
                SweepVar::Alpha
            };
            for row in compare_welfare(&params, var, &grid) {
                rows.push(vec![
                    Cell::Num(row.x),
                    row.q_star.map_or(Cell::Empty, Cell::Num),
                    row.s_partial.map_or(Cell::Empty, Cell::Num),
                    row.n_star.map_or(Cell::Empty, Cell::Int),
                    row.s_observable.map_or(Cell::Empty, Cell::Num),
                    row.error.map_or(Cell::Empty, Cell::Text),
                ]);
            }
            continue;
        }
        for &x in &grid {
            let mut extra: Vec<(&str, f64)> = vec![(spec.sweep.var.as_str(), x)];
            if let (Some(f), Some(v)) = (&spec.family, family) {
                extra.push((f.var.as_str(), *v));
            }
            let mut row: Vec<Cell> = Vec::with_capacity(columns.len());
            if let Some(v) = family {
                row.push(if spec.family.as_ref().unwrap().var == "capacity_n" {
                    Cell::Int(*v as i64)
                } else {
                    Cell::Num(*v)
                });
            }
            row.push(if spec.sweep.integer {
                Cell::Int(x as i64)
            } else {
                Cell::Num(x)
            });
            let outcome = build_params(spec, overrides, &extra).and_then(|params| {
                match spec.quantity.as_str() {
                    "equilibrium_q" => {
                        validate(params, InfoLevel::PartiallyObservable)?;
                        let e = equilibrium_q(&params)?;
                        Ok(vec![Cell::Num(e.q_e), Cell::Text(e.regime.to_string())])
                    }
                    "social_q" => {
                        validate(params, InfoLevel::PartiallyObservable)?;
                        let o = social_q(&params)?;
                        Ok(vec![Cell::Num(o.q_star), Cell::Num(o.welfare_at_opt)])
                    }
                    "equilibrium_threshold" => {
                        validate(params, InfoLevel::Observable)?;
                        Ok(vec![Cell::Int(equilibrium_threshold(&params) as i64)])
                    }
                    "social_n" => {
                        validate(params, InfoLevel::Observable)?;
                        let o = social_n(&params)?;
                        Ok(vec![Cell::Int(o.n_star), Cell::Num(o.welfare_at_opt)])
                    }
                    _ => unreachable!(),
                }
            });
            match outcome {
                Ok(mut cells) => {
                    row.append(&mut cells);
                    row.push(Cell::Empty);
                }
                Err(e) => {
                    for _ in value_columns.iter() {
                        row.push(Cell::Empty);
                    }
                    row.push(Cell::Text(e.code().to_string()));
                }
            }
            rows.push(row);
        }
    }

    let trends = spec
        .trends
        .iter()
        .map(|name| TrendCheck {
            name: name.clone(),
            pass: evaluate_trend(name, &columns, &rows),
        })
        .collect();

    Ok(FigureTable {
        figure: id.key().to_string(),
        columns,
        rows,
        trends,
    })
}

fn col_index(columns: &[String], name: &str) -> usize {
    columns
        .iter()
        .position(|c| c == name)
        .expect("known column")
}

fn numeric(cell: &Cell) -> Option<f64> {
    match cell {
        Cell::Num(v) => Some(*v),
        Cell::Int(v) => Some(*v as f64),
        _ => None,
    }
}

/// Direction checks over the emitted rows; gaps (error rows) are skipped.
fn evaluate_trend(name: &str, columns: &[String], rows: &[Vec<Cell>]) -> bool {
    let tol = 1e-9;
    // monotonicity of `value` along `along`, grouped by the remaining key column
    let mono = |value: &str, along: &str, increasing: bool| -> bool {
        let vi = col_index(columns, value);
        let ai = col_index(columns, along);
        let group_col = columns
            .iter()
            .position(|c| c != value && c != along && (c == "mu2" || c == "capacity_n"))
            .filter(|_| columns[0] != *along);
        let mut groups: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
        for row in rows {
            let (Some(a), Some(v)) = (numeric(&row[ai]), numeric(&row[vi])) else {
                continue;
            };
            let key = match group_col {
                Some(g) => format!("{:?}", row[g]),
                None => String::new(),
            };
            groups.entry(key).or_default().push((a, v));
        }
        groups.values().all(|pts| {
            let mut sorted = pts.clone();
            sorted.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
            sorted.windows(2).all(|w| {
                let scale = tol * w[0].1.abs().max(1.0);
                if increasing {
                    w[1].1 >= w[0].1 - scale
                } else {
                    w[1].1 <= w[0].1 + scale
                }
            })
        })
    };
    // monotonicity across the family variable at each sweep point
    let mono_family = |value: &str, family: &str, increasing: bool| -> bool {
        let vi = col_index(columns, value);
        let fi = col_index(columns, family);
        let ai = col_index(columns, &columns[1].clone());
        let mut by_x: BTreeMap<u64, Vec<(f64, f64)>> = BTreeMap::new();
        for row in rows {
            let (Some(f), Some(v), Some(x)) =
                (numeric(&row[fi]), numeric(&row[vi]), numeric(&row[ai]))
            else {
                continue;
            };
            by_x.entry(x.to_bits()).or_default().push((f, v));
        }
        by_x.values().all(|pts| {
            let mut sorted = pts.clone();
            sorted.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
            sorted.windows(2).all(|w| {
                let scale = tol * w[0].1.abs().max(1.0);
                if increasing {
                    w[1].1 >= w[0].1 - scale
                } else {
                    w[1].1 <= w[0].1 + scale
                }
            })
        })
    };
    match name {
        "q_e_down_lambda" => mono("q_e", "lambda", false),
        "q_e_up_mu2" => mono_family("q_e", "mu2", true),
        "q_star_down_lambda" => mono("q_star", "lambda", false),
        "q_star_up_mu2" => mono_family("q_star", "mu2", true),
        "q_star_up_alpha" => mono("q_star", "alpha", true),
        "q_star_up_n" => mono_family("q_star", "capacity_n", true),
        "n_e_up_mu2" => mono("n_e", "mu2", true),
        "n_e_down_k2" => mono("n_e", "k2", false),
        "n_star_up_lambda" => mono("n_star", "lambda", true),
        "n_star_up_n" => mono("n_star", "capacity_n", true),
        "s_partial_up_alpha" => mono("s_star_partial", "alpha", true),
        "s_observable_up_alpha" => mono("s_star_observable", "alpha", true),
        "crossing_pattern" => {
            let oi = col_index(columns, "s_star_observable");
            let pi = col_index(columns, "s_star_partial");
            let pairs: Vec<(f64, f64)> = rows
                .iter()
                .filter_map(|r| Some((numeric(&r[oi])?, numeric(&r[pi])?)))
                .collect();
            let low = pairs.iter().position(|(o, p)| o >= p);
            let high = pairs.iter().rposition(|(o, p)| o <= p);
            matches!((low, high), (Some(l), Some(h)) if l <= h)
        }
        other => panic!("manifest names unknown trend {other}"),
    }
}
