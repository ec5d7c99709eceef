//! Command-line front-end: parameter ingestion from flags and flat config
//! files, subcommand dispatch, and deterministic JSON/CSV serialization with
//! all floating-point values at 12 significant digits.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use taxiq::error::ErrorClass;
use taxiq::experiments::{run_figure, Cell, FigureId, FigureOverrides, FigureTable};
use taxiq::model::{transition_rates, validate, InfoLevel, ModelParams, ParamsBuilder, Policy};
use taxiq::observable::{equilibrium_threshold, performance_observable, stationary_observable};
use taxiq::partial_obs::{performance, stationary};
use taxiq::sim::{estimate_conditional_wait, simulate, SimConfig};
use taxiq::strategy::{compare_welfare, equilibrium_q, social_n, social_q, SweepVar};
use taxiq::Error;

#[derive(Parser)]
#[command(
    name = "taxiq",
    version,
    about = "Passenger-taxi double-ended queue analytics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Level {
    Partial,
    Observable,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Sweep {
    Lambda,
    Alpha,
}

/// Model parameters, given as flags or via `--config`; flags win.
#[derive(Args)]
struct ParamArgs {
    /// Flat `name = value` parameter file
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    mu1: Option<f64>,
    #[arg(long)]
    mu2: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    capacity_n: Option<f64>,
    #[arg(long)]
    k1: Option<f64>,
    #[arg(long)]
    k2: Option<f64>,
    #[arg(long)]
    reward_r: Option<f64>,
    #[arg(long)]
    price_p: Option<f64>,
    #[arg(long)]
    cost_cp: Option<f64>,
    #[arg(long)]
    cost_ct: Option<f64>,
    #[arg(long)]
    cost_cmp: Option<f64>,
    #[arg(long)]
    cost_cmt: Option<f64>,
}

impl ParamArgs {
    fn flag_values(&self) -> Vec<(&'static str, f64)> {
        let pairs = [
            ("lambda", self.lambda),
            ("mu1", self.mu1),
            ("mu2", self.mu2),
            ("alpha", self.alpha),
            ("capacity_n", self.capacity_n),
            ("k1", self.k1),
            ("k2", self.k2),
            ("reward_r", self.reward_r),
            ("price_p", self.price_p),
            ("cost_cp", self.cost_cp),
            ("cost_ct", self.cost_ct),
            ("cost_cmp", self.cost_cmp),
            ("cost_cmt", self.cost_cmt),
        ];
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.map(|v| (k, v)))
            .collect()
    }

    fn builder(&self) -> Result<ParamsBuilder, Error> {
        let mut b = ParamsBuilder::new();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| Error::ConfigParse {
                line: 0,
                reason: format!("{}: {e}", path.display()),
            })?;
            b.merge_config_str(&text)?;
        }
        for (k, v) in self.flag_values() {
            b.set(k, v)?;
        }
        Ok(b)
    }

    fn build(&self) -> Result<ModelParams, Error> {
        self.builder()?.build()
    }

    /// Config plus flags, as figure overrides (no completeness required).
    fn overrides(&self) -> Result<Vec<(String, f64)>, Error> {
        let b = self.builder()?;
        Ok(ParamsBuilder::field_names()
            .iter()
            .filter_map(|k| b.get(k).map(|v| (k.to_string(), v)))
            .collect())
    }
}

#[derive(Args)]
struct PolicyArgs {
    /// Joining probability (partially observable case)
    #[arg(long, value_name = "Q")]
    q: Option<f64>,
    /// Joining threshold (observable case)
    #[arg(long, value_name = "N")]
    n_s: Option<i64>,
}

impl PolicyArgs {
    fn policy(&self) -> Result<Policy, Error> {
        match (self.q, self.n_s) {
            (Some(q), None) => Ok(Policy::JoinProbability(q)),
            (None, Some(n_s)) => Ok(Policy::Threshold(n_s)),
            _ => Err(Error::InvalidSweep(
                "exactly one of --q and --n-s is required".to_string(),
            )),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check parameter invariants; warns on rho0 >= 1
    Validate {
        #[arg(long, value_enum, default_value = "partial")]
        level: Level,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Stationary distribution under --q or --n-s
    Stationary {
        #[command(flatten)]
        policy: PolicyArgs,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Performance measures under --q or --n-s
    Measures {
        #[command(flatten)]
        policy: PolicyArgs,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Equilibrium strategy (joining probability or threshold)
    Equilibrium {
        #[arg(long, value_enum, default_value = "partial")]
        level: Level,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Socially optimal strategy (q* or n*)
    Social {
        #[arg(long, value_enum, default_value = "partial")]
        level: Level,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Monte Carlo estimates from the event-driven simulation
    Simulate {
        #[command(flatten)]
        policy: PolicyArgs,
        #[arg(long, default_value_t = 1_000_000)]
        events: u64,
        #[arg(long)]
        warmup: Option<u64>,
        #[arg(long, default_value_t = 5)]
        replications: u32,
        /// Master seed; falls back to TAXIQ_SEED, then 12345
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// One bundled figure sweep (5a 5b 6a 6b 7a 7b 8a 8b 9 10)
    Figure {
        id: String,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        sweep_min: Option<f64>,
        #[arg(long)]
        sweep_max: Option<f64>,
        /// Accepted for interface stability; figure sweeps are deterministic
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Optimal welfare under both information levels along a sweep
    Compare {
        #[arg(long, value_enum)]
        sweep: Sweep,
        #[arg(long)]
        min: f64,
        #[arg(long)]
        max: f64,
        #[arg(long, default_value_t = 25)]
        points: usize,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Transition rates out of one state (diagnostic)
    Rates {
        #[arg(long)]
        state: i64,
        #[command(flatten)]
        policy: PolicyArgs,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
}

/// 12 significant digits, scientific notation; the canonical float format of
/// every output surface.
fn fmt12(x: f64) -> String {
    format!("{:.11e}", x)
}

fn jnum(x: f64) -> Value {
    Value::String(fmt12(x))
}

fn print_value(v: &Value, format: Format) {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(v).unwrap()),
        Format::Csv => print!("{}", object_csv(v)),
    }
}

/// CSV rendering of a flat JSON object (or an object of objects) as
/// `key,value` rows.
fn object_csv(v: &Value) -> String {
    let mut out = String::from("key,value\n");
    fn scalar(v: &Value) -> String {
        match v {
            Value::String(s) => csv_quote(s),
            Value::Null => String::new(),
            other => other.to_string(),
        }
    }
    fn walk(prefix: &str, v: &Value, out: &mut String) {
        match v {
            Value::Object(map) => {
                for (k, val) in map {
                    let key = if prefix.is_empty() {
                        k.clone()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    walk(&key, val, out);
                }
            }
            Value::Array(items) => {
                for (i, val) in items.iter().enumerate() {
                    walk(&format!("{prefix}[{i}]"), val, out);
                }
            }
            other => {
                out.push_str(prefix);
                out.push(',');
                out.push_str(&scalar(other));
                out.push('\n');
            }
        }
    }
    walk("", v, &mut out);
    out
}

fn csv_quote(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn cell_to_json(cell: &Cell) -> Value {
    match cell {
        Cell::Int(v) => json!(v),
        Cell::Num(v) => jnum(*v),
        Cell::Text(s) => json!(s),
        Cell::Empty => Value::Null,
    }
}

fn cell_to_csv(cell: &Cell) -> String {
    match cell {
        Cell::Int(v) => v.to_string(),
        Cell::Num(v) => fmt12(*v),
        Cell::Text(s) => csv_quote(s),
        Cell::Empty => String::new(),
    }
}

fn table_csv(columns: &[String], rows: &[Vec<Cell>]) -> String {
    let mut out = columns.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(cell_to_csv).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn figure_json(t: &FigureTable) -> Value {
    json!({
        "figure": t.figure,
        "columns": t.columns,
        "rows": t.rows.iter()
            .map(|r| Value::Array(r.iter().map(cell_to_json).collect()))
            .collect::<Vec<_>>(),
        "trends": t.trends.iter()
            .map(|c| json!({"name": c.name, "pass": c.pass}))
            .collect::<Vec<_>>(),
    })
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, Error> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("TAXIQ_SEED") {
        Ok(text) => text
            .parse::<u64>()
            .map_err(|_| Error::BadSimConfig("TAXIQ_SEED must be an unsigned integer")),
        Err(_) => Ok(12345),
    }
}

fn level_info(level: Level) -> InfoLevel {
    match level {
        Level::Partial => InfoLevel::PartiallyObservable,
        Level::Observable => InfoLevel::Observable,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Validate {
            level,
            params,
            format,
        } => {
            let p = params.build()?;
            let v = validate(p, level_info(level))?;
            let rho = p.intensities();
            let out = json!({
                "valid": true,
                "warnings": v.warnings.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
                "rho0": jnum(rho.rho0),
                "rho2": jnum(rho.rho2),
            });
            print_value(&out, format);
        }
        Command::Stationary {
            policy,
            params,
            format,
        } => {
            let p = params.build()?;
            match policy.policy()? {
                Policy::JoinProbability(q) => {
                    validate(p, InfoLevel::PartiallyObservable)?;
                    let d = stationary(&p, q)?;
                    match format {
                        Format::Json => {
                            let out = json!({
                                "lower_bound": d.lower_bound,
                                "tail_ratio": jnum(d.tail_ratio),
                                "pi_minus_n": jnum(d.pi_minus_n),
                                "probabilities": d.probabilities.iter()
                                    .map(|p| jnum(*p)).collect::<Vec<_>>(),
                            });
                            print_value(&out, format);
                        }
                        Format::Csv => {
                            let columns = ["state".to_string(), "probability".to_string()];
                            let rows: Vec<Vec<Cell>> = d
                                .probabilities
                                .iter()
                                .enumerate()
                                .map(|(i, p)| {
                                    vec![Cell::Int(d.lower_bound + i as i64), Cell::Num(*p)]
                                })
                                .collect();
                            print!("{}", table_csv(&columns, &rows));
                        }
                    }
                }
                Policy::Threshold(n_s) => {
                    validate(p, InfoLevel::Observable)?;
                    let d = stationary_observable(&p, n_s)?;
                    match format {
                        Format::Json => {
                            let out = json!({
                                "lower_bound": d.lower_bound,
                                "threshold": d.threshold,
                                "pi_minus_n": jnum(d.pi_minus_n),
                                "probabilities": d.probabilities.iter()
                                    .map(|p| jnum(*p)).collect::<Vec<_>>(),
                            });
                            print_value(&out, format);
                        }
                        Format::Csv => {
                            let columns = ["state".to_string(), "probability".to_string()];
                            let rows: Vec<Vec<Cell>> = d
                                .probabilities
                                .iter()
                                .enumerate()
                                .map(|(i, p)| {
                                    vec![Cell::Int(d.lower_bound + i as i64), Cell::Num(*p)]
                                })
                                .collect();
                            print!("{}", table_csv(&columns, &rows));
                        }
                    }
                }
            }
        }
        Command::Measures {
            policy,
            params,
            format,
        } => {
            let p = params.build()?;
            let m = match policy.policy()? {
                Policy::JoinProbability(q) => {
                    validate(p, InfoLevel::PartiallyObservable)?;
                    performance(&p, q)?
                }
                Policy::Threshold(n_s) => {
                    validate(p, InfoLevel::Observable)?;
                    performance_observable(&p, n_s)?
                }
            };
            let out = json!({
                "lambda_p_eff": jnum(m.lambda_p_eff),
                "lambda_t_eff": jnum(m.lambda_t_eff),
                "el_p": jnum(m.el_p),
                "el_t": jnum(m.el_t),
                "ew_p": jnum(m.ew_p),
                "ew_t": jnum(m.ew_t),
                "em": jnum(m.em),
                "no_passenger_flow": m.no_passenger_flow,
            });
            print_value(&out, format);
        }
        Command::Equilibrium {
            level,
            params,
            format,
        } => {
            let p = params.build()?;
            validate(p, level_info(level))?;
            let out = match level {
                Level::Partial => {
                    let e = equilibrium_q(&p)?;
                    json!({
                        "regime": e.regime.to_string(),
                        "q_e": jnum(e.q_e),
                        "l_po": jnum(e.l_po),
                        "v_po": jnum(e.v_po),
                    })
                }
                Level::Observable => json!({ "n_e": equilibrium_threshold(&p) }),
            };
            print_value(&out, format);
        }
        Command::Social {
            level,
            params,
            format,
        } => {
            let p = params.build()?;
            validate(p, level_info(level))?;
            let out = match level {
                Level::Partial => {
                    let o = social_q(&p)?;
                    json!({
                        "q_star": jnum(o.q_star),
                        "welfare_at_opt": jnum(o.welfare_at_opt),
                        "boundary": o.boundary,
                        "derivative_root": o.derivative_root.map(jnum).unwrap_or(Value::Null),
                        "diagnostic": o.diagnostic.map(Value::String).unwrap_or(Value::Null),
                    })
                }
                Level::Observable => {
                    let o = social_n(&p)?;
                    let existence = match o.existence {
                        taxiq::observable::ExistenceCase::NoSolution => "no_solution",
                        taxiq::observable::ExistenceCase::UniqueAtOne => "unique_at_one",
                        taxiq::observable::ExistenceCase::UniqueAboveOne => "unique_above_one",
                    };
                    json!({
                        "n_star": o.n_star,
                        "welfare_at_opt": jnum(o.welfare_at_opt),
                        "boundary": o.boundary,
                        "existence": existence,
                        "route_candidate": o.route_candidate.map(|v| json!(v)).unwrap_or(Value::Null),
                        "routes_agree": o.routes_agree.map(Value::Bool).unwrap_or(Value::Null),
                    })
                }
            };
            print_value(&out, format);
        }
        Command::Simulate {
            policy,
            events,
            warmup,
            replications,
            seed,
            params,
            format,
        } => {
            let p = params.build()?;
            let pol = policy.policy()?;
            match pol {
                Policy::JoinProbability(_) => validate(p, InfoLevel::PartiallyObservable)?,
                Policy::Threshold(_) => validate(p, InfoLevel::Observable)?,
            };
            let config = SimConfig {
                horizon_events: events,
                warmup_events: warmup.unwrap_or(events / 10),
                seed: resolve_seed(seed)?,
                replications,
            };
            let r = simulate(&p, &pol, &config)?;
            let tv = match pol {
                Policy::JoinProbability(q) => {
                    let d = stationary(&p, q)?;
                    r.occupancy.tv_distance(&|n| d.prob(n), d.upper_bound())
                }
                Policy::Threshold(n_s) => {
                    let d = stationary_observable(&p, n_s)?;
                    r.occupancy.tv_distance(&|n| d.prob(n), n_s)
                }
            };
            let cond_wait = match pol {
                Policy::JoinProbability(q) if q > 0.0 => {
                    Some(estimate_conditional_wait(&p, q, &config)?)
                }
                _ => None,
            };
            let mut measures = Map::new();
            for (k, est) in &r.measures {
                measures.insert(
                    k.clone(),
                    json!({
                        "mean": jnum(est.mean),
                        "half_width_95": jnum(est.half_width_95),
                        "replications": est.replications,
                    }),
                );
            }
            if let Some(cw) = cond_wait {
                measures.insert(
                    "conditional_wait".to_string(),
                    json!({
                        "mean": jnum(cw.mean),
                        "half_width_95": jnum(cw.half_width_95),
                        "replications": cw.replications,
                    }),
                );
            }
            let out = json!({
                "measures": Value::Object(measures),
                "tv_vs_analytic": jnum(tv),
                "seed": config.seed,
                "events": config.horizon_events,
                "warmup": config.warmup_events,
            });
            print_value(&out, format);
        }
        Command::Figure {
            id,
            points,
            sweep_min,
            sweep_max,
            seed: _,
            params,
            format,
        } => {
            let fid: FigureId = id.parse()?;
            let ov = FigureOverrides {
                params: params.overrides()?,
                points,
                sweep_min,
                sweep_max,
            };
            let t = run_figure(fid, &ov)?;
            match format {
                Format::Json => print_value(&figure_json(&t), format),
                Format::Csv => {
                    print!("{}", table_csv(&t.columns, &t.rows));
                    for c in &t.trends {
                        eprintln!("trend {} {}", c.name, if c.pass { "pass" } else { "fail" });
                    }
                }
            }
        }
        Command::Compare {
            sweep,
            min,
            max,
            points,
            params,
            format,
        } => {
            let p = params.build()?;
            if min.partial_cmp(&max) != Some(std::cmp::Ordering::Less) || points < 2 {
                return Err(Error::InvalidSweep(format!(
                    "need min < max and points >= 2, got [{min}, {max}] x {points}"
                )));
            }
            let grid: Vec<f64> = (0..points)
                .map(|i| min + (max - min) * i as f64 / (points - 1) as f64)
                .collect();
            let (var, var_name) = match sweep {
                Sweep::Lambda => (SweepVar::Lambda, "lambda"),
                Sweep::Alpha => (SweepVar::Alpha, "alpha"),
            };
            let rows = compare_welfare(&p, var, &grid);
            let columns: Vec<String> = [
                var_name,
                "q_star",
                "s_star_partial",
                "n_star",
                "s_star_observable",
                "error",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect();
            let cell_rows: Vec<Vec<Cell>> = rows
                .iter()
                .map(|r| {
                    vec![
                        Cell::Num(r.x),
                        r.q_star.map_or(Cell::Empty, Cell::Num),
                        r.s_partial.map_or(Cell::Empty, Cell::Num),
                        r.n_star.map_or(Cell::Empty, Cell::Int),
                        r.s_observable.map_or(Cell::Empty, Cell::Num),
                        r.error.clone().map_or(Cell::Empty, Cell::Text),
                    ]
                })
                .collect();
            match format {
                Format::Json => {
                    let out = json!({
                        "columns": columns,
                        "rows": cell_rows.iter()
                            .map(|r| Value::Array(r.iter().map(cell_to_json).collect()))
                            .collect::<Vec<_>>(),
                    });
                    print_value(&out, format);
                }
                Format::Csv => print!("{}", table_csv(&columns, &cell_rows)),
            }
        }
        Command::Rates {
            state,
            policy,
            params,
            format,
        } => {
            let p = params.build()?;
            let rates = transition_rates(&p, state, &policy.policy()?)?;
            let out = json!({
                "state": state,
                "transitions": rates.iter()
                    .map(|(t, r)| json!({"target": t, "rate": jnum(*r)}))
                    .collect::<Vec<_>>(),
            });
            print_value(&out, format);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{e}");
                    ExitCode::from(4)
                }
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error[{}]: {err}", err.code());
            match err.class() {
                ErrorClass::Validation => ExitCode::from(2),
                ErrorClass::Numerical => ExitCode::from(3),
                ErrorClass::Usage => ExitCode::from(4),
            }
        }
    }
}
