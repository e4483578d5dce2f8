mod nodes;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::json;
use varma_causal::effects::{total_causal_effect, windowed_m_separation, EffectQuery, IvSets, WindowPolicy};
use varma_causal::graph::{EdgeMark, Path as GraphPath, SeparationQuery};
use varma_causal::iv::{estimate_from_data, identify_population, IvQuery};
use varma_causal::model::{FullTimeStructure, VarmaSpec};
use varma_causal::simulation::{
    run_faithfulness_experiment, run_gmp_experiment, simulate, EmpiricalConfig, ExperimentConfig, SimulationConfig,
};

use nodes::Components;

#[derive(Parser)]
#[command(name = "varma-causal", version, about = "Causal analysis of VARMA processes with instantaneous effects")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check acyclicity, stability and innovation variances of a model.
    Validate {
        #[arg(short, long)]
        model: PathBuf,
    },
    /// Write a window of the full-time graph as Graphviz DOT.
    Graph {
        #[arg(short, long)]
        model: PathBuf,
        /// Time range `a:b`, e.g. `-3:0`.
        #[arg(long, allow_hyphen_values = true)]
        window: String,
        /// Latent-project the innovations into bi-directed edges.
        #[arg(long)]
        marginalize: bool,
        /// Keep innovation nodes (ignored with --marginalize).
        #[arg(long)]
        innovations: bool,
        /// Also write the adjacency as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// m-separation in the marginalized full-time graph.
    Separate {
        #[arg(short, long)]
        model: PathBuf,
        #[arg(long = "a", value_delimiter = ',', required = true)]
        a: Vec<String>,
        #[arg(long = "b", value_delimiter = ',')]
        b: Vec<String>,
        #[arg(long = "c", value_delimiter = ',', required = true)]
        c: Vec<String>,
        /// How many time steps before the earliest query node the first
        /// window reaches; widened until the verdict is stable.
        #[arg(long)]
        window: Option<i64>,
    },
    /// Total causal effect of a set of nodes on a target.
    Effect {
        #[arg(short, long)]
        model: PathBuf,
        #[arg(long)]
        y: String,
        #[arg(long, value_delimiter = ',', required = true)]
        x: Vec<String>,
    },
    /// Instrumental-variable identification (model) or estimation (data).
    Iv {
        #[arg(short, long, conflicts_with = "data", required_unless_present = "data")]
        model: Option<PathBuf>,
        /// CSV series with a header of component names, one row per step.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        y: String,
        #[arg(long, value_delimiter = ',', required = true)]
        x: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        i: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        b: Vec<String>,
        /// JSON `|I|×|I|` symmetric positive definite weight matrix.
        #[arg(long)]
        weight: Option<PathBuf>,
    },
    /// Simulate a Gaussian trajectory to CSV.
    Simulate {
        #[arg(short, long)]
        model: PathBuf,
        #[arg(short)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        burn_in: Option<usize>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Monte Carlo check of the Markov property or of faithfulness.
    Experiment {
        kind: Kind,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 20)]
        queries: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = varma_causal::stationary::DEFAULT_CI_TOL)]
        tol: f64,
        /// Probability that a coefficient is nonzero.
        #[arg(long)]
        density: Option<f64>,
        /// Also run Fisher-z tests on simulated series of this length.
        #[arg(long)]
        empirical_n: Option<usize>,
        #[arg(short, long)]
        output: PathBuf,
        /// One row per recorded query.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

enum Source {
    Model(VarmaSpec),
    Data(DMatrix<f64>),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Gmp,
    Faithfulness,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn read_model(path: &Path) -> Result<VarmaSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    VarmaSpec::from_json(&text).with_context(|| format!("parsing model {}", path.display()))
}

fn print_json(v: &impl Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn parse_window(s: &str) -> Result<(i64, i64)> {
    let (a, b) = s.split_once(':').ok_or_else(|| anyhow!("window must look like a:b, e.g. -3:0"))?;
    let parse = |v: &str| v.trim().parse::<i64>().map_err(|_| anyhow!("bad window bound '{v}'"));
    Ok((parse(a)?, parse(b)?))
}

fn path_json(c: &Components, p: &GraphPath) -> serde_json::Value {
    let marks: Vec<&str> = p
        .marks
        .iter()
        .map(|m| match m {
            EdgeMark::Forward => "->",
            EdgeMark::Backward => "<-",
            EdgeMark::Bidirected => "<->",
        })
        .collect();
    let mut text = c.label(&p.nodes[0]);
    for (m, v) in marks.iter().zip(&p.nodes[1..]) {
        text.push_str(&format!(" {m} {}", c.label(v)));
    }
    json!({ "nodes": c.labels(&p.nodes), "marks": marks, "text": text })
}

fn read_series(path: &Path) -> Result<(Components, DMatrix<f64>)> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let names: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut values = Vec::new();
    let mut rows = 0;
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != names.len() {
            bail!("row {} has {} fields, header has {}", k + 1, rec.len(), names.len());
        }
        for f in rec.iter() {
            values.push(f.trim().parse::<f64>().with_context(|| format!("row {}: bad number '{f}'", k + 1))?);
        }
        rows += 1;
    }
    Ok((Components::new(names.clone()), DMatrix::from_row_slice(rows, names.len(), &values)))
}

fn read_weight(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let rows: Vec<Vec<f64>> = serde_json::from_str(&text).context("weight must be a JSON array of rows")?;
    let k = rows.len();
    if rows.iter().any(|r| r.len() != k) {
        bail!("weight matrix must be square");
    }
    Ok(DMatrix::from_fn(k, k, |i, j| rows[i][j]))
}

fn run(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Validate { model } => {
            let spec = read_model(&model)?;
            let report = spec.validate();
            print_json(&report)?;
            if !report.passed {
                for m in &report.messages {
                    eprintln!("error: {m}");
                }
                return Ok(ExitCode::from(1));
            }
        }
        Command::Graph { model, window, marginalize, innovations, json, output } => {
            let spec = read_model(&model)?;
            let (a, b) = parse_window(&window)?;
            let w = if marginalize {
                spec.marginalized_admg_window(a, b)?
            } else {
                spec.full_time_window(a, b, innovations)?
            };
            write(&output, &w.graph.to_dot(|v| spec.node_label(v)))?;
            if let Some(p) = json {
                write(&p, &w.graph.to_json()?)?;
            }
            print_json(&json!({
                "nodes": w.graph.len(),
                "directed_edges": w.graph.directed_edges().len(),
                "bidirected_edges": w.graph.bidirected_edges().len(),
                "t_min": w.t_min,
                "t_max": w.t_max,
                "marginalized": w.marginalized,
            }))?;
        }
        Command::Separate { model, a, b, c, window } => {
            let spec = read_model(&model)?;
            let names = Components::of(&spec);
            let (a, b, c) = (names.parse_all(&a)?, names.parse_all(&b)?, names.parse_all(&c)?);
            let q = SeparationQuery::new(a.iter().copied(), b.iter().copied(), c.iter().copied())?;
            let policy = WindowPolicy { depth: window, ..WindowPolicy::default() };
            let s = windowed_m_separation(&spec, &q, &policy, None)?;
            print_json(&json!({
                "verdict": if s.separated { "separated" } else { "connected" },
                "separated": s.separated,
                "a": names.labels(&q.a),
                "b": names.labels(&q.b),
                "c": names.labels(&q.c),
                "witness": s.witness.as_ref().map(|p| path_json(&names, p)),
                "window": [s.t_min, s.t_max],
                "rounds": s.rounds,
            }))?;
        }
        Command::Effect { model, y, x } => {
            let spec = read_model(&model)?;
            let names = Components::of(&spec);
            let q = EffectQuery::new(names.parse(&y)?, names.parse_all(&x)?)?;
            let e = total_causal_effect(&spec, &q)?;
            print_json(&json!({
                "y": names.label(&q.y),
                "x": names.labels(&q.x),
                "beta": e.beta,
            }))?;
        }
        Command::Iv { model, data, y, x, i, b, weight } => {
            let weight = weight.as_deref().map(read_weight).transpose()?;
            let (names, source) = match (&model, &data) {
                (Some(m), _) => {
                    let spec = read_model(m)?;
                    (Components::of(&spec), Source::Model(spec))
                }
                (None, Some(d)) => {
                    let (names, series) = read_series(d)?;
                    (names, Source::Data(series))
                }
                (None, None) => bail!("either --model or --data is required"),
            };
            let sets = IvSets::new(names.parse(&y)?, names.parse_all(&x)?, names.parse_all(&i)?, names.parse_all(&b)?)?;
            let labels = json!({
                "y": names.label(&sets.y),
                "x": names.labels(&sets.x),
                "i": names.labels(&sets.i),
                "b": names.labels(&sets.b),
            });
            let q = IvQuery::new(sets, weight)?;
            let result = match source {
                Source::Model(spec) => identify_population(&spec, &q, &WindowPolicy::default())?,
                Source::Data(series) => {
                    if series.ncols() != names.len() {
                        bail!("series has {} columns", series.ncols());
                    }
                    estimate_from_data(&series, &q)?
                }
            };
            let mut out = serde_json::to_value(&result)?;
            out["sets"] = labels;
            print_json(&out)?;
        }
        Command::Simulate { model, n, seed, burn_in, output } => {
            let spec = read_model(&model)?;
            let cfg = SimulationConfig { n, burn_in, seed };
            let series = simulate(&spec, &cfg)?;
            let mut w = csv::Writer::from_path(&output).with_context(|| format!("writing {}", output.display()))?;
            w.write_record((0..spec.d()).map(|i| spec.component_name(i)))?;
            for row in series.row_iter() {
                w.write_record(row.iter().map(|v| v.to_string()))?;
            }
            w.flush()?;
            print_json(&json!({ "rows": n, "columns": spec.d(), "burn_in": cfg.burn_in_for(&spec), "seed": seed }))?;
        }
        Command::Experiment { kind, trials, queries, seed, tol, density, empirical_n, output, csv: csv_path } => {
            let mut cfg = ExperimentConfig { trials, queries_per_trial: queries, seed, tol, ..Default::default() };
            if let Some(d) = density {
                if !(0.0..=1.0).contains(&d) {
                    bail!("density must lie in [0, 1]");
                }
                cfg.density = d;
            }
            cfg.empirical = empirical_n.map(|n| EmpiricalConfig { n });
            let report = match kind {
                Kind::Gmp => run_gmp_experiment(&cfg)?,
                Kind::Faithfulness => run_faithfulness_experiment(&cfg)?,
            };
            write(&output, &report.to_json()?)?;
            if let Some(p) = csv_path {
                let mut w = csv::Writer::from_path(&p).with_context(|| format!("writing {}", p.display()))?;
                w.write_record([
                    "trial", "a", "b", "c", "separated", "max_abs_covariance", "max_partial_correlation", "degenerate",
                    "violation", "p_value",
                ])?;
                let refs = |v: &[varma_causal::graph::NodeRef]| {
                    v.iter().map(|r| format!("{}@{}", r.component, r.lag)).collect::<Vec<_>>().join(" ")
                };
                for t in &report.trials {
                    for r in &t.queries {
                        w.write_record([
                            t.trial.to_string(),
                            refs(&r.a),
                            refs(&r.b),
                            refs(&r.c),
                            r.separated.to_string(),
                            r.max_abs_covariance.to_string(),
                            r.max_partial_correlation.to_string(),
                            r.degenerate.to_string(),
                            r.violation.to_string(),
                            r.p_value.map(|p| p.to_string()).unwrap_or_default(),
                        ])?;
                    }
                }
                w.flush()?;
            }
            print_json(&report.summary)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
