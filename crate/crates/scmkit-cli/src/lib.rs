//! Command line front end. `run` is the whole program; the binary only
//! forwards its arguments and exit code.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use scmkit::analysis::Distribution;
use scmkit::causal::Level;
use scmkit::markov::SeparationKind;
use scmkit::transform::Intervention;
use scmkit::{dsl, parse_real, Error, MixedGraph, Model, StructuralModel, Value};

/// Environment variable overriding the tolerance of linear models.
pub const TOLERANCE_VAR: &str = "SCMKIT_TOLERANCE";

#[derive(Parser, Debug)]
#[command(name = "scmkit", version, about = "Analyse structural causal models written in the .scm format")]
struct Cli {
    /// Print error details and witnesses.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a model and print its canonical text.
    Parse { file: PathBuf },
    /// Print one of the graphs of a model.
    Graph {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = GraphKind::Functional)]
        kind: GraphKind,
        /// Variables kept when computing the causal graph of a margin.
        #[arg(long, value_delimiter = ',')]
        context: Option<Vec<String>>,
        #[arg(long, value_enum, default_value_t = GraphFormat::Dot)]
        format: GraphFormat,
    },
    /// Apply a perfect intervention.
    Intervene {
        file: PathBuf,
        #[arg(long = "set", value_delimiter = ',', required = true)]
        set: Vec<String>,
        #[command(flatten)]
        out: Output,
    },
    /// Build the twin model used for counterfactuals.
    Twin {
        file: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Turn every noise variable into an endogenous copy.
    Extend {
        file: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Eliminate a uniquely solvable set of variables.
    Marginalize {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        over: Vec<String>,
        #[command(flatten)]
        out: Output,
    },
    /// Decide a solvability property; exit code 1 means false.
    Check {
        file: PathBuf,
        #[command(flatten)]
        what: CheckWhat,
    },
    /// Print the observational or interventional distribution.
    Dist {
        file: PathBuf,
        #[arg(long = "do", value_delimiter = ',')]
        intervention: Vec<String>,
        #[arg(long, value_enum, default_value_t = DataFormat::Text)]
        format: DataFormat,
    },
    /// Print the distributions reached by choosing one solution per noise value.
    Polytope {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = DataFormat::Text)]
        format: DataFormat,
    },
    /// Answer a counterfactual query in the twin model.
    Counterfactual {
        file: PathBuf,
        #[arg(long = "factual-do", value_delimiter = ',')]
        factual: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        observe: Vec<String>,
        /// Interventions in the counterfactual world; unprimed names refer to the copies.
        #[arg(long = "cf-do", value_delimiter = ',')]
        counterfactual: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        query: Vec<String>,
        #[arg(long, value_enum, default_value_t = DataFormat::Text)]
        format: DataFormat,
    },
    /// Decide d- or sigma-separation; exit code 1 means not separated.
    Sep {
        /// A model (its functional graph is used) or a graph in JSON.
        file: Option<PathBuf>,
        #[arg(long, conflicts_with = "file")]
        graph: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', required = true)]
        a: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        b: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        given: Vec<String>,
        #[arg(long, value_enum, default_value_t = SepKind::Sigma)]
        kind: SepKind,
    },
    /// Check the Markov property; exit code 1 means a violation was found.
    Markov {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = SepKind::Sigma)]
        kind: SepKind,
        /// Largest conditioning set tested; defaults to all sizes.
        #[arg(long = "max-cond")]
        max_cond: Option<usize>,
        #[arg(long, value_enum, default_value_t = DataFormat::Text)]
        format: DataFormat,
    },
    /// Compare two models; exit code 1 means not equivalent.
    Equiv {
        first: PathBuf,
        second: PathBuf,
        #[arg(long, value_enum, default_value_t = EquivLevel::Obs)]
        level: EquivLevel,
        /// Variables compared; defaults to those shared by both models.
        #[arg(long, value_delimiter = ',')]
        wrt: Option<Vec<String>>,
        #[arg(long, value_enum, default_value_t = DataFormat::Text)]
        format: DataFormat,
    },
}

#[derive(Args, Debug)]
struct Output {
    /// Write the model here instead of standard output.
    #[arg(short = 'o', long = "output")]
    path: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct CheckWhat {
    #[arg(long, value_delimiter = ',')]
    solvable: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    unique: Option<Vec<String>>,
    /// Uniquely solvable w.r.t. every single variable.
    #[arg(long)]
    structural: bool,
    /// Uniquely solvable w.r.t. every subset.
    #[arg(long = "all-subsets")]
    all_subsets: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum GraphKind {
    Augmented,
    Functional,
    Causal,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum GraphFormat {
    Dot,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum DataFormat {
    Text,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SepKind {
    D,
    Sigma,
}

impl From<SepKind> for SeparationKind {
    fn from(k: SepKind) -> Self {
        match k {
            SepKind::D => SeparationKind::D,
            SepKind::Sigma => SeparationKind::Sigma,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum EquivLevel {
    Obs,
    Int,
    Cf,
}

/// Failure of a command: a library error or a usage problem.
#[derive(Debug)]
enum Failure {
    Model(Error),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Model(e)
    }
}

type Outcome = Result<bool, Failure>;

/// Runs the program with `args` (including the program name) and returns
/// the exit code: 0 for success or a true verdict, 1 for a false verdict,
/// 2 for usage and model errors.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
                let _ = writeln!(err, "{first}");
            }
            return code;
        }
    };
    match execute(&cli.command, out, cli.verbose) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(Failure::Model(e)) => {
            let _ = writeln!(err, "error: {e}");
            if cli.verbose {
                let _ = writeln!(err, "{e:?}");
            }
            2
        }
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            2
        }
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn tolerance() -> Result<Option<f64>, Failure> {
    match std::env::var(TOLERANCE_VAR) {
        Ok(v) => match parse_real(&v) {
            Some(t) if t > 0.0 => Ok(Some(t)),
            _ => Err(Failure::Usage(format!("{TOLERANCE_VAR} must be a positive number, got {v}"))),
        },
        Err(_) => Ok(None),
    }
}

fn load(path: &Path) -> Result<Model, Failure> {
    let text = read_text(path)?;
    let model = dsl::parse(&text).map_err(|e| match e {
        Error::Parse(p) => Failure::Usage(format!("{}: {p}", path.display())),
        e => Failure::Model(e),
    })?;
    Ok(match tolerance()? {
        Some(t) => model.with_tolerance(t),
        None => model,
    })
}

fn assignments(items: &[String]) -> Result<Vec<(String, String)>, Failure> {
    items
        .iter()
        .map(|s| match s.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() && !v.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
            _ => Err(Failure::Usage(format!("expected NAME=VALUE, got {s:?}"))),
        })
        .collect()
}

fn reals(pairs: &[(String, String)]) -> Result<Vec<(String, f64)>, Failure> {
    pairs
        .iter()
        .map(|(k, v)| parse_real(v).map(|x| (k.clone(), x)).ok_or_else(|| Failure::Usage(format!("{k}: not a number: {v}"))))
        .collect()
}

fn values(pairs: &[(String, String)]) -> Vec<(String, Value)> {
    pairs.iter().map(|(k, v)| (k.clone(), Value::parse(v))).collect()
}

fn emit_model(m: &Model, out: &Output, stdout: &mut dyn Write) -> Outcome {
    let text = dsl::serialize(m);
    match &out.path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display())))?,
        None => write_out(stdout, &text)?,
    }
    Ok(true)
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes()).map_err(|e| Failure::Usage(format!("cannot write output: {e}")))?;
    if !text.ends_with('\n') {
        out.write_all(b"\n").map_err(|e| Failure::Usage(format!("cannot write output: {e}")))?;
    }
    Ok(())
}

fn json_text(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("json values serialize")
}

fn execute(cmd: &Command, out: &mut dyn Write, verbose: bool) -> Outcome {
    match cmd {
        Command::Parse { file } => {
            let m = load(file)?;
            write_out(out, &dsl::serialize(&m))?;
            Ok(true)
        }
        Command::Graph { file, kind, context, format } => {
            let m = load(file)?;
            let g = match (kind, context) {
                (GraphKind::Augmented, None) => m.augmented_graph(),
                (GraphKind::Functional, None) => m.functional_graph(),
                (GraphKind::Causal, None) => m.direct_causal_graph()?,
                (GraphKind::Causal, Some(c)) => m.direct_causal_graph_wrt(c)?,
                (_, Some(_)) => return Err(Failure::Usage("--context only applies to --kind causal".into())),
            };
            let text = match format {
                GraphFormat::Dot => g.to_dot(),
                GraphFormat::Json => json_text(&g.to_json()),
            };
            write_out(out, &text)?;
            Ok(true)
        }
        Command::Intervene { file, set, out: dest } => {
            let m = load(file)?.intervene_str(&assignments(set)?)?;
            emit_model(&m, dest, out)
        }
        Command::Twin { file, out: dest } => emit_model(&load(file)?.twin()?, dest, out),
        Command::Extend { file, out: dest } => emit_model(&load(file)?.extend()?, dest, out),
        Command::Marginalize { file, over, out: dest } => emit_model(&load(file)?.marginalize(over)?, dest, out),
        Command::Check { file, what } => {
            let m = load(file)?;
            let verdict = if let Some(s) = &what.solvable {
                m.solvable_wrt(s)?
            } else if let Some(s) = &what.unique {
                m.uniquely_solvable_wrt(s)?
            } else if what.structural {
                m.structurally_uniquely_solvable()
            } else {
                m.uniquely_solvable_all_subsets()?
            };
            write_out(out, &verdict.to_string())?;
            Ok(verdict)
        }
        Command::Dist { file, intervention, format } => {
            let m = load(file)?;
            let m = if intervention.is_empty() { m } else { m.intervene_str(&assignments(intervention)?)? };
            let d = m.observational_distribution()?;
            write_out(out, &if *format == DataFormat::Json { json_text(&d.to_json()) } else { d.to_text() })?;
            Ok(true)
        }
        Command::Polytope { file, format } => {
            let Model::Finite(m) = load(file)? else {
                return Err(Failure::Usage("polytope needs a finite model".into()));
            };
            let vertices = m.observational_polytope()?;
            if *format == DataFormat::Json {
                let v: Vec<_> = vertices.iter().map(|d| d.to_json()).collect();
                write_out(out, &json_text(&serde_json::Value::Array(v)))?;
            } else {
                let mut text = format!("{} vertices\n", vertices.len());
                for (i, d) in vertices.iter().enumerate() {
                    text.push_str(&format!("# vertex {}\n{}", i + 1, d.to_text()));
                }
                write_out(out, &text)?;
            }
            Ok(true)
        }
        Command::Counterfactual { file, factual, observe, counterfactual, query, format } => {
            let m = load(file)?;
            let (f, o, c) = (assignments(factual)?, assignments(observe)?, assignments(counterfactual)?);
            let query: Vec<&str> = query.iter().map(String::as_str).collect();
            let d = match &m {
                Model::Finite(m) => {
                    let obs = values(&o);
                    let obs: Vec<(&str, Value)> = obs.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
                    Distribution::Discrete(m.counterfactual_distribution(
                        &Intervention::new(values(&f)),
                        &obs,
                        &Intervention::new(values(&c)),
                        &query,
                    )?)
                }
                Model::Linear(m) => {
                    let obs = reals(&o)?;
                    let obs: Vec<(&str, f64)> = obs.iter().map(|(k, v)| (k.as_str(), *v)).collect();
                    Distribution::Gaussian(m.counterfactual_distribution(
                        &Intervention::new(reals(&f)?),
                        &obs,
                        &Intervention::new(reals(&c)?),
                        &query,
                    )?)
                }
            };
            write_out(out, &if *format == DataFormat::Json { json_text(&d.to_json()) } else { d.to_text() })?;
            Ok(true)
        }
        Command::Sep { file, graph, a, b, given, kind } => {
            let g = match (file, graph) {
                (Some(p), None) if p.extension().is_some_and(|e| e == "json") => load_graph(p)?,
                (Some(p), None) => load(p)?.functional_graph(),
                (None, Some(p)) => load_graph(p)?,
                _ => return Err(Failure::Usage("give a model file or --graph".into())),
            };
            let verdict = match kind {
                SepKind::D => g.d_separated(a, b, given)?,
                SepKind::Sigma => g.sigma_separated(a, b, given)?,
            };
            write_out(out, &verdict.to_string())?;
            Ok(verdict)
        }
        Command::Markov { file, kind, max_cond, format } => {
            let m = load(file)?;
            let max = max_cond.unwrap_or_else(|| m.endogenous_names().len());
            let report = m.verify_markov((*kind).into(), max)?;
            if *format == DataFormat::Json {
                write_out(out, &json_text(&report.to_json()))?;
            } else if verbose {
                write_out(out, &report.to_string())?;
            } else {
                let mut text = String::new();
                for t in report.violations() {
                    text.push_str(&format!("violation: {} vs {} given {{{}}}\n", t.a.join(","), t.b.join(","), t.given.join(",")));
                }
                text.push_str(&format!(
                    "{} statements tested, {} violation(s)",
                    report.triples.len(),
                    report.violations().len()
                ));
                write_out(out, &text)?;
            }
            Ok(report.holds())
        }
        Command::Equiv { first, second, level, wrt, format } => {
            let (m1, m2) = (load(first)?, load(second)?);
            let margin = match wrt {
                Some(w) => w.clone(),
                None => {
                    let other = m2.endogenous_names();
                    m1.endogenous_names().into_iter().filter(|n| other.contains(n)).collect()
                }
            };
            let level = match level {
                EquivLevel::Obs => Level::Observational,
                EquivLevel::Int => Level::Interventional,
                EquivLevel::Cf => Level::Counterfactual,
            };
            let report = m1.equivalent(&m2, level, &margin)?;
            let text = if *format == DataFormat::Json { json_text(&report.to_json()) } else { report.to_string() };
            write_out(out, &text)?;
            Ok(report.verdict)
        }
    }
}

fn load_graph(path: &Path) -> Result<MixedGraph, Failure> {
    let text = read_text(path)?;
    let v: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: invalid JSON: {e}", path.display())))?;
    Ok(MixedGraph::from_json(&v)?)
}
