use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use homsat::atoms::AtomTable;
use homsat::closure::Closure;
use homsat::crosscheck::{crosscheck, exhaustive_corpus, random_corpus};
use homsat::regex::{self, EmptinessReport};
use homsat::semantics::compass::CompassDump;
use homsat::semantics::OracleError;
use homsat::tiling::{self, TilingInstance};
use homsat::{
    brute_force_sat, parse_formula, print_formula, validate_compass, CompassStructure, Dialect,
    Formula, HomogeneousModel, SearchConfig, SearchOrder, Solver, Verdict,
};

/// Exit statuses: positive answer, negative answer, resources exhausted, bad input.
const POSITIVE: u8 = 0;
const NEGATIVE: u8 = 1;
const EXHAUSTED: u8 = 2;
const INPUT_ERROR: u8 = 3;

#[derive(Parser)]
#[command(
    name = "homsat",
    version,
    about = "Satisfiability for BD and ABD over finite homogeneous models"
)]
struct Cli {
    /// Print a JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DialectArg {
    Bd,
    Abd,
}

impl From<DialectArg> for Dialect {
    fn from(d: DialectArg) -> Self {
        match d {
            DialectArg::Bd => Dialect::Bd,
            DialectArg::Abd => Dialect::Abd,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    Bfs,
    Dfs,
}

#[derive(clap::Args)]
struct SearchArgs {
    /// Stop after this many distinct rows.
    #[arg(long, default_value_t = SearchConfig::default().max_states)]
    max_states: usize,
    #[arg(long, value_enum, default_value = "bfs")]
    order: OrderArg,
    /// Include the symbolic worst-case bounds in the statistics.
    #[arg(long)]
    bounds: bool,
}

impl SearchArgs {
    fn config(&self) -> SearchConfig {
        SearchConfig {
            max_states: self.max_states,
            order: match self.order {
                OrderArg::Bfs => SearchOrder::BreadthFirst,
                OrderArg::Dfs => SearchOrder::DepthFirst,
            },
            report_bounds: self.bounds,
            ..SearchConfig::default()
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CorpusKind {
    Exhaustive,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum DumpFormat {
    Text,
    Dot,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Decide a formula with the row-search solver.
    Sat {
        file: PathBuf,
        /// Defaults to the smallest dialect containing the formula.
        #[arg(long, value_enum)]
        dialect: Option<DialectArg>,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Search models up to a height by enumeration.
    Oracle {
        file: PathBuf,
        #[arg(long, default_value_t = 5)]
        max_n: usize,
        #[arg(long, value_enum)]
        dialect: Option<DialectArg>,
    },
    /// Compare solver and oracle over a generated corpus.
    Crosscheck {
        #[arg(long, value_enum, default_value = "bd")]
        dialect: DialectArg,
        #[arg(long, value_enum, default_value = "exhaustive")]
        corpus: CorpusKind,
        /// Largest formula size.
        #[arg(long, default_value_t = 5)]
        size: usize,
        /// Number of random formulas.
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Comma-separated letters.
        #[arg(long, default_value = "p")]
        letters: String,
        #[arg(long, default_value_t = 5)]
        max_n: usize,
        /// Solver state budget per formula.
        #[arg(long, default_value_t = 300_000)]
        budget: usize,
    },
    /// Decide emptiness of a restricted star-free expression.
    RegexEmpty {
        file: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Print the ABD formula of a tiling instance.
    TileEncode { file: PathBuf },
    /// Search a periodic tiling directly.
    TileCheck {
        file: PathBuf,
        #[arg(long, default_value_t = 2)]
        max_prefix: usize,
        #[arg(long, default_value_t = 2)]
        max_period: usize,
    },
    /// Render a compass from a JSON dump or a `sat --json` report.
    CompassDump {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: DumpFormat,
    },
}

struct Outcome {
    code: u8,
    text: String,
    json: Value,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn read_formula(path: &Path, dialect: Option<DialectArg>) -> Result<(Formula, Dialect)> {
    let text = read(path)?;
    let f = parse_formula(text.trim(), Dialect::Abd)
        .with_context(|| format!("in {}", path.display()))?;
    let d = match dialect {
        Some(d) => {
            let d = Dialect::from(d);
            if d == Dialect::Bd && f.dialect() == Dialect::Abd {
                bail!("formula uses <A> but the dialect is bd");
            }
            d
        }
        None => f.dialect(),
    };
    Ok((f, d))
}

fn model_json(m: &HomogeneousModel) -> Value {
    json!(m
        .points()
        .iter()
        .map(|p| p.iter().collect::<Vec<_>>())
        .collect::<Vec<_>>())
}

fn model_text(m: &HomogeneousModel) -> String {
    m.points()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            format!(
                "  {i}: {{{}}}\n",
                p.iter().cloned().collect::<Vec<_>>().join(", ")
            )
        })
        .collect()
}

fn verdict_code(v: &Verdict) -> u8 {
    match v {
        Verdict::Sat(..) => POSITIVE,
        Verdict::Unsat(_) => NEGATIVE,
        Verdict::ResourceExhausted(_) => EXHAUSTED,
    }
}

fn run_sat(file: &Path, dialect: Option<DialectArg>, search: &SearchArgs) -> Result<Outcome> {
    let (f, d) = read_formula(file, dialect)?;
    let cfg = search.config();
    let mut solver = Solver::new(&f, d, &cfg)?;
    let verdict = solver.solve(&cfg)?;
    let mut text = format!("{}\n", verdict.name());
    let certificate = verdict.certificate().map(|c| {
        let m = c.model();
        text += &format!("N = {}\n{}", c.compass.n(), model_text(&m));
        json!({
            "N": c.compass.n(),
            "model": model_json(&m),
            "diagonals": c.trace.diagonals(),
            "compass": c.compass.to_dump(Some(&f)),
        })
    });
    if let Some(e) = &verdict.stats().exhausted {
        text += &format!("stopped: {e}\n");
    }
    Ok(Outcome {
        code: verdict_code(&verdict),
        json: json!({
            "command": "sat",
            "formula": print_formula(&f),
            "dialect": d,
            "verdict": verdict.name(),
            "stats": verdict.stats(),
            "certificate": certificate,
        }),
        text,
    })
}

fn run_oracle(file: &Path, max_n: usize, dialect: Option<DialectArg>) -> Result<Outcome> {
    let (f, _) = read_formula(file, dialect)?;
    let (code, verdict, model) = match brute_force_sat(&f, max_n) {
        Ok(Some(m)) => (POSITIVE, "sat", Some(m)),
        Ok(None) => (NEGATIVE, "no-model-up-to-bound", None),
        Err(e @ OracleError::Budget { .. }) => {
            return Ok(Outcome {
                code: EXHAUSTED,
                text: format!("{e}\n"),
                json: json!({"command": "oracle", "formula": print_formula(&f), "max_n": max_n, "verdict": "budget", "detail": e.to_string()}),
            })
        }
    };
    let mut text = format!("{verdict}\n");
    if let Some(m) = &model {
        text += &format!("N = {}\n{}", m.n(), model_text(m));
    }
    Ok(Outcome {
        code,
        json: json!({
            "command": "oracle",
            "formula": print_formula(&f),
            "max_n": max_n,
            "verdict": verdict,
            "model": model.as_ref().map(model_json),
        }),
        text,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_crosscheck(
    dialect: DialectArg,
    corpus: CorpusKind,
    size: usize,
    count: usize,
    seed: u64,
    letters: &str,
    max_n: usize,
    budget: usize,
) -> Result<Outcome> {
    let d = Dialect::from(dialect);
    let letters: Vec<&str> = letters
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if letters.is_empty() {
        bail!("no letters given");
    }
    let formulas = match corpus {
        CorpusKind::Exhaustive => exhaustive_corpus(&letters, size, d),
        CorpusKind::Random => random_corpus(seed, count, &letters, size, d),
    };
    let cfg = SearchConfig {
        max_states: budget,
        ..SearchConfig::default()
    };
    let r = crosscheck(&formulas, d, max_n, &cfg);
    let code = if r.disagreements > 0 || r.bad_certificates > 0 {
        NEGATIVE
    } else if r.exhausted > 0 || r.oracle_budget > 0 {
        EXHAUSTED
    } else {
        POSITIVE
    };
    let text = format!(
        "{} formulas: {} both sat, {} both unsat, {} sat beyond the cap, {} disagreements, {} exhausted, {} oracle budget, {} bad certificates\n{}",
        r.total,
        r.both_sat,
        r.both_unsat,
        r.sat_beyond_cap,
        r.disagreements,
        r.exhausted,
        r.oracle_budget,
        r.bad_certificates,
        r.issues
            .iter()
            .map(|i| format!("  {:?}: {}\n", i.outcome, i.formula))
            .collect::<String>()
    );
    let mut json = serde_json::to_value(&r)?;
    json["command"] = json!("crosscheck");
    json["seed"] = json!(seed);
    Ok(Outcome { code, text, json })
}

fn run_regex(file: &Path, search: &SearchArgs) -> Result<Outcome> {
    let e = regex::parse(&read(file)?).with_context(|| format!("in {}", file.display()))?;
    let r = regex::emptiness(&e, &search.config())?;
    let report = EmptinessReport::new(&e, &r);
    let code = match r.is_empty() {
        Some(false) => POSITIVE,
        Some(true) => NEGATIVE,
        None => EXHAUSTED,
    };
    let mut text = format!("{}\n", report.verdict);
    if let Some(w) = &r.witness {
        text += &format!("witness: {}\n", w.join(" "));
    }
    let mut json = serde_json::to_value(&report)?;
    json["command"] = json!("regex-empty");
    Ok(Outcome { code, text, json })
}

fn run_tile_encode(file: &Path) -> Result<Outcome> {
    let t =
        TilingInstance::parse(&read(file)?).with_context(|| format!("in {}", file.display()))?;
    let f = tiling::encode(&t);
    let text = print_formula(&f);
    Ok(Outcome {
        code: POSITIVE,
        json: json!({"command": "tile-encode", "instance": t, "size": f.size(), "formula": text}),
        text: format!("{text}\n"),
    })
}

fn run_tile_check(file: &Path, max_prefix: usize, max_period: usize) -> Result<Outcome> {
    let t =
        TilingInstance::parse(&read(file)?).with_context(|| format!("in {}", file.display()))?;
    let w = tiling::brute_force_tiling(&t, max_prefix, max_period);
    let text = match &w {
        Some(w) => {
            let mut s = format!("positive: prefix {}, period {}\n", w.prefix, w.period);
            for y in (0..t.height()).rev() {
                let row: Vec<String> = w.grid.iter().map(|c| c[y].to_string()).collect();
                s += &format!("  {}\n", row.join(" "));
            }
            s
        }
        None => "negative within bounds\n".into(),
    };
    Ok(Outcome {
        code: if w.is_some() { POSITIVE } else { NEGATIVE },
        json: json!({
            "command": "tile-check",
            "max_prefix": max_prefix,
            "max_period": max_period,
            "positive": w.is_some(),
            "witness": w,
        }),
        text,
    })
}

fn run_compass_dump(file: &Path, format: DumpFormat) -> Result<Outcome> {
    let v: Value = serde_json::from_str(&read(file)?).context("not JSON")?;
    let inner = v.pointer("/certificate/compass").cloned().unwrap_or(v);
    let dump: CompassDump = serde_json::from_value(inner).context("not a compass dump")?;
    let Some(text) = &dump.formula else {
        bail!("the dump does not record its formula");
    };
    let f = parse_formula(text, dump.dialect)?;
    let table = Arc::new(AtomTable::new(Closure::new(&f, dump.dialect))?);
    let g = CompassStructure::from_dump(table, &dump).map_err(anyhow::Error::msg)?;
    let violations = validate_compass(&g, &f);
    let rendered = match format {
        DumpFormat::Text => g.render_text(),
        DumpFormat::Dot => g.render_dot(),
        DumpFormat::Json => format!("{}\n", g.to_json(Some(&f))),
    };
    Ok(Outcome {
        code: if violations.is_empty() {
            POSITIVE
        } else {
            NEGATIVE
        },
        json: json!({
            "command": "compass-dump",
            "N": g.n(),
            "valid": violations.is_empty(),
            "violations": violations.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>(),
            "rendered": rendered,
        }),
        text: rendered,
    })
}

fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Sat {
            file,
            dialect,
            search,
        } => run_sat(file, *dialect, search),
        Command::Oracle {
            file,
            max_n,
            dialect,
        } => run_oracle(file, *max_n, *dialect),
        Command::Crosscheck {
            dialect,
            corpus,
            size,
            count,
            seed,
            letters,
            max_n,
            budget,
        } => run_crosscheck(
            *dialect, *corpus, *size, *count, *seed, letters, *max_n, *budget,
        ),
        Command::RegexEmpty { file, search } => run_regex(file, search),
        Command::TileEncode { file } => run_tile_encode(file),
        Command::TileCheck {
            file,
            max_prefix,
            max_period,
        } => run_tile_check(file, *max_prefix, *max_period),
        Command::CompassDump { file, format } => run_compass_dump(file, *format),
    }
}

#[derive(Serialize)]
struct ErrorReport {
    error: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                INPUT_ERROR
            } else {
                POSITIVE
            });
        }
    };
    match run(&cli) {
        Ok(out) => {
            if cli.json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&out.json).expect("report serializes")
                );
            } else {
                print!("{}", out.text);
            }
            ExitCode::from(out.code)
        }
        Err(e) => {
            if cli.json {
                let r = ErrorReport {
                    error: format!("{e:#}"),
                };
                println!(
                    "{}",
                    serde_json::to_string_pretty(&r).expect("report serializes")
                );
            }
            eprintln!("error: {e:#}");
            ExitCode::from(INPUT_ERROR)
        }
    }
}
