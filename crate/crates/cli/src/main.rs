//! Command-line front end: characterize a query or the difference of two
//! queries with minimal c-instances, evaluate a query on a ground instance,
//! and report syntax-tree complexity metrics.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use drc_chase::chase::{chase, chase_streaming, ChaseConfig, ChaseResult, Variant};
use drc_chase::cinstance::GroundInstance;
use drc_chase::eval::eval_ground;
use drc_chase::query::{difference_query, parse_query, Query};
use drc_chase::schema::{load_schema, Schema};
use drc_chase::tree::{build_syntax_tree, complexity_metrics, SyntaxTree};
use drc_chase::value::{format_rational, Value};
use serde_json::{json, Value as Json};

const EXIT_USAGE: u8 = 1;
const EXIT_INVALID: u8 = 2;

#[derive(Parser)]
#[command(name = "drc-chase", version, about = "Characterize DRC queries with minimal conditional instances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a minimal c-solution for a query or a query difference.
    Characterize(CharacterizeArgs),
    /// Evaluate a query on a ground instance.
    Eval(EvalArgs),
    /// Print complexity metrics of the query's syntax tree.
    Metrics(QueryArgs),
}

#[derive(Args)]
struct QueryArgs {
    /// Schema document (TOML or JSON).
    #[arg(long)]
    schema: PathBuf,
    /// A single query.
    #[arg(long, conflicts_with_all = ["query1", "query2"], required_unless_present_all = ["query1", "query2"])]
    query: Option<PathBuf>,
    /// First query of a difference `query1 - query2`.
    #[arg(long, requires = "query2")]
    query1: Option<PathBuf>,
    /// Second query of a difference `query1 - query2`.
    #[arg(long, requires = "query1")]
    query2: Option<PathBuf>,
}

#[derive(Args)]
struct CharacterizeArgs {
    #[command(flatten)]
    query: QueryArgs,
    /// Also characterize `query2 - query1`.
    #[arg(long, requires = "query1")]
    both: bool,
    #[arg(long, default_value = "disj-add", value_parser = parse_variant)]
    variant: Variant,
    /// Maximum instance size; twice the number of leaves when omitted.
    #[arg(long)]
    limit: Option<usize>,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Report search statistics.
    #[arg(long)]
    stats: bool,
    /// Print satisfying instances as they are found.
    #[arg(long)]
    first_instance: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    schema: PathBuf,
    #[arg(long)]
    query: PathBuf,
    /// Ground instance document `{"tables": {...}}`.
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse()
}

/// A failure after argument parsing, reported with exit code 2.
struct Invalid(String);

impl<E: std::fmt::Display> From<E> for Invalid {
    fn from(e: E) -> Invalid {
        Invalid(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Invalid> {
    std::fs::read_to_string(path).map_err(|e| Invalid(format!("{}: {e}", path.display())))
}

fn read_query(path: &Path, schema: &Schema) -> Result<Query, Invalid> {
    parse_query(&read(path)?, schema).map_err(|e| Invalid(format!("{}: {e}", path.display())))
}

/// One query to characterize, with a label naming where it came from.
struct Target {
    label: String,
    query: Query,
}

fn targets(args: &QueryArgs, schema: &Schema, both: bool) -> Result<Vec<Target>, Invalid> {
    if let Some(p) = &args.query {
        return Ok(vec![Target { label: p.display().to_string(), query: read_query(p, schema)? }]);
    }
    let (p1, p2) = (args.query1.as_ref().expect("clap requires query1"), args.query2.as_ref().expect("clap requires query2"));
    let (q1, q2) = (read_query(p1, schema)?, read_query(p2, schema)?);
    let mut out = vec![Target {
        label: format!("{} - {}", p1.display(), p2.display()),
        query: difference_query(&q1, &q2)?,
    }];
    if both {
        out.push(Target { label: format!("{} - {}", p2.display(), p1.display()), query: difference_query(&q2, &q1)? });
    }
    Ok(out)
}

fn coverage_text(c: &std::collections::BTreeSet<usize>) -> String {
    let ids: Vec<String> = c.iter().map(usize::to_string).collect();
    format!("{{{}}}", ids.join(", "))
}

fn stats_json(r: &ChaseResult) -> Json {
    json!({
        "explored": r.stats.explored,
        "distinct_keys": r.stats.distinct_keys,
        "queue_peak": r.stats.queue_peak,
        "searches": r.stats.searches,
        "raw_results": r.raw_count,
        "wall_time_ms": r.stats.wall_time.as_secs_f64() * 1000.0,
        "emit_times_ms": r.stats.emit_times.iter().map(|d| d.as_secs_f64() * 1000.0).collect::<Vec<_>>(),
    })
}

fn run_text(schema: &Schema, target: &Target, t: &SyntaxTree, cfg: &ChaseConfig, r: &ChaseResult, stats: bool) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "query: {}", target.label);
    let _ = writeln!(out, "variant: {}, limit: {}", cfg.variant, cfg.limit);
    let _ = writeln!(out, "leaves:");
    for (id, text) in t.leaf_legend().iter().enumerate() {
        let _ = writeln!(out, "  {id}: {text}");
    }
    if r.stats.timed_out {
        let _ = writeln!(out, "timed out: the solution below is partial");
    }
    let _ = writeln!(out, "c-instances: {}", r.solution.len());
    for (n, (i, cov)) in r.solution.iter().enumerate() {
        let _ = writeln!(out);
        let _ = writeln!(out, "# c-instance {} (size {}, coverage {})", n + 1, i.size(), coverage_text(cov));
        out.push_str(&i.render_text(schema));
    }
    if stats {
        let s = &r.stats;
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "stats: explored={} distinct_keys={} queue_peak={} searches={} raw_results={} wall_time_ms={:.3}",
            s.explored,
            s.distinct_keys,
            s.queue_peak,
            s.searches,
            r.raw_count,
            s.wall_time.as_secs_f64() * 1000.0
        );
    }
    out
}

fn run_json(schema: &Schema, target: &Target, t: &SyntaxTree, cfg: &ChaseConfig, r: &ChaseResult, stats: bool) -> Json {
    let legend = t.leaf_legend();
    let instances: Vec<Json> = r
        .solution
        .iter()
        .map(|(i, cov)| {
            let mut doc = i.to_json(schema);
            doc["coverage"] = json!(cov);
            doc["leaf_legend"] = json!(legend);
            doc
        })
        .collect();
    let mut doc = json!({
        "query": target.label,
        "variant": cfg.variant.name(),
        "limit": cfg.limit,
        "timed_out": r.stats.timed_out,
        "leaf_legend": legend,
        "instances": instances,
    });
    if stats {
        doc["stats"] = stats_json(r);
    }
    doc
}

fn characterize(args: &CharacterizeArgs) -> Result<String, Invalid> {
    let schema = load_schema(&read(&args.query.schema)?)?;
    let timeout = match args.timeout {
        Some(s) if !(s.is_finite() && s >= 0.0) => return Err(Invalid(format!("invalid timeout {s}"))),
        Some(s) => Some(Duration::from_secs_f64(s)),
        None => None,
    };
    let mut text = String::new();
    let mut runs = Vec::new();
    for target in targets(&args.query, &schema, args.both)? {
        let t = build_syntax_tree(&target.query);
        let cfg = ChaseConfig {
            variant: args.variant,
            limit: args.limit.unwrap_or_else(|| ChaseConfig::default_limit(&t)),
            timeout,
        };
        let r = if args.first_instance {
            let mut found = 0usize;
            let r = chase_streaming(&schema, &t, &cfg, &mut |i| {
                found += 1;
                println!("found instance {found} (size {}):\n{}", i.size(), i.render_text(&schema));
            })?;
            println!(
                "minimality pass: {found} streamed, {} kept; streamed instances may be superseded\n",
                r.solution.len()
            );
            r
        } else {
            chase(&schema, &t, &cfg)?
        };
        match args.format {
            Format::Text => {
                if !text.is_empty() {
                    text.push('\n');
                }
                text.push_str(&run_text(&schema, &target, &t, &cfg, &r, args.stats));
            }
            Format::Structured => runs.push(run_json(&schema, &target, &t, &cfg, &r, args.stats)),
        }
    }
    Ok(match args.format {
        Format::Text => text,
        Format::Structured => format!("{:#}\n", json!({ "runs": runs })),
    })
}

fn plain(v: &Value) -> String {
    match v {
        Value::Str(s) => s.clone(),
        Value::Num(n) => format_rational(n),
    }
}

fn eval(args: &EvalArgs) -> Result<String, Invalid> {
    let schema = load_schema(&read(&args.schema)?)?;
    let q = read_query(&args.query, &schema)?;
    let k = GroundInstance::parse(&schema, &read(&args.instance)?)?;
    let answers = eval_ground(&schema, &q, &k);
    Ok(match args.format {
        Format::Text => {
            let mut out = String::new();
            for row in &answers {
                let cells: Vec<String> = row.iter().map(plain).collect();
                let _ = writeln!(out, "{}", cells.join(", "));
            }
            out
        }
        Format::Structured => {
            let rows: Vec<Vec<String>> = answers.iter().map(|r| r.iter().map(plain).collect()).collect();
            format!("{:#}\n", json!({ "output_vars": q.output_vars, "answers": rows }))
        }
    })
}

fn metrics(args: &QueryArgs) -> Result<String, Invalid> {
    let schema = load_schema(&read(&args.schema)?)?;
    let mut out = String::new();
    for target in targets(args, &schema, false)? {
        let m = complexity_metrics(&build_syntax_tree(&target.query));
        let _ = writeln!(
            out,
            "nodes={} height={} m3={} m4={}",
            m.node_count, m.height, m.universal_plus_or_below, m.quantifier_count
        );
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Characterize(a) => characterize(a),
        Command::Eval(a) => eval(a),
        Command::Metrics(a) => metrics(a),
    };
    match result {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}
