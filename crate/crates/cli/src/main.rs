mod input;
mod output;

use std::collections::HashMap;
use std::fs;
use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use robust_doe::bridge::{coefficients_for, tilde_constant};
use robust_doe::exact::exact_criteria;
use robust_doe::model::enumerate_submodels;
use robust_doe::numeric::combinations;
use robust_doe::reproduce::{example_regular, table_nonregular, table_saturated, ReproduceOptions, Reproduction};
use robust_doe::search::ObjectiveRoute;
use robust_doe::timing::time_paths;
use robust_doe::{
    averaged_tilde_from_gwlp, cpw_search, e_s2, gwlp, gwlp_up_to, project, projection_average_exact,
    projection_average_tilde, verify_bridge, weight_table, weight_table_enumerated, xi_from_weights, Design, Error,
    HarmonicPooling, ModelOrder, PriorSpec, RankReport, Result, SearchConfig, WeightTable,
};

use input::{load_design, load_designs, parse_k, parse_prior, parse_range, KSpec};
use output::{Output, Record};

#[derive(Parser)]
#[command(name = "robust-doe", version, about = "Model-robust criteria and search for two-level designs")]
struct Cli {
    /// Render aligned tables instead of JSON Lines.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact and/or approximate criteria averaged over k-factor projections.
    Evaluate(EvaluateArgs),
    /// Rank designs under two criteria and correlate the ranks.
    Rank(RankArgs),
    /// Recompute a reference table and compare cell by cell.
    Reproduce(ReproduceArgs),
    /// Columnwise-pairwise search for a robust design.
    Search(SearchArgs),
    /// Wordlength-pattern form of the approximate criterion.
    Bridge(BridgeArgs),
    /// Generalized wordlength pattern and E(s^2).
    Gwlp(GwlpArgs),
    /// Wall time of the exact and approximate paths on the 14-run suite.
    Timing(TimingArgs),
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Projection sizes: `5`, `2,3`, `2..5`, or `m` for all factors.
    #[arg(long, value_parser = parse_k, default_value = "m")]
    k: KSpec,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// `equal`, `pi1=.5,pi2=.25`, inline JSON, or a JSON file.
    #[arg(long, default_value = "equal")]
    prior: String,
    #[arg(long, value_enum, default_value_t = Order::Second)]
    order: Order,
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    First,
    Second,
}

impl From<Order> for ModelOrder {
    fn from(o: Order) -> Self {
        match o {
            Order::First => ModelOrder::First,
            Order::Second => ModelOrder::Second,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Pooling {
    Pooled,
    PerProjection,
}

impl From<Pooling> for HarmonicPooling {
    fn from(p: Pooling) -> Self {
        match p {
            Pooling::Pooled => HarmonicPooling::Pooled,
            Pooling::PerProjection => HarmonicPooling::PerProjection,
        }
    }
}

#[derive(Args)]
struct EvaluateArgs {
    /// Design files or fixture names.
    #[arg(required = true)]
    designs: Vec<String>,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, group = "path")]
    exact: bool,
    #[arg(long, group = "path")]
    approx: bool,
    #[arg(long, group = "path")]
    both: bool,
    /// How the harmonic fallback is averaged over projections.
    #[arg(long, value_enum, default_value_t = Pooling::Pooled)]
    pooling: Pooling,
    /// Include per-projection, per-submodel traces in exact reports.
    #[arg(short, long)]
    verbose: bool,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Criterion {
    Exact,
    Approx,
}

fn parse_compare(text: &str) -> std::result::Result<(Criterion, Criterion), String> {
    let (a, b) = text.split_once(':').ok_or("expected FIRST:SECOND, e.g. exact:approx")?;
    let one = |s: &str| Criterion::from_str(s.trim(), true).map_err(|_| format!("unknown criterion '{s}'"));
    Ok((one(a)?, one(b)?))
}

#[derive(Args)]
struct RankArgs {
    #[arg(required = true, num_args = 2..)]
    designs: Vec<String>,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_parser = parse_compare, default_value = "exact:approx")]
    compare: (Criterion, Criterion),
}

#[derive(Clone, Copy, ValueEnum)]
enum Table {
    #[value(name = "3")]
    Nonregular,
    #[value(name = "5")]
    Saturated,
    #[value(name = "ex413")]
    Regular,
}

#[derive(Args)]
struct ReproduceArgs {
    #[arg(long, value_enum)]
    table: Table,
    /// Accept any cell within this absolute tolerance of the printed value.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = Pooling::Pooled)]
    pooling: Pooling,
}

#[derive(Args)]
struct SearchArgs {
    /// JSON configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    factors: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    pi1: Option<f64>,
    #[arg(long)]
    pi2: Option<f64>,
    /// Full prior specification, as for `evaluate`.
    #[arg(long, conflicts_with_all = ["pi1", "pi2"])]
    prior: Option<String>,
    #[arg(long, value_enum)]
    order: Option<Order>,
    #[arg(long)]
    g: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_sweeps: Option<usize>,
    /// Evaluate this many random projections per step while searching.
    #[arg(long)]
    sample: Option<usize>,
    /// Always average over projections directly.
    #[arg(long)]
    direct: bool,
    /// Starting design for the first restart.
    #[arg(long)]
    start: Option<String>,
    /// Where to write the best design.
    #[arg(long)]
    out: PathBuf,
    /// Where to write the JSON trace; defaults to OUT with a .trace.json suffix.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct BridgeArgs {
    /// One design, or two to check the difference identity.
    #[arg(required = true, num_args = 1..=2)]
    designs: Vec<String>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct GwlpArgs {
    #[arg(required = true)]
    designs: Vec<String>,
    /// Longest word length; defaults to all when m ≤ 16, else 4.
    #[arg(long)]
    order: Option<usize>,
}

#[derive(Args)]
struct TimingArgs {
    #[arg(long, value_parser = parse_range, default_value = "2..5")]
    k_range: RangeInclusive<usize>,
    /// Minimum milliseconds spent timing each path at each k.
    #[arg(long, default_value_t = 200)]
    min_ms: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let out = Output::new(cli.pretty);
    let result = match cli.command {
        Command::Evaluate(a) => evaluate(&a, &out),
        Command::Rank(a) => rank(&a, &out),
        Command::Reproduce(a) => return reproduce(&a, &out),
        Command::Search(a) => search(a, &out),
        Command::Bridge(a) => bridge(&a, &out),
        Command::Gwlp(a) => gwlp_cmd(&a, &out),
        Command::Timing(a) => timing(&a, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Argument(format!("alpha {alpha} is outside [0, 1]")));
    }
    Ok(())
}

fn check_k(d: &Design, k: usize) -> Result<()> {
    if k > d.factors() {
        return Err(Error::Argument(format!("{}: k = {k} exceeds its {} factors", d.label(), d.factors())));
    }
    Ok(())
}

/// Weight tables keyed by (k, N), built on first use.
struct Weights {
    prior: PriorSpec,
    order: ModelOrder,
    approx: HashMap<(usize, usize), WeightTable>,
    exact: HashMap<(usize, usize), WeightTable>,
}

impl Weights {
    fn new(prior: PriorSpec, order: ModelOrder) -> Self {
        Self { prior, order, approx: HashMap::new(), exact: HashMap::new() }
    }

    fn approx(&mut self, k: usize, n: usize) -> Result<&WeightTable> {
        if !self.approx.contains_key(&(k, n)) {
            let w = weight_table(&self.order.maximal(k), &self.prior, n)?;
            self.approx.insert((k, n), w);
        }
        Ok(&self.approx[&(k, n)])
    }

    fn exact(&mut self, k: usize, n: usize) -> Result<&WeightTable> {
        if !self.exact.contains_key(&(k, n)) {
            let max = self.order.maximal(k);
            let w = weight_table_enumerated(&enumerate_submodels(&max, n)?, &self.prior, &max, n)?;
            self.exact.insert((k, n), w);
        }
        Ok(&self.exact[&(k, n)])
    }
}

fn evaluate(a: &EvaluateArgs, out: &Output) -> Result<()> {
    check_alpha(a.model.alpha)?;
    let designs = load_designs(&a.designs)?;
    let mut weights = Weights::new(parse_prior(&a.model.prior)?, a.model.order.into());
    let (want_exact, want_approx) = match (a.exact, a.approx, a.both) {
        (true, _, _) => (true, false),
        (_, true, _) => (false, true),
        (_, _, true) => (true, true),
        _ => (false, true),
    };
    let alpha = a.model.alpha;
    let mut records = Vec::new();
    for d in &designs {
        for k in a.model.k.resolve(d.factors()) {
            check_k(d, k)?;
            let mut r = record!("label" => d.label(), "N" => d.runs(), "m" => d.factors(), "k" => k, "alpha" => alpha);
            if want_approx {
                let t = projection_average_tilde(d, k, weights.approx(k, d.runs())?, alpha)?;
                r.extend(record!("tilde_p" => t.tilde_p, "tilde_a" => t.tilde_a, "tilde_i" => t.tilde_i));
            }
            if want_exact {
                let w = weights.exact(k, d.runs())?;
                let e = projection_average_exact(d, k, w, alpha, a.pooling.into())
                    .map_err(|e| Error::Argument(format!("{}: {e}", d.label())))?;
                r.extend(record!(
                    "p_alpha" => e.p_alpha,
                    "a_s" => e.a_s,
                    "i_s" => e.i_s,
                    "used_harmonic" => e.used_harmonic,
                    "projections" => e.projections,
                ));
                if a.verbose {
                    r.insert("per_projection".into(), per_projection_detail(d, k, w, alpha)?);
                }
            }
            records.push(r);
        }
    }
    out.records(&records);
    Ok(())
}

fn per_projection_detail(d: &Design, k: usize, w: &WeightTable, alpha: f64) -> Result<Value> {
    let mut items = Vec::new();
    for cols in combinations(d.factors(), k) {
        let report = match exact_criteria(&project(d, &cols)?, w, alpha, true) {
            Ok(r) => serde_json::to_value(r).expect("report serializes"),
            Err(Error::AllInestimable(_)) => Value::Null,
            Err(e) => return Err(e),
        };
        let columns: Vec<usize> = cols.iter().map(|c| c + 1).collect();
        items.push(json!({ "columns": columns, "report": report }));
    }
    Ok(Value::Array(items))
}

fn rank(a: &RankArgs, out: &Output) -> Result<()> {
    check_alpha(a.model.alpha)?;
    let designs = load_designs(&a.designs)?;
    let mut weights = Weights::new(parse_prior(&a.model.prior)?, a.model.order.into());
    let ks: Vec<usize> = match &a.model.k {
        KSpec::All => {
            let m = designs[0].factors();
            if designs.iter().any(|d| d.factors() != m) {
                return Err(Error::Argument("k = m needs designs with equal factor counts".into()));
            }
            vec![m]
        }
        KSpec::Values(v) => v.clone(),
    };
    let mut records = Vec::new();
    for k in ks {
        let mut values = |c: Criterion| -> Result<(Vec<f64>, bool)> {
            let mut vals = Vec::new();
            let mut exact = Vec::new();
            for d in &designs {
                check_k(d, k)?;
                match c {
                    Criterion::Approx => {
                        vals.push(projection_average_tilde(d, k, weights.approx(k, d.runs())?, a.model.alpha)?.tilde_p)
                    }
                    Criterion::Exact => exact.push(projection_average_exact(
                        d,
                        k,
                        weights.exact(k, d.runs())?,
                        a.model.alpha,
                        HarmonicPooling::Pooled,
                    )?),
                }
            }
            // one inestimable design switches every design to the harmonic form
            let harmonic = exact.iter().any(|e| e.used_harmonic);
            vals.extend(exact.iter().map(|e| if harmonic { e.harmonic_p(a.model.alpha) } else { e.p_alpha }));
            Ok((vals, harmonic))
        };
        let (first, h1) = values(a.compare.0)?;
        let (second, h2) = values(a.compare.1)?;
        let labels = designs.iter().map(|d| d.label().to_string()).collect();
        let report = RankReport::new(labels, first, second)?;
        if out.is_pretty() {
            let rows: Vec<Record> = (0..report.labels.len())
                .map(|i| {
                    record!(
                        "label" => report.labels[i],
                        "first" => report.first[i],
                        "first_rank" => report.first_ranks[i],
                        "second" => report.second[i],
                        "second_rank" => report.second_ranks[i],
                    )
                })
                .collect();
            out.line(&format!("k = {k}"));
            out.records(&rows);
            out.line(&format!("rank correlation {:.3}\n", report.correlation));
        } else {
            let mut r = record!("k" => k, "alpha" => a.model.alpha, "harmonic" => h1 || h2);
            if let Value::Object(body) = serde_json::to_value(&report).expect("report serializes") {
                r.extend(body);
            }
            records.push(r);
        }
    }
    out.records(&records);
    Ok(())
}

fn reproduce(a: &ReproduceArgs, out: &Output) -> ExitCode {
    let opts = ReproduceOptions { tol: a.tol, pooling: a.pooling.into() };
    let rep: Result<Reproduction> = match a.table {
        Table::Regular => example_regular(&opts),
        Table::Nonregular => table_nonregular(&opts),
        Table::Saturated => table_saturated(&opts),
    };
    let rep = match rep {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let rows: Vec<Record> = rep
        .cells
        .iter()
        .map(|c| {
            record!(
                "row" => c.row,
                "column" => c.column,
                "computed" => c.computed,
                "printed" => c.printed,
                "match" => c.rule,
                "ok" => c.ok(),
            )
        })
        .collect();
    let failed = rep.mismatches().count();
    let summary = record!(
        "table" => rep.table,
        "cells" => rep.cells.len(),
        "mismatches" => failed,
        "passed" => rep.passed(),
        "notices" => rep.notices,
    );
    if out.is_pretty() {
        out.records(&rows);
        for n in &rep.notices {
            out.line(&format!("note: {n}"));
        }
        out.line(&format!("{} of {} cells match", rep.cells.len() - failed, rep.cells.len()));
    } else {
        out.records(&rows);
        out.records(&[summary]);
    }
    if rep.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn search(a: SearchArgs, out: &Output) -> Result<()> {
    let mut cfg: SearchConfig = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Argument(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Error::Argument(format!("{}: {e}", path.display())))?
        }
        None => SearchConfig::default(),
    };
    macro_rules! set {
        ($($field:ident <- $flag:expr),*) => { $(if let Some(v) = $flag { cfg.$field = v; })* };
    }
    set!(n_runs <- a.runs, n_factors <- a.factors, k <- a.k, alpha <- a.alpha, g <- a.g,
         restarts <- a.restarts, seed <- a.seed, max_sweeps <- a.max_sweeps);
    if a.k.is_none() && a.config.is_none() {
        cfg.k = cfg.n_factors;
    }
    if let Some(o) = a.order {
        cfg.order = o.into();
    }
    if a.sample.is_some() {
        cfg.projection_sample = a.sample;
    }
    if a.direct {
        cfg.route = ObjectiveRoute::Direct;
    }
    if let Some(p) = &a.prior {
        cfg.prior = parse_prior(p)?;
    } else if a.pi1.is_some() || a.pi2.is_some() {
        let (pi1, pi2) = match cfg.prior {
            PriorSpec::Symmetric { pi1, pi2 } => (pi1, pi2),
            _ => (0.5, 0.25),
        };
        cfg.prior = PriorSpec::hierarchical(a.pi1.unwrap_or(pi1), a.pi2.unwrap_or(pi2));
    }
    if let Some(s) = &a.start {
        cfg.start = Some(load_design(s)?);
    }
    let outcome = cpw_search(&cfg)?;
    let best = outcome.design().clone().with_label("search");
    let trace_path = a.trace.clone().unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".trace.json");
        PathBuf::from(p)
    });
    let write = |path: &PathBuf, text: String| {
        fs::write(path, text).map_err(|e| Error::Argument(format!("{}: {e}", path.display())))
    };
    write(&a.out, best.to_text())?;
    let trace = json!({ "config": cfg, "best_restart": outcome.best, "traces": outcome.traces });
    write(&trace_path, serde_json::to_string_pretty(&trace).expect("trace serializes"))?;
    let moves: usize = outcome.traces.iter().map(|t| t.moves.len()).sum();
    out.records(&[record!(
        "design_file" => a.out.display().to_string(),
        "trace_file" => trace_path.display().to_string(),
        "N" => cfg.n_runs,
        "m" => cfg.n_factors,
        "k" => cfg.k,
        "objective" => outcome.objective(),
        "best_restart" => outcome.best,
        "restarts" => outcome.traces.len(),
        "moves" => moves,
        "es2" => e_s2(&best).ok(),
    )]);
    Ok(())
}

fn bridge(a: &BridgeArgs, out: &Output) -> Result<()> {
    check_alpha(a.model.alpha)?;
    let designs = load_designs(&a.designs)?;
    let prior = parse_prior(&a.model.prior)?;
    let order: ModelOrder = a.model.order.into();
    let alpha = a.model.alpha;
    let mut records = Vec::new();
    for d in &designs {
        for k in a.model.k.resolve(d.factors()) {
            check_k(d, k)?;
            let w = weight_table(&order.maximal(k), &prior, d.runs())?;
            let xi = xi_from_weights(&w)?;
            let b = gwlp_up_to(d, 4).b;
            let n = d.runs() as f64;
            let constant = tilde_constant(k, w.maximal().interactions().len(), &xi, alpha, d.runs());
            let from_words = averaged_tilde_from_gwlp(&b, d.factors(), &w, &xi, alpha);
            records.push(record!(
                "label" => d.label(),
                "k" => k,
                "alpha" => alpha,
                "xi" => xi,
                "coefficients" => coefficients_for(&w, &xi, alpha),
                "gwlp" => b,
                "value" => (from_words - constant) * n,
                "constant" => constant,
                "tilde_p_from_gwlp" => from_words,
                "tilde_p" => projection_average_tilde(d, k, &w, alpha)?.tilde_p,
            ));
        }
    }
    if let [d1, d2] = designs.as_slice() {
        if d1.factors() != d2.factors() || d1.runs() != d2.runs() {
            return Err(Error::Argument("the difference check needs designs of equal size".into()));
        }
        let w = weight_table(&order.maximal(d1.factors()), &prior, d1.runs())?;
        records.push(record!(
            "pair" => [d1.label(), d2.label()],
            "residual" => verify_bridge(d1, d2, &w, alpha)?,
        ));
    }
    out.records(&records);
    Ok(())
}

fn gwlp_cmd(a: &GwlpArgs, out: &Output) -> Result<()> {
    let records: Vec<Record> = load_designs(&a.designs)?
        .iter()
        .map(|d| {
            let g = match a.order {
                Some(o) => gwlp_up_to(d, o),
                None => gwlp(d),
            };
            record!("label" => d.label(), "N" => d.runs(), "m" => d.factors(), "gwlp" => g.b, "es2" => e_s2(d).ok())
        })
        .collect();
    out.records(&records);
    Ok(())
}

fn timing(a: &TimingArgs, out: &Output) -> Result<()> {
    if *a.k_range.end() > 5 {
        return Err(Error::Argument("the timing suite has 5 factors; k must be at most 5".into()));
    }
    let records = time_paths(a.k_range.clone(), Duration::from_millis(a.min_ms))?;
    let rows: Vec<Record> = records
        .iter()
        .map(|r| match serde_json::to_value(r).expect("record serializes") {
            Value::Object(m) => m,
            _ => unreachable!(),
        })
        .collect();
    out.records(&rows);
    Ok(())
}
