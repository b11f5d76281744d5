//! `cokernels` command-line driver.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cokernels::config::RunConfig;
use cokernels::group::groups_with_exponent_dividing;
use cokernels::harness::{self, CheckMode, SIGMAS};
use cokernels::isotropy::{self, GroupMap};
use cokernels::limits::{p_groups_up_to, partial_mass, LimitDistribution};
use cokernels::linalg::MatrixJson;
use cokernels::models::standard_alternating;
use cokernels::{cokernel, cokernel_mod, smith_normal_form, ExactMatrix, FiniteAbelianGroup};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::json;

const DEFAULT_TRIALS: u64 = 20_000;

#[derive(Parser, Debug)]
#[command(name = "cokernels", version, about = "Cokernels of random matrices: exact algebra and Monte Carlo experiments")]
struct Cli {
    /// Base seed of the counter-based generator.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of Monte Carlo trials.
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// File of key=value lines; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Smith normal form of a matrix file (`-` reads stdin).
    Snf { matrix: PathBuf },
    /// Cokernel of a matrix file (`-` reads stdin).
    Cokernel { matrix: PathBuf },
    /// Empirical G-moments of a matrix model.
    Moment(MomentArgs),
    /// Isotropy of a map with respect to an alternating form.
    Isotropy(IsotropyArgs),
    /// Histogram of cokernel classes against a limit law.
    Distribution(DistributionArgs),
    /// Cohen-Lenstra and sandpile probabilities.
    Limits(LimitsArgs),
    #[command(subcommand)]
    Verify(Verify),
}

#[derive(Args, Debug, Default)]
struct ModelArgs {
    /// iid, symmetric, c_symmetric, symmetric_mod_h, corner_perturbed,
    /// alternating_uniform or random_corner.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    modulus: Option<String>,
    /// Entry law, e.g. `uniform_mod:4`, `two_point:0,1,0.5`, `uniform_range:-1,1`.
    #[arg(long)]
    dist: Option<String>,
    #[arg(long)]
    perturbation: Option<String>,
    /// Alternating form as a matrix JSON file.
    #[arg(long)]
    c_file: Option<String>,
    /// Rank of the standard block form used when no `--c-file` is given.
    #[arg(long)]
    c_rank: Option<String>,
    #[arg(long)]
    h: Option<String>,
    #[arg(long)]
    k: Option<String>,
    /// Corner positions as `i-j,i-j`.
    #[arg(long)]
    positions: Option<String>,
    #[arg(long)]
    units: Option<String>,
    #[arg(long)]
    stream: Option<String>,
    /// Any configuration key, as `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ModelArgs {
    fn apply(&self, cfg: &mut RunConfig) -> Result<(), CliError> {
        let pairs = [
            ("model", &self.model),
            ("n", &self.n),
            ("m", &self.m),
            ("modulus", &self.modulus),
            ("dist", &self.dist),
            ("perturbation", &self.perturbation),
            ("c_file", &self.c_file),
            ("c_rank", &self.c_rank),
            ("h", &self.h),
            ("k", &self.k),
            ("positions", &self.positions),
            ("units", &self.units),
            ("stream", &self.stream),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got {kv:?}")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(())
    }
}

#[derive(Args, Debug)]
struct MomentArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Target group, e.g. `2,2`; repeatable.
    #[arg(long)]
    group: Vec<FiniteAbelianGroup>,
    /// Expected moment per group (one value is reused for all groups);
    /// exit code 2 if an estimate misses it by more than 4 standard errors.
    #[arg(long, value_delimiter = ',')]
    expect: Vec<f64>,
}

#[derive(Args, Debug)]
struct IsotropyArgs {
    #[arg(long)]
    c_file: Option<String>,
    #[arg(long)]
    group: Option<FiniteAbelianGroup>,
    #[arg(long)]
    modulus: Option<String>,
    /// Map rows as matrix JSON, one row per invariant factor of the group.
    /// Without it the map is drawn from the seed.
    #[arg(long)]
    map_file: Option<PathBuf>,
    /// Exact probability over uniform maps.
    #[arg(long, conflicts_with = "trials")]
    exact: bool,
    /// Write the witness matrix here when one exists.
    #[arg(long)]
    witness: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum LimitLaw {
    Cl,
    Sandpile,
}

fn limit_law(law: LimitLaw, p: u64, u: u32) -> Result<LimitDistribution, CliError> {
    Ok(match law {
        LimitLaw::Cl => LimitDistribution::cohen_lenstra(p, u)?,
        LimitLaw::Sandpile => LimitDistribution::sandpile(p)?,
    })
}

#[derive(Args, Debug)]
struct DistributionArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Tensor with `Z/aZ`; defaults to the model's modulus.
    #[arg(long)]
    a: Option<u64>,
    #[arg(long, value_enum)]
    reference: Option<LimitLaw>,
    #[arg(long, default_value_t = 2)]
    p: u64,
    #[arg(long, default_value_t = 0)]
    u: u32,
    /// Check the K most likely reference classes at 4 binomial standard
    /// errors; exit code 2 on a miss.
    #[arg(long, default_value_t = 0)]
    check_top: usize,
}

#[derive(Args, Debug)]
struct LimitsArgs {
    #[arg(long, value_enum)]
    dist: LimitLaw,
    #[arg(long)]
    p: u64,
    #[arg(long, default_value_t = 0)]
    u: u32,
    /// One group; without it every p-group in the window is listed.
    #[arg(long)]
    group: Option<FiniteAbelianGroup>,
    /// Window of groups of order at most `p^B`.
    #[arg(long, value_name = "B")]
    max_order: Option<u32>,
}

#[derive(Subcommand, Debug)]
enum Verify {
    /// `P[M^T C M = S]` against `a^{-m(m-1)/2}`.
    AlternatingForm(AltFormArgs),
    /// Failure rate of k random vectors to generate `(Z/aZ)^ell`.
    Generation(GenerationArgs),
    /// Strict separation scenarios for bounded-rank forms.
    Directional(DirectionalArgs),
    /// Exact two-sided moment-sum identity over the full support.
    MomentSumOracle(OracleArgs),
}

#[derive(Args, Debug)]
struct AltFormArgs {
    #[arg(long)]
    modulus: u64,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    c_file: Option<String>,
    /// Rank of the standard block form; defaults to the largest even rank.
    #[arg(long)]
    c_rank: Option<usize>,
    /// Target form `S` as matrix JSON; defaults to zero.
    #[arg(long)]
    s_file: Option<PathBuf>,
    #[arg(long)]
    exact: bool,
}

#[derive(Args, Debug)]
struct GenerationArgs {
    #[arg(long)]
    modulus: u64,
    #[arg(long)]
    ell: usize,
    #[arg(long)]
    k: usize,
}

#[derive(Args, Debug)]
struct DirectionalArgs {
    #[arg(long, default_value_t = 40)]
    n: usize,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Target group; repeatable. Defaults to every group of order at most
    /// 16 with exponent dividing the modulus and at most n generators.
    #[arg(long)]
    group: Vec<FiniteAbelianGroup>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Lib(cokernels::Error),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(s) | CliError::Io(s) => f.write_str(s),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl From<cokernels::Error> for CliError {
    fn from(e: cokernels::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// What a command produced: a document to print and whether its checks held.
struct Outcome {
    body: Body,
    pass: bool,
}

enum Body {
    Json(serde_json::Value),
    Table { json: serde_json::Value, header: Vec<String>, rows: Vec<Vec<String>> },
}

impl Outcome {
    fn json(value: impl Serialize, pass: bool) -> Result<Self, CliError> {
        Ok(Self {
            body: Body::Json(serde_json::to_value(value)?),
            pass,
        })
    }

    fn table(value: impl Serialize, header: &[&str], rows: Vec<Vec<String>>, pass: bool) -> Result<Self, CliError> {
        Ok(Self {
            body: Body::Table {
                json: serde_json::to_value(value)?,
                header: header.iter().map(|s| s.to_string()).collect(),
                rows,
            },
            pass,
        })
    }
}

struct Context {
    cfg: RunConfig,
}

impl Context {
    fn new(cli: &Cli) -> Result<Self, CliError> {
        let mut cfg = match &cli.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(s) = cli.seed {
            cfg.seed = Some(s);
        }
        if let Some(t) = cli.trials {
            cfg.trials = Some(t);
        }
        Ok(Self { cfg })
    }

    fn trials(&self) -> u64 {
        self.cfg.trials.unwrap_or(DEFAULT_TRIALS)
    }

    fn groups(&self, given: &[FiniteAbelianGroup]) -> Vec<FiniteAbelianGroup> {
        if given.is_empty() {
            self.cfg.group.iter().cloned().collect()
        } else {
            given.to_vec()
        }
    }
}

fn read_input(path: &Path) -> Result<String, CliError> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| CliError::Io(format!("stdin: {e}")))?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

fn read_matrix(path: &Path) -> Result<ExactMatrix, CliError> {
    let json: MatrixJson = serde_json::from_str(&read_input(path)?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(ExactMatrix::from_json(&json)?)
}

fn write_matrix(path: &Path, m: &ExactMatrix) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(&m.to_json()?)?;
    fs::write(path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct SnfOutput {
    d: Vec<String>,
    rank: usize,
    free_rank: usize,
    cokernel: String,
}

/// Over `Z/aZ` the diagonal is `gcd(d_i, a)` for the integer Smith form of
/// the lift, and "rank" counts the entries that are nonzero in the ring.
fn snf(path: &Path) -> Result<Outcome, CliError> {
    let m = read_matrix(path)?;
    let a = m.modulus();
    let decomposition = smith_normal_form(&m.lift(), false)?;
    let out = if a == 0 {
        SnfOutput {
            d: decomposition.invariant_factors.iter().map(|d| d.to_string()).collect(),
            rank: decomposition.rank,
            free_rank: m.rows() - decomposition.rank,
            cokernel: cokernel(&m)?.to_string(),
        }
    } else {
        let modulus = BigInt::from(a);
        let d: Vec<u64> = decomposition
            .invariant_factors
            .iter()
            .map(|d| d.gcd(&modulus).to_u64().expect("divides a"))
            .collect();
        SnfOutput {
            rank: d.iter().filter(|&&x| x != a).count(),
            d: d.iter().map(u64::to_string).collect(),
            free_rank: 0,
            cokernel: cokernel_mod(&m)?.to_string(),
        }
    };
    Outcome::json(out, true)
}

fn cokernel_cmd(path: &Path) -> Result<Outcome, CliError> {
    let m = read_matrix(path)?;
    let g = if m.modulus() == 0 { cokernel(&m)? } else { cokernel_mod(&m)? };
    let order = if g.is_finite() { Some(g.order()?.to_string()) } else { None };
    Outcome::json(
        json!({
            "cokernel": g.to_string(),
            "order": order,
            "free_rank": g.free_rank(),
            "generators": g.num_generators(),
            "exponent": if g.is_finite() { Some(g.exponent()?.to_string()) } else { None },
        }),
        true,
    )
}

fn moment(ctx: &mut Context, args: &MomentArgs) -> Result<Outcome, CliError> {
    args.model.apply(&mut ctx.cfg)?;
    let model = ctx.cfg.to_model()?;
    let groups = ctx.groups(&args.group);
    if groups.is_empty() {
        return Err(CliError::Usage("moment needs at least one --group".into()));
    }
    if !(args.expect.is_empty() || args.expect.len() == 1 || args.expect.len() == groups.len()) {
        return Err(CliError::Usage("--expect takes one value or one per group".into()));
    }
    let estimates = harness::empirical_moments(&model, &groups, ctx.trials(), ctx.cfg.seed_spec())?;
    let mut pass = true;
    let mut results = Vec::new();
    let mut rows = Vec::new();
    for (i, est) in estimates.iter().enumerate() {
        let expected = match args.expect.len() {
            0 => None,
            1 => Some(args.expect[0]),
            _ => Some(args.expect[i]),
        };
        let agrees = expected.map(|v| est.agrees_with(v, SIGMAS));
        pass &= agrees.unwrap_or(true);
        rows.push(vec![
            est.target_group.to_string(),
            est.mean.to_string(),
            est.stderr.to_string(),
            est.trials.to_string(),
            expected.map_or(String::new(), |v| v.to_string()),
            agrees.map_or(String::new(), |v| v.to_string()),
        ]);
        results.push(json!({ "estimate": est, "expected": expected, "agrees": agrees }));
    }
    if !pass {
        eprintln!("moment check failed; replay with --seed {}", ctx.cfg.seed.unwrap_or(0));
    }
    Outcome::table(
        json!({ "model": model.label(), "moments": results, "pass": pass }),
        &["group", "mean", "stderr", "trials", "expected", "agrees"],
        rows,
        pass,
    )
}

fn isotropy_cmd(ctx: &mut Context, args: &IsotropyArgs) -> Result<Outcome, CliError> {
    if let Some(v) = &args.c_file {
        ctx.cfg.set("c_file", v)?;
    }
    if let Some(v) = &args.modulus {
        ctx.cfg.set("modulus", v)?;
    }
    if let Some(g) = &args.group {
        ctx.cfg.group = Some(g.clone());
    }
    if ctx.cfg.c_file.is_none() {
        return Err(CliError::Usage("isotropy needs --c-file".into()));
    }
    let c = ctx.cfg.form()?;
    let a = c.modulus();
    if a == 0 {
        return Err(CliError::Usage("isotropy needs a form over Z/aZ; pass --modulus".into()));
    }
    let g = ctx
        .cfg
        .group
        .clone()
        .ok_or_else(|| CliError::Usage("isotropy needs --group".into()))?;
    let seed = ctx.cfg.seed_spec();
    let (map, map_source) = match &args.map_file {
        Some(path) => {
            let rows = read_matrix(path)?
                .lift()
                .to_rows_i64()
                .ok_or_else(|| CliError::Usage("map entries must fit in 64 bits".into()))?;
            (GroupMap::new(g.clone(), rows, a)?, "file")
        }
        None => (GroupMap::random(&g, c.rows(), a, &seed)?, "seed"),
    };
    if map.source_rank() != c.rows() {
        return Err(CliError::Usage(format!(
            "map has {} source coordinates but the form is {}x{}",
            map.source_rank(),
            c.rows(),
            c.cols()
        )));
    }
    let report = isotropy::isotropy_report(&map, &c)?;
    if let (Some(path), Some(w)) = (&args.witness, &report.witness) {
        write_matrix(path, w)?;
    }
    let probability = if args.exact {
        let p = isotropy::isotropy_probability_exact(&c, &g, a)?;
        Some(json!({
            "mode": "exact",
            "value": p.to_string(),
            "approx": p.to_f64(),
        }))
    } else if args.map_file.is_none() || ctx.cfg.trials.is_some() {
        let est = isotropy::isotropy_probability_mc(&c, &g, a, ctx.trials(), seed)?;
        Some(json!({ "mode": "monte_carlo", "estimate": est }))
    } else {
        None
    };
    let mut out = serde_json::to_value(&report)?;
    out["map_source"] = json!(map_source);
    out["map"] = json!(map.rows());
    out["group"] = json!(g.to_string());
    out["modulus"] = json!(a);
    if let Some(p) = probability {
        out["probability"] = p;
    }
    Outcome::json(out, true)
}

fn distribution(ctx: &mut Context, args: &DistributionArgs) -> Result<Outcome, CliError> {
    args.model.apply(&mut ctx.cfg)?;
    let model = ctx.cfg.to_model()?;
    let a = args.a.unwrap_or(model.modulus());
    if a < 2 {
        return Err(CliError::Usage("distribution needs --a >= 2 for an integer model".into()));
    }
    let reference = args.reference.map(|law| limit_law(law, args.p, args.u)).transpose()?;
    let table = harness::empirical_distribution(&model, a, ctx.trials(), ctx.cfg.seed_spec(), reference.as_ref())?;
    let mut checked: Vec<_> = table.rows.iter().filter(|r| r.ref_prob.is_some()).collect();
    checked.sort_by(|x, y| y.ref_prob.unwrap().total_cmp(&x.ref_prob.unwrap()));
    let pass = checked.iter().take(args.check_top).all(|r| {
        let (p, s) = (r.ref_prob.unwrap(), r.ref_stderr.unwrap_or(0.0));
        (r.freq - p).abs() <= SIGMAS * s
    });
    if args.check_top > 0 && checked.len() < args.check_top {
        return Err(CliError::Usage(format!(
            "--check-top {} but only {} classes have a reference probability",
            args.check_top,
            checked.len()
        )));
    }
    if !pass {
        eprintln!("distribution check failed; replay with --seed {}", ctx.cfg.seed.unwrap_or(0));
    }
    let rows = table.to_csv_records().into_iter().map(Vec::from).collect();
    let mut json = serde_json::to_value(&table)?;
    json["pass"] = json!(pass);
    Outcome::table(json, &["label", "count", "freq", "ref_prob", "abs_diff"], rows, pass)
}

fn limits(args: &LimitsArgs) -> Result<Outcome, CliError> {
    let law = limit_law(args.dist, args.p, args.u)?;
    let window = args.max_order.map(|b| partial_mass(&law, b)).transpose()?;
    if let Some(g) = &args.group {
        let v = law.probability(g)?;
        let mut out = json!({ "group": g.to_string(), "value": v.value, "tail_bound": v.tail_bound });
        if let (Some(mass), Some(b)) = (window, args.max_order) {
            out["max_order"] = json!(b);
            out["window_mass"] = json!(mass);
            out["normalized"] = json!(v.value / mass);
        }
        return Outcome::json(out, true);
    }
    let b = args
        .max_order
        .ok_or_else(|| CliError::Usage("limits needs --group or --max-order".into()))?;
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    for g in p_groups_up_to(args.p, b) {
        let v = law.probability(&g)?;
        rows.push(vec![g.to_string(), v.value.to_string(), v.tail_bound.to_string()]);
        entries.push(json!({ "group": g.to_string(), "value": v.value, "tail_bound": v.tail_bound }));
    }
    Outcome::table(
        json!({ "distribution": law.label(), "max_order": b, "window_mass": window, "groups": entries }),
        &["label", "value", "tail_bound"],
        rows,
        true,
    )
}

fn alternating_form(ctx: &Context, args: &AltFormArgs) -> Result<Outcome, CliError> {
    let a = args.modulus;
    let c = match &args.c_file {
        Some(path) => {
            let mut cfg = RunConfig::default();
            cfg.set("c_file", path)?;
            cfg.modulus = Some(a);
            cfg.form()?
        }
        None => standard_alternating(args.n, args.c_rank.unwrap_or(args.n - args.n % 2), a),
    };
    if c.rows() != args.n {
        return Err(CliError::Usage(format!("form has {} rows but --n is {}", c.rows(), args.n)));
    }
    let s = match &args.s_file {
        Some(path) => read_matrix(path)?.reduce_mod(a)?,
        None => ExactMatrix::zeros(args.m, args.m, a)?,
    };
    let mode = if args.exact { CheckMode::Exact } else { CheckMode::MonteCarlo };
    let report = harness::verify_alternating_form_bound(&c, &s, mode, ctx.trials(), ctx.cfg.seed_spec())?;
    let pass = report.pass;
    Outcome::json(report, pass)
}

fn oracle(ctx: &mut Context, args: &OracleArgs) -> Result<Outcome, CliError> {
    args.model.apply(&mut ctx.cfg)?;
    let model = ctx.cfg.to_model()?;
    let a = model.modulus();
    let mut groups = ctx.groups(&args.group);
    if groups.is_empty() {
        if a == 0 {
            return Err(CliError::Usage("the oracle needs a model over Z/aZ".into()));
        }
        groups = groups_with_exponent_dividing(a, 16)
            .into_iter()
            .filter(|g| g.num_generators() <= model.rows())
            .collect();
    }
    let cells = harness::moment_sum_oracle_groups(&model, &groups)?;
    let pass = cells.iter().all(|c| c.holds());
    let rows = cells
        .iter()
        .map(|c| vec![c.group.to_string(), c.lhs.to_string(), c.rhs.to_string(), c.holds().to_string()])
        .collect();
    Outcome::table(
        json!({ "model": model.label(), "cells": cells, "pass": pass }),
        &["group", "lhs", "rhs", "holds"],
        rows,
        pass,
    )
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let mut ctx = Context::new(cli)?;
    match &cli.command {
        Command::Snf { matrix } => snf(matrix),
        Command::Cokernel { matrix } => cokernel_cmd(matrix),
        Command::Moment(args) => moment(&mut ctx, args),
        Command::Isotropy(args) => isotropy_cmd(&mut ctx, args),
        Command::Distribution(args) => distribution(&mut ctx, args),
        Command::Limits(args) => limits(args),
        Command::Verify(Verify::AlternatingForm(args)) => alternating_form(&ctx, args),
        Command::Verify(Verify::Generation(args)) => {
            let report = harness::verify_generation_bound(args.modulus, args.ell, args.k, ctx.trials(), ctx.cfg.seed_spec())?;
            let pass = report.pass;
            Outcome::json(report, pass)
        }
        Command::Verify(Verify::Directional(args)) => {
            let report = harness::directional_checks(args.n, ctx.trials(), ctx.cfg.seed_spec())?;
            let pass = report.pass;
            Outcome::json(report, pass)
        }
        Command::Verify(Verify::MomentSumOracle(args)) => oracle(&mut ctx, args),
    }
}

fn render(body: &Body, format: Format) -> Result<Vec<u8>, CliError> {
    match (body, format) {
        (Body::Json(v) | Body::Table { json: v, .. }, Format::Json) => {
            let mut s = serde_json::to_string_pretty(v)?;
            s.push('\n');
            Ok(s.into_bytes())
        }
        (Body::Table { header, rows, .. }, Format::Csv) => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(header)?;
            for r in rows {
                w.write_record(r)?;
            }
            w.into_inner().map_err(|e| CliError::Io(e.to_string()))
        }
        (Body::Json(_), Format::Csv) => Err(CliError::Usage("this command only writes JSON".into())),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = run(&cli).and_then(|o| Ok((render(&o.body, cli.format)?, o.pass)));
    match outcome {
        Ok((bytes, pass)) => {
            let written = match &cli.out {
                Some(path) => fs::write(path, &bytes).map_err(|e| format!("{}: {e}", path.display())),
                None => io::stdout().write_all(&bytes).map_err(|e| e.to_string()),
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
