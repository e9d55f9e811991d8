//! The `matpress` command line: family files, subcommands and report output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::decomp::{block_triangularize, connecting_constant, is_irreducible, triviality, SearchOptions, Witness};
use crate::ergodic::{block_lyapunov, lyapunov_mc, LyapunovMethod, ShiftMeasure};
use crate::error::{Error, Result};
use crate::gibbs::{cesaro_shift_average, gibbs_ratio_stats};
use crate::matfam::{Field, Matrix, MatrixFamily, Norm, Scalar, Word};
use crate::pressure::{
    pressure_bounds, pressure_bounds_multi, pressure_even_spectral, pressure_via_blocks_multi, PressureOptions,
    DEFAULT_LIFT_BUDGET,
};
use crate::svf::{affinity_dimension, svf_pressure_bounds_with_budget};
use crate::tree::DEFAULT_BUDGET;

pub const FORMAT_VERSION: u32 = 1;

/// A matrix entry: a real number or an `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

/// On-disk JSON form of a matrix family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyFile {
    #[serde(rename = "format-version", alias = "format_version", alias = "version")]
    pub format_version: u32,
    pub field: Field,
    pub dimension: usize,
    /// Each matrix as a list of rows.
    pub matrices: Vec<Vec<Vec<Entry>>>,
}

impl FamilyFile {
    pub fn to_family(&self) -> Result<MatrixFamily> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::invalid(format!("unsupported format-version {}", self.format_version)));
        }
        let d = self.dimension;
        if d == 0 || self.matrices.is_empty() {
            return Err(Error::invalid("a family needs a positive dimension and at least one matrix"));
        }
        let matrices = self
            .matrices
            .iter()
            .enumerate()
            .map(|(i, rows)| {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(Error::invalid(format!("matrix {} is not {d}x{d}", i + 1)));
                }
                let entries = rows
                    .iter()
                    .flatten()
                    .map(|e| match *e {
                        Entry::Real(x) => Scalar::new(x, 0.0),
                        Entry::Complex([re, im]) => Scalar::new(re, im),
                    })
                    .collect();
                Matrix::from_row_major(d, d, entries)
            })
            .collect::<Result<Vec<_>>>()?;
        MatrixFamily::new(self.field, matrices)
    }

    pub fn from_family(family: &MatrixFamily) -> Self {
        let d = family.dim();
        let matrices = family
            .matrices()
            .iter()
            .map(|m| {
                (0..d)
                    .map(|i| {
                        (0..d)
                            .map(|j| {
                                let z = m.get(i, j);
                                match family.field() {
                                    Field::Real => Entry::Real(z.re),
                                    Field::Complex => Entry::Complex([z.re, z.im]),
                                }
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        FamilyFile { format_version: FORMAT_VERSION, field: family.field(), dimension: d, matrices }
    }

    pub fn load(path: &Path) -> Result<MatrixFamily> {
        let text = fs::read_to_string(path).map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
        let file: FamilyFile =
            serde_json::from_str(&text).map_err(|e| Error::invalid(format!("cannot parse {}: {e}", path.display())))?;
        file.to_family()
    }

    pub fn save(family: &MatrixFamily, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&Self::from_family(family)).expect("family files serialize");
        fs::write(path, text + "\n").map_err(|e| Error::invalid(format!("cannot write {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "matpress", version, about = "Pressure, Lyapunov exponents and equilibrium states of matrix products")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Matrix norm: operator or frobenius.
    #[arg(long, global = true, default_value = "operator", value_parser = parse_norm)]
    pub norm: Norm,
    /// Word length n used for enumeration.
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    /// Comma-separated q values.
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub q: Vec<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Maximum number of enumerated words.
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Block upper-triangular decomposition and triviality.
    Decompose {
        file: PathBuf,
        /// Write each diagonal block family to this directory.
        #[arg(long)]
        emit_blocks: Option<PathBuf>,
    },
    /// Bounds on P(q).
    Pressure {
        file: PathBuf,
        /// Compute P(q) as the maximum over the diagonal blocks.
        #[arg(long)]
        blocks: bool,
        /// Add the exact Frobenius value at even integer q.
        #[arg(long)]
        spectral_check: bool,
        /// Use estimated connecting constants at this depth (conditional bound).
        #[arg(long)]
        connecting: Option<usize>,
    },
    /// Cylinder masses of the shift-averaged equilibrium approximant.
    Gibbs {
        file: PathBuf,
        /// Cylinder length m.
        #[arg(long, default_value_t = 3)]
        level: usize,
        /// Write per-word Gibbs ratios here.
        #[arg(long)]
        ratios_out: Option<PathBuf>,
    },
    /// Lyapunov exponent of a shift-invariant measure.
    Lyapunov {
        file: PathBuf,
        /// `bernoulli:p1,…`, `dirac:w` or `mix:c1*μ1+c2*μ2`.
        #[arg(long, value_parser = parse_measure)]
        measure: ShiftMeasure,
        /// Monte Carlo sample count (Bernoulli measures only).
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Bracket the affinity dimension of a contracting family.
    Affinity {
        file: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Write the bisection trace here.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Bounds on the singular value pressure P^φ(q).
    SvfPressure { file: PathBuf },
}

fn parse_norm(s: &str) -> std::result::Result<Norm, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_measure(s: &str) -> std::result::Result<ShiftMeasure, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

/// 17 significant digits; non-finite values as `-inf`, `inf`, `nan`.
pub fn format_number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Num(x) => format_number(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => serde_json::Number::from_f64(*x).map_or_else(|| Value::String(format_number(*x)), Value::Number),
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
            Cell::Empty => Value::Null,
        }
    }
}

/// Output of one subcommand: a summary, a table and warnings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub command: String,
    pub headline: Option<String>,
    pub summary: Vec<(String, Cell)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub warnings: Vec<String>,
}

impl Report {
    fn new(command: &str, columns: &[&str]) -> Self {
        Report { command: command.into(), columns: columns.iter().map(|c| c.to_string()).collect(), ..Default::default() }
    }

    fn put(&mut self, key: &str, value: impl Into<Cell>) {
        self.summary.push((key.into(), value.into()));
    }

    pub fn get(&self, key: &str) -> Option<&Cell> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    /// Summary as `# key=value` comment lines followed by the table.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if let Some(h) = &self.headline {
            out += &format!("# {h}\n");
        }
        for (k, v) in &self.summary {
            out += &format!("# {k}={}\n", v.text());
        }
        for w in &self.warnings {
            out += &format!("# warning: {w}\n");
        }
        out + &table_csv(&self.columns, &self.rows)
    }

    pub fn to_json(&self) -> String {
        let summary: Map<String, Value> = self.summary.iter().map(|(k, v)| (k.clone(), v.json())).collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Object(self.columns.iter().cloned().zip(r.iter().map(Cell::json)).collect()))
            .collect();
        let doc = json!({
            "command": self.command,
            "headline": self.headline,
            "summary": summary,
            "rows": rows,
            "warnings": self.warnings,
        });
        serde_json::to_string_pretty(&doc).expect("reports serialize") + "\n"
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

fn table_csv(columns: &[String], rows: &[Vec<Cell>]) -> String {
    if columns.is_empty() {
        return String::new();
    }
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(columns).expect("in-memory write");
    for row in rows {
        writer.write_record(row.iter().map(Cell::text)).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 output")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::invalid(format!("cannot write {}: {e}", path.display())))
}

fn block_label(blocks: &[usize]) -> String {
    if blocks.is_empty() {
        "∅".into()
    } else {
        format!("{{{}}}", blocks.iter().map(|j| (j + 1).to_string()).collect::<Vec<_>>().join(","))
    }
}

fn positive_qs(qs: &[f64], default: f64, allow_zero: bool) -> Result<Vec<f64>> {
    let qs = if qs.is_empty() { vec![default] } else { qs.to_vec() };
    for &q in &qs {
        let ok = q.is_finite() && (q > 0.0 || (allow_zero && q == 0.0));
        if !ok {
            return Err(Error::invalid(format!("invalid q = {q}")));
        }
    }
    Ok(qs)
}

fn positive_depth(depth: Option<usize>, default: usize) -> Result<usize> {
    match depth.unwrap_or(default) {
        0 => Err(Error::invalid("depth must be positive")),
        n => Ok(n),
    }
}

fn search(global: &GlobalArgs) -> SearchOptions {
    SearchOptions { seed: global.seed, ..SearchOptions::default() }
}

fn pressure_options(global: &GlobalArgs) -> PressureOptions {
    let mut opts = PressureOptions::default();
    opts.budget = global.budget;
    opts.search = search(global);
    opts
}

fn cmd_decompose(global: &GlobalArgs, family: &MatrixFamily, emit: Option<&Path>) -> Result<Report> {
    let dec = block_triangularize(family, &search(global))?;
    let triv = triviality(family, &dec)?;
    let t = dec.num_blocks();
    let sizes = format!("[{}]", dec.block_sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","));
    let mut r = Report::new("decompose", &["block", "size", "in_lambda", "verdict", "witness"]);
    r.headline = Some(if triv.trivial {
        let len = triv.vanishing_length.map_or(String::new(), |l| format!(": all products of length ≥ {l} vanish"));
        format!("t={t}, Λ=∅, TRIVIAL{len}")
    } else if t == 1 {
        format!("t=1, Λ={}", dec.lambda_label())
    } else {
        format!("t={t}, blocks {sizes}, Λ={}, non-trivial", dec.lambda_label())
    });
    r.put("t", t);
    r.put("block_sizes", sizes);
    r.put("lambda", dec.lambda_label());
    r.put("trivial", triv.trivial);
    r.put("condition_number_t", dec.condition_number_t);
    r.put("residual", dec.residual);
    for (j, size) in dec.block_sizes.iter().enumerate() {
        let (verdict, witness) = match &dec.certificates[j] {
            None => ("zero".to_string(), String::new()),
            Some(c) => {
                let verdict = if c.is_irreducible() { "irreducible" } else { "reducible" };
                let witness = match &c.witness {
                    Witness::InvariantSubspace(v) => format!("invariant-subspace:{}", v.len()),
                    Witness::AlgebraDimension(n) => format!("algebra-dimension:{n}"),
                    Witness::SearchExhausted { .. } => "search-exhausted".to_string(),
                };
                (verdict.to_string(), witness)
            }
        };
        r.rows.push(vec![(j + 1).into(), (*size).into(), dec.lambda.contains(&j).into(), verdict.into(), witness.into()]);
    }
    r.warnings.extend(dec.warnings.iter().cloned());
    if let Some(dir) = emit {
        fs::create_dir_all(dir).map_err(|e| Error::invalid(format!("cannot create {}: {e}", dir.display())))?;
        for (j, block) in dec.diagonal_blocks.iter().enumerate() {
            FamilyFile::save(block, &dir.join(format!("block_{}.json", j + 1)))?;
        }
    }
    Ok(r)
}

fn cmd_pressure(global: &GlobalArgs, family: &MatrixFamily, blocks: bool, spectral: bool, connecting: Option<usize>) -> Result<Report> {
    let qs = positive_qs(&global.q, 1.0, false)?;
    let n = positive_depth(global.depth, 12)?;
    let mut opts = pressure_options(global);
    let mut columns = vec!["q", "lower", "upper", "width", "achiever_blocks", "conditional"];
    if spectral {
        columns.push("spectral");
    }
    let mut r = Report::new("pressure", &columns);
    r.put("norm", global.norm.to_string());
    r.put("depth", n);
    r.put("route", if blocks { "blocks" } else { "direct" });

    let estimates: Vec<(crate::pressure::PressureEstimate, String)> = if blocks {
        opts.block_connecting_depth = connecting;
        let dec = block_triangularize(family, &opts.search)?;
        r.put("lambda", dec.lambda_label());
        pressure_via_blocks_multi(&dec, &qs, n, global.norm, &opts)?
            .into_iter()
            .map(|b| (b.combined, block_label(&b.achievers)))
            .collect()
    } else {
        if let Some(depth) = connecting {
            let cert = is_irreducible(family, &opts.search)?;
            if cert.is_irreducible() {
                let est = connecting_constant(family, depth, global.norm, &opts.search)?;
                opts = opts.with_connecting(&cert, est)?;
            } else {
                r.warnings.push("family is reducible; connecting route skipped".into());
            }
        }
        pressure_bounds_multi(family, &qs, n, global.norm, &opts)?.into_iter().map(|e| (e, String::new())).collect()
    };

    let mut spectral_skipped = false;
    for (est, achievers) in &estimates {
        let mut row: Vec<Cell> =
            vec![est.q.into(), est.lower.into(), est.upper.into(), est.width().into(), achievers.clone().into(), est.conditional.into()];
        if spectral {
            let m = est.q / 2.0;
            if global.norm == Norm::Frobenius && m >= 1.0 && m.fract() == 0.0 {
                row.push(pressure_even_spectral(family, m as usize, DEFAULT_LIFT_BUDGET)?.into());
            } else {
                spectral_skipped = true;
                row.push(Cell::Empty);
            }
        }
        r.rows.push(row);
    }
    if spectral_skipped {
        r.warnings.push("spectral check needs --norm frobenius and even integer q".into());
    }
    if estimates.iter().any(|(e, _)| e.upper == f64::NEG_INFINITY) {
        r.warnings.push("all products vanish: P(q) = -inf".into());
    }
    Ok(r)
}

fn cmd_gibbs(global: &GlobalArgs, family: &MatrixFamily, level: usize, ratios_out: Option<&Path>) -> Result<Report> {
    let q = positive_qs(&global.q, 1.0, false)?[0];
    let n = positive_depth(global.depth, 12)?;
    let opts = pressure_options(global);
    let mu = cesaro_shift_average(family, q, n, level, global.norm)?;
    let est = pressure_bounds(family, q, n, global.norm, &opts)?;
    let stats = gibbs_ratio_stats(family, q, &mu, &est, global.norm)?;
    let ell = family.len();

    let mut r = Report::new("gibbs", &["word", "mass", "log_mass"]);
    r.headline = Some(format!(
        "Gibbs ratios at m={level}, n={n}: [{}, {}], spread {}",
        format_number(stats.ratio_min),
        format_number(stats.ratio_max),
        format_number(stats.spread())
    ));
    r.put("q", q);
    r.put("n", n);
    r.put("m", level);
    r.put("ratio_min", stats.ratio_min);
    r.put("ratio_max", stats.ratio_max);
    r.put("spread", stats.spread());
    r.put("zero_mismatch_count", stats.zero_mismatch_count);
    r.put("pressure_lower", est.lower);
    r.put("pressure_upper", est.upper);
    r.put("pressure_hat", stats.pressure_hat);
    r.put("pressure_half_width", stats.pressure_half_width);
    r.put("entropy_rate", mu.entropy_rate());
    for (rank, &lm) in mu.log_masses().iter().enumerate() {
        r.rows.push(vec![Word::from_rank(rank, level, ell).render(ell).into(), lm.exp().into(), lm.into()]);
    }
    if let Some(path) = ratios_out {
        let rows: Vec<Vec<Cell>> = stats
            .ratios
            .iter()
            .enumerate()
            .filter_map(|(rank, ratio)| ratio.map(|x| vec![Word::from_rank(rank, level, ell).render(ell).into(), x.into()]))
            .collect();
        write_text(path, &table_csv(&["word".into(), "ratio".into()], &rows))?;
    }
    Ok(r)
}

fn cmd_lyapunov(global: &GlobalArgs, family: &MatrixFamily, measure: &ShiftMeasure, samples: Option<usize>) -> Result<Report> {
    let n = positive_depth(global.depth, 12)?;
    measure.check_alphabet(family.len())?;
    let mut r = Report::new("lyapunov", &["block", "exponent"]);
    r.put("measure", measure.to_string());
    r.put("n", n);
    if let Some(samples) = samples {
        let rep = lyapunov_mc(family, measure, n, samples, global.seed, global.norm)?;
        let LyapunovMethod::MonteCarlo { std_error, zero_products, .. } = rep.method else { unreachable!() };
        r.headline = Some(format!("M_*≈{} ± {}", format_number(rep.value), format_number(std_error)));
        r.put("m_star", rep.value);
        r.put("method", "monte_carlo");
        r.put("samples", samples);
        r.put("seed", global.seed as usize);
        r.put("std_error", std_error);
        r.put("zero_products", zero_products);
        return Ok(r);
    }
    let dec = block_triangularize(family, &search(global))?;
    let rep = block_lyapunov(family, &dec, measure, n, global.norm)?;
    let method = match rep.full.method {
        LyapunovMethod::ClosedForm => "closed_form",
        _ => "exact_enumeration",
    };
    let flag = if rep.ergodic { "" } else { ", NON-ERGODIC" };
    r.headline = Some(format!(
        "M_*={}, W={}, defect={}{flag}",
        format_number(rep.full.value),
        format_number(rep.w),
        format_number(rep.defect)
    ));
    r.put("m_star", rep.full.value);
    r.put("m_star_upper", rep.full.upper);
    r.put("method", method);
    r.put("w", rep.w);
    r.put("defect", rep.defect);
    r.put("ergodic", rep.ergodic);
    r.put("lambda", dec.lambda_label());
    for (j, b) in &rep.per_block {
        r.rows.push(vec![(j + 1).into(), b.value.into()]);
    }
    Ok(r)
}

fn cmd_affinity(global: &GlobalArgs, family: &MatrixFamily, tol: f64, trace_out: Option<&Path>) -> Result<Report> {
    let n = positive_depth(global.depth, 8)?;
    let res = affinity_dimension(family, tol, n)?;
    let mut r = Report::new("affinity", &["step", "s", "lower", "upper"]);
    r.headline = Some(format!("affinity dimension in [{}, {}]", format_number(res.s_low), format_number(res.s_high)));
    r.put("s_low", res.s_low);
    r.put("s_high", res.s_high);
    r.put("width", res.width());
    r.put("iterations", res.iterations);
    r.put("depth", n);
    for (i, step) in res.trace.iter().enumerate() {
        r.rows.push(vec![(i + 1).into(), step.s.into(), step.lower.into(), step.upper.into()]);
    }
    if let Some(path) = trace_out {
        write_text(path, &table_csv(&r.columns, &r.rows))?;
    }
    Ok(r)
}

fn cmd_svf_pressure(global: &GlobalArgs, family: &MatrixFamily) -> Result<Report> {
    let qs = positive_qs(&global.q, 1.0, true)?;
    let n = positive_depth(global.depth, 10)?;
    let mut r = Report::new("svf-pressure", &["q", "lower", "upper", "width"]);
    r.put("depth", n);
    for q in qs {
        let est = svf_pressure_bounds_with_budget(family, q, n, global.budget)?;
        r.rows.push(vec![q.into(), est.lower.into(), est.upper.into(), est.width().into()]);
    }
    Ok(r)
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Result<Report> {
    let g = &cli.global;
    if g.budget == 0 {
        return Err(Error::invalid("budget must be positive"));
    }
    match &cli.command {
        Command::Decompose { file, emit_blocks } => cmd_decompose(g, &FamilyFile::load(file)?, emit_blocks.as_deref()),
        Command::Pressure { file, blocks, spectral_check, connecting } => {
            cmd_pressure(g, &FamilyFile::load(file)?, *blocks, *spectral_check, *connecting)
        }
        Command::Gibbs { file, level, ratios_out } => cmd_gibbs(g, &FamilyFile::load(file)?, *level, ratios_out.as_deref()),
        Command::Lyapunov { file, measure, samples } => cmd_lyapunov(g, &FamilyFile::load(file)?, measure, *samples),
        Command::Affinity { file, tol, trace_out } => cmd_affinity(g, &FamilyFile::load(file)?, *tol, trace_out.as_deref()),
        Command::SvfPressure { file } => cmd_svf_pressure(g, &FamilyFile::load(file)?),
    }
}

/// Process exit code for an error: 2 input, 3 numerical, 4 budget.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidInput(_) | Error::Precondition(_) | Error::Degenerate(_) => 2,
        Error::NumericalFailure { .. } | Error::SearchFailure(_) => 3,
        Error::BudgetExceeded { .. } => 4,
    }
}

/// Entry point of the binary; returns the exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    let report = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let text = report.render(cli.global.format);
    let written = match &cli.global.out {
        Some(path) => write_text(path, &text),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Error::invalid(e.to_string())),
    };
    match written {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_file_roundtrip() {
        let text = r#"{"format-version": 1, "field": "complex", "dimension": 2,
            "matrices": [[[1, [0, 1]], [0, 2]], [[0.5, 0], [[1, -1], 3]]]}"#;
        let file: FamilyFile = serde_json::from_str(text).unwrap();
        let fam = file.to_family().unwrap();
        assert_eq!(fam.len(), 2);
        assert_eq!(fam.matrix(0).get(0, 1), Scalar::new(0.0, 1.0));
        assert_eq!(FamilyFile::from_family(&fam).to_family().unwrap(), fam);
    }

    #[test]
    fn family_file_validation() {
        let bad = [
            r#"{"format-version": 2, "field": "real", "dimension": 1, "matrices": [[[1]]]}"#,
            r#"{"format-version": 1, "field": "real", "dimension": 2, "matrices": [[[1]]]}"#,
            r#"{"format-version": 1, "field": "real", "dimension": 1, "matrices": [[[[1, 1]]]]}"#,
            r#"{"format-version": 1, "field": "real", "dimension": 1, "matrices": []}"#,
        ];
        for text in bad {
            let parsed: std::result::Result<FamilyFile, _> = serde_json::from_str(text);
            assert!(parsed.map_err(|e| e.to_string()).and_then(|f| f.to_family().map_err(|e| e.to_string())).is_err(), "{text}");
        }
        assert!(serde_json::from_str::<FamilyFile>(r#"{"format-version": 1, "field": "real", "dimension": 1, "matrices": [[[1]]], "x": 0}"#).is_err());
    }

    #[test]
    fn number_formatting() {
        assert_eq!(format_number(f64::NEG_INFINITY), "-inf");
        assert_eq!(format_number(1.0), "1.0000000000000000e0");
        let x = std::f64::consts::LN_2;
        assert_eq!(format_number(x).parse::<f64>().unwrap(), x);
        assert_eq!(Cell::Num(f64::NEG_INFINITY).json(), json!("-inf"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::invalid("x")), 2);
        assert_eq!(exit_code(&Error::NumericalFailure { what: "x".into(), residual: 1.0 }), 3);
        assert_eq!(exit_code(&Error::BudgetExceeded { requested: 2, budget: 1 }), 4);
    }
}
