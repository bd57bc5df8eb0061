//! Command-line front end: argument definitions, the table each subcommand
//! produces, and CSV/JSON rendering.

use std::fmt;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use crate::analysis::{
    constant_report, convergence_study, figure_data, weighted_tail_bound, DeltaForm, Grid, Schedule,
};
use crate::baskakov::{eval_series, moment_closed, SeriesEval, TruncationPolicy};
use crate::error::{Error, Result};
use crate::expr::FunctionExpr;
use crate::king::{bound_audit, eval_king, king_moment_closed};
use crate::pq::PQParams;

/// Exit status for invalid flags or configuration.
pub const EXIT_USAGE: u8 = 2;
/// Exit status when a series ran out of terms.
pub const EXIT_CONVERGENCE: u8 = 3;
/// Exit status when the function could not be evaluated.
pub const EXIT_EVALUATION: u8 = 4;
/// Exit status for I/O failures writing the output.
pub const EXIT_IO: u8 = 5;

#[derive(Debug, Parser)]
#[command(
    name = "pqbask",
    version,
    about = "(p,q)-Baskakov operators and their King-type modification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one operator at one point
    Eval(EvalArgs),
    /// Series and closed-form moments of e0, e1, e2 along a grid
    Moments(MomentsArgs),
    /// Audit the claimed central-moment bounds of the modified operator
    Bounds(BoundsArgs),
    /// Weighted distances from e0, e1, e2 along a (p_n, q_n) schedule
    Converge(ConvergeArgs),
    /// Both operators applied to f along a grid, with errors
    Figure(FigureArgs),
    /// Empirical constant in the second-order-modulus error estimate
    Constant(ConstantArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Operator {
    Plain,
    King,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct PolicyArgs {
    /// Stop once the unaccumulated basis weight and the estimated tail contribution are at most this
    #[arg(long, default_value_t = 1e-12)]
    pub eps: f64,
    /// Hard cap on series terms
    #[arg(long, default_value_t = 10_000)]
    pub kmax: usize,
    /// Declared polynomial growth exponent of f for the tail estimate
    #[arg(long, default_value_t = 2)]
    pub growth: u32,
}

impl PolicyArgs {
    fn policy(&self) -> Result<TruncationPolicy> {
        TruncationPolicy::new(self.eps, self.kmax, self.growth)
    }

    fn meta(&self, meta: &mut Map<String, Value>) {
        meta.insert("eps".into(), real(self.eps));
        meta.insert("kmax".into(), Value::from(self.kmax));
        meta.insert("growth".into(), Value::from(self.growth));
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write to this file instead of standard output
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long = "f")]
    pub f: String,
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub q: f64,
    #[arg(long)]
    pub x: f64,
    #[arg(long, value_enum, default_value_t = Operator::Plain)]
    pub operator: Operator,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct MomentsArgs {
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub q: f64,
    /// start:stop:step
    #[arg(long, default_value = "0:5:0.5")]
    pub range: String,
    #[arg(long, value_enum, default_value_t = Operator::Plain)]
    pub operator: Operator,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BoundsArgs {
    /// Comma-separated operator orders
    #[arg(long, default_value = "2,10")]
    pub n_list: String,
    /// Comma-separated p:q pairs
    #[arg(long, default_value = "0.9:0.8,0.99:0.98")]
    pub pq_list: String,
    #[arg(long, default_value = "0:5:0.25")]
    pub range: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ConvergeArgs {
    /// `p=<expr in n>,q=<expr in n>`
    #[arg(long, default_value = Schedule::NEAR_ONE)]
    pub schedule: String,
    #[arg(long, default_value = "4,16,64,256")]
    pub n_list: String,
    #[arg(long, default_value = "0:50:0.01")]
    pub range: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FigureArgs {
    #[arg(long = "f", default_value = "sin(x^2)")]
    pub f: String,
    #[arg(long, default_value_t = 2)]
    pub n: u32,
    #[arg(long, default_value_t = 0.9)]
    pub p: f64,
    #[arg(long, default_value_t = 0.8)]
    pub q: f64,
    #[arg(long, default_value = "0:2:0.01")]
    pub range: String,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ConstantArgs {
    #[arg(long = "f", default_value = "sin(x^2)")]
    pub f: String,
    #[arg(long, default_value_t = 2)]
    pub n: u32,
    #[arg(long, default_value_t = 0.9)]
    pub p: f64,
    #[arg(long, default_value_t = 0.8)]
    pub q: f64,
    /// Evaluation points
    #[arg(long, default_value = "0:2:0.01")]
    pub range: String,
    /// Grid on which the moduli are taken
    #[arg(long, default_value = "0:10:0.01")]
    pub modulus_range: String,
    /// Use δ_n(x) without the x^2 on its first term
    #[arg(long)]
    pub unscaled: bool,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// A single output cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(u64),
    Bool(bool),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // shortest digits that round-trip; exponent form keeps tiny and huge values compact
            Cell::Real(v) if *v != 0.0 && v.is_finite() && !(1e-4..1e16).contains(&v.abs()) => write!(f, "{v:e}"),
            Cell::Real(v) => write!(f, "{v}"),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Bool(v) => write!(f, "{v}"),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(u64::from(v))
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

fn real(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

impl From<Cell> for Value {
    fn from(c: Cell) -> Self {
        match c {
            Cell::Real(v) => real(v),
            Cell::Int(v) => Value::from(v),
            Cell::Bool(v) => Value::Bool(v),
        }
    }
}

/// Column-ordered rows plus run metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub meta: Map<String, Value>,
    /// Key/value summary, rendered as a trailing `#` comment row in CSV and
    /// as `meta.summary` in JSON.
    pub summary: Vec<(&'static str, Cell)>,
}

impl Table {
    fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
            meta: Map::new(),
            summary: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::to_string))
                .expect("in-memory write");
        }
        let mut out = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output");
        if !self.summary.is_empty() {
            let parts: Vec<String> = self.summary.iter().map(|(k, v)| format!("{k}={v}")).collect();
            out.push_str("# ");
            out.push_str(&parts.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut meta = self.meta.clone();
        if !self.summary.is_empty() {
            let summary: Map<String, Value> = self.summary.iter().map(|(k, v)| (k.to_string(), (*v).into())).collect();
            meta.insert("summary".into(), Value::Object(summary));
        }
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                Value::Object(
                    self.columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| (c.to_string(), (*v).into()))
                        .collect(),
                )
            })
            .collect();
        let mut doc = Map::new();
        doc.insert("meta".into(), Value::Object(meta));
        doc.insert("rows".into(), Value::Array(rows));
        let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("json serialization");
        s.push('\n');
        s
    }
}

/// What a command produced and the exit status it asks for.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub table: Table,
    pub format: Format,
    pub out: Option<std::path::PathBuf>,
    pub exit: u8,
}

pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Domain(_) | Error::Syntax { .. } | Error::UnknownIdentifier { .. } | Error::Config(_) => EXIT_USAGE,
        Error::NotConverged { .. } => EXIT_CONVERGENCE,
        Error::NonFinite { .. } | Error::Evaluation { .. } => EXIT_EVALUATION,
    }
}

pub fn run(command: &Command) -> Result<Outcome> {
    let (table, output, exit) = match command {
        Command::Eval(a) => {
            let (table, converged) = eval_table(a)?;
            (table, &a.output, if converged { 0 } else { EXIT_CONVERGENCE })
        }
        Command::Moments(a) => (moments_table(a)?, &a.output, 0),
        Command::Bounds(a) => (bounds_table(a)?, &a.output, 0),
        Command::Converge(a) => (converge_table(a)?, &a.output, 0),
        Command::Figure(a) => (figure_table(a)?, &a.output, 0),
        Command::Constant(a) => (constant_table(a)?, &a.output, 0),
    };
    Ok(Outcome {
        table,
        format: output.format,
        out: output.out.clone(),
        exit,
    })
}

fn check_order(n: u32) -> Result<()> {
    if n == 0 {
        Err(Error::Config("--n must be at least 1".into()))
    } else {
        Ok(())
    }
}

fn base_meta(command: &str, n: u32, pq: PQParams) -> Map<String, Value> {
    let mut meta = Map::new();
    meta.insert("command".into(), Value::from(command));
    meta.insert("n".into(), Value::from(n));
    meta.insert("p".into(), real(pq.p()));
    meta.insert("q".into(), real(pq.q()));
    meta
}

fn grid_meta(meta: &mut Map<String, Value>, key: &str, grid: &Grid) {
    meta.insert(key.into(), Value::from(grid.to_string()));
}

fn evaluate<F: crate::RealFn + ?Sized>(
    op: Operator,
    f: &F,
    n: u32,
    x: f64,
    pq: PQParams,
    policy: &TruncationPolicy,
) -> Result<SeriesEval> {
    match op {
        Operator::Plain => eval_series(f, n, x, pq, policy),
        Operator::King => eval_king(f, n, x, pq, policy),
    }
}

fn require_converged(e: SeriesEval, x: f64) -> Result<f64> {
    if e.converged {
        Ok(e.value)
    } else {
        Err(Error::NotConverged {
            at: x,
            terms: e.terms_used,
        })
    }
}

/// Returns the one-row table and whether the series converged.
pub fn eval_table(a: &EvalArgs) -> Result<(Table, bool)> {
    let pq = PQParams::new(a.p, a.q)?;
    check_order(a.n)?;
    let f = FunctionExpr::parse(&a.f)?;
    let policy = a.policy.policy()?;
    let e = evaluate(a.operator, &f, a.n, a.x, pq, &policy)?;

    let mut t = Table::new(vec![
        "value",
        "terms_used",
        "accumulated_weight",
        "tail_error_estimate",
        "converged",
    ]);
    t.push(vec![
        e.value.into(),
        e.terms_used.into(),
        e.accumulated_weight.into(),
        e.tail_error_estimate.into(),
        e.converged.into(),
    ]);
    t.meta = base_meta("eval", a.n, pq);
    t.meta.insert("f".into(), Value::from(a.f.as_str()));
    t.meta.insert("x".into(), real(a.x));
    t.meta.insert("operator".into(), Value::from(operator_name(a.operator)));
    a.policy.meta(&mut t.meta);
    Ok((t, e.converged))
}

fn operator_name(op: Operator) -> &'static str {
    match op {
        Operator::Plain => "plain",
        Operator::King => "king",
    }
}

pub fn moments_table(a: &MomentsArgs) -> Result<Table> {
    let pq = PQParams::new(a.p, a.q)?;
    check_order(a.n)?;
    let grid: Grid = a.range.parse()?;
    let policy = a.policy.policy()?;
    let monomials: [fn(f64) -> f64; 3] = [|_| 1.0, |t| t, |t| t * t];

    let mut t = Table::new(vec![
        "x",
        "m0_series",
        "m1_series",
        "m2_series",
        "m0_closed",
        "m1_closed",
        "m2_closed",
        "max_abs_gap",
    ]);
    for &x in grid.points() {
        let mut series = [0.0; 3];
        let mut closed = [0.0; 3];
        for i in 0..3 {
            series[i] = require_converged(evaluate(a.operator, &monomials[i], a.n, x, pq, &policy)?, x)?;
            closed[i] = match a.operator {
                Operator::Plain => moment_closed(i as u32, a.n, x, pq)?,
                Operator::King => king_moment_closed(i as u32, a.n, x, pq)?,
            };
        }
        let gap = (0..3).map(|i| (series[i] - closed[i]).abs()).fold(0.0, f64::max);
        let mut row = vec![Cell::Real(x)];
        row.extend(series.iter().chain(&closed).map(|&v| Cell::Real(v)));
        row.push(gap.into());
        t.push(row);
    }
    t.meta = base_meta("moments", a.n, pq);
    t.meta.insert("operator".into(), Value::from(operator_name(a.operator)));
    grid_meta(&mut t.meta, "range", &grid);
    a.policy.meta(&mut t.meta);
    Ok(t)
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|item| {
            item.trim()
                .parse()
                .map_err(|_| Error::Config(format!("invalid {what} `{item}` in `{s}`")))
        })
        .collect()
}

fn parse_pq_list(s: &str) -> Result<Vec<PQParams>> {
    s.split(',')
        .map(|item| {
            let (p, q) = item
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("pq pair `{item}` must be p:q")))?;
            let num = |t: &str| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("invalid number `{t}` in pq pair `{item}`")))
            };
            PQParams::new(num(p)?, num(q)?)
        })
        .collect()
}

pub fn bounds_table(a: &BoundsArgs) -> Result<Table> {
    let ns: Vec<u32> = parse_list(&a.n_list, "n")?;
    for &n in &ns {
        check_order(n)?;
    }
    let pqs = parse_pq_list(&a.pq_list)?;
    let grid: Grid = a.range.parse()?;
    let mut t = Table::new(vec![
        "n",
        "p",
        "q",
        "x",
        "first_actual_abs",
        "first_bound_claimed",
        "first_violated",
        "second_actual",
        "second_bound_claimed",
        "second_violated",
    ]);
    for r in bound_audit(&ns, &pqs, grid.points())? {
        t.push(vec![
            r.n.into(),
            r.p.into(),
            r.q.into(),
            r.x.into(),
            r.first_actual_abs.into(),
            r.first_bound_claimed.into(),
            r.first_violated.into(),
            r.second_actual.into(),
            r.second_bound_claimed.into(),
            r.second_violated.into(),
        ]);
    }
    t.meta.insert("command".into(), Value::from("bounds"));
    t.meta.insert("n_list".into(), Value::from(a.n_list.as_str()));
    t.meta.insert("pq_list".into(), Value::from(a.pq_list.as_str()));
    grid_meta(&mut t.meta, "range", &grid);
    Ok(t)
}

pub fn converge_table(a: &ConvergeArgs) -> Result<Table> {
    let schedule: Schedule = a.schedule.parse()?;
    let ns: Vec<u32> = parse_list(&a.n_list, "n")?;
    let grid: Grid = a.range.parse()?;
    let mut t = Table::new(vec!["n", "p_n", "q_n", "bracket_n", "norm_e0", "norm_e1", "norm_e2"]);
    for r in convergence_study(&schedule, &ns, &grid)? {
        t.push(vec![
            r.n.into(),
            r.p_n.into(),
            r.q_n.into(),
            r.bracket_n.into(),
            r.norm_e0.into(),
            r.norm_e1.into(),
            r.norm_e2.into(),
        ]);
    }
    t.meta.insert("command".into(), Value::from("converge"));
    t.meta.insert("schedule".into(), Value::from(a.schedule.as_str()));
    grid_meta(&mut t.meta, "range", &grid);
    t.meta
        .insert("norm_tail_bound".into(), real(weighted_tail_bound(&grid)));
    Ok(t)
}

pub fn figure_table(a: &FigureArgs) -> Result<Table> {
    let pq = PQParams::new(a.p, a.q)?;
    check_order(a.n)?;
    let f = FunctionExpr::parse(&a.f)?;
    let grid: Grid = a.range.parse()?;
    let policy = a.policy.policy()?;
    let d = figure_data(&f, a.n, pq, &grid, &policy)?;
    let mut t = Table::new(vec!["x", "f", "B_plain", "B_king", "err_plain", "err_king"]);
    for r in &d.rows {
        t.push(vec![
            r.x.into(),
            r.f.into(),
            r.b_plain.into(),
            r.b_king.into(),
            r.err_plain.into(),
            r.err_king.into(),
        ]);
    }
    t.meta = base_meta("figure", a.n, pq);
    t.meta.insert("f".into(), Value::from(a.f.as_str()));
    grid_meta(&mut t.meta, "range", &grid);
    a.policy.meta(&mut t.meta);
    t.summary = vec![
        ("sup_err_plain", d.sup_err_plain.into()),
        ("sup_err_king", d.sup_err_king.into()),
        ("king_better", d.king_better().into()),
    ];
    Ok(t)
}

pub fn constant_table(a: &ConstantArgs) -> Result<Table> {
    let pq = PQParams::new(a.p, a.q)?;
    check_order(a.n)?;
    let f = FunctionExpr::parse(&a.f)?;
    let points: Grid = a.range.parse()?;
    let modulus_grid: Grid = a.modulus_range.parse()?;
    let policy = a.policy.policy()?;
    let form = if a.unscaled {
        DeltaForm::Unscaled
    } else {
        DeltaForm::Scaled
    };
    let rep = constant_report(&f, a.n, pq, &points, &modulus_grid, &policy, form)?;
    let mut t = Table::new(vec!["x", "lhs", "delta_n", "omega2_part", "omega_part", "m_required"]);
    for r in &rep.rows {
        t.push(vec![
            r.x.into(),
            r.lhs.into(),
            r.delta_n.into(),
            r.omega2_part.into(),
            r.omega_part.into(),
            r.m_required.into(),
        ]);
    }
    t.meta = base_meta("constant", a.n, pq);
    t.meta.insert("f".into(), Value::from(a.f.as_str()));
    t.meta.insert(
        "delta_form".into(),
        Value::from(if a.unscaled { "unscaled" } else { "scaled" }),
    );
    grid_meta(&mut t.meta, "range", &points);
    grid_meta(&mut t.meta, "modulus_range", &modulus_grid);
    a.policy.meta(&mut t.meta);
    t.summary = vec![("max_m_required", rep.max_m_required.into())];
    Ok(t)
}
