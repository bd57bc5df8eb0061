//! Grid-based moduli of continuity, weighted norms, and the quantitative
//! error statements for the modified operator turned into computable
//! reports.
//!
//! Suprema over `[0, ∞)` are replaced by maxima over a finite [`Grid`], and
//! shifts `h` range over multiples of the grid step. Every quantity here is
//! therefore an under-approximation of the true supremum, at the resolution
//! recorded in the grid.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::baskakov::{eval_series, TruncationPolicy};
use crate::error::{Error, Result};
use crate::expr::FunctionExpr;
use crate::function::{eval_finite, RealFn};
use crate::king::{eval_king, first_bound_coefficient, r_n, second_bound_linear_coefficient};
use crate::pq::{pq_integer, PQParams};

/// Slack used when deciding whether a ratio of grid quantities is integral.
const INTEGRAL_SLACK: f64 = 1e-9;

/// Uniform abscissae `start, start + step, ...` up to `stop`.
///
/// `stop` itself is included when `(stop - start) / step` is an integer to
/// within `1e-9`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    start: f64,
    stop: f64,
    step: f64,
    #[serde(skip)]
    points: Vec<f64>,
}

impl Grid {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err(Error::Config(format!(
                "grid bounds must be finite: {start}:{stop}:{step}"
            )));
        }
        if start < 0.0 {
            return Err(Error::Config(format!("grid start must be >= 0, got {start}")));
        }
        if !(stop > start) {
            return Err(Error::Config(format!(
                "grid stop must exceed start, got {start}:{stop}"
            )));
        }
        if !(step > 0.0) {
            return Err(Error::Config(format!("grid step must be positive, got {step}")));
        }
        let ratio = (stop - start) / step;
        let intervals = (ratio + INTEGRAL_SLACK).floor();
        if intervals >= 1e8 {
            return Err(Error::Config(format!("grid {start}:{stop}:{step} has too many points")));
        }
        let intervals = intervals as usize;
        let endpoint_included = (ratio - ratio.round()).abs() <= INTEGRAL_SLACK;
        let mut points: Vec<f64> = (0..=intervals).map(|i| start + i as f64 * step).collect();
        if endpoint_included {
            points[intervals] = stop;
        }
        if let Some(last) = points.last_mut() {
            *last = last.min(stop);
        }
        Ok(Self {
            start,
            stop,
            step,
            points,
        })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn stop(&self) -> f64 {
        self.stop
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Abscissa `start + i * step`, also for indices past the end.
    #[inline]
    fn abscissa(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    /// Number of whole steps that fit in `h`.
    fn shifts(&self, h: f64) -> usize {
        (h / self.step + INTEGRAL_SLACK).floor() as usize
    }
}

impl FromStr for Grid {
    type Err = Error;

    /// Parses `start:stop:step`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [start, stop, step] = parts[..] else {
            return Err(Error::Config(format!("range must be start:stop:step, got `{s}`")));
        };
        let num = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| Error::Config(format!("invalid number `{t}` in range `{s}`")))
        };
        Grid::new(num(start)?, num(stop)?, num(step)?)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

/// Largest first or second difference of `f` over a grid, for every shift
/// up to a maximum, stored as a running maximum so that `ω(f, δ)` for any
/// `δ` up to that maximum is a lookup.
#[derive(Debug, Clone)]
pub struct ModulusProfile {
    order: Order,
    step: f64,
    max_shifts: usize,
    step_slack: f64,
    running_max: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Order {
    First,
    Second,
}

impl ModulusProfile {
    /// Profile of `sup_x |f(x + h) - f(x)|` for `h = j step <= max_delta`.
    pub fn first_order<F: RealFn + ?Sized>(f: &F, grid: &Grid, max_delta: f64) -> Result<Self> {
        check_delta(max_delta)?;
        let max_shifts = grid.shifts(max_delta);
        let values = sample(f, grid, grid.len() + max_shifts)?;
        let len = grid.len();
        let diffs = (0..=max_shifts).map(|j| (0..len).map(|i| (values[i + j] - values[i]).abs()).fold(0.0, f64::max));
        Ok(Self::from_diffs(Order::First, grid, max_shifts, diffs))
    }

    /// Profile of `sup_x |f(x + 2h) - 2 f(x + h) + f(x)|` for
    /// `h = j step <= √max_delta`.
    pub fn second_order<F: RealFn + ?Sized>(f: &F, grid: &Grid, max_delta: f64) -> Result<Self> {
        check_delta(max_delta)?;
        let max_shifts = grid.shifts(max_delta.sqrt());
        let values = sample(f, grid, grid.len() + 2 * max_shifts)?;
        let len = grid.len();
        let diffs = (0..=max_shifts).map(|j| {
            (0..len)
                .map(|i| (values[i + 2 * j] - 2.0 * values[i + j] + values[i]).abs())
                .fold(0.0, f64::max)
        });
        Ok(Self::from_diffs(Order::Second, grid, max_shifts, diffs))
    }

    fn from_diffs(order: Order, grid: &Grid, max_shifts: usize, diffs: impl Iterator<Item = f64>) -> Self {
        let mut best = 0.0_f64;
        let running_max = diffs
            .map(|d| {
                best = best.max(d);
                best
            })
            .collect();
        Self {
            order,
            step: grid.step,
            max_shifts,
            step_slack: INTEGRAL_SLACK,
            running_max,
        }
    }

    /// The grid modulus at `delta` (for the second-order profile, shifts run
    /// up to `√delta`).
    pub fn omega(&self, delta: f64) -> Result<f64> {
        check_delta(delta)?;
        let h = match self.order {
            Order::First => delta,
            Order::Second => delta.sqrt(),
        };
        let j = (h / self.step + self.step_slack).floor() as usize;
        if j > self.max_shifts {
            return Err(Error::domain(format!(
                "delta {delta} exceeds the range this modulus profile was built for"
            )));
        }
        Ok(self.running_max[j])
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta >= 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("delta must be finite and >= 0, got {delta}")))
    }
}

fn sample<F: RealFn + ?Sized>(f: &F, grid: &Grid, count: usize) -> Result<Vec<f64>> {
    (0..count)
        .map(|i| {
            let x = if i < grid.len() {
                grid.points[i]
            } else {
                grid.abscissa(i)
            };
            eval_finite(f, x)
        })
        .collect()
}

/// Usual modulus of continuity `ω(f, δ)` on a grid.
pub fn modulus<F: RealFn + ?Sized>(f: &F, delta: f64, grid: &Grid) -> Result<f64> {
    ModulusProfile::first_order(f, grid, delta)?.omega(delta)
}

/// Second-order modulus of smoothness `ω₂(f, δ)`, shifts `h <= √δ`.
pub fn modulus2<F: RealFn + ?Sized>(f: &F, delta: f64, grid: &Grid) -> Result<f64> {
    ModulusProfile::second_order(f, grid, delta)?.omega(delta)
}

/// `‖f‖_m = sup |f(x)| / (1 + x^m)` over the grid.
pub fn weighted_norm<F: RealFn + ?Sized>(f: &F, m: u32, grid: &Grid) -> Result<f64> {
    grid.points.iter().try_fold(0.0_f64, |acc, &x| {
        Ok(acc.max(eval_finite(f, x)?.abs() / (1.0 + x.powi(m as i32))))
    })
}

/// `z ↦ f(z^2)`.
#[derive(Debug, Clone, Copy)]
pub struct SquaredArgument<'a, F: ?Sized>(pub &'a F);

impl<F: RealFn + ?Sized> RealFn for SquaredArgument<'_, F> {
    fn call(&self, z: f64) -> Result<f64> {
        self.0.call(z * z)
    }
}

/// A rule `n ↦ (p_n, q_n)` written as two expressions in `n`,
/// e.g. `p=1-1/(n+1)^2,q=1-1/(n+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    p: FunctionExpr,
    q: FunctionExpr,
}

impl Schedule {
    /// `p_n = 1 - 1/(n+1)^2`, `q_n = 1 - 1/(n+1)`.
    pub const NEAR_ONE: &'static str = "p=1-1/(n+1)^2,q=1-1/(n+1)";
    /// `p_n = 1`, `q_n = 1 - 1/(n+1)`.
    pub const Q_ONLY: &'static str = "p=1,q=1-1/(n+1)";

    pub fn near_one() -> Self {
        Self::NEAR_ONE.parse().expect("built-in schedule parses")
    }

    pub fn params(&self, n: u32) -> Result<PQParams> {
        let at = f64::from(n);
        let value = |e: &FunctionExpr, name: &str| {
            e.eval(at)
                .map_err(|err| Error::Config(format!("schedule {name}_n at n={n}: {err}")))
        };
        let (p, q) = (value(&self.p, "p")?, value(&self.q, "q")?);
        PQParams::new(p, q).map_err(|err| match err {
            Error::Domain(msg) => Error::Config(format!("schedule at n={n}: {msg}")),
            other => other,
        })
    }
}

impl FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = None;
        let mut q = None;
        for part in split_top_level(s) {
            let (name, body) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("schedule entry `{part}` must look like p=<expr>")))?;
            let e = FunctionExpr::parse_in(body, "n")?;
            match name.trim() {
                "p" => p = Some(e),
                "q" => q = Some(e),
                other => return Err(Error::Config(format!("unknown schedule parameter `{other}`"))),
            }
        }
        match (p, q) {
            (Some(p), Some(q)) => Ok(Self { p, q }),
            _ => Err(Error::Config(format!("schedule `{s}` must define both p and q"))),
        }
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p={},q={}", self.p, self.q)
    }
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut begin = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&s[begin..i]);
                begin = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[begin..]);
    parts
}

/// `‖B* e_i - e_i‖₂` for the three test functions at one `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: u32,
    pub p_n: f64,
    pub q_n: f64,
    pub bracket_n: f64,
    pub norm_e0: f64,
    pub norm_e1: f64,
    pub norm_e2: f64,
}

/// Weighted distances of `B*` from the test functions along a schedule.
///
/// `B*` reproduces `1` and `x^2`, so `norm_e0` and `norm_e2` are zero by
/// construction; `norm_e1 = sup (x - r_n(x)) / (1 + x^2)` uses the closed
/// form of `r_n`. Past the grid the omitted supremum is at most
/// `X / (1 + X^2)` for `X = grid.stop() >= 1`, see [`weighted_tail_bound`].
pub fn convergence_study(schedule: &Schedule, n_list: &[u32], grid: &Grid) -> Result<Vec<ConvergenceRow>> {
    let mut rows: Vec<ConvergenceRow> = n_list
        .iter()
        .map(|&n| {
            if n == 0 {
                return Err(Error::Config("schedule requires n >= 1".into()));
            }
            let pq = schedule.params(n)?;
            let norm_e1 = grid.points.iter().try_fold(0.0_f64, |acc, &x| {
                Ok::<_, Error>(acc.max((x - r_n(x, n, pq)?).abs() / (1.0 + x * x)))
            })?;
            Ok(ConvergenceRow {
                n,
                p_n: pq.p(),
                q_n: pq.q(),
                bracket_n: pq_integer(n, pq),
                norm_e0: 0.0,
                norm_e1,
                norm_e2: 0.0,
            })
        })
        .collect::<Result<_>>()?;
    rows.sort_by_key(|r| r.n);
    Ok(rows)
}

/// Bound on `sup_{x > X} |x - r_n(x)| / (1 + x^2)`, using `0 <= x - r_n(x) <= x`.
pub fn weighted_tail_bound(grid: &Grid) -> f64 {
    let x = grid.stop().max(1.0);
    x / (1.0 + x * x)
}

/// Which form of `δ_n(x)` to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeltaForm {
    /// `3c x^2 + p^(n-1) x / (p^n/q + [n])`, the form the derivation supports.
    #[default]
    Scaled,
    /// `3c + p^(n-1) x / (p^n/q + [n])`, with the leading term not scaled by `x^2`.
    Unscaled,
}

/// `δ_n(x)` of the second-order-modulus error estimate, `c` being
/// [`first_bound_coefficient`].
pub fn king_delta(n: u32, x: f64, pq: PQParams, form: DeltaForm) -> Result<f64> {
    crate::baskakov::check_order(n)?;
    crate::baskakov::check_base(x)?;
    let c = first_bound_coefficient(n, pq);
    let linear = second_bound_linear_coefficient(n, pq) * x;
    Ok(match form {
        DeltaForm::Scaled => 3.0 * c * x * x + linear,
        DeltaForm::Unscaled => 3.0 * c + linear,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantRow {
    pub x: f64,
    /// `|B*(f; x) - f(x)|`
    pub lhs: f64,
    pub delta_n: f64,
    /// `ω₂(f, √δ_n(x))`
    pub omega2_part: f64,
    /// `ω(f, |c| x)`
    pub omega_part: f64,
    /// Smallest `M` with `lhs <= M omega2_part + omega_part`, zero when the
    /// excess is within series truncation noise, infinite when no `M` works
    /// because `omega2_part` vanishes.
    pub m_required: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantReport {
    pub n: u32,
    pub p: f64,
    pub q: f64,
    pub points: Grid,
    pub modulus_grid: Grid,
    pub rows: Vec<ConstantRow>,
    pub max_m_required: f64,
}

/// Empirical constant needed in `|B*(f;x) - f(x)| <= M ω₂(f, √δ_n(x)) + ω(f, c x)`.
///
/// `points` are the evaluation abscissae, `modulus_grid` the grid on which
/// both moduli are taken. The estimate's `M` is an unspecified absolute
/// constant, so this reports what the data require rather than a verdict.
pub fn constant_report<F: RealFn + ?Sized>(
    f: &F,
    n: u32,
    pq: PQParams,
    points: &Grid,
    modulus_grid: &Grid,
    policy: &TruncationPolicy,
    form: DeltaForm,
) -> Result<ConstantReport> {
    let c = first_bound_coefficient(n, pq).abs();
    let deltas = points
        .points
        .iter()
        .map(|&x| king_delta(n, x, pq, form))
        .collect::<Result<Vec<_>>>()?;
    if let Some(&bad) = deltas.iter().find(|d| **d < 0.0) {
        return Err(Error::domain(format!(
            "negative δ_n = {bad} for n={n}, p={}, q={}",
            pq.p(),
            pq.q()
        )));
    }
    let max_sqrt_delta = deltas.iter().fold(0.0_f64, |a, d| a.max(d.sqrt()));
    let x_max = points.points.last().copied().unwrap_or(0.0);
    let omega2 = ModulusProfile::second_order(f, modulus_grid, max_sqrt_delta)?;
    let omega1 = ModulusProfile::first_order(f, modulus_grid, c * x_max)?;

    let mut rows = Vec::with_capacity(points.len());
    for (&x, &delta_n) in points.points.iter().zip(&deltas) {
        let b = eval_king(f, n, x, pq, policy)?;
        let fx = eval_finite(f, x)?;
        let lhs = (b.value - fx).abs();
        let omega2_part = omega2.omega(delta_n.sqrt())?;
        let omega_part = omega1.omega(c * x)?;
        let excess = lhs - omega_part;
        // series truncation noise is not attributed to the bound
        let noise = policy.tail_tolerance() * (1.0 + fx.abs()) + b.tail_error_estimate;
        let m_required = if excess <= noise {
            0.0
        } else if omega2_part > 0.0 {
            excess / omega2_part
        } else {
            f64::INFINITY
        };
        rows.push(ConstantRow {
            x,
            lhs,
            delta_n,
            omega2_part,
            omega_part,
            m_required,
        });
    }
    let max_m_required = rows.iter().fold(0.0_f64, |a, r| a.max(r.m_required));
    Ok(ConstantReport {
        n,
        p: pq.p(),
        q: pq.q(),
        points: points.clone(),
        modulus_grid: modulus_grid.clone(),
        rows,
        max_m_required,
    })
}

/// The argument of the modulus in the `f(z^2)` error bound, squared:
/// `2c x + p^(n-1) / (p^n/q + [n])`.
pub fn squared_argument_radicand(n: u32, x: f64, pq: PQParams) -> Result<f64> {
    crate::baskakov::check_order(n)?;
    crate::baskakov::check_base(x)?;
    let radicand = 2.0 * first_bound_coefficient(n, pq) * x + second_bound_linear_coefficient(n, pq);
    if radicand < 0.0 {
        return Err(Error::domain(format!(
            "negative radicand {radicand} at n={n}, x={x}, p={}, q={}: bound undefined in this parameter regime",
            pq.p(),
            pq.q()
        )));
    }
    Ok(radicand)
}

/// `2 ω(f*, √radicand)` with `f*(z) = f(z^2)`, the modulus taken on `grid`.
pub fn squared_argument_bound<F: RealFn + ?Sized>(f: &F, n: u32, x: f64, pq: PQParams, grid: &Grid) -> Result<f64> {
    let delta = squared_argument_radicand(n, x, pq)?.sqrt();
    Ok(2.0 * modulus(&SquaredArgument(f), delta, grid)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FigureRow {
    pub x: f64,
    pub f: f64,
    pub b_plain: f64,
    pub b_king: f64,
    /// `b_plain - f`
    pub err_plain: f64,
    /// `b_king - f`
    pub err_king: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FigureData {
    pub rows: Vec<FigureRow>,
    pub sup_err_plain: f64,
    pub sup_err_king: f64,
}

impl FigureData {
    pub fn king_better(&self) -> bool {
        self.sup_err_king < self.sup_err_plain
    }
}

/// Both operators applied to `f` along a grid, with signed errors.
pub fn figure_data<F: RealFn + ?Sized>(
    f: &F,
    n: u32,
    pq: PQParams,
    grid: &Grid,
    policy: &TruncationPolicy,
) -> Result<FigureData> {
    let mut rows = Vec::with_capacity(grid.len());
    for &x in &grid.points {
        let fx = eval_finite(f, x)?;
        let b_plain = eval_series(f, n, x, pq, policy)?.value;
        let b_king = eval_king(f, n, x, pq, policy)?.value;
        rows.push(FigureRow {
            x,
            f: fx,
            b_plain,
            b_king,
            err_plain: b_plain - fx,
            err_king: b_king - fx,
        });
    }
    let sup = |g: fn(&FigureRow) -> f64| rows.iter().map(|r| g(r).abs()).fold(0.0, f64::max);
    Ok(FigureData {
        sup_err_plain: sup(|r| r.err_plain),
        sup_err_king: sup(|r| r.err_king),
        rows,
    })
}
