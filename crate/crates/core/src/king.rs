//! King-type modification of the (p,q)-Baskakov operator.
//!
//! `B*(f; x) = B(f; r_n(x))`, where `r_n(x)` is the non-negative root of
//!
//! ```text
//! ([n] + p^n/q) r^2 + p^(n-1) r - [n] x^2 = 0
//! ```
//!
//! chosen so that `B*(t^2; x) = x^2`.

use serde::Serialize;

use crate::baskakov::{check_base, check_order, eval_series, SeriesEval, TruncationPolicy};
use crate::error::{Error, Result};
use crate::function::{eval_finite, RealFn};
use crate::pq::{pq_integer, PQParams};

/// Base point `r_n(x)` of the modified operator. Always in `[0, x]`.
pub fn r_n(x: f64, n: u32, pq: PQParams) -> Result<f64> {
    check_order(n)?;
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::domain(format!("r_n requires finite x >= 0, got {x}")));
    }
    let q = Quadratic::new(n, pq, x);
    Ok(if q.four_ac < q.b * q.b {
        q.rationalized_root()
    } else {
        q.direct_root()
    })
}

/// Coefficients of `a r^2 + b r - c = 0` with `four_ac = 4 a c`.
struct Quadratic {
    a: f64,
    b: f64,
    c: f64,
    four_ac: f64,
}

impl Quadratic {
    fn new(n: u32, pq: PQParams, x: f64) -> Self {
        let bracket = pq_integer(n, pq);
        let a = bracket + pq.p().powi(n as i32) / pq.q();
        let c = bracket * x * x;
        Self {
            a,
            b: pq.p().powi(n as i32 - 1),
            c,
            four_ac: 4.0 * a * c,
        }
    }

    fn disc_sqrt(&self) -> f64 {
        (self.b * self.b + self.four_ac).sqrt()
    }

    fn direct_root(&self) -> f64 {
        (-self.b + self.disc_sqrt()) / (2.0 * self.a)
    }

    fn rationalized_root(&self) -> f64 {
        2.0 * self.c / (self.b + self.disc_sqrt())
    }
}

/// `B*(f; x)`: the Baskakov series based at `r_n(x)`.
pub fn eval_king<F: RealFn + ?Sized>(
    f: &F,
    n: u32,
    x: f64,
    pq: PQParams,
    policy: &TruncationPolicy,
) -> Result<SeriesEval> {
    eval_series(f, n, r_n(x, n, pq)?, pq, policy)
}

/// Closed-form moments of `B*`: `1`, `r_n(x)`, `x^2`.
pub fn king_moment_closed(i: u32, n: u32, x: f64, pq: PQParams) -> Result<f64> {
    check_order(n)?;
    check_base(x)?;
    match i {
        0 => Ok(1.0),
        1 => r_n(x, n, pq),
        2 => Ok(x * x),
        _ => Err(Error::domain(format!(
            "closed-form moments exist for i <= 2, got i={i}"
        ))),
    }
}

/// The coefficient `(√(p^n/q) - p^n/(q√[n])) / (√[n] + p^n/(q√[n]))` that the
/// first-moment bound multiplies by `x`. Negative when `[n] < p^n/q`.
pub fn first_bound_coefficient(n: u32, pq: PQParams) -> f64 {
    let bracket = pq_integer(n, pq);
    let sb = bracket.sqrt();
    let pn_q = pq.p().powi(n as i32) / pq.q();
    (pn_q.sqrt() - pn_q / sb) / (sb + pn_q / sb)
}

/// `p^(n-1) / (p^n/q + [n])`, the linear coefficient of the second-moment bound.
pub fn second_bound_linear_coefficient(n: u32, pq: PQParams) -> f64 {
    pq.p().powi(n as i32 - 1) / (pq.p().powi(n as i32) / pq.q() + pq_integer(n, pq))
}

/// First and second central moments of `B*` with the claimed upper bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CentralMoments {
    /// `B*(t - x; x) = r_n(x) - x`
    pub first: f64,
    /// `B*((t - x)^2; x) = 2x^2 - 2x r_n(x)`
    pub second: f64,
    pub first_bound_claimed: f64,
    pub second_bound_claimed: f64,
}

pub fn central_moments(n: u32, x: f64, pq: PQParams) -> Result<CentralMoments> {
    let r = r_n(x, n, pq)?;
    let c = first_bound_coefficient(n, pq);
    Ok(CentralMoments {
        first: r - x,
        second: 2.0 * x * (x - r),
        first_bound_claimed: c * x,
        second_bound_claimed: 2.0 * c * x * x + second_bound_linear_coefficient(n, pq) * x,
    })
}

/// One row of the central-moment bound audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditRow {
    pub n: u32,
    pub p: f64,
    pub q: f64,
    pub x: f64,
    pub first_actual_abs: f64,
    pub first_bound_claimed: f64,
    pub first_violated: bool,
    pub second_actual: f64,
    pub second_bound_claimed: f64,
    pub second_violated: bool,
}

/// Checks `|r_n(x) - x| <= c x` and `2x^2 - 2x r_n(x) <= 2c x^2 + p^(n-1) x / (p^n/q + [n])`
/// at every combination of the inputs, in `n`-major, then `pq`, then `x` order.
pub fn bound_audit(n_list: &[u32], pq_list: &[PQParams], x_grid: &[f64]) -> Result<Vec<AuditRow>> {
    let mut rows = Vec::with_capacity(n_list.len() * pq_list.len() * x_grid.len());
    for &n in n_list {
        for &pq in pq_list {
            for &x in x_grid {
                let cm = central_moments(n, x, pq)?;
                let first_actual_abs = cm.first.abs();
                rows.push(AuditRow {
                    n,
                    p: pq.p(),
                    q: pq.q(),
                    x,
                    first_actual_abs,
                    first_bound_claimed: cm.first_bound_claimed,
                    first_violated: first_actual_abs > cm.first_bound_claimed,
                    second_actual: cm.second,
                    second_bound_claimed: cm.second_bound_claimed,
                    second_violated: cm.second > cm.second_bound_claimed,
                });
            }
        }
    }
    Ok(rows)
}

/// `B̂(f; x) = B*(f; x) + f(x) - f(r_n(x))`, which fixes both `1` and `t`.
pub fn auxiliary_operator<F: RealFn + ?Sized>(
    f: &F,
    n: u32,
    x: f64,
    pq: PQParams,
    policy: &TruncationPolicy,
) -> Result<f64> {
    let r = r_n(x, n, pq)?;
    let b = eval_series(f, n, r, pq, policy)?;
    Ok(b.value + eval_finite(f, x)? - eval_finite(f, r)?)
}
