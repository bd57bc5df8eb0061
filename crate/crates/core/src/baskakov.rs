//! The (p,q)-Baskakov operator
//!
//! ```text
//! B(f; r) = Σ_{k>=0} b_k(r) f(t_k)
//! b_k(r)  = [n+k-1 choose k] p^(k + n(n-1)/2) q^(k(k-1)/2) r^k / (1 ⊕ r)^(n+k)
//! t_k     = p^(n-1) [k] / (q^(k-1) [n])
//! ```
//!
//! The series is summed over all `k` with adaptive truncation on the
//! accumulated basis mass. Truncating at `k = n` does not reproduce
//! constants.

use crate::error::{Error, Result};
use crate::function::{eval_finite, RealFn};
use crate::pq::{ln_pq_rising_power, pq_binomial, pq_integer, PQParams};
use crate::sum::CompensatedSum;

/// Stopping rule for the infinite series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    tail_tolerance: f64,
    max_terms: usize,
    growth_exponent: u32,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            tail_tolerance: 1e-12,
            max_terms: 10_000,
            growth_exponent: 2,
        }
    }
}

impl TruncationPolicy {
    pub fn new(tail_tolerance: f64, max_terms: usize, growth_exponent: u32) -> Result<Self> {
        if !(tail_tolerance > 0.0 && tail_tolerance.is_finite()) {
            return Err(Error::domain(format!(
                "tail tolerance must be positive and finite, got {tail_tolerance}"
            )));
        }
        if max_terms == 0 {
            return Err(Error::domain("max_terms must be at least 1"));
        }
        Ok(Self {
            tail_tolerance,
            max_terms,
            growth_exponent,
        })
    }

    pub fn tail_tolerance(&self) -> f64 {
        self.tail_tolerance
    }

    pub fn max_terms(&self) -> usize {
        self.max_terms
    }

    /// Declared polynomial growth `m` of the integrand, `|f(t)| <= M (1 + t^m)`.
    pub fn growth_exponent(&self) -> u32 {
        self.growth_exponent
    }
}

/// Result of a truncated series evaluation with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SeriesEval {
    pub value: f64,
    pub terms_used: usize,
    pub accumulated_weight: f64,
    /// Estimated contribution of the omitted terms, `(1 - W) M_f (1 + t_K^m)`
    /// where `t_K` is the first omitted node and `M_f` the largest observed
    /// `|f(t)| / (1 + t^m)`.
    pub tail_error_estimate: f64,
    pub converged: bool,
}

/// One term of the operator series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisTerm {
    pub k: usize,
    pub weight: f64,
    pub node: f64,
}

/// Precomputed node geometry for a fixed `n`:
/// `t_k = p^(n-1)/[n] · ((p/q)^k - 1)/((p/q) - 1)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct NodeScale {
    scale: f64,
    ln_growth: f64,
    denom: f64,
}

impl NodeScale {
    pub(crate) fn new(n: u32, pq: PQParams) -> Self {
        let direct = pq.p().powi(n as i32 - 1) / pq_integer(n, pq);
        let scale = if direct.is_normal() {
            direct
        } else {
            (f64::from(n - 1) * pq.p().ln() - crate::pq::ln_pq_integer(u64::from(n), pq)).exp()
        };
        let ln_growth = -pq.ln_ratio();
        Self {
            scale,
            ln_growth,
            denom: ln_growth.exp_m1(),
        }
    }

    #[inline]
    pub(crate) fn node(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.scale * ((k as f64 * self.ln_growth).exp_m1() / self.denom)
    }
}

/// The abscissa `p^(n-1) [k] / (q^(k-1) [n])` of the `k`-th term.
pub fn node(n: u32, k: usize, pq: PQParams) -> Result<f64> {
    check_order(n)?;
    Ok(NodeScale::new(n, pq).node(k))
}

/// The basis weight `b_k(r)`, evaluated directly in log space.
///
/// [`eval_series`] does not call this; it walks the weights with the term
/// ratio recurrence instead (see [`BasisTerms`]).
pub fn basis_weight(n: u32, k: usize, r: f64, pq: PQParams) -> Result<f64> {
    check_order(n)?;
    check_base(r)?;
    if r == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    let k32 = u32::try_from(k).map_err(|_| Error::domain("term index too large"))?;
    let kf = k as f64;
    let nf = f64::from(n);
    let ln_w = pq_binomial(n + k32 - 1, k32, pq)?.ln()
        + (kf + nf * (nf - 1.0) / 2.0) * pq.p().ln()
        + kf * (kf - 1.0) / 2.0 * pq.q().ln()
        + kf * r.ln()
        - ln_pq_rising_power(r, n + k32, pq)?;
    Ok(ln_w.exp())
}

/// Iterator over the terms `(k, b_k(r), t_k)` in increasing `k`.
///
/// Weights follow the ratio
/// `b_{k+1}/b_k = r ρ^k (1 - ρ^(n+k)) / ((1 - ρ^(k+1)) (1 + r ρ^(n+k)))`,
/// `ρ = q/p`, carried as a running logarithm so that neither very small
/// leading weights nor large `r` underflow.
#[derive(Debug, Clone)]
pub struct BasisTerms {
    n: f64,
    ln_rho: f64,
    ln_r: f64,
    r: f64,
    ln_weight: f64,
    nodes: NodeScale,
    k: usize,
}

impl BasisTerms {
    pub fn new(n: u32, r: f64, pq: PQParams) -> Result<Self> {
        check_order(n)?;
        check_base(r)?;
        let ln_rho = pq.ln_ratio();
        let ln_weight = -(0..n)
            .map(|j| ((f64::from(j) * ln_rho).exp() * r).ln_1p())
            .collect::<CompensatedSum>()
            .value();
        Ok(Self {
            n: f64::from(n),
            ln_rho,
            ln_r: r.ln(),
            r,
            ln_weight,
            nodes: NodeScale::new(n, pq),
            k: 0,
        })
    }

    fn ln_ratio(&self, k: f64) -> f64 {
        let a = ((self.n + k) * self.ln_rho).exp_m1() / ((k + 1.0) * self.ln_rho).exp_m1();
        k * self.ln_rho + self.ln_r + a.ln() - (self.r * ((self.n + k) * self.ln_rho).exp()).ln_1p()
    }
}

impl Iterator for BasisTerms {
    type Item = BasisTerm;

    fn next(&mut self) -> Option<BasisTerm> {
        let k = self.k;
        let weight = if self.r == 0.0 {
            if k == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            self.ln_weight.exp()
        };
        let term = BasisTerm {
            k,
            weight,
            node: self.nodes.node(k),
        };
        if self.r > 0.0 {
            self.ln_weight += self.ln_ratio(k as f64);
        }
        self.k += 1;
        Some(term)
    }
}

/// Evaluates `Σ_k b_k(r) f(t_k)`.
///
/// Terms are added in increasing `k` with compensated summation. The sum
/// stops once the accumulated weight is within `tail_tolerance` of one and
/// the modeled tail contribution (see [`SeriesEval::tail_error_estimate`])
/// is at most `tail_tolerance · max(1, |value|)`, or after `max_terms`
/// terms. Running out of terms is not an error: the result comes back with
/// `converged == false`.
pub fn eval_series<F: RealFn + ?Sized>(
    f: &F,
    n: u32,
    r: f64,
    pq: PQParams,
    policy: &TruncationPolicy,
) -> Result<SeriesEval> {
    check_order(n)?;
    check_base(r)?;
    if r == 0.0 {
        return Ok(SeriesEval {
            value: eval_finite(f, 0.0)?,
            terms_used: 1,
            accumulated_weight: 1.0,
            tail_error_estimate: 0.0,
            converged: true,
        });
    }

    let m = policy.growth_exponent as i32;
    let tol = policy.tail_tolerance;
    let mut weight_sum = CompensatedSum::new();
    let mut value = CompensatedSum::new();
    let mut growth_const = 0.0_f64;
    let terms = BasisTerms::new(n, r, pq)?;
    let nodes = terms.nodes;
    let mut terms_used = 0;
    let mut converged = false;

    let tail_estimate = |missing_mass: f64, growth_const: f64, next_node: f64| {
        missing_mass.max(0.0) * growth_const * (1.0 + next_node.powi(m))
    };

    for term in terms.take(policy.max_terms) {
        // past the mode the weights only shrink; once they underflow nothing
        // representable is left to add
        if term.weight == 0.0 && weight_sum.value() > 0.5 {
            converged = 1.0 - weight_sum.value() <= tol;
            break;
        }
        let fv = eval_finite(f, term.node)?;
        weight_sum.add(term.weight);
        value.add(term.weight * fv);
        growth_const = growth_const.max(fv.abs() / (1.0 + term.node.powi(m)));
        terms_used += 1;

        let missing = 1.0 - weight_sum.value();
        if missing <= tol
            && tail_estimate(missing, growth_const, nodes.node(terms_used)) <= tol * value.value().abs().max(1.0)
        {
            converged = true;
            break;
        }
    }

    let accumulated_weight = weight_sum.value();
    let tail_error_estimate = tail_estimate(1.0 - accumulated_weight, growth_const, nodes.node(terms_used));
    Ok(SeriesEval {
        value: value.value(),
        terms_used,
        accumulated_weight,
        tail_error_estimate,
        converged,
    })
}

/// Closed-form moments `B(t^i; x)` for `i = 0, 1, 2`:
/// `1`, `x`, and `x^2 + p^(n-1) x / [n] · (1 + (p/q) x)`.
pub fn moment_closed(i: u32, n: u32, x: f64, pq: PQParams) -> Result<f64> {
    check_order(n)?;
    check_base(x)?;
    match i {
        0 => Ok(1.0),
        1 => Ok(x),
        2 => {
            let (p, q) = (pq.p(), pq.q());
            Ok(x * x + p.powi(n as i32 - 1) * x / pq_integer(n, pq) * (1.0 + p / q * x))
        }
        _ => Err(Error::domain(format!(
            "closed-form moments exist for i <= 2, got i={i}"
        ))),
    }
}

pub(crate) fn check_order(n: u32) -> Result<()> {
    if n == 0 {
        Err(Error::domain("operator order n must be at least 1"))
    } else {
        Ok(())
    }
}

pub(crate) fn check_base(x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "operator argument must be finite and >= 0, got {x}"
        )))
    }
}
