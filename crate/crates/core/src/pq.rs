//! (p,q)-calculus primitives: integers, factorials, binomial coefficients,
//! the rising power `(1 ⊕ x)^n`, the power expansion coefficients and the
//! (p,q)-difference operator.
//!
//! Everything here is evaluated in double precision. `[n]` is always formed
//! as the positive sum `Σ p^(n-1-j) q^j`, which stays accurate when `q`
//! approaches `p`.

use crate::error::{Error, Result};
use crate::function::{eval_finite, RealFn};

/// The parameter pair `(p, q)` with `0 < q < p <= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PQParams {
    p: f64,
    q: f64,
}

impl PQParams {
    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p.is_finite() && q.is_finite()) {
            return Err(Error::domain(format!("p and q must be finite, got p={p}, q={q}")));
        }
        if !(q > 0.0) {
            return Err(Error::domain(format!("requires q > 0, got q={q}")));
        }
        if !(q < p) {
            return Err(Error::domain(format!("requires q < p, got p={p}, q={q}")));
        }
        if p > 1.0 {
            return Err(Error::domain(format!("requires p <= 1, got p={p}")));
        }
        Ok(Self { p, q })
    }

    #[inline]
    pub fn p(&self) -> f64 {
        self.p
    }

    #[inline]
    pub fn q(&self) -> f64 {
        self.q
    }

    /// `ln(q/p)`, strictly negative.
    #[inline]
    pub(crate) fn ln_ratio(&self) -> f64 {
        self.q.ln() - self.p.ln()
    }
}

/// `[n]_{p,q} = Σ_{j<n} p^(n-1-j) q^j`, evaluated with Horner's rule
/// `[m+1] = p[m] + q^m`.
pub fn pq_integer(n: u32, pq: PQParams) -> f64 {
    let (p, q) = (pq.p, pq.q);
    let mut acc = 0.0;
    let mut q_pow = 1.0;
    for _ in 0..n {
        acc = p * acc + q_pow;
        q_pow *= q;
    }
    acc
}

/// `ln [m]_{p,q}` in closed form, usable for indices where `[m]` itself
/// would underflow (`p < 1`, `m` in the thousands).
///
/// Uses `[m] = p^(m-1) (1 - ρ^m) / (1 - ρ)` with `ρ = q/p`, where both
/// factors of the fraction are formed with `expm1` so nothing cancels.
pub(crate) fn ln_pq_integer(m: u64, pq: PQParams) -> f64 {
    if m == 0 {
        return f64::NEG_INFINITY;
    }
    let lr = pq.ln_ratio();
    let mf = m as f64;
    (mf - 1.0) * pq.p.ln() + ((mf * lr).exp_m1() / lr.exp_m1()).ln()
}

/// `[n]_{p,q}! = [n][n-1]...[1]`, with `[0]! = 1`.
pub fn pq_factorial(n: u32, pq: PQParams) -> f64 {
    (1..=n).map(|m| pq_integer(m, pq)).product()
}

/// Index sum above which [`pq_binomial`] switches to log-space accumulation.
const BINOMIAL_LOG_THRESHOLD: u32 = 150;

/// The (p,q)-binomial coefficient `[n]! / ([k]! [n-k]!)`.
///
/// Built by the ratio recurrence `C(n, j+1) = C(n, j) [n-j] / [j+1]` so no
/// factorial is ever formed. For `n + k > 150` the same recurrence runs on
/// logarithms.
pub fn pq_binomial(n: u32, k: u32, pq: PQParams) -> Result<f64> {
    if k > n {
        return Err(Error::domain(format!("binomial requires k <= n, got n={n}, k={k}")));
    }
    if n + k > BINOMIAL_LOG_THRESHOLD {
        return Ok(ln_pq_binomial(n, k, pq).exp());
    }
    let mut c = 1.0;
    for j in 0..k {
        c = c * pq_integer(n - j, pq) / pq_integer(j + 1, pq);
    }
    Ok(c)
}

/// `ln [n choose k]_{p,q}` for `k <= n`.
pub(crate) fn ln_pq_binomial(n: u32, k: u32, pq: PQParams) -> f64 {
    debug_assert!(k <= n);
    (0..k)
        .map(|j| ln_pq_integer(u64::from(n - j), pq) - ln_pq_integer(u64::from(j) + 1, pq))
        .sum()
}

/// `(1 ⊕ x)^n_{p,q} = Π_{j<n} (p^j + q^j x)`.
pub fn pq_rising_power(x: f64, n: u32, pq: PQParams) -> Result<f64> {
    check_nonnegative(x)?;
    let (mut p_pow, mut q_pow) = (1.0, 1.0);
    let mut prod = 1.0;
    for _ in 0..n {
        prod *= p_pow + q_pow * x;
        p_pow *= pq.p;
        q_pow *= pq.q;
    }
    Ok(prod)
}

/// `ln (1 ⊕ x)^n_{p,q}`, each factor taken as `j ln p + ln(1 + ρ^j x)` so
/// neither `p^j` nor the product can under- or overflow.
pub fn ln_pq_rising_power(x: f64, n: u32, pq: PQParams) -> Result<f64> {
    check_nonnegative(x)?;
    let (ln_p, lr) = (pq.p.ln(), pq.ln_ratio());
    let mut sum = crate::sum::CompensatedSum::new();
    for j in 0..n {
        let jf = f64::from(j);
        sum.add(jf * ln_p + ((jf * lr).exp() * x).ln_1p());
    }
    Ok(sum.value())
}

/// Coefficients `[n choose k]_{p,q}`, `k = 0..=n`, of the expansion form of
/// the (p,q)-power.
///
/// Note that for `p != q` the expansion `Σ C(n,k) x^k` is not the same
/// polynomial as the product form [`pq_rising_power`]; the operators use the
/// product form.
pub fn pq_power_expand(n: u32, pq: PQParams) -> Vec<f64> {
    (0..=n).map(|k| pq_binomial(n, k, pq).expect("k <= n")).collect()
}

/// The (p,q)-derivative `(f(px) - f(qx)) / ((p - q) x)`.
///
/// At `x = 0` the value is defined as `f'(0)`, which is approximated by a
/// central difference with step `1e-6 * max(1, |f(1)|)`; `f` must then be
/// defined on a neighbourhood of the origin.
pub fn pq_derivative<F: RealFn + ?Sized>(f: &F, x: f64, pq: PQParams) -> Result<f64> {
    let eval = |t: f64| eval_finite(f, t);
    if x == 0.0 {
        let h = 1e-6 * eval(1.0)?.abs().max(1.0);
        return Ok((eval(h)? - eval(-h)?) / (2.0 * h));
    }
    let (p, q) = (pq.p, pq.q);
    Ok((eval(p * x)? - eval(q * x)?) / ((p - q) * x))
}

fn check_nonnegative(x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("expected finite x >= 0, got {x}")))
    }
}
