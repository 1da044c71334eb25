//! Numerical kernel for the logarithmic integrals and the Riemann zeta
//! function.
//!
//! Two companion functions are implemented as entire series of log x:
//!
//! * upper (Riemann-prime level):  `Li(x^z) = sum_n (z log x)^n / (n n!)`
//! * lower (prime level):          `li(x^z) = sum_n (z log x)^n / (n n! zeta(n+1))`
//!
//! The lower function is the Möbius-inverted companion of the upper one,
//! `li(x^z) = sum_k mu(k)/k Li(x^{z/k})`, and the upper one sums back as
//! `Li(x^z) = sum_k li(x^{z/k})/k`. Both identities are exercised by tests
//! through truncated sums with analytic tail corrections.
//!
//! The Mellin–Stieltjes transform of `dLi(x^z)` is `log(s/(s-z))` on
//! `Re s > max(0, Re z)` with the branch fixed by the limit along the
//! positive real line.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::util::mobius;
use crate::Complex;

/// Truncation control for the entire series of the logarithmic integrals.
#[derive(Debug, Clone, Copy)]
pub struct SeriesBudget {
    /// Relative tolerance on the last term against the partial sum.
    pub rel_tol: f64,
    /// Hard cap on the number of series terms.
    pub max_terms: usize,
}

impl Default for SeriesBudget {
    fn default() -> Self {
        Self { rel_tol: 1e-14, max_terms: 1024 }
    }
}

impl SeriesBudget {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidInput(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        if self.max_terms < 64 {
            return Err(Error::InvalidInput(format!(
                "max_terms must be at least 64, got {}",
                self.max_terms
            )));
        }
        Ok(())
    }
}

/// `sum_{n>=1} u^n / (n * n!)`, entire in `u`.
///
/// Terms peak near `n ~ |u|`; `min_terms` forces the loop past the peak
/// before the relative-tolerance stop is allowed to fire.
pub(crate) fn li_series(u: Complex, min_terms: usize, budget: &SeriesBudget) -> Result<Complex> {
    if u.norm_sqr() == 0.0 {
        return Ok(Complex::new(0.0, 0.0));
    }
    let mut pow = Complex::new(1.0, 0.0); // u^n / n!
    let mut sum = Complex::new(0.0, 0.0);
    for n in 1..=budget.max_terms {
        pow *= u / n as f64;
        let term = pow / n as f64;
        sum += term;
        if n >= min_terms && term.norm() < budget.rel_tol * sum.norm() {
            return Ok(sum);
        }
    }
    Err(Error::Convergence {
        what: "logarithmic integral series",
        terms: budget.max_terms,
        residual: (pow / budget.max_terms as f64).norm() / sum.norm().max(f64::MIN_POSITIVE),
    })
}

fn min_terms_for(x: f64, z: Complex) -> usize {
    (2.0 * z.norm().max(1.0) * x.ln()).ceil() as usize + 1
}

// The direct series has terms peaking at e^{|u|} while the value is only
// ~e^{max(Re u, 0)}; the difference measures the cancellation (in natural
// log units). At loss 12 the absolute rounding error is e^12 * eps ~ 2e-11,
// the most the derivative-level tolerances can absorb, so past it
// evaluation switches to a cancellation-free route (quadrature for Li, the
// Möbius form for li).
fn series_is_stable(u: Complex) -> bool {
    u.norm() - u.re.max(0.0) <= 12.0 && u.norm() <= 600.0
}

/// `Li(x^z)`: the upper logarithmic integral, `int_1^x (u^{z-1}-u^{-1})/log u du`
/// summed as an entire series of `z log x`.
pub fn li_upper(x: f64, z: Complex, budget: &SeriesBudget) -> Result<Complex> {
    if !(x >= 1.0) {
        return Err(Error::OutOfRange(format!("li_upper requires x >= 1, got {x}")));
    }
    let u = z * x.ln();
    if series_is_stable(u) {
        li_series(u, min_terms_for(x, z), budget)
    } else {
        // Li(x^z) = int_0^{log x} (e^{z v} - 1)/v dv, free of cancellation.
        Ok(-ein_finite(-z, x.ln()))
    }
}

/// `li(x^z)`: the lower (Möbius-inverted) logarithmic integral,
/// `sum_n (z log x)^n / (n n! zeta(n+1))`.
pub fn li_lower(x: f64, z: Complex, budget: &SeriesBudget) -> Result<Complex> {
    if !(x >= 1.0) {
        return Err(Error::OutOfRange(format!("li_lower requires x >= 1, got {x}")));
    }
    let u = z * x.ln();
    if u.norm_sqr() == 0.0 {
        return Ok(Complex::new(0.0, 0.0));
    }
    if series_is_stable(u) {
        let zeta = ZetaOracle::shared();
        let min_terms = min_terms_for(x, z);
        let mut pow = Complex::new(1.0, 0.0);
        let mut sum = Complex::new(0.0, 0.0);
        for n in 1..=budget.max_terms {
            pow *= u / n as f64;
            let term = pow / (n as f64 * zeta.int_value(n + 1));
            sum += term;
            if n >= min_terms && term.norm() < budget.rel_tol * sum.norm() {
                return Ok(sum);
            }
        }
        return Err(Error::Convergence {
            what: "lower logarithmic integral series",
            terms: budget.max_terms,
            residual: pow.norm() / sum.norm().max(f64::MIN_POSITIVE),
        });
    }
    // Möbius route: li(x^z) = sum_k mu(k)/k Li(x^{z/k}), truncated at K with
    // the remainder regrouped per series order.
    let k_cut = (2.0 * u.norm()).ceil().max(64.0) as usize;
    let mut sum = Complex::new(0.0, 0.0);
    for k in 1..=k_cut {
        let mu = mobius(k as u64);
        if mu != 0 {
            sum += li_upper(x, z / k as f64, budget)? * (mu as f64 / k as f64);
        }
    }
    let mut pow = Complex::new(1.0, 0.0);
    for n in 1..=budget.max_terms {
        pow *= u / n as f64;
        let term = pow / n as f64 * mobius_tail_factor(n + 1, k_cut);
        sum += term;
        if (pow.norm() / n as f64) * (1.0 / k_cut as f64).powi(n as i32)
            < budget.rel_tol * sum.norm()
            && n as f64 > u.norm() / k_cut as f64
        {
            break;
        }
    }
    Ok(sum)
}

/// `d/dx li(x^z)`, obtained by termwise differentiation:
/// `x log x d/dx li(x^z) = sum_n (z log x)^n / (n! zeta(n+1))
///                       = sum_k mu(k)/k (x^{z/k} - 1)`.
/// For real `z = delta` in (0,1) the value exceeds `delta / (2x)` for every
/// `x > 1`.
pub fn li_lower_deriv(x: f64, z: Complex, budget: &SeriesBudget) -> Result<Complex> {
    if !(x > 1.0) {
        return Err(Error::Singular(format!(
            "derivative of li(x^z) evaluated at the singular point x = {x}; requires x > 1"
        )));
    }
    let u = z * x.ln();
    if u.norm_sqr() == 0.0 {
        return Ok(Complex::new(0.0, 0.0));
    }
    let scale = x * x.ln();
    if series_is_stable(u) {
        let zeta = ZetaOracle::shared();
        let min_terms = min_terms_for(x, z);
        let mut pow = Complex::new(1.0, 0.0);
        let mut sum = Complex::new(0.0, 0.0);
        for n in 1..=budget.max_terms {
            pow *= u / n as f64;
            let term = pow / zeta.int_value(n + 1);
            sum += term;
            if n >= min_terms && term.norm() < budget.rel_tol * sum.norm() {
                return Ok(sum / scale);
            }
        }
        return Err(Error::Convergence {
            what: "lower logarithmic integral derivative series",
            terms: budget.max_terms,
            residual: pow.norm() / sum.norm().max(f64::MIN_POSITIVE),
        });
    }
    // Möbius route, cancellation-free: each x^{z/k} is an exponential of the
    // argument, never a difference of large terms.
    let k_cut = (2.0 * u.norm()).ceil().max(64.0) as usize;
    let mut sum = Complex::new(0.0, 0.0);
    for k in 1..=k_cut {
        let mu = mobius(k as u64);
        if mu != 0 {
            sum += ((u / k as f64).exp() - 1.0) * (mu as f64 / k as f64);
        }
    }
    let mut pow = Complex::new(1.0, 0.0);
    for n in 1..=budget.max_terms {
        pow *= u / n as f64;
        sum += pow * mobius_tail_factor(n + 1, k_cut);
        if pow.norm() * (1.0 / k_cut as f64).powi(n as i32) < budget.rel_tol * sum.norm()
            && n as f64 > u.norm() / k_cut as f64
        {
            break;
        }
    }
    Ok(sum / scale)
}

/// `sum_{k > K} mu(k) k^{-m}`. For small m this is `1/zeta(m) - M_K(m)`
/// with a compensated partial sum; for large m the tail converges fast
/// enough to sum directly, which avoids the 1e-16-level subtraction error
/// that the high-order terms of the Möbius remainder cannot absorb.
fn mobius_tail_factor(m: usize, k_cut: usize) -> f64 {
    if m >= 10 {
        let mut s = 0.0f64;
        let mut k = k_cut + 1;
        loop {
            let t = (k as f64).powi(-(m as i32));
            if t < 1e-24 {
                return s;
            }
            s += mobius(k as u64) as f64 * t;
            k += 1;
        }
    }
    let mut partial = crate::util::Kahan::new();
    for k in 1..=k_cut {
        partial.add(mobius(k as u64) as f64 * (k as f64).powi(-(m as i32)));
    }
    1.0 / ZetaOracle::shared().int_value(m) - partial.value()
}

/// Mellin–Stieltjes transform of `dLi(x^z)`: `log(s/(s-z))`, principal
/// branch, valid on `Re s > max(0, Re z)`.
pub fn mellin_dli(s: Complex, z: Complex) -> Result<Complex> {
    if s.re <= 0.0 || s.re <= z.re {
        return Err(Error::OutOfRange(format!(
            "mellin_dli requires Re s > max(0, Re z); got s = {s}, z = {z}"
        )));
    }
    let d = s - z;
    if d.norm() == 0.0 {
        return Err(Error::Singular(format!("mellin_dli pole at s = z = {s}")));
    }
    Ok((s / d).ln())
}

/// `int_0^V (1 - e^{-w v}) / v dv`, entire in `w`. This is the Mellin
/// transform of `dLi` truncated to `[1, e^V]` via
/// `int_1^X x^{-s} dLi(x^z) = ein_finite(s, log X) - ein_finite(s - z, log X)`.
pub(crate) fn ein_finite(w: Complex, v_max: f64) -> Complex {
    if v_max == 0.0 || w.norm_sqr() == 0.0 {
        return Complex::new(0.0, 0.0);
    }
    let u = w * v_max;
    // The series argument is -u; its cancellation criterion governs.
    if series_is_stable(-u) && u.norm() <= 600.0 {
        let budget = SeriesBudget { rel_tol: 1e-15, max_terms: 2048 };
        let min_terms = (2.0 * u.norm()).ceil() as usize + 8;
        return -li_series(-u, min_terms, &budget).expect("stable ein series must converge");
    }
    let f = |v: f64| {
        let wv = w * v;
        if wv.norm() < 1e-8 {
            // (1 - e^{-wv})/v = w (1 - wv/2 + ...)
            w * (Complex::new(1.0, 0.0) - wv * 0.5)
        } else {
            (Complex::new(1.0, 0.0) - (-wv).exp()) / v
        }
    };
    crate::quad::integrate(&f, 0.0, v_max, 1e-12)
}

const ZETA_INT_CACHE_MAX: usize = 256;

/// Riemann zeta evaluator: cached integer values and analytic continuation
/// to `Re s > 0, s != 1` through the alternating eta series
/// `zeta(s) = (1 - 2^{1-s})^{-1} sum (-1)^{n-1} n^{-s}` with iterated
/// averaging of the partial sums (van Wijngaarden acceleration).
#[derive(Debug)]
pub struct ZetaOracle {
    int_cache: Vec<f64>,
}

impl ZetaOracle {
    pub fn new() -> Self {
        let mut int_cache = vec![f64::NAN; ZETA_INT_CACHE_MAX + 1];
        for (k, slot) in int_cache.iter_mut().enumerate().skip(2) {
            *slot = if k <= 40 {
                eta_accelerated(Complex::new(k as f64, 0.0)).re
                    / (1.0 - (2.0f64).powf(1.0 - k as f64))
            } else {
                // Direct Dirichlet sum; converges in a handful of terms.
                let mut s = 1.0;
                let mut j = 2.0f64;
                loop {
                    let t = j.powf(-(k as f64));
                    s += t;
                    if t < 1e-18 {
                        break s;
                    }
                    j += 1.0;
                }
            };
        }
        ZetaOracle { int_cache }
    }

    /// Shared immutable instance; initialized once, safe to use from any
    /// thread afterwards.
    pub fn shared() -> &'static ZetaOracle {
        static INSTANCE: OnceLock<ZetaOracle> = OnceLock::new();
        INSTANCE.get_or_init(ZetaOracle::new)
    }

    /// `zeta(k)` for integer `k >= 2`. Beyond the cache the value is 1 to
    /// within f64 resolution.
    pub fn int_value(&self, k: usize) -> f64 {
        assert!(k >= 2, "zeta integer cache starts at k = 2");
        if k <= ZETA_INT_CACHE_MAX {
            self.int_cache[k]
        } else {
            1.0
        }
    }

    /// Analytic continuation for complex `s` with `Re s > 0`, `s != 1`.
    pub fn eval(&self, s: Complex) -> Result<Complex> {
        if !(s.re > 0.0) {
            return Err(Error::OutOfRange(format!(
                "zeta evaluator restricted to Re s > 0, got {s}"
            )));
        }
        if (s - Complex::new(1.0, 0.0)).norm() < 1e-12 {
            return Err(Error::Singular("zeta pole at s = 1".into()));
        }
        let factor = Complex::new(1.0, 0.0) - ((Complex::new(1.0, 0.0) - s) * 2.0f64.ln()).exp();
        if factor.norm() < 1e-8 {
            return Err(Error::Singular(format!(
                "eta-series prefactor vanishes near s = {s} (s = 1 + 2 pi i k / log 2)"
            )));
        }
        Ok(eta_accelerated(s) / factor)
    }

    /// Real-argument convenience wrapper for `s` in `(0,1) U (1,oo)`.
    pub fn eval_real(&self, s: f64) -> Result<f64> {
        Ok(self.eval(Complex::new(s, 0.0))?.re)
    }
}

impl Default for ZetaOracle {
    fn default() -> Self {
        Self::new()
    }
}

/// Riemann zeta at complex `s`, `Re s > 0`, `s != 1`.
pub fn zeta_eval(s: Complex) -> Result<Complex> {
    ZetaOracle::shared().eval(s)
}

/// `eta(s) = sum (-1)^{n-1} n^{-s}` by direct summation of an initial
/// segment followed by iterated averaging of consecutive partial sums.
fn eta_accelerated(s: Complex) -> Complex {
    const LEVELS: usize = 64;
    let n0 = 32 + (1.5 * s.im.abs()).ceil() as usize;
    let term = |n: usize| {
        let v = (-s * (n as f64).ln()).exp();
        if n % 2 == 1 {
            v
        } else {
            -v
        }
    };
    let mut partial = Complex::new(0.0, 0.0);
    for n in 1..n0 {
        partial += term(n);
    }
    // Partial sums S_{n0-1+i} for i = 1..=LEVELS+1.
    let mut rows: Vec<Complex> = Vec::with_capacity(LEVELS + 1);
    for n in n0..n0 + LEVELS + 1 {
        partial += term(n);
        rows.push(partial);
    }
    for len in (1..=LEVELS).rev() {
        for i in 0..len {
            rows[i] = (rows[i] + rows[i + 1]) * 0.5;
        }
    }
    rows[0]
}

/// Truncated Dirichlet-inversion tail: `sum_{k > K} li(x^{1/k})/k` regrouped
/// per series order, used by tests to close the Möbius-sum identities.
pub fn li_lower_tail_over_k(x: f64, k_cut: usize, budget: &SeriesBudget) -> Result<f64> {
    let zeta = ZetaOracle::shared();
    let ell = x.ln();
    let mut sum = 0.0f64;
    let mut pow = 1.0f64; // ell^n / n!
    for n in 1..=budget.max_terms {
        pow *= ell / n as f64;
        let h: f64 = (1..=k_cut).map(|k| (k as f64).powi(-(n as i32 + 1))).sum();
        let term = pow / n as f64 * (1.0 - h / zeta.int_value(n + 1));
        sum += term;
        if n as f64 > 2.0 * ell && term.abs() < budget.rel_tol * sum.abs().max(1e-300) {
            return Ok(sum);
        }
    }
    Err(Error::Convergence { what: "inversion tail", terms: budget.max_terms, residual: pow })
}

/// Truncated Möbius-sum tail: `sum_{k > K} mu(k)/k Li(x^{1/k})` regrouped
/// per series order.
pub fn li_upper_mobius_tail_over_k(x: f64, k_cut: usize, budget: &SeriesBudget) -> Result<f64> {
    let zeta = ZetaOracle::shared();
    let ell = x.ln();
    let mut sum = 0.0f64;
    let mut pow = 1.0f64;
    for n in 1..=budget.max_terms {
        pow *= ell / n as f64;
        let m: f64 = (1..=k_cut)
            .map(|k| mobius(k as u64) as f64 * (k as f64).powi(-(n as i32 + 1)))
            .sum();
        let term = pow / n as f64 * (1.0 / zeta.int_value(n + 1) - m);
        sum += term;
        if n as f64 > 2.0 * ell && term.abs() < budget.rel_tol * sum.abs().max(1e-300) {
            return Ok(sum);
        }
    }
    Err(Error::Convergence { what: "mobius tail", terms: budget.max_terms, residual: pow })
}
