//! Measurement and verification layer: residual-exponent fits, Euler
//! products and Dirichlet–Stieltjes sums with explicit truncation bounds,
//! the rational zeta-side factor of the prescription family, oscillatory
//! zeta growth, and the constants of the hyperbola convolution.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::logint::ein_finite;
use crate::sampler::GenPrimes;
use crate::semigroup::StepTable;
use crate::templates::{OscBlock, OscillatorySpec, PrescriptionSpec};
use crate::util::{Kahan, KahanComplex};
use crate::Complex;

/// Least-squares fit of the growth exponent of a residual's running
/// maximum. The limsup of `log |residual| / log x` is operationalized as
/// the slope of the running maximum over the top of the log range, which
/// is robust to the oscillation troughs.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualFit {
    pub exponent: f64,
    pub stderr: f64,
    /// Fitting window (x_lo, x_hi); spans at least two decades.
    pub window: (f64, f64),
    pub n_points: usize,
    /// (x, running max) samples on the fitting grid.
    #[serde(skip)]
    pub samples: Vec<(f64, f64)>,
}

/// Fit the residual exponent of `table` against `model`.
///
/// Residuals are taken on both sides of every jump (counting functions
/// deviate most just before a jump). The running maximum is resampled on a
/// 256-point log grid over the fitting window — the top half of the log
/// range, widened to at least two decades — and the slope is fit by
/// ordinary least squares. An identically zero residual yields the
/// negative-infinity sentinel.
pub fn residual_exponent(
    table: &StepTable,
    model: impl Fn(f64) -> f64,
) -> Result<ResidualFit> {
    let events = table.events();
    if events.is_empty() {
        return Err(Error::InvalidInput("empty table".into()));
    }
    let x_first = events[0].0.max(1.0);
    let x_last = events[events.len() - 1].0;
    if x_last / x_first < 1e3 {
        return Err(Error::InvalidInput(format!(
            "table spans less than 3 decades ({x_first} to {x_last})"
        )));
    }
    // Running max of |table - model| at both sides of each jump.
    let mut running: Vec<(f64, f64)> = Vec::with_capacity(events.len());
    let mut max_so_far = 0.0f64;
    let mut prev_cum = 0.0f64;
    for &(x, cum) in events {
        let m = model(x);
        let r = (cum - m).abs().max((prev_cum - m).abs());
        max_so_far = max_so_far.max(r);
        running.push((x, max_so_far));
        prev_cum = cum;
    }
    let window_lo = (x_first * x_last).sqrt().min(x_last / 100.0).max(x_first);
    let window = (window_lo, x_last);
    // Resample on a log grid and fit.
    let n_grid = 256usize;
    let (la, lb) = (window.0.ln(), window.1.ln());
    let mut xs = Vec::with_capacity(n_grid);
    let mut ys = Vec::with_capacity(n_grid);
    let mut samples = Vec::with_capacity(n_grid);
    for i in 0..n_grid {
        let lx = la + (lb - la) * i as f64 / (n_grid - 1) as f64;
        let x = lx.exp();
        let idx = running.partition_point(|&(e, _)| e <= x);
        if idx == 0 {
            continue;
        }
        let m = running[idx - 1].1;
        samples.push((x, m));
        if m > 0.0 {
            xs.push(lx);
            ys.push(m.ln());
        }
    }
    if xs.len() < 2 {
        return Ok(ResidualFit {
            exponent: f64::NEG_INFINITY,
            stderr: 0.0,
            window,
            n_points: xs.len(),
            samples,
        });
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|&x| (x - mean_x) * (x - mean_x)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(&x, &y)| (x - mean_x) * (y - mean_y)).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| {
            let fit = mean_y + slope * (x - mean_x);
            (y - fit) * (y - fit)
        })
        .sum();
    let stderr = if xs.len() > 2 { (ss_res / ((n - 2.0) * sxx)).sqrt() } else { 0.0 };
    Ok(ResidualFit { exponent: slope, stderr, window, n_points: xs.len(), samples })
}

/// Tail model past the truncation point of a counting function.
#[derive(Debug, Clone, Copy)]
pub enum TailModel {
    /// Finite system: nothing beyond the data.
    None,
    /// Prime counting bounded by `c x^growth / log x` beyond the data.
    Chebyshev { c: f64, growth: f64 },
    /// Cumulative bounded by `a x^growth` beyond the data.
    PowerLaw { a: f64, growth: f64 },
}

impl TailModel {
    /// Chebyshev constant fitted from the data itself:
    /// `c = max pi(p) log p / p^growth`.
    pub fn fit_chebyshev(primes: &GenPrimes, growth: f64) -> TailModel {
        let mut c = 0.0f64;
        for (i, &p) in primes.values().iter().enumerate() {
            c = c.max((i as f64 + 1.0) * p.ln() / p.powf(growth));
        }
        TailModel::Chebyshev { c, growth }
    }
}

/// A Mellin–Stieltjes value with a proven bound for the reported
/// truncation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MellinValue {
    pub s: Complex,
    pub value: Complex,
    pub truncation_bound: f64,
}

/// `log zeta(s) = sum_j log(1/(1 - p_j^{-s}))` over the system's primes up
/// to `x`, with the tail beyond `x` bounded through the tail model.
pub fn euler_log_zeta(
    primes: &GenPrimes,
    s: Complex,
    x: f64,
    tail: TailModel,
) -> Result<MellinValue> {
    let truncation_bound = match tail {
        TailModel::None => 0.0,
        TailModel::Chebyshev { c, growth } => {
            if s.re <= growth {
                return Err(Error::OutOfRange(format!(
                    "Re s = {} at or below the tail abscissa {growth}",
                    s.re
                )));
            }
            // |int_x^inf u^{-s} dPi| <= sigma c x^{growth-sigma} /
            // ((sigma-growth) log x), widened 1.5x for the k >= 2 powers.
            1.5 * s.re * c * x.powf(growth - s.re) / ((s.re - growth) * x.ln())
        }
        TailModel::PowerLaw { .. } => {
            return Err(Error::InvalidInput(
                "prime sums take a Chebyshev-type tail model".into(),
            ))
        }
    };
    let mut acc = KahanComplex::new();
    for &p in primes.values().iter().take_while(|&&p| p <= x) {
        let pw = (-s * p.ln()).exp();
        acc.add(-(Complex::new(1.0, 0.0) - pw).ln());
    }
    Ok(MellinValue { s, value: acc.value(), truncation_bound })
}

/// `sum_j sum_{k: p_j^k <= x} p_j^{-ks} / k`: the Euler sum truncated at
/// prime powers `<= x`, i.e. the Mellin transform of the Riemann prime
/// counting function restricted to `[1, x]`.
pub fn euler_power_sum(primes: &GenPrimes, s: Complex, x: f64) -> Complex {
    let mut acc = KahanComplex::new();
    for &p in primes.values().iter().take_while(|&&p| p <= x) {
        let log_p = p.ln();
        let k_max = (x.ln() / log_p).floor().max(1.0) as u32;
        for k in 1..=k_max {
            acc.add((-s * (k as f64 * log_p)).exp() / k as f64);
        }
    }
    acc.value()
}

/// Dirichlet–Stieltjes sum `int_{1-}^{x} u^{-s} dN(u)` over a step table,
/// with the tail beyond the table bounded through the tail model.
pub fn dirichlet_sum(table: &StepTable, s: Complex, tail: TailModel) -> Result<MellinValue> {
    let truncation_bound = match tail {
        TailModel::None => 0.0,
        TailModel::PowerLaw { a, growth } => {
            if s.re <= growth {
                return Err(Error::OutOfRange(format!(
                    "Re s = {} at or below the tail growth {growth}",
                    s.re
                )));
            }
            let x = table.x_max().unwrap_or(1.0);
            s.re * a * x.powf(growth - s.re) / (s.re - growth)
        }
        TailModel::Chebyshev { .. } => {
            return Err(Error::InvalidInput(
                "integer sums take a power-law tail model".into(),
            ))
        }
    };
    let mut acc = KahanComplex::new();
    for (u, w) in table.jumps() {
        acc.add((-s * u.ln()).exp() * w);
    }
    Ok(MellinValue { s, value: acc.value(), truncation_bound })
}

/// The rational factor
/// `E(s) = s/(s-1) prod_S (s/(s-w))^m prod_R ((s-r)/s)^m (s/(s-d))^M`
/// of the prescription family's zeta function. Zeros exactly at the
/// prescribed zero multiset, poles at the poles, 1, and delta.
pub fn e_factor(spec: &PrescriptionSpec, m: u32, s: Complex) -> Result<Complex> {
    let pole_guard = |d: Complex| -> Result<Complex> {
        if d.norm() == 0.0 {
            Err(Error::Singular(format!("E(s) evaluated at a pole, s = {s}")))
        } else {
            Ok(d)
        }
    };
    let mut value = s / pole_guard(s - 1.0)?;
    for (w, mult) in spec.poles.entries() {
        let f = s / pole_guard(s - w)?;
        value *= f.powi(mult as i32);
    }
    for (r, mult) in spec.zeros.entries() {
        let f = (s - r) / s;
        value *= f.powi(mult as i32);
    }
    if m > 0 {
        let f = s / pole_guard(s - spec.delta)?;
        value *= f.powi(m as i32);
    }
    Ok(value)
}

/// `int_1^X x^{-s} dG(x)` for the prescription family: the Mellin
/// transform of the template derivative truncated at X, term by term
/// through the entire function `ein`.
pub fn mellin_dg_truncated(spec: &PrescriptionSpec, m: u32, s: Complex, x: f64) -> Complex {
    let v = x.ln();
    let mut total = Complex::new(0.0, 0.0);
    let mut add_term = |z: Complex, coeff: f64| {
        total += (ein_finite(s, v) - ein_finite(s - z, v)) * coeff;
    };
    add_term(Complex::new(1.0, 0.0), 1.0);
    for (w, mult) in spec.poles.entries() {
        add_term(w, mult as f64);
    }
    for (r, mult) in spec.zeros.entries() {
        add_term(r, -(mult as f64));
    }
    if m > 0 {
        add_term(Complex::new(spec.delta, 0.0), m as f64);
    }
    total
}

/// One point of the zeta-deviation sweep.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ZPoint {
    pub s: Complex,
    pub z: Complex,
    /// `|Z(s)|` against `sigma/(sigma-1/2) + sigma sqrt(log(|t|+1)/(sigma-1/2))`.
    pub bound_ratio: f64,
}

/// `Z(s) = M{d Pi_P - dG; s}` on `[1, X]`: the Euler power sum of the
/// sampled primes minus the template transform, both truncated at X so the
/// bounded difference is what remains. Requires `Re s > 1/2 + margin`.
pub fn z_deviation(
    primes: &GenPrimes,
    spec: &PrescriptionSpec,
    m: u32,
    s_grid: &[Complex],
    x: f64,
    margin: f64,
) -> Result<Vec<ZPoint>> {
    for &s in s_grid {
        if s.re <= 0.5 + margin {
            return Err(Error::OutOfRange(format!(
                "Z deviation needs Re s > 1/2 + {margin}, got {s}"
            )));
        }
    }
    Ok(s_grid
        .par_iter()
        .map(|&s| {
            let z = euler_power_sum(primes, s, x) - mellin_dg_truncated(spec, m, s, x);
            let sigma = s.re;
            let t = s.im;
            let rhs = sigma / (sigma - 0.5)
                + sigma * ((t.abs() + 1.0).ln() / (sigma - 0.5)).sqrt();
            ZPoint { s, z, bound_ratio: z.norm() / rhs }
        })
        .collect())
}

/// `eta_l(s) = int x^{-s} dR_l(x)` in closed form:
/// `tau/2 (A^{b-1-s} - B^{b-1-s}) (1/(s+1-b-i tau) + 1/(s+1-b+i tau))`.
pub fn eta_l(block: &OscBlock, beta: f64, s: Complex) -> Result<Complex> {
    if s.re <= beta - 1.0 {
        return Err(Error::OutOfRange(format!(
            "eta_l requires Re s > beta - 1 = {}, got {s}",
            beta - 1.0
        )));
    }
    let tau = block.tau;
    let d1 = s + (1.0 - beta) - Complex::new(0.0, tau);
    let d2 = s + (1.0 - beta) + Complex::new(0.0, tau);
    if d1.norm() == 0.0 || d2.norm() == 0.0 {
        return Err(Error::Singular(format!("eta_l pole at s = {s}")));
    }
    let e = Complex::new(beta - 1.0, 0.0) - s;
    let a_pow = (e * block.log_a).exp();
    let b_pow = (e * block.log_b).exp();
    Ok((a_pow - b_pow) * (tau / 2.0) * (1.0 / d1 + 1.0 / d2))
}

/// Growth measurement of the oscillatory zeta at `s = sigma + i tau_{l0}`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GrowthReport {
    pub sigma: f64,
    pub tau: f64,
    /// `log |zeta_C(sigma + i tau_{l0})|` from the closed-form factorization.
    pub log_zeta_abs: f64,
    /// Predicted exponent `tau^{(1+d)(b-sigma)-d} / (2(1+sigma-b))`.
    pub predicted: f64,
    pub ratio: f64,
}

/// Evaluate `log|zeta_C|` at the resonance ordinate of block `l0`
/// (1-based) and compare with the predicted block contribution.
pub fn zeta_c_growth(spec: &OscillatorySpec, sigma: f64, l0: usize) -> Result<GrowthReport> {
    let blocks = spec.blocks()?;
    if l0 == 0 || l0 > blocks.len() {
        return Err(Error::OutOfRange(format!(
            "block index {l0} outside 1..={}",
            blocks.len()
        )));
    }
    if !(sigma > 0.0 && sigma < spec.beta) {
        return Err(Error::OutOfRange(format!(
            "sigma must lie in (0, beta) = (0, {}), got {sigma}",
            spec.beta
        )));
    }
    let block = blocks[l0 - 1];
    let s = Complex::new(sigma, block.tau);
    let mut eta_sum = Complex::new(0.0, 0.0);
    for bl in &blocks {
        eta_sum += eta_l(bl, spec.beta, s)?;
    }
    let rational = ((s - spec.alpha) / (s - 1.0)).norm().ln();
    let log_zeta_abs = rational + eta_sum.re;
    let d = block.delta_adj;
    let exponent = (1.0 + d) * (spec.beta - sigma) - d;
    let predicted = block.tau.powf(exponent) / (2.0 * (1.0 + sigma - spec.beta));
    Ok(GrowthReport { sigma, tau: block.tau, log_zeta_abs, predicted, ratio: log_zeta_abs / predicted })
}

/// Richardson-extrapolated limit
/// `I(beta) = lim_R (sum_{n <= R} n^{-beta} - a R^{1-beta}/(1-beta))`,
/// the value at beta of the meromorphic extension of the table's Dirichlet
/// series.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IBetaEstimate {
    pub value: f64,
    pub error_estimate: f64,
}

pub fn i_beta(table: &StepTable, a: f64, beta: f64) -> Result<IBetaEstimate> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::OutOfRange(format!("beta must be in (0,1), got {beta}")));
    }
    let Some(x_max) = table.x_max() else {
        return Err(Error::InvalidInput("empty table".into()));
    };
    let r = x_max / 4.0;
    if r < 16.0 {
        return Err(Error::InvalidInput("table too short for extrapolation".into()));
    }
    // Partial sums at R, 2R, 4R in one pass.
    let mut partial = [Kahan::new(), Kahan::new(), Kahan::new()];
    for (u, w) in table.jumps() {
        let v = w * u.powf(-beta);
        if u <= r {
            partial[0].add(v);
        }
        if u <= 2.0 * r {
            partial[1].add(v);
        }
        partial[2].add(v);
    }
    let t = |i: usize, radius: f64| partial[i].value() - a * radius.powf(1.0 - beta) / (1.0 - beta);
    let t0 = t(0, r);
    let t1 = t(1, 2.0 * r);
    let t2 = t(2, 4.0 * r);
    // One Richardson step for the R^{-beta} tail term.
    let w = 2.0f64.powf(beta);
    let i1 = (w * t1 - t0) / (w - 1.0);
    let i2 = (w * t2 - t1) / (w - 1.0);
    let error_estimate = (i2 - i1).abs();
    if error_estimate > 0.5 * i2.abs() + 1e-6 {
        return Err(Error::Convergence {
            what: "I(beta) Richardson extrapolation",
            terms: 3,
            residual: error_estimate,
        });
    }
    Ok(IBetaEstimate { value: i2, error_estimate })
}

/// `H(1) = sum_l h(l)/l` over the weighted table, with the tail past the
/// table bounded from the hypothesis `L(x) <= b x^beta` (pass `None` for a
/// finite list).
pub fn h_one(l_tab: &StepTable, tail: Option<(f64, f64)>) -> Result<MellinValue> {
    let truncation_bound = match tail {
        None => 0.0,
        Some((b, beta)) => {
            if !(beta < 1.0) {
                return Err(Error::OutOfRange(format!(
                    "H(1) tail requires beta < 1, got {beta}"
                )));
            }
            let x = l_tab.x_max().unwrap_or(1.0);
            b * x.powf(beta - 1.0) * (1.0 + 1.0 / (1.0 - beta))
        }
    };
    let mut acc = Kahan::new();
    for (l, h) in l_tab.jumps() {
        acc.add(h / l);
    }
    Ok(MellinValue { s: Complex::new(1.0, 0.0), value: Complex::new(acc.value(), 0.0), truncation_bound })
}
