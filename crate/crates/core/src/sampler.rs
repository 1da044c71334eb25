//! Inverse-CDF realization of a template as a discrete generalized prime
//! sequence, with deviation diagnostics.
//!
//! Draw `j = 1 .. ceil(F(X))` with `p_j = F^{-1}(j - 1 + U_j)` for
//! independent uniforms `U_j`; then `F(p_j)` lies in `(j-1, j)`, which pins
//! the counting function to `|pi(x) - F(x)| <= 2` at every point. The
//! uniforms come from a counter-based stream keyed by `(seed, j)`, so the
//! output is a pure function of `(template, X, seed)` regardless of
//! evaluation order or thread count.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng;
use crate::templates::{Support, TemplateFn};
use crate::util::KahanComplex;
use crate::Complex;

/// Origin tag for a generalized prime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Provenance {
    /// Drawn by inverse-CDF sampling from a template.
    Sampled,
    /// A rational prime from the classical sieve.
    Classical,
    /// A scaled copy `p^{1/beta}` of a classical prime.
    Scaled(f64),
    /// Left in place of a removed element (multiset subtraction marker).
    SubtractedMarker,
}

/// Finite non-decreasing multiset of generalized primes (> 1) with
/// provenance tags.
#[derive(Debug, Clone, Serialize)]
pub struct GenPrimes {
    values: Vec<f64>,
    tags: Vec<Provenance>,
    seed: Option<u64>,
}

impl GenPrimes {
    /// Build from parallel value/tag lists; sorts by value (stable with
    /// respect to tags).
    pub fn new(values: Vec<f64>, tags: Vec<Provenance>, seed: Option<u64>) -> Result<Self> {
        if values.len() != tags.len() {
            return Err(Error::InvalidInput("values and tags must have equal length".into()));
        }
        if values.iter().any(|&v| !(v > 1.0) || !v.is_finite()) {
            return Err(Error::InvalidInput("generalized primes must be finite and > 1".into()));
        }
        let mut paired: Vec<(f64, Provenance)> = values.into_iter().zip(tags).collect();
        paired.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let (values, tags) = paired.into_iter().unzip();
        Ok(GenPrimes { values, tags, seed })
    }

    /// Uniformly tagged convenience constructor.
    pub fn with_tag(values: Vec<f64>, tag: Provenance, seed: Option<u64>) -> Result<Self> {
        let tags = vec![tag; values.len()];
        Self::new(values, tags, seed)
    }

    pub fn empty() -> Self {
        GenPrimes { values: Vec::new(), tags: Vec::new(), seed: None }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tags(&self) -> &[Provenance] {
        &self.tags
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Counting function `pi(x)`: number of elements `<= x`.
    pub fn count_leq(&self, x: f64) -> usize {
        self.values.partition_point(|&p| p <= x)
    }
}

/// Draw the generalized primes of `f` below `X`. Identical `(f, X, seed)`
/// give identical output.
pub fn sample_primes(f: &TemplateFn, x: f64, seed: u64) -> Result<GenPrimes> {
    if x > f.x_max() {
        return Err(Error::OutOfRange(format!(
            "sampling bound {x} exceeds template domain cap {}",
            f.x_max()
        )));
    }
    let f_at_x = f.eval(x)?;
    let count = f_at_x.ceil() as u64;
    if count == 0 {
        return Ok(GenPrimes { values: Vec::new(), tags: Vec::new(), seed: Some(seed) });
    }
    let values = (1..=count)
        .into_par_iter()
        .map(|j| {
            let u = j as f64 - 1.0 + rng::uniform(seed, j);
            if u > f_at_x {
                Ok(None) // would land above X; discard
            } else {
                f.inverse(u).map(Some)
            }
        })
        .collect::<Result<Vec<Option<f64>>>>()?;
    let values: Vec<f64> = values.into_iter().flatten().collect();
    debug_assert!(values.windows(2).all(|w| w[0] <= w[1]));
    let tags = vec![Provenance::Sampled; values.len()];
    Ok(GenPrimes { values, tags, seed: Some(seed) })
}

/// Deviation diagnostics for a sampled system: the exponential-sum error
/// `J(x,t) = sum_{p_j <= x} p_j^{-it} - int_1^x u^{-it} dF(u)` over a grid,
/// and the fitted constant against the scale
/// `sqrt(x) (1 + sqrt(log(|t|+1)/log(x+1)))` (with `x^{alpha/2}` replacing
/// `sqrt(x)` for subtractive atomic templates).
#[derive(Debug, Clone, Serialize)]
pub struct DeviationReport {
    pub grid: Vec<f64>,
    pub t_values: Vec<f64>,
    /// `j[i][k] = J(grid[i], t_values[k])`.
    pub j: Vec<Vec<Complex>>,
    pub fitted_c: f64,
}

/// Exponent of the deviation scale: `alpha/2` for subtractive atomic
/// templates (their mass lives on `x^alpha / log x` primes), else `1/2`.
fn deviation_scale_exponent(f: &TemplateFn) -> f64 {
    match f.support() {
        Support::AtomsOnPrimes => {
            // Fitted growth of the atomic cumulative: F(X) ~ X^a / log X.
            let fx = f.value_at_x_max();
            let x = f.x_max();
            ((fx * x.ln()).ln() / x.ln()) / 2.0
        }
        Support::Continuous => 0.5,
    }
}

/// `int_1^x u^{-it} dF(u)` for one template.
fn mellin_partial(f: &TemplateFn, x: f64, t: f64) -> Result<Complex> {
    if let Some(atoms) = f.atoms() {
        let mut acc = KahanComplex::new();
        for a in atoms.iter().take_while(|a| a.location <= x) {
            acc.add(Complex::new(0.0, -t * a.location.ln()).exp() * a.mass);
        }
        return Ok(acc.value());
    }
    if t == 0.0 {
        return Ok(Complex::new(f.eval(x)?, 0.0));
    }
    // v = log u substitution: integrand e^{-i t v} F'(e^v) e^v.
    let g = |v: f64| -> Complex {
        let u = v.exp();
        let d = f.deriv(u).unwrap_or(0.0);
        Complex::new(0.0, -t * v).exp() * (d * u)
    };
    Ok(crate::quad::integrate(&g, (1.0 + 1e-9f64).ln(), x.ln(), 1e-9))
}

/// Compute `J` on `x_grid` x `t_values` for primes sampled from `f`.
pub fn deviation_j(
    primes: &GenPrimes,
    f: &TemplateFn,
    x_grid: &[f64],
    t_values: &[f64],
) -> Result<DeviationReport> {
    if primes.seed().is_none() || !primes.tags().iter().all(|&t| t == Provenance::Sampled) {
        return Err(Error::InvalidInput(
            "deviation report requires primes sampled from the template".into(),
        ));
    }
    let alpha_half = deviation_scale_exponent(f);
    let cells: Vec<(usize, usize)> =
        (0..x_grid.len()).flat_map(|i| (0..t_values.len()).map(move |k| (i, k))).collect();
    let computed: Vec<Complex> = cells
        .par_iter()
        .map(|&(i, k)| -> Result<Complex> {
            let (x, t) = (x_grid[i], t_values[k]);
            if t == 0.0 {
                // Reduces exactly to the counting deviation.
                return Ok(Complex::new(primes.count_leq(x) as f64 - f.eval(x)?, 0.0));
            }
            let mut acc = KahanComplex::new();
            for &p in &primes.values()[..primes.count_leq(x)] {
                acc.add(Complex::new(0.0, -t * p.ln()).exp());
            }
            Ok(acc.value() - mellin_partial(f, x, t)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut j = vec![vec![Complex::new(0.0, 0.0); t_values.len()]; x_grid.len()];
    let mut fitted_c = 0.0f64;
    for (idx, &(i, k)) in cells.iter().enumerate() {
        j[i][k] = computed[idx];
        let (x, t) = (x_grid[i], t_values[k]);
        let scale =
            x.powf(alpha_half) * (1.0 + (((t.abs() + 1.0).ln()) / (x + 1.0).ln()).sqrt());
        fitted_c = fitted_c.max(computed[idx].norm() / scale);
    }
    Ok(DeviationReport { grid: x_grid.to_vec(), t_values: t_values.to_vec(), j, fitted_c })
}

/// One row of the duplicate-prime experiment.
#[derive(Debug, Clone, Serialize)]
pub struct DuplicateRow {
    pub seed: u64,
    /// (x, cumulative duplicate count) at each duplicate event.
    pub events: Vec<(f64, u64)>,
    pub total: u64,
}

/// Sample the transfer-free atomic template and count consecutive draws
/// that collide (`P_j = P_{j+1}`).
pub fn duplicate_experiment(
    f_plain: &TemplateFn,
    x: f64,
    seeds: &[u64],
) -> Result<Vec<DuplicateRow>> {
    if f_plain.atoms().is_none() {
        return Err(Error::InvalidInput("duplicate experiment needs an atomic template".into()));
    }
    seeds
        .iter()
        .map(|&seed| {
            let primes = sample_primes(f_plain, x, seed)?;
            let mut events = Vec::new();
            let mut total = 0u64;
            for w in primes.values().windows(2) {
                if w[0] == w[1] {
                    total += 1;
                    events.push((w[0], total));
                }
            }
            Ok(DuplicateRow { seed, events, total })
        })
        .collect()
}
