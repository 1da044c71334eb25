//! The three families of monotone template prime-counting functions.
//!
//! * Prescription family: `F(x) = li(x) + sum_S li(x^w) - sum_R li(x^r) + M li(x^d)`
//!   places poles (S) and zeros (R) on the zeta function of the realized
//!   system; `M` multiples of `li(x^d)` restore monotonicity. The companion
//!   `G = sum_k F(x^{1/k})/k` is the same combination built from the upper
//!   integral Li.
//! * Oscillatory family: `Pi_C(x) = Li(x) - Li(x^a) + sum_l R_l(x)` adds
//!   oscillating density blocks `dR_l = tau_l cos(tau_l log u) u^{b-2} du`
//!   on windows `[A_l, B_l)`, producing extreme zeta growth left of
//!   `Re s = b`; `pi_C` is its Möbius inversion.
//! * Subtractive family: an atomic template on the rational primes with
//!   mass `p^{a-1}` plus a transfer measure that moves the excess above
//!   each integer level to the next prime, so the cumulative hits every
//!   integer exactly at a prime and inverse sampling yields distinct primes.
//!
//! Monotonicity is established by a decision procedure, not an existence
//! argument: an explicit threshold `x0` past which a triangle-inequality
//! lower bound on `x log x F'(x)` is positive, plus a geometric grid check
//! of the derivative series on `[1 + 1e-6, x0]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logint::{li_lower, li_lower_deriv, li_upper, SeriesBudget, ZetaOracle};
use crate::util::{mobius, Kahan};
use crate::Complex;

/// Symmetric multiset of complex numbers (zero/pole prescriptions).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<MultisetEntry>", into = "Vec<MultisetEntry>")]
pub struct ComplexMultiset {
    entries: Vec<(Complex, u32)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MultisetEntry {
    re: f64,
    im: f64,
    #[serde(default = "default_mult")]
    mult: u32,
}

fn default_mult() -> u32 {
    1
}

impl ComplexMultiset {
    pub fn empty() -> Self {
        ComplexMultiset { entries: Vec::new() }
    }

    /// Multiset from explicit values, multiplicity one each (repeat a value
    /// to raise its multiplicity). Canonicalized: sorted, duplicates merged.
    pub fn from_values(values: &[Complex]) -> Self {
        let entries = values.iter().map(|&v| (v, 1)).collect();
        ComplexMultiset { entries: canonicalize(entries) }
    }

    /// Convenience: adds the conjugate of every non-real value.
    pub fn symmetrized(values: &[Complex]) -> Self {
        let mut all = Vec::new();
        for &v in values {
            all.push(v);
            if v.im != 0.0 {
                all.push(v.conj());
            }
        }
        Self::from_values(&all)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total size counted with multiplicity.
    pub fn size(&self) -> u32 {
        self.entries.iter().map(|&(_, m)| m).sum()
    }

    pub fn entries(&self) -> impl Iterator<Item = (Complex, u32)> + '_ {
        self.entries.iter().copied()
    }

    pub fn is_symmetric(&self) -> bool {
        self.entries
            .iter()
            .all(|&(v, m)| v.im == 0.0 || self.entries.iter().any(|&(w, mw)| w == v.conj() && mw == m))
    }

    /// All real parts in the open strip (0, 1).
    pub fn in_critical_strip(&self) -> bool {
        self.entries.iter().all(|&(v, _)| v.re > 0.0 && v.re < 1.0)
    }

    pub fn disjoint_from(&self, other: &ComplexMultiset) -> bool {
        self.entries.iter().all(|&(v, _)| !other.entries.iter().any(|&(w, _)| w == v))
    }

    pub fn max_re(&self) -> f64 {
        self.entries.iter().map(|&(v, _)| v.re).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|&(v, _)| v.norm()).fold(0.0, f64::max)
    }

    pub fn contains(&self, v: Complex) -> bool {
        self.entries.iter().any(|&(w, _)| w == v)
    }
}

fn canonicalize(mut entries: Vec<(Complex, u32)>) -> Vec<(Complex, u32)> {
    entries.sort_by(|a, b| {
        (a.0.re, a.0.im).partial_cmp(&(b.0.re, b.0.im)).expect("multiset values must not be NaN")
    });
    let mut merged: Vec<(Complex, u32)> = Vec::with_capacity(entries.len());
    for (v, m) in entries {
        match merged.last_mut() {
            Some(last) if last.0 == v => last.1 += m,
            _ => merged.push((v, m)),
        }
    }
    merged
}

impl TryFrom<Vec<MultisetEntry>> for ComplexMultiset {
    type Error = String;
    fn try_from(raw: Vec<MultisetEntry>) -> std::result::Result<Self, String> {
        for e in &raw {
            if !e.re.is_finite() || !e.im.is_finite() {
                return Err("multiset entries must be finite".into());
            }
            if e.mult == 0 {
                return Err("multiset multiplicities must be positive".into());
            }
        }
        let entries = raw.into_iter().map(|e| (Complex::new(e.re, e.im), e.mult)).collect();
        Ok(ComplexMultiset { entries: canonicalize(entries) })
    }
}

impl From<ComplexMultiset> for Vec<MultisetEntry> {
    fn from(ms: ComplexMultiset) -> Self {
        ms.entries
            .into_iter()
            .map(|(v, m)| MultisetEntry { re: v.re, im: v.im, mult: m })
            .collect()
    }
}

/// Choice of the monotonizing multiplier M: a fixed value or the smallest
/// integer passing the positivity certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MSelect {
    Auto,
    Fixed(u32),
}

impl Serialize for MSelect {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            MSelect::Auto => ser.serialize_str("auto"),
            MSelect::Fixed(m) => ser.serialize_u32(*m),
        }
    }
}

impl<'de> Deserialize<'de> for MSelect {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(u32),
            Word(String),
        }
        match Repr::deserialize(de)? {
            Repr::Num(m) => Ok(MSelect::Fixed(m)),
            Repr::Word(w) if w == "auto" => Ok(MSelect::Auto),
            Repr::Word(w) => Err(serde::de::Error::custom(format!(
                "m must be \"auto\" or a non-negative integer, got {w:?}"
            ))),
        }
    }
}

/// Pole/zero prescription: poles S (added `li(x^w)` terms), zeros R
/// (subtracted), the monotonizing exponent `delta` and multiplier `m`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrescriptionSpec {
    pub poles: ComplexMultiset,
    pub zeros: ComplexMultiset,
    pub delta: f64,
    pub m: MSelect,
}

impl PrescriptionSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::InvalidInput(format!(
                "delta must lie in (0, 1/2), got {}",
                self.delta
            )));
        }
        if !self.poles.is_symmetric() || !self.zeros.is_symmetric() {
            return Err(Error::InvalidInput(
                "pole and zero multisets must be closed under conjugation".into(),
            ));
        }
        if !self.poles.in_critical_strip() || !self.zeros.in_critical_strip() {
            return Err(Error::InvalidInput(
                "all prescribed real parts must lie in the open strip (0, 1)".into(),
            ));
        }
        if !self.poles.disjoint_from(&self.zeros) {
            return Err(Error::InvalidInput("pole and zero multisets must be disjoint".into()));
        }
        Ok(())
    }

    /// Signed elements of F besides the leading `li(x)` and the `M li(x^d)`
    /// correction: `(value, +mult)` for poles, `(value, -mult)` for zeros.
    fn signed_elements(&self) -> Vec<(Complex, f64)> {
        let mut v = Vec::new();
        for (w, m) in self.poles.entries() {
            v.push((w, m as f64));
        }
        for (r, m) in self.zeros.entries() {
            v.push((r, -(m as f64)));
        }
        v
    }
}

/// Oscillatory-family parameters: block frequencies `tau_l`, window
/// exponents `delta_l` (`A_l = tau^(1+delta)`) and `nu_l` (`B_l = tau^nu`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OscillatorySpec {
    pub alpha: f64,
    pub beta: f64,
    pub tau: Vec<f64>,
    pub delta_seq: Vec<f64>,
    pub nu_seq: Vec<f64>,
}

impl OscillatorySpec {
    /// Desk defaults: `tau_1 = 20`, `tau_{l+1} = tau_l^2`, `delta_l = 1/(l+2)`,
    /// `nu_l = 2`, extended while the windows stay finite in f64.
    pub fn desk_default(alpha: f64, beta: f64) -> Self {
        let mut tau = vec![20.0f64];
        loop {
            let last = *tau.last().unwrap();
            let next = last * last;
            if next.powf(3.1).is_finite() {
                tau.push(next);
            } else {
                break;
            }
        }
        let n = tau.len();
        OscillatorySpec {
            alpha,
            beta,
            tau,
            delta_seq: (0..n).map(|l| 1.0 / (l as f64 + 3.0)).collect(),
            nu_seq: vec![2.0; n],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidInput(format!("alpha must be in (0,1), got {}", self.alpha)));
        }
        if !(self.beta > self.alpha && self.beta > 0.5 && self.beta < 1.0) {
            return Err(Error::InvalidInput(format!(
                "beta must satisfy alpha < beta < 1 and beta > 1/2, got {}",
                self.beta
            )));
        }
        let n = self.tau.len();
        if n == 0 || self.delta_seq.len() != n || self.nu_seq.len() != n {
            return Err(Error::InvalidInput(
                "tau, delta_seq and nu_seq must be non-empty and of equal length".into(),
            ));
        }
        if !self.tau.windows(2).all(|w| w[1] > w[0]) || self.tau[0] <= 1.0 {
            return Err(Error::InvalidInput("tau must be increasing and > 1".into()));
        }
        if !self.nu_seq.iter().all(|&v| (2.0..=3.0).contains(&v)) {
            return Err(Error::InvalidInput("nu_l must lie in [2, 3]".into()));
        }
        if !self.delta_seq.iter().all(|&d| d > 0.0)
            || !self.delta_seq.windows(2).all(|w| w[1] <= w[0])
        {
            return Err(Error::InvalidInput("delta_l must be positive and non-increasing".into()));
        }
        Ok(())
    }

    /// Blocks with window endpoints adjusted so that `tau_l log A_l` and
    /// `tau_l log B_l` are multiples of 2 pi (an o(1) change of delta_l and
    /// nu_l). Fails if a window collapses or windows overlap.
    pub fn blocks(&self) -> Result<Vec<OscBlock>> {
        self.validate()?;
        let two_pi = std::f64::consts::TAU;
        let mut blocks = Vec::with_capacity(self.tau.len());
        for l in 0..self.tau.len() {
            let tau = self.tau[l];
            let log_tau = tau.ln();
            let ka = (tau * (1.0 + self.delta_seq[l]) * log_tau / two_pi).round();
            let kb = (tau * self.nu_seq[l] * log_tau / two_pi).round();
            let log_a = two_pi * ka / tau;
            let log_b = two_pi * kb / tau;
            if kb <= ka {
                return Err(Error::InvalidInput(format!(
                    "block {} collapses after the 2-pi alignment",
                    l + 1
                )));
            }
            let (a, b) = (log_a.exp(), log_b.exp());
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "block {} window does not fit in f64",
                    l + 1
                )));
            }
            blocks.push(OscBlock { tau, a, b, log_a, log_b, delta_adj: log_a / log_tau - 1.0 });
        }
        for w in blocks.windows(2) {
            if w[0].log_b >= w[1].log_a {
                return Err(Error::InvalidInput("blocks must be separated: B_l < A_{l+1}".into()));
            }
        }
        Ok(blocks)
    }
}

/// One oscillatory density block.
#[derive(Debug, Clone, Copy)]
pub struct OscBlock {
    pub tau: f64,
    pub a: f64,
    pub b: f64,
    pub log_a: f64,
    pub log_b: f64,
    /// delta_l after the 2-pi alignment (`A_l = tau_l^(1 + delta_adj)`).
    pub delta_adj: f64,
}

impl OscBlock {
    /// `R_l(x) = int_{A_l}^{min(x, B_l)} tau cos(tau log u) u^{beta-2} du`
    /// in closed form; constant `R_l(B_l)` past the window.
    pub fn r_value(&self, beta: f64, x: f64) -> f64 {
        if x <= self.a {
            return 0.0;
        }
        let t = self.tau;
        let c = t / ((1.0 - beta) * (1.0 - beta) + t * t);
        let a_pow = ((beta - 1.0) * self.log_a).exp();
        if x >= self.b {
            // tau log B is a multiple of 2 pi: cos = 1, sin = 0 exactly.
            let b_pow = ((beta - 1.0) * self.log_b).exp();
            return c * (1.0 - beta) * (a_pow - b_pow);
        }
        let v = x.ln();
        let x_pow = ((beta - 1.0) * v).exp();
        let (s, co) = (t * v).sin_cos();
        c * ((1.0 - beta) * (a_pow - x_pow * co) + t * x_pow * s)
    }

    /// Density `tau cos(tau log x) x^{beta-2}` inside the window, else 0.
    pub fn r_density(&self, beta: f64, x: f64) -> f64 {
        if x <= self.a || x >= self.b {
            return 0.0;
        }
        let v = x.ln();
        self.tau * (self.tau * v).cos() * ((beta - 2.0) * v).exp()
    }
}

/// Atom of a discrete template: a rational prime and its mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// Monotonicity certificate: the analytic threshold and the grid sweep
/// below it.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Certificate {
    /// Threshold past which the explicit lower bound on `x log x F'(x)` is
    /// positive.
    pub x0: f64,
    /// Number of geometric grid points checked.
    pub grid_points: usize,
    /// Smallest derivative value seen on the grid.
    pub min_value: f64,
}

#[derive(Debug, Clone)]
enum Kind {
    /// li-combination (prime-level F) or Li-combination (Riemann level G):
    /// terms are (exponent, signed coefficient), including the leading
    /// (1, +1) and the (delta, M) correction.
    Prescription { terms: Vec<(Complex, f64)>, upper: bool },
    OscUpper { alpha: f64, beta: f64, blocks: Vec<OscBlock> },
    OscLower { alpha: f64, beta: f64, blocks: Vec<OscBlock> },
    Atomic { atoms: Vec<Atom>, cumulative: Vec<f64>, transfer_count: usize },
}

/// A monotone non-decreasing template on `[1, x_max]` with evaluation,
/// derivative (where defined), inverse, and support descriptor.
#[derive(Debug, Clone)]
pub struct TemplateFn {
    kind: Kind,
    x_max: f64,
    budget: SeriesBudget,
    f_at_x_max: f64,
    /// (F(x), x) knots for bracketing the inverse; continuous kinds only.
    inv_table: Vec<(f64, f64)>,
    chosen_m: Option<u32>,
    certificate: Option<Certificate>,
}

/// Support descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    Continuous,
    AtomsOnPrimes,
}

impl TemplateFn {
    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn support(&self) -> Support {
        match self.kind {
            Kind::Atomic { .. } => Support::AtomsOnPrimes,
            _ => Support::Continuous,
        }
    }

    /// Chosen monotonizing multiplier (prescription family).
    pub fn chosen_m(&self) -> Option<u32> {
        self.chosen_m
    }

    pub fn certificate(&self) -> Option<&Certificate> {
        self.certificate.as_ref()
    }

    pub fn blocks(&self) -> Option<&[OscBlock]> {
        match &self.kind {
            Kind::OscUpper { blocks, .. } | Kind::OscLower { blocks, .. } => Some(blocks),
            _ => None,
        }
    }

    pub fn atoms(&self) -> Option<&[Atom]> {
        match &self.kind {
            Kind::Atomic { atoms, .. } => Some(atoms),
            _ => None,
        }
    }

    /// Exact cumulative values at the atoms (atomic support).
    pub fn atom_cumulative(&self) -> Option<&[f64]> {
        match &self.kind {
            Kind::Atomic { cumulative, .. } => Some(cumulative),
            _ => None,
        }
    }

    /// Number of integer-level transfers in the atomic construction.
    pub fn transfer_count(&self) -> Option<usize> {
        match &self.kind {
            Kind::Atomic { transfer_count, .. } => Some(*transfer_count),
            _ => None,
        }
    }

    pub fn value_at_x_max(&self) -> f64 {
        self.f_at_x_max
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(1.0 <= x) {
            return Err(Error::OutOfRange(format!(
                "template evaluation requires x >= 1, got {x}"
            )));
        }
        match &self.kind {
            Kind::Prescription { terms, upper } => {
                let mut sum = Complex::new(0.0, 0.0);
                for &(z, c) in terms {
                    if c != 0.0 {
                        let v = if *upper {
                            li_upper(x, z, &self.budget)?
                        } else {
                            li_lower(x, z, &self.budget)?
                        };
                        sum += v * c;
                    }
                }
                Ok(sum.re)
            }
            Kind::OscUpper { alpha, beta, blocks } => {
                let base = li_upper(x, Complex::new(1.0, 0.0), &self.budget)?.re
                    - li_upper(x, Complex::new(*alpha, 0.0), &self.budget)?.re;
                Ok(base + blocks.iter().map(|bl| bl.r_value(*beta, x)).sum::<f64>())
            }
            Kind::OscLower { alpha, beta, blocks } => {
                let mut sum = li_lower(x, Complex::new(1.0, 0.0), &self.budget)?.re
                    - li_lower(x, Complex::new(*alpha, 0.0), &self.budget)?.re;
                let log_x = x.ln();
                let k_max = (log_x / blocks[0].log_a).floor() as usize;
                for k in 1..=k_max {
                    let mu = mobius(k as u64);
                    if mu == 0 {
                        continue;
                    }
                    let root = (log_x / k as f64).exp();
                    let inner: f64 = blocks.iter().map(|bl| bl.r_value(*beta, root)).sum();
                    sum += mu as f64 / k as f64 * inner;
                }
                Ok(sum)
            }
            Kind::Atomic { atoms, cumulative, .. } => {
                let idx = atoms.partition_point(|a| a.location <= x);
                Ok(if idx == 0 { 0.0 } else { cumulative[idx - 1] })
            }
        }
    }

    /// Derivative where defined. Atomic templates have no derivative.
    pub fn deriv(&self, x: f64) -> Result<f64> {
        if !(x > 1.0) {
            return Err(Error::Singular(format!("template derivative requires x > 1, got {x}")));
        }
        match &self.kind {
            Kind::Prescription { terms, upper } => {
                let mut sum = Complex::new(0.0, 0.0);
                if *upper {
                    // d/dx Li(x^z) = (x^{z-1} - x^{-1}) / log x
                    let log_x = x.ln();
                    for &(z, c) in terms {
                        let pow = ((z - 1.0) * log_x).exp();
                        sum += (pow - 1.0 / x) / log_x * c;
                    }
                } else {
                    for &(z, c) in terms {
                        sum += li_lower_deriv(x, z, &self.budget)? * c;
                    }
                }
                Ok(sum.re)
            }
            Kind::OscUpper { alpha, beta, blocks } => {
                let log_x = x.ln();
                let main = (1.0 - ((alpha - 1.0) * log_x).exp()) / log_x;
                Ok(main + blocks.iter().map(|bl| bl.r_density(*beta, x)).sum::<f64>())
            }
            Kind::OscLower { alpha, beta, blocks } => {
                let mut sum = li_lower_deriv(x, Complex::new(1.0, 0.0), &self.budget)?.re
                    - li_lower_deriv(x, Complex::new(*alpha, 0.0), &self.budget)?.re;
                let log_x = x.ln();
                let k_max = (log_x / blocks[0].log_a).floor() as usize;
                for k in 1..=k_max {
                    let mu = mobius(k as u64);
                    if mu == 0 {
                        continue;
                    }
                    let kf = k as f64;
                    for bl in blocks {
                        if log_x > kf * bl.log_a && log_x < kf * bl.log_b {
                            // r_{l,k}'(x) = mu(k)/k^2 tau cos(tau log x / k) x^{-(1-beta)/k - 1}
                            sum += mu as f64 / (kf * kf)
                                * bl.tau
                                * (bl.tau * log_x / kf).cos()
                                * ((-(1.0 - beta) / kf - 1.0) * log_x).exp();
                        }
                    }
                }
                Ok(sum)
            }
            Kind::Atomic { .. } => {
                Err(Error::NotApplicable("atomic templates have no pointwise derivative"))
            }
        }
    }

    /// Inverse of the cumulative: continuous support solves `F(x) = u` to
    /// `|F(x) - u| <= 1e-10 (1 + u)`; atomic support returns the atom where
    /// the cumulative first reaches `u`.
    pub fn inverse(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) || u > self.f_at_x_max * (1.0 + 1e-12) + 1e-12 {
            return Err(Error::OutOfRange(format!(
                "inverse argument {u} outside [0, {}]",
                self.f_at_x_max
            )));
        }
        if u <= 0.0 {
            return Ok(1.0);
        }
        if let Kind::Atomic { atoms, cumulative, .. } = &self.kind {
            let idx = cumulative.partition_point(|&c| c < u);
            return Ok(atoms[idx.min(atoms.len() - 1)].location);
        }
        // Bracket from the precomputed knots, then safeguarded Newton.
        let i = self.inv_table.partition_point(|&(fu, _)| fu < u);
        let (mut lo, mut hi) = if i == 0 {
            (1.0, self.inv_table[0].1)
        } else if i == self.inv_table.len() {
            (self.inv_table[i - 1].1, self.x_max)
        } else {
            (self.inv_table[i - 1].1, self.inv_table[i].1)
        };
        let tol = 1e-10 * (1.0 + u);
        let (u0, u1) = (self.eval(lo)? - u, self.eval(hi)? - u);
        if u0 > 0.0 || u1 < 0.0 {
            return Err(Error::Convergence {
                what: "inverse bracket",
                terms: 0,
                residual: u0.max(-u1),
            });
        }
        let mut x = lo + (hi - lo) * 0.5;
        for _ in 0..200 {
            let fx = self.eval(x)? - u;
            if fx.abs() <= tol {
                return Ok(x);
            }
            if fx > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let step = match self.deriv(x) {
                Ok(d) if d > 0.0 => x - fx / d,
                _ => f64::NAN,
            };
            x = if step.is_finite() && step > lo && step < hi {
                step
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo < 1e-15 * hi {
                return Ok(x);
            }
        }
        Err(Error::Convergence { what: "template inverse", terms: 200, residual: (hi - lo) / hi })
    }
}

fn build_inverse_table(
    kind: &Kind,
    x_max: f64,
    budget: &SeriesBudget,
) -> Result<(Vec<(f64, f64)>, f64)> {
    let probe = TemplateFn {
        kind: kind.clone(),
        x_max,
        budget: *budget,
        f_at_x_max: f64::INFINITY,
        inv_table: Vec::new(),
        chosen_m: None,
        certificate: None,
    };
    let n = 1024;
    let mut table = Vec::with_capacity(n);
    let log_max = x_max.ln();
    let mut f_prev = 0.0;
    for i in 1..=n {
        let x = (log_max * i as f64 / n as f64).exp();
        let f = probe.eval(x)?.max(f_prev); // clamp float wiggle to monotone
        table.push((f, x));
        f_prev = f;
    }
    let f_at_x_max = table[n - 1].0;
    Ok((table, f_at_x_max))
}

// ---------------------------------------------------------------------------
// Positivity certificate for the prescription family
// ---------------------------------------------------------------------------

/// `x log x F'(x)` as the coefficient series
/// `sum_n c_n (log x)^n / (n! zeta(n+1))` with
/// `c_n = 1 + sum_S w^n - sum_R r^n + M d^n`.
fn prescription_deriv_series(
    elements: &[(Complex, f64)],
    delta: f64,
    m: f64,
    log_x: f64,
    zeta: &ZetaOracle,
) -> f64 {
    let mut pows: Vec<Complex> = elements.iter().map(|&(z, _)| z).collect();
    let mut delta_pow = 1.0f64;
    let mut log_pow = 1.0f64; // (log x)^n / n!
    let max_abs = elements.iter().map(|&(z, _)| z.norm()).fold(1.0, f64::max);
    let n_max = (2.0 * max_abs * log_x).ceil() as usize + 48;
    let mut sum = 0.0f64;
    for n in 1..=n_max {
        log_pow *= log_x / n as f64;
        delta_pow *= delta;
        let mut c_n = 1.0 + m * delta_pow;
        for (i, &(_, coeff)) in elements.iter().enumerate() {
            c_n += pows[i].re * coeff;
        }
        sum += c_n * log_pow / zeta.int_value(n + 1);
        for (i, &(z, _)) in elements.iter().enumerate() {
            pows[i] *= z;
        }
        if log_pow * max_abs.powi(1) < 1e-18 && n > (max_abs * log_x) as usize {
            break;
        }
    }
    sum
}

fn harmonic_from_2(m: usize) -> f64 {
    (2..=m).map(|k| 1.0 / k as f64).sum()
}

/// Explicit threshold x0: past it, the triangle-inequality lower bound
/// `(x-1) - L (x^q + 1) - (L+1)(2 sqrt(x) H(floor(Q log x)) + 4)` on
/// `x log x F0'(x)` is positive. The bound is verified on a doubling ladder
/// above the returned threshold.
fn analytic_threshold(elements: &[(Complex, f64)]) -> Result<f64> {
    let l_count: f64 = elements.iter().map(|&(_, c)| c.abs()).sum();
    let q = elements.iter().map(|&(z, _)| z.re).fold(0.0, f64::max);
    let big_q = elements.iter().map(|&(z, _)| z.norm()).fold(1.0, f64::max);
    let g = |x: f64| {
        let m = ((big_q * x.ln()).floor() as usize).max(2);
        (x - 1.0)
            - l_count * (x.powf(q) + 1.0)
            - (l_count + 1.0) * (2.0 * x.sqrt() * harmonic_from_2(m) + 4.0)
    };
    let mut x0 = 16.0f64;
    loop {
        if x0 > 1e18 {
            return Err(Error::Certification {
                what: "analytic positivity threshold not found below 1e18".into(),
                at: x0,
                value: g(x0),
            });
        }
        let ladder_ok = g(x0) > 0.0 && (1..=40).all(|i| g(x0 * (2.0f64).powi(i)) > 0.0);
        if ladder_ok {
            return Ok(x0);
        }
        x0 *= 2.0;
    }
}

/// Geometric grid sweep (ratio 1.001) of the derivative series on
/// `[1 + 1e-6, x0]`.
fn grid_certify(
    elements: &[(Complex, f64)],
    delta: f64,
    m: f64,
    x0: f64,
) -> std::result::Result<(usize, f64), (f64, f64)> {
    let zeta = ZetaOracle::shared();
    let step = 1.001f64.ln();
    let mut log_x = (1.0 + 1e-6f64).ln();
    let log_end = x0.ln();
    let mut count = 0usize;
    let mut min_val = f64::INFINITY;
    while log_x <= log_end {
        let v = prescription_deriv_series(elements, delta, m, log_x, zeta);
        if v <= 0.0 {
            return Err((log_x.exp(), v));
        }
        min_val = min_val.min(v);
        count += 1;
        log_x += step;
    }
    Ok((count, min_val))
}

fn certify_prescription(spec: &PrescriptionSpec, m: u32) -> Result<Certificate> {
    let elements = spec.signed_elements();
    let x0 = analytic_threshold(&elements)?;
    match grid_certify(&elements, spec.delta, m as f64, x0) {
        Ok((grid_points, min_value)) => Ok(Certificate { x0, grid_points, min_value }),
        Err((at, value)) => Err(Error::Certification {
            what: format!("prescription derivative non-positive with M = {m}"),
            at,
            value,
        }),
    }
}

const AUTO_M_CAP: u32 = 1_000_000;

/// Smallest M whose positivity certificate passes. Passing is monotone in M
/// (the added term has positive derivative), so exponential then binary
/// search applies.
fn resolve_m(spec: &PrescriptionSpec) -> Result<(u32, Certificate)> {
    match spec.m {
        MSelect::Fixed(m) => Ok((m, certify_prescription(spec, m)?)),
        MSelect::Auto => {
            if let Ok(cert) = certify_prescription(spec, 0) {
                return Ok((0, cert));
            }
            let mut hi = 1u32;
            let mut cert_hi = loop {
                match certify_prescription(spec, hi) {
                    Ok(cert) => break cert,
                    Err(_) if hi < AUTO_M_CAP => hi = (hi * 2).min(AUTO_M_CAP),
                    Err(e) => return Err(e),
                }
            };
            let mut lo = hi / 2; // largest failing power of two (0 failed above)
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                match certify_prescription(spec, mid) {
                    Ok(cert) => {
                        hi = mid;
                        cert_hi = cert;
                    }
                    Err(_) => lo = mid,
                }
            }
            Ok((hi, cert_hi))
        }
    }
}

// ---------------------------------------------------------------------------
// Constructors
// ---------------------------------------------------------------------------

fn prescription_terms(spec: &PrescriptionSpec, m: u32, upper: bool) -> Kind {
    let mut terms = vec![(Complex::new(1.0, 0.0), 1.0)];
    terms.extend(spec.signed_elements());
    if m > 0 {
        terms.push((Complex::new(spec.delta, 0.0), m as f64));
    }
    Kind::Prescription { terms, upper }
}

/// The prime-level prescription template
/// `F(x) = li(x) + sum_S li(x^w) - sum_R li(x^r) + M li(x^d)`,
/// with M resolved and monotonicity certified.
pub fn prescription_lower(
    spec: &PrescriptionSpec,
    x_max: f64,
    budget: SeriesBudget,
) -> Result<TemplateFn> {
    spec.validate()?;
    budget.validate()?;
    let (m, certificate) = resolve_m(spec)?;
    let kind = prescription_terms(spec, m, false);
    let (inv_table, f_at_x_max) = build_inverse_table(&kind, x_max, &budget)?;
    Ok(TemplateFn {
        kind,
        x_max,
        budget,
        f_at_x_max,
        inv_table,
        chosen_m: Some(m),
        certificate: Some(certificate),
    })
}

/// The Riemann-level companion `G(x) = sum_k F(x^{1/k})/k`, evaluated in
/// closed form with the upper integral Li. Monotone because each
/// `F(x^{1/k})` is.
pub fn prescription_upper(
    spec: &PrescriptionSpec,
    x_max: f64,
    budget: SeriesBudget,
) -> Result<TemplateFn> {
    spec.validate()?;
    budget.validate()?;
    let (m, certificate) = resolve_m(spec)?;
    let kind = prescription_terms(spec, m, true);
    let (inv_table, f_at_x_max) = build_inverse_table(&kind, x_max, &budget)?;
    Ok(TemplateFn {
        kind,
        x_max,
        budget,
        f_at_x_max,
        inv_table,
        chosen_m: Some(m),
        certificate: Some(certificate),
    })
}

/// Geometric-grid monotonicity sweep for the oscillatory kinds; rejects the
/// spec with the violating abscissa.
fn certify_grid_deriv(template: &TemplateFn, what: &str) -> Result<Certificate> {
    let step = 1.001f64.ln();
    let mut log_x = (1.0 + 1e-6f64).ln();
    let log_end = template.x_max.ln();
    let mut count = 0usize;
    let mut min_val = f64::INFINITY;
    while log_x <= log_end {
        let x = log_x.exp();
        let v = template.deriv(x)?;
        if v < 0.0 {
            return Err(Error::Certification { what: what.into(), at: x, value: v });
        }
        min_val = min_val.min(v);
        count += 1;
        log_x += step;
    }
    Ok(Certificate { x0: template.x_max, grid_points: count, min_value: min_val })
}

/// The absolutely continuous oscillatory template
/// `Pi_C(x) = Li(x) - Li(x^alpha) + sum_l R_l(x)`, grid-certified monotone.
pub fn oscillatory_upper(
    spec: &OscillatorySpec,
    x_max: f64,
    budget: SeriesBudget,
) -> Result<TemplateFn> {
    budget.validate()?;
    let blocks = spec.blocks()?;
    let kind = Kind::OscUpper { alpha: spec.alpha, beta: spec.beta, blocks };
    let (inv_table, f_at_x_max) = build_inverse_table(&kind, x_max, &budget)?;
    let mut t = TemplateFn {
        kind,
        x_max,
        budget,
        f_at_x_max,
        inv_table,
        chosen_m: None,
        certificate: None,
    };
    t.certificate = Some(certify_grid_deriv(&t, "oscillatory Pi_C derivative negative")?);
    Ok(t)
}

/// The Möbius inversion `pi_C(x) = sum_k mu(k)/k Pi_C(x^{1/k})`,
/// grid-certified monotone.
pub fn oscillatory_lower(
    spec: &OscillatorySpec,
    x_max: f64,
    budget: SeriesBudget,
) -> Result<TemplateFn> {
    budget.validate()?;
    let blocks = spec.blocks()?;
    let kind = Kind::OscLower { alpha: spec.alpha, beta: spec.beta, blocks };
    let (inv_table, f_at_x_max) = build_inverse_table(&kind, x_max, &budget)?;
    let mut t = TemplateFn {
        kind,
        x_max,
        budget,
        f_at_x_max,
        inv_table,
        chosen_m: None,
        certificate: None,
    };
    t.certificate = Some(certify_grid_deriv(&t, "oscillatory pi_C derivative negative")?);
    Ok(t)
}

fn build_atomic(
    alpha: f64,
    primes: &[f64],
    x_max: f64,
    transfer: bool,
    alpha_hi: f64,
) -> Result<TemplateFn> {
    if !(alpha > 0.5 && alpha < alpha_hi) {
        return Err(Error::InvalidInput(format!(
            "alpha must lie in (0.5, {alpha_hi}), got {alpha}"
        )));
    }
    if primes.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("prime list must be sorted".into()));
    }
    let mut cumulative: Vec<f64> = Vec::new();
    let mut locations: Vec<f64> = Vec::new();
    let mut raw = Kahan::new();
    let mut acc = Kahan::new();
    let mut next_level = 1.0f64;
    let mut carry = 0.0f64;
    let mut transfer_count = 0usize;
    for &p in primes.iter().take_while(|&&p| p <= x_max) {
        let mass = p.powf(alpha - 1.0);
        debug_assert!(mass < 1.0);
        raw.add(mass);
        locations.push(p);
        if transfer && raw.value() >= next_level {
            // p is a transfer prime: pin the cumulative to the integer level
            // and move the excess to the next prime.
            carry = raw.value() - next_level;
            acc = Kahan::new();
            acc.add(next_level);
            cumulative.push(next_level);
            next_level += 1.0;
            transfer_count += 1;
        } else {
            acc.add(mass + carry);
            carry = 0.0;
            cumulative.push(acc.value());
        }
    }
    if locations.is_empty() {
        return Err(Error::InvalidInput("no primes at or below x_max".into()));
    }
    if transfer && transfer_count == 0 {
        return Err(Error::InvalidInput(format!(
            "x_max = {x_max} too small: the cumulative never reaches 1, no transfer prime exists"
        )));
    }
    // Masses re-derived from the stored cumulative so atoms and cumulative
    // agree identically.
    let mut atoms = Vec::with_capacity(locations.len());
    let mut prev = 0.0;
    for (i, &p) in locations.iter().enumerate() {
        let mass = cumulative[i] - prev;
        debug_assert!(mass >= 0.0, "negative atom mass at p = {p}");
        atoms.push(Atom { location: p, mass });
        prev = cumulative[i];
    }
    let f_at_x_max = *cumulative.last().unwrap();
    Ok(TemplateFn {
        kind: Kind::Atomic { atoms, cumulative, transfer_count },
        x_max,
        budget: SeriesBudget::default(),
        f_at_x_max,
        inv_table: Vec::new(),
        chosen_m: None,
        certificate: None,
    })
}

/// Subtractive atomic template on the rational primes: mass
/// `p^{alpha-1}` plus a transfer measure moving the excess above each
/// integer level to the next prime. The cumulative hits every integer
/// exactly at a transfer prime, so inverse sampling draws distinct primes.
pub fn subtractive_atomic(alpha: f64, primes: &[f64], x_max: f64) -> Result<TemplateFn> {
    build_atomic(alpha, primes, x_max, true, 2.0 / 3.0)
}

/// Same atomic template with the transfer measure identically zero
/// (duplicate-prime experiments); consecutive draws may then collide at a
/// level prime.
pub fn subtractive_atomic_plain(alpha: f64, primes: &[f64], x_max: f64) -> Result<TemplateFn> {
    build_atomic(alpha, primes, x_max, false, 0.8)
}

/// Free-function form of the cumulative inverse.
pub fn template_inverse(f: &TemplateFn, u: f64) -> Result<f64> {
    f.inverse(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;

    fn b() -> SeriesBudget {
        SeriesBudget::default()
    }

    fn cor33_spec() -> PrescriptionSpec {
        // alpha = 0.8 (zero), beta = 0.6 (pole), delta = 0.3
        PrescriptionSpec {
            poles: ComplexMultiset::from_values(&[Complex::new(0.6, 0.0)]),
            zeros: ComplexMultiset::from_values(&[Complex::new(0.8, 0.0)]),
            delta: 0.3,
            m: MSelect::Auto,
        }
    }

    #[test]
    fn multiset_canonicalization_and_symmetry() {
        let ms = ComplexMultiset::from_values(&[
            Complex::new(0.5, 1.0),
            Complex::new(0.5, -1.0),
            Complex::new(0.5, 1.0),
        ]);
        assert_eq!(ms.size(), 3);
        assert!(!ms.is_symmetric()); // multiplicities 2 vs 1
        let sym = ComplexMultiset::symmetrized(&[Complex::new(0.5, 1.0), Complex::new(0.7, 0.0)]);
        assert!(sym.is_symmetric());
        assert_eq!(sym.size(), 3);
        assert!(sym.in_critical_strip());
    }

    #[test]
    fn multiset_json_round_trip() {
        let ms = ComplexMultiset::symmetrized(&[Complex::new(0.6, 2.0)]);
        let json = serde_json::to_string(&ms).unwrap();
        let back: ComplexMultiset = serde_json::from_str(&json).unwrap();
        assert_eq!(ms, back);
        let parsed: ComplexMultiset =
            serde_json::from_str(r#"[{"re":0.6,"im":0.0}, {"re":0.6,"im":0.0,"mult":2}]"#).unwrap();
        assert_eq!(parsed.size(), 3);
    }

    #[test]
    fn mselect_serde() {
        assert_eq!(serde_json::to_string(&MSelect::Auto).unwrap(), "\"auto\"");
        assert_eq!(serde_json::to_string(&MSelect::Fixed(3)).unwrap(), "3");
        assert_eq!(serde_json::from_str::<MSelect>("\"auto\"").unwrap(), MSelect::Auto);
        assert_eq!(serde_json::from_str::<MSelect>("7").unwrap(), MSelect::Fixed(7));
        assert!(serde_json::from_str::<MSelect>("\"other\"").is_err());
    }

    #[test]
    fn spec_validation_rejects_bad_delta_and_overlap() {
        let mut spec = cor33_spec();
        spec.delta = 0.5;
        assert!(spec.validate().is_err());
        let overlap = PrescriptionSpec {
            poles: ComplexMultiset::from_values(&[Complex::new(0.6, 0.0)]),
            zeros: ComplexMultiset::from_values(&[Complex::new(0.6, 0.0)]),
            delta: 0.3,
            m: MSelect::Auto,
        };
        assert!(overlap.validate().is_err());
    }

    #[test]
    fn plain_li_template_is_monotone_with_m_zero() {
        let spec = PrescriptionSpec {
            poles: ComplexMultiset::empty(),
            zeros: ComplexMultiset::empty(),
            delta: 0.3,
            m: MSelect::Auto,
        };
        let f = prescription_lower(&spec, 1e4, b()).unwrap();
        assert_eq!(f.chosen_m(), Some(0));
        assert_eq!(f.eval(1.0).unwrap(), 0.0);
        let mut prev = 0.0;
        for x in crate::util::log_grid(1.0 + 1e-6, 1e4, 200) {
            let v = f.eval(x).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn cor33_template_certified_and_matches_li_combination() {
        let f = prescription_lower(&cor33_spec(), 1e6, b()).unwrap();
        let m = f.chosen_m().unwrap();
        let cert = f.certificate().unwrap();
        assert!(cert.min_value > 0.0);
        assert!(cert.grid_points > 1000);
        for x in [2.0, 100.0, 54321.0] {
            let direct = li_lower(x, Complex::new(1.0, 0.0), &b()).unwrap().re
                + li_lower(x, Complex::new(0.6, 0.0), &b()).unwrap().re
                - li_lower(x, Complex::new(0.8, 0.0), &b()).unwrap().re
                + m as f64 * li_lower(x, Complex::new(0.3, 0.0), &b()).unwrap().re;
            let v = f.eval(x).unwrap();
            assert!((v - direct).abs() <= 1e-10 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn auto_m_kicks_in_for_heavy_zero_set() {
        // Zeros at 0.9 with multiplicity 3 drive the derivative negative for
        // moderate x unless the delta-correction is added.
        let spec = PrescriptionSpec {
            poles: ComplexMultiset::empty(),
            zeros: ComplexMultiset::from_values(&[
                Complex::new(0.9, 0.0),
                Complex::new(0.9, 0.0),
                Complex::new(0.9, 0.0),
            ]),
            delta: 0.3,
            m: MSelect::Auto,
        };
        let f = prescription_lower(&spec, 1e5, b()).unwrap();
        let m = f.chosen_m().unwrap();
        assert!(m > 0, "expected a positive monotonizing multiplier");
        let fixed = PrescriptionSpec { m: MSelect::Fixed(m - 1), ..spec };
        assert!(matches!(prescription_lower(&fixed, 1e5, b()), Err(Error::Certification { .. })));
    }

    #[test]
    fn upper_template_dominates_lower_and_sums_back() {
        let spec = cor33_spec();
        let f = prescription_lower(&spec, 1e6, b()).unwrap();
        let g = prescription_upper(&spec, 1e6, b()).unwrap();
        assert_eq!(g.eval(1.0).unwrap(), 0.0);
        // 0 <= G - F <= C sqrt(x), and G - F non-decreasing.
        let mut prev_diff = 0.0;
        let mut fitted_c = 0.0f64;
        for x in crate::util::log_grid(2.0, 1e6, 120) {
            let diff = g.eval(x).unwrap() - f.eval(x).unwrap();
            assert!(diff >= prev_diff - 1e-9, "G - F decreased at {x}");
            fitted_c = fitted_c.max(diff / x.sqrt());
            prev_diff = diff;
        }
        assert!(fitted_c < 5.0, "(G - F)/sqrt(x) fitted constant {fitted_c}");
        // G(x) = sum_{k <= K} F(x^{1/k})/k + per-order tails at x = 1e4.
        let x: f64 = 1e4;
        let k_cut = 40;
        let mut sum = 0.0;
        for k in 1..=k_cut {
            sum += f.eval(x.powf(1.0 / k as f64)).unwrap() / k as f64;
        }
        let m = f.chosen_m().unwrap() as f64;
        let tail = |z: f64| -> f64 {
            // sum_{k>K} li(x^{z/k})/k regrouped per order: the z-power only
            // rescales log x.
            crate::logint::li_lower_tail_over_k(x.powf(z), k_cut, &b()).unwrap()
        };
        sum += tail(1.0) + tail(0.6) - tail(0.8) + m * tail(0.3);
        let direct = g.eval(x).unwrap();
        assert!((direct - sum).abs() <= 1e-7, "closed {direct}, sum {sum}");
    }

    fn desk_osc() -> OscillatorySpec {
        OscillatorySpec::desk_default(0.3, 0.7)
    }

    #[test]
    fn oscillatory_blocks_aligned_and_separated() {
        let spec = desk_osc();
        let blocks = spec.blocks().unwrap();
        assert!(blocks.len() >= 6);
        let two_pi = std::f64::consts::TAU;
        for (l, bl) in blocks.iter().enumerate().take(3) {
            let ka = bl.tau * bl.log_a / two_pi;
            let kb = bl.tau * bl.log_b / two_pi;
            assert!((ka - ka.round()).abs() < 1e-9, "block {l} A alignment");
            assert!((kb - kb.round()).abs() < 1e-9, "block {l} B alignment");
            assert!(bl.delta_adj > 0.0 && bl.delta_adj < 0.5);
        }
        // At least two full blocks below 1e6 with the desk defaults.
        assert!(blocks[1].b < 1e6);
        assert!(blocks[2].a > 1e6);
    }

    #[test]
    fn r_block_closed_form_matches_quadrature_and_freezes() {
        let spec = desk_osc();
        let blocks = spec.blocks().unwrap();
        let beta = spec.beta;
        for bl in &blocks[..2] {
            for &frac in &[0.3, 0.9, 1.0] {
                let x = (bl.log_a + frac * (bl.log_b - bl.log_a)).exp();
                let closed = bl.r_value(beta, x);
                let integrand = |v: f64| {
                    Complex::new(bl.tau * (bl.tau * v).cos() * ((beta - 1.0) * v).exp(), 0.0)
                };
                let q = quad::integrate(&integrand, bl.log_a, x.ln(), 1e-11).re;
                assert!((closed - q).abs() <= 1e-8, "tau {}: closed {closed}, quad {q}", bl.tau);
            }
            // Constant past the window, zero before it.
            let rb = bl.r_value(beta, bl.b);
            assert_eq!(bl.r_value(beta, bl.b * 7.3), rb);
            assert_eq!(bl.r_value(beta, bl.a), 0.0);
        }
    }

    #[test]
    fn oscillatory_templates_certify_and_vanish_at_one() {
        let spec = desk_osc();
        let upper = oscillatory_upper(&spec, 1e6, b()).unwrap();
        let lower = oscillatory_lower(&spec, 1e6, b()).unwrap();
        assert_eq!(upper.eval(1.0).unwrap(), 0.0);
        assert_eq!(lower.eval(1.0).unwrap(), 0.0);
        assert!(upper.certificate().unwrap().min_value >= 0.0);
        assert!(lower.certificate().unwrap().min_value >= 0.0);
        // Below the first window the blocks are inert.
        let blocks = upper.blocks().unwrap();
        let x = blocks[0].a * 0.9;
        let bare = li_upper(x, Complex::new(1.0, 0.0), &b()).unwrap().re
            - li_upper(x, Complex::new(0.3, 0.0), &b()).unwrap().re;
        assert!((upper.eval(x).unwrap() - bare).abs() < 1e-12);
        // Pi_C = Li - Li^alpha + O(1): fitted bound on the block sum.
        let mut worst = 0.0f64;
        for x in crate::util::log_grid(2.0, 1e6, 160) {
            let v = upper.eval(x).unwrap();
            let main = li_upper(x, Complex::new(1.0, 0.0), &b()).unwrap().re
                - li_upper(x, Complex::new(0.3, 0.0), &b()).unwrap().re;
            worst = worst.max((v - main).abs());
        }
        assert!(worst < 1.0, "Pi_C deviation from main terms {worst}");
    }

    #[test]
    fn oscillatory_lower_matches_direct_mobius_sum() {
        let spec = desk_osc();
        let lower = oscillatory_lower(&spec, 1e6, b()).unwrap();
        let upper = oscillatory_upper(&spec, 1e6, b()).unwrap();
        let x: f64 = 1e5;
        let k_cut = 40;
        let mut sum = 0.0;
        for k in 1..=k_cut {
            let mu = mobius(k as u64);
            if mu != 0 {
                sum += mu as f64 / k as f64 * upper.eval(x.powf(1.0 / k as f64)).unwrap();
            }
        }
        // Only the Li(x) - Li(x^alpha) part reaches past K = 40 (the blocks
        // need x^{1/k} >= A_1 > 50); regroup its tail per series order.
        sum += crate::logint::li_upper_mobius_tail_over_k(x, k_cut, &b()).unwrap();
        sum -= crate::logint::li_upper_mobius_tail_over_k(x.powf(spec.alpha), k_cut, &b()).unwrap();
        let direct = lower.eval(x).unwrap();
        assert!((direct - sum).abs() <= 1e-8, "direct {direct}, mobius sum {sum}");
    }

    #[test]
    fn oscillatory_lower_aggregate_block_derivative_bound() {
        // |sum r_{l,k}'(x)| <= 2 x^{beta-1}
        let spec = desk_osc();
        let lower = oscillatory_lower(&spec, 1e6, b()).unwrap();
        for x in crate::util::log_grid(60.0, 9.9e5, 400) {
            let full = lower.deriv(x).unwrap();
            let smooth = li_lower_deriv(x, Complex::new(1.0, 0.0), &b()).unwrap().re
                - li_lower_deriv(x, Complex::new(0.3, 0.0), &b()).unwrap().re;
            let blocks_part = full - smooth;
            assert!(
                blocks_part.abs() <= 2.0 * x.powf(spec.beta - 1.0) + 1e-12,
                "x = {x}: block derivative {blocks_part}"
            );
        }
    }

    #[test]
    fn block_tail_sums_converge() {
        // Partial sums of R_l(B_l) are Cauchy within 1e-6 by l = 6.
        let spec = desk_osc();
        let blocks = spec.blocks().unwrap();
        let tail: f64 = blocks[5..].iter().map(|bl| bl.r_value(spec.beta, bl.b)).sum();
        assert!(tail.abs() < 1e-6, "tail beyond l = 6 is {tail}");
    }

    fn small_primes() -> Vec<f64> {
        // Primes to 1000 by trial division; independent of the sieve module.
        let mut ps = vec![2.0f64];
        'outer: for n in (3..1000u64).step_by(2) {
            let mut d = 3;
            while d * d <= n {
                if n % d == 0 {
                    continue 'outer;
                }
                d += 2;
            }
            ps.push(n as f64);
        }
        ps
    }

    #[test]
    fn subtractive_levels_hit_integers_exactly() {
        let primes = small_primes();
        let f = subtractive_atomic(0.6, &primes, 1000.0).unwrap();
        let cum = f.atom_cumulative().unwrap();
        let atoms = f.atoms().unwrap();
        let transfers = f.transfer_count().unwrap();
        assert!(transfers >= 5);
        let mut level = 1.0;
        for (i, &c) in cum.iter().enumerate() {
            if c == level {
                level += 1.0;
            } else {
                assert!(c < level, "cumulative skipped level {level} at atom {i}");
            }
            assert!(atoms[i].mass >= 0.0);
        }
        assert_eq!(level - 1.0, transfers as f64);
        // q_1 for alpha = 0.6 by direct scan: first prime with raw sum >= 1.
        let mut s = 0.0;
        let mut q1 = 0.0;
        for &p in &primes {
            s += p.powf(-0.4);
            if s >= 1.0 {
                q1 = p;
                break;
            }
        }
        assert_eq!(q1, 3.0);
        let first_transfer = cum.iter().position(|&c| c == 1.0).unwrap();
        assert_eq!(atoms[first_transfer].location, q1);
        // Inverse lands on the first atom, and 0 maps to 1.
        assert_eq!(f.inverse(0.5).unwrap(), 2.0);
        assert_eq!(f.inverse(0.0).unwrap(), 1.0);
        // Derivative is undefined.
        assert!(matches!(f.deriv(10.0), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn subtractive_requires_reachable_first_level() {
        let primes = small_primes();
        assert!(matches!(subtractive_atomic(0.6, &primes, 2.5), Err(Error::InvalidInput(_))));
        assert!(subtractive_atomic_plain(0.7, &primes, 1000.0).is_ok());
        assert!(subtractive_atomic(0.7, &primes, 1000.0).is_err()); // alpha cap 2/3
    }

    #[test]
    fn inverse_round_trips_continuous_templates() {
        let spec = PrescriptionSpec {
            poles: ComplexMultiset::empty(),
            zeros: ComplexMultiset::empty(),
            delta: 0.3,
            m: MSelect::Fixed(0),
        };
        let f = prescription_lower(&spec, 1e4, b()).unwrap();
        let u = f.eval(50.0).unwrap();
        let x = f.inverse(u).unwrap();
        assert!((x - 50.0).abs() <= 1e-8, "inverse(li(50)) = {x}");
        for &target in &[1.5, 17.0, 9_999.0] {
            let u = f.eval(target).unwrap();
            let x = f.inverse(u).unwrap();
            assert!((f.eval(x).unwrap() - u).abs() <= 1e-10 * (1.0 + u));
        }
        assert!(f.inverse(-1.0).is_err());
        assert!(f.inverse(f.value_at_x_max() * 2.0).is_err());
    }

    #[test]
    fn chebyshev_bound_fitted_constant_all_families() {
        let budget = b();
        let presc = prescription_lower(&cor33_spec(), 1e6, budget).unwrap();
        let osc = oscillatory_lower(&desk_osc(), 1e6, budget).unwrap();
        let sub = subtractive_atomic(0.6, &small_primes(), 1000.0).unwrap();
        for (name, t) in [("prescription", &presc), ("oscillatory", &osc), ("subtractive", &sub)] {
            let mut fitted = 0.0f64;
            for x in crate::util::log_grid(2.0, t.x_max(), 100) {
                fitted = fitted.max(t.eval(x).unwrap() * x.ln() / x);
            }
            assert!(fitted <= 5.0, "{name}: F log x / x fitted constant {fitted}");
        }
    }
}
