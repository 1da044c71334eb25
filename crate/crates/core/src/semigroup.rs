//! Exact enumeration of the multiplicative semigroup generated by a finite
//! prime multiset, with pluggable arithmetic weights, the Dirichlet
//! hyperbola convolution, the classical sieve, and system transforms.
//!
//! Generalized integers are counted as distinct factorizations (exponent
//! vectors over the prime multiset), even when numerical values coincide:
//! the multiset {2, 2} generates three different integers of value 4.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sampler::{GenPrimes, Provenance};
use crate::util::Kahan;

/// Arithmetic weight attached to each factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    /// 1 per distinct factorization; the empty product contributes N(1) = 1.
    Unit,
    /// Möbius: (-1)^k on squarefree products of k distinct prime elements,
    /// 0 on anything with a square factor; +1 at 1.
    Moebius,
    /// log p at every prime power p^k (Chebyshev psi).
    VonMangoldt,
    /// 1/k at every prime power p^k (Riemann prime counting Pi).
    RiemannPi,
}

/// Right-continuous cumulative step function stored as a merged event list.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTable {
    /// (x, cumulative value at and after x); x strictly increasing.
    events: Vec<(f64, f64)>,
}

impl StepTable {
    /// Build from raw (value, weight) jumps: sorts, merges equal values,
    /// accumulates with compensated summation.
    pub fn from_jumps(mut jumps: Vec<(f64, f64)>) -> StepTable {
        jumps.par_sort_unstable_by(|a, b| {
            a.partial_cmp(b).expect("step table values must not be NaN")
        });
        let mut events: Vec<(f64, f64)> = Vec::with_capacity(jumps.len());
        let mut acc = Kahan::new();
        let mut i = 0;
        while i < jumps.len() {
            let x = jumps[i].0;
            while i < jumps.len() && jumps[i].0 == x {
                acc.add(jumps[i].1);
                i += 1;
            }
            events.push((x, acc.value()));
        }
        StepTable { events }
    }

    /// Right-continuous query: cumulative at the last event `<= x` (0 before
    /// the first event).
    pub fn query(&self, x: f64) -> f64 {
        let idx = self.events.partition_point(|&(e, _)| e <= x);
        if idx == 0 {
            0.0
        } else {
            self.events[idx - 1].1
        }
    }

    pub fn events(&self) -> &[(f64, f64)] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Largest event abscissa.
    pub fn x_max(&self) -> Option<f64> {
        self.events.last().map(|&(x, _)| x)
    }

    /// Total cumulative value.
    pub fn total(&self) -> f64 {
        self.events.last().map_or(0.0, |&(_, c)| c)
    }

    /// Iterate (x, jump weight) pairs.
    pub fn jumps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.events.iter().enumerate().map(|(i, &(x, c))| {
            let prev = if i == 0 { 0.0 } else { self.events[i - 1].1 };
            (x, c - prev)
        })
    }

    /// CSV export: header `x,cumulative`, one event per line, LF endings,
    /// shortest round-trip decimal representation.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.events.len() * 24 + 16);
        out.push_str("x,cumulative\n");
        for &(x, c) in &self.events {
            out.push_str(&format!("{x},{c}\n"));
        }
        out
    }

    /// Parse the `to_csv` format; exact round-trip.
    pub fn from_csv(text: &str) -> Result<StepTable> {
        let mut lines = text.lines();
        match lines.next() {
            Some("x,cumulative") => {}
            other => {
                return Err(Error::InvalidInput(format!(
                    "expected header 'x,cumulative', got {other:?}"
                )))
            }
        }
        let mut events = Vec::new();
        for (ln, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let (xs, cs) = line.split_once(',').ok_or_else(|| {
                Error::InvalidInput(format!("line {}: missing comma", ln + 2))
            })?;
            let x: f64 = xs
                .parse()
                .map_err(|e| Error::InvalidInput(format!("line {}: {e}", ln + 2)))?;
            let c: f64 = cs
                .parse()
                .map_err(|e| Error::InvalidInput(format!("line {}: {e}", ln + 2)))?;
            events.push((x, c));
        }
        if events.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidInput("event abscissae must be strictly increasing".into()));
        }
        Ok(StepTable { events })
    }
}

const ENUMERATION_CAP: u64 = 100_000_000;

/// Exact generation of the weighted semigroup counting function up to `x`.
///
/// Depth-first over exponent vectors in non-decreasing prime order with
/// pruning once the running product exceeds `x`. Equal input lists produce
/// identical tables regardless of input permutation (primes are sorted) or
/// thread count.
pub fn enumerate(primes: &GenPrimes, x: f64, weight: WeightKind) -> Result<StepTable> {
    if !(x >= 1.0) {
        return Err(Error::OutOfRange(format!("enumeration bound must be >= 1, got {x}")));
    }
    let ps: Vec<f64> = primes.values().iter().copied().filter(|&p| p <= x).collect();
    match weight {
        WeightKind::VonMangoldt | WeightKind::RiemannPi => {
            // Prime powers only; no combinatorial walk needed.
            let mut jumps = Vec::new();
            for &p in &ps {
                let mut value = p;
                let mut k = 1u32;
                while value <= x {
                    let w = match weight {
                        WeightKind::VonMangoldt => p.ln(),
                        _ => 1.0 / k as f64,
                    };
                    jumps.push((value, w));
                    // Guard band: re-check the next power in log space.
                    if value > x / p {
                        break;
                    }
                    value *= p;
                    k += 1;
                }
            }
            Ok(StepTable::from_jumps(jumps))
        }
        WeightKind::Unit => {
            let mut jumps = dfs_products(&ps, x, false)?;
            jumps.push((1.0, 1.0)); // empty product
            Ok(StepTable::from_jumps(jumps))
        }
        WeightKind::Moebius => {
            let mut jumps = dfs_products(&ps, x, true)?;
            jumps.push((1.0, 1.0));
            Ok(StepTable::from_jumps(jumps))
        }
    }
}

/// All non-empty products `<= x`; squarefree-with-sign when `moebius`.
/// Products within a relative guard band of `x` are re-verified in exact
/// integer arithmetic when every prime is a rational integer.
fn dfs_products(ps: &[f64], x: f64, moebius: bool) -> Result<Vec<(f64, f64)>> {
    let mut jumps: Vec<(f64, f64)> = Vec::new();
    let all_integer = ps.iter().all(|&p| p.fract() == 0.0 && p <= 9.0e15) && x.fract() == 0.0;
    let guard = 1e-12 * x;

    struct Walk<'a> {
        ps: &'a [f64],
        x: f64,
        moebius: bool,
        all_integer: bool,
        guard: f64,
        jumps: Vec<(f64, f64)>,
        exponents: Vec<(usize, u32)>, // index, exponent stack for guard checks
        nodes: u64,
    }

    impl Walk<'_> {
        fn accept(&self, value: f64) -> bool {
            if value <= self.x - self.guard {
                return true;
            }
            if value > self.x + self.guard {
                return false;
            }
            if self.all_integer {
                // Within the band: settle by exact (checked) integer product.
                let mut acc: u128 = 1;
                for &(i, e) in &self.exponents {
                    for _ in 0..e {
                        match acc.checked_mul(self.ps[i] as u128) {
                            Some(v) => acc = v,
                            None => return false,
                        }
                    }
                }
                acc <= self.x as u128
            } else {
                value <= self.x
            }
        }

        fn go(&mut self, start: usize, value: f64, depth: u32) -> Result<()> {
            for i in start..self.ps.len() {
                let p = self.ps[i];
                let candidate = value * p;
                if candidate > self.x + self.guard {
                    break; // primes are sorted; later ones only grow
                }
                self.exponents.push((i, 1));
                if self.accept(candidate) {
                    self.nodes += 1;
                    if self.nodes > ENUMERATION_CAP {
                        return Err(Error::ResourceCap {
                            what: "semigroup enumeration",
                            estimate: self.nodes,
                        });
                    }
                    let w = if self.moebius {
                        if depth % 2 == 0 {
                            1.0
                        } else {
                            -1.0
                        }
                    } else {
                        1.0
                    };
                    self.jumps.push((candidate, w));
                    if self.moebius {
                        // Squarefree only: advance past this prime element.
                        self.go(i + 1, candidate, depth + 1)?;
                    } else {
                        self.go(i, candidate, depth + 1)?;
                    }
                }
                self.exponents.pop();
            }
            Ok(())
        }
    }

    let mut walk = Walk {
        ps,
        x,
        moebius,
        all_integer,
        guard,
        jumps: Vec::new(),
        exponents: Vec::new(),
        nodes: 0,
    };
    // depth counts prime elements used so far; for Moebius the sign at a
    // node with k elements is (-1)^k, handled via depth parity (depth = k-1
    // at the moment of the push).
    walk.go(0, 1.0, 1)?;
    jumps.append(&mut walk.jumps);
    Ok(jumps)
}

/// Dirichlet hyperbola identity for the convolution sum
/// `sum_{n l <= x} h(l)`:
/// `sum_{n <= y} L(x/n) + sum_{l <= x/y} h(l) N(x/l) - N(y) L(x/y)`.
/// Exact for every cut `1 <= y <= x`.
pub fn hyperbola_convolve(n_tab: &StepTable, l_tab: &StepTable, x: f64, y: f64) -> Result<f64> {
    if !(1.0 <= y && y <= x) {
        return Err(Error::OutOfRange(format!("cut must satisfy 1 <= y <= x, got y = {y}")));
    }
    let mut acc = Kahan::new();
    for (n, w) in n_tab.jumps() {
        if n > y {
            break;
        }
        acc.add(w * l_tab.query(x / n));
    }
    for (l, h) in l_tab.jumps() {
        if l > x / y {
            break;
        }
        acc.add(h * n_tab.query(x / l));
    }
    acc.add(-n_tab.query(y) * l_tab.query(x / y));
    Ok(acc.value())
}

/// The error-balancing cut `y = x^{(beta - delta) / (1 - gamma + beta - delta)}`.
pub fn optimal_y(beta: f64, gamma: f64, delta: f64, x: f64) -> Result<f64> {
    if !(0.0 <= gamma && gamma < beta && 0.0 <= delta && delta < beta && beta < 1.0) {
        return Err(Error::InvalidInput(format!(
            "need 0 <= gamma, delta < beta < 1; got beta={beta}, gamma={gamma}, delta={delta}"
        )));
    }
    Ok(x.powf((beta - delta) / (1.0 - gamma + beta - delta)))
}

/// Adjoin the scaled copies `p^{1/beta} <= x` to the system, preserving
/// existing tags.
pub fn adjoin_scaled(primes: &GenPrimes, beta: f64, x: f64) -> Result<GenPrimes> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidInput(format!("beta must be in (0,1), got {beta}")));
    }
    let mut values: Vec<f64> = primes.values().to_vec();
    let mut tags: Vec<Provenance> = primes.tags().to_vec();
    for &p in primes.values() {
        let scaled = p.powf(1.0 / beta);
        if scaled <= x {
            values.push(scaled);
            tags.push(Provenance::Scaled(beta));
        }
    }
    GenPrimes::new(values, tags, primes.seed())
}

/// Multiset difference: every element of `sub` (with multiplicity) must be
/// present in `primes`.
pub fn subtract(primes: &GenPrimes, sub: &GenPrimes) -> Result<GenPrimes> {
    let mut values: Vec<f64> = Vec::with_capacity(primes.len());
    let mut tags: Vec<Provenance> = Vec::with_capacity(primes.len());
    let mut to_remove = sub.values().iter().copied().peekable();
    for (&v, &t) in primes.values().iter().zip(primes.tags()) {
        match to_remove.peek() {
            Some(&r) if r == v => {
                to_remove.next();
            }
            Some(&r) if r < v => {
                return Err(Error::InvalidInput(format!(
                    "subtraction: element {r} not present in the base multiset"
                )));
            }
            _ => {
                values.push(v);
                tags.push(t);
            }
        }
    }
    if let Some(r) = to_remove.next() {
        return Err(Error::InvalidInput(format!(
            "subtraction: element {r} not present in the base multiset"
        )));
    }
    GenPrimes::new(values, tags, primes.seed())
}

const SIEVE_CAP: f64 = 1e8;

/// All rational primes `<= x` by the sieve of Eratosthenes (odd wheel).
pub fn sieve_classical(x: f64) -> Result<GenPrimes> {
    if x > SIEVE_CAP {
        return Err(Error::ResourceCap { what: "classical sieve", estimate: x as u64 });
    }
    if x < 2.0 {
        return Ok(GenPrimes::empty());
    }
    let n = x.floor() as usize;
    let mut primes = vec![2.0f64];
    if n >= 3 {
        // is_composite[i] represents 2i + 3.
        let m = (n - 1) / 2;
        let mut composite = vec![false; m];
        let mut i = 0usize;
        while (2 * i + 3) * (2 * i + 3) <= n {
            if !composite[i] {
                let p = 2 * i + 3;
                let mut j = (p * p - 3) / 2;
                while j < m {
                    composite[j] = true;
                    j += p;
                }
            }
            i += 1;
        }
        for (i, &c) in composite.iter().enumerate() {
            if !c {
                primes.push((2 * i + 3) as f64);
            }
        }
    }
    GenPrimes::with_tag(primes, Provenance::Classical, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gp(values: &[f64]) -> GenPrimes {
        GenPrimes::with_tag(values.to_vec(), Provenance::Classical, None).unwrap()
    }

    #[test]
    fn unit_enumeration_of_two_primes() {
        // {2,3}-integers up to 10: 1, 2, 3, 4, 6, 8, 9.
        let tab = enumerate(&gp(&[2.0, 3.0]), 10.0, WeightKind::Unit).unwrap();
        assert_eq!(tab.query(10.0), 7.0);
        assert_eq!(tab.query(1.0), 1.0);
        assert_eq!(tab.query(0.5), 0.0);
        assert_eq!(tab.query(5.9), 4.0);
        let values: Vec<f64> = tab.events().iter().map(|&(x, _)| x).collect();
        assert_eq!(values, vec![1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 9.0]);
    }

    #[test]
    fn von_mangoldt_matches_chebyshev_psi() {
        let tab = enumerate(&gp(&[2.0, 3.0]), 10.0, WeightKind::VonMangoldt).unwrap();
        let expect = 3.0 * 2.0f64.ln() + 2.0 * 3.0f64.ln(); // 2,4,8 and 3,9
        assert!((tab.query(10.0) - expect).abs() < 1e-12);
        assert_eq!(tab.query(1.0), 0.0);
    }

    #[test]
    fn duplicate_prime_multiset_counts_factorizations() {
        // {2,2}: value 4 arises as p1^2, p1 p2, p2^2 — three integers.
        let tab = enumerate(&gp(&[2.0, 2.0]), 4.0, WeightKind::Unit).unwrap();
        assert_eq!(tab.query(4.0), 6.0); // 1, two 2s, three 4s
        let jumps: Vec<(f64, f64)> = tab.jumps().collect();
        assert_eq!(jumps, vec![(1.0, 1.0), (2.0, 2.0), (4.0, 3.0)]);
        // Moebius: 1 - 1 - 1 + 1 = 0 at 4.
        let mtab = enumerate(&gp(&[2.0, 2.0]), 4.0, WeightKind::Moebius).unwrap();
        assert_eq!(mtab.query(4.0), 0.0);
        assert_eq!(mtab.query(2.0), -1.0);
    }

    #[test]
    fn enumeration_is_input_order_independent() {
        let a = enumerate(&gp(&[5.0, 2.0, 3.0]), 1000.0, WeightKind::Unit).unwrap();
        let b = enumerate(&gp(&[3.0, 5.0, 2.0]), 1000.0, WeightKind::Unit).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unit_enumeration_against_brute_force_oracle() {
        // Exhaustive exponent-vector oracle over a direct product.
        let ps = [2.0, 3.0, 5.0, 7.0];
        let x = 500.0;
        let tab = enumerate(&gp(&ps), x, WeightKind::Unit).unwrap();
        let mut count = 0u64;
        let max_e = 9;
        for e2 in 0..=max_e {
            for e3 in 0..=max_e {
                for e5 in 0..=max_e {
                    for e7 in 0..=max_e {
                        let v = 2.0f64.powi(e2) * 3.0f64.powi(e3) * 5.0f64.powi(e5)
                            * 7.0f64.powi(e7);
                        if v <= x {
                            count += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(tab.query(x), count as f64);
    }

    #[test]
    fn psi_equals_log_integral_of_riemann_pi() {
        // psi(x) = int log u dPi(u) exactly: both enumerate prime powers.
        let ps = gp(&[2.0, 3.0, 5.0, 7.0, 11.0]);
        let psi = enumerate(&ps, 2000.0, WeightKind::VonMangoldt).unwrap();
        let pi_r = enumerate(&ps, 2000.0, WeightKind::RiemannPi).unwrap();
        for &(x, c) in psi.events() {
            let stieltjes: f64 =
                pi_r.jumps().take_while(|&(u, _)| u <= x).map(|(u, w)| w * u.ln()).sum();
            assert!((stieltjes - c).abs() <= 1e-9 * (1.0 + c), "x = {x}");
        }
    }

    #[test]
    fn enumeration_guard_band_settles_exact_boundary() {
        // 2^10 * 3^5 = 248832; enumerate exactly at that bound.
        let x = 248832.0;
        let tab = enumerate(&gp(&[2.0, 3.0]), x, WeightKind::Unit).unwrap();
        assert_eq!(tab.query(x) - tab.query(x - 0.5), 1.0, "boundary product must be included");
    }

    #[test]
    fn hyperbola_collapses_at_unit_cut() {
        // y = 1: sum_l h(l) N(x/l), first and third terms cancel.
        let n_tab = enumerate(&gp(&[2.0, 3.0]), 100.0, WeightKind::Unit).unwrap();
        let l_tab = enumerate(&gp(&[5.0]), 100.0, WeightKind::Unit).unwrap();
        let x = 60.0;
        let direct: f64 =
            l_tab.jumps().take_while(|&(l, _)| l <= x).map(|(l, h)| h * n_tab.query(x / l)).sum();
        let v = hyperbola_convolve(&n_tab, &l_tab, x, 1.0).unwrap();
        assert!((v - direct).abs() < 1e-12);
    }

    #[test]
    fn hyperbola_matches_brute_force_and_is_cut_independent() {
        // Deterministic pseudo-random small instances, integer weights.
        let mut state = 0x243F6A8885A308D3u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for trial in 0..200 {
            let n_events: Vec<(f64, f64)> = (0..(2 + next() % 30))
                .map(|_| ((2 + next() % 200) as f64, (1 + next() % 3) as f64))
                .collect();
            let l_events: Vec<(f64, f64)> = (0..(2 + next() % 30))
                .map(|_| ((2 + next() % 200) as f64, (1 + next() % 4) as f64))
                .collect();
            let mut n_all = n_events.clone();
            n_all.push((1.0, 1.0)); // N(1) = 1
            let n_tab = StepTable::from_jumps(n_all);
            let l_tab = StepTable::from_jumps(l_events.clone());
            let x = (50 + next() % 10_000) as f64;
            // Brute force double sum over jump pairs.
            let mut brute = 0.0;
            for (n, w) in n_tab.jumps() {
                for (l, h) in l_tab.jumps() {
                    if n * l <= x {
                        brute += w * h;
                    }
                }
            }
            let y1 = 1.0 + (next() % 1000) as f64 / 1000.0 * (x - 1.0);
            let y2 = 1.0 + (next() % 1000) as f64 / 1000.0 * (x - 1.0);
            let v1 = hyperbola_convolve(&n_tab, &l_tab, x, y1).unwrap();
            let v2 = hyperbola_convolve(&n_tab, &l_tab, x, y2).unwrap();
            assert_eq!(v1, brute, "trial {trial}: y = {y1}");
            assert!((v2 - brute).abs() <= 1e-9 * (1.0 + brute.abs()), "trial {trial}");
        }
    }

    #[test]
    fn moebius_inverts_unit_on_small_system() {
        // Convolving N with its Möbius table gives the indicator of {1}.
        let ps = gp(&[2.0, 3.0, 5.0]);
        let n_tab = enumerate(&ps, 200.0, WeightKind::Unit).unwrap();
        let m_tab = enumerate(&ps, 200.0, WeightKind::Moebius).unwrap();
        for &x in &[1.0, 2.0, 10.0, 59.0, 200.0] {
            let v = hyperbola_convolve(&n_tab, &m_tab, x, 1.0).unwrap();
            assert!((v - 1.0).abs() < 1e-9, "x = {x}: convolution = {v}");
        }
    }

    #[test]
    fn optimal_cut_values() {
        let x: f64 = 1e6;
        let y = optimal_y(0.4, 0.0, 0.0, x).unwrap();
        assert!((y - x.powf(0.4 / 1.4)).abs() < 1e-9);
        let y = optimal_y(0.45, 0.3, 0.1, x).unwrap();
        assert!((y - x.powf(0.35 / 1.05)).abs() < 1e-9);
        assert!(optimal_y(0.4, 0.0, 0.4, x).is_err());
        assert!(optimal_y(0.4, 0.5, 0.0, x).is_err());
    }

    #[test]
    fn scaled_adjoin_and_counting() {
        let base = gp(&[2.0, 3.0, 5.0, 7.0]);
        let joined = adjoin_scaled(&base, 0.5, 100.0).unwrap();
        // Scaled copy of 2 at beta = 1/2 is 4.
        assert!(joined.values().contains(&4.0));
        // pi_joined(x) = pi(x) + pi(x^beta).
        for &x in &[4.0, 10.0, 30.0, 100.0] {
            let lhs = joined.count_leq(x);
            let rhs = base.count_leq(x) + base.count_leq(x.powf(0.5));
            assert_eq!(lhs, rhs, "x = {x}");
        }
        // beta = 0.4, X = 100: scaled survivors are 2, 3, 5 only.
        let joined = adjoin_scaled(&base, 0.4, 100.0).unwrap();
        let scaled: Vec<f64> = joined
            .tags()
            .iter()
            .zip(joined.values())
            .filter(|(t, _)| matches!(t, Provenance::Scaled(_)))
            .map(|(_, &v)| v)
            .collect();
        assert_eq!(scaled.len(), 3);
        assert!((scaled[0] - 2.0f64.powf(2.5)).abs() < 1e-12);
        assert!((scaled[2] - 5.0f64.powf(2.5)).abs() < 1e-12);
    }

    #[test]
    fn multiset_subtraction() {
        let base = gp(&[2.0, 2.0, 3.0]);
        let removed = subtract(&base, &gp(&[2.0])).unwrap();
        assert_eq!(removed.values(), &[2.0, 3.0]);
        let empty_sub = subtract(&base, &GenPrimes::empty()).unwrap();
        assert_eq!(empty_sub.values(), base.values());
        assert!(subtract(&base, &gp(&[5.0])).is_err());
        assert!(subtract(&gp(&[2.0]), &gp(&[2.0, 2.0])).is_err());
    }

    #[test]
    fn sieve_small_and_pi_1e6() {
        assert_eq!(sieve_classical(10.0).unwrap().values(), &[2.0, 3.0, 5.0, 7.0]);
        assert!(sieve_classical(1.0).unwrap().is_empty());
        assert_eq!(sieve_classical(2.0).unwrap().values(), &[2.0]);
        let primes = sieve_classical(1e6).unwrap();
        assert_eq!(primes.len(), 78_498);
        assert!(sieve_classical(2e8).is_err());
        // Cross-check against an independent segmented sieve oracle.
        let mut count = 0usize;
        let seg = 10_000usize;
        let base: Vec<usize> = {
            let mut v = Vec::new();
            let mut is_p = vec![true; 1001];
            for i in 2..=1000 {
                if is_p[i] {
                    v.push(i);
                    let mut j = i * i;
                    while j <= 1000 {
                        is_p[j] = false;
                        j += i;
                    }
                }
            }
            v
        };
        let mut lo = 2usize;
        while lo <= 1_000_000 {
            let hi = (lo + seg - 1).min(1_000_000);
            let mut is_prime = vec![true; hi - lo + 1];
            for &p in &base {
                if p * p > hi {
                    break;
                }
                let mut j = lo.div_ceil(p).max(p) * p;
                while j <= hi {
                    is_prime[j - lo] = false;
                    j += p;
                }
            }
            for v in lo..=hi {
                if is_prime[v - lo] {
                    count += 1;
                }
            }
            lo = hi + 1;
        }
        assert_eq!(count, 78_498);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let tab = enumerate(&gp(&[2.0, 3.0, 5.0]), 10_000.0, WeightKind::Unit).unwrap();
        let csv = tab.to_csv();
        let back = StepTable::from_csv(&csv).unwrap();
        assert_eq!(tab, back);
        assert!(csv.starts_with("x,cumulative\n"));
        assert!(!csv.contains('\r'));
        assert!(StepTable::from_csv("bogus\n1,2\n").is_err());
    }
}
