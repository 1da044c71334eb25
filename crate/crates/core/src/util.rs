//! Small numeric helpers: compensated summation, Möbius values, grids.

use crate::Complex;

/// Kahan–Babuška compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated accumulator for complex values (componentwise Kahan).
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanComplex {
    re: Kahan,
    im: Kahan,
}

impl KahanComplex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, z: Complex) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex {
        Complex::new(self.re.value(), self.im.value())
    }
}

/// Möbius function by trial factorization. Intended for small k (the Möbius
/// sums over k never go past log x / log 2 at desk scale).
pub fn mobius(k: u64) -> i32 {
    assert!(k >= 1, "mobius requires k >= 1");
    if k == 1 {
        return 1;
    }
    let mut n = k;
    let mut factors = 0u32;
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return 0;
            }
            factors += 1;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        factors += 1;
    }
    if factors % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Geometric grid of `n` points spanning [lo, hi], endpoints included.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mobius_small_values() {
        let expected = [1, -1, -1, 0, -1, 1, -1, 0, 0, 1, -1, 0];
        for (i, &m) in expected.iter().enumerate() {
            assert_eq!(mobius(i as u64 + 1), m, "mu({})", i + 1);
        }
        assert_eq!(mobius(2 * 3 * 5 * 7), 1);
        assert_eq!(mobius(4999 * 2), 1); // 4999 prime
        assert_eq!(mobius(9973), -1); // prime
    }

    #[test]
    fn kahan_recovers_cancellation() {
        let mut k = Kahan::new();
        k.add(1e16);
        for _ in 0..10 {
            k.add(1.0);
        }
        k.add(-1e16);
        assert_eq!(k.value(), 10.0);
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(2.0, 2048.0, 11);
        assert_eq!(g.len(), 11);
        assert!((g[0] - 2.0).abs() < 1e-12);
        assert!((g[10] - 2048.0).abs() < 1e-9);
        assert!((g[5] - 64.0).abs() < 1e-9);
    }
}
