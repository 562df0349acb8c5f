//! Zipfian rank sampling by inverse CDF: ranks `1..=n` with weight `k^-s`.

use alloc::vec::Vec;

use crate::rng::SimRng;

#[derive(Clone, Debug)]
pub struct Zipf {
    cdf: Vec<f64>,
}

impl Zipf {
    pub fn new(n: u64, s: f64) -> Self {
        assert!(n > 0, "zipf needs at least one rank");
        let mut cdf = Vec::with_capacity(n as usize);
        let mut acc = 0.0;
        for k in 1..=n {
            acc += libm::pow(k as f64, -s);
            cdf.push(acc);
        }
        let total = acc;
        for c in &mut cdf {
            *c /= total;
        }
        Zipf { cdf }
    }

    pub fn n(&self) -> u64 {
        self.cdf.len() as u64
    }

    /// Probability of rank `k` (1-based).
    pub fn pmf(&self, k: u64) -> f64 {
        let i = (k - 1) as usize;
        self.cdf[i] - if i == 0 { 0.0 } else { self.cdf[i - 1] }
    }

    /// A rank in `1..=n`.
    pub fn sample(&self, rng: &mut SimRng) -> u64 {
        let u = rng.next_f64();
        let i = self.cdf.partition_point(|&c| c <= u);
        (i.min(self.cdf.len() - 1) + 1) as u64
    }
}
