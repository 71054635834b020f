//! Deterministic power-law weights `w_i = c_F (n / i)^α` and exact tail
//! summaries over them.

use std::io::{Read, Write};

use serde::Serialize;

use crate::constants::{DerivedExponents, ModelParams};
use crate::error::{invalid, Error, Result};

/// Kahan–Babuška (Neumaier) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Weights in non-increasing order (0-based: `weights[i] = c_F (n/(i+1))^α`),
/// with prefix/suffix sums for O(log n) tail queries.
#[derive(Debug, Clone)]
pub struct WeightSequence {
    params: ModelParams,
    exps: DerivedExponents,
    weights: Vec<f64>,
    ell_n: f64,
    // prefix_w[k] = Σ_{i<k} w_i (heaviest first)
    prefix_w: Vec<f64>,
    // suffix_w[k] = Σ_{i>=k} w_i, accumulated from the light end
    suffix_w: Vec<f64>,
    suffix_sq: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailCounts {
    /// `#{k : w_k ≥ t}`
    pub count_ge: usize,
    /// `Σ_{w_k > t} w_k`
    pub sum_ge: f64,
    /// `Σ_{w_k ≤ t} w_k²`
    pub sumsq_le: f64,
}

impl WeightSequence {
    pub fn build(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let exps = params.exponents()?;
        let n = params.n;
        let nf = n as f64;
        let weights: Vec<f64> = (1..=n)
            .map(|i| exps.c_f * (nf / i as f64).powf(exps.alpha))
            .collect();
        Ok(Self::from_parts(*params, exps, weights))
    }

    fn from_parts(params: ModelParams, exps: DerivedExponents, weights: Vec<f64>) -> Self {
        let n = weights.len();
        let mut prefix_w = Vec::with_capacity(n + 1);
        let mut acc = CompensatedSum::new();
        prefix_w.push(0.0);
        for &w in &weights {
            acc.add(w);
            prefix_w.push(acc.value());
        }
        let mut suffix_w = vec![0.0; n + 1];
        let mut suffix_sq = vec![0.0; n + 1];
        let (mut sw, mut sq) = (CompensatedSum::new(), CompensatedSum::new());
        for k in (0..n).rev() {
            sw.add(weights[k]);
            sq.add(weights[k] * weights[k]);
            suffix_w[k] = sw.value();
            suffix_sq[k] = sq.value();
        }
        WeightSequence {
            params,
            exps,
            ell_n: suffix_w[0],
            weights,
            prefix_w,
            suffix_w,
            suffix_sq,
        }
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn ell_n(&self) -> f64 {
        self.ell_n
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn exponents(&self) -> &DerivedExponents {
        &self.exps
    }

    /// Weight of the 0-based vertex `v`.
    #[inline]
    pub fn w(&self, v: usize) -> f64 {
        self.weights[v]
    }

    /// Exact tail summaries at threshold `a ℓ_n / w_i` (0-based `i`).
    pub fn tail_counts(&self, a: f64, i: usize) -> Result<TailCounts> {
        if i >= self.n() {
            return Err(invalid(format!("vertex index {i} out of range for n = {}", self.n())));
        }
        if !(a > 0.0) {
            return Err(invalid("a must be positive"));
        }
        Ok(self.tail_at(a * self.ell_n / self.weights[i]))
    }

    /// Exact tail summaries at an arbitrary threshold `t`.
    pub fn tail_at(&self, t: f64) -> TailCounts {
        let ge = self.weights.partition_point(|&w| w >= t);
        let gt = self.weights.partition_point(|&w| w > t);
        TailCounts {
            count_ge: ge,
            sum_ge: self.prefix_w[gt],
            sumsq_le: self.suffix_sq[gt],
        }
    }

    /// `Σ_{w_k ≤ t} w_k`, the complement of `sum_ge`.
    pub fn sum_le(&self, t: f64) -> f64 {
        let gt = self.weights.partition_point(|&w| w > t);
        self.suffix_w[gt]
    }

    /// The three large-n approximations to [`TailCounts`] at `a ℓ_n / w_i`.
    pub fn tail_asymptotics(&self, a: f64, i: usize) -> (f64, f64, f64) {
        let e = &self.exps;
        let n = self.n() as f64;
        let tau = e.tau;
        let ratio = self.weights[i] / (a * self.ell_n);
        let count = n * (e.c_f * ratio).powf(tau - 1.0);
        let sum = e.c_f.powf(tau - 1.0) * n / (1.0 - e.alpha) * ratio.powf(tau - 2.0);
        let sumsq = e.c_f.powf(tau - 1.0) * n / (2.0 * e.alpha - 1.0) * ratio.powf(tau - 3.0);
        (count, sum, sumsq)
    }

    /// Binary dump: `n` (u64), `tau`, `C` (f64), then the `n` weights, all
    /// little-endian.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(&(self.n() as u64).to_le_bytes())?;
        out.write_all(&self.params.tau.to_le_bytes())?;
        out.write_all(&self.params.tail_const.to_le_bytes())?;
        for &w in &self.weights {
            out.write_all(&w.to_le_bytes())?;
        }
        Ok(())
    }

    /// Inverse of [`write_binary`](Self::write_binary). Kernel and lambda are
    /// not stored and come from `template`.
    pub fn read_binary<R: Read>(mut input: R, template: &ModelParams) -> Result<Self> {
        let mut b8 = [0u8; 8];
        input.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        input.read_exact(&mut b8)?;
        let tau = f64::from_le_bytes(b8);
        input.read_exact(&mut b8)?;
        let tail_const = f64::from_le_bytes(b8);
        let params = ModelParams::new(tau, tail_const, n, template.kernel, template.lambda)?;
        let exps = params.exponents()?;
        let mut weights = Vec::with_capacity(n);
        for _ in 0..n {
            input.read_exact(&mut b8).map_err(|e| match e.kind() {
                std::io::ErrorKind::UnexpectedEof => Error::Format("truncated weight file".into()),
                _ => Error::Io(e),
            })?;
            weights.push(f64::from_le_bytes(b8));
        }
        if weights.windows(2).any(|w| w[0] < w[1]) || weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Format("weights must be positive and non-increasing".into()));
        }
        Ok(Self::from_parts(params, exps, weights))
    }
}

pub fn build_weights(params: &ModelParams) -> Result<WeightSequence> {
    WeightSequence::build(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::Kernel;

    fn seq(n: usize) -> WeightSequence {
        build_weights(&ModelParams::new(2.5, 1.0, n, Kernel::Nr, 0.0).unwrap()).unwrap()
    }

    #[test]
    fn endpoints_at_n_1000() {
        let ws = seq(1000);
        assert!((ws.w(0) - 100.0).abs() < 1e-10);
        assert!((ws.w(999) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ell_n_golden_value_at_n_1000() {
        // oracle: 100 Σ_{i≤1000} i^{-2/3}, summed smallest-first in f64
        let oracle: f64 = (1..=1000u32).rev().map(|i| 100.0 * (i as f64).powf(-2.0 / 3.0)).sum();
        let ws = seq(1000);
        assert!(((ws.ell_n() - oracle) / oracle).abs() < 1e-12);
        assert!((ws.ell_n() - 2_755.741_870_821_084).abs() < 1e-9, "{}", ws.ell_n());
    }

    #[test]
    fn single_vertex() {
        let ws = seq(1);
        assert_eq!(ws.weights(), &[1.0]);
        assert!(build_weights(&ModelParams { n: 0, ..*ws.params() }).is_err());
    }

    #[test]
    fn mean_weight_approaches_mu() {
        // Σ_{i≤n} i^{-α} = n^{1-α}/(1-α) + ζ(α) + O(n^{-α}), ζ(2/3) = -2.447580736...
        let n = 100_000.0f64;
        let predicted = 3.0 - 2.447_580_736_233_66 * n.powf(-1.0 / 3.0);
        let ws = seq(100_000);
        assert!((ws.ell_n() / n - predicted).abs() < 1e-3, "{}", ws.ell_n() / n);
        assert!((ws.ell_n() / n / 3.0 - 1.0).abs() < 0.02);
    }

    #[test]
    fn empty_and_full_tails() {
        let ws = seq(1000);
        let high = ws.tail_at(ws.w(0) * 1.5);
        assert_eq!(high.count_ge, 0);
        assert_eq!(high.sum_ge, 0.0);
        let total_sq: f64 = ws.weights().iter().map(|w| w * w).sum();
        assert!(((high.sumsq_le - total_sq) / total_sq).abs() < 1e-12);
        assert_eq!(ws.tail_at(0.5).count_ge, 1000);
    }

    #[test]
    fn tail_count_matches_asymptotics_at_million() {
        let ws = seq(1_000_000);
        let tc = ws.tail_counts(1.0, 0).unwrap();
        let (count, _, _) = ws.tail_asymptotics(1.0, 0);
        let brute = ws.weights().iter().filter(|&&w| w >= ws.ell_n() / ws.w(0)).count();
        assert_eq!(tc.count_ge, brute);
        let r = tc.count_ge as f64 / count;
        assert!((0.95..=1.05).contains(&r), "{r}");
    }

    #[test]
    fn exact_and_asymptotic_tail_sums_converge() {
        // The upper-tail formulas need many vertices above the threshold and
        // the sumsq formula needs few; a = 0.4 balances the two (at a = 1 the
        // sum formula is still 14% off at n = 10^6).
        let a = 0.4;
        let mut worst = Vec::new();
        for n in [10_000usize, 100_000, 1_000_000] {
            let ws = seq(n);
            let tc = ws.tail_counts(a, 0).unwrap();
            let (c, s, q) = ws.tail_asymptotics(a, 0);
            let ratios = [tc.count_ge as f64 / c, tc.sum_ge / s, tc.sumsq_le / q];
            if n == 1_000_000 {
                for r in ratios {
                    assert!((0.9..=1.1).contains(&r), "{ratios:?}");
                }
            }
            worst.push(ratios.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max));
        }
        assert!(worst[2] <= worst[1] && worst[1] <= worst[0], "{worst:?}");
    }

    #[test]
    fn upper_and_lower_sums_partition_ell_n() {
        let ws = seq(50_000);
        for t in [0.5, 1.0, 3.7, 100.0, 1e3, 1e6] {
            let total = ws.tail_at(t).sum_ge + ws.sum_le(t);
            assert!(((total - ws.ell_n()) / ws.ell_n()).abs() < 1e-9);
        }
        for k in 1..ws.prefix_w.len() {
            assert!(ws.prefix_w[k] >= ws.prefix_w[k - 1]);
        }
    }

    #[test]
    fn tail_counts_rejects_bad_index() {
        let ws = seq(10);
        assert!(ws.tail_counts(1.0, 10).is_err());
    }

    #[test]
    fn binary_round_trip() {
        let ws = seq(257);
        let mut buf = Vec::new();
        ws.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 24 + 8 * 257);
        let back = WeightSequence::read_binary(&buf[..], ws.params()).unwrap();
        assert_eq!(back.weights(), ws.weights());
        assert_eq!(back.ell_n(), ws.ell_n());
        assert!(WeightSequence::read_binary(&buf[..100], ws.params()).is_err());
    }
}
