//! Limiting objects for the critical window: hub weights θ_i, two-step
//! intensities λ_ij, the Durrett–Kesten kernel `h`, and truncated samplers
//! for the limiting hub graph G_∞(λ) and the Durrett–Kesten graph G_DK(λ).
//!
//! `λ_ij / λ²` is homogeneous of degree −1 in `(i, j)`, so it is stored as a
//! one-dimensional profile in `ln(j/i)` instead of an `M × M` table.

use std::io::Write;

use rand::Rng;
use serde::Serialize;

use crate::components::ComponentSummary;
use crate::constants::{critical_constants, DerivedExponents, Kernel};
use crate::error::{invalid, Result};
use crate::graphgen::PercolatedGraph;
use crate::quad;
use crate::rng::{self, open_unit, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitParams {
    pub exponents: DerivedExponents,
    pub lambda: f64,
    pub truncation_m: usize,
    pub kernel: Kernel,
}

impl LimitParams {
    pub fn new(exponents: DerivedExponents, lambda: f64, truncation_m: usize, kernel: Kernel) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(invalid(format!("lambda must be non-negative, got {lambda}")));
        }
        if truncation_m == 0 || truncation_m as u64 > u32::MAX as u64 {
            return Err(invalid(format!("truncation M = {truncation_m} out of range")));
        }
        Ok(LimitParams {
            exponents,
            lambda,
            truncation_m,
            kernel,
        })
    }
}

/// `θ_i = c_F i^{-α} / μ` for `i ≥ 1`.
pub fn theta(i: usize, exps: &DerivedExponents) -> Result<f64> {
    if i == 0 {
        return Err(invalid("theta is indexed from 1"));
    }
    Ok(exps.c_f * (i as f64).powf(-exps.alpha) / exps.mu)
}

/// `θ_1, …, θ_M` (0-based storage).
pub fn theta_vector(m: usize, exps: &DerivedExponents) -> Vec<f64> {
    (1..=m)
        .map(|i| exps.c_f * (i as f64).powf(-exps.alpha) / exps.mu)
        .collect()
}

/// `Θ_i(x)` for the given kernel.
pub fn big_theta(kernel: Kernel, i: f64, x: f64, exps: &DerivedExponents) -> f64 {
    kernel.connect(exps.kernel_scale() * (i * x).powf(-exps.alpha))
}

/// `h(x, y) = B (x∧y)^{-(1-α)} (x∨y)^{-α}`.
pub fn dk_kernel_h(x: f64, y: f64, b_alpha: f64, alpha: f64) -> Result<f64> {
    if !(x > 0.0 && y > 0.0) {
        return Err(invalid("h needs positive arguments"));
    }
    Ok(h_unchecked(x, y, b_alpha, alpha))
}

#[inline]
fn h_unchecked(x: f64, y: f64, b: f64, alpha: f64) -> f64 {
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    b * lo.powf(alpha - 1.0) * hi.powf(-alpha)
}

fn series_coefficients(kernel: Kernel) -> [f64; 8] {
    let mut c = [0.0; 8];
    match kernel {
        Kernel::Cl => c[0] = 1.0,
        Kernel::Nr => {
            let mut fact = 1.0;
            for (m, slot) in c.iter_mut().enumerate() {
                fact *= (m + 1) as f64;
                *slot = if m % 2 == 0 { 1.0 } else { -1.0 } / fact;
            }
        }
        Kernel::Grg => {
            for (m, slot) in c.iter_mut().enumerate() {
                *slot = if m % 2 == 0 { 1.0 } else { -1.0 };
            }
        }
    }
    c
}

/// `P(r) = ∫_0^∞ q(κ x^{-α}) q(κ (r x)^{-α}) dx`, so that
/// `λ_ij = λ² P(j/i) / i`.
fn profile_integral(kernel: Kernel, kappa: f64, alpha: f64, r: f64, rel_tol: f64) -> Result<f64> {
    // Beyond X both arguments are below 1e-2 and the product of the power
    // series of q is integrated term by term.
    let x_cut = (100.0 * kappa).powf(1.0 / alpha);
    let knee_a = kappa.powf(1.0 / alpha);
    let knee_b = knee_a / r;
    let mut breaks = vec![0.0, x_cut];
    for knee in [knee_a, knee_b] {
        for f in [0.1, 1.0, 10.0] {
            breaks.push(knee * f);
        }
    }
    let mut x = 1e-3 * knee_a.min(knee_b);
    while x < x_cut {
        breaks.push(x);
        x *= 10.0;
    }
    breaks.retain(|&b| (0.0..=x_cut).contains(&b));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let ra = r.powf(-alpha);
    let body = quad::adaptive(
        |x: f64| {
            if x == 0.0 {
                return 1.0;
            }
            let s = kappa * x.powf(-alpha);
            kernel.connect(s) * kernel.connect(s * ra)
        },
        &breaks,
        rel_tol,
        0.0,
        20_000,
    )?;

    let c = series_coefficients(kernel);
    let mut tail = 0.0;
    for (p, cp) in c.iter().enumerate() {
        for (q, cq) in c.iter().enumerate() {
            if *cp == 0.0 || *cq == 0.0 {
                continue;
            }
            let k = (p + q + 2) as f64;
            tail += cp * cq * kappa.powf(k) * ra.powi(q as i32 + 1) * x_cut.powf(1.0 - alpha * k) / (alpha * k - 1.0);
        }
    }
    Ok(body.value + tail)
}

/// `λ_ij = λ² ∫_0^∞ Θ_i Θ_j dx` by direct quadrature.
pub fn lambda_ij(i: usize, j: usize, lp: &LimitParams, rel_tol: f64) -> Result<f64> {
    if i == 0 || j == 0 {
        return Err(invalid("hub indices start at 1"));
    }
    if lp.lambda == 0.0 {
        return Ok(0.0);
    }
    let (lo, hi) = (i.min(j) as f64, i.max(j) as f64);
    let e = &lp.exponents;
    let p = profile_integral(lp.kernel, e.kernel_scale(), e.alpha, hi / lo, rel_tol)?;
    Ok(lp.lambda * lp.lambda * p / lo)
}

const PROFILE_STEP: f64 = 0.01;
const PROFILE_TOL: f64 = 1e-11;

/// Tabulated `G(s) = e^{α s} P(e^s)` on a uniform grid in `s = ln(j/i)`,
/// read back with cubic Lagrange interpolation. Independent of λ.
#[derive(Debug, Clone)]
pub struct TwoStepProfile {
    kernel: Kernel,
    alpha: f64,
    s_max: f64,
    // values[k] = G((k - 1) * PROFILE_STEP), one guard point on each side
    values: Vec<f64>,
}

impl TwoStepProfile {
    /// Covers ratios `j/i` up to `r_max`.
    pub fn build(exps: &DerivedExponents, kernel: Kernel, r_max: f64) -> Result<Self> {
        let s_max = r_max.max(1.0).ln();
        let points = (s_max / PROFILE_STEP).ceil() as usize + 4;
        let kappa = exps.kernel_scale();
        let values = (0..points)
            .map(|k| {
                let s = (k as f64 - 1.0) * PROFILE_STEP;
                profile_integral(kernel, kappa, exps.alpha, s.exp(), PROFILE_TOL).map(|p| p * (exps.alpha * s).exp())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TwoStepProfile {
            kernel,
            alpha: exps.alpha,
            s_max,
            values,
        })
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    /// `λ_ij / λ²` for `1 ≤ i, j` with `max/min ≤ r_max`.
    pub fn ratio(&self, i: f64, j: f64) -> f64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let s = (hi / lo).ln();
        debug_assert!(s <= self.s_max + 1e-12, "ratio outside tabulated range");
        let t = s / PROFILE_STEP + 1.0;
        let k = (t.floor() as usize).clamp(1, self.values.len() - 3);
        let u = t - k as f64;
        let v = &self.values;
        // cubic through nodes k-1, k, k+1, k+2
        let g = -u * (u - 1.0) * (u - 2.0) / 6.0 * v[k - 1] + (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0 * v[k]
            - (u + 1.0) * u * (u - 2.0) / 2.0 * v[k + 1]
            + (u + 1.0) * u * (u - 1.0) / 6.0 * v[k + 2];
        g * (-self.alpha * s).exp() / lo
    }
}

/// Shared state for sampling G_∞(λ) and G_DK(λ) on `[M]`.
#[derive(Debug, Clone)]
pub struct LimitSampler {
    params: LimitParams,
    profile: TwoStepProfile,
    b_kernel: f64,
    thetas: Vec<f64>,
}

impl LimitSampler {
    pub fn new(params: LimitParams) -> Result<Self> {
        let profile = TwoStepProfile::build(&params.exponents, params.kernel, params.truncation_m as f64)?;
        Self::with_profile(params, profile)
    }

    /// Reuses a profile built for the same exponents and kernel (λ and M may
    /// differ as long as the profile covers M).
    pub fn with_profile(params: LimitParams, profile: TwoStepProfile) -> Result<Self> {
        if profile.kernel != params.kernel {
            return Err(invalid("profile was built for a different kernel"));
        }
        if (params.truncation_m as f64).ln() > profile.s_max + 1e-12 {
            return Err(invalid("profile does not cover the truncation"));
        }
        let cc = critical_constants(&params.exponents, params.kernel)?;
        Ok(LimitSampler {
            params,
            profile,
            b_kernel: cc.b_alpha,
            thetas: theta_vector(params.truncation_m, &params.exponents),
        })
    }

    pub fn params(&self) -> &LimitParams {
        &self.params
    }

    pub fn profile(&self) -> &TwoStepProfile {
        &self.profile
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    /// `B` of the kernel in use.
    pub fn b_alpha(&self) -> f64 {
        self.b_kernel
    }

    /// Cached `λ_ij`, 1-based indices.
    pub fn lambda_ij(&self, i: usize, j: usize) -> f64 {
        let l = self.params.lambda;
        l * l * self.profile.ratio(i as f64, j as f64)
    }

    /// `1 - e^{-λ_ij}`.
    pub fn p_infinity(&self, i: usize, j: usize) -> f64 {
        -(-self.lambda_ij(i, j)).exp_m1()
    }

    /// `min(1, λ² h(i, j))`.
    pub fn p_dk(&self, i: usize, j: usize) -> f64 {
        let l = self.params.lambda;
        (l * l * h_unchecked(i as f64, j as f64, self.b_kernel, self.params.exponents.alpha)).min(1.0)
    }

    /// Both graphs from one set of uniforms; the first is a subgraph of the
    /// second.
    pub fn sample_coupled(&self, seed: u64, replicate: u64) -> (PercolatedGraph, PercolatedGraph) {
        let mut rng: StreamRng = rng::stream(seed, replicate, rng::tag::LIMIT);
        let (inf, dk) = self.skip_sample(&mut rng, true);
        let wrap = |edges| PercolatedGraph {
            n: self.params.truncation_m,
            edges,
            kernel: self.params.kernel,
            pi: self.params.lambda,
            seed,
        };
        (wrap(inf), wrap(dk))
    }

    pub fn sample_g_infinity(&self, seed: u64, replicate: u64) -> PercolatedGraph {
        self.sample_coupled(seed, replicate).0
    }

    pub fn sample_dk(&self, seed: u64, replicate: u64) -> PercolatedGraph {
        self.sample_coupled(seed, replicate).1
    }

    fn skip_sample<R: Rng + ?Sized>(&self, rng: &mut R, keep_dk: bool) -> (Vec<[u32; 2]>, Vec<[u32; 2]>) {
        let m = self.params.truncation_m;
        let (mut inf, mut dk) = (Vec::new(), Vec::new());
        let l2 = self.params.lambda * self.params.lambda;
        if l2 == 0.0 || m < 2 {
            return (inf, dk);
        }
        let alpha = self.params.exponents.alpha;
        for i in 1..m {
            // envelope along the row: λ² B i^{α-1} j^{-α}, decreasing in j
            let row = l2 * self.b_kernel * (i as f64).powf(alpha - 1.0);
            let mut j = i + 1;
            let mut envelope = (row * (j as f64).powf(-alpha)).min(1.0);
            while j <= m {
                if envelope < 1.0 {
                    let skip = (open_unit(rng).ln() / (-envelope).ln_1p()).floor();
                    if skip > (m - j) as f64 {
                        break;
                    }
                    j += skip as usize;
                }
                let p_dk = (row * (j as f64).powf(-alpha)).min(1.0);
                let u = rng.random::<f64>() * envelope;
                if u < p_dk {
                    let pair = [(i - 1) as u32, (j - 1) as u32];
                    if keep_dk {
                        dk.push(pair);
                    }
                    if u < self.p_infinity(i, j) {
                        inf.push(pair);
                    }
                }
                envelope = p_dk;
                j += 1;
            }
        }
        (inf, dk)
    }
}

/// Component θ-sums sorted non-increasing. The summary must come from a
/// limit-model sample with θ vertex weights.
pub fn ordered_limit_weights(summary: &ComponentSummary) -> Vec<f64> {
    summary.sorted_weights()
}

/// CSV `i,j,lambda_ij` for `1 ≤ i ≤ j ≤ k`.
pub fn write_lambda_table<W: Write>(sampler: &LimitSampler, k: usize, mut out: W) -> Result<()> {
    writeln!(out, "i,j,lambda_ij")?;
    let k = k.min(sampler.params.truncation_m);
    for i in 1..=k {
        for j in i..=k {
            writeln!(out, "{i},{j},{}", sampler.lambda_ij(i, j))?;
        }
    }
    Ok(())
}

/// CSV `replicate,rank,weight` for per-replicate ordered limit weights.
pub fn write_ordered_weights<W: Write>(rows: &[Vec<f64>], mut out: W) -> Result<()> {
    writeln!(out, "replicate,rank,weight")?;
    for (r, weights) in rows.iter().enumerate() {
        for (k, w) in weights.iter().enumerate() {
            writeln!(out, "{r},{},{w}", k + 1)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::components::connected_components;

    fn exps() -> DerivedExponents {
        DerivedExponents::new(2.5, 1.0).unwrap()
    }

    #[test]
    fn theta_values() {
        let e = exps();
        assert!((theta(1, &e).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((theta(8, &e).unwrap() - 1.0 / 12.0).abs() < 1e-15);
        assert!(theta(0, &e).is_err());
        let t = theta_vector(10_000, &e);
        assert!(t.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn h_examples() {
        let b = 1.023_327;
        assert_eq!(dk_kernel_h(1.0, 1.0, b, 2.0 / 3.0).unwrap(), b);
        for x in [0.5, 1.0, 3.0, 17.0] {
            for y in [0.25, 2.0, 9.0] {
                let h = dk_kernel_h(x, y, b, 2.0 / 3.0).unwrap();
                assert!((dk_kernel_h(2.0 * x, 2.0 * y, b, 2.0 / 3.0).unwrap() - h / 2.0).abs() < 1e-14 * h);
                assert_eq!(h, dk_kernel_h(y, x, b, 2.0 / 3.0).unwrap());
            }
        }
        assert!(dk_kernel_h(0.0, 1.0, b, 0.5).is_err());
    }

    #[test]
    fn zero_lambda() {
        let lp = LimitParams::new(exps(), 0.0, 50, Kernel::Nr).unwrap();
        assert_eq!(lambda_ij(3, 7, &lp, 1e-10).unwrap(), 0.0);
        let s = LimitSampler::new(lp).unwrap();
        let (a, b) = s.sample_coupled(1, 0);
        assert!(a.edges.is_empty() && b.edges.is_empty());
    }

    #[test]
    fn profile_matches_direct_quadrature() {
        for kernel in Kernel::ALL {
            let lp = LimitParams::new(exps(), 1.0, 1000, kernel).unwrap();
            let s = LimitSampler::new(lp).unwrap();
            for (i, j) in [(1, 1), (1, 2), (3, 7), (10, 999), (250, 251), (1, 1000), (17, 400)] {
                let direct = lambda_ij(i, j, &lp, 1e-12).unwrap();
                let cached = s.lambda_ij(i, j);
                assert!((cached / direct - 1.0).abs() < 1e-8, "{kernel} {i} {j}: {cached} vs {direct}");
            }
        }
    }

    #[test]
    fn ordered_weights_of_small_samples() {
        let e = exps();
        let t = theta_vector(3, &e);
        let g = PercolatedGraph::from_edges(3, []).unwrap();
        let w = ordered_limit_weights(&connected_components(&g, &t).unwrap());
        assert!((w[0] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(w, t);
        let g = PercolatedGraph::from_edges(3, [(0, 1)]).unwrap();
        let w = ordered_limit_weights(&connected_components(&g, &t).unwrap());
        assert_eq!(w[0], t[0] + t[1]);
    }

    #[test]
    fn coupled_samples_are_nested() {
        let e = exps();
        let lc = critical_constants(&e, Kernel::Nr).unwrap().lambda_c;
        let s = LimitSampler::new(LimitParams::new(e, 1.5 * lc, 2000, Kernel::Nr).unwrap()).unwrap();
        for rep in 0..20 {
            let (inf, dk) = s.sample_coupled(5, rep);
            assert!(!dk.edges.is_empty());
            let mut k = 0;
            for e in &inf.edges {
                while dk.edges[k] != *e {
                    k += 1;
                }
            }
            assert!(dk.edges.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
