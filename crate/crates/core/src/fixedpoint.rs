//! Discretized multitype branching process on `(0, a]`: the kernel
//! `κ^(a)`, its operator norm (hence `λ_c(a)`), the maximal survival
//! fixed point `ρ_a^λ`, the giant-size functional `ζ_a^λ` with its `a → ∞`
//! limit, and the scalar upper-bound survival probability `ρ̄_a^{*,λ}`.
//!
//! The grid is graded toward 0 as `u_p = a ((p - 1/2)/N)^γ` with
//! `γ = 2/(1-α)`; each node carries the length of its cell as weight.

use std::io::Write;

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::constants::{critical_constants, DerivedExponents, Kernel};
use crate::error::{invalid, Error, Result};
use crate::quad;

pub const DEFAULT_GRID: usize = 2048;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;

const NORM_TOL: f64 = 1e-10;
const NORM_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone)]
pub struct KernelGrid {
    pub a: f64,
    pub kernel: Kernel,
    pub exponents: DerivedExponents,
    pub grid_u: Vec<f64>,
    /// Cell lengths; they sum to `a`.
    pub quad_weights: Vec<f64>,
    /// `κ^(a)(u_p, u_q)`.
    pub kernel_matrix: Array2<f64>,
}

fn graded_cells(a: f64, n: usize, gamma: f64) -> (Vec<f64>, Vec<f64>) {
    let edge = |p: usize| a * (p as f64 / n as f64).powf(gamma);
    let nodes = (1..=n).map(|p| a * ((p as f64 - 0.5) / n as f64).powf(gamma)).collect();
    let mut weights: Vec<f64> = (1..=n).map(|p| edge(p) - edge(p - 1)).collect();
    // absorb rounding so the partition of (0, a] is exact
    let total: f64 = weights.iter().sum();
    weights[n - 1] += a - total;
    (nodes, weights)
}

pub fn build_kernel_grid(a: f64, n_grid: usize, exps: &DerivedExponents, kernel: Kernel) -> Result<KernelGrid> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(invalid(format!("a must be positive, got {a}")));
    }
    if n_grid < 16 {
        return Err(invalid("n_grid must be at least 16"));
    }
    let alpha = exps.alpha;
    let (grid_u, quad_weights) = graded_cells(a, n_grid, 2.0 / (1.0 - alpha));
    let scale = exps.kernel_scale();
    let pow: Vec<f64> = grid_u.iter().map(|u| u.powf(-alpha)).collect();
    let kernel_matrix = Array2::from_shape_fn((n_grid, n_grid), |(p, q)| a * kernel.connect(scale * (pow[p] * pow[q])));
    Ok(KernelGrid {
        a,
        kernel,
        exponents: *exps,
        grid_u,
        quad_weights,
        kernel_matrix,
    })
}

impl KernelGrid {
    /// Grid with an arbitrary symmetric kernel function in place of `κ^(a)`.
    pub fn with_kernel_fn(
        a: f64,
        n_grid: usize,
        exps: &DerivedExponents,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<KernelGrid> {
        let mut kg = build_kernel_grid(a, n_grid, exps, Kernel::Nr)?;
        let u = kg.grid_u.clone();
        kg.kernel_matrix = Array2::from_shape_fn((n_grid, n_grid), |(p, q)| f(u[p], u[q]));
        Ok(kg)
    }

    pub fn len(&self) -> usize {
        self.grid_u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid_u.is_empty()
    }

    /// `(T f)(u_p) = Σ_q κ^(a)(u_p, u_q) f(u_q) w_q / a`, the operator on
    /// `L²(Λ_a)` with `Λ_a(dv) = dv / a`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let scaled = Array1::from_iter(f.iter().zip(&self.quad_weights).map(|(x, w)| x * w / self.a));
        self.kernel_matrix.dot(&scaled).to_vec()
    }

    /// `√(w_p/a) K_pq √(w_q/a)`: similar to the discretized operator and
    /// symmetric.
    fn symmetrized(&self, k: &Array2<f64>, normalized: bool) -> Array2<f64> {
        let scale = if normalized { self.a } else { 1.0 };
        let root: Vec<f64> = self.quad_weights.iter().map(|w| (w / scale).sqrt()).collect();
        let mut s = k.clone();
        for ((p, q), x) in s.indexed_iter_mut() {
            *x *= root[p] * root[q];
        }
        s
    }
}

/// Largest eigenvalue of a symmetric non-negative matrix by power iteration.
fn top_eigenvalue(s: &Array2<f64>) -> Result<f64> {
    let n = s.nrows();
    let mut v = Array1::from_elem(n, 1.0 / (n as f64).sqrt());
    let mut rq = 0.0;
    let mut change = f64::INFINITY;
    for _ in 0..NORM_MAX_ITER {
        let y = s.dot(&v);
        let next = v.dot(&y);
        let norm = y.dot(&y).sqrt();
        if norm == 0.0 {
            return Ok(0.0);
        }
        v = y / norm;
        change = (next - rq).abs();
        rq = next;
        if change <= NORM_TOL * rq.abs() {
            return Ok(rq);
        }
    }
    Err(Error::NotConverged {
        iterations: NORM_MAX_ITER,
        residual: change,
    })
}

/// `‖T_{κ^(a)}‖` on `L²(Λ_a)`.
pub fn operator_norm(kg: &KernelGrid) -> Result<f64> {
    top_eigenvalue(&kg.symmetrized(&kg.kernel_matrix, true))
}

/// The same norm in the unnormalized convention: kernel `κ^(a)/a` against
/// Lebesgue measure on `(0, a]`.
pub fn operator_norm_unnormalized(kg: &KernelGrid) -> Result<f64> {
    let k = &kg.kernel_matrix / kg.a;
    top_eigenvalue(&kg.symmetrized(&k, false))
}

/// `‖T_{κ₂^(a)}‖^{1/2}` with `κ₂(u,v) = ∫ κ(u,w) κ(w,v) Λ_a(dw)` formed
/// explicitly on the grid.
pub fn operator_norm_two_step(kg: &KernelGrid) -> Result<f64> {
    let mut kd = kg.kernel_matrix.clone();
    for ((_, q), x) in kd.indexed_iter_mut() {
        *x *= kg.quad_weights[q] / kg.a;
    }
    let k2 = kd.dot(&kg.kernel_matrix);
    // k2 is symmetric up to rounding; restore exact symmetry
    let k2 = (&k2 + &k2.t()) * 0.5;
    Ok(top_eigenvalue(&kg.symmetrized(&k2, true))?.sqrt())
}

pub fn lambda_c_of_a(kg: &KernelGrid) -> Result<f64> {
    Ok(1.0 / operator_norm(kg)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct FixedPointSolution {
    pub a: f64,
    pub lambda: f64,
    pub grid_u: Vec<f64>,
    pub rho_u: Vec<f64>,
    pub zeta_a: f64,
    pub lambda_c_a: f64,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Serialize)]
struct SolutionSummary {
    a: f64,
    lambda: f64,
    zeta_a: f64,
    lambda_c_a: f64,
    iterations: usize,
    residual: f64,
}

impl FixedPointSolution {
    pub fn sup_rho(&self) -> f64 {
        self.rho_u.iter().copied().fold(0.0, f64::max)
    }

    /// CSV with columns `u,rho`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "u,rho")?;
        for (u, r) in self.grid_u.iter().zip(&self.rho_u) {
            writeln!(out, "{u},{r}")?;
        }
        Ok(())
    }

    /// `{a, lambda, zeta_a, lambda_c_a, iterations, residual}`.
    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&SolutionSummary {
            a: self.a,
            lambda: self.lambda,
            zeta_a: self.zeta_a,
            lambda_c_a: self.lambda_c_a,
            iterations: self.iterations,
            residual: self.residual,
        })?)
    }
}

/// `ζ_a = λ ∫_0^a c_F u^{-α} ρ(u) du` on the grid.
pub fn zeta_on_grid(kg: &KernelGrid, lambda: f64, rho: &[f64]) -> f64 {
    let e = &kg.exponents;
    lambda
        * kg.grid_u
            .iter()
            .zip(&kg.quad_weights)
            .zip(rho)
            .map(|((u, w), r)| e.c_f * u.powf(-e.alpha) * r * w)
            .sum::<f64>()
}

/// Maximal solution of `ρ(u) = 1 - exp(-λ ∫_0^a κ(u,v) ρ(v) dv)` with
/// `κ = κ^(a)/a`, by monotone iteration from `ρ ≡ 1`.
pub fn solve_rho(kg: &KernelGrid, lambda: f64, tol: f64, max_iter: usize) -> Result<FixedPointSolution> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("lambda must be non-negative, got {lambda}")));
    }
    let lambda_c_a = lambda_c_of_a(kg)?;
    let n = kg.len();
    // T ρ with the normalized measure equals ∫ κ^(a)/a ρ dv
    let mut rho = vec![1.0; n];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let t = kg.apply(&rho);
        let next: Vec<f64> = t.iter().map(|x| -(-lambda * x).exp_m1()).collect();
        residual = 0.0;
        for (old, new) in rho.iter().zip(&next) {
            if *new > *old + 1e-14 {
                return Err(Error::Invariant(format!(
                    "survival iterate increased at step {iterations} ({old} -> {new})"
                )));
            }
            residual = f64::max(residual, old - new);
        }
        rho = next;
        if residual < tol {
            let zeta_a = zeta_on_grid(kg, lambda, &rho);
            return Ok(FixedPointSolution {
                a: kg.a,
                lambda,
                grid_u: kg.grid_u.clone(),
                rho_u: rho,
                zeta_a,
                lambda_c_a,
                iterations,
                residual,
            });
        }
    }
    Err(Error::NotConverged { iterations, residual })
}

/// Self-consistent upper bound on `ζ^λ` from `ρ(u) ≤ min{1, λ(c_F²/μ) u^{-α} ∫ v^{-α}ρ}`.
pub fn zeta_upper_bound(lambda: f64, exps: &DerivedExponents) -> f64 {
    let alpha = exps.alpha;
    let k = exps.kernel_scale() / exps.c_f;
    let c0 = 1.0 / (1.0 - alpha) + 1.0 / (2.0 * alpha - 1.0);
    // ζ ≤ λ c_F c0 (k ζ)^{(1-α)/α}
    let e = (1.0 - alpha) / alpha;
    (lambda * exps.c_f * c0 * k.powf(e)).powf(1.0 / (1.0 - e))
}

#[derive(Debug, Clone, Serialize)]
pub struct ZetaLadder {
    pub a_values: Vec<f64>,
    pub zeta_a: Vec<f64>,
    /// Extrapolated limit after each rung (first entry has none).
    pub extrapolated: Vec<f64>,
    pub zeta_infinity: f64,
    /// Marks CL/GRG limits as conjectural.
    pub conjectural: bool,
}

/// Largest rung of the a-ladder.
pub const LADDER_A_MAX: f64 = 1e4;

/// `ζ^λ = lim_a ζ_a^λ` along `a = 10, 20, 40, …`. The gap `ζ^λ - ζ_a` decays
/// like `a^{-(2α-1)}`; successive rungs are extrapolated with that rate and
/// the ladder stops once two extrapolations agree to `tol`.
pub fn zeta_infinity(
    lambda: f64,
    exps: &DerivedExponents,
    kernel: Kernel,
    tol: f64,
    n_grid: usize,
) -> Result<ZetaLadder> {
    let lambda_c = critical_constants(exps, kernel)?.lambda_c;
    if lambda <= lambda_c {
        return Err(Error::Subcritical { lambda, lambda_c });
    }
    let factor = 2f64.powf(2.0 * exps.alpha - 1.0);
    let mut ladder = ZetaLadder {
        a_values: Vec::new(),
        zeta_a: Vec::new(),
        extrapolated: Vec::new(),
        zeta_infinity: f64::NAN,
        conjectural: kernel != Kernel::Nr,
    };
    let mut a = 10.0;
    let mut last_change = f64::INFINITY;
    while a <= LADDER_A_MAX {
        let kg = build_kernel_grid(a, n_grid, exps, kernel)?;
        let z = solve_rho(&kg, lambda, DEFAULT_TOL, DEFAULT_MAX_ITER * 10)?.zeta_a;
        if let Some(&prev) = ladder.zeta_a.last() {
            if z < prev * (1.0 - 1e-6) {
                return Err(Error::Invariant(format!("zeta_a decreased from {prev} to {z} at a = {a}")));
            }
            let ext = z + (z - prev) / (factor - 1.0);
            if let Some(&prev_ext) = ladder.extrapolated.last() {
                last_change = ((ext - prev_ext) / ext).abs();
            }
            ladder.extrapolated.push(ext);
        }
        ladder.a_values.push(a);
        ladder.zeta_a.push(z);
        if last_change < tol {
            ladder.zeta_infinity = *ladder.extrapolated.last().expect("two rungs");
            return Ok(ladder);
        }
        a *= 2.0;
    }
    Err(Error::LadderExhausted {
        a_max: LADDER_A_MAX,
        last_change,
    })
}

/// Maximal solution of
/// `ρ̄ = (1-α) a^{α-1} ∫_0^a u^{-α} [1 - exp(-λ c̄_F u^{-α} a^{1-α} ρ̄)] du`,
/// `c̄_F = c_F²/((1-α)μ)`.
///
/// With `u = a s^{1/(1-α)}` the right side becomes
/// `∫_0^1 [1 - exp(-c s^{-α/(1-α)} ρ̄)] ds`, `c = λ c̄_F a^{1-2α}`.
pub fn rho_bar_star(a: f64, lambda: f64, exps: &DerivedExponents, tol: f64) -> Result<f64> {
    if !(a > 0.0) || !(lambda >= 0.0) {
        return Err(invalid("rho_bar_star needs a > 0 and lambda >= 0"));
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let alpha = exps.alpha;
    let c_bar = exps.kernel_scale() / (1.0 - alpha);
    let c = lambda * c_bar * a.powf(1.0 - 2.0 * alpha);
    let k = alpha / (1.0 - alpha);
    let breaks = quad::decade_breaks(1e-12, 1.0);
    let map = |rho: f64| -> Result<f64> {
        let body = quad::adaptive(
            |s: f64| -(-c * rho * s.powf(-k)).exp_m1(),
            &breaks,
            tol * 1e-2,
            0.0,
            10_000,
        )?;
        // the integrand is 1 up to rounding on (0, 1e-12]
        Ok(body.value + 1e-12)
    };
    let mut rho = 1.0;
    for _ in 0..DEFAULT_MAX_ITER * 10 {
        let next = map(rho)?.min(1.0);
        if next > rho + 1e-14 {
            return Err(Error::Invariant("rho_bar iterate increased".into()));
        }
        let done = rho - next < tol * next.max(tol);
        rho = next;
        if done {
            return Ok(rho);
        }
    }
    Err(Error::NotConverged {
        iterations: DEFAULT_MAX_ITER * 10,
        residual: rho,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exps() -> DerivedExponents {
        DerivedExponents::new(2.5, 1.0).unwrap()
    }

    #[test]
    fn grid_weights_partition_interval() {
        for a in [1.0, 10.0, 200.0] {
            let kg = build_kernel_grid(a, 64, &exps(), Kernel::Nr).unwrap();
            let s: f64 = kg.quad_weights.iter().sum();
            assert!((s - a).abs() < 1e-12 * a);
            assert!(kg.grid_u.windows(2).all(|w| w[0] < w[1]));
            assert!(*kg.grid_u.last().unwrap() < a);
        }
        assert!(build_kernel_grid(1.0, 8, &exps(), Kernel::Nr).is_err());
    }

    #[test]
    fn constant_kernel() {
        let kg = KernelGrid::with_kernel_fn(7.0, 64, &exps(), |_, _| 2.5).unwrap();
        let t = kg.apply(&vec![3.0; 64]);
        assert!(t.iter().all(|x| (x - 7.5).abs() < 1e-12));
        assert!((operator_norm(&kg).unwrap() - 2.5).abs() < 1e-9);
        assert!((operator_norm_two_step(&kg).unwrap() - 2.5).abs() < 1e-9);
    }

    #[test]
    fn kernel_entries_bounded_and_symmetric() {
        let kg = build_kernel_grid(10.0, 128, &exps(), Kernel::Nr).unwrap();
        let k = &kg.kernel_matrix;
        assert!(k.iter().all(|&x| x > 0.0 && x <= 10.0));
        assert_eq!(k, &k.t());
    }

    #[test]
    fn zero_lambda_gives_zero_survival() {
        let kg = build_kernel_grid(5.0, 64, &exps(), Kernel::Nr).unwrap();
        let sol = solve_rho(&kg, 0.0, 1e-12, 10).unwrap();
        assert_eq!(sol.sup_rho(), 0.0);
        assert_eq!(sol.zeta_a, 0.0);
    }

    #[test]
    fn conventions_agree() {
        let kg = build_kernel_grid(20.0, 256, &exps(), Kernel::Grg).unwrap();
        let a = operator_norm(&kg).unwrap();
        let b = operator_norm_unnormalized(&kg).unwrap();
        assert!((a / b - 1.0).abs() < 1e-9);
    }

    #[test]
    fn subcritical_guard() {
        assert!(matches!(
            zeta_infinity(0.2, &exps(), Kernel::Nr, 1e-4, 64),
            Err(Error::Subcritical { .. })
        ));
    }

    #[test]
    fn rho_bar_limits() {
        assert_eq!(rho_bar_star(10.0, 0.0, &exps(), 1e-10).unwrap(), 0.0);
        for a in [1.0, 10.0, 1e3] {
            for lambda in [0.1, 0.5, 3.0] {
                let r = rho_bar_star(a, lambda, &exps(), 1e-10).unwrap();
                assert!((0.0..=1.0).contains(&r), "{a} {lambda} {r}");
            }
        }
    }

    #[test]
    fn json_summary_fields() {
        let kg = build_kernel_grid(5.0, 32, &exps(), Kernel::Nr).unwrap();
        let sol = solve_rho(&kg, 1.0, 1e-10, 10_000).unwrap();
        let v: serde_json::Value = serde_json::from_str(&sol.summary_json().unwrap()).unwrap();
        for key in ["a", "lambda", "zeta_a", "lambda_c_a", "iterations", "residual"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
