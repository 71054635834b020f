//! Model parameters, the exponents derived from τ, and the constants that
//! fix the critical intensity: A_α (per kernel), B_α and λ_c.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quad;

/// Rank-1 connection kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    /// Norros–Reittu: `1 - exp(-x)`.
    Nr,
    /// Chung–Lu: `min(x, 1)`.
    Cl,
    /// Generalized random graph: `x / (1 + x)`.
    Grg,
}

impl Kernel {
    pub const ALL: [Kernel; 3] = [Kernel::Nr, Kernel::Cl, Kernel::Grg];

    /// Unpercolated connection probability as a function of `x = w_i w_j / ℓ_n`.
    #[inline]
    pub fn connect(self, x: f64) -> f64 {
        match self {
            Kernel::Nr => -(-x).exp_m1(),
            Kernel::Cl => x.min(1.0),
            Kernel::Grg => x / (1.0 + x),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Nr => "nr",
            Kernel::Cl => "cl",
            Kernel::Grg => "grg",
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nr" | "norros-reittu" => Ok(Kernel::Nr),
            "cl" | "chung-lu" => Ok(Kernel::Cl),
            "grg" => Ok(Kernel::Grg),
            other => Err(invalid(format!("unknown kernel '{other}' (expected nr, cl or grg)"))),
        }
    }
}

/// Parameters of a percolated rank-1 graph. `lambda` sets the percolation
/// probability `π_n = λ n^{-η_s}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub tau: f64,
    /// The `C` in `[1 - F](w) = C w^{-(τ-1)}`.
    pub tail_const: f64,
    pub n: usize,
    pub kernel: Kernel,
    pub lambda: f64,
}

impl ModelParams {
    pub fn new(tau: f64, tail_const: f64, n: usize, kernel: Kernel, lambda: f64) -> Result<Self> {
        let p = ModelParams {
            tau,
            tail_const,
            n,
            kernel,
            lambda,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_tau(self.tau)?;
        if !(self.tail_const > 0.0 && self.tail_const.is_finite()) {
            return Err(invalid("tail constant C must be positive"));
        }
        if self.n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(invalid("lambda must be nonnegative"));
        }
        Ok(())
    }

    pub fn exponents(&self) -> Result<DerivedExponents> {
        derive_exponents(self)
    }

    /// `π_n = λ n^{-η_s}`, clamped to 1.
    pub fn pi(&self) -> f64 {
        let eta_s = (3.0 - self.tau) / 2.0;
        (self.lambda * (self.n as f64).powf(-eta_s)).min(1.0)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 2.0 && tau < 3.0 {
        Ok(())
    } else {
        Err(invalid("tau must lie in (2,3)"))
    }
}

/// Exponents and scale constants fixed by `(τ, C)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedExponents {
    pub tau: f64,
    pub alpha: f64,
    pub rho: f64,
    pub eta: f64,
    pub eta_s: f64,
    pub beta: f64,
    pub c_f: f64,
    /// Asymptotic mean weight `c_F / (1 - α)`.
    pub mu: f64,
}

impl DerivedExponents {
    pub fn new(tau: f64, tail_const: f64) -> Result<Self> {
        check_tau(tau)?;
        if !(tail_const > 0.0 && tail_const.is_finite()) {
            return Err(invalid("tail constant C must be positive"));
        }
        let alpha = 1.0 / (tau - 1.0);
        let c_f = tail_const.powf(alpha);
        Ok(DerivedExponents {
            tau,
            alpha,
            rho: (tau - 2.0) / (tau - 1.0),
            eta: (3.0 - tau) / (tau - 1.0),
            eta_s: (3.0 - tau) / 2.0,
            beta: (tau * tau - 4.0 * tau + 5.0) / (2.0 * (tau - 1.0)),
            c_f,
            mu: c_f / (1.0 - alpha),
        })
    }

    /// `c_F^2 / μ`, the coefficient that recurs in every limiting kernel.
    pub fn kernel_scale(&self) -> f64 {
        self.c_f * self.c_f / self.mu
    }
}

pub fn derive_exponents(params: &ModelParams) -> Result<DerivedExponents> {
    DerivedExponents::new(params.tau, params.tail_const)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalConstants {
    pub a_alpha: f64,
    pub b_alpha: f64,
    pub lambda_c: f64,
    pub kernel: Kernel,
}

/// Default relative tolerance for the A_α quadrature.
pub const A_ALPHA_TOL: f64 = 1e-12;

// Below this point the integrand is replaced by its small-z expansion.
const HEAD_CUT: f64 = 1e-8;

/// Pieces of the A_α integral shared by both quadrature schemes: analytic
/// head on (0, z0], analytic tail on [X, ∞), and the integrand in between.
struct AlphaIntegral {
    kernel: Kernel,
    s: f64,
}

impl AlphaIntegral {
    fn new(kernel: Kernel, alpha: f64) -> Self {
        AlphaIntegral {
            kernel,
            s: 1.0 / alpha,
        }
    }

    fn integrand(&self, z: f64) -> f64 {
        let zs = z.powf(-self.s);
        match self.kernel {
            Kernel::Nr => -(-z).exp_m1() * zs,
            Kernel::Cl => z.min(1.0) * zs,
            Kernel::Grg => z * zs / (1.0 + z),
        }
    }

    /// ∫_0^{z0}, from the two leading terms of the small-z expansion.
    fn head(&self, z0: f64) -> f64 {
        let s = self.s;
        let first = z0.powf(2.0 - s) / (2.0 - s);
        match self.kernel {
            Kernel::Nr => first - 0.5 * z0.powf(3.0 - s) / (3.0 - s),
            Kernel::Cl => first,
            Kernel::Grg => first - z0.powf(3.0 - s) / (3.0 - s),
        }
    }

    /// Upper cut `X` beyond which the tail is analytic to the requested
    /// relative accuracy.
    fn tail_cut(&self, rel_tol: f64) -> f64 {
        match self.kernel {
            // dropped piece ∫_X^∞ e^{-z} z^{-s} dz ≤ e^{-X} X^{-s}
            Kernel::Nr => (40.0f64).max(10.0 - rel_tol.ln()),
            Kernel::Cl => 1.0,
            Kernel::Grg => 1e3,
        }
    }

    fn tail(&self, x: f64) -> f64 {
        let s = self.s;
        match self.kernel {
            Kernel::Nr | Kernel::Cl => x.powf(1.0 - s) / (s - 1.0),
            Kernel::Grg => {
                // z/(1+z) = Σ_k (-1)^k z^{-k} for z > 1
                let mut sum = 0.0;
                for k in 0..64 {
                    let kf = k as f64;
                    let term = x.powf(1.0 - s - kf) / (s + kf - 1.0);
                    sum += if k % 2 == 0 { term } else { -term };
                    if term < 1e-18 * sum.abs() {
                        break;
                    }
                }
                sum
            }
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.5 && alpha < 1.0 {
        Ok(())
    } else {
        Err(invalid("alpha must lie in (1/2,1)"))
    }
}

/// A_α for the given kernel by adaptive Gauss–Kronrod with analytic head
/// and tail pieces.
pub fn a_alpha(kernel: Kernel, alpha: f64, rel_tol: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(rel_tol > 0.0) {
        return Err(invalid("rel_tol must be positive"));
    }
    let integral = AlphaIntegral::new(kernel, alpha);
    let x = integral.tail_cut(rel_tol);
    let analytic = integral.head(HEAD_CUT) + integral.tail(x);
    let body = quad::adaptive(
        |z| integral.integrand(z),
        &quad::decade_breaks(HEAD_CUT, x),
        0.25 * rel_tol,
        0.0,
        20_000,
    )?;
    Ok(analytic + body.value)
}

/// A_α by a fixed 32-point Gauss–Legendre rule on unit panels in `ln z`.
/// Kept as an independent cross-check of [`a_alpha`].
pub fn a_alpha_fixed_rule(kernel: Kernel, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let integral = AlphaIntegral::new(kernel, alpha);
    let z0: f64 = 1e-10;
    let x = integral.tail_cut(1e-16);
    let (t0, t1) = (z0.ln(), x.ln());
    let panels = ((t1 - t0) * 2.0).ceil() as usize;
    let breaks: Vec<f64> = (0..=panels)
        .map(|k| t0 + (t1 - t0) * k as f64 / panels as f64)
        .collect();
    let rule = quad::gauss_legendre(32);
    let body = quad::fixed_panels(
        |t| {
            let z = t.exp();
            integral.integrand(z) * z
        },
        &breaks,
        &rule,
    );
    Ok(integral.head(z0) + body + integral.tail(x))
}

/// `B_α = c_F^{2/α} A_α / (α μ^{1/α})`.
pub fn b_alpha(exps: &DerivedExponents, a_alpha: f64) -> f64 {
    let inv = 1.0 / exps.alpha;
    exps.c_f.powf(2.0 * inv) * a_alpha / (exps.alpha * exps.mu.powf(inv))
}

/// Critical constants for `(τ, C, kernel)`: `λ_c = sqrt(η / (4 B_α))`.
pub fn lambda_crit(params: &ModelParams) -> Result<CriticalConstants> {
    let exps = derive_exponents(params)?;
    critical_constants(&exps, params.kernel)
}

pub fn critical_constants(exps: &DerivedExponents, kernel: Kernel) -> Result<CriticalConstants> {
    let a = a_alpha(kernel, exps.alpha, A_ALPHA_TOL)?;
    let b = b_alpha(exps, a);
    Ok(CriticalConstants {
        a_alpha: a,
        b_alpha: b,
        lambda_c: (exps.eta / (4.0 * b)).sqrt(),
        kernel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::gamma;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        ((a - b) / b).abs() <= rel
    }

    // Closed forms: integration by parts (NR), elementary antiderivative
    // (CL) and the Beta integral π / sin(π s) (GRG).
    fn a_alpha_closed(kernel: Kernel, alpha: f64) -> f64 {
        let s = 1.0 / alpha;
        match kernel {
            Kernel::Nr => gamma(2.0 - s) / (s - 1.0),
            Kernel::Cl => 1.0 / (2.0 - s) + 1.0 / (s - 1.0),
            Kernel::Grg => std::f64::consts::PI / (std::f64::consts::PI * (2.0 - s)).sin(),
        }
    }

    #[test]
    fn exponents_at_tau_2_5() {
        let e = DerivedExponents::new(2.5, 1.0).unwrap();
        assert!((e.alpha - 2.0 / 3.0).abs() < 1e-15);
        assert!((e.rho - 1.0 / 3.0).abs() < 1e-15);
        assert!((e.eta - 1.0 / 3.0).abs() < 1e-15);
        assert!((e.eta_s - 0.25).abs() < 1e-15);
        assert!((e.beta - 1.25 / 3.0).abs() < 1e-15);
        assert_eq!(e.c_f, 1.0);
        assert!((e.mu - 3.0).abs() < 1e-14);
    }

    #[test]
    fn exponents_at_tau_2_2() {
        let e = DerivedExponents::new(2.2, 1.0).unwrap();
        assert!((e.alpha - 0.833_333_333_333).abs() < 1e-9);
        assert!((e.eta_s - 0.4).abs() < 1e-12);
        assert!((e.beta - 0.433_333_333_333).abs() < 1e-9);
    }

    #[test]
    fn tail_constant_sets_c_f() {
        let e = DerivedExponents::new(2.5, 8.0).unwrap();
        assert!((e.c_f - 4.0).abs() < 1e-12);
        assert!((e.mu - 12.0).abs() < 1e-11);
    }

    #[test]
    fn rejects_tau_outside_open_interval() {
        for tau in [2.0, 3.0, 3.1, 1.5, f64::NAN] {
            assert!(DerivedExponents::new(tau, 1.0).is_err(), "{tau}");
        }
        assert!(ModelParams::new(2.5, 1.0, 0, Kernel::Nr, 0.1).is_err());
        assert!(ModelParams::new(2.5, -1.0, 10, Kernel::Nr, 0.1).is_err());
        assert!(ModelParams::new(2.5, 1.0, 10, Kernel::Nr, -0.1).is_err());
    }

    #[test]
    fn a_alpha_matches_closed_forms_at_two_thirds() {
        let alpha = 2.0 / 3.0;
        let nr = a_alpha(Kernel::Nr, alpha, 1e-12).unwrap();
        assert!(close(nr, 2.0 * std::f64::consts::PI.sqrt(), 1e-10), "{nr}");
        let cl = a_alpha(Kernel::Cl, alpha, 1e-12).unwrap();
        assert!(close(cl, 4.0, 1e-10), "{cl}");
        let grg = a_alpha(Kernel::Grg, alpha, 1e-12).unwrap();
        assert!(close(grg, std::f64::consts::PI, 1e-10), "{grg}");
    }

    #[test]
    fn two_schemes_agree_over_alpha_grid() {
        for k in 0..9 {
            let alpha = 0.55 + 0.05 * k as f64;
            for kernel in Kernel::ALL {
                let adaptive = a_alpha(kernel, alpha, 1e-12).unwrap();
                let fixed = a_alpha_fixed_rule(kernel, alpha).unwrap();
                let exact = a_alpha_closed(kernel, alpha);
                assert!(close(adaptive, fixed, 1e-8), "{kernel} {alpha}: {adaptive} vs {fixed}");
                assert!(close(adaptive, exact, 1e-9), "{kernel} {alpha}: {adaptive} vs {exact}");
            }
        }
    }

    #[test]
    fn lambda_c_chain_at_tau_2_5() {
        let p = ModelParams::new(2.5, 1.0, 1000, Kernel::Nr, 0.0).unwrap();
        let cc = lambda_crit(&p).unwrap();
        assert!((cc.b_alpha - 1.023_327).abs() < 1e-6, "{}", cc.b_alpha);
        assert!((cc.lambda_c - 0.285_366).abs() < 1e-6, "{}", cc.lambda_c);
        let exps = p.exponents().unwrap();
        let direct = (exps.eta / (4.0 * cc.b_alpha)).sqrt();
        assert!(((cc.lambda_c - direct) / direct).abs() < 1e-12);
    }

    #[test]
    fn chung_lu_critical_value_scales_with_a_alpha() {
        let nr = lambda_crit(&ModelParams::new(2.5, 1.0, 10, Kernel::Nr, 0.0).unwrap()).unwrap();
        let cl = lambda_crit(&ModelParams::new(2.5, 1.0, 10, Kernel::Cl, 0.0).unwrap()).unwrap();
        let expected = nr.lambda_c * (nr.a_alpha / cl.a_alpha).sqrt();
        assert!(close(cl.lambda_c, expected, 1e-12));
        assert!(close(cl.lambda_c, 0.285_366 * (3.544_907_7f64 / 4.0).sqrt(), 1e-5));
    }

    #[test]
    fn doubling_tail_constant_scales_lambda_c() {
        for tau in [2.2, 2.5, 2.8] {
            let e1 = DerivedExponents::new(tau, 1.3).unwrap();
            let e2 = DerivedExponents::new(tau, 2.6).unwrap();
            let f = 2f64.powf(1.0 / (tau - 1.0));
            assert!(close(e2.c_f / e1.c_f, f, 1e-12));
            assert!(close(e2.mu / e1.mu, f, 1e-12));
            let l1 = critical_constants(&e1, Kernel::Nr).unwrap().lambda_c;
            let l2 = critical_constants(&e2, Kernel::Nr).unwrap().lambda_c;
            let alpha = e1.alpha;
            let composite = 2f64.powf(-(1.0 / (tau - 1.0)) / alpha) * f.powf(1.0 / (2.0 * alpha));
            assert!(close(l2 / l1, composite, 1e-10), "{} vs {}", l2 / l1, composite);
        }
    }

    #[test]
    fn tail_constant_eight_gives_quarter_power_of_c_f() {
        // λ_c ∝ c_F^{-1/α} μ^{1/(2α)}; with μ ∝ c_F the net factor is c_F^{-1/(2α)}
        let base = critical_constants(&DerivedExponents::new(2.5, 1.0).unwrap(), Kernel::Nr).unwrap();
        let scaled = critical_constants(&DerivedExponents::new(2.5, 8.0).unwrap(), Kernel::Nr).unwrap();
        assert!(close(scaled.lambda_c / base.lambda_c, 4f64.powf(-0.75), 1e-10));
    }

    #[test]
    fn kernel_parse_round_trip() {
        for k in Kernel::ALL {
            assert_eq!(k.name().parse::<Kernel>().unwrap(), k);
        }
        assert!("foo".parse::<Kernel>().is_err());
    }

    #[test]
    fn kernel_connect_values() {
        assert_eq!(Kernel::Nr.connect(0.0), 0.0);
        assert!((Kernel::Grg.connect(1.0) - 0.5).abs() < 1e-15);
        assert_eq!(Kernel::Cl.connect(2.0), 1.0);
    }
}
