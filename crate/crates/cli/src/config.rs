//! Flat `key = value` config files with `#` comments.

use std::collections::BTreeMap;
use std::str::FromStr;

use tinygiant::constants::{critical_constants, Kernel, ModelParams};
use tinygiant::experiments::{ExperimentConfig, Regime};

use crate::CliError;

/// Parsed entries. Every key must be consumed by the caller, otherwise
/// [`Entries::finish`] reports it as unknown.
#[derive(Debug, Default)]
pub struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut map = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Usage(format!("line {}: expected key = value", no + 1)));
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(CliError::Usage(format!("line {}: empty key", no + 1)));
            }
            if map.insert(k.to_string(), (no + 1, v.to_string())).is_some() {
                return Err(CliError::Usage(format!("line {}: duplicate key '{k}'", no + 1)));
            }
        }
        Ok(Entries { map })
    }

    pub fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError> {
        match self.map.remove(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("line {line}: cannot parse {key} = '{v}'"))),
        }
    }

    fn take_list(&mut self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        match self.map.remove(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("line {line}: cannot parse {key} = '{v}'"))),
        }
    }

    pub fn finish(self) -> Result<(), CliError> {
        match self.map.into_iter().next() {
            None => Ok(()),
            Some((k, (line, _))) => Err(CliError::Usage(format!("line {line}: unknown key '{k}'"))),
        }
    }
}

fn kernel_of(name: Option<String>) -> Result<Kernel, CliError> {
    Ok(match name {
        Some(s) => s.parse()?,
        None => Kernel::Nr,
    })
}

/// Resolves `lambda` / `lambda_factor` (a multiple of λ_c) into λ.
pub fn resolve_lambda(
    lambda: Option<f64>,
    factor: Option<f64>,
    tau: f64,
    tail_const: f64,
    kernel: Kernel,
) -> Result<Option<f64>, CliError> {
    match (lambda, factor) {
        (Some(_), Some(_)) => Err(CliError::Usage("give either lambda or lambda_factor, not both".into())),
        (Some(l), None) => Ok(Some(l)),
        (None, Some(f)) => {
            let exps = tinygiant::DerivedExponents::new(tau, tail_const)?;
            Ok(Some(f * critical_constants(&exps, kernel)?.lambda_c))
        }
        (None, None) => Ok(None),
    }
}

/// Builds an [`ExperimentConfig`] from config-file entries.
pub fn experiment_config(mut e: Entries) -> Result<ExperimentConfig, CliError> {
    let regime: Regime = match e.take::<String>("regime")? {
        Some(r) => r.parse()?,
        None => return Err(CliError::Usage("config needs a 'regime' key".into())),
    };
    let tau = e.take("tau")?.unwrap_or(2.5);
    let tail_const = e.take("C")?.unwrap_or(1.0);
    let n = e.take("n")?.unwrap_or(10_000);
    let kernel = kernel_of(e.take("kernel")?)?;
    let lambda = resolve_lambda(e.take("lambda")?, e.take("lambda_factor")?, tau, tail_const, kernel)?;
    let needs_lambda = !matches!(regime, Regime::Subcritical | Regime::Scan);
    let lambda = match lambda {
        Some(l) => l,
        None if needs_lambda => {
            return Err(CliError::Usage(format!("regime {regime} needs lambda or lambda_factor")))
        }
        None => 0.0,
    };
    let params = ModelParams::new(tau, tail_const, n, kernel, lambda)?;
    let mut cfg = ExperimentConfig::new(params, regime);

    macro_rules! set {
        ($($key:literal => $field:expr),* $(,)?) => {
            $(if let Some(v) = e.take($key)? { $field = v; })*
        };
    }
    set! {
        "replicates" => cfg.replicates,
        "seed" => cfg.seed,
        "hubs" => cfg.hubs,
        "truncation_m" => cfg.truncation_m,
        "truncation_m_small" => cfg.truncation_m_small,
        "limit_replicates" => cfg.limit_replicates,
        "epsilon0" => cfg.epsilon0,
        "delta" => cfg.delta,
        "connect_k" => cfg.connect_k,
        "n_grid" => cfg.n_grid,
        "tol_ratio" => cfg.tolerances.ratio,
        "tol_tv" => cfg.tolerances.tv,
        "tol_ks" => cfg.tolerances.ks,
        "tol_se_multiple" => cfg.tolerances.se_multiple,
        "tol_hubs_distinct" => cfg.tolerances.hubs_distinct,
        "tol_c2_ratio" => cfg.tolerances.c2_ratio,
        "tol_c2_frequency" => cfg.tolerances.c2_frequency,
        "tol_containment" => cfg.tolerances.containment,
        "tol_l2_change" => cfg.tolerances.l2_change,
        "tol_connectivity" => cfg.tolerances.connectivity,
        "tol_zeta_ladder" => cfg.tolerances.zeta_ladder,
    }
    if let Some(grid) = e.take_list("lambda_grid")? {
        cfg.lambda_grid = grid;
    }
    e.finish()?;
    cfg.validate()?;
    Ok(cfg)
}

/// Graph parameters for `simulate`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulateConfig {
    pub params: ModelParams,
    /// Explicit π; otherwise `λ n^{-η_s}`.
    pub pi: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Default)]
pub struct SimulateInputs {
    pub tau: Option<f64>,
    pub tail_const: Option<f64>,
    pub n: Option<usize>,
    pub kernel: Option<String>,
    pub lambda: Option<f64>,
    pub lambda_factor: Option<f64>,
    pub pi: Option<f64>,
    pub seed: Option<u64>,
}

/// Flags override config entries; unset values fall back to defaults.
pub fn simulate_config(flags: SimulateInputs, mut e: Entries) -> Result<SimulateConfig, CliError> {
    let tau = flags.tau.or(e.take("tau")?).unwrap_or(2.5);
    let tail_const = flags.tail_const.or(e.take("C")?).unwrap_or(1.0);
    let n = flags.n.or(e.take("n")?).unwrap_or(10_000);
    let kernel = kernel_of(flags.kernel.or(e.take("kernel")?))?;
    let cfg_lambda: Option<f64> = e.take("lambda")?;
    let cfg_factor: Option<f64> = e.take("lambda_factor")?;
    let pi = flags.pi.or(e.take("pi")?);
    let seed = flags.seed.or(e.take("seed")?).unwrap_or(1);
    e.finish()?;
    // a flag beats either config key
    let (lambda, factor) = if flags.lambda.is_some() || flags.lambda_factor.is_some() {
        (flags.lambda, flags.lambda_factor)
    } else {
        (cfg_lambda, cfg_factor)
    };
    let lambda = resolve_lambda(lambda, factor, tau, tail_const, kernel)?;
    if let Some(p) = pi {
        if !(0.0..=1.0).contains(&p) {
            return Err(CliError::Usage(format!("pi must lie in [0,1], got {p}")));
        }
    }
    let lambda = match (lambda, pi) {
        (Some(l), _) => l,
        (None, Some(_)) => 0.0,
        (None, None) => return Err(CliError::Usage("give lambda, lambda_factor or pi".into())),
    };
    let params = ModelParams::new(tau, tail_const, n, kernel, lambda)?;
    Ok(SimulateConfig { params, pi, seed })
}
