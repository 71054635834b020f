//! Monte Carlo harness comparing finite-`n` percolation with the limiting
//! theory in each regime.
//!
//! Every replicate samples a fresh graph on a shared [`WeightSequence`]
//! from its own RNG stream; replicates run on the rayon pool and results
//! are gathered in replicate order, so reports are reproducible.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::components::{connected_components, hub_containment, l2_weight_mass, ComponentSummary};
use crate::constants::{critical_constants, DerivedExponents, ModelParams};
use crate::error::{invalid, Error, Result};
use crate::fixedpoint::zeta_infinity;
use crate::graphgen::{expected_two_step, sample_graph_replicate, two_step_count, PercolatedGraph};
use crate::limitmodel::{LimitParams, LimitSampler};
use crate::stats::{correlation, frequency, ks_two_sample, mean_se, poisson_tv};
use crate::weights::WeightSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
    LimitCompare,
    /// P(hubs 1 and 2 connected) over a λ grid.
    Scan,
    /// ℓ² stability and connectivity of the truncated limit graph.
    LimitPhase,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Subcritical => "subcritical",
            Regime::Critical => "critical",
            Regime::Supercritical => "supercritical",
            Regime::LimitCompare => "limit_compare",
            Regime::Scan => "scan",
            Regime::LimitPhase => "limit_phase",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "subcritical" => Regime::Subcritical,
            "critical" => Regime::Critical,
            "supercritical" => Regime::Supercritical,
            "limit_compare" => Regime::LimitCompare,
            "scan" => Regime::Scan,
            "limit_phase" => Regime::LimitPhase,
            other => return Err(invalid(format!("unknown regime '{other}'"))),
        })
    }
}

/// Acceptance thresholds. They are reported alongside every statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Relative error for scaled component sizes/weights and ζ.
    pub ratio: f64,
    pub tv: f64,
    pub ks: f64,
    /// Standard errors allowed between a mean and its target.
    pub se_multiple: f64,
    pub hubs_distinct: f64,
    pub c2_ratio: f64,
    pub c2_frequency: f64,
    pub containment: f64,
    pub l2_change: f64,
    pub connectivity: f64,
    /// Relative tolerance of the ζ^λ a-ladder.
    pub zeta_ladder: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            ratio: 0.15,
            tv: 0.05,
            ks: 0.1,
            se_multiple: 3.0,
            hubs_distinct: 0.9,
            c2_ratio: 0.1,
            c2_frequency: 0.9,
            containment: 0.95,
            l2_change: 0.05,
            connectivity: 0.99,
            zeta_ladder: 5e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    /// `params.lambda` is the window intensity λ (ignored by the
    /// subcritical and scan regimes).
    pub params: ModelParams,
    pub regime: Regime,
    pub replicates: usize,
    pub seed: u64,
    /// Hubs `1..=K` probed for two-step counts and component ratios.
    pub hubs: usize,
    pub truncation_m: usize,
    /// Smaller truncation for the ℓ² stability check.
    pub truncation_m_small: usize,
    pub limit_replicates: usize,
    pub epsilon0: f64,
    pub delta: f64,
    /// Multiples of λ_c for the scan regime.
    pub lambda_grid: Vec<f64>,
    /// Leading vertices that must share a component in the connectivity probe.
    pub connect_k: usize,
    pub n_grid: usize,
    pub tolerances: Tolerances,
}

impl ExperimentConfig {
    pub fn new(params: ModelParams, regime: Regime) -> Self {
        ExperimentConfig {
            params,
            regime,
            replicates: 100,
            seed: 1,
            hubs: if regime == Regime::Critical { 4 } else { 3 },
            truncation_m: 10_000,
            truncation_m_small: 1_000,
            limit_replicates: 1_000,
            epsilon0: 0.1,
            delta: 0.05,
            lambda_grid: vec![0.05, 0.25, 0.5, 0.8, 1.0, 1.25, 1.5, 2.0],
            connect_k: 10,
            n_grid: 1024,
            tolerances: Tolerances::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.replicates == 0 || self.limit_replicates == 0 {
            return Err(invalid("replicates must be at least 1"));
        }
        if self.hubs == 0 || self.hubs > self.params.n {
            return Err(invalid("hubs must lie in [1, n]"));
        }
        if self.truncation_m < 2 || self.truncation_m_small < 2 {
            return Err(invalid("truncations must be at least 2"));
        }
        if self.connect_k < 2 || self.connect_k > self.truncation_m {
            return Err(invalid("connect_k must lie in [2, truncation_m]"));
        }
        if !(self.epsilon0 > 0.0) || !(self.delta > 0.0) {
            return Err(invalid("epsilon0 and delta must be positive"));
        }
        if self.regime == Regime::Scan && self.lambda_grid.is_empty() {
            return Err(invalid("scan needs a non-empty lambda grid"));
        }
        if self.n_grid < 16 {
            return Err(invalid("n_grid must be at least 16"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub replicate: usize,
    pub quantity: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Statistic {
    pub name: String,
    pub value: f64,
    pub std_error: Option<f64>,
    pub target: Option<f64>,
    /// Human-readable acceptance rule, e.g. `|x/target - 1| <= 0.15`.
    pub rule: Option<String>,
    pub pass: Option<bool>,
}

impl Statistic {
    fn info(name: impl Into<String>, value: f64) -> Self {
        Statistic {
            name: name.into(),
            value,
            std_error: None,
            target: None,
            rule: None,
            pass: None,
        }
    }

    fn se(mut self, se: f64) -> Self {
        self.std_error = Some(se);
        self
    }

    fn target(mut self, t: f64) -> Self {
        self.target = Some(t);
        self
    }

    fn check(mut self, rule: String, pass: bool) -> Self {
        self.rule = Some(rule);
        self.pass = Some(pass);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub regime: Regime,
    pub lambda_c: f64,
    pub config: ExperimentConfig,
    pub summary: Vec<Statistic>,
    pub pass: bool,
    #[serde(skip)]
    pub records: Vec<Record>,
}

impl RegimeReport {
    fn new(cfg: &ExperimentConfig, lambda_c: f64, summary: Vec<Statistic>, records: Vec<Record>) -> Self {
        let pass = summary.iter().all(|s| s.pass != Some(false));
        RegimeReport {
            regime: cfg.regime,
            lambda_c,
            config: cfg.clone(),
            summary,
            pass,
            records,
        }
    }

    pub fn statistic(&self, name: &str) -> Option<&Statistic> {
        self.summary.iter().find(|s| s.name == name)
    }

    /// Values of one quantity in replicate order.
    pub fn series(&self, quantity: &str) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.quantity == quantity)
            .map(|r| r.value)
            .collect()
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        writeln!(out)?;
        Ok(())
    }

    /// Long-format CSV `replicate,quantity,value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "replicate,quantity,value")?;
        for r in &self.records {
            writeln!(out, "{},{},{}", r.replicate, r.quantity, r.value)?;
        }
        Ok(())
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<RegimeReport> {
    match cfg.regime {
        Regime::Subcritical => run_subcritical(cfg),
        Regime::Critical => run_critical(cfg),
        Regime::Supercritical => run_supercritical(cfg),
        Regime::LimitCompare => run_limit_compare(cfg),
        Regime::Scan => scaling_window_scan(cfg),
        Regime::LimitPhase => run_limit_phase(cfg),
    }
}

struct Setup {
    exps: DerivedExponents,
    lambda_c: f64,
    ws: WeightSequence,
}

fn setup(cfg: &ExperimentConfig) -> Result<Setup> {
    cfg.validate()?;
    let exps = cfg.params.exponents()?;
    let lambda_c = critical_constants(&exps, cfg.params.kernel)?.lambda_c;
    let ws = WeightSequence::build(&cfg.params)?;
    Ok(Setup { exps, lambda_c, ws })
}

fn expect_regime(cfg: &ExperimentConfig, regime: Regime) -> Result<()> {
    if cfg.regime != regime {
        return Err(invalid(format!("config is for regime {}, not {regime}", cfg.regime)));
    }
    Ok(())
}

fn require_window(lambda: f64, lambda_c: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda < lambda_c) {
        return Err(invalid(format!(
            "this regime needs 0 < lambda < lambda_c = {lambda_c}, got {lambda}"
        )));
    }
    Ok(())
}

fn per_replicate<T: Send>(
    cfg: &ExperimentConfig,
    ws: &WeightSequence,
    pi: f64,
    f: impl Fn(&PercolatedGraph, ComponentSummary) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let g = sample_graph_replicate(ws, cfg.params.kernel, pi, cfg.seed, r as u64)?;
            let cc = connected_components(&g, ws.weights())?;
            f(&g, cc)
        })
        .collect()
}

fn push_series(records: &mut Vec<Record>, quantity: &str, values: &[f64]) {
    records.extend(values.iter().enumerate().map(|(replicate, &value)| Record {
        replicate,
        quantity: quantity.to_string(),
        value,
    }));
}

fn ratio_stat(name: String, values: &[f64], target: f64, tol: f64) -> Statistic {
    let (m, se) = mean_se(values);
    Statistic::info(name, m)
        .se(se)
        .target(target)
        .check(format!("|mean/target - 1| <= {tol}"), (m / target - 1.0).abs() <= tol)
}

/// Subcritical regime with `λ_n = n^{-ε₀}`: component sizes scale like
/// `n^α π_n c_F i^{-α}` and component weights like `n^α c_F i^{-α}`.
pub fn run_subcritical(cfg: &ExperimentConfig) -> Result<RegimeReport> {
    expect_regime(cfg, Regime::Subcritical)?;
    let Setup { exps, lambda_c, ws } = setup(cfg)?;
    let n = cfg.params.n as f64;
    let exponent = exps.alpha - exps.eta_s - cfg.epsilon0;
    let pi = n.powf(-cfg.epsilon0 - exps.eta_s);
    let size_scale = n.powf(exps.alpha) * pi;
    // n^α π_n must grow; require a visible margin at this n
    if exponent <= 0.0 || size_scale < 10.0 {
        return Err(invalid(format!(
            "pi_n must dominate n^-alpha: n^alpha pi_n = {size_scale:.3} (exponent {exponent:.3})"
        )));
    }
    let weight_scale = n.powf(exps.alpha);
    let k = cfg.hubs;
    let rows = per_replicate(cfg, &ws, pi, |_, cc| {
        let mut row = Vec::with_capacity(2 * k + 1);
        for i in 0..k {
            row.push(cc.sizes.get(i).map_or(0.0, |&s| s as f64) / size_scale);
            row.push(cc.weights.get(i).copied().unwrap_or(0.0) / weight_scale);
        }
        row.push(if cc.same_component(0, 1) { 0.0 } else { 1.0 });
        Ok(row)
    })?;

    let tol = cfg.tolerances;
    let mut summary = vec![
        Statistic::info("pi_n", pi),
        Statistic::info("n_alpha_pi_n", size_scale),
    ];
    let mut records = Vec::new();
    for i in 0..k {
        let target = exps.c_f * ((i + 1) as f64).powf(-exps.alpha);
        let sizes: Vec<f64> = rows.iter().map(|r| r[2 * i]).collect();
        let weights: Vec<f64> = rows.iter().map(|r| r[2 * i + 1]).collect();
        let (sn, wn) = (format!("size_ratio_{}", i + 1), format!("weight_ratio_{}", i + 1));
        summary.push(ratio_stat(sn.clone(), &sizes, target, tol.ratio));
        summary.push(ratio_stat(wn.clone(), &weights, target, tol.ratio));
        push_series(&mut records, &sn, &sizes);
        push_series(&mut records, &wn, &weights);
    }
    let distinct: Vec<bool> = rows.iter().map(|r| r[2 * k] == 1.0).collect();
    let (f, se) = frequency(&distinct);
    summary.push(
        Statistic::info("hubs_distinct_frequency", f)
            .se(se)
            .check(format!(">= {}", tol.hubs_distinct), f >= tol.hubs_distinct),
    );
    push_series(&mut records, "hubs_distinct", &rows.iter().map(|r| r[2 * k]).collect::<Vec<_>>());
    Ok(RegimeReport::new(cfg, lambda_c, summary, records))
}

/// Samples `μ·𝒲(1)` (θ-weight of vertex 1's component in G_∞, rescaled to
/// the `n^{-α}W(1)` normalization).
fn limit_hub_weights(cfg: &ExperimentConfig, sampler: &LimitSampler, exps: &DerivedExponents) -> Result<Vec<f64>> {
    (0..cfg.limit_replicates)
        .into_par_iter()
        .map(|r| {
            let g = sampler.sample_g_infinity(cfg.seed, r as u64);
            let cc = connected_components(&g, sampler.thetas())?;
            Ok(exps.mu * cc.weight_of(0))
        })
        .collect()
}

fn limit_sampler(cfg: &ExperimentConfig, exps: &DerivedExponents, m: usize) -> Result<LimitSampler> {
    LimitSampler::new(LimitParams::new(*exps, cfg.params.lambda, m, cfg.params.kernel)?)
}

fn pair_name(i: usize, j: usize) -> String {
    format!("x_{}_{}", i + 1, j + 1)
}

/// Critical window `π = λ n^{-η_s}`, `0 < λ < λ_c`.
pub fn run_critical(cfg: &ExperimentConfig) -> Result<RegimeReport> {
    expect_regime(cfg, Regime::Critical)?;
    let Setup { exps, lambda_c, ws } = setup(cfg)?;
    let lambda = cfg.params.lambda;
    require_window(lambda, lambda_c)?;
    let pi = cfg.params.pi();
    let n = cfg.params.n as f64;
    let weight_scale = n.powf(exps.alpha);
    let size_scale = weight_scale * pi;
    let k = cfg.hubs.max(2);
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| ((i + 1)..k).map(move |j| (i, j))).collect();

    let rows = per_replicate(cfg, &ws, pi, |g, cc| {
        let mut row = Vec::with_capacity(pairs.len() + 2);
        for &(i, j) in &pairs {
            row.push(two_step_count(g, i, j)? as f64);
        }
        row.push(cc.weight_of(0) / weight_scale);
        row.push(cc.sizes[cc.component_of(0)] as f64 / size_scale);
        Ok(row)
    })?;

    let sampler = limit_sampler(cfg, &exps, cfg.truncation_m)?;
    let limit_w1 = limit_hub_weights(cfg, &sampler, &exps)?;

    let tol = cfg.tolerances;
    let mut summary = vec![Statistic::info("pi", pi), Statistic::info("lambda_over_lambda_c", lambda / lambda_c)];
    let mut records = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (c, &(i, j)) in pairs.iter().enumerate() {
        let name = pair_name(i, j);
        let xs: Vec<f64> = rows.iter().map(|r| r[c]).collect();
        let counts: Vec<usize> = xs.iter().map(|&x| x as usize).collect();
        let lij = sampler.lambda_ij(i + 1, j + 1);
        let (m, se) = mean_se(&xs);
        summary.push(
            Statistic::info(format!("mean_{name}"), m)
                .se(se)
                .target(lij)
                .check(
                    format!("|mean - lambda_ij| <= {} SE", tol.se_multiple),
                    (m - lij).abs() <= tol.se_multiple * se.max(f64::MIN_POSITIVE),
                ),
        );
        summary.push(Statistic::info(
            format!("finite_n_mean_{name}"),
            expected_two_step(&ws, cfg.params.kernel, pi, i, j),
        ));
        let tv = poisson_tv(&counts, lij);
        summary.push(
            Statistic::info(format!("tv_{name}"), tv)
                .target(0.0)
                .check(format!("< {}", tol.tv), tv < tol.tv),
        );
        if (i, j) == (0, 1) {
            let positive: Vec<bool> = counts.iter().map(|&x| x >= 1).collect();
            let (f, se) = frequency(&positive);
            summary.push(Statistic::info("fraction_x_1_2_positive", f).se(se));
        }
        push_series(&mut records, &name, &xs);
        columns.push(xs);
    }
    if k >= 4 {
        // X_12 and X_34 are asymptotically independent
        let c34 = pairs.iter().position(|&p| p == (2, 3)).expect("pair (3,4) present");
        let r = correlation(&columns[0], &columns[c34]);
        let bound = tol.se_multiple / (cfg.replicates as f64).sqrt();
        let pass = r.is_nan() || r.abs() <= bound;
        summary.push(
            Statistic::info("corr_x_1_2_x_3_4", r)
                .target(0.0)
                .check(format!("|r| <= {bound:.4}"), pass),
        );
    }

    let w1: Vec<f64> = rows.iter().map(|r| r[pairs.len()]).collect();
    let c1: Vec<f64> = rows.iter().map(|r| r[pairs.len() + 1]).collect();
    let (mw, sew) = mean_se(&w1);
    let (ml, sel) = mean_se(&limit_w1);
    summary.push(Statistic::info("mean_scaled_w1", mw).se(sew));
    summary.push(Statistic::info("mean_limit_w1", ml).se(sel));
    let ks = ks_two_sample(&w1, &limit_w1);
    summary.push(
        Statistic::info("ks_w1", ks)
            .target(0.0)
            .check(format!("< {}", tol.ks), ks < tol.ks),
    );
    summary.push(Statistic::info("ks_c1_vs_limit_w1", ks_two_sample(&c1, &limit_w1)));
    push_series(&mut records, "scaled_w1", &w1);
    push_series(&mut records, "scaled_c1", &c1);
    push_series(&mut records, "limit_w1", &limit_w1);
    Ok(RegimeReport::new(cfg, lambda_c, summary, records))
}

/// Supercritical `λ > λ_c`: the giant has size `≈ ζ^λ √n` and contains all
/// vertices of weight at least `n^{1/2+δ}`.
pub fn run_supercritical(cfg: &ExperimentConfig) -> Result<RegimeReport> {
    expect_regime(cfg, Regime::Supercritical)?;
    let Setup { exps, lambda_c, ws } = setup(cfg)?;
    let lambda = cfg.params.lambda;
    if lambda <= lambda_c {
        return Err(Error::Subcritical { lambda, lambda_c });
    }
    let pi = cfg.params.pi();
    let root_n = (cfg.params.n as f64).sqrt();
    let delta = cfg.delta;
    let rows = per_replicate(cfg, &ws, pi, |_, cc| {
        let c1 = cc.sizes[0] as f64;
        let c2 = cc.sizes.get(1).copied().unwrap_or(0) as f64;
        let contained = hub_containment(&cc, &ws, delta)?;
        Ok([c1 / root_n, c2 / c1, if contained { 1.0 } else { 0.0 }])
    })?;
    let ladder = zeta_infinity(lambda, &exps, cfg.params.kernel, cfg.tolerances.zeta_ladder, cfg.n_grid)?;
    let zeta = ladder.zeta_infinity;

    let tol = cfg.tolerances;
    let c1: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let ratio: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let contained: Vec<f64> = rows.iter().map(|r| r[2]).collect();
    let mut summary = vec![
        Statistic::info("pi", pi),
        Statistic::info("lambda_over_lambda_c", lambda / lambda_c),
        Statistic::info("zeta_infinity", zeta),
        Statistic::info("zeta_ladder_last_a", *ladder.a_values.last().expect("non-empty ladder")),
        Statistic::info("zeta_ladder_last_zeta_a", *ladder.zeta_a.last().expect("non-empty ladder")),
    ];
    summary.push(ratio_stat("scaled_c1".into(), &c1, zeta, tol.ratio));
    let (mr, ser) = mean_se(&ratio);
    summary.push(Statistic::info("mean_c2_over_c1", mr).se(ser));
    let small: Vec<bool> = ratio.iter().map(|&r| r < tol.c2_ratio).collect();
    let (f, se) = frequency(&small);
    summary.push(
        Statistic::info("c2_over_c1_small_frequency", f)
            .se(se)
            .check(format!("P(C2/C1 < {}) >= {}", tol.c2_ratio, tol.c2_frequency), f >= tol.c2_frequency),
    );
    let flags: Vec<bool> = contained.iter().map(|&c| c == 1.0).collect();
    let (f, se) = frequency(&flags);
    summary.push(
        Statistic::info("hub_containment_frequency", f)
            .se(se)
            .check(format!(">= {}", tol.containment), f >= tol.containment),
    );
    let mut records = Vec::new();
    push_series(&mut records, "scaled_c1", &c1);
    push_series(&mut records, "c2_over_c1", &ratio);
    push_series(&mut records, "hub_containment", &contained);
    Ok(RegimeReport::new(cfg, lambda_c, summary, records))
}

/// Distance between the law of `n^{-α}W(1)` and its limiting counterpart.
pub fn run_limit_compare(cfg: &ExperimentConfig) -> Result<RegimeReport> {
    expect_regime(cfg, Regime::LimitCompare)?;
    let Setup { exps, lambda_c, ws } = setup(cfg)?;
    require_window(cfg.params.lambda, lambda_c)?;
    let pi = cfg.params.pi();
    let weight_scale = (cfg.params.n as f64).powf(exps.alpha);
    let w1 = per_replicate(cfg, &ws, pi, |_, cc| Ok(cc.weight_of(0) / weight_scale))?;
    let sampler = limit_sampler(cfg, &exps, cfg.truncation_m)?;
    let limit_w1 = limit_hub_weights(cfg, &sampler, &exps)?;
    let ks = ks_two_sample(&w1, &limit_w1);
    let (mw, sew) = mean_se(&w1);
    let (ml, sel) = mean_se(&limit_w1);
    let summary = vec![
        Statistic::info("mean_scaled_w1", mw).se(sew),
        Statistic::info("mean_limit_w1", ml).se(sel),
        Statistic::info("ks_w1", ks)
            .target(0.0)
            .check(format!("< {}", cfg.tolerances.ks), ks < cfg.tolerances.ks),
    ];
    let mut records = Vec::new();
    push_series(&mut records, "scaled_w1", &w1);
    push_series(&mut records, "limit_w1", &limit_w1);
    Ok(RegimeReport::new(cfg, lambda_c, summary, records))
}

/// `P(vertices 1 and 2 share a component)` along `λ = f·λ_c`, `f` in
/// `cfg.lambda_grid`. Passes when the curve is non-decreasing up to two
/// standard errors.
pub fn scaling_window_scan(cfg: &ExperimentConfig) -> Result<RegimeReport> {
    expect_regime(cfg, Regime::Scan)?;
    let Setup { lambda_c, ws, .. } = setup(cfg)?;
    let mut summary = Vec::new();
    let mut records = Vec::new();
    let mut curve: Vec<(f64, f64, f64)> = Vec::new();
    for &factor in &cfg.lambda_grid {
        let params = cfg.params.with_lambda(factor * lambda_c);
        let joined = per_replicate(cfg, &ws, params.pi(), |_, cc| Ok(cc.same_component(0, 1)))?;
        let (f, se) = frequency(&joined);
        let name = format!("same_component@{factor}");
        summary.push(Statistic::info(name.clone(), f).se(se));
        let values: Vec<f64> = joined.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        push_series(&mut records, &name, &values);
        curve.push((factor, f, se));
    }
    curve.sort_by(|a, b| a.0.total_cmp(&b.0));
    let monotone = curve
        .windows(2)
        .all(|w| w[1].1 + 2.0 * (w[0].2 * w[0].2 + w[1].2 * w[1].2).sqrt() >= w[0].1);
    summary.push(
        Statistic::info("monotone", if monotone { 1.0 } else { 0.0 })
            .check("non-decreasing in lambda up to 2 SE".into(), monotone),
    );
    Ok(RegimeReport::new(cfg, lambda_c, summary, records))
}

/// Truncated G_∞(λ): below λ_c the ℓ² mass of the ordered θ-weights must be
/// stable in the truncation; above λ_c the leading vertices must be
/// connected. Durrett–Kesten connectivity is reported alongside.
pub fn run_limit_phase(cfg: &ExperimentConfig) -> Result<RegimeReport> {
    expect_regime(cfg, Regime::LimitPhase)?;
    cfg.validate()?;
    let exps = cfg.params.exponents()?;
    let lambda_c = critical_constants(&exps, cfg.params.kernel)?.lambda_c;
    let lambda = cfg.params.lambda;
    let tol = cfg.tolerances;
    let reps = cfg.limit_replicates;
    let mut summary = vec![Statistic::info("lambda_over_lambda_c", lambda / lambda_c)];
    let mut records = Vec::new();

    let l2_means = |m: usize, records: &mut Vec<Record>| -> Result<(f64, f64)> {
        let sampler = limit_sampler(cfg, &exps, m)?;
        let mass: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let g = sampler.sample_g_infinity(cfg.seed, r as u64);
                Ok(l2_weight_mass(&connected_components(&g, sampler.thetas())?, 0))
            })
            .collect::<Result<_>>()?;
        push_series(records, &format!("l2_mass@{m}"), &mass);
        Ok(mean_se(&mass))
    };

    let (small, big) = (cfg.truncation_m_small, cfg.truncation_m);
    let (ms, ses) = l2_means(small, &mut records)?;
    let (mb, seb) = l2_means(big, &mut records)?;
    summary.push(Statistic::info(format!("mean_l2_mass@{small}"), ms).se(ses));
    summary.push(Statistic::info(format!("mean_l2_mass@{big}"), mb).se(seb));
    let change = (mb / ms - 1.0).abs();
    let stat = Statistic::info("l2_mass_relative_change", change);
    summary.push(if lambda < lambda_c {
        stat.check(format!("< {}", tol.l2_change), change < tol.l2_change)
    } else {
        stat
    });

    let sampler = limit_sampler(cfg, &exps, big)?;
    let k = cfg.connect_k;
    let joined: Vec<(bool, bool)> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let (inf, dk) = sampler.sample_coupled(cfg.seed, r as u64);
            let a = connected_components(&inf, sampler.thetas())?;
            let b = connected_components(&dk, sampler.thetas())?;
            Ok(((1..k).all(|v| a.same_component(0, v)), (1..k).all(|v| b.same_component(0, v))))
        })
        .collect::<Result<_>>()?;
    let inf: Vec<bool> = joined.iter().map(|p| p.0).collect();
    let dk: Vec<bool> = joined.iter().map(|p| p.1).collect();
    let (fi, sei) = frequency(&inf);
    let (fd, sed) = frequency(&dk);
    let stat = Statistic::info(format!("first_{k}_connected_g_infinity"), fi).se(sei);
    summary.push(if lambda > lambda_c {
        stat.check(format!(">= {}", tol.connectivity), fi >= tol.connectivity)
    } else {
        stat
    });
    summary.push(Statistic::info(format!("first_{k}_connected_dk"), fd).se(sed));
    push_series(&mut records, "connected_g_infinity", &inf.iter().map(|&b| b as u8 as f64).collect::<Vec<_>>());
    push_series(&mut records, "connected_dk", &dk.iter().map(|&b| b as u8 as f64).collect::<Vec<_>>());
    Ok(RegimeReport::new(cfg, lambda_c, summary, records))
}
