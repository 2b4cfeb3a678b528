//! Finite-surrogate checks of the analytic statements.
//!
//! Every check produces a [`CheckReport`]: the minimum margin over its sweep (positive means
//! the inequality held with room to spare), the first few failing points, the tolerances in
//! force and a [`Status`]. Numerical error estimates enter as slack: a point fails only when
//! its margin is negative by more than the certified error.
//!
//! Reports contain no timings, so the serialised output of [`run_suite`] is a pure function
//! of its configuration and seeds.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use rand_distr::Beta;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::constants::{
    gamma_quadratic_bound, gamma_series, harnack_exponent_1d, k_ab, kernel_rate, rho,
    ParamSequence, SequenceRule, WFParams,
};
use crate::error::Result;
use crate::gem::{
    ergodicity_bound, phi, product_harnack_bound, product_kernel, psi, CubePoint, SimplexPoint,
};
use crate::sim::{coupling_summaries, girsanov_bound, mc_expectations, path_rng, stationary_samples, Scheme};
use crate::spectral::{ball_volume, gauss_beta, IntervalRules, OrthoBasis};
use crate::stats::{chebyshev_unit_grid, ks_distance, lin_grid, log_grid, ls_slope};

/// At most this many failing points are listed in a report.
pub const MAX_LISTED_FAILURES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    /// Process exit code: 0 pass, 1 fail, 2 inconclusive.
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Inconclusive => 2,
        }
    }

    /// The more severe of two statuses (`Fail` over `Inconclusive` over `Pass`).
    pub fn worst(self, other: Status) -> Status {
        use Status::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => Pass,
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub params: BTreeMap<String, Value>,
    /// Human-readable description of the sweep.
    pub grid: String,
    /// Minimum margin over the sweep; always finite (`f64::MIN` stands for "undefined").
    pub margin: f64,
    pub failures: Vec<String>,
    pub failure_count: usize,
    pub tolerances: BTreeMap<String, f64>,
    pub status: Status,
    pub details: BTreeMap<String, Value>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    fn errored(name: &str, err: impl std::fmt::Display) -> Self {
        Self {
            name: name.into(),
            params: BTreeMap::new(),
            grid: String::new(),
            margin: f64::MIN,
            failures: vec![format!("error: {err}")],
            failure_count: 1,
            tolerances: BTreeMap::new(),
            status: Status::Fail,
            details: BTreeMap::new(),
        }
    }
}

/// Accumulates margins and failures over a sweep.
#[derive(Debug)]
struct Tally {
    name: &'static str,
    margin: f64,
    checked: usize,
    failures: Vec<String>,
    failure_count: usize,
    inconclusive: Vec<String>,
    params: BTreeMap<String, Value>,
    tolerances: BTreeMap<String, f64>,
    details: BTreeMap<String, Value>,
    grid: String,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            margin: f64::INFINITY,
            checked: 0,
            failures: Vec::new(),
            failure_count: 0,
            inconclusive: Vec::new(),
            params: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            details: BTreeMap::new(),
            grid: String::new(),
        }
    }

    /// Records a point; it fails when `margin < −slack` or the margin is not finite.
    fn check(&mut self, margin: f64, slack: f64, what: impl FnOnce() -> String) {
        self.checked += 1;
        let m = if margin.is_nan() { f64::MIN } else { margin.max(f64::MIN) };
        self.margin = self.margin.min(m);
        if !(margin.is_finite() && margin >= -slack.max(0.0)) {
            self.fail(format!("{} (margin {margin:.3e})", what()));
        }
    }

    fn fail(&mut self, msg: String) {
        self.failure_count += 1;
        if self.failures.len() < MAX_LISTED_FAILURES {
            self.failures.push(msg);
        }
    }

    fn error(&mut self, context: String, err: impl std::fmt::Display) {
        self.margin = f64::MIN;
        self.fail(format!("{context}: {err}"));
    }

    fn undecided(&mut self, msg: String) {
        if self.inconclusive.len() < MAX_LISTED_FAILURES {
            self.inconclusive.push(msg);
        }
    }

    fn param(&mut self, key: &str, v: impl Serialize) {
        self.params.insert(key.into(), json!(v));
    }

    fn tol(&mut self, key: &str, v: f64) {
        self.tolerances.insert(key.into(), v);
    }

    fn detail(&mut self, key: &str, v: impl Serialize) {
        self.details.insert(key.into(), json!(v));
    }

    fn finish(mut self) -> CheckReport {
        if self.checked == 0 && self.failure_count == 0 {
            self.fail("no points were checked".into());
        }
        if self.checked == 0 {
            self.margin = f64::MIN;
        }
        let status = if self.failure_count > 0 {
            Status::Fail
        } else if !self.inconclusive.is_empty() {
            Status::Inconclusive
        } else {
            Status::Pass
        };
        if !self.inconclusive.is_empty() {
            self.details.insert("inconclusive".into(), json!(self.inconclusive));
        }
        self.details.insert("points_checked".into(), json!(self.checked));
        CheckReport {
            name: self.name.into(),
            params: self.params,
            grid: self.grid,
            margin: self.margin,
            failures: self.failures,
            failure_count: self.failure_count,
            tolerances: self.tolerances,
            status,
            details: self.details,
        }
    }
}

fn ab(p: WFParams) -> String {
    format!("(a={}, b={})", p.a(), p.b())
}

fn pair(a: f64, b: f64) -> WFParams {
    WFParams::new(a, b).expect("positive literals")
}

/// Points `sin²(πj / (2(n − 1)))`, `j = 0..n`: evenly spaced in the intrinsic distance.
pub fn intrinsic_grid(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| (PI * j as f64 / (2.0 * (n - 1) as f64)).sin().powi(2))
        .collect()
}

/// Strictly positive test functions for the Harnack inequalities, including smoothed
/// indicators concentrated near each endpoint and in the middle.
pub fn harnack_witnesses() -> Vec<(&'static str, fn(f64) -> f64)> {
    vec![
        ("1", |_| 1.0),
        ("1+x", |x| 1.0 + x),
        ("2-x", |x| 2.0 - x),
        ("1+x^2", |x| 1.0 + x * x),
        ("0.5+x(1-x)", |x| 0.5 + x * (1.0 - x)),
        ("1+(2x-1)^2", |x| 1.0 + (2.0 * x - 1.0).powi(2)),
        ("0.1+x^3", |x| 0.1 + x.powi(3)),
        ("0.05+x^8", |x| 0.05 + x.powi(8)),
        ("0.05+(1-x)^8", |x| 0.05 + (1.0 - x).powi(8)),
        ("0.05+(4x(1-x))^4", |x| 0.05 + (4.0 * x * (1.0 - x)).powi(4)),
        ("0.02+x^4(1-x)^2*20", |x| 0.02 + 20.0 * x.powi(4) * (1.0 - x).powi(2)),
        ("3-2x+x^3", |x| 3.0 - 2.0 * x + x.powi(3)),
    ]
}

// ---------------------------------------------------------------------------------------
// Configuration

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralConfig {
    pub params: Vec<WFParams>,
    pub n: usize,
    pub times: Vec<f64>,
    pub orthonormality_tol: f64,
    pub eigen_tol: f64,
    pub normalization_tol: f64,
    /// Chapman–Kolmogorov residuals may reach this multiple of the combined error bound.
    pub ck_factor: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        let v = [0.25, 0.5, 1.0, 2.0];
        Self {
            params: v.iter().flat_map(|&a| v.iter().map(move |&b| pair(a, b))).collect(),
            n: 60,
            times: vec![0.1, 0.5, 1.0, 2.0],
            orthonormality_tol: 1e-10,
            eigen_tol: 1e-8,
            normalization_tol: 1e-8,
            ck_factor: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnackConfig {
    pub params: Vec<WFParams>,
    pub p: Vec<f64>,
    pub t: Vec<f64>,
    /// Number of points of the intrinsic grid.
    pub grid: usize,
    pub n_basis: usize,
    /// Relative numerical slack above which a point is inconclusive.
    pub slack_limit: f64,
}

impl Default for HarnackConfig {
    fn default() -> Self {
        Self {
            params: vec![pair(0.5, 0.5), pair(0.5, 1.0)],
            p: vec![1.5, 2.0, 4.0],
            t: vec![0.1, 0.5, 2.0],
            grid: 33,
            n_basis: 80,
            slack_limit: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelBoundsConfig {
    pub pointwise_params: Vec<WFParams>,
    pub pointwise_t: Vec<f64>,
    pub grid: usize,
    pub n_basis: usize,
    pub slope_params: Vec<WFParams>,
    pub short_t: (f64, f64),
    pub short_points: usize,
    pub short_n_basis: usize,
    pub short_tol: f64,
    pub long_t: (f64, f64),
    pub long_points: usize,
    pub long_n_basis: usize,
    pub long_tol: f64,
    pub diagonal_grid: usize,
}

impl Default for KernelBoundsConfig {
    fn default() -> Self {
        Self {
            pointwise_params: vec![pair(0.5, 0.5), pair(0.5, 1.0)],
            pointwise_t: vec![0.1, 0.5, 2.0],
            grid: 33,
            n_basis: 80,
            slope_params: vec![pair(0.5, 0.5), pair(1.0, 0.5), pair(1.0, 1.0)],
            short_t: (1e-3, 1e-1),
            short_points: 9,
            short_n_basis: 200,
            short_tol: 0.10,
            long_t: (2.0, 8.0),
            long_points: 13,
            long_n_basis: 40,
            long_tol: 0.05,
            diagonal_grid: 257,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BallVolumeConfig {
    pub params: Vec<WFParams>,
    pub t: (f64, f64),
    pub t_points: usize,
    pub x_points: usize,
    pub c0_min: f64,
    pub ratio_max: f64,
}

impl Default for BallVolumeConfig {
    fn default() -> Self {
        Self {
            params: vec![pair(0.5, 0.5), pair(0.5, 1.0), pair(0.125, 1.0), pair(1.0, 1.0)],
            t: (1e-4, 1e-1),
            t_points: 13,
            x_points: 65,
            c0_min: 1e-3,
            ratio_max: 50.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoincareConfig {
    pub params: Vec<WFParams>,
    pub n_random: usize,
    pub degree: usize,
    pub seed: u64,
    pub tol: f64,
    pub equality_tol: f64,
}

impl Default for PoincareConfig {
    fn default() -> Self {
        Self {
            params: vec![pair(0.5, 0.5), pair(0.125, 1.0), pair(1.0, 0.125), pair(2.0, 3.0)],
            n_random: 100,
            degree: 8,
            seed: 7,
            tol: 1e-10,
            equality_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuperPoincareConfig {
    pub params: Vec<WFParams>,
    pub r: (f64, f64),
    pub r_points: usize,
    pub eps_min: f64,
    pub eps_points: usize,
    pub slope_tol: f64,
    pub moment_eps: (f64, f64),
    pub moment_points: usize,
    pub moment_tol: f64,
    pub quad_nodes: usize,
}

impl Default for SuperPoincareConfig {
    fn default() -> Self {
        Self {
            params: vec![pair(0.5, 0.5), pair(0.125, 1.0), pair(1.0, 0.125)],
            r: (1e-4, 1e-1),
            r_points: 13,
            eps_min: 1e-7,
            eps_points: 300,
            slope_tol: 0.10,
            moment_eps: (1e-4, 1e-2),
            moment_points: 9,
            moment_tol: 0.05,
            quad_nodes: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CouplingConfig {
    pub params: WFParams,
    pub x0: f64,
    pub y0: f64,
    pub horizon: f64,
    pub p: f64,
    /// Step sizes, coarsest first; the criteria apply to the last one.
    pub dt: Vec<f64>,
    pub n_paths: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub min_coupled: f64,
    pub max_violation: f64,
    /// Inconclusive when the standard error exceeds this fraction of the bound.
    pub se_fraction: f64,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        Self {
            params: pair(0.5, 0.5),
            x0: 0.1,
            y0: 0.9,
            horizon: 2.0,
            p: 2.0,
            dt: vec![1e-3, 1e-4],
            n_paths: 10_000,
            seed: 11,
            scheme: Scheme::Lamperti,
            min_coupled: 0.99,
            max_violation: 0.01,
            se_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub params: WFParams,
    pub x0: f64,
    pub times: Vec<f64>,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub scheme: Scheme,
    /// Weak-error allowance `C·dt`.
    pub c_dt: f64,
    pub n_basis: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            params: pair(0.5, 0.5),
            x0: 0.3,
            times: vec![0.25, 0.5, 1.0, 2.0],
            dt: 1e-3,
            n_paths: 20_000,
            seed: 13,
            scheme: Scheme::ProjectedEuler,
            c_dt: 1.0,
            n_basis: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StationarityConfig {
    pub params: WFParams,
    pub x0: f64,
    pub horizon: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub burn_in: f64,
    pub thin: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub ks_tol: f64,
}

impl Default for StationarityConfig {
    fn default() -> Self {
        Self {
            params: pair(0.5, 0.5),
            x0: 0.5,
            horizon: 200.0,
            dt: 1e-4,
            n_paths: 200,
            burn_in: 10.0,
            thin: 100,
            seed: 17,
            scheme: Scheme::ProjectedEuler,
            ks_tol: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProductHarnackConfig {
    pub alpha: f64,
    pub theta: f64,
    pub n: usize,
    pub p: f64,
    pub t: f64,
    pub n_basis: usize,
    pub slack_limit: f64,
}

impl Default for ProductHarnackConfig {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            theta: 1.0,
            n: 3,
            p: 2.0,
            t: 0.5,
            n_basis: 40,
            slack_limit: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProductEnvelopeConfig {
    pub alpha: f64,
    pub theta: f64,
    pub n: usize,
    /// Coordinates beyond `n` evaluated exactly and compared against the envelope.
    pub extra: usize,
    pub times: Vec<f64>,
    pub n_pairs: usize,
    pub n_basis: usize,
    pub seed: u64,
}

impl Default for ProductEnvelopeConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            theta: 1.0,
            n: 3,
            extra: 10,
            times: vec![0.5, 1.0, 2.0],
            n_pairs: 5,
            n_basis: 40,
            seed: 19,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GammaConfig {
    /// `(α, θ)` pairs of two-parameter sequences.
    pub sequences: Vec<(f64, f64)>,
    pub t: (f64, f64),
    pub t_points: usize,
}

impl Default for GammaConfig {
    fn default() -> Self {
        Self {
            sequences: vec![(0.5, 0.0), (0.5, 1.0)],
            t: (1e-2, 1.0),
            t_points: 161,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoundtripConfig {
    pub n_points: usize,
    pub dim: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for RoundtripConfig {
    fn default() -> Self {
        Self {
            n_points: 10_000,
            dim: 10,
            seed: 23,
            tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErgodicityConfig {
    pub alpha: f64,
    pub theta: f64,
    pub n: usize,
    /// Fit window; late enough that the second eigenmode has died out.
    pub t: (f64, f64),
    pub t_points: usize,
    pub n_basis: usize,
    pub grid: usize,
    pub slope_tol: f64,
}

impl Default for ErgodicityConfig {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            theta: 1.0,
            n: 3,
            t: (6.0, 16.0),
            t_points: 13,
            n_basis: 30,
            grid: 129,
            slope_tol: 0.05,
        }
    }
}

/// Parameters of every check; the defaults are the acceptance settings.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub spectral: SpectralConfig,
    pub harnack: HarnackConfig,
    pub kernel_bounds: KernelBoundsConfig,
    pub ball_volume: BallVolumeConfig,
    pub poincare: PoincareConfig,
    pub super_poincare: SuperPoincareConfig,
    pub coupling: CouplingConfig,
    pub mc: McConfig,
    pub stationarity: StationarityConfig,
    pub product_harnack: ProductHarnackConfig,
    pub product_envelopes: ProductEnvelopeConfig,
    pub gamma: GammaConfig,
    pub roundtrip: RoundtripConfig,
    pub ergodicity: ErgodicityConfig,
}

/// Acceptance criteria and the reports each one is decided by.
pub const CRITERIA: &[(u8, &str, &[&str])] = &[
    (1, "spectral oracle validity", &["spectral_validity"]),
    (2, "one-dimensional Harnack inequality", &["harnack_1d"]),
    (
        3,
        "heat kernel bounds and exponents",
        &["kernel_bounds_pointwise", "kernel_short_time_slope", "kernel_long_time_slope"],
    ),
    (4, "coupling by change of measure", &["coupling"]),
    (5, "simulation against the oracle", &["stationarity", "mc_vs_spectral"]),
    (6, "super-Poincaré rate", &["super_poincare"]),
    (
        7,
        "infinite-dimensional statements",
        &[
            "product_harnack",
            "product_envelopes",
            "gamma_quadratic",
            "phi_psi_roundtrip",
            "ergodicity_decay",
        ],
    ),
];

// ---------------------------------------------------------------------------------------
// One-dimensional oracle checks

pub fn check_spectral_validity(cfg: &SpectralConfig) -> CheckReport {
    let mut tally = Tally::new("spectral_validity");
    tally.param("params", &cfg.params);
    tally.param("n", cfg.n);
    tally.param("times", &cfg.times);
    tally.tol("orthonormality", cfg.orthonormality_tol);
    tally.tol("eigen_residual", cfg.eigen_tol);
    tally.tol("normalization", cfg.normalization_tol);
    tally.tol("ck_factor", cfg.ck_factor);
    tally.grid = "x in 9 even points, (x, y) pairs on {0, .2, .5, .9, 1}, CK at (s, t) in \
                  {(.1,.1), (.25,.5), (.5,1.5), (1,1)}"
        .into();
    let mut worst = BTreeMap::new();
    for &p in &cfg.params {
        let basis = match OrthoBasis::new(p, cfg.n) {
            Ok(b) => b,
            Err(e) => {
                tally.error(format!("basis {}", ab(p)), e);
                continue;
            }
        };
        let orth = basis.orthonormality_residual();
        tally.check(1.0 - orth / cfg.orthonormality_tol, 0.0, || {
            format!("orthonormality {} residual {orth:.3e}", ab(p))
        });
        let (deg, eig) = basis.max_eigen_residual();
        tally.check(1.0 - eig / cfg.eigen_tol, 0.0, || {
            format!("eigen-residual {} degree {deg}: {eig:.3e}", ab(p))
        });

        let m = basis.nodes().len();
        let w = basis.weights();
        let mut norm_max = 0.0f64;
        for x in lin_grid(0.0, 1.0, 9) {
            let qx = basis.values(x);
            for &t in &cfg.times {
                let s: f64 = crate::stats::compensated_sum(
                    (0..m).map(|k| w[k] * basis.kernel_from_values(t, &qx, basis.node_values(k)).0),
                );
                let r = (s - 1.0).abs();
                norm_max = norm_max.max(r);
                tally.check(1.0 - r / cfg.normalization_tol, 0.0, || {
                    format!("normalization {} x={x} t={t}: {r:.3e}", ab(p))
                });
            }
        }

        let pts = [0.0, 0.2, 0.5, 0.9, 1.0];
        let mut ck_ratio = 0.0f64;
        for &(s, t) in &[(0.1, 0.1), (0.25, 0.5), (0.5, 1.5), (1.0, 1.0)] {
            let es = basis.tail_bound(s);
            let et = basis.tail_bound(t);
            for (i, &x) in pts.iter().enumerate() {
                for &y in &pts[i..] {
                    let (qx, qy) = (basis.values(x), basis.values(y));
                    let mut terms = Vec::with_capacity(m);
                    let mut bound = 0.0;
                    for k in 0..m {
                        let qz = basis.node_values(k);
                        let (ps, ps_abs) = basis.kernel_from_values(s, &qx, qz);
                        let (pt, pt_abs) = basis.kernel_from_values(t, qz, &qy);
                        let e_s = es + basis.rounding_bound(ps_abs);
                        let e_t = et + basis.rounding_bound(pt_abs);
                        bound += w[k] * (ps.abs() * e_t + pt.abs() * e_s + e_s * e_t);
                        terms.push(w[k] * ps * pt);
                    }
                    let abs_terms: f64 = terms.iter().map(|v| v.abs()).sum();
                    let lhs = crate::stats::compensated_sum(terms);
                    let (full, full_abs) = basis.kernel_from_values(s + t, &qx, &qy);
                    bound += basis.tail_bound(s + t)
                        + basis.rounding_bound(full_abs)
                        + 8.0 * m as f64 * f64::EPSILON * abs_terms;
                    let res = (lhs - full).abs();
                    ck_ratio = ck_ratio.max(res / bound);
                    tally.check(1.0 - res / (cfg.ck_factor * bound), 0.0, || {
                        format!("Chapman-Kolmogorov {} s={s} t={t} x={x} y={y}: {res:.3e} vs bound {bound:.3e}", ab(p))
                    });
                }
            }
        }
        worst.insert(
            format!("{},{}", p.a(), p.b()),
            json!({
                "orthonormality": orth,
                "eigen_residual": eig,
                "eigen_degree": deg,
                "normalization": norm_max,
                "ck_residual_over_bound": ck_ratio,
            }),
        );
    }
    tally.detail("per_params", worst);
    tally.finish()
}

/// `(P_t f)^p(x) ≤ P_t f^p(y) · exp[p K ρ² / ((p−1)(e^{2Kt} − 1))]` on all grid pairs.
pub fn check_harnack_1d(cfg: &HarnackConfig) -> CheckReport {
    let mut tally = Tally::new("harnack_1d");
    tally.param("params", &cfg.params);
    tally.param("p", &cfg.p);
    tally.param("t", &cfg.t);
    tally.param("n_basis", cfg.n_basis);
    tally.tol("slack_limit", cfg.slack_limit);
    let witnesses = harnack_witnesses();
    tally.param("witnesses", witnesses.iter().map(|w| w.0).collect::<Vec<_>>());
    tally.grid = format!(
        "{} x {} intrinsic grid points sin^2(pi j / {}), {} witnesses",
        cfg.grid,
        cfg.grid,
        2 * (cfg.grid.max(2) - 1),
        witnesses.len()
    );
    let xs = intrinsic_grid(cfg.grid.max(2));
    let mut max_slack = 0.0f64;
    for &par in &cfg.params {
        let basis = match OrthoBasis::new(par, cfg.n_basis) {
            Ok(b) => b,
            Err(e) => {
                tally.error(format!("basis {}", ab(par)), e);
                continue;
            }
        };
        let k = k_ab(par);
        for (name, f) in &witnesses {
            let proj_f = basis.project(f);
            for &p in &cfg.p {
                let proj_fp = basis.project(|x| f(x).powf(p));
                for &t in &cfg.t {
                    let pf: Vec<_> = xs.iter().map(|&x| basis.apply(&proj_f, t, x)).collect();
                    let pfp: Vec<_> = xs.iter().map(|&x| basis.apply(&proj_fp, t, x)).collect();
                    for (i, &x) in xs.iter().enumerate() {
                        let base = pf[i].value;
                        let lhs = base.powf(p);
                        let dlhs = p * base.abs().powf(p - 1.0) * pf[i].error;
                        for (j, &y) in xs.iter().enumerate() {
                            let h = match rho(x, y).and_then(|r| harnack_exponent_1d(p, t, r, k)) {
                                Ok(h) => h.value,
                                Err(e) => {
                                    tally.error(format!("exponent x={x} y={y}"), e);
                                    continue;
                                }
                            };
                            let gain = h.exp();
                            let rhs = pfp[j].value * gain;
                            let slack = (dlhs + pfp[j].error * gain) / rhs;
                            max_slack = max_slack.max(slack);
                            if slack > cfg.slack_limit {
                                tally.undecided(format!(
                                    "{} f={name} p={p} t={t} x={x:.4} y={y:.4}: slack {slack:.2e}",
                                    ab(par)
                                ));
                            }
                            tally.check((rhs - lhs) / rhs, slack, || {
                                format!("{} f={name} p={p} t={t} x={x:.4} y={y:.4}", ab(par))
                            });
                        }
                    }
                }
            }
        }
    }
    tally.detail("max_relative_slack", max_slack);
    tally.finish()
}

/// `exp[−2ρ²h] ≤ p_t(x, y) ≤ exp[2ρ(0,1)²h]` with `h = K/(e^{Kt} − 1)`.
pub fn check_kernel_pointwise(cfg: &KernelBoundsConfig) -> CheckReport {
    let mut tally = Tally::new("kernel_bounds_pointwise");
    tally.param("params", &cfg.pointwise_params);
    tally.param("t", &cfg.pointwise_t);
    tally.param("n_basis", cfg.n_basis);
    tally.grid = format!("{0} x {0} intrinsic grid", cfg.grid);
    let xs = intrinsic_grid(cfg.grid.max(2));
    let mut closest = (f64::INFINITY, f64::INFINITY);
    for &par in &cfg.pointwise_params {
        let basis = match OrthoBasis::new(par, cfg.n_basis) {
            Ok(b) => b,
            Err(e) => {
                tally.error(format!("basis {}", ab(par)), e);
                continue;
            }
        };
        let k = k_ab(par);
        let vals: Vec<Vec<f64>> = xs.iter().map(|&x| basis.values(x)).collect();
        for &t in &cfg.pointwise_t {
            let h = kernel_rate(k, t);
            let tail = basis.tail_bound(t);
            let hi = (2.0 * PI * PI * h).exp();
            for i in 0..xs.len() {
                for j in i..xs.len() {
                    let (v, abs) = basis.kernel_from_values(t, &vals[i], &vals[j]);
                    let err = tail + basis.rounding_bound(abs);
                    let r = crate::constants::rho_unchecked(xs[i], xs[j]);
                    let lo = (-2.0 * r * r * h).exp();
                    let up = (hi - v) / hi;
                    // where the kernel is below its own error bar only consistency is testable
                    let (down, down_slack) = if v > err {
                        ((v - lo) / v, err / v)
                    } else {
                        ((v + err - lo) / (v.abs() + err + lo), 0.0)
                    };
                    closest.0 = closest.0.min(up);
                    closest.1 = closest.1.min(down);
                    let what = |side: &str| {
                        format!("{side} {} t={t} x={:.4} y={:.4} p={v:.4e}", ab(par), xs[i], xs[j])
                    };
                    tally.check(up, err / hi, || what("upper"));
                    tally.check(down, down_slack, || what("lower"));
                }
            }
        }
    }
    tally.detail("min_upper_margin", closest.0);
    tally.detail("min_lower_margin", closest.1);
    tally.finish()
}

/// Least-squares slope of `log sup_x p_t(x, x)` against `log t` near `t = 0`.
pub fn check_kernel_short_time(cfg: &KernelBoundsConfig) -> CheckReport {
    let mut tally = Tally::new("kernel_short_time_slope");
    tally.param("params", &cfg.slope_params);
    tally.param("t_range", cfg.short_t);
    tally.param("n_basis", cfg.short_n_basis);
    tally.tol("relative_slope", cfg.short_tol);
    tally.grid = format!(
        "{} log-spaced t, diagonal on {} Chebyshev points",
        cfg.short_points, cfg.diagonal_grid
    );
    let ts = log_grid(cfg.short_t.0, cfg.short_t.1, cfg.short_points);
    let mut slopes = BTreeMap::new();
    for &par in &cfg.slope_params {
        let basis = match OrthoBasis::new(par, cfg.short_n_basis) {
            Ok(b) => b,
            Err(e) => {
                tally.error(format!("basis {}", ab(par)), e);
                continue;
            }
        };
        let mut logs = Vec::with_capacity(ts.len());
        for &t in &ts {
            match basis.sup_kernel(t, cfg.diagonal_grid) {
                Ok((v, _)) => {
                    logs.push(v.ln());
                    let err = basis.tail_bound(t);
                    tally.check(1.0 - err / (1e-3 * v), 0.0, || {
                        format!("truncation {} t={t:.3e}: {err:.3e} vs sup {v:.3e}", ab(par))
                    });
                }
                Err(e) => tally.error(format!("sup {} t={t}", ab(par)), e),
            }
        }
        if logs.len() != ts.len() {
            continue;
        }
        let lt: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
        let slope = ls_slope(&lt, &logs);
        let expect = -par.short_time_exponent();
        let rel = (slope / expect - 1.0).abs();
        slopes.insert(ab(par), json!({"slope": slope, "expected": expect}));
        tally.check(cfg.short_tol - rel, 0.0, || {
            format!("slope {} = {slope:.4}, expected {expect}", ab(par))
        });
    }
    tally.detail("slopes", slopes);
    tally.finish()
}

/// Slope of `log sup |p_t − 1|` against `t` at large `t`; the rate is the spectral gap.
pub fn check_kernel_long_time(cfg: &KernelBoundsConfig) -> CheckReport {
    let mut tally = Tally::new("kernel_long_time_slope");
    tally.param("params", &cfg.slope_params);
    tally.param("t_range", cfg.long_t);
    tally.param("n_basis", cfg.long_n_basis);
    tally.tol("relative_slope", cfg.long_tol);
    tally.grid = format!(
        "{} even t, diagonal on {} Chebyshev points",
        cfg.long_points, cfg.diagonal_grid
    );
    let ts = lin_grid(cfg.long_t.0, cfg.long_t.1, cfg.long_points);
    let mut slopes = BTreeMap::new();
    for &par in &cfg.slope_params {
        let basis = match OrthoBasis::new(par, cfg.long_n_basis) {
            Ok(b) => b,
            Err(e) => {
                tally.error(format!("basis {}", ab(par)), e);
                continue;
            }
        };
        let logs: Result<Vec<f64>> = ts
            .iter()
            .map(|&t| basis.sup_deviation(t, cfg.diagonal_grid).map(|d| d.0.ln()))
            .collect();
        let logs = match logs {
            Ok(l) => l,
            Err(e) => {
                tally.error(format!("sup deviation {}", ab(par)), e);
                continue;
            }
        };
        let slope = ls_slope(&ts, &logs);
        let expect = -par.spectral_gap();
        let rel = (slope / expect - 1.0).abs();
        slopes.insert(ab(par), json!({"slope": slope, "expected": expect}));
        tally.check(cfg.long_tol - rel, 0.0, || {
            format!("slope {} = {slope:.4}, expected {expect}", ab(par))
        });
    }
    tally.detail("slopes", slopes);
    tally.finish()
}

/// `π(B(x, √t)) ≥ c₀ t^{2(a∨b)}` with a uniform `c₀`, and the exponent is sharp.
pub fn check_ball_volume(cfg: &BallVolumeConfig) -> CheckReport {
    let mut tally = Tally::new("ball_volume");
    tally.param("params", &cfg.params);
    tally.param("t_range", cfg.t);
    tally.tol("c0_min", cfg.c0_min);
    tally.tol("ratio_max", cfg.ratio_max);
    tally.grid = format!("{} log-spaced t, {} Chebyshev x", cfg.t_points, cfg.x_points);
    let ts = log_grid(cfg.t.0, cfg.t.1, cfg.t_points);
    let xs = chebyshev_unit_grid(cfg.x_points.max(2));
    let mut fitted = BTreeMap::new();
    for &par in &cfg.params {
        let e = 2.0 * par.a().max(par.b());
        let mut per_t = Vec::with_capacity(ts.len());
        for &t in &ts {
            let mut m = f64::INFINITY;
            for &x in &xs {
                match ball_volume(par, x, t.sqrt()) {
                    Ok(v) => m = m.min(v / t.powf(e)),
                    Err(err) => tally.error(format!("ball {} x={x} t={t}", ab(par)), err),
                }
            }
            per_t.push(m);
        }
        let lo = per_t.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = per_t.iter().cloned().fold(0.0, f64::max);
        fitted.insert(ab(par), json!({"c0": lo, "ratio": hi / lo}));
        tally.check(lo / cfg.c0_min - 1.0, 0.0, || format!("c0 {} = {lo:.3e}", ab(par)));
        tally.check(1.0 - (hi / lo) / cfg.ratio_max, 0.0, || {
            format!("exponent not sharp {}: ratio {:.3e}", ab(par), hi / lo)
        });
    }
    tally.detail("fitted", fitted);
    tally.finish()
}

/// Value, derivative of a polynomial in monomial coefficients.
fn poly_eval(c: &[f64], x: f64) -> (f64, f64) {
    let mut v = 0.0;
    let mut d = 0.0;
    for &ck in c.iter().rev() {
        d = d * x + v;
        v = v * x + ck;
    }
    (v, d)
}

/// `Var_π(f) ≤ E(f, f)/(a + b)` with `E(f, f) = ½∫ x(1−x) f'² dπ`.
pub fn check_poincare(cfg: &PoincareConfig) -> CheckReport {
    let mut tally = Tally::new("poincare");
    tally.param("params", &cfg.params);
    tally.param("n_random", cfg.n_random);
    tally.param("degree", cfg.degree);
    tally.param("seed", cfg.seed);
    tally.tol("margin", cfg.tol);
    tally.tol("equality", cfg.equality_tol);
    tally.grid = "first eigenfunction, constants and random polynomials, exact Gauss rule".into();
    let mut rng = path_rng(cfg.seed, 0);
    let polys: Vec<Vec<f64>> = (0..cfg.n_random)
        .map(|_| (0..=cfg.degree).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let mut q1_gap = 0.0f64;
    for &par in &cfg.params {
        let (xs, ws) = gauss_beta(2.0 * par.a(), 2.0 * par.b(), cfg.degree + 4);
        let gap = par.spectral_gap();
        let forms = |c: &[f64]| {
            let vals: Vec<(f64, f64)> = xs.iter().map(|&x| poly_eval(c, x)).collect();
            let mean: f64 = ws.iter().zip(&vals).map(|(w, v)| w * v.0).sum();
            let var: f64 = ws.iter().zip(&vals).map(|(w, v)| w * (v.0 - mean).powi(2)).sum();
            let e: f64 = 0.5
                * ws.iter()
                    .zip(&xs)
                    .zip(&vals)
                    .map(|((w, x), v)| w * x * (1.0 - x) * v.1 * v.1)
                    .sum::<f64>();
            (var, e / gap)
        };
        let rel = |var: f64, bound: f64| {
            // constants: both sides vanish up to rounding
            if var + bound <= 1e-14 {
                0.0
            } else {
                (bound - var) / (bound + var)
            }
        };
        let (var, bound) = forms(&[-par.stationary_mean(), 1.0]);
        let r = rel(var, bound);
        q1_gap = q1_gap.max(r.abs());
        tally.check(cfg.equality_tol - r.abs(), 0.0, || {
            format!("equality for the first eigenfunction {}: {r:.3e}", ab(par))
        });
        let (var, bound) = forms(&[2.5]);
        tally.check(rel(var, bound), cfg.tol, || format!("constant {}", ab(par)));
        for (i, c) in polys.iter().enumerate() {
            let (var, bound) = forms(c);
            tally.check(rel(var, bound), cfg.tol, || {
                format!("random polynomial #{i} {}", ab(par))
            });
        }
    }
    tally.detail("first_eigenfunction_relative_gap", q1_gap);
    tally.finish()
}

/// `(π(f²), E(f, f), π(|f|))` of a witness.
#[derive(Debug, Clone, Copy)]
struct Forms {
    sq: f64,
    energy: f64,
    l1: f64,
}

impl Forms {
    fn beta(&self, r: f64) -> f64 {
        (self.sq - r * self.energy) / (self.l1 * self.l1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Ramp {
    Left,
    Right,
    Tent,
}

fn ramp_forms(rules: &IntervalRules, kind: Ramp, eps: f64) -> Forms {
    let gamma = |x: f64| 0.5 * x * (1.0 - x);
    let piece = |lo: f64, hi: f64, f: &dyn Fn(f64) -> f64| Forms {
        sq: rules.integrate(lo, hi, |x| f(x).powi(2)),
        energy: rules.integrate(lo, hi, gamma),
        l1: rules.integrate(lo, hi, f),
    };
    match kind {
        Ramp::Left => piece(0.0, eps, &|x| eps - x),
        Ramp::Right => piece(1.0 - eps, 1.0, &|x| x - (1.0 - eps)),
        Ramp::Tent => {
            let e = eps.min(0.5);
            let l = piece(0.5 - e, 0.5, &|x| e - (0.5 - x));
            let r = piece(0.5, 0.5 + e, &|x| e - (x - 0.5));
            Forms {
                sq: l.sq + r.sq,
                energy: l.energy + r.energy,
                l1: l.l1 + r.l1,
            }
        }
    }
}

/// Best witness value of `β(r)` over a ramp family, refined by golden-section search in
/// `log ε` around the best grid point.
fn best_ramp(rules: &IntervalRules, kind: Ramp, r: f64, eps_grid: &[f64], cache: &[Forms]) -> f64 {
    let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
    for (i, f) in cache.iter().enumerate() {
        let b = f.beta(r);
        if b > best {
            best = b;
            best_i = i;
        }
    }
    let lo = eps_grid[best_i.saturating_sub(1)].ln();
    let hi = eps_grid[(best_i + 1).min(eps_grid.len() - 1)].ln();
    let g = |le: f64| ramp_forms(rules, kind, le.exp()).beta(r);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (g(c), g(d));
    for _ in 0..60 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = g(d);
        }
    }
    best.max(fc).max(fd)
}

/// `π(f²) ≤ r E(f, f) + β(r) π(|f|)²`: the smallest admissible `β` is estimated from below
/// by witnesses; its log-log slope near `r = 0` must match `−max(½, 2a, 2b)`.
pub fn check_super_poincare(cfg: &SuperPoincareConfig) -> CheckReport {
    let mut tally = Tally::new("super_poincare");
    tally.param("params", &cfg.params);
    tally.param("r_range", cfg.r);
    tally.param("moment_eps_range", cfg.moment_eps);
    tally.tol("relative_slope", cfg.slope_tol);
    tally.tol("relative_moment_order", cfg.moment_tol);
    tally.grid = format!(
        "{} log-spaced r; ramps at 0 and 1 and a central tent on {} log-spaced widths in [{:e}, 0.5] \
         with golden-section refinement; orthonormal polynomials of degree 1..8",
        cfg.r_points, cfg.eps_points, cfg.eps_min
    );
    let rs = log_grid(cfg.r.0, cfg.r.1, cfg.r_points);
    let eps_grid = log_grid(cfg.eps_min, 0.5, cfg.eps_points);
    let mut fits = BTreeMap::new();
    for &par in &cfg.params {
        let rules = IntervalRules::new(par, cfg.quad_nodes);
        let kinds = [Ramp::Left, Ramp::Right, Ramp::Tent];
        let caches: Vec<Vec<Forms>> = kinds
            .iter()
            .map(|&k| eps_grid.iter().map(|&e| ramp_forms(&rules, k, e)).collect())
            .collect();
        let poly_forms: Vec<Forms> = match OrthoBasis::with_quadrature(par, 8, 200) {
            Ok(basis) => (1..=8)
                .map(|n| Forms {
                    sq: 1.0,
                    energy: basis.eigenvalues()[n],
                    l1: (0..basis.nodes().len())
                        .map(|k| basis.weights()[k] * basis.node_values(k)[n].abs())
                        .sum(),
                })
                .collect(),
            Err(e) => {
                tally.error(format!("basis {}", ab(par)), e);
                Vec::new()
            }
        };
        let beta_min = |r: f64| {
            let ramps = kinds
                .iter()
                .zip(&caches)
                .map(|(&k, c)| best_ramp(&rules, k, r, &eps_grid, c))
                .fold(f64::NEG_INFINITY, f64::max);
            poly_forms.iter().map(|f| f.beta(r)).fold(ramps, f64::max)
        };

        let betas: Vec<f64> = rs.iter().map(|&r| beta_min(r)).collect();
        let lr: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
        let lb: Vec<f64> = betas.iter().map(|b| b.ln()).collect();
        let slope = ls_slope(&lr, &lb);
        let mean_r = lr.iter().sum::<f64>() / lr.len() as f64;
        let mean_b = lb.iter().sum::<f64>() / lb.len() as f64;
        let c = (mean_b - slope * mean_r).exp();
        let expect = -(0.5f64).max(2.0 * par.a()).max(2.0 * par.b());
        let rel = (slope / expect - 1.0).abs();
        tally.check(cfg.slope_tol - rel, 0.0, || {
            format!("slope {} = {slope:.4}, expected {expect}", ab(par))
        });

        // Poincaré regime: no witness may exceed 1 once r ≥ 1/(a + b)
        let gap_r = 1.0 / par.spectral_gap();
        for &mult in &[1.0, 2.0, 10.0] {
            let r = mult * gap_r;
            let b = beta_min(r);
            tally.check(1.0 - b, 1e-9, || {
                format!("beta({r:.4}) = {b:.6} > 1 in the Poincaré regime {}", ab(par))
            });
        }

        let es = log_grid(cfg.moment_eps.0, cfg.moment_eps.1, cfg.moment_points);
        let le: Vec<f64> = es.iter().map(|e| e.ln()).collect();
        let mut orders = BTreeMap::new();
        for (kind, w) in [(Ramp::Left, par.a()), (Ramp::Right, par.b())] {
            let forms: Vec<Forms> = es.iter().map(|&e| ramp_forms(&rules, kind, e)).collect();
            let sq: Vec<f64> = forms.iter().map(|f| f.sq.ln()).collect();
            let lin: Vec<f64> = forms.iter().map(|f| (f.energy + f.l1).ln()).collect();
            for (label, got, want) in [
                ("square", ls_slope(&le, &sq), 2.0 * w + 2.0),
                ("energy_plus_l1", ls_slope(&le, &lin), 2.0 * w + 1.0),
            ] {
                let rel = (got / want - 1.0).abs();
                orders.insert(format!("{kind:?}_{label}").to_lowercase(), json!({"order": got, "expected": want}));
                tally.check(cfg.moment_tol - rel, 0.0, || {
                    format!("moment order {kind:?} {label} {} = {got:.4}, expected {want}", ab(par))
                });
            }
        }
        fits.insert(
            ab(par),
            json!({"slope": slope, "expected": expect, "c": c, "beta": betas, "moment_orders": orders}),
        );
    }
    tally.detail("fits", fits);
    tally.detail("r", rs);
    tally.finish()
}

// ---------------------------------------------------------------------------------------
// Simulation checks

fn binomial_se(f: f64, n: usize) -> f64 {
    (f * (1.0 - f) / n as f64).sqrt()
}

/// Coupled pairs meet by `T`, the distance stays under the envelope and the Girsanov
/// density has `E R^{p/(p−1)}` below the closed-form bound.
pub fn check_coupling(cfg: &CouplingConfig) -> CheckReport {
    let mut tally = Tally::new("coupling");
    tally.param("params", cfg.params);
    tally.param("x0", cfg.x0);
    tally.param("y0", cfg.y0);
    tally.param("horizon", cfg.horizon);
    tally.param("p", cfg.p);
    tally.param("dt", &cfg.dt);
    tally.param("n_paths", cfg.n_paths);
    tally.param("seed", cfg.seed);
    tally.param("scheme", cfg.scheme);
    tally.tol("min_coupled", cfg.min_coupled);
    tally.tol("max_violation", cfg.max_violation);
    tally.tol("se_fraction", cfg.se_fraction);
    tally.tol("girsanov_se_multiple", 3.0);
    tally.grid = "every step of every path".into();
    let k = k_ab(cfg.params);
    let q = cfg.p / (cfg.p - 1.0);
    let mut per_dt = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for (idx, &dt) in cfg.dt.iter().enumerate() {
        let (control, sums) = match coupling_summaries(
            cfg.x0, cfg.y0, cfg.horizon, dt, cfg.params, cfg.n_paths, cfg.seed, cfg.scheme,
        ) {
            Ok(v) => v,
            Err(e) => {
                tally.error(format!("coupling dt={dt}"), e);
                continue;
            }
        };
        let n = sums.len();
        let coupled = sums.iter().filter(|s| s.coupled()).count() as f64 / n as f64;
        let points: usize = sums.iter().map(|s| s.points).sum();
        let viol = sums.iter().map(|s| s.envelope_violations).sum::<usize>() as f64 / points.max(1) as f64;
        let order = sums.iter().map(|s| s.order_violations).sum::<usize>();
        let bound = girsanov_bound(cfg.p, k, control.rho0, cfg.horizon);
        let moment = crate::sim::girsanov_moment(&sums, q, cfg.seed);
        let finest = idx + 1 == cfg.dt.len();
        let mut entry = json!({
            "dt": dt,
            "coupled_fraction": coupled,
            "violation_fraction": viol,
            "order_violations": order,
            "girsanov_bound": bound,
        });
        if let Some((pc, pv)) = prev {
            // refinement must not make things worse beyond sampling noise
            let sc = 3.0 * (binomial_se(coupled, n) + binomial_se(pc, n));
            tally.check(coupled - pc + sc, 0.0, || {
                format!("coupled fraction fell from {pc:.4} to {coupled:.4} at dt={dt}")
            });
            let sv = 3.0 * (binomial_se(viol, n) + binomial_se(pv, n));
            tally.check(pv - viol + sv, 0.0, || {
                format!("violation fraction rose from {pv:.4} to {viol:.4} at dt={dt}")
            });
        }
        prev = Some((coupled, viol));
        match moment {
            Ok(m) => {
                entry["girsanov_moment"] = json!(m.estimate.mean);
                entry["girsanov_se"] = json!(m.estimate.std_error);
                entry["rejected"] = json!(m.rejected);
                if finest {
                    let upper = m.estimate.mean - 3.0 * m.estimate.std_error;
                    tally.check((bound - upper) / bound, 0.0, || {
                        format!("E R^q = {:.4} ± {:.4} exceeds bound {bound:.4}", m.estimate.mean, m.estimate.std_error)
                    });
                    if m.estimate.std_error > cfg.se_fraction * bound {
                        tally.undecided(format!(
                            "Girsanov standard error {:.3e} exceeds {} of the bound",
                            m.estimate.std_error, cfg.se_fraction
                        ));
                    }
                }
            }
            Err(e) => tally.error(format!("Girsanov moment dt={dt}"), e),
        }
        if finest {
            tally.check(coupled - cfg.min_coupled, 0.0, || {
                format!("coupled fraction {coupled:.4} at dt={dt}")
            });
            tally.check(cfg.max_violation - viol, 0.0, || {
                format!("envelope violation fraction {viol:.4} at dt={dt}")
            });
        }
        per_dt.push(entry);
    }
    tally.detail("per_dt", per_dt);
    tally.finish()
}

/// Polynomials compared between simulation and the spectral oracle.
pub fn mc_test_functions(p: WFParams) -> Vec<(&'static str, Box<dyn Fn(f64) -> f64 + Sync>)> {
    let mean = p.stationary_mean();
    let sd = (mean * (1.0 - mean) / (2.0 * (p.a() + p.b()) + 1.0)).sqrt();
    vec![
        ("1", Box::new(|_| 1.0)),
        ("x", Box::new(|x| x)),
        ("x^2", Box::new(|x| x * x)),
        ("x^3", Box::new(|x| x.powi(3))),
        ("1-x", Box::new(|x| 1.0 - x)),
        ("Q1", Box::new(move |x| (x - mean) / sd)),
        ("x(1-x)", Box::new(|x| x * (1.0 - x))),
        ("(2x-1)^4", Box::new(|x| (2.0 * x - 1.0).powi(4))),
    ]
}

/// `|E f(X_t) − P_t f(x₀)| ≤ 3·SE + C·dt` for polynomial test functions.
pub fn check_mc_vs_spectral(cfg: &McConfig) -> CheckReport {
    let mut tally = Tally::new("mc_vs_spectral");
    tally.param("params", cfg.params);
    tally.param("x0", cfg.x0);
    tally.param("times", &cfg.times);
    tally.param("dt", cfg.dt);
    tally.param("n_paths", cfg.n_paths);
    tally.param("seed", cfg.seed);
    tally.param("scheme", cfg.scheme);
    tally.tol("se_multiple", 3.0);
    tally.tol("c_dt", cfg.c_dt);
    let fs = mc_test_functions(cfg.params);
    tally.param("functions", fs.iter().map(|f| f.0).collect::<Vec<_>>());
    tally.grid = format!("{} functions x {} times", fs.len(), cfg.times.len());
    let basis = match OrthoBasis::new(cfg.params, cfg.n_basis) {
        Ok(b) => b,
        Err(e) => {
            tally.error("basis".into(), e);
            return tally.finish();
        }
    };
    let refs: Vec<&(dyn Fn(f64) -> f64 + Sync)> = fs.iter().map(|f| f.1.as_ref()).collect();
    let est = match mc_expectations(&refs, cfg.x0, &cfg.times, cfg.params, cfg.n_paths, cfg.dt, cfg.seed, cfg.scheme) {
        Ok(e) => e,
        Err(e) => {
            tally.error("simulation".into(), e);
            return tally.finish();
        }
    };
    let mut table = Vec::new();
    let mut worst_z = 0.0f64;
    for (j, (name, f)) in fs.iter().enumerate() {
        let proj = basis.project(f);
        for (k, &t) in cfg.times.iter().enumerate() {
            let exact = basis.apply(&proj, t, cfg.x0);
            let e = est[j][k];
            let diff = (e.mean - exact.value).abs();
            let allowed = 3.0 * e.std_error + cfg.c_dt * cfg.dt;
            if e.std_error > 0.0 {
                worst_z = worst_z.max(diff / e.std_error);
            }
            table.push(json!({"f": name, "t": t, "mc": e.mean, "se": e.std_error, "exact": exact.value}));
            tally.check((allowed - diff) / allowed, exact.error / allowed, || {
                format!("f={name} t={t}: mc {:.5} ± {:.5} vs {:.5}", e.mean, e.std_error, exact.value)
            });
        }
    }
    tally.detail("max_z", worst_z);
    tally.detail("table", table);
    tally.finish()
}

/// Kolmogorov–Smirnov distance between pooled long-run samples and `Beta(2a, 2b)`.
pub fn check_stationarity(cfg: &StationarityConfig) -> CheckReport {
    let mut tally = Tally::new("stationarity");
    tally.param("params", cfg.params);
    tally.param("x0", cfg.x0);
    tally.param("horizon", cfg.horizon);
    tally.param("dt", cfg.dt);
    tally.param("n_paths", cfg.n_paths);
    tally.param("burn_in", cfg.burn_in);
    tally.param("thin", cfg.thin);
    tally.param("seed", cfg.seed);
    tally.param("scheme", cfg.scheme);
    tally.tol("ks", cfg.ks_tol);
    tally.grid = "pooled states after burn-in, thinned".into();
    let samples = match stationary_samples(
        cfg.x0, cfg.horizon, cfg.dt, cfg.burn_in, cfg.thin, cfg.n_paths, cfg.params, cfg.seed, cfg.scheme,
    ) {
        Ok(s) => s,
        Err(e) => {
            tally.error("simulation".into(), e);
            return tally.finish();
        }
    };
    let (pa, pb) = (2.0 * cfg.params.a(), 2.0 * cfg.params.b());
    let ks = ks_distance(&samples, |x| statrs::function::beta::beta_reg(pa, pb, x.clamp(0.0, 1.0)));
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    tally.detail("ks", ks);
    tally.detail("samples", samples.len());
    tally.detail("sample_mean", mean);
    tally.detail("stationary_mean", cfg.params.stationary_mean());
    tally.check(1.0 - ks / cfg.ks_tol, 0.0, || format!("KS distance {ks:.4e}"));
    tally.finish()
}

// ---------------------------------------------------------------------------------------
// Infinite-dimensional checks

fn bases_for(seq: &ParamSequence, n: usize, degree: usize) -> Result<Vec<OrthoBasis>> {
    (1..=n)
        .map(|i| {
            let p = seq.param(i).ok_or_else(|| crate::error::invalid("N", "sequence too short"))?;
            OrthoBasis::new(p, degree)
        })
        .collect()
}

/// Product functions `∏ g_i(x_i)` used for the finite-product Harnack check.
pub fn product_witnesses() -> Vec<(&'static str, [fn(f64) -> f64; 3])> {
    vec![
        ("(1+x)(2-y)(1+z^2)", [|x| 1.0 + x, |x| 2.0 - x, |x| 1.0 + x * x]),
        ("peaks at 1", [|x| 0.05 + x.powi(8); 3]),
        ("peaks at 0 and 1/2", [|x| 0.05 + (1.0 - x).powi(8), |x| 0.05 + (4.0 * x * (1.0 - x)).powi(4), |x| 0.05 + (1.0 - x).powi(8)]),
        ("mixed", [|x| 0.5 + x * (1.0 - x), |x| 0.1 + x.powi(3), |x| 3.0 - 2.0 * x + x.powi(3)]),
    ]
}

/// Harnack inequality for a product of one-dimensional semigroups with the summed exponent.
pub fn check_product_harnack(cfg: &ProductHarnackConfig) -> CheckReport {
    let mut tally = Tally::new("product_harnack");
    tally.param("alpha", cfg.alpha);
    tally.param("theta", cfg.theta);
    tally.param("n", cfg.n);
    tally.param("p", cfg.p);
    tally.param("t", cfg.t);
    tally.param("n_basis", cfg.n_basis);
    tally.tol("slack_limit", cfg.slack_limit);
    let dim = cfg.n.min(3);
    let pairs: [([f64; 3], [f64; 3]); 5] = [
        ([0.1, 0.5, 0.9], [0.9, 0.5, 0.1]),
        ([0.0, 0.0, 0.0], [1.0, 1.0, 1.0]),
        ([0.3, 0.3, 0.3], [0.35, 0.25, 0.3]),
        ([0.05, 0.95, 0.5], [0.5, 0.5, 0.5]),
        ([1.0, 0.2, 0.7], [0.0, 0.8, 0.4]),
    ];
    let witnesses = product_witnesses();
    tally.grid = format!("{} point pairs x {} product functions, both orders", pairs.len(), witnesses.len());
    let seq = match ParamSequence::two_parameter(cfg.alpha, cfg.theta, dim)
        .and_then(|s| ParamSequence::finite(s.entries().to_vec()))
    {
        Ok(s) => s,
        Err(e) => {
            tally.error("sequence".into(), e);
            return tally.finish();
        }
    };
    let bases = match bases_for(&seq, dim, cfg.n_basis) {
        Ok(b) => b,
        Err(e) => {
            tally.error("bases".into(), e);
            return tally.finish();
        }
    };
    let p = cfg.p;
    for (name, g) in &witnesses {
        let proj: Vec<_> = (0..dim).map(|i| bases[i].project(g[i])).collect();
        let proj_p: Vec<_> = (0..dim).map(|i| bases[i].project(|x| g[i](x).powf(p))).collect();
        for (xa, ya) in &pairs {
            for (x, y) in [(xa, ya), (ya, xa)] {
                let (xc, yc) = (&x[..dim], &y[..dim]);
                let h = match CubePoint::new(xc.to_vec())
                    .and_then(|xp| CubePoint::new(yc.to_vec()).map(|yp| (xp, yp)))
                    .and_then(|(xp, yp)| product_harnack_bound(p, cfg.t, &xp, &yp, &seq))
                {
                    Ok(h) => h.upper(),
                    Err(e) => {
                        tally.error(format!("exponent {name}"), e);
                        continue;
                    }
                };
                // relative errors of a product add up
                let (mut pf, mut pf_rel, mut pfp, mut pfp_rel) = (1.0, 0.0, 1.0, 0.0);
                for i in 0..dim {
                    let a = bases[i].apply(&proj[i], cfg.t, xc[i]);
                    let b = bases[i].apply(&proj_p[i], cfg.t, yc[i]);
                    pf *= a.value;
                    pf_rel += a.error / a.value.abs();
                    pfp *= b.value;
                    pfp_rel += b.error / b.value.abs();
                }
                let lhs = pf.powf(p);
                let rhs = pfp * h.exp();
                let slack = p * pf_rel * lhs / rhs + pfp_rel;
                if slack > cfg.slack_limit {
                    tally.undecided(format!("{name} x={xc:?} y={yc:?}: slack {slack:.2e}"));
                }
                tally.check((rhs - lhs) / rhs, slack, || format!("{name} x={xc:?} y={yc:?}"));
            }
        }
    }
    tally.finish()
}

/// The truncated product kernel over `N + extra` coordinates stays within the envelope
/// computed from the first `N` coordinates and the tail rate.
pub fn check_product_envelopes(cfg: &ProductEnvelopeConfig) -> CheckReport {
    let mut tally = Tally::new("product_envelopes");
    tally.param("alpha", cfg.alpha);
    tally.param("theta", cfg.theta);
    tally.param("n", cfg.n);
    tally.param("extra", cfg.extra);
    tally.param("times", &cfg.times);
    tally.param("n_pairs", cfg.n_pairs);
    tally.param("n_basis", cfg.n_basis);
    tally.param("seed", cfg.seed);
    tally.grid = "stationary random point pairs, log-space comparison".into();
    let total = cfg.n + cfg.extra;
    let seq = match ParamSequence::from_rule(
        SequenceRule::TwoParameter {
            alpha: cfg.alpha,
            theta: cfg.theta,
        },
        total,
    ) {
        Ok(s) => s,
        Err(e) => {
            tally.error("sequence".into(), e);
            return tally.finish();
        }
    };
    let bases = match bases_for(&seq, total, cfg.n_basis) {
        Ok(b) => b,
        Err(e) => {
            tally.error("bases".into(), e);
            return tally.finish();
        }
    };
    let mut rng = path_rng(cfg.seed, 0);
    let mut draw = || -> Vec<f64> {
        (1..=total)
            .map(|i| {
                let p = seq.param(i).expect("sequence covers every coordinate");
                rng.sample(Beta::new(2.0 * p.a(), 2.0 * p.b()).expect("positive shape"))
            })
            .collect()
    };
    let pts: Vec<(Vec<f64>, Vec<f64>)> = (0..cfg.n_pairs).map(|_| (draw(), draw())).collect();
    let mut rows = Vec::new();
    for &t in &cfg.times {
        for (x, y) in &pts {
            let env = CubePoint::new(x[..cfg.n].to_vec())
                .and_then(|xp| CubePoint::new(y[..cfg.n].to_vec()).map(|yp| (xp, yp)))
                .and_then(|(xp, yp)| product_kernel(t, &xp, &yp, &seq, &bases[..cfg.n]));
            let env = match env {
                Ok(e) => e,
                Err(e) => {
                    tally.error(format!("envelope t={t}"), e);
                    continue;
                }
            };
            let mut log_full = 0.0;
            let mut rel = 0.0;
            let mut ok = true;
            for i in 0..total {
                match bases[i].heat_kernel(t, x[i], y[i]) {
                    Ok(k) => {
                        log_full += k.value.ln();
                        rel += k.truncation_error / k.value;
                    }
                    Err(e) => {
                        tally.error(format!("coordinate {} t={t}", i + 1), e);
                        ok = false;
                    }
                }
            }
            if !ok {
                continue;
            }
            let up = env.log_upper - log_full;
            let down = log_full - env.log_lower;
            rows.push(json!({"t": t, "log_kernel": log_full, "log_lower": env.log_lower, "log_upper": env.log_upper}));
            tally.check(up, rel, || format!("upper envelope t={t}: {log_full:.4} > {:.4}", env.log_upper));
            tally.check(down, rel, || format!("lower envelope t={t}: {log_full:.4} < {:.4}", env.log_lower));
        }
    }
    tally.detail("rows", rows);
    tally.finish()
}

/// `γ(t) t² ≤ c_γ` on `(0, 1]` for two-parameter sequences.
pub fn check_gamma_quadratic(cfg: &GammaConfig) -> CheckReport {
    let mut tally = Tally::new("gamma_quadratic");
    tally.param("sequences", &cfg.sequences);
    tally.param("t_range", cfg.t);
    tally.grid = format!("{} log-spaced t", cfg.t_points);
    let ts = log_grid(cfg.t.0, cfg.t.1, cfg.t_points);
    let mut consts = Vec::new();
    for &(alpha, theta) in &cfg.sequences {
        let seq = match ParamSequence::from_rule(SequenceRule::TwoParameter { alpha, theta }, 1) {
            Ok(s) => s,
            Err(e) => {
                tally.error(format!("sequence ({alpha}, {theta})"), e);
                continue;
            }
        };
        let c = match gamma_quadratic_bound(&seq) {
            Ok(c) => c,
            Err(e) => {
                tally.error(format!("constant ({alpha}, {theta})"), e);
                continue;
            }
        };
        let mut peak = 0.0f64;
        for &t in &ts {
            match gamma_series(&seq, t, 1e-10) {
                Ok(g) => {
                    let v = g.upper() * t * t;
                    peak = peak.max(v);
                    tally.check((c - v) / c, 0.0, || {
                        format!("(alpha={alpha}, theta={theta}) t={t:.4e}: gamma t^2 = {v:.4} > {c:.4}")
                    });
                }
                Err(e) => tally.error(format!("gamma ({alpha}, {theta}) t={t}"), e),
            }
        }
        consts.push(json!({"alpha": alpha, "theta": theta, "c_gamma": c, "max_gamma_t2": peak}));
    }
    tally.detail("constants", consts);
    tally.finish()
}

/// `ψ ∘ φ = id` on the cube and `φ ∘ ψ = id` on the simplex, including points of the
/// exhausted set `E` where some coordinate equals 1.
pub fn check_phi_psi_roundtrip(cfg: &RoundtripConfig) -> CheckReport {
    let mut tally = Tally::new("phi_psi_roundtrip");
    tally.param("n_points", cfg.n_points);
    tally.param("dim", cfg.dim);
    tally.param("seed", cfg.seed);
    tally.tol("max_abs_error", cfg.tol);
    tally.grid = "uniform random cube points, plus points with one coordinate set to 1".into();
    let mut rng = path_rng(cfg.seed, 0);
    let (mut worst_cube, mut worst_simplex) = (0.0f64, 0.0f64);
    for i in 0..cfg.n_points {
        let mut x: Vec<f64> = (0..cfg.dim).map(|_| rng.random::<f64>()).collect();
        let hit = i % 10 == 9 && cfg.dim > 0;
        if hit {
            let k = rng.random_range(0..cfg.dim);
            x[k] = 1.0;
            for c in x.iter_mut().skip(k + 1) {
                *c = 1.0;
            }
        }
        let cube = match CubePoint::new(x.clone()) {
            Ok(c) => c,
            Err(e) => {
                tally.error(format!("point #{i}"), e);
                continue;
            }
        };
        let s = phi(&cube);
        let back = psi(&s);
        let err_cube = back
            .coords()
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let again = phi(&back);
        let err_simplex = again
            .masses()
            .iter()
            .zip(s.masses())
            .map(|(a, b)| (a - b).abs())
            .fold((again.remainder() - s.remainder()).abs(), f64::max);
        worst_cube = worst_cube.max(err_cube);
        worst_simplex = worst_simplex.max(err_simplex);
        tally.check(1.0 - err_cube / cfg.tol, 0.0, || format!("psi(phi(x)) point #{i}: {err_cube:.3e}"));
        tally.check(1.0 - err_simplex / cfg.tol, 0.0, || format!("phi(psi(s)) point #{i}: {err_simplex:.3e}"));
        if hit {
            let in_e = cube.in_e();
            tally.check(if in_e && s.remainder() == 0.0 { 1.0 } else { -1.0 }, 0.0, || {
                format!("point #{i} with a unit coordinate is not mapped to the exhausted set")
            });
        }
    }
    // direct simplex points with a vanishing remainder
    match SimplexPoint::new(vec![0.5, 0.25, 0.25], 0.0) {
        Ok(s) => {
            let c = psi(&s);
            let ok = c.coords() == [0.5, 0.5, 1.0] && phi(&c).masses() == s.masses();
            tally.check(if ok { 1.0 } else { -1.0 }, 0.0, || {
                format!("exhausted simplex point maps to {:?}", c.coords())
            });
        }
        Err(e) => tally.error("simplex point".into(), e),
    }
    tally.detail("max_cube_error", worst_cube);
    tally.detail("max_simplex_error", worst_simplex);
    tally.finish()
}

/// `sup |∏ p_t^{(i)} − 1|` decays at the rate `inf (a_i + b_i)` and stays below the
/// ergodicity bound.
pub fn check_ergodicity_decay(cfg: &ErgodicityConfig) -> CheckReport {
    let mut tally = Tally::new("ergodicity_decay");
    tally.param("alpha", cfg.alpha);
    tally.param("theta", cfg.theta);
    tally.param("n", cfg.n);
    tally.param("t_range", cfg.t);
    tally.param("n_basis", cfg.n_basis);
    tally.tol("relative_slope", cfg.slope_tol);
    tally.grid = format!("{} even t, diagonals on {} Chebyshev points", cfg.t_points, cfg.grid);
    let seq = match ParamSequence::two_parameter(cfg.alpha, cfg.theta, cfg.n)
        .and_then(|s| ParamSequence::finite(s.entries().to_vec()))
    {
        Ok(s) => s,
        Err(e) => {
            tally.error("sequence".into(), e);
            return tally.finish();
        }
    };
    let bases = match bases_for(&seq, cfg.n, cfg.n_basis) {
        Ok(b) => b,
        Err(e) => {
            tally.error("bases".into(), e);
            return tally.finish();
        }
    };
    let ts = lin_grid(cfg.t.0, cfg.t.1, cfg.t_points);
    let mut logs = Vec::new();
    let mut rows = Vec::new();
    for &t in &ts {
        // p_t − 1 is a sum of positive semidefinite kernels, so the supremum of
        // ∏(1 + (p_i − 1)) − 1 sits on the diagonal and factorises.
        let mut log_prod = 0.0;
        for b in &bases {
            match b.sup_deviation(t, cfg.grid) {
                Ok((d, _, _)) => log_prod += d.ln_1p(),
                Err(e) => tally.error(format!("deviation t={t}"), e),
            }
        }
        let dev = log_prod.exp_m1();
        logs.push(dev.ln());
        match ergodicity_bound(t, &seq) {
            Ok(bound) => {
                rows.push(json!({"t": t, "sup_deviation": dev, "bound": bound}));
                tally.check((bound - dev) / bound, 0.0, || {
                    format!("t={t}: deviation {dev:.4e} above bound {bound:.4e}")
                });
            }
            Err(e) => tally.error(format!("bound t={t}"), e),
        }
    }
    let slope = ls_slope(&ts, &logs);
    let expect = -seq.lambda_inf();
    let rel = (slope / expect - 1.0).abs();
    tally.detail("slope", slope);
    tally.detail("expected_slope", expect);
    tally.detail("rows", rows);
    tally.check(cfg.slope_tol - rel, 0.0, || format!("slope {slope:.4}, expected {expect}"));
    tally.finish()
}

/// Runs every check in a fixed order.
pub fn run_suite(cfg: &SuiteConfig) -> Vec<CheckReport> {
    suite_checks()
        .into_iter()
        .map(|(_, check)| check(cfg))
        .collect()
}

type SuiteCheck = fn(&SuiteConfig) -> CheckReport;

/// Names and entry points of the suite, in execution order.
pub fn suite_checks() -> Vec<(&'static str, SuiteCheck)> {
    vec![
        ("spectral_validity", |c| check_spectral_validity(&c.spectral)),
        ("harnack_1d", |c| check_harnack_1d(&c.harnack)),
        ("kernel_bounds_pointwise", |c| check_kernel_pointwise(&c.kernel_bounds)),
        ("kernel_short_time_slope", |c| check_kernel_short_time(&c.kernel_bounds)),
        ("kernel_long_time_slope", |c| check_kernel_long_time(&c.kernel_bounds)),
        ("ball_volume", |c| check_ball_volume(&c.ball_volume)),
        ("poincare", |c| check_poincare(&c.poincare)),
        ("super_poincare", |c| check_super_poincare(&c.super_poincare)),
        ("coupling", |c| check_coupling(&c.coupling)),
        ("stationarity", |c| check_stationarity(&c.stationarity)),
        ("mc_vs_spectral", |c| check_mc_vs_spectral(&c.mc)),
        ("product_harnack", |c| check_product_harnack(&c.product_harnack)),
        ("product_envelopes", |c| check_product_envelopes(&c.product_envelopes)),
        ("gamma_quadratic", |c| check_gamma_quadratic(&c.gamma)),
        ("phi_psi_roundtrip", |c| check_phi_psi_roundtrip(&c.roundtrip)),
        ("ergodicity_decay", |c| check_ergodicity_decay(&c.ergodicity)),
    ]
}

/// Runs one named check, or reports an unknown name as a failure.
pub fn run_check(name: &str, cfg: &SuiteConfig) -> CheckReport {
    match suite_checks().into_iter().find(|(n, _)| *n == name) {
        Some((_, check)) => check(cfg),
        None => CheckReport::errored(name, "unknown check"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_ordering() {
        assert_eq!(Status::Pass.worst(Status::Inconclusive), Status::Inconclusive);
        assert_eq!(Status::Inconclusive.worst(Status::Fail), Status::Fail);
        assert_eq!(Status::Fail.exit_code(), 1);
    }

    #[test]
    fn tally_fails_beyond_slack_only() {
        let mut t = Tally::new("t");
        t.check(-1e-3, 1e-2, || "inside slack".into());
        assert_eq!(t.failure_count, 0);
        t.check(-1e-1, 1e-2, || "outside".into());
        t.check(f64::NAN, 1.0, || "nan".into());
        let r = t.finish();
        assert_eq!(r.failure_count, 2);
        assert_eq!(r.status, Status::Fail);
        assert_eq!(r.margin, f64::MIN);
    }

    #[test]
    fn empty_tally_fails() {
        assert_eq!(Tally::new("t").finish().status, Status::Fail);
    }

    #[test]
    fn intrinsic_grid_is_uniform_in_distance() {
        let g = intrinsic_grid(33);
        assert_eq!(g[0], 0.0);
        assert!((g[32] - 1.0).abs() < 1e-15);
        for w in g.windows(2) {
            let d = rho(w[0], w[1]).unwrap();
            assert!((d - PI / 32.0).abs() < 1e-9);
        }
    }

    #[test]
    fn poly_eval_derivative() {
        let (v, d) = poly_eval(&[1.0, -2.0, 3.0], 0.5);
        assert!((v - 0.75).abs() < 1e-15 && (d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ramp_forms_small_eps_orders() {
        let p = pair(0.5, 0.5);
        let rules = IntervalRules::new(p, 40);
        // uniform law: π(f²) = ε³/3, π(f) = ε²/2
        let f = ramp_forms(&rules, Ramp::Left, 1e-3);
        assert!((f.sq / (1e-9 / 3.0) - 1.0).abs() < 1e-10);
        assert!((f.l1 / (1e-6 / 2.0) - 1.0).abs() < 1e-10);
        let tent = ramp_forms(&rules, Ramp::Tent, 0.1);
        assert!((tent.l1 - 0.01).abs() < 1e-14);
    }

    #[test]
    fn small_harnack_sweep_passes() {
        let cfg = HarnackConfig {
            params: vec![pair(0.5, 0.5)],
            p: vec![2.0],
            t: vec![0.5],
            grid: 9,
            n_basis: 40,
            slack_limit: 0.01,
        };
        let r = check_harnack_1d(&cfg);
        assert_eq!(r.status, Status::Pass, "{:?}", r.failures);
        assert!(r.margin >= -1e-12);
    }

    #[test]
    fn config_rejects_unknown_fields() {
        let bad = serde_json::from_str::<SuiteConfig>(r#"{"harnack": {"grid": 9, "bogus": 1}}"#);
        assert!(bad.is_err());
        let ok: SuiteConfig = serde_json::from_str(r#"{"harnack": {"grid": 9}}"#).unwrap();
        assert_eq!(ok.harnack.grid, 9);
        assert_eq!(ok.harnack.n_basis, HarnackConfig::default().n_basis);
    }

    #[test]
    fn unknown_check_is_reported() {
        let r = run_check("nope", &SuiteConfig::default());
        assert_eq!(r.status, Status::Fail);
    }

    #[test]
    fn roundtrip_check_small() {
        let r = check_phi_psi_roundtrip(&RoundtripConfig {
            n_points: 500,
            ..Default::default()
        });
        assert_eq!(r.status, Status::Pass, "{:?}", r.failures);
    }
}
