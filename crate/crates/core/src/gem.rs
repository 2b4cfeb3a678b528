//! Stick-breaking coordinates, GEM samplers, the truncated GEM diffusion and its
//! product-form kernel and Harnack bounds.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::Beta;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{k_ab, kernel_rate, rate_sum_from, rho_unchecked, ParamSequence, SeriesValue, C0};
use crate::error::{invalid, require_positive, Error, Result};
use crate::sim::{path_rng, simulate_path_stream, Scheme};
use crate::spectral::OrthoBasis;

/// Below this, a stored partial sum counts as having exhausted the unit mass.
pub const EXHAUSTED: f64 = 1e-12;

/// Tail tolerance used for the rate series behind the product bounds.
const TAIL_TOL: f64 = 1e-10;

/// A truncated point of `[0, 1]^ℕ` (stick proportions).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubePoint {
    coords: Vec<f64>,
}

impl CubePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = coords.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::Domain {
                value: bad,
                domain: "[0, 1]",
            });
        }
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Membership in `E`: once a coordinate equals 1, every later stored one does too.
    pub fn in_e(&self) -> bool {
        match self.coords.iter().position(|&c| c == 1.0) {
            None => true,
            Some(i) => self.coords[i..].iter().all(|&c| c == 1.0),
        }
    }
}

/// A truncated point of the closed infinite simplex: `N` masses and the remaining mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexPoint {
    masses: Vec<f64>,
    remainder: f64,
}

impl SimplexPoint {
    /// Validates nonnegativity and `Σ masses + remainder = 1` within `1e−12`.
    pub fn new(masses: Vec<f64>, remainder: f64) -> Result<Self> {
        if let Some(&bad) = masses.iter().chain(std::iter::once(&remainder)).find(|m| !(**m >= 0.0)) {
            return Err(invalid("masses", format!("entries must be >= 0, got {bad}")));
        }
        let total = masses.iter().sum::<f64>() + remainder;
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid("masses", format!("masses and remainder sum to {total}, not 1")));
        }
        Ok(Self { masses, remainder })
    }

    /// A point whose remainder is `1 − Σ masses`.
    pub fn from_masses(masses: Vec<f64>) -> Result<Self> {
        let remainder = (1.0 - masses.iter().sum::<f64>()).max(0.0);
        Self::new(masses, remainder)
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn remainder(&self) -> f64 {
        self.remainder
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// `|Σ masses + remainder − 1|`.
    pub fn mass_defect(&self) -> f64 {
        (self.masses.iter().sum::<f64>() + self.remainder - 1.0).abs()
    }
}

/// `φ_n(x) = x_n ∏_{i<n} (1 − x_i)`, remainder `∏_{i≤N} (1 − x_i)`.
pub fn phi(x: &CubePoint) -> SimplexPoint {
    let mut left = 1.0;
    let masses = x
        .coords
        .iter()
        .map(|&c| {
            let m = c * left;
            left *= 1.0 - c;
            m
        })
        .collect();
    SimplexPoint { masses, remainder: left }
}

/// `ψ_n(s) = s_n / (1 − Σ_{i<n} s_i)`, with `0/0 = 1` once the mass is exhausted.
///
/// The denominator is taken as `remainder + Σ_{i≥n} s_i`, which equals `1 − Σ_{i<n} s_i`
/// but does not suffer cancellation.
pub fn psi(s: &SimplexPoint) -> CubePoint {
    let n = s.masses.len();
    let mut left = vec![0.0; n];
    let mut acc = s.remainder;
    for i in (0..n).rev() {
        acc += s.masses[i];
        left[i] = acc;
    }
    let coords = (0..n)
        .map(|i| {
            if left[i] <= EXHAUSTED {
                1.0
            } else {
                (s.masses[i] / left[i]).clamp(0.0, 1.0)
            }
        })
        .collect();
    CubePoint { coords }
}

/// A stick-breaking draw with its sticks and the expected remainder after `N` sticks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GEMSample {
    pub point: SimplexPoint,
    pub sticks: Vec<f64>,
    pub seed: u64,
    /// `E ∏ (1 − U_i) = ∏ b_i / (a_i + b_i)`.
    pub expected_remainder: f64,
}

fn sequence_prefix(seq: &ParamSequence, n: usize) -> Result<Vec<crate::WFParams>> {
    (1..=n)
        .map(|i| {
            seq.param(i)
                .ok_or_else(|| invalid("N", format!("sequence has only {} entries", seq.len())))
        })
        .collect()
}

/// Draws `U_i ~ Beta(2a_i, 2b_i)` for `i ≤ N` and maps them through `φ`.
pub fn sample_gem(seq: &ParamSequence, n: usize, seed: u64) -> Result<GEMSample> {
    sample_gem_stream(seq, n, seed, 0)
}

fn sample_gem_stream(seq: &ParamSequence, n: usize, seed: u64, stream: u64) -> Result<GEMSample> {
    let params = sequence_prefix(seq, n)?;
    let mut rng = path_rng(seed, stream);
    let mut sticks = Vec::with_capacity(n);
    for p in &params {
        let dist = Beta::new(2.0 * p.a(), 2.0 * p.b())
            .map_err(|e| invalid("sequence", e.to_string()))?;
        sticks.push(rng.sample(dist));
    }
    let point = phi(&CubePoint::new(sticks.clone())?);
    Ok(GEMSample {
        point,
        sticks,
        seed,
        expected_remainder: params.iter().map(|p| p.b() / (p.a() + p.b())).product(),
    })
}

/// `count` independent draws, draw `j` on stream `j`.
pub fn sample_gem_many(seq: &ParamSequence, n: usize, count: usize, seed: u64) -> Result<Vec<GEMSample>> {
    (0..count as u64)
        .into_par_iter()
        .map(|j| sample_gem_stream(seq, n, seed, j))
        .collect()
}

/// `a_i = (1−α)/2`, `b_i = (θ + αi)/2` for `i ≤ N`.
pub fn two_param_params(alpha: f64, theta: f64, n: usize) -> Result<ParamSequence> {
    ParamSequence::two_parameter(alpha, theta, n)
}

/// Simplex-valued trajectory of the truncated GEM diffusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GemPath {
    pub times: Vec<f64>,
    pub points: Vec<SimplexPoint>,
    pub seed: u64,
}

/// Runs `N` independent Wright–Fisher coordinates from `ψ(s₀)` (coordinate `i` on stream
/// `i`) and records `φ` of the state every `stride` steps.
#[allow(clippy::too_many_arguments)]
pub fn simulate_gem_path(
    s0: &SimplexPoint,
    seq: &ParamSequence,
    t: f64,
    dt: f64,
    n: usize,
    seed: u64,
    scheme: Scheme,
    stride: usize,
) -> Result<GemPath> {
    if n == 0 || n > s0.len() {
        return Err(invalid("N", format!("need 1 <= N <= {}, got {n}", s0.len())));
    }
    let params = sequence_prefix(seq, n)?;
    let start = psi(s0);
    let coords: Vec<_> = (0..n)
        .into_par_iter()
        .map(|i| simulate_path_stream(start.coords[i], t, dt, params[i], seed, i as u64, scheme))
        .collect::<Result<_>>()?;
    let stride = stride.max(1);
    let steps = coords[0].states.len();
    let picks: Vec<usize> = (0..steps).step_by(stride).chain(
        ((steps - 1) % stride != 0).then_some(steps - 1),
    ).collect();
    let points = picks
        .iter()
        .map(|&k| phi(&CubePoint { coords: coords.iter().map(|c| c.states[k]).collect() }))
        .collect();
    Ok(GemPath {
        times: picks.iter().map(|&k| coords[0].times[k]).collect(),
        points,
        seed,
    })
}

/// Truncated product kernel with certified envelopes for the full product.
///
/// The envelopes are kept as logarithms: the omitted-coordinate factors easily exceed
/// the range of `f64` at short times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductKernel {
    pub value: f64,
    pub log_lower: f64,
    pub log_upper: f64,
    /// `Σ_{i > N} K_i / (e^{K_i t} − 1)` bound over the coordinates not evaluated.
    pub tail_rate: f64,
    pub factors: Vec<f64>,
}

/// `∏_{i ≤ N} p_t^{(i)}(x_i, y_i)` in cube coordinates. The envelopes multiply the
/// per-factor intervals `[v − e, v + e]` by `exp[±2ρ(0,1)² Σ_{i>N} K_i/(e^{K_i t} − 1)]`,
/// the two-sided kernel bound applied to every omitted coordinate.
pub fn product_kernel(
    t: f64,
    x: &CubePoint,
    y: &CubePoint,
    seq: &ParamSequence,
    bases: &[OrthoBasis],
) -> Result<ProductKernel> {
    require_positive("t", t)?;
    let n = x.len().min(y.len()).min(bases.len());
    if n == 0 {
        return Err(invalid("N", "need at least one coordinate"));
    }
    let mut value = 1.0;
    let (mut log_lower, mut log_upper) = (0.0, 0.0);
    let mut factors = Vec::with_capacity(n);
    for i in 0..n {
        let k = bases[i].heat_kernel(t, x.coords[i], y.coords[i])?;
        value *= k.value;
        log_lower += (k.value - k.truncation_error).max(0.0).ln();
        log_upper += (k.value + k.truncation_error).ln();
        factors.push(k.value);
    }
    let has_tail = seq.rule().is_some() || seq.len() > n;
    let tail_rate = if has_tail {
        if !seq.all_in_harnack_regime() {
            return Err(Error::Hypothesis(
                "omitted coordinates must satisfy min(a_i, b_i) >= 1/4".into(),
            ));
        }
        rate_sum_from(seq, n + 1, t, TAIL_TOL)?.upper()
    } else {
        0.0
    };
    let spread = 2.0 * PI * PI * tail_rate;
    Ok(ProductKernel {
        value,
        log_lower: log_lower - spread,
        log_upper: log_upper + spread,
        tail_rate,
        factors,
    })
}

/// `Σ_i p K_i ρ(x_i, y_i)² / ((p − 1)(e^{2K_i t} − 1))` over the stored coordinates, with a
/// certified bound for the rest from `ρ ≤ π`.
pub fn product_harnack_bound(
    p: f64,
    t: f64,
    x: &CubePoint,
    y: &CubePoint,
    seq: &ParamSequence,
) -> Result<SeriesValue> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(invalid("p", format!("must be > 1, got {p}")));
    }
    require_positive("t", t)?;
    if !seq.all_in_harnack_regime() {
        return Err(Error::Hypothesis(
            "every coordinate must satisfy min(a_i, b_i) >= 1/4".into(),
        ));
    }
    let n = x.len().min(y.len());
    let params = sequence_prefix(seq, n)?;
    let factor = p / (p - 1.0);
    let value: f64 = (0..n)
        .map(|i| {
            let r = rho_unchecked(x.coords[i], y.coords[i]);
            factor * r * r * kernel_rate(k_ab(params[i]), 2.0 * t)
        })
        .sum();
    let tail = rate_sum_from(seq, n + 1, 2.0 * t, TAIL_TOL)?;
    Ok(SeriesValue {
        value,
        tail_bound: factor * PI * PI * tail.upper(),
        terms_used: n + tail.terms_used,
    })
}

/// Two-sided uniform kernel bounds from `γ(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformBounds {
    pub t: f64,
    pub gamma: SeriesValue,
    /// `c₀γ(t)` with `c₀ = 2ρ(0, 1)`: the bounds are `exp[∓c₀γ(t)]`.
    pub log_c0: f64,
    /// `2ρ(0, 1)²γ(t)`, from the product of the one-dimensional two-sided bounds.
    pub log_conservative: f64,
    /// `true` when every coordinate has `min(a_i, b_i) ≥ 1/4`, so the prefactor is 1;
    /// otherwise the bounds hold only up to an unspecified constant.
    pub c_explicit: bool,
}

pub fn kernel_uniform_bounds(t: f64, seq: &ParamSequence) -> Result<UniformBounds> {
    let gamma = rate_sum_from(seq, 1, t, TAIL_TOL)?;
    let g = gamma.upper();
    Ok(UniformBounds {
        t,
        gamma,
        log_c0: C0 * g,
        log_conservative: 2.0 * PI * PI * g,
        c_explicit: seq.all_in_harnack_regime(),
    })
}

/// `exp[c/t² − λt]`.
pub fn ergodicity_bound_formula(t: f64, lambda: f64, c: f64) -> f64 {
    (c / (t * t) - lambda * t).exp()
}

/// Certified bound on `sup |p_t − 1|` from the `L¹ → L∞` splitting at `t/2`:
/// `sup |p_t − 1| ≤ (sup_x p_1(x, x) − 1)·e^{−λ(t−1)}` for `t ≥ 1`, with
/// `λ = inf (a_i + b_i)` and `p_1` bounded by the uniform kernel bound. For `t < 1` only the
/// uniform bound `e^{L(t)} − 1` is available.
///
/// The closed form `exp[c/t² − λt]` ([`ergodicity_bound_formula`]) cannot hold for large
/// `t` with any fixed `c`: the prefactor `sup_x p_1(x, x) − 1` already exceeds 1 for a
/// single coordinate.
pub fn ergodicity_bound(t: f64, seq: &ParamSequence) -> Result<f64> {
    require_positive("t", t)?;
    let log_bound = |s: f64| -> Result<f64> {
        let u = kernel_uniform_bounds(s, seq)?;
        Ok(if u.c_explicit { u.log_conservative } else { u.log_c0 })
    };
    let short = log_bound(t)?.exp_m1();
    if t < 1.0 {
        return Ok(short);
    }
    let split = log_bound(1.0)?.exp_m1() * (-seq.lambda_inf() * (t - 1.0)).exp();
    Ok(short.min(split))
}
