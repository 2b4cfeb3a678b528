//! Seeded simulation of the Wright–Fisher SDE, the coupling by change of measure and a
//! Monte-Carlo engine.
//!
//! Every path draws its Gaussian increments from its own ChaCha8 stream, keyed by
//! `(seed, path index)`, and results are collected in path order before any reduction.
//! Estimates are therefore bit-for-bit identical for any number of worker threads.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{k_ab, kernel_rate, rho_unchecked, WFParams};
use crate::error::{invalid, require_positive, require_unit, Error, Result};
use crate::stats::EstimateCI;

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Euler–Maruyama in `x`, clamped to `[0, 1]`.
    #[default]
    ProjectedEuler,
    /// Unit-diffusion coordinates `z = 2 arcsin √x`, with the boundary singularity of the
    /// drift treated implicitly and reflection at `0` and `π`.
    Lamperti,
}

/// The noise stream of path `index` under `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn normal_increment(rng: &mut ChaCha8Rng, sqrt_dt: f64) -> f64 {
    let g: f64 = rng.sample(StandardNormal);
    g * sqrt_dt
}

/// One projected Euler step `x + (a − (a+b)x)dt + √(x(1−x)) dW`, clamped to `[0, 1]`.
/// The flag reports whether clamping was needed.
pub fn step_wf(x: f64, dt: f64, dw: f64, p: WFParams) -> (f64, bool) {
    let raw = x + (p.a() - (p.a() + p.b()) * x) * dt + (x * (1.0 - x)).max(0.0).sqrt() * dw;
    let clamped = raw.clamp(0.0, 1.0);
    (clamped, clamped != raw)
}

/// Drift of `z = 2 arcsin √x`: `(4a − 1 − (4a + 4b − 2) sin²(z/2)) / (2 sin z)`.
pub fn lamperti_drift(z: f64, p: WFParams) -> f64 {
    let s = (z / 2.0).sin();
    (4.0 * p.a() - 1.0 - (4.0 * p.a() + 4.0 * p.b() - 2.0) * s * s) / (2.0 * z.sin())
}

pub fn to_lamperti(x: f64) -> f64 {
    2.0 * x.sqrt().asin()
}

pub fn from_lamperti(z: f64) -> f64 {
    (z / 2.0).sin().powi(2)
}

/// One step in Lamperti coordinates with extra drift `shift`. The singular part
/// `c/z` (near 0) or `−c/(π − z)` (near π) is solved implicitly.
pub fn step_lamperti(z: f64, dt: f64, dw: f64, p: WFParams, shift: f64) -> f64 {
    let c_a = (4.0 * p.a() - 1.0) / 2.0;
    let c_b = (4.0 * p.b() - 1.0) / 2.0;
    let z = z.clamp(1e-300, PI - 1e-16);
    let next = if z <= PI / 2.0 {
        let regular = lamperti_drift(z, p) - c_a / z;
        let w = z + (regular + shift) * dt + dw;
        (w + (w * w + 4.0 * c_a * dt).max(0.0).sqrt()) / 2.0
    } else {
        let u = PI - z;
        let regular = lamperti_drift(z, p) + c_b / u;
        let w = u - (regular + shift) * dt - dw;
        PI - (w + (w * w + 4.0 * c_b * dt).max(0.0).sqrt()) / 2.0
    };
    reflect(next)
}

fn reflect(z: f64) -> f64 {
    let mut z = z.rem_euclid(2.0 * PI);
    if z > PI {
        z = 2.0 * PI - z;
    }
    z
}

fn step_count(t: f64, dt: f64) -> Result<usize> {
    require_positive("T", t)?;
    require_positive("dt", dt)?;
    if dt > t * (1.0 + 1e-12) {
        return Err(invalid("dt", format!("step {dt} exceeds horizon {t}")));
    }
    Ok(((t / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize)
}

/// Runs one path of `steps` steps of size `dt`, calling `visit(k, x_k)` for `k = 0..=steps`.
/// Returns the number of clamping events.
#[allow(clippy::too_many_arguments)]
pub fn run_path<V: FnMut(usize, f64)>(
    x0: f64,
    steps: usize,
    dt: f64,
    p: WFParams,
    scheme: Scheme,
    rng: &mut ChaCha8Rng,
    mut visit: V,
) -> usize {
    let sqrt_dt = dt.sqrt();
    let mut clamps = 0;
    visit(0, x0);
    match scheme {
        Scheme::ProjectedEuler => {
            let mut x = x0;
            for k in 1..=steps {
                let (next, clamped) = step_wf(x, dt, normal_increment(rng, sqrt_dt), p);
                clamps += clamped as usize;
                x = next;
                visit(k, x);
            }
        }
        Scheme::Lamperti => {
            let mut z = to_lamperti(x0);
            for k in 1..=steps {
                z = step_lamperti(z, dt, normal_increment(rng, sqrt_dt), p, 0.0);
                visit(k, from_lamperti(z));
            }
        }
    }
    clamps
}

/// A simulated trajectory on the grid `t_k = k·dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    pub seed: u64,
    pub scheme: Scheme,
    pub dt: f64,
    pub clamp_count: usize,
}

/// Simulates one path on stream 0 of `seed`. The step is shrunk to `T/⌈T/dt⌉`.
pub fn simulate_path(
    x0: f64,
    t: f64,
    dt: f64,
    p: WFParams,
    seed: u64,
    scheme: Scheme,
) -> Result<PathSample> {
    simulate_path_stream(x0, t, dt, p, seed, 0, scheme)
}

/// As [`simulate_path`], on an explicit stream index.
pub fn simulate_path_stream(
    x0: f64,
    t: f64,
    dt: f64,
    p: WFParams,
    seed: u64,
    stream: u64,
    scheme: Scheme,
) -> Result<PathSample> {
    require_unit(x0)?;
    let steps = step_count(t, dt)?;
    let h = t / steps as f64;
    let mut states = Vec::with_capacity(steps + 1);
    let mut rng = path_rng(seed, stream);
    let clamp_count = run_path(x0, steps, h, p, scheme, &mut rng, |_, x| states.push(x));
    Ok(PathSample {
        times: (0..=steps).map(|k| k as f64 * h).collect(),
        states,
        seed,
        scheme,
        dt: h,
        clamp_count,
    })
}

/// Pooled states of `n_paths` independent paths, each observed every `thin` steps after
/// `burn_in` time units.
#[allow(clippy::too_many_arguments)]
pub fn stationary_samples(
    x0: f64,
    t: f64,
    dt: f64,
    burn_in: f64,
    thin: usize,
    n_paths: usize,
    p: WFParams,
    seed: u64,
    scheme: Scheme,
) -> Result<Vec<f64>> {
    require_unit(x0)?;
    let steps = step_count(t, dt)?;
    let h = t / steps as f64;
    let first = (burn_in / h).ceil() as usize;
    let thin = thin.max(1);
    let per_path: Vec<Vec<f64>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            let mut out = Vec::with_capacity((steps - first.min(steps)) / thin + 1);
            run_path(x0, steps, h, p, scheme, &mut rng, |k, x| {
                if k >= first && (k - first) % thin == 0 {
                    out.push(x);
                }
            });
            out
        })
        .collect();
    Ok(per_path.concat())
}

/// `E f(x_t)` estimated over `n_paths` independent paths.
#[allow(clippy::too_many_arguments)]
pub fn mc_expectation<F: Fn(f64) -> f64 + Sync>(
    f: F,
    x0: f64,
    t: f64,
    p: WFParams,
    n_paths: usize,
    dt: f64,
    seed: u64,
    scheme: Scheme,
) -> Result<EstimateCI> {
    let fs: [&(dyn Fn(f64) -> f64 + Sync); 1] = [&f];
    Ok(mc_expectations(&fs, x0, &[t], p, n_paths, dt, seed, scheme)?[0][0])
}

/// `E f_j(x_{t_k})` for several functions and times from one set of paths.
/// Result is indexed `[j][k]`. Times are rounded to the step grid.
#[allow(clippy::too_many_arguments)]
pub fn mc_expectations(
    fs: &[&(dyn Fn(f64) -> f64 + Sync)],
    x0: f64,
    times: &[f64],
    p: WFParams,
    n_paths: usize,
    dt: f64,
    seed: u64,
    scheme: Scheme,
) -> Result<Vec<Vec<EstimateCI>>> {
    require_unit(x0)?;
    if n_paths < 100 {
        return Err(invalid("n_paths", format!("need at least 100 paths, got {n_paths}")));
    }
    if times.is_empty() {
        return Err(invalid("times", "need at least one time"));
    }
    for &t in times {
        require_positive("t", t)?;
    }
    require_positive("dt", dt)?;
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let steps = step_count(t_max, dt.min(t_max))?;
    let h = t_max / steps as f64;
    let marks: Vec<usize> = times.iter().map(|t| (t / h).round() as usize).collect();
    let states: Vec<Vec<f64>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            let mut at = vec![0.0; marks.len()];
            run_path(x0, steps, h, p, scheme, &mut rng, |k, x| {
                for (slot, &m) in at.iter_mut().zip(&marks) {
                    if m == k {
                        *slot = x;
                    }
                }
            });
            at
        })
        .collect();
    Ok(fs
        .iter()
        .map(|f| {
            (0..marks.len())
                .map(|k| {
                    let samples: Vec<f64> = states.iter().map(|s| f(s[k])).collect();
                    EstimateCI::from_samples(&samples, seed)
                })
                .collect()
        })
        .collect())
}

/// The deterministic control of the coupling: drift `ξ(t)` and the distance envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingControl {
    pub rho0: f64,
    pub k: f64,
    pub horizon: f64,
}

impl CouplingControl {
    /// `ξ(t) = ρ₀ e^{Kt} / ∫₀^T e^{2Ks} ds`.
    pub fn xi(&self, t: f64) -> f64 {
        if self.k == 0.0 {
            self.rho0 / self.horizon
        } else {
            self.rho0 * 2.0 * self.k * (self.k * t).exp() / (2.0 * self.k * self.horizon).exp_m1()
        }
    }

    /// `ρ₀ e^{−Kt} ∫_t^T e^{2Ks} ds / ∫₀^T e^{2Ks} ds`, which vanishes at `T`.
    pub fn envelope(&self, t: f64) -> f64 {
        let t = t.min(self.horizon);
        if self.k == 0.0 {
            self.rho0 * (self.horizon - t) / self.horizon
        } else {
            let k = self.k;
            self.rho0 * (-k * t).exp() * (-2.0 * k * (self.horizon - t)).exp_m1()
                / (-2.0 * k * self.horizon).exp_m1()
        }
    }
}

/// `max(10√dt, 1e−6)`.
pub fn coupling_threshold(dt: f64) -> f64 {
    (10.0 * dt.sqrt()).max(1e-6)
}

/// Closed-form bound `exp[pKρ² / ((p−1)²(e^{2KT} − 1))]` on `E R^{p/(p−1)}`
/// (with `2T` in place of `(e^{2KT} − 1)/K` at `K = 0`).
pub fn girsanov_bound(p: f64, k: f64, rho0: f64, horizon: f64) -> f64 {
    (p * rho0 * rho0 * kernel_rate(k, 2.0 * horizon) / ((p - 1.0) * (p - 1.0))).exp()
}

/// A coupled pair `(x, y)` driven by common noise, `y` carrying the extra drift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingPath {
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Coupling time; `None` if the paths did not meet by `T`.
    pub tau: Option<f64>,
    pub girsanov_log: f64,
    pub coupled: bool,
    /// Whether `(x₀, y₀)` were swapped so that `x₀ ≤ y₀`.
    pub swapped: bool,
    pub control: CouplingControl,
}

/// Per-path outcome of a coupling run without the stored trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingSummary {
    pub tau: Option<f64>,
    pub girsanov_log: f64,
    /// Grid points where `ρ(x, y)` exceeds the envelope by more than `5√dt`.
    pub envelope_violations: usize,
    pub points: usize,
    /// Grid points before coupling where `x > y`.
    pub order_violations: usize,
}

impl CouplingSummary {
    pub fn coupled(&self) -> bool {
        self.tau.is_some()
    }
}

struct CouplingSetup {
    x0: f64,
    y0: f64,
    swapped: bool,
    steps: usize,
    h: f64,
    control: CouplingControl,
}

fn coupling_setup(x0: f64, y0: f64, t: f64, dt: f64, p: WFParams) -> Result<CouplingSetup> {
    require_unit(x0)?;
    require_unit(y0)?;
    if !p.harnack_regime() {
        return Err(Error::Hypothesis(format!(
            "coupling needs min(a, b) >= 1/4, got a = {}, b = {}",
            p.a(),
            p.b()
        )));
    }
    let steps = step_count(t, dt)?;
    let (x0, y0, swapped) = if x0 <= y0 { (x0, y0, false) } else { (y0, x0, true) };
    Ok(CouplingSetup {
        x0,
        y0,
        swapped,
        steps,
        h: t / steps as f64,
        control: CouplingControl {
            rho0: rho_unchecked(x0, y0),
            k: k_ab(p),
            horizon: t,
        },
    })
}

/// Runs one coupled pair, calling `visit(k, x_k, y_k)` on every grid point.
fn run_coupling<V: FnMut(usize, f64, f64)>(
    s: &CouplingSetup,
    p: WFParams,
    scheme: Scheme,
    rng: &mut ChaCha8Rng,
    mut visit: V,
) -> CouplingSummary {
    let eps = coupling_threshold(s.h);
    let slack = 5.0 * s.h.sqrt();
    let sqrt_h = s.h.sqrt();
    let mut summary = CouplingSummary {
        tau: None,
        girsanov_log: 0.0,
        envelope_violations: 0,
        points: s.steps + 1,
        order_violations: 0,
    };
    let (mut x, mut y) = (s.x0, s.y0);
    let (mut zx, mut zy) = (to_lamperti(x), to_lamperti(y));
    if rho_unchecked(x, y) <= eps {
        summary.tau = Some(0.0);
        y = x;
    }
    visit(0, x, y);
    for k in 1..=s.steps {
        let t_prev = (k - 1) as f64 * s.h;
        let dw = normal_increment(rng, sqrt_h);
        if summary.tau.is_some() {
            x = match scheme {
                Scheme::ProjectedEuler => step_wf(x, s.h, dw, p).0,
                Scheme::Lamperti => {
                    zx = step_lamperti(zx, s.h, dw, p, 0.0);
                    from_lamperti(zx)
                }
            };
            y = x;
        } else {
            let xi = s.control.xi(t_prev);
            summary.girsanov_log += xi * dw - 0.5 * xi * xi * s.h;
            match scheme {
                Scheme::ProjectedEuler => {
                    x = step_wf(x, s.h, dw, p).0;
                    let sigma = (y * (1.0 - y)).max(0.0).sqrt();
                    y = (step_wf(y, s.h, dw, p).0 - sigma * xi * s.h).clamp(0.0, 1.0);
                }
                Scheme::Lamperti => {
                    zx = step_lamperti(zx, s.h, dw, p, 0.0);
                    zy = step_lamperti(zy, s.h, dw, p, -xi);
                    x = from_lamperti(zx);
                    y = from_lamperti(zy);
                }
            }
            let t = k as f64 * s.h;
            let crossed = match scheme {
                Scheme::ProjectedEuler => y <= x,
                Scheme::Lamperti => zy <= zx,
            };
            if crossed || rho_unchecked(x, y) <= eps {
                summary.tau = Some(t);
                y = x;
                zy = zx;
            } else {
                if x > y {
                    summary.order_violations += 1;
                }
                if rho_unchecked(x, y) > s.control.envelope(t) + slack {
                    summary.envelope_violations += 1;
                }
            }
        }
        visit(k, x, y);
    }
    summary
}

/// Simulates one coupled pair on stream 0 of `seed`, storing both paths.
pub fn simulate_coupling(
    x0: f64,
    y0: f64,
    t: f64,
    dt: f64,
    p: WFParams,
    seed: u64,
    scheme: Scheme,
) -> Result<CouplingPath> {
    let setup = coupling_setup(x0, y0, t, dt, p)?;
    let mut xs = Vec::with_capacity(setup.steps + 1);
    let mut ys = Vec::with_capacity(setup.steps + 1);
    let mut rng = path_rng(seed, 0);
    let summary = run_coupling(&setup, p, scheme, &mut rng, |_, x, y| {
        xs.push(x);
        ys.push(y);
    });
    Ok(CouplingPath {
        times: (0..=setup.steps).map(|k| k as f64 * setup.h).collect(),
        x: xs,
        y: ys,
        tau: summary.tau,
        girsanov_log: summary.girsanov_log,
        coupled: summary.coupled(),
        swapped: setup.swapped,
        control: setup.control,
    })
}

/// Runs `n_paths` coupled pairs (path `i` on stream `i`) without storing trajectories.
#[allow(clippy::too_many_arguments)]
pub fn coupling_summaries(
    x0: f64,
    y0: f64,
    t: f64,
    dt: f64,
    p: WFParams,
    n_paths: usize,
    seed: u64,
    scheme: Scheme,
) -> Result<(CouplingControl, Vec<CouplingSummary>)> {
    let setup = coupling_setup(x0, y0, t, dt, p)?;
    let out = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            run_coupling(&setup, p, scheme, &mut rng, |_, _, _| {})
        })
        .collect();
    Ok((setup.control, out))
}

/// `E R^q` over coupled paths, with the number of rejected (uncoupled) paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GirsanovMoment {
    pub estimate: EstimateCI,
    pub rejected: usize,
}

/// Estimates `E R^q` from coupling outcomes; failed couplings are rejected and counted.
pub fn girsanov_moment(summaries: &[CouplingSummary], q: f64, seed: u64) -> Result<GirsanovMoment> {
    if !(q > 1.0) {
        return Err(invalid("q", format!("must be > 1, got {q}")));
    }
    let samples: Vec<f64> = summaries
        .iter()
        .filter(|s| s.coupled())
        .map(|s| (q * s.girsanov_log).exp())
        .collect();
    let rejected = summaries.len() - samples.len();
    if samples.len() < 2 {
        return Err(Error::Degenerate(format!(
            "only {} of {} couplings succeeded",
            samples.len(),
            summaries.len()
        )));
    }
    Ok(GirsanovMoment {
        estimate: EstimateCI::from_samples(&samples, seed),
        rejected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wf(a: f64, b: f64) -> WFParams {
        WFParams::new(a, b).unwrap()
    }

    #[test]
    fn step_examples() {
        let p = wf(0.5, 1.5);
        let m = p.stationary_mean();
        assert_eq!(step_wf(m, 0.01, 0.0, p).0, m);
        let (x, clamped) = step_wf(0.0, 0.01, 0.0, p);
        assert!((x - 0.005).abs() < 1e-15 && !clamped);
        let (x, clamped) = step_wf(0.99, 0.01, 5.0, p);
        assert_eq!(x, 1.0);
        assert!(clamped);
    }

    #[test]
    fn lamperti_round_trip_and_drift() {
        for x in [0.0, 0.2, 0.5, 1.0] {
            assert!((from_lamperti(to_lamperti(x)) - x).abs() < 1e-15);
        }
        // a = b = 1/2: the drift is cot(z)/2
        let p = wf(0.5, 0.5);
        for z in [0.3, 1.2, 2.9] {
            assert!((lamperti_drift(z, p) - 0.5 / z.tan()).abs() < 1e-14);
        }
        for z in [1e-9, 0.5, 3.1] {
            let next = step_lamperti(z, 1e-3, -0.2, p, 0.0);
            assert!((0.0..=PI).contains(&next));
        }
    }

    #[test]
    fn single_step_path() {
        let path = simulate_path(0.3, 0.5, 0.5, wf(0.5, 0.5), 3, Scheme::ProjectedEuler).unwrap();
        assert_eq!(path.states.len(), 2);
        assert_eq!(path.times, vec![0.0, 0.5]);
    }

    #[test]
    fn paths_are_reproducible() {
        for scheme in [Scheme::ProjectedEuler, Scheme::Lamperti] {
            let a = simulate_path(0.3, 1.0, 1e-3, wf(0.3, 0.7), 42, scheme).unwrap();
            let b = simulate_path(0.3, 1.0, 1e-3, wf(0.3, 0.7), 42, scheme).unwrap();
            assert_eq!(a, b);
            assert!(a.states.iter().all(|x| (0.0..=1.0).contains(x)));
            let c = simulate_path(0.3, 1.0, 1e-3, wf(0.3, 0.7), 43, scheme).unwrap();
            assert_ne!(a.states, c.states);
        }
    }

    #[test]
    fn mean_follows_linear_ode() {
        let p = wf(0.5, 1.0);
        let (x0, t) = (0.9, 0.7);
        let est = mc_expectation(|x| x, x0, t, p, 20_000, 1e-3, 11, Scheme::ProjectedEuler).unwrap();
        let m = p.stationary_mean();
        let exact = m + (x0 - m) * (-1.5 * t).exp();
        assert!((est.mean - exact).abs() < 3.0 * est.std_error + 1e-3);
        let one = mc_expectation(|_| 1.0, x0, t, p, 100, 1e-2, 1, Scheme::ProjectedEuler).unwrap();
        assert_eq!((one.mean, one.std_error), (1.0, 0.0));
    }

    #[test]
    fn mc_needs_enough_paths() {
        assert!(mc_expectation(|x| x, 0.5, 1.0, wf(0.5, 0.5), 10, 1e-2, 1, Scheme::Lamperti).is_err());
    }

    #[test]
    fn mc_independent_of_thread_count() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| mc_expectation(|x| x * x, 0.2, 0.5, wf(0.5, 0.5), 500, 1e-2, 9, Scheme::ProjectedEuler).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn control_examples() {
        let c = CouplingControl { rho0: 1.5, k: 0.0, horizon: 2.0 };
        assert_eq!(c.xi(0.3), 0.75);
        assert_eq!(c.envelope(2.0), 0.0);
        let c = CouplingControl { rho0: 1.5, k: 0.5, horizon: 2.0 };
        assert!((c.envelope(0.0) - 1.5).abs() < 1e-15);
        assert!(c.envelope(2.0).abs() < 1e-15);
        // ∫₀^T e^{Ks} ξ(s) ds = ρ₀ drives the envelope to zero
        let n = 100_000;
        let h = 2.0 / n as f64;
        let integral: f64 = (0..n)
            .map(|k| {
                let s = (k as f64 + 0.5) * h;
                (0.5 * s).exp() * c.xi(s) * h
            })
            .sum();
        assert!((integral - 1.5).abs() < 1e-8);
        let zero = girsanov_bound(2.0, 0.0, 1.0, 1.0);
        assert!((zero - (2.0f64 / 2.0).exp()).abs() < 1e-14);
    }

    #[test]
    fn identical_starts_couple_immediately() {
        let path = simulate_coupling(0.4, 0.4, 1.0, 1e-3, wf(0.5, 0.5), 5, Scheme::Lamperti).unwrap();
        assert_eq!(path.tau, Some(0.0));
        assert_eq!(path.girsanov_log, 0.0);
        assert_eq!(path.x, path.y);
    }

    #[test]
    fn coupling_merges_and_orders() {
        for scheme in [Scheme::Lamperti, Scheme::ProjectedEuler] {
            let path = simulate_coupling(0.9, 0.1, 2.0, 1e-3, wf(0.5, 0.5), 8, scheme).unwrap();
            assert!(path.swapped);
            assert!(path.coupled);
            let tau = path.tau.unwrap();
            for (k, t) in path.times.iter().enumerate() {
                if *t >= tau {
                    assert_eq!(path.x[k], path.y[k]);
                }
            }
        }
    }

    #[test]
    fn coupling_rejects_outside_regime() {
        assert!(simulate_coupling(0.1, 0.9, 1.0, 1e-3, wf(0.2, 0.5), 1, Scheme::Lamperti).is_err());
    }

    #[test]
    fn girsanov_moment_examples() {
        let (_, s) = coupling_summaries(0.3, 0.3, 1.0, 1e-2, wf(0.5, 0.5), 50, 2, Scheme::Lamperti).unwrap();
        let m = girsanov_moment(&s, 2.0, 2).unwrap();
        assert_eq!((m.estimate.mean, m.rejected), (1.0, 0));
        let (c, s) = coupling_summaries(0.2, 0.8, 1.0, 1e-3, wf(0.5, 0.5), 2000, 3, Scheme::Lamperti).unwrap();
        let m = girsanov_moment(&s, 2.0, 3).unwrap();
        let bound = girsanov_bound(2.0, c.k, c.rho0, 1.0);
        assert!(m.estimate.mean - 3.0 * m.estimate.std_error <= bound);
        assert!(s.iter().all(|x| x.girsanov_log.is_finite()));
    }
}
