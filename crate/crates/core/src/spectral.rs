//! Jacobi eigenbasis of the one-dimensional generator
//! `L = ½x(1−x)∂² + (a − (a+b)x)∂`, orthonormal in `L²(Beta(2a, 2b))`.
//!
//! The heat kernel with respect to the stationary law is
//! `p_t(x, y) = Σ_n e^{−λ_n t} Q_n(x) Q_n(y)` with `λ_n = n(n−1)/2 + n(a+b)`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::constants::WFParams;
use crate::error::{invalid, require_positive, require_unit, Error, Result};
use crate::stats::{chebyshev_unit_grid, compensated_sum};

/// Relative tolerance on the truncation bound of kernel and semigroup evaluations.
pub const DEFAULT_KERNEL_TOL: f64 = 1e-6;

const EIGEN_TOL: f64 = 1e-8;
/// Degrees up to which the eigen-relation is also checked on monomial coefficients.
const COEFF_CHECK_DEGREE: usize = 12;
const ENDPOINT_EXTENSION: usize = 4096;

/// Monic recurrence coefficients `(α_n, β_n)` of the Jacobi polynomials orthogonal for
/// `Beta(p, q)` on `[0, 1]`; `β_0 = 1` (total mass).
pub fn jacobi_recurrence(p: f64, q: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let s = p + q;
    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    for k in 0..n {
        let kf = k as f64;
        alpha.push(if k == 0 {
            p / s
        } else {
            0.5 * (1.0 + (p - q) * (s - 2.0) / ((2.0 * kf + s - 2.0) * (2.0 * kf + s)))
        });
        beta.push(match k {
            0 => 1.0,
            1 => p * q / (s * s * (s + 1.0)),
            _ => {
                let d = 2.0 * kf + s - 2.0;
                kf * (kf + p - 1.0) * (kf + q - 1.0) * (kf + s - 2.0)
                    / (d * d * (d + 1.0) * (d - 1.0))
            }
        });
    }
    (alpha, beta)
}

/// `E[X^k]` for `X ~ Beta(2a, 2b)`: `∏_{j<k} (2a + j)/(2a + 2b + j)`.
pub fn beta_moment(p: WFParams, k: usize) -> f64 {
    (0..k)
        .map(|j| (2.0 * p.a() + j as f64) / (2.0 * (p.a() + p.b()) + j as f64))
        .product()
}

/// `λ_n = n(n−1)/2 + n(a+b)`.
pub fn eigenvalue(p: WFParams, n: usize) -> f64 {
    let nf = n as f64;
    nf * (nf - 1.0) / 2.0 + nf * (p.a() + p.b())
}

/// Gauss rule with `m` nodes for a measure given by its recurrence coefficients
/// (Golub–Welsch).
fn golub_welsch(alpha: &[f64], beta: &[f64], m: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[j].sqrt()
        } else if j + 1 == i {
            beta[i].sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|k| {
            let v = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], beta[0] * v * v)
        })
        .collect();
    pairs.sort_by(|l, r| l.0.total_cmp(&r.0));
    pairs.into_iter().unzip()
}

/// `m`-point Gauss rule for `Beta(p, q)` on `[0, 1]`, exact to degree `2m − 1`.
pub fn gauss_beta(p: f64, q: f64, m: usize) -> (Vec<f64>, Vec<f64>) {
    let (alpha, beta) = jacobi_recurrence(p, q, m);
    golub_welsch(&alpha, &beta, m)
}

/// Orthonormal eigenbasis up to degree `N`, its recurrence and a Gauss rule.
#[derive(Debug, Clone)]
pub struct OrthoBasis {
    params: WFParams,
    degree: usize,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    eigenvalues: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `node_values[k][n] = Q_n(nodes[k])` for `n < nodes.len()`.
    node_values: Vec<Vec<f64>>,
    /// `max(|Q_n(0)|, |Q_n(1)|)` for `n ≤ N + ENDPOINT_EXTENSION`.
    endpoint_sup: Vec<f64>,
    /// Whether `endpoint_sup` bounds `|Q_n|` on all of `[0, 1]`.
    endpoint_sup_exact: bool,
}

/// A kernel value with its certified truncation bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelEval {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub value: f64,
    pub truncation_error: f64,
}

/// Spectral coefficients `⟨f, Q_n⟩` of a function, computed by quadrature.
#[derive(Debug, Clone)]
pub struct Projection {
    /// Coefficients for `n` up to the number of quadrature nodes minus one.
    pub coeffs: Vec<f64>,
    /// `‖f‖_{L²(π)}` under the quadrature rule.
    pub l2_norm: f64,
    /// Size of the highest computed coefficients, a proxy for aliasing error.
    pub aliasing: f64,
}

/// Semigroup value with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemigroupEval {
    pub value: f64,
    pub error: f64,
}

impl OrthoBasis {
    /// Builds the basis with `2N + 2` quadrature nodes.
    pub fn new(params: WFParams, n: usize) -> Result<Self> {
        Self::with_quadrature(params, n, 2 * n + 2)
    }

    /// Builds the basis and verifies the eigen-relation for every `Q_n`, `n ≤ N`.
    pub fn with_quadrature(params: WFParams, n: usize, m: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("N", "basis degree must be >= 1"));
        }
        if m < n + 1 {
            return Err(invalid("M", "need at least N + 1 quadrature nodes"));
        }
        let (p, q) = (2.0 * params.a(), 2.0 * params.b());
        let len = (n + ENDPOINT_EXTENSION).max(m) + 2;
        let (alpha, beta) = jacobi_recurrence(p, q, len);
        if let Some(k) = beta.iter().position(|b| !(*b > 0.0 && b.is_finite())) {
            return Err(Error::RecurrenceBreakdown {
                degree: k,
                norm: beta[k],
            });
        }
        let (nodes, weights) = golub_welsch(&alpha, &beta, m);
        let mut basis = Self {
            params,
            degree: n,
            eigenvalues: (0..len).map(|k| eigenvalue(params, k)).collect(),
            alpha,
            beta,
            nodes,
            weights,
            node_values: Vec::new(),
            endpoint_sup: Vec::new(),
            endpoint_sup_exact: params.a().max(params.b()) >= 0.25,
        };
        basis.node_values = basis
            .nodes
            .iter()
            .map(|&x| basis.values_to(x, m - 1))
            .collect();
        let at0 = basis.values_to(0.0, n + ENDPOINT_EXTENSION);
        let at1 = basis.values_to(1.0, n + ENDPOINT_EXTENSION);
        basis.endpoint_sup = at0.iter().zip(&at1).map(|(l, r)| l.abs().max(r.abs())).collect();
        if !basis.endpoint_sup_exact {
            // Szegő's endpoint maximum fails when both exponents are small; fall back to
            // a dense grid and a factor-2 margin.
            let mut grid_max = basis.endpoint_sup.clone();
            for x in chebyshev_unit_grid(2049) {
                for (m, v) in grid_max.iter_mut().zip(basis.values_to(x, n + ENDPOINT_EXTENSION)) {
                    *m = m.max(v.abs());
                }
            }
            for (sup, m) in basis.endpoint_sup.iter_mut().zip(grid_max) {
                *sup = 2.0 * m;
            }
        }
        basis.verify_eigen()?;
        Ok(basis)
    }

    pub fn params(&self) -> WFParams {
        self.params
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `λ_0, …, λ_N`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues[..=self.degree]
    }

    /// Recurrence coefficients `(α_n, β_n)` for `n ≤ N`.
    pub fn recurrence(&self) -> (&[f64], &[f64]) {
        (&self.alpha[..=self.degree], &self.beta[..=self.degree])
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Q_n(nodes[k])` for `n` up to the number of nodes minus one.
    pub fn node_values(&self, k: usize) -> &[f64] {
        &self.node_values[k]
    }

    /// `(Q_0(x), …, Q_N(x))`.
    pub fn values(&self, x: f64) -> Vec<f64> {
        self.values_to(x, self.degree)
    }

    fn values_to(&self, x: f64, n: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(1.0);
        let mut prev = 0.0;
        let mut cur = 1.0;
        for k in 0..n {
            // prev = 0 at k = 0, so β_0 never enters
            let next = ((x - self.alpha[k]) * cur - self.beta[k].sqrt() * prev) / self.beta[k + 1].sqrt();
            prev = cur;
            cur = next;
            out.push(cur);
        }
        out
    }

    /// `(Q_n(x), Q_n'(x), Q_n''(x))` for `n ≤ N`.
    pub fn values_with_derivatives(&self, x: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.degree;
        let (mut v, mut d1, mut d2) = (vec![1.0], vec![0.0], vec![0.0]);
        for k in 0..n {
            let sb = self.beta[k + 1].sqrt();
            let back = if k > 0 { self.beta[k].sqrt() } else { 0.0 };
            let (pv, pd1, pd2) = if k > 0 {
                (v[k - 1], d1[k - 1], d2[k - 1])
            } else {
                (0.0, 0.0, 0.0)
            };
            let shift = x - self.alpha[k];
            v.push((shift * v[k] - back * pv) / sb);
            d1.push((shift * d1[k] + v[k] - back * pd1) / sb);
            d2.push((shift * d2[k] + 2.0 * d1[k] - back * pd2) / sb);
        }
        (v, d1, d2)
    }

    /// Per-degree relative eigen-residual `‖L Q_n + λ_n Q_n‖_{L²(π)} / max(1, λ_n)`, with the
    /// norm computed by the stored Gauss rule (exact, since the residual is a polynomial).
    pub fn eigen_residuals(&self) -> Vec<f64> {
        let (a, b) = (self.params.a(), self.params.b());
        let mut sq = vec![0.0; self.degree + 1];
        for (k, &x) in self.nodes.iter().enumerate() {
            let (v, d1, d2) = self.values_with_derivatives(x);
            for n in 0..=self.degree {
                let r = 0.5 * x * (1.0 - x) * d2[n]
                    + (a - (a + b) * x) * d1[n]
                    + self.eigenvalues[n] * v[n];
                sq[n] += self.weights[k] * r * r;
            }
        }
        sq.iter()
            .enumerate()
            .map(|(n, s)| s.sqrt() / self.eigenvalues[n].max(1.0))
            .collect()
    }

    /// Largest eigen-residual over both the quadrature norm (all degrees) and the
    /// monomial coefficients (low degrees), with the offending degree.
    pub fn max_eigen_residual(&self) -> (usize, f64) {
        let mut worst = (0, 0.0f64);
        for (n, r) in self.eigen_residuals().into_iter().enumerate() {
            if !(r <= worst.1) {
                worst = (n, r);
            }
        }
        for n in 0..=self.degree.min(COEFF_CHECK_DEGREE) {
            let r = self.coefficient_residual(n);
            if !(r <= worst.1) {
                worst = (n, r);
            }
        }
        worst
    }

    fn verify_eigen(&self) -> Result<()> {
        let (degree, residual) = self.max_eigen_residual();
        if !(residual < EIGEN_TOL) {
            return Err(Error::EigenResidual {
                degree,
                residual,
                tolerance: EIGEN_TOL,
            });
        }
        Ok(())
    }

    /// Monomial coefficients of `Q_0, …, Q_n`.
    fn monomial_coefficients(&self, n: usize) -> Vec<Vec<f64>> {
        let mut polys: Vec<Vec<f64>> = vec![vec![1.0]];
        for k in 0..n {
            let sb = self.beta[k + 1].sqrt();
            let back = if k > 0 { self.beta[k].sqrt() } else { 0.0 };
            let mut next = vec![0.0; k + 2];
            for (j, c) in polys[k].iter().enumerate() {
                next[j + 1] += c / sb;
                next[j] -= self.alpha[k] * c / sb;
            }
            if k > 0 {
                for (j, c) in polys[k - 1].iter().enumerate() {
                    next[j] -= back * c / sb;
                }
            }
            polys.push(next);
        }
        polys
    }

    /// Largest coefficient of `L Q_n + λ_n Q_n`, relative to `max(1, λ_n)·max|coef Q_n|`.
    pub fn coefficient_residual(&self, n: usize) -> f64 {
        let (a, b) = (self.params.a(), self.params.b());
        let coef = self.monomial_coefficients(n).pop().unwrap_or_default();
        let lam = self.eigenvalues[n];
        let scale = coef.iter().fold(0.0f64, |m, c| m.max(c.abs())) * lam.max(1.0);
        let mut worst = 0.0f64;
        for j in 0..=n {
            let jf = j as f64;
            let mut r = (lam - 0.5 * jf * (jf - 1.0) - (a + b) * jf) * coef[j];
            if j < n {
                r += (0.5 * (jf + 1.0) * jf + a * (jf + 1.0)) * coef[j + 1];
            }
            worst = worst.max(r.abs());
        }
        worst / scale
    }

    /// `max_{m,n ≤ N} |∫ Q_m Q_n dπ − δ_{mn}|` under the stored rule.
    pub fn orthonormality_residual(&self) -> f64 {
        let n = self.degree;
        let mut gram = vec![vec![0.0; n + 1]; n + 1];
        for (k, w) in self.weights.iter().enumerate() {
            let v = &self.node_values[k];
            for i in 0..=n {
                let wi = w * v[i];
                for j in i..=n {
                    gram[i][j] += wi * v[j];
                }
            }
        }
        let mut worst = 0.0f64;
        for (i, row) in gram.iter().enumerate() {
            for (j, g) in row.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }

    /// Certified bound on `sup_{x,y} |Σ_{n>N} e^{−λ_n t} Q_n(x) Q_n(y)|`.
    ///
    /// Uses `|Q_n| ≤ max(|Q_n(0)|, |Q_n(1)|)` on `[0, 1]` (valid when `a ∨ b ≥ 1/4`;
    /// otherwise a dense-grid maximum with a factor-2 margin is used).
    pub fn tail_bound(&self, t: f64) -> f64 {
        self.weighted_tail(t, self.degree + 1, |n| self.endpoint_sup[n].powi(2))
    }

    /// `Σ_{n ≥ from} e^{−λ_n t} w(n)`, summed until a geometric remainder is negligible.
    fn weighted_tail<W: Fn(usize) -> f64>(&self, t: f64, from: usize, w: W) -> f64 {
        let last = self.endpoint_sup.len() - 1;
        let mut sum = 0.0;
        let mut prev_term = f64::INFINITY;
        for n in from..=last {
            let term = (-self.eigenvalues[n] * t).exp() * w(n);
            sum += term;
            let ratio = term / prev_term;
            if ratio < 0.5 && term * ratio / (1.0 - ratio) <= 1e-3 * sum.max(f64::MIN_POSITIVE) {
                return sum + term * ratio / (1.0 - ratio);
            }
            if term == 0.0 {
                return sum;
            }
            prev_term = term;
        }
        // the endpoint table ran out before the tail became geometric
        f64::INFINITY
    }

    /// Truncated kernel from precomputed `Q_n(x)`, `Q_n(y)`; returns `(value, Σ|terms|)`.
    pub fn kernel_from_values(&self, t: f64, qx: &[f64], qy: &[f64]) -> (f64, f64) {
        let n = self.degree;
        let terms = (0..=n).map(|k| (-self.eigenvalues[k] * t).exp() * qx[k] * qy[k]);
        let abs: f64 = (0..=n)
            .map(|k| ((-self.eigenvalues[k] * t).exp() * qx[k] * qy[k]).abs())
            .sum();
        (compensated_sum(terms), abs)
    }

    /// Rounding allowance for a compensated sum of `N + 1` terms.
    pub fn rounding_bound(&self, abs_sum: f64) -> f64 {
        8.0 * (self.degree + 1) as f64 * f64::EPSILON * abs_sum
    }

    /// `p_t(x, y)` with the default relative tolerance.
    pub fn heat_kernel(&self, t: f64, x: f64, y: f64) -> Result<KernelEval> {
        self.heat_kernel_tol(t, x, y, DEFAULT_KERNEL_TOL)
    }

    /// `p_t(x, y)`; fails when the truncation bound exceeds `tol·max(1, |value|)`.
    pub fn heat_kernel_tol(&self, t: f64, x: f64, y: f64, tol: f64) -> Result<KernelEval> {
        require_positive("t", t)?;
        require_unit(x)?;
        require_unit(y)?;
        // order the arguments so the summation is symmetric bit-for-bit
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        let (qx, qy) = (self.values(lo), self.values(hi));
        let (value, abs) = self.kernel_from_values(t, &qx, &qy);
        let err = self.tail_bound(t) + self.rounding_bound(abs);
        if !(err <= tol * value.abs().max(1.0)) {
            return Err(Error::TruncationFloor {
                t,
                bound: err,
                tolerance: tol * value.abs().max(1.0),
            });
        }
        Ok(KernelEval {
            t,
            x,
            y,
            value,
            truncation_error: err,
        })
    }

    /// Spectral coefficients of `f` by the stored Gauss rule.
    pub fn project<F: Fn(f64) -> f64>(&self, f: F) -> Projection {
        let m = self.nodes.len();
        let fx: Vec<f64> = self.nodes.iter().map(|&x| f(x)).collect();
        let coeffs: Vec<f64> = (0..m)
            .map(|n| compensated_sum((0..m).map(|k| self.weights[k] * fx[k] * self.node_values[k][n])))
            .collect();
        let l2 = compensated_sum((0..m).map(|k| self.weights[k] * fx[k] * fx[k])).sqrt();
        let high = (3 * m) / 4;
        let aliasing = coeffs[high..].iter().map(|c| c.abs()).fold(0.0, f64::max);
        Projection {
            coeffs,
            l2_norm: l2,
            aliasing,
        }
    }

    /// `P_t f(x) ≈ Σ_{n ≤ N} e^{−λ_n t} c_n Q_n(x)` from a projection, with an error estimate
    /// covering omitted degrees, truncation beyond the rule and aliasing.
    pub fn apply(&self, proj: &Projection, t: f64, x: f64) -> SemigroupEval {
        let n = self.degree;
        let q = self.values_to(x, proj.coeffs.len() - 1);
        let terms: Vec<f64> = (0..=n)
            .map(|k| (-self.eigenvalues[k] * t).exp() * proj.coeffs[k] * q[k])
            .collect();
        let value = compensated_sum(terms.iter().copied());
        let abs: f64 = terms.iter().map(|v| v.abs()).sum();
        let m = proj.coeffs.len();
        let omitted: f64 = (n + 1..m)
            .map(|k| (-self.eigenvalues[k] * t).exp() * (proj.coeffs[k] * self.endpoint_sup[k]).abs())
            .sum();
        let beyond = proj.l2_norm * self.weighted_tail(t, m, |k| self.endpoint_sup[k]);
        let alias_gain: f64 = (0..=n)
            .map(|k| (-self.eigenvalues[k] * t).exp() * self.endpoint_sup[k])
            .sum();
        SemigroupEval {
            value,
            error: omitted + beyond + proj.aliasing * alias_gain + self.rounding_bound(abs),
        }
    }

    /// `P_t f(x)`; fails when the error estimate exceeds `tol·max(1, |value|)`.
    pub fn semigroup_apply<F: Fn(f64) -> f64>(&self, t: f64, f: F, x: f64) -> Result<SemigroupEval> {
        require_positive("t", t)?;
        require_unit(x)?;
        let eval = self.apply(&self.project(f), t, x);
        let tol = DEFAULT_KERNEL_TOL * eval.value.abs().max(1.0);
        if !(eval.error <= tol) {
            return Err(Error::TruncationFloor {
                t,
                bound: eval.error,
                tolerance: tol,
            });
        }
        Ok(eval)
    }

    /// `sup_{x,y} p_t(x, y)`, attained on the diagonal since
    /// `p_t(x, y) ≤ √(p_t(x, x) p_t(y, y))`; scanned on a Chebyshev grid.
    pub fn sup_kernel(&self, t: f64, grid: usize) -> Result<(f64, (f64, f64))> {
        let (v, x, _) = self.diagonal_scan(t, grid, 0.0)?;
        Ok((v, (x, x)))
    }

    /// `sup_{x,y} |p_t(x, y) − 1|`: the kernel `p_t − 1` is positive semidefinite, so the
    /// supremum is `sup_x (p_t(x, x) − 1)`. Returns `(value, argmax, error bound)`.
    pub fn sup_deviation(&self, t: f64, grid: usize) -> Result<(f64, f64, f64)> {
        self.diagonal_scan(t, grid, 1.0)
    }

    fn diagonal_scan(&self, t: f64, grid: usize, shift: f64) -> Result<(f64, f64, f64)> {
        require_positive("t", t)?;
        if grid < 64 {
            return Err(invalid("grid", "need at least 64 grid points"));
        }
        let tail = self.tail_bound(t);
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for x in chebyshev_unit_grid(grid) {
            let q = self.values(x);
            let terms = (0..=self.degree).map(|k| (-self.eigenvalues[k] * t).exp() * q[k] * q[k]);
            let abs: f64 = terms.clone().sum();
            let value = if shift == 0.0 {
                compensated_sum(terms)
            } else {
                compensated_sum(terms.skip(1))
            };
            if value > best.0 {
                best = (value, x, tail + self.rounding_bound(abs));
            }
        }
        Ok(best)
    }
}

/// `π_{a,b}({y : ρ(x, y) ≤ r})`, from the regularised incomplete beta function on the
/// interval `[sin²(θ − r/2), sin²(θ + r/2)]`, `θ = arcsin√x`, clipped to `[0, 1]`.
pub fn ball_volume(p: WFParams, x: f64, r: f64) -> Result<f64> {
    require_unit(x)?;
    require_positive("r", r)?;
    if r >= std::f64::consts::PI {
        return Ok(1.0);
    }
    let theta = x.sqrt().asin();
    let half_pi = std::f64::consts::FRAC_PI_2;
    let lo_angle = (theta - r / 2.0).max(0.0);
    let hi_angle = (theta + r / 2.0).min(half_pi);
    let (pa, pb) = (2.0 * p.a(), 2.0 * p.b());
    // integrate from whichever end is nearer to limit cancellation
    let upper = if hi_angle >= half_pi {
        0.0
    } else {
        1.0 - hi_angle.sin().powi(2)
    };
    let lower = lo_angle.sin().powi(2);
    let mass_below = |y: f64| if y <= 0.0 { 0.0 } else { beta_reg(pa, pb, y) };
    let mass_above = |z: f64| if z <= 0.0 { 0.0 } else { beta_reg(pb, pa, z) };
    let volume = if lower < 0.5 {
        1.0 - mass_above(upper) - mass_below(lower)
    } else {
        1.0 - mass_below(lower) - mass_above(upper)
    };
    Ok(volume.clamp(0.0, 1.0))
}

/// Gauss rules for `∫_lo^hi g dπ_{a,b}` on subintervals of `[0, 1]`: intervals touching `0`
/// or `1` absorb the singular weight factor into a `Beta(2a, 1)` or `Beta(2b, 1)` rule,
/// interior intervals use Gauss–Legendre.
#[derive(Debug, Clone)]
pub struct IntervalRules {
    pa: f64,
    pb: f64,
    ln_b: f64,
    whole: (Vec<f64>, Vec<f64>),
    left: (Vec<f64>, Vec<f64>),
    right: (Vec<f64>, Vec<f64>),
    inner: (Vec<f64>, Vec<f64>),
}

impl IntervalRules {
    pub fn new(p: WFParams, m: usize) -> Self {
        let (pa, pb) = (2.0 * p.a(), 2.0 * p.b());
        Self {
            pa,
            pb,
            ln_b: statrs::function::beta::ln_beta(pa, pb),
            whole: gauss_beta(pa, pb, m),
            left: gauss_beta(pa, 1.0, m),
            right: gauss_beta(pb, 1.0, m),
            inner: gauss_beta(1.0, 1.0, m),
        }
    }

    pub fn integrate<G: Fn(f64) -> f64>(&self, lo: f64, hi: f64, g: G) -> f64 {
        let (lo, hi) = (lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0));
        if hi <= lo {
            return 0.0;
        }
        let (pa, pb) = (self.pa, self.pb);
        if lo == 0.0 && hi == 1.0 {
            let (x, w) = &self.whole;
            return compensated_sum(x.iter().zip(w).map(|(x, w)| w * g(*x)));
        }
        let len = hi - lo;
        if lo == 0.0 {
            // x = len·u; the Beta(pa, 1) rule carries u^{pa−1} and has mass 1/pa
            let (u, w) = &self.left;
            let scale = (pa * len.ln() - self.ln_b).exp() / pa;
            scale
                * compensated_sum(u.iter().zip(w).map(|(u, w)| {
                    let x = len * u;
                    w * g(x) * (1.0 - x).powf(pb - 1.0)
                }))
        } else if hi == 1.0 {
            let (v, w) = &self.right;
            let scale = (pb * len.ln() - self.ln_b).exp() / pb;
            scale
                * compensated_sum(v.iter().zip(w).map(|(v, w)| {
                    let x = 1.0 - len * v;
                    w * g(x) * x.powf(pa - 1.0)
                }))
        } else {
            let (u, w) = &self.inner;
            let scale = len * (-self.ln_b).exp();
            scale
                * compensated_sum(u.iter().zip(w).map(|(u, w)| {
                    let x = lo + len * u;
                    w * g(x) * x.powf(pa - 1.0) * (1.0 - x).powf(pb - 1.0)
                }))
        }
    }
}

/// `∫_lo^hi g dπ_{a,b}` with `m`-point rules; see [`IntervalRules`].
pub fn integrate_interval<G: Fn(f64) -> f64>(
    p: WFParams,
    lo: f64,
    hi: f64,
    g: G,
    m: usize,
) -> Result<f64> {
    require_unit(lo)?;
    require_unit(hi)?;
    Ok(IntervalRules::new(p, m).integrate(lo, hi, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wf(a: f64, b: f64) -> WFParams {
        WFParams::new(a, b).unwrap()
    }

    /// Stieltjes procedure on a fine discretisation of Beta(p, q) in angle coordinates.
    fn stieltjes_oracle(p: f64, q: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
        let m = 200_000;
        let ln_b = statrs::function::beta::ln_beta(p, q);
        let h = std::f64::consts::FRAC_PI_2 / m as f64;
        let (xs, ws): (Vec<f64>, Vec<f64>) = (0..m)
            .map(|k| {
                let th = (k as f64 + 0.5) * h;
                let (s, c) = th.sin_cos();
                let w = 2.0 * s.powf(2.0 * p - 1.0) * c.powf(2.0 * q - 1.0) * (-ln_b).exp() * h;
                (s * s, w)
            })
            .unzip();
        let mut prev = vec![0.0; m];
        let mut cur = vec![1.0; m];
        let mut norm_prev = 1.0;
        let (mut alpha, mut beta) = (vec![], vec![]);
        for k in 0..n {
            let norm: f64 = (0..m).map(|i| ws[i] * cur[i] * cur[i]).sum();
            let a = (0..m).map(|i| ws[i] * xs[i] * cur[i] * cur[i]).sum::<f64>() / norm;
            let b = if k == 0 { norm } else { norm / norm_prev };
            alpha.push(a);
            beta.push(b);
            let next: Vec<f64> = (0..m)
                .map(|i| (xs[i] - a) * cur[i] - if k == 0 { 0.0 } else { b * prev[i] })
                .collect();
            prev = std::mem::replace(&mut cur, next);
            norm_prev = norm;
        }
        (alpha, beta)
    }

    #[test]
    fn recurrence_matches_stieltjes() {
        for (a, b) in [(0.5, 0.5), (0.5, 1.0), (1.0, 2.0), (2.0, 0.75)] {
            let (al, be) = jacobi_recurrence(2.0 * a, 2.0 * b, 7);
            let (ao, bo) = stieltjes_oracle(2.0 * a, 2.0 * b, 7);
            for k in 0..7 {
                assert!((al[k] - ao[k]).abs() < 1e-8, "alpha_{k} for ({a},{b})");
                assert!((be[k] - bo[k]).abs() < 1e-8, "beta_{k} for ({a},{b})");
            }
        }
    }

    #[test]
    fn chebyshev_case() {
        let (al, be) = jacobi_recurrence(0.5, 0.5, 6);
        assert!(al.iter().all(|a| (a - 0.5).abs() < 1e-15));
        assert!((be[1] - 0.125).abs() < 1e-15);
        assert!(be[2..].iter().all(|b| (b - 0.0625).abs() < 1e-15));
    }

    #[test]
    fn moments() {
        assert_eq!(beta_moment(wf(0.3, 0.9), 0), 1.0);
        assert!((beta_moment(wf(0.7, 0.7), 1) - 0.5).abs() < 1e-15);
        assert!((beta_moment(wf(0.3, 0.9), 1) - 0.25).abs() < 1e-15);
        let basis = OrthoBasis::new(wf(0.3, 0.9), 6).unwrap();
        for k in 0..=10 {
            let quad: f64 = basis
                .nodes()
                .iter()
                .zip(basis.weights())
                .map(|(x, w)| w * x.powi(k as i32))
                .sum();
            assert!((quad - beta_moment(wf(0.3, 0.9), k)).abs() < 1e-13);
        }
    }

    #[test]
    fn first_eigenpair() {
        let basis = OrthoBasis::new(wf(0.5, 0.5), 1).unwrap();
        assert_eq!(basis.eigenvalues(), &[0.0, 1.0]);
        // Q_1 ∝ x − 1/2 with unit variance under the uniform law
        let q = basis.values(0.75);
        assert!((q[1] - 0.25 * 12f64.sqrt()).abs() < 1e-14);
        let basis = OrthoBasis::new(wf(0.5, 0.5), 2).unwrap();
        assert_eq!(basis.eigenvalues()[2], 3.0);
        assert!(basis.coefficient_residual(2) < 1e-12);
    }

    #[test]
    fn orthonormal_at_sixty() {
        for &a in &[0.25, 0.5, 1.0, 2.0] {
            for &b in &[0.25, 0.5, 1.0, 2.0] {
                let basis = OrthoBasis::new(wf(a, b), 60).unwrap();
                let r = basis.orthonormality_residual();
                assert!(r < 1e-10, "({a},{b}): {r}");
            }
        }
    }

    #[test]
    fn builds_at_two_hundred() {
        OrthoBasis::new(wf(1.0, 0.5), 200).unwrap();
        OrthoBasis::new(wf(0.125, 1.0), 200).unwrap();
    }

    #[test]
    fn kernel_normalisation_and_symmetry() {
        let basis = OrthoBasis::new(wf(1.0, 0.5), 60).unwrap();
        for &x in &[0.0, 0.13, 0.5, 1.0] {
            let total: f64 = basis
                .nodes()
                .iter()
                .zip(basis.weights())
                .map(|(&z, w)| w * basis.heat_kernel(0.2, x, z).unwrap().value)
                .sum();
            assert!((total - 1.0).abs() < 1e-10);
            let k1 = basis.heat_kernel(0.2, x, 0.77).unwrap();
            let k2 = basis.heat_kernel(0.2, 0.77, x).unwrap();
            assert_eq!(k1.value, k2.value);
        }
    }

    #[test]
    fn chapman_kolmogorov() {
        let basis = OrthoBasis::new(wf(0.5, 1.0), 60).unwrap();
        let (s, t, x, y) = (0.15, 0.3, 0.2, 0.9);
        let lhs: f64 = basis
            .nodes()
            .iter()
            .zip(basis.weights())
            .map(|(&z, w)| {
                w * basis.heat_kernel(s, x, z).unwrap().value * basis.heat_kernel(t, z, y).unwrap().value
            })
            .sum();
        let rhs = basis.heat_kernel(s + t, x, y).unwrap();
        let bound = basis.tail_bound(s) + basis.tail_bound(t) + rhs.truncation_error;
        assert!((lhs - rhs.value).abs() < 10.0 * bound.max(1e-12));
    }

    #[test]
    fn truncation_floor_reported() {
        let basis = OrthoBasis::new(wf(0.5, 0.5), 10).unwrap();
        assert!(matches!(
            basis.heat_kernel(1e-3, 0.5, 0.5),
            Err(Error::TruncationFloor { .. })
        ));
    }

    #[test]
    fn semigroup_examples() {
        let p = wf(0.5, 1.0);
        let basis = OrthoBasis::new(p, 30).unwrap();
        let c = basis.semigroup_apply(0.4, |_| 2.5, 0.3).unwrap();
        assert!((c.value - 2.5).abs() < 1e-13);
        let mean = basis.semigroup_apply(40.0, |x| x, 0.9).unwrap();
        assert!((mean.value - 1.0 / 3.0).abs() < 1e-12);
        let m = 1.0 / 3.0;
        for t in [0.1, 1.0, 3.0] {
            let v = basis.semigroup_apply(t, |x| x - m, 0.8).unwrap();
            assert!((v.value - (-1.5 * t).exp() * (0.8 - m)).abs() < 1e-13);
        }
    }

    #[test]
    fn ball_volume_matches_riemann_oracle() {
        let p = wf(0.5, 0.5);
        // uniform law: the ball around 0 is [0, sin²(r/2)]
        for r in [0.1, 0.7, 2.0] {
            let v = ball_volume(p, 0.0, r).unwrap();
            assert!((v - (r / 2.0).sin().powi(2)).abs() < 1e-12);
        }
        // midpoint oracle in angle coordinates, where the Beta density is smooth
        for (a, b, x, r) in [(1.0, 0.5, 0.3, 0.4), (0.75, 2.0, 0.9, 0.25), (2.0, 2.0, 0.5, 1.0)] {
            let pa = 2.0 * a;
            let pb = 2.0 * b;
            let ln_b = statrs::function::beta::ln_beta(pa, pb);
            let th = f64::sqrt(x).asin();
            let (lo, hi) = ((th - r / 2.0).max(0.0), (th + r / 2.0).min(std::f64::consts::FRAC_PI_2));
            let n = 1_000_000;
            let h = (hi - lo) / n as f64;
            let oracle: f64 = (0..n)
                .map(|k| {
                    let u = lo + (k as f64 + 0.5) * h;
                    let (s, c) = u.sin_cos();
                    2.0 * s.powf(2.0 * pa - 1.0) * c.powf(2.0 * pb - 1.0) * (-ln_b).exp() * h
                })
                .sum();
            let v = ball_volume(wf(a, b), x, r).unwrap();
            assert!((v - oracle).abs() < 1e-8, "{v} vs {oracle}");
        }
        assert_eq!(ball_volume(p, 0.4, 3.2).unwrap(), 1.0);
    }

    #[test]
    fn integrate_interval_consistency() {
        let p = wf(0.25, 1.5);
        let g = |x: f64| 1.0 + x * x;
        let whole = integrate_interval(p, 0.0, 1.0, g, 20).unwrap();
        let pieces = integrate_interval(p, 0.0, 0.3, g, 20).unwrap()
            + integrate_interval(p, 0.3, 0.8, g, 20).unwrap()
            + integrate_interval(p, 0.8, 1.0, g, 20).unwrap();
        assert!((whole - pieces).abs() < 1e-12);
        assert!((whole - 1.0 - beta_moment(p, 2)).abs() < 1e-13);
    }

    #[test]
    fn sup_kernel_on_diagonal_dominates_grid() {
        let basis = OrthoBasis::new(wf(0.5, 1.0), 80).unwrap();
        let (sup, (x, y)) = basis.sup_kernel(0.05, 129).unwrap();
        assert_eq!(x, y);
        for &u in &[0.0, 0.1, 0.5, 0.9, 1.0] {
            for &v in &[0.0, 0.3, 0.7, 1.0] {
                assert!(basis.heat_kernel(0.05, u, v).unwrap().value <= sup + 1e-9);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn eigen_residual_small(a in 0.25f64..5.0, b in 0.25f64..5.0, n in 1usize..40) {
            let basis = OrthoBasis::new(wf(a, b), n).unwrap();
            for k in 0..=n.min(COEFF_CHECK_DEGREE) {
                prop_assert!(basis.coefficient_residual(k) < 1e-8);
            }
            let e = basis.eigenvalues();
            prop_assert!(e.windows(2).all(|w| w[1] > w[0]));
        }

        #[test]
        fn kernel_nonnegative(a in 0.25f64..3.0, b in 0.25f64..3.0, x in 0.0f64..=1.0, y in 0.0f64..=1.0, t in 0.05f64..2.0) {
            let basis = OrthoBasis::new(wf(a, b), 80).unwrap();
            let k = basis.heat_kernel(t, x, y).unwrap();
            prop_assert!(k.value >= -k.truncation_error);
        }
    }
}
