//! Closed-form anchors checked through the public API, across modules.

use wfgem::constants::{log_beta_from_gamma, C0};
use wfgem::gem::{sample_gem_many, two_param_params};
use wfgem::spectral::{eigenvalue, OrthoBasis};
use wfgem::WFParams;

#[test]
fn symmetric_half_has_unit_gap_and_linear_first_mode() {
    let p = WFParams::new(0.5, 0.5).unwrap();
    assert!((p.spectral_gap() - 1.0).abs() < 1e-15);
    assert!((eigenvalue(p, 1) - 1.0).abs() < 1e-15);
    let basis = OrthoBasis::new(p, 10).unwrap();
    let slope = |x: f64| basis.values(x)[1] / (x - 0.5);
    for x in [0.0, 0.1, 0.3, 0.8, 1.0] {
        assert!((slope(x) - slope(0.9)).abs() < 1e-12, "x={x}");
    }
}

#[test]
fn centred_coordinate_decays_at_the_gap() {
    for (a, b) in [(0.25, 2.0), (0.5, 0.5), (1.0, 0.5), (2.0, 2.0)] {
        let p = WFParams::new(a, b).unwrap();
        let basis = OrthoBasis::new(p, 30).unwrap();
        let m = p.stationary_mean();
        for t in [0.1, 1.0, 3.0] {
            for x in [0.0, 0.2, 0.7, 1.0] {
                let got = basis.semigroup_apply(t, |y| y - m, x).unwrap();
                let want = (-(a + b) * t).exp() * (x - m);
                assert!((got.value - want).abs() < 1e-12, "a={a} b={b} t={t} x={x}");
            }
        }
    }
}

#[test]
fn short_time_exponent_at_half_is_one() {
    let p = WFParams::new(0.5, 0.5).unwrap();
    assert_eq!(p.short_time_exponent(), 1.0);
    assert_eq!(WFParams::new(1.0, 0.5).unwrap().short_time_exponent(), 2.0);
}

#[test]
fn alpha_zero_theta_one_is_constant_half() {
    let seq = two_param_params(0.0, 1.0, 6).unwrap();
    for p in seq.entries() {
        assert_eq!((p.a(), p.b()), (0.5, 0.5));
    }
}

#[test]
fn one_parameter_sticks_are_beta_one_theta() {
    let theta = 3.0;
    let seq = two_param_params(0.0, theta, 4).unwrap();
    for p in seq.entries() {
        assert_eq!((p.a(), p.b()), (0.5, theta / 2.0));
    }
    let draws = sample_gem_many(&seq, 4, 20_000, 3).unwrap();
    let n = draws.len() as f64;
    // Beta(1, θ): mean 1/(1+θ), variance θ/((1+θ)²(2+θ))
    let (mean, var) = (1.0 / (1.0 + theta), theta / ((1.0 + theta).powi(2) * (2.0 + theta)));
    for i in 0..4 {
        let m = draws.iter().map(|d| d.sticks[i]).sum::<f64>() / n;
        assert!((m - mean).abs() < 4.0 * (var / n).sqrt(), "stick {i}: {m}");
    }
}

#[test]
fn quadratic_gamma_gives_stretched_exponential_beta() {
    // with γ(t) = c/t², the choice t = r^{1/3} gives log β(r) ≤ (c₀c + 1)/r^{2/3}
    let c = 35.0;
    let cp = C0 * c + 1.0;
    for k in 0..=10 {
        let r = 10f64.powf(-6.0 + 0.5 * k as f64);
        let lb = log_beta_from_gamma(r, 1.0, C0, |t| c / (t * t));
        assert!(lb <= cp / r.powf(2.0 / 3.0), "r={r}: {lb}");
        assert!(lb > 0.0);
    }
}
