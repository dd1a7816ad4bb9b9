use divprop::analysis::kernel_inclusion;
use divprop::linalg::RealMatrix;
use divprop::models::{integrate_map, presets, GeneratorSpec, ScalarFn};
use divprop::spectral::{spectral_decompose_transfer, DEFAULT_COND_MAX};
use divprop::Tolerances;

fn sup(a: &RealMatrix, b: &RealMatrix) -> f64 {
    (a - b).amax()
}

#[test]
fn constant_phase_covariant_matches_integration() {
    let model = presets::phase_covariant_constant();
    let gen = GeneratorSpec::phase_covariant(ScalarFn::Constant(1.0), ScalarFn::Constant(1.0), ScalarFn::Constant(1.0));
    let worst = (1..=20)
        .map(|i| {
            let t = 0.15 * i as f64;
            sup(model.transfer_at(t).unwrap().matrix(), integrate_map(&gen, t, 1e-9).unwrap().matrix())
        })
        .fold(0.0, f64::max);
    assert!(worst <= 1e-6, "{worst}");
}

#[test]
fn time_dependent_phase_covariant_matches_integration() {
    let model = presets::phase_covariant_rank_drop();
    let gen = GeneratorSpec::phase_covariant(
        ScalarFn::parse("2/(2-t) - 0.2").unwrap(),
        ScalarFn::Constant(0.2),
        ScalarFn::parse("1/(1-t)").unwrap(),
    );
    for t in [0.1, 0.4, 0.7, 0.9] {
        let d = sup(model.transfer_at(t).unwrap().matrix(), integrate_map(&gen, t, 1e-10).unwrap().matrix());
        assert!(d <= 1e-6, "t = {t}: {d}");
    }
}

#[test]
fn constant_pauli_rates_match_integration() {
    let rates = [0.3, 0.7, 1.1];
    let gen = GeneratorSpec::pauli(rates.map(ScalarFn::Constant));
    for t in [0.2, 1.0, 2.5] {
        let got = integrate_map(&gen, t, 1e-9).unwrap();
        for i in 0..3 {
            let expected = (-(rates[(i + 1) % 3] + rates[(i + 2) % 3]) * t).exp();
            assert!((got.matrix()[(i + 1, i + 1)] - expected).abs() < 1e-6);
        }
    }
}

#[test]
fn every_preset_is_divisible_on_samples() {
    let tol = Tolerances::default();
    let times = [0.0, 0.3, 0.7, 0.99, 1.0, 1.4, 2.0, 2.6];
    for (name, model) in presets::all() {
        for (i, &s) in times.iter().enumerate() {
            for &t in &times[i + 1..] {
                let ki = kernel_inclusion(&model.transfer_at(s).unwrap(), &model.transfer_at(t).unwrap(), &tol).unwrap();
                assert!(ki.holds, "{name}: s = {s}, t = {t}");
            }
        }
    }
}

#[test]
fn attractor_spectrum() {
    let model = presets::attractor();
    for t in [0.1, 0.5, 0.8] {
        let s = spectral_decompose_transfer(&model.transfer_at(t).unwrap(), DEFAULT_COND_MAX).unwrap();
        let mut ev: Vec<f64> = s.eigenvalues.iter().map(|z| z.re).collect();
        ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let expected = [1.0, 1.0 - t, 1.0 - t, 1.0 - t];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
