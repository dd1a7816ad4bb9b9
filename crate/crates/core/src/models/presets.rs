//! Named model instances used by the reproduction batteries.

use crate::models::scalar::ScalarFn;
use crate::models::spec::{ModelSpec, Omega, RateFn};

pub const ATTRACTOR_OMEGA: [f64; 3] = [0.1, 0.2, 0.3];

/// Global attractor with `f(t) = t`, saturating at `t* = 1`.
pub fn attractor() -> ModelSpec {
    ModelSpec::GlobalAttractor {
        f: ScalarFn::parse("t").expect("valid"),
        omega: Omega::Fixed(ATTRACTOR_OMEGA),
        t_star: 1.0,
    }
}

/// Global attractor whose fixed point `omega_t` rotates about the z axis.
pub fn drifting_attractor() -> ModelSpec {
    ModelSpec::GlobalAttractor {
        f: ScalarFn::parse("t").expect("valid"),
        omega: Omega::Varying(std::sync::Arc::new(drifting_bloch)),
        t_star: 1.0,
    }
}

pub fn drifting_bloch(t: f64) -> [f64; 3] {
    [0.4 * t.cos(), 0.4 * t.sin(), 0.3]
}

/// `Gamma_1(t) = -ln(1 - t)` diverging at `t* = 1`, `Gamma_2 = Gamma_3 = t`.
pub fn pauli_rank_drop() -> ModelSpec {
    ModelSpec::PauliChannel {
        gammas: [
            RateFn::new(ScalarFn::parse("1/(1-t)").expect("valid"))
                .with_integral(ScalarFn::parse("-ln(1-t)").expect("valid"))
                .diverging_at(1.0),
            RateFn::constant(1.0),
            RateFn::constant(1.0),
        ],
    }
}

/// `Lambda_t = (1 - t) id + t Psi` up to `t* = 1`.
pub fn non_diagonal() -> ModelSpec {
    ModelSpec::NonDiagonal { f: ScalarFn::parse("t").expect("valid"), t_star: 1.0 }
}

/// Rates with `Gamma_3` diverging at `t_1 = 1` and `Gamma` at `t_2 = 2`:
/// `gamma_3 = 1/(1 - t)`, `gamma_- = 0.2`, `gamma_+ = 2/(2 - t) - 0.2`, so
/// `Gamma = ln(2/(2 - t))`. `G` is left to quadrature.
pub fn phase_covariant_rank_drop() -> ModelSpec {
    ModelSpec::PhaseCovariant {
        gamma_plus: RateFn::new(ScalarFn::parse("2/(2-t) - 0.2").expect("valid"))
            .with_integral(ScalarFn::parse("2*ln(2/(2-t)) - 0.2*t").expect("valid"))
            .diverging_at(2.0),
        gamma_minus: RateFn::constant(0.2),
        gamma_3: RateFn::new(ScalarFn::parse("1/(1-t)").expect("valid"))
            .with_integral(ScalarFn::parse("-ln(1-t)").expect("valid"))
            .diverging_at(1.0),
        g_integral: None,
    }
}

pub fn phase_covariant_constant() -> ModelSpec {
    ModelSpec::PhaseCovariant {
        gamma_plus: RateFn::constant(1.0),
        gamma_minus: RateFn::constant(1.0),
        gamma_3: RateFn::constant(1.0),
        g_integral: None,
    }
}

pub fn all() -> Vec<(&'static str, ModelSpec)> {
    vec![
        ("attractor", attractor()),
        ("attractor-drifting", drifting_attractor()),
        ("pauli", pauli_rank_drop()),
        ("exnon", non_diagonal()),
        ("phasecov", phase_covariant_rank_drop()),
        ("phasecov-const", phase_covariant_constant()),
    ]
}

pub fn by_name(name: &str) -> Option<ModelSpec> {
    let key = match name {
        "ex1" => "attractor-drifting",
        "ex2" => "attractor",
        other => other,
    };
    all().into_iter().find(|(n, _)| *n == key).map(|(_, m)| m)
}
