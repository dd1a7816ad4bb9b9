//! Check batteries for the worked examples.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{certify, kernel_inclusion, monotonicity_check, random_pure_state};
use crate::basis::bloch_state;
use crate::discrete::{
    discrete_propagator, helstrom, info_decreasing_check, random_channel, right_inverse, DiscreteFamily,
    DiscreteInverse, Ensemble2,
};
use crate::error::{Error, Result};
use crate::ginverse::classify;
use crate::linalg::{c64, frobenius, pauli, rank, svd, ComplexMatrix, RealMatrix};
use crate::models::qubit::{classify_qubit_projector, projector_family, projector_matrix};
use crate::models::spec::psi;
use crate::models::{integrate_map, presets, GeneratorSpec, ModelSpec, ScalarFn};
use crate::propagator::{composition_check, propagate_family, propagator_family, tp_inverse_family, InverseRule};
use crate::search::{cptp_search, SearchConfig, Uniqueness};
use crate::spectral::{jordan_block_check, spectral_decompose_transfer, DEFAULT_COND_MAX};
use crate::tol::Tolerances;
use crate::transfer::TransferMatrix;

pub const EXAMPLES: [&str; 8] = ["ex1", "ex2", "pauli", "exnon", "phasecov", "projectors", "jordan", "discrete"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub seed: u64,
    pub samples: usize,
    pub tol: Tolerances,
}

impl Default for Settings {
    fn default() -> Self {
        Self { seed: 42, samples: 500, tol: Tolerances::default() }
    }
}

impl Settings {
    fn search(&self) -> SearchConfig {
        SearchConfig { seed: self.seed, tol_psd: self.tol.tol_psd, ..SearchConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryReport {
    pub example: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl BatteryReport {
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let mark = if c.passed { "pass" } else { "FAIL" };
            out.push_str(&format!("[{mark}] {}: {}", self.example, c.name));
            if let (Some(v), Some(t)) = (c.value, c.tolerance) {
                out.push_str(&format!(" (value {v:.3e}, bound {t:.1e})"));
            }
            if let Some(d) = &c.detail {
                out.push_str(&format!(" - {d}"));
            }
            out.push('\n');
        }
        let n = self.checks.iter().filter(|c| c.passed).count();
        out.push_str(&format!("{}: {n}/{} checks passed\n", self.example, self.checks.len()));
        out
    }
}

enum Outcome {
    AtMost(f64, f64),
    AtLeast(f64, f64),
    Flag(bool, Option<String>),
}

#[derive(Default)]
struct Battery {
    checks: Vec<Check>,
}

impl Battery {
    fn run(&mut self, name: &str, f: impl FnOnce() -> Result<Outcome>) {
        let check = match f() {
            Ok(Outcome::AtMost(v, t)) => Check { name: name.into(), passed: v <= t, value: Some(v), tolerance: Some(t), detail: None },
            Ok(Outcome::AtLeast(v, t)) => Check { name: name.into(), passed: v >= t, value: Some(v), tolerance: Some(t), detail: None },
            Ok(Outcome::Flag(passed, detail)) => Check { name: name.into(), passed, value: None, tolerance: None, detail },
            Err(e) => Check { name: name.into(), passed: false, value: None, tolerance: None, detail: Some(e.to_string()) },
        };
        self.checks.push(check);
    }

    fn finish(self, example: &str, seed: u64) -> BatteryReport {
        BatteryReport { example: example.into(), seed, passed: self.checks.iter().all(|c| c.passed), checks: self.checks }
    }
}

fn shared<T>(r: &Result<T>) -> Result<&T> {
    r.as_ref().map_err(|e| Error::ModelInconsistency(e.to_string()))
}

fn max_abs(a: &RealMatrix, b: &RealMatrix) -> f64 {
    (a - b).amax()
}

fn from_operator_map(f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Result<TransferMatrix> {
    TransferMatrix::from_action(2, 2, f, 1e-12)
}

fn ordered_triples(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<[f64; 3]> {
    (0..n)
        .map(|_| {
            let mut v = [rng.random_range(lo..hi), rng.random_range(lo..hi), rng.random_range(lo..hi)];
            v.sort_by(f64::total_cmp);
            v
        })
        .collect()
}

fn unique_at(outcome: &Uniqueness, target: &[f64], tol: f64) -> Outcome {
    match outcome {
        Uniqueness::UniqueCptp { theta, .. } => {
            let d = theta.iter().zip(target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            Outcome::AtMost(d, tol)
        }
        other => Outcome::Flag(false, Some(format!("verdict {}", other.label()))),
    }
}

pub fn reproduce(example: &str, settings: &Settings) -> Result<BatteryReport> {
    let b = match example {
        "ex1" => ex1(settings),
        "ex2" => ex2(settings),
        "pauli" => pauli_battery(settings),
        "exnon" => exnon(settings),
        "phasecov" => phasecov(settings),
        "projectors" => projectors(settings),
        "jordan" => jordan(),
        "discrete" => discrete(settings),
        other => {
            return Err(Error::Parse(format!("unknown example '{other}', expected one of {}", EXAMPLES.join(", "))));
        }
    };
    Ok(b.finish(example, settings.seed))
}

/// Attractor with drifting fixed point, past the rank drop.
fn ex1(st: &Settings) -> Battery {
    let tol = &st.tol;
    let model = presets::drifting_attractor();
    let omega = |t: f64| bloch_state(presets::drifting_bloch(t));
    let mut rng = ChaCha8Rng::seed_from_u64(st.seed);
    let pairs = [(1.0, 1.0), (1.2, 1.7), (1.5, 2.9), (2.0, 4.0)];
    let triples = ordered_triples(&mut rng, 20, 1.0, 3.0);
    let mut b = Battery::default();

    b.run("spectral-rule propagator equals omega_t Tr", || {
        let mut worst = 0.0f64;
        for &(s, t) in &pairs {
            let v = propagate_family(&model, &InverseRule::Spectral, s, t, tol)?;
            let w = omega(t);
            let oracle = from_operator_map(|y| &w * y.trace())?;
            worst = worst.max(max_abs(v.v.matrix(), oracle.matrix()));
        }
        Ok(Outcome::AtMost(worst, 1e-12))
    });
    b.run("spectral-rule propagator is CPTP", || {
        let ok = pairs.iter().try_fold(true, |acc, &(s, t)| {
            let c = propagate_family(&model, &InverseRule::Spectral, s, t, tol)?.certificate;
            Ok::<_, Error>(acc && c.trace_preserving && c.completely_positive)
        })?;
        Ok(Outcome::Flag(ok, None))
    });
    b.run("kernel-complement inverse equals Lambda_s: reflexive, neither symmetry", || {
        let ts = model.transfer_at(1.4)?;
        let g = InverseRule::KernelComplement.inverse(&ts, tol)?;
        let c = classify(ts.matrix(), &g, tol)?;
        let same = max_abs(&g, ts.matrix()) <= 1e-12;
        Ok(Outcome::Flag(same && c.reflexive && !c.left_symmetric && !c.right_symmetric, None))
    });
    b.run("dual-complement propagator equals omega_t (Y, omega_s)/(omega_s, omega_s)", || {
        let mut worst = 0.0f64;
        for &(s, t) in &pairs {
            let v = propagate_family(&model, &InverseRule::DualKernelComplement, s, t, tol)?;
            let (ws, wt) = (omega(s), omega(t));
            let norm = (&ws * &ws).trace();
            let oracle = from_operator_map(|y| &wt * ((ws.adjoint() * y).trace() / norm))?;
            worst = worst.max(max_abs(v.v.matrix(), oracle.matrix()));
        }
        Ok(Outcome::AtMost(worst, 1e-12))
    });
    b.run("dual-complement propagator is CP and not TP", || {
        let c = propagate_family(&model, &InverseRule::DualKernelComplement, 1.2, 1.7, tol)?.certificate;
        Ok(Outcome::Flag(c.completely_positive && !c.trace_preserving, Some(format!("trace residual {:.3e}", c.trace_residual))))
    });
    b.run("dual-complement inverse is reflexive and a Hermitian projector, GA not Hermitian", || {
        let ts = model.transfer_at(1.4)?;
        let g = InverseRule::DualKernelComplement.inverse(&ts, tol)?;
        let c = classify(ts.matrix(), &g, tol)?;
        let idempotent = frobenius(&(&g * &g - &g)) <= 1e-12;
        Ok(Outcome::Flag(c.reflexive && c.right_symmetric && !c.left_symmetric && idempotent, None))
    });
    b.run("propagators agree on the image of Lambda_s", || {
        let ws = model.transfer_at(1.3)?.matrix().column(0).into_owned();
        let a = propagate_family(&model, &InverseRule::Spectral, 1.3, 2.2, tol)?.v;
        let d = propagate_family(&model, &InverseRule::DualKernelComplement, 1.3, 2.2, tol)?.v;
        Ok(Outcome::AtMost((a.matrix() * &ws - d.matrix() * &ws).amax(), 1e-12))
    });
    for rule in [InverseRule::Spectral, InverseRule::DualKernelComplement] {
        b.run(&format!("composition law, {} rule, 20 triples", rule.label()), || {
            let worst = triples
                .iter()
                .map(|&[s, u, t]| composition_check(&model, &rule, s, u, t, tol))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            Ok(Outcome::AtMost(worst, 1e-12))
        });
    }
    b
}

/// Attractor with fixed point, invertible regime.
fn ex2(st: &Settings) -> Battery {
    let tol = &st.tol;
    let model = presets::attractor();
    let w = bloch_state(presets::ATTRACTOR_OMEGA);
    let pairs = [(0.0, 0.3), (0.1, 0.5), (0.4, 0.9), (0.6, 0.99)];
    let mut b = Battery::default();
    b.run("invertible-regime propagator matches the closed form", || {
        let mut worst = 0.0f64;
        for &(s, t) in &pairs {
            let v = propagate_family(&model, &InverseRule::MoorePenrose, s, t, tol)?;
            let (fs, ft) = (s, t);
            let oracle = from_operator_map(|y| {
                y * c64((1.0 - ft) / (1.0 - fs), 0.0) + &w * (y.trace() * ((ft - fs) / (1.0 - fs)))
            })?;
            worst = worst.max(max_abs(v.v.matrix(), oracle.matrix()));
        }
        Ok(Outcome::AtMost(worst, 1e-12))
    });
    b.run("invertible-regime propagators are CPTP", || {
        let ok = pairs.iter().try_fold(true, |acc, &(s, t)| {
            let c = propagate_family(&model, &InverseRule::MoorePenrose, s, t, tol)?.certificate;
            Ok::<_, Error>(acc && c.completely_positive && c.trace_preserving)
        })?;
        Ok(Outcome::Flag(ok, None))
    });
    b.run("spectrum is {1, 1-f, 1-f, 1-f}", || {
        let mut worst = 0.0f64;
        for t in [0.2, 0.5, 0.8] {
            let s = spectral_decompose_transfer(&model.transfer_at(t)?, DEFAULT_COND_MAX)?;
            let mut ev: Vec<f64> = s.eigenvalues.iter().map(|z| z.re).collect();
            ev.sort_by(|a, b| b.total_cmp(a));
            for (a, e) in ev.iter().zip([1.0, 1.0 - t, 1.0 - t, 1.0 - t]) {
                worst = worst.max((a - e).abs());
            }
        }
        Ok(Outcome::AtMost(worst, 1e-10))
    });
    b.run("fixed point of Lambda_t is omega", || {
        let t = model.transfer_at(0.5)?;
        let s = spectral_decompose_transfer(&t, DEFAULT_COND_MAX)?;
        let right = s.right_operator(0);
        Ok(Outcome::AtMost(frobenius(&(right - &w)), 1e-10))
    });
    b.run("kernel inclusion on sampled pairs", || {
        let times = [0.0, 0.25, 0.5, 0.75, 1.0, 1.5];
        let mut ok = true;
        for (i, &s) in times.iter().enumerate() {
            for &t in &times[i + 1..] {
                ok &= kernel_inclusion(&model.transfer_at(s)?, &model.transfer_at(t)?, tol)?.holds;
            }
        }
        Ok(Outcome::Flag(ok, None))
    });
    b.run("trace norms never increase with a qubit ancilla", || {
        let grid: Vec<f64> = (0..=10).map(|i| 0.095 * i as f64).collect();
        let r = monotonicity_check(&model, 2, st.samples.min(200), &grid, st.seed, tol)?;
        Ok(Outcome::Flag(!r.violated(), Some(format!("{} violations", r.violations.len()))))
    });
    b
}

fn pauli_battery(st: &Settings) -> Battery {
    let tol = &st.tol;
    let model = presets::pauli_rank_drop();
    let lambda1 = |t: f64| (-2.0 * t).exp();
    let mut b = Battery::default();
    b.run("Lambda at t* is diag(1, lambda_1, 0, 0)", || {
        let t = model.transfer_at(1.0)?;
        let expected = RealMatrix::from_diagonal(&DVector::from_vec(vec![1.0, lambda1(1.0), 0.0, 0.0]));
        Ok(Outcome::AtMost(max_abs(t.matrix(), &expected), 1e-15))
    });
    b.run("propagator past t* is diag(1, lambda_1(t)/lambda_1(s), 0, 0)", || {
        let mut worst = 0.0f64;
        for (s, t) in [(1.1, 1.5), (1.2, 2.0), (1.5, 3.0)] {
            for rule in [InverseRule::MoorePenrose, InverseRule::Spectral, InverseRule::KernelComplement] {
                let v = propagate_family(&model, &rule, s, t, tol)?;
                let expected = RealMatrix::from_diagonal(&DVector::from_vec(vec![1.0, lambda1(t) / lambda1(s), 0.0, 0.0]));
                worst = worst.max(max_abs(v.v.matrix(), &expected));
            }
        }
        Ok(Outcome::AtMost(worst, 1e-10))
    });
    b.run("V_{t,t} is a CPTP projector", || {
        let v = propagate_family(&model, &InverseRule::MoorePenrose, 1.4, 1.4, tol)?;
        let p = v.v.matrix();
        let idem = frobenius(&(p * p - p));
        let c = &v.certificate;
        Ok(Outcome::Flag(idem <= 1e-12 && c.completely_positive && c.trace_preserving, None))
    });
    let (s0, t0) = (1.2, 2.0);
    let family = (|| {
        let (ts, tt) = (model.transfer_at(s0)?, model.transfer_at(t0)?);
        propagator_family(&tt, &ts, &tp_inverse_family(&ts, tol)?, tol)
    })();
    b.run("unscaled Choi minimum of the propagator family is 1 - sqrt(r^2 + a^2 + b^2)", || {
        let f = shared(&family)?;
        let r = lambda1(t0) / lambda1(s0);
        let mut worst = 0.0f64;
        for i in 0..21 {
            for j in 0..21 {
                let (a, c) = (-1.0 + 0.1 * i as f64, -1.0 + 0.1 * j as f64);
                let ev = f.at(&[a, c])?.choi().unscaled_eigenvalues();
                worst = worst.max((ev[0] - (1.0 - (r * r + a * a + c * c).sqrt())).abs());
            }
        }
        Ok(Outcome::AtMost(worst, 1e-10))
    });
    b.run("CPTP propagators past t* are not unique", || {
        let out = cptp_search(shared(&family)?, &st.search())?;
        Ok(Outcome::Flag(matches!(out.uniqueness, Uniqueness::MultiCptp { .. }), Some(out.uniqueness.label().into())))
    });
    b.run("invertible-regime propagator is diag of eigenvalue ratios", || {
        let (s, t) = (0.3, 0.8);
        let v = propagate_family(&model, &InverseRule::MoorePenrose, s, t, tol)?;
        let l = |t: f64| [(-(2.0 * t)).exp(), (-(-(1.0 - t).ln() + t)).exp(), (-(-(1.0 - t).ln() + t)).exp()];
        let (ls, lt) = (l(s), l(t));
        let expected = RealMatrix::from_diagonal(&DVector::from_vec(vec![1.0, lt[0] / ls[0], lt[1] / ls[1], lt[2] / ls[2]]));
        Ok(Outcome::AtMost(max_abs(v.v.matrix(), &expected), 1e-10))
    });
    b.run("constant rates: integrated map matches lambda_i = exp(-Gamma_j - Gamma_k)", || {
        let rates = [0.3, 0.7, 1.1];
        let gen = GeneratorSpec::pauli(rates.map(ScalarFn::Constant));
        let mut worst = 0.0f64;
        for t in [0.5, 1.0, 2.0] {
            let m = integrate_map(&gen, t, 1e-9)?;
            for i in 0..3 {
                let e = (-(rates[(i + 1) % 3] + rates[(i + 2) % 3]) * t).exp();
                worst = worst.max((m.matrix()[(i + 1, i + 1)] - e).abs());
            }
        }
        Ok(Outcome::AtMost(worst, 1e-6))
    });
    b
}

fn exnon(st: &Settings) -> Battery {
    let tol = &st.tol;
    let model = presets::non_diagonal();
    let p = psi();
    let mut b = Battery::default();
    b.run("Psi has rank 2 and singular values 1, 1, 0, 0", || {
        let s = svd(p.matrix(), tol.tol_rank);
        let expected = [1.0, 1.0, 0.0, 0.0];
        let d = s.singular_values.iter().zip(expected).map(|(a, e)| (a - e).abs()).fold(0.0, f64::max);
        Ok(Outcome::Flag(s.rank == 2 && d <= 1e-15, None))
    });
    b.run("Psi has eigenvalues 1, 0, 0, 0 and is not diagonalizable", || {
        let ev = p.matrix().complex_eigenvalues();
        let mut re: Vec<f64> = ev.iter().map(|z| z.norm()).collect();
        re.sort_by(|a, b| b.total_cmp(a));
        let spectrum_ok = (re[0] - 1.0).abs() < 1e-15 && re[1..].iter().all(|x| x.abs() < 1e-15);
        let nondiag = matches!(spectral_decompose_transfer(&p, DEFAULT_COND_MAX), Err(Error::NotDiagonalizable(_)));
        Ok(Outcome::Flag(spectrum_ok && nondiag, None))
    });
    b.run("Psi has Kraus rank 2 and is realized by K1^dagger, K2^dagger", || {
        let kraus = p.choi().to_kraus(tol)?;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let k1 = ComplexMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(0.0, 0.0), c64(-h, 0.0), c64(h, 0.0)]);
        let k2 = ComplexMatrix::from_row_slice(2, 2, &[c64(h, 0.0), c64(h, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)]);
        let listed = from_operator_map(|x| k1.adjoint() * x * &k1 + k2.adjoint() * x * &k2)?;
        Ok(Outcome::Flag(kraus.len() == 2 && max_abs(listed.matrix(), p.matrix()) <= 1e-15, None))
    });
    b.run("invertible-regime propagator matches the closed form", || {
        let mut worst = 0.0f64;
        for (s, t) in [(0.0, 0.4), (0.2, 0.6), (0.5, 0.9)] {
            let v = propagate_family(&model, &InverseRule::MoorePenrose, s, t, tol)?;
            let r = (1.0 - t) / (1.0 - s);
            let mut e = RealMatrix::from_diagonal(&DVector::from_vec(vec![1.0, r, r, r]));
            e[(1, 3)] = (t - s) / ((1.0 - s) * (1.0 - s));
            worst = worst.max(max_abs(v.v.matrix(), &e));
        }
        Ok(Outcome::AtMost(worst, 1e-12))
    });
    b.run("invertible-regime propagator is not CP", || {
        let c = propagate_family(&model, &InverseRule::MoorePenrose, 0.2, 0.6, tol)?.certificate;
        Ok(Outcome::Flag(!c.completely_positive && c.trace_preserving, Some(format!("min Choi eigenvalue {:.3e}", c.min_choi_eigenvalue))))
    });
    b.run("kernel is not complementary to the image", || {
        let r = InverseRule::KernelComplement.inverse(&model.transfer_at(1.5)?, tol);
        Ok(Outcome::Flag(matches!(r, Err(Error::NotAComplement(_))), None))
    });
    let family = (|| {
        let ts = model.transfer_at(1.2)?;
        let tt = model.transfer_at(1.6)?;
        propagator_family(&tt, &ts, &tp_inverse_family(&ts, tol)?, tol)
    })();
    b.run("propagator family is V[1,2], V[1,3] over diag(1, 1, 0, 0)", || {
        let f = shared(&family)?;
        let base = RealMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 0.0, 0.0]));
        Ok(Outcome::Flag(f.labels == ["V[1,2]", "V[1,3]"] && max_abs(&f.base, &base) <= 1e-15, Some(f.labels.join(", "))))
    });
    b.run("unscaled Choi minimum is 1 - sqrt(a32^2 + a33^2 + 1) on a 41x41 grid", || {
        let f = shared(&family)?;
        let mut worst = 0.0f64;
        for i in 0..41 {
            for j in 0..41 {
                let (a, c) = (-2.0 + 0.1 * i as f64, -2.0 + 0.1 * j as f64);
                let ev = f.at(&[a, c])?.choi().unscaled_eigenvalues();
                worst = worst.max((ev[0] - (1.0 - (a * a + c * c + 1.0).sqrt())).abs());
            }
        }
        Ok(Outcome::AtMost(worst, 1e-10))
    });
    b.run("CPTP propagator is unique at (0, 0)", || {
        let out = cptp_search(shared(&family)?, &st.search())?;
        Ok(unique_at(&out.uniqueness, &[0.0, 0.0], 1e-6))
    });
    b.run("trace norm increases with a qubit ancilla on (0, 1)", || {
        let grid: Vec<f64> = (0..=10).map(|i| 0.099 * i as f64).collect();
        let r = monotonicity_check(&model, 2, st.samples, &grid, st.seed, tol)?;
        Ok(Outcome::AtLeast(r.best_increase(), 1e-6))
    });
    b
}

fn phasecov(st: &Settings) -> Battery {
    let tol = &st.tol;
    let model = presets::phase_covariant_rank_drop();
    let mut b = Battery::default();
    b.run("constant rates: closed form matches integration on 20 points", || {
        let c = presets::phase_covariant_constant();
        let gen = GeneratorSpec::phase_covariant(ScalarFn::Constant(1.0), ScalarFn::Constant(1.0), ScalarFn::Constant(1.0));
        let mut worst = 0.0f64;
        for i in 1..=20 {
            let t = 0.15 * i as f64;
            worst = worst.max(max_abs(c.transfer_at(t)?.matrix(), integrate_map(&gen, t, 1e-9)?.matrix()));
        }
        Ok(Outcome::AtMost(worst, 1e-6))
    });
    b.run("rank drops 4 -> 2 at t_1 and 2 -> 1 at t_2", || {
        let ranks = [0.5, 0.99, 1.0, 1.5, 1.99, 2.0, 3.0]
            .iter()
            .map(|&t| Ok(rank(model.transfer_at(t)?.matrix(), tol.tol_rank)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Outcome::Flag(ranks == [4, 4, 2, 2, 2, 1, 1], Some(format!("{ranks:?}"))))
    });
    let s = 1.5;
    b.run("trace-preserving inverses fix -e^Gamma + 2G + 1 and e^Gamma", || {
        let ts = model.transfer_at(s)?;
        let ints = model.phase_covariant_integrals(s)?;
        let fam = tp_inverse_family(&ts, tol)?;
        let mut rng = ChaCha8Rng::seed_from_u64(st.seed);
        let mut worst = 0.0f64;
        let mut free = vec![false; 16];
        for _ in 0..10 {
            let theta: Vec<f64> = (0..fam.len()).map(|_| rng.random_range(-2.0..2.0)).collect();
            let g = fam.instantiate(&theta)?;
            worst = worst.max((g[(3, 0)] - (-ints.gamma.exp() + 2.0 * ints.g + 1.0)).abs());
            worst = worst.max((g[(3, 3)] - ints.gamma.exp()).abs());
            for (k, d) in (g - &fam.family.base).iter().enumerate() {
                free[k] |= d.abs() > 1e-9;
            }
        }
        // Column-major: rows 1, 2 and entries (3, 1), (3, 2) vary; row 0 and (3, 0), (3, 3) do not.
        let expected: Vec<bool> = (0..16).map(|k| {
            let (r, c) = (k % 4, k / 4);
            r != 0 && !(r == 3 && (c == 0 || c == 3))
        }).collect();
        if free != expected {
            return Ok(Outcome::Flag(false, Some("free entries differ from the displayed shape".into())));
        }
        Ok(Outcome::AtMost(worst * (-ints.gamma).exp(), 1e-9))
    });
    b.run("propagator for t >= s >= t_1 matches the display", || {
        let t = 1.8;
        let v = propagate_family(&model, &InverseRule::TracePreserving(vec![0.0; 10]), s, t, tol)?;
        let (is, it) = (model.phase_covariant_integrals(s)?, model.phase_covariant_integrals(t)?);
        let x = |i: crate::models::spec::PhaseCovariantIntegrals| 1.0 - (-i.gamma).exp() * (2.0 * i.g + 1.0);
        let ratio = (-(it.gamma - is.gamma)).exp();
        let mut e = RealMatrix::zeros(4, 4);
        e[(0, 0)] = 1.0;
        e[(3, 0)] = x(it) - ratio * x(is);
        e[(3, 3)] = ratio;
        Ok(Outcome::AtMost(max_abs(v.v.matrix(), &e), 1e-9))
    });
    b.run("V_{s,s} has a unique CPTP member at alpha_31 = alpha_32 = 0", || {
        let ts = model.transfer_at(s)?;
        let fam = propagator_family(&ts, &ts, &tp_inverse_family(&ts, tol)?, tol)?;
        let out = cptp_search(&fam, &st.search())?;
        Ok(unique_at(&out.uniqueness, &vec![0.0; fam.len()], 1e-6))
    });
    b.run("CPTP V_{s,s} is the completely dephasing channel", || {
        let ts = model.transfer_at(s)?;
        let fam = propagator_family(&ts, &ts, &tp_inverse_family(&ts, tol)?, tol)?;
        let v = fam.at(&vec![0.0; fam.len()])?;
        let z = pauli(3);
        let dephasing = from_operator_map(|x| (x + &z * x * &z) * c64(0.5, 0.0))?;
        Ok(Outcome::AtMost(max_abs(v.matrix(), dephasing.matrix()), 1e-12))
    });
    b.run("for t >= t_2 the map is the projector onto |0><0|", || {
        let mut e = RealMatrix::zeros(4, 4);
        e[(0, 0)] = 1.0;
        e[(3, 0)] = 1.0;
        let exact = [2.0, 2.5, 4.0].iter().try_fold(true, |acc, &t| Ok::<_, Error>(acc && model.transfer_at(t)?.matrix() == &e))?;
        let c = certify(&TransferMatrix::new(2, e.clone())?, tol);
        Ok(Outcome::Flag(exact && &e * &e == e && c.completely_positive && c.trace_preserving, None))
    });
    b.run("kernel inclusion on sampled pairs", || {
        let times = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5];
        let mut ok = true;
        for (i, &s) in times.iter().enumerate() {
            for &t in &times[i + 1..] {
                ok &= kernel_inclusion(&model.transfer_at(s)?, &model.transfer_at(t)?, tol)?.holds;
            }
        }
        Ok(Outcome::Flag(ok, None))
    });
    b
}

/// Minimum unscaled Choi eigenvalue of rank-3 projectors over a grid and
/// random draws.
pub fn rank_three_minimum(seed: u64, random_samples: usize) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    let mut check = |p: [f64; 3]| -> Result<()> {
        let m = projector_matrix(3, &p)?;
        worst = worst.max(m.choi().unscaled_eigenvalues()[0]);
        Ok(())
    };
    for i in 0..21 {
        for j in 0..21 {
            for k in 0..21 {
                check([-5.0 + 0.5 * i as f64, -5.0 + 0.5 * j as f64, -1.0 + 0.1 * k as f64])?;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..random_samples {
        check([rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-1.0..1.0)])?;
    }
    Ok(worst)
}

fn projectors(st: &Settings) -> Battery {
    let tol = &st.tol;
    let mut b = Battery::default();
    b.run("rank 3: unscaled Choi minimum <= -1 on 21^3 grid and 10^4 draws", || {
        Ok(Outcome::AtMost(rank_three_minimum(st.seed, 10_000)?, -1.0 + 1e-9))
    });
    b.run("rank 3: no CPTP member in the relaxed family", || {
        let out = cptp_search(&projector_family(3)?, &st.search())?;
        Ok(Outcome::Flag(matches!(out.uniqueness, Uniqueness::NoneCptp { .. }), Some(out.uniqueness.label().into())))
    });
    b.run("rank 2: unscaled Choi spectrum is 1 +- sqrt(g3^2 + x2^2 + 1), each twice", || {
        let mut worst = 0.0f64;
        for i in 0..21 {
            for j in 0..21 {
                let (g3, x2) = (-2.0 + 0.2 * i as f64, -2.0 + 0.2 * j as f64);
                let ev = classify_qubit_projector(2, &[0.0, g3, x2, 0.0], tol)?.unscaled_choi_eigenvalues;
                let r = (g3 * g3 + x2 * x2 + 1.0).sqrt();
                for (a, e) in ev.iter().zip([1.0 - r, 1.0 - r, 1.0 + r, 1.0 + r]) {
                    worst = worst.max((a - e).abs());
                }
            }
        }
        Ok(Outcome::AtMost(worst, 1e-10))
    });
    b.run("rank 2: CP exactly at the origin", || {
        let mut ok = classify_qubit_projector(2, &[0.0; 4], tol)?.completely_positive;
        for k in 0..4 {
            for sign in [-1.0, 1.0] {
                let mut p = [0.0; 4];
                p[k] = sign * 1e-3;
                ok &= !classify_qubit_projector(2, &p, tol)?.completely_positive;
            }
        }
        Ok(Outcome::Flag(ok, None))
    });
    b.run("rank 2: CP point is X -> (X + s1 X s1)/2", || {
        let c = classify_qubit_projector(2, &[0.0; 4], tol)?;
        let kraus = c.kraus.ok_or_else(|| Error::ModelInconsistency("no Kraus form".into()))?;
        let from_kraus = from_operator_map(|x| kraus.iter().fold(ComplexMatrix::zeros(2, 2), |acc, k| acc + k * x * k.adjoint()))?;
        let s1 = pauli(1);
        let expected = from_operator_map(|x| (x + &s1 * x * &s1) * c64(0.5, 0.0))?;
        Ok(Outcome::AtMost(max_abs(from_kraus.matrix(), expected.matrix()), 1e-10))
    });
    b.run("rank 2: relaxed family has a unique CPTP member at the origin", || {
        let out = cptp_search(&projector_family(2)?, &st.search())?;
        Ok(unique_at(&out.uniqueness, &[0.0; 5], 1e-6))
    });
    b.run("rank 1: CP iff the Bloch vector lies in the unit ball", || {
        let inside = [[0.0, 0.0, 1.0], [0.3, -0.4, 0.5], [0.0, 0.0, 0.0]];
        let outside = [[0.0, 0.0, 1.01], [0.8, 0.8, 0.0]];
        let mut ok = true;
        for x in inside {
            ok &= classify_qubit_projector(1, &x, tol)?.completely_positive;
        }
        for x in outside {
            ok &= !classify_qubit_projector(1, &x, tol)?.completely_positive;
        }
        Ok(Outcome::Flag(ok, None))
    });
    b
}

fn jordan() -> Battery {
    let mut b = Battery::default();
    for k in 1..=8 {
        b.run(&format!("J_{k}(0) J_{k}(0)^T J_{k}(0) = J_{k}(0) and reflexive counterpart"), || {
            let c = jordan_block_check(k)?;
            Ok(Outcome::AtMost(c.forward_residual.max(c.reflexive_residual) as f64, 0.0))
        });
    }
    b
}

fn partial_trace_second() -> Result<TransferMatrix> {
    TransferMatrix::from_action(
        4,
        2,
        |x| ComplexMatrix::from_fn(2, 2, |i, j| x[(2 * i, 2 * j)] + x[(2 * i + 1, 2 * j + 1)]),
        1e-12,
    )
}

fn discrete(st: &Settings) -> Battery {
    let tol = &st.tol;
    let mut b = Battery::default();
    let mut rng = ChaCha8Rng::seed_from_u64(st.seed);
    let later = random_channel(2, 2, &mut rng);
    let family = (|| {
        let tr = partial_trace_second()?;
        DiscreteFamily::new(4, vec![tr.clone(), later.compose(&tr)?])
    })();
    b.run("right inverse of the partial trace", || {
        let f = shared(&family)?;
        let r = right_inverse(f.step(1)?, tol)?;
        Ok(Outcome::AtMost(frobenius(&(f.step(1)?.matrix() * &r.base - RealMatrix::identity(4, 4))), 1e-10))
    });
    b.run("20 right inverses give the same propagator", || {
        let f = shared(&family)?;
        let n = right_inverse(f.step(1)?, tol)?.len();
        let props = (0..20)
            .map(|_| {
                let theta: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                discrete_propagator(f, 1, 2, &DiscreteInverse::Right(theta), tol)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut worst = 0.0f64;
        for i in 0..props.len() {
            for j in i + 1..props.len() {
                worst = worst.max(max_abs(props[i].matrix(), props[j].matrix()));
            }
        }
        Ok(Outcome::AtMost(worst, 1e-11))
    });
    b.run("propagator reproduces the later step", || {
        let f = shared(&family)?;
        let v = discrete_propagator(f, 1, 2, &DiscreteInverse::MoorePenrose, tol)?;
        Ok(Outcome::AtMost(max_abs(v.matrix(), later.matrix()), 1e-11))
    });
    b.run("helstrom term is monotone under 100 random channels", || {
        let mut worst = f64::NEG_INFINITY;
        for k in 0..100 {
            let e = Ensemble2::new(rng.random_range(0.0..1.0), random_pure_state(2, &mut rng), random_pure_state(2, &mut rng))?;
            let ch = random_channel(2, 1 + k % 4, &mut rng);
            worst = worst.max(helstrom(&e.map(&ch)).trace_norm_term - helstrom(&e).trace_norm_term);
        }
        Ok(Outcome::AtMost(worst, 1e-12))
    });
    b.run("cumulative channels are information decreasing", || {
        let mut acc = TransferMatrix::identity(2);
        let mut maps = Vec::new();
        for _ in 0..4 {
            acc = random_channel(2, 3, &mut rng).compose(&acc)?;
            maps.push(acc.clone());
        }
        let r = info_decreasing_check(&DiscreteFamily::new(2, maps)?, 2, st.samples.min(200), st.seed, tol)?;
        Ok(Outcome::Flag(r.information_decreasing(), None))
    });
    b.run("a transposition step breaks information decrease", || {
        let first = random_channel(2, 2, &mut rng);
        let transpose = from_operator_map(|x| x.transpose())?;
        let f = DiscreteFamily::new(2, vec![first.clone(), transpose.compose(&first)?])?;
        let r = info_decreasing_check(&f, 2, st.samples.min(200), st.seed, tol)?;
        Ok(Outcome::Flag(!r.information_decreasing(), Some(format!("{} violations", r.violations.len()))))
    });
    b.run("sampled attractor matches the continuous propagator", || {
        let model: ModelSpec = presets::drifting_attractor();
        let times = [0.3, 0.7, 1.2, 1.9];
        let maps = times.iter().map(|&t| model.transfer_at(t)).collect::<Result<Vec<_>>>()?;
        let f = DiscreteFamily::new(2, maps)?;
        let mut worst = 0.0f64;
        for (i, j) in [(1, 2), (2, 3), (3, 4), (1, 4)] {
            let d = discrete_propagator(&f, i, j, &DiscreteInverse::MoorePenrose, tol)?;
            let c = propagate_family(&model, &InverseRule::MoorePenrose, times[i - 1], times[j - 1], tol)?;
            worst = worst.max(max_abs(d.matrix(), c.v.matrix()));
        }
        Ok(Outcome::AtMost(worst, 1e-12))
    });
    b
}
