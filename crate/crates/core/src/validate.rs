//! Named invariant checks, grouped into a fast `core` suite and a slower
//! `physics` suite.

use std::f64::consts::PI;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::analysis::{self, fidelity, min_quadrature_variance, quadrature_variance, GridSpec};
use crate::dynamics::{self, Axis, Tolerances};
use crate::linalg;
use crate::model::{
    self, dressed_liouvillian, effective_hamiltonian, hamiltonian_n, liouvillian, rabi_hamiltonian, Channel,
    ChannelKind, Dephasing, Liouvillian, ModelParams, QubitParams,
};
use crate::protocols::{self, CatParams, CoolingParams, Environment, QubitRates};
use crate::quantum::{coherent_state, fock_ops, DensityMatrix, HilbertSpec, Operator, Spin, StateVector};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Core,
    Physics,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "core" => Ok(Suite::Core),
            "physics" => Ok(Suite::Physics),
            "all" => Ok(Suite::All),
            other => Err(Error::InvalidArgument(format!("unknown suite {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InvariantResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Builds a generator from parameters and a Hamiltonian.
pub type GeneratorBuilder = dyn Fn(&ModelParams, &Operator) -> Result<Liouvillian>;

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> InvariantResult {
    match f() {
        Ok((passed, detail)) => InvariantResult { name, passed, detail },
        Err(e) => InvariantResult { name, passed: false, detail: format!("error: {e}") },
    }
}

/// Runs one suite; `All` runs both.
pub fn run_suite(suite: Suite) -> Vec<InvariantResult> {
    let mut out = Vec::new();
    if matches!(suite, Suite::Core | Suite::All) {
        out.extend(core_suite());
    }
    if matches!(suite, Suite::Physics | Suite::All) {
        out.extend(physics_suite());
    }
    out
}

fn core_suite() -> Vec<InvariantResult> {
    vec![
        thermalization_invariant(&|p, h| liouvillian(p, h)),
        check("trace_hermiticity_random_generators", random_generator_check),
        check("positivity_during_evolution", positivity_check),
        check("rabi_spectrum_equivalence", rabi_equivalence_check),
        check("coherent_displacement_closed_form", displacement_check),
        check("heff_bogoliubov_frequency", heff_frequency_check),
        check("dressed_matches_bare_without_coupling", dressed_bare_check),
        check("steady_state_matches_long_evolution", steady_vs_evolve_check),
        check("pulse_composition", pulse_check),
        check("postselection_branches_sum_to_one", branch_sum_check),
        check("wigner_normalization", wigner_norm_check),
        check("min_variance_is_exact_minimum", min_variance_check),
        check("fidelity_global_phase_invariance", fidelity_phase_check),
    ]
}

fn physics_suite() -> Vec<InvariantResult> {
    vec![
        check("cat_zero_decoherence_fidelity", cat_check),
        check("cooling_sideband_asymmetry", sideband_check),
        check("cooling_optimum_never_heats", cooling_optimum_check),
        check("cooling_truncation_convergence", cooling_truncation_check),
        check("heff_shorttime_trend", heff_trend_check),
    ]
}

/// Damped bare oscillator must relax to `N̄` (relative 1e-6). `build` lets
/// tests substitute a faulty generator.
pub fn thermalization_invariant(build: &GeneratorBuilder) -> InvariantResult {
    check("thermalization_to_bath_occupation", || {
        let mut worst = 0.0_f64;
        for &nbar in &[0.5, 2.0] {
            let mut p = ModelParams::new(HilbertSpec::oscillator(140)?, vec![]);
            p.quality_factor = 20.0;
            let p = p.with_mechanical_occupation(nbar);
            let l = build(&p, &hamiltonian_n(&p)?)?;
            let rho = dynamics::steady_state(&l)?;
            let gibbs = DensityMatrix::thermal(p.spec, nbar)?;
            let want = analysis::phonon_number(&gibbs);
            let got = analysis::phonon_number(&rho);
            worst = worst.max((got - want).abs() / want);
            worst = worst.max((want - nbar).abs() / nbar);
        }
        Ok((worst <= 1e-6, format!("max relative error {worst:.2e}")))
    })
}

/// Fault-injection fixture: the bare generator with the emission and
/// absorption weights of every bosonic channel swapped.
pub fn swapped_bath_generator(p: &ModelParams, h: &Operator) -> Result<Liouvillian> {
    let chans: Vec<Channel> = model::channels(p)?
        .into_iter()
        .map(|mut c| {
            if let ChannelKind::Mechanical { nbar, .. } = c.kind {
                // (N̄+1)D[b†] + N̄ D[b]
                c.op = c.op.dagger();
                c.kind = ChannelKind::Mechanical { nbar, thermal_energy: 0.0 };
            }
            c
        })
        .collect();
    Liouvillian::from_channels(h, &chans)
}

fn random_hermitian(rng: &mut StdRng, spec: HilbertSpec, scale: f64) -> Operator {
    let d = spec.dim();
    let mut m = ndarray::Array2::<C64>::zeros((d, d));
    for i in 0..d {
        m[[i, i]] = C64::new(rng.random_range(-scale..scale), 0.0);
        for j in 0..i {
            let v = C64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale));
            m[[i, j]] = v;
            m[[j, i]] = v.conj();
        }
    }
    Operator::new(spec, m).expect("square matrix of the spec dimension")
}

fn random_state(rng: &mut StdRng, spec: HilbertSpec) -> Result<DensityMatrix> {
    let d = spec.dim();
    let g = ndarray::Array2::from_shape_fn((d, d), |_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let m = g.dot(&linalg::dagger(g.view()));
    let tr = linalg::trace(m.view()).re;
    DensityMatrix::new(spec, m.mapv(|x| x / tr))
}

fn random_generator(rng: &mut StdRng, spec: HilbertSpec) -> Result<Liouvillian> {
    let h = random_hermitian(rng, spec, 1.0);
    let mut chans = Vec::new();
    for k in 0..2 {
        let a = random_hermitian(rng, spec, 1.0);
        let b = random_hermitian(rng, spec, 1.0);
        let op = &a + &b.scale(C64::new(0.0, 1.0));
        chans.push(Channel {
            name: format!("random{k}"),
            op,
            rate: rng.random_range(0.0..0.5),
            kind: ChannelKind::Optical { nbar: rng.random_range(0.0..1.0) },
        });
    }
    Liouvillian::from_channels(&h, &chans)
}

fn random_generator_check() -> Result<(bool, String)> {
    let mut rng = StdRng::seed_from_u64(7);
    let spec = HilbertSpec::new(1, 3)?;
    let (mut drift, mut herm) = (0.0_f64, 0.0_f64);
    for _ in 0..50 {
        let l = random_generator(&mut rng, spec)?;
        let rho = random_state(&mut rng, spec)?;
        let out = dynamics::evolve_sampled(&rho, &l, &[1.0], Tolerances::default())?;
        drift = drift.max(out.trace_drift);
        herm = herm.max(out.states[0].hermiticity_defect());
    }
    Ok((drift <= 1e-9 && herm <= 1e-12, format!("trace drift {drift:.2e}, hermiticity {herm:.2e}")))
}

fn positivity_check() -> Result<(bool, String)> {
    let mut rng = StdRng::seed_from_u64(11);
    let spec = HilbertSpec::new(1, 3)?;
    let mut worst = f64::INFINITY;
    for _ in 0..10 {
        let l = random_generator(&mut rng, spec)?;
        let rho = random_state(&mut rng, spec)?;
        let ev = dynamics::evolve_sampled(&rho, &l, &[0.1, 0.5, 1.0, 3.0], Tolerances::default())?;
        for s in &ev.states {
            worst = worst.min(s.min_eigenvalue()?);
        }
    }
    Ok((worst >= -1e-7, format!("smallest eigenvalue {worst:.2e}")))
}

fn rabi_equivalence_check() -> Result<(bool, String)> {
    let mut worst = 0.0_f64;
    for &(rabi, g) in &[(1.0, 0.3), (5.0, 1.2), (20.0, 2.0)] {
        let spec = HilbertSpec::new(1, 40)?;
        let p = ModelParams::new(spec, vec![QubitParams { rabi, coupling: g, ..Default::default() }]);
        let a = hamiltonian_n(&p)?.eigenvalues()?;
        let b = rabi_hamiltonian(40, 1.0, rabi, g)?.eigenvalues()?;
        for (x, y) in a.iter().zip(&b) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok((worst <= 1e-10, format!("max eigenvalue difference {worst:.2e}")))
}

fn displacement_check() -> Result<(bool, String)> {
    let g = 0.7;
    let spec = HilbertSpec::new(1, 40)?;
    let p = ModelParams::new(spec, vec![QubitParams { coupling: g, ..Default::default() }]);
    let l = liouvillian(&p, &hamiltonian_n(&p)?)?;
    let b = fock_ops(spec).annihilation;
    let mut worst = 0.0_f64;
    for spin in [Spin::Up, Spin::Down] {
        let rho0 = StateVector::basis(spec, &[spin], 0)?.density();
        let times = [0.7, 2.0, PI];
        let ev = dynamics::evolve_sampled(&rho0, &l, &times, Tolerances::default())?;
        for (rho, t) in ev.states.iter().zip(times) {
            let want = (C64::from_polar(1.0, -t) - 1.0) * (g * spin.sz());
            worst = worst.max((crate::quantum::expectation(rho, &b)? - want).norm());
        }
    }
    Ok((worst <= 1e-6, format!("max |<b> - closed form| {worst:.2e}")))
}

fn heff_frequency_check() -> Result<(bool, String)> {
    let rabi = 10.0;
    let mut worst = 0.0_f64;
    for &kappa in &[0.2, 0.5, 0.9] {
        let g = (kappa * rabi / 4.0f64).sqrt();
        let ev = effective_hamiltonian(200, 1.0, rabi, g)?.eigenvalues()?;
        let eps = (1.0 - kappa).sqrt();
        worst = worst.max(((ev[1] - ev[0]) - eps).abs() / eps);
    }
    Ok((worst <= 1e-6, format!("max relative error {worst:.2e}")))
}

fn dressed_bare_check() -> Result<(bool, String)> {
    let spec = HilbertSpec::new(1, 4)?;
    let q = QubitParams {
        detuning: 0.4,
        relaxation: 0.2,
        dephasing: Dephasing::lumped(0.1),
        splitting: 2.0,
        ..Default::default()
    };
    let mut p = ModelParams::new(spec, vec![q]);
    p.quality_factor = 10.0;
    p.thermal_energy = 1.5;
    let h = hamiltonian_n(&p)?;
    let a = model::dense_bare_superoperator(&liouvillian(&p, &h)?);
    let b = model::dense_bare_superoperator(&dressed_liouvillian(&p, &h)?);
    let diff = (&a - &b).iter().map(|x| x.norm()).fold(0.0, f64::max);
    Ok((diff <= 1e-10, format!("max superoperator difference {diff:.2e}")))
}

fn trace_norm(a: &ndarray::Array2<C64>) -> Result<f64> {
    Ok(linalg::eigvalsh(a.view())?.iter().map(|x| x.abs()).sum())
}

fn steady_vs_evolve_check() -> Result<(bool, String)> {
    let spec = HilbertSpec::new(1, 8)?;
    let q = QubitParams {
        rabi: 0.5,
        detuning: -1.0,
        coupling: 0.1,
        relaxation: 0.5,
        dephasing: Dephasing::lumped(0.1),
        splitting: 100.0,
    };
    let relaxation = q.relaxation;
    let mut p = ModelParams::new(spec, vec![q]);
    p.quality_factor = 2.0;
    let p = p.with_mechanical_occupation(0.5);
    let l = liouvillian(&p, &hamiltonian_n(&p)?)?;
    let ss = dynamics::steady_state(&l)?;
    let min_rate = p.gamma_m().min(relaxation);
    let rho0 = StateVector::basis(spec, &[Spin::Up], 3)?.density();
    let late = dynamics::evolve(&rho0, &l, 20.0 / min_rate, Tolerances::default())?;
    let dist = trace_norm(&(late.matrix() - ss.matrix()))?;
    Ok((dist <= 1e-4, format!("trace distance {dist:.2e}")))
}

fn pulse_check() -> Result<(bool, String)> {
    let spec = HilbertSpec::new(2, 2)?;
    let rho = StateVector::basis(spec, &[Spin::Down, Spin::Up], 1)?.density();
    let mut worst = 0.0_f64;
    for axis in [Axis::X, Axis::Y, Axis::Z] {
        let twice = dynamics::apply_pulse(&dynamics::apply_pulse(&rho, 1, axis, PI / 2.0)?, 1, axis, PI / 2.0)?;
        let once = dynamics::apply_pulse(&rho, 1, axis, PI)?;
        worst = worst.max((twice.matrix() - once.matrix()).iter().map(|x| x.norm()).fold(0.0, f64::max));
    }
    let same = dynamics::apply_pulse(&rho, 0, Axis::X, 0.0)?;
    worst = worst.max((same.matrix() - rho.matrix()).iter().map(|x| x.norm()).fold(0.0, f64::max));
    Ok((worst <= 1e-12, format!("max deviation {worst:.2e}")))
}

fn branch_sum_check() -> Result<(bool, String)> {
    let mut p = CatParams::new(1.0, 30);
    p.decoherence = 0.2;
    p.delta0 = 1.3;
    let up = protocols::run_cat(&p, Spin::Up, None)?;
    let s = up.probability + up.other_probability;
    Ok(((s - 1.0).abs() <= 1e-9, format!("p_up + p_down = {s:.12}")))
}

fn wigner_norm_check() -> Result<(bool, String)> {
    let spec = HilbertSpec::oscillator(60)?;
    let a = coherent_state(spec, C64::new(2.0, 0.0))?;
    let b = coherent_state(spec, C64::new(-2.0, 0.0))?;
    let cat = a.add(&b)?.normalized()?.density();
    let g = analysis::wigner(&cat, &GridSpec::covering(2.0, 71))?;
    let vac = analysis::wigner(&StateVector::basis(spec, &[], 0)?.density(), &GridSpec::covering(0.0, 41))?;
    let err = (g.integral - 1.0).abs().max((vac.integral - 1.0).abs());
    Ok((err <= 2e-2 && g.min() < 0.0, format!("max |integral - 1| {err:.2e}, cat min {:.3}", g.min())))
}

fn min_variance_check() -> Result<(bool, String)> {
    let mut rng = StdRng::seed_from_u64(3);
    let spec = HilbertSpec::oscillator(12)?;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..5 {
        let rho = random_state(&mut rng, spec)?;
        let (theta, vmin) = min_quadrature_variance(&rho)?;
        worst = worst.max((quadrature_variance(&rho, theta)? - vmin).abs());
        for _ in 0..100 {
            let th = rng.random_range(0.0..PI);
            worst = worst.max(vmin - quadrature_variance(&rho, th)?);
        }
    }
    Ok((worst <= 1e-12, format!("largest violation {worst:.2e}")))
}

fn fidelity_phase_check() -> Result<(bool, String)> {
    let mut rng = StdRng::seed_from_u64(5);
    let spec = HilbertSpec::oscillator(10)?;
    let rho = random_state(&mut rng, spec)?;
    let psi = coherent_state(spec, C64::new(0.4, 0.2))?;
    let f0 = fidelity(&rho, &psi)?;
    let f1 = fidelity(&rho, &psi.scale(C64::from_polar(1.0, 1.234)))?;
    Ok(((f0 - f1).abs() <= 1e-14, format!("difference {:.2e}", (f0 - f1).abs())))
}

fn cat_check() -> Result<(bool, String)> {
    let mut worst = 1.0_f64;
    for &(xi, f) in &[(1.0, 40), (2.0, 80)] {
        let mut p = CatParams::new(xi, f);
        p.delta0 = 0.7;
        for s in [Spin::Up, Spin::Down] {
            worst = worst.min(protocols::run_cat(&p, s, None)?.fidelity);
        }
    }
    Ok((worst >= 0.99, format!("lowest fidelity {worst:.6}")))
}

fn small_cooling() -> CoolingParams {
    CoolingParams {
        fock_dim: 30,
        env: Environment { quality_factor: 1e4, thermal_energy: 1.0 / (1.0f64 / 5.0).ln_1p() },
        coupling: 0.05,
        rates: QubitRates { relaxation: 0.1, dephasing: Dephasing { optical: 0.1, vibrational: 0.1, hyperfine: 0.01 } },
        splitting: 1e3,
    }
}

fn sideband_check() -> Result<(bool, String)> {
    let p = small_cooling();
    let red = protocols::cooling_point(&p, 0.3, -1.0)?;
    let blue = protocols::cooling_point(&p, 0.3, 1.0)?;
    let nbar = p.env.nbar();
    Ok((red.n_eff < nbar && blue.n_eff > nbar, format!("red {:.4}, blue {:.4}, bath {nbar:.4}", red.n_eff, blue.n_eff)))
}

fn cooling_optimum_check() -> Result<(bool, String)> {
    let p = small_cooling();
    let r = protocols::cool(&p, &protocols::linspace(0.05, 2.0, 5), &protocols::linspace(-1.5, -0.5, 5))?;
    let table_min = r.table.iter().map(|t| t.n_eff).fold(f64::INFINITY, f64::min);
    Ok((r.n_eff <= r.nbar && r.n_eff == table_min, format!("n_eff {:.4} vs bath {:.4}", r.n_eff, r.nbar)))
}

fn cooling_truncation_check() -> Result<(bool, String)> {
    let p = small_cooling();
    let a = protocols::cooling_point(&p, 0.3, -1.0)?.n_eff;
    let big = CoolingParams { fock_dim: p.fock_dim * 5 / 4, ..p };
    let b = protocols::cooling_point(&big, 0.3, -1.0)?.n_eff;
    let rel = (a - b).abs() / b;
    Ok((rel < 0.01, format!("relative change {rel:.2e}")))
}

fn heff_trend_check() -> Result<(bool, String)> {
    let kappa = 0.8;
    let mut devs = Vec::new();
    for &rabi in &[20.0, 40.0, 80.0] {
        let xi = (kappa * rabi / 4.0f64).sqrt();
        devs.push(protocols::heff_shorttime_check(xi, rabi, 90)?.relative_deviation);
    }
    let ok = devs[1] <= 0.1 && devs[1] < devs[0] && devs[2] < devs[1];
    Ok((ok, format!("deviations {:.3e}, {:.3e}, {:.3e}", devs[0], devs[1], devs[2])))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thermalization_passes_for_correct_generator() {
        let r = thermalization_invariant(&|p, h| liouvillian(p, h));
        assert!(r.passed, "{}", r.detail);
    }

    #[test]
    fn thermalization_catches_swapped_bath() {
        let r = thermalization_invariant(&swapped_bath_generator);
        assert!(!r.passed, "{}", r.detail);
    }

    #[test]
    fn suite_names() {
        assert_eq!("core".parse::<Suite>().unwrap(), Suite::Core);
        assert!("fast".parse::<Suite>().is_err());
    }
}
