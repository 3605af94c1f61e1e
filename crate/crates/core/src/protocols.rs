//! Turnkey experiments: sideband cooling, multicomponent cat preparation and
//! squeezing near the Rabi critical point.
//!
//! All frequencies are in units of ω_m.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, min_quadrature_variance, phonon_number, squeezing_db, GridSpec, Moments, WignerGrid};
use crate::dynamics::{self, Axis, ProtocolStep, Tolerances};
use crate::linalg;
use crate::membrane::{CoolingSite, Device};
use crate::model::{
    dressed_liouvillian, effective_hamiltonian, hamiltonian_n, liouvillian, rabi_hamiltonian, thermal_energy,
    Dephasing, GeneratorKind, ModelParams, QubitParams, SpinFrame, DEFAULT_BIN_TOLERANCE,
};
use crate::quantum::{
    coherent_state, partial_trace_to_oscillator, truncation_guard, DensityMatrix, HilbertSpec, Spin, StateVector,
};
use crate::{Error, Result, C64};

/// Mechanical bath seen by every protocol.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub quality_factor: f64,
    /// k_BT/(ħω_m)
    pub thermal_energy: f64,
}

impl Environment {
    pub fn from_device(device: &Device) -> Self {
        Environment {
            quality_factor: device.membrane.quality_factor,
            thermal_energy: thermal_energy(device.mode.omega_m, device.membrane.temperature),
        }
    }

    /// Zero temperature, no damping.
    pub fn closed() -> Self {
        Environment { quality_factor: f64::INFINITY, thermal_energy: 0.0 }
    }

    pub fn nbar(&self) -> f64 {
        crate::model::bose(1.0, self.thermal_energy)
    }

    fn model(&self, spec: HilbertSpec, qubits: Vec<QubitParams>) -> ModelParams {
        let mut m = ModelParams::new(spec, qubits);
        m.quality_factor = self.quality_factor;
        m.thermal_energy = self.thermal_energy;
        m
    }
}

/// Qubit decoherence in units of ω_m.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QubitRates {
    pub relaxation: f64,
    pub dephasing: Dephasing,
}

// ---------------------------------------------------------------- cooling

/// Cooling-qubit model: one qubit with coupling g_c and a drive (Ω, δ_c).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoolingParams {
    pub fock_dim: usize,
    pub env: Environment,
    /// g_c/ω_m
    pub coupling: f64,
    pub rates: QubitRates,
    /// Δ_c/ω_m, sets the occupation of the relaxation bath.
    pub splitting: f64,
}

impl CoolingParams {
    /// Parameters for the auto-placed cooling qubit of `device`.
    pub fn from_device(
        device: &Device,
        rates: QubitRates,
        fock_dim: usize,
        min_margin: f64,
    ) -> Result<(Self, CoolingSite)> {
        let site = device.cooling_site(rates.relaxation, min_margin)?;
        let p = CoolingParams {
            fock_dim,
            env: Environment::from_device(device),
            coupling: device.dimensionless(site.site.coupling),
            rates,
            splitting: device.dimensionless(site.site.splitting),
        };
        Ok((p, site))
    }

    fn qubit(&self, rabi: f64, detuning: f64) -> QubitParams {
        QubitParams {
            rabi,
            detuning,
            coupling: self.coupling,
            relaxation: self.rates.relaxation,
            dephasing: self.rates.dephasing,
            splitting: self.splitting,
        }
    }
}

/// One steady-state evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoolingPoint {
    pub rabi: f64,
    pub detuning: f64,
    /// ⟨b†b⟩
    pub n_eff: f64,
    /// |⟨b⟩|²
    pub coherent: f64,
}

impl CoolingPoint {
    /// `⟨b†b⟩ − |⟨b⟩|²`
    pub fn fluctuation(&self) -> f64 {
        self.n_eff - self.coherent
    }
}

/// Optimized cooling.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoolingResult {
    pub n_eff: f64,
    pub rabi: f64,
    pub detuning: f64,
    /// N̄ at ω_m.
    pub nbar: f64,
    /// Every evaluated point: the grid in row-major order, then the
    /// refinement. The optimum is the minimum of this table.
    pub table: Vec<CoolingPoint>,
}

impl CoolingResult {
    pub fn best(&self) -> CoolingPoint {
        CoolingPoint { rabi: self.rabi, detuning: self.detuning, n_eff: self.n_eff, coherent: 0.0 }
    }
}

fn steady_point(model: &ModelParams) -> Result<(f64, f64)> {
    let h = hamiltonian_n(model)?;
    let l = liouvillian(model, &h)?;
    let rho = dynamics::steady_state(&l)?;
    let m = Moments::of(&rho)?;
    Ok((m.n, m.b.norm_sqr()))
}

/// Steady-state `⟨b†b⟩` of the cooling model at one drive setting.
pub fn cooling_point(p: &CoolingParams, rabi: f64, detuning: f64) -> Result<CoolingPoint> {
    let spec = HilbertSpec::new(1, p.fock_dim)?;
    let model = p.env.model(spec, vec![p.qubit(rabi, detuning)]);
    let (n_eff, coherent) = steady_point(&model)?;
    Ok(CoolingPoint { rabi, detuning, n_eff, coherent })
}

/// The default 15 × 15 drive grid: Ω ∈ [0.05, 2], δ_c ∈ [−1.5, −0.5].
pub fn default_cooling_grid() -> (Vec<f64>, Vec<f64>) {
    (linspace(0.05, 2.0, 15), linspace(-1.5, -0.5, 15))
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Two-dimensional Nelder–Mead minimization.
fn nelder_mead(
    f: &mut dyn FnMut([f64; 2]) -> f64,
    x0: [f64; 2],
    step: [f64; 2],
    max_evals: usize,
    xtol: f64,
) -> ([f64; 2], f64) {
    let mut pts = [x0, [x0[0] + step[0], x0[1]], [x0[0], x0[1] + step[1]]];
    let mut vals = [f(pts[0]), f(pts[1]), f(pts[2])];
    let mut evals = 3;
    let lerp = |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    while evals < max_evals {
        let mut idx = [0, 1, 2];
        idx.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
        pts = [pts[idx[0]], pts[idx[1]], pts[idx[2]]];
        vals = [vals[idx[0]], vals[idx[1]], vals[idx[2]]];
        let size = (1..3)
            .map(|i| ((pts[i][0] - pts[0][0]).abs()).max((pts[i][1] - pts[0][1]).abs()))
            .fold(0.0, f64::max);
        if size < xtol {
            break;
        }
        let c = [(pts[0][0] + pts[1][0]) / 2.0, (pts[0][1] + pts[1][1]) / 2.0];
        let xr = lerp(c, pts[2], -1.0);
        let fr = f(xr);
        evals += 1;
        if fr < vals[0] {
            let xe = lerp(c, pts[2], -2.0);
            let fe = f(xe);
            evals += 1;
            if fe < fr {
                pts[2] = xe;
                vals[2] = fe;
            } else {
                pts[2] = xr;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            pts[2] = xr;
            vals[2] = fr;
        } else {
            let (xc, fc) = if fr < vals[2] {
                let x = lerp(c, xr, 0.5);
                (x, f(x))
            } else {
                let x = lerp(c, pts[2], 0.5);
                (x, f(x))
            };
            evals += 1;
            if fc < vals[2].min(fr) {
                pts[2] = xc;
                vals[2] = fc;
            } else {
                for i in 1..3 {
                    pts[i] = lerp(pts[0], pts[i], 0.5);
                    vals[i] = f(pts[i]);
                    evals += 1;
                }
            }
        }
    }
    let best = (0..3).min_by(|&i, &j| vals[i].total_cmp(&vals[j])).expect("three vertices");
    (pts[best], vals[best])
}

fn grid_points<F>(rabi_grid: &[f64], detuning_grid: &[f64], eval: F) -> Result<Vec<CoolingPoint>>
where
    F: Fn(f64, f64) -> Result<CoolingPoint> + Sync,
{
    let pairs: Vec<(f64, f64)> =
        rabi_grid.iter().flat_map(|&r| detuning_grid.iter().map(move |&d| (r, d))).collect();
    pairs.par_iter().map(|&(r, d)| eval(r, d)).collect()
}

fn refine<F>(table: &mut Vec<CoolingPoint>, start: CoolingPoint, step: [f64; 2], objective: fn(&CoolingPoint) -> f64, eval: F)
where
    F: Fn(f64, f64) -> Result<CoolingPoint>,
{
    let mut f = |x: [f64; 2]| -> f64 {
        if !(x[0] > 0.0) {
            return f64::INFINITY;
        }
        match eval(x[0], x[1]) {
            Ok(pt) => {
                table.push(pt);
                objective(&pt)
            }
            Err(_) => f64::INFINITY,
        }
    };
    nelder_mead(&mut f, [start.rabi, start.detuning], step, 60, 1e-4);
}

fn best_of(table: &[CoolingPoint], objective: fn(&CoolingPoint) -> f64) -> Result<CoolingPoint> {
    table
        .iter()
        .filter(|p| objective(p).is_finite())
        .min_by(|a, b| objective(a).total_cmp(&objective(b)))
        .copied()
        .ok_or_else(|| Error::Linalg("no finite cooling point".into()))
}

fn grid_step(g: &[f64]) -> f64 {
    if g.len() > 1 { (g[g.len() - 1] - g[0]).abs() / (g.len() - 1) as f64 } else { 0.05 }
}

/// Grid search over (Ω, δ_c) followed by simplex refinement.
pub fn cool(p: &CoolingParams, rabi_grid: &[f64], detuning_grid: &[f64]) -> Result<CoolingResult> {
    if rabi_grid.is_empty() || detuning_grid.is_empty() {
        return Err(Error::InvalidArgument("empty cooling grid".into()));
    }
    let mut table = grid_points(rabi_grid, detuning_grid, |r, d| cooling_point(p, r, d))?;
    let objective: fn(&CoolingPoint) -> f64 = |pt| pt.n_eff;
    let start = best_of(&table, objective)?;
    let step = [0.5 * grid_step(rabi_grid), 0.5 * grid_step(detuning_grid)];
    refine(&mut table, start, step, objective, |r, d| cooling_point(p, r, d));
    let best = best_of(&table, objective)?;
    Ok(CoolingResult { n_eff: best.n_eff, rabi: best.rabi, detuning: best.detuning, nbar: p.env.nbar(), table })
}

/// Two-qubit cooling comparison.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TwoQubitCooling {
    pub single: CoolingResult,
    /// Optimum with the central qubit present; `n_eff` is `⟨b†b⟩`.
    pub with_central: CoolingResult,
    /// δ₀ of the central qubit in the rotating frame of the cooling drive.
    pub central_detuning: f64,
    /// Fluctuation occupations `⟨b†b⟩ − |⟨b⟩|²` at the two optima.
    pub single_fluctuation: f64,
    pub two_qubit_fluctuation: f64,
}

impl TwoQubitCooling {
    /// |Δn|/n on fluctuation occupations.
    pub fn relative_change(&self) -> f64 {
        (self.two_qubit_fluctuation - self.single_fluctuation).abs() / self.single_fluctuation
    }
}

/// Cooling point with a second, far-detuned central qubit (qubit 0) coupled
/// with `central_coupling`. Both qubits share the cooling drive and rates.
pub fn cooling_point_two_qubit(
    p: &CoolingParams,
    central_coupling: f64,
    central_detuning: f64,
    rabi: f64,
    detuning: f64,
) -> Result<CoolingPoint> {
    let spec = HilbertSpec::new(2, p.fock_dim)?;
    let central = QubitParams {
        coupling: central_coupling,
        detuning: central_detuning,
        ..p.qubit(rabi, detuning)
    };
    let model = p.env.model(spec, vec![central, p.qubit(rabi, detuning)]);
    let (n_eff, coherent) = steady_point(&model)?;
    Ok(CoolingPoint { rabi, detuning, n_eff, coherent })
}

/// How the central qubit's detuning from the cooling drive is set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum CentralDetuning {
    /// δ₀ = −ratio·Ω*, with Ω* the single-qubit optimum, held fixed.
    Ratio(f64),
    /// Both qubits see one drive: δ₀ = δ_c + offset, offset = (Δ_c − Δ₀)/ω_m.
    SharedDrive(f64),
}

impl CentralDetuning {
    fn at(self, single_rabi: f64, detuning: f64) -> f64 {
        match self {
            CentralDetuning::Ratio(r) => -r * single_rabi,
            CentralDetuning::SharedDrive(offset) => detuning + offset,
        }
    }
}

/// Optimizes cooling with and without the central qubit, then refines the
/// two-qubit optimum from the single-qubit one. The central qubit's static
/// displacement is removed by comparing fluctuation occupations.
pub fn cool_with_central_qubit(
    p: &CoolingParams,
    central_coupling: f64,
    central: CentralDetuning,
    rabi_grid: &[f64],
    detuning_grid: &[f64],
) -> Result<TwoQubitCooling> {
    let single = cool(p, rabi_grid, detuning_grid)?;
    let single_best = cooling_point(p, single.rabi, single.detuning)?;
    let omega_star = single.rabi;
    let eval = |r: f64, d: f64| cooling_point_two_qubit(p, central_coupling, central.at(omega_star, d), r, d);
    let objective: fn(&CoolingPoint) -> f64 = |pt| pt.fluctuation();
    let start = eval(single.rabi, single.detuning)?;
    let mut table = vec![start];
    let step = [0.25 * grid_step(rabi_grid), 0.25 * grid_step(detuning_grid)];
    refine(&mut table, start, step, objective, eval);
    let best = best_of(&table, objective)?;
    Ok(TwoQubitCooling {
        with_central: CoolingResult {
            n_eff: best.n_eff,
            rabi: best.rabi,
            detuning: best.detuning,
            nbar: p.env.nbar(),
            table,
        },
        single,
        central_detuning: central.at(omega_star, best.detuning),
        single_fluctuation: single_best.fluctuation(),
        two_qubit_fluctuation: best.fluctuation(),
    })
}

// ------------------------------------------------------------------- cat

/// Cat-state preparation with the central qubit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatParams {
    /// ξ = g₀/ω_m
    pub xi: f64,
    /// Δ₀/ω_m of the central qubit; only Δ₀ mod 4 matters.
    pub delta0: f64,
    pub fock_dim: usize,
    pub env: Environment,
    /// Aggregate qubit dephasing Γ̃/ω_m during free evolution.
    pub decoherence: f64,
    pub generator: GeneratorKind,
    pub tol: Tolerances,
}

impl CatParams {
    pub fn new(xi: f64, fock_dim: usize) -> Self {
        CatParams {
            xi,
            delta0: 0.0,
            fock_dim,
            env: Environment::closed(),
            decoherence: 0.0,
            generator: GeneratorKind::Bare,
            tol: Tolerances::default(),
        }
    }

    /// φ = πΔ₀/2
    pub fn phi(&self) -> f64 {
        PI * self.delta0 / 2.0
    }
}

/// Normalized target
/// `½[e^{2iξ²}(e^{−iφ}|2ξ⟩ ± e^{iφ}|−2ξ⟩) − e^{−2iξ²}(|2iξ⟩ ∓ |−2iξ⟩)]`,
/// upper sign for the spin-up outcome.
///
/// The spin-down branch is symmetric in `|±2iξ⟩`. In the spin-up branch the
/// path through (↑, ↓) lands on `|2iξ⟩` and carries the minus sign.
pub fn cat_target(fock_dim: usize, xi: f64, phi: f64, outcome: Spin) -> Result<StateVector> {
    let spec = HilbertSpec::oscillator(fock_dim)?;
    let s = outcome.sz();
    let a = 2.0 * xi;
    let k = |alpha: C64| coherent_state(spec, alpha);
    let p = C64::from_polar(0.5, 2.0 * xi * xi);
    let m = C64::from_polar(0.5, -2.0 * xi * xi);
    let psi = k(C64::new(a, 0.0))?
        .scale(p * C64::from_polar(1.0, -phi))
        .add(&k(C64::new(-a, 0.0))?.scale(p * C64::from_polar(s, phi)))?
        .add(&k(C64::new(0.0, a))?.scale(-m))?
        .add(&k(C64::new(0.0, -a))?.scale(m * s))?;
    psi.normalized()
}

/// Outcome of one cat preparation.
#[derive(Clone, Debug, Serialize)]
pub struct CatResult {
    pub xi: f64,
    pub phi: f64,
    pub decoherence: f64,
    pub outcome: Spin,
    pub fidelity: f64,
    pub probability: f64,
    /// Probability of the other outcome.
    pub other_probability: f64,
    pub generator: GeneratorKind,
    #[serde(skip)]
    pub state: DensityMatrix,
    #[serde(skip)]
    pub wigner: Option<WignerGrid>,
    pub max_trace_drift: f64,
    pub min_eigenvalue: f64,
}

/// Pulse, quarter period, pulse, quarter period, pulse (all π/2 about x)
/// from |↓⟩ ⊗ |0⟩. Returns the state before readout.
fn cat_pre_measurement(p: &CatParams) -> Result<dynamics::RunResult> {
    if !(p.xi >= 0.0) {
        return Err(Error::InvalidArgument(format!("ξ must be >= 0, got {}", p.xi)));
    }
    crate::quantum::check_truncation(HilbertSpec::oscillator(p.fock_dim)?, 2.0 * p.xi)?;
    let spec = HilbertSpec::new(1, p.fock_dim)?;
    // σ_z commutes with the whole generator, so Δ₀ only enters modulo 4.
    let folded = p.delta0 - 4.0 * (p.delta0 / 4.0).round();
    let qubit = QubitParams {
        detuning: folded,
        coupling: p.xi,
        dephasing: Dephasing::lumped(p.decoherence),
        ..Default::default()
    };
    let model = p.env.model(spec, vec![qubit]);
    let h = hamiltonian_n(&model)?;
    let l = Arc::new(match p.generator {
        GeneratorKind::Bare => liouvillian(&model, &h)?,
        GeneratorKind::Dressed => dressed_liouvillian(&model, &h)?,
    });
    let pulse = ProtocolStep::Pulse { qubit: 0, axis: Axis::X, angle: PI / 2.0 };
    let wait = ProtocolStep::FreeEvolve { duration: PI / 2.0, generator: l };
    let steps = [pulse.clone(), wait.clone(), pulse.clone(), wait, pulse];
    dynamics::run_protocol(&steps, spec, p.tol)
}

/// Runs the cat protocol and postselects `outcome`.
pub fn run_cat(p: &CatParams, outcome: Spin, wigner_grid: Option<&GridSpec>) -> Result<CatResult> {
    let pre = cat_pre_measurement(p)?;
    let (post, prob) = dynamics::postselect(&pre.final_state, 0, outcome)?;
    let other = match outcome {
        Spin::Up => Spin::Down,
        Spin::Down => Spin::Up,
    };
    let other_probability = dynamics::postselect(&pre.final_state, 0, other).map(|(_, q)| q).unwrap_or(0.0);
    let state = partial_trace_to_oscillator(&post);
    let target = cat_target(p.fock_dim, p.xi, p.phi(), outcome)?;
    let fidelity = analysis::fidelity(&state, &target)?;
    let wigner = wigner_grid.map(|g| analysis::wigner(&state, g)).transpose()?;
    Ok(CatResult {
        xi: p.xi,
        phi: p.phi(),
        decoherence: p.decoherence,
        outcome,
        fidelity,
        probability: prob,
        other_probability,
        generator: p.generator,
        state,
        wigner,
        max_trace_drift: pre.metadata.max_trace_drift,
        min_eigenvalue: pre.metadata.min_eigenvalue,
    })
}

/// Fidelity curve over decoherence rates, evaluated in parallel.
pub fn cat_sweep(p: &CatParams, decoherence: &[f64], outcome: Spin) -> Result<Vec<CatResult>> {
    decoherence
        .par_iter()
        .map(|&g| run_cat(&CatParams { decoherence: g, ..p.clone() }, outcome, None))
        .collect()
}

// --------------------------------------------------------------- squeeze

/// Squeezing through a quarter period of the driven Rabi model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezeParams {
    pub xi: f64,
    /// Ω/ω_m
    pub rabi: f64,
    /// 0 picks [`squeeze_fock_dim`].
    pub fock_dim: usize,
    pub env: Environment,
    pub rates: QubitRates,
    pub generator: GeneratorKind,
    pub bin_tolerance: f64,
    pub tol: Tolerances,
}

impl SqueezeParams {
    pub fn new(xi: f64, rabi: f64) -> Self {
        SqueezeParams {
            xi,
            rabi,
            fock_dim: 0,
            env: Environment::closed(),
            rates: QubitRates::default(),
            generator: GeneratorKind::Dressed,
            bin_tolerance: DEFAULT_BIN_TOLERANCE,
            tol: Tolerances::default(),
        }
    }

    pub fn resolved_fock_dim(&self) -> usize {
        if self.fock_dim > 0 { self.fock_dim } else { squeeze_fock_dim(self.xi) }
    }

    /// 4ξ²/(Ω/ω_m); 1 on the critical curve.
    pub fn criticality(&self) -> f64 {
        4.0 * self.xi * self.xi / self.rabi
    }
}

/// Truncation for a squeezing run: the guard for the largest spin-dependent
/// displacement 2ξ plus headroom, within [40, 120].
pub fn squeeze_fock_dim(xi: f64) -> usize {
    (truncation_guard(2.0 * xi) + 30).clamp(40, 120)
}

/// |4g₀² − ω_mΩ|/(ω_mΩ) below which a point counts as near-critical.
pub const NEAR_CRITICAL: f64 = 0.5;

#[derive(Clone, Debug, Serialize)]
pub struct SqueezeResult {
    pub xi: f64,
    pub rabi: f64,
    pub fock_dim: usize,
    pub min_db: f64,
    pub theta: f64,
    pub variance: f64,
    pub probability: f64,
    pub criticality: f64,
    pub near_critical: bool,
    pub trace_drift: f64,
    #[serde(skip)]
    pub state: DensityMatrix,
    #[serde(skip)]
    pub wigner: Option<WignerGrid>,
}

/// Evolves |↓⟩|0⟩ (Rabi frame) for t = π/2 (dressed generator by default),
/// reads out spin down and reports the minimum quadrature variance.
pub fn run_squeeze(p: &SqueezeParams, wigner_grid: Option<&GridSpec>) -> Result<SqueezeResult> {
    if !(p.rabi > 0.0) || !(p.xi >= 0.0) {
        return Err(Error::InvalidArgument(format!("need Ω > 0 and ξ >= 0, got {} and {}", p.rabi, p.xi)));
    }
    let f = p.resolved_fock_dim();
    let spec = HilbertSpec::new(1, f)?;
    let qubit = QubitParams {
        rabi: p.rabi,
        coupling: p.xi,
        relaxation: p.rates.relaxation,
        dephasing: p.rates.dephasing,
        ..Default::default()
    };
    let mut model = p.env.model(spec, vec![qubit]);
    model.frame = SpinFrame::Rabi;
    model.bin_tolerance = p.bin_tolerance;
    let h = rabi_hamiltonian(f, 1.0, p.rabi, p.xi)?;
    let l = match p.generator {
        GeneratorKind::Bare => liouvillian(&model, &h)?,
        GeneratorKind::Dressed => dressed_liouvillian(&model, &h)?,
    };
    let rho0 = StateVector::basis(spec, &[Spin::Down], 0)?.density();
    let mut ev = dynamics::evolve_sampled(&rho0, &l, &[PI / 2.0], p.tol)?;
    let rho = ev.states.pop().expect("one sample requested");
    let (post, prob) = dynamics::postselect(&rho, 0, Spin::Down)?;
    let state = partial_trace_to_oscillator(&post);
    let (theta, variance) = min_quadrature_variance(&state)?;
    let wigner = wigner_grid.map(|g| analysis::wigner(&state, g)).transpose()?;
    let crit = p.criticality();
    Ok(SqueezeResult {
        xi: p.xi,
        rabi: p.rabi,
        fock_dim: f,
        min_db: squeezing_db(variance)?,
        theta,
        variance,
        probability: prob,
        criticality: crit,
        near_critical: (crit - 1.0).abs() <= NEAR_CRITICAL,
        trace_drift: ev.trace_drift,
        state,
        wigner,
    })
}

/// Squeezing over a (ξ, Ω) grid, ξ-major order.
pub fn squeeze_scan(base: &SqueezeParams, xis: &[f64], rabis: &[f64]) -> Result<Vec<SqueezeResult>> {
    let pts: Vec<(f64, f64)> = xis.iter().flat_map(|&x| rabis.iter().map(move |&r| (x, r))).collect();
    pts.par_iter()
        .map(|&(xi, rabi)| run_squeeze(&SqueezeParams { xi, rabi, ..base.clone() }, None))
        .collect()
}

/// Best (most negative dB) point of a scan.
pub fn best_squeeze(results: &[SqueezeResult]) -> Option<&SqueezeResult> {
    results.iter().filter(|r| r.min_db.is_finite()).min_by(|a, b| a.min_db.total_cmp(&b.min_db))
}

/// Full Rabi versus H_eff after a quarter period.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct HeffReport {
    pub xi: f64,
    pub rabi: f64,
    /// Minimum variance from the Rabi model, spin-down branch.
    pub variance_rabi: f64,
    pub variance_heff: f64,
    pub relative_deviation: f64,
}

/// Compares min quadrature variances from unitary Rabi evolution (postselected
/// on spin down) and from `H_eff` at t = π/2.
pub fn heff_shorttime_check(xi: f64, rabi: f64, fock_dim: usize) -> Result<HeffReport> {
    let t = PI / 2.0;
    let spec = HilbertSpec::new(1, fock_dim)?;
    let h = rabi_hamiltonian(fock_dim, 1.0, rabi, xi)?;
    let u = linalg::expm_hermitian(h.matrix().view(), t)?;
    let psi0 = StateVector::basis(spec, &[Spin::Down], 0)?;
    let psi = StateVector::new(spec, u.dot(psi0.amplitudes()))?;
    let (post, _) = dynamics::postselect(&psi.density(), 0, Spin::Down)?;
    let (_, variance_rabi) = min_quadrature_variance(&partial_trace_to_oscillator(&post))?;

    let osc = HilbertSpec::oscillator(fock_dim)?;
    let heff = effective_hamiltonian(fock_dim, 1.0, rabi, xi)?;
    let u = linalg::expm_hermitian(heff.matrix().view(), t)?;
    let vac = StateVector::basis(osc, &[], 0)?;
    let phi = StateVector::new(osc, u.dot(vac.amplitudes()))?;
    let (_, variance_heff) = min_quadrature_variance(&phi.density())?;
    Ok(HeffReport {
        xi,
        rabi,
        variance_rabi,
        variance_heff,
        relative_deviation: (variance_rabi - variance_heff).abs() / variance_heff,
    })
}

/// `⟨b†b⟩` of the oscillator, qubits traced out.
pub fn mechanical_occupation(rho: &DensityMatrix) -> f64 {
    phonon_number(&partial_trace_to_oscillator(rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cooling_params(coupling: f64) -> CoolingParams {
        CoolingParams {
            fock_dim: 12,
            env: Environment { quality_factor: 1e3, thermal_energy: 1.0 / (1.0f64 / 2.0).ln_1p() },
            coupling,
            rates: QubitRates { relaxation: 0.1, dephasing: Dephasing::lumped(0.05) },
            splitting: 1e3,
        }
    }

    #[test]
    fn uncoupled_qubit_leaves_thermal_occupation() {
        let p = cooling_params(0.0);
        let nbar = p.env.nbar();
        assert_abs_diff_eq!(nbar, 2.0, epsilon = 1e-12);
        let want = phonon_number(&DensityMatrix::thermal(HilbertSpec::oscillator(12).unwrap(), nbar).unwrap());
        for &(r, d) in &[(0.2, -1.0), (1.0, -0.5)] {
            let pt = cooling_point(&p, r, d).unwrap();
            assert_abs_diff_eq!(pt.n_eff, want, epsilon = 1e-8);
        }
    }

    #[test]
    fn red_detuning_cools_blue_heats() {
        let p = cooling_params(0.05);
        let red = cooling_point(&p, 0.3, -1.0).unwrap();
        let blue = cooling_point(&p, 0.3, 1.0).unwrap();
        assert!(red.n_eff < 1.0, "{red:?}");
        assert!(blue.n_eff > red.n_eff);
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let mut f = |x: [f64; 2]| (x[0] - 0.3).powi(2) + 2.0 * (x[1] + 0.8).powi(2);
        let (x, v) = nelder_mead(&mut f, [1.0, 0.0], [0.1, 0.1], 500, 1e-8);
        assert_abs_diff_eq!(x[0], 0.3, epsilon = 1e-6);
        assert_abs_diff_eq!(x[1], -0.8, epsilon = 1e-6);
        assert!(v < 1e-11);
    }

    #[test]
    fn cat_target_collapses_at_zero_xi() {
        let t = cat_target(10, 0.0, 0.4, Spin::Up).unwrap();
        assert_abs_diff_eq!(t.amplitudes()[0].norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cat_target_branches_are_orthogonal() {
        for &xi in &[2.0, 2.5] {
            let up = cat_target(80, xi, 0.7, Spin::Up).unwrap();
            let dn = cat_target(80, xi, 0.7, Spin::Down).unwrap();
            assert!(up.inner(&dn).norm() <= 1e-6);
        }
    }

    #[test]
    fn down_target_matches_expanded_form() {
        let (xi, phi) = (2.0f64, 0.3f64);
        let spec = HilbertSpec::oscillator(80).unwrap();
        let k = |re: f64, im: f64| coherent_state(spec, C64::new(re, im)).unwrap();
        let p = C64::from_polar(0.5, 2.0 * xi * xi);
        let m = C64::from_polar(0.5, -2.0 * xi * xi);
        let lit = k(4.0, 0.0)
            .scale(p * C64::from_polar(1.0, -phi))
            .add(&k(-4.0, 0.0).scale(-p * C64::from_polar(1.0, phi)))
            .unwrap()
            .add(&k(0.0, -4.0).scale(-m))
            .unwrap()
            .add(&k(0.0, 4.0).scale(-m))
            .unwrap()
            .normalized()
            .unwrap();
        let t = cat_target(80, xi, phi, Spin::Down).unwrap();
        assert_abs_diff_eq!(t.inner(&lit).norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cat_target_unnormalized_norm_is_one() {
        // Pairwise overlaps of |±4⟩, |±4i⟩ are at most e^{−16}.
        let spec = HilbertSpec::oscillator(80).unwrap();
        let a = coherent_state(spec, C64::new(4.0, 0.0)).unwrap();
        let b = coherent_state(spec, C64::new(0.0, 4.0)).unwrap();
        assert!(a.inner(&b).norm() < 1e-6);
        assert!(matches!(cat_target(20, 2.0, 0.0, Spin::Up), Err(Error::TruncationRisk { .. })));
    }

    #[test]
    fn closed_cat_protocol_matches_target() {
        let mut p = CatParams::new(1.0, 30);
        p.delta0 = 0.3;
        let up = run_cat(&p, Spin::Up, None).unwrap();
        let dn = run_cat(&p, Spin::Down, None).unwrap();
        assert!(up.fidelity > 0.999, "up {}", up.fidelity);
        assert!(dn.fidelity > 0.999, "down {}", dn.fidelity);
        assert_abs_diff_eq!(up.probability + dn.probability, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn squeeze_without_coupling_is_vacuum() {
        let p = SqueezeParams { fock_dim: 10, ..SqueezeParams::new(0.0, 5.0) };
        let r = run_squeeze(&p, None).unwrap();
        assert_abs_diff_eq!(r.min_db, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.probability, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn heff_check_without_coupling_is_exact() {
        let r = heff_shorttime_check(0.0, 20.0, 10).unwrap();
        assert_abs_diff_eq!(r.relative_deviation, 0.0, epsilon = 1e-12);
    }
}
