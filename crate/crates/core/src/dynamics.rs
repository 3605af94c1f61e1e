//! Time evolution, steady states, pulses, projective measurements and
//! piecewise protocols.

use std::sync::Arc;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::linalg::{self, SparseMatrix};
use crate::model::{GeneratorKind, Liouvillian};
use crate::quantum::{
    expectation, partial_trace_to_oscillator, pauli_x, pauli_y, pauli_z, DensityMatrix, HilbertSpec, Operator,
    Spin,
};
use crate::{Error, Result, C64};

/// Postselection branches below this probability are rejected.
pub const ZERO_PROBABILITY: f64 = 1e-12;

/// Relative residual accepted from the steady-state solve.
pub const STEADY_STATE_RESIDUAL: f64 = 1e-10;

/// Integrator tolerances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rtol: 1e-8, atol: 1e-10 }
    }
}

impl Tolerances {
    fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerances must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// Samples of one evolution together with integrator statistics.
#[derive(Clone, Debug)]
pub struct Evolution {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Largest |tr ρ(t) − tr ρ(0)| over the samples.
    pub trace_drift: f64,
}

/// `ρ(t)` under `L`.
pub fn evolve(rho0: &DensityMatrix, l: &Liouvillian, t: f64, tol: Tolerances) -> Result<DensityMatrix> {
    let mut ev = evolve_sampled(rho0, l, &[t], tol)?;
    Ok(ev.states.pop().expect("one sample requested"))
}

/// `ρ(t_k)` for ascending, nonnegative `times`.
///
/// Dormand–Prince 5(4) on the vectorized state. Steps are shortened to land
/// on each sample time. The state is re-symmetrized after every accepted step.
/// Secular dressed generators are integrated in the interaction picture of
/// their (diagonal) Hamiltonian part.
pub fn evolve_sampled(rho0: &DensityMatrix, l: &Liouvillian, times: &[f64], tol: Tolerances) -> Result<Evolution> {
    tol.validate()?;
    if rho0.spec() != l.spec() {
        return Err(Error::SpecMismatch("state and generator spaces differ".into()));
    }
    if times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("sample times must be finite, nonnegative and ascending".into()));
    }
    let d = l.spec().dim();
    let y0 = linalg::vectorize(l.to_internal(rho0.matrix()).view());
    let tr0 = rho0.trace();

    let (matrix, energies) = match l.secular_split() {
        Some((dis, e)) => (dis, Some(e)),
        None => (l.matrix(), None),
    };
    let mut integrator = Dopri5::new(matrix, d, tol);
    let raw = integrator.run(y0, times)?;

    let mut states = Vec::with_capacity(times.len());
    let mut drift = 0.0_f64;
    for (y, &t) in raw.into_iter().zip(times) {
        let mut m = linalg::unvectorize(&y, d);
        if let Some(e) = energies {
            for ((i, j), x) in m.indexed_iter_mut() {
                *x *= C64::from_polar(1.0, -(e[i] - e[j]) * t);
            }
        }
        let rho = DensityMatrix::from_matrix_unchecked(l.spec(), l.from_internal(&m))?.hermitized();
        drift = drift.max((rho.trace() - tr0).norm());
        states.push(rho);
    }
    Ok(Evolution {
        times: times.to_vec(),
        states,
        accepted_steps: integrator.accepted,
        rejected_steps: integrator.rejected,
        trace_drift: drift,
    })
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

struct Dopri5<'a> {
    m: &'a SparseMatrix,
    d: usize,
    tol: Tolerances,
    accepted: usize,
    rejected: usize,
}

impl<'a> Dopri5<'a> {
    fn new(m: &'a SparseMatrix, d: usize, tol: Tolerances) -> Self {
        Dopri5 { m, d, tol, accepted: 0, rejected: 0 }
    }

    fn scaled_norm(&self, v: &[C64], y: &[C64]) -> f64 {
        let s: f64 = v
            .iter()
            .zip(y)
            .map(|(x, yi)| {
                let sc = self.tol.atol + self.tol.rtol * yi.norm();
                (x.norm() / sc).powi(2)
            })
            .sum();
        (s / v.len() as f64).sqrt()
    }

    fn hermitize(&self, y: &mut [C64]) {
        let d = self.d;
        for j in 0..d {
            y[j + d * j].im = 0.0;
            for i in 0..j {
                let a = y[i + d * j];
                let b = y[j + d * i];
                let avg = (a + b.conj()) * 0.5;
                y[i + d * j] = avg;
                y[j + d * i] = avg.conj();
            }
        }
    }

    fn run(&mut self, mut y: Vec<C64>, times: &[f64]) -> Result<Vec<Vec<C64>>> {
        let n = y.len();
        let mut out = Vec::with_capacity(times.len());
        let mut t = 0.0;
        let zero = C64::new(0.0, 0.0);
        let mut k: Vec<Vec<C64>> = vec![vec![zero; n]; 7];
        let mut stage = vec![zero; n];
        let mut y_new = vec![zero; n];
        self.m.matvec_into(&y, &mut k[0]);

        let mut h = {
            let d0 = self.scaled_norm(&y, &y);
            let d1 = self.scaled_norm(&k[0], &y);
            if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 }
        };

        for &t_target in times {
            while t < t_target {
                let remaining = t_target - t;
                let h_min = 1e-12 * t_target.max(1.0);
                if h < h_min {
                    return Err(Error::StepSizeUnderflow { t, h });
                }
                let clamped = h >= remaining;
                let step = if clamped { remaining } else { h };

                for s in 1..7 {
                    for i in 0..n {
                        let mut acc = zero;
                        for (r, a) in A[s].iter().enumerate().take(s) {
                            if *a != 0.0 {
                                acc += k[r][i] * *a;
                            }
                        }
                        stage[i] = y[i] + acc * step;
                    }
                    self.m.matvec_into(&stage, &mut k[s]);
                    if s == 6 {
                        y_new.copy_from_slice(&stage);
                    }
                }
                // y_new holds the 5th-order solution (FSAL row); k[6] = M y_new.
                let mut err = vec![zero; n];
                for i in 0..n {
                    let mut acc = zero;
                    for (r, e) in E.iter().enumerate() {
                        if *e != 0.0 {
                            acc += k[r][i] * *e;
                        }
                    }
                    err[i] = acc * step;
                }
                let scale: Vec<C64> =
                    y.iter().zip(&y_new).map(|(a, b)| if a.norm() > b.norm() { *a } else { *b }).collect();
                let e = self.scaled_norm(&err, &scale);
                if !e.is_finite() {
                    return Err(Error::StepSizeUnderflow { t, h: step });
                }
                let factor = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
                if e <= 1.0 {
                    self.accepted += 1;
                    t = if clamped { t_target } else { t + step };
                    std::mem::swap(&mut y, &mut y_new);
                    self.hermitize(&mut y);
                    let last = k.pop().expect("seven stages");
                    k.insert(0, last);
                    self.hermitize(&mut k[0]);
                    if !clamped {
                        h = step * factor;
                    } else {
                        h = h.max(step * factor).min(h * 5.0);
                    }
                } else {
                    self.rejected += 1;
                    h = step * factor.min(1.0);
                }
            }
            out.push(y.clone());
        }
        Ok(out)
    }
}

/// Unique steady state of `L`, by sparse LU with one equation replaced by
/// the trace condition. The residual `‖Lρ‖∞ ≤ 1e-10 ‖L‖∞` is certified.
pub fn steady_state(l: &Liouvillian) -> Result<DensityMatrix> {
    let d = l.spec().dim();
    let n = d * d;
    let m = l.matrix();
    let mut entries: Vec<(usize, usize, C64)> = m.iter().filter(|&(i, _, _)| i != 0).collect();
    for i in 0..d {
        entries.push((0, i + d * i, C64::new(1.0, 0.0)));
    }
    let a = SparseMatrix::from_triplets(n, n, entries);
    let mut b = vec![C64::new(0.0, 0.0); n];
    b[0] = C64::new(1.0, 0.0);
    let x = a.solve(&b).map_err(|e| Error::NonUniqueSteadyState(e.to_string()))?;
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonUniqueSteadyState("singular constrained system".into()));
    }
    let residual = m.matvec(&x).iter().map(|v| v.norm()).fold(0.0, f64::max);
    let scale = m.norm_inf() * x.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if residual > STEADY_STATE_RESIDUAL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NonUniqueSteadyState(format!(
            "residual {residual:e} exceeds {STEADY_STATE_RESIDUAL:e} of the generator norm"
        )));
    }
    let internal = linalg::unvectorize(&x, d);
    let rho = DensityMatrix::from_matrix_unchecked(l.spec(), l.from_internal(&internal))?.hermitized();
    let rho = rho.renormalized()?;
    let min = rho.min_eigenvalue()?;
    if min < -1e-6 {
        return Err(Error::NonUniqueSteadyState(format!("solution has eigenvalue {min:e}")));
    }
    Ok(rho)
}

/// Pulse rotation axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

/// `exp(−i θ σ_axis / 2)` on qubit `j`.
pub fn pulse_unitary(spec: HilbertSpec, j: usize, axis: Axis, angle: f64) -> Result<Operator> {
    if !angle.is_finite() {
        return Err(Error::InvalidArgument(format!("pulse angle {angle} is not finite")));
    }
    let s = match axis {
        Axis::X => pauli_x(),
        Axis::Y => pauli_y(),
        Axis::Z => pauli_z(),
    };
    let (c, sn) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    let u = Array2::<C64>::eye(2).mapv(|x| x * c) + s.mapv(|x| x * C64::new(0.0, -sn));
    Operator::embed_qubit(spec, j, u.view())
}

/// Instantaneous rotation `ρ → UρU†`.
pub fn apply_pulse(rho: &DensityMatrix, qubit: usize, axis: Axis, angle: f64) -> Result<DensityMatrix> {
    let u = pulse_unitary(rho.spec(), qubit, axis, angle)?;
    rho.conjugated_by(&u)
}

/// Projective readout of one qubit: `(PρP/p, p)`.
pub fn postselect(rho: &DensityMatrix, qubit: usize, outcome: Spin) -> Result<(DensityMatrix, f64)> {
    let p_op = Operator::embed_qubit(rho.spec(), qubit, outcome.projector().view())?;
    let projected = p_op.matrix().dot(rho.matrix()).dot(p_op.matrix());
    let p = linalg::trace(projected.view()).re;
    if !(p >= ZERO_PROBABILITY) {
        return Err(Error::ZeroProbability(p));
    }
    let out = DensityMatrix::from_matrix_unchecked(rho.spec(), projected.mapv(|x| x / p))?;
    Ok((out, p.min(1.0)))
}

/// Replaces qubit `j` by the pure state `psi`, keeping the reduced state of
/// everything else.
pub fn reset_qubit(rho: &DensityMatrix, j: usize, psi: &Array1<C64>) -> Result<DensityMatrix> {
    let spec = rho.spec();
    if j >= spec.n_qubits() {
        return Err(Error::QubitIndex { index: j, n_qubits: spec.n_qubits() });
    }
    if psi.len() != 2 || (linalg::inner(psi, psi).re - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidState("spin state must be a normalized 2-vector".into()));
    }
    let stride = spec.fock_dim() << (spec.n_qubits() - 1 - j);
    let bit = |i: usize| (i / stride) % 2;
    let dim = spec.dim();
    let r = rho.matrix();
    let m = Array2::from_shape_fn((dim, dim), |(a, b)| {
        let (x, y) = (bit(a), bit(b));
        let a0 = a - x * stride;
        let b0 = b - y * stride;
        let reduced = r[[a0, b0]] + r[[a0 + stride, b0 + stride]];
        psi[x] * psi[y].conj() * reduced
    });
    DensityMatrix::from_matrix_unchecked(spec, m)
}

/// Replaces the oscillator by `osc`, keeping the reduced qubit state.
pub fn reset_oscillator(rho: &DensityMatrix, osc: &DensityMatrix) -> Result<DensityMatrix> {
    let spec = rho.spec();
    if osc.spec() != HilbertSpec::oscillator(spec.fock_dim())? {
        return Err(Error::SpecMismatch("oscillator state has the wrong truncation".into()));
    }
    let q = rho.qubit_marginal();
    DensityMatrix::from_matrix_unchecked(spec, crate::quantum::kron(q.view(), osc.matrix().view()))
}

/// Oscillator preparations.
#[derive(Clone, Debug)]
pub enum OscillatorInit {
    Ground,
    Thermal(f64),
    /// Steady state of an oscillator-only generator.
    SteadyStateOf(Arc<Liouvillian>),
}

/// One step of a piecewise protocol.
#[derive(Clone, Debug)]
pub enum ProtocolStep {
    FreeEvolve { duration: f64, generator: Arc<Liouvillian> },
    Pulse { qubit: usize, axis: Axis, angle: f64 },
    Measure { qubit: usize, outcome: Spin },
    InitializeSpin { qubit: usize, state: Array1<C64> },
    InitializeOscillator(OscillatorInit),
}

impl ProtocolStep {
    fn validate(&self) -> Result<()> {
        match self {
            ProtocolStep::FreeEvolve { duration, .. } if !(*duration >= 0.0 && duration.is_finite()) => {
                Err(Error::InvalidArgument(format!("duration {duration} must be finite and >= 0")))
            }
            ProtocolStep::Pulse { angle, .. } if !angle.is_finite() => {
                Err(Error::InvalidArgument(format!("pulse angle {angle} is not finite")))
            }
            _ => Ok(()),
        }
    }

    fn label(&self) -> String {
        match self {
            ProtocolStep::FreeEvolve { duration, .. } => format!("evolve({duration})"),
            ProtocolStep::Pulse { qubit, axis, angle } => format!("pulse(q{qubit},{axis:?},{angle})"),
            ProtocolStep::Measure { qubit, outcome } => format!("measure(q{qubit},{outcome:?})"),
            ProtocolStep::InitializeSpin { qubit, .. } => format!("init_spin(q{qubit})"),
            ProtocolStep::InitializeOscillator(_) => "init_oscillator".into(),
        }
    }
}

/// Run bookkeeping.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RunMetadata {
    pub n_qubits: usize,
    pub fock_dim: usize,
    pub tolerances: Option<Tolerances>,
    pub generators: Vec<GeneratorKind>,
    pub steps: Vec<String>,
    pub max_trace_drift: f64,
    /// Smallest eigenvalue of the state seen after any step.
    pub min_eigenvalue: f64,
}

/// Outcome of [`run_protocol`].
#[derive(Clone, Debug)]
pub struct RunResult {
    pub final_state: DensityMatrix,
    pub postselect_probability: f64,
    /// Named expectation values after each step.
    pub traces: Vec<(String, Vec<f64>)>,
    pub metadata: RunMetadata,
}

/// Runs `steps` starting from every qubit down and the oscillator in vacuum.
pub fn run_protocol(steps: &[ProtocolStep], spec: HilbertSpec, tol: Tolerances) -> Result<RunResult> {
    let spins = vec![Spin::Down; spec.n_qubits()];
    let psi = crate::quantum::StateVector::basis(spec, &spins, 0)?;
    run_protocol_from(&psi.density(), steps, tol, &[])
}

/// Runs `steps` from `rho0`, recording `observables` after each step.
pub fn run_protocol_from(
    rho0: &DensityMatrix,
    steps: &[ProtocolStep],
    tol: Tolerances,
    observables: &[(String, Operator)],
) -> Result<RunResult> {
    let spec = rho0.spec();
    for s in steps {
        s.validate()?;
    }
    let mut rho = rho0.clone();
    let mut prob = 1.0;
    let mut traces: Vec<(String, Vec<f64>)> = observables.iter().map(|(n, _)| (n.clone(), Vec::new())).collect();
    let mut meta = RunMetadata {
        n_qubits: spec.n_qubits(),
        fock_dim: spec.fock_dim(),
        tolerances: Some(tol),
        min_eigenvalue: rho.min_eigenvalue()?,
        ..Default::default()
    };
    for step in steps {
        rho = match step {
            ProtocolStep::FreeEvolve { duration, generator } => {
                meta.generators.push(generator.kind());
                let ev = evolve_sampled(&rho, generator, &[*duration], tol)?;
                meta.max_trace_drift = meta.max_trace_drift.max(ev.trace_drift);
                ev.states.into_iter().next().expect("one sample")
            }
            ProtocolStep::Pulse { qubit, axis, angle } => apply_pulse(&rho, *qubit, *axis, *angle)?,
            ProtocolStep::Measure { qubit, outcome } => {
                let (r, p) = postselect(&rho, *qubit, *outcome)?;
                prob *= p;
                r
            }
            ProtocolStep::InitializeSpin { qubit, state } => reset_qubit(&rho, *qubit, state)?,
            ProtocolStep::InitializeOscillator(init) => {
                let osc_spec = HilbertSpec::oscillator(spec.fock_dim())?;
                let osc = match init {
                    OscillatorInit::Ground => DensityMatrix::thermal(osc_spec, 0.0)?,
                    OscillatorInit::Thermal(n) => DensityMatrix::thermal(osc_spec, *n)?,
                    OscillatorInit::SteadyStateOf(l) => steady_state(l)?,
                };
                reset_oscillator(&rho, &osc)?
            }
        };
        meta.steps.push(step.label());
        meta.min_eigenvalue = meta.min_eigenvalue.min(rho.min_eigenvalue()?);
        for ((_, op), (_, series)) in observables.iter().zip(traces.iter_mut()) {
            series.push(expectation(&rho, op)?.re);
        }
    }
    Ok(RunResult { final_state: rho, postselect_probability: prob, traces, metadata: meta })
}

/// Reduced oscillator state of a run.
pub fn mechanical_state(result: &RunResult) -> DensityMatrix {
    partial_trace_to_oscillator(&result.final_state)
}
