//! Hamiltonians and Lindblad generators.
//!
//! Frequencies are dimensionless (units of ω_m) unless a function says SI.
//!
//! Dissipators use `D[o]ρ = 2oρo† − o†oρ − ρo†o` with an explicit 1/2 in
//! front of every rate, so `Γ` is the population relaxation rate: with no
//! drive, ⟨σ_z⟩ relaxes at `Γ(2N̄_Δ + 1)`.
//!
//! Superoperators act on column-stacked `vec(ρ)`; `AρB†` maps to `B̄ ⊗ A`.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::constants::{HBAR, K_B};
use crate::linalg::{self, nonzeros, SparseMatrix};
use crate::quantum::{fock_ops, kron, pauli_x, pauli_y, pauli_z, DensityMatrix, HilbertSpec, Operator, PauliOps};
use crate::{Error, Result, C64};

/// Default width of a Bohr-frequency bin in the dressed generator.
pub const DEFAULT_BIN_TOLERANCE: f64 = 1e-6;

/// Matrix elements below this fraction of the largest are dropped from the
/// eigenoperator decomposition.
const ELEMENT_CUTOFF: f64 = 1e-14;

/// `N̄ = 1/(exp(ħω/k_BT) − 1)` with ω in rad/s and T in K. `T = 0` gives 0.
pub fn thermal_occupation(omega: f64, temperature: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::InvalidArgument(format!("frequency must be positive, got {omega}")));
    }
    if !(temperature >= 0.0) {
        return Err(Error::InvalidArgument(format!("temperature must be >= 0, got {temperature}")));
    }
    Ok(thermal_occupation_si(omega, temperature))
}

pub(crate) fn thermal_occupation_si(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        return 0.0;
    }
    1.0 / (HBAR * omega / (K_B * temperature)).exp_m1()
}

/// Bose occupation with ω and k_BT/ħ in the same units.
pub fn bose(omega: f64, thermal_energy: f64) -> f64 {
    if thermal_energy <= 0.0 || omega == f64::INFINITY {
        return 0.0;
    }
    1.0 / (omega / thermal_energy).exp_m1()
}

/// `k_B T / (ħ ω_m)`.
pub fn thermal_energy(omega_m: f64, temperature: f64) -> f64 {
    K_B * temperature / (HBAR * omega_m)
}

/// Qubit dephasing contributions; the total is their sum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Dephasing {
    /// From the optical polarization drive.
    pub optical: f64,
    /// From membrane vibrations.
    pub vibrational: f64,
    /// From the nuclear spin bath.
    pub hyperfine: f64,
}

impl Dephasing {
    pub fn total(&self) -> f64 {
        self.optical + self.vibrational + self.hyperfine
    }

    /// All weight in a single channel.
    pub fn lumped(rate: f64) -> Self {
        Dephasing { hyperfine: rate, ..Default::default() }
    }
}

/// Per-qubit drive, coupling and decoherence.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QubitParams {
    /// Ω, microwave Rabi frequency.
    pub rabi: f64,
    /// δ = ω_D − Δ.
    pub detuning: f64,
    /// g
    pub coupling: f64,
    /// Γ
    pub relaxation: f64,
    pub dephasing: Dephasing,
    /// Bare splitting Δ, used for the thermal occupation of the relaxation bath.
    pub splitting: f64,
}

/// Which spin frame the Hamiltonian is written in. The dissipators are
/// defined in the laboratory frame and are rotated accordingly.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpinFrame {
    /// The frame of `hamiltonian_n`.
    #[default]
    Lab,
    /// The frame of `rabi_hamiltonian`: σ_x → σ_z, σ_z → −σ_x, σ_y → σ_y.
    Rabi,
}

/// Parameters of the spin-motion master equation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub spec: HilbertSpec,
    pub omega_m: f64,
    /// Mechanical Q; `f64::INFINITY` switches damping off.
    pub quality_factor: f64,
    /// k_BT/ħ of the mechanical and relaxation baths.
    pub thermal_energy: f64,
    /// k_BT/ħ of the dephasing bath, used only by the dressed generator.
    pub dephasing_thermal_energy: f64,
    pub qubits: Vec<QubitParams>,
    pub frame: SpinFrame,
    /// Bohr frequencies closer than this share a bin in the dressed generator.
    pub bin_tolerance: f64,
}

impl ModelParams {
    pub fn new(spec: HilbertSpec, qubits: Vec<QubitParams>) -> Self {
        ModelParams {
            spec,
            omega_m: 1.0,
            quality_factor: f64::INFINITY,
            thermal_energy: 0.0,
            dephasing_thermal_energy: 0.0,
            qubits,
            frame: SpinFrame::Lab,
            bin_tolerance: DEFAULT_BIN_TOLERANCE,
        }
    }

    /// γ_m = ω_m/Q
    pub fn gamma_m(&self) -> f64 {
        self.omega_m / self.quality_factor
    }

    /// N̄ at ω_m.
    pub fn nbar_mech(&self) -> f64 {
        bose(self.omega_m, self.thermal_energy)
    }

    /// Sets the bath temperature so that N̄(ω_m) equals `nbar`.
    pub fn with_mechanical_occupation(mut self, nbar: f64) -> Self {
        self.thermal_energy = if nbar <= 0.0 { 0.0 } else { self.omega_m / (1.0 / nbar).ln_1p() };
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.qubits.len() != self.spec.n_qubits() {
            return Err(Error::SpecMismatch(format!(
                "{} qubit parameter sets for a {}-qubit space",
                self.qubits.len(),
                self.spec.n_qubits()
            )));
        }
        if !(self.omega_m > 0.0) {
            return Err(Error::InvalidArgument("omega_m must be positive".into()));
        }
        if !(self.quality_factor > 0.0) {
            return Err(Error::NegativeRate { name: "gamma_m", value: self.gamma_m() });
        }
        if !(self.thermal_energy >= 0.0) || !(self.dephasing_thermal_energy >= 0.0) {
            return Err(Error::InvalidArgument("bath temperatures must be >= 0".into()));
        }
        for q in &self.qubits {
            let rates = [
                ("Gamma", q.relaxation),
                ("Gamma_phi_o", q.dephasing.optical),
                ("Gamma_phi_v", q.dephasing.vibrational),
                ("Gamma_phi_h", q.dephasing.hyperfine),
            ];
            for (name, value) in rates {
                if !(value >= 0.0) {
                    return Err(Error::NegativeRate { name, value });
                }
            }
        }
        Ok(())
    }
}

/// Pauli operators of qubit `j` as seen from `frame`.
pub fn frame_paulis(spec: HilbertSpec, j: usize, frame: SpinFrame) -> Result<PauliOps> {
    let (x, y, z) = match frame {
        SpinFrame::Lab => (pauli_x(), pauli_y(), pauli_z()),
        SpinFrame::Rabi => (pauli_z(), pauli_y(), pauli_x().mapv(|v| -v)),
    };
    let i = C64::new(0.0, 1.0);
    let plus = (&x + &y.mapv(|v| v * i)).mapv(|v| v * 0.5);
    let minus = (&x - &y.mapv(|v| v * i)).mapv(|v| v * 0.5);
    Ok(PauliOps {
        sx: Operator::embed_qubit(spec, j, x.view())?,
        sy: Operator::embed_qubit(spec, j, y.view())?,
        sz: Operator::embed_qubit(spec, j, z.view())?,
        s_plus: Operator::embed_qubit(spec, j, plus.view())?,
        s_minus: Operator::embed_qubit(spec, j, minus.view())?,
    })
}

/// `H_N = ω_m b†b + Σ_j (Ω_j/2)σ_x,j − (δ_j/2)σ_z,j + g_j σ_z,j (b + b†)`.
pub fn hamiltonian_n(params: &ModelParams) -> Result<Operator> {
    if params.qubits.len() != params.spec.n_qubits() {
        return Err(Error::SpecMismatch(format!(
            "{} qubit parameter sets for a {}-qubit space",
            params.qubits.len(),
            params.spec.n_qubits()
        )));
    }
    let spec = params.spec;
    let f = fock_ops(spec);
    let x = &f.annihilation + &f.creation;
    let mut h = f.number.scale(params.omega_m);
    for (j, q) in params.qubits.iter().enumerate() {
        let p = crate::quantum::qubit_ops(spec, j)?;
        h = &h + &p.sx.scale(0.5 * q.rabi);
        h = &h - &p.sz.scale(0.5 * q.detuning);
        h = &h + &(&p.sz * &x).scale(q.coupling);
    }
    Ok(h)
}

/// `H_R = (Ω/2)σ_z − g σ_x (b + b†) + ω_m b†b` on one qubit ⊗ oscillator.
pub fn rabi_hamiltonian(fock_dim: usize, omega_m: f64, rabi: f64, coupling: f64) -> Result<Operator> {
    let spec = HilbertSpec::new(1, fock_dim)?;
    let f = fock_ops(spec);
    let p = crate::quantum::qubit_ops(spec, 0)?;
    let x = &f.annihilation + &f.creation;
    let h = &f.number.scale(omega_m) + &p.sz.scale(0.5 * rabi);
    Ok(&h - &(&p.sx * &x).scale(coupling))
}

/// `H_eff = ω_m b†b − (g²/Ω)(b + b†)²` on the oscillator alone.
pub fn effective_hamiltonian(fock_dim: usize, omega_m: f64, rabi: f64, coupling: f64) -> Result<Operator> {
    if !(rabi > 0.0) {
        return Err(Error::InvalidArgument(format!("Ω must be positive, got {rabi}")));
    }
    let spec = HilbertSpec::oscillator(fock_dim)?;
    let f = fock_ops(spec);
    let x = &f.annihilation + &f.creation;
    Ok(&f.number.scale(omega_m) - &(&x * &x).scale(coupling * coupling / rabi))
}

/// How a jump operator couples to its bath.
#[derive(Clone, Debug, PartialEq)]
pub enum ChannelKind {
    /// Bosonic bath at the operator's own frequency:
    /// `(γ/2)[(N̄+1)D[o] + N̄ D[o†]]`. The dressed generator decomposes `o + o†`
    /// and evaluates N̄ at each transition frequency from `thermal_energy`.
    Mechanical { nbar: f64, thermal_energy: f64 },
    /// Lab-frame transition at a fixed frequency far above every rotating-frame
    /// scale: `(Γ/2)[(N̄+1)D[o] + N̄ D[o†]]`, N̄ fixed.
    Optical { nbar: f64 },
    /// Hermitian coupling, `(Γ̃/2) D[o]`. Dressed components are weighted by
    /// the Bose factor of the dephasing bath.
    Dephasing { thermal_energy: f64 },
}

/// A jump operator with its rate.
#[derive(Clone, Debug)]
pub struct Channel {
    pub name: String,
    pub op: Operator,
    pub rate: f64,
    pub kind: ChannelKind,
}

/// The dissipative channels of the master equation, in `params.frame`.
pub fn channels(params: &ModelParams) -> Result<Vec<Channel>> {
    params.validate()?;
    let spec = params.spec;
    let mut out = Vec::new();
    let gamma_m = params.gamma_m();
    if gamma_m > 0.0 {
        out.push(Channel {
            name: "mechanical".into(),
            op: fock_ops(spec).annihilation,
            rate: gamma_m,
            kind: ChannelKind::Mechanical { nbar: params.nbar_mech(), thermal_energy: params.thermal_energy },
        });
    }
    for (j, q) in params.qubits.iter().enumerate() {
        let p = frame_paulis(spec, j, params.frame)?;
        if q.relaxation > 0.0 {
            out.push(Channel {
                name: format!("relaxation[{j}]"),
                op: p.s_minus,
                rate: q.relaxation,
                kind: ChannelKind::Optical { nbar: bose(q.splitting.abs(), params.thermal_energy) },
            });
        }
        let dephasing = q.dephasing.total();
        if dephasing > 0.0 {
            out.push(Channel {
                name: format!("dephasing[{j}]"),
                op: p.sz,
                rate: dephasing,
                kind: ChannelKind::Dephasing { thermal_energy: params.dephasing_thermal_energy },
            });
        }
    }
    Ok(out)
}

/// Which representation the stored superoperator acts in.
#[derive(Clone, Debug, PartialEq)]
pub enum Basis {
    /// The computational basis of the spec.
    Bare,
    /// Eigenbasis of the system Hamiltonian; columns are eigenvectors and
    /// `energies` the matching eigenvalues.
    Eigen { vectors: Array2<C64>, energies: Vec<f64> },
}

/// Which construction produced a generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    Bare,
    Dressed,
}

/// Sparse Lindblad superoperator.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    spec: HilbertSpec,
    matrix: SparseMatrix,
    basis: Basis,
    kind: GeneratorKind,
    /// Dissipative part alone when it commutes with the Hamiltonian part
    /// (secular dressed generators). The Hamiltonian part is then diagonal.
    dissipator: Option<SparseMatrix>,
}

impl Liouvillian {
    pub fn spec(&self) -> HilbertSpec {
        self.spec
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    /// For secular generators: the dissipator and the eigenenergies, such that
    /// `L = −i[diag(E), ·] + D` with both parts commuting.
    pub fn secular_split(&self) -> Option<(&SparseMatrix, &[f64])> {
        match (&self.dissipator, &self.basis) {
            (Some(d), Basis::Eigen { energies, .. }) => Some((d, energies.as_slice())),
            _ => None,
        }
    }

    /// Generator with no dissipation, `−i[H, ·]`.
    pub fn unitary(h: &Operator) -> Result<Self> {
        Self::from_channels(h, &[])
    }

    /// Bare-basis generator from a Hamiltonian and explicit channels.
    pub fn from_channels(h: &Operator, channels: &[Channel]) -> Result<Self> {
        let defect = h.hermiticity_defect();
        if defect > 1e-10 * h.max_abs().max(1.0) {
            return Err(Error::NonHermitian(defect));
        }
        let spec = h.spec();
        let mut asm = Assembler::new(spec.dim());
        asm.hamiltonian(&nonzeros(h.matrix().view()));
        for ch in channels {
            if !(ch.rate >= 0.0) {
                return Err(Error::NegativeRate { name: "channel", value: ch.rate });
            }
            if ch.op.spec() != spec {
                return Err(Error::SpecMismatch(format!("channel {} lives on another space", ch.name)));
            }
            let o = nonzeros(ch.op.matrix().view());
            match ch.kind {
                ChannelKind::Mechanical { nbar, .. } | ChannelKind::Optical { nbar } => {
                    asm.dissipator(0.5 * ch.rate * (nbar + 1.0), &o);
                    if nbar > 0.0 {
                        asm.dissipator(0.5 * ch.rate * nbar, &nonzeros(ch.op.dagger().matrix().view()));
                    }
                }
                ChannelKind::Dephasing { .. } => asm.dissipator(0.5 * ch.rate, &o),
            }
        }
        Ok(Liouvillian { spec, matrix: asm.finish(), basis: Basis::Bare, kind: GeneratorKind::Bare, dissipator: None })
    }

    /// Moves a bare-basis matrix into the representation the superoperator uses.
    pub fn to_internal(&self, m: &Array2<C64>) -> Array2<C64> {
        match &self.basis {
            Basis::Bare => m.clone(),
            Basis::Eigen { vectors, .. } => linalg::dagger(vectors.view()).dot(m).dot(vectors),
        }
    }

    pub fn from_internal(&self, m: &Array2<C64>) -> Array2<C64> {
        match &self.basis {
            Basis::Bare => m.clone(),
            Basis::Eigen { vectors, .. } => vectors.dot(m).dot(&linalg::dagger(vectors.view())),
        }
    }

    /// `L[ρ]` in the bare basis.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<Array2<C64>> {
        if rho.spec() != self.spec {
            return Err(Error::SpecMismatch("state and generator spaces differ".into()));
        }
        let v = linalg::vectorize(self.to_internal(rho.matrix()).view());
        let out = self.matrix.matvec(&v);
        Ok(self.from_internal(&linalg::unvectorize(&out, self.spec.dim())))
    }

    /// Largest |Σ_i L_{(ii),c}| over columns: how far the generator is from
    /// annihilating the trace functional.
    pub fn trace_defect(&self) -> f64 {
        let d = self.spec.dim();
        let mut t = vec![C64::new(0.0, 0.0); d * d];
        for i in 0..d {
            t[i + d * i] = C64::new(1.0, 0.0);
        }
        self.matrix.vecmat(&t).iter().map(|x| x.norm()).fold(0.0, f64::max)
    }
}

/// Accumulates a Lindblad superoperator from Hamiltonian and jump-operator
/// matrix elements.
struct Assembler {
    d: usize,
    triplets: Vec<(usize, usize, C64)>,
    /// Σ c·A†A, applied as −(Mρ + ρM) at the end.
    anti: Array2<C64>,
}

impl Assembler {
    fn new(d: usize) -> Self {
        Assembler { d, triplets: Vec::new(), anti: Array2::zeros((d, d)) }
    }

    /// Adds `−i(Hρ − ρH)`.
    fn hamiltonian(&mut self, h: &[(usize, usize, C64)]) {
        let minus_i = C64::new(0.0, -1.0);
        self.left_right(h, minus_i, -minus_i);
    }

    /// Adds `a·Mρ + b·ρM` for sparse `M`.
    fn left_right(&mut self, m: &[(usize, usize, C64)], a: C64, b: C64) {
        let d = self.d;
        self.triplets.reserve(2 * m.len() * d);
        for &(i, k, v) in m {
            for j in 0..d {
                self.triplets.push((i + d * j, k + d * j, a * v));
            }
        }
        for &(k, j, v) in m {
            for i in 0..d {
                self.triplets.push((i + d * j, i + d * k, b * v));
            }
        }
    }

    /// Adds `c·D[A]`.
    fn dissipator(&mut self, c: f64, a: &[(usize, usize, C64)]) {
        if c == 0.0 || a.is_empty() {
            return;
        }
        let d = self.d;
        self.triplets.reserve(a.len() * a.len());
        for &(i, k, aik) in a {
            for &(j, l, ajl) in a {
                self.triplets.push((i + d * j, k + d * l, aik * ajl.conj() * (2.0 * c)));
            }
        }
        // (A†A)_{kl} = Σ_i conj(A_ik) A_il
        for &(i, k, aik) in a {
            for &(i2, l, ail) in a {
                if i2 == i {
                    self.anti[[k, l]] += aik.conj() * ail * c;
                }
            }
        }
    }

    fn finish(mut self) -> SparseMatrix {
        let anti = std::mem::replace(&mut self.anti, Array2::zeros((0, 0)));
        let m = nonzeros(anti.view());
        let minus_one = C64::new(-1.0, 0.0);
        self.left_right(&m, minus_one, minus_one);
        let n = self.d * self.d;
        SparseMatrix::from_triplets(n, n, self.triplets)
    }
}

/// The Lindblad generator of the weak-coupling master equation:
/// mechanical damping, qubit relaxation and qubit dephasing in bare form.
pub fn liouvillian(params: &ModelParams, h: &Operator) -> Result<Liouvillian> {
    params.validate()?;
    if h.spec() != params.spec {
        return Err(Error::SpecMismatch("Hamiltonian and parameters disagree on the space".into()));
    }
    Liouvillian::from_channels(h, &channels(params)?)
}

/// Eigenoperator components `A(ω) = Σ |j⟩⟨j|o|k⟩⟨k|` grouped by
/// `ω = E_k − E_j` into bins of width `tol`. Entries are in the eigenbasis.
pub fn bohr_components(
    op_eigen: &Array2<C64>,
    energies: &[f64],
    tol: f64,
) -> Vec<(f64, Vec<(usize, usize, C64)>)> {
    let scale = op_eigen.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Vec::new();
    }
    let mut elems: Vec<(f64, usize, usize, C64)> = op_eigen
        .indexed_iter()
        .filter(|(_, v)| v.norm() > ELEMENT_CUTOFF * scale)
        .map(|((j, k), v)| (energies[k] - energies[j], j, k, *v))
        .collect();
    elems.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut bins: Vec<(f64, Vec<(usize, usize, C64)>)> = Vec::new();
    let mut start = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for (w, j, k, v) in elems {
        if bins.is_empty() || w - start > tol {
            if let Some(last) = bins.last_mut() {
                last.0 = sum / last.1.len() as f64;
            }
            bins.push((w, Vec::new()));
            start = w;
            sum = 0.0;
        }
        sum += w;
        bins.last_mut().unwrap().1.push((j, k, v));
    }
    if let Some(last) = bins.last_mut() {
        last.0 = sum / last.1.len() as f64;
    }
    bins
}

/// Dressed-basis generator: every channel is decomposed into eigenoperators of
/// `h`, Bohr frequencies within `params.bin_tolerance` are merged (secular
/// approximation). Jump and adjoint components keep the bare bath factors
/// `N̄ + 1` and `N̄`, so without coupling the result equals the bare
/// generator. The superoperator is stored in the eigenbasis of `h`.
pub fn dressed_liouvillian(params: &ModelParams, h: &Operator) -> Result<Liouvillian> {
    params.validate()?;
    if h.spec() != params.spec {
        return Err(Error::SpecMismatch("Hamiltonian and parameters disagree on the space".into()));
    }
    let defect = h.hermiticity_defect();
    if defect > 1e-10 * h.max_abs().max(1.0) {
        return Err(Error::NonHermitian(defect));
    }
    let spec = params.spec;
    let d = spec.dim();
    let (energies, vectors) = linalg::eigh(h.matrix().view())?;
    let vd = linalg::dagger(vectors.view());
    let to_eigen = |o: &Operator| vd.dot(o.matrix()).dot(&vectors);
    let tol = params.bin_tolerance;

    let mut asm = Assembler::new(d);

    let dag = |a: &[(usize, usize, C64)]| -> Vec<(usize, usize, C64)> {
        a.iter().map(|&(j, k, v)| (k, j, v.conj())).collect()
    };

    for ch in channels(params)? {
        match ch.kind {
            ChannelKind::Mechanical { nbar, .. } | ChannelKind::Optical { nbar } => {
                for (_, a) in bohr_components(&to_eigen(&ch.op), &energies, tol) {
                    asm.dissipator(0.5 * ch.rate * (nbar + 1.0), &a);
                    if nbar > 0.0 {
                        asm.dissipator(0.5 * ch.rate * nbar, &dag(&a));
                    }
                }
            }
            ChannelKind::Dephasing { thermal_energy } => {
                for (w, a) in bohr_components(&to_eigen(&ch.op), &energies, tol) {
                    let c = if w > tol {
                        bose(w, thermal_energy) + 1.0
                    } else if w < -tol {
                        bose(-w, thermal_energy)
                    } else {
                        1.0
                    };
                    asm.dissipator(0.5 * ch.rate * c, &a);
                }
            }
        }
    }
    let dissipator = asm.finish();
    let mut entries: Vec<(usize, usize, C64)> = dissipator.iter().collect();
    for j in 0..d {
        for i in 0..d {
            entries.push((i + d * j, i + d * j, C64::new(0.0, energies[j] - energies[i])));
        }
    }
    let matrix = SparseMatrix::from_triplets(d * d, d * d, entries);
    Ok(Liouvillian {
        spec,
        matrix,
        basis: Basis::Eigen { vectors, energies },
        kind: GeneratorKind::Dressed,
        dissipator: Some(dissipator),
    })
}

/// Dense superoperator in the bare basis, for small-space comparisons.
pub fn dense_bare_superoperator(l: &Liouvillian) -> Array2<C64> {
    let m = l.matrix().to_dense();
    match l.basis() {
        Basis::Bare => m,
        Basis::Eigen { vectors, .. } => {
            // vec(VρV†) = (V̄ ⊗ V) vec(ρ)
            let t = kron(vectors.mapv(|x| x.conj()).view(), vectors.view());
            let t_inv = linalg::dagger(t.view());
            t.dot(&m).dot(&t_inv)
        }
    }
}
