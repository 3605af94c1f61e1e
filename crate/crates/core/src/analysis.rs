//! Observables of the mechanical mode: phonon number, fidelity, Wigner
//! function and quadrature squeezing.
//!
//! Quadratures are `X(θ) = b e^{iθ} + b† e^{−iθ}`, so the vacuum variance is 1.
//! Phase space uses `(x, p) = (X(0), X(−π/2))`: a coherent state `|α⟩` sits
//! at `(2 Re α, 2 Im α)` and `∫ W dx dp = 1`.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::quantum::{expectation, fock_ops, partial_trace_to_oscillator, DensityMatrix, StateVector};
use crate::{Error, Result, C64};

/// Tolerance on `|∫W − 1|` before a grid is flagged as too small.
pub const WIGNER_NORM_TOL: f64 = 2e-2;

/// Phase-space convention, recorded alongside every exported grid.
pub const WIGNER_CONVENTION: &str = "W(x,p) = (1/2pi) tr[rho D(alpha) Pi D(alpha)^dag], alpha = (x + i p)/2, \
x = X(0), p = X(-pi/2), X(theta) = b e^{i theta} + b^dag e^{-i theta}, integral W dx dp = 1, vacuum peak 1/(2pi)";

/// `⟨b†b⟩`
pub fn phonon_number(rho: &DensityMatrix) -> f64 {
    let n = fock_ops(rho.spec()).number;
    expectation(rho, &n).map(|v| v.re).unwrap_or(f64::NAN)
}

/// `⟨ψ|ρ|ψ⟩` for a normalized target on the same space.
pub fn fidelity(rho: &DensityMatrix, target: &StateVector) -> Result<f64> {
    if rho.spec() != target.spec() {
        return Err(Error::SpecMismatch("state and target spaces differ".into()));
    }
    let norm = target.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::Unnormalized(norm));
    }
    let psi = target.amplitudes();
    let r_psi = rho.matrix().dot(psi);
    let f = crate::linalg::inner(psi, &r_psi).re;
    Ok(f.clamp(0.0, 1.0))
}

/// First and second moments of the mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    pub b: C64,
    pub b2: C64,
    pub n: f64,
}

impl Moments {
    pub fn of(rho: &DensityMatrix) -> Result<Self> {
        let f = fock_ops(rho.spec());
        let b2 = &f.annihilation * &f.annihilation;
        Ok(Moments {
            b: expectation(rho, &f.annihilation)?,
            b2: expectation(rho, &b2)?,
            n: expectation(rho, &f.number)?.re,
        })
    }

    /// `⟨δb†δb⟩`
    pub fn fluctuation_number(&self) -> f64 {
        self.n - self.b.norm_sqr()
    }

    /// `⟨δb²⟩`
    pub fn anomalous(&self) -> C64 {
        self.b2 - self.b * self.b
    }
}

/// `Var X(θ) = 1 + 2⟨δb†δb⟩ + 2 Re(e^{2iθ}⟨δb²⟩)`.
pub fn quadrature_variance(rho: &DensityMatrix, theta: f64) -> Result<f64> {
    let m = Moments::of(rho)?;
    Ok(1.0 + 2.0 * m.fluctuation_number() + 2.0 * (C64::from_polar(1.0, 2.0 * theta) * m.anomalous()).re)
}

/// Minimum over θ of `Var X(θ)`, with the minimizing angle in `[0, π)`.
pub fn min_quadrature_variance(rho: &DensityMatrix) -> Result<(f64, f64)> {
    let m = Moments::of(rho)?;
    let a = m.anomalous();
    let theta = if a.norm() == 0.0 { 0.0 } else { (std::f64::consts::PI - a.arg()) / 2.0 };
    let theta = theta.rem_euclid(std::f64::consts::PI);
    Ok((theta, 1.0 + 2.0 * m.fluctuation_number() - 2.0 * a.norm()))
}

/// `10 log₁₀(variance)` relative to the vacuum variance 1.
pub fn squeezing_db(variance: f64) -> Result<f64> {
    if !(variance > 0.0) {
        return Err(Error::InvalidArgument(format!("variance must be positive, got {variance}")));
    }
    Ok(10.0 * variance.log10())
}

/// Rectangular phase-space grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_range: (f64, f64),
    pub p_range: (f64, f64),
    /// Points per axis.
    pub resolution: usize,
}

impl GridSpec {
    /// Square grid covering `±(2·max_amplitude + 3)`.
    pub fn covering(max_amplitude: f64, resolution: usize) -> Self {
        let e = 2.0 * max_amplitude + 3.0;
        GridSpec { x_range: (-e, e), p_range: (-e, e), resolution }
    }

    fn axis(range: (f64, f64), n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![0.5 * (range.0 + range.1)];
        }
        (0..n).map(|i| range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64).collect()
    }
}

/// Sampled Wigner function. `values[[i, j]]` is `W(x_j, p_i)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WignerGrid {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub values: Array2<f64>,
    /// `Σ W Δx Δp`
    pub integral: f64,
    /// Set when the integral misses 1 by more than [`WIGNER_NORM_TOL`].
    pub warning: Option<String>,
}

impl WignerGrid {
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// CSV: a header row `p\x, x_0, …`, then one row per p value.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        let header: Vec<String> = self.x.iter().map(|v| crate::output::fmt_float(*v)).collect();
        writeln!(f, "p\\x,{}", header.join(","))?;
        for (i, p) in self.p.iter().enumerate() {
            let row: Vec<String> = self.values.row(i).iter().map(|v| crate::output::fmt_float(*v)).collect();
            writeln!(f, "{},{}", crate::output::fmt_float(*p), row.join(","))?;
        }
        Ok(())
    }

    /// Metadata sidecar with the phase-space convention.
    pub fn metadata(&self) -> serde_json::Value {
        serde_json::json!({
            "convention": WIGNER_CONVENTION,
            "x_range": [self.x.first(), self.x.last()],
            "p_range": [self.p.first(), self.p.last()],
            "resolution": [self.x.len(), self.p.len()],
            "integral": self.integral,
            "min": self.min(),
            "max": self.max(),
            "warning": self.warning,
        })
    }
}

/// Fock-basis elements `⟨m|D(β)|n⟩`, `m, n < f`, of the untruncated
/// displacement operator.
///
/// Each diagonal `m − n = k` follows the normalized associated-Laguerre
/// recurrence, which stays accurate where a recurrence in `m` alone loses
/// digits. The upper triangle uses `⟨m|D(β)|n⟩ = ⟨n|D(−β)|m⟩*`.
pub fn displacement_elements(beta: C64, f: usize) -> Array2<C64> {
    let mut d = Array2::<C64>::zeros((f, f));
    let x = beta.norm_sqr();
    let g = (-0.5 * x).exp();
    for (sign, lower) in [(1.0, true), (-1.0, false)] {
        let b = beta * sign;
        // d0 = e^{−x/2} b^k / √k!
        let mut d0 = C64::new(g, 0.0);
        for k in 0..f {
            if k > 0 {
                d0 *= b / (k as f64).sqrt();
            }
            if !lower && k == 0 {
                continue;
            }
            let kf = k as f64;
            let mut prev = C64::new(0.0, 0.0);
            let mut cur = d0;
            for n in 0..f - k {
                let v = if lower { cur } else { cur.conj() };
                if lower {
                    d[[n + k, n]] = v;
                } else {
                    d[[n, n + k]] = v;
                }
                let nf = n as f64;
                let next = ((2.0 * nf + 1.0 + kf - x) * cur - (nf * (nf + kf)).sqrt() * prev)
                    / ((nf + 1.0) * (nf + 1.0 + kf)).sqrt();
                prev = cur;
                cur = next;
            }
        }
    }
    d
}

/// Displaced-parity value `(1/2π) tr[ρ D(α) Π D(α)†] = (1/2π) tr[ρ D(2α) Π]`.
fn wigner_point(rho: &Array2<C64>, alpha: C64) -> f64 {
    let f = rho.nrows();
    let d = displacement_elements(2.0 * alpha, f);
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..f {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let mut col = C64::new(0.0, 0.0);
        for k in 0..f {
            col += rho[[j, k]] * d[[k, j]];
        }
        acc += col * sign;
    }
    acc.re / (2.0 * std::f64::consts::PI)
}

/// Wigner function on `grid`. Qubits, if present, are traced out.
pub fn wigner(rho: &DensityMatrix, grid: &GridSpec) -> Result<WignerGrid> {
    if grid.resolution == 0 || !(grid.x_range.1 >= grid.x_range.0) || !(grid.p_range.1 >= grid.p_range.0) {
        return Err(Error::InvalidArgument(format!("bad Wigner grid {grid:?}")));
    }
    let osc = if rho.spec().n_qubits() == 0 { rho.clone() } else { partial_trace_to_oscillator(rho) };
    let m = osc.matrix();
    let x = GridSpec::axis(grid.x_range, grid.resolution);
    let p = GridSpec::axis(grid.p_range, grid.resolution);
    let rows: Vec<Vec<f64>> = p
        .par_iter()
        .map(|&pv| x.iter().map(|&xv| wigner_point(m, C64::new(xv, pv) * 0.5)).collect())
        .collect();
    let values = Array2::from_shape_fn((p.len(), x.len()), |(i, j)| rows[i][j]);
    let dx = if x.len() > 1 { x[1] - x[0] } else { 0.0 };
    let dp = if p.len() > 1 { p[1] - p[0] } else { 0.0 };
    let integral = values.sum() * dx * dp;
    let warning = ((integral - 1.0).abs() > WIGNER_NORM_TOL)
        .then(|| format!("grid captures {integral:.4} of the normalization; enlarge the ranges"));
    Ok(WignerGrid { x, p, values, integral, warning })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use crate::quantum::{coherent_state, HilbertSpec, Operator};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn osc(f: usize) -> HilbertSpec {
        HilbertSpec::oscillator(f).unwrap()
    }

    fn squeezed_vacuum(f: usize, r: f64) -> DensityMatrix {
        // S(r) = exp((r/2)(b² − b†²)) = exp(−i H) with H = (i r/2)(b² − b†²)
        let spec = osc(f);
        let ops = fock_ops(spec);
        let b2 = &ops.annihilation * &ops.annihilation;
        let bd2 = &ops.creation * &ops.creation;
        let h = (&b2 - &bd2).scale(C64::new(0.0, r / 2.0));
        let u = linalg::expm_hermitian(h.matrix().view(), 1.0).unwrap();
        let vac = StateVector::basis(spec, &[], 0).unwrap();
        let psi = StateVector::new(spec, u.dot(vac.amplitudes())).unwrap();
        psi.density()
    }

    #[test]
    fn phonon_numbers() {
        let vac = StateVector::basis(osc(10), &[], 0).unwrap().density();
        assert_eq!(phonon_number(&vac), 0.0);
        let coh = coherent_state(osc(60), C64::new(2.0, 0.0)).unwrap().density();
        assert_abs_diff_eq!(phonon_number(&coh), 4.0, epsilon = 1e-9);
        let th = DensityMatrix::thermal(osc(160), 5.0).unwrap();
        // Truncated geometric series: N̄ − f·r^f/(1 − r^f) with r = N̄/(N̄+1).
        let r: f64 = 5.0 / 6.0;
        let f = 160.0;
        let want = 5.0 - f * r.powf(f) / (1.0 - r.powf(f));
        assert_abs_diff_eq!(phonon_number(&th), want, epsilon = 1e-9);
        assert_abs_diff_eq!(phonon_number(&th), 5.0, epsilon = 1e-6);
    }

    #[test]
    fn fidelity_identities() {
        let spec = osc(6);
        let psi = coherent_state(spec, C64::new(0.3, -0.2)).unwrap();
        assert_abs_diff_eq!(fidelity(&psi.density(), &psi).unwrap(), 1.0, epsilon = 1e-12);
        let e1 = StateVector::basis(spec, &[], 1).unwrap();
        let e2 = StateVector::basis(spec, &[], 2).unwrap();
        assert_abs_diff_eq!(fidelity(&e1.density(), &e2).unwrap(), 0.0, epsilon = 1e-15);
        let eps = 0.1;
        let d = spec.dim() as f64;
        let mixed = psi.density().matrix().mapv(|x| x * (1.0 - eps))
            + Array2::<C64>::eye(spec.dim()).mapv(|x| x * (eps / d));
        let rho = DensityMatrix::new(spec, mixed).unwrap();
        assert_abs_diff_eq!(fidelity(&rho, &psi).unwrap(), 1.0 - eps * (1.0 - 1.0 / d), epsilon = 1e-12);
        let phased = psi.scale(C64::from_polar(1.0, 0.7));
        assert_abs_diff_eq!(fidelity(&rho, &phased).unwrap(), fidelity(&rho, &psi).unwrap(), epsilon = 1e-14);
        assert!(matches!(fidelity(&rho, &psi.scale(C64::new(2.0, 0.0))), Err(Error::Unnormalized(_))));
    }

    #[test]
    fn quadratures_of_reference_states() {
        let vac = StateVector::basis(osc(20), &[], 0).unwrap().density();
        for k in 0..8 {
            assert_abs_diff_eq!(quadrature_variance(&vac, k as f64 * 0.4).unwrap(), 1.0, epsilon = 1e-12);
        }
        let th = DensityMatrix::thermal(osc(120), 1.5).unwrap();
        let v = quadrature_variance(&th, 0.3).unwrap();
        assert_abs_diff_eq!(v, 1.0 + 2.0 * phonon_number(&th), epsilon = 1e-12);
        assert_abs_diff_eq!(v, 4.0, epsilon = 1e-6);
        let r = 0.6;
        let sq = squeezed_vacuum(80, r);
        let (theta, vmin) = min_quadrature_variance(&sq).unwrap();
        assert_abs_diff_eq!(vmin, (-2.0 * r).exp(), epsilon = 1e-9);
        assert_abs_diff_eq!(theta, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(squeezing_db(vmin).unwrap(), 10.0 * (-2.0 * r).exp().log10(), epsilon = 1e-8);
    }

    #[test]
    fn squeezing_db_values() {
        assert_eq!(squeezing_db(1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(squeezing_db(0.5).unwrap(), -3.0103, epsilon = 1e-4);
        assert_abs_diff_eq!(squeezing_db(0.224).unwrap(), -6.498, epsilon = 1e-3);
        assert!(squeezing_db(0.0).is_err());
        assert!(squeezing_db(-1.0).is_err());
    }

    #[test]
    fn displacement_elements_match_exponential() {
        // Reference: exp(βb† − β*b) in a padded space.
        let beta = C64::new(1.3, -2.1);
        let big = osc(120);
        let ops = fock_ops(big);
        let gen = &ops.creation.scale(beta) - &ops.annihilation.scale(beta.conj());
        // gen is anti-Hermitian: exp(gen) = exp(−i H) with H = i·gen.
        let h = gen.scale(C64::new(0.0, 1.0));
        let full = linalg::expm_hermitian(h.matrix().view(), 1.0).unwrap();
        let d = displacement_elements(beta, 30);
        for m in 0..30 {
            for n in 0..30 {
                assert!((d[[m, n]] - full[[m, n]]).norm() < 1e-10, "({m},{n}) {} {}", d[[m, n]], full[[m, n]]);
            }
        }
        let _ = Operator::identity(big);
    }

    #[test]
    fn vacuum_and_coherent_wigner() {
        let vac = StateVector::basis(osc(30), &[], 0).unwrap().density();
        let g = wigner(&vac, &GridSpec { x_range: (-6.0, 6.0), p_range: (-6.0, 6.0), resolution: 61 }).unwrap();
        assert_abs_diff_eq!(g.values[[30, 30]], 1.0 / (2.0 * PI), epsilon = 1e-12);
        assert_abs_diff_eq!(g.integral, 1.0, epsilon = 1e-3);
        assert!(g.warning.is_none());
        // Gaussian of variance 1 per axis.
        assert_abs_diff_eq!(g.values[[30, 35]], (-0.5f64).exp() / (2.0 * PI), epsilon = 1e-12);

        let alpha = C64::new(1.0, 0.5);
        let coh = coherent_state(osc(40), alpha).unwrap().density();
        let grid = GridSpec { x_range: (2.0, 2.0), p_range: (1.0, 1.0), resolution: 1 };
        let w = wigner(&coh, &grid).unwrap();
        assert_abs_diff_eq!(w.values[[0, 0]], 1.0 / (2.0 * PI), epsilon = 1e-10);
    }

    #[test]
    fn even_cat_fringes() {
        let spec = osc(60);
        let a = coherent_state(spec, C64::new(2.0, 0.0)).unwrap();
        let b = coherent_state(spec, C64::new(-2.0, 0.0)).unwrap();
        let cat = a.add(&b).unwrap().normalized().unwrap().density();
        // Closed form on the p axis:
        // W(0,p) = (cos(2αp) + e^{−2α²})·e^{−p²/2} / (2π(1 + e^{−2α²})).
        let tail = (-8.0f64).exp();
        let norm = 2.0 * PI * (1.0 + tail);
        for &p in &[0.0, 0.3, PI / 4.0, 1.1] {
            let grid = GridSpec { x_range: (0.0, 0.0), p_range: (p, p), resolution: 1 };
            let w = wigner(&cat, &grid).unwrap().values[[0, 0]];
            let want = ((4.0 * p).cos() + tail) * (-p * p / 2.0).exp() / norm;
            assert_abs_diff_eq!(w, want, epsilon = 1e-9);
        }
        // The central maximum and the first minimum are π/(2α) apart in p.
        let grid = GridSpec { x_range: (0.0, 0.0), p_range: (PI / 4.0, PI / 4.0), resolution: 1 };
        assert!(wigner(&cat, &grid).unwrap().values[[0, 0]] < 0.0);
    }

    #[test]
    fn marginal_matches_quadrature_distribution() {
        // Squeezed vacuum: x-marginal is Gaussian with variance Var X(0).
        let sq = squeezed_vacuum(60, 0.4);
        let var = quadrature_variance(&sq, 0.0).unwrap();
        let grid = GridSpec::covering(1.0, 81);
        let g = wigner(&sq, &grid).unwrap();
        let dx = g.x[1] - g.x[0];
        let dp = g.p[1] - g.p[0];
        let mut tv = 0.0;
        for (j, &x) in g.x.iter().enumerate() {
            let marginal: f64 = g.values.column(j).sum() * dp;
            let want = (-x * x / (2.0 * var)).exp() / (2.0 * PI * var).sqrt();
            tv += (marginal - want).abs() * dx;
        }
        assert!(0.5 * tv < 2e-2, "total variation {tv}");
    }

    #[test]
    fn small_grid_is_flagged() {
        let coh = coherent_state(osc(40), C64::new(3.0, 0.0)).unwrap().density();
        let g = wigner(&coh, &GridSpec { x_range: (-1.0, 1.0), p_range: (-1.0, 1.0), resolution: 11 }).unwrap();
        assert!(g.warning.is_some());
    }

    #[test]
    fn min_variance_bounds_random_angles() {
        let sq = squeezed_vacuum(60, 0.5);
        let rot = {
            let mut m = Array2::<C64>::zeros((60, 60));
            for n in 0..60 {
                m[[n, n]] = C64::from_polar(1.0, 0.37 * n as f64);
            }
            Operator::new(osc(60), m).unwrap()
        };
        let rho = sq.conjugated_by(&rot).unwrap();
        let (_, vmin) = min_quadrature_variance(&rho).unwrap();
        for k in 0..100 {
            let th = k as f64 * 0.0314159;
            assert!(vmin <= quadrature_variance(&rho, th).unwrap() + 1e-12);
        }
    }
}
