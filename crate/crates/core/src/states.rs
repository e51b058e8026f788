//! Constructors and validators for the input state classes.
//!
//! Constructors build states on the physical register (A, B1, .., BM); the
//! routing layer permutes them into protocol order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_spectrum, kron, kron_vec, partial_trace, pauli_x, pauli_y, pauli_z, ComplexMatrix,
    SystemLayout, C64, ONE, ZERO,
};
use crate::optim::SplitMix64;

const NORM_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-9;
const EIG_TOL: f64 = 1e-9;

/// Normalized state vector over a labeled register.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    layout: SystemLayout,
    amplitudes: Vec<C64>,
}

impl PureState {
    pub fn new(layout: SystemLayout, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != layout.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} amplitudes, got {}",
                layout.total_dim(),
                amplitudes.len()
            )));
        }
        if amplitudes
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite);
        }
        let norm = norm2(&amplitudes).sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!(
                "state norm {norm} deviates from 1 beyond {NORM_TOL:.0e}"
            )));
        }
        Ok(Self { layout, amplitudes })
    }

    pub(crate) fn new_unchecked(layout: SystemLayout, amplitudes: Vec<C64>) -> Self {
        Self { layout, amplitudes }
    }

    /// Computational basis state |index>.
    pub fn basis(layout: SystemLayout, index: usize) -> Result<Self> {
        let dim = layout.total_dim();
        if index >= dim {
            return Err(Error::IndexOutOfRange(format!(
                "basis index {index} of {dim}"
            )));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(Self {
            layout,
            amplitudes: amps,
        })
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        assert_eq!(self.dim(), other.dim());
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn fidelity(&self, other: &PureState) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn to_density(&self) -> DensityMatrix {
        let n = self.dim();
        let mut m = ComplexMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                m.set(r, c, self.amplitudes[r] * self.amplitudes[c].conj());
            }
        }
        DensityMatrix {
            layout: self.layout.clone(),
            matrix: m,
        }
    }
}

/// Hermitian, unit-trace, PSD operator over a labeled register.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    layout: SystemLayout,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(layout: SystemLayout, matrix: ComplexMatrix) -> Result<Self> {
        let dim = layout.total_dim();
        if !matrix.is_square() || matrix.rows() != dim {
            return Err(Error::DimensionMismatch(format!(
                "density matrix is {}x{} but layout dimension is {dim}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let dev = matrix.hermitian_deviation();
        if dev > TRACE_TOL {
            return Err(Error::NotHermitian {
                deviation: dev,
                tolerance: TRACE_TOL,
            });
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!(
                "trace {tr} deviates from 1 beyond {TRACE_TOL:.0e}"
            )));
        }
        let spectrum = hermitian_spectrum(&matrix)?;
        if let Some(&min) = spectrum.last() {
            if min < -EIG_TOL {
                return Err(Error::NegativeEigenvalue(min));
            }
        }
        Ok(Self { layout, matrix })
    }

    pub(crate) fn new_unchecked(layout: SystemLayout, matrix: ComplexMatrix) -> Self {
        Self { layout, matrix }
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// Reduced state on the kept 1-based subsystems.
    pub fn reduced(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let matrix = partial_trace(&self.matrix, &self.layout, keep)?;
        let layout = self.layout.restricted(keep)?;
        Ok(DensityMatrix { layout, matrix })
    }

    pub fn spectrum(&self) -> Result<Vec<f64>> {
        hermitian_spectrum(&self.matrix)
    }

    /// Spectral decomposition into pure components, dropping weights below
    /// `tol`; weights within [-1e-9, tol) are treated as zero.
    pub fn pure_components(&self, tol: f64) -> Result<Vec<(f64, PureState)>> {
        let (values, vectors) = crate::linalg::hermitian_eigen(&self.matrix)?;
        let mut out = Vec::new();
        for (k, &lam) in values.iter().enumerate() {
            if lam < -EIG_TOL {
                return Err(Error::NegativeEigenvalue(lam));
            }
            if lam <= tol {
                continue;
            }
            let n = self.dim();
            let mut amps = vec![ZERO; n];
            for (r, amp) in amps.iter_mut().enumerate() {
                *amp = vectors.get(r, k);
            }
            out.push((lam, PureState::new_unchecked(self.layout.clone(), amps)));
        }
        Ok(out)
    }
}

/// Real 3-vector on or inside the Bloch ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let v = Self { x, y, z };
        if !v.norm().is_finite() || v.norm() > 1.0 + 1e-12 {
            return Err(Error::InvalidState(format!(
                "Bloch vector norm {} exceeds 1",
                v.norm()
            )));
        }
        Ok(v)
    }

    pub fn plus_z() -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            z: 1.0,
        }
    }

    pub fn minus_z() -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            z: -1.0,
        }
    }

    pub fn from_spherical(theta: f64, phi: f64) -> Self {
        Self {
            x: theta.sin() * phi.cos(),
            y: theta.sin() * phi.sin(),
            z: theta.cos(),
        }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() < 1e-9
    }

    /// Qubit state (I + n.sigma)/2.
    pub fn density(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::identity(2);
        m = m.add(&pauli_x().scale(C64::new(self.x, 0.0)));
        m = m.add(&pauli_y().scale(C64::new(self.y, 0.0)));
        m = m.add(&pauli_z().scale(C64::new(self.z, 0.0)));
        m.scale(C64::new(0.5, 0.0))
    }
}

/// One term of a fully separable three-qubit mixture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparableTerm {
    pub probability: f64,
    pub n_a: BlochVector,
    pub n_b1: BlochVector,
    pub n_b2: BlochVector,
}

/// cos(theta/2)|0..0> + e^{i phi} sin(theta/2)|1..1> on `num_parties` qubits
/// labeled (A, B1, ..).
pub fn gghz_state(num_parties: usize, theta: f64, phi: f64) -> Result<PureState> {
    if num_parties < 2 {
        return Err(Error::InvalidState("need at least two parties".into()));
    }
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(Error::InvalidState(format!(
            "theta {theta} outside [0, pi]"
        )));
    }
    let layout = SystemLayout::physical(num_parties - 1);
    Ok(gghz_amplitudes_unchecked(layout, theta, phi))
}

/// Same amplitudes without the range check; used by sweeps and optimizers
/// that treat theta as a free periodic parameter.
pub(crate) fn gghz_amplitudes_unchecked(layout: SystemLayout, theta: f64, phi: f64) -> PureState {
    let dim = layout.total_dim();
    let mut amps = vec![ZERO; dim];
    amps[0] = C64::new((theta / 2.0).cos(), 0.0);
    amps[dim - 1] = C64::from_polar((theta / 2.0).sin(), phi);
    PureState::new_unchecked(layout, amps)
}

/// Identity / 2^n on n qubits labeled (A, B1, ..).
pub fn maximally_mixed_state(num_qubits: usize) -> Result<DensityMatrix> {
    if num_qubits == 0 {
        return Err(Error::InvalidState("need at least one qubit".into()));
    }
    let layout = if num_qubits >= 2 {
        SystemLayout::physical(num_qubits - 1)
    } else {
        SystemLayout::new(vec![("A", 2)])?
    };
    let dim = layout.total_dim();
    let matrix = ComplexMatrix::identity(dim).scale(C64::new(1.0 / dim as f64, 0.0));
    Ok(DensityMatrix::new_unchecked(layout, matrix))
}

/// sum_i p_i rho_A^i (x) rho_B1^i (x) rho_B2^i with rho^i = (I + n.sigma)/2.
pub fn separable_mixed_state(terms: &[SeparableTerm]) -> Result<DensityMatrix> {
    if terms.is_empty() {
        return Err(Error::InvalidProbabilities("no terms".into()));
    }
    let total: f64 = terms.iter().map(|t| t.probability).sum();
    if terms.iter().any(|t| t.probability < 0.0) || (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidProbabilities(format!(
            "weights must be nonnegative and sum to 1 (got {total})"
        )));
    }
    for t in terms {
        for n in [&t.n_a, &t.n_b1, &t.n_b2] {
            if !n.is_unit() {
                return Err(Error::InvalidState(format!(
                    "Bloch vector norm {} is not 1",
                    n.norm()
                )));
            }
        }
    }
    let layout = SystemLayout::physical(2);
    let mut acc = ComplexMatrix::zeros(8, 8);
    for t in terms {
        let term = kron(
            &kron(&t.n_a.density(), &t.n_b1.density()),
            &t.n_b2.density(),
        );
        acc = acc.add(&term.scale(C64::new(t.probability, 0.0)));
    }
    DensityMatrix::new(layout, acc)
}

/// |phi>_A (x) |Phi>_{B1 B2} on the physical register (A, B1, B2).
pub fn product_pure_state(phi_a: &PureState, phi_b: &PureState) -> Result<PureState> {
    if phi_a.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "sender state must be a single qubit, got dim {}",
            phi_a.dim()
        )));
    }
    if phi_b.dim() != 4 {
        return Err(Error::DimensionMismatch(format!(
            "receiver state must be two qubits, got dim {}",
            phi_b.dim()
        )));
    }
    let amps = kron_vec(phi_a.amplitudes(), phi_b.amplitudes());
    PureState::new(SystemLayout::physical(2), amps)
}

/// Haar-random pure state; test and demo helper.
pub fn haar_random_pure(layout: SystemLayout, rng: &mut SplitMix64) -> PureState {
    let dim = layout.total_dim();
    let mut amps: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.normal(), rng.normal()))
        .collect();
    let norm = norm2(&amps).sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    PureState::new_unchecked(layout, amps)
}

pub(crate) fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// JSON-serializable state document: layout labels and dims plus flattened
/// real/imaginary arrays (amplitudes for pure, row-major entries for density).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateDocument {
    pub kind: String,
    pub labels: Vec<String>,
    pub dims: Vec<usize>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl StateDocument {
    pub fn from_pure(state: &PureState) -> Self {
        Self {
            kind: "pure".into(),
            labels: state.layout().labels(),
            dims: state.layout().dims(),
            re: state.amplitudes().iter().map(|z| z.re).collect(),
            im: state.amplitudes().iter().map(|z| z.im).collect(),
        }
    }

    pub fn from_density(state: &DensityMatrix) -> Self {
        Self {
            kind: "density".into(),
            labels: state.layout().labels(),
            dims: state.layout().dims(),
            re: state.matrix().entries().iter().map(|z| z.re).collect(),
            im: state.matrix().entries().iter().map(|z| z.im).collect(),
        }
    }

    fn layout(&self) -> Result<SystemLayout> {
        if self.labels.len() != self.dims.len() {
            return Err(Error::DimensionMismatch(
                "labels and dims must have equal length".into(),
            ));
        }
        SystemLayout::new(
            self.labels
                .iter()
                .cloned()
                .zip(self.dims.iter().copied())
                .collect(),
        )
    }

    fn complex_entries(&self) -> Result<Vec<C64>> {
        if self.re.len() != self.im.len() {
            return Err(Error::DimensionMismatch(
                "re and im arrays must have equal length".into(),
            ));
        }
        Ok(self
            .re
            .iter()
            .zip(&self.im)
            .map(|(&re, &im)| C64::new(re, im))
            .collect())
    }

    pub fn to_pure(&self) -> Result<PureState> {
        if self.kind != "pure" {
            return Err(Error::InvalidState(format!(
                "kind {} is not pure",
                self.kind
            )));
        }
        PureState::new(self.layout()?, self.complex_entries()?)
    }

    /// Resolves either kind to a density matrix.
    pub fn to_density(&self) -> Result<DensityMatrix> {
        match self.kind.as_str() {
            "pure" => Ok(self.to_pure()?.to_density()),
            "density" => {
                let layout = self.layout()?;
                let dim = layout.total_dim();
                let matrix = ComplexMatrix::new(dim, dim, self.complex_entries()?)?;
                DensityMatrix::new(layout, matrix)
            }
            other => Err(Error::InvalidState(format!("unknown state kind {other}"))),
        }
    }
}
