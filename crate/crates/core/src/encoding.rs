//! Parameterized unitary families and the probability-simplex map: the search
//! space of every optimizer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{kron, pauli_x, pauli_y, pauli_z, ComplexMatrix, C64};

/// ZYZ Euler angles; `alpha` adds a global phase, turning SU(2) into U(2).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleQubitUnitaryParams {
    pub alpha: Option<f64>,
    pub theta: f64,
    pub phi: f64,
    pub lam: f64,
}

impl SingleQubitUnitaryParams {
    pub fn special(theta: f64, phi: f64, lam: f64) -> Self {
        Self {
            alpha: None,
            theta,
            phi,
            lam,
        }
    }

    pub fn with_phase(alpha: f64, theta: f64, phi: f64, lam: f64) -> Self {
        Self {
            alpha: Some(alpha),
            theta,
            phi,
            lam,
        }
    }

    pub fn identity() -> Self {
        Self::special(0.0, 0.0, 0.0)
    }
}

/// e^{i alpha} Rz(phi) Ry(theta) Rz(lam); determinant 1 when alpha is absent.
pub fn single_qubit_unitary(p: &SingleQubitUnitaryParams) -> ComplexMatrix {
    let c = (p.theta / 2.0).cos();
    let s = (p.theta / 2.0).sin();
    let global = C64::from_polar(1.0, p.alpha.unwrap_or(0.0));
    let e = |angle: f64| C64::from_polar(1.0, angle);
    ComplexMatrix::new(
        2,
        2,
        vec![
            global * e(-(p.phi + p.lam) / 2.0) * c,
            global * e(-(p.phi - p.lam) / 2.0) * (-s),
            global * e((p.phi - p.lam) / 2.0) * s,
            global * e((p.phi + p.lam) / 2.0) * c,
        ],
    )
    .unwrap()
}

/// KAK parameters of a two-qubit unitary: four local U(2) factors around the
/// canonical gate exp(-i [ax XX + ay YY + az ZZ]).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitUnitaryParams {
    pub a: SingleQubitUnitaryParams,
    pub b: SingleQubitUnitaryParams,
    pub c: SingleQubitUnitaryParams,
    pub d: SingleQubitUnitaryParams,
    pub alphas: [f64; 3],
}

impl TwoQubitUnitaryParams {
    pub fn identity() -> Self {
        let id = SingleQubitUnitaryParams::with_phase(0.0, 0.0, 0.0, 0.0);
        Self {
            a: id,
            b: id,
            c: id,
            d: id,
            alphas: [0.0; 3],
        }
    }
}

/// exp(-i[ax XX + ay YY + az ZZ]) as the closed-form product of the three
/// commuting factors, each cos(a) I - i sin(a) (sigma x sigma).
pub fn canonical_two_qubit_gate(alphas: &[f64; 3]) -> ComplexMatrix {
    let generators = [pauli_x(), pauli_y(), pauli_z()];
    let mut out = ComplexMatrix::identity(4);
    for (alpha, sigma) in alphas.iter().zip(generators.iter()) {
        let pair = kron(sigma, sigma);
        let factor = ComplexMatrix::identity(4)
            .scale(C64::new(alpha.cos(), 0.0))
            .add(&pair.scale(C64::new(0.0, -alpha.sin())));
        out = out.matmul(&factor);
    }
    out
}

/// (A x B) U_d (C x D).
pub fn two_qubit_unitary_kak(p: &TwoQubitUnitaryParams) -> ComplexMatrix {
    let left = kron(&single_qubit_unitary(&p.a), &single_qubit_unitary(&p.b));
    let right = kron(&single_qubit_unitary(&p.c), &single_qubit_unitary(&p.d));
    left.matmul(&canonical_two_qubit_gate(&p.alphas))
        .matmul(&right)
}

/// Shift-and-multiply (Weyl) unitaries M_{(p,q)}|j> = e^{i 2 pi p j / d}|j+q>,
/// enumerated with p fastest so d = 2 yields {I, Z, X, XZ}.
pub fn shift_multiply_basis(d: usize) -> Vec<ComplexMatrix> {
    assert!(d >= 2, "need dimension >= 2");
    let mut out = Vec::with_capacity(d * d);
    for k in 0..(d * d) {
        let p = k % d;
        let q = k / d;
        let mut m = ComplexMatrix::zeros(d, d);
        for j in 0..d {
            let phase =
                C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (p * j) as f64 / d as f64);
            m.set((j + q) % d, j, phase);
        }
        out.push(m);
    }
    out
}

/// Softmax onto the probability simplex; invariant under additive shifts.
pub fn to_simplex(raw: &[f64]) -> Vec<f64> {
    assert!(!raw.is_empty());
    let max = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = raw.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|v| v / sum).collect()
}

/// One alphabet letter: its probability and the unitary parameters routed to
/// each receiver branch (two for M = 2, M in general).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodingLetter {
    pub probability: f64,
    pub unitaries: Vec<SingleQubitUnitaryParams>,
}

/// The optimization variable for capacity: per-letter probabilities and
/// per-branch unitary parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodingScheme {
    pub letters: Vec<EncodingLetter>,
}

impl EncodingScheme {
    pub fn new(letters: Vec<EncodingLetter>) -> Result<Self> {
        let scheme = Self { letters };
        scheme.validate()?;
        Ok(scheme)
    }

    pub fn alphabet_size(&self) -> usize {
        self.letters.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.letters.is_empty() {
            return Err(Error::InvalidConfig("alphabet must be nonempty".into()));
        }
        let branches = self.letters[0].unitaries.len();
        if branches == 0 || self.letters.iter().any(|l| l.unitaries.len() != branches) {
            return Err(Error::InvalidConfig(
                "every letter needs the same nonzero number of branch unitaries".into(),
            ));
        }
        let total: f64 = self.letters.iter().map(|l| l.probability).sum();
        if self.letters.iter().any(|l| l.probability < 0.0) || (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidProbabilities(format!(
                "letter probabilities must be nonnegative and sum to 1 (got {total})"
            )));
        }
        Ok(())
    }

    /// Uniform scheme whose branches all apply the identity.
    pub fn identity(alphabet_size: usize, branches: usize) -> Self {
        let p = 1.0 / alphabet_size as f64;
        Self {
            letters: (0..alphabet_size)
                .map(|_| EncodingLetter {
                    probability: p,
                    unitaries: vec![SingleQubitUnitaryParams::identity(); branches],
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{I, ONE, ZERO};
    use crate::optim::SplitMix64;
    use std::f64::consts::PI;

    fn random_single(rng: &mut SplitMix64, with_phase: bool) -> SingleQubitUnitaryParams {
        let angles: Vec<f64> = (0..4).map(|_| rng.range(0.0, 2.0 * PI)).collect();
        if with_phase {
            SingleQubitUnitaryParams::with_phase(angles[0], angles[1], angles[2], angles[3])
        } else {
            SingleQubitUnitaryParams::special(angles[1], angles[2], angles[3])
        }
    }

    #[test]
    fn zero_params_give_identity() {
        let u = single_qubit_unitary(&SingleQubitUnitaryParams::identity());
        assert!(u.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn euler_angles_reproduce_pauli_x_up_to_phase() {
        // Multiplying the rotations by hand: Ry(pi) Rz(pi) = -i X.
        let det1 = single_qubit_unitary(&SingleQubitUnitaryParams::special(PI, 0.0, PI));
        assert!(det1.max_abs_diff(&pauli_x().scale(-I)) < 1e-12);
        let with_phase =
            single_qubit_unitary(&SingleQubitUnitaryParams::with_phase(PI / 2.0, PI, 0.0, PI));
        assert!(with_phase.max_abs_diff(&pauli_x()) < 1e-12);
    }

    #[test]
    fn generated_single_qubit_matrices_are_unitary_and_det_one() {
        let mut rng = SplitMix64::new(11);
        for _ in 0..1000 {
            let p = random_single(&mut rng, false);
            let u = single_qubit_unitary(&p);
            assert!(u.is_unitary(1e-12));
            let det = u.get(0, 0) * u.get(1, 1) - u.get(0, 1) * u.get(1, 0);
            assert!((det - ONE).norm() < 1e-12);
        }
        for _ in 0..1000 {
            let p = random_single(&mut rng, true);
            assert!(single_qubit_unitary(&p).is_unitary(1e-12));
        }
    }

    #[test]
    fn canonical_gate_special_points() {
        let id = canonical_two_qubit_gate(&[0.0, 0.0, 0.0]);
        assert!(id.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-15);

        // Half-angle expansion: (I - i XX)/sqrt(2).
        let got = canonical_two_qubit_gate(&[PI / 4.0, 0.0, 0.0]);
        let xx = kron(&pauli_x(), &pauli_x());
        let want = ComplexMatrix::identity(4)
            .add(&xx.scale(-I))
            .scale(C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0));
        assert!(got.max_abs_diff(&want) < 1e-12);

        // (pi/4, pi/4, pi/4) is SWAP up to the phase e^{-i pi/4}.
        let got = canonical_two_qubit_gate(&[PI / 4.0, PI / 4.0, PI / 4.0]);
        let mut swap = ComplexMatrix::zeros(4, 4);
        swap.set(0, 0, ONE);
        swap.set(1, 2, ONE);
        swap.set(2, 1, ONE);
        swap.set(3, 3, ONE);
        let want = swap.scale(C64::from_polar(1.0, -PI / 4.0));
        assert!(got.max_abs_diff(&want) < 1e-12);
    }

    /// Scaling-and-squaring matrix exponential; independent oracle for the
    /// closed-form canonical gate.
    fn expm(m: &ComplexMatrix) -> ComplexMatrix {
        let n = m.rows();
        let norm: f64 = m.entries().iter().map(|z| z.norm()).fold(0.0, f64::max);
        let scaling = (norm.log2().ceil().max(0.0) as u32) + 4;
        let scaled = m.scale(C64::new(1.0 / f64::powi(2.0, scaling as i32), 0.0));
        let mut sum = ComplexMatrix::identity(n);
        let mut term = ComplexMatrix::identity(n);
        for k in 1..24 {
            term = term.matmul(&scaled).scale(C64::new(1.0 / k as f64, 0.0));
            sum = sum.add(&term);
        }
        let mut out = sum;
        for _ in 0..scaling {
            out = out.matmul(&out);
        }
        out
    }

    #[test]
    fn canonical_gate_matches_matrix_exponential_oracle() {
        let mut rng = SplitMix64::new(23);
        for _ in 0..100 {
            let alphas = [
                rng.range(-2.0, 2.0),
                rng.range(-2.0, 2.0),
                rng.range(-2.0, 2.0),
            ];
            let closed = canonical_two_qubit_gate(&alphas);
            let mut generator = ComplexMatrix::zeros(4, 4);
            for (alpha, sigma) in alphas.iter().zip([pauli_x(), pauli_y(), pauli_z()]) {
                generator = generator.add(&kron(&sigma, &sigma).scale(C64::new(*alpha, 0.0)));
            }
            let brute = expm(&generator.scale(-I));
            assert!(closed.max_abs_diff(&brute) < 1e-10);
        }
    }

    #[test]
    fn kak_with_identity_locals_reduces_to_canonical_gate() {
        let mut p = TwoQubitUnitaryParams::identity();
        p.alphas = [PI / 4.0, PI / 4.0, PI / 4.0];
        let got = two_qubit_unitary_kak(&p);
        let mut swap = ComplexMatrix::zeros(4, 4);
        swap.set(0, 0, ONE);
        swap.set(1, 2, ONE);
        swap.set(2, 1, ONE);
        swap.set(3, 3, ONE);
        assert!(got.max_abs_diff(&swap.scale(C64::from_polar(1.0, -PI / 4.0))) < 1e-12);
    }

    #[test]
    fn kak_composition_is_unitary() {
        let mut rng = SplitMix64::new(31);
        let id = TwoQubitUnitaryParams::identity();
        assert!(two_qubit_unitary_kak(&id).max_abs_diff(&ComplexMatrix::identity(4)) < 1e-12);
        for _ in 0..1000 {
            let p = TwoQubitUnitaryParams {
                a: random_single(&mut rng, true),
                b: random_single(&mut rng, true),
                c: random_single(&mut rng, true),
                d: random_single(&mut rng, true),
                alphas: [
                    rng.range(0.0, PI / 2.0),
                    rng.range(0.0, PI / 2.0),
                    rng.range(0.0, PI / 2.0),
                ],
            };
            assert!(two_qubit_unitary_kak(&p).is_unitary(1e-10));
        }
    }

    #[test]
    fn shift_multiply_d2_is_pauli_family() {
        let basis = shift_multiply_basis(2);
        assert_eq!(basis.len(), 4);
        assert!(basis[0].max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
        assert!(basis[1].max_abs_diff(&pauli_z()) < 1e-15);
        assert!(basis[2].max_abs_diff(&pauli_x()) < 1e-15);
        assert!(basis[3].max_abs_diff(&pauli_x().matmul(&pauli_z())) < 1e-15);
    }

    #[test]
    fn shift_multiply_is_hilbert_schmidt_orthogonal() {
        for d in [2usize, 3, 4] {
            let basis = shift_multiply_basis(d);
            for (j, mj) in basis.iter().enumerate() {
                for (k, mk) in basis.iter().enumerate() {
                    let ip = mj.dagger().matmul(mk).trace();
                    let want = if j == k { d as f64 } else { 0.0 };
                    assert!((ip.re - want).abs() < 1e-12 && ip.im.abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn shift_multiply_twirl_maps_to_scaled_identity() {
        // (1/d^2) sum_k M_k^dag Q M_k = Tr(Q) I / d.
        let mut rng = SplitMix64::new(47);
        for d in [2usize, 3, 4] {
            let basis = shift_multiply_basis(d);
            for _ in 0..20 {
                let entries: Vec<C64> = (0..d * d)
                    .map(|_| C64::new(rng.range(-1.0, 1.0), rng.range(-1.0, 1.0)))
                    .collect();
                let q = ComplexMatrix::new(d, d, entries).unwrap();
                let mut twirl = ComplexMatrix::zeros(d, d);
                for m in &basis {
                    twirl = twirl.add(&m.dagger().matmul(&q).matmul(m));
                }
                twirl = twirl.scale(C64::new(1.0 / (d * d) as f64, 0.0));
                let want = ComplexMatrix::identity(d).scale(q.trace() / d as f64);
                assert!(twirl.max_abs_diff(&want) < 1e-10);
            }
        }
    }

    #[test]
    fn twirl_of_projector_for_d2_by_explicit_sum() {
        let basis = shift_multiply_basis(2);
        let q = ComplexMatrix::new(2, 2, vec![ONE, ZERO, ZERO, ZERO]).unwrap();
        let mut twirl = ComplexMatrix::zeros(2, 2);
        for m in &basis {
            twirl = twirl.add(&m.dagger().matmul(&q).matmul(m));
        }
        twirl = twirl.scale(C64::new(0.25, 0.0));
        assert!(twirl.max_abs_diff(&ComplexMatrix::identity(2).scale(C64::new(0.5, 0.0))) < 1e-14);
    }

    #[test]
    fn softmax_basics() {
        let flat = to_simplex(&[0.0, 0.0, 0.0, 0.0]);
        assert!(flat.iter().all(|p| (p - 0.25).abs() < 1e-15));

        let saturated = to_simplex(&[20.0, 0.0]);
        assert!(saturated[0] > 1.0 - 1e-8);

        let a = to_simplex(&[0.3, -1.2, 2.0]);
        let b = to_simplex(&[0.3 + 7.5, -1.2 + 7.5, 2.0 + 7.5]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        let sum: f64 = a.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scheme_validation() {
        let scheme = EncodingScheme::identity(4, 2);
        assert!(scheme.validate().is_ok());
        assert_eq!(scheme.alphabet_size(), 4);

        let mut bad = scheme.clone();
        bad.letters[0].probability = 0.5;
        assert!(bad.validate().is_err());
    }
}
