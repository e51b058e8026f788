//! Multiplexed routing of the sender's qubit: the controlled unitary W_x, its
//! post-selected application, and encoded-ensemble construction.
//!
//! States enter on the physical register (A, B1, .., BM) and are permuted to
//! the protocol order (B1, A, B2, C2, .., BM, CM) where the routed slot is
//! index 2 and every even slot past it is an auxiliary |0>. Branch i of the
//! control applies SWAP_{2,2i} followed by the letter's i-th unitary on slot
//! 2i; post-selecting the |+_M> control outcome superposes the branches.

use crate::encoding::{single_qubit_unitary, EncodingScheme, SingleQubitUnitaryParams};
use crate::error::{Error, Result};
use crate::information::Ensemble;
use crate::linalg::{
    embed_operator, kron, partial_trace, swap_operator, ComplexMatrix, SystemLayout, C64, ONE, ZERO,
};
use crate::states::{norm2, DensityMatrix, PureState};

/// Success probabilities below this are treated as destructive interference
/// and rejected rather than normalized into a NaN state.
pub const POST_SELECTION_FLOOR: f64 = 1e-12;

const UNITARY_TOL: f64 = 1e-10;

/// The M single-qubit unitaries multiplexed by one letter (U and V for M = 2).
#[derive(Clone, Debug)]
pub struct RoutingLetter {
    unitaries: Vec<ComplexMatrix>,
}

impl RoutingLetter {
    pub fn new(unitaries: Vec<ComplexMatrix>) -> Result<Self> {
        if unitaries.is_empty() {
            return Err(Error::InvalidConfig(
                "letter needs at least one unitary".into(),
            ));
        }
        for (i, u) in unitaries.iter().enumerate() {
            if u.rows() != 2 || u.cols() != 2 {
                return Err(Error::DimensionMismatch(format!(
                    "branch {} unitary is {}x{}, expected 2x2",
                    i + 1,
                    u.rows(),
                    u.cols()
                )));
            }
            if !u.is_unitary(UNITARY_TOL) {
                return Err(Error::NotUnitary(format!(
                    "branch {} of routing letter",
                    i + 1
                )));
            }
        }
        Ok(Self { unitaries })
    }

    pub fn from_params(params: &[SingleQubitUnitaryParams]) -> Result<Self> {
        Self::new(params.iter().map(single_qubit_unitary).collect())
    }

    pub fn identity(m: usize) -> Self {
        Self {
            unitaries: vec![ComplexMatrix::identity(2); m],
        }
    }

    pub fn branch_count(&self) -> usize {
        self.unitaries.len()
    }

    pub fn unitaries(&self) -> &[ComplexMatrix] {
        &self.unitaries
    }
}

/// Post-selected lab state together with the probability of the kept branch.
#[derive(Clone, Debug)]
pub struct RoutedOutcome {
    pub state: DensityMatrix,
    pub success_probability: f64,
}

fn check_branches(letter: &RoutingLetter, m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::InvalidConfig("need at least two receivers".into()));
    }
    if letter.branch_count() != m {
        return Err(Error::InvalidConfig(format!(
            "letter has {} unitaries but M = {m}",
            letter.branch_count()
        )));
    }
    Ok(())
}

fn check_protocol_register(psi: &PureState, m: usize) -> Result<()> {
    let layout = psi.layout();
    if layout.num_subsystems() != 2 * m || layout.dims().iter().any(|&d| d != 2) {
        return Err(Error::DimensionMismatch(format!(
            "expected the 2M-qubit lab register for M = {m}, got {} subsystems of dims {:?}",
            layout.num_subsystems(),
            layout.dims()
        )));
    }
    Ok(())
}

fn check_physical_register(layout: &SystemLayout, m: usize) -> Result<()> {
    if layout.num_subsystems() != m + 1 || layout.dims().iter().any(|&d| d != 2) {
        return Err(Error::DimensionMismatch(format!(
            "expected {} qubits (A, B1..B{m}), got {} subsystems of dims {:?}",
            m + 1,
            layout.num_subsystems(),
            layout.dims()
        )));
    }
    Ok(())
}

/// Maps a physical index (a, b1, .., bm) to the protocol index with the
/// auxiliary bits cleared.
fn protocol_index(physical: usize, m: usize) -> usize {
    let n_phys = m + 1;
    let bit = |k: usize| (physical >> (n_phys - 1 - k)) & 1; // k = 0 is A, k = i is B_i
    let n_proto = 2 * m;
    let mut out = bit(1) << (n_proto - 1); // B1 at slot 1
    out |= bit(0) << (n_proto - 2); // A at slot 2
    for i in 2..=m {
        out |= bit(i) << (n_proto - (2 * i - 1)); // B_i at slot 2i-1
    }
    out
}

/// Permutes a physical-register state into protocol order and appends the
/// M - 1 auxiliary qubits in |0>.
pub fn to_protocol_order(psi: &PureState, m: usize) -> Result<PureState> {
    check_physical_register(psi.layout(), m)?;
    let layout = SystemLayout::protocol(m);
    let mut amps = vec![ZERO; layout.total_dim()];
    for (p, &amp) in psi.amplitudes().iter().enumerate() {
        amps[protocol_index(p, m)] = amp;
    }
    Ok(PureState::new_unchecked(layout, amps))
}

/// Density-matrix version of [`to_protocol_order`].
pub fn to_protocol_order_density(rho: &DensityMatrix, m: usize) -> Result<DensityMatrix> {
    check_physical_register(rho.layout(), m)?;
    let layout = SystemLayout::protocol(m);
    let dim = layout.total_dim();
    let mut out = ComplexMatrix::zeros(dim, dim);
    let src = rho.matrix();
    for r in 0..src.rows() {
        let pr = protocol_index(r, m);
        for c in 0..src.cols() {
            out.set(pr, protocol_index(c, m), src.get(r, c));
        }
    }
    Ok(DensityMatrix::new_unchecked(layout, out))
}

/// Applies a 2x2 gate to qubit `slot0` (0-based from the most significant).
pub(crate) fn apply_single_qubit_gate(
    amps: &mut [C64],
    n_qubits: usize,
    slot0: usize,
    u: &ComplexMatrix,
) {
    let mask = 1usize << (n_qubits - 1 - slot0);
    let (u00, u01, u10, u11) = (u.get(0, 0), u.get(0, 1), u.get(1, 0), u.get(1, 1));
    for idx in 0..amps.len() {
        if idx & mask == 0 {
            let j = idx | mask;
            let a0 = amps[idx];
            let a1 = amps[j];
            amps[idx] = u00 * a0 + u01 * a1;
            amps[j] = u10 * a0 + u11 * a1;
        }
    }
}

/// Swaps qubits `i0` and `j0` (0-based from the most significant).
pub(crate) fn swap_qubits(amps: &mut [C64], n_qubits: usize, i0: usize, j0: usize) {
    if i0 == j0 {
        return;
    }
    let mi = 1usize << (n_qubits - 1 - i0);
    let mj = 1usize << (n_qubits - 1 - j0);
    for idx in 0..amps.len() {
        // Visit each mismatched pair once.
        if idx & mi != 0 && idx & mj == 0 {
            let partner = (idx & !mi) | mj;
            amps.swap(idx, partner);
        }
    }
}

/// Applies branch i (1-based): SWAP_{2,2i} then the branch unitary on slot 2i.
fn apply_branch(amps: &mut [C64], m: usize, i: usize, u: &ComplexMatrix) {
    let n = 2 * m;
    swap_qubits(amps, n, 1, 2 * i - 1);
    apply_single_qubit_gate(amps, n, 2 * i - 1, u);
}

/// The multiplexed unitary: block i (in the trailing control index) applies
/// branch i of the letter. Block-diagonal by construction.
pub fn multiplex_unitary(letter: &RoutingLetter, m: usize) -> Result<ComplexMatrix> {
    check_branches(letter, m)?;
    let lab = SystemLayout::protocol(m);
    let lab_dim = lab.total_dim();
    let mut w = ComplexMatrix::zeros(lab_dim * m, lab_dim * m);
    for (i, u) in letter.unitaries().iter().enumerate() {
        let branch =
            embed_operator(u, &lab, &[2 * (i + 1)])?.matmul(&swap_operator(&lab, 2, 2 * (i + 1))?);
        let mut proj = ComplexMatrix::zeros(m, m);
        proj.set(i, i, ONE);
        w = w.add(&kron(&branch, &proj));
    }
    Ok(w)
}

/// Routes a protocol-ordered pure state through the letter and post-selects
/// the |+_M> control outcome. Returns the normalized state and the success
/// probability |(1/M) sum_i branch_i |psi>|^2.
pub fn route_pure(psi: &PureState, letter: &RoutingLetter, m: usize) -> Result<(PureState, f64)> {
    check_branches(letter, m)?;
    check_protocol_register(psi, m)?;
    let dim = psi.dim();
    let mut v = vec![ZERO; dim];
    let scale = 1.0 / m as f64;
    for (i, u) in letter.unitaries().iter().enumerate() {
        let mut branch = psi.amplitudes().to_vec();
        apply_branch(&mut branch, m, i + 1, u);
        for (acc, b) in v.iter_mut().zip(&branch) {
            *acc += b * scale;
        }
    }
    let success = norm2(&v);
    if success < POST_SELECTION_FLOOR {
        return Err(Error::PostSelectionFailure {
            letter: None,
            probability: success,
        });
    }
    let inv = 1.0 / success.sqrt();
    for amp in &mut v {
        *amp *= inv;
    }
    Ok((PureState::new_unchecked(psi.layout().clone(), v), success))
}

/// Probabilities of all M generalized-Hadamard control outcomes; outcome 0 is
/// the post-selected |+_M> branch.
pub fn control_outcome_probabilities(
    psi: &PureState,
    letter: &RoutingLetter,
    m: usize,
) -> Result<Vec<f64>> {
    check_branches(letter, m)?;
    check_protocol_register(psi, m)?;
    let dim = psi.dim();
    let branches: Vec<Vec<C64>> = letter
        .unitaries()
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let mut b = psi.amplitudes().to_vec();
            apply_branch(&mut b, m, i + 1, u);
            b
        })
        .collect();
    let omega = 2.0 * std::f64::consts::PI / m as f64;
    let mut probs = Vec::with_capacity(m);
    for k in 0..m {
        let mut v = vec![ZERO; dim];
        for (j, branch) in branches.iter().enumerate() {
            let phase = C64::from_polar(1.0 / m as f64, -omega * (j * k) as f64);
            for (acc, b) in v.iter_mut().zip(branch) {
                *acc += phase * b;
            }
        }
        probs.push(norm2(&v));
    }
    Ok(probs)
}

/// Routes a mixture of weighted pure components through one letter; the fast
/// path behind the optimizers. Weights must sum to 1. Returns the normalized
/// post-selected components and the overall success probability.
pub fn route_components(
    components: &[(f64, PureState)],
    letter: &RoutingLetter,
    m: usize,
) -> Result<(Vec<(f64, PureState)>, f64)> {
    check_branches(letter, m)?;
    if components.is_empty() {
        return Err(Error::InvalidState("no components".into()));
    }
    let scale = 1.0 / m as f64;
    let mut routed = Vec::with_capacity(components.len());
    let mut success = 0.0;
    for (weight, psi) in components {
        check_protocol_register(psi, m)?;
        let mut v = vec![ZERO; psi.dim()];
        for (i, u) in letter.unitaries().iter().enumerate() {
            let mut branch = psi.amplitudes().to_vec();
            apply_branch(&mut branch, m, i + 1, u);
            for (acc, b) in v.iter_mut().zip(&branch) {
                *acc += b * scale;
            }
        }
        let n2 = norm2(&v);
        success += weight * n2;
        routed.push((weight, v, n2));
    }
    if success < POST_SELECTION_FLOOR {
        return Err(Error::PostSelectionFailure {
            letter: None,
            probability: success,
        });
    }
    let mut out = Vec::with_capacity(routed.len());
    for (weight, mut v, n2) in routed {
        let w_out = weight * n2 / success;
        if w_out < 1e-15 {
            continue;
        }
        let inv = 1.0 / n2.sqrt();
        for amp in &mut v {
            *amp *= inv;
        }
        out.push((
            w_out,
            PureState::new_unchecked(SystemLayout::protocol(m), v),
        ));
    }
    Ok((out, success))
}

/// Literal supermap application on a density matrix over the physical
/// register: permute to protocol order, append auxiliaries and the |+_M>
/// control, conjugate by W_x, project the control on |+_M>, normalize, and
/// trace the control out.
pub fn route_and_postselect(
    rho: &DensityMatrix,
    letter: &RoutingLetter,
    m: usize,
) -> Result<RoutedOutcome> {
    check_branches(letter, m)?;
    let rho_t = to_protocol_order_density(rho, m)?;
    let lab = SystemLayout::protocol(m);
    let lab_dim = lab.total_dim();

    let plus: Vec<C64> = vec![C64::new(1.0 / (m as f64).sqrt(), 0.0); m];
    let mut rho_c = ComplexMatrix::zeros(m, m);
    let mut plus_proj = ComplexMatrix::zeros(m, m);
    for r in 0..m {
        for c in 0..m {
            rho_c.set(r, c, plus[r] * plus[c].conj());
            plus_proj.set(r, c, plus[r] * plus[c].conj());
        }
    }

    let total = kron(rho_t.matrix(), &rho_c);
    let w = multiplex_unitary(letter, m)?;
    let evolved = w.matmul(&total).matmul(&w.dagger());
    let projector = kron(&ComplexMatrix::identity(lab_dim), &plus_proj);
    let projected = projector.matmul(&evolved).matmul(&projector);
    let probability = projected.trace().re;
    if probability < POST_SELECTION_FLOOR {
        return Err(Error::PostSelectionFailure {
            letter: None,
            probability,
        });
    }
    let normalized = projected.scale(C64::new(1.0 / probability, 0.0));
    let extended = lab.with_appended("ctrl", m)?;
    let keep: Vec<usize> = (1..=2 * m).collect();
    let lab_matrix = partial_trace(&normalized, &extended, &keep)?;

    // Dividing by a small success probability amplifies rounding noise; the
    // exact operator is Hermitian and PSD, so fold onto the Hermitian part,
    // renormalize the trace, and clamp eigenvalues buried in that noise. A
    // negative eigenvalue beyond the amplification scale is a real bug.
    let lab_matrix = crate::linalg::hermitian_part(&lab_matrix);
    let trace = lab_matrix.trace().re;
    let lab_matrix = lab_matrix.scale(C64::new(1.0 / trace, 0.0));
    let (values, vectors) = crate::linalg::hermitian_eigen(&lab_matrix)?;
    let noise = (1e-12 / probability).clamp(1e-9, 1e-4);
    let min = values.last().copied().unwrap_or(0.0);
    if min < -noise {
        return Err(Error::NegativeEigenvalue(min));
    }
    let state = if min < 0.0 {
        let clamped: Vec<f64> = values.iter().map(|v| v.max(0.0)).collect();
        let total: f64 = clamped.iter().sum();
        let dim = lab_matrix.rows();
        let mut rebuilt = ComplexMatrix::zeros(dim, dim);
        for (k, lam) in clamped.iter().enumerate() {
            if *lam <= 0.0 {
                continue;
            }
            let w = lam / total;
            for r in 0..dim {
                let vr = vectors.get(r, k);
                for c in 0..dim {
                    let entry = rebuilt.get(r, c) + vr * vectors.get(c, k).conj() * w;
                    rebuilt.set(r, c, entry);
                }
            }
        }
        DensityMatrix::new_unchecked(lab, rebuilt)
    } else {
        DensityMatrix::new_unchecked(lab, lab_matrix)
    };
    Ok(RoutedOutcome {
        state,
        success_probability: probability,
    })
}

/// Encoded ensemble {p_X(x), rho_x}: probabilities carried over from the
/// scheme unchanged, each rho_x normalized separately by its own success.
pub fn encode_ensemble(rho: &DensityMatrix, scheme: &EncodingScheme, m: usize) -> Result<Ensemble> {
    encode_ensemble_opts(rho, scheme, m, false)
}

/// Same, with an optional reweighting of the letter probabilities by each
/// letter's post-selection success (off in the standard protocol; kept for
/// sensitivity analysis).
pub fn encode_ensemble_opts(
    rho: &DensityMatrix,
    scheme: &EncodingScheme,
    m: usize,
    reweight_by_success: bool,
) -> Result<Ensemble> {
    scheme.validate()?;
    let mut entries = Vec::with_capacity(scheme.alphabet_size());
    let mut successes = Vec::with_capacity(scheme.alphabet_size());
    for (x, letter) in scheme.letters.iter().enumerate() {
        let routing_letter = RoutingLetter::from_params(&letter.unitaries)?;
        let outcome = route_and_postselect(rho, &routing_letter, m).map_err(|e| match e {
            Error::PostSelectionFailure { probability, .. } => Error::PostSelectionFailure {
                letter: Some(x),
                probability,
            },
            other => other,
        })?;
        successes.push(outcome.success_probability);
        entries.push((letter.probability, outcome.state));
    }
    if reweight_by_success {
        let total: f64 = entries
            .iter()
            .zip(&successes)
            .map(|((p, _), s)| p * s)
            .sum();
        for ((p, _), s) in entries.iter_mut().zip(&successes) {
            *p = *p * s / total;
        }
    }
    Ensemble::new(entries)
}
