//! Information-theoretic functionals: entropies, Holevo quantities, the
//! standard dense-coding capacities, LOCC bounds, and one-way-LOCC mutual
//! information. All returns are in bits (base-2 logarithms).

use serde::{Deserialize, Serialize};

use crate::encoding::{two_qubit_unitary_kak, TwoQubitUnitaryParams};
use crate::error::{Error, Result};
use crate::linalg::{embed_operator, hermitian_spectrum, ComplexMatrix, C64};
use crate::states::DensityMatrix;

const EIG_CLAMP: f64 = 1e-9;
const PROB_FLOOR: f64 = 1e-15;

/// Classical-quantum ensemble: probabilities and states on a shared register.
#[derive(Clone, Debug)]
pub struct Ensemble {
    entries: Vec<(f64, DensityMatrix)>,
}

impl Ensemble {
    pub fn new(entries: Vec<(f64, DensityMatrix)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidState("ensemble must be nonempty".into()));
        }
        let dim = entries[0].1.dim();
        if entries.iter().any(|(_, rho)| rho.dim() != dim) {
            return Err(Error::DimensionMismatch(
                "ensemble members must share a register".into(),
            ));
        }
        let total: f64 = entries.iter().map(|(p, _)| p).sum();
        if entries.iter().any(|(p, _)| *p < 0.0) || (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidProbabilities(format!(
                "ensemble weights must be nonnegative and sum to 1 (got {total})"
            )));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(f64, DensityMatrix)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The density matrix of the ensemble, sum_x p_x rho_x.
    pub fn average_state(&self) -> DensityMatrix {
        let dim = self.entries[0].1.dim();
        let mut acc = ComplexMatrix::zeros(dim, dim);
        for (p, rho) in &self.entries {
            acc = acc.add(&rho.matrix().scale(C64::new(*p, 0.0)));
        }
        DensityMatrix::new_unchecked(self.entries[0].1.layout().clone(), acc)
    }
}

/// -sum lambda log2 lambda with 0 log 0 = 0; eigenvalues in [-1e-9, 0) are
/// clamped to zero, anything more negative is an invariant violation.
pub fn entropy_of_spectrum(spectrum: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &lam in spectrum {
        if lam < -EIG_CLAMP {
            return Err(Error::NegativeEigenvalue(lam));
        }
        if lam > PROB_FLOOR {
            s -= lam * lam.log2();
        }
    }
    Ok(s)
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    entropy_of_spectrum(&hermitian_spectrum(rho.matrix())?)
}

/// Binary entropy H(p) in bits.
pub fn binary_entropy(p: f64) -> f64 {
    let mut h = 0.0;
    for q in [p, 1.0 - p] {
        if q > PROB_FLOOR {
            h -= q * q.log2();
        }
    }
    h
}

/// Holevo quantity S(rho_bar) - sum_x p_x S(rho_x), clamped to be nonnegative
/// against rounding.
pub fn holevo_quantity(ensemble: &Ensemble) -> Result<f64> {
    let average = ensemble.average_state();
    let mut chi = von_neumann_entropy(&average)?;
    for (p, rho) in ensemble.entries() {
        if *p > PROB_FLOOR {
            chi -= p * von_neumann_entropy(rho)?;
        }
    }
    if chi < -EIG_CLAMP {
        return Err(Error::OptimizationFailure(format!(
            "Holevo quantity {chi} is negative beyond numerical slack"
        )));
    }
    Ok(chi.max(0.0))
}

/// Standard two-receiver dense-coding capacity of the generalized GHZ state:
/// 1 + H(cos^2(theta/2)), evaluated periodically in theta.
pub fn chi_sdc_gghz(theta: f64) -> f64 {
    let c2 = (theta / 2.0).cos().powi(2);
    1.0 + binary_entropy(c2)
}

/// Dense-coding capacity formula log2(d_sender) + S(rho_B) - S(rho_AB) for a
/// designated sender subsystem (1-based). `apply_floor` clamps at
/// log2(d_sender) for states that are not dense-codeable.
pub fn chi_dc_bipartite(rho: &DensityMatrix, sender: usize, apply_floor: bool) -> Result<f64> {
    let d_sender = rho.layout().dim_of(sender)?;
    let keep: Vec<usize> = (1..=rho.layout().num_subsystems())
        .filter(|&k| k != sender)
        .collect();
    if keep.is_empty() {
        return Err(Error::InvalidState(
            "bipartite formula needs a receiver subsystem".into(),
        ));
    }
    let receiver = rho.reduced(&keep)?;
    let log_d = (d_sender as f64).log2();
    let value = log_d + von_neumann_entropy(&receiver)? - von_neumann_entropy(rho)?;
    Ok(if apply_floor { value.max(log_d) } else { value })
}

/// Upper bound on locally accessible information:
/// S(rho_A) + S(rho_B) - max_{Z=A,B} sum_x p_x S(rho_Z^x).
pub fn locc_accessible_upper_bound(ensemble: &Ensemble, side_a: &[usize]) -> Result<f64> {
    let layout = ensemble.entries()[0].1.layout().clone();
    let all: Vec<usize> = (1..=layout.num_subsystems()).collect();
    let side_b: Vec<usize> = all
        .iter()
        .copied()
        .filter(|k| !side_a.contains(k))
        .collect();
    if side_a.is_empty() || side_b.is_empty() {
        return Err(Error::InvalidState("bipartition must be nontrivial".into()));
    }
    let average = ensemble.average_state();
    let s_a = von_neumann_entropy(&average.reduced(side_a)?)?;
    let s_b = von_neumann_entropy(&average.reduced(&side_b)?)?;

    let mut member_a = 0.0;
    let mut member_b = 0.0;
    for (p, rho) in ensemble.entries() {
        if *p <= PROB_FLOOR {
            continue;
        }
        member_a += p * von_neumann_entropy(&rho.reduced(side_a)?)?;
        member_b += p * von_neumann_entropy(&rho.reduced(&side_b)?)?;
    }
    Ok(s_a + s_b - member_a.max(member_b))
}

/// Joint distribution over (x, y); rows index x.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JointDistribution {
    x_count: usize,
    y_count: usize,
    probs: Vec<f64>,
}

impl JointDistribution {
    pub fn new(x_count: usize, y_count: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != x_count * y_count {
            return Err(Error::DimensionMismatch(format!(
                "expected {} probabilities, got {}",
                x_count * y_count,
                probs.len()
            )));
        }
        if probs.iter().any(|p| *p < -1e-12 || !p.is_finite()) {
            return Err(Error::InvalidProbabilities(
                "negative joint probability".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidProbabilities(format!(
                "joint distribution sums to {total}"
            )));
        }
        Ok(Self {
            x_count,
            y_count,
            probs: probs.into_iter().map(|p| p.max(0.0)).collect(),
        })
    }

    pub fn x_count(&self) -> usize {
        self.x_count
    }

    pub fn y_count(&self) -> usize {
        self.y_count
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.probs[x * self.y_count + y]
    }

    pub fn x_marginal(&self) -> Vec<f64> {
        (0..self.x_count)
            .map(|x| (0..self.y_count).map(|y| self.prob(x, y)).sum())
            .collect()
    }

    pub fn y_marginal(&self) -> Vec<f64> {
        (0..self.y_count)
            .map(|y| (0..self.x_count).map(|x| self.prob(x, y)).sum())
            .collect()
    }
}

/// Mutual information I(X;Y) in bits; zero-probability cells contribute zero.
pub fn mutual_information(joint: &JointDistribution) -> f64 {
    let px = joint.x_marginal();
    let py = joint.y_marginal();
    let mut mi = 0.0;
    for (x, px_val) in px.iter().enumerate() {
        for (y, py_val) in py.iter().enumerate() {
            let p = joint.prob(x, y);
            if p > PROB_FLOOR {
                mi += p * (p / (px_val * py_val)).log2();
            }
        }
    }
    mi.max(0.0)
}

/// One-way LOCC decoding scheme: Bob1's rank-one projective measurement (from
/// a two-qubit KAK unitary) and one conditional measurement per outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Locc1Scheme {
    pub bob1_unitary: TwoQubitUnitaryParams,
    pub bob2_conditional: [TwoQubitUnitaryParams; 4],
}

impl Locc1Scheme {
    /// Complete rank-one projective measurement {U|i><i|U^dag}.
    pub fn projectors(params: &TwoQubitUnitaryParams) -> [ComplexMatrix; 4] {
        let u = two_qubit_unitary_kak(params);
        std::array::from_fn(|i| {
            let mut proj = ComplexMatrix::zeros(4, 4);
            for r in 0..4 {
                for c in 0..4 {
                    proj.set(r, c, u.get(r, i) * u.get(c, i).conj());
                }
            }
            proj
        })
    }

    pub fn bob1_projectors(&self) -> [ComplexMatrix; 4] {
        Self::projectors(&self.bob1_unitary)
    }

    pub fn bob2_projectors(&self, y1: usize) -> [ComplexMatrix; 4] {
        Self::projectors(&self.bob2_conditional[y1])
    }
}

/// Chain-rule decomposition of I(X;Y1Y2) together with the full joint
/// distribution it was computed from.
#[derive(Clone, Debug)]
pub struct Locc1Breakdown {
    /// I(X;Y1Y2) computed directly from the joint distribution.
    pub total: f64,
    /// I(X;Y1) from the (x, y1) marginal.
    pub i_x_y1: f64,
    /// Per-outcome terms (p(y1), I(X;Y2|Y1=y1)); zero-probability branches
    /// are recorded with both entries zero.
    pub conditional: Vec<(f64, f64)>,
    /// Joint over (x, (y1, y2)) with y = 4*y1 + y2.
    pub joint: JointDistribution,
}

impl Locc1Breakdown {
    /// I(X;Y1) + sum_y1 p(y1) I(X;Y2|Y1=y1); equals `total` up to rounding.
    pub fn chain_rule_total(&self) -> f64 {
        self.i_x_y1 + self.conditional.iter().map(|(p, mi)| p * mi).sum::<f64>()
    }
}

/// Extractable information of a two-lab ensemble under the one-way LOCC
/// protocol: Bob1 measures, communicates the outcome, Bob2 measures
/// conditionally. Labs are the first two and last two qubits of the register.
pub fn locc1_mutual_information(
    ensemble: &Ensemble,
    scheme: &Locc1Scheme,
) -> Result<Locc1Breakdown> {
    let layout = ensemble.entries()[0].1.layout().clone();
    if layout.num_subsystems() != 4 || layout.dims() != vec![2, 2, 2, 2] {
        return Err(Error::DimensionMismatch(
            "one-way LOCC decoding expects two two-qubit labs".into(),
        ));
    }
    let nx = ensemble.len();
    let bob1 = scheme.bob1_projectors();
    let bob1_embedded: Vec<ComplexMatrix> = bob1
        .iter()
        .map(|p| embed_operator(p, &layout, &[1, 2]).unwrap())
        .collect();

    let mut joint = vec![0.0f64; nx * 16];
    for (x, (px, rho)) in ensemble.entries().iter().enumerate() {
        for y1 in 0..4 {
            let projected = bob1_embedded[y1]
                .matmul(rho.matrix())
                .matmul(&bob1_embedded[y1]);
            let p_y1 = projected.trace().re.max(0.0);
            if p_y1 <= PROB_FLOOR {
                continue;
            }
            let post = projected.scale(C64::new(1.0 / p_y1, 0.0));
            let bob2 = scheme.bob2_projectors(y1);
            for (y2, lambda) in bob2.iter().enumerate() {
                let lambda_embedded = embed_operator(lambda, &layout, &[3, 4])?;
                let p_y2 = lambda_embedded.matmul(&post).trace().re.max(0.0);
                joint[x * 16 + y1 * 4 + y2] = px * p_y1 * p_y2;
            }
        }
    }
    breakdown_from_joint(nx, joint)
}

/// Builds the chain-rule breakdown from a flat p(x, y1, y2) table with
/// y1, y2 in 0..4.
pub(crate) fn breakdown_from_joint(nx: usize, joint: Vec<f64>) -> Result<Locc1Breakdown> {
    let dist = JointDistribution::new(nx, 16, joint)?;
    let total = mutual_information(&dist);

    // (x, y1) marginal.
    let mut xy1 = vec![0.0f64; nx * 4];
    for x in 0..nx {
        for y1 in 0..4 {
            xy1[x * 4 + y1] = (0..4).map(|y2| dist.prob(x, y1 * 4 + y2)).sum();
        }
    }
    let i_x_y1 = mutual_information(&JointDistribution::new(nx, 4, xy1.clone())?);

    let mut conditional = Vec::with_capacity(4);
    for y1 in 0..4 {
        let p_y1: f64 = (0..nx).map(|x| xy1[x * 4 + y1]).sum();
        if p_y1 <= PROB_FLOOR {
            conditional.push((0.0, 0.0));
            continue;
        }
        let mut cond = vec![0.0f64; nx * 4];
        for x in 0..nx {
            for y2 in 0..4 {
                cond[x * 4 + y2] = dist.prob(x, y1 * 4 + y2) / p_y1;
            }
        }
        let mi = mutual_information(&JointDistribution::new(nx, 4, cond)?);
        conditional.push((p_y1, mi));
    }

    Ok(Locc1Breakdown {
        total,
        i_x_y1,
        conditional,
        joint: dist,
    })
}
