//! Optimization drivers maximizing the information functionals over encoding
//! (and decoding) parameters, plus figures of merit and theta sweeps.
//!
//! The objectives run on a fast path that keeps states as weighted pure
//! components and reads entropies off small Gram-matrix spectra; every
//! reported optimum is recomputed through the literal density-matrix pipeline
//! before it is returned.

use serde::{Deserialize, Serialize};

use crate::encoding::{
    to_simplex, EncodingLetter, EncodingScheme, SingleQubitUnitaryParams, TwoQubitUnitaryParams,
};
use crate::error::{Error, Result};
use crate::information::{holevo_quantity, locc1_mutual_information, Locc1Scheme};
use crate::linalg::{hermitian_spectrum, ComplexMatrix, SystemLayout, C64};
use crate::optim::{derive_seed, maximize, BfgsOptions, SplitMix64};
use crate::routing::{encode_ensemble, route_components, to_protocol_order, RoutingLetter};
use crate::states::{
    gghz_amplitudes_unchecked, separable_mixed_state, BlochVector, DensityMatrix, PureState,
    SeparableTerm,
};

/// Letters whose post-selection success drops below this floor during line
/// search are penalized rather than raised as errors, keeping the search
/// smooth near destructive-interference regions.
const SUCCESS_GUARD: f64 = 1e-9;
const PENALTY_BASE: f64 = -100.0;
const COMPONENT_TOL: f64 = 1e-12;

/// How the letter probabilities are treated during optimization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbabilityMode {
    /// Softmax-parameterized probabilities optimized jointly.
    Free,
    /// Probabilities pinned to 1/|X|.
    Uniform,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct OptimizationConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    pub seed: u64,
    pub gradient_step: f64,
    pub convergence_tolerance: f64,
    pub probability_mode: ProbabilityMode,
}

impl Default for OptimizationConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_iterations: 300,
            seed: 7,
            gradient_step: 1e-6,
            convergence_tolerance: 1e-9,
            probability_mode: ProbabilityMode::Free,
        }
    }
}

impl OptimizationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be >= 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be >= 1".into()));
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.gradient_step) || !positive(self.convergence_tolerance) {
            return Err(Error::InvalidConfig(
                "gradient step and tolerance must be positive".into(),
            ));
        }
        Ok(())
    }

    fn bfgs(&self) -> BfgsOptions {
        BfgsOptions {
            max_iterations: self.max_iterations,
            gradient_step: self.gradient_step,
            tolerance: self.convergence_tolerance,
        }
    }
}

/// Result of a multi-restart capacity optimization. `best_value` is a lower
/// bound on the true capacity: local search can only undershoot.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CapacityResult {
    pub best_value: f64,
    pub best_scheme: EncodingScheme,
    pub best_locc1: Option<Locc1Scheme>,
    pub best_theta: Option<f64>,
    pub best_state_terms: Option<Vec<SeparableTerm>>,
    pub per_restart_values: Vec<f64>,
    pub converged: bool,
    pub wall_time: f64,
    /// Raw parameter vector of the winner; round-trips through checkpoints to
    /// warm-start later runs.
    pub best_params: Vec<f64>,
}

impl CapacityResult {
    pub fn restarts_used(&self) -> usize {
        self.per_restart_values.len()
    }
}

/// Delta figure of merit: chi_ncr - (chi_sdc + log2 M), the capacity gain
/// after paying for the classical control-outcome broadcast.
pub fn figure_of_merit(chi_ncr: f64, chi_sdc: f64, m: usize) -> f64 {
    assert!(m >= 2, "figure of merit defined for M >= 2");
    chi_ncr - (chi_sdc + (m as f64).log2())
}

#[cfg(not(target_arch = "wasm32"))]
fn elapsed_secs(start: std::time::Instant) -> f64 {
    start.elapsed().as_secs_f64()
}

#[cfg(not(target_arch = "wasm32"))]
fn clock() -> std::time::Instant {
    std::time::Instant::now()
}

#[cfg(target_arch = "wasm32")]
#[derive(Clone, Copy)]
struct WasmClock;

#[cfg(target_arch = "wasm32")]
fn clock() -> WasmClock {
    WasmClock
}

#[cfg(target_arch = "wasm32")]
fn elapsed_secs(_start: WasmClock) -> f64 {
    0.0
}

/// Caps the parallel-restart thread pool; reads of `None` leave the default.
#[cfg(feature = "parallel")]
pub fn configure_threads(limit: Option<usize>) {
    if let Some(n) = limit {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

#[cfg(not(feature = "parallel"))]
pub fn configure_threads(_limit: Option<usize>) {}

// ---------------------------------------------------------------------------
// Parameter spaces
// ---------------------------------------------------------------------------

/// Packing of an encoding scheme into a flat parameter vector: per letter the
/// first branch is special-unitary (3 Euler angles) and every later branch
/// carries a free global phase (4 angles); free-probability mode appends one
/// softmax logit per letter.
#[derive(Clone, Copy, Debug)]
struct SchemeSpace {
    alphabet: usize,
    branches: usize,
    free_probs: bool,
}

impl SchemeSpace {
    fn new(alphabet: usize, branches: usize, mode: ProbabilityMode) -> Self {
        Self {
            alphabet,
            branches,
            free_probs: mode == ProbabilityMode::Free,
        }
    }

    fn angle_count(&self) -> usize {
        self.alphabet * (3 + 4 * (self.branches - 1))
    }

    fn dim(&self) -> usize {
        self.angle_count() + if self.free_probs { self.alphabet } else { 0 }
    }

    fn init(&self, rng: &mut SplitMix64) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.dim());
        for _ in 0..self.angle_count() {
            x.push(rng.range(0.0, 2.0 * std::f64::consts::PI));
        }
        if self.free_probs {
            for _ in 0..self.alphabet {
                x.push(rng.normal());
            }
        }
        x
    }

    fn decode(&self, x: &[f64]) -> EncodingScheme {
        let mut letters = Vec::with_capacity(self.alphabet);
        let mut idx = 0;
        for _ in 0..self.alphabet {
            let mut unitaries = Vec::with_capacity(self.branches);
            unitaries.push(SingleQubitUnitaryParams::special(
                x[idx],
                x[idx + 1],
                x[idx + 2],
            ));
            idx += 3;
            for _ in 1..self.branches {
                unitaries.push(SingleQubitUnitaryParams::with_phase(
                    x[idx],
                    x[idx + 1],
                    x[idx + 2],
                    x[idx + 3],
                ));
                idx += 4;
            }
            letters.push(EncodingLetter {
                probability: 0.0,
                unitaries,
            });
        }
        let probs = if self.free_probs {
            to_simplex(&x[idx..idx + self.alphabet])
        } else {
            vec![1.0 / self.alphabet as f64; self.alphabet]
        };
        for (letter, p) in letters.iter_mut().zip(probs) {
            letter.probability = p;
        }
        EncodingScheme { letters }
    }
}

const KAK_PARAMS: usize = 19;

fn decode_two_qubit(x: &[f64]) -> TwoQubitUnitaryParams {
    let single =
        |o: usize| SingleQubitUnitaryParams::with_phase(x[o], x[o + 1], x[o + 2], x[o + 3]);
    TwoQubitUnitaryParams {
        a: single(0),
        b: single(4),
        c: single(8),
        d: single(12),
        alphas: [x[16], x[17], x[18]],
    }
}

fn init_two_qubit(rng: &mut SplitMix64, x: &mut Vec<f64>) {
    for _ in 0..16 {
        x.push(rng.range(0.0, 2.0 * std::f64::consts::PI));
    }
    for _ in 0..3 {
        x.push(rng.range(0.0, std::f64::consts::FRAC_PI_2));
    }
}

// ---------------------------------------------------------------------------
// Fast-path entropy of weighted pure mixtures
// ---------------------------------------------------------------------------

/// Entropy of sum_j w_j |v_j><v_j| from the spectrum of the Gram matrix
/// G[j][k] = sqrt(w_j w_k) <v_j|v_k>, which shares its nonzero spectrum with
/// the mixture.
pub(crate) fn mixture_entropy(parts: &[(f64, &[C64])]) -> Result<f64> {
    if parts.len() == 1 {
        return Ok(0.0);
    }
    let n = parts.len();
    let mut gram = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        gram.set(j, j, C64::new(parts[j].0, 0.0));
        for k in (j + 1)..n {
            let ip: C64 = parts[j]
                .1
                .iter()
                .zip(parts[k].1)
                .map(|(a, b)| a.conj() * b)
                .sum();
            let scaled = ip * (parts[j].0 * parts[k].0).sqrt();
            gram.set(j, k, scaled);
            gram.set(k, j, scaled.conj());
        }
    }
    crate::information::entropy_of_spectrum(&hermitian_spectrum(&gram)?)
}

fn protocol_components(rho: &DensityMatrix, m: usize) -> Result<Vec<(f64, PureState)>> {
    let raw = rho.pure_components(COMPONENT_TOL)?;
    let total: f64 = raw.iter().map(|(w, _)| w).sum();
    raw.into_iter()
        .map(|(w, psi)| Ok((w / total, to_protocol_order(&psi, m)?)))
        .collect()
}

/// Post-selected weighted components of one routed letter plus its success
/// probability.
type RoutedLetter = (Vec<(f64, PureState)>, f64);

/// Routed ensemble in component form: per letter the post-selected weighted
/// components and the success probability.
fn route_scheme(
    components: &[(f64, PureState)],
    scheme: &EncodingScheme,
    m: usize,
) -> Result<Vec<RoutedLetter>> {
    scheme
        .letters
        .iter()
        .map(|letter| {
            let rl = RoutingLetter::from_params(&letter.unitaries)?;
            route_components(components, &rl, m)
        })
        .collect()
}

/// Holevo quantity of the routed component ensemble; the fast objective.
fn fast_holevo(components: &[(f64, PureState)], scheme: &EncodingScheme, m: usize) -> Result<f64> {
    let routed = route_scheme(components, scheme, m)?;
    let mut average: Vec<(f64, &[C64])> = Vec::new();
    let mut member_term = 0.0;
    for ((parts, _), letter) in routed.iter().zip(&scheme.letters) {
        let p = letter.probability;
        let refs: Vec<(f64, &[C64])> = parts.iter().map(|(w, v)| (*w, v.amplitudes())).collect();
        member_term += p * mixture_entropy(&refs)?;
        for (w, v) in parts {
            if p * w > 1e-15 {
                average.push((p * w, v.amplitudes()));
            }
        }
    }
    Ok((mixture_entropy(&average)? - member_term).max(0.0))
}

/// Objective wrapper applying the destructive-interference penalty.
fn guarded_objective<F: Fn(&EncodingScheme) -> Result<(f64, Vec<f64>)>>(
    scheme: &EncodingScheme,
    eval: F,
) -> f64 {
    match eval(scheme) {
        Ok((value, successes)) => {
            let mut shortfall = 0.0;
            for s in &successes {
                if *s < SUCCESS_GUARD {
                    shortfall += SUCCESS_GUARD - s;
                }
            }
            if shortfall > 0.0 {
                PENALTY_BASE - shortfall * 1e9
            } else {
                value
            }
        }
        Err(_) => PENALTY_BASE * 10.0,
    }
}

// ---------------------------------------------------------------------------
// Multi-restart driver
// ---------------------------------------------------------------------------

struct Candidate {
    value: f64,
    x: Vec<f64>,
    converged: bool,
}

fn run_candidates<F, I>(
    cfg: &OptimizationConfig,
    init: I,
    objective: F,
    warm_starts: &[Vec<f64>],
) -> Vec<Candidate>
where
    F: Fn(&[f64]) -> f64 + Sync,
    I: Fn(&mut SplitMix64) -> Vec<f64> + Sync,
{
    let total = cfg.restarts + warm_starts.len();
    let starts: Vec<Vec<f64>> = (0..total)
        .map(|i| {
            if i < cfg.restarts {
                let mut rng = SplitMix64::new(derive_seed(cfg.seed, i as u64));
                init(&mut rng)
            } else {
                warm_starts[i - cfg.restarts].clone()
            }
        })
        .collect();
    let opts = cfg.bfgs();
    let run_one = |x0: Vec<f64>| {
        let out = maximize(&objective, x0, &opts);
        Candidate {
            value: out.value,
            x: out.x,
            converged: out.converged,
        }
    };

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        starts.into_par_iter().map(run_one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        starts.into_iter().map(run_one).collect()
    }
}

/// First candidate attaining the maximum within 1e-10 wins.
fn pick_winner(candidates: &[Candidate]) -> Result<usize> {
    let max = candidates
        .iter()
        .map(|c| c.value)
        .fold(f64::NEG_INFINITY, f64::max);
    if max < PENALTY_BASE / 2.0 {
        return Err(Error::OptimizationFailure(
            "every restart ended in post-selection failure".into(),
        ));
    }
    Ok(candidates
        .iter()
        .position(|c| c.value >= max - 1e-10)
        .expect("nonempty candidate list"))
}

// ---------------------------------------------------------------------------
// Global capacity
// ---------------------------------------------------------------------------

fn optimize_global_inner(
    rho: &DensityMatrix,
    m: usize,
    alphabet_size: usize,
    cfg: &OptimizationConfig,
    warm_starts: &[Vec<f64>],
) -> Result<CapacityResult> {
    cfg.validate()?;
    if alphabet_size == 0 {
        return Err(Error::InvalidConfig("alphabet size must be >= 1".into()));
    }
    let start = clock();
    let components = protocol_components(rho, m)?;
    let space = SchemeSpace::new(alphabet_size, m, cfg.probability_mode);

    let objective = |x: &[f64]| {
        let scheme = space.decode(x);
        guarded_objective(&scheme, |s| {
            let routed = route_scheme(&components, s, m)?;
            let successes: Vec<f64> = routed.iter().map(|(_, p)| *p).collect();
            let value = fast_holevo(&components, s, m)?;
            Ok((value, successes))
        })
    };

    let candidates = run_candidates(cfg, |rng| space.init(rng), objective, warm_starts);
    let winner = pick_winner(&candidates)?;
    let best = &candidates[winner];
    let best_scheme = space.decode(&best.x);

    // Recompute the winning value through the literal density-matrix path.
    let literal = holevo_quantity(&encode_ensemble(rho, &best_scheme, m)?)?;
    if (literal - best.value).abs() > 1e-6 {
        return Err(Error::OptimizationFailure(format!(
            "fast path ({}) and density path ({literal}) disagree",
            best.value
        )));
    }

    Ok(CapacityResult {
        best_value: literal,
        best_scheme,
        best_locc1: None,
        best_theta: None,
        best_state_terms: None,
        per_restart_values: candidates.iter().map(|c| c.value).collect(),
        converged: best.converged,
        wall_time: elapsed_secs(start),
        best_params: best.x.clone(),
    })
}

/// Maximizes the Holevo quantity of the routed ensemble over all encoding
/// parameters; the returned best value is a lower bound on the capacity.
pub fn optimize_global_capacity(
    rho: &DensityMatrix,
    m: usize,
    alphabet_size: usize,
    cfg: &OptimizationConfig,
) -> Result<CapacityResult> {
    optimize_global_inner(rho, m, alphabet_size, cfg, &[])
}

/// Same as [`optimize_global_capacity`] with extra warm-start parameter
/// vectors appended to the restart list (used by sweeps and `--resume`).
pub fn optimize_global_capacity_warm(
    rho: &DensityMatrix,
    m: usize,
    alphabet_size: usize,
    cfg: &OptimizationConfig,
    warm_starts: &[Vec<f64>],
) -> Result<CapacityResult> {
    optimize_global_inner(rho, m, alphabet_size, cfg, warm_starts)
}

// ---------------------------------------------------------------------------
// One-way LOCC capacity
// ---------------------------------------------------------------------------

fn decode_locc1(
    space: &SchemeSpace,
    theta_free: bool,
    x: &[f64],
) -> (EncodingScheme, Locc1Scheme, Option<f64>) {
    let scheme = space.decode(&x[..space.dim()]);
    let mut off = space.dim();
    let bob1 = decode_two_qubit(&x[off..off + KAK_PARAMS]);
    off += KAK_PARAMS;
    let bob2 = std::array::from_fn(|i| {
        decode_two_qubit(&x[off + i * KAK_PARAMS..off + (i + 1) * KAK_PARAMS])
    });
    off += 4 * KAK_PARAMS;
    let theta = theta_free.then(|| x[off]);
    (
        scheme,
        Locc1Scheme {
            bob1_unitary: bob1,
            bob2_conditional: bob2,
        },
        theta,
    )
}

/// I(X;Y1Y2) of a routed component ensemble under a rank-one projective
/// one-way scheme; pure linear algebra on 4x4 blocks.
fn fast_locc1_joint(
    routed: &[(Vec<(f64, PureState)>, f64)],
    probabilities: &[f64],
    scheme: &Locc1Scheme,
) -> Vec<f64> {
    let u1 = crate::encoding::two_qubit_unitary_kak(&scheme.bob1_unitary);
    let v2: Vec<ComplexMatrix> = (0..4)
        .map(|y1| crate::encoding::two_qubit_unitary_kak(&scheme.bob2_conditional[y1]))
        .collect();
    let nx = routed.len();
    let mut joint = vec![0.0f64; nx * 16];
    for (x, (parts, _)) in routed.iter().enumerate() {
        let px = probabilities[x];
        for (w, psi) in parts {
            let amps = psi.amplitudes();
            // Reshape |v> into the 4x4 block M[a][b], a = lab-1 index.
            // Rows of U^dag M are Bob1's unnormalized post-measurement kets.
            for y1 in 0..4 {
                let mut row = [C64::new(0.0, 0.0); 4];
                for (a, row_amp) in amps.chunks_exact(4).enumerate() {
                    let coeff = u1.get(a, y1).conj();
                    for (b, amp) in row_amp.iter().enumerate() {
                        row[b] += coeff * amp;
                    }
                }
                let v = &v2[y1];
                for y2 in 0..4 {
                    let mut t = C64::new(0.0, 0.0);
                    for (b, r) in row.iter().enumerate() {
                        t += r * v.get(b, y2).conj();
                    }
                    joint[x * 16 + y1 * 4 + y2] += px * w * t.norm_sqr();
                }
            }
        }
    }
    joint
}

fn mi_from_joint(nx: usize, joint: &[f64]) -> f64 {
    let ny = joint.len() / nx;
    let mut px = vec![0.0; nx];
    let mut py = vec![0.0; ny];
    for x in 0..nx {
        for y in 0..ny {
            let p = joint[x * ny + y];
            px[x] += p;
            py[y] += p;
        }
    }
    let mut mi = 0.0;
    for x in 0..nx {
        for y in 0..ny {
            let p = joint[x * ny + y];
            if p > 1e-15 {
                mi += p * (p / (px[x] * py[y])).log2();
            }
        }
    }
    mi.max(0.0)
}

fn optimize_locc1_inner(
    fixed_components: Option<Vec<(f64, PureState)>>,
    input: Option<&DensityMatrix>,
    alphabet_size: usize,
    cfg: &OptimizationConfig,
    warm_starts: &[Vec<f64>],
) -> Result<CapacityResult> {
    cfg.validate()?;
    if alphabet_size == 0 {
        return Err(Error::InvalidConfig("alphabet size must be >= 1".into()));
    }
    let start = clock();
    let m = 2usize;
    let theta_free = fixed_components.is_none();
    let space = SchemeSpace::new(alphabet_size, m, cfg.probability_mode);

    let objective = |x: &[f64]| {
        let (scheme, locc1, theta) = decode_locc1(&space, theta_free, x);
        let components = match (&fixed_components, theta) {
            (Some(c), _) => c.clone(),
            (None, Some(theta)) => {
                let phys = gghz_amplitudes_unchecked(SystemLayout::physical(2), theta, 0.0);
                vec![(1.0, to_protocol_order(&phys, 2).expect("physical register"))]
            }
            _ => unreachable!(),
        };
        guarded_objective(&scheme, |s| {
            let routed = route_scheme(&components, s, m)?;
            let successes: Vec<f64> = routed.iter().map(|(_, p)| *p).collect();
            let probs: Vec<f64> = s.letters.iter().map(|l| l.probability).collect();
            let joint = fast_locc1_joint(&routed, &probs, &locc1);
            Ok((mi_from_joint(s.letters.len(), &joint), successes))
        })
    };

    let init = |rng: &mut SplitMix64| {
        let mut x = space.init(rng);
        for _ in 0..5 {
            init_two_qubit(rng, &mut x);
        }
        if theta_free {
            x.push(rng.range(0.0, 2.0 * std::f64::consts::PI));
        }
        x
    };

    let candidates = run_candidates(cfg, init, objective, warm_starts);
    let winner = pick_winner(&candidates)?;
    let best = &candidates[winner];
    let (best_scheme, best_locc1, best_theta) = decode_locc1(&space, theta_free, &best.x);
    let best_theta = best_theta.map(|t| t.rem_euclid(2.0 * std::f64::consts::PI));

    // Literal recompute through the density-matrix pipeline.
    let rho = match (input, best_theta) {
        (Some(rho), _) => rho.clone(),
        (None, Some(theta)) => {
            gghz_amplitudes_unchecked(SystemLayout::physical(2), theta, 0.0).to_density()
        }
        _ => unreachable!(),
    };
    let ensemble = encode_ensemble(&rho, &best_scheme, m)?;
    let literal = locc1_mutual_information(&ensemble, &best_locc1)?.total;
    if (literal - best.value).abs() > 1e-6 {
        return Err(Error::OptimizationFailure(format!(
            "fast path ({}) and density path ({literal}) disagree",
            best.value
        )));
    }

    Ok(CapacityResult {
        best_value: literal,
        best_scheme,
        best_locc1: Some(best_locc1),
        best_theta,
        best_state_terms: None,
        per_restart_values: candidates.iter().map(|c| c.value).collect(),
        converged: best.converged,
        wall_time: elapsed_secs(start),
        best_params: best.x.clone(),
    })
}

/// Jointly maximizes I(X;Y1Y2) over encoding parameters and the one-way
/// rank-one projective decoding scheme for a fixed two-receiver input state.
pub fn optimize_locc1(
    rho: &DensityMatrix,
    alphabet_size: usize,
    cfg: &OptimizationConfig,
) -> Result<CapacityResult> {
    let components = protocol_components(rho, 2)?;
    optimize_locc1_inner(Some(components), Some(rho), alphabet_size, cfg, &[])
}

/// [`optimize_locc1`] with extra warm-start parameter vectors.
pub fn optimize_locc1_warm(
    rho: &DensityMatrix,
    alphabet_size: usize,
    cfg: &OptimizationConfig,
    warm_starts: &[Vec<f64>],
) -> Result<CapacityResult> {
    let components = protocol_components(rho, 2)?;
    optimize_locc1_inner(Some(components), Some(rho), alphabet_size, cfg, warm_starts)
}

/// One-way LOCC optimization with the generalized-GHZ angle included as a
/// free parameter alongside the encoding and measurement parameters.
pub fn optimize_locc1_theta_free(
    alphabet_size: usize,
    cfg: &OptimizationConfig,
) -> Result<CapacityResult> {
    optimize_locc1_inner(None, None, alphabet_size, cfg, &[])
}

/// [`optimize_locc1_theta_free`] with extra warm-start parameter vectors.
pub fn optimize_locc1_theta_free_warm(
    alphabet_size: usize,
    cfg: &OptimizationConfig,
    warm_starts: &[Vec<f64>],
) -> Result<CapacityResult> {
    optimize_locc1_inner(None, None, alphabet_size, cfg, warm_starts)
}

// ---------------------------------------------------------------------------
// Joint search over separable mixed inputs
// ---------------------------------------------------------------------------

const SEPARABLE_TERMS: usize = 2;
// Two weight logits plus six Bloch directions as (polar, azimuth) pairs.
const SEPARABLE_STATE_PARAMS: usize = SEPARABLE_TERMS + 12;

fn decode_separable_terms(x: &[f64]) -> Vec<SeparableTerm> {
    let weights = to_simplex(&x[..SEPARABLE_TERMS]);
    (0..SEPARABLE_TERMS)
        .map(|i| {
            let o = SEPARABLE_TERMS + 6 * i;
            SeparableTerm {
                probability: weights[i],
                n_a: BlochVector::from_spherical(x[o], x[o + 1]),
                n_b1: BlochVector::from_spherical(x[o + 2], x[o + 3]),
                n_b2: BlochVector::from_spherical(x[o + 4], x[o + 5]),
            }
        })
        .collect()
}

fn bloch_ket(polar: f64, azimuth: f64) -> Vec<C64> {
    vec![
        C64::new((polar / 2.0).cos(), 0.0),
        C64::from_polar((polar / 2.0).sin(), azimuth),
    ]
}

fn separable_components(x: &[f64]) -> Vec<(f64, PureState)> {
    let weights = to_simplex(&x[..SEPARABLE_TERMS]);
    (0..SEPARABLE_TERMS)
        .map(|i| {
            let o = SEPARABLE_TERMS + 6 * i;
            let a = bloch_ket(x[o], x[o + 1]);
            let b1 = bloch_ket(x[o + 2], x[o + 3]);
            let b2 = bloch_ket(x[o + 4], x[o + 5]);
            let amps = crate::linalg::kron_vec(&crate::linalg::kron_vec(&a, &b1), &b2);
            let phys = PureState::new_unchecked(SystemLayout::physical(2), amps);
            (
                weights[i],
                to_protocol_order(&phys, 2).expect("physical register"),
            )
        })
        .collect()
}

/// Joint optimization over k = 2 separable-state parameters (term weights and
/// Bloch directions) and the encoding scheme.
pub fn optimize_separable_search(
    alphabet_size: usize,
    cfg: &OptimizationConfig,
) -> Result<CapacityResult> {
    optimize_separable_search_warm(alphabet_size, cfg, &[])
}

/// [`optimize_separable_search`] with extra warm-start parameter vectors.
pub fn optimize_separable_search_warm(
    alphabet_size: usize,
    cfg: &OptimizationConfig,
    warm_starts: &[Vec<f64>],
) -> Result<CapacityResult> {
    cfg.validate()?;
    if alphabet_size == 0 {
        return Err(Error::InvalidConfig("alphabet size must be >= 1".into()));
    }
    let start = clock();
    let m = 2usize;
    let space = SchemeSpace::new(alphabet_size, m, cfg.probability_mode);

    let objective = |x: &[f64]| {
        let components = separable_components(&x[..SEPARABLE_STATE_PARAMS]);
        let scheme = space.decode(&x[SEPARABLE_STATE_PARAMS..]);
        guarded_objective(&scheme, |s| {
            let routed = route_scheme(&components, s, m)?;
            let successes: Vec<f64> = routed.iter().map(|(_, p)| *p).collect();
            let value = fast_holevo(&components, s, m)?;
            Ok((value, successes))
        })
    };

    let init = |rng: &mut SplitMix64| {
        let mut x = Vec::with_capacity(SEPARABLE_STATE_PARAMS + space.dim());
        for _ in 0..SEPARABLE_TERMS {
            x.push(rng.normal());
        }
        for _ in 0..12 {
            x.push(rng.range(0.0, 2.0 * std::f64::consts::PI));
        }
        x.extend(space.init(rng));
        x
    };

    let candidates = run_candidates(cfg, init, objective, warm_starts);
    let winner = pick_winner(&candidates)?;
    let best = &candidates[winner];
    let terms = decode_separable_terms(&best.x[..SEPARABLE_STATE_PARAMS]);
    let best_scheme = space.decode(&best.x[SEPARABLE_STATE_PARAMS..]);

    let rho = separable_mixed_state(&terms)?;
    let literal = holevo_quantity(&encode_ensemble(&rho, &best_scheme, m)?)?;
    if (literal - best.value).abs() > 1e-6 {
        return Err(Error::OptimizationFailure(format!(
            "fast path ({}) and density path ({literal}) disagree",
            best.value
        )));
    }

    Ok(CapacityResult {
        best_value: literal,
        best_scheme,
        best_locc1: None,
        best_theta: None,
        best_state_terms: Some(terms),
        per_restart_values: candidates.iter().map(|c| c.value).collect(),
        converged: best.converged,
        wall_time: elapsed_secs(start),
        best_params: best.x.clone(),
    })
}

// ---------------------------------------------------------------------------
// Theta sweep
// ---------------------------------------------------------------------------

/// One row of a theta sweep over the generalized-GHZ family.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepPoint {
    pub theta: f64,
    pub chi_ncr_lower: Option<f64>,
    pub chi_sdc: f64,
    pub delta: Option<f64>,
    pub restarts_used: usize,
    pub seed: u64,
    pub status: String,
}

/// Optimizes the routed capacity across a theta grid for the (M+1)-party
/// generalized GHZ family, warm-starting each point with the previous best
/// scheme so the sweep can only improve on cold restarts.
pub fn theta_sweep(
    theta_grid: &[f64],
    m: usize,
    alphabet_size: usize,
    cfg: &OptimizationConfig,
) -> Result<Vec<SweepPoint>> {
    cfg.validate()?;
    if theta_grid.is_empty() {
        return Err(Error::InvalidConfig("theta grid must be nonempty".into()));
    }
    let mut points = Vec::with_capacity(theta_grid.len());
    let mut warm: Option<Vec<f64>> = None;
    for (i, &theta) in theta_grid.iter().enumerate() {
        let chi_sdc = crate::information::chi_sdc_gghz(theta);
        let point_seed = cfg.seed.wrapping_add(i as u64);
        let point_cfg = OptimizationConfig {
            seed: point_seed,
            ..*cfg
        };
        let phys = gghz_amplitudes_unchecked(SystemLayout::physical(m), theta, 0.0);
        let rho = phys.to_density();
        let warm_starts: Vec<Vec<f64>> = warm.iter().cloned().collect();
        match optimize_global_capacity_warm(&rho, m, alphabet_size, &point_cfg, &warm_starts) {
            Ok(result) => {
                warm = Some(result.best_params.clone());
                points.push(SweepPoint {
                    theta,
                    chi_ncr_lower: Some(result.best_value),
                    chi_sdc,
                    delta: Some(figure_of_merit(result.best_value, chi_sdc, m)),
                    restarts_used: result.restarts_used(),
                    seed: point_seed,
                    status: "ok".into(),
                });
            }
            Err(err) => {
                points.push(SweepPoint {
                    theta,
                    chi_ncr_lower: None,
                    chi_sdc,
                    delta: None,
                    restarts_used: 0,
                    seed: point_seed,
                    status: format!("error: {err}"),
                });
            }
        }
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::information::{breakdown_from_joint, von_neumann_entropy, Ensemble};
    use crate::optim::SplitMix64;
    use crate::states::{gghz_state, haar_random_pure, maximally_mixed_state};
    use std::f64::consts::PI;

    fn small_cfg(seed: u64, restarts: usize) -> OptimizationConfig {
        OptimizationConfig {
            restarts,
            max_iterations: 120,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn mixture_entropy_matches_density_entropy() {
        let mut rng = SplitMix64::new(3);
        let layout = SystemLayout::qubits(3);
        for _ in 0..20 {
            let n = 3;
            let states: Vec<PureState> = (0..n)
                .map(|_| haar_random_pure(layout.clone(), &mut rng))
                .collect();
            let raw: Vec<f64> = (0..n).map(|_| rng.range(0.1, 1.0)).collect();
            let total: f64 = raw.iter().sum();
            let weights: Vec<f64> = raw.into_iter().map(|w| w / total).collect();

            let parts: Vec<(f64, &[C64])> = weights
                .iter()
                .zip(&states)
                .map(|(w, s)| (*w, s.amplitudes()))
                .collect();
            let fast = mixture_entropy(&parts).unwrap();

            let mut mix = ComplexMatrix::zeros(8, 8);
            for (w, s) in weights.iter().zip(&states) {
                mix = mix.add(&s.to_density().matrix().scale(C64::new(*w, 0.0)));
            }
            let rho = DensityMatrix::new(layout.clone(), mix).unwrap();
            let slow = von_neumann_entropy(&rho).unwrap();
            assert!((fast - slow).abs() < 1e-10);
        }
    }

    #[test]
    fn fast_holevo_matches_literal_path() {
        let mut rng = SplitMix64::new(21);
        let rho = gghz_state(3, 1.1, 0.0).unwrap().to_density();
        let components = protocol_components(&rho, 2).unwrap();
        let space = SchemeSpace::new(3, 2, ProbabilityMode::Free);
        for _ in 0..10 {
            let x = {
                let mut r = SplitMix64::new(rng.next_u64());
                space.init(&mut r)
            };
            let scheme = space.decode(&x);
            let fast = fast_holevo(&components, &scheme, 2).unwrap();
            let literal = holevo_quantity(&encode_ensemble(&rho, &scheme, 2).unwrap()).unwrap();
            assert!((fast - literal).abs() < 1e-9);
        }
    }

    #[test]
    fn fast_locc1_matches_literal_path() {
        let mut rng = SplitMix64::new(33);
        let rho = gghz_state(3, 0.8, 0.0).unwrap().to_density();
        let components = protocol_components(&rho, 2).unwrap();
        let space = SchemeSpace::new(3, 2, ProbabilityMode::Free);
        for _ in 0..10 {
            let mut r = SplitMix64::new(rng.next_u64());
            let mut x = space.init(&mut r);
            for _ in 0..5 {
                init_two_qubit(&mut r, &mut x);
            }
            let (scheme, locc1, _) = decode_locc1(&space, false, &x);
            let routed = route_scheme(&components, &scheme, 2).unwrap();
            let probs: Vec<f64> = scheme.letters.iter().map(|l| l.probability).collect();
            let joint = fast_locc1_joint(&routed, &probs, &locc1);
            let fast = mi_from_joint(scheme.letters.len(), &joint);

            let ensemble = encode_ensemble(&rho, &scheme, 2).unwrap();
            let breakdown = locc1_mutual_information(&ensemble, &locc1).unwrap();
            assert!((fast - breakdown.total).abs() < 1e-9);
            // The fast joint also reproduces the chain-rule decomposition.
            let slow_joint = breakdown_from_joint(scheme.letters.len(), joint).unwrap();
            assert!((slow_joint.total - breakdown.total).abs() < 1e-9);
        }
    }

    #[test]
    fn singleton_alphabet_carries_no_information() {
        let rho = gghz_state(3, PI / 2.0, 0.0).unwrap().to_density();
        let result = optimize_global_capacity(&rho, 2, 1, &small_cfg(1, 2)).unwrap();
        assert!(result.best_value.abs() < 1e-9);
        let locc = optimize_locc1(&rho, 1, &small_cfg(1, 2)).unwrap();
        assert!(locc.best_value.abs() < 1e-9);
    }

    #[test]
    fn two_letter_ghz_capacity_reaches_one_bit() {
        let rho = gghz_state(3, PI / 2.0, 0.0).unwrap().to_density();
        let result = optimize_global_capacity(&rho, 2, 2, &small_cfg(5, 6)).unwrap();
        assert!(result.best_value > 1.0 - 1e-3, "got {}", result.best_value);
        // Capacity never exceeds the lab register size.
        assert!(result.best_value <= 4.0 + 1e-9);
    }

    #[test]
    fn capacity_is_monotone_in_alphabet_size() {
        let rho = gghz_state(3, PI / 2.0, 0.0).unwrap().to_density();
        let two = optimize_global_capacity(&rho, 2, 2, &small_cfg(9, 6)).unwrap();
        let three = optimize_global_capacity(&rho, 2, 3, &small_cfg(9, 6)).unwrap();
        assert!(three.best_value >= two.best_value - 1e-6);
    }

    #[test]
    fn identical_config_reproduces_bitwise_results() {
        let rho = maximally_mixed_state(3).unwrap();
        let cfg = small_cfg(123, 4);
        let a = optimize_global_capacity(&rho, 2, 2, &cfg).unwrap();
        let b = optimize_global_capacity(&rho, 2, 2, &cfg).unwrap();
        assert_eq!(a.per_restart_values, b.per_restart_values);
        assert_eq!(a.best_params, b.best_params);
    }

    #[test]
    fn figure_of_merit_reference_points() {
        let log6 = 6f64.log2();
        assert!((figure_of_merit(log6, 2.0, 2) - (log6 - 3.0)).abs() < 1e-12);
        assert!(figure_of_merit(log6, 2.0, 2) < 0.0);
        assert!((figure_of_merit(1.2539, 0.0, 2) - 0.2539).abs() < 1e-12);
        for m in 2..=5 {
            let value = figure_of_merit(((m + 1) as f64).log2(), 1.0, m);
            let closed = ((m as f64 + 1.0) / (2.0 * m as f64)).log2();
            assert!((value - closed).abs() < 1e-12);
            assert!(value < 0.0);
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let rho = gghz_state(3, PI / 2.0, 0.0).unwrap().to_density();
        let cfg = OptimizationConfig {
            restarts: 0,
            ..Default::default()
        };
        assert!(optimize_global_capacity(&rho, 2, 2, &cfg).is_err());
        let cfg = OptimizationConfig::default();
        assert!(optimize_global_capacity(&rho, 2, 0, &cfg).is_err());
    }

    #[test]
    fn sweep_reports_failures_per_point_and_continues() {
        let cfg = small_cfg(3, 2);
        assert!(theta_sweep(&[], 2, 3, &cfg).is_err());
        let points = theta_sweep(&[0.4, 0.9], 2, 2, &cfg).unwrap();
        assert_eq!(points.len(), 2);
        assert!(points.iter().all(|p| p.status == "ok"));
        for p in &points {
            assert!((p.chi_sdc - crate::information::chi_sdc_gghz(p.theta)).abs() < 1e-12);
            let delta = p.delta.unwrap();
            let want = figure_of_merit(p.chi_ncr_lower.unwrap(), p.chi_sdc, 2);
            assert!((delta - want).abs() < 1e-12);
        }
    }

    #[test]
    fn separable_components_match_state_constructor() {
        let mut rng = SplitMix64::new(55);
        for _ in 0..10 {
            let x: Vec<f64> = (0..SEPARABLE_STATE_PARAMS)
                .map(|i| {
                    if i < SEPARABLE_TERMS {
                        rng.normal()
                    } else {
                        rng.range(0.0, 2.0 * PI)
                    }
                })
                .collect();
            let terms = decode_separable_terms(&x);
            let rho = separable_mixed_state(&terms).unwrap();
            let comps = separable_components(&x);
            // Rebuild the density matrix from the protocol components by
            // reversing the routing permutation through the density path.
            let scheme = EncodingScheme::identity(1, 2);
            let routed_direct = route_scheme(&comps, &scheme, 2).unwrap();
            let ensemble = encode_ensemble(&rho, &scheme, 2).unwrap();
            let mut rebuilt = ComplexMatrix::zeros(16, 16);
            for (w, psi) in &routed_direct[0].0 {
                rebuilt = rebuilt.add(&psi.to_density().matrix().scale(C64::new(*w, 0.0)));
            }
            assert!(rebuilt.max_abs_diff(ensemble.entries()[0].1.matrix()) < 1e-10);
        }
    }

    #[test]
    fn guarded_objective_penalizes_destructive_letters() {
        let rho = crate::states::PureState::basis(SystemLayout::physical(2), 0)
            .unwrap()
            .to_density();
        let components = protocol_components(&rho, 2).unwrap();
        // V = -I cancels U = I exactly.
        let letters = vec![EncodingLetter {
            probability: 1.0,
            unitaries: vec![
                SingleQubitUnitaryParams::identity(),
                SingleQubitUnitaryParams::with_phase(PI, 0.0, 0.0, 0.0),
            ],
        }];
        let scheme = EncodingScheme { letters };
        let value = guarded_objective(&scheme, |s| {
            let routed = route_scheme(&components, s, 2)?;
            let successes: Vec<f64> = routed.iter().map(|(_, p)| *p).collect();
            let value = fast_holevo(&components, s, 2)?;
            Ok((value, successes))
        });
        assert!(value <= PENALTY_BASE);
    }

    #[test]
    fn ensemble_probabilities_are_preserved() {
        // Probabilities come straight from the scheme, not Bayes-updated by
        // the per-letter success.
        let rho = gghz_state(3, 1.0, 0.0).unwrap().to_density();
        let mut scheme = EncodingScheme::identity(2, 2);
        scheme.letters[0].probability = 0.3;
        scheme.letters[1].probability = 0.7;
        scheme.letters[1].unitaries[1] = SingleQubitUnitaryParams::with_phase(0.4, 1.0, 0.2, 0.5);
        let ensemble = encode_ensemble(&rho, &scheme, 2).unwrap();
        assert!((ensemble.entries()[0].0 - 0.3).abs() < 1e-15);
        assert!((ensemble.entries()[1].0 - 0.7).abs() < 1e-15);
        let _ = Ensemble::new(ensemble.entries().to_vec()).unwrap();
    }
}
