//! Verification suite: every quantitative claim the artifact reproduces, each
//! with its tolerance pinned, runnable via `qdense verify` or the acceptance
//! test target.

use std::f64::consts::PI;

use qdense_core::capacity::{
    figure_of_merit, optimize_global_capacity, optimize_locc1, optimize_locc1_theta_free,
    optimize_separable_search, theta_sweep, OptimizationConfig, ProbabilityMode,
};
use qdense_core::encoding::{
    canonical_two_qubit_gate, single_qubit_unitary, two_qubit_unitary_kak, EncodingScheme,
    SingleQubitUnitaryParams, TwoQubitUnitaryParams,
};
use qdense_core::information::{
    chi_dc_bipartite, chi_sdc_gghz, locc1_mutual_information, Ensemble, Locc1Scheme,
};
use qdense_core::linalg::{kron, pauli_x, pauli_y, pauli_z, ComplexMatrix, SystemLayout, C64, I};
use qdense_core::optim::SplitMix64;
use qdense_core::routing::{
    control_outcome_probabilities, route_and_postselect, route_pure, to_protocol_order,
    RoutingLetter,
};
use qdense_core::states::{
    gghz_state, haar_random_pure, maximally_mixed_state, product_pure_state, separable_mixed_state,
    DensityMatrix, PureState,
};

/// Outcome of one verification criterion.
#[derive(Clone, Debug)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: &'static str,
    pub slow: bool,
    pub measured: String,
    pub target: String,
    pub passed: bool,
    pub warned: bool,
    pub skipped: bool,
    pub seconds: f64,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        let status = if self.skipped {
            "SKIPPED"
        } else if !self.passed {
            "FAIL"
        } else if self.warned {
            "PASS (WARN)"
        } else {
            "PASS"
        };
        format!(
            "criterion {:02} {:<11} {:<28} measured: {:<44} target: {} [{:.1}s]",
            self.id, status, self.name, self.measured, self.target, self.seconds
        )
    }
}

const CRITERIA: [(usize, &str, bool); 12] = [
    (1, "baseline-closed-form", false),
    (2, "ghz-global-capacity", false),
    (3, "gghz-plateau-and-drop", false),
    (4, "advantage-region", false),
    (5, "maximally-mixed-capacity", false),
    (6, "product-state-capacity", false),
    (7, "separable-mixed-search", true),
    (8, "locc1-saturation", true),
    (9, "locc1-headline", true),
    (10, "three-receiver-capacity", true),
    (11, "property-suites", false),
    (12, "sweep-determinism", false),
];

pub fn criteria() -> &'static [(usize, &'static str, bool)] {
    &CRITERIA
}

/// Runs every criterion; with `fast` the slow ones are reported SKIPPED.
pub fn run_all(fast: bool) -> Vec<CriterionOutcome> {
    CRITERIA
        .iter()
        .map(|&(id, name, slow)| {
            if fast && slow {
                CriterionOutcome {
                    id,
                    name,
                    slow,
                    measured: "skipped (--fast)".into(),
                    target: String::new(),
                    passed: true,
                    warned: false,
                    skipped: true,
                    seconds: 0.0,
                }
            } else {
                run_criterion(id)
            }
        })
        .collect()
}

pub fn run_criterion(id: usize) -> CriterionOutcome {
    let (_, name, slow) = CRITERIA[id - 1];
    let start = std::time::Instant::now();
    let (measured, target, passed, warned) = match id {
        1 => baseline_closed_form(),
        2 => ghz_global_capacity(),
        3 => gghz_plateau_and_drop(),
        4 => advantage_region(),
        5 => maximally_mixed_capacity(),
        6 => product_state_capacity(),
        7 => separable_mixed_search(),
        8 => locc1_saturation(),
        9 => locc1_headline(),
        10 => three_receiver_capacity(),
        11 => property_suites(),
        12 => sweep_determinism(),
        _ => panic!("unknown criterion {id}"),
    };
    CriterionOutcome {
        id,
        name,
        slow,
        measured,
        target,
        passed,
        warned,
        skipped: false,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn cfg(restarts: usize, max_iterations: usize, seed: u64) -> OptimizationConfig {
    OptimizationConfig {
        restarts,
        max_iterations,
        seed,
        gradient_step: 1e-6,
        convergence_tolerance: 1e-9,
        probability_mode: ProbabilityMode::Free,
    }
}

type Verdict = (String, String, bool, bool);

// 1. Closed-form baseline: exact maximum and symmetry on a 63-point grid.
fn baseline_closed_form() -> Verdict {
    let peak_err = (chi_sdc_gghz(PI / 2.0) - 2.0).abs();
    let mut sym_err: f64 = 0.0;
    for k in 0..63 {
        let theta = PI * k as f64 / 62.0;
        sym_err = sym_err.max((chi_sdc_gghz(theta) - chi_sdc_gghz(PI - theta)).abs());
    }
    (
        format!("peak error {peak_err:.2e}, symmetry error {sym_err:.2e}"),
        "both <= 1e-12".into(),
        peak_err <= 1e-12 && sym_err <= 1e-12,
        false,
    )
}

// 2. GHZ capacity reaches log|X| up to |X| = 6 and saturates at log 6.
fn ghz_global_capacity() -> Verdict {
    let rho = gghz_state(3, PI / 2.0, 0.0).unwrap().to_density();
    let mut measured = Vec::new();
    let mut ok = true;
    for (k, restarts) in [(2usize, 8usize), (3, 8), (4, 16), (5, 24), (6, 32)] {
        let value = optimize_global_capacity(&rho, 2, k, &cfg(restarts, 300, 11))
            .unwrap()
            .best_value;
        ok &= value >= (k as f64).log2() - 0.02;
        measured.push(format!("{k}:{value:.4}"));
    }
    let seven = optimize_global_capacity(&rho, 2, 7, &cfg(16, 300, 11))
        .unwrap()
        .best_value;
    ok &= seven <= 6f64.log2() + 0.01;
    measured.push(format!("7:{seven:.4}"));
    (
        measured.join(" "),
        "log|X| - 0.02 for |X|<=6; |X|=7 <= log6 + 0.01".into(),
        ok,
        false,
    )
}

// 3. Wide plateau at log 6 inside theta in (0, pi); abrupt drop to log 3 at
// the product-state endpoint.
fn gghz_plateau_and_drop() -> Verdict {
    let plateau = optimize_global_capacity(
        &gghz_state(3, 1.0, 0.0).unwrap().to_density(),
        2,
        6,
        &cfg(32, 300, 29),
    )
    .unwrap()
    .best_value;
    let endpoint = optimize_global_capacity(
        &gghz_state(3, 0.0, 0.0).unwrap().to_density(),
        2,
        6,
        &cfg(32, 300, 29),
    )
    .unwrap()
    .best_value;
    let log6 = 6f64.log2();
    let log3 = 3f64.log2();
    let ok = plateau >= log6 - 0.02 && (endpoint - log3).abs() <= 0.02 && endpoint <= log3 + 0.01;
    (
        format!("theta=1.0: {plateau:.4}; theta=0: {endpoint:.4}"),
        format!(">= {:.4} - 0.02; log3 +/- 0.02 and <= log3 + 0.01", log6),
        ok,
        false,
    )
}

// 4. Delta > 0 in the weakly entangled wings, Delta < 0 at the GHZ point.
fn advantage_region() -> Verdict {
    let mut deltas = Vec::new();
    for theta in [0.5f64, 2.6, PI / 2.0] {
        let rho = gghz_state(3, theta, 0.0).unwrap().to_density();
        let value = optimize_global_capacity(&rho, 2, 6, &cfg(32, 300, 29))
            .unwrap()
            .best_value;
        deltas.push(figure_of_merit(value, chi_sdc_gghz(theta), 2));
    }
    let ok = deltas[0] > 0.0 && deltas[1] > 0.0 && deltas[2] < 0.0;
    (
        format!(
            "delta(0.5)={:.4}, delta(2.6)={:.4}, delta(pi/2)={:.4}",
            deltas[0], deltas[1], deltas[2]
        ),
        "> 0, > 0, < 0".into(),
        ok,
        false,
    )
}

// 5. Maximally mixed input: 1.2539 bits at |X| = 3, one bit at |X| = 2.
fn maximally_mixed_capacity() -> Verdict {
    let rho = maximally_mixed_state(3).unwrap();
    let three = optimize_global_capacity(&rho, 2, 3, &cfg(32, 300, 13))
        .unwrap()
        .best_value;
    let two = optimize_global_capacity(&rho, 2, 2, &cfg(16, 300, 13))
        .unwrap()
        .best_value;
    let ok = (three - 1.2539).abs() <= 0.02 && (two - 1.0).abs() <= 0.005;
    (
        format!("|X|=3: {three:.4}; |X|=2: {two:.4}"),
        "1.2539 +/- 0.02; 1.000 +/- 0.005".into(),
        ok,
        false,
    )
}

// 6. Sender-unentangled pure input caps at log 3.
fn product_state_capacity() -> Verdict {
    let zero = PureState::basis(SystemLayout::new(vec![("A", 2)]).unwrap(), 0).unwrap();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let bell = PureState::new(
        SystemLayout::new(vec![("B1", 2), ("B2", 2)]).unwrap(),
        vec![
            C64::new(r, 0.0),
            qdense_core::linalg::ZERO,
            qdense_core::linalg::ZERO,
            C64::new(r, 0.0),
        ],
    )
    .unwrap();
    let rho = product_pure_state(&zero, &bell).unwrap().to_density();
    let three = optimize_global_capacity(&rho, 2, 3, &cfg(32, 300, 31))
        .unwrap()
        .best_value;
    let four = optimize_global_capacity(&rho, 2, 4, &cfg(32, 300, 31))
        .unwrap()
        .best_value;
    let log3 = 3f64.log2();
    let ok = (three - log3).abs() <= 0.02 && four <= log3 + 0.01;
    (
        format!("|X|=3: {three:.4}; |X|=4: {four:.4}"),
        "log3 +/- 0.02; |X|=4 <= log3 + 0.01".into(),
        ok,
        false,
    )
}

// 7. Joint search over k = 2 separable states finds ~log 5 with chi_sdc = 1.
fn separable_mixed_search() -> Verdict {
    let result = optimize_separable_search(5, &cfg(48, 300, 19)).unwrap();
    let instance = separable_mixed_state(result.best_state_terms.as_ref().unwrap()).unwrap();
    let chi_sdc = chi_dc_bipartite(&instance, 1, false).unwrap();
    let log5 = 5f64.log2();
    let ok = result.best_value >= log5 - 0.05 && (chi_sdc - 1.0).abs() <= 0.02;
    (
        format!("chi={:.4}, chi_sdc={chi_sdc:.4}", result.best_value),
        ">= log5 - 0.05; chi_sdc 1 +/- 0.02".into(),
        ok,
        false,
    )
}

// 8. One-way LOCC saturates log|X| for |X| <= 4 at small theta.
fn locc1_saturation() -> Verdict {
    let theta = 0.0147;
    let rho = gghz_state(3, theta, 0.0).unwrap().to_density();
    let mut measured = Vec::new();
    let mut ok = true;
    for (k, restarts) in [(2usize, 16usize), (3, 24), (4, 32)] {
        let value = optimize_locc1(&rho, k, &cfg(restarts, 300, 37))
            .unwrap()
            .best_value;
        ok &= value >= (k as f64).log2() - 0.02;
        measured.push(format!("{k}:{value:.4}"));
    }
    (
        measured.join(" "),
        "log|X| - 0.02 for |X| in {2,3,4}".into(),
        ok,
        false,
    )
}

// 9. Theta-free |X| = 5 one-way LOCC search: 2.30+ bits at nearly-product
// theta with positive figure of merit. Degrades to >= 2.0 with a WARN since
// the reference value is itself an optimization lower bound.
fn locc1_headline() -> Verdict {
    let result = optimize_locc1_theta_free(5, &cfg(64, 350, 23)).unwrap();
    let theta = result.best_theta.unwrap();
    let delta = result.best_value - (chi_sdc_gghz(theta) + 1.0);
    let theta_ok = !(0.05..=2.0 * PI - 0.05).contains(&theta);
    let full = result.best_value >= 2.30 && theta_ok && delta >= 0.29;
    let warn = !full && result.best_value >= 2.0;
    (
        format!(
            "I(X;Y1Y2)={:.4} at theta={theta:.5}, delta~={delta:.4}",
            result.best_value
        ),
        ">= 2.30 at theta < 0.05 or > 2pi - 0.05, delta >= 0.29 (WARN floor 2.0)".into(),
        full || warn,
        warn,
    )
}

// 10. Three receivers: GHZ4 reaches log 8; the product input caps at log 4.
fn three_receiver_capacity() -> Verdict {
    let ghz4 = gghz_state(4, PI / 2.0, 0.0).unwrap().to_density();
    let eight = optimize_global_capacity(&ghz4, 3, 8, &cfg(32, 300, 17))
        .unwrap()
        .best_value;
    let product = PureState::basis(SystemLayout::physical(3), 0)
        .unwrap()
        .to_density();
    let four = optimize_global_capacity(&product, 3, 4, &cfg(32, 300, 17))
        .unwrap()
        .best_value;
    let five = optimize_global_capacity(&product, 3, 5, &cfg(16, 300, 17))
        .unwrap()
        .best_value;
    let ok = (eight - 3.0).abs() <= 0.03 && (four - 2.0).abs() <= 0.03 && five <= 2.01;
    (
        format!("ghz4 |X|=8: {eight:.4}; product |X|=4: {four:.4}, |X|=5: {five:.4}"),
        "3.0 +/- 0.03; 2.0 +/- 0.03; <= 2.01".into(),
        ok,
        false,
    )
}

/// Scaling-and-squaring matrix exponential, independent of the closed-form
/// canonical gate.
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

fn random_single(rng: &mut SplitMix64, with_phase: bool) -> SingleQubitUnitaryParams {
    if with_phase {
        SingleQubitUnitaryParams::with_phase(
            rng.range(0.0, 2.0 * PI),
            rng.range(0.0, 2.0 * PI),
            rng.range(0.0, 2.0 * PI),
            rng.range(0.0, 2.0 * PI),
        )
    } else {
        SingleQubitUnitaryParams::special(
            rng.range(0.0, 2.0 * PI),
            rng.range(0.0, 2.0 * PI),
            rng.range(0.0, 2.0 * PI),
        )
    }
}

fn random_two_qubit(rng: &mut SplitMix64) -> TwoQubitUnitaryParams {
    TwoQubitUnitaryParams {
        a: random_single(rng, true),
        b: random_single(rng, true),
        c: random_single(rng, true),
        d: random_single(rng, true),
        alphas: [
            rng.range(0.0, PI / 2.0),
            rng.range(0.0, PI / 2.0),
            rng.range(0.0, PI / 2.0),
        ],
    }
}

fn random_letter(m: usize, rng: &mut SplitMix64) -> RoutingLetter {
    let params: Vec<SingleQubitUnitaryParams> = (0..m).map(|i| random_single(rng, i > 0)).collect();
    RoutingLetter::from_params(&params).unwrap()
}

// 11. Property families: unitarity (1000 draws), routed-state PSD/trace
// (1000 draws), pure-vs-density oracle equivalence (100 letters), the LOCC1
// chain rule, canonical gate vs expm, and control-outcome completeness.
fn property_suites() -> Verdict {
    let mut rng = SplitMix64::new(2024);
    let mut worst: f64 = 0.0;
    let id2 = ComplexMatrix::identity(2);
    let id4 = ComplexMatrix::identity(4);

    // Unitarity on 1000 + 1000 draws.
    for _ in 0..1000 {
        let u = single_qubit_unitary(&random_single(&mut rng, true));
        worst = worst.max(u.dagger().matmul(&u).max_abs_diff(&id2));
        let k = two_qubit_unitary_kak(&random_two_qubit(&mut rng));
        worst = worst.max(k.dagger().matmul(&k).max_abs_diff(&id4));
    }
    let unitary_ok = worst < 1e-10;
    let unitary_worst = worst;

    // Routed outputs stay PSD and unit-trace on 1000 draws.
    let mut psd_ok = true;
    let mut trace_worst: f64 = 0.0;
    let mut eig_worst: f64 = 0.0;
    for _ in 0..1000 {
        let phys = haar_random_pure(SystemLayout::physical(2), &mut rng);
        let letter = random_letter(2, &mut rng);
        match route_and_postselect(&phys.to_density(), &letter, 2) {
            Ok(outcome) => {
                let spec = outcome.state.spectrum().unwrap();
                eig_worst = eig_worst.min(spec.last().copied().unwrap());
                trace_worst = trace_worst.max((outcome.state.matrix().trace().re - 1.0).abs());
            }
            Err(_) => continue,
        }
    }
    psd_ok &= eig_worst >= -1e-9 && trace_worst < 1e-9;

    // Pure path vs density path on 100 random letters.
    let mut path_worst: f64 = 0.0;
    for _ in 0..100 {
        let phys = haar_random_pure(SystemLayout::physical(2), &mut rng);
        let letter = random_letter(2, &mut rng);
        let psi = to_protocol_order(&phys, 2).unwrap();
        if let (Ok((state, p)), Ok(outcome)) = (
            route_pure(&psi, &letter, 2),
            route_and_postselect(&phys.to_density(), &letter, 2),
        ) {
            path_worst = path_worst.max((p - outcome.success_probability).abs());
            path_worst = path_worst.max(
                state
                    .to_density()
                    .matrix()
                    .max_abs_diff(outcome.state.matrix()),
            );
        }
    }
    let path_ok = path_worst < 1e-10;

    // Chain-rule identity on 20 random ensembles and schemes.
    let mut chain_worst: f64 = 0.0;
    for _ in 0..20 {
        let entries: Vec<(f64, DensityMatrix)> = (0..3)
            .map(|_| {
                (
                    1.0 / 3.0,
                    haar_random_pure(SystemLayout::qubits(4), &mut rng).to_density(),
                )
            })
            .collect();
        let e = Ensemble::new(entries).unwrap();
        let scheme = Locc1Scheme {
            bob1_unitary: random_two_qubit(&mut rng),
            bob2_conditional: std::array::from_fn(|_| random_two_qubit(&mut rng)),
        };
        let b = locc1_mutual_information(&e, &scheme).unwrap();
        chain_worst = chain_worst.max((b.total - b.chain_rule_total()).abs());
    }
    let chain_ok = chain_worst < 1e-10;

    // Canonical gate vs scaling-and-squaring exponential on 100 triples.
    let mut gate_worst: f64 = 0.0;
    for _ in 0..100 {
        let alphas = [
            rng.range(-2.0, 2.0),
            rng.range(-2.0, 2.0),
            rng.range(-2.0, 2.0),
        ];
        let closed = canonical_two_qubit_gate(&alphas);
        let mut gen = ComplexMatrix::zeros(4, 4);
        for (a, s) in alphas.iter().zip([pauli_x(), pauli_y(), pauli_z()]) {
            gen = gen.add(&kron(&s, &s).scale(C64::new(*a, 0.0)));
        }
        gate_worst = gate_worst.max(closed.max_abs_diff(&expm(&gen.scale(-I))));
    }
    let gate_ok = gate_worst < 1e-10;

    // Control-outcome completeness for M in {2, 3} on 50 draws each.
    let mut comp_worst: f64 = 0.0;
    for m in [2usize, 3] {
        for _ in 0..50 {
            let phys = haar_random_pure(SystemLayout::physical(m), &mut rng);
            let psi = to_protocol_order(&phys, m).unwrap();
            let letter = random_letter(m, &mut rng);
            let probs = control_outcome_probabilities(&psi, &letter, m).unwrap();
            comp_worst = comp_worst.max((probs.iter().sum::<f64>() - 1.0).abs());
        }
    }
    let comp_ok = comp_worst < 1e-10;

    let ok = unitary_ok && psd_ok && path_ok && chain_ok && gate_ok && comp_ok;
    (
        format!(
            "unitary {unitary_worst:.1e}, trace {trace_worst:.1e}, min-eig {eig_worst:.1e}, paths {path_worst:.1e}, chain {chain_worst:.1e}, gate {gate_worst:.1e}, control {comp_worst:.1e}"
        ),
        "all within listed tolerances (1e-10 / 1e-9)".into(),
        ok,
        false,
    )
}

// 12. Identical seed, identical CSV bytes.
fn sweep_determinism() -> Verdict {
    let run = || {
        let grid: Vec<f64> = (0..5).map(|i| PI * i as f64 / 4.0).collect();
        let points = theta_sweep(&grid, 2, 2, &cfg(4, 120, 99)).unwrap();
        crate::commands::format_sweep_csv(&points)
    };
    let a = run();
    let b = run();
    let same = a.as_bytes() == b.as_bytes();
    (
        format!("{} bytes, identical: {same}", a.len()),
        "byte-identical CSV".into(),
        same,
        false,
    )
}

/// Identity-branch encoding scheme; convenience for smoke checks.
pub fn identity_scheme(alphabet: usize, branches: usize) -> EncodingScheme {
    EncodingScheme::identity(alphabet, branches)
}
