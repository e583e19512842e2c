//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line
//! with its measurements and runtime.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use eagle_cli::commands::diagnose;
use eagle_cli::Dataset;
use eagle_core::datagen::{gen_synthetic, SyntheticSpec};
use eagle_core::graph::{build_incidence, View};
use eagle_core::metrics::{average_precision, make_split, roc_auc};
use eagle_core::model::{evaluate_rows, loss_and_grads, train, Mode, ModelParams, Pipeline, TrainConfig};
use eagle_core::propagate::{build_q_from_incidence, objective_value, Combinator, FactorCache, Rank};
use eagle_core::sparse::{
    dense_inverse_solve, dense_singular_values, power_iteration_solve, truncated_series, FactoredTransition,
};
use eagle_core::spectra::variance_contraction;
use eagle_core::{Eabg, Mat, SvdOptions, DEFAULT_DENSE_EDGE_CAP};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CAP: usize = DEFAULT_DENSE_EDGE_CAP;

/// Criteria that cannot hold as stated. They are still run and reported
/// as FAIL, but do not fail the target.
///
/// C4: the gap between a rank-k truncation and the full operator has
/// `|E| − k` nonzero singular values, each at least `1−α`, so its Frobenius
/// norm is at least `(1−α)·√(|E|−k)`. For α = 0.1, |E| = 64, k = 16 that is
/// 6.2, while the bound `1/(1−ασ_k²)` is at most 1/0.9. The bound does hold
/// in operator norm, which is checked alongside.
const KNOWN_UNATTAINABLE: &[u32] = &[4];

struct Outcome {
    pass: bool,
    detail: String,
    digest: Vec<u64>,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome {
        pass,
        detail,
        digest: Vec::new(),
    }
}

fn bits(m: &Mat) -> impl Iterator<Item = u64> + '_ {
    m.iter().map(|x| x.to_bits())
}

/// A random graph with exactly `m` edges covering every node.
fn random_graph(m: usize, d: usize, rng: &mut ChaCha8Rng) -> Eabg {
    let num_u = rng.random_range(1..=(m / 2).max(1));
    let num_v = rng.random_range(1..=(m / 2).max(1));
    let mut edges: Vec<(usize, usize)> = (0..m)
        .map(|i| {
            let u = if i < num_u { i } else { rng.random_range(0..num_u) };
            let v = if i < num_v { i } else { rng.random_range(0..num_v) };
            (u, v)
        })
        .collect();
    edges.shuffle(rng);
    let attrs = Mat::from_fn(m, d, |_, _| rng.random_range(-1.0..1.0));
    Eabg::new(num_u, num_v, edges, attrs, None).unwrap()
}

fn instances(count: usize, min_edges: usize, max_edges: usize, seed: u64) -> Vec<Eabg> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let m = rng.random_range(min_edges..=max_edges);
            random_graph(m, 3, &mut rng)
        })
        .collect()
}

fn views(beta: f64) -> [View; 3] {
    [View::Combined { beta }, View::U, View::V]
}

fn c1_stochasticity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for g in instances(50, 1, 200, 1) {
        let inc = build_incidence(&g).unwrap();
        let beta = rng.random_range(0.0..=1.0);
        let pu = inc.dense_transition(View::U, CAP).unwrap();
        let pv = inc.dense_transition(View::V, CAP).unwrap();
        let mix = &pu * beta + &pv * (1.0 - beta);
        for p in [&pu, &pv, &mix] {
            for i in 0..p.nrows() {
                worst = worst.max((p.row(i).sum() - 1.0).abs());
                worst = worst.max((p.column(i).sum() - 1.0).abs());
            }
        }
    }
    outcome(worst <= 1e-10, format!("50 graphs, max |row/col sum − 1| = {worst:.2e}"))
}

fn c2_spectrum() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut top: f64 = 0.0;
    for g in instances(50, 1, 200, 1) {
        let inc = build_incidence(&g).unwrap();
        let beta = rng.random_range(0.0..=1.0);
        for b in [inc.combined_incidence(beta).unwrap(), inc.normalized_u(), inc.normalized_v()] {
            top = top.max(dense_singular_values(&b).unwrap()[0]);
        }
    }
    outcome(top <= 1.0 + 1e-8, format!("50 graphs, max σ₁ = {top:.12}"))
}

fn c3_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst: f64 = 0.0;
    let mut digest = Vec::new();
    let mut cases = 0;
    for g in instances(10, 2, 64, 3) {
        let inc = build_incidence(&g).unwrap();
        let m = g.num_edges();
        let h = Mat::from_fn(m, 4, |_, _| rng.random_range(-1.0..1.0));
        for alpha in [0.1, 0.5, 0.9] {
            for view in views(0.5) {
                let q = build_q_from_incidence(&inc, alpha, view, m, &SvdOptions::default()).unwrap();
                let z = q.apply(&h).unwrap();
                let p = inc.dense_transition(view, CAP).unwrap();
                let exact = dense_inverse_solve(&p, alpha, &h).unwrap();
                worst = worst.max((&z - exact).norm());
                digest.extend(bits(&z));
                cases += 1;
            }
        }
    }
    Outcome {
        pass: worst <= 1e-8,
        detail: format!("{cases} cases (k = |E| ≤ 64, 3 α, 3 views), max Frobenius error {worst:.2e}"),
        digest,
    }
}

fn spectral_norm(m: &Mat) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

fn c4_truncation_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let (mut cases, mut violations, mut op_violations) = (0, 0, 0);
    let mut worst_ratio: f64 = 0.0;
    let mut worst_op_ratio: f64 = 0.0;
    for _ in 0..20 {
        let g = random_graph(64, 2, &mut rng);
        let inc = build_incidence(&g).unwrap();
        let view = View::Combined { beta: 0.5 };
        let p = inc.dense_transition(view, CAP).unwrap();
        for alpha in [0.1, 0.5, 0.9] {
            let exact = dense_inverse_solve(&p, alpha, &Mat::identity(64, 64)).unwrap();
            for k in [4, 8, 16] {
                let q = build_q_from_incidence(&inc, alpha, view, k, &SvdOptions::default()).unwrap();
                let sk = q.sigma()[k - 1];
                let bound = 1.0 / (1.0 - alpha * sk * sk);
                let diff = q.dense_operator().unwrap() - &exact;
                let fro = diff.norm();
                let op = spectral_norm(&diff);
                cases += 1;
                if fro > bound + 1e-6 {
                    violations += 1;
                }
                if op > bound + 1e-6 {
                    op_violations += 1;
                }
                worst_ratio = worst_ratio.max(fro / bound);
                worst_op_ratio = worst_op_ratio.max(op / bound);
            }
        }
    }
    outcome(
        violations == 0,
        format!(
            "{cases} cases (|E| = 64, k ∈ {{4,8,16}}, α ∈ {{0.1,0.5,0.9}}): Frobenius bound violated in {violations}, \
             worst error/bound {worst_ratio:.2}; operator-norm bound violated in {op_violations}, worst {worst_op_ratio:.3}"
        ),
    )
}

fn c5_solver_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst: f64 = 0.0;
    for g in instances(20, 2, 100, 5) {
        let inc = build_incidence(&g).unwrap();
        let view = View::Combined { beta: rng.random_range(0.0..=1.0) };
        let p = inc.dense_transition(view, CAP).unwrap();
        let b = inc.normalized(view).unwrap();
        let h = Mat::from_fn(g.num_edges(), 3, |_, _| rng.random_range(-1.0..1.0));
        let dense = dense_inverse_solve(&p, 0.5, &h).unwrap();
        let series = truncated_series(&p, 0.5, &h, 400).unwrap();
        let power = power_iteration_solve(&FactoredTransition { incidence: &b }, 0.5, &h, 1e-12, 100_000)
            .unwrap()
            .z;
        for d in [(&dense - &series).norm(), (&dense - &power).norm(), (&series - &power).norm()] {
            worst = worst.max(d);
        }
    }
    outcome(worst <= 1e-8, format!("20 graphs ≤ 100 edges, max pairwise Frobenius gap {worst:.2e}"))
}

fn c6_objective() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let (mut checked, mut failures) = (0, 0);
    let mut min_gain = f64::INFINITY;
    for g in instances(5, 20, 80, 6) {
        let alpha = rng.random_range(0.05..0.95);
        let beta = rng.random_range(0.0..=1.0);
        let inc = build_incidence(&g).unwrap();
        let p = inc.dense_transition(View::Combined { beta }, CAP).unwrap();
        let h = g.attrs().clone();
        let z = dense_inverse_solve(&p, alpha, &h).unwrap();
        let base = objective_value(&g, &z, &h, alpha, beta).unwrap();
        for _ in 0..100 {
            let (i, j) = (rng.random_range(0..z.nrows()), rng.random_range(0..z.ncols()));
            for eps in [1e-3, -1e-3] {
                let mut zp = z.clone();
                zp[(i, j)] += eps;
                let gain = objective_value(&g, &zp, &h, alpha, beta).unwrap() - base;
                min_gain = min_gain.min(gain);
                checked += 1;
                if gain <= 0.0 {
                    failures += 1;
                }
            }
        }
    }
    outcome(
        failures == 0,
        format!("{checked} perturbations on 5 graphs, {failures} non-increasing, smallest increase {min_gain:.3e}"),
    )
}

fn c7_variance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let (mut checked, mut failures) = (0, 0);
    let mut worst_slack = f64::INFINITY;
    for g in instances(20, 2, 150, 7) {
        let beta = rng.random_range(0.0..=1.0);
        let inc = build_incidence(&g).unwrap();
        let p = inc.dense_transition(View::Combined { beta }, CAP).unwrap();
        let sigma = dense_singular_values(&inc.combined_incidence(beta).unwrap()).unwrap();
        let s2 = sigma.get(1).copied().unwrap_or(0.0);
        let h = Mat::from_fn(g.num_edges(), 4, |_, _| rng.random_range(-1.0..1.0));
        let v0 = variance_contraction(&p, &h, 0).unwrap();
        for t in [1usize, 2, 4] {
            let vt = variance_contraction(&p, &h, t).unwrap();
            for (a, b) in vt.iter().zip(&v0) {
                let allowed = s2.powi(4 * t as i32) * b + 1e-9;
                worst_slack = worst_slack.min(allowed - a);
                checked += 1;
                if *a > allowed {
                    failures += 1;
                }
            }
        }
    }
    outcome(
        failures == 0,
        format!("{checked} (graph, t, channel) checks, {failures} violations, min slack {worst_slack:.2e}"),
    )
}

fn ten_edge_graph() -> Eabg {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let edges = vec![(0, 0), (0, 1), (1, 1), (1, 2), (2, 2), (2, 0), (3, 1), (3, 3), (0, 3), (2, 3)];
    let attrs = Mat::from_fn(10, 4, |_, _| rng.random_range(-1.0..1.0));
    let labels = Mat::from_fn(10, 3, |_, _| if rng.random::<f64>() < 0.4 { 1.0 } else { 0.0 });
    Eabg::new(4, 4, edges, attrs, Some(labels)).unwrap()
}

fn c8_gradients() -> Outcome {
    let g = ten_edge_graph();
    let labels = g.labels().unwrap();
    let rows: Vec<usize> = (0..10).collect();
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let mut coords = 0;
    let mut digest = Vec::new();
    let setups = [
        (Mode::Ffp, Combinator::Max),
        (Mode::Dvffp, Combinator::Sum),
        (Mode::Dvffp, Combinator::Max),
        (Mode::Dvffp, Combinator::Concat),
    ];
    for (mode, combinator) in setups {
        let config = TrainConfig {
            mode,
            combinator,
            k: Rank::Truncated(10),
            z: 5,
            dropout_rate: 0.0,
            seed: 8,
            ..Default::default()
        };
        let pipeline = Pipeline::new(&g, &config, &mut FactorCache::new()).unwrap();
        let params = ModelParams::init(&config, 4, 3);
        let (_, grads) = loss_and_grads(&pipeline, g.attrs(), &params, labels, &rows, None).unwrap();
        let loss = |p: &ModelParams| loss_and_grads(&pipeline, g.attrs(), p, labels, &rows, None).unwrap().0;
        let analytic: Vec<&Mat> = grads.thetas.iter().chain(std::iter::once(&grads.omega)).collect();
        for (w, grad) in analytic.iter().enumerate() {
            digest.extend(bits(grad));
            for j in 0..grad.len() {
                let mut plus = params.clone();
                let mut minus = params.clone();
                let (pw, mw) = if w < params.thetas.len() {
                    (&mut plus.thetas[w], &mut minus.thetas[w])
                } else {
                    (&mut plus.omega, &mut minus.omega)
                };
                pw[j] += h;
                mw[j] -= h;
                let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
                let a = grad[j];
                let scale = a.abs().max(numeric.abs());
                // coordinates with no gradient at all are compared absolutely
                let err = if scale < 1e-10 { (a - numeric).abs() } else { (a - numeric).abs() / scale };
                worst = worst.max(err);
                coords += 1;
            }
        }
    }
    Outcome {
        pass: worst < 1e-4,
        detail: format!("{coords} coordinates over FFP and DV-FFP (sum/max/concat), max relative error {worst:.2e}"),
        digest,
    }
}

fn brute_ap(s: &[f64], y: &[f64]) -> f64 {
    let pos = y.iter().filter(|&&v| v > 0.5).count() as f64;
    let mut thresholds = s.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let (mut ap, mut prev) = (0.0, 0.0);
    for t in thresholds {
        let sel: Vec<usize> = (0..s.len()).filter(|&i| s[i] >= t).collect();
        let tp = sel.iter().filter(|&&i| y[i] > 0.5).count() as f64;
        let recall = tp / pos;
        ap += (recall - prev) * tp / sel.len() as f64;
        prev = recall;
    }
    ap
}

fn brute_auc(s: &[f64], y: &[f64]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for i in 0..s.len() {
        for j in 0..s.len() {
            if y[i] > 0.5 && y[j] < 0.5 {
                pairs += 1.0;
                wins += if s[i] > s[j] {
                    1.0
                } else if s[i] == s[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    wins / pairs
}

fn c9_metrics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(2..=500);
        let grid = rng.random_range(2..200) as f64;
        let mut s: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() * grid).floor() / grid).collect();
        let mut y: Vec<f64> = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 }).collect();
        y[0] = 1.0;
        y[1] = 0.0;
        if rng.random::<bool>() {
            // untied scores half of the time
            s = (0..n).map(|_| rng.random::<f64>()).collect();
        }
        worst = worst.max((average_precision(&s, &y).unwrap() - brute_ap(&s, &y)).abs());
        worst = worst.max((roc_auc(&s, &y).unwrap() - brute_auc(&s, &y)).abs());
    }
    let y = [1.0, 1.0, 0.0, 1.0, 0.0];
    let perfect = [0.9, 0.8, 0.1, 0.7, 0.2];
    let perfect_ok = average_precision(&perfect, &y).unwrap() == 1.0 && roc_auc(&perfect, &y).unwrap() == 1.0;
    let ties_ok = roc_auc(&[0.3; 5], &y).unwrap() == 0.5;
    outcome(
        worst <= 1e-12 && perfect_ok && ties_ok,
        format!("100 instances ≤ 500 points, max gap to brute force {worst:.2e}; perfect ranking {perfect_ok}, all ties {ties_ok}"),
    )
}

fn benchmark_graph() -> Eabg {
    gen_synthetic(&SyntheticSpec {
        num_u: 200,
        num_v: 100,
        num_edges: 4000,
        d: 32,
        num_classes: 4,
        structure_signal: 0.9,
        noise: 0.5,
        seed: 7,
    })
    .unwrap()
}

fn c10_benchmark() -> Outcome {
    let g = benchmark_graph();
    let base = TrainConfig {
        max_epochs: 100,
        ..Default::default()
    };
    let split = make_split(&g, (0.8, 0.1, 0.1), base.seed).unwrap();
    let labels = g.labels().unwrap();
    let mut digest = Vec::new();
    let mut auc = |mode: Mode| {
        let config = TrainConfig { mode, ..base };
        let out = train(&g, &split, &config).unwrap();
        let r = evaluate_rows(&out.pipeline, g.attrs(), &out.params, labels, &split.test_idx).unwrap();
        digest.extend([r.ap.to_bits(), r.auc.to_bits()]);
        for w in out.params.weights() {
            digest.extend(bits(w));
        }
        r.auc
    };
    let ffp = auc(Mode::Ffp);
    let fc = auc(Mode::Fc);
    let dv = auc(Mode::Dvffp);
    Outcome {
        pass: ffp >= 0.90 && ffp - fc >= 0.05 && dv >= ffp - 0.02,
        detail: format!("test AUC: FFP {ffp:.4}, FC {fc:.4} (margin {:.4}), DV-FFP max {dv:.4} (vs FFP − 0.02 = {:.4})", ffp - fc, ffp - 0.02),
        digest,
    }
}

fn c11_diagnostics() -> Outcome {
    let ds = Dataset::from_graph(benchmark_graph());
    let report = diagnose(&ds, &TrainConfig::default()).unwrap();
    let json = serde_json::to_value(&report).unwrap();
    let fields = ["sigma2", "sigma2_sq", "inv_spectral_gap", "theorem1_bound", "schema_version"];
    let present = fields.iter().all(|f| !json[f].is_null());
    let b = build_incidence(&ds.graph).unwrap().combined_incidence(0.5).unwrap();
    let dense = dense_singular_values(&b).unwrap()[1];
    let s = &report.spectral;
    let gap = (s.sigma2 - dense).abs();
    let consistent = (s.sigma2_sq - s.sigma2 * s.sigma2).abs() < 1e-15
        && (s.inv_spectral_gap - 1.0 / (1.0 - s.sigma2_sq)).abs() < 1e-9 * s.inv_spectral_gap;
    outcome(
        gap <= 1e-6 && present && consistent,
        format!(
            "σ₂ = {:.9} (dense {dense:.9}, gap {gap:.1e}), σ₂² = {:.6}, 1/(1−σ₂²) = {:.4}, 1/(1−ασ_k²) = {:.4}",
            s.sigma2, s.sigma2_sq, s.inv_spectral_gap, s.theorem1_bound
        ),
    )
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "stochasticity", limit: Duration::from_secs(5), run: c1_stochasticity },
        Criterion { id: 2, name: "spectrum bound", limit: Duration::from_secs(5), run: c2_spectrum },
        Criterion { id: 3, name: "full-rank exactness", limit: Duration::from_secs(10), run: c3_exactness },
        Criterion { id: 4, name: "truncation bound", limit: Duration::from_secs(10), run: c4_truncation_bound },
        Criterion { id: 5, name: "solver agreement", limit: Duration::from_secs(10), run: c5_solver_agreement },
        Criterion { id: 6, name: "objective optimality", limit: Duration::from_secs(10), run: c6_objective },
        Criterion { id: 7, name: "variance contraction", limit: Duration::from_secs(10), run: c7_variance },
        Criterion { id: 8, name: "gradient check", limit: Duration::from_secs(30), run: c8_gradients },
        Criterion { id: 9, name: "metric oracles", limit: Duration::from_secs(10), run: c9_metrics },
        Criterion { id: 10, name: "synthetic benchmark", limit: Duration::from_secs(120), run: c10_benchmark },
        Criterion { id: 11, name: "diagnostics report", limit: Duration::from_secs(10), run: c11_diagnostics },
    ];

    let mut unexpected = 0;
    let mut report = |id: u32, name: &str, pass: bool, detail: &str| {
        let tag = if pass { "PASS" } else { "FAIL" };
        let note = if !pass && KNOWN_UNATTAINABLE.contains(&id) {
            " [known unattainable as stated]"
        } else {
            ""
        };
        println!("[{tag}] C{id} {name}: {detail}{note}");
        if !pass && !KNOWN_UNATTAINABLE.contains(&id) {
            unexpected += 1;
        }
    };

    let mut digests = Vec::new();
    for c in &criteria {
        let start = Instant::now();
        let out = (c.run)();
        let took = start.elapsed();
        let in_time = took < c.limit;
        let detail = format!("{} ({:.2}s, limit {}s)", out.detail, took.as_secs_f64(), c.limit.as_secs());
        report(c.id, c.name, out.pass && in_time, &detail);
        if matches!(c.id, 3 | 8 | 10) {
            digests.push((c.id, c.run, out.digest));
        }
    }

    let mut mismatched = Vec::new();
    for (id, run, first) in &digests {
        if run().digest != *first || first.is_empty() {
            mismatched.push(*id);
        }
    }
    let detail = if mismatched.is_empty() {
        "reruns of C3, C8 and C10 are bitwise identical".to_string()
    } else {
        format!("outputs differ on rerun for {mismatched:?}")
    };
    report(12, "determinism", mismatched.is_empty(), &detail);

    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
