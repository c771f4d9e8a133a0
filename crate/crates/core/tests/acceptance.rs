//! End-to-end acceptance checks, one printed pass/fail line each.
//! Criterion 14 (CLI determinism across thread counts) lives in the cli
//! crate's integration tests.

use kernprod::*;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn report(id: u32, name: &str, ok: bool) {
    println!(
        "acceptance {id:02} {name}: {}",
        if ok { "pass" } else { "fail" }
    );
    assert!(ok, "acceptance {id:02} {name} failed");
}

fn random_kernel(rng: &mut impl Rng, p: usize) -> PositiveKernel {
    let entries = (0..p * p).map(|_| rng.random_range(0.05..2.0)).collect();
    PositiveKernel::dense(p, entries).unwrap()
}

fn random_window(rng: &mut impl Rng, p: usize, len: usize) -> ProductWindow {
    ProductWindow::new((0..len).map(|_| random_kernel(rng, p)).collect()).unwrap()
}

fn random_prob(rng: &mut impl Rng, p: usize) -> SignedMeasure {
    let w: Vec<f64> = (0..p).map(|_| rng.random_range(0.05..1.0)).collect();
    SignedMeasure::new(w).normalize().unwrap().0
}

#[test]
fn acceptance_01_operator_calculus() {
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let mut ok = true;
    for _ in 0..200 {
        let p = rng.random_range(2..=8);
        let a = random_kernel(&mut rng, p);
        let b = random_kernel(&mut rng, p);
        let c = random_kernel(&mut rng, p);
        let mu = random_prob(&mut rng, p);
        let f = BoundedFunction::new((0..p).map(|_| rng.random_range(-1.0..1.0)).collect());
        // duality mu(Qf) = (mu Q)(f)
        let lhs = mu.pair(&a.act_right(&f).unwrap()).unwrap();
        let rhs = a.act_left(&mu).unwrap().pair(&f).unwrap();
        ok &= (lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1.0);
        // associativity (AB)C = A(BC)
        let left = a.compose(&b).unwrap().compose(&c).unwrap();
        let right = a.compose(&b.compose(&c).unwrap()).unwrap();
        for x in 0..p {
            for y in 0..p {
                let (l, r) = (left.entry(x, y), right.entry(x, y));
                ok &= (l - r).abs() <= 1e-12 * l.abs().max(1.0);
            }
        }
        // submultiplicativity |||AB||| <= |||A||| |||B|||
        ok &= a.compose(&b).unwrap().op_norm() <= a.op_norm() * b.op_norm() * (1.0 + 1e-12);
    }
    report(1, "operator calculus", ok);
}

#[test]
fn acceptance_02_doeblin_minoration() {
    let mut rng = ChaCha8Rng::seed_from_u64(1002);
    let mut ok = true;
    for _ in 0..200 {
        let p = rng.random_range(2..=6);
        let big_n = rng.random_range(3..=8);
        let w = random_window(&mut rng, p, big_n);
        let n = rng.random_range(0..big_n - 1);
        let t = best_triplet(&w, n, big_n - n).unwrap();
        let rec = check_doeblin_minoration(&w, n, big_n, &t.nu, t.gamma(), 1e-12).unwrap();
        ok &= rec.pass;
    }
    report(2, "doeblin minoration", ok);
}

#[test]
fn acceptance_03_contraction_and_sandwich() {
    let mut rng = ChaCha8Rng::seed_from_u64(1003);
    let mut ok = true;
    for _ in 0..200 {
        let p = rng.random_range(2..=5);
        let big_n = rng.random_range(3..=7);
        let w = random_window(&mut rng, p, big_n);
        let series = GammaSeries::from_window(&w, big_n, big_n).unwrap();
        let mu1 = random_prob(&mut rng, p);
        let mu2 = random_prob(&mut rng, p);
        let n = rng.random_range(1..=big_n);
        let k = rng.random_range(0..n);
        ok &= projective_contraction_check(&w, &mu1, &mu2, k, n, &series.gammas)
            .unwrap()
            .pass;
        ok &= growth_ratio_check(&w, &mu1, &mu2, k, n, big_n, &series.gammas)
            .unwrap()
            .pass;
        ok &= sandwich_gamma_check(&w, &mu1, k, n, series.gammas[k])
            .unwrap()
            .pass;
    }
    report(3, "contraction and sandwich", ok);
}

#[test]
fn acceptance_04_lyapunov_constant_kernel() {
    let q = PositiveKernel::dense(2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
    let spec = EnvironmentSpec::constant(q, 0).unwrap();
    let mut stream = spec.stream();
    let est = lyapunov_sequential(&mut stream, &SignedMeasure::uniform(2), 100_000).unwrap();
    let ok = (est.lambda - 3.0_f64.ln()).abs() <= 1e-3;
    report(4, "lyapunov constant kernel", ok);
}

#[test]
fn acceptance_05_lyapunov_iid_closed_form() {
    let kernels = vec![
        PositiveKernel::ones(2),
        PositiveKernel::ones(2).scale(2.0).unwrap(),
    ];
    let spec = EnvironmentSpec::iid(kernels, vec![0.5, 0.5], 505).unwrap();
    let est =
        lyapunov_sequential_replicated(&spec, &SignedMeasure::uniform(2), 10_000, 100).unwrap();
    let target = 1.5 * 2.0_f64.ln();
    let se = est.std_error.unwrap().max(1e-12);
    let ok = (est.lambda - target).abs() <= 3.0 * se;
    report(5, "lyapunov iid closed form", ok);
}

#[test]
fn acceptance_06_lyapunov_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(1006);
    let kernels: Vec<PositiveKernel> = (0..3).map(|_| random_kernel(&mut rng, 3)).collect();
    let spec = EnvironmentSpec::iid(kernels, vec![1.0 / 3.0; 3], 606).unwrap();
    let seq =
        lyapunov_sequential_replicated(&spec, &SignedMeasure::uniform(3), 2000, 40).unwrap();
    let samples = sample_stationary(&spec, 1e-9, 500, 2000).unwrap();
    let int = lyapunov_integral(&spec, &samples).unwrap();
    let combined = (seq.std_error.unwrap().powi(2) + int.std_error.unwrap().powi(2)).sqrt();
    let ok = (seq.lambda - int.lambda).abs() <= 3.0 * combined.max(1e-12);
    report(6, "lyapunov estimator consistency", ok);
}

fn perron_vector(q: &PositiveKernel) -> Vec<f64> {
    let p = q.dim();
    let mut h = vec![1.0; p];
    for _ in 0..10_000 {
        let mut next = vec![0.0; p];
        for x in 0..p {
            for y in 0..p {
                next[x] += q.entry(x, y) * h[y];
            }
        }
        let norm = next.iter().cloned().fold(0.0, f64::max);
        for v in &mut next {
            *v /= norm;
        }
        h = next;
    }
    h
}

#[test]
fn acceptance_07_h_function() {
    let mut ok = true;
    let cases = [
        PositiveKernel::dense(2, vec![2.0, 1.0, 1.0, 2.0]).unwrap(),
        build_leslie(vec![1.0, 1.0, 1.0], vec![0.5, 0.5, 0.0]).unwrap(),
    ];
    for q in cases {
        let p = q.dim();
        let spec = EnvironmentSpec::constant(q.clone(), 0).unwrap();
        let mut stream = spec.stream();
        let h = estimate_h(&mut stream, Some(0), 1e-10, 400).unwrap();
        let v = perron_vector(&q);
        for x in 0..p {
            let expect = v[x] / v[0];
            ok &= (h.values[x] - expect).abs() <= 1e-8 * expect;
        }
    }
    report(7, "h-function perron oracle", ok);
}

#[test]
fn acceptance_08_uniform_approx_decay() {
    let q = PositiveKernel::dense(2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
    let spec = EnvironmentSpec::constant(q, 0).unwrap();
    let mu1 = SignedMeasure::dirac(2, 0);
    let mu2 = SignedMeasure::dirac(2, 1);
    let rep = check_uniform_approx(&spec, &mu1, &mu2, 0.35, (5, 60)).unwrap();
    // least-squares geometric rate over the pre-roundoff rows
    let pts: Vec<(f64, f64)> = rep
        .rows
        .iter()
        .filter(|r| r.relative_error > 1e-13)
        .map(|r| (r.n as f64, r.relative_error.ln()))
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let rate = slope.exp();
    let ok = pts.len() >= 5 && rate <= 1.0 / 3.0 + 0.02;
    report(8, "uniform approximation decay", ok);
}

#[test]
fn acceptance_09_stationary_sampling() {
    let atoms = [vec![0.2, 0.8], vec![0.6, 0.4]];
    let kernels = vec![
        PositiveKernel::rank_one(&[1.0, 2.0], &atoms[0]).unwrap(),
        PositiveKernel::rank_one(&[0.5, 1.5], &atoms[1]).unwrap(),
    ];
    let weights = [0.3, 0.7];
    let spec = EnvironmentSpec::iid(kernels, weights.to_vec(), 909).unwrap();
    let samples = sample_stationary(&spec, 1e-14, 50, 10_000).unwrap();
    let mut counts = [0usize; 2];
    let mut ok = true;
    for s in &samples {
        let dists: Vec<f64> = atoms
            .iter()
            .map(|a| tv_distance(&s.measure, &SignedMeasure::new(a.clone())).unwrap())
            .collect();
        let (best, dist) = if dists[0] <= dists[1] {
            (0, dists[0])
        } else {
            (1, dists[1])
        };
        ok &= dist < 1e-12;
        counts[best] += 1;
    }
    for (i, &w) in weights.iter().enumerate() {
        ok &= (counts[i] as f64 / samples.len() as f64 - w).abs() <= 0.02;
    }
    report(9, "stationary sampling closed form", ok);
}

#[test]
fn acceptance_10_leslie_closed_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut ok = true;
    for _ in 0..200 {
        let p = rng.random_range(3..=8);
        let kernels: Vec<PositiveKernel> = (0..41)
            .map(|_| {
                let f: Vec<f64> = (0..p).map(|_| rng.random_range(0.2..2.0)).collect();
                let mut s: Vec<f64> = (0..p).map(|_| rng.random_range(0.1..1.0)).collect();
                s[p - 1] = 0.0;
                build_leslie(f, s).unwrap()
            })
            .collect();
        let window = ProductWindow::new(kernels).unwrap();
        let t = leslie_triplet(&window, 40).unwrap();
        let closed_c = leslie_c(window.kernel(0)).unwrap();
        let scanned_c = max_c(window.kernel(0), &SignedMeasure::dirac(p, 0)).unwrap();
        ok &= (closed_c - scanned_c).abs() <= 1e-12;
        let tail = ProductWindow::new(window.kernels()[1..].to_vec()).unwrap();
        let nu = SignedMeasure::dirac(p, 0);
        for n_max in [5, 10, 20, 40] {
            let (d, _) = d_horizon(&nu, &tail, n_max).unwrap();
            ok &= t.d <= d + 1e-12;
        }
    }
    report(10, "leslie closed forms", ok);
}

#[test]
fn acceptance_11_counterexample() {
    let (_, rep) = build_counterexample(9.0, 0.1, &BlockRule::SquareGap, 3200, 60).unwrap();
    let mut ok = rep.criterion_met && (rep.criterion_value - 1.35).abs() < 1e-12;
    ok &= rep.rows.len() == 20;
    for row in &rep.rows {
        ok &= row.lhs_log_ratio >= row.n as f64 * 1.35_f64.ln() - 1e-9;
    }
    let (h, d_final) = *rep.d_curve.last().unwrap();
    ok &= h == 60 && d_final < 1e-3;
    report(11, "gamma-zero counterexample", ok);
}

#[test]
fn acceptance_12_critical_oscillation() {
    // centered scalar i.i.d. environment: symmetric log 2 random walk
    let kernels = vec![
        PositiveKernel::dense(1, vec![2.0]).unwrap(),
        PositiveKernel::dense(1, vec![0.5]).unwrap(),
    ];
    let spec = EnvironmentSpec::iid(kernels, vec![0.5, 0.5], 4).unwrap();
    let mu = SignedMeasure::dirac(1, 0);
    let mut oscillating = 0;
    for r in 0..100 {
        let mut stream = spec.replica_stream(r, kernprod::asymptotics::roles::CRITICAL);
        let rep = oscillation_stats(&mut stream, &mu, 100_000, 5.0).unwrap();
        if rep.verdict == OscVerdict::Oscillating {
            oscillating += 1;
        }
    }
    let mut ok = oscillating >= 95;
    // constant normalized kernel: S_n settles before n = 10^3
    let q = PositiveKernel::dense(2, vec![2.0, 1.0, 1.0, 2.0])
        .unwrap()
        .scale(1.0 / 3.0)
        .unwrap();
    let const_spec = EnvironmentSpec::constant(q, 0).unwrap();
    let mut stream = const_spec.stream();
    let mu2 = SignedMeasure::uniform(2);
    let (mut pi, mut s) = {
        let (pi, ln_mass) = mu2.normalize().unwrap();
        (pi, ln_mass)
    };
    let mut s_ref = f64::NAN;
    let mut max_dev = 0.0_f64;
    for step in 1..=100_000 {
        let m = stream.next_operator().unwrap();
        let (next, inc) = projective_step(&pi, &m).unwrap();
        pi = next;
        s += inc;
        if step == 1000 {
            s_ref = s;
        } else if step > 1000 {
            max_dev = max_dev.max((s - s_ref).abs());
        }
    }
    ok &= max_dev < 0.01;
    report(12, "critical oscillation", ok);
}

#[test]
fn acceptance_13_hilbert_comparison() {
    let mut rng = ChaCha8Rng::seed_from_u64(1013);
    let mut ok = true;
    let kernels: Vec<PositiveKernel> = (0..200).map(|_| random_kernel(&mut rng, 4)).collect();
    for q in &kernels {
        let w = ProductWindow::new(vec![q.clone(); 4]).unwrap();
        let nu = SignedMeasure::uniform(4);
        let bound = hennion_d_bound(&w, &nu, 1).unwrap();
        for n_max in [1, 2, 4] {
            let (d, _) = d_horizon(&nu, &w, n_max).unwrap();
            ok &= bound <= d + 1e-12;
        }
    }
    let rows = compare_contractions(&kernels, 4, 1013).unwrap();
    for row in &rows {
        ok &= row.observed_hilbert_factor <= row.tau_birkhoff + 1e-9;
        ok &= row.observed_tv_factor <= row.one_minus_gamma + 1e-9;
    }
    // Leslie products never become uniformly positive
    let leslie: Vec<PositiveKernel> = (0..10)
        .map(|_| {
            let p = 12;
            let f: Vec<f64> = (0..p).map(|_| rng.random_range(0.2..2.0)).collect();
            let mut s: Vec<f64> = (0..p).map(|_| rng.random_range(0.1..1.0)).collect();
            s[p - 1] = 0.0;
            build_leslie(f, s).unwrap()
        })
        .collect();
    ok &= leslie_zero_pattern_persists(&ProductWindow::new(leslie).unwrap(), 10).unwrap();
    report(13, "hilbert comparison", ok);
}
