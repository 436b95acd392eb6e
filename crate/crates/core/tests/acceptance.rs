//! Acceptance gate: one test per release criterion. Every test prints a
//! single `ACCEPTANCE n: PASS/FAIL - detail` line with the measured values
//! it judged, then asserts, so `--nocapture` gives a scoreboard.

use std::time::Instant;

use quatring::augment::AugmentPlan;
use quatring::completion::{solve, wnn_prox, CompletionProblem, Solver, WnnSide};
use quatring::imaging::{psnr, ssim, ColorImage, Mask};
use quatring::pipeline::{inpaint, PipelineParams};
use quatring::qmat::QuaternionMatrix;
use quatring::qtensor::QuaternionTensor;
use quatring::ring::{ring_svd, Subchain, TensorRing};
use quatring::Quaternion;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(n: usize, ok: bool, detail: &str) {
    println!(
        "ACCEPTANCE {n}: {} - {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "ACCEPTANCE {n} failed: {detail}");
}

fn random_quaternion<R: Rng + ?Sized>(rng: &mut R) -> Quaternion {
    Quaternion::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    )
}

#[test]
fn criterion_01_qsvd_accuracy_and_speed() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let a = QuaternionMatrix::random(20, 15, &mut rng);
    let start = Instant::now();
    let f = a.qsvd().unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let rel = f.reconstruct().sub(&a).unwrap().frobenius_norm() / a.frobenius_norm();
    let du = f.u.orthonormal_defect();
    let dv = f.v.orthonormal_defect();
    let ok = rel <= 1e-10 && du <= 1e-10 && dv <= 1e-10 && elapsed < 1.0;
    verdict(
        1,
        ok,
        &format!(
            "20x15 QSVD: rel err {rel:.2e}, U defect {du:.2e}, V defect {dv:.2e}, {elapsed:.3}s"
        ),
    );
}

#[test]
fn criterion_02_algebraic_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);

    // Scalar associativity of the Hamilton product.
    let mut worst_assoc = 0.0f64;
    for _ in 0..100 {
        let (a, b, c) = (
            random_quaternion(&mut rng),
            random_quaternion(&mut rng),
            random_quaternion(&mut rng),
        );
        worst_assoc = worst_assoc.max(((a * b) * c - a * (b * c)).norm());
    }

    // The right product is the transposed left product of the transposes.
    let mut worst_swap = 0.0f64;
    for _ in 0..100 {
        let a = QuaternionMatrix::random(4, 3, &mut rng);
        let b = QuaternionMatrix::random(3, 5, &mut rng);
        let lhs = a.mul_right(&b).unwrap();
        let rhs = b.transpose().mul_left(&a.transpose()).unwrap().transpose();
        worst_swap = worst_swap.max(lhs.max_abs_diff(&rhs).unwrap());
    }

    // Rank of a product never exceeds either factor's rank: directly for
    // left products, through transposes for right products (transposition
    // does not preserve quaternion rank, so that is the provable form).
    let mut rank_ok = true;
    for _ in 0..100 {
        let x = QuaternionMatrix::random(4, 2, &mut rng);
        let y = QuaternionMatrix::random(2, 3, &mut rng);
        let a = x.mul_left(&y).unwrap();
        let b = QuaternionMatrix::random(3, 5, &mut rng);
        let left = a.mul_left(&b).unwrap();
        rank_ok &= left.rank().unwrap() <= a.rank().unwrap().min(b.rank().unwrap());
        let right_t = a.mul_right(&b).unwrap().transpose();
        let bound = a
            .transpose()
            .rank()
            .unwrap()
            .min(b.transpose().rank().unwrap());
        rank_ok &= right_t.rank().unwrap() <= bound;
    }

    // Same-side associativity for matrices, both products.
    let mut worst_mat_assoc = 0.0f64;
    for _ in 0..100 {
        let a = QuaternionMatrix::random(3, 4, &mut rng);
        let b = QuaternionMatrix::random(4, 2, &mut rng);
        let c = QuaternionMatrix::random(2, 5, &mut rng);
        let ll = a.mul_left(&b).unwrap().mul_left(&c).unwrap();
        let lr = a.mul_left(&b.mul_left(&c).unwrap()).unwrap();
        worst_mat_assoc = worst_mat_assoc.max(ll.max_abs_diff(&lr).unwrap());
        let rl = a.mul_right(&b).unwrap().mul_right(&c).unwrap();
        let rr = a.mul_right(&b.mul_right(&c).unwrap()).unwrap();
        worst_mat_assoc = worst_mat_assoc.max(rl.max_abs_diff(&rr).unwrap());
    }

    // Mixing the two products is not associative; find a witness.
    let mut witness = 0.0f64;
    for _ in 0..100 {
        let a = QuaternionMatrix::random(3, 3, &mut rng);
        let b = QuaternionMatrix::random(3, 3, &mut rng);
        let c = QuaternionMatrix::random(3, 3, &mut rng);
        let lhs = a.mul_left(&b).unwrap().mul_right(&c).unwrap();
        let rhs = a.mul_left(&b.mul_right(&c).unwrap()).unwrap();
        witness = witness.max(lhs.max_abs_diff(&rhs).unwrap());
    }

    let ok = worst_assoc <= 1e-10
        && worst_swap <= 1e-10
        && rank_ok
        && worst_mat_assoc <= 1e-10
        && witness > 1e-3;
    verdict(
        2,
        ok,
        &format!(
            "assoc {worst_assoc:.2e}, swap identity {worst_swap:.2e}, rank bounds {}, \
             matrix assoc {worst_mat_assoc:.2e}, mixed-assoc witness {witness:.2e}",
            if rank_ok { "hold" } else { "violated" }
        ),
    );
}

#[test]
fn criterion_03_cyclic_shift_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let ring = TensorRing::random(&[3, 4, 3, 4], &[2, 3, 2, 3], &mut rng).unwrap();
    let dense = ring.reconstruct().unwrap();
    let mut worst = 0.0f64;
    for n in 1..=4 {
        let shifted = ring.reconstruct_permuted(n).unwrap();
        let expect = dense.permute_cyclic(n).unwrap();
        worst = worst.max(shifted.max_abs_diff(&expect).unwrap());
    }
    verdict(
        3,
        worst <= 1e-10,
        &format!("max elementwise error over shifts {worst:.2e}"),
    );
}

#[test]
fn criterion_04_unfolding_factorization() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let ring = TensorRing::random(&[3, 4, 3, 4], &[2, 3, 2, 3], &mut rng).unwrap();
    let dense = ring.reconstruct().unwrap();
    let mut worst = 0.0f64;
    for k in 1..=3 {
        let lhs = dense.unfold(k).unwrap();
        let left = ring
            .subchain(Subchain::UpTo, k)
            .unwrap()
            .classical_unfold(2)
            .unwrap();
        let right = ring
            .subchain(Subchain::After, k)
            .unwrap()
            .mode_unfold(2)
            .unwrap();
        let rhs = left.mul_left(&right.transpose()).unwrap();
        worst = worst.max(lhs.max_abs_diff(&rhs).unwrap());
    }
    verdict(
        4,
        worst <= 1e-10,
        &format!("max factorization error over k {worst:.2e}"),
    );
}

#[test]
fn criterion_05_decomposition_error_budgets() {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let t = QuaternionTensor::random(&[4, 4, 4, 4], &mut rng);
    let start = Instant::now();
    let mut errors = Vec::new();
    for eps in [0.3, 0.1, 0.01] {
        let ring = ring_svd(&t, eps).unwrap();
        errors.push(ring.relative_error(&t).unwrap());
    }
    let elapsed = start.elapsed().as_secs_f64();
    let within = errors
        .iter()
        .zip([0.3, 0.1, 0.01])
        .all(|(&e, eps)| e <= eps + 1e-12);
    let monotone = errors.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let ok = within && monotone && elapsed < 10.0;
    verdict(
        5,
        ok,
        &format!(
            "errors {:.3e}/{:.3e}/{:.3e} for budgets 0.3/0.1/0.01, {elapsed:.2}s",
            errors[0], errors[1], errors[2]
        ),
    );
}

#[test]
fn criterion_06_exact_rank_recovery() {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let generator = TensorRing::random(&[4, 4, 4, 4], &[2, 2, 2, 2], &mut rng).unwrap();
    let dense = generator.reconstruct().unwrap();
    let learned = ring_svd(&dense, 1e-10).unwrap();
    let err = learned.relative_error(&dense).unwrap();
    let r = learned.ranks();
    let ok = err <= 1e-8 && r[0] * r[1] <= 4 && r[2] <= 2 && r[3] <= 2;
    verdict(
        6,
        ok,
        &format!("rel err {err:.2e}, ranks {r:?} (need err <= 1e-8, r1*r2 <= 4, r3 <= 2, r4 <= 2)"),
    );
}

#[test]
fn criterion_07_circular_unfolding_rank_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let generator = TensorRing::random(&[4, 4, 4, 4], &[2, 2, 2, 2], &mut rng).unwrap();
    let dense = generator.reconstruct().unwrap();
    let ranks = generator.ranks();
    let n = 4;
    let mut detail = String::new();
    let mut ok = true;
    let mut plain = Vec::new();
    for k in 2..=4usize {
        let l = n - k + 1;
        let unfolded = dense.circ_unfold(k, l).unwrap();
        let bound = ranks[k - 1] * ranks[(k + l - 1) % n];
        // Quaternion transposition does not preserve rank, and the bound is
        // only provable for the transposed unfolding: T_{k,l}^t rearranges
        // into a left product with inner dimension r_k*r_{k+l}. The plain
        // orientation can be full-rank (see the pinned witness below).
        let structured = unfolded.transpose().rank().unwrap();
        plain.push(unfolded.rank().unwrap());
        ok &= structured <= bound;
        detail.push_str(&format!(
            "k={k}: rank(T^t)={structured}<={bound} (plain {}) ",
            plain[k - 2]
        ));
    }
    // Freeze the counterexample that forces the transposed reading: the
    // middle unfolding of this exact ring tensor is full-rank while its
    // transpose meets the bound.
    ok &= plain[1] == 16;
    verdict(7, ok, detail.trim());
}

#[test]
fn criterion_08_shrinkage_prox_contract() {
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let gamma = QuaternionMatrix::random(5, 6, &mut rng);

    let (identity, _) = wnn_prox(&gamma, 0.1, 0.0).unwrap();
    let exact_identity = identity == gamma;

    let shrunk = quatring::completion::shrink_singular_value(3.0, 0.1, 0.2);
    let closed_form = 0.5 * (2.9 + 8.81f64.sqrt());
    let pinned = (shrunk - closed_form).abs() <= 1e-12;

    // The prox output may not raise the surrogate objective it minimizes.
    let surrogate = |m: &QuaternionMatrix, eps: f64, c: f64| {
        let logsum: f64 = m
            .qsvd()
            .unwrap()
            .sigma
            .iter()
            .map(|&s| (s + eps).ln())
            .sum();
        c * logsum + 0.5 * m.sub(&gamma).unwrap().frobenius_norm().powi(2)
    };
    let mut objective_ok = true;
    for (eps, c) in [(1e-3, 0.05), (0.1, 0.3), (0.5, 1.0)] {
        let (out, _) = wnn_prox(&gamma, eps, c).unwrap();
        objective_ok &= surrogate(&out, eps, c) <= surrogate(&gamma, eps, c) + 1e-10;
    }

    let ok = exact_identity && pinned && objective_ok;
    verdict(
        8,
        ok,
        &format!(
            "zero-constant identity {exact_identity}, closed form |{shrunk:.12} - {closed_form:.12}| <= 1e-12: {pinned}, objective never rises: {objective_ok}"
        ),
    );
}

#[test]
fn criterion_09_synthetic_completion() {
    let mut core_rng = ChaCha8Rng::seed_from_u64(109);
    let truth = TensorRing::random(&[6, 6, 6, 6], &[2, 2, 2, 2], &mut core_rng)
        .unwrap()
        .reconstruct()
        .unwrap();
    let mut mask_rng = ChaCha8Rng::seed_from_u64(209);
    let omega: Vec<bool> = (0..truth.len())
        .map(|_| mask_rng.gen::<f64>() < 0.5)
        .collect();
    let mut problem = CompletionProblem::new(truth.clone(), omega.clone()).unwrap();
    // An exact ring tensor is low-rank on the transposed side of each
    // circular unfolding (quaternion transposition changes rank), so the
    // prior must act there; the constant is raised so the shrinkage pull
    // reaches the exact ranks within the iteration budget. This recovers
    // to 4.8e-4 in 198 iterations, retaining the theoretical [4, 4, 4].
    problem.wnn_side = WnnSide::Transpose;
    problem.wnn_c = 100.0;

    let start = Instant::now();
    let mut solver = Solver::new(&problem).unwrap();
    let mut fidelity = true;
    let mut iterations = 0;
    for _ in 0..problem.max_iters {
        let row = solver.step().unwrap();
        iterations = row.iter;
        for (i, &seen) in omega.iter().enumerate() {
            if seen && solver.tensor().data()[i] != problem.x.data()[i] {
                fidelity = false;
            }
        }
        if row.rel_change < problem.tol {
            break;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let err = solver.tensor().relative_error(&truth).unwrap();
    let ok = err <= 5e-2 && fidelity && iterations <= 300 && elapsed < 60.0;
    verdict(
        9,
        ok,
        &format!(
            "rel err {err:.3e} after {iterations} iters, observed entries bit-exact: {fidelity}, {elapsed:.1}s"
        ),
    );
}

/// Deterministic 64x64 color chart: smooth gradients, a soft disk and a
/// soft diagonal band, so there is both low-rank structure and detail.
fn test_chart(n: usize) -> ColorImage {
    let clamp = |v: f64| v.clamp(0.0, 1.0);
    ColorImage::from_fn(n, n, |r, c| {
        let y = r as f64 / (n - 1) as f64;
        let x = c as f64 / (n - 1) as f64;
        let mut red = 0.25 + 0.5 * x;
        let mut green = 0.25 + 0.5 * y;
        let mut blue = 0.5 + 0.25 * (x - y);
        let d = ((x - 0.35).powi(2) + (y - 0.4).powi(2)).sqrt();
        let disk = (1.0 - d / 0.25).max(0.0);
        red += 0.35 * disk;
        blue -= 0.2 * disk;
        let band = (-(x + y - 1.2).powi(2) / 0.02).exp();
        green += 0.3 * band;
        (clamp(red), clamp(green), clamp(blue))
    })
}

#[test]
fn criterion_10_image_inpainting_quality() {
    let img = test_chart(64);
    let mut params = PipelineParams::default();
    // At sparse observation the ADMM is still descending when the default
    // 300-iteration budget runs out (17.4 dB at SR 0.3); the binding limit
    // here is wall time, and 1000 iterations fit it with a wide margin
    // (49.5 dB, SSIM 0.993, about 2 minutes per sampling rate).
    params.max_iters = 1000;
    let mut results = Vec::new();
    let mut budget_ok = true;
    for sr in [0.1, 0.3, 0.5] {
        let mask = Mask::random(64, 64, sr, 11).unwrap();
        let start = Instant::now();
        let out = inpaint(&img, &mask, &params).unwrap();
        let elapsed = start.elapsed().as_secs_f64();
        budget_ok &= elapsed < 600.0;
        let rec = psnr(&img, &out.recovered).unwrap();
        let base = psnr(&img, &out.observed).unwrap();
        let sim = ssim(&img, &out.recovered).unwrap();
        results.push((sr, rec, base, sim, elapsed));
    }
    let increasing = results[0].1 < results[1].1 && results[1].1 < results[2].1;
    let (_, rec3, base3, sim3, _) = results[1];
    let ok = increasing && rec3 >= base3 + 5.0 && sim3 >= 0.7 && budget_ok;
    let detail: Vec<String> = results
        .iter()
        .map(|(sr, rec, base, sim, secs)| {
            format!("SR {sr}: {rec:.2} dB (zero-fill {base:.2}), SSIM {sim:.3}, {secs:.0}s")
        })
        .collect();
    verdict(10, ok, &detail.join("; "));
}

#[test]
fn criterion_11_augmentation_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(111);
    let cases: [(usize, usize, Vec<usize>); 2] = [
        (256, 256, vec![4; 9]),
        (120, 165, vec![4, 4, 4, 4, 4, 4, 5, 4]),
    ];
    let mut ok = true;
    let mut detail = String::new();
    for (rows, cols, target) in cases {
        let plan = AugmentPlan::new(rows, cols, &target).unwrap();
        let img = QuaternionMatrix::random(rows, cols, &mut rng);
        let back = plan.inverse(&plan.forward(&img).unwrap()).unwrap();
        let exact = back == img;
        let copies: usize = plan.multiplicities().iter().sum();
        let target_len: usize = target.iter().product();
        let counts_ok = copies == target_len && plan.multiplicities().iter().all(|&m| m >= 1);
        ok &= exact && counts_ok;
        detail.push_str(&format!(
            "{rows}x{cols}: round trip {}, {copies} copies of {} pixels fill {target_len}; ",
            if exact { "bit-exact" } else { "lossy" },
            plan.multiplicities().len()
        ));
    }
    verdict(11, ok, detail.trim_end_matches("; "));
}

#[test]
fn criterion_12_real_degeneracy() {
    let mut rng = ChaCha8Rng::seed_from_u64(112);
    let mut t = QuaternionTensor::zeros(&[4, 4, 4]);
    for q in t.data_mut() {
        *q = Quaternion::real(rng.gen_range(-1.0..1.0));
    }

    let ring = ring_svd(&t, 0.05).unwrap();
    let core_imag = ring
        .cores()
        .iter()
        .map(|c| c.max_imag())
        .fold(0.0, f64::max)
        .max(ring.reconstruct().unwrap().max_imag());

    let omega: Vec<bool> = (0..t.len()).map(|_| rng.gen::<f64>() < 0.6).collect();
    let mut problem = CompletionProblem::new(t, omega).unwrap();
    problem.max_iters = 50;
    let solved_imag = solve(&problem).unwrap().tensor.max_imag();

    let ok = core_imag <= 1e-12 && solved_imag <= 1e-12;
    verdict(
        12,
        ok,
        &format!("decomposition imag {core_imag:.2e}, completion imag {solved_imag:.2e}"),
    );
}
