mod common;

use common::{bisection_projection, pg_oracle, qp_objective, random_column_stochastic, random_matrix, random_row_stochastic, rng};
use plc_core::disambiguation::disambiguation_objective;
use plc_core::graph::{update_weights_with, weight_subobjective};
use plc_core::propagation::{Warmup, INIT_EPSILON};
use plc_core::{
    build_constraints, build_knn, init_confidence, init_weights, pcp_objective, symmetric_laplacian, update_confidence,
    update_sd, update_weights, warm_up, ConstraintState, Matrix,
};
use proptest::prelude::*;
use rand::Rng;

struct Instance {
    x: Matrix,
    f: Matrix,
    s: Matrix,
    d: Matrix,
}

fn instance(r: &mut rand_chacha::ChaCha8Rng, n: usize, q: usize) -> Instance {
    let x = random_matrix(r, n, 2, -2.0, 2.0);
    let y = Matrix::from_fn(n, q, |i, c| if c == i % q || r.random_bool(0.4) { 1.0 } else { 0.0 });
    let f = random_row_stochastic(r, &y);
    let s = random_matrix(r, n, n, 0.0, 1.0);
    let d = random_matrix(r, n, n, 0.0, 1.0);
    Instance { x, f, s, d }
}

/// Column `j`'s QP assembled from scratch: `G_ab = Σ (v_j − v_a)(v_j − v_b)`
/// over features and confidences, linear term from column distances.
fn column_oracle(inst: &Instance, nb: &[usize], j: usize, alpha: f64, beta: f64) -> f64 {
    let k = nb.len();
    let mut gram = Matrix::zeros(k, k);
    for v in [&inst.x, &inst.f] {
        for a in 0..k {
            for b in 0..k {
                gram[(a, b)] += (0..v.cols()).map(|c| (v[(j, c)] - v[(nb[a], c)]) * (v[(j, c)] - v[(nb[b], c)])).sum::<f64>();
            }
        }
    }
    let n = inst.x.rows();
    let col_dist = |m: &Matrix, a: usize| (0..n).map(|t| (m[(t, a)] - m[(t, j)]).powi(2)).sum::<f64>();
    let linear: Vec<f64> = nb.iter().map(|&a| alpha * col_dist(&inst.d, a) + beta * col_dist(&inst.s, a)).collect();
    let w = pg_oracle(&gram, &linear, &vec![1.0; k], 100_000);
    qp_objective(&gram, &linear, &w)
}

#[test]
fn weight_update_matches_per_column_oracle() {
    let mut r = rng(61);
    for _ in 0..8 {
        let n = r.random_range(8..16);
        let k = r.random_range(2..6);
        let (alpha, beta) = (r.random_range(0.0..1.0), r.random_range(0.0..1.0));
        let inst = instance(&mut r, n, 3);
        let nb = build_knn(&inst.x, k).unwrap();
        let g = update_weights(&inst.x, &inst.f, &inst.s, &inst.d, &nb, alpha, beta).unwrap();
        let ours = weight_subobjective(&inst.x, Some(&inst.f), Some((&inst.s, &inst.d)), g.weights(), alpha, beta);
        let oracle: f64 = (0..n).map(|j| column_oracle(&inst, nb.of(j), j, alpha, beta)).sum();
        assert!(ours <= oracle + 1e-6 * oracle.max(1.0), "{ours} vs {oracle}");
        for j in 0..n {
            let col: f64 = (0..n).map(|i| g.weights()[(i, j)]).sum();
            assert!((col - 1.0).abs() < 1e-9);
            assert!((0..n).all(|i| g.weights()[(i, j)] >= 0.0 && (g.weights()[(i, j)] == 0.0 || nb.contains(j, i))));
        }
    }
}

#[test]
fn weight_update_never_raises_its_subobjective() {
    let mut r = rng(62);
    for _ in 0..20 {
        let n = r.random_range(6..20);
        let k = r.random_range(1..5);
        let inst = instance(&mut r, n, 4);
        let nb = build_knn(&inst.x, k).unwrap();
        let before = init_weights(&inst.x, &nb).unwrap();
        let after = update_weights(&inst.x, &inst.f, &inst.s, &inst.d, &nb, 0.3, 0.7).unwrap();
        let value = |w: &Matrix| weight_subobjective(&inst.x, Some(&inst.f), Some((&inst.s, &inst.d)), w, 0.3, 0.7);
        assert!(value(after.weights()) <= value(before.weights()) + 1e-9);
    }
}

#[test]
fn constant_confidences_without_propagation_give_feature_weights() {
    let mut r = rng(63);
    let n = 15;
    let x = random_matrix(&mut r, n, 3, -1.0, 1.0);
    let f = Matrix::filled(n, 3, 1.0 / 3.0);
    let s = random_matrix(&mut r, n, n, 0.0, 1.0);
    let nb = build_knn(&x, 4).unwrap();
    let init = init_weights(&x, &nb).unwrap();
    let updated = update_weights(&x, &f, &s, &s, &nb, 0.0, 0.0).unwrap();
    assert!(init.weights().sub(updated.weights()).frobenius_norm() < 1e-7);
    let none = update_weights_with(&x, None, None, &nb, 1.0, 1.0).unwrap();
    assert_eq!(none.weights(), init.weights());
}

/// `min Σⱼ ‖fⱼ − Σᵢ wᵢⱼ fᵢ‖²` over all rows at once by projected gradient.
fn whole_problem_oracle(w: &Matrix, y: &Matrix, start: &Matrix) -> Matrix {
    let (n, q) = y.shape();
    let a = Matrix::identity(n).sub(w);
    // gradient 2 T F with T = A Aᵀ; step 1/(2‖A‖_F²)
    let t = Matrix::from_fn(n, n, |i, j| (0..n).map(|l| a[(i, l)] * a[(j, l)]).sum());
    let step = 1.0 / (2.0 * a.frobenius_norm().powi(2));
    let mut f = start.clone();
    for _ in 0..200_000 {
        let mut moved = 0.0_f64;
        let mut next = Matrix::zeros(n, q);
        for i in 0..n {
            let v: Vec<f64> = (0..q).map(|c| f[(i, c)] - step * 2.0 * (0..n).map(|l| t[(i, l)] * f[(l, c)]).sum::<f64>()).collect();
            let p = bisection_projection(&v, y.row(i));
            for c in 0..q {
                moved = moved.max((p[c] - f[(i, c)]).abs());
                next[(i, c)] = p[c];
            }
        }
        f = next;
        if moved < 1e-13 {
            break;
        }
    }
    f
}

#[test]
fn confidence_sweeps_reach_the_chain_optimum() {
    // 5-point chain, each column drawing from its neighbors
    let n = 5;
    let mut w = Matrix::zeros(n, n);
    for j in 0..n {
        let nb: Vec<usize> = [j.wrapping_sub(1), j + 1].into_iter().filter(|&i| i < n).collect();
        for &i in &nb {
            w[(i, j)] = 1.0 / nb.len() as f64;
        }
    }
    let y = Matrix::from_rows(&[
        [1.0, 0.0, 0.0],
        [1.0, 1.0, 0.0],
        [1.0, 1.0, 1.0],
        [0.0, 1.0, 1.0],
        [0.0, 0.0, 1.0],
    ])
    .unwrap();
    let mut f = init_confidence(&y).unwrap();
    let mut trace = vec![disambiguation_objective(&w, f.matrix())];
    for _ in 0..500 {
        f = update_confidence(&w, &y, &f).unwrap();
        trace.push(disambiguation_objective(&w, f.matrix()));
    }
    assert!(trace.windows(2).all(|p| p[1] <= p[0] + 1e-12));
    let oracle = whole_problem_oracle(&w, &y, init_confidence(&y).unwrap().matrix());
    let best = disambiguation_objective(&w, &oracle);
    assert!((trace[trace.len() - 1] - best).abs() < 1e-5, "{} vs {best}", trace[trace.len() - 1]);
}

#[test]
fn confidence_sweep_is_monotone_and_feasible() {
    let mut r = rng(64);
    for _ in 0..30 {
        let n = r.random_range(4..20);
        let q = r.random_range(2..5);
        let k = r.random_range(1..n.min(6));
        let w = random_column_stochastic(&mut r, n, k);
        let y = Matrix::from_fn(n, q, |i, c| if c == i % q || r.random_bool(0.5) { 1.0 } else { 0.0 });
        let f0 = init_confidence(&y).unwrap();
        let f1 = update_confidence(&w, &y, &f0).unwrap();
        assert!(disambiguation_objective(&w, f1.matrix()) <= disambiguation_objective(&w, f0.matrix()) + 1e-12);
        for i in 0..n {
            let row = f1.matrix().row(i);
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(row.iter().zip(y.row(i)).all(|(&v, &b)| v >= 0.0 && v <= b));
        }
    }
}

fn propagation_instance(r: &mut rand_chacha::ChaCha8Rng, n: usize, gamma: f64) -> (Matrix, ConstraintState) {
    let w = random_column_stochastic(r, n, 3);
    let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
    let mask: Vec<bool> = (0..n).map(|_| r.random_bool(0.4)).collect();
    let (m, c, p) = build_constraints(&labels, Some(&mask)).unwrap();
    (w, ConstraintState::new(m, c, p, gamma).unwrap())
}

#[test]
fn propagation_is_monotone_and_nonnegative() {
    let mut r = rng(65);
    for _ in 0..10 {
        let n = r.random_range(6..25);
        let (w, mut cs) = propagation_instance(&mut r, n, 10.0);
        let trace = update_sd(&mut cs, &w, 0.5, 0.5, 50).unwrap();
        assert_eq!(trace.len(), 51);
        assert!(trace.windows(2).all(|p| p[1] <= p[0] * (1.0 + 1e-12)), "{trace:?}");
        assert!(cs.s.as_slice().iter().chain(cs.d.as_slice()).all(|&v| v >= 0.0 && v.is_finite()));
        let last = pcp_objective(&cs, &symmetric_laplacian(&w), 0.5, 0.5);
        assert!((last - trace[50]).abs() <= 1e-9 * last.max(1.0));
    }
}

#[test]
fn adversarial_term_decays_without_constraints() {
    let mut r = rng(66);
    let n = 12;
    let w = random_column_stochastic(&mut r, n, 3);
    let zero = Matrix::zeros(n, n);
    let mut cs = ConstraintState::new(zero.clone(), zero.clone(), zero, 10.0).unwrap();
    cs.s = random_matrix(&mut r, n, n, 0.1, 1.0);
    cs.d = random_matrix(&mut r, n, n, 0.1, 1.0);
    let product = |cs: &ConstraintState| cs.s.as_slice().iter().zip(cs.d.as_slice()).map(|(a, b)| a * b).sum::<f64>();
    let start = product(&cs);
    let trace = update_sd(&mut cs, &w, 0.1, 0.1, 200).unwrap();
    assert!(product(&cs) < 0.5 * start, "{} vs {start}", product(&cs));
    assert!(trace[200] < trace[0]);
}

#[test]
fn clamp_tightens_with_gamma() {
    let mut deviations = Vec::new();
    for gamma in [1.0, 10.0, 100.0] {
        let mut r = rng(67);
        let (w, mut cs) = propagation_instance(&mut r, 20, gamma);
        warm_up(&mut cs, &w, 0.1, 0.1, Warmup::default()).unwrap();
        let dev: f64 = (0..20 * 20)
            .map(|e| {
                let p = cs.p.as_slice()[e];
                (p * (cs.s.as_slice()[e] - cs.m.as_slice()[e])).abs() + (p * (cs.d.as_slice()[e] - cs.c.as_slice()[e])).abs()
            })
            .sum::<f64>()
            / cs.p.as_slice().iter().sum::<f64>();
        deviations.push(dev);
    }
    assert!(deviations[0] > deviations[1] && deviations[1] > deviations[2], "{deviations:?}");
    assert!(deviations[2] < 0.05, "{deviations:?}");
}

#[test]
fn constraint_coverage() {
    let n = 50;
    let labels: Vec<usize> = (0..n).map(|i| (i * 7) % 4).collect();
    let mask: Vec<bool> = (0..n).map(|i| i % 3 == 0).collect();
    let inside = mask.iter().filter(|&&b| b).count();
    let (m, c, p) = build_constraints(&labels, Some(&mask)).unwrap();
    assert_eq!(p.as_slice().iter().sum::<f64>() as usize, inside * (inside - 1));
    assert_eq!(m.transpose(), m);
    assert_eq!(c.transpose(), c);
    for i in 0..n {
        assert_eq!(p[(i, i)], 0.0);
        for j in 0..n {
            assert_eq!(m[(i, j)] + c[(i, j)], p[(i, j)]);
            let both = mask[i] && mask[j] && i != j;
            assert_eq!(p[(i, j)] == 1.0, both);
            if both {
                assert_eq!(m[(i, j)] == 1.0, labels[i] == labels[j]);
            }
        }
    }
    let (_, _, all) = build_constraints(&labels, None).unwrap();
    assert_eq!(all.as_slice().iter().sum::<f64>() as usize, n * (n - 1));
    assert!(build_constraints(&labels, Some(&mask[..10])).is_err());
}

#[test]
fn fresh_state_starts_at_constraints() {
    let (m, c, p) = build_constraints(&[0, 0, 1], Some(&[true, true, false])).unwrap();
    let cs = ConstraintState::new(m, c, p, 1.0).unwrap();
    assert_eq!(cs.s[(0, 1)], 1.0);
    assert_eq!(cs.d[(0, 1)], 0.0);
    assert_eq!(cs.s[(0, 2)], INIT_EPSILON);
    assert_eq!(cs.d[(2, 2)], INIT_EPSILON);
    let z = Matrix::zeros(3, 3);
    assert!(ConstraintState::new(z.clone(), z.clone(), z, -1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn propagation_trace_never_increases(seed in any::<u64>(), n in 4usize..16, alpha in 0.0f64..2.0, beta in 0.0f64..2.0, gamma in 0.0f64..50.0) {
        let mut r = rng(seed);
        let (w, mut cs) = propagation_instance(&mut r, n, gamma);
        let trace = update_sd(&mut cs, &w, alpha, beta, 20).unwrap();
        prop_assert!(trace.windows(2).all(|p| p[1] <= p[0] * (1.0 + 1e-12)));
        prop_assert!(cs.s.as_slice().iter().chain(cs.d.as_slice()).all(|&v| v >= 0.0));
    }
}
