use lexnet::binet::{solve_bicm, BinaryBipartite, SolverConfig};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, density: f64) -> Vec<Vec<bool>> {
    (0..rows).map(|_| (0..cols).map(|_| rng.random_bool(density)).collect()).collect()
}

/// Newton's method on log-multipliers. The first row's multiplier is pinned
/// to 1 to remove the x·c, y/c gauge, and its (redundant) equation dropped.
fn newton_probabilities(m: &[Vec<bool>]) -> Vec<Vec<f64>> {
    let (r, c) = (m.len(), m[0].len());
    let k: Vec<f64> = m.iter().map(|row| row.iter().filter(|&&b| b).count() as f64).collect();
    let kappa: Vec<f64> = (0..c).map(|a| m.iter().filter(|row| row[a]).count() as f64).collect();
    let links: f64 = k.iter().sum();
    let n = r + c - 1;
    // variables: a_1..a_{r-1}, b_0..b_{c-1}
    let mut v = DVector::from_iterator(
        n,
        k[1..].iter().map(|d| (d / links.sqrt()).ln()).chain(kappa.iter().map(|d| (d / links.sqrt()).ln())),
    );
    let probs = |v: &DVector<f64>| -> Vec<Vec<f64>> {
        (0..r)
            .map(|i| {
                let a = if i == 0 { 0.0 } else { v[i - 1] };
                (0..c)
                    .map(|al| {
                        let z = a + v[r - 1 + al];
                        1.0 / (1.0 + (-z).exp())
                    })
                    .collect()
            })
            .collect()
    };
    let residual = |p: &[Vec<f64>]| -> DVector<f64> {
        DVector::from_iterator(
            n,
            (1..r)
                .map(|i| p[i].iter().sum::<f64>() - k[i])
                .chain((0..c).map(|al| p.iter().map(|row| row[al]).sum::<f64>() - kappa[al])),
        )
    };
    for _ in 0..200 {
        let p = probs(&v);
        let f = residual(&p);
        if f.amax() < 1e-11 {
            return p;
        }
        let mut jac = DMatrix::zeros(n, n);
        for i in 0..r {
            for al in 0..c {
                let w = p[i][al] * (1.0 - p[i][al]);
                let col = r - 1 + al;
                if i > 0 {
                    jac[(i - 1, i - 1)] += w;
                    jac[(i - 1, col)] += w;
                    jac[(col, i - 1)] += w;
                }
                jac[(col, col)] += w;
            }
        }
        let step = jac.lu().solve(&(-&f)).expect("non-singular Jacobian");
        let norm = f.norm();
        let mut t = 1.0;
        loop {
            let trial = &v + &step * t;
            if residual(&probs(&trial)).norm() < norm || t < 1e-6 {
                v = trial;
                break;
            }
            t /= 2.0;
        }
    }
    panic!("Newton oracle did not converge");
}

#[test]
fn fixed_point_matches_newton_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut checked = 0;
    while checked < 8 {
        let rows = rng.random_range(3..15);
        let cols = rng.random_range(3..25);
        let density = rng.random_range(0.2..0.6);
        let dense = random_matrix(&mut rng, rows, cols, density);
        let m = BinaryBipartite::from_dense(&dense).unwrap();
        let degenerate = m.row_degrees().iter().any(|&d| d == 0 || d == cols)
            || m.col_degrees().iter().any(|&d| d == 0 || d == rows);
        if degenerate {
            continue;
        }
        let model = solve_bicm(&m, SolverConfig::default()).unwrap();
        let oracle = newton_probabilities(&dense);
        for i in 0..rows {
            for a in 0..cols {
                assert!(
                    (model.probability(i, a) - oracle[i][a]).abs() < 1e-7,
                    "cell ({i}, {a}): {} vs {}",
                    model.probability(i, a),
                    oracle[i][a]
                );
            }
        }
        checked += 1;
    }
}

#[test]
fn converges_on_sparse_and_dense_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for density in [0.05, 0.2, 0.5] {
        let dense = random_matrix(&mut rng, 100, 200, density);
        let m = BinaryBipartite::from_dense(&dense).unwrap();
        let model = solve_bicm(&m, SolverConfig::default()).unwrap();
        let d = &model.diagnostics;
        assert!(d.max_residual() <= 1e-6, "density {density}: residual {}", d.max_residual());
        assert!(d.iterations <= 10_000);
    }
}

#[test]
fn probabilities_depend_only_on_degrees() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let dense = random_matrix(&mut rng, 20, 40, 0.3);
    let m = BinaryBipartite::from_dense(&dense).unwrap();
    let model = solve_bicm(&m, SolverConfig::default()).unwrap();
    let k = m.row_degrees();
    for i in 0..20 {
        for j in 0..20 {
            if k[i] == k[j] {
                for a in 0..40 {
                    assert_eq!(model.probability(i, a), model.probability(j, a));
                }
            }
        }
    }
}
