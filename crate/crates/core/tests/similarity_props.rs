use proptest::prelude::*;
use qtsne::similarity::{
    calibrated_conditionals, euclidean_d2, grad_kl_wrt_y, joint_p, kl_cost, perplexity_of,
    student_t_q, PerplexityConfig, SimilarityMatrix,
};

fn points(dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-3.0f64..3.0, dim), 6..40)
}

fn low_dim() -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec((-4.0f64..4.0, -4.0f64..4.0).prop_map(|(a, b)| [a, b]), 3..30)
}

fn check_distribution(m: &SimilarityMatrix<f64>) -> Result<(), TestCaseError> {
    let n = m.n();
    prop_assert!((m.sum() - 1.0).abs() < 1e-9);
    for i in 0..n {
        prop_assert_eq!(m.get(i, i), 0.0);
        for j in 0..n {
            prop_assert!(m.get(i, j) >= 0.0);
            prop_assert!((m.get(i, j) - m.get(j, i)).abs() < 1e-15);
        }
    }
    Ok(())
}

fn numeric_kl(p: &SimilarityMatrix<f64>, y: &[[f64; 2]]) -> f64 {
    kl_cost(p, &student_t_q(y)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn calibrated_rows_hit_target(x in points(4), frac in 0.2f64..0.9) {
        let n = x.len();
        let target = 1.0 + frac * (n as f64 - 2.0);
        let cfg = PerplexityConfig::with_target(target);
        let d2 = euclidean_d2(&x).unwrap();
        let rows = calibrated_conditionals(&d2, &cfg).unwrap();
        for (i, r) in rows.iter().enumerate() {
            prop_assert_eq!(r[i], 0.0);
            prop_assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!((perplexity_of(r) - target).abs() <= 1e-5);
        }
        check_distribution(&joint_p(&rows).unwrap())?;
    }

    #[test]
    fn q_is_a_distribution(y in low_dim()) {
        check_distribution(&student_t_q(&y))?;
    }

    #[test]
    fn q_invariant_under_rigid_motion(y in low_dim(), angle in -3.0f64..3.0, dx in -5.0f64..5.0, dy in -5.0f64..5.0) {
        let (c, s) = (angle.cos(), angle.sin());
        let moved: Vec<[f64; 2]> = y.iter().map(|p| [c * p[0] - s * p[1] + dx, s * p[0] + c * p[1] + dy]).collect();
        let (q1, q2) = (student_t_q(&y), student_t_q(&moved));
        for (a, b) in q1.values().iter().zip(q2.values()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn kl_nonnegative_and_zero_on_match(x in points(3), y in low_dim()) {
        let n = x.len().min(y.len());
        let (x, y) = (&x[..n], &y[..n]);
        prop_assume!(n >= 4);
        let cfg = PerplexityConfig::with_target((n as f64 - 1.0) / 2.0);
        let p = joint_p(&calibrated_conditionals(&euclidean_d2(x).unwrap(), &cfg).unwrap()).unwrap();
        let q = student_t_q(y);
        prop_assert!(kl_cost(&p, &q).unwrap() >= 0.0);
        prop_assert!(kl_cost(&q, &q).unwrap().abs() < 1e-12);
    }

    #[test]
    fn analytic_gradient_matches_finite_differences(x in points(3), y in low_dim()) {
        let n = x.len().min(y.len());
        let (x, y) = (&x[..n], &y[..n]);
        prop_assume!(n >= 4);
        let cfg = PerplexityConfig::with_target(2.5);
        let p = joint_p(&calibrated_conditionals(&euclidean_d2(x).unwrap(), &cfg).unwrap()).unwrap();
        let g = grad_kl_wrt_y(&p, &student_t_q(y), y).unwrap();
        let h = 1e-5;
        for i in 0..n {
            for d in 0..2 {
                let mut yp = y.to_vec();
                let mut ym = y.to_vec();
                yp[i][d] += h;
                ym[i][d] -= h;
                let fd = (numeric_kl(&p, &yp) - numeric_kl(&p, &ym)) / (2.0 * h);
                prop_assert!((fd - g[i][d]).abs() < 1e-6, "{} vs {}", fd, g[i][d]);
            }
        }
    }

    #[test]
    fn joint_p_is_permutation_equivariant(x in points(2), rot in 1usize..5) {
        let n = x.len();
        let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
        let permuted: Vec<Vec<f64>> = perm.iter().map(|&k| x[k].clone()).collect();
        let cfg = PerplexityConfig::with_target(3.0);
        let p = joint_p(&calibrated_conditionals(&euclidean_d2(&x).unwrap(), &cfg).unwrap()).unwrap();
        let pp = joint_p(&calibrated_conditionals(&euclidean_d2(&permuted).unwrap(), &cfg).unwrap()).unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert!((pp.get(i, j) - p.get(perm[i], perm[j])).abs() < 1e-12);
            }
        }
    }
}
