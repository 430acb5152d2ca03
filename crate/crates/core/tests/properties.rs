//! Property-based invariants: norm dualities, crossnorm ordering, operator
//! multilinearity, domination soundness and certificate consistency on
//! randomized inputs.

use std::collections::BTreeMap;

use gamma_factor::certificates::{
    check_domination, gamma_interval, lower_bound_from_witness, search_witness,
    upper_bound_composition, KwapienWitness, PSD_TOL_DEFAULT,
};
use gamma_factor::gamma_norm::{
    assemble, gamma_lower_elementary, gamma_upper, GammaRepresentation, GammaTerm,
};
use gamma_factor::numerics::{jacobi_eigh, svd, SeededRng, SymmetricMatrix};
use gamma_factor::operators::{
    fix_coordinates, linear_operator, operator_norm_bounds, postcompose_linear,
    precompose_linear, Codomain, MultilinearOperator,
};
use gamma_factor::polynomials::{
    associated_operator, poly_gamma_interval, sym_projective_bounds, symmetrize,
};
use gamma_factor::spaces::{dual_space, norm, Exponent, SpaceSpec};
use gamma_factor::tensors::{
    hilbert_crossnorm, injective_norm_bounds, projective_norm_bounds,
    to_dense, DecomposablePoint, DenseTensor,
};
use ndarray::{Array2, ArrayD, IxDyn};
use proptest::prelude::*;

fn l2(dim: usize) -> SpaceSpec {
    SpaceSpec::euclidean(dim)
}

fn vec_strategy(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, dim)
}

fn matrix_strategy(rows: usize, cols: usize) -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(-2.0..2.0f64, rows * cols)
        .prop_map(move |data| Array2::from_shape_vec((rows, cols), data).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn eigenvalue_sum_matches_trace(m in matrix_strategy(4, 4)) {
        let s = SymmetricMatrix::new(m).unwrap();
        let (vals, _) = jacobi_eigh(&s).unwrap();
        let sum: f64 = vals.iter().sum();
        prop_assert!((sum - s.trace()).abs() <= 1e-9 * (1.0 + s.trace().abs()));
    }

    #[test]
    fn singular_values_carry_frobenius_mass(m in matrix_strategy(3, 4)) {
        let (_, s, _) = svd(&m).unwrap();
        let fro2: f64 = m.iter().map(|x| x * x).sum();
        let sum2: f64 = s.iter().map(|x| x * x).sum();
        prop_assert!((fro2 - sum2).abs() <= 1e-9 * (1.0 + fro2));
    }

    #[test]
    fn holder_inequality_is_respected(u in vec_strategy(4), v in vec_strategy(4)) {
        for p in [1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
            let space = SpaceSpec::new(4, Exponent::from_f64(p).unwrap()).unwrap();
            let dual = dual_space(&space);
            let pairing: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
            let bound = norm(&space, &u).unwrap() * norm(&dual, &v).unwrap();
            prop_assert!(pairing.abs() <= bound + 1e-12 * (1.0 + bound));
        }
    }

    #[test]
    fn dual_space_is_an_involution(dim in 1usize..5) {
        for p in [1.0, 1.25, 2.0, 7.0, f64::INFINITY] {
            let space = SpaceSpec::new(dim, Exponent::from_f64(p).unwrap()).unwrap();
            prop_assert_eq!(dual_space(&dual_space(&space)), space);
        }
    }

    #[test]
    fn crossnorm_sandwich_euclidean(m in matrix_strategy(3, 3)) {
        let u = DenseTensor::new(vec![l2(3), l2(3)], m.into_dyn()).unwrap();
        let eps = injective_norm_bounds(&u, 4).unwrap();
        let mid = hilbert_crossnorm(&u).unwrap();
        let pi = projective_norm_bounds(&u, 4).unwrap();
        prop_assert!(eps.upper <= mid + 1e-9 * (1.0 + mid));
        prop_assert!(mid <= pi.lower + 1e-9 * (1.0 + pi.lower));
    }

    #[test]
    fn metric_equivalence_rank_two(
        x1 in vec_strategy(3), x2 in vec_strategy(3),
        z1 in vec_strategy(3), z2 in vec_strategy(3),
    ) {
        // π(p − q) ≤ 2 ε(p − q) for differences of decomposables at n = 2.
        let spaces = [l2(3), l2(3)];
        let p = DecomposablePoint::new(vec![x1, x2]);
        let q = DecomposablePoint::new(vec![z1, z2]);
        let diff = to_dense(&spaces, &p).unwrap().sub(&to_dense(&spaces, &q).unwrap()).unwrap();
        let nuclear = projective_norm_bounds(&diff, 4).unwrap().upper;
        let spectral = injective_norm_bounds(&diff, 4).unwrap().lower;
        prop_assert!(nuclear <= 2.0 * spectral + 1e-9 * (1.0 + nuclear));
    }

    #[test]
    fn projective_triangle_inequality(m1 in matrix_strategy(2, 3), m2 in matrix_strategy(2, 3)) {
        let spaces = vec![l2(2), l2(3)];
        let u = DenseTensor::new(spaces.clone(), m1.clone().into_dyn()).unwrap();
        let v = DenseTensor::new(spaces.clone(), m2.clone().into_dyn()).unwrap();
        let sum = DenseTensor::new(spaces, (&m1 + &m2).into_dyn()).unwrap();
        let a = projective_norm_bounds(&u, 8).unwrap().upper;
        let b = projective_norm_bounds(&v, 8).unwrap().upper;
        let c = projective_norm_bounds(&sum, 8).unwrap().upper;
        prop_assert!(c <= a + b + 1e-9 * (1.0 + a + b));
    }

    #[test]
    fn operator_is_multilinear(
        data in prop::collection::vec(-1.0..1.0f64, 2 * 3 * 2),
        x in vec_strategy(2), xx in vec_strategy(2), y in vec_strategy(3),
        c in -3.0..3.0f64,
    ) {
        let coeffs = ArrayD::from_shape_vec(IxDyn(&[2, 3, 2]), data).unwrap();
        let t = MultilinearOperator::new(
            vec![l2(2), l2(3)], Codomain::Space(l2(2)), coeffs,
        ).unwrap();
        // Additivity in the first slot.
        let sum_arg: Vec<f64> = x.iter().zip(&xx).map(|(a, b)| a + b).collect();
        let lhs = t.evaluate(&[sum_arg, y.clone()]).unwrap();
        let r1 = t.evaluate(&[x.clone(), y.clone()]).unwrap();
        let r2 = t.evaluate(&[xx.clone(), y.clone()]).unwrap();
        for (l, (a, b)) in lhs.iter().zip(r1.iter().zip(&r2)) {
            prop_assert!((l - (a + b)).abs() <= 1e-12);
        }
        // Homogeneity in the second slot.
        let cy: Vec<f64> = y.iter().map(|v| c * v).collect();
        let h = t.evaluate(&[x.clone(), cy]).unwrap();
        for (lh, base) in h.iter().zip(&r1) {
            prop_assert!((lh - c * base).abs() <= 1e-11);
        }
    }

    #[test]
    fn sigma_apply_extends_evaluate(
        data in prop::collection::vec(-1.0..1.0f64, 2 * 2 * 2),
        f1 in vec_strategy(2), f2 in vec_strategy(2),
    ) {
        let coeffs = ArrayD::from_shape_vec(IxDyn(&[2, 2, 2]), data).unwrap();
        let t = MultilinearOperator::new(
            vec![l2(2), l2(2)], Codomain::Space(l2(2)), coeffs,
        ).unwrap();
        let p = DecomposablePoint::new(vec![f1.clone(), f2.clone()]);
        let dense = to_dense(&t.domain, &p).unwrap();
        let via = t.sigma_apply(&dense).unwrap();
        let direct = t.evaluate(&[f1, f2]).unwrap();
        for (a, b) in via.iter().zip(&direct) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn operator_norm_interval_sits_below_hs(
        data in prop::collection::vec(-1.0..1.0f64, 2 * 2 * 2),
    ) {
        let coeffs = ArrayD::from_shape_vec(IxDyn(&[2, 2, 2]), data).unwrap();
        let t = MultilinearOperator::new(
            vec![l2(2), l2(2)], Codomain::Space(l2(2)), coeffs,
        ).unwrap();
        let iv = operator_norm_bounds(&t, 16).unwrap();
        let hs = t.hs_norm().unwrap();
        prop_assert!(iv.lower >= 0.0);
        prop_assert!(iv.lower <= iv.upper + 1e-9 * (1.0 + iv.upper));
        prop_assert!(iv.upper <= hs + 1e-9 * (1.0 + hs));
    }

    #[test]
    fn witness_scale_coherence(lambda in 1.0..3.0f64) {
        // Scaling every st pair by λ ≥ 1 preserves acceptance.
        let spaces = [l2(2), l2(2)];
        let e1 = vec![1.0, 0.0];
        let e2 = vec![0.0, 1.0];
        let pairs = vec![
            (DecomposablePoint::new(vec![e1.clone(), e1.clone()]),
             DecomposablePoint::new(vec![e2.clone(), e1.clone()])),
        ];
        let scaled: Vec<_> = pairs.iter().map(|(a, b)| {
            let scale_pt = |p: &DecomposablePoint| DecomposablePoint::new(
                p.factors.iter().enumerate().map(|(k, f)| {
                    if k == 0 { f.iter().map(|x| lambda * x).collect() } else { f.clone() }
                }).collect()
            );
            (scale_pt(a), scale_pt(b))
        }).collect();
        let w = KwapienWitness { xz_pairs: pairs, st_pairs: scaled };
        let (accepted, _) = check_domination(&spaces, &w, PSD_TOL_DEFAULT).unwrap();
        prop_assert!(accepted);
    }

    #[test]
    fn gamma_upper_subadditive_under_concatenation(
        y1 in vec_strategy(2), y2 in vec_strategy(2),
        f in vec_strategy(2), g in vec_strategy(2),
    ) {
        let spaces = vec![l2(2), l2(2)];
        let term = |a: &Vec<f64>, b: &Vec<f64>, y: &Vec<f64>| GammaTerm {
            p: DecomposablePoint::new(vec![a.clone(), b.clone()]),
            q: DecomposablePoint::zero(&spaces),
            y: y.clone(),
        };
        let t1 = term(&f, &g, &y1);
        let t2 = term(&g, &f, &y2);
        let r1 = GammaRepresentation::with_equality_dominators(
            spaces.clone(), l2(2), vec![t1.clone()],
        );
        let r2 = GammaRepresentation::with_equality_dominators(
            spaces.clone(), l2(2), vec![t2.clone()],
        );
        let r12 = GammaRepresentation::with_equality_dominators(
            spaces.clone(), l2(2), vec![t1, t2],
        );
        let a = gamma_upper(&r1, 8).unwrap();
        let b = gamma_upper(&r2, 8).unwrap();
        let c = gamma_upper(&r12, 8).unwrap();
        prop_assert!(c <= a + b + 1e-9 * (1.0 + a + b));
    }
}

#[test]
fn domination_soundness_on_random_operators() {
    // Every accepted witness satisfies the quadratic domination inequality
    // for every multilinear operator into a Euclidean space.
    use rand::Rng;
    let spaces = [l2(2), l2(2)];
    let seeded = SeededRng::new(0xd0);
    let mut rng = seeded.rng();
    for round in 0..24 {
        let base: Vec<(DecomposablePoint, DecomposablePoint)> = (0..2)
            .map(|_| {
                let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
                    DecomposablePoint::new(vec![
                        (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                        (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                    ])
                };
                (draw(&mut rng), draw(&mut rng))
            })
            .collect();
        let scale_factor = 1.0 + (round % 3) as f64;
        let st: Vec<_> = base
            .iter()
            .map(|(a, b)| {
                let scale_pt = |p: &DecomposablePoint| {
                    DecomposablePoint::new(
                        p.factors
                            .iter()
                            .enumerate()
                            .map(|(k, f)| {
                                if k == 0 {
                                    f.iter().map(|x| scale_factor * x).collect()
                                } else {
                                    f.clone()
                                }
                            })
                            .collect(),
                    )
                };
                (scale_pt(a), scale_pt(b))
            })
            .collect();
        let w = KwapienWitness {
            xz_pairs: base,
            st_pairs: st,
        };
        let (accepted, min_eig) = check_domination(&spaces, &w, PSD_TOL_DEFAULT).unwrap();
        assert!(accepted, "round {round}: min_eig {min_eig}");

        for op_round in 0..6 {
            let coeffs = ArrayD::from_shape_fn(IxDyn(&[2, 2, 2]), |_| rng.gen_range(-1.0..1.0));
            let a = MultilinearOperator::new(
                spaces.to_vec(),
                Codomain::Space(l2(2)),
                coeffs,
            )
            .unwrap();
            let sum_sq = |pairs: &[(DecomposablePoint, DecomposablePoint)]| -> f64 {
                pairs
                    .iter()
                    .map(|(p, q)| {
                        let fp = a.evaluate(&p.factors).unwrap();
                        let fq = a.evaluate(&q.factors).unwrap();
                        fp.iter().zip(&fq).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()
                    })
                    .sum()
            };
            let lhs = sum_sq(&w.xz_pairs);
            let rhs = sum_sq(&w.st_pairs);
            let scale = (1.0 + rhs) * (1.0 + a.frobenius() * a.frobenius());
            assert!(
                lhs <= rhs + 1e-9 * scale,
                "round {round}.{op_round}: {lhs} vs {rhs}"
            );
        }
    }
}

#[test]
fn composition_consistency_bound() {
    use rand::Rng;
    let mut rng = SeededRng::new(0xc0).rng();
    for round in 0..6 {
        let coeffs = ArrayD::from_shape_fn(IxDyn(&[2, 2, 2]), |_| rng.gen_range(-1.0..1.0));
        let t =
            MultilinearOperator::new(vec![l2(2), l2(2)], Codomain::Space(l2(2)), coeffs).unwrap();
        let rand_linear = |rng: &mut rand_chacha::ChaCha8Rng, d_in: usize, d_out: usize| {
            linear_operator(
                l2(d_in),
                l2(d_out),
                ArrayD::from_shape_fn(IxDyn(&[d_in, d_out]), |_| rng.gen_range(-1.0..1.0)),
            )
            .unwrap()
        };
        let r1 = rand_linear(&mut rng, 2, 2);
        let r2 = rand_linear(&mut rng, 2, 2);
        let s = rand_linear(&mut rng, 2, 2);
        let inner = gamma_interval(&t, 17 + round, 80).unwrap();
        let upper = upper_bound_composition(&[r1.clone(), r2.clone()], &inner, &s, 16).unwrap();
        let composed =
            postcompose_linear(&s, &precompose_linear(&t, &[r1, r2]).unwrap()).unwrap();
        let (_, lower) = search_witness(&composed, 99 + round, 120).unwrap();
        assert!(
            lower.value <= upper.value + 1e-6 * (1.0 + upper.value),
            "round {round}: lower {} vs upper {}",
            lower.value,
            upper.value
        );
    }
}

#[test]
fn coordinate_fixing_consistency() {
    use rand::Rng;
    let mut rng = SeededRng::new(0xf1).rng();
    for round in 0..4 {
        let coeffs = ArrayD::from_shape_fn(IxDyn(&[2, 2, 2]), |_| rng.gen_range(-1.0..1.0));
        let t =
            MultilinearOperator::new(vec![l2(2), l2(2)], Codomain::Space(l2(2)), coeffs).unwrap();
        let v: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v_norm = norm(&l2(2), &v).unwrap();
        let mut fixed = BTreeMap::new();
        fixed.insert(1usize, v);
        let tf = fix_coordinates(&t, &fixed).unwrap();
        let whole = gamma_interval(&t, 31 + round, 100).unwrap();
        let part = gamma_interval(&tf, 13 + round, 100).unwrap();
        assert!(
            part.lower <= whole.upper * v_norm + 1e-6 * (1.0 + whole.upper * v_norm),
            "round {round}: {} vs {}",
            part.lower,
            whole.upper * v_norm
        );
    }
}

#[test]
fn prop_iii_operator_norm_below_gamma_upper() {
    use rand::Rng;
    let mut rng = SeededRng::new(0xaa).rng();
    for round in 0..6 {
        let coeffs = ArrayD::from_shape_fn(IxDyn(&[2, 2, 2]), |_| rng.gen_range(-1.0..1.0));
        let t =
            MultilinearOperator::new(vec![l2(2), l2(2)], Codomain::Space(l2(2)), coeffs).unwrap();
        let onb = operator_norm_bounds(&t, 32).unwrap();
        let iv = gamma_interval(&t, 3 + round, 100).unwrap();
        assert!(
            onb.lower <= iv.upper + 1e-6 * (1.0 + iv.upper),
            "round {round}"
        );
    }
}

#[test]
fn gamma_value_duality_and_order() {
    use rand::Rng;
    let mut rng = SeededRng::new(0x77).rng();
    for round in 0..8 {
        let spaces = vec![l2(2), l2(2)];
        let terms: Vec<GammaTerm> = (0..2)
            .map(|_| GammaTerm {
                p: DecomposablePoint::new(vec![
                    (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                    (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                ]),
                q: DecomposablePoint::new(vec![
                    (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                    (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                ]),
                y: (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            })
            .collect();
        let rep = GammaRepresentation::with_equality_dominators(spaces, l2(2), terms);
        let u = assemble(&rep).unwrap();
        let ub = gamma_upper(&rep, 16).unwrap();
        let lb = gamma_lower_elementary(&u, 60, round as u64).unwrap();
        assert!(lb <= ub + 1e-6 * (1.0 + ub), "round {round}: {lb} vs {ub}");
    }
}

#[test]
fn plain_projective_never_exceeds_symmetric() {
    use rand::Rng;
    let mut rng = SeededRng::new(0x5e).rng();
    for round in 0..6 {
        let raw = ArrayD::from_shape_fn(IxDyn(&[3, 3]), |_| rng.gen_range(-1.0..1.0));
        let sym = &raw + &raw.clone().reversed_axes();
        let w = DenseTensor::new(vec![l2(3), l2(3)], sym.into_dyn()).unwrap();
        let plain = projective_norm_bounds(&w, 16).unwrap();
        let symmetric = sym_projective_bounds(&w, 40).unwrap();
        assert!(
            plain.lower <= symmetric.upper + 1e-9 * (1.0 + symmetric.upper),
            "round {round}"
        );
    }
}

#[test]
fn poly_linear_composition_bound() {
    use gamma_factor::polynomials::compose_linear;
    use rand::Rng;
    let mut rng = SeededRng::new(0x33).rng();
    for round in 0..4 {
        let coeffs = ArrayD::from_shape_fn(IxDyn(&[2, 2, 2]), |_| rng.gen_range(-1.0..1.0));
        let t =
            MultilinearOperator::new(vec![l2(2), l2(2)], Codomain::Space(l2(2)), coeffs).unwrap();
        let p = symmetrize(&t).unwrap();
        let rand_linear = |rng: &mut rand_chacha::ChaCha8Rng| {
            linear_operator(
                l2(2),
                l2(2),
                ArrayD::from_shape_fn(IxDyn(&[2, 2]), |_| rng.gen_range(-1.0..1.0)),
            )
            .unwrap()
        };
        let r = rand_linear(&mut rng);
        let s = rand_linear(&mut rng);
        let composed = compose_linear(&s, &p, &r).unwrap();
        let comp_iv = poly_gamma_interval(&composed, 41 + round, 80).unwrap();
        let p_iv = poly_gamma_interval(&p, 42 + round, 80).unwrap();
        let r_ub = operator_norm_bounds(&r, 16).unwrap().upper;
        let s_ub = operator_norm_bounds(&s, 16).unwrap().upper;
        // Degree-2 homogeneity in R: the tested form uses ‖R‖².
        let bound = r_ub * r_ub * p_iv.upper * s_ub;
        assert!(
            comp_iv.lower <= bound + 1e-6 * (1.0 + bound),
            "round {round}: {} vs {bound}",
            comp_iv.lower
        );
    }
}

#[test]
fn poly_operator_coherence() {
    use rand::Rng;
    let mut rng = SeededRng::new(0x44).rng();
    for round in 0..6 {
        let coeffs = ArrayD::from_shape_fn(IxDyn(&[2, 2, 1]), |_| rng.gen_range(-1.0..1.0));
        let t =
            MultilinearOperator::new(vec![l2(2), l2(2)], Codomain::Space(l2(1)), coeffs).unwrap();
        let p = symmetrize(&t).unwrap();
        let p_iv = poly_gamma_interval(&p, 7 + round, 80).unwrap();
        let op_iv = gamma_interval(&associated_operator(&p).unwrap(), 7 + round, 80).unwrap();
        assert!(
            p_iv.lower <= op_iv.upper + 1e-6 * (1.0 + op_iv.upper),
            "round {round}"
        );
    }
}

#[test]
fn witness_lower_bounds_never_exceed_hs_upper() {
    use rand::Rng;
    let mut rng = SeededRng::new(0x88).rng();
    for round in 0..6 {
        let coeffs = ArrayD::from_shape_fn(IxDyn(&[2, 2, 2]), |_| rng.gen_range(-1.0..1.0));
        let t =
            MultilinearOperator::new(vec![l2(2), l2(2)], Codomain::Space(l2(2)), coeffs).unwrap();
        let hs = t.hs_norm().unwrap();
        let w = KwapienWitness::equality(vec![(
            DecomposablePoint::new(vec![vec![1.0, 0.0], vec![1.0, 0.0]]),
            DecomposablePoint::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]),
        )]);
        let cert = lower_bound_from_witness(&t, &w, 8).unwrap();
        assert!(cert.value <= hs + 1e-9 * (1.0 + hs), "round {round}");
    }
}
