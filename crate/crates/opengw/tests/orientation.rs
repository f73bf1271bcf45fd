mod common;

use common::orient::*;
use opengw::linalg::Matrix;
use opengw::orientation::*;
use opengw::ring::{q, Q};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn expansion_agrees_with_elimination() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let n = rand::Rng::gen_range(&mut rng, 0..=7);
        let m = rand_matrix(&mut rng, n, n);
        assert_eq!(expansion_det(&m), m.det());
    }
}

#[test]
fn boundary_faces_match_linear_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    assert_eq!(run_cases(&mut rng, 400, |r| boundary_case(r, Face::BoundaryM)), 0);
    assert_eq!(run_cases(&mut rng, 400, |r| boundary_case(r, Face::BoundaryGamma)), 0);
}

#[test]
fn flips_match_linear_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    assert_eq!(run_cases(&mut rng, 400, flip_case), 0);
}

#[test]
fn associations_match_linear_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    assert_eq!(run_cases(&mut rng, 400, association_case), 0);
}

#[test]
fn fiber_sign_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut done = 0;
    while done < 300 {
        let (m, g, x) = (
            rand::Rng::gen_range(&mut rng, 0..=5),
            rand::Rng::gen_range(&mut rng, 0..=5),
            rand::Rng::gen_range(&mut rng, 0..=5),
        );
        let p = LinearFiberProblem {
            m: OrientedSpace::new(m, rand_sign(&mut rng)),
            gamma: OrientedSpace::new(g, rand_sign(&mut rng)),
            x: OrientedSpace::new(x, rand_sign(&mut rng)),
            df: rand_matrix(&mut rng, x, m),
            dg: rand_matrix(&mut rng, x, g),
        };
        let Ok(k) = p.kernel_basis() else { continue };
        assert_eq!(fiber_orientation_sign(&p, &k).unwrap(), oracle_fiber_sign(&p, &k));
        done += 1;
    }
}

fn invertible(n: usize, vals: &[i64]) -> Option<Matrix<Q>> {
    let m = Matrix { rows: n, cols: n, data: vals[..n * n].iter().map(|&v| q(v)).collect() };
    (m.rank() == n).then_some(m)
}

fn sign_of(b: bool) -> Sign {
    if b {
        Sign::Plus
    } else {
        Sign::Minus
    }
}

proptest! {
    #[test]
    fn flips_and_associations_compose(a in any::<[bool; 6]>(), dx in 0usize..7, c1 in -6i64..6, c2 in -6i64..6) {
        let s: Vec<Sign> = a.iter().map(|&b| sign_of(b)).collect();
        let one = flip_sign(s[0], s[1], s[2]);
        let two = flip_sign(s[3], s[4], s[5]);
        prop_assert_eq!(one * two, flip_sign(s[0] * s[3], s[1] * s[4], s[2] * s[5]));
        prop_assert_eq!(association_sign(dx, c1) * association_sign(dx, c1), Sign::Plus);
        prop_assert_eq!(association_sign(dx, c1) * association_sign(dx, c2), association_sign(dx, c1 + c2));
    }

    // A < B < V: the sequence A < V, with V/A oriented as B/A + V/B, has the
    // product of the signs of A < B and B < V.
    #[test]
    fn nested_sequences_multiply(
        n in 1usize..5,
        ab in (0usize..5, 0usize..5),
        w in proptest::collection::vec(-3i64..4, 16),
        u in proptest::collection::vec(-3i64..4, 16),
        o in any::<[bool; 5]>(),
    ) {
        let b = ab.0.min(n);
        let a = ab.1.min(b);
        let (Some(wm), Some(um)) = (invertible(n, &w), invertible(b, &u)) else { return Ok(()) };
        let (sa, sb, sv, s1, s2) = (sign_of(o[0]), sign_of(o[1]), sign_of(o[2]), sign_of(o[3]), sign_of(o[4]));
        let winv = wm.inverse().unwrap();
        let uinv = um.inverse().unwrap();
        let w_b = wm.col_range(0, b);
        let i_ab = um.col_range(0, a);
        let p_ba = uinv.row_range(a, b);
        let ab_seq = ShortExactSequence {
            sub: OrientedSpace::new(a, sa),
            total: OrientedSpace::new(b, sb),
            quotient: OrientedSpace::new(b - a, s1),
            inclusion: i_ab.clone(),
            projection: p_ba.clone(),
        };
        let bv_seq = ShortExactSequence {
            sub: OrientedSpace::new(b, sb),
            total: OrientedSpace::new(n, sv),
            quotient: OrientedSpace::new(n - b, s2),
            inclusion: w_b.clone(),
            projection: winv.row_range(b, n),
        };
        let proj_av = p_ba.mul(&winv.row_range(0, b)).vcat(&winv.row_range(b, n));
        let av_seq = ShortExactSequence {
            sub: OrientedSpace::new(a, sa),
            total: OrientedSpace::new(n, sv),
            quotient: OrientedSpace::new(n - a, s1 * s2),
            inclusion: w_b.mul(&i_ab),
            projection: proj_av,
        };
        let split_av = w_b.mul(&um.col_range(a, b)).hcat(&wm.col_range(b, n));
        let lhs = ses_sign(&av_seq, &split_av).unwrap();
        let rhs = ses_sign(&ab_seq, &um.col_range(a, b)).unwrap() * ses_sign(&bv_seq, &wm.col_range(b, n)).unwrap();
        prop_assert_eq!(lhs, rhs);
    }
}
