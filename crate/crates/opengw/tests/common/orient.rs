//! Brute-force orientation oracle: permutation-expansion determinants and explicit linear
//! models of boundary faces, flips and associations.

use opengw::linalg::Matrix;
use opengw::orientation::{
    association_sign, boundary_sign_formula, flip_sign, Face, LinearFiberProblem, OrientedSpace,
    Sign,
};
use opengw::ring::{q, Q};
use num_traits::{Signed, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Determinant by the permutation expansion, summed by dynamic programming
/// over the set of columns used by the first rows. Independent of the
/// elimination code.
pub fn expansion_det(m: &Matrix<Q>) -> Q {
    let n = m.rows;
    assert_eq!(n, m.cols);
    let mut f = vec![Q::zero(); 1 << n];
    f[0] = q(1);
    for mask in 0usize..(1 << n) {
        if f[mask].is_zero() {
            continue;
        }
        let r = mask.count_ones() as usize;
        if r == n {
            continue;
        }
        for j in 0..n {
            if mask >> j & 1 == 1 || m[(r, j)].is_zero() {
                continue;
            }
            // columns already used to the right of j are inversions
            let above = (mask >> (j + 1)).count_ones();
            let term = f[mask].clone() * m[(r, j)].clone();
            let t = &mut f[mask | 1 << j];
            if above % 2 == 0 {
                *t += term;
            } else {
                *t -= term;
            }
        }
    }
    f[(1 << n) - 1].clone()
}

pub fn det_sign(m: &Matrix<Q>) -> Sign {
    let d = expansion_det(m);
    assert!(!d.is_zero(), "degenerate basis in oracle");
    if d.is_positive() {
        Sign::Plus
    } else {
        Sign::Minus
    }
}

pub fn rand_q(rng: &mut ChaCha8Rng) -> Q {
    let n: i64 = rng.gen_range(-5..=5);
    let d: i64 = rng.gen_range(1..=2);
    Q::new(n.into(), d.into())
}

pub fn rand_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix<Q> {
    let data = (0..r * c).map(|_| rand_q(rng)).collect();
    Matrix { rows: r, cols: c, data }
}

pub fn rand_sign(rng: &mut ChaCha8Rng) -> Sign {
    if rng.gen_bool(0.5) {
        Sign::Plus
    } else {
        Sign::Minus
    }
}

/// Oracle fiber product sign of a basis `c` of `ker(dg - df)`: the sign of
/// `[c | s]` for a splitting `s`, times the orientations of `M x Gamma` and `X`.
pub fn oracle_fiber_sign(p: &LinearFiberProblem, c: &Matrix<Q>) -> Sign {
    let d = p.df.scale(&q(-1)).hcat(&p.dg);
    let s = d.right_inverse().expect("oracle: not transverse");
    det_sign(&c.hcat(&s)) * p.m.sign * p.gamma.sign * p.x.sign
}

/// Coordinates `t` with `basis * t = v` (columns).
fn coords(basis: &Matrix<Q>, v: &Matrix<Q>) -> Matrix<Q> {
    let cols: Vec<Vec<Q>> = (0..v.cols)
        .map(|j| basis.solve(&v.col(j)).expect("vector outside span"))
        .collect();
    Matrix::from_cols(basis.cols, &cols)
}

/// Positively oriented basis of the fiber product together with the sign
/// carried when the fiber is a point.
fn oriented_basis(p: &LinearFiberProblem) -> (Matrix<Q>, Sign) {
    let mut k = p.combined_map().kernel();
    let s = oracle_fiber_sign(p, &k);
    if k.cols == 0 {
        return (k, s);
    }
    if s == Sign::Minus {
        for i in 0..k.rows {
            let v = -k[(i, 0)].clone();
            k[(i, 0)] = v;
        }
    }
    (k, Sign::Plus)
}

pub struct Dims {
    pub m: usize,
    pub g: usize,
    pub x: usize,
}

fn rand_problem(rng: &mut ChaCha8Rng, d: &Dims) -> LinearFiberProblem {
    LinearFiberProblem {
        m: OrientedSpace::new(d.m, rand_sign(rng)),
        gamma: OrientedSpace::new(d.g, rand_sign(rng)),
        x: OrientedSpace::new(d.x, rand_sign(rng)),
        df: rand_matrix(rng, d.x, d.m),
        dg: rand_matrix(rng, d.x, d.g),
    }
}

/// The fiber product restricted to the face where the last coordinate of
/// `M` (or `Gamma`) vanishes, the half-space being `{last <= 0}`.
fn face_problem(p: &LinearFiberProblem, face: Face) -> LinearFiberProblem {
    match face {
        Face::BoundaryM => LinearFiberProblem {
            m: OrientedSpace::new(p.m.dim - 1, p.m.sign),
            df: p.df.col_range(0, p.m.dim - 1),
            ..p.clone()
        },
        Face::BoundaryGamma => LinearFiberProblem {
            gamma: OrientedSpace::new(p.gamma.dim - 1, p.gamma.sign),
            dg: p.dg.col_range(0, p.gamma.dim - 1),
            ..p.clone()
        },
    }
}

/// Returns (oracle sign, formula sign) for one generated boundary instance,
/// or `None` if the sample was not transverse.
pub fn boundary_case(rng: &mut ChaCha8Rng, face: Face) -> Option<(Sign, Sign)> {
    let d = Dims { m: rng.gen_range(0..=6), g: rng.gen_range(0..=6), x: rng.gen_range(0..=6) };
    let has_face = match face {
        Face::BoundaryM => d.m >= 1,
        Face::BoundaryGamma => d.g >= 1,
    };
    if !has_face || d.m + d.g < d.x + 1 {
        return None;
    }
    let p = rand_problem(rng, &d);
    let fp = face_problem(&p, face);
    if !p.is_transverse() || !fp.is_transverse() {
        return None;
    }
    let (c, _) = oriented_basis(&p);
    // boundary coordinate index inside Q^{m+g}
    let bidx = match face {
        Face::BoundaryM => d.m - 1,
        Face::BoundaryGamma => d.m + d.g - 1,
    };
    let fb = fp.combined_map().kernel();
    // embed the face kernel into Q^{m+g}
    let mut emb = Matrix::zeros(d.m + d.g, fb.cols);
    for j in 0..fb.cols {
        let mut r = 0;
        for i in 0..d.m + d.g {
            if i == bidx {
                continue;
            }
            emb[(i, j)] = fb[(r, j)].clone();
            r += 1;
        }
    }
    // outward normal inside the fiber: a kernel vector with positive last coordinate
    let coord_row = c.row_range(bidx, bidx + 1);
    let j = (0..c.cols).find(|&j| !coord_row[(0, j)].is_zero())?;
    let mut n = c.col_range(j, j + 1);
    if n[(bidx, 0)].is_negative() {
        n = n.scale(&q(-1));
    }
    // boundary orientation of the face basis, as a face of the fiber product
    let as_boundary = det_sign(&coords(&c, &emb.hcat(&n)));
    // its orientation as the fiber product of the face
    let as_product = oracle_fiber_sign(&fp, &fb);
    Some((as_boundary * as_product, boundary_sign_formula(d.m, d.g, d.x, face)))
}

fn signed_perm(rng: &mut ChaCha8Rng, n: usize) -> Matrix<Q> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        idx.swap(i, j);
    }
    let mut m = Matrix::zeros(n, n);
    for (i, &j) in idx.iter().enumerate() {
        m[(i, j)] = q(if rng.gen_bool(0.5) { 1 } else { -1 });
    }
    m
}

fn order_pair(a: &Matrix<Q>, b: &Matrix<Q>) -> usize {
    let (mut pa, mut pb) = (a.clone(), b.clone());
    let (ia, ib) = (Matrix::identity(a.rows), Matrix::identity(b.rows));
    for k in 1..=10_000 {
        if pa == ia && pb == ib {
            return k;
        }
        pa = pa.mul(a);
        pb = pb.mul(b);
    }
    panic!("signed permutation of huge order");
}

/// Average `d0` over the cyclic group so that `px * d = d * pm`.
fn equivariant(d0: &Matrix<Q>, px: &Matrix<Q>, pm: &Matrix<Q>) -> Matrix<Q> {
    let n = order_pair(px, pm);
    let pm_inv = pm.inverse().unwrap();
    let mut acc = Matrix::zeros(d0.rows, d0.cols);
    let (mut l, mut r) = (Matrix::identity(px.rows), Matrix::identity(pm.rows));
    for _ in 0..n {
        let t = l.mul(d0).mul(&r);
        acc = Matrix { data: acc.data.iter().zip(&t.data).map(|(a, b)| a + b).collect(), ..acc };
        l = l.mul(px);
        r = r.mul(&pm_inv);
    }
    // the mean keeps entries inside the sampling range
    acc.scale(&Q::new(1.into(), (n as i64).into()))
}

/// (oracle sign, formula sign) for one diffeomorphism flip, or `None`.
pub fn flip_case(rng: &mut ChaCha8Rng) -> Option<(Sign, Sign)> {
    let d = Dims { m: rng.gen_range(0..=6), g: rng.gen_range(0..=6), x: rng.gen_range(0..=6) };
    if d.m + d.g < d.x {
        return None;
    }
    let (pm, pg, px) = (signed_perm(rng, d.m), signed_perm(rng, d.g), signed_perm(rng, d.x));
    let mut p = rand_problem(rng, &d);
    p.df = equivariant(&p.df, &px, &pm);
    p.dg = equivariant(&p.dg, &px, &pg);
    if !p.is_transverse() {
        return None;
    }
    let (c, s) = oriented_basis(&p);
    let image = pm.block_diag(&pg).mul(&c);
    let oracle = if c.cols == 0 { s * oracle_fiber_sign(&p, &image) } else { oracle_fiber_sign(&p, &image) };
    let formula = flip_sign(det_sign(&pm), det_sign(&pg), det_sign(&px));
    Some((oracle, formula))
}

/// (oracle sign, formula sign) for one three-factor association, or `None`.
/// Every space involved, including `Gamma x C` and `X x Y`, has dimension at most 6.
pub fn association_case(rng: &mut ChaCha8Rng) -> Option<(Sign, Sign)> {
    let (m, g, c, x, y) = (
        rng.gen_range(0..=6),
        rng.gen_range(0..=3),
        rng.gen_range(0..=3),
        rng.gen_range(0..=3),
        rng.gen_range(0..=3),
    );
    if m + g < x || m + g + c < x + y {
        return None;
    }
    let (sm, sg, sc, sx, sy) =
        (rand_sign(rng), rand_sign(rng), rand_sign(rng), rand_sign(rng), rand_sign(rng));
    let df = rand_matrix(rng, x, m);
    let dg = rand_matrix(rng, x, g);
    let de = rand_matrix(rng, y, m);
    let dh = rand_matrix(rng, y, c);
    let first = LinearFiberProblem {
        m: OrientedSpace::new(m, sm),
        gamma: OrientedSpace::new(g, sg),
        x: OrientedSpace::new(x, sx),
        df: df.clone(),
        dg: dg.clone(),
    };
    if !first.is_transverse() {
        return None;
    }
    let (c1, s1) = oriented_basis(&first);
    let f1 = c1.cols;
    let proj_m = Matrix::<Q>::identity(m).hcat(&Matrix::zeros(m, g));
    let second = LinearFiberProblem {
        m: OrientedSpace::new(f1, s1),
        gamma: OrientedSpace::new(c, sc),
        x: OrientedSpace::new(y, sy),
        df: de.mul(&proj_m).mul(&c1),
        dg: dh.clone(),
    };
    let right = LinearFiberProblem {
        m: OrientedSpace::new(m, sm),
        gamma: OrientedSpace::new(g + c, sg * sc),
        x: OrientedSpace::new(x + y, sx * sy),
        df: df.vcat(&de),
        dg: dg.block_diag(&dh),
    };
    if !second.is_transverse() || !right.is_transverse() {
        return None;
    }
    let (k2, s2) = oriented_basis(&second);
    let v = c1.block_diag(&Matrix::identity(c)).mul(&k2);
    let oracle = s2 * oracle_fiber_sign(&right, &v);
    Some((oracle, association_sign(x, y as i64 - c as i64)))
}

/// Run `n` accepted samples of `case`; returns the number of disagreements.
pub fn run_cases(
    rng: &mut ChaCha8Rng,
    n: usize,
    mut case: impl FnMut(&mut ChaCha8Rng) -> Option<(Sign, Sign)>,
) -> usize {
    let mut done = 0;
    let mut bad = 0;
    while done < n {
        if let Some((a, b)) = case(rng) {
            done += 1;
            if a != b {
                bad += 1;
            }
        }
    }
    bad
}
