mod common;

use std::collections::{BTreeSet, HashMap};

use common::wdvv_oracle::Rank1;
use opengw::fixtures::toy;
use opengw::lattice::{ClosedLattice, DegreeClass, Lattice};
use opengw::ring::{q, qf, Q};
use opengw::wdvv::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn g(n: i64) -> DegreeClass {
    DegreeClass(vec![n])
}

fn toy_opts() -> SolveOptions {
    SolveOptions { area_bound: q(1), max_insertions: 5, order: EquationOrder::Lex, binomial: BinomialConvention::ZeroOutside }
}

fn basis_class(name: &str, degree: u32, j: usize) -> InsertionClass {
    InsertionClass { name: name.into(), degree, restriction: vec![(j, q(1))] }
}

struct Random {
    target: WdvvTarget,
    closed: ClosedGWTable,
    open: OpenInvariantTable,
    oracle: Rank1,
}

fn small(rng: &mut ChaCha8Rng) -> Q {
    qf(rng.gen_range(-4..=4), rng.gen_range(1..=3))
}

fn multisets(alphabet: usize, max_len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for m in &frontier {
            let from = m.last().copied().unwrap_or(0);
            for c in from..alphabet {
                let mut v: Vec<usize> = m.clone();
                v.push(c);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Basis `1, H, H2, P` with a random top pairing, an extra degree-4 class
/// restricting to a multiple of `H2`, and a zero-restricting degree-4 class.
/// The closed generator maps to `c g`; every table entry is random.
fn random_instance(seed: u64, max_len: usize) -> Random {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mu = if rng.gen_bool(0.5) { 2 } else { 4 };
    let c = rng.gen_range(1..=2);
    let w2 = if rng.gen_bool(0.5) { 1 } else { -1 };
    let y_nonzero = rng.gen_bool(0.25);
    let a = qf(rng.gen_range(1..=3), 1) * if rng.gen_bool(0.5) { q(1) } else { q(-1) };
    let b = qf(rng.gen_range(1..=3), rng.gen_range(1..=2));
    let e = small(&mut rng) + q(5);
    let z = q(0);
    let pairing = vec![
        vec![z.clone(), z.clone(), z.clone(), a.clone()],
        vec![z.clone(), z.clone(), b.clone(), z.clone()],
        vec![z.clone(), b.clone(), z.clone(), z.clone()],
        vec![a.clone(), z.clone(), z.clone(), z.clone()],
    ];
    let mut classes = vec![basis_class("1", 0, 0), basis_class("H", 2, 1), basis_class("H2", 4, 2), basis_class("P", 6, 3)];
    classes.push(InsertionClass { name: "E".into(), degree: 4, restriction: vec![(2, e.clone())] });
    classes.push(InsertionClass { name: "S".into(), degree: 4, restriction: vec![] });
    let model = CohomologyModel::new(classes, 4, pairing, Some(5), y_nonzero).unwrap();
    let target = WdvvTarget {
        lattice: Lattice { rank: 1, area: vec![q(1)], maslov: vec![mu], generators: vec![g(1)], area_gap: Some(q(1)) },
        closed: ClosedLattice { rank: 1, q: vec![vec![c]], generators: vec![g(1)], w2: vec![w2] },
        model: model.clone(),
    };
    let degrees: Vec<i64> = model.classes.iter().map(|c| c.degree as i64).collect();
    let restriction: Vec<Vec<Q>> = model
        .classes
        .iter()
        .map(|cl| {
            let mut v = vec![q(0); 4];
            for (j, x) in &cl.restriction {
                v[*j] = x.clone();
            }
            v
        })
        .collect();
    let mut closed = ClosedGWTable::default();
    let mut closed_map = HashMap::new();
    for bb in 0..=2 {
        closed.covered.insert(g(bb));
        for m in multisets(4, max_len + 1) {
            if rng.gen_bool(0.4) {
                let v = small(&mut rng);
                closed.insert(g(bb), m.clone(), v.clone());
                if v != q(0) {
                    closed_map.insert((bb, m), v);
                }
            }
        }
    }
    let mut open = OpenInvariantTable::default();
    let mut open_map = HashMap::new();
    for beta in 0..=2 {
        for m in multisets(6, max_len) {
            let key = Key::new(g(beta), m.clone());
            if hardwired(&target, &key).is_some() {
                continue;
            }
            let v = small(&mut rng);
            open.insert(key, v.clone());
            open_map.insert((beta, m), v);
        }
    }
    let oracle = Rank1 {
        mu,
        c,
        w2,
        y_nonzero,
        degrees,
        restriction,
        basis_len: 4,
        ginv: model.inverse.clone(),
        closed: closed_map,
        open: open_map,
    };
    Random { target, closed, open, oracle }
}

#[test]
fn partition_families() {
    for l in 1..=7 {
        let all = partitions(l, Anchors::All).unwrap();
        assert_eq!(all.len(), 1 << (l - 1));
        for (i, j) in &all {
            assert!(i.contains(&1));
            let mut u: Vec<usize> = i.iter().chain(j).copied().collect();
            u.sort();
            assert_eq!(u, (1..=l).collect::<Vec<_>>());
        }
        for a in 1..=l {
            for b in 1..=l {
                if a == b {
                    continue;
                }
                let both: BTreeSet<_> = partitions(l, Anchors::InOut(a, b)).unwrap().into_iter().collect();
                let left: BTreeSet<_> = partitions(l, Anchors::In(a)).unwrap().into_iter().collect();
                let right: BTreeSet<_> = partitions(l, Anchors::Out(b)).unwrap().into_iter().collect();
                assert_eq!(both, left.intersection(&right).cloned().collect());
            }
        }
    }
    // exhaustive: 1, 2 in I and 3 in J leaves a single splitting of three indices
    assert_eq!(partitions(3, Anchors::InOut(2, 3)).unwrap(), vec![(vec![1, 2], vec![3])]);
    assert_eq!(partitions(3, Anchors::In(4)), Err(WdvvError::Anchor(4, 3)));
    assert_eq!(partitions(2, Anchors::Out(0)), Err(WdvvError::Anchor(0, 2)));
}

#[test]
fn degree_splits() {
    let r = random_instance(1, 2);
    let mut t = r.target.clone();
    assert_eq!(real_splits(&t, &g(0)).unwrap(), vec![(g(0), g(0))]);
    let mut s = real_splits(&t, &g(2)).unwrap();
    s.sort();
    assert_eq!(s, vec![(g(0), g(2)), (g(1), g(1)), (g(2), g(0))]);
    t.closed.q = vec![vec![3]];
    // q(L) = 3g lies above 2g, so only B = 0 remains
    assert_eq!(complex_splits(&t, &g(2)).unwrap(), vec![(g(2), g(0))]);
    t.closed.q = vec![vec![1]];
    let mut cs = complex_splits(&t, &g(2)).unwrap();
    cs.sort();
    assert_eq!(cs, vec![(g(0), g(2)), (g(1), g(1)), (g(2), g(0))]);
    t.closed.q = vec![vec![0]];
    assert!(complex_splits(&t, &g(1)).is_err());
}

#[test]
fn binomial_conventions() {
    let z = BinomialConvention::ZeroOutside;
    assert_eq!(binomial(5, 2, z), q(10));
    assert_eq!(binomial(4, -1, z), q(0));
    assert_eq!(binomial(4, 5, z), q(0));
    assert_eq!(binomial(0, 0, z), q(1));
    let c = BinomialConvention::Clamped;
    assert_eq!(binomial(4, -1, c), q(1));
    assert_eq!(binomial(4, 6, c), q(1));
    assert_eq!(binomial(5, 2, c), q(10));
}

#[test]
fn residuals_match_direct_summation() {
    let mut checked = 0;
    let mut nonzero = 0;
    for seed in 0..12 {
        let r = random_instance(seed, 4);
        let ev = Evaluator::new(&r.target, &r.closed, Some(&r.open));
        for inst in enumerate_instances(&r.target, &q(2), 4).unwrap() {
            let got = ev.residual(&inst).unwrap().as_constant().expect("table is complete");
            let want = match inst.relation {
                Relation::First => r.oracle.first(inst.beta.0[0], &inst.gamma),
                Relation::Second => r.oracle.second(inst.beta.0[0], &inst.gamma),
            };
            assert_eq!(got, want, "seed {seed}: {inst}");
            checked += 1;
            nonzero += (got != q(0)) as usize;
        }
    }
    assert!(checked > 2000 && nonzero > checked / 2, "{checked} checked, {nonzero} nonzero");
}

#[test]
fn zero_tables_give_zero_residuals() {
    let r = random_instance(3, 4);
    let closed = ClosedGWTable { covered: r.closed.covered.clone(), ..Default::default() };
    let mut open = r.open.clone();
    for v in open.entries.values_mut() {
        *v = q(0);
    }
    let ev = Evaluator::new(&r.target, &closed, Some(&open));
    // the unit bracket at degree zero is fixed, so those tuples keep a closed term
    for inst in enumerate_instances(&r.target, &q(2), 4).unwrap().iter().filter(|i| !i.gamma.contains(&0)) {
        assert!(ev.residual(&inst).unwrap().is_zero(), "{inst}");
    }
}

fn add_tables(a: &OpenInvariantTable, b: &OpenInvariantTable, s: &Q) -> OpenInvariantTable {
    let mut t = a.clone();
    for (k, v) in &b.entries {
        let e = t.entries.entry(k.clone()).or_insert_with(|| q(0));
        *e += v * s;
    }
    t
}

#[test]
fn blocks_are_linear_and_quadratic() {
    for seed in 0..4 {
        let r = random_instance(seed, 3);
        let other = random_instance(seed + 100, 3);
        let zero = add_tables(&r.open, &r.open, &q(-1));
        let insts = enumerate_instances(&r.target, &q(2), 3).unwrap();
        let parts = |closed: &ClosedGWTable, open: &OpenInvariantTable, i: &Instance| {
            let p = Evaluator::new(&r.target, closed, Some(open)).parts(i).unwrap();
            (p.closed_block.as_constant().unwrap(), p.open_block.as_constant().unwrap())
        };
        // closed tables on the same classes
        let mut closed2 = other.closed.clone();
        closed2.covered = r.closed.covered.clone();
        let mut sum = r.closed.clone();
        for ((b, m), v) in &closed2.entries {
            let e = sum.entries.entry((b.clone(), m.clone())).or_insert_with(|| q(0));
            *e += v;
        }
        let ob = other.open.clone();
        for i in &insts {
            let (c1, _) = parts(&r.closed, &r.open, i);
            let (c2, _) = parts(&closed2, &r.open, i);
            let (c12, _) = parts(&sum, &r.open, i);
            assert_eq!(c12, c1 + c2, "closed block additive in the closed table: {i}");

            // second differences along the open table (the shared-key union)
            let a = &r.open;
            let ab = add_tables(a, &ob, &q(1));
            let a2b = add_tables(a, &ob, &q(2));
            let (ca, oa) = parts(&r.closed, a, i);
            let (cb, obv) = parts(&r.closed, &add_tables(&zero, &ob, &q(1)), i);
            let (cab, oab) = parts(&r.closed, &ab, i);
            let (c0, o0) = parts(&r.closed, &zero, i);
            let (_, oa2b) = parts(&r.closed, &a2b, i);
            let (_, ob2) = parts(&r.closed, &add_tables(&zero, &ob, &q(2)), i);
            assert_eq!(cab.clone() - ca.clone() - cb.clone() + c0.clone(), q(0), "closed block affine: {i}");
            let d1 = oab - oa.clone() - obv + o0.clone();
            let d2 = oa2b - oa - ob2 + o0;
            assert_eq!(d2, q(2) * d1, "open block quadratic: {i}");
        }
    }
}

#[test]
fn residuals_are_symmetric_beyond_the_anchors() {
    let r = random_instance(7, 5);
    let ev = Evaluator::new(&r.target, &r.closed, Some(&r.open));
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut checked = 0;
    for inst in enumerate_instances(&r.target, &q(2), 5).unwrap() {
        if inst.gamma.len() < 5 || !rng.gen_bool(0.2) {
            continue;
        }
        let base = ev.residual(&inst).unwrap();
        let mut perm = inst.clone();
        let tail = &mut perm.gamma[3..];
        tail.reverse();
        tail.rotate_left(1);
        assert_eq!(ev.residual(&perm).unwrap(), base, "{inst}");
        if inst.relation == Relation::First {
            // only 1 and 2 are anchored here
            let mut p3 = inst.clone();
            p3.gamma.swap(2, 4);
            assert_eq!(ev.residual(&p3).unwrap(), base, "{inst}");
        }
        checked += 1;
    }
    assert!(checked > 50);
}

#[test]
fn hypotheses_are_enforced() {
    let t = toy().unwrap();
    let w = t.target.wdvv().unwrap();
    let ev = Evaluator::new(w, &t.closed, None);
    // (H2, H2, H2) at g has k = -2
    assert!(matches!(wdvv2_residual(&ev, &g(1), &[2, 2, 2]), Err(WdvvError::Hypothesis(_))));
    // (H, P) at g has k_g = 0, so k = -1
    assert!(matches!(wdvv1_residual(&ev, &g(1), &[1, 3]), Err(WdvvError::Hypothesis(_))));
    assert!(matches!(wdvv2_residual(&ev, &g(1), &[1, 1]), Err(WdvvError::Hypothesis(_))));
    assert!(matches!(wdvv1_residual(&ev, &g(1), &[1, 9]), Err(WdvvError::UnknownClass(9))));
    let mut table = OpenInvariantTable::default();
    assert!(table.insert_with_k(w, g(1), vec![2], 1, q(2)).is_ok());
    assert!(matches!(table.insert_with_k(w, g(1), vec![2], 2, q(2)), Err(WdvvError::KMismatch { .. })));
}

#[test]
fn toy_plant_and_recover() {
    let t = toy().unwrap();
    let w = t.target.wdvv().unwrap();
    let r = solve_recursion(w, &t.closed, &t.seeds, &toy_opts()).unwrap();
    assert!(r.unsolved.is_empty(), "{:?}", r.unsolved);
    assert!(!r.solved.is_empty());
    assert!(r.residual_vector_is_zero());
    assert!(r.residuals.len() > 500);
    for (k, v) in &t.planted.entries {
        assert_eq!(r.table.get(k), Some(v), "{k}");
    }
    for k in r.table.entries.keys() {
        assert!(t.planted.get(k).is_some() || t.seeds.get(k).is_some(), "{k}");
    }
}

#[test]
fn solutions_do_not_depend_on_instance_order() {
    let t = toy().unwrap();
    let w = t.target.wdvv().unwrap();
    let base = solve_recursion(w, &t.closed, &t.seeds, &toy_opts()).unwrap();
    for seed in 0..5 {
        let opts = SolveOptions { order: EquationOrder::Shuffled(seed), ..toy_opts() };
        let r = solve_recursion(w, &t.closed, &t.seeds, &opts).unwrap();
        assert_eq!(r.table, base.table);
        assert!(r.residual_vector_is_zero());
    }
}

fn full_planted() -> (opengw::fixtures::Toy, OpenInvariantTable) {
    let t = toy().unwrap();
    let mut full = t.seeds.clone();
    for (k, v) in &t.planted.entries {
        full.insert(k.clone(), v.clone());
    }
    (t, full)
}

fn residual_vector(w: &WdvvTarget, closed: &ClosedGWTable, open: &OpenInvariantTable, conv: BinomialConvention) -> Vec<Q> {
    let ev = Evaluator { target: w, closed, open: Some(open), binomial: conv };
    enumerate_instances(w, &q(1), 5)
        .unwrap()
        .iter()
        .map(|i| ev.residual(i).unwrap().as_constant().expect("complete table"))
        .collect()
}

#[test]
fn perturbed_entries_break_the_fixed_point() {
    let (t, full) = full_planted();
    let w = t.target.wdvv().unwrap();
    assert!(residual_vector(w, &t.closed, &full, BinomialConvention::ZeroOutside).iter().all(|x| *x == q(0)));
    let mut nonzero = 0;
    for k in t.planted.entries.keys() {
        let mut bad = full.clone();
        let e = bad.entries.get_mut(k).unwrap();
        *e += q(1);
        if residual_vector(w, &t.closed, &bad, BinomialConvention::ZeroOutside).iter().any(|x| *x != q(0)) {
            nonzero += 1;
        }
    }
    assert_eq!(nonzero, t.planted.entries.len());
}

#[test]
fn clamped_binomials_break_the_fixed_point() {
    let (t, full) = full_planted();
    let w = t.target.wdvv().unwrap();
    // clamping reaches brackets outside the planted table, so only the determined residuals count
    let ev = Evaluator { target: w, closed: &t.closed, open: Some(&full), binomial: BinomialConvention::Clamped };
    let v: Vec<Q> = enumerate_instances(w, &q(1), 5).unwrap().iter().filter_map(|i| ev.residual(i).unwrap().as_constant()).collect();
    assert!(v.iter().any(|x| *x != q(0)));
    let opts = SolveOptions { binomial: BinomialConvention::Clamped, ..toy_opts() };
    let r = solve_recursion(w, &t.closed, &t.seeds, &opts).unwrap();
    assert!(!r.inconsistent().is_empty() || r.table != solve_recursion(w, &t.closed, &t.seeds, &toy_opts()).unwrap().table);
}

#[test]
fn missing_base_cases_are_named() {
    let t = toy().unwrap();
    let w = t.target.wdvv().unwrap();
    let mut seeds = t.seeds.clone();
    let k = Key::new(g(0), vec![1, 1]);
    seeds.entries.remove(&k);
    assert_eq!(solve_recursion(w, &t.closed, &seeds, &toy_opts()), Err(WdvvError::MissingBaseCase(k.to_string())));
}

#[test]
fn unseeded_unknowns_are_reported() {
    let t = toy().unwrap();
    let w = t.target.wdvv().unwrap();
    let mut seeds = t.seeds.clone();
    let k = Key::new(g(1), vec![1, 3]);
    seeds.entries.remove(&k);
    let r = solve_recursion(w, &t.closed, &seeds, &toy_opts()).unwrap();
    assert!(r.unsolved.contains(&k));
    assert!(!r.undetermined().is_empty());
    assert!(r.table.get(&k).is_none());
}

#[test]
fn inconsistent_seeds_are_reported() {
    let t = toy().unwrap();
    let w = t.target.wdvv().unwrap();
    let mut seeds = t.seeds.clone();
    // an extra seed the relations determine otherwise
    seeds.insert(Key::new(g(1), vec![2]), q(7));
    let r = solve_recursion(w, &t.closed, &seeds, &toy_opts()).unwrap();
    let bad = r.inconsistent();
    assert!(!bad.is_empty());
    assert!(bad.iter().all(|(_, v)| *v != q(0)));
}

#[test]
fn empty_target_returns_the_seeds() {
    let t = toy().unwrap();
    let mut w = t.target.wdvv().unwrap().clone();
    w.lattice.generators.clear();
    w.closed.generators.clear();
    let seeds: OpenInvariantTable = OpenInvariantTable {
        entries: t.seeds.entries.iter().filter(|(k, _)| k.beta.is_zero()).map(|(k, v)| (k.clone(), v.clone())).collect(),
    };
    let r = solve_recursion(&w, &t.closed, &seeds, &toy_opts()).unwrap();
    assert_eq!(r.table, seeds);
    assert!(r.solved.is_empty() && r.unsolved.is_empty());
    assert!(r.residual_vector_is_zero());
}

#[test]
fn model_validation() {
    let basis = || vec![basis_class("1", 0, 0), basis_class("H", 2, 1), basis_class("H2", 4, 2), basis_class("P", 6, 3)];
    let id = |n: usize| -> Vec<Vec<Q>> { (0..n).map(|i| (0..n).map(|j| q((i + j == n - 1) as i64)).collect()).collect() };
    let m = CohomologyModel::new(basis(), 4, id(4), None, false).unwrap();
    assert_eq!(m.inverse, id(4));
    let mut p = id(4);
    p[1][1] = q(1);
    assert!(matches!(CohomologyModel::new(basis(), 4, p, None, false), Err(WdvvError::Model(_))));
    let mut p = id(4);
    p[1][2] = q(0);
    p[2][1] = q(0);
    assert_eq!(CohomologyModel::new(basis(), 4, p, None, false), Err(WdvvError::SingularPairing));
    let mut c = basis();
    c.push(InsertionClass { name: "S".into(), degree: 4, restriction: vec![(2, q(1))] });
    assert!(CohomologyModel::new(c, 4, id(4), Some(4), false).is_err());
    let mut c = basis();
    c.push(InsertionClass { name: "X".into(), degree: 2, restriction: vec![(2, q(1))] });
    assert!(CohomologyModel::new(c, 4, id(4), None, false).is_err());
    // a scaled pairing has the reciprocal inverse
    let mut p = id(4);
    p[0][3] = q(3);
    p[3][0] = q(3);
    let m = CohomologyModel::new(basis(), 4, p, None, false).unwrap();
    assert_eq!(m.inverse[3][0], qf(1, 3));
}
