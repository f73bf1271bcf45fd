//! Small rank-1 targets and tables built to satisfy the structural rules.

use opengw::lattice::{ClosedLattice, DegreeClass, Lattice};
use opengw::ring::{q, qf};
use opengw::wdvv::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn g(n: i64) -> DegreeClass {
    DegreeClass(vec![n])
}

fn basis_class(name: &str, degree: u32, j: usize) -> InsertionClass {
    InsertionClass { name: name.into(), degree, restriction: vec![(j, q(1))] }
}

/// Basis `1, H, H2, P` (anti-diagonal pairing) plus `S` at index 4,
/// Maslov 4 and `q(L) = c g`.
pub fn target(c: i64, w2: i64, y_nonzero: bool) -> WdvvTarget {
    let mut classes = vec![basis_class("1", 0, 0), basis_class("H", 2, 1), basis_class("H2", 4, 2), basis_class("P", 6, 3)];
    classes.push(InsertionClass { name: "S".into(), degree: 4, restriction: vec![] });
    let pairing = (0..4).map(|i| (0..4).map(|j| q((i + j == 3) as i64)).collect()).collect();
    WdvvTarget {
        lattice: Lattice { rank: 1, area: vec![q(1)], maslov: vec![4], generators: vec![g(1)], area_gap: Some(q(1)) },
        closed: ClosedLattice { rank: 1, q: vec![vec![c]], generators: vec![g(1)], w2: vec![w2] },
        model: CohomologyModel::new(classes, 4, pairing, Some(4), y_nonzero).unwrap(),
    }
}

pub fn multisets(from: usize, to: usize, len: usize) -> Vec<Vec<usize>> {
    if len == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for c in from..to {
        for mut rest in multisets(c, to, len - 1) {
            rest.insert(0, c);
            out.push(rest);
        }
    }
    out
}

/// Random values on tuples over `H2, P`, extended by the divisor rule
/// for `H` (factor `3 β`) and a sign for every `S`.
pub fn planted(seed: u64) -> OpenInvariantTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = OpenInvariantTable::default();
    for beta in 1..=2i64 {
        for len in 0..=2 {
            for core in multisets(2, 4, len) {
                let base = qf(rng.gen_range(-9..=9), rng.gen_range(1..=4));
                for h in 0..=2 {
                    for s in 0..=1 {
                        let mut ins = core.clone();
                        ins.extend(std::iter::repeat(1).take(h));
                        ins.extend(std::iter::repeat(4).take(s));
                        let mut v = base.clone();
                        for _ in 0..h {
                            v *= q(3 * beta);
                        }
                        if s == 1 {
                            v = -v;
                        }
                        t.insert(Key::new(g(beta), ins), v);
                    }
                }
            }
        }
    }
    t
}
