//! Seeded random targets with atom pools and full linking data.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounding_chain::DiskModel;
use crate::lattice::{ConstraintTuple, DegreeClass, Descriptor, Lattice, Target};
use crate::multidisk::{DiskAtom, LinkingMatrix};
use crate::orientation::Sign;
use crate::ring::{q, qf, Q};

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticParams {
    /// Bound on the total generator count of the target degree.
    pub max_degree: i64,
    pub max_points: usize,
    /// Force at least this many points on the target tuple.
    pub min_points: usize,
    /// Atoms drawn per zero-dimensional tuple (pairs when involutive).
    pub atoms_per_tuple: usize,
    /// Probability that a tuple gets any atoms.
    pub fill: f64,
    pub link_bound: i64,
    /// Generate conjugate pairs of atoms with reversed linking.
    pub involutive: bool,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            max_degree: 3,
            max_points: 3,
            min_points: 0,
            atoms_per_tuple: 1,
            fill: 0.7,
            link_bound: 3,
            involutive: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticInstance {
    pub seed: u64,
    pub target: Target,
    pub alpha: ConstraintTuple,
    pub pool: Vec<DiskAtom>,
    pub links: LinkingMatrix<Q>,
    /// Atom id to conjugate atom id, for involutive instances.
    pub conj: BTreeMap<String, String>,
}

impl SyntheticInstance {
    pub fn model(&self) -> DiskModel<'_> {
        DiskModel { target: &self.target, pool: &self.pool, links: &self.links }
    }
}

fn lattice(rng: &mut ChaCha8Rng) -> Lattice {
    if rng.gen_bool(0.5) {
        Lattice {
            rank: 1,
            area: vec![q(1)],
            maslov: vec![2],
            generators: vec![DegreeClass(vec![1])],
            area_gap: Some(q(1)),
        }
    } else {
        Lattice {
            rank: 2,
            area: vec![q(1), qf(3, 2)],
            maslov: vec![2, 2],
            generators: vec![DegreeClass(vec![1, 0]), DegreeClass(vec![0, 1])],
            area_gap: Some(q(1)),
        }
    }
}

fn random_degree(rng: &mut ChaCha8Rng, rank: usize, max: i64) -> DegreeClass {
    let total = rng.gen_range(1..=max);
    if rank == 1 {
        return DegreeClass(vec![total]);
    }
    let a = rng.gen_range(0..=total);
    DegreeClass(vec![a, total - a])
}

pub fn generate(seed: u64, p: &SyntheticParams) -> SyntheticInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lattice = lattice(&mut rng);
    let beta = random_degree(&mut rng, lattice.rank, p.max_degree);
    let mu = lattice.maslov(&beta);
    // mu = 2|K| + sum of codimension excesses
    let max_pts = p.max_points.min((mu / 2) as usize);
    let n_pts = rng.gen_range(p.min_points.min(max_pts)..=max_pts);
    let mut excess = mu - 2 * n_pts as i64;
    let mut descriptors = BTreeMap::new();
    let mut l = BTreeSet::new();
    let mut n = 0;
    while excess > 0 {
        let codim = if excess >= 4 && rng.gen_bool(0.3) { 6 } else { 4 };
        n += 1;
        let id = format!("G{n}");
        descriptors.insert(id.clone(), Descriptor { codim });
        l.insert(id);
        excess -= codim as i64 - 2;
    }
    if rng.gen_bool(0.3) {
        descriptors.insert("H".into(), Descriptor { codim: 2 });
        l.insert("H".into());
    }
    let k: BTreeSet<String> = (1..=n_pts).map(|i| format!("p{i}")).collect();
    let target = Target { lattice, descriptors };
    let alpha = ConstraintTuple { beta, k, l };

    let mut tuples: Vec<ConstraintTuple> = target.enumerate_below(&alpha).expect("valid lattice").into_iter().collect();
    tuples.push(alpha.clone());
    tuples.retain(|t| !t.beta.is_zero() && target.dimension(t) == 0);
    tuples.sort();

    let mut pool = Vec::new();
    let mut conj = BTreeMap::new();
    for t in &tuples {
        if !rng.gen_bool(p.fill) {
            continue;
        }
        let count = rng.gen_range(1..=p.atoms_per_tuple.max(1));
        for _ in 0..count {
            let sign = if rng.gen_bool(0.5) { Sign::Plus } else { Sign::Minus };
            let i = pool.len();
            let mut atom = DiskAtom {
                id: format!("u{i}"),
                degree: t.beta.clone(),
                k: t.k.clone(),
                l: t.l.clone(),
                sign,
                boundary: format!("c{i}"),
            };
            if p.involutive {
                let mut bar = atom.clone();
                bar.id = format!("u{i}b");
                bar.boundary = format!("c{i}b");
                atom.id = format!("u{i}a");
                atom.boundary = format!("c{i}a");
                conj.insert(atom.id.clone(), bar.id.clone());
                conj.insert(bar.id.clone(), atom.id.clone());
                pool.push(atom);
                pool.push(bar);
            } else {
                pool.push(atom);
            }
        }
    }

    let mut links = LinkingMatrix::new();
    for a in &pool {
        links.declare_bounding(&a.boundary);
    }
    // orbit representative and orientation of every loop
    let orbit = |a: &DiskAtom| -> (String, i64) {
        match a.id.strip_suffix('b') {
            Some(base) if p.involutive => (format!("{base}a"), -1),
            _ => (a.id.clone(), 1),
        }
    };
    let mut base: BTreeMap<(String, String), i64> = BTreeMap::new();
    let order: Vec<&DiskAtom> = pool.iter().collect();
    for (i, a) in order.iter().enumerate() {
        for b in &order[i + 1..] {
            let (ra, sa) = orbit(a);
            let (rb, sb) = orbit(b);
            let key = if ra <= rb { (ra.clone(), rb.clone()) } else { (rb.clone(), ra.clone()) };
            let v = if ra == rb {
                rng.gen_range(-p.link_bound..=p.link_bound)
            } else {
                sa * sb * *base.entry(key).or_insert_with(|| rng.gen_range(-p.link_bound..=p.link_bound))
            };
            links.set(&a.boundary, &b.boundary, q(v)).expect("declared loops");
        }
    }
    SyntheticInstance { seed, target, alpha, pool, links, conj }
}
