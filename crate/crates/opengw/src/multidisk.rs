//! Multi-disk configurations, linking numbers and spanning-tree sums.
//!
//! A disk atom is a signed, zero-dimensional constrained disk with a boundary
//! loop. Linking numbers between loops are input data. `MD(alpha)` is the
//! set of exact covers of `alpha`'s constraints by atoms from a pool.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::lattice::{ConstraintTuple, DegreeClass, Label, Target};
use crate::linalg::Matrix;
use crate::orientation::Sign;
use crate::ring::Coefficient;

pub type LoopId = String;

#[derive(Debug, Error, PartialEq)]
pub enum MultiDiskError {
    #[error("{m} vertices exceed the spanning-tree enumeration cap {cap}")]
    TreeCap { m: usize, cap: usize },
    #[error("loop {0} is not declared null-homologous")]
    NotBounding(LoopId),
    #[error("self-linking of loop {0} is not defined")]
    SelfLinking(LoopId),
    #[error("no linking number for loops {0} and {1}")]
    MissingLink(LoopId, LoopId),
    #[error("inconsistent configuration: {0}")]
    InconsistentConfig(String),
    #[error("configuration set is not closed under conjugation: {0}")]
    NotInvolutionClosed(String),
    #[error("invalid atom {0}: {1}")]
    InvalidAtom(String, String),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct DiskAtom {
    pub id: String,
    pub degree: DegreeClass,
    pub k: BTreeSet<Label>,
    pub l: BTreeSet<Label>,
    pub sign: Sign,
    pub boundary: LoopId,
}

impl DiskAtom {
    pub fn tuple(&self) -> ConstraintTuple {
        ConstraintTuple { beta: self.degree.clone(), k: self.k.clone(), l: self.l.clone() }
    }
}

/// The four fiber-product expressions for the linking number of two loops
/// `a = db_a` and `b = db_b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinkExpression {
    /// `|b_a x_fb b|`
    ChainOfFirstWithSecond,
    /// `|a x_fb b_b|`
    FirstWithChainOfSecond,
    /// `|b_b x_fb a|`
    ChainOfSecondWithFirst,
    /// `|b x_fb b_a|`
    SecondWithChainOfFirst,
}

/// Symmetric linking numbers between null-homologous loops.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkingMatrix<R> {
    values: BTreeMap<(LoopId, LoopId), R>,
    bounding: BTreeSet<LoopId>,
}

impl<R: Coefficient> Default for LinkingMatrix<R> {
    fn default() -> Self {
        LinkingMatrix { values: BTreeMap::new(), bounding: BTreeSet::new() }
    }
}

fn key(a: &str, b: &str) -> (LoopId, LoopId) {
    if a <= b {
        (a.to_owned(), b.to_owned())
    } else {
        (b.to_owned(), a.to_owned())
    }
}

impl<R: Coefficient> LinkingMatrix<R> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare_bounding(&mut self, l: &str) {
        self.bounding.insert(l.to_owned());
    }

    pub fn set(&mut self, a: &str, b: &str, v: R) -> Result<(), MultiDiskError> {
        if a == b {
            return Err(MultiDiskError::SelfLinking(a.into()));
        }
        self.values.insert(key(a, b), v);
        Ok(())
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(LoopId, LoopId), &R)> {
        self.values.iter()
    }

    pub fn bounding_loops(&self) -> &BTreeSet<LoopId> {
        &self.bounding
    }

    /// `lk(a, b)`.
    pub fn lk(&self, a: &str, b: &str) -> Result<R, MultiDiskError> {
        if a == b {
            return Err(MultiDiskError::SelfLinking(a.into()));
        }
        for l in [a, b] {
            if !self.bounding.contains(l) {
                return Err(MultiDiskError::NotBounding(l.into()));
            }
        }
        self.values.get(&key(a, b)).cloned().ok_or_else(|| MultiDiskError::MissingLink(a.into(), b.into()))
    }

    /// The signed count of the given fiber-product expression. The first and
    /// third expressions equal `lk(a, b)`; the other two equal `-lk(a, b)`.
    pub fn linking_number(&self, a: &str, b: &str, e: LinkExpression) -> Result<R, MultiDiskError> {
        let v = self.lk(a, b)?;
        Ok(match e {
            LinkExpression::ChainOfFirstWithSecond | LinkExpression::ChainOfSecondWithFirst => v,
            LinkExpression::FirstWithChainOfSecond | LinkExpression::SecondWithChainOfFirst => -v,
        })
    }

    /// `lk` of two formal combinations of loops, extended bilinearly.
    pub fn lk_chains(
        &self,
        a: &BTreeMap<LoopId, R>,
        b: &BTreeMap<LoopId, R>,
    ) -> Result<R, MultiDiskError> {
        let mut acc = R::zero();
        for (la, ca) in a {
            for (lb, cb) in b {
                acc = acc + ca.clone() * cb.clone() * self.lk(la, lb)?;
            }
        }
        Ok(acc)
    }
}

/// An unordered multi-disk, stored with atoms sorted by id.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct MultiDisk {
    pub atoms: Vec<DiskAtom>,
}

impl MultiDisk {
    pub fn new(mut atoms: Vec<DiskAtom>) -> Self {
        atoms.sort();
        MultiDisk { atoms }
    }

    /// `sgn(u)`, the product of the atom signs.
    pub fn sign(&self) -> Sign {
        self.atoms.iter().fold(Sign::Plus, |s, a| s * a.sign)
    }

    pub fn degree(&self, rank: usize) -> DegreeClass {
        self.atoms.iter().fold(DegreeClass::zero(rank), |d, a| d.add(&a.degree))
    }

    /// `du` as a formal sum of loops with unit coefficients.
    pub fn boundary<R: Coefficient>(&self) -> BTreeMap<LoopId, R> {
        let mut m = BTreeMap::new();
        for a in &self.atoms {
            let c = m.remove(&a.boundary).unwrap_or_else(R::zero) + R::one();
            m.insert(a.boundary.clone(), c);
        }
        m
    }

    /// Check that the atoms partition `alpha`'s constraints and sum to its degree.
    pub fn check_partition(&self, alpha: &ConstraintTuple) -> Result<(), MultiDiskError> {
        let mut k = BTreeSet::new();
        let mut l = BTreeSet::new();
        for a in &self.atoms {
            for p in &a.k {
                if !k.insert(p.clone()) {
                    return Err(MultiDiskError::InconsistentConfig(format!("point {p} used twice")));
                }
            }
            for g in &a.l {
                if !l.insert(g.clone()) {
                    return Err(MultiDiskError::InconsistentConfig(format!("descriptor {g} used twice")));
                }
            }
        }
        if k != alpha.k || l != alpha.l {
            return Err(MultiDiskError::InconsistentConfig(format!("constraints do not match {alpha}")));
        }
        if self.degree(alpha.beta.0.len()) != alpha.beta {
            return Err(MultiDiskError::InconsistentConfig(format!("degrees do not sum to {}", alpha.beta)));
        }
        Ok(())
    }

    /// Pairwise linking matrix of the atom boundaries (diagonal zero).
    pub fn link_matrix<R: Coefficient>(&self, links: &LinkingMatrix<R>) -> Result<Matrix<R>, MultiDiskError> {
        let m = self.atoms.len();
        let mut w = Matrix::zeros(m, m);
        for i in 0..m {
            for j in i + 1..m {
                let v = links.lk(&self.atoms[i].boundary, &self.atoms[j].boundary)?;
                w[(i, j)] = v.clone();
                w[(j, i)] = v;
            }
        }
        Ok(w)
    }

    /// `lk(u)`, by the matrix-tree determinant.
    pub fn lk<R: Coefficient>(&self, links: &LinkingMatrix<R>) -> Result<R, MultiDiskError> {
        Ok(tree_weight_sum(&self.link_matrix(links)?))
    }
}

pub type Tree = Vec<(usize, usize)>;

/// Decode a Pruefer sequence on `m` vertices into the edge list of a tree.
fn pruefer_decode(seq: &[usize], m: usize) -> Tree {
    let mut degree = vec![1usize; m];
    for &s in seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(m.saturating_sub(1));
    for &s in seq {
        let leaf = (0..m).find(|&v| degree[v] == 1).unwrap();
        edges.push((leaf.min(s), leaf.max(s)));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let last: Vec<usize> = (0..m).filter(|&v| degree[v] == 1).collect();
    if last.len() == 2 {
        edges.push((last[0], last[1]));
    }
    edges.sort();
    edges
}

/// All spanning trees of the complete graph on `m` labelled vertices, as
/// sorted edge lists.
pub fn spanning_trees(m: usize, cap: usize) -> Result<Vec<Tree>, MultiDiskError> {
    if m > cap {
        return Err(MultiDiskError::TreeCap { m, cap });
    }
    if m <= 1 {
        return Ok(vec![Vec::new()]);
    }
    let len = m - 2;
    let mut out = Vec::with_capacity(m.pow(len as u32));
    let mut seq = vec![0usize; len];
    loop {
        out.push(pruefer_decode(&seq, m));
        // odometer increment
        let mut i = 0;
        while i < len {
            seq[i] += 1;
            if seq[i] < m {
                break;
            }
            seq[i] = 0;
            i += 1;
        }
        if i == len {
            break;
        }
    }
    Ok(out)
}

/// `lk(u; T)`: product of the edge weights.
pub fn tree_weight<R: Coefficient>(w: &Matrix<R>, t: &Tree) -> R {
    t.iter().fold(R::one(), |acc, &(a, b)| acc * w[(a, b)].clone())
}

/// Sum over spanning trees of the product of edge weights, by explicit
/// enumeration.
pub fn tree_weight_sum_enumerated<R: Coefficient>(w: &Matrix<R>, cap: usize) -> Result<R, MultiDiskError> {
    let trees = spanning_trees(w.rows, cap)?;
    Ok(trees.iter().fold(R::zero(), |acc, t| acc + tree_weight(w, t)))
}

/// Sum over spanning trees of the product of edge weights, as a cofactor of
/// the weighted Laplacian.
pub fn tree_weight_sum<R: Coefficient>(w: &Matrix<R>) -> R {
    let m = w.rows;
    if m <= 1 {
        return R::one();
    }
    let mut lap = Matrix::zeros(m - 1, m - 1);
    for i in 1..m {
        let mut d = R::zero();
        for j in 0..m {
            if j != i {
                d = d + w[(i, j)].clone();
            }
        }
        for j in 1..m {
            lap[(i - 1, j - 1)] = if i == j { d.clone() } else { -w[(i, j)].clone() };
        }
    }
    lap.det()
}

/// Atoms with the given tuple exactly: `SD(alpha)`.
pub fn single_disks<'a>(alpha: &ConstraintTuple, pool: &'a [DiskAtom]) -> Vec<&'a DiskAtom> {
    pool.iter().filter(|a| a.degree == alpha.beta && a.k == alpha.k && a.l == alpha.l).collect()
}

/// All multi-disks made of pool atoms whose constraints partition those of
/// `alpha` and whose degrees sum to its degree: `MD(alpha)`.
pub fn multi_disks(alpha: &ConstraintTuple, pool: &[DiskAtom]) -> Vec<MultiDisk> {
    let mut out = Vec::new();
    let mut chosen: Vec<&DiskAtom> = Vec::new();
    cover(alpha, &alpha.k, &alpha.l, pool, &mut chosen, &mut out);
    out.sort();
    out
}

fn cover<'a>(
    alpha: &ConstraintTuple,
    k: &BTreeSet<Label>,
    l: &BTreeSet<Label>,
    pool: &'a [DiskAtom],
    chosen: &mut Vec<&'a DiskAtom>,
    out: &mut Vec<MultiDisk>,
) {
    // branch on the smallest uncovered constraint so each cover is found once
    let first_k = k.iter().next();
    let first_l = l.iter().next();
    if first_k.is_none() && first_l.is_none() {
        let u = MultiDisk::new(chosen.iter().map(|a| (*a).clone()).collect());
        if u.degree(alpha.beta.0.len()) == alpha.beta {
            out.push(u);
        }
        return;
    }
    for a in pool {
        let covers_first = match first_k {
            Some(p) => a.k.contains(p),
            None => a.l.contains(first_l.unwrap()),
        };
        if !covers_first || !a.k.is_subset(k) || !a.l.is_subset(l) {
            continue;
        }
        let k2 = k.difference(&a.k).cloned().collect();
        let l2 = l.difference(&a.l).cloned().collect();
        chosen.push(a);
        cover(alpha, &k2, &l2, pool, chosen, out);
        chosen.pop();
    }
}

/// Validate pool atoms: nonzero degree, nonempty constraints, dimension zero,
/// unique ids and boundary loops declared bounding.
pub fn validate_pool<R: Coefficient>(
    target: &Target,
    pool: &[DiskAtom],
    links: &LinkingMatrix<R>,
) -> Result<(), MultiDiskError> {
    let mut ids = BTreeSet::new();
    let mut loops = BTreeSet::new();
    for a in pool {
        let bad = |why: &str| Err(MultiDiskError::InvalidAtom(a.id.clone(), why.into()));
        if !ids.insert(&a.id) {
            return bad("duplicate id");
        }
        if !loops.insert(&a.boundary) {
            return bad("boundary loop shared with another atom");
        }
        if a.degree.is_zero() {
            return bad("zero degree");
        }
        if a.k.is_empty() && a.l.is_empty() {
            return bad("no constraints");
        }
        if target.check_tuple(&a.tuple()).is_err() {
            return bad("not a valid constraint tuple");
        }
        if target.dimension(&a.tuple()) != 0 {
            return bad("dimension is not zero");
        }
        if !links.bounding_loops().contains(&a.boundary) {
            return Err(MultiDiskError::NotBounding(a.boundary.clone()));
        }
    }
    Ok(())
}

/// `sum over u of sgn(u) lk(u)`, with `sgn(u) = 0` unless `dim(alpha) = 0`.
pub fn welschinger_count<R: Coefficient>(
    target: &Target,
    alpha: &ConstraintTuple,
    configs: &[MultiDisk],
    links: &LinkingMatrix<R>,
) -> Result<R, MultiDiskError> {
    let mut acc = R::zero();
    for u in configs {
        u.check_partition(alpha)?;
    }
    if target.dimension(alpha) != 0 {
        return Ok(acc);
    }
    for u in configs {
        acc = acc + R::from_i64(u.sign().to_i64()) * u.lk(links)?;
    }
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CancellationReport<R> {
    /// Sum of `sgn(u) lk(u; T)` over multi-disks with at least two atoms.
    pub multi_total: R,
    /// Sum of `sgn(u)` over single disks.
    pub single_total: R,
    /// Sum of `sgn(u) lk(u)` over all configurations.
    pub total: R,
    /// Number of `(u, T)` pairs matched by the leaf flip.
    pub pairs: usize,
    /// Histogram of the number of leaves over all `(u, T)` with `m >= 2`.
    pub leaf_histogram: BTreeMap<usize, usize>,
    /// Histogram of the maximal vertex valence over the same set.
    pub valence_histogram: BTreeMap<usize, usize>,
}

/// Verify that the multi-disk part of a conjugation-closed configuration set
/// cancels in pairs.
///
/// `conj` maps each atom id to the id of its conjugate (same constraints and
/// sign, reversed boundary). The pairing flips the leaf of `T` carrying the
/// smallest constraint label, which is preserved by the flip.
pub fn conjugation_cancellation_check<R: Coefficient>(
    configs: &[MultiDisk],
    pool: &[DiskAtom],
    conj: &BTreeMap<String, String>,
    links: &LinkingMatrix<R>,
    cap: usize,
) -> Result<CancellationReport<R>, MultiDiskError> {
    let by_id: BTreeMap<&str, &DiskAtom> = pool.iter().map(|a| (a.id.as_str(), a)).collect();
    let closed_err = |s: String| Err(MultiDiskError::NotInvolutionClosed(s));
    // involution data
    for a in pool {
        let Some(c) = conj.get(&a.id) else { return closed_err(format!("atom {} has no conjugate", a.id)) };
        let Some(ca) = by_id.get(c.as_str()) else { return closed_err(format!("unknown conjugate {c}")) };
        if conj.get(c) != Some(&a.id) || c == &a.id {
            return closed_err(format!("conjugation is not a fixed-point-free involution at {}", a.id));
        }
        if ca.k != a.k || ca.l != a.l || ca.sign != a.sign {
            return closed_err(format!("conjugate {c} changes constraints or sign"));
        }
        for b in pool {
            if b.id == a.id || b.id == *c {
                continue;
            }
            if links.lk(&ca.boundary, &b.boundary)? != -links.lk(&a.boundary, &b.boundary)? {
                return closed_err(format!("link of {c} with {} is not reversed", b.id));
            }
        }
    }
    let set: BTreeSet<&MultiDisk> = configs.iter().collect();
    let flip = |u: &MultiDisk, r: usize| -> MultiDisk {
        let mut atoms = u.atoms.clone();
        atoms[r] = (*by_id[conj[&atoms[r].id].as_str()]).clone();
        MultiDisk::new(atoms)
    };
    let mut report = CancellationReport {
        multi_total: R::zero(),
        single_total: R::zero(),
        total: R::zero(),
        pairs: 0,
        leaf_histogram: BTreeMap::new(),
        valence_histogram: BTreeMap::new(),
    };
    for u in configs {
        let s = R::from_i64(u.sign().to_i64());
        report.total = report.total.clone() + s.clone() * u.lk(links)?;
        let m = u.atoms.len();
        if m == 1 {
            report.single_total = report.single_total.clone() + s;
            continue;
        }
        for r in 0..m {
            if !set.contains(&flip(u, r)) {
                return closed_err(format!("flip of atom {} leaves the set", u.atoms[r].id));
            }
        }
        let w = u.link_matrix(links)?;
        for t in spanning_trees(m, cap)? {
            let value = s.clone() * tree_weight(&w, &t);
            report.multi_total = report.multi_total.clone() + value.clone();
            let mut valence = vec![0usize; m];
            for &(a, b) in &t {
                valence[a] += 1;
                valence[b] += 1;
            }
            let leaves = (0..m).filter(|&v| valence[v] == 1).count();
            *report.leaf_histogram.entry(leaves).or_insert(0) += 1;
            *report.valence_histogram.entry(*valence.iter().max().unwrap()).or_insert(0) += 1;
            let r = choose_leaf(u, &t);
            let u2 = flip(u, r);
            let t2 = relabel_tree(u, &u2, r, &t);
            let w2 = u2.link_matrix(links)?;
            let partner = R::from_i64(u2.sign().to_i64()) * tree_weight(&w2, &t2);
            if partner.clone() + value != R::zero() {
                return Err(MultiDiskError::InconsistentConfig(format!(
                    "flip partner of a tree on {:?} does not cancel",
                    u.atoms.iter().map(|a| &a.id).collect::<Vec<_>>()
                )));
            }
            // the partner picks the conjugate leaf, so the pairing is an involution
            let r2 = rank_of(&u2, &u.atoms[r], conj);
            if choose_leaf(&u2, &t2) != r2 || relabel_tree(&u2, u, r2, &t2) != t {
                return Err(MultiDiskError::InconsistentConfig("leaf flip is not an involution".into()));
            }
            report.pairs += 1;
        }
    }
    report.pairs /= 2;
    Ok(report)
}

/// The leaf of `t` whose least constraint label is smallest. Conjugation
/// keeps constraints, so the choice is stable under the flip.
fn choose_leaf(u: &MultiDisk, t: &Tree) -> usize {
    let mut valence = vec![0usize; u.atoms.len()];
    for &(a, b) in t {
        valence[a] += 1;
        valence[b] += 1;
    }
    (0..u.atoms.len()).filter(|&v| valence[v] == 1).min_by_key(|&v| min_label(&u.atoms[v])).unwrap()
}

fn min_label(a: &DiskAtom) -> (u8, Label) {
    match a.k.iter().next() {
        Some(p) => (0, p.clone()),
        None => (1, a.l.iter().next().cloned().unwrap_or_default()),
    }
}

fn rank_of(u: &MultiDisk, original: &DiskAtom, conj: &BTreeMap<String, String>) -> usize {
    let c = &conj[&original.id];
    u.atoms.iter().position(|a| &a.id == c).unwrap()
}

/// Transport a tree on `u` to `u2`, where `u2` is `u` with atom `r` replaced.
fn relabel_tree(u: &MultiDisk, u2: &MultiDisk, r: usize, t: &Tree) -> Tree {
    let map: Vec<usize> = (0..u.atoms.len())
        .map(|i| {
            if i == r {
                u2.atoms.iter().position(|a| !u.atoms.iter().any(|b| b.id == a.id)).unwrap()
            } else {
                u2.atoms.iter().position(|a| a.id == u.atoms[i].id).unwrap()
            }
        })
        .collect();
    let mut t2: Tree = t.iter().map(|&(a, b)| (map[a].min(map[b]), map[a].max(map[b]))).collect();
    t2.sort();
    t2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{q, Q};

    fn w3(a: i64, b: i64, c: i64) -> Matrix<Q> {
        Matrix::from_rows(3, 3, vec![vec![q(0), q(a), q(b)], vec![q(a), q(0), q(c)], vec![q(b), q(c), q(0)]])
    }

    #[test]
    fn tree_counts() {
        assert_eq!(spanning_trees(1, 7).unwrap(), vec![Vec::<(usize, usize)>::new()]);
        assert_eq!(spanning_trees(3, 7).unwrap().len(), 3);
        assert_eq!(spanning_trees(5, 7).unwrap().len(), 125);
        assert_eq!(spanning_trees(8, 7).unwrap_err(), MultiDiskError::TreeCap { m: 8, cap: 7 });
    }

    #[test]
    fn small_tree_sums() {
        let one = Matrix::<Q>::zeros(1, 1);
        assert_eq!(tree_weight_sum(&one), q(1));
        let two = Matrix::from_rows(2, 2, vec![vec![q(0), q(5)], vec![q(5), q(0)]]);
        assert_eq!(tree_weight_sum(&two), q(5));
        // ab + ac + bc
        assert_eq!(tree_weight_sum(&w3(2, 3, 7)), q(6 + 14 + 21));
        assert_eq!(tree_weight_sum_enumerated(&w3(2, 3, 7), 7).unwrap(), q(41));
    }

    #[test]
    fn linking_expressions() {
        let mut l = LinkingMatrix::<Q>::new();
        l.declare_bounding("a");
        l.declare_bounding("b");
        l.set("a", "b", q(3)).unwrap();
        use LinkExpression::*;
        assert_eq!(l.linking_number("a", "b", ChainOfFirstWithSecond), l.linking_number("a", "b", ChainOfSecondWithFirst));
        assert_eq!(l.linking_number("a", "b", FirstWithChainOfSecond).unwrap(), q(-3));
        assert_eq!(l.linking_number("a", "b", SecondWithChainOfFirst).unwrap(), q(-3));
        assert_eq!(l.lk("b", "a").unwrap(), q(3));
        assert_eq!(l.lk("a", "a").unwrap_err(), MultiDiskError::SelfLinking("a".into()));
        assert_eq!(l.lk("a", "c").unwrap_err(), MultiDiskError::NotBounding("c".into()));
    }
}
