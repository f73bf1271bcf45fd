//! Bounding chains at the combinatorial level.
//!
//! A chain `b_a` for a zero-dimensional tuple is represented by its boundary,
//! a formal sum of atom loops. Fiber products of a single disk with chains of
//! codimension one are evaluated by the divisor rule
//! `(-1)^{|K'|} prod lk(du, db_i)`.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::lattice::{ConstraintTuple, DegenerationType, LatticeError, Target};
use crate::linalg::Matrix;
use crate::multidisk::{
    multi_disks, single_disks, spanning_trees, tree_weight, DiskAtom, LinkingMatrix, LoopId, MultiDisk,
    MultiDiskError, Tree,
};
use crate::orientation::{association_sign, flip_sign, Sign};
use crate::ring::{q, qf, Q};

/// Largest multi-disk whose spanning trees are listed one by one.
pub const TREE_CAP: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum ChainError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    MultiDisk(#[from] MultiDiskError),
    #[error("no chain supplied for predecessor {0}")]
    MissingPredecessor(String),
    #[error("chain for {0} must be empty: it is neither a point nor zero-dimensional")]
    DimensionCondition(String),
    #[error("{alpha} has dimension {found}, expected {expected}")]
    Dimension { alpha: String, expected: i64, found: i64 },
    #[error("point {0} is already constrained")]
    PointInUse(String),
    #[error("malformed branch decomposition: {0}")]
    Branch(String),
}

pub type Boundary = BTreeMap<LoopId, Q>;

#[derive(Clone, Debug, PartialEq)]
pub struct ChainDatum {
    pub alpha: ConstraintTuple,
    /// `db_alpha` as loops with coefficients.
    pub boundary: Boundary,
    pub is_point_chain: bool,
}

pub type Chains = BTreeMap<ConstraintTuple, ChainDatum>;

/// The disk data a computation runs against.
#[derive(Clone, Copy)]
pub struct DiskModel<'a> {
    pub target: &'a Target,
    pub pool: &'a [DiskAtom],
    pub links: &'a LinkingMatrix<Q>,
}

/// Switches for the three `(-1)^{k_dot}` factors: the one in the definition
/// of `bb_eta`, the one from reordering boundary points and the one from
/// re-associating the fiber product with an extra point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SignConventions {
    pub definition: bool,
    pub flip: bool,
    pub association: bool,
}

impl Default for SignConventions {
    fn default() -> Self {
        SignConventions { definition: true, flip: true, association: true }
    }
}

impl SignConventions {
    fn definition_sign(&self, k: usize) -> Sign {
        if self.definition {
            Sign::parity(k as i64)
        } else {
            Sign::Plus
        }
    }

    /// Sign of attaching one more point chain in front of `k` boundary insertions.
    fn point_insertion_sign(&self, k: usize) -> Sign {
        let mut s = Sign::Plus;
        if self.flip {
            s = s * flip_sign(Sign::Plus, Sign::Plus, Sign::parity(k as i64));
        }
        if self.association {
            // k boundary points of Y against one point of codimension 3
            s = s * association_sign(3 * k, 3);
        }
        s
    }
}

/// Weight of a degeneration type in the count without a distinguished point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StarWeight {
    /// `1/k - 1/2`, or `1` for `k = 0`.
    Standard,
    /// `1/k`, or `1` for `k = 0`. Only useful as a negative control.
    WithoutHalf,
}

impl StarWeight {
    pub fn weight(self, k: usize) -> Q {
        match (self, k) {
            (_, 0) => q(1),
            (StarWeight::Standard, k) => qf(1, k as i64) - qf(1, 2),
            (StarWeight::WithoutHalf, k) => qf(1, k as i64),
        }
    }
}

fn add_to(b: &mut Boundary, l: &LoopId, c: Q) {
    let v = b.remove(l).unwrap_or_default() + c;
    if v != q(0) {
        b.insert(l.clone(), v);
    }
}

fn unit_loop(l: &LoopId) -> Boundary {
    BTreeMap::from([(l.clone(), q(1))])
}

/// `(-1)^{|K'|} prod_i lk(du, db_i)` over chains of codimension one.
pub fn divisor_rule_degree(
    u: &DiskAtom,
    chains: &[&ChainDatum],
    links: &LinkingMatrix<Q>,
) -> Result<Q, ChainError> {
    let du = unit_loop(&u.boundary);
    let mut acc = Sign::parity(chains.len() as i64).to_q();
    for c in chains {
        if c.is_point_chain {
            return Err(ChainError::DimensionCondition(c.alpha.to_string()));
        }
        acc *= links.lk_chains(&du, &c.boundary)?;
    }
    Ok(acc)
}

/// Enforce the emptiness condition and the point-chain shape.
pub fn check_chains(target: &Target, chains: &Chains) -> Result<(), ChainError> {
    for (a, c) in chains {
        if c.alpha != *a || c.is_point_chain != a.is_point() {
            return Err(ChainError::DimensionCondition(a.to_string()));
        }
        if !c.is_point_chain && target.dimension(a) != 0 && !c.boundary.is_empty() {
            return Err(ChainError::DimensionCondition(a.to_string()));
        }
    }
    Ok(())
}

/// A degeneration class split into the centre tuple `(beta_dot, K_pt, L_dot)`
/// and the chains of its non-point parts. `None` if some part has an empty chain.
fn split_class<'c>(
    target: &Target,
    eta: &DegenerationType,
    chains: &'c Chains,
) -> Result<Option<(ConstraintTuple, Vec<&'c ChainDatum>)>, ChainError> {
    let mut pts = BTreeSet::new();
    let mut rest = Vec::new();
    for p in &eta.parts {
        if p.is_point() {
            pts.extend(p.k.iter().cloned());
            continue;
        }
        let c = chains.get(p).ok_or_else(|| ChainError::MissingPredecessor(p.to_string()))?;
        if target.dimension(p) != 0 {
            return Ok(None);
        }
        rest.push(c);
    }
    let centre = ConstraintTuple { beta: eta.beta_bullet.clone(), k: pts, l: eta.l_bullet.clone() };
    Ok(Some((centre, rest)))
}

/// `bb_alpha`, one term per degeneration class.
pub fn assemble_bb(
    m: DiskModel,
    alpha: &ConstraintTuple,
    chains: &Chains,
    conv: SignConventions,
) -> Result<Boundary, ChainError> {
    let mut out = Boundary::new();
    for (eta, c) in assemble_bb_by_class(m, alpha, chains)? {
        let s = conv.definition_sign(eta.k_bullet());
        for (l, v) in c {
            add_to(&mut out, &l, s.to_q() * v);
        }
    }
    Ok(out)
}

/// Per-class contributions to `bb_alpha` without the definition sign.
pub fn assemble_bb_by_class(
    m: DiskModel,
    alpha: &ConstraintTuple,
    chains: &Chains,
) -> Result<Vec<(DegenerationType, Boundary)>, ChainError> {
    let mut out = Vec::new();
    for eta in m.target.degeneration_classes(alpha)?.into_keys() {
        let Some((centre, rest)) = split_class(m.target, &eta, chains)? else { continue };
        let mut b = Boundary::new();
        for u in single_disks(&centre, m.pool) {
            let c = u.sign.to_q() * divisor_rule_degree(u, &rest, m.links)?;
            add_to(&mut b, &u.boundary, c);
        }
        if !b.is_empty() {
            out.push((eta, b));
        }
    }
    Ok(out)
}

/// Chains for every tuple below `alpha` and for `alpha` itself, each
/// zero-dimensional one bounding its `bb`.
pub fn build_chains(m: DiskModel, alpha: &ConstraintTuple, conv: SignConventions) -> Result<Chains, ChainError> {
    m.target.check_tuple(alpha)?;
    let mut todo: Vec<ConstraintTuple> = m.target.enumerate_below(alpha)?.into_iter().collect();
    if !todo.contains(alpha) {
        todo.push(alpha.clone());
    }
    let lat = &m.target.lattice;
    todo.sort_by_cached_key(|a| (lat.area(&a.beta), a.k.len() + a.l.len(), a.clone()));
    let mut chains = Chains::new();
    for a in todo {
        let boundary = if !a.is_point() && m.target.dimension(&a) == 0 {
            assemble_bb(m, &a, &chains, conv)?
        } else {
            Boundary::new()
        };
        let d = ChainDatum { alpha: a.clone(), boundary, is_point_chain: a.is_point() };
        chains.insert(a, d);
    }
    Ok(chains)
}

/// `(-1)^{|K|} sum_{u in MD(alpha)} sgn(u) lk(u) du`.
pub fn direct_boundary(m: DiskModel, alpha: &ConstraintTuple) -> Result<Boundary, ChainError> {
    let mut out = Boundary::new();
    if m.target.dimension(alpha) != 0 {
        return Ok(out);
    }
    let s = Sign::parity(alpha.k.len() as i64).to_q();
    for u in multi_disks(alpha, m.pool) {
        let c = s.clone() * u.sign().to_q() * u.lk(m.links)?;
        for a in &u.atoms {
            add_to(&mut out, &a.boundary, c.clone());
        }
    }
    Ok(out)
}

/// A multi-disk with a marked atom and a spanning tree on its atoms; edges
/// index `u.atoms` and are stored as sorted `(low, high)` pairs.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct DecoratedMultiDisk {
    pub u: MultiDisk,
    pub distinguished: usize,
    pub tree: Tree,
}

fn normalize_tree(t: &Tree) -> Tree {
    let mut t: Tree = t.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    t.sort();
    t
}

fn is_spanning_tree(m: usize, t: &Tree) -> bool {
    if m == 0 || t.len() != m - 1 {
        return false;
    }
    let mut root: Vec<usize> = (0..m).collect();
    fn find(r: &mut [usize], x: usize) -> usize {
        if r[x] == x {
            x
        } else {
            let y = find(r, r[x]);
            r[x] = y;
            y
        }
    }
    for &(a, b) in t {
        if a >= m || b >= m {
            return false;
        }
        let (ra, rb) = (find(&mut root, a), find(&mut root, b));
        if ra == rb {
            return false;
        }
        root[ra] = rb;
    }
    true
}

impl DecoratedMultiDisk {
    pub fn new(u: MultiDisk, distinguished: usize, tree: Tree) -> Result<Self, ChainError> {
        if distinguished >= u.atoms.len() || !is_spanning_tree(u.atoms.len(), &tree) {
            return Err(ChainError::Branch("not a decorated multi-disk".into()));
        }
        Ok(DecoratedMultiDisk { u, distinguished, tree: normalize_tree(&tree) })
    }

    pub fn sign(&self) -> Sign {
        self.u.sign()
    }

    /// `lk(u; T)`, the product of the edge linking numbers.
    pub fn tree_lk(&self, links: &LinkingMatrix<Q>) -> Result<Q, ChainError> {
        let w: Matrix<Q> = self.u.link_matrix(links)?;
        Ok(tree_weight(&w, &self.tree))
    }

    pub fn centre(&self) -> &DiskAtom {
        &self.u.atoms[self.distinguished]
    }
}

/// A class `[eta]` with a centre atom and a decorated multi-disk for every
/// non-point part, keyed by that part.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct BranchDecomposition {
    pub eta: DegenerationType,
    pub central: DiskAtom,
    pub branches: BTreeMap<ConstraintTuple, DecoratedMultiDisk>,
}

fn tuple_of(atoms: &[DiskAtom], rank: usize) -> ConstraintTuple {
    let u = MultiDisk { atoms: atoms.to_vec() };
    ConstraintTuple {
        beta: u.degree(rank),
        k: atoms.iter().flat_map(|a| a.k.iter().cloned()).collect(),
        l: atoms.iter().flat_map(|a| a.l.iter().cloned()).collect(),
    }
}

/// Cut the tree at the distinguished atom.
pub fn dmd_to_branch(d: &DecoratedMultiDisk) -> BranchDecomposition {
    let n = d.u.atoms.len();
    let rank = d.centre().degree.0.len();
    let c = d.distinguished;
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in &d.tree {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut parts: Vec<ConstraintTuple> = d.centre().k.iter().map(|p| ConstraintTuple::point(rank, p)).collect();
    let mut branches = BTreeMap::new();
    for &v in &adj[c] {
        let mut seen = vec![false; n];
        seen[c] = true;
        seen[v] = true;
        let mut stack = vec![v];
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        let verts: Vec<usize> = (0..n).filter(|&i| i != c && seen[i]).collect();
        let pos = |i: usize| verts.binary_search(&i).unwrap();
        let atoms: Vec<DiskAtom> = verts.iter().map(|&i| d.u.atoms[i].clone()).collect();
        let tree: Tree = d
            .tree
            .iter()
            .filter(|(a, b)| *a != c && *b != c && seen[*a] && seen[*b])
            .map(|&(a, b)| (pos(a), pos(b)))
            .collect();
        let key = tuple_of(&atoms, rank);
        parts.push(key.clone());
        let sub = DecoratedMultiDisk { u: MultiDisk::new(atoms), distinguished: pos(v), tree: normalize_tree(&tree) };
        branches.insert(key, sub);
    }
    parts.sort();
    let eta = DegenerationType { beta_bullet: d.centre().degree.clone(), l_bullet: d.centre().l.clone(), parts };
    BranchDecomposition { eta, central: d.centre().clone(), branches }
}

/// Reattach every branch to the centre.
pub fn branch_to_dmd(b: &BranchDecomposition) -> Result<DecoratedMultiDisk, ChainError> {
    let bad = |why: String| Err(ChainError::Branch(why));
    let rank = b.central.degree.0.len();
    if b.eta.beta_bullet != b.central.degree || b.eta.l_bullet != b.central.l {
        return bad(format!("centre {} does not carry the degree and descriptors of {}", b.central.id, b.eta));
    }
    let mut expect: Vec<ConstraintTuple> = b.central.k.iter().map(|p| ConstraintTuple::point(rank, p)).collect();
    expect.extend(b.branches.keys().cloned());
    expect.sort();
    let mut parts = b.eta.parts.clone();
    parts.sort();
    if parts != expect {
        return bad(format!("parts of {} do not match the centre points and branches", b.eta));
    }
    for (key, d) in &b.branches {
        if key.is_point() {
            return bad(format!("branch keyed by point tuple {key}"));
        }
        d.u.check_partition(key).map_err(|e| ChainError::Branch(format!("branch {key}: {e}")))?;
        if d.distinguished >= d.u.atoms.len() || !is_spanning_tree(d.u.atoms.len(), &d.tree) {
            return bad(format!("branch {key} is not decorated by a spanning tree"));
        }
    }
    let mut atoms = vec![b.central.clone()];
    for d in b.branches.values() {
        atoms.extend(d.u.atoms.iter().cloned());
    }
    let u = MultiDisk::new(atoms);
    let idx = |a: &DiskAtom| u.atoms.binary_search(a).unwrap();
    for w in u.atoms.windows(2) {
        if w[0] == w[1] {
            return bad(format!("atom {} occurs twice", w[0].id));
        }
    }
    let c = idx(&b.central);
    let mut tree = Tree::new();
    for d in b.branches.values() {
        let g: Vec<usize> = d.u.atoms.iter().map(idx).collect();
        tree.extend(d.tree.iter().map(|&(x, y)| (g[x], g[y])));
        tree.push((c, g[d.distinguished]));
    }
    DecoratedMultiDisk::new(u, c, tree)
}

/// `DMD(alpha)`: every multi-disk with a marked atom and a spanning tree.
pub fn enumerate_dmd(m: DiskModel, alpha: &ConstraintTuple) -> Result<Vec<DecoratedMultiDisk>, ChainError> {
    let mut out = Vec::new();
    for u in multi_disks(alpha, m.pool) {
        let n = u.atoms.len();
        for t in spanning_trees(n, TREE_CAP)? {
            let t = normalize_tree(&t);
            for c in 0..n {
                out.push(DecoratedMultiDisk { u: u.clone(), distinguished: c, tree: t.clone() });
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Representatives of the classes of `(eta, u_dot, (u_i))`, one per class.
pub fn enumerate_ov_dmd(m: DiskModel, alpha: &ConstraintTuple) -> Result<Vec<BranchDecomposition>, ChainError> {
    let mut out = Vec::new();
    for eta in m.target.degeneration_classes(alpha)?.into_keys() {
        let mut pts = BTreeSet::new();
        let mut rest = Vec::new();
        for p in &eta.parts {
            if p.is_point() {
                pts.extend(p.k.iter().cloned());
            } else {
                rest.push(p.clone());
            }
        }
        let centre = ConstraintTuple { beta: eta.beta_bullet.clone(), k: pts, l: eta.l_bullet.clone() };
        let centres = single_disks(&centre, m.pool);
        if centres.is_empty() {
            continue;
        }
        let mut lists = Vec::new();
        for p in &rest {
            lists.push(enumerate_dmd(m, p)?);
        }
        if lists.iter().any(Vec::is_empty) {
            continue;
        }
        for u in centres {
            let mut choice = vec![0; lists.len()];
            loop {
                let branches = rest.iter().cloned().zip(choice.iter().zip(&lists).map(|(&i, l)| l[i].clone())).collect();
                out.push(BranchDecomposition { eta: eta.clone(), central: u.clone(), branches });
                let Some(j) = (0..choice.len()).find(|&j| choice[j] + 1 < lists[j].len()) else { break };
                choice[j] += 1;
                choice[..j].iter_mut().for_each(|c| *c = 0);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// `(-1)^{|K|} sum over DMD(alpha) of sgn(u) lk(u; T) du_dot`.
pub fn dmd_boundary(m: DiskModel, alpha: &ConstraintTuple) -> Result<Boundary, ChainError> {
    let mut out = Boundary::new();
    if m.target.dimension(alpha) != 0 {
        return Ok(out);
    }
    let s = Sign::parity(alpha.k.len() as i64).to_q();
    for d in enumerate_dmd(m, alpha)? {
        let c = s.clone() * d.sign().to_q() * d.tree_lk(m.links)?;
        add_to(&mut out, &d.centre().boundary, c);
    }
    Ok(out)
}

/// The same sum organised by classes `[eta]`: a centre atom times, for every
/// non-point part, the sum over its decorated multi-disks of
/// `sgn lk(u_i; T_i) lk(du_dot, du_i_dot)`.
pub fn branch_factorized_boundary(m: DiskModel, alpha: &ConstraintTuple) -> Result<Boundary, ChainError> {
    let mut out = Boundary::new();
    if m.target.dimension(alpha) != 0 {
        return Ok(out);
    }
    let s = Sign::parity(alpha.k.len() as i64).to_q();
    for eta in m.target.degeneration_classes(alpha)?.into_keys() {
        let mut pts = BTreeSet::new();
        let mut rest = Vec::new();
        for p in &eta.parts {
            if p.is_point() {
                pts.extend(p.k.iter().cloned());
            } else {
                rest.push(enumerate_dmd(m, p)?);
            }
        }
        let centre = ConstraintTuple { beta: eta.beta_bullet.clone(), k: pts, l: eta.l_bullet.clone() };
        for u in single_disks(&centre, m.pool) {
            let mut c = s.clone() * u.sign.to_q();
            for branch in &rest {
                let mut f = q(0);
                for d in branch {
                    f += d.sign().to_q() * d.tree_lk(m.links)? * m.links.lk(&u.boundary, &d.centre().boundary)?;
                }
                c *= f;
            }
            add_to(&mut out, &u.boundary, c);
        }
    }
    Ok(out)
}

fn check_dim(t: &Target, a: &ConstraintTuple, expected: i64) -> Result<(), ChainError> {
    let found = t.dimension(a);
    if found != expected {
        return Err(ChainError::Dimension { alpha: a.to_string(), expected, found });
    }
    Ok(())
}

/// `|bb_[eta] x_fb pt|` for every class of a two-dimensional `alpha`, before
/// the point-insertion signs.
pub fn deg_class_terms(
    m: DiskModel,
    alpha: &ConstraintTuple,
    extra: &str,
    chains: &Chains,
    conv: SignConventions,
) -> Result<Vec<(DegenerationType, Q)>, ChainError> {
    check_dim(m.target, alpha, 2)?;
    if alpha.k.contains(extra) {
        return Err(ChainError::PointInUse(extra.into()));
    }
    let mut out = Vec::new();
    for eta in m.target.degeneration_classes(alpha)?.into_keys() {
        let Some((mut centre, rest)) = split_class(m.target, &eta, chains)? else { continue };
        centre.k.insert(extra.into());
        let mut v = q(0);
        for u in single_disks(&centre, m.pool) {
            v += u.sign.to_q() * divisor_rule_degree(u, &rest, m.links)?;
        }
        if v != q(0) {
            out.push((eta.clone(), conv.definition_sign(eta.k_bullet()).to_q() * v));
        }
    }
    Ok(out)
}

/// `deg bb_alpha` for `dim(alpha) = 2`, read off by intersecting with an
/// extra point constraint `extra`.
pub fn invariant_deg(
    m: DiskModel,
    alpha: &ConstraintTuple,
    extra: &str,
    chains: &Chains,
    conv: SignConventions,
) -> Result<Q, ChainError> {
    let mut acc = q(0);
    for (eta, v) in deg_class_terms(m, alpha, extra, chains, conv)? {
        acc += conv.point_insertion_sign(eta.k_bullet()).to_q() * v;
    }
    // Y is odd-dimensional, so intersecting with a point reverses the degree
    Ok(-acc)
}

/// The count without a distinguished point, for `dim(alpha) = 0`.
pub fn invariant_star(
    m: DiskModel,
    alpha: &ConstraintTuple,
    chains: &Chains,
    weight: StarWeight,
) -> Result<Q, ChainError> {
    if m.target.dimension(alpha) != 0 {
        return Ok(q(0));
    }
    let conv = SignConventions::default();
    let mut acc = q(0);
    for eta in m.target.degeneration_classes(alpha)?.into_keys() {
        let Some((centre, rest)) = split_class(m.target, &eta, chains)? else { continue };
        let k = eta.k_bullet();
        let mut v = q(0);
        for u in single_disks(&centre, m.pool) {
            v += u.sign.to_q() * divisor_rule_degree(u, &rest, m.links)?;
        }
        // position-ordered points: each unordered configuration shows up once
        // per rotation of its k parts
        let rotations = q(k.max(1) as i64);
        acc += conv.definition_sign(k).to_q() * weight.weight(k) * rotations * v;
    }
    for p in &alpha.k {
        let mut smaller = alpha.clone();
        smaller.k.remove(p);
        acc += qf(1, 2) * invariant_deg(m, &smaller, p, chains, conv)?;
    }
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DegreeRelationReport {
    pub alpha: ConstraintTuple,
    pub point: String,
    pub invariant_deg: Q,
    pub welschinger: Q,
    pub holds: bool,
}

/// Compare `deg bb` for `alpha - p` with `(-1)^{|K|}` times the multi-disk count of `alpha`.
pub fn verify_degree_relation(
    m: DiskModel,
    alpha: &ConstraintTuple,
    point: &str,
    chains: &Chains,
) -> Result<DegreeRelationReport, ChainError> {
    check_dim(m.target, alpha, 0)?;
    if !alpha.k.contains(point) {
        return Err(ChainError::Branch(format!("{point} is not a point of {alpha}")));
    }
    let mut smaller = alpha.clone();
    smaller.k.remove(point);
    let deg = invariant_deg(m, &smaller, point, chains, SignConventions::default())?;
    let configs = multi_disks(alpha, m.pool);
    let w = crate::multidisk::welschinger_count(m.target, alpha, &configs, m.links)?;
    let rhs = Sign::parity(alpha.k.len() as i64).to_q() * w.clone();
    Ok(DegreeRelationReport { alpha: alpha.clone(), point: point.into(), holds: deg == rhs, invariant_deg: deg, welschinger: w })
}
