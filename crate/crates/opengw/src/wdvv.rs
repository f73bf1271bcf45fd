//! Open WDVV relations for the real invariants: residual evaluators, a
//! level-by-level solver, structural checks and the degree-zero extension.
//!
//! Insertions are indices into the declared class list of a
//! `CohomologyModel`. The first `N` classes are the basis `γ*_1 = 1, γ*_2..`
//! (so index 0 is the unit); further classes may restrict to arbitrary
//! combinations of the basis, or to zero (the sphere class does).
//! Open brackets are keyed by degree and sorted insertion multiset; the
//! number of boundary points is always derived.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::lattice::{k_beta, ClosedLattice, DegreeClass, Lattice, LatticeError};
use crate::linalg::Matrix;
use crate::ring::{fmt_q, q, Q};

#[derive(Debug, Error, PartialEq)]
pub enum WdvvError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("cohomology model: {0}")]
    Model(String),
    #[error("pairing is singular")]
    SingularPairing,
    #[error("insertion index {0} is not a declared class")]
    UnknownClass(usize),
    #[error("anchor index {0} outside 1..={1}")]
    Anchor(usize, usize),
    #[error("instance {0} does not meet the relation's hypotheses")]
    Hypothesis(String),
    #[error("k = {given} supplied for {key}, the dimension formula gives {derived:?}")]
    KMismatch { key: String, given: i64, derived: Option<i64> },
    #[error("closed table does not cover class {0}")]
    ClosedMissing(DegreeClass),
    #[error("missing base case {0}")]
    MissingBaseCase(String),
    #[error("lambda vector has length {got}, basis has {n} elements")]
    LambdaLength { got: usize, n: usize },
    #[error("no linking value for basis pseudocycle {0}")]
    MissingLk(usize),
    #[error("check {0} needs target data that was not declared")]
    MissingDeclaration(&'static str),
}

#[derive(Clone, Debug, PartialEq)]
pub struct InsertionClass {
    pub name: String,
    pub degree: u32,
    /// Restriction to `X` in basis coordinates (sparse). Empty means zero.
    pub restriction: Vec<(usize, Q)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CohomologyModel {
    pub classes: Vec<InsertionClass>,
    pub basis_len: usize,
    pub pairing: Vec<Vec<Q>>,
    pub inverse: Vec<Vec<Q>>,
    pub sphere_class: Option<usize>,
    /// `[Y]_X != 0`.
    pub y_nonzero: bool,
}

impl CohomologyModel {
    pub fn new(
        classes: Vec<InsertionClass>,
        basis_len: usize,
        pairing: Vec<Vec<Q>>,
        sphere_class: Option<usize>,
        y_nonzero: bool,
    ) -> Result<Self, WdvvError> {
        let n = basis_len;
        let bad = |s: String| Err(WdvvError::Model(s));
        if n == 0 || classes.len() < n {
            return bad(format!("{} classes for a basis of {n}", classes.len()));
        }
        for (j, c) in classes.iter().enumerate() {
            if j == 0 {
                if c.degree != 0 {
                    return bad("the first basis element must be the unit".into());
                }
            } else if !matches!(c.degree, 2 | 4 | 6) {
                return bad(format!("class {} has degree {}", c.name, c.degree));
            }
            if j < n {
                if c.restriction != vec![(j, Q::one())] {
                    return bad(format!("basis class {} must restrict to itself", c.name));
                }
                continue;
            }
            for (i, _) in &c.restriction {
                if *i >= n {
                    return bad(format!("class {} restricts to index {i}", c.name));
                }
                if classes[*i].degree != c.degree {
                    return bad(format!("class {} restricts across degrees", c.name));
                }
            }
        }
        if let Some(s) = sphere_class {
            if s >= classes.len() || classes[s].degree != 4 {
                return bad("sphere class must be a declared degree 4 class".into());
            }
            if classes[s].restriction.iter().any(|(_, c)| !c.is_zero()) {
                return bad("sphere class must restrict to zero".into());
            }
        }
        if pairing.len() != n || pairing.iter().any(|r| r.len() != n) {
            return bad(format!("pairing must be {n} x {n}"));
        }
        for i in 0..n {
            for j in 0..n {
                if !pairing[i][j].is_zero() && classes[i].degree + classes[j].degree != 6 {
                    return bad(format!("pairing entry ({i},{j}) is not a top pairing"));
                }
            }
        }
        let g = Matrix::from_rows(n, n, pairing.clone());
        let inv = g.inverse().ok_or(WdvvError::SingularPairing)?;
        if g.mul(&inv) != Matrix::identity(n) {
            return Err(WdvvError::SingularPairing);
        }
        let inverse = (0..n).map(|i| (0..n).map(|j| inv[(i, j)].clone()).collect()).collect();
        Ok(CohomologyModel { classes, basis_len, pairing, inverse, sphere_class, y_nonzero })
    }

    pub fn degree(&self, c: usize) -> u32 {
        self.classes[c].degree
    }

    fn check_insertions(&self, ins: &[usize]) -> Result<(), WdvvError> {
        match ins.iter().find(|&&c| c >= self.classes.len()) {
            Some(&c) => Err(WdvvError::UnknownClass(c)),
            None => Ok(()),
        }
    }
}

/// Relative and closed lattices together with the cohomology model.
#[derive(Clone, Debug, PartialEq)]
pub struct WdvvTarget {
    pub lattice: Lattice,
    pub closed: ClosedLattice,
    pub model: CohomologyModel,
}

impl WdvvTarget {
    pub fn k_of(&self, beta: &DegreeClass, ins: &[usize]) -> Option<i64> {
        let degs: Vec<u32> = ins.iter().map(|&c| self.model.degree(c)).collect();
        k_beta(self.lattice.maslov(beta), &degs)
    }

    /// The pair `(k, beta)` lies outside the sphere-bubbling range.
    pub fn regular(&self, beta: &DegreeClass, k: i64) -> bool {
        k != 0 || !self.closed.in_image(beta)
    }

    /// Check a caller-supplied `k` against the dimension formula.
    pub fn check_k(&self, beta: &DegreeClass, ins: &[usize], k: i64) -> Result<(), WdvvError> {
        let derived = self.k_of(beta, ins);
        if derived != Some(k) {
            let key = Key::new(beta.clone(), ins.to_vec());
            return Err(WdvvError::KMismatch { key: key.to_string(), given: k, derived });
        }
        Ok(())
    }
}

/// Open bracket key: degree and sorted insertions.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Key {
    pub beta: DegreeClass,
    pub ins: Vec<usize>,
}

impl Key {
    pub fn new(beta: DegreeClass, mut ins: Vec<usize>) -> Self {
        ins.sort_unstable();
        Key { beta, ins }
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ins: Vec<String> = self.ins.iter().map(|c| c.to_string()).collect();
        write!(f, "<{}>_{}", ins.join(","), self.beta)
    }
}

/// Polynomial in open brackets with rational coefficients. Monomials are
/// sorted key lists; the empty monomial is the constant term.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly(BTreeMap<Vec<Key>, Q>);

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(c: Q) -> Self {
        let mut p = Poly::zero();
        p.add_term(Vec::new(), c);
        p
    }

    pub fn var(k: Key) -> Self {
        let mut p = Poly::zero();
        p.add_term(vec![k], Q::one());
        p
    }

    fn add_term(&mut self, mut m: Vec<Key>, c: Q) {
        if c.is_zero() {
            return;
        }
        m.sort();
        let e = self.0.entry(m.clone()).or_insert_with(Q::zero);
        *e += c;
        if e.is_zero() {
            self.0.remove(&m);
        }
    }

    pub fn add(&mut self, o: &Poly) {
        for (m, c) in &o.0 {
            self.add_term(m.clone(), c.clone());
        }
    }

    pub fn add_scaled(&mut self, o: &Poly, s: &Q) {
        for (m, c) in &o.0 {
            self.add_term(m.clone(), c * s);
        }
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut p = Poly::zero();
        for (m1, c1) in &self.0 {
            for (m2, c2) in &o.0 {
                let mut m = m1.clone();
                m.extend(m2.iter().cloned());
                p.add_term(m, c1 * c2);
            }
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_constant(&self) -> Option<Q> {
        match self.0.len() {
            0 => Some(Q::zero()),
            1 => self.0.get(&Vec::new()).cloned(),
            _ => None,
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<Key>, &Q)> {
        self.0.iter()
    }

    pub fn variables(&self) -> BTreeSet<Key> {
        self.0.keys().flatten().cloned().collect()
    }

    pub fn degree(&self) -> usize {
        self.0.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub fn substitute(&self, value: &impl Fn(&Key) -> Option<Q>) -> Poly {
        let mut p = Poly::zero();
        for (m, c) in &self.0 {
            let mut c = c.clone();
            let mut rest = Vec::new();
            for k in m {
                match value(k) {
                    Some(v) => c *= v,
                    None => rest.push(k.clone()),
                }
            }
            p.add_term(rest, c);
        }
        p
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(m, c)| {
                let vars: Vec<String> = m.iter().map(Key::to_string).collect();
                if vars.is_empty() {
                    fmt_q(c)
                } else {
                    format!("{}*{}", fmt_q(c), vars.join("*"))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Closed invariants `<..>_B` on basis insertions. Within a covered class
/// every absent multiset is zero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClosedGWTable {
    pub covered: BTreeSet<DegreeClass>,
    pub entries: BTreeMap<(DegreeClass, Vec<usize>), Q>,
}

impl ClosedGWTable {
    pub fn insert(&mut self, b: DegreeClass, mut ins: Vec<usize>, v: Q) {
        ins.sort_unstable();
        self.covered.insert(b.clone());
        if !v.is_zero() {
            self.entries.insert((b, ins), v);
        }
    }

    pub fn get(&self, b: &DegreeClass, ins: &[usize]) -> Result<Q, WdvvError> {
        if !self.covered.contains(b) {
            return Err(WdvvError::ClosedMissing(b.clone()));
        }
        let mut s = ins.to_vec();
        s.sort_unstable();
        Ok(self.entries.get(&(b.clone(), s)).cloned().unwrap_or_else(Q::zero))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OpenInvariantTable {
    pub entries: BTreeMap<Key, Q>,
}

impl OpenInvariantTable {
    pub fn insert(&mut self, k: Key, v: Q) {
        self.entries.insert(k, v);
    }

    /// Insert with a stated number of boundary points, which must match.
    pub fn insert_with_k(
        &mut self,
        t: &WdvvTarget,
        beta: DegreeClass,
        ins: Vec<usize>,
        k: i64,
        v: Q,
    ) -> Result<(), WdvvError> {
        t.model.check_insertions(&ins)?;
        t.check_k(&beta, &ins, k)?;
        self.insert(Key::new(beta, ins), v);
        Ok(())
    }

    pub fn get(&self, k: &Key) -> Option<&Q> {
        self.entries.get(k)
    }
}

/// Value of a bracket fixed by the extension rules, if any.
pub fn hardwired(t: &WdvvTarget, key: &Key) -> Option<Q> {
    let Some(k) = t.k_of(&key.beta, &key.ins) else {
        return Some(Q::zero());
    };
    let l = key.ins.len();
    if key.ins.contains(&0) {
        // with a unit insertion only <1>_{0,1} survives
        return Some(if key.beta.is_zero() && k == 1 && l == 1 { -Q::one() } else { Q::zero() });
    }
    if key.beta.is_zero() && (k >= 1 || l == 0) {
        // (k,l) = (1,1) at degree zero needs a unit insertion, handled above
        return Some(Q::zero());
    }
    if k == 0 && t.model.y_nonzero && t.closed.in_image(&key.beta) {
        return Some(Q::zero());
    }
    None
}

/// Base cases the solver cannot produce: degree-zero brackets with no
/// boundary point.
pub fn is_base_case(t: &WdvvTarget, key: &Key) -> bool {
    key.beta.is_zero() && hardwired(t, key).is_none()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Anchors {
    All,
    In(usize),
    Out(usize),
    InOut(usize, usize),
}

/// Splittings `{1..l} = I ⊔ J` with `1 ∈ I`, filtered by the anchors.
/// Indices are 1-based; `I` and `J` come sorted.
pub fn partitions(l: usize, anchors: Anchors) -> Result<Vec<(Vec<usize>, Vec<usize>)>, WdvvError> {
    let check = |i: usize| if i == 0 || i > l { Err(WdvvError::Anchor(i, l)) } else { Ok(()) };
    let (need_in, need_out) = match anchors {
        Anchors::All => (None, None),
        Anchors::In(i) => (Some(i), None),
        Anchors::Out(j) => (None, Some(j)),
        Anchors::InOut(i, j) => (Some(i), Some(j)),
    };
    if l == 0 {
        return Err(WdvvError::Anchor(1, 0));
    }
    if let Some(i) = need_in {
        check(i)?;
    }
    if let Some(j) = need_out {
        check(j)?;
    }
    let mut out = Vec::new();
    // bit b of the mask puts index b+2 into J
    for mask in 0u64..1 << (l - 1) {
        let in_j = |i: usize| i > 1 && mask >> (i - 2) & 1 == 1;
        if need_in.is_some_and(in_j) || need_out.is_some_and(|j| !in_j(j)) {
            continue;
        }
        let (i_set, j_set): (Vec<usize>, Vec<usize>) = (1..=l).partition(|&i| !in_j(i));
        out.push((i_set, j_set));
    }
    Ok(out)
}

/// `(beta', B)` with `beta' + q_Y(B) = beta`, both effective.
pub fn complex_splits(
    t: &WdvvTarget,
    beta: &DegreeClass,
) -> Result<Vec<(DegreeClass, DegreeClass)>, WdvvError> {
    let area = t.lattice.area(beta);
    let eff = t.lattice.effective_up_to(&area)?;
    let mut out = Vec::new();
    for b in t.closed.effective_up_to(&t.lattice, &area)? {
        let rest = beta.sub(&t.closed.image(&b));
        if eff.contains(&rest) {
            out.push((rest, b));
        }
    }
    Ok(out)
}

/// `(beta_1, beta_2)` effective with sum `beta`.
pub fn real_splits(t: &WdvvTarget, beta: &DegreeClass) -> Result<Vec<(DegreeClass, DegreeClass)>, WdvvError> {
    Ok(t.lattice.effective_below(beta)?.into_iter().map(|b1| (b1.clone(), beta.sub(&b1))).collect())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BinomialConvention {
    /// `C(n, m) = 0` unless `0 <= m <= n`.
    #[default]
    ZeroOutside,
    /// Clamp `m` into `[0, n]`. Only used as a negative control.
    Clamped,
}

pub fn binomial(n: i64, m: i64, conv: BinomialConvention) -> Q {
    let m = match conv {
        BinomialConvention::ZeroOutside if m < 0 || m > n || n < 0 => return Q::zero(),
        BinomialConvention::ZeroOutside => m,
        BinomialConvention::Clamped if n < 0 => return Q::zero(),
        BinomialConvention::Clamped => m.clamp(0, n),
    };
    let mut c = Q::one();
    for i in 0..m {
        c = c * q(n - i) / q(i + 1);
    }
    c
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Relation {
    First,
    Second,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::First => "open-wdvv-1",
            Relation::Second => "open-wdvv-2",
        })
    }
}

/// One relation at one degree and ordered insertion tuple.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Instance {
    pub relation: Relation,
    pub beta: DegreeClass,
    pub gamma: Vec<usize>,
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g: Vec<String> = self.gamma.iter().map(|c| c.to_string()).collect();
        write!(f, "{} {} ({})", self.relation, self.beta, g.join(","))
    }
}

/// Both sides of a relation before subtraction: the closed x open block and
/// the open x open block, each already summed over its anchored families.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualParts {
    pub closed_block: Poly,
    pub open_block: Poly,
}

impl ResidualParts {
    pub fn residual(&self) -> Poly {
        let mut r = self.closed_block.clone();
        r.add_scaled(&self.open_block, &-Q::one());
        r
    }
}

/// Evaluates brackets and residuals. Open entries absent from the table (or
/// all of them, without a table) become variables.
#[derive(Clone, Copy)]
pub struct Evaluator<'a> {
    pub target: &'a WdvvTarget,
    pub closed: &'a ClosedGWTable,
    pub open: Option<&'a OpenInvariantTable>,
    pub binomial: BinomialConvention,
}

impl<'a> Evaluator<'a> {
    pub fn new(target: &'a WdvvTarget, closed: &'a ClosedGWTable, open: Option<&'a OpenInvariantTable>) -> Self {
        Evaluator { target, closed, open, binomial: BinomialConvention::default() }
    }

    pub fn bracket(&self, beta: &DegreeClass, ins: &[usize]) -> Poly {
        let key = Key::new(beta.clone(), ins.to_vec());
        if let Some(v) = hardwired(self.target, &key) {
            return Poly::constant(v);
        }
        match self.open.and_then(|t| t.get(&key)) {
            Some(v) => Poly::constant(v.clone()),
            None => Poly::var(key),
        }
    }

    /// `<γ_I|_X, γ*_i>_B`, expanding each restriction in the basis.
    fn closed_value(&self, b: &DegreeClass, ins: &[usize], extra: usize) -> Result<Q, WdvvError> {
        let mut acc: Vec<(Vec<usize>, Q)> = vec![(vec![extra], Q::one())];
        for &c in ins {
            let r = &self.target.model.classes[c].restriction;
            let mut next = Vec::with_capacity(acc.len() * r.len());
            for (m, x) in &acc {
                for (j, y) in r {
                    let mut m = m.clone();
                    m.push(*j);
                    next.push((m, x * y));
                }
            }
            acc = next;
        }
        let mut total = Q::zero();
        for (m, x) in acc {
            total += x * self.closed.get(b, &m)?;
        }
        Ok(total)
    }

    fn closed_block(&self, beta: &DegreeClass, gamma: &[usize], anchors: Anchors) -> Result<Poly, WdvvError> {
        let n = self.target.model.basis_len;
        let ginv = &self.target.model.inverse;
        let splits = complex_splits(self.target, beta)?;
        let mut p = Poly::zero();
        for (i_set, j_set) in partitions(gamma.len(), anchors)? {
            let gi: Vec<usize> = i_set.iter().map(|&i| gamma[i - 1]).collect();
            let gj: Vec<usize> = j_set.iter().map(|&j| gamma[j - 1]).collect();
            for (b1, b) in &splits {
                for i in 0..n {
                    let c = self.closed_value(b, &gi, i)?;
                    if c.is_zero() {
                        continue;
                    }
                    for j in 0..n {
                        if ginv[i][j].is_zero() {
                            continue;
                        }
                        let mut ins = gj.clone();
                        ins.push(j);
                        p.add_scaled(&self.bracket(b1, &ins), &(&c * &ginv[i][j]));
                    }
                }
            }
        }
        Ok(p)
    }

    /// `sum C(top, k_{β1}(γ_I) - shift) <γ_I>_{β1} <γ_J>_{β2}`.
    fn open_block(
        &self,
        beta: &DegreeClass,
        gamma: &[usize],
        anchors: Anchors,
        top: i64,
        shift: i64,
    ) -> Result<Poly, WdvvError> {
        let splits = real_splits(self.target, beta)?;
        let mut p = Poly::zero();
        for (i_set, j_set) in partitions(gamma.len(), anchors)? {
            let gi: Vec<usize> = i_set.iter().map(|&i| gamma[i - 1]).collect();
            let gj: Vec<usize> = j_set.iter().map(|&j| gamma[j - 1]).collect();
            for (b1, b2) in &splits {
                let Some(ki) = self.target.k_of(b1, &gi) else { continue };
                let c = binomial(top, ki - shift, self.binomial);
                if c.is_zero() {
                    continue;
                }
                let term = self.bracket(b1, &gi).mul(&self.bracket(b2, &gj));
                p.add_scaled(&term, &c);
            }
        }
        Ok(p)
    }

    /// `k = k_β(γ) - 1` after checking the relation's hypotheses.
    pub fn instance_k(&self, inst: &Instance) -> Result<i64, WdvvError> {
        self.target.model.check_insertions(&inst.gamma)?;
        let l = inst.gamma.len();
        let k = self.target.k_of(&inst.beta, &inst.gamma).map(|k| k - 1);
        match (inst.relation, k) {
            (Relation::First, Some(k)) if l >= 2 && k >= 1 => Ok(k),
            (Relation::Second, Some(k)) if l >= 3 && k >= 0 => Ok(k),
            _ => Err(WdvvError::Hypothesis(inst.to_string())),
        }
    }

    pub fn parts(&self, inst: &Instance) -> Result<ResidualParts, WdvvError> {
        let k = self.instance_k(inst)?;
        let (b, g) = (&inst.beta, &inst.gamma[..]);
        match inst.relation {
            Relation::First => {
                let closed_block = self.closed_block(b, g, Anchors::In(2))?;
                let mut open_block = self.open_block(b, g, Anchors::In(2), k - 1, 0)?;
                open_block.add_scaled(&self.open_block(b, g, Anchors::Out(2), k - 1, 1)?, &-Q::one());
                Ok(ResidualParts { closed_block, open_block })
            }
            Relation::Second => {
                let mut closed_block = self.closed_block(b, g, Anchors::InOut(2, 3))?;
                closed_block.add_scaled(&self.closed_block(b, g, Anchors::InOut(3, 2))?, &-Q::one());
                let mut open_block = self.open_block(b, g, Anchors::InOut(2, 3), k, 0)?;
                open_block.add_scaled(&self.open_block(b, g, Anchors::InOut(3, 2), k, 0)?, &-Q::one());
                Ok(ResidualParts { closed_block, open_block })
            }
        }
    }

    pub fn residual(&self, inst: &Instance) -> Result<Poly, WdvvError> {
        Ok(self.parts(inst)?.residual())
    }
}

pub fn wdvv1_residual(ev: &Evaluator, beta: &DegreeClass, gamma: &[usize]) -> Result<Poly, WdvvError> {
    ev.residual(&Instance { relation: Relation::First, beta: beta.clone(), gamma: gamma.to_vec() })
}

pub fn wdvv2_residual(ev: &Evaluator, beta: &DegreeClass, gamma: &[usize]) -> Result<Poly, WdvvError> {
    ev.residual(&Instance { relation: Relation::Second, beta: beta.clone(), gamma: gamma.to_vec() })
}

fn multisets(alphabet: usize, len: usize) -> Vec<Vec<usize>> {
    fn go(alphabet: usize, len: usize, from: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for c in from..alphabet {
            cur.push(c);
            go(alphabet, len, c, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(alphabet, len, 0, &mut Vec::new(), &mut out);
    out
}

/// Every relation instance with degree area at most `bound` and at most
/// `max_len` insertions, in lexicographic order. The first three positions
/// run over all classes, the remaining ones over sorted multisets.
pub fn enumerate_instances(t: &WdvvTarget, bound: &Q, max_len: usize) -> Result<Vec<Instance>, WdvvError> {
    let a = t.model.classes.len();
    let mut out = Vec::new();
    for beta in t.lattice.effective_up_to(bound)? {
        for l in 2..=max_len {
            let head = l.min(3);
            for tail in multisets(a, l - head) {
                let mut idx = vec![0usize; head];
                loop {
                    let mut gamma = idx.clone();
                    gamma.extend(&tail);
                    if let Some(k) = t.k_of(&beta, &gamma).map(|k| k - 1) {
                        if l >= 2 && k >= 1 {
                            out.push(Instance { relation: Relation::First, beta: beta.clone(), gamma: gamma.clone() });
                        }
                        if l >= 3 && k >= 0 {
                            out.push(Instance { relation: Relation::Second, beta: beta.clone(), gamma });
                        }
                    }
                    // odometer over the head positions
                    let mut p = 0;
                    while p < head && idx[p] + 1 == a {
                        idx[p] = 0;
                        p += 1;
                    }
                    if p == head {
                        break;
                    }
                    idx[p] += 1;
                }
            }
        }
    }
    out.sort();
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EquationOrder {
    #[default]
    Lex,
    /// A seeded permutation of the instances, for order-independence tests.
    Shuffled(u64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    pub area_bound: Q,
    pub max_insertions: usize,
    pub order: EquationOrder,
    pub binomial: BinomialConvention,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub table: OpenInvariantTable,
    /// Solved bracket and the instance that determined it, in solve order.
    pub solved: Vec<(Key, Instance)>,
    /// Unknowns no instance determines.
    pub unsolved: Vec<Key>,
    /// Every instance with its residual under the final table.
    pub residuals: Vec<(Instance, Poly)>,
}

impl SolveReport {
    pub fn inconsistent(&self) -> Vec<(&Instance, Q)> {
        self.residuals
            .iter()
            .filter_map(|(i, p)| p.as_constant().filter(|c| !c.is_zero()).map(|c| (i, c)))
            .collect()
    }

    /// Instances whose residual still involves unknowns.
    pub fn undetermined(&self) -> Vec<&Instance> {
        self.residuals.iter().filter(|(_, p)| p.as_constant().is_none()).map(|(i, _)| i).collect()
    }

    pub fn residual_vector_is_zero(&self) -> bool {
        self.residuals.iter().all(|(_, p)| p.is_zero())
    }
}

fn level(t: &WdvvTarget, k: &Key) -> (Q, usize) {
    (t.lattice.area(&k.beta), k.ins.len())
}

/// Solve for every bracket up to `area_bound` from the seeds, level by
/// level in (area, insertion count) order, then evaluate all instances.
pub fn solve_recursion(
    t: &WdvvTarget,
    closed: &ClosedGWTable,
    seeds: &OpenInvariantTable,
    opts: &SolveOptions,
) -> Result<SolveReport, WdvvError> {
    let mut instances = enumerate_instances(t, &opts.area_bound, opts.max_insertions)?;
    if let EquationOrder::Shuffled(seed) = opts.order {
        instances.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let ev = Evaluator { target: t, closed, open: None, binomial: opts.binomial };
    let polys: Vec<Poly> = instances.iter().map(|i| ev.residual(i)).collect::<Result<_, _>>()?;

    let mut occurs: BTreeMap<Key, Vec<usize>> = BTreeMap::new();
    for (e, p) in polys.iter().enumerate() {
        for v in p.variables() {
            occurs.entry(v).or_default().push(e);
        }
    }
    if let Some(k) = occurs.keys().find(|k| is_base_case(t, k) && seeds.get(k).is_none()) {
        return Err(WdvvError::MissingBaseCase(k.to_string()));
    }

    let mut table = seeds.clone();
    let mut pending: Vec<Key> = occurs.keys().filter(|k| table.get(k).is_none()).cloned().collect();
    pending.sort_by(|a, b| level(t, a).cmp(&level(t, b)).then(a.cmp(b)));
    let mut solved = Vec::new();
    loop {
        let mut progress = false;
        let mut rest = Vec::new();
        for x in pending {
            let found = occurs[&x].iter().find_map(|&e| {
                let p = polys[e].substitute(&|k| table.get(k).cloned());
                solve_linear(&p, &x).map(|v| (v, e))
            });
            match found {
                Some((v, e)) => {
                    table.insert(x.clone(), v);
                    solved.push((x, instances[e].clone()));
                    progress = true;
                }
                None => rest.push(x),
            }
        }
        pending = rest;
        if !progress || pending.is_empty() {
            break;
        }
    }

    let mut residuals: Vec<(Instance, Poly)> = instances
        .into_iter()
        .zip(&polys)
        .map(|(i, p)| (i, p.substitute(&|k| table.get(k).cloned())))
        .collect();
    residuals.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(SolveReport { table, solved, unsolved: pending, residuals })
}

/// The root of `c x + d` when `p` has exactly that shape with `c != 0`.
fn solve_linear(p: &Poly, x: &Key) -> Option<Q> {
    let mut c = Q::zero();
    let mut d = Q::zero();
    for (m, v) in p.terms() {
        match m.as_slice() {
            [] => d = v.clone(),
            [y] if y == x => c = v.clone(),
            _ => return None,
        }
    }
    if c.is_zero() {
        None
    } else {
        Some(-d / c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Check {
    Divisor,
    SphereTrade,
    YPairing,
    Vanishing,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Check::Divisor => "divisor",
            Check::SphereTrade => "sphere-trade",
            Check::YPairing => "y-pairing",
            Check::Vanishing => "vanishing",
        })
    }
}

/// The `k = 1` identity needs closed invariants with the odd class `γ0`
/// and `PD[Y]`, which the basis cannot express; they come as their own
/// table keyed by the restricted remaining insertions.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct YPairingData {
    /// `<γ0, [Y]_X>`.
    pub gamma0_y: Q,
    pub closed: ClosedGWTable,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StructureData {
    /// Degree-2 class index to its pairing with relative classes, by coordinate.
    pub divisor: BTreeMap<usize, Vec<Q>>,
    pub y_pairing: Option<YPairingData>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub check: Check,
    pub key: Key,
    pub lhs: Q,
    pub rhs: Q,
}

impl CheckOutcome {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StructureReport {
    pub outcomes: Vec<CheckOutcome>,
    pub untestable: Vec<(Check, Key, String)>,
}

impl StructureReport {
    pub fn passes(&self, c: Check) -> bool {
        self.outcomes.iter().filter(|o| o.check == c).all(CheckOutcome::holds)
    }

    pub fn failures(&self) -> Vec<&CheckOutcome> {
        self.outcomes.iter().filter(|o| !o.holds()).collect()
    }

    pub fn count(&self, c: Check) -> usize {
        self.outcomes.iter().filter(|o| o.check == c).count()
    }
}

fn lookup(t: &WdvvTarget, table: &OpenInvariantTable, key: &Key) -> Option<Q> {
    hardwired(t, key).or_else(|| table.get(key).cloned())
}

fn remove_one(ins: &[usize], c: usize) -> Vec<usize> {
    let mut v = ins.to_vec();
    if let Some(p) = v.iter().position(|&x| x == c) {
        v.remove(p);
    }
    v
}

/// Entry-by-entry structural checks over the stored table entries.
pub fn check_structure(
    t: &WdvvTarget,
    table: &OpenInvariantTable,
    data: &StructureData,
    checks: &BTreeSet<Check>,
) -> Result<StructureReport, WdvvError> {
    if checks.contains(&Check::Divisor) && data.divisor.is_empty() {
        return Err(WdvvError::MissingDeclaration("divisor"));
    }
    if checks.contains(&Check::SphereTrade) && t.model.sphere_class.is_none() {
        return Err(WdvvError::MissingDeclaration("sphere-trade"));
    }
    if checks.contains(&Check::YPairing) && data.y_pairing.is_none() {
        return Err(WdvvError::MissingDeclaration("y-pairing"));
    }
    for (&h, f) in &data.divisor {
        if h >= t.model.classes.len() || t.model.degree(h) != 2 || f.len() != t.lattice.rank {
            return Err(WdvvError::Model(format!("divisor pairing for class {h}")));
        }
    }
    let mut r = StructureReport::default();
    for (key, v) in &table.entries {
        let Some(k) = t.k_of(&key.beta, &key.ins) else { continue };
        if !t.regular(&key.beta, k) {
            continue;
        }
        let push = |r: &mut StructureReport, check, rhs: Option<Q>, lhs: Q| match rhs {
            Some(rhs) => r.outcomes.push(CheckOutcome { check, key: key.clone(), lhs, rhs }),
            None => r.untestable.push((check, key.clone(), "partner entry absent".into())),
        };
        if checks.contains(&Check::Divisor) {
            let distinct: BTreeSet<usize> = key.ins.iter().copied().collect();
            for h in distinct {
                let Some(f) = data.divisor.get(&h) else { continue };
                let pair: Q = f.iter().zip(&key.beta.0).map(|(a, &b)| a * q(b)).sum();
                let rest = Key::new(key.beta.clone(), remove_one(&key.ins, h));
                push(&mut r, Check::Divisor, lookup(t, table, &rest).map(|x| pair * x), v.clone());
            }
        }
        if checks.contains(&Check::SphereTrade) {
            let s = t.model.sphere_class.expect("checked above");
            if key.ins.contains(&s) {
                let rest = Key::new(key.beta.clone(), remove_one(&key.ins, s));
                push(&mut r, Check::SphereTrade, lookup(t, table, &rest).map(|x| -x), v.clone());
            }
        }
        if checks.contains(&Check::YPairing) && k == 1 {
            let d = data.y_pairing.as_ref().expect("checked above");
            let rhs = y_pairing_side(t, d, key)?;
            push(&mut r, Check::YPairing, rhs, &d.gamma0_y * v);
        }
        if checks.contains(&Check::Vanishing) && t.model.y_nonzero && k >= 2 {
            r.outcomes.push(CheckOutcome { check: Check::Vanishing, key: key.clone(), lhs: v.clone(), rhs: Q::zero() });
        }
    }
    Ok(r)
}

/// `-sum_B (-1)^{w2.B} <PD[Y], γ0, γ|_X>_B`, or `None` if a preimage is
/// not covered by the supplied table.
fn y_pairing_side(t: &WdvvTarget, d: &YPairingData, key: &Key) -> Result<Option<Q>, WdvvError> {
    let mut total = Q::zero();
    for b in t.closed.preimages(&t.lattice, &key.beta)? {
        if !d.closed.covered.contains(&b) {
            return Ok(None);
        }
        let mut acc: Vec<(Vec<usize>, Q)> = vec![(Vec::new(), Q::one())];
        for &c in &key.ins {
            let mut next = Vec::new();
            for (m, x) in &acc {
                for (j, y) in &t.model.classes[c].restriction {
                    let mut m = m.clone();
                    m.push(*j);
                    next.push((m, x * y));
                }
            }
            acc = next;
        }
        let mut s = Q::zero();
        for (m, x) in acc {
            s += x * d.closed.get(&b, &m)?;
        }
        total -= q(t.closed.w2_sign(&b)) * s;
    }
    Ok(Some(total))
}

/// One closed class in the `k = 0` extension.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtensionTerm {
    pub b: DegreeClass,
    /// `lk_os(f^C_B)`.
    pub lk_f: Q,
    /// Coefficients of `[f^C_B]` in the basis `PD(γ*_j|_X)`; length `N`.
    pub lambda: Vec<Q>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExtensionData {
    /// The multi-disk count itself (zero in degree zero).
    pub base: Q,
    pub terms: Vec<ExtensionTerm>,
    /// `lk_os(Γ*_j)` for the two-dimensional basis pseudocycles.
    pub lk_basis: BTreeMap<usize, Q>,
}

/// `<γ_1..γ_l>_{β,0}` for `β` in the image of `q_Y`: the count plus the
/// `(-1)^{w2.B}`-weighted linking corrections.
pub fn beta_zero_extension(t: &WdvvTarget, beta: &DegreeClass, ins: &[usize], data: &ExtensionData) -> Result<Q, WdvvError> {
    t.model.check_insertions(ins)?;
    if t.model.y_nonzero {
        return Ok(Q::zero());
    }
    let n = t.model.basis_len;
    let excess: i64 = ins.iter().map(|&c| t.model.degree(c) as i64 - 2).sum();
    let mut total = data.base.clone();
    for term in &data.terms {
        if term.lambda.len() != n {
            return Err(WdvvError::LambdaLength { got: term.lambda.len(), n });
        }
        if t.closed.image(&term.b) != *beta {
            return Err(WdvvError::Model(format!("class {} does not map to {beta}", term.b)));
        }
        let dim = t.lattice.maslov(beta) - excess + 2;
        if dim != 2 {
            continue;
        }
        let mut lk = term.lk_f.clone();
        for (j, l) in term.lambda.iter().enumerate() {
            // a basis pseudocycle is two-dimensional only for degree 4
            if l.is_zero() || t.model.degree(j) != 4 {
                continue;
            }
            let v = data.lk_basis.get(&j).ok_or(WdvvError::MissingLk(j))?;
            lk -= l * v;
        }
        total += q(t.closed.w2_sign(&term.b)) * lk;
    }
    Ok(total)
}
