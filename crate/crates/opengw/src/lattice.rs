//! Relative degree lattice, constraint tuples and degeneration types.
//!
//! The relative homology lattice is a declared `Z^r` with linear area and
//! Maslov functionals and a finite list of effective generators. All
//! enumerations run over the effective monoid and are finite because every
//! generator has area at least the declared gap.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_traits::Signed;
use thiserror::Error;

use crate::linalg::in_integer_image;
use crate::ring::{fmt_q, Q};

pub type Label = String;

#[derive(Debug, Error, PartialEq)]
pub enum LatticeError {
    #[error("no area gap declared; enumeration would be unbounded")]
    NoAreaGap,
    #[error("generator {0} has area below the declared gap")]
    BelowGap(usize),
    #[error("class has {got} coordinates, lattice rank is {rank}")]
    Rank { got: usize, rank: usize },
    #[error("generator {0} has odd Maslov index")]
    OddMaslov(usize),
    #[error("unknown constraint descriptor {0}")]
    UnknownDescriptor(Label),
    #[error("descriptor {0} has codimension outside {{2, 4, 6}}")]
    BadCodim(Label),
    #[error("invalid constraint tuple: {0}")]
    InvalidTuple(String),
}

/// A class in the relative lattice, by coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DegreeClass(pub Vec<i64>);

impl DegreeClass {
    pub fn zero(rank: usize) -> Self {
        DegreeClass(vec![0; rank])
    }
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }
    pub fn add(&self, o: &Self) -> Self {
        DegreeClass(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }
    pub fn sub(&self, o: &Self) -> Self {
        DegreeClass(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect())
    }
    pub fn neg(&self) -> Self {
        DegreeClass(self.0.iter().map(|a| -a).collect())
    }
}

impl fmt::Display for DegreeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    pub rank: usize,
    pub area: Vec<Q>,
    pub maslov: Vec<i64>,
    pub generators: Vec<DegreeClass>,
    pub area_gap: Option<Q>,
}

impl Lattice {
    pub fn area(&self, b: &DegreeClass) -> Q {
        b.0.iter().zip(&self.area).map(|(&c, a)| a * Q::from_integer(c.into())).sum()
    }

    pub fn maslov(&self, b: &DegreeClass) -> i64 {
        b.0.iter().zip(&self.maslov).map(|(c, m)| c * m).sum()
    }

    /// Membership in the positive cone: positive area or zero.
    pub fn in_positive_cone(&self, b: &DegreeClass) -> bool {
        b.is_zero() || self.area(b).is_positive()
    }

    pub fn check_class(&self, b: &DegreeClass) -> Result<(), LatticeError> {
        if b.0.len() != self.rank {
            return Err(LatticeError::Rank { got: b.0.len(), rank: self.rank });
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), LatticeError> {
        if self.area.len() != self.rank || self.maslov.len() != self.rank {
            return Err(LatticeError::Rank { got: self.area.len(), rank: self.rank });
        }
        let gap = self.area_gap.as_ref().ok_or(LatticeError::NoAreaGap)?;
        if !gap.is_positive() {
            return Err(LatticeError::NoAreaGap);
        }
        for (i, g) in self.generators.iter().enumerate() {
            self.check_class(g)?;
            if self.area(g) < *gap {
                return Err(LatticeError::BelowGap(i));
            }
            if self.maslov(g) % 2 != 0 {
                return Err(LatticeError::OddMaslov(i));
            }
        }
        Ok(())
    }

    /// Generators violating "positive area and nonnegative Maslov index imply
    /// positive Maslov index".
    pub fn positivity_violations(&self) -> Vec<usize> {
        (0..self.generators.len())
            .filter(|&i| {
                let g = &self.generators[i];
                self.area(g).is_positive() && self.maslov(g) == 0
            })
            .collect()
    }

    /// All effective classes (nonnegative combinations of generators) with
    /// area at most `bound`, including zero.
    pub fn effective_up_to(&self, bound: &Q) -> Result<BTreeSet<DegreeClass>, LatticeError> {
        self.validate()?;
        let mut seen = BTreeSet::new();
        let mut frontier = vec![DegreeClass::zero(self.rank)];
        seen.insert(DegreeClass::zero(self.rank));
        while let Some(b) = frontier.pop() {
            for g in &self.generators {
                let n = b.add(g);
                if self.area(&n) <= *bound && seen.insert(n.clone()) {
                    frontier.push(n);
                }
            }
        }
        Ok(seen)
    }

    /// Effective `b'` with `b - b'` effective.
    pub fn effective_below(&self, b: &DegreeClass) -> Result<Vec<DegreeClass>, LatticeError> {
        let eff = self.effective_up_to(&self.area(b))?;
        Ok(eff.iter().filter(|x| eff.contains(&b.sub(x))).cloned().collect())
    }

    pub fn is_effective(&self, b: &DegreeClass) -> Result<bool, LatticeError> {
        if self.area(b).is_negative() {
            return Ok(false);
        }
        Ok(self.effective_up_to(&self.area(b))?.contains(b))
    }
}

/// Closed lattice `H_2(X; Z)` with the map into the relative lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedLattice {
    pub rank: usize,
    /// `q[i][j]`: relative coordinate `i` of the image of closed basis vector `j`.
    pub q: Vec<Vec<i64>>,
    pub generators: Vec<DegreeClass>,
    /// `(-1)^{<w2, e_j>}` for each closed basis vector.
    pub w2: Vec<i64>,
}

impl ClosedLattice {
    pub fn image(&self, b: &DegreeClass) -> DegreeClass {
        DegreeClass(
            self.q.iter().map(|row| row.iter().zip(&b.0).map(|(a, c)| a * c).sum()).collect(),
        )
    }

    /// Whether `beta` is in the image of the integer map.
    pub fn in_image(&self, beta: &DegreeClass) -> bool {
        let a: Vec<Vec<BigInt>> =
            self.q.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
        let b: Vec<BigInt> = beta.0.iter().map(|&x| BigInt::from(x)).collect();
        in_integer_image(&a, self.rank, &b)
    }

    /// The sign `(-1)^{<w2, B>}`.
    pub fn w2_sign(&self, b: &DegreeClass) -> i64 {
        let odd: i64 = b.0.iter().zip(&self.w2).filter(|(_, &s)| s == -1).map(|(c, _)| *c).sum();
        if odd.rem_euclid(2) == 0 {
            1
        } else {
            -1
        }
    }

    /// Effective closed classes whose image has area at most `bound`.
    pub fn effective_up_to(
        &self,
        rel: &Lattice,
        bound: &Q,
    ) -> Result<BTreeSet<DegreeClass>, LatticeError> {
        let gap = rel.area_gap.as_ref().ok_or(LatticeError::NoAreaGap)?;
        for (i, g) in self.generators.iter().enumerate() {
            if rel.area(&self.image(g)) < *gap {
                return Err(LatticeError::BelowGap(i));
            }
        }
        let mut seen = BTreeSet::new();
        let mut frontier = vec![DegreeClass::zero(self.rank)];
        seen.insert(DegreeClass::zero(self.rank));
        while let Some(b) = frontier.pop() {
            for g in &self.generators {
                let n = b.add(g);
                if rel.area(&self.image(&n)) <= *bound && seen.insert(n.clone()) {
                    frontier.push(n);
                }
            }
        }
        Ok(seen)
    }

    /// Effective closed `B` with `q(B) = beta`.
    pub fn preimages(&self, rel: &Lattice, beta: &DegreeClass) -> Result<Vec<DegreeClass>, LatticeError> {
        Ok(self
            .effective_up_to(rel, &rel.area(beta))?
            .into_iter()
            .filter(|b| self.image(b) == *beta)
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Descriptor {
    pub codim: u32,
}

/// Lattice plus the constraint descriptors.
#[derive(Clone, Debug, PartialEq)]
pub struct Target {
    pub lattice: Lattice,
    pub descriptors: BTreeMap<Label, Descriptor>,
}

/// `(beta, K, L)`. The derived order is the canonical order: coordinates
/// lexicographically, then `K`, then `L`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConstraintTuple {
    pub beta: DegreeClass,
    pub k: BTreeSet<Label>,
    pub l: BTreeSet<Label>,
}

impl ConstraintTuple {
    pub fn new<'a>(
        beta: DegreeClass,
        k: impl IntoIterator<Item = &'a str>,
        l: impl IntoIterator<Item = &'a str>,
    ) -> Self {
        ConstraintTuple {
            beta,
            k: k.into_iter().map(str::to_owned).collect(),
            l: l.into_iter().map(str::to_owned).collect(),
        }
    }

    pub fn point(rank: usize, p: &str) -> Self {
        ConstraintTuple::new(DegreeClass::zero(rank), [p], [])
    }

    /// `(0, {p}, {})`
    pub fn is_point(&self) -> bool {
        self.beta.is_zero() && self.k.len() == 1 && self.l.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_zero() && self.k.is_empty() && self.l.is_empty()
    }
}

impl fmt::Display for ConstraintTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k: Vec<&str> = self.k.iter().map(String::as_str).collect();
        let l: Vec<&str> = self.l.iter().map(String::as_str).collect();
        write!(f, "({}; {{{}}}; {{{}}})", self.beta, k.join(","), l.join(","))
    }
}

/// `(beta_dot, k_dot, L_dot, (alpha_1, ..., alpha_k))` with ordered parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DegenerationType {
    pub beta_bullet: DegreeClass,
    pub l_bullet: BTreeSet<Label>,
    pub parts: Vec<ConstraintTuple>,
}

impl DegenerationType {
    pub fn k_bullet(&self) -> usize {
        self.parts.len()
    }

    /// Canonical representative of the class under permuting parts.
    pub fn canonical(&self) -> DegenerationType {
        let mut parts = self.parts.clone();
        parts.sort();
        DegenerationType { parts, ..self.clone() }
    }
}

impl fmt::Display for DegenerationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l: Vec<&str> = self.l_bullet.iter().map(String::as_str).collect();
        let parts: Vec<String> = self.parts.iter().map(|p| p.to_string()).collect();
        write!(f, "<{}; {}; {{{}}}; {}>", self.beta_bullet, self.parts.len(), l.join(","), parts.join(" "))
    }
}

impl Target {
    pub fn codim(&self, id: &str) -> Result<u32, LatticeError> {
        self.descriptors.get(id).map(|d| d.codim).ok_or_else(|| LatticeError::UnknownDescriptor(id.into()))
    }

    pub fn validate(&self) -> Result<(), LatticeError> {
        self.lattice.validate()?;
        for (id, d) in &self.descriptors {
            if ![2, 4, 6].contains(&d.codim) {
                return Err(LatticeError::BadCodim(id.clone()));
            }
        }
        Ok(())
    }

    pub fn check_tuple(&self, a: &ConstraintTuple) -> Result<(), LatticeError> {
        self.lattice.check_class(&a.beta)?;
        for id in &a.l {
            self.codim(id)?;
        }
        if a.is_empty() {
            return Err(LatticeError::InvalidTuple("(0, {}, {}) is not a constraint tuple".into()));
        }
        if !self.lattice.in_positive_cone(&a.beta) {
            return Err(LatticeError::InvalidTuple(format!("{} has nonpositive area", a.beta)));
        }
        Ok(())
    }

    /// `mu(beta) - 2|K| - sum over L of (codim - 2)`
    pub fn dimension(&self, a: &ConstraintTuple) -> i64 {
        self.lattice.maslov(&a.beta) - 2 * a.k.len() as i64 - self.codim_excess(&a.l)
    }

    pub fn codim_excess<'a>(&self, l: impl IntoIterator<Item = &'a Label>) -> i64 {
        l.into_iter().map(|id| self.codim(id).map(|c| c as i64 - 2).unwrap_or(0)).sum()
    }

    /// `a' <= a`: `beta - beta'` in the positive cone, `K' < K`, `L' < L`.
    pub fn precedes(&self, a1: &ConstraintTuple, a: &ConstraintTuple) -> bool {
        self.lattice.in_positive_cone(&a.beta.sub(&a1.beta)) && a1.k.is_subset(&a.k) && a1.l.is_subset(&a.l)
    }

    pub fn strictly_precedes(&self, a1: &ConstraintTuple, a: &ConstraintTuple) -> bool {
        a1 != a && self.precedes(a1, a)
    }

    /// All strict predecessors of `a` with effective degree and effective
    /// complement.
    pub fn enumerate_below(&self, a: &ConstraintTuple) -> Result<BTreeSet<ConstraintTuple>, LatticeError> {
        let degrees = self.lattice.effective_below(&a.beta)?;
        let ks = subsets(&a.k);
        let ls = subsets(&a.l);
        let mut out = BTreeSet::new();
        for b in &degrees {
            for k in &ks {
                for l in &ls {
                    let t = ConstraintTuple { beta: b.clone(), k: k.clone(), l: l.clone() };
                    if !t.is_empty() && t != *a {
                        out.insert(t);
                    }
                }
            }
        }
        Ok(out)
    }

    /// The degeneration types of `a`, with ordered parts.
    pub fn enumerate_degenerations(&self, a: &ConstraintTuple) -> Result<Vec<DegenerationType>, LatticeError> {
        let mut out = Vec::new();
        self.for_each_degeneration(a, false, &mut |eta| out.push(eta))?;
        out.sort();
        Ok(out)
    }

    /// Degeneration classes under permutation of parts, keyed by the sorted
    /// representative, with the number of ordered types in each class.
    pub fn degeneration_classes(
        &self,
        a: &ConstraintTuple,
    ) -> Result<BTreeMap<DegenerationType, usize>, LatticeError> {
        let mut classes = BTreeMap::new();
        self.for_each_degeneration(a, true, &mut |eta| {
            let n = orderings(&eta.parts);
            classes.insert(eta, n);
        })?;
        Ok(classes)
    }

    fn for_each_degeneration(
        &self,
        a: &ConstraintTuple,
        sorted: bool,
        emit: &mut dyn FnMut(DegenerationType),
    ) -> Result<(), LatticeError> {
        let eff: BTreeSet<DegreeClass> = self.lattice.effective_below(&a.beta)?.into_iter().collect();
        for bb in &eff {
            for lb in subsets(&a.l) {
                let rest_l: BTreeSet<Label> = a.l.difference(&lb).cloned().collect();
                let rest_beta = a.beta.sub(bb);
                let mut parts = Vec::new();
                let trivial_centre = bb.is_zero() && lb.is_empty();
                self.grow_parts(&eff, &rest_beta, &a.k, &rest_l, sorted, &mut parts, &mut |ps| {
                    if trivial_centre && ps.len() == 1 {
                        return;
                    }
                    emit(DegenerationType { beta_bullet: bb.clone(), l_bullet: lb.clone(), parts: ps.to_vec() });
                });
            }
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn grow_parts(
        &self,
        eff: &BTreeSet<DegreeClass>,
        beta: &DegreeClass,
        k: &BTreeSet<Label>,
        l: &BTreeSet<Label>,
        sorted: bool,
        acc: &mut Vec<ConstraintTuple>,
        emit: &mut dyn FnMut(&[ConstraintTuple]),
    ) {
        if beta.is_zero() && k.is_empty() && l.is_empty() {
            emit(acc);
            return;
        }
        for b in eff.iter().filter(|b| eff.contains(&beta.sub(b))) {
            for ks in subsets(k) {
                for ls in subsets(l) {
                    let part = ConstraintTuple { beta: b.clone(), k: ks.clone(), l: ls.clone() };
                    if part.is_empty() || (sorted && acc.last().is_some_and(|p| *p > part)) {
                        continue;
                    }
                    let k2 = k.difference(&ks).cloned().collect();
                    let l2 = l.difference(&ls).cloned().collect();
                    acc.push(part);
                    self.grow_parts(eff, &beta.sub(b), &k2, &l2, sorted, acc, emit);
                    acc.pop();
                }
            }
        }
    }
}

/// Number of distinct orderings of a sorted list.
fn orderings(parts: &[ConstraintTuple]) -> usize {
    let mut n: usize = (1..=parts.len()).product();
    let mut i = 0;
    while i < parts.len() {
        let j = (i..parts.len()).find(|&j| parts[j] != parts[i]).unwrap_or(parts.len());
        n /= (1..=j - i).product::<usize>();
        i = j;
    }
    n
}

/// All subsets of a finite set, in a fixed order.
pub fn subsets(s: &BTreeSet<Label>) -> Vec<BTreeSet<Label>> {
    let items: Vec<&Label> = s.iter().collect();
    let n = items.len();
    (0u64..1 << n)
        .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).map(|i| items[i].clone()).collect())
        .collect()
}

/// `(mu - sum (deg - 2)) / 2` when it is a nonnegative integer.
pub fn k_beta(maslov: i64, degs: &[u32]) -> Option<i64> {
    let t = maslov - degs.iter().map(|&d| d as i64 - 2).sum::<i64>();
    if t < 0 || t % 2 != 0 {
        None
    } else {
        Some(t / 2)
    }
}

/// Whether the half-integer is non-integral (as opposed to negative).
pub fn k_beta_is_fractional(maslov: i64, degs: &[u32]) -> bool {
    let t = maslov - degs.iter().map(|&d| d as i64 - 2).sum::<i64>();
    t % 2 != 0
}

impl fmt::Display for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a: Vec<String> = self.area.iter().map(fmt_q).collect();
        write!(f, "rank {} area [{}] maslov {:?}", self.rank, a.join(","), self.maslov)
    }
}
