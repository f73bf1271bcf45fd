//! Declarative input files and plain-text output.
//!
//! Every input is a TOML document whose first key is `format = "opengw/1"`.
//! Rationals are strings `"p"` or `"p/q"`; classes and insertions are written
//! as integer coordinate arrays and class names. The schema is documented in
//! `docs/formats.md`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Deserialize;
use thiserror::Error;

use crate::lattice::{ClosedLattice, ConstraintTuple, DegreeClass, Descriptor, Lattice, LatticeError, Target};
use crate::multidisk::{DiskAtom, LinkingMatrix, MultiDiskError};
use crate::orientation::Sign;
use crate::ring::{fmt_q, parse_q, Q};
use crate::wdvv::{
    beta_zero_extension, ClosedGWTable, CohomologyModel, ExtensionData, ExtensionTerm, InsertionClass, Key,
    OpenInvariantTable, StructureData, WdvvError, WdvvTarget, YPairingData,
};

pub const FORMAT: &str = "opengw/1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{0}")]
    Toml(#[from] toml::de::Error),
    #[error("format header is {0:?}, expected \"{FORMAT}\"")]
    Header(String),
    #[error("not a rational: {0:?}")]
    Rational(String),
    #[error("unknown class name {0:?}")]
    UnknownClass(String),
    #[error("{0}")]
    Schema(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Wdvv(#[from] WdvvError),
    #[error(transparent)]
    MultiDisk(#[from] MultiDiskError),
}

fn rat(s: &str) -> Result<Q, IoError> {
    parse_q(s).ok_or_else(|| IoError::Rational(s.into()))
}

fn rats(v: &[String]) -> Result<Vec<Q>, IoError> {
    v.iter().map(|s| rat(s)).collect()
}

fn header(f: &str) -> Result<(), IoError> {
    if f != FORMAT {
        return Err(IoError::Header(f.into()));
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLattice {
    rank: usize,
    area: Vec<String>,
    maslov: Vec<i64>,
    generators: Vec<Vec<i64>>,
    area_gap: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTuple {
    degree: Vec<i64>,
    #[serde(default)]
    points: Vec<String>,
    #[serde(default)]
    constraints: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawClosed {
    rank: usize,
    q: Vec<Vec<i64>>,
    generators: Vec<Vec<i64>>,
    w2: Vec<i64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawClass {
    name: String,
    degree: u32,
    /// `[[basis name, coefficient]]`; omitted for basis classes.
    restriction: Option<Vec<(String, String)>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCohomology {
    basis: Vec<RawClass>,
    #[serde(default)]
    extra: Vec<RawClass>,
    pairing: Vec<Vec<String>>,
    sphere_class: Option<String>,
    #[serde(default)]
    y_nonzero: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTarget {
    format: String,
    lattice: RawLattice,
    #[serde(default)]
    descriptors: BTreeMap<String, u32>,
    tuple: Option<RawTuple>,
    closed_lattice: Option<RawClosed>,
    cohomology: Option<RawCohomology>,
    /// Degree-2 class name to its pairing with the relative coordinates.
    #[serde(default)]
    divisor: BTreeMap<String, Vec<String>>,
}

/// A parsed target file. Sections other than the lattice are optional and
/// each pipeline asks for what it needs.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetFile {
    pub target: Target,
    pub tuple: Option<ConstraintTuple>,
    pub wdvv: Option<WdvvTarget>,
    pub structure: StructureData,
}

impl TargetFile {
    pub fn wdvv(&self) -> Result<&WdvvTarget, IoError> {
        self.wdvv.as_ref().ok_or_else(|| IoError::Schema("target has no cohomology section".into()))
    }

    pub fn tuple(&self) -> Result<&ConstraintTuple, IoError> {
        self.tuple.as_ref().ok_or_else(|| IoError::Schema("target has no tuple section".into()))
    }
}

fn lattice(r: RawLattice) -> Result<Lattice, IoError> {
    let area = rats(&r.area)?;
    let area_gap = r.area_gap.as_deref().map(rat).transpose()?;
    let l = Lattice {
        rank: r.rank,
        area,
        maslov: r.maslov,
        generators: r.generators.into_iter().map(DegreeClass).collect(),
        area_gap,
    };
    l.validate()?;
    Ok(l)
}

fn cohomology(r: RawCohomology) -> Result<CohomologyModel, IoError> {
    let n = r.basis.len();
    let names: Vec<String> = r.basis.iter().chain(&r.extra).map(|c| c.name.clone()).collect();
    let index = |s: &str| names.iter().position(|x| x == s).ok_or_else(|| IoError::UnknownClass(s.into()));
    let mut classes = Vec::new();
    for (j, c) in r.basis.into_iter().enumerate() {
        if c.restriction.is_some() {
            return Err(IoError::Schema(format!("basis class {} cannot declare a restriction", c.name)));
        }
        classes.push(InsertionClass { name: c.name, degree: c.degree, restriction: vec![(j, Q::from_integer(1.into()))] });
    }
    for c in r.extra {
        let mut restriction = Vec::new();
        for (b, v) in c.restriction.unwrap_or_default() {
            let j = index(&b)?;
            if j >= n {
                return Err(IoError::Schema(format!("{} restricts to non-basis class {b}", c.name)));
            }
            restriction.push((j, rat(&v)?));
        }
        classes.push(InsertionClass { name: c.name, degree: c.degree, restriction });
    }
    let pairing = r.pairing.iter().map(|row| rats(row)).collect::<Result<Vec<_>, _>>()?;
    let sphere = r.sphere_class.as_deref().map(index).transpose()?;
    Ok(CohomologyModel::new(classes, n, pairing, sphere, r.y_nonzero)?)
}

pub fn parse_target(src: &str) -> Result<TargetFile, IoError> {
    let r: RawTarget = toml::from_str(src)?;
    header(&r.format)?;
    let lat = lattice(r.lattice)?;
    let descriptors = r.descriptors.into_iter().map(|(k, c)| (k, Descriptor { codim: c })).collect();
    let target = Target { lattice: lat.clone(), descriptors };
    target.validate()?;
    let tuple = match r.tuple {
        Some(t) => {
            let a = ConstraintTuple {
                beta: DegreeClass(t.degree),
                k: t.points.into_iter().collect(),
                l: t.constraints.into_iter().collect(),
            };
            target.check_tuple(&a)?;
            Some(a)
        }
        None => None,
    };
    let wdvv = match (r.closed_lattice, r.cohomology) {
        (Some(c), Some(h)) => {
            let closed = ClosedLattice {
                rank: c.rank,
                q: c.q,
                generators: c.generators.into_iter().map(DegreeClass).collect(),
                w2: c.w2,
            };
            if closed.q.len() != lat.rank || closed.q.iter().any(|r| r.len() != closed.rank) {
                return Err(IoError::Schema("closed_lattice.q must be relative rank x closed rank".into()));
            }
            if closed.w2.len() != closed.rank || closed.w2.iter().any(|s| s.abs() != 1) {
                return Err(IoError::Schema("closed_lattice.w2 must list one sign per closed coordinate".into()));
            }
            Some(WdvvTarget { lattice: lat.clone(), closed, model: cohomology(h)? })
        }
        (None, None) => None,
        _ => return Err(IoError::Schema("closed_lattice and cohomology come together".into())),
    };
    let mut structure = StructureData::default();
    if !r.divisor.is_empty() {
        let w = wdvv.as_ref().ok_or_else(|| IoError::Schema("divisor needs a cohomology section".into()))?;
        for (name, v) in r.divisor {
            structure.divisor.insert(class_index(&w.model, &name)?, rats(&v)?);
        }
    }
    Ok(TargetFile { target, tuple, wdvv, structure })
}

pub fn class_index(m: &CohomologyModel, name: &str) -> Result<usize, IoError> {
    m.classes.iter().position(|c| c.name == name).ok_or_else(|| IoError::UnknownClass(name.into()))
}

fn class_indices(m: &CohomologyModel, names: &[String]) -> Result<Vec<usize>, IoError> {
    names.iter().map(|n| class_index(m, n)).collect()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAtom {
    id: String,
    degree: Vec<i64>,
    #[serde(default)]
    points: Vec<String>,
    #[serde(default)]
    constraints: Vec<String>,
    sign: String,
    boundary: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLink {
    a: String,
    b: String,
    value: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAtoms {
    format: String,
    #[serde(default)]
    atom: Vec<RawAtom>,
    #[serde(default)]
    link: Vec<RawLink>,
    /// Pairs of conjugate atom ids.
    #[serde(default)]
    conjugate: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AtomsFile {
    pub pool: Vec<DiskAtom>,
    pub links: LinkingMatrix<Q>,
    pub conj: BTreeMap<String, String>,
}

pub fn parse_atoms(src: &str) -> Result<AtomsFile, IoError> {
    let r: RawAtoms = toml::from_str(src)?;
    header(&r.format)?;
    let mut pool = Vec::new();
    let mut links = LinkingMatrix::new();
    for a in r.atom {
        let sign = match a.sign.as_str() {
            "+" => Sign::Plus,
            "-" => Sign::Minus,
            s => return Err(IoError::Schema(format!("atom {} has sign {s:?}, expected \"+\" or \"-\"", a.id))),
        };
        links.declare_bounding(&a.boundary);
        pool.push(DiskAtom {
            id: a.id,
            degree: DegreeClass(a.degree),
            k: a.points.into_iter().collect(),
            l: a.constraints.into_iter().collect(),
            sign,
            boundary: a.boundary,
        });
    }
    for l in r.link {
        links.set(&l.a, &l.b, rat(&l.value)?)?;
    }
    let mut conj = BTreeMap::new();
    for (a, b) in r.conjugate {
        conj.insert(a.clone(), b.clone());
        conj.insert(b, a);
    }
    Ok(AtomsFile { pool, links, conj })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawClosedEntry {
    class: Vec<i64>,
    insertions: Vec<String>,
    value: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawYPairing {
    gamma0_y: String,
    covered: Vec<Vec<i64>>,
    #[serde(default)]
    entry: Vec<RawClosedEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawClosedTable {
    format: String,
    covered: Vec<Vec<i64>>,
    #[serde(default)]
    entry: Vec<RawClosedEntry>,
    y_pairing: Option<RawYPairing>,
}

fn closed_entries(
    m: &CohomologyModel,
    covered: Vec<Vec<i64>>,
    entries: Vec<RawClosedEntry>,
) -> Result<ClosedGWTable, IoError> {
    let mut t = ClosedGWTable::default();
    t.covered = covered.into_iter().map(DegreeClass).collect();
    for e in entries {
        let b = DegreeClass(e.class);
        if !t.covered.contains(&b) {
            return Err(IoError::Schema(format!("closed entry for uncovered class {b}")));
        }
        let ins = class_indices(m, &e.insertions)?;
        if let Some(c) = ins.iter().find(|&&c| c >= m.basis_len) {
            return Err(IoError::Schema(format!("closed insertion {} is not a basis class", m.classes[*c].name)));
        }
        t.insert(b, ins, rat(&e.value)?);
    }
    Ok(t)
}

/// Closed invariants, with the optional data for the `k = 1` identity.
pub fn parse_closed(src: &str, m: &CohomologyModel) -> Result<(ClosedGWTable, Option<YPairingData>), IoError> {
    let r: RawClosedTable = toml::from_str(src)?;
    header(&r.format)?;
    let table = closed_entries(m, r.covered, r.entry)?;
    let y = match r.y_pairing {
        Some(y) => Some(YPairingData { gamma0_y: rat(&y.gamma0_y)?, closed: closed_entries(m, y.covered, y.entry)? }),
        None => None,
    };
    Ok((table, y))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOpenEntry {
    degree: Vec<i64>,
    insertions: Vec<String>,
    k: Option<i64>,
    value: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExtensionTerm {
    class: Vec<i64>,
    lk: String,
    lambda: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExtension {
    degree: Vec<i64>,
    insertions: Vec<String>,
    #[serde(default = "zero_string")]
    base: String,
    #[serde(default)]
    lk_basis: BTreeMap<String, String>,
    #[serde(default)]
    term: Vec<RawExtensionTerm>,
}

fn zero_string() -> String {
    "0".into()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOpenTable {
    format: String,
    #[serde(default)]
    entry: Vec<RawOpenEntry>,
    #[serde(default)]
    extension: Vec<RawExtension>,
}

/// An open table. `extension` items are evaluated through the `k = 0`
/// extension formula and stored like plain entries.
pub fn parse_open(src: &str, t: &WdvvTarget) -> Result<OpenInvariantTable, IoError> {
    let r: RawOpenTable = toml::from_str(src)?;
    header(&r.format)?;
    let m = &t.model;
    let mut table = OpenInvariantTable::default();
    for e in r.entry {
        let ins = class_indices(m, &e.insertions)?;
        let beta = DegreeClass(e.degree);
        t.lattice.check_class(&beta)?;
        let v = rat(&e.value)?;
        match e.k {
            Some(k) => table.insert_with_k(t, beta, ins, k, v)?,
            None => table.insert(Key::new(beta, ins), v),
        }
    }
    for x in r.extension {
        let ins = class_indices(m, &x.insertions)?;
        let beta = DegreeClass(x.degree);
        t.check_k(&beta, &ins, 0)?;
        let mut data = ExtensionData { base: rat(&x.base)?, ..Default::default() };
        for (name, v) in x.lk_basis {
            data.lk_basis.insert(class_index(m, &name)?, rat(&v)?);
        }
        for term in x.term {
            data.terms.push(ExtensionTerm { b: DegreeClass(term.class), lk_f: rat(&term.lk)?, lambda: rats(&term.lambda)? });
        }
        let v = beta_zero_extension(t, &beta, &ins, &data)?;
        table.insert(Key::new(beta, ins), v);
    }
    Ok(table)
}

fn names(m: &CohomologyModel, ins: &[usize]) -> String {
    let v: Vec<&str> = ins.iter().map(|&c| m.classes[c].name.as_str()).collect();
    v.join(",")
}

/// Tab-separated table: degree, insertions, k, value.
pub fn write_open_table(t: &WdvvTarget, table: &OpenInvariantTable) -> String {
    let mut s = String::from("degree\tinsertions\tk\tvalue\n");
    for (key, v) in &table.entries {
        let k = t.k_of(&key.beta, &key.ins).map_or("-".to_string(), |k| k.to_string());
        writeln!(s, "{}\t{}\t{k}\t{}", key.beta, names(&t.model, &key.ins), fmt_q(v)).unwrap();
    }
    s
}

/// The same table as a loadable open-table document.
pub fn write_open_toml(t: &WdvvTarget, table: &OpenInvariantTable) -> String {
    let mut s = format!("format = \"{FORMAT}\"\n");
    for (key, v) in &table.entries {
        let ins: Vec<String> = key.ins.iter().map(|&c| format!("{:?}", t.model.classes[c].name)).collect();
        let deg: Vec<String> = key.beta.0.iter().map(|c| c.to_string()).collect();
        write!(
            s,
            "\n[[entry]]\ndegree = [{}]\ninsertions = [{}]\nvalue = \"{}\"\n",
            deg.join(", "),
            ins.join(", "),
            fmt_q(v)
        )
        .unwrap();
    }
    s
}

/// Human-readable insertion list for reports.
pub fn key_label(t: &WdvvTarget, key: &Key) -> String {
    format!("<{}>_{}", names(&t.model, &key.ins), key.beta)
}
