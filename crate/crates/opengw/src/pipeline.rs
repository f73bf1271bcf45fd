//! Batch pipelines over parsed inputs. Every pipeline returns its checks and
//! a set of named text artifacts; nothing here touches the filesystem.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::bounding_chain::{
    branch_to_dmd, build_chains, check_chains, direct_boundary, dmd_boundary, dmd_to_branch, enumerate_dmd,
    enumerate_ov_dmd, invariant_star, verify_degree_relation, BranchDecomposition, ChainError, Chains, DiskModel,
    SignConventions, StarWeight,
};
use crate::io::{key_label, write_open_table, write_open_toml, AtomsFile, TargetFile};
use crate::lattice::{ConstraintTuple, LatticeError};
use crate::linalg::Matrix;
use crate::multidisk::{
    conjugation_cancellation_check, multi_disks, spanning_trees, tree_weight_sum, tree_weight_sum_enumerated,
    validate_pool, welschinger_count, MultiDiskError,
};
use crate::ring::{fmt_q, q, qf, Q};
use crate::synthetic::{generate, SyntheticParams};
use crate::wdvv::{
    check_structure, enumerate_instances, solve_recursion, BinomialConvention, Check, ClosedGWTable, EquationOrder,
    Evaluator, Instance, OpenInvariantTable, SolveOptions, SolveReport, WdvvError, WdvvTarget, YPairingData,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pipeline {
    Enumerate,
    BbRecursion,
    Welschinger,
    WdvvSolve,
    VerifyAll,
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pipeline::Enumerate => "enumerate",
            Pipeline::BbRecursion => "bb-recursion",
            Pipeline::Welschinger => "welschinger",
            Pipeline::WdvvSolve => "wdvv-solve",
            Pipeline::VerifyAll => "verify-all",
        })
    }
}

impl FromStr for Pipeline {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "enumerate" => Pipeline::Enumerate,
            "bb-recursion" => Pipeline::BbRecursion,
            "welschinger" => Pipeline::Welschinger,
            "wdvv-solve" => Pipeline::WdvvSolve,
            "verify-all" => Pipeline::VerifyAll,
            _ => return Err(PipelineError::Config(format!("unknown pipeline {s:?}"))),
        })
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Config(String),
    #[error("pipeline {pipeline} needs {input}")]
    MissingInput { pipeline: Pipeline, input: &'static str },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    MultiDisk(#[from] MultiDiskError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Wdvv(#[from] WdvvError),
}

#[derive(Clone, Debug, Default)]
pub struct Inputs {
    pub target: Option<TargetFile>,
    pub atoms: Option<AtomsFile>,
    pub closed: Option<(ClosedGWTable, Option<YPairingData>)>,
    pub seeds: Option<OpenInvariantTable>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub pipeline: Pipeline,
    pub area_bound: Q,
    pub cap_trees: usize,
    pub max_insertions: usize,
    /// Seed for the synthetic suites of `verify-all`.
    pub seed: u64,
    /// Synthetic instances per suite.
    pub suite_size: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { pipeline: Pipeline::VerifyAll, area_bound: q(1), cap_trees: 7, max_insertions: 5, seed: 0, suite_size: 25 }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.area_bound <= q(0) {
            return Err(PipelineError::Config("area bound must be positive".into()));
        }
        if self.cap_trees < 1 || self.max_insertions < 1 || self.suite_size < 1 {
            return Err(PipelineError::Config("caps must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub anchor: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOutput {
    pub checks: Vec<CheckLine>,
    /// File name to contents.
    pub artifacts: BTreeMap<String, String>,
}

impl RunOutput {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn check(&mut self, name: &str, anchor: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(CheckLine { name: name.into(), anchor: anchor.into(), passed, detail: detail.into() });
    }

    fn artifact(&mut self, name: &str, body: String) {
        self.artifacts.insert(name.into(), body);
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    format: &'static str,
    pipeline: String,
    seed: u64,
    passed: bool,
    check: &'a [CheckLine],
}

/// Human-readable report plus a TOML summary, added as artifacts.
fn finish(cfg: &RunConfig, mut out: RunOutput) -> RunOutput {
    let mut r = format!("pipeline {}\nseed {}\n\n", cfg.pipeline, cfg.seed);
    for c in &out.checks {
        writeln!(r, "{} {}  [{}]  {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.anchor, c.detail).unwrap();
    }
    let failed = out.checks.iter().filter(|c| !c.passed).count();
    writeln!(r, "\n{} checks, {failed} failed", out.checks.len()).unwrap();
    let s = Summary {
        format: crate::io::FORMAT,
        pipeline: cfg.pipeline.to_string(),
        seed: cfg.seed,
        passed: failed == 0,
        check: &out.checks,
    };
    let summary = toml::to_string(&s).expect("summary serializes");
    out.artifact("report.txt", r);
    out.artifact("summary.toml", summary);
    out
}

pub fn run(cfg: &RunConfig, inputs: &Inputs) -> Result<RunOutput, PipelineError> {
    cfg.validate()?;
    let mut out = RunOutput::default();
    let p = cfg.pipeline;
    match p {
        Pipeline::Enumerate => enumerate(cfg, inputs, &mut out)?,
        Pipeline::BbRecursion => {
            bb_recursion(inputs, p, &mut out)?;
        }
        Pipeline::Welschinger => welschinger(cfg, inputs, p, &mut out)?,
        Pipeline::WdvvSolve => wdvv_solve(cfg, inputs, p, false, &mut out)?,
        Pipeline::VerifyAll => verify_all(cfg, inputs, &mut out)?,
    }
    Ok(finish(cfg, out))
}

struct Disks<'a> {
    file: &'a TargetFile,
    alpha: &'a ConstraintTuple,
    atoms: &'a AtomsFile,
}

impl<'a> Disks<'a> {
    fn get(inputs: &'a Inputs, p: Pipeline) -> Result<Self, PipelineError> {
        let file = inputs.target.as_ref().ok_or(PipelineError::MissingInput { pipeline: p, input: "a target" })?;
        let alpha = file.tuple.as_ref().ok_or(PipelineError::MissingInput { pipeline: p, input: "a [tuple] section" })?;
        let atoms = inputs.atoms.as_ref().ok_or(PipelineError::MissingInput { pipeline: p, input: "an atom pool" })?;
        validate_pool(&file.target, &atoms.pool, &atoms.links)?;
        Ok(Disks { file, alpha, atoms })
    }

    fn model(&self) -> DiskModel<'_> {
        DiskModel { target: &self.file.target, pool: &self.atoms.pool, links: &self.atoms.links }
    }

    /// Tuples at or below the target tuple, by area, size, then order.
    fn tuples(&self) -> Result<Vec<ConstraintTuple>, PipelineError> {
        let t = &self.file.target;
        let mut v: Vec<ConstraintTuple> = t.enumerate_below(self.alpha)?.into_iter().collect();
        if !v.contains(self.alpha) {
            v.push(self.alpha.clone());
        }
        v.sort_by_cached_key(|a| (t.lattice.area(&a.beta), a.k.len() + a.l.len(), a.clone()));
        Ok(v)
    }
}

fn enumerate(cfg: &RunConfig, inputs: &Inputs, out: &mut RunOutput) -> Result<(), PipelineError> {
    let d = Disks::get(inputs, Pipeline::Enumerate)?;
    let t = &d.file.target;
    let mut tuples = String::from("tuple\tdimension\tdegeneration_classes\tmulti_disks\n");
    let mut disks = String::from("tuple\tatoms\tsign\ttrees\tlk\n");
    let mut agree = 0;
    let mut disagree = Vec::new();
    for a in d.tuples()? {
        let dim = t.dimension(&a);
        let classes = t.degeneration_classes(&a)?.len();
        let configs = if dim == 0 { multi_disks(&a, &d.atoms.pool) } else { Vec::new() };
        writeln!(tuples, "{a}\t{dim}\t{classes}\t{}", configs.len()).unwrap();
        for u in &configs {
            let trees = spanning_trees(u.atoms.len(), cfg.cap_trees)?.len();
            let w = u.link_matrix(&d.atoms.links)?;
            let lk = tree_weight_sum(&w);
            if tree_weight_sum_enumerated(&w, cfg.cap_trees)? == lk {
                agree += 1;
            } else {
                disagree.push(a.to_string());
            }
            let ids: Vec<&str> = u.atoms.iter().map(|x| x.id.as_str()).collect();
            writeln!(disks, "{a}\t{}\t{}\t{trees}\t{}", ids.join(","), u.sign().to_i64(), fmt_q(&lk)).unwrap();
        }
    }
    out.check(
        "tree-sum",
        "cofactor determinant equals the explicit spanning-tree sum",
        disagree.is_empty(),
        format!("{agree} multi-disks agree{}", list_suffix(&disagree)),
    );
    out.artifact("tuples.tsv", tuples);
    out.artifact("multidisks.tsv", disks);
    Ok(())
}

fn list_suffix(v: &[String]) -> String {
    if v.is_empty() {
        String::new()
    } else {
        format!("; failing: {}", v.join(" "))
    }
}

fn chains_tsv(chains: &Chains) -> String {
    let mut s = String::from("tuple\tloop\tcoefficient\n");
    for (a, c) in chains {
        for (l, v) in &c.boundary {
            writeln!(s, "{a}\t{l}\t{}", fmt_q(v)).unwrap();
        }
    }
    s
}

fn bb_recursion(inputs: &Inputs, p: Pipeline, out: &mut RunOutput) -> Result<Chains, PipelineError> {
    let d = Disks::get(inputs, p)?;
    let m = d.model();
    let chains = build_chains(m, d.alpha, SignConventions::default())?;
    let ok = check_chains(&d.file.target, &chains);
    out.check(
        "chain-conditions",
        "chains of nonzero-dimensional tuples vanish and point chains are points",
        ok.is_ok(),
        ok.err().map_or(format!("{} chains", chains.len()), |e| e.to_string()),
    );
    let mut bad = Vec::new();
    let mut bij_bad = Vec::new();
    let mut zero_dim = 0;
    for a in chains.keys().filter(|a| !a.is_point() && d.file.target.dimension(a) == 0) {
        zero_dim += 1;
        let direct = direct_boundary(m, a)?;
        if chains[a].boundary != direct || dmd_boundary(m, a)? != direct {
            bad.push(a.to_string());
        }
        if !dmd_bijection_holds(m, a)? {
            bij_bad.push(a.to_string());
        }
    }
    out.check(
        "chains-vs-multi-disks",
        "recursive bb equals (-1)^|K| sum sgn(u) lk(u) du",
        bad.is_empty(),
        format!("{zero_dim} zero-dimensional tuples{}", list_suffix(&bad)),
    );
    out.check(
        "decorated-bijection",
        "decorated multi-disks correspond to branch decompositions",
        bij_bad.is_empty(),
        format!("{zero_dim} tuples{}", list_suffix(&bij_bad)),
    );
    out.artifact("chains.tsv", chains_tsv(&chains));
    Ok(chains)
}

fn dmd_bijection_holds(m: DiskModel, a: &ConstraintTuple) -> Result<bool, PipelineError> {
    let dmd = enumerate_dmd(m, a)?;
    let ov = enumerate_ov_dmd(m, a)?;
    let image: BTreeSet<BranchDecomposition> = dmd.iter().map(dmd_to_branch).collect();
    if dmd.len() != ov.len() || image != ov.iter().cloned().collect() {
        return Ok(false);
    }
    for x in &dmd {
        if branch_to_dmd(&dmd_to_branch(x))? != *x {
            return Ok(false);
        }
    }
    Ok(true)
}

fn welschinger(cfg: &RunConfig, inputs: &Inputs, p: Pipeline, out: &mut RunOutput) -> Result<(), PipelineError> {
    let d = Disks::get(inputs, p)?;
    let m = d.model();
    let a = d.alpha;
    let chains = build_chains(m, a, SignConventions::default())?;
    let configs = multi_disks(a, &d.atoms.pool);
    let w = welschinger_count(&d.file.target, a, &configs, &d.atoms.links)?;
    let mut rows = String::from("quantity\ttuple\tpoint\tvalue\n");
    writeln!(rows, "multi-disk count\t{a}\t-\t{}", fmt_q(&w)).unwrap();
    let mut degs = Vec::new();
    let mut failing = Vec::new();
    for pt in &a.k {
        let r = verify_degree_relation(m, a, pt, &chains)?;
        writeln!(rows, "deg bb\t{a}\t{pt}\t{}", fmt_q(&r.invariant_deg)).unwrap();
        if !r.holds {
            failing.push(pt.clone());
        }
        degs.push(r.invariant_deg);
    }
    out.check(
        "degree-relation",
        "deg bb of alpha minus a point equals (-1)^|K| times the multi-disk count",
        failing.is_empty(),
        format!("{} points{}", a.k.len(), list_suffix(&failing)),
    );
    let star = invariant_star(m, a, &chains, StarWeight::Standard)?;
    writeln!(rows, "star count\t{a}\t-\t{}", fmt_q(&star)).unwrap();
    if degs.windows(2).all(|x| x[0] == x[1]) {
        let want = degs.first().cloned().unwrap_or_else(|| w.clone());
        out.check(
            "star-count",
            "count without a distinguished point equals the count with one fewer point",
            star == want,
            format!("{} against {}", fmt_q(&star), fmt_q(&want)),
        );
    } else {
        out.check("star-count", "count without a distinguished point", true, "point-dependent tuple, not compared");
    }
    if !d.atoms.conj.is_empty() {
        let r = conjugation_cancellation_check(&configs, &d.atoms.pool, &d.atoms.conj, &d.atoms.links, cfg.cap_trees)?;
        out.check(
            "conjugation-cancellation",
            "multi-disks with two or more atoms cancel under conjugation",
            r.multi_total == q(0) && r.total == r.single_total,
            format!("{} pairs, multi-disk total {}", r.pairs, fmt_q(&r.multi_total)),
        );
    }
    out.artifact("invariants.tsv", rows);
    Ok(())
}

fn instance_label(t: &WdvvTarget, i: &Instance) -> String {
    let names: Vec<&str> = i.gamma.iter().map(|&c| t.model.classes[c].name.as_str()).collect();
    format!("{}\t{}\t{}", i.relation, i.beta, names.join(","))
}

struct WdvvInputs<'a> {
    target: &'a WdvvTarget,
    file: &'a TargetFile,
    closed: &'a ClosedGWTable,
    y_pairing: Option<&'a YPairingData>,
    seeds: &'a OpenInvariantTable,
}

impl<'a> WdvvInputs<'a> {
    fn get(inputs: &'a Inputs, p: Pipeline) -> Result<Self, PipelineError> {
        let file = inputs.target.as_ref().ok_or(PipelineError::MissingInput { pipeline: p, input: "a target" })?;
        let target = file
            .wdvv
            .as_ref()
            .ok_or(PipelineError::MissingInput { pipeline: p, input: "closed_lattice and cohomology sections" })?;
        let (closed, y) = inputs.closed.as_ref().ok_or(PipelineError::MissingInput { pipeline: p, input: "a closed table" })?;
        let seeds = inputs.seeds.as_ref().ok_or(PipelineError::MissingInput { pipeline: p, input: "seed entries" })?;
        Ok(WdvvInputs { target, file, closed, y_pairing: y.as_ref(), seeds })
    }

    fn options(&self, cfg: &RunConfig) -> SolveOptions {
        SolveOptions {
            area_bound: cfg.area_bound.clone(),
            max_insertions: cfg.max_insertions,
            order: EquationOrder::Lex,
            binomial: BinomialConvention::ZeroOutside,
        }
    }
}

fn residual_tsv(t: &WdvvTarget, r: &SolveReport) -> String {
    let mut s = String::from("relation\tdegree\tinsertions\tresidual\n");
    for (i, p) in &r.residuals {
        let v = p.as_constant().map_or_else(|| p.to_string(), |c| fmt_q(&c));
        writeln!(s, "{}\t{v}", instance_label(t, i)).unwrap();
    }
    s
}

fn wdvv_solve(
    cfg: &RunConfig,
    inputs: &Inputs,
    p: Pipeline,
    controls: bool,
    out: &mut RunOutput,
) -> Result<(), PipelineError> {
    let w = WdvvInputs::get(inputs, p)?;
    let t = w.target;
    let opts = w.options(cfg);
    let r = solve_recursion(t, w.closed, w.seeds, &opts)?;
    let unsolved: Vec<String> = r.unsolved.iter().map(|k| key_label(t, k)).collect();
    out.check(
        "unknowns-determined",
        "every bracket reached by the relations is fixed by the seeds",
        unsolved.is_empty(),
        format!("{} solved{}", r.solved.len(), list_suffix(&unsolved)),
    );
    let bad: Vec<String> = r.inconsistent().iter().map(|(i, v)| format!("{i} = {}", fmt_q(v))).collect();
    out.check(
        "residuals-vanish",
        "both open WDVV relations hold on every instance up to the area bound",
        bad.is_empty() && r.unsolved.is_empty(),
        format!("{} instances, {} undetermined{}", r.residuals.len(), r.undetermined().len(), list_suffix(&bad)),
    );
    let mut checks = BTreeSet::new();
    if !w.file.structure.divisor.is_empty() {
        checks.insert(Check::Divisor);
    }
    if t.model.sphere_class.is_some() {
        checks.insert(Check::SphereTrade);
    }
    if t.model.y_nonzero {
        checks.insert(Check::Vanishing);
    }
    let mut data = w.file.structure.clone();
    if let Some(y) = w.y_pairing {
        data.y_pairing = Some(y.clone());
        checks.insert(Check::YPairing);
    }
    let s = check_structure(t, &r.table, &data, &checks)?;
    for c in &checks {
        let failing: Vec<String> = s.failures().iter().filter(|o| o.check == *c).map(|o| key_label(t, &o.key)).collect();
        let untestable = s.untestable.iter().filter(|(x, _, _)| x == c).count();
        out.check(
            &c.to_string(),
            structure_anchor(*c),
            failing.is_empty(),
            format!("{} entries, {untestable} untestable{}", s.count(*c), list_suffix(&failing)),
        );
    }
    if controls {
        wdvv_controls(t, w.closed, &r, &opts, out)?;
    }
    let mut solved = String::from("degree\tinsertions\tinstance\n");
    for (k, i) in &r.solved {
        writeln!(solved, "{}\t{i}", key_label(t, k)).unwrap();
    }
    out.artifact("open.tsv", write_open_table(t, &r.table));
    out.artifact("open.toml", write_open_toml(t, &r.table));
    out.artifact("residuals.tsv", residual_tsv(t, &r));
    out.artifact("solved.tsv", solved);
    Ok(())
}

fn structure_anchor(c: Check) -> &'static str {
    match c {
        Check::Divisor => "a degree-2 insertion multiplies by its pairing with the degree",
        Check::SphereTrade => "a sphere-class insertion trades for a sign",
        Check::YPairing => "one boundary point pairs with [Y] through closed invariants",
        Check::Vanishing => "no invariants with two or more boundary points when [Y] is nonzero",
    }
}

/// Residual vector of a complete table; `None` if some entry is missing.
fn constant_residuals(ev: &Evaluator, insts: &[Instance]) -> Result<Option<Vec<Q>>, PipelineError> {
    let mut v = Vec::with_capacity(insts.len());
    for i in insts {
        match ev.residual(i)?.as_constant() {
            Some(c) => v.push(c),
            None => return Ok(None),
        }
    }
    Ok(Some(v))
}

/// Each solved or seeded entry moved by one must break some relation, and
/// so must the clamped binomial convention.
fn wdvv_controls(
    t: &WdvvTarget,
    closed: &ClosedGWTable,
    r: &SolveReport,
    opts: &SolveOptions,
    out: &mut RunOutput,
) -> Result<(), PipelineError> {
    let insts = enumerate_instances(t, &opts.area_bound, opts.max_insertions)?;
    let mut reached = BTreeSet::new();
    let blank = Evaluator::new(t, closed, None);
    for i in &insts {
        reached.extend(blank.residual(i)?.variables());
    }
    let mut missed = Vec::new();
    for k in r.table.entries.keys().filter(|k| reached.contains(*k)) {
        let mut bad = r.table.clone();
        *bad.entries.get_mut(k).expect("present") += q(1);
        let ev = Evaluator::new(t, closed, Some(&bad));
        let hit = constant_residuals(&ev, &insts)?.is_none_or(|v| v.iter().any(|x| *x != q(0)));
        if !hit {
            missed.push(key_label(t, k));
        }
    }
    out.check(
        "perturbation-control",
        "moving any reached entry by one leaves a nonzero residual",
        missed.is_empty(),
        format!("{} entries perturbed{}", reached.iter().filter(|k| r.table.get(k).is_some()).count(), list_suffix(&missed)),
    );
    let ev = Evaluator { target: t, closed, open: Some(&r.table), binomial: BinomialConvention::Clamped };
    let mut nonzero = 0;
    for i in &insts {
        if ev.residual(i)?.as_constant().is_some_and(|c| c != q(0)) {
            nonzero += 1;
        }
    }
    out.check(
        "binomial-control",
        "clamping out-of-range binomials breaks the relations",
        nonzero > 0 || r.residuals.is_empty(),
        format!("{nonzero} nonzero residuals"),
    );
    Ok(())
}

fn verify_all(cfg: &RunConfig, inputs: &Inputs, out: &mut RunOutput) -> Result<(), PipelineError> {
    let p = Pipeline::VerifyAll;
    let disks = inputs.target.as_ref().is_some_and(|t| t.tuple.is_some()) && inputs.atoms.is_some();
    if disks {
        enumerate(cfg, inputs, out)?;
        bb_recursion(inputs, p, out)?;
        welschinger(cfg, inputs, p, out)?;
    }
    let wdvv = inputs.target.as_ref().is_some_and(|t| t.wdvv.is_some()) && inputs.closed.is_some() && inputs.seeds.is_some();
    if wdvv {
        wdvv_solve(cfg, inputs, p, true, out)?;
    }
    synthetic_suites(cfg, out)
}

fn suite_rng(cfg: &RunConfig, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    rng
}

fn random_symmetric(rng: &mut ChaCha8Rng, m: usize) -> Matrix<Q> {
    let mut w = Matrix::zeros(m, m);
    for i in 0..m {
        for j in i + 1..m {
            let v = qf(rng.gen_range(-5..=5), rng.gen_range(1..=3));
            w[(i, j)] = v.clone();
            w[(j, i)] = v;
        }
    }
    w
}

fn wide() -> SyntheticParams {
    SyntheticParams { min_points: 1, max_degree: 4, max_points: 4, atoms_per_tuple: 2, ..Default::default() }
}

/// Seeded random targets checked against the identities the recursion
/// must satisfy. Failures name the instance seed.
fn synthetic_suites(cfg: &RunConfig, out: &mut RunOutput) -> Result<(), PipelineError> {
    let n = cfg.suite_size;

    let mut rng = suite_rng(cfg, 1);
    let top = cfg.cap_trees.min(7);
    let mut bad = Vec::new();
    for i in 0..8 * n {
        let w = random_symmetric(&mut rng, 1 + i % top);
        if tree_weight_sum(&w) != tree_weight_sum_enumerated(&w, cfg.cap_trees)? {
            bad.push(i.to_string());
        }
    }
    out.check(
        "synthetic/tree-sum",
        "cofactor determinant equals the explicit spanning-tree sum",
        bad.is_empty(),
        format!("{} matrices up to size {top}{}", 8 * n, list_suffix(&bad)),
    );

    let mut rng = suite_rng(cfg, 2);
    let seeds: Vec<u64> = (0..n).map(|_| rng.gen()).collect();
    let (mut chain_bad, mut bij_bad, mut deg_bad, mut star_bad) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let (mut tuples, mut points, mut compared, mut half_breaks) = (0, 0, 0, 0);
    for &s in &seeds {
        let inst = generate(s, &wide());
        let m = inst.model();
        let chains = build_chains(m, &inst.alpha, SignConventions::default())?;
        for a in chains.keys().filter(|a| !a.is_point() && inst.target.dimension(a) == 0) {
            tuples += 1;
            let direct = direct_boundary(m, a)?;
            if chains[a].boundary != direct || dmd_boundary(m, a)? != direct {
                chain_bad.push(s.to_string());
            }
            if !dmd_bijection_holds(m, a)? {
                bij_bad.push(s.to_string());
            }
        }
        let mut degs = Vec::new();
        for pt in &inst.alpha.k {
            points += 1;
            let r = verify_degree_relation(m, &inst.alpha, pt, &chains)?;
            if !r.holds {
                deg_bad.push(s.to_string());
            }
            degs.push(r.invariant_deg);
        }
        if !degs.is_empty() && degs.windows(2).all(|x| x[0] == x[1]) {
            compared += 1;
            if invariant_star(m, &inst.alpha, &chains, StarWeight::Standard)? != degs[0] {
                star_bad.push(s.to_string());
            }
            if invariant_star(m, &inst.alpha, &chains, StarWeight::WithoutHalf)? != degs[0] {
                half_breaks += 1;
            }
        }
    }
    for v in [&mut chain_bad, &mut bij_bad, &mut deg_bad, &mut star_bad] {
        v.dedup();
    }
    out.check(
        "synthetic/chains-vs-multi-disks",
        "recursive bb equals (-1)^|K| sum sgn(u) lk(u) du",
        chain_bad.is_empty(),
        format!("{n} targets, {tuples} tuples{}", list_suffix(&chain_bad)),
    );
    out.check(
        "synthetic/decorated-bijection",
        "decorated multi-disks correspond to branch decompositions",
        bij_bad.is_empty(),
        format!("{tuples} tuples{}", list_suffix(&bij_bad)),
    );
    out.check(
        "synthetic/degree-relation",
        "deg bb of alpha minus a point equals (-1)^|K| times the multi-disk count",
        deg_bad.is_empty(),
        format!("{points} points{}", list_suffix(&deg_bad)),
    );
    out.check(
        "synthetic/star-count",
        "count without a distinguished point equals the count with one fewer point",
        star_bad.is_empty() && compared > 0,
        format!("{compared} point-independent targets{}", list_suffix(&star_bad)),
    );
    out.check(
        "synthetic/star-control",
        "dropping the one-half from the star weight breaks the star relation",
        half_breaks > 0,
        format!("{half_breaks} of {compared} targets broken"),
    );

    let mut rng = suite_rng(cfg, 3);
    let p = SyntheticParams { involutive: true, max_degree: 4, max_points: 4, ..Default::default() };
    let mut bad = Vec::new();
    let mut pairs = 0;
    for _ in 0..n {
        let s: u64 = rng.gen();
        let inst = generate(s, &p);
        let configs = multi_disks(&inst.alpha, &inst.pool);
        let r = conjugation_cancellation_check(&configs, &inst.pool, &inst.conj, &inst.links, cfg.cap_trees)?;
        pairs += r.pairs;
        if r.multi_total != q(0) || r.total != r.single_total {
            bad.push(s.to_string());
        }
    }
    out.check(
        "synthetic/conjugation-cancellation",
        "multi-disks with two or more atoms cancel under conjugation",
        bad.is_empty(),
        format!("{n} involutive targets, {pairs} pairs{}", list_suffix(&bad)),
    );
    Ok(())
}
