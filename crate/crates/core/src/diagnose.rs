//! Minimal inconsistent core (MIC) extraction.
//!
//! All MIC vertices lie in one strongly connected component of the graph
//! made of the in-edges of the core plus inverse edges towards unobserved
//! regulators. The digraph `E'` built by [`overapprox_digraph`] contains
//! that graph for every candidate at once, so two vertices that are not
//! mutually reachable in `E'` never share a MIC. [`find_all_mics`] only
//! enumerates candidates inside one component of `E'`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::model::{Mic, ValidatedInstance, VertexId, Witness};
use crate::scc::tarjan_scc;
use crate::solver::{
    check_restricted, ConsistencyResult, ConstraintScope, SolveError, SolveStats, SolverOptions,
};

pub const DEFAULT_MAX_CARDINALITY: usize = 8;
pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// Directed graph over instance vertices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Digraph {
    pub vertices: BTreeSet<VertexId>,
    pub edges: BTreeSet<(VertexId, VertexId)>,
}

/// The graph `(V_W, E_W)` of a vertex set `W`.
pub type MicGraph = Digraph;

impl Digraph {
    /// Strongly connected components, each sorted, ordered by smallest
    /// member.
    pub fn components(&self) -> Vec<Vec<VertexId>> {
        let ids: Vec<VertexId> = self.vertices.iter().copied().collect();
        let local: BTreeMap<VertexId, usize> =
            ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut adj = vec![Vec::new(); ids.len()];
        for (u, v) in &self.edges {
            adj[local[u]].push(local[v]);
        }
        let mut comps: Vec<Vec<VertexId>> = tarjan_scc(&adj)
            .into_iter()
            .map(|c| c.into_iter().map(|i| ids[i]).collect())
            .collect();
        comps.sort();
        comps
    }

    /// Whether all of `set` lies inside a single strongly connected
    /// component.
    pub fn strongly_connects(&self, set: &[VertexId]) -> bool {
        match set.first() {
            None => true,
            Some(first) => self
                .components()
                .iter()
                .find(|c| c.contains(first))
                .is_some_and(|c| set.iter().all(|v| c.contains(v))),
        }
    }

    fn union_with(&mut self, other: &Digraph) {
        self.vertices.extend(other.vertices.iter().copied());
        self.edges.extend(other.edges.iter().copied());
    }
}

/// `E'`: every edge into a non-input vertex, plus its inverse when the
/// source is unobserved.
pub fn overapprox_digraph(inst: &ValidatedInstance) -> Digraph {
    let mut g = Digraph {
        vertices: inst.vertices().collect(),
        edges: BTreeSet::new(),
    };
    for e in inst.edges() {
        if inst.is_input(e.dst) {
            continue;
        }
        g.edges.insert((e.src, e.dst));
        if inst.observation(e.src).is_none() {
            g.edges.insert((e.dst, e.src));
        }
    }
    g
}

/// Mutual reachability in `E'` between distinct vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleRelation {
    component: Vec<Option<usize>>,
    groups: Vec<Vec<VertexId>>,
}

impl CycleRelation {
    pub fn related(&self, u: VertexId, v: VertexId) -> bool {
        u != v
            && self.component[u.index()].is_some()
            && self.component[u.index()] == self.component[v.index()]
    }

    /// All unordered pairs `(u, v)` with `u < v`.
    pub fn pairs(&self) -> Vec<(VertexId, VertexId)> {
        let mut out = Vec::new();
        for g in &self.groups {
            for (i, &u) in g.iter().enumerate() {
                for &v in &g[i + 1..] {
                    out.push((u, v));
                }
            }
        }
        out.sort();
        out
    }

    /// Nontrivial components (at least two vertices).
    pub fn groups(&self) -> &[Vec<VertexId>] {
        &self.groups
    }
}

pub fn cycle_relation(inst: &ValidatedInstance) -> CycleRelation {
    let mut component = vec![None; inst.vertex_count()];
    let groups: Vec<Vec<VertexId>> = overapprox_digraph(inst)
        .components()
        .into_iter()
        .filter(|c| c.len() > 1)
        .collect();
    for (k, g) in groups.iter().enumerate() {
        for v in g {
            component[v.index()] = Some(k);
        }
    }
    CycleRelation { component, groups }
}

/// `(V_W, E_W)`: `W`, its regulators, their edges into `W`, and inverse
/// edges from `W` to unobserved regulators.
pub fn mic_graph(inst: &ValidatedInstance, members: &[VertexId]) -> MicGraph {
    let mut g = MicGraph::default();
    for &i in members {
        g.vertices.insert(i);
        for &e in inst.in_edges(i) {
            let j = inst.edge(e).src;
            g.vertices.insert(j);
            g.edges.insert((j, i));
            if inst.observation(j).is_none() {
                g.edges.insert((i, j));
            }
        }
    }
    g
}

pub fn merge_mics(inst: &ValidatedInstance, mics: &[Mic]) -> MicGraph {
    let mut g = MicGraph::default();
    for m in mics {
        g.union_with(&mic_graph(inst, m.members()));
    }
    g
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiagnoseError {
    #[error("diagnosis budget exhausted after {calls} solver calls")]
    BudgetExceeded { calls: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DiagnosisOptions {
    /// Largest MIC size enumerated by [`find_all_mics`].
    pub max_cardinality: usize,
    /// Maximum number of candidate evaluations and restricted solver
    /// calls; `None` is unbounded.
    pub budget: Option<u64>,
    pub time_limit: Option<Duration>,
    /// Per-call solver limits and tie-breaking.
    pub solver: SolverOptions,
    /// Rejects candidates that are not strongly connected in their own
    /// `(V_W, E_W)` without calling the solver.
    pub dynamic_connectivity: bool,
}

impl Default for DiagnosisOptions {
    fn default() -> Self {
        DiagnosisOptions {
            max_cardinality: DEFAULT_MAX_CARDINALITY,
            budget: Some(DEFAULT_BUDGET),
            time_limit: None,
            solver: SolverOptions::default(),
            dynamic_connectivity: false,
        }
    }
}

impl DiagnosisOptions {
    pub fn unbounded() -> Self {
        DiagnosisOptions {
            max_cardinality: usize::MAX,
            budget: None,
            ..Default::default()
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DiagnosisStats {
    pub solver_calls: u64,
    pub candidates: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub backtracks: u64,
}

/// Counts solver calls against the budget.
struct Tracker<'a> {
    opts: &'a DiagnosisOptions,
    deadline: Option<Instant>,
    stats: DiagnosisStats,
}

impl<'a> Tracker<'a> {
    fn new(opts: &'a DiagnosisOptions) -> Self {
        Tracker {
            opts,
            deadline: opts.time_limit.map(|d| Instant::now() + d),
            stats: DiagnosisStats::default(),
        }
    }

    fn exhausted(&self) -> bool {
        let used = self.stats.solver_calls + self.stats.candidates;
        self.opts.budget.is_some_and(|b| used >= b)
            || self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn charge_candidate(&mut self) -> Result<(), DiagnoseError> {
        if self.exhausted() {
            return Err(DiagnoseError::BudgetExceeded {
                calls: self.stats.solver_calls,
            });
        }
        self.stats.candidates += 1;
        Ok(())
    }

    fn check(
        &mut self,
        inst: &ValidatedInstance,
        members: impl IntoIterator<Item = VertexId>,
    ) -> Result<ConsistencyResult, DiagnoseError> {
        if self.exhausted() {
            return Err(DiagnoseError::BudgetExceeded {
                calls: self.stats.solver_calls,
            });
        }
        self.stats.solver_calls += 1;
        let scope = ConstraintScope::new(inst, members);
        match check_restricted(inst, &scope, &self.opts.solver) {
            Ok(r) => {
                self.add(&r.stats);
                Ok(r)
            }
            Err(SolveError::BudgetExceeded { stats }) => {
                self.add(&stats);
                Err(DiagnoseError::BudgetExceeded {
                    calls: self.stats.solver_calls,
                })
            }
            Err(other) => unreachable!("restricted check cannot fail with {other}"),
        }
    }

    fn add(&mut self, s: &SolveStats) {
        self.stats.decisions += s.decisions;
        self.stats.propagations += s.propagations;
        self.stats.backtracks += s.backtracks;
    }
}

/// Result of [`is_mic`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MicVerdict {
    pub is_mic: bool,
    /// For each member `k` found removable-consistent, a witness for
    /// `W \ {k}`. Complete iff `is_mic`.
    pub removal_witnesses: BTreeMap<VertexId, Witness>,
}

impl MicVerdict {
    fn rejected() -> Self {
        MicVerdict {
            is_mic: false,
            removal_witnesses: BTreeMap::new(),
        }
    }

    pub fn into_mic(self, members: &[VertexId]) -> Option<Mic> {
        self.is_mic.then(|| {
            let mut mic = Mic::new(members.iter().copied());
            mic.removal_witnesses = Some(self.removal_witnesses);
            mic
        })
    }
}

/// Checks both MIC conditions: `W` is inconsistent and every `W \ {k}` is
/// consistent.
pub fn is_mic(
    inst: &ValidatedInstance,
    members: &[VertexId],
    opts: &DiagnosisOptions,
) -> Result<MicVerdict, DiagnoseError> {
    let mut tracker = Tracker::new(opts);
    is_mic_tracked(inst, members, &mut tracker)
}

fn is_mic_tracked(
    inst: &ValidatedInstance,
    members: &[VertexId],
    tracker: &mut Tracker<'_>,
) -> Result<MicVerdict, DiagnoseError> {
    let w: BTreeSet<VertexId> = members.iter().copied().collect();
    if w.is_empty() || w.iter().any(|&v| inst.is_input(v)) {
        return Ok(MicVerdict::rejected());
    }
    if tracker.check(inst, w.iter().copied())?.is_consistent() {
        return Ok(MicVerdict::rejected());
    }
    let mut removal_witnesses = BTreeMap::new();
    for &k in &w {
        let r = tracker.check(inst, w.iter().copied().filter(|&v| v != k))?;
        match r.witness {
            Some(witness) => {
                removal_witnesses.insert(k, witness);
            }
            None => {
                return Ok(MicVerdict {
                    is_mic: false,
                    removal_witnesses,
                })
            }
        }
    }
    Ok(MicVerdict {
        is_mic: true,
        removal_witnesses,
    })
}

/// Deletion-based shrinking from the set of all non-input vertices.
/// Returns `None` iff the instance is consistent.
pub fn find_one_mic(
    inst: &ValidatedInstance,
    opts: &DiagnosisOptions,
) -> Result<Option<Mic>, DiagnoseError> {
    let mut tracker = Tracker::new(opts);
    find_one_tracked(inst, &mut tracker)
}

fn find_one_tracked(
    inst: &ValidatedInstance,
    tracker: &mut Tracker<'_>,
) -> Result<Option<Mic>, DiagnoseError> {
    let mut core: BTreeSet<VertexId> = inst.non_inputs().collect();
    if tracker.check(inst, core.iter().copied())?.is_consistent() {
        return Ok(None);
    }
    let mut witnesses = BTreeMap::new();
    let order: Vec<VertexId> = core.iter().copied().collect();
    for k in order {
        let r = tracker.check(inst, core.iter().copied().filter(|&v| v != k))?;
        match r.witness {
            // k is needed; the witness also covers every later, smaller
            // core without k.
            Some(w) => {
                witnesses.insert(k, w);
            }
            None => {
                core.remove(&k);
            }
        }
    }
    witnesses.retain(|k, _| core.contains(k));
    let mut mic = Mic::new(core);
    mic.removal_witnesses = Some(witnesses);
    Ok(Some(mic))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    One,
    All,
    Approx,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiagnosisReport {
    pub mode: Mode,
    /// Sorted by members, pairwise incomparable.
    pub mics: Vec<Mic>,
    /// Set when no cap or budget truncated an `All` search.
    pub complete: bool,
    pub budget_exhausted: bool,
    /// MICs that failed re-verification; always zero unless the
    /// connectivity pruning is unsound.
    pub rejected: usize,
    pub merged: MicGraph,
    pub stats: DiagnosisStats,
}

impl DiagnosisReport {
    /// One MIC per line with members separated by spaces; `All` mode adds
    /// a completeness line.
    pub fn to_text(&self, inst: &ValidatedInstance) -> String {
        let mut out = String::new();
        for m in &self.mics {
            out.push_str(&m.names(inst).join(" "));
            out.push('\n');
        }
        if self.mode == Mode::All {
            out.push_str(&format!("complete: {}\n", self.complete));
        }
        out
    }

    /// Machine-readable JSON document.
    pub fn to_json(&self, inst: &ValidatedInstance) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            mode: Mode,
            mics: Vec<Vec<&'a str>>,
            complete: bool,
            budget_exhausted: bool,
            merged_vertices: Vec<&'a str>,
            merged_edges: Vec<[&'a str; 2]>,
            stats: DiagnosisStats,
        }
        let doc = Doc {
            mode: self.mode,
            mics: self.mics.iter().map(|m| m.names(inst)).collect(),
            complete: self.complete,
            budget_exhausted: self.budget_exhausted,
            merged_vertices: self.merged.vertices.iter().map(|&v| inst.name(v)).collect(),
            merged_edges: self
                .merged
                .edges
                .iter()
                .map(|&(u, v)| [inst.name(u), inst.name(v)])
                .collect(),
            stats: self.stats,
        };
        serde_json::to_string_pretty(&doc).expect("report serializes") + "\n"
    }
}

/// Re-verifies each MIC, drops duplicates and sorts.
fn assemble(
    inst: &ValidatedInstance,
    mode: Mode,
    found: Vec<(ValidatedInstance, Mic)>,
    complete: bool,
    budget_exhausted: bool,
    tracker: &mut Tracker<'_>,
) -> DiagnosisReport {
    let mut mics: Vec<Mic> = Vec::new();
    let mut rejected = 0;
    let mut budget_exhausted = budget_exhausted;
    for (state, mic) in found {
        if mics.iter().any(|m| m.members() == mic.members()) {
            continue;
        }
        match is_mic_tracked(&state, mic.members(), tracker) {
            Ok(verdict) => match verdict.into_mic(mic.members()) {
                Some(verified) => mics.push(verified),
                None => rejected += 1,
            },
            Err(DiagnoseError::BudgetExceeded { .. }) => {
                // Keep the unverified result rather than dropping it.
                budget_exhausted = true;
                mics.push(mic);
            }
        }
    }
    mics.sort_by(|a, b| a.members().cmp(b.members()));
    let merged = merge_mics(inst, &mics);
    DiagnosisReport {
        mode,
        mics,
        complete: complete && !budget_exhausted && rejected == 0,
        budget_exhausted,
        rejected,
        merged,
        stats: tracker.stats,
    }
}

/// Finds one MIC, if any.
pub fn diagnose_one(inst: &ValidatedInstance, opts: &DiagnosisOptions) -> DiagnosisReport {
    let mut tracker = Tracker::new(opts);
    let (found, exhausted) = match find_one_tracked(inst, &mut tracker) {
        Ok(Some(m)) => (vec![(inst.clone(), m)], false),
        Ok(None) => (vec![], false),
        Err(DiagnoseError::BudgetExceeded { .. }) => (vec![], true),
    };
    // Re-verification gets its own budget so an exhausted search still
    // reports what it found.
    let mut verify = Tracker::new(opts);
    verify.stats = tracker.stats;
    assemble(inst, Mode::One, found, !exhausted, exhausted, &mut verify)
}

/// Enumerates all MICs with at most `opts.max_cardinality` members.
///
/// Candidates are generated level by level inside each component of the
/// cycle relation: a set of size `k` is tested only if all its subsets of
/// size `k - 1` were tested consistent. With increasing cardinality this
/// is the superset-free candidate space, and an inconsistent candidate is
/// then minimal by construction.
pub fn find_all_mics(inst: &ValidatedInstance, opts: &DiagnosisOptions) -> DiagnosisReport {
    let mut tracker = Tracker::new(opts);
    let relation = cycle_relation(inst);
    let mut found: Vec<(ValidatedInstance, Mic)> = Vec::new();
    let mut exhausted = false;
    let mut truncated = false;

    let mut search = || -> Result<(), DiagnoseError> {
        if opts.max_cardinality == 0 {
            truncated = inst.non_inputs().next().is_some();
            return Ok(());
        }
        let mut consistent_singletons = BTreeSet::new();
        for v in inst.non_inputs() {
            tracker.charge_candidate()?;
            if tracker.check(inst, [v])?.is_consistent() {
                consistent_singletons.insert(v);
            } else {
                found.push((inst.clone(), Mic::new([v])));
            }
        }

        for group in relation.groups() {
            let mut level: Vec<Vec<VertexId>> = group
                .iter()
                .filter(|v| consistent_singletons.contains(v))
                .map(|&v| vec![v])
                .collect();
            let mut size = 1;
            while !level.is_empty() {
                let candidates = next_level(&level);
                if candidates.is_empty() {
                    break;
                }
                if size + 1 > opts.max_cardinality {
                    truncated = true;
                    break;
                }
                size += 1;
                let mut consistent = Vec::new();
                for cand in candidates {
                    tracker.charge_candidate()?;
                    if opts.dynamic_connectivity
                        && !mic_graph(inst, &cand).strongly_connects(&cand)
                    {
                        // Not a MIC; every proper subset is consistent, so
                        // the set itself is consistent.
                        consistent.push(cand);
                        continue;
                    }
                    if tracker.check(inst, cand.iter().copied())?.is_consistent() {
                        consistent.push(cand);
                    } else {
                        found.push((inst.clone(), Mic::new(cand)));
                    }
                }
                level = consistent;
            }
        }
        Ok(())
    };
    if search().is_err() {
        exhausted = true;
    }

    let mut verify = Tracker::new(opts);
    verify.stats = tracker.stats;
    verify.stats.candidates = 0;
    verify.stats.solver_calls = 0;
    let mut report = assemble(inst, Mode::All, found, !truncated, exhausted, &mut verify);
    report.stats.solver_calls += tracker.stats.solver_calls;
    report.stats.candidates = tracker.stats.candidates;
    report
}

/// Joins sorted `k`-sets sharing their first `k - 1` members and keeps
/// the `(k + 1)`-sets whose every `k`-subset is in `level`.
fn next_level(level: &[Vec<VertexId>]) -> Vec<Vec<VertexId>> {
    let known: HashSet<&[VertexId]> = level.iter().map(|s| s.as_slice()).collect();
    let mut sorted: Vec<&Vec<VertexId>> = level.iter().collect();
    sorted.sort();
    let mut out = Vec::new();
    for (i, a) in sorted.iter().enumerate() {
        let k = a.len();
        for b in &sorted[i + 1..] {
            if a[..k - 1] != b[..k - 1] {
                break;
            }
            let mut cand = a.to_vec();
            cand.push(b[k - 1]);
            let all_subsets_known = (0..cand.len() - 2).all(|drop| {
                let sub: Vec<VertexId> = cand
                    .iter()
                    .enumerate()
                    .filter(|&(p, _)| p != drop)
                    .map(|(_, &v)| v)
                    .collect();
                known.contains(sub.as_slice())
            });
            if all_subsets_known {
                out.push(cand);
            }
        }
    }
    out
}

/// Repeatedly finds one MIC and turns its members into inputs until the
/// instance is consistent. Results depend on the order MICs are found.
pub fn approximate_all_mics(inst: &ValidatedInstance, opts: &DiagnosisOptions) -> DiagnosisReport {
    let mut tracker = Tracker::new(opts);
    let mut state = inst.clone();
    let mut found = Vec::new();
    let mut exhausted = false;
    loop {
        match find_one_tracked(&state, &mut tracker) {
            Ok(Some(mic)) => {
                let next = state.with_inputs(mic.members().iter().copied());
                found.push((state, mic));
                state = next;
            }
            Ok(None) => break,
            Err(DiagnoseError::BudgetExceeded { .. }) => {
                exhausted = true;
                break;
            }
        }
    }
    let mut verify = Tracker::new(opts);
    verify.stats = tracker.stats;
    verify.stats.solver_calls = 0;
    let mut report = assemble(inst, Mode::Approx, found, !exhausted, exhausted, &mut verify);
    report.stats.solver_calls += tracker.stats.solver_calls;
    report.complete = false;
    report
}
