//! Sign consistency checking.
//!
//! A non-input vertex `i` is explained under total labelings `mu'`,
//! `sigma'` when some regulation `j -> i` satisfies
//! `mu'(i) = mu'(j) * sigma'(j, i)`. For every constrained vertex this is a
//! disjunction over its in-edges (its support clause). Each disjunct is a
//! parity condition over at most three signs; constants are folded in, a
//! disjunct with one unknown sign becomes a literal and a disjunct with
//! more gets an auxiliary variable implying it. Unit propagation over this
//! encoding forces the last remaining regulator of a vertex to explain it,
//! and the CDCL engine adds clause learning on top.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::Serialize;
use thiserror::Error;

use crate::cdcl::{Engine, Limits, Lit, Outcome};
use crate::model::{EdgeId, Sign, ValidatedInstance, VertexId, Witness};

/// Largest number of free signs [`brute_force_consistent`] enumerates.
pub const BRUTE_FORCE_LIMIT: usize = 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    Consistent,
    Inconsistent,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SolveStats {
    pub decisions: u64,
    pub propagations: u64,
    pub backtracks: u64,
}

impl SolveStats {
    pub fn accumulate(&mut self, other: &SolveStats) {
        self.decisions += other.decisions;
        self.propagations += other.propagations;
        self.backtracks += other.backtracks;
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConsistencyResult {
    pub status: Status,
    /// Present iff `status` is `Consistent`.
    pub witness: Option<Witness>,
    pub stats: SolveStats,
}

impl ConsistencyResult {
    pub fn is_consistent(&self) -> bool {
        self.status == Status::Consistent
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("search budget exceeded after {} decisions", stats.decisions)]
    BudgetExceeded { stats: SolveStats },
    #[error("{free} free signs exceed the brute-force limit of {BRUTE_FORCE_LIMIT}")]
    TooLarge { free: usize },
    #[error("witness does not label every vertex and edge")]
    NonTotalWitness,
}

/// Search limits and tie-breaking for a single solver run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolverOptions {
    pub max_decisions: Option<u64>,
    pub time_limit: Option<Duration>,
    /// Shuffles the initial branching order; `None` keeps the canonical
    /// order (vertices by name, then edges).
    pub seed: Option<u64>,
}

/// Set of vertices whose sign consistency constraints are enforced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintScope {
    constrained: BTreeSet<VertexId>,
}

impl ConstraintScope {
    /// Every non-input vertex, as in a plain consistency check.
    pub fn all(inst: &ValidatedInstance) -> Self {
        ConstraintScope {
            constrained: inst.non_inputs().collect(),
        }
    }

    pub fn empty() -> Self {
        ConstraintScope {
            constrained: BTreeSet::new(),
        }
    }

    /// Scope over `vertices`; input vertices are exempt and dropped.
    pub fn new(inst: &ValidatedInstance, vertices: impl IntoIterator<Item = VertexId>) -> Self {
        ConstraintScope {
            constrained: vertices.into_iter().filter(|&v| !inst.is_input(v)).collect(),
        }
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.constrained.contains(&v)
    }

    pub fn iter(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.constrained.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.constrained.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constrained.is_empty()
    }
}

/// Decides whether the profile is consistent with the graph.
pub fn check_consistency(
    inst: &ValidatedInstance,
    opts: &SolverOptions,
) -> Result<ConsistencyResult, SolveError> {
    check_restricted(inst, &ConstraintScope::all(inst), opts)
}

/// Decides whether labelings exist that explain every vertex in `scope`.
/// Only the scope, its regulators and the connecting edges are searched;
/// all other signs in the returned witness default to `Plus`.
pub fn check_restricted(
    inst: &ValidatedInstance,
    scope: &ConstraintScope,
    opts: &SolverOptions,
) -> Result<ConsistencyResult, SolveError> {
    let mut enc = Encoding::build(inst, scope);
    if let Some(seed) = opts.seed {
        enc.shuffle_branching(seed);
    }
    for (var, bias) in enc.branching() {
        enc.engine.set_decision_var(var, bias);
    }
    let limits = Limits {
        max_decisions: opts.max_decisions,
        deadline: opts.time_limit.map(|d| Instant::now() + d),
    };

    let vertex_var = enc.vertex_var.clone();
    let edge_var = enc.edge_var.clone();
    let mut hint = |var: usize, engine: &Engine| {
        phase_hint(inst, &vertex_var, &edge_var, &enc.var_owner, var, engine)
    };
    let outcome = enc.engine.solve(limits, &mut hint);
    let s = enc.engine.stats;
    let stats = SolveStats {
        decisions: s.decisions,
        propagations: s.propagations,
        backtracks: s.conflicts,
    };

    match outcome {
        Outcome::Interrupted => Err(SolveError::BudgetExceeded { stats }),
        Outcome::Unsat => Ok(ConsistencyResult {
            status: Status::Inconsistent,
            witness: None,
            stats,
        }),
        Outcome::Sat => {
            let witness = enc.witness(inst);
            debug_assert_eq!(verify_witness(inst, scope, &witness), Ok(true));
            Ok(ConsistencyResult {
                status: Status::Consistent,
                witness: Some(witness),
                stats,
            })
        }
    }
}

/// Checks that `w` extends the given labels and explains every vertex in
/// `scope`.
pub fn verify_witness(
    inst: &ValidatedInstance,
    scope: &ConstraintScope,
    w: &Witness,
) -> Result<bool, SolveError> {
    if w.vertex_labels.len() != inst.vertex_count() || w.edge_labels.len() != inst.edge_count() {
        return Err(SolveError::NonTotalWitness);
    }
    let extends_profile = inst
        .vertices()
        .all(|v| inst.observation(v).is_none_or(|s| s == w.vertex(v)));
    let extends_signs = inst
        .edge_ids()
        .all(|e| inst.edge(e).sign.is_none_or(|s| s == w.edge(e)));
    if !extends_profile || !extends_signs {
        return Ok(false);
    }
    Ok(scope.iter().all(|i| {
        inst.in_edges(i).iter().any(|&e| {
            let edge = inst.edge(e);
            w.vertex(i) == w.vertex(edge.src) * w.edge(e)
        })
    }))
}

/// Exhaustive reference check over every total extension.
pub fn brute_force_consistent(
    inst: &ValidatedInstance,
    scope: &ConstraintScope,
) -> Result<bool, SolveError> {
    let free_vertices: Vec<VertexId> = inst
        .vertices()
        .filter(|&v| inst.observation(v).is_none())
        .collect();
    let free_edges: Vec<EdgeId> = inst
        .edge_ids()
        .filter(|&e| inst.edge(e).sign.is_none())
        .collect();
    let free = free_vertices.len() + free_edges.len();
    if free > BRUTE_FORCE_LIMIT {
        return Err(SolveError::TooLarge { free });
    }

    let mut w = Witness {
        vertex_labels: inst
            .vertices()
            .map(|v| inst.observation(v).unwrap_or(Sign::Plus))
            .collect(),
        edge_labels: inst
            .edge_ids()
            .map(|e| inst.edge(e).sign.unwrap_or(Sign::Plus))
            .collect(),
    };
    let bit = |mask: u64, k: usize| if mask >> k & 1 == 1 { Sign::Minus } else { Sign::Plus };
    for mask in 0..1u64 << free {
        for (k, v) in free_vertices.iter().enumerate() {
            w.vertex_labels[v.index()] = bit(mask, k);
        }
        for (k, e) in free_edges.iter().enumerate() {
            w.edge_labels[e.index()] = bit(mask, free_vertices.len() + k);
        }
        if verify_witness(inst, scope, &w)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Suggested polarity for a decision variable: a vertex takes the first
/// already determined influence among its regulators (canonical order), an
/// edge takes the sign that makes its influence match its target.
fn phase_hint(
    inst: &ValidatedInstance,
    vertex_var: &[Option<usize>],
    edge_var: &[Option<usize>],
    owner: &[VarOwner],
    var: usize,
    engine: &Engine,
) -> Option<bool> {
    let vsign = |v: VertexId| match inst.observation(v) {
        Some(s) => Some(s),
        None => vertex_var[v.index()]
            .and_then(|x| engine.value(x))
            .map(sign_of),
    };
    let esign = |e: EdgeId| match inst.edge(e).sign {
        Some(s) => Some(s),
        None => edge_var[e.index()]
            .and_then(|x| engine.value(x))
            .map(sign_of),
    };
    match owner[var] {
        VarOwner::Vertex(v) => inst
            .in_edges(v)
            .iter()
            .filter(|&&e| inst.edge(e).src != v)
            .find_map(|&e| Some(vsign(inst.edge(e).src)? * esign(e)?))
            .map(|s| s == Sign::Plus),
        VarOwner::Edge(e) => {
            let edge = inst.edge(e);
            Some(vsign(edge.dst)? * vsign(edge.src)? == Sign::Plus)
        }
        VarOwner::Aux => None,
    }
}

fn sign_of(value: bool) -> Sign {
    if value {
        Sign::Plus
    } else {
        Sign::Minus
    }
}

#[derive(Clone, Copy, Debug)]
enum VarOwner {
    Vertex(VertexId),
    Edge(EdgeId),
    Aux,
}

/// One factor of a parity disjunct: either a known sign or a variable.
enum Term {
    Known(Sign),
    Var(usize),
}

struct Encoding {
    engine: Engine,
    vertex_var: Vec<Option<usize>>,
    edge_var: Vec<Option<usize>>,
    var_owner: Vec<VarOwner>,
    /// Branching variables in their initial order.
    order: Vec<usize>,
}

impl Encoding {
    fn build(inst: &ValidatedInstance, scope: &ConstraintScope) -> Self {
        let mut vertex_var = vec![None; inst.vertex_count()];
        let mut edge_var = vec![None; inst.edge_count()];
        let mut var_owner = Vec::new();

        let mut relevant_vertices = BTreeSet::new();
        let mut relevant_edges = BTreeSet::new();
        for i in scope.iter() {
            relevant_vertices.insert(i);
            for &e in inst.in_edges(i) {
                relevant_edges.insert(e);
                relevant_vertices.insert(inst.edge(e).src);
            }
        }
        for &v in &relevant_vertices {
            if inst.observation(v).is_none() {
                vertex_var[v.index()] = Some(var_owner.len());
                var_owner.push(VarOwner::Vertex(v));
            }
        }
        for &e in &relevant_edges {
            if inst.edge(e).sign.is_none() {
                edge_var[e.index()] = Some(var_owner.len());
                var_owner.push(VarOwner::Edge(e));
            }
        }
        let order: Vec<usize> = (0..var_owner.len()).collect();

        // Disjuncts: parity constraints "product of unknowns == target".
        let mut clauses: Vec<Vec<(Vec<usize>, Sign)>> = Vec::new();
        for i in scope.iter() {
            let mut disjuncts = Vec::new();
            let mut satisfied = false;
            for &e in inst.in_edges(i) {
                let j = inst.edge(e).src;
                let vterm = |v: VertexId| match vertex_var[v.index()] {
                    Some(x) => Term::Var(x),
                    None => Term::Known(inst.observation(v).expect("observed")),
                };
                let eterm = match edge_var[e.index()] {
                    Some(x) => Term::Var(x),
                    None => Term::Known(inst.edge(e).sign.expect("labeled")),
                };
                let terms = if j == i {
                    vec![eterm]
                } else {
                    vec![vterm(i), vterm(j), eterm]
                };
                let mut target = Sign::Plus;
                let mut vars = Vec::new();
                for t in terms {
                    match t {
                        Term::Known(s) => target = target * s,
                        Term::Var(x) => vars.push(x),
                    }
                }
                if vars.is_empty() {
                    if target == Sign::Plus {
                        satisfied = true;
                        break;
                    }
                    continue;
                }
                disjuncts.push((vars, target));
            }
            if !satisfied {
                clauses.push(disjuncts);
            }
        }

        let aux_count: usize = clauses
            .iter()
            .flatten()
            .filter(|(vars, _)| vars.len() > 1)
            .count();
        let mut engine = Engine::new(var_owner.len() + aux_count);
        for clause in clauses {
            let mut lits = Vec::with_capacity(clause.len());
            for (vars, target) in clause {
                if let [x] = vars[..] {
                    lits.push(Lit::new(x, target == Sign::Plus));
                    continue;
                }
                let aux = var_owner.len();
                var_owner.push(VarOwner::Aux);
                // aux -> parity: forbid every assignment of `vars` whose
                // product differs from `target`.
                for mask in 0u32..1 << vars.len() {
                    let product = if mask.count_ones() % 2 == 1 {
                        Sign::Minus
                    } else {
                        Sign::Plus
                    };
                    if product == target {
                        continue;
                    }
                    let mut blocking = vec![Lit::new(aux, false)];
                    for (k, &x) in vars.iter().enumerate() {
                        let is_minus = mask >> k & 1 == 1;
                        // Literal true means Plus; block the assignment.
                        blocking.push(Lit::new(x, is_minus));
                    }
                    engine.add_clause(&blocking);
                }
                lits.push(Lit::new(aux, true));
            }
            engine.add_clause(&lits);
        }

        Encoding {
            engine,
            vertex_var,
            edge_var,
            var_owner,
            order,
        }
    }

    fn shuffle_branching(&mut self, seed: u64) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        self.order.shuffle(&mut rng);
    }

    /// Branching variables with an initial activity bias reproducing
    /// `order` as the tie-break order.
    fn branching(&self) -> Vec<(usize, f64)> {
        let n = self.order.len() as f64;
        self.order
            .iter()
            .enumerate()
            .map(|(rank, &var)| (var, (n - rank as f64) * 1e-9))
            .collect()
    }

    fn witness(&self, inst: &ValidatedInstance) -> Witness {
        let value = |var: Option<usize>| var.and_then(|x| self.engine.value(x)).map(sign_of);
        Witness {
            vertex_labels: inst
                .vertices()
                .map(|v| {
                    inst.observation(v)
                        .or_else(|| value(self.vertex_var[v.index()]))
                        .unwrap_or(Sign::Plus)
                })
                .collect(),
            edge_labels: inst
                .edge_ids()
                .map(|e| {
                    inst.edge(e)
                        .sign
                        .or_else(|| value(self.edge_var[e.index()]))
                        .unwrap_or(Sign::Plus)
                })
                .collect(),
        }
    }
}
