//! Influence graphs, observation profiles and sign arithmetic.
//!
//! An [`Instance`] is the loosely structured form produced by parsers and
//! builders. [`Instance::validate`] turns it into a [`ValidatedInstance`]
//! with interned vertex indices and adjacency lists, which every other
//! module works on.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::Mul;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sign of a variation or of a regulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const ALL: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn negate(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    /// `+` or `-`.
    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }

    /// `1` or `-1`.
    pub fn as_int(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn from_symbol(token: &str) -> Option<Sign> {
        match token {
            "+" => Some(Sign::Plus),
            "-" => Some(Sign::Minus),
            _ => None,
        }
    }
}

impl Mul for Sign {
    type Output = Sign;

    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// Influence exerted through an edge: the product of the source variation
/// and the edge sign.
pub fn influence(source: Sign, edge: Sign) -> Sign {
    source * edge
}

/// Dense index of a vertex in a [`ValidatedInstance`].
///
/// Indices follow the canonical (byte-lexicographic) order of vertex names,
/// so ordering ids orders names.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct VertexId(usize);

impl VertexId {
    pub fn new(index: usize) -> Self {
        VertexId(index)
    }

    pub fn index(self) -> usize {
        self.0
    }
}

/// Dense index of an edge; edges are ordered by `(src, dst)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId(usize);

impl EdgeId {
    pub fn new(index: usize) -> Self {
        EdgeId(index)
    }

    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("duplicate edge {src} -> {dst}")]
    DuplicateEdge { src: String, dst: String },
    #[error("{context} refers to undeclared vertex `{name}`")]
    UnknownVertexReference { name: String, context: &'static str },
    #[error("conflicting observations for vertex `{name}`")]
    ConflictingObservation { name: String },
    #[error("invalid vertex name `{name}`")]
    InvalidVertexName { name: String },
}

/// Edge of a raw [`Instance`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub src: String,
    pub dst: String,
    pub sign: Option<Sign>,
}

/// Unvalidated influence graph together with an observation profile and
/// the set of input vertices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Instance {
    pub vertices: Vec<String>,
    pub edges: Vec<Edge>,
    pub observations: Vec<(String, Sign)>,
    pub inputs: Vec<String>,
}

impl Instance {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vertex(&mut self, name: impl Into<String>) -> &mut Self {
        self.vertices.push(name.into());
        self
    }

    pub fn edge(
        &mut self,
        src: impl Into<String>,
        dst: impl Into<String>,
        sign: Option<Sign>,
    ) -> &mut Self {
        self.edges.push(Edge {
            src: src.into(),
            dst: dst.into(),
            sign,
        });
        self
    }

    pub fn observe(&mut self, name: impl Into<String>, sign: Sign) -> &mut Self {
        self.observations.push((name.into(), sign));
        self
    }

    pub fn input(&mut self, name: impl Into<String>) -> &mut Self {
        self.inputs.push(name.into());
        self
    }

    /// Declares every vertex referenced by an edge, observation or input.
    pub fn declare_referenced(&mut self) -> &mut Self {
        let referenced: Vec<String> = self
            .edges
            .iter()
            .flat_map(|e| [e.src.clone(), e.dst.clone()])
            .chain(self.observations.iter().map(|(n, _)| n.clone()))
            .chain(self.inputs.iter().cloned())
            .collect();
        self.vertices.extend(referenced);
        self
    }

    pub fn validate(&self) -> Result<ValidatedInstance, ModelError> {
        ValidatedInstance::from_instance(self)
    }
}

/// Vertex names are nonempty, contain neither whitespace nor `"`, and do
/// not start with the comment marker `#`.
pub fn is_valid_name(name: &str) -> bool {
    !name.is_empty()
        && !name.starts_with('#')
        && !name.chars().any(|c| c.is_whitespace() || c == '"')
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeData {
    pub src: VertexId,
    pub dst: VertexId,
    pub sign: Option<Sign>,
}

/// Immutable, indexed instance.
///
/// Vertices are sorted by name and edges by `(src, dst)`, so two validated
/// instances describing the same graph, profile and inputs compare equal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidatedInstance {
    names: Vec<String>,
    index: HashMap<String, VertexId>,
    edges: Vec<EdgeData>,
    edge_index: HashMap<(VertexId, VertexId), EdgeId>,
    in_edges: Vec<Vec<EdgeId>>,
    out_edges: Vec<Vec<EdgeId>>,
    observed: Vec<Option<Sign>>,
    input: Vec<bool>,
}

impl ValidatedInstance {
    fn from_instance(raw: &Instance) -> Result<Self, ModelError> {
        let mut names: Vec<String> = raw.vertices.clone();
        if let Some(bad) = names.iter().find(|n| !is_valid_name(n)) {
            return Err(ModelError::InvalidVertexName { name: bad.clone() });
        }
        names.sort();
        names.dedup();
        let index: HashMap<String, VertexId> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), VertexId(i)))
            .collect();
        let lookup = |name: &str, context: &'static str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| ModelError::UnknownVertexReference {
                    name: name.to_string(),
                    context,
                })
        };

        let mut edges = Vec::with_capacity(raw.edges.len());
        for e in &raw.edges {
            edges.push(EdgeData {
                src: lookup(&e.src, "edge source")?,
                dst: lookup(&e.dst, "edge target")?,
                sign: e.sign,
            });
        }
        edges.sort_by_key(|e| (e.src, e.dst));
        if let Some(w) = edges.windows(2).find(|w| (w[0].src, w[0].dst) == (w[1].src, w[1].dst)) {
            return Err(ModelError::DuplicateEdge {
                src: names[w[0].src.0].clone(),
                dst: names[w[0].dst.0].clone(),
            });
        }

        let mut observed = vec![None; names.len()];
        for (name, sign) in &raw.observations {
            let v = lookup(name, "observation")?;
            match observed[v.0] {
                Some(prev) if prev != *sign => {
                    return Err(ModelError::ConflictingObservation { name: name.clone() })
                }
                _ => observed[v.0] = Some(*sign),
            }
        }

        let mut input = vec![false; names.len()];
        for name in &raw.inputs {
            input[lookup(name, "input")?.0] = true;
        }

        Ok(Self::assemble(names, index, edges, observed, input))
    }

    fn assemble(
        names: Vec<String>,
        index: HashMap<String, VertexId>,
        edges: Vec<EdgeData>,
        observed: Vec<Option<Sign>>,
        input: Vec<bool>,
    ) -> Self {
        let n = names.len();
        let mut in_edges = vec![Vec::new(); n];
        let mut out_edges = vec![Vec::new(); n];
        let mut edge_index = HashMap::with_capacity(edges.len());
        for (i, e) in edges.iter().enumerate() {
            in_edges[e.dst.0].push(EdgeId(i));
            out_edges[e.src.0].push(EdgeId(i));
            edge_index.insert((e.src, e.dst), EdgeId(i));
        }
        ValidatedInstance {
            names,
            index,
            edges,
            edge_index,
            in_edges,
            out_edges,
            observed,
            input,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> impl ExactSizeIterator<Item = VertexId> + '_ {
        (0..self.names.len()).map(VertexId)
    }

    pub fn edge_ids(&self) -> impl ExactSizeIterator<Item = EdgeId> + '_ {
        (0..self.edges.len()).map(EdgeId)
    }

    pub fn name(&self, v: VertexId) -> &str {
        &self.names[v.0]
    }

    pub fn vertex(&self, name: &str) -> Option<VertexId> {
        self.index.get(name).copied()
    }

    pub fn edge(&self, e: EdgeId) -> &EdgeData {
        &self.edges[e.0]
    }

    pub fn edges(&self) -> &[EdgeData] {
        &self.edges
    }

    pub fn find_edge(&self, src: VertexId, dst: VertexId) -> Option<EdgeId> {
        self.edge_index.get(&(src, dst)).copied()
    }

    pub fn in_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.in_edges[v.0]
    }

    pub fn out_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.out_edges[v.0]
    }

    pub fn observation(&self, v: VertexId) -> Option<Sign> {
        self.observed[v.0]
    }

    pub fn is_input(&self, v: VertexId) -> bool {
        self.input[v.0]
    }

    pub fn inputs(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices().filter(|&v| self.input[v.0])
    }

    pub fn non_inputs(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices().filter(|&v| !self.input[v.0])
    }

    pub fn observed_count(&self) -> usize {
        self.observed.iter().filter(|o| o.is_some()).count()
    }

    /// Returns a copy whose input set additionally contains `extra`.
    pub fn with_inputs(&self, extra: impl IntoIterator<Item = VertexId>) -> Self {
        let mut out = self.clone();
        for v in extra {
            out.input[v.0] = true;
        }
        out
    }

    /// Returns a copy with the observation profile replaced.
    pub fn with_profile(&self, profile: &BTreeMap<VertexId, Sign>) -> Self {
        let mut out = self.clone();
        out.observed = vec![None; self.names.len()];
        for (v, s) in profile {
            out.observed[v.0] = Some(*s);
        }
        out
    }

    /// Marks every vertex without predecessors as input.
    pub fn guess_inputs(&self) -> Self {
        let roots: Vec<VertexId> = self
            .vertices()
            .filter(|&v| self.in_edges(v).is_empty())
            .collect();
        self.with_inputs(roots)
    }

    /// Canonical raw form: sorted vertices, edges, observations and inputs.
    pub fn to_instance(&self) -> Instance {
        Instance {
            vertices: self.names.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| Edge {
                    src: self.names[e.src.0].clone(),
                    dst: self.names[e.dst.0].clone(),
                    sign: e.sign,
                })
                .collect(),
            observations: self
                .vertices()
                .filter_map(|v| self.observed[v.0].map(|s| (self.names[v.0].clone(), s)))
                .collect(),
            inputs: self.inputs().map(|v| self.names[v.0].clone()).collect(),
        }
    }

    /// Resolves names to ids, failing on the first unknown one.
    pub fn resolve<'a>(
        &self,
        names: impl IntoIterator<Item = &'a str>,
    ) -> Result<Vec<VertexId>, ModelError> {
        names
            .into_iter()
            .map(|n| {
                self.vertex(n).ok_or_else(|| ModelError::UnknownVertexReference {
                    name: n.to_string(),
                    context: "vertex set",
                })
            })
            .collect()
    }
}

/// Total vertex and edge labeling of an instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub vertex_labels: Vec<Sign>,
    pub edge_labels: Vec<Sign>,
}

impl Witness {
    pub fn vertex(&self, v: VertexId) -> Sign {
        self.vertex_labels[v.0]
    }

    pub fn edge(&self, e: EdgeId) -> Sign {
        self.edge_labels[e.0]
    }

    /// Label of the vertex called `name`, if it exists in `inst`.
    pub fn vertex_by_name(&self, inst: &ValidatedInstance, name: &str) -> Option<Sign> {
        inst.vertex(name).map(|v| self.vertex(v))
    }
}

/// Minimal inconsistent core: a set of non-input vertices whose sign
/// consistency constraints are jointly unsatisfiable while every proper
/// subset is satisfiable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mic {
    members: Vec<VertexId>,
    /// For each member `k`, labelings explaining all members but `k`.
    pub removal_witnesses: Option<BTreeMap<VertexId, Witness>>,
}

impl Mic {
    pub fn new(members: impl IntoIterator<Item = VertexId>) -> Self {
        let mut members: Vec<VertexId> = members.into_iter().collect();
        members.sort();
        members.dedup();
        Mic {
            members,
            removal_witnesses: None,
        }
    }

    pub fn members(&self) -> &[VertexId] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.members.binary_search(&v).is_ok()
    }

    pub fn is_subset_of(&self, other: &[VertexId]) -> bool {
        self.members.iter().all(|v| other.contains(v))
    }

    pub fn names<'a>(&self, inst: &'a ValidatedInstance) -> Vec<&'a str> {
        self.members.iter().map(|&v| inst.name(v)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sign_strategy() -> impl Strategy<Value = Sign> {
        prop_oneof![Just(Sign::Plus), Just(Sign::Minus)]
    }

    #[test]
    fn influence_table() {
        assert_eq!(influence(Sign::Plus, Sign::Plus), Sign::Plus);
        assert_eq!(influence(Sign::Plus, Sign::Minus), Sign::Minus);
        assert_eq!(influence(Sign::Minus, Sign::Plus), Sign::Minus);
        assert_eq!(influence(Sign::Minus, Sign::Minus), Sign::Plus);
    }

    proptest! {
        #[test]
        fn sign_product_is_z2(s in sign_strategy(), t in sign_strategy(), u in sign_strategy()) {
            prop_assert_eq!(influence(influence(s, t), u), influence(s, influence(t, u)));
            prop_assert_eq!(influence(s, t), influence(t, s));
            prop_assert_eq!(influence(s, s), Sign::Plus);
            prop_assert_eq!(influence(Sign::Plus, s), s);
            prop_assert_eq!(s.as_int() * t.as_int(), (s * t).as_int());
        }
    }

    #[test]
    fn duplicate_edge_is_rejected_even_with_different_signs() {
        let mut raw = Instance::new();
        raw.vertex("a")
            .vertex("b")
            .edge("a", "b", Some(Sign::Plus))
            .edge("a", "b", Some(Sign::Minus));
        assert_eq!(
            raw.validate(),
            Err(ModelError::DuplicateEdge {
                src: "a".into(),
                dst: "b".into()
            })
        );
    }

    #[test]
    fn antiparallel_edges_and_self_loops_are_fine() {
        let mut raw = Instance::new();
        raw.vertex("a")
            .vertex("b")
            .edge("a", "b", Some(Sign::Plus))
            .edge("b", "a", None)
            .edge("a", "a", Some(Sign::Minus));
        let inst = raw.validate().unwrap();
        assert_eq!(inst.edge_count(), 3);
        let a = inst.vertex("a").unwrap();
        assert_eq!(inst.in_edges(a).len(), 2);
        assert_eq!(inst.out_edges(a).len(), 2);
    }

    #[test]
    fn unknown_vertex_in_observation() {
        let mut raw = Instance::new();
        raw.vertex("a").observe("ghost", Sign::Plus);
        match raw.validate() {
            Err(ModelError::UnknownVertexReference { name, .. }) => assert_eq!(name, "ghost"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn conflicting_observation() {
        let mut raw = Instance::new();
        raw.vertex("a")
            .observe("a", Sign::Plus)
            .observe("a", Sign::Plus)
            .observe("a", Sign::Minus);
        assert_eq!(
            raw.validate(),
            Err(ModelError::ConflictingObservation { name: "a".into() })
        );
    }

    #[test]
    fn names_with_quotes_or_spaces_are_rejected() {
        for bad in ["", "a b", "q\"", "tab\t", "#x"] {
            let mut raw = Instance::new();
            raw.vertex(bad);
            assert!(matches!(
                raw.validate(),
                Err(ModelError::InvalidVertexName { .. })
            ));
        }
    }

    #[test]
    fn validate_is_idempotent_and_canonical() {
        let mut raw = Instance::new();
        raw.vertex("z")
            .vertex("b")
            .vertex("b")
            .edge("z", "b", None)
            .edge("b", "z", Some(Sign::Minus))
            .observe("z", Sign::Minus)
            .input("b");
        let once = raw.validate().unwrap();
        let twice = once.to_instance().validate().unwrap();
        assert_eq!(once, twice);
        assert_eq!(once.name(VertexId::new(0)), "b");
        assert_eq!(once.to_instance().vertices, vec!["b", "z"]);
    }

    #[test]
    fn guess_inputs_examples() {
        let mut single = Instance::new();
        single.vertex("v");
        let g = single.validate().unwrap().guess_inputs();
        assert_eq!(g.inputs().collect::<Vec<_>>(), vec![VertexId::new(0)]);

        let mut chain = Instance::new();
        chain
            .edge("a", "b", Some(Sign::Plus))
            .edge("b", "c", Some(Sign::Plus))
            .declare_referenced();
        let c = chain.validate().unwrap().guess_inputs();
        let names: Vec<&str> = c.inputs().map(|v| c.name(v)).collect();
        assert_eq!(names, vec!["a"]);
        assert_eq!(c.guess_inputs(), c);
    }

    #[test]
    fn mic_members_are_sorted_and_deduplicated() {
        let m = Mic::new([VertexId::new(3), VertexId::new(1), VertexId::new(3)]);
        assert_eq!(m.members(), &[VertexId::new(1), VertexId::new(3)]);
        assert!(m.contains(VertexId::new(3)));
        assert!(!m.contains(VertexId::new(2)));
    }
}
