//! Input reduction: marks vertices whose sign consistency constraint can
//! always be satisfied as additional inputs, iterated to a fixpoint.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::model::{influence, Sign, ValidatedInstance, VertexId};

/// Syntactic condition under which a non-input vertex is unconstrained.
/// Numbered 1 to 6.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Condition {
    /// Positive self-regulation.
    SelfActivation = 1,
    /// A regulation with undefined sign.
    UnlabeledRegulation = 2,
    /// Both a certain positive and a certain negative influence.
    OpposingInfluences = 3,
    /// The observed variation is already explained by a certain influence.
    ExplainedObservation = 4,
    /// Unobserved, regulated, and all targets are inputs.
    InsignificantForTargets = 5,
    /// Regulated by an unobserved input whose other targets are inputs.
    FreeRegulator = 6,
}

impl Condition {
    pub fn number(self) -> u8 {
        self as u8
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ReductionStep {
    pub vertex: VertexId,
    pub condition: Condition,
    /// Round in which the vertex was marked, starting at 1.
    pub iteration: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ReductionReport {
    pub added_inputs: Vec<ReductionStep>,
}

impl ReductionReport {
    pub fn added(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.added_inputs.iter().map(|s| s.vertex)
    }
}

/// Certain influence of edge `j -> i`: defined when both `mu(j)` and the
/// edge sign are given.
fn certain_influence(inst: &ValidatedInstance, e: crate::model::EdgeId) -> Option<Sign> {
    let edge = inst.edge(e);
    Some(influence(inst.observation(edge.src)?, edge.sign?))
}

/// First condition (in numbering order) that holds for the non-input
/// vertex `i` relative to the input set `input`.
fn first_condition(inst: &ValidatedInstance, input: &[bool], i: VertexId) -> Option<Condition> {
    let in_edges = inst.in_edges(i);

    if in_edges
        .iter()
        .any(|&e| inst.edge(e).src == i && inst.edge(e).sign == Some(Sign::Plus))
    {
        return Some(Condition::SelfActivation);
    }
    if in_edges.iter().any(|&e| inst.edge(e).sign.is_none()) {
        return Some(Condition::UnlabeledRegulation);
    }

    let mut positive = false;
    let mut negative = false;
    for &e in in_edges {
        match certain_influence(inst, e) {
            Some(Sign::Plus) => positive = true,
            Some(Sign::Minus) => negative = true,
            None => {}
        }
    }
    if positive && negative {
        return Some(Condition::OpposingInfluences);
    }
    if let Some(obs) = inst.observation(i) {
        if in_edges.iter().any(|&e| certain_influence(inst, e) == Some(obs)) {
            return Some(Condition::ExplainedObservation);
        }
    }

    if inst.observation(i).is_none()
        && !in_edges.is_empty()
        && inst
            .out_edges(i)
            .iter()
            .all(|&e| input[inst.edge(e).dst.index()])
    {
        return Some(Condition::InsignificantForTargets);
    }

    let free_regulator = in_edges.iter().any(|&e| {
        let j = inst.edge(e).src;
        input[j.index()]
            && inst.observation(j).is_none()
            && inst.out_edges(j).iter().all(|&o| {
                let k = inst.edge(o).dst;
                k == i || input[k.index()]
            })
    });
    if free_regulator {
        return Some(Condition::FreeRegulator);
    }
    None
}

/// Computes the least fixpoint of the six conditions.
///
/// Each round evaluates its worklist against the input set as it stood at
/// the start of the round; vertices marked in a round enqueue the vertices
/// whose conditions 5 or 6 could have changed because of them.
pub fn reduce_inputs(inst: &ValidatedInstance) -> (ValidatedInstance, ReductionReport) {
    let mut input: Vec<bool> = inst.vertices().map(|v| inst.is_input(v)).collect();
    let mut report = ReductionReport::default();
    let mut worklist: BTreeSet<VertexId> = inst.non_inputs().collect();
    let mut round = 0;

    while !worklist.is_empty() {
        round += 1;
        let fired: Vec<(VertexId, Condition)> = worklist
            .iter()
            .filter(|v| !input[v.index()])
            .filter_map(|&v| first_condition(inst, &input, v).map(|c| (v, c)))
            .collect();
        worklist.clear();
        for &(v, condition) in &fired {
            input[v.index()] = true;
            report.added_inputs.push(ReductionStep {
                vertex: v,
                condition,
                iteration: round,
            });
        }
        for &(x, _) in &fired {
            // Condition 5 of the regulators of x; condition 6 of the targets
            // of x and of the co-targets of x's unobserved input regulators.
            for &e in inst.in_edges(x) {
                let j = inst.edge(e).src;
                worklist.insert(j);
                if input[j.index()] && inst.observation(j).is_none() {
                    worklist.extend(inst.out_edges(j).iter().map(|&o| inst.edge(o).dst));
                }
            }
            worklist.extend(inst.out_edges(x).iter().map(|&o| inst.edge(o).dst));
        }
        worklist.retain(|v| !input[v.index()]);
    }

    (inst.with_inputs(report.added()), report)
}
