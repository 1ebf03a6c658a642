//! Sign consistency checking for influence graphs and diagnosis of
//! inconsistencies by minimal inconsistent cores.

mod cdcl;
pub mod diagnose;
pub mod gen;
pub mod io;
pub mod model;
pub mod reduce;
pub mod scc;
pub mod solver;

pub use diagnose::{
    approximate_all_mics, cycle_relation, diagnose_one, find_all_mics, find_one_mic, is_mic,
    merge_mics, mic_graph, overapprox_digraph, CycleRelation, DiagnoseError, DiagnosisOptions,
    DiagnosisReport, Digraph, MicGraph, Mode,
};
pub use gen::{generate, GenError, GenParams};
pub use io::{export_asp_facts, export_dot, parse_instance, write_instance, ParseError};
pub use model::{
    influence, Edge, EdgeId, Instance, Mic, ModelError, Sign, ValidatedInstance, VertexId, Witness,
};
pub use reduce::{reduce_inputs, Condition, ReductionReport, ReductionStep};
pub use solver::{
    brute_force_consistent, check_consistency, check_restricted, verify_witness,
    ConsistencyResult, ConstraintScope, SolveError, SolveStats, SolverOptions, Status,
};
