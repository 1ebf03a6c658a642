//! Reference implementations used as test oracles.
//!
//! Nothing here calls the solver, the reducer or the diagnosis engine of
//! `scm-core`; only the instance model and parser are shared.

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use scm_core::{parse_instance, Instance, Sign, ValidatedInstance, VertexId};

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/data")
        .join(name)
}

pub fn load(name: &str) -> ValidatedInstance {
    let text = std::fs::read_to_string(data_path(name)).expect("fixture readable");
    parse_instance(&text).expect("fixture parses")
}

pub fn names(inst: &ValidatedInstance, set: &[VertexId]) -> Vec<String> {
    set.iter().map(|&v| inst.name(v).to_string()).collect()
}

pub fn ids(inst: &ValidatedInstance, names: &[&str]) -> Vec<VertexId> {
    names
        .iter()
        .map(|n| inst.vertex(n).unwrap_or_else(|| panic!("no vertex {n}")))
        .collect()
}

/// The six yeast MIC neighborhoods as `(instance text, expected MIC)`.
/// Inputs are the predecessor-free vertices.
pub fn yeast_neighborhoods() -> Vec<(&'static str, Vec<&'static str>)> {
    vec![
        ("edge ume6 hsf1 -\nobs ume6 +\nobs hsf1 +", vec!["hsf1"]),
        ("edge ume6 spo12 -\nobs ume6 +\nobs spo12 +", vec!["spo12"]),
        ("edge ume6 ino2 +\nobs ume6 +\nobs ino2 -", vec!["ino2"]),
        (
            "edge reb1 hsc82 +\nedge reb1 top1 +\nedge ume6 top1 -\nobs hsc82 -\nobs ume6 +\nobs top1 +",
            vec!["hsc82", "top1"],
        ),
        (
            "edge reb1 rap1 +\nedge reb1 top1 +\nedge ume6 top1 -\nobs rap1 -\nobs ume6 +\nobs top1 +",
            vec!["rap1", "top1"],
        ),
        (
            "edge reb1 sin3 +\nedge sin3 ume6 -\nedge ume6 top1 -\nedge reb1 top1 +\nobs ume6 +\nobs top1 +",
            vec!["sin3", "top1", "ume6"],
        ),
    ]
}

/// Exhaustive evaluation over every total extension.
///
/// Non-input vertices are numbered in id order; bit `b` of a mask stands
/// for the `b`-th of them.
pub struct Exhaustive {
    pub non_inputs: Vec<VertexId>,
    /// `consistent[mask]` iff some extension explains every vertex in mask.
    pub consistent: Vec<bool>,
}

pub const MAX_FREE: usize = 22;
pub const MAX_NON_INPUTS: usize = 14;

impl Exhaustive {
    /// `None` when the instance is too large for enumeration.
    pub fn new(inst: &ValidatedInstance) -> Option<Self> {
        let non_inputs: Vec<VertexId> = inst.vertices().filter(|&v| !inst.is_input(v)).collect();
        let free_vertices: Vec<usize> = inst
            .vertices()
            .filter(|&v| inst.observation(v).is_none())
            .map(|v| v.index())
            .collect();
        let free_edges: Vec<usize> = (0..inst.edge_count())
            .filter(|&e| inst.edges()[e].sign.is_none())
            .collect();
        let free = free_vertices.len() + free_edges.len();
        if free > MAX_FREE || non_inputs.len() > MAX_NON_INPUTS {
            return None;
        }

        let n = inst.vertex_count();
        let as_int = |s: Sign| if s == Sign::Plus { 1i8 } else { -1 };
        let mut mu: Vec<i8> = inst
            .vertices()
            .map(|v| inst.observation(v).map_or(1, as_int))
            .collect();
        let mut sigma: Vec<i8> = inst.edges().iter().map(|e| e.sign.map_or(1, as_int)).collect();
        // Regulators of each non-input vertex, as (source, edge index).
        let regulators: Vec<Vec<(usize, usize)>> = non_inputs
            .iter()
            .map(|&i| {
                inst.edges()
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| e.dst == i)
                    .map(|(k, e)| (e.src.index(), k))
                    .collect()
            })
            .collect();
        debug_assert_eq!(mu.len(), n);

        let mut reached = vec![false; 1 << non_inputs.len()];
        for bits in 0u64..(1u64 << free) {
            for (b, &v) in free_vertices.iter().enumerate() {
                mu[v] = if bits >> b & 1 == 1 { -1 } else { 1 };
            }
            for (b, &e) in free_edges.iter().enumerate() {
                sigma[e] = if bits >> (b + free_vertices.len()) & 1 == 1 { -1 } else { 1 };
            }
            let mut mask = 0usize;
            for (b, &i) in non_inputs.iter().enumerate() {
                if regulators[b].iter().any(|&(j, k)| mu[j] * sigma[k] == mu[i.index()]) {
                    mask |= 1 << b;
                }
            }
            reached[mask] = true;
        }
        // Downward closure: subsets of satisfiable sets are satisfiable.
        for b in 0..non_inputs.len() {
            for mask in 0..reached.len() {
                if mask >> b & 1 == 1 && reached[mask] {
                    reached[mask ^ (1 << b)] = true;
                }
            }
        }
        Some(Exhaustive {
            non_inputs,
            consistent: reached,
        })
    }

    pub fn mask_of(&self, set: &[VertexId]) -> usize {
        set.iter()
            .map(|v| {
                let b = self
                    .non_inputs
                    .iter()
                    .position(|u| u == v)
                    .expect("set contains only non-input vertices");
                1 << b
            })
            .fold(0, |a, b| a | b)
    }

    pub fn set_of(&self, mask: usize) -> Vec<VertexId> {
        (0..self.non_inputs.len())
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| self.non_inputs[b])
            .collect()
    }

    pub fn all_consistent(&self) -> bool {
        self.consistent[self.consistent.len() - 1]
    }

    /// Every inconsistent set all of whose one-smaller subsets are
    /// consistent, sorted.
    pub fn mics(&self) -> Vec<Vec<VertexId>> {
        let mut out: Vec<Vec<VertexId>> = (1..self.consistent.len())
            .filter(|&m| !self.consistent[m])
            .filter(|&m| {
                (0..self.non_inputs.len())
                    .filter(|b| m >> b & 1 == 1)
                    .all(|b| self.consistent[m ^ (1 << b)])
            })
            .map(|m| self.set_of(m))
            .collect();
        out.sort();
        out
    }
}

/// Random instance with optional unlabeled edges, self-loops and random
/// inputs, for exercising corners the benchmark generator never produces.
pub fn random_instance(rng: &mut impl Rng, max_vertices: usize) -> ValidatedInstance {
    let n = rng.gen_range(1..=max_vertices);
    let density = rng.gen_range(0.05..0.35);
    let unlabeled = rng.gen_range(0.0..0.3);
    let observed = rng.gen_range(0.0..0.8);
    let input_share = rng.gen_range(0.0..0.3);
    let sign = |rng: &mut dyn rand::RngCore| {
        if rng.gen_bool(0.5) {
            Sign::Plus
        } else {
            Sign::Minus
        }
    };
    let name = |i: usize| format!("n{i}");
    let mut raw = Instance::new();
    for i in 0..n {
        raw.vertex(name(i));
        if rng.gen_bool(observed) {
            let s = sign(rng);
            raw.observe(name(i), s);
        }
        if rng.gen_bool(input_share) {
            raw.input(name(i));
        }
    }
    for i in 0..n {
        for j in 0..n {
            let p = if i == j { density / 4.0 } else { density };
            if rng.gen_bool(p) {
                let s = if rng.gen_bool(unlabeled) { None } else { Some(sign(rng)) };
                raw.edge(name(i), name(j), s);
            }
        }
    }
    raw.validate().expect("random instance is valid")
}

/// Least fixpoint of the six input reduction conditions, by repeated full
/// scans in the given vertex order with immediate updates.
pub fn naive_reduction(inst: &ValidatedInstance, order: &[VertexId]) -> BTreeSet<VertexId> {
    let mut input: BTreeSet<VertexId> = inst.inputs().collect();
    let mu = |v: VertexId| inst.observation(v);
    let edges = inst.edges();
    loop {
        let mut changed = false;
        for &i in order {
            if input.contains(&i) {
                continue;
            }
            let ins: Vec<_> = edges.iter().filter(|e| e.dst == i).collect();
            let outs: Vec<_> = edges.iter().filter(|e| e.src == i).collect();
            let certain: Vec<Sign> = ins
                .iter()
                .filter_map(|e| Some(mu(e.src)? * e.sign?))
                .collect();
            let c1 = ins.iter().any(|e| e.src == i && e.sign == Some(Sign::Plus));
            let c2 = ins.iter().any(|e| e.sign.is_none());
            let c3 = certain.contains(&Sign::Plus) && certain.contains(&Sign::Minus);
            let c4 = mu(i).is_some_and(|s| certain.contains(&s));
            let c5 = mu(i).is_none() && !ins.is_empty() && outs.iter().all(|e| input.contains(&e.dst));
            let c6 = ins.iter().any(|e| {
                let j = e.src;
                mu(j).is_none()
                    && input.contains(&j)
                    && edges
                        .iter()
                        .filter(|o| o.src == j && o.dst != i)
                        .all(|o| input.contains(&o.dst))
            });
            if c1 || c2 || c3 || c4 || c5 || c6 {
                input.insert(i);
                changed = true;
            }
        }
        if !changed {
            return input;
        }
    }
}

pub fn shuffled_vertices(inst: &ValidatedInstance, rng: &mut impl Rng) -> Vec<VertexId> {
    let mut order: Vec<VertexId> = inst.vertices().collect();
    order.shuffle(rng);
    order
}

/// CNF over variables `1..=vars`; literal `-k` negates variable `k`.
pub type Cnf = Vec<Vec<i32>>;

/// Random CNF whose clauses never mention a variable twice.
pub fn random_cnf(rng: &mut impl Rng, max_vars: usize, max_clauses: usize) -> (usize, Cnf) {
    let vars = rng.gen_range(1..=max_vars);
    let clauses = rng.gen_range(1..=max_clauses);
    let cnf = (0..clauses)
        .map(|_| {
            let width = rng.gen_range(1..=vars.min(3));
            let mut pool: Vec<i32> = (1..=vars as i32).collect();
            pool.shuffle(rng);
            pool.truncate(width);
            pool.into_iter()
                .map(|v| if rng.gen_bool(0.5) { v } else { -v })
                .collect()
        })
        .collect();
    (vars, cnf)
}

pub fn truth_table_sat(vars: usize, cnf: &Cnf) -> bool {
    (0u32..1 << vars).any(|a| {
        cnf.iter().all(|c| {
            c.iter().any(|&l| {
                let value = a >> (l.unsigned_abs() - 1) & 1 == 1;
                value == (l > 0)
            })
        })
    })
}

/// Variables become unobserved input vertices `x<k>`, clauses become
/// vertices `c<i>` observed to increase, and each literal an edge signed
/// by its polarity.
pub fn cnf_instance(vars: usize, cnf: &Cnf) -> ValidatedInstance {
    let mut raw = Instance::new();
    for k in 1..=vars {
        raw.vertex(format!("x{k}")).input(format!("x{k}"));
    }
    for (i, clause) in cnf.iter().enumerate() {
        raw.vertex(format!("c{i}")).observe(format!("c{i}"), Sign::Plus);
        for &l in clause {
            let sign = if l > 0 { Sign::Plus } else { Sign::Minus };
            raw.edge(format!("x{}", l.unsigned_abs()), format!("c{i}"), Some(sign));
        }
    }
    raw.validate().expect("cnf instance is valid")
}

/// Strongly connected components by pairwise reachability, for small
/// graphs given as edge sets.
pub fn mutually_reachable(edges: &BTreeSet<(VertexId, VertexId)>, a: VertexId, b: VertexId) -> bool {
    let reaches = |from: VertexId, to: VertexId| {
        let mut seen = BTreeSet::from([from]);
        let mut todo = vec![from];
        while let Some(u) = todo.pop() {
            if u == to {
                return true;
            }
            for &(x, y) in edges {
                if x == u && seen.insert(y) {
                    todo.push(y);
                }
            }
        }
        false
    };
    reaches(a, b) && reaches(b, a)
}
