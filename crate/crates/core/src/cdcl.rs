//! Small conflict-driven clause learning engine used by the sign
//! consistency solver.
//!
//! Two watched literals, first-UIP learning with non-chronological
//! backjumping, VSIDS branching restricted to designated decision
//! variables, and Luby restarts. Fully deterministic: ties in the
//! branching heap are broken by variable index.

use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct Lit(u32);

impl Lit {
    pub(crate) fn new(var: usize, positive: bool) -> Lit {
        Lit((var as u32) << 1 | u32::from(!positive))
    }

    pub(crate) fn var(self) -> usize {
        (self.0 >> 1) as usize
    }

    pub(crate) fn positive(self) -> bool {
        self.0 & 1 == 0
    }

    fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct EngineStats {
    pub decisions: u64,
    pub propagations: u64,
    pub conflicts: u64,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Limits {
    pub max_decisions: Option<u64>,
    pub deadline: Option<Instant>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Outcome {
    Sat,
    Unsat,
    Interrupted,
}

/// Branching order: max-heap on activity, ties by lower variable index.
struct VarHeap {
    heap: Vec<usize>,
    pos: Vec<Option<usize>>,
}

impl VarHeap {
    fn new(nvars: usize) -> Self {
        VarHeap {
            heap: Vec::new(),
            pos: vec![None; nvars],
        }
    }

    fn better(act: &[f64], a: usize, b: usize) -> bool {
        act[a] > act[b] || (act[a] == act[b] && a < b)
    }

    fn contains(&self, v: usize) -> bool {
        self.pos[v].is_some()
    }

    fn insert(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.heap.push(v);
        self.pos[v] = Some(self.heap.len() - 1);
        self.sift_up(self.heap.len() - 1, act);
    }

    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        if self.heap.is_empty() {
            return None;
        }
        let top = self.heap.swap_remove(0);
        self.pos[top] = None;
        if !self.heap.is_empty() {
            self.pos[self.heap[0]] = Some(0);
            self.sift_down(0, act);
        }
        Some(top)
    }

    fn bumped(&mut self, v: usize, act: &[f64]) {
        if let Some(i) = self.pos[v] {
            self.sift_up(i, act);
        }
    }

    fn sift_up(&mut self, mut i: usize, act: &[f64]) {
        while i > 0 {
            let parent = (i - 1) / 2;
            if Self::better(act, self.heap[i], self.heap[parent]) {
                self.swap(i, parent);
                i = parent;
            } else {
                break;
            }
        }
    }

    fn sift_down(&mut self, mut i: usize, act: &[f64]) {
        loop {
            let l = 2 * i + 1;
            let r = l + 1;
            let mut best = i;
            if l < self.heap.len() && Self::better(act, self.heap[l], self.heap[best]) {
                best = l;
            }
            if r < self.heap.len() && Self::better(act, self.heap[r], self.heap[best]) {
                best = r;
            }
            if best == i {
                break;
            }
            self.swap(i, best);
            i = best;
        }
    }

    fn swap(&mut self, i: usize, j: usize) {
        self.heap.swap(i, j);
        self.pos[self.heap[i]] = Some(i);
        self.pos[self.heap[j]] = Some(j);
    }
}

fn luby(mut i: u64) -> u64 {
    // Luby sequence 1 1 2 1 1 2 4 ..., zero-based index.
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < i + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != i {
        size = (size - 1) >> 1;
        seq -= 1;
        i %= size;
    }
    1u64 << seq
}

pub(crate) struct Engine {
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<usize>>,
    value: Vec<Option<bool>>,
    level: Vec<usize>,
    reason: Vec<Option<usize>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    decision_var: Vec<bool>,
    activity: Vec<f64>,
    var_inc: f64,
    heap: VarHeap,
    saved_phase: Vec<Option<bool>>,
    seen: Vec<bool>,
    unsat: bool,
    pub(crate) stats: EngineStats,
}

impl Engine {
    pub(crate) fn new(nvars: usize) -> Self {
        Engine {
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * nvars],
            value: vec![None; nvars],
            level: vec![0; nvars],
            reason: vec![None; nvars],
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            decision_var: vec![false; nvars],
            activity: vec![0.0; nvars],
            var_inc: 1.0,
            heap: VarHeap::new(nvars),
            saved_phase: vec![None; nvars],
            seen: vec![false; nvars],
            unsat: false,
            stats: EngineStats::default(),
        }
    }

    /// Marks `var` as a branching variable with a small initial activity
    /// bias (used for seeded tie-breaking).
    pub(crate) fn set_decision_var(&mut self, var: usize, bias: f64) {
        self.decision_var[var] = true;
        self.activity[var] = bias;
        self.heap.insert(var, &self.activity);
    }

    pub(crate) fn value(&self, var: usize) -> Option<bool> {
        self.value[var]
    }

    fn lit_value(&self, lit: Lit) -> Option<bool> {
        self.value[lit.var()].map(|v| v == lit.positive())
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    /// Adds a problem clause at decision level 0.
    pub(crate) fn add_clause(&mut self, lits: &[Lit]) {
        if self.unsat {
            return;
        }
        let mut clause: Vec<Lit> = lits.to_vec();
        clause.sort();
        clause.dedup();
        if clause.windows(2).any(|w| w[0] == !w[1]) {
            return;
        }
        clause.retain(|&l| self.lit_value(l) != Some(false));
        if clause.iter().any(|&l| self.lit_value(l) == Some(true)) {
            return;
        }
        match clause.len() {
            0 => self.unsat = true,
            1 => {
                self.enqueue(clause[0], None);
                if self.propagate().is_some() {
                    self.unsat = true;
                }
            }
            _ => {
                self.attach(clause);
            }
        }
    }

    fn attach(&mut self, clause: Vec<Lit>) -> usize {
        let cref = self.clauses.len();
        self.watches[(!clause[0]).index()].push(cref);
        self.watches[(!clause[1]).index()].push(cref);
        self.clauses.push(clause);
        cref
    }

    fn enqueue(&mut self, lit: Lit, reason: Option<usize>) {
        let v = lit.var();
        debug_assert!(self.value[v].is_none());
        self.value[v] = Some(lit.positive());
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(lit);
    }

    /// Unit propagation; returns a conflicting clause if any.
    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            // Clauses watching !p, i.e. registered under index of p.
            let mut ws = std::mem::take(&mut self.watches[p.index()]);
            let mut i = 0;
            let mut conflict = None;
            while i < ws.len() {
                let cref = ws[i];
                let false_lit = !p;
                {
                    let c = &mut self.clauses[cref];
                    if c[0] == false_lit {
                        c.swap(0, 1);
                    }
                }
                let first = self.clauses[cref][0];
                if self.lit_value(first) == Some(true) {
                    i += 1;
                    continue;
                }
                let len = self.clauses[cref].len();
                let mut moved = false;
                for k in 2..len {
                    let l = self.clauses[cref][k];
                    if self.lit_value(l) != Some(false) {
                        self.clauses[cref].swap(1, k);
                        self.watches[(!l).index()].push(cref);
                        ws.swap_remove(i);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                match self.lit_value(first) {
                    Some(false) => {
                        conflict = Some(cref);
                        break;
                    }
                    _ => {
                        self.enqueue(first, Some(cref));
                        i += 1;
                    }
                }
            }
            let tail = std::mem::take(&mut self.watches[p.index()]);
            ws.extend(tail);
            self.watches[p.index()] = ws;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn bump(&mut self, var: usize) {
        self.activity[var] += self.var_inc;
        if self.activity[var] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.bumped(var, &self.activity);
    }

    /// First-UIP conflict analysis. Returns the learnt clause (asserting
    /// literal first) and the backjump level.
    fn analyze(&mut self, mut conflict: usize) -> (Vec<Lit>, usize) {
        let mut learnt = vec![Lit(0)];
        let mut pending = 0usize;
        let mut index = self.trail.len();
        let mut p: Option<Lit> = None;
        let current = self.decision_level();

        loop {
            let clause = self.clauses[conflict].clone();
            for &q in clause.iter().filter(|&&q| Some(q) != p) {
                let v = q.var();
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump(v);
                    if self.level[v] >= current {
                        pending += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var()] {
                    break;
                }
            }
            let lit = self.trail[index];
            p = Some(lit);
            self.seen[lit.var()] = false;
            pending -= 1;
            if pending == 0 {
                learnt[0] = !lit;
                break;
            }
            conflict = self.reason[lit.var()].expect("implied literal has a reason");
        }
        for l in &learnt[1..] {
            self.seen[l.var()] = false;
        }

        let mut backjump = 0;
        if learnt.len() > 1 {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var()] > self.level[learnt[max_i].var()] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            backjump = self.level[learnt[1].var()];
        }
        self.var_inc /= 0.95;
        (learnt, backjump)
    }

    fn cancel_until(&mut self, level: usize) {
        if self.decision_level() <= level {
            return;
        }
        let start = self.trail_lim[level];
        for i in (start..self.trail.len()).rev() {
            let v = self.trail[i].var();
            self.saved_phase[v] = self.value[v];
            self.value[v] = None;
            self.reason[v] = None;
            if self.decision_var[v] {
                self.heap.insert(v, &self.activity);
            }
        }
        self.trail.truncate(start);
        self.trail_lim.truncate(level);
        self.qhead = start;
    }

    /// Runs the search. `phase` may suggest a polarity for a decision
    /// variable given the current partial assignment.
    pub(crate) fn solve(
        &mut self,
        limits: Limits,
        phase: &mut dyn FnMut(usize, &Engine) -> Option<bool>,
    ) -> Outcome {
        if self.unsat {
            return Outcome::Unsat;
        }
        if self.propagate().is_some() {
            self.unsat = true;
            return Outcome::Unsat;
        }
        let mut restarts = 0u64;
        let mut budget = 100 * luby(restarts);
        let mut conflicts_since_restart = 0u64;

        loop {
            if let Some(conflict) = self.propagate() {
                self.stats.conflicts += 1;
                conflicts_since_restart += 1;
                if self.decision_level() == 0 {
                    self.unsat = true;
                    return Outcome::Unsat;
                }
                let (learnt, backjump) = self.analyze(conflict);
                self.cancel_until(backjump);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let asserting = learnt[0];
                    let cref = self.attach(learnt);
                    self.enqueue(asserting, Some(cref));
                }
                continue;
            }

            if conflicts_since_restart >= budget {
                restarts += 1;
                budget = 100 * luby(restarts);
                conflicts_since_restart = 0;
                self.cancel_until(0);
                continue;
            }

            if self.stats.decisions.is_multiple_of(256) {
                if let Some(deadline) = limits.deadline {
                    if Instant::now() >= deadline {
                        return Outcome::Interrupted;
                    }
                }
            }
            let next = loop {
                match self.heap.pop(&self.activity) {
                    None => break None,
                    Some(v) if self.value[v].is_none() => break Some(v),
                    Some(_) => {}
                }
            };
            let Some(var) = next else {
                return Outcome::Sat;
            };
            if let Some(max) = limits.max_decisions {
                if self.stats.decisions >= max {
                    return Outcome::Interrupted;
                }
            }
            self.stats.decisions += 1;
            let polarity = phase(var, self)
                .or(self.saved_phase[var])
                .unwrap_or(true);
            self.trail_lim.push(self.trail.len());
            self.enqueue(Lit::new(var, polarity), None);
        }
    }

    #[cfg(test)]
    fn nvars(&self) -> usize {
        self.value.len()
    }
}
