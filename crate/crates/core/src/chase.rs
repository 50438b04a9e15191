//! The chase: breadth-first growth of c-instances along the syntax tree,
//! its conjunctive-tree and seeding variants, and minimality filtering.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::canon::{canonical_key, canonical_key_pinned};
use crate::cinstance::{add_to_ins, CInstance, Cell, Homomorphism, NullId};
use crate::error::{Error, Result};
use crate::eval::{cov_cinstance, node_sat, Coverage};
use crate::query::{check_safety, normalize_query, Formula, Query};
use crate::schema::{DomainId, Schema};
use crate::solver::is_consistent;
use crate::tree::{
    build_syntax_tree, disjtree_to_conjtrees, expand_disjunction, tree_to_conjunctions, ConnKind, LeafId, Literal,
    Node, QuantKind, SyntaxTree,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    DisjNaive,
    DisjEo,
    DisjAdd,
    ConjNaive,
    ConjEo,
    ConjAdd,
}

impl Variant {
    pub const ALL: [Variant; 6] =
        [Variant::DisjNaive, Variant::DisjEo, Variant::DisjAdd, Variant::ConjNaive, Variant::ConjEo, Variant::ConjAdd];

    pub fn name(self) -> &'static str {
        match self {
            Variant::DisjNaive => "disj-naive",
            Variant::DisjEo => "disj-eo",
            Variant::DisjAdd => "disj-add",
            Variant::ConjNaive => "conj-naive",
            Variant::ConjEo => "conj-eo",
            Variant::ConjAdd => "conj-add",
        }
    }

    pub fn conjunctive(self) -> bool {
        matches!(self, Variant::ConjNaive | Variant::ConjEo | Variant::ConjAdd)
    }

    /// Universal quantifiers may not introduce fresh nulls.
    pub fn existing_only(self) -> bool {
        !matches!(self, Variant::DisjNaive | Variant::ConjNaive)
    }

    pub fn seeds_uncovered(self) -> bool {
        matches!(self, Variant::DisjAdd | Variant::ConjAdd)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Variant, String> {
        Variant::ALL.into_iter().find(|v| v.name() == s).ok_or_else(|| format!("unknown variant `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChaseConfig {
    pub variant: Variant,
    /// Maximum instance size, not counting foreign-key anchor tuples.
    pub limit: usize,
    pub timeout: Option<Duration>,
}

impl ChaseConfig {
    /// Twice the number of query leaves.
    pub fn default_limit(t: &SyntaxTree) -> usize {
        2 * t.leaf_count
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ChaseStats {
    /// Instances taken off a queue and emitted or expanded.
    pub explored: usize,
    /// Distinct canonical keys among generated instances, including those
    /// pruned by the limit or by inconsistency, summed over every search.
    pub distinct_keys: usize,
    pub queue_peak: usize,
    pub searches: usize,
    pub wall_time: Duration,
    pub timed_out: bool,
    /// Elapsed time at each top-level emission.
    pub emit_times: Vec<Duration>,
}

#[derive(Clone, Debug)]
pub struct ChaseResult {
    pub solution: Vec<(CInstance, Coverage)>,
    /// Satisfying instances found before minimality filtering.
    pub raw_count: usize,
    pub stats: ChaseStats,
}

struct Chaser<'a> {
    schema: &'a Schema,
    var_domains: &'a BTreeMap<String, DomainId>,
    existing_only: bool,
    limit: usize,
    start: Instant,
    deadline: Option<Instant>,
    stats: ChaseStats,
    on_emit: &'a mut dyn FnMut(&CInstance),
}

fn pinned(h: &Homomorphism) -> Vec<NullId> {
    h.values().filter_map(Cell::as_null).collect()
}

impl Chaser<'_> {
    fn expired(&mut self) -> bool {
        if self.deadline.is_some_and(|d| Instant::now() >= d) {
            self.stats.timed_out = true;
        }
        self.stats.timed_out
    }

    fn domain(&self, var: &str) -> DomainId {
        self.var_domains[var]
    }

    /// Breadth-first search for extensions of `i0` satisfying `node`
    /// under `h0`; free variables outside `h0` get fresh nulls.
    fn bfs(&mut self, node: &Node, i0: &CInstance, h0: &Homomorphism, top: bool) -> Vec<CInstance> {
        self.stats.searches += 1;
        let mut i0 = i0.clone();
        let mut h = h0.clone();
        for v in node.free_vars() {
            let d = self.domain(&v);
            h.entry(v).or_insert_with(|| Cell::Null(i0.fresh_null(d)));
        }
        let pins = pinned(&h);
        let mut res = Vec::new();
        let mut visited: HashSet<String> = HashSet::new();
        let mut queue = VecDeque::new();
        // Every generated instance is keyed once, pruned or not; only
        // unseen, consistent ones within the limit are queued.
        let mut admit = |ch: &mut Self, j: CInstance, queue: &mut VecDeque<CInstance>| {
            if visited.insert(canonical_key_pinned(&j, &pins)) {
                ch.stats.distinct_keys += 1;
                if j.budget_size(ch.schema) <= ch.limit && is_consistent(ch.schema, &j) {
                    queue.push_back(j);
                }
            }
        };
        admit(self, i0, &mut queue);
        while let Some(i) = queue.pop_front() {
            if self.expired() {
                break;
            }
            self.stats.explored += 1;
            // An output value has to occur in the instance to be an answer.
            let outputs_placed = !top || {
                let present = i.nulls();
                pins.iter().all(|n| present.contains(n))
            };
            if outputs_placed && node_sat(self.schema, self.var_domains, node, &i, &h) {
                if top {
                    self.stats.emit_times.push(self.start.elapsed());
                    (self.on_emit)(&i);
                }
                res.push(i);
                continue;
            }
            for j in self.step(node, &i, &h) {
                admit(self, j, &mut queue);
            }
            self.stats.queue_peak = self.stats.queue_peak.max(queue.len());
        }
        res
    }

    /// One expansion of `i` along the root operator of `node`.
    fn step(&mut self, node: &Node, i: &CInstance, h: &Homomorphism) -> Vec<CInstance> {
        if !node.has_quantifier() {
            let conjs = tree_to_conjunctions(node).expect("quantifier-free tree");
            return conjs
                .iter()
                .filter_map(|c| add_to_ins(self.schema, i, c, h).ok())
                .filter(|j| is_consistent(self.schema, j))
                .collect();
        }
        match node {
            Node::Leaf { .. } => unreachable!("leaves are quantifier-free"),
            Node::Conn { kind: ConnKind::And, left, right } => {
                let mut out = Vec::new();
                for j in self.bfs(left, i, h, false) {
                    if !is_consistent(self.schema, &j) {
                        continue;
                    }
                    out.extend(self.bfs(right, &j, h, false).into_iter().filter(|k| is_consistent(self.schema, k)));
                }
                out
            }
            Node::Conn { kind: ConnKind::Or, .. } => {
                let cases = expand_disjunction(node).expect("root is a disjunction");
                cases.iter().flat_map(|c| self.bfs(c, i, h, false)).collect()
            }
            Node::Quant { kind: QuantKind::Exists, var, child } => {
                let d = self.domain(var);
                let mut out = Vec::new();
                for m in i.chase_domain(self.schema, d) {
                    let mut g = h.clone();
                    g.insert(var.clone(), m);
                    out.extend(self.bfs(child, i, &g, false));
                }
                let mut j = i.clone();
                let y = j.fresh_null(d);
                let mut g = h.clone();
                g.insert(var.clone(), Cell::Null(y));
                out.extend(self.bfs(child, &j, &g, false));
                out
            }
            Node::Quant { kind: QuantKind::Forall, var, child } => {
                let d = self.domain(var);
                let members = i.chase_domain(self.schema, d);
                let mut acc = vec![i.clone()];
                for m in members {
                    let mut g = h.clone();
                    g.insert(var.clone(), m);
                    let mut cur = Vec::new();
                    for j in &acc {
                        cur.extend(self.bfs(child, j, &g, false).into_iter().filter(|k| is_consistent(self.schema, k)));
                    }
                    acc = cur;
                }
                let mut out = acc.clone();
                if !self.existing_only {
                    for j in &acc {
                        let mut j = j.clone();
                        let y = j.fresh_null(d);
                        let mut g = h.clone();
                        g.insert(var.clone(), Cell::Null(y));
                        out.extend(self.bfs(child, &j, &g, false).into_iter().filter(|k| is_consistent(self.schema, k)));
                    }
                }
                out
            }
        }
    }
}

/// Runs the configured variant and filters the results to a minimal
/// c-solution.
pub fn chase(schema: &Schema, t: &SyntaxTree, cfg: &ChaseConfig) -> Result<ChaseResult> {
    chase_streaming(schema, t, cfg, &mut |_| {})
}

/// [`chase`], calling `on_emit` on each satisfying instance as soon as a
/// top-level search finds it.
pub fn chase_streaming(
    schema: &Schema,
    t: &SyntaxTree,
    cfg: &ChaseConfig,
    on_emit: &mut dyn FnMut(&CInstance),
) -> Result<ChaseResult> {
    let start = Instant::now();
    if cfg.limit == 0 {
        return Ok(ChaseResult { solution: Vec::new(), raw_count: 0, stats: ChaseStats::default() });
    }
    let mut ch = Chaser {
        schema,
        var_domains: &t.var_domains,
        existing_only: cfg.variant.existing_only(),
        limit: cfg.limit,
        start,
        deadline: cfg.timeout.map(|d| start + d),
        stats: ChaseStats::default(),
        on_emit,
    };
    let roots = if cfg.variant.conjunctive() { disjtree_to_conjtrees(&t.root) } else { vec![t.root.clone()] };
    let empty = CInstance::new(schema);
    let mut raw: Vec<CInstance> = Vec::new();
    for r in &roots {
        raw.extend(ch.bfs(r, &empty, &Homomorphism::new(), true));
    }
    let mut solution = minimal_filter(schema, t, raw.clone())?;
    if cfg.variant.seeds_uncovered() {
        let covered: BTreeSet<LeafId> = solution.iter().flat_map(|(_, c)| c.iter().copied()).collect();
        let free: BTreeSet<String> = t.root.free_vars().into_iter().collect();
        for (atom, id, flipped) in t.root.leaves() {
            if covered.contains(&id) || ch.expired() {
                continue;
            }
            let mut seed = CInstance::new(schema);
            let mut h0 = Homomorphism::new();
            let mut h = Homomorphism::new();
            for v in atom.vars() {
                let n = seed.fresh_null(t.var_domains[v]);
                h.insert(v.to_string(), Cell::Null(n));
                if free.contains(v) {
                    h0.insert(v.to_string(), Cell::Null(n));
                }
            }
            let lit = Literal { id, flipped, atom: atom.clone() };
            seed = add_to_ins(schema, &seed, &vec![lit], &h)?;
            if !is_consistent(schema, &seed) {
                continue;
            }
            for r in &roots {
                raw.extend(ch.bfs(r, &seed, &h0, true));
            }
        }
        solution = minimal_filter(schema, t, raw.clone())?;
    }
    ch.stats.wall_time = start.elapsed();
    Ok(ChaseResult { solution, raw_count: raw.len(), stats: ch.stats })
}

/// One instance per coverage: the smallest, ties broken by canonical key.
/// Output is sorted by coverage.
pub fn minimal_filter(schema: &Schema, t: &SyntaxTree, results: Vec<CInstance>) -> Result<Vec<(CInstance, Coverage)>> {
    let mut best: BTreeMap<Vec<LeafId>, (usize, String, CInstance)> = BTreeMap::new();
    let mut seen: HashSet<String> = HashSet::new();
    for i in results {
        let key = canonical_key(&i);
        if !seen.insert(key.clone()) {
            continue;
        }
        let cov: Vec<LeafId> = cov_cinstance(schema, t, &i)?.into_iter().collect();
        let cand = (i.size(), key, i);
        match best.get(&cov) {
            Some((size, k, _)) if (*size, k) <= (cand.0, &cand.1) => {}
            _ => {
                best.insert(cov, cand);
            }
        }
    }
    Ok(best.into_iter().map(|(cov, (_, _, i))| (i, cov.into_iter().collect())).collect())
}

fn is_cq_neg(f: &Formula) -> bool {
    match f {
        Formula::Atom(_) => true,
        Formula::And(l, r) => is_cq_neg(l) && is_cq_neg(r),
        Formula::Exists(_, c) => is_cq_neg(c),
        Formula::Or(..) | Formula::Not(_) | Formula::Forall(..) => false,
    }
}

/// The single universal instance of a conjunctive query with negation:
/// one null per variable, a tuple per positive relational atom and a
/// condition per comparison or negated atom.
pub fn cq_neg_universal(schema: &Schema, q: &Query) -> Result<CInstance> {
    let q = normalize_query(q);
    if !is_cq_neg(&q.formula) {
        return Err(Error::NotCqNeg("only existential quantifiers, conjunction and negated atoms are allowed".into()));
    }
    let safety = check_safety(&q);
    if !safety.is_ok() {
        return Err(Error::NotCqNeg(format!("unsafe variables: {}", safety.offending.join(", "))));
    }
    let t = build_syntax_tree(&q);
    let mut i = CInstance::new(schema);
    let mut h = Homomorphism::new();
    let mut vars: Vec<String> = t.output_vars.clone();
    for (atom, _, _) in t.root.leaves() {
        for v in atom.vars() {
            if !vars.iter().any(|x| x == v) {
                vars.push(v.to_string());
            }
        }
    }
    for v in vars {
        let n = i.fresh_null(t.var_domains[&v]);
        h.insert(v, Cell::Null(n));
    }
    let conj: Vec<Literal> =
        t.root.leaves().into_iter().map(|(atom, id, flipped)| Literal { id, flipped, atom: atom.clone() }).collect();
    add_to_ins(schema, &i, &conj, &h)
}
