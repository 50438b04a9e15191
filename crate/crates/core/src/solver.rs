//! Satisfiability of global conditions over infinite domains.
//!
//! Equalities are closed with union-find, order atoms form a graph whose
//! strongly connected components must be merged (and must not contain a
//! strict edge), integer classes get interval bounds, string classes are
//! checked for prefix compatibility and negated facts fail only when a
//! tuple is forced onto them.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num::{BigInt, BigRational};

use crate::cinstance::{CInstance, Cell, Cond, CondOp};
use crate::schema::{DomainKind, RelId, Schema};
use crate::value::Value;

/// Integer classes with a finite range wider than this are treated as
/// having room for every disequality they take part in.
const MAX_INTEGER_SPLIT: u64 = 64;

struct Closure {
    ids: HashMap<Cell, usize>,
    cells: Vec<Cell>,
    parent: Vec<usize>,
    konst: Vec<Option<Value>>,
    integer: Vec<bool>,
}

impl Closure {
    fn new() -> Closure {
        Closure { ids: HashMap::new(), cells: Vec::new(), parent: Vec::new(), konst: Vec::new(), integer: Vec::new() }
    }

    fn intern(&mut self, schema: &Schema, c: &Cell) -> usize {
        if let Some(&id) = self.ids.get(c) {
            return id;
        }
        let id = self.cells.len();
        self.ids.insert(c.clone(), id);
        self.cells.push(c.clone());
        self.parent.push(id);
        match c {
            Cell::Const(v) => {
                self.konst.push(Some(v.clone()));
                self.integer.push(false);
            }
            Cell::Null(n) => {
                self.konst.push(None);
                self.integer.push(schema.domain(n.domain).kind == DomainKind::Integer);
            }
        }
        id
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut y = x;
        while self.parent[y] != r {
            let next = self.parent[y];
            self.parent[y] = r;
            y = next;
        }
        r
    }

    /// Merges two classes; `None` when they hold different constants.
    fn union(&mut self, a: usize, b: usize) -> Option<bool> {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return Some(false);
        }
        let k = match (self.konst[ra].take(), self.konst[rb].take()) {
            (Some(x), Some(y)) if x != y => return None,
            (x, y) => x.or(y),
        };
        self.parent[rb] = ra;
        self.konst[ra] = k;
        self.integer[ra] = self.integer[ra] || self.integer[rb];
        Some(true)
    }

    fn roots(&mut self) -> Vec<usize> {
        let mut out: Vec<usize> = (0..self.cells.len()).map(|i| self.find(i)).collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[derive(Clone)]
struct Bound {
    value: BigRational,
    strict: bool,
}

fn tighter_lower(a: &Option<Bound>, b: &Bound) -> bool {
    match a {
        None => true,
        Some(a) => b.value > a.value || (b.value == a.value && b.strict && !a.strict),
    }
}

fn tighter_upper(a: &Option<Bound>, b: &Bound) -> bool {
    match a {
        None => true,
        Some(a) => b.value < a.value || (b.value == a.value && b.strict && !a.strict),
    }
}

fn int_lower(b: &Bound) -> BigInt {
    if b.strict {
        b.value.floor().to_integer() + 1
    } else {
        b.value.ceil().to_integer()
    }
}

fn int_upper(b: &Bound) -> BigInt {
    if b.strict {
        b.value.ceil().to_integer() - 1
    } else {
        b.value.floor().to_integer()
    }
}

/// Tarjan's algorithm over `n` nodes; returns the component of each node.
fn scc(n: usize, adj: &[Vec<usize>]) -> Vec<usize> {
    struct St<'a> {
        adj: &'a [Vec<usize>],
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on: Vec<bool>,
        stack: Vec<usize>,
        comp: Vec<usize>,
        next: usize,
        ncomp: usize,
    }
    fn visit(s: &mut St<'_>, v: usize) {
        s.index[v] = Some(s.next);
        s.low[v] = s.next;
        s.next += 1;
        s.stack.push(v);
        s.on[v] = true;
        for i in 0..s.adj[v].len() {
            let w = s.adj[v][i];
            match s.index[w] {
                None => {
                    visit(s, w);
                    s.low[v] = s.low[v].min(s.low[w]);
                }
                Some(iw) if s.on[w] => s.low[v] = s.low[v].min(iw),
                _ => {}
            }
        }
        if Some(s.low[v]) == s.index[v] {
            loop {
                let w = s.stack.pop().unwrap();
                s.on[w] = false;
                s.comp[w] = s.ncomp;
                if w == v {
                    break;
                }
            }
            s.ncomp += 1;
        }
    }
    let mut s = St {
        adj,
        index: vec![None; n],
        low: vec![0; n],
        on: vec![false; n],
        stack: Vec::new(),
        comp: vec![0; n],
        next: 0,
        ncomp: 0,
    };
    for v in 0..n {
        if s.index[v].is_none() {
            visit(&mut s, v);
        }
    }
    s.comp
}

enum Outcome {
    Unsat,
    /// Satisfiable unless some finite integer class must be split by hand.
    Generic { split: Option<(Cell, BigInt, BigInt)> },
}

fn generic(schema: &Schema, tables: &[Vec<Vec<Cell>>], conds: &[Cond]) -> Outcome {
    let mut cl = Closure::new();
    for c in conds {
        for cell in c.cells() {
            cl.intern(schema, cell);
        }
    }
    for c in conds {
        if let Cond::NegFact { rel, .. } = c {
            for row in &tables[*rel] {
                for cell in row {
                    cl.intern(schema, cell);
                }
            }
        }
    }
    for c in conds {
        if let Cond::Cmp { lhs, op: CondOp::Eq, rhs } = c {
            let (a, b) = (cl.ids[lhs], cl.ids[rhs]);
            if cl.union(a, b).is_none() {
                return Outcome::Unsat;
            }
        }
    }
    let orders: Vec<(usize, usize, bool)> = conds
        .iter()
        .filter_map(|c| match c {
            Cond::Cmp { lhs, op: op @ (CondOp::Lt | CondOp::Le), rhs } => {
                Some((cl.ids[lhs], cl.ids[rhs], *op == CondOp::Lt))
            }
            _ => None,
        })
        .collect();

    // Order reasoning: merge non-strict cycles, propagate integer bounds,
    // pin integer classes whose bounds meet, until nothing changes.
    let mut lower: Vec<Option<Bound>>;
    let mut upper: Vec<Option<Bound>>;
    loop {
        let n = cl.cells.len();
        let mut edges: Vec<(usize, usize, bool)> = Vec::new();
        for &(a, b, strict) in &orders {
            edges.push((cl.find(a), cl.find(b), strict));
        }
        let mut numeric: Vec<(BigRational, usize)> = Vec::new();
        for r in cl.roots() {
            if let Some(Value::Num(v)) = &cl.konst[r] {
                numeric.push((v.clone(), r));
            }
        }
        numeric.sort();
        for w in numeric.windows(2) {
            edges.push((w[0].1, w[1].1, true));
        }
        let mut adj = vec![Vec::new(); n];
        for &(a, b, _) in &edges {
            adj[a].push(b);
        }
        let comp = scc(n, &adj);
        if edges.iter().any(|&(a, b, strict)| strict && comp[a] == comp[b]) {
            return Outcome::Unsat;
        }
        let mut by_comp: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for r in cl.roots() {
            by_comp.entry(comp[r]).or_default().push(r);
        }
        let mut changed = false;
        for members in by_comp.values() {
            for w in members.windows(2) {
                match cl.union(w[0], w[1]) {
                    None => return Outcome::Unsat,
                    Some(m) => changed |= m,
                }
            }
        }
        if changed {
            continue;
        }

        // The class graph is now acyclic; propagate bounds in topological order.
        let roots = cl.roots();
        let mut succ: BTreeMap<usize, Vec<(usize, bool)>> = BTreeMap::new();
        let mut pred: BTreeMap<usize, Vec<(usize, bool)>> = BTreeMap::new();
        let mut indeg: BTreeMap<usize, usize> = roots.iter().map(|r| (*r, 0)).collect();
        for &(a, b, strict) in &edges {
            if a != b {
                succ.entry(a).or_default().push((b, strict));
                pred.entry(b).or_default().push((a, strict));
                *indeg.get_mut(&b).unwrap() += 1;
            }
        }
        let mut order = Vec::new();
        let mut ready: Vec<usize> = indeg.iter().filter(|(_, d)| **d == 0).map(|(r, _)| *r).collect();
        while let Some(v) = ready.pop() {
            order.push(v);
            for &(w, _) in succ.get(&v).map(Vec::as_slice).unwrap_or(&[]) {
                let d = indeg.get_mut(&w).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.push(w);
                }
            }
        }
        lower = vec![None; n];
        upper = vec![None; n];
        let own = |cl: &Closure, v: usize| match &cl.konst[v] {
            Some(Value::Num(x)) => Some(Bound { value: x.clone(), strict: false }),
            _ => None,
        };
        for &v in &order {
            let mut lb = own(&cl, v);
            if lb.is_none() {
                for &(u, strict) in pred.get(&v).map(Vec::as_slice).unwrap_or(&[]) {
                    if let Some(b) = &lower[u] {
                        let cand = Bound { value: b.value.clone(), strict: b.strict || strict };
                        if tighter_lower(&lb, &cand) {
                            lb = Some(cand);
                        }
                    }
                }
                if cl.integer[v] {
                    lb = lb.map(|b| Bound { value: BigRational::from_integer(int_lower(&b)), strict: false });
                }
            }
            lower[v] = lb;
        }
        for &v in order.iter().rev() {
            let mut ub = own(&cl, v);
            if ub.is_none() {
                for &(w, strict) in succ.get(&v).map(Vec::as_slice).unwrap_or(&[]) {
                    if let Some(b) = &upper[w] {
                        let cand = Bound { value: b.value.clone(), strict: b.strict || strict };
                        if tighter_upper(&ub, &cand) {
                            ub = Some(cand);
                        }
                    }
                }
                if cl.integer[v] {
                    ub = ub.map(|b| Bound { value: BigRational::from_integer(int_upper(&b)), strict: false });
                }
            }
            upper[v] = ub;
        }
        // Integer paths between constants need room for every strict step.
        for &v in &order {
            if !cl.integer[v] || cl.konst[v].is_some() {
                continue;
            }
            if let (Some(l), Some(u)) = (&lower[v], &upper[v]) {
                if l.value > u.value {
                    return Outcome::Unsat;
                }
            }
        }
        for &(a, b, strict) in &edges {
            if a == b {
                continue;
            }
            let int_edge = cl.integer[a] || cl.integer[b];
            if let (Some(la), Some(ub)) = (&lower[a], &upper[b]) {
                let gap_needed = if strict && int_edge { BigRational::from_integer(1.into()) } else { BigRational::from_integer(0.into()) };
                if &ub.value - &la.value < gap_needed {
                    return Outcome::Unsat;
                }
            }
        }
        let mut pinned = false;
        for &v in &order {
            if cl.integer[v] && cl.konst[v].is_none() {
                if let (Some(l), Some(u)) = (&lower[v], &upper[v]) {
                    if l.value == u.value {
                        let c = cl.intern(schema, &Cell::Const(Value::Num(l.value.clone())));
                        lower.push(None);
                        upper.push(None);
                        if cl.union(v, c).is_none() {
                            return Outcome::Unsat;
                        }
                        pinned = true;
                    }
                }
            }
        }
        if !pinned {
            break;
        }
    }

    // Disequalities.
    for c in conds {
        if let Cond::Cmp { lhs, op: CondOp::Ne, rhs } = c {
            let (a, b) = (cl.ids[lhs], cl.ids[rhs]);
            if cl.find(a) == cl.find(b) {
                return Outcome::Unsat;
            }
        }
    }

    // Prefix constraints on string classes.
    let mut pos: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
    let mut neg: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
    for c in conds {
        if let Cond::Like { cell, prefix, negated } = c {
            let r = cl.find(cl.ids[cell]);
            if *negated { &mut neg } else { &mut pos }.entry(r).or_default().push(prefix);
        }
    }
    for r in pos.keys().chain(neg.keys()).copied().collect::<BTreeSet<_>>() {
        let ps = pos.get(&r).cloned().unwrap_or_default();
        let longest = ps.iter().copied().max_by_key(|p| p.len()).unwrap_or("");
        if ps.iter().any(|p| !longest.starts_with(p)) {
            return Outcome::Unsat;
        }
        let konst = match &cl.konst[r] {
            Some(Value::Str(s)) => Some(s.as_str()),
            Some(Value::Num(_)) => return Outcome::Unsat,
            None => None,
        };
        if let Some(k) = konst {
            if !k.starts_with(longest) {
                return Outcome::Unsat;
            }
        }
        for n in neg.get(&r).map(Vec::as_slice).unwrap_or(&[]) {
            if longest.starts_with(n) || konst.is_some_and(|k| k.starts_with(n)) {
                return Outcome::Unsat;
            }
        }
    }

    // Negated facts.
    for c in conds {
        if let Cond::NegFact { rel, args } = c {
            for row in &tables[*rel] {
                let forced = row.iter().zip(args).all(|(a, b)| {
                    let (x, y) = (cl.ids[a], cl.ids[b]);
                    cl.find(x) == cl.find(y)
                });
                if forced {
                    return Outcome::Unsat;
                }
            }
        }
    }

    // Finite integer classes touched by disequalities may still be unsat.
    let mut touched: BTreeSet<usize> = BTreeSet::new();
    for c in conds {
        match c {
            Cond::Cmp { lhs, op: CondOp::Ne, rhs } => {
                for x in [lhs, rhs] {
                    let r = cl.find(cl.ids[x]);
                    touched.insert(r);
                }
            }
            Cond::NegFact { args, .. } => {
                for x in args {
                    let r = cl.find(cl.ids[x]);
                    touched.insert(r);
                }
            }
            _ => {}
        }
    }
    let mut split: Option<(Cell, BigInt, BigInt)> = None;
    for r in touched {
        if !cl.integer[r] || cl.konst[r].is_some() {
            continue;
        }
        if let (Some(l), Some(u)) = (&lower[r], &upper[r]) {
            let (l, u) = (l.value.to_integer(), u.value.to_integer());
            let width = &u - &l;
            let narrower = split.as_ref().is_none_or(|(_, sl, su)| width < su - sl);
            if width < BigInt::from(MAX_INTEGER_SPLIT) && narrower {
                split = Some((cl.cells[r].clone(), l, u));
            }
        }
    }
    Outcome::Generic { split }
}

fn solve(schema: &Schema, tables: &[Vec<Vec<Cell>>], conds: &[Cond]) -> bool {
    match generic(schema, tables, conds) {
        Outcome::Unsat => false,
        Outcome::Generic { split: None } => true,
        Outcome::Generic { split: Some((cell, lo, hi)) } => {
            let mut v = lo;
            while v <= hi {
                let mut more = conds.to_vec();
                let k = Cell::Const(Value::Num(BigRational::from_integer(v.clone())));
                more.push(Cond::Cmp { lhs: cell.clone(), op: CondOp::Eq, rhs: k });
                if solve(schema, tables, &more) {
                    return true;
                }
                v += 1;
            }
            false
        }
    }
}

/// Ways to satisfy the primary key on one pair of tuples: some key cell
/// differs, or every other cell agrees.
fn key_branches(schema: &Schema, tables: &[Vec<Vec<Cell>>]) -> Vec<Vec<Vec<Cond>>> {
    let mut out = Vec::new();
    for (rel, rows) in tables.iter().enumerate() {
        let key = &schema.relation(rel).key;
        if key.is_empty() {
            continue;
        }
        for (a, s) in rows.iter().enumerate() {
            for t in &rows[a + 1..] {
                let rest: Vec<Cond> = (0..s.len())
                    .filter(|p| !key.contains(p) && s[*p] != t[*p])
                    .map(|p| Cond::Cmp { lhs: s[p].clone(), op: CondOp::Eq, rhs: t[p].clone() }.normalized())
                    .collect();
                if rest.is_empty() {
                    continue;
                }
                let mut branches: Vec<Vec<Cond>> = key
                    .iter()
                    .filter(|&&p| s[p] != t[p])
                    .map(|&p| vec![Cond::Cmp { lhs: s[p].clone(), op: CondOp::Ne, rhs: t[p].clone() }.normalized()])
                    .collect();
                branches.push(rest);
                out.push(branches);
            }
        }
    }
    out
}

fn solve_keyed(schema: &Schema, tables: &[Vec<Vec<Cell>>], conds: &mut Vec<Cond>, pairs: &[Vec<Vec<Cond>>]) -> bool {
    if !solve(schema, tables, conds) {
        return false;
    }
    let Some((branches, rest)) = pairs.split_first() else {
        return true;
    };
    for b in branches {
        let n = conds.len();
        conds.extend(b.iter().filter(|c| c.static_truth() != Some(true)).cloned());
        let ok = b.iter().all(|c| c.static_truth() != Some(false)) && solve_keyed(schema, tables, conds, rest);
        conds.truncate(n);
        if ok {
            return true;
        }
    }
    false
}

/// Whether the global condition, extended by `extra`, has a model that
/// also respects the primary keys.
pub fn satisfiable(schema: &Schema, i: &CInstance, extra: &[Cond]) -> bool {
    let mut conds: Vec<Cond> = Vec::with_capacity(i.condition.len() + extra.len());
    for c in i.condition.iter().chain(extra) {
        match c.static_truth() {
            Some(true) => {}
            Some(false) => return false,
            None => conds.push(c.clone()),
        }
    }
    let pairs = key_branches(schema, &i.tables);
    solve_keyed(schema, &i.tables, &mut conds, &pairs)
}

/// Consistency: some mapping of the nulls satisfies every atomic condition.
pub fn is_consistent(schema: &Schema, i: &CInstance) -> bool {
    satisfiable(schema, i, &[])
}

/// Every satisfying mapping gives `a` and `b` the same value.
pub fn forced_equal(schema: &Schema, i: &CInstance, a: &Cell, b: &Cell) -> bool {
    a == b || !satisfiable(schema, i, &[Cond::Cmp { lhs: a.clone(), op: CondOp::Ne, rhs: b.clone() }.normalized()])
}

/// Every world of `i` satisfies `c`.
pub fn entails(schema: &Schema, i: &CInstance, c: &Cond) -> bool {
    if let Some(t) = c.static_truth() {
        return t || !is_consistent(schema, i);
    }
    match c {
        Cond::NegFact { rel, args } => i.tables[*rel].iter().all(|row| {
            let eqs: Vec<Cond> = row
                .iter()
                .zip(args)
                .map(|(a, b)| Cond::Cmp { lhs: a.clone(), op: CondOp::Eq, rhs: b.clone() }.normalized())
                .collect();
            !satisfiable(schema, i, &eqs)
        }),
        other => !satisfiable(schema, i, &[other.negation().expect("atomic comparisons negate")]),
    }
}

/// Every world of `i` contains the image of `row`.
pub fn tuple_entailed(schema: &Schema, i: &CInstance, rel: RelId, row: &[Cell]) -> bool {
    if i.contains_tuple(rel, row) {
        return true;
    }
    i.tables[rel].iter().any(|s| s.iter().zip(row).all(|(a, b)| forced_equal(schema, i, a, b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cinstance::tests::null;
    use crate::query::tests::beers;
    use crate::schema::load_schema;

    fn with(conds: Vec<Cond>) -> (Schema, CInstance) {
        let s = beers();
        let mut i = CInstance::new(&s);
        i.condition = conds;
        (s, i)
    }

    const PRICE: usize = 5;
    const DRINKER: usize = 0;

    fn lt(a: Cell, b: Cell) -> Cond {
        Cond::Cmp { lhs: a, op: CondOp::Lt, rhs: b }
    }

    fn le(a: Cell, b: Cell) -> Cond {
        Cond::Cmp { lhs: a, op: CondOp::Le, rhs: b }
    }

    fn num(s: &str) -> Cell {
        Cell::Const(Value::parse_decimal(s).unwrap())
    }

    fn like(c: Cell, p: &str, negated: bool) -> Cond {
        Cond::Like { cell: c, prefix: p.into(), negated }
    }

    #[test]
    fn condition_of_i1_is_consistent() {
        let d = null(DRINKER, 1);
        let (s, i) = with(vec![
            like(d.clone(), "Eve", false),
            like(d, "Eve ", true),
            lt(null(PRICE, 2), null(PRICE, 1)),
        ]);
        assert!(is_consistent(&s, &i));
    }

    #[test]
    fn mapping_onto_a_strict_cycle_is_inconsistent() {
        let (s, i) = with(vec![lt(null(PRICE, 2), null(PRICE, 1)), lt(null(PRICE, 1), null(PRICE, 2))]);
        assert!(!is_consistent(&s, &i));
        let (s, i) = with(vec![lt(null(PRICE, 1), null(PRICE, 1))]);
        assert!(!satisfiable(&s, &i, &[]));
    }

    #[test]
    fn negated_fact_against_its_own_tuple() {
        let s = beers();
        let likes = s.relation_id("Likes").unwrap();
        let mut i = CInstance::new(&s);
        i.tables[likes].push(vec![null(0, 1), null(1, 1)]);
        i.condition.push(Cond::NegFact { rel: likes, args: vec![null(0, 1), null(1, 1)] });
        assert!(!is_consistent(&s, &i));
        i.condition[0] = Cond::NegFact { rel: likes, args: vec![null(0, 2), null(1, 1)] };
        assert!(is_consistent(&s, &i));
        i.condition.push(Cond::Cmp { lhs: null(0, 1), op: CondOp::Eq, rhs: null(0, 2) });
        assert!(!is_consistent(&s, &i));
    }

    #[test]
    fn forced_equality() {
        let (a, b) = (null(PRICE, 1), null(PRICE, 2));
        let (s, i) = with(vec![Cond::Cmp { lhs: a.clone(), op: CondOp::Eq, rhs: b.clone() }]);
        assert!(forced_equal(&s, &i, &a, &b));
        let (s, i) = with(vec![le(a.clone(), b.clone()), le(b.clone(), a.clone())]);
        assert!(forced_equal(&s, &i, &a, &b));
        let (s, i) = with(vec![]);
        assert!(!forced_equal(&s, &i, &a, &b));
    }

    #[test]
    fn constants_order_and_bind() {
        let p = null(PRICE, 1);
        let (s, i) = with(vec![lt(p.clone(), num("2")), lt(num("3"), p.clone())]);
        assert!(!is_consistent(&s, &i));
        let (s, i) = with(vec![le(p.clone(), num("2")), le(num("2"), p.clone())]);
        assert!(forced_equal(&s, &i, &p, &num("2")));
        let (s, i) = with(vec![lt(num("2"), p.clone()), lt(p.clone(), num("2.5"))]);
        assert!(is_consistent(&s, &i));
    }

    #[test]
    fn prefix_reasoning() {
        let d = null(DRINKER, 1);
        let (s, i) = with(vec![like(d.clone(), "Eve", false), like(d.clone(), "Adam", false)]);
        assert!(!is_consistent(&s, &i));
        let (s, i) = with(vec![like(d.clone(), "Eve ", false), like(d.clone(), "Eve", true)]);
        assert!(!is_consistent(&s, &i));
        let (s, i) = with(vec![
            like(d.clone(), "Eve", false),
            Cond::Cmp { lhs: d.clone(), op: CondOp::Eq, rhs: Cell::Const(Value::str("Eve Edwards")) },
        ]);
        assert!(is_consistent(&s, &i));
        assert!(entails(&s, &i, &like(d.clone(), "Eve ", false)));
        let (s, i) = with(vec![like(d.clone(), "Eve", false)]);
        assert!(!entails(&s, &i, &like(d, "Eve ", false)));
    }

    #[test]
    fn integer_gaps_have_cardinality() {
        let s = load_schema(
            "[[domains]]\nname = \"n\"\nkind = \"integer\"\n[[relations]]\nname = \"R\"\nattrs = [{ name = \"a\", domain = \"n\" }]\n",
        )
        .unwrap();
        let mut i = CInstance::new(&s);
        let (x, y) = (null(0, 1), null(0, 2));
        i.condition = vec![lt(num("1"), x.clone()), lt(x.clone(), num("2"))];
        assert!(!is_consistent(&s, &i));
        i.condition = vec![lt(num("1"), x.clone()), lt(x.clone(), y.clone()), lt(y.clone(), num("4"))];
        assert!(is_consistent(&s, &i));
        i.condition.push(Cond::Cmp { lhs: x.clone(), op: CondOp::Ne, rhs: num("2") });
        assert!(!is_consistent(&s, &i));
        i.condition = vec![
            lt(num("1"), x.clone()),
            lt(x.clone(), num("4")),
            lt(num("1"), y.clone()),
            lt(y.clone(), num("4")),
            Cond::Cmp { lhs: x.clone(), op: CondOp::Ne, rhs: y.clone() }.normalized(),
            Cond::Cmp { lhs: x.clone(), op: CondOp::Ne, rhs: num("2") },
            Cond::Cmp { lhs: y.clone(), op: CondOp::Ne, rhs: num("3") },
        ];
        assert!(is_consistent(&s, &i));
        i.condition.push(Cond::Cmp { lhs: x, op: CondOp::Ne, rhs: num("3") });
        assert!(!is_consistent(&s, &i));
    }

    #[test]
    fn entailment_of_negated_fact() {
        let mut s = beers();
        for r in &mut s.relations {
            r.key.clear();
        }
        let serves = s.relation_id("Serves").unwrap();
        let mut i = CInstance::new(&s);
        i.tables[serves].push(vec![null(2, 1), null(1, 1), null(PRICE, 1)]);
        i.tables[serves].push(vec![null(2, 2), null(1, 1), null(PRICE, 2)]);
        i.condition.push(lt(null(PRICE, 2), null(PRICE, 1)));
        let probe = Cond::NegFact { rel: serves, args: vec![null(2, 1), null(1, 1), null(PRICE, 2)] };
        assert!(!entails(&s, &i, &probe));
        i.condition.push(Cond::Cmp { lhs: null(2, 1), op: CondOp::Ne, rhs: null(2, 2) });
        assert!(entails(&s, &i, &probe));
    }

    #[test]
    fn primary_key_separates_tuples() {
        let s = beers();
        let serves = s.relation_id("Serves").unwrap();
        let mut i = CInstance::new(&s);
        i.tables[serves].push(vec![null(2, 1), null(1, 1), null(PRICE, 1)]);
        i.tables[serves].push(vec![null(2, 2), null(1, 1), null(PRICE, 2)]);
        i.condition.push(lt(null(PRICE, 2), null(PRICE, 1)));
        let same_bar = Cond::Cmp { lhs: null(2, 1), op: CondOp::Eq, rhs: null(2, 2) }.normalized();
        assert!(!satisfiable(&s, &i, &[same_bar]));
        i.condition.clear();
        let same_bar = Cond::Cmp { lhs: null(2, 1), op: CondOp::Eq, rhs: null(2, 2) }.normalized();
        assert!(satisfiable(&s, &i, &[same_bar]));
    }
}
