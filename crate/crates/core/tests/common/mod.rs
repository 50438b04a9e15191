//! Shared fixtures, hand-built reference instances and random generators
//! for the integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;

use drc_chase::cinstance::{CInstance, Cell, Cond, GroundInstance, NullId};
use drc_chase::query::{difference_query, parse_query, CmpOp, Query};
use drc_chase::schema::{load_schema, Schema};
use drc_chase::tree::{build_syntax_tree, SyntaxTree};
use drc_chase::value::Value;
use num::BigRational;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixture_text(name: &str) -> String {
    let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

pub fn schema(name: &str) -> Schema {
    load_schema(&fixture_text(name)).unwrap()
}

pub fn query(s: &Schema, name: &str) -> Query {
    parse_query(&fixture_text(name), s).unwrap()
}

pub fn diff_tree(s: &Schema, q1: &str, q2: &str) -> SyntaxTree {
    build_syntax_tree(&difference_query(&query(s, q1), &query(s, q2)).unwrap())
}

/// Every query of the fixture set: (schema file, label, tree).
pub fn fixture_trees() -> Vec<(&'static str, String, SyntaxTree)> {
    let mut out = Vec::new();
    let beers = schema("beers.toml");
    for q in ["q_a.drc", "q_b.drc", "cqneg.drc"] {
        out.push(("beers.toml", q.to_string(), build_syntax_tree(&query(&beers, q))));
    }
    out.push(("beers.toml", "q_b - q_a".into(), diff_tree(&beers, "q_b.drc", "q_a.drc")));
    out.push(("beers.toml", "q_a - q_b".into(), diff_tree(&beers, "q_a.drc", "q_b.drc")));
    let freq = schema("beers_frequents.toml");
    for q in ["q2_a.drc", "q2_b.drc"] {
        out.push(("beers_frequents.toml", q.to_string(), build_syntax_tree(&query(&freq, q))));
    }
    out.push(("beers_frequents.toml", "q2_b - q2_a".into(), diff_tree(&freq, "q2_b.drc", "q2_a.drc")));
    out.push(("beers_frequents.toml", "q2_a - q2_b".into(), diff_tree(&freq, "q2_a.drc", "q2_b.drc")));
    out
}

/// Builds c-instances from named nulls. Foreign-key targets are added
/// automatically with don't-care fills.
pub struct Builder<'a> {
    s: &'a Schema,
    pub i: CInstance,
    names: BTreeMap<String, NullId>,
}

impl<'a> Builder<'a> {
    pub fn new(s: &'a Schema) -> Builder<'a> {
        Builder { s, i: CInstance::new(s), names: BTreeMap::new() }
    }

    /// `'text` is a string constant, `*` a fresh null, anything else a named null.
    fn cell(&mut self, rel: usize, pos: usize, name: &str) -> Cell {
        if let Some(c) = name.strip_prefix('\'') {
            return Cell::Const(Value::str(c));
        }
        let d = self.s.attr_domain(rel, pos);
        if name == "*" {
            return Cell::Null(self.i.fresh_null(d));
        }
        if let Some(n) = self.names.get(name) {
            return Cell::Null(*n);
        }
        let n = self.i.fresh_null(d);
        self.names.insert(name.into(), n);
        Cell::Null(n)
    }

    fn row(&mut self, rel: &str, args: &[&str]) -> (usize, Vec<Cell>) {
        let rel = self.s.relation_id(rel).unwrap();
        let row = args.iter().enumerate().map(|(p, a)| self.cell(rel, p, a)).collect();
        (rel, row)
    }

    pub fn fact(mut self, rel: &str, args: &[&str]) -> Self {
        let (rel, row) = self.row(rel, args);
        self.i.insert_tuple(self.s, rel, row);
        self
    }

    pub fn not_fact(mut self, rel: &str, args: &[&str]) -> Self {
        let (rel, args) = self.row(rel, args);
        self.i.add_condition(self.s, Cond::NegFact { rel, args });
        self
    }

    pub fn like(mut self, null: &str, prefix: &str, negated: bool) -> Self {
        let cell = Cell::Null(self.names[null]);
        self.i.add_condition(self.s, Cond::Like { cell, prefix: prefix.into(), negated });
        self
    }

    /// `a < b` between two named nulls.
    pub fn lt(mut self, a: &str, b: &str) -> Self {
        let (lhs, rhs) = (Cell::Null(self.names[a]), Cell::Null(self.names[b]));
        self.i.add_condition(self.s, Cond::cmp(lhs, CmpOp::Lt, rhs, false));
        self
    }

    pub fn build(self) -> CInstance {
        self.i
    }
}

fn serves3(s: &Schema) -> Builder<'_> {
    Builder::new(s)
        .fact("Likes", &["d1", "b1"])
        .fact("Serves", &["x1", "b1", "p1"])
        .fact("Serves", &["x2", "b1", "p2"])
        .fact("Serves", &["x3", "b1", "p3"])
}

/// The running example's minimal instance with eight covered leaves.
pub fn reference_i0(s: &Schema) -> CInstance {
    serves3(s).like("d1", "Eve ", false).lt("p2", "p1").lt("p3", "p2").build()
}

/// The running example's instance of size 10.
pub fn reference_i1(s: &Schema) -> CInstance {
    Builder::new(s)
        .fact("Likes", &["d1", "b1"])
        .fact("Serves", &["x1", "b1", "p1"])
        .fact("Serves", &["x2", "b1", "p2"])
        .like("d1", "Eve", false)
        .like("d1", "Eve ", true)
        .lt("p2", "p1")
        .build()
}

/// The non-minimal instance covering every leaf.
pub fn reference_i2(s: &Schema) -> CInstance {
    serves3(s)
        .like("d1", "Eve", false)
        .like("d1", "Eve ", false)
        .not_fact("Likes", &["d2", "b1"])
        .like("d2", "Eve ", true)
        .lt("p2", "p1")
        .lt("p3", "p2")
        .build()
}

/// The third reference instance of the running example: every leaf covered at size 12.
pub fn reference_third(s: &Schema) -> CInstance {
    Builder::new(s)
        .fact("Likes", &["d1", "b1"])
        .fact("Serves", &["x1", "b1", "p1"])
        .fact("Serves", &["x2", "b1", "p2"])
        .like("d1", "Eve", false)
        .like("d1", "Eve ", true)
        .not_fact("Likes", &["d2", "b1"])
        .lt("p1", "p2")
        .build()
}

/// The reference instances for `q2_b - q2_a`.
pub fn reference_q2_instances(s: &Schema) -> Vec<CInstance> {
    vec![
        Builder::new(s).fact("Likes", &["d1", "b1"]).fact("Frequents", &["d1", "x1", "t1"]).build(),
        Builder::new(s)
            .fact("Likes", &["d1", "b1"])
            .fact("Serves", &["x1", "b1", "p1"])
            .fact("Frequents", &["d1", "x2", "t1"])
            .not_fact("Frequents", &["d1", "x1", "t1"])
            .build(),
        Builder::new(s).fact("Beer", &["b1", "*"]).fact("Frequents", &["d1", "x1", "*"]).build(),
        Builder::new(s)
            .fact("Likes", &["d1", "b1"])
            .fact("Serves", &["x1", "b1", "p1"])
            .fact("Frequents", &["d1", "x1", "t1"])
            .fact("Frequents", &["d1", "x2", "t1"])
            .build(),
        Builder::new(s)
            .fact("Serves", &["x1", "b1", "p1"])
            .fact("Frequents", &["d1", "x2", "t1"])
            .not_fact("Likes", &["d1", "b1"])
            .not_fact("Frequents", &["d1", "x1", "t1"])
            .build(),
        Builder::new(s)
            .fact("Drinker", &["d1", "*"])
            .fact("Likes", &["d2", "b1"])
            .fact("Serves", &["x1", "b1", "p1"])
            .fact("Frequents", &["d2", "x2", "t1"])
            .not_fact("Frequents", &["d2", "x1", "t1"])
            .not_fact("Likes", &["d1", "b1"])
            .build(),
        Builder::new(s)
            .fact("Likes", &["d1", "b1"])
            .fact("Beer", &["b2", "*"])
            .fact("Serves", &["x1", "b1", "p1"])
            .fact("Frequents", &["d1", "x1", "t1"])
            .fact("Frequents", &["d1", "x2", "t1"])
            .not_fact("Likes", &["d1", "b2"])
            .build(),
    ]
}

fn num(n: i64, d: i64) -> Value {
    Value::Num(BigRational::new(n.into(), d.into()))
}

/// A random instance over the Beers schema with at most six nulls and a
/// mix of every condition kind. Tables are filled directly, without
/// foreign-key anchors.
pub fn random_instance(s: &Schema, rng: &mut impl Rng) -> CInstance {
    let mut i = CInstance::new(s);
    let dom = |n: &str| s.domain_id(n).unwrap();
    let (drinker, beer, bar, price) = (dom("drinker"), dom("beer"), dom("bar"), dom("price"));
    let mut pool: BTreeMap<usize, Vec<Cell>> = BTreeMap::new();
    let total = rng.gen_range(1..=6);
    for _ in 0..total {
        let d = *[drinker, beer, bar, price, price].choose(rng).unwrap();
        let n = i.fresh_null(d);
        pool.entry(d).or_default().push(Cell::Null(n));
    }
    let str_consts = |d: usize| -> Vec<Cell> {
        let v: &[&str] = if d == drinker { &["Eve Edwards", "Eva", "Bob"] } else { &["Amstel", "Tadim"] };
        v.iter().map(|x| Cell::Const(Value::str(x))).collect()
    };
    let pick = |rng: &mut dyn rand::RngCore, d: usize| -> Cell {
        let nulls = pool.get(&d).cloned().unwrap_or_default();
        if !nulls.is_empty() && rng.gen_bool(0.8) {
            nulls.choose(rng).unwrap().clone()
        } else if d == price {
            Cell::Const([num(1, 1), num(2, 1), num(5, 2)].choose(rng).unwrap().clone())
        } else {
            str_consts(d).choose(rng).unwrap().clone()
        }
    };
    let likes = s.relation_id("Likes").unwrap();
    let serves = s.relation_id("Serves").unwrap();
    for _ in 0..rng.gen_range(0..=3) {
        let row = if rng.gen_bool(0.5) {
            vec![pick(rng, drinker), pick(rng, beer)]
        } else {
            vec![pick(rng, bar), pick(rng, beer), pick(rng, price)]
        };
        let rel = if row.len() == 2 { likes } else { serves };
        if !i.contains_tuple(rel, &row) {
            i.tables[rel].push(row);
        }
    }
    for _ in 0..rng.gen_range(0..=4) {
        let c = match rng.gen_range(0..4) {
            0 => {
                let op = *[CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ne].choose(rng).unwrap();
                Cond::cmp(pick(rng, price), op, pick(rng, price), false)
            }
            1 => {
                let d = *[drinker, beer, bar].choose(rng).unwrap();
                let op = *[CmpOp::Eq, CmpOp::Ne].choose(rng).unwrap();
                Cond::cmp(pick(rng, d), op, pick(rng, d), false)
            }
            2 => {
                let cell = pick(rng, drinker);
                if cell.as_null().is_none() {
                    continue;
                }
                let prefix = ["Eve", "Eve ", "Ev"].choose(rng).unwrap().to_string();
                Cond::Like { cell, prefix, negated: rng.gen_bool(0.5) }
            }
            _ => {
                if rng.gen_bool(0.5) {
                    Cond::NegFact { rel: likes, args: vec![pick(rng, drinker), pick(rng, beer)] }
                } else {
                    Cond::NegFact { rel: serves, args: vec![pick(rng, bar), pick(rng, beer), pick(rng, price)] }
                }
            }
        };
        if c.static_truth() != Some(true) && !i.condition.contains(&c) {
            i.condition.push(c);
        }
    }
    i
}

/// `i` with nulls renamed by a random permutation within each domain and
/// tuples and conditions shuffled.
pub fn random_renaming(i: &CInstance, rng: &mut impl Rng) -> CInstance {
    let mut map: BTreeMap<NullId, NullId> = BTreeMap::new();
    let nulls = i.nulls();
    for d in 0..i.registry.len() {
        let ns: Vec<NullId> = nulls.iter().filter(|n| n.domain == d).copied().collect();
        let mut ids: Vec<u32> = (1..=i.registry[d] + 3).collect();
        ids.shuffle(rng);
        for (n, id) in ns.iter().zip(ids) {
            map.insert(*n, NullId { domain: d, n: id });
        }
    }
    let mut f = |c: &Cell| match c {
        Cell::Null(n) => Cell::Null(map[n]),
        other => other.clone(),
    };
    let mut out = i.clone();
    for rows in &mut out.tables {
        *rows = rows.iter().map(|r| r.iter().map(&mut f).collect()).collect();
        rows.shuffle(rng);
    }
    out.condition = out.condition.iter().map(|c| c.map_cells(&mut f)).collect();
    out.condition.shuffle(rng);
    for (d, r) in out.registry.iter_mut().enumerate() {
        *r = map.values().filter(|n| n.domain == d).map(|n| n.n).max().unwrap_or(0).max(*r);
    }
    out
}

/// A random DRC query over the Beers schema with at most three quantifiers
/// and five atoms. May be unsafe or ill-typed; callers parse and filter.
pub fn random_query_text(rng: &mut impl Rng) -> String {
    let vars: [(&str, &str); 4] = [("d", "drinker"), ("b", "beer"), ("x", "bar"), ("p", "price")];
    let nq = rng.gen_range(1..=3);
    let mut bound: Vec<String> = Vec::new();
    let mut quants = Vec::new();
    for k in 0..nq {
        let (prefix, _) = vars[rng.gen_range(0..4)];
        let v = format!("{prefix}{}", k + 1);
        let q = if rng.gen_bool(0.65) { "exists" } else { "forall" };
        quants.push(format!("{q} {v}"));
        bound.push(v);
    }
    let free = if rng.gen_bool(0.5) { vec!["b0".to_string()] } else { Vec::new() };
    let mut all: Vec<String> = bound.clone();
    all.extend(free.iter().cloned());
    let of = |p: char, rng: &mut dyn rand::RngCore| -> String {
        let cands: Vec<&String> = all.iter().filter(|v| v.starts_with(p)).collect();
        match cands.choose(rng) {
            Some(v) => (*v).clone(),
            None => match p {
                'd' => "'Eve Edwards'".into(),
                'b' => "'Amstel'".into(),
                'x' => "'Tadim'".into(),
                _ => "2".into(),
            },
        }
    };
    let natoms = rng.gen_range(1..=5);
    let mut atoms = Vec::new();
    for _ in 0..natoms {
        let a = match rng.gen_range(0..5) {
            0 | 1 => format!("Likes({}, {})", of('d', rng), of('b', rng)),
            2 => format!("Serves({}, {}, {})", of('x', rng), of('b', rng), of('p', rng)),
            3 => format!("{} < {}", of('p', rng), if rng.gen_bool(0.5) { "3".to_string() } else { of('p', rng) }),
            _ => format!("{} LIKE '{}'", of('d', rng), ["Eve%", "Eve %", "Bob"].choose(rng).unwrap()),
        };
        atoms.push(if rng.gen_bool(0.3) { format!("not {a}") } else { a });
    }
    let mut body = atoms.pop().unwrap();
    while let Some(a) = atoms.pop() {
        let op = if rng.gen_bool(0.7) { "and" } else { "or" };
        body = format!("({a} {op} {body})");
    }
    let mut f = body;
    for q in quants.into_iter().rev() {
        f = format!("{q} ({f})");
    }
    format!("{{ ({}) | {f} }}", free.join(", "))
}

/// Small constant pools per Beers domain, shared by ground generators.
fn ground_values(s: &Schema, domain: usize) -> Vec<Value> {
    match s.domain(domain).name.as_str() {
        "drinker" => ["Eve Edwards", "Eva", "Bob"].map(Value::str).to_vec(),
        "beer" => ["Amstel", "Corona"].map(Value::str).to_vec(),
        "bar" => ["Tadim", "Joe's"].map(Value::str).to_vec(),
        "price" => vec![num(1, 1), num(2, 1), num(5, 2), num(3, 1)],
        _ => vec![Value::str("w")],
    }
}

/// A random ground instance over the Beers schema with up to three rows
/// per relation. Foreign keys and primary keys are not enforced.
pub fn random_ground(s: &Schema, rng: &mut impl Rng) -> GroundInstance {
    let mut k = GroundInstance::empty(s);
    for (rel, def) in s.relations.iter().enumerate() {
        for _ in 0..rng.gen_range(0..=3) {
            let row = def.attributes.iter().map(|a| ground_values(s, a.domain).choose(rng).unwrap().clone()).collect();
            k.tables[rel].insert(row);
        }
    }
    k
}

/// A random safe query over the Beers schema; `free` fixes whether it has
/// the output variable `b0`.
pub fn random_safe_query(s: &Schema, rng: &mut impl Rng, free: Option<bool>) -> Query {
    loop {
        let text = random_query_text(rng);
        let Ok(q) = parse_query(&text, s) else { continue };
        if free.is_some_and(|f| f != !q.output_vars.is_empty()) {
            continue;
        }
        if drc_chase::query::check_safety(&q).is_ok() {
            return q;
        }
    }
}
