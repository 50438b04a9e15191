//! Randomized invariants over generated queries, ground instances and
//! c-instances. Each case draws a seed and builds its inputs from it.

mod common;

use std::collections::BTreeSet;

use common::*;
use drc_chase::canon::canonical_key;
use drc_chase::chase::{chase, ChaseConfig, Variant};
use drc_chase::cinstance::{CInstance, Cell, Cond, CondOp, GroundInstance};
use drc_chase::eval::{cov_cinstance, cov_ground, cov_tree, eval_ground, eval_tree};
use drc_chase::query::{difference_query, normalize_query, parse_query, Atom, Formula, Query};
use drc_chase::schema::Schema;
use drc_chase::solver::is_consistent;
use drc_chase::tree::{build_syntax_tree, disjtree_to_conjtrees, expand_disjunction, negate_tree, Node, SyntaxTree};
use drc_chase::value::Value;
use drc_chase::worlds::{adequate_pool, enumerate_worlds, witness, NullMapping, WorldContext};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Candidate maps above which a world enumeration is skipped.
const WORLD_CAP: f64 = 20_000.0;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn beers() -> Schema {
    schema("beers.toml")
}

fn leaf_ids(n: &Node) -> Vec<usize> {
    let mut ids: Vec<usize> = n.leaves().into_iter().map(|(_, id, _)| id).collect();
    ids.sort();
    ids
}

fn first_or(n: &Node) -> Option<&Node> {
    match n {
        Node::Leaf { .. } => None,
        Node::Conn { kind: drc_chase::tree::ConnKind::Or, .. } => Some(n),
        Node::Conn { left, right, .. } => first_or(left).or_else(|| first_or(right)),
        Node::Quant { child, .. } => first_or(child),
    }
}

/// `{ (b0) | (f1) or (f2) }` from two random queries with output `b0`.
fn or_rooted(s: &Schema, r: &mut ChaCha8Rng) -> SyntaxTree {
    loop {
        let body = |r: &mut ChaCha8Rng| {
            let text = random_query_text(r);
            text.split_once(" | ").map(|(_, b)| b.trim_end_matches(" }").to_string()).unwrap()
        };
        let text = format!("{{ (b0) | ({}) or ({}) }}", body(r), body(r));
        if let Ok(q) = parse_query(&text, s) {
            return build_syntax_tree(&normalize_query(&q));
        }
    }
}

fn worlds(s: &Schema, t: Option<&SyntaxTree>, i: &CInstance) -> Option<Vec<GroundInstance>> {
    let ctx = match t {
        Some(t) => WorldContext::for_tree(s, i, t),
        None => WorldContext::new(s, i, None),
    };
    let pool = adequate_pool(s, i, &ctx);
    let estimate: f64 = i.nulls().iter().map(|n| pool[n.domain].len() as f64).product();
    (estimate <= WORLD_CAP).then(|| enumerate_worlds(s, i, &pool))
}

fn image(c: &Cell, mu: &NullMapping) -> Value {
    match c {
        Cell::Const(v) => v.clone(),
        Cell::Null(n) => mu[n].clone(),
    }
}

/// Evaluates the global condition of `i` under `mu` without the library's
/// world machinery.
fn condition_holds(s: &Schema, i: &CInstance, mu: &NullMapping) -> bool {
    let tables: Vec<BTreeSet<Vec<Value>>> =
        i.tables.iter().map(|rows| rows.iter().map(|r| r.iter().map(|c| image(c, mu)).collect()).collect()).collect();
    let keys_hold = tables.iter().enumerate().all(|(rel, rows)| {
        let key = &s.relation(rel).key;
        key.is_empty() || {
            let projected: BTreeSet<Vec<&Value>> = rows.iter().map(|r| key.iter().map(|&p| &r[p]).collect()).collect();
            projected.len() == rows.len()
        }
    });
    keys_hold
        && i.condition.iter().all(|c| match c {
            Cond::Cmp { lhs, op, rhs } => {
                let (a, b) = (image(lhs, mu), image(rhs, mu));
                match op {
                    CondOp::Eq => a == b,
                    CondOp::Ne => a != b,
                    CondOp::Lt => a.as_num().unwrap() < b.as_num().unwrap(),
                    CondOp::Le => a.as_num().unwrap() <= b.as_num().unwrap(),
                }
            }
            Cond::Like { cell, prefix, negated } => image(cell, mu).as_str().unwrap().starts_with(prefix.as_str()) != *negated,
            Cond::NegFact { rel, args } => !tables[*rel].contains(&args.iter().map(|c| image(c, mu)).collect::<Vec<_>>()),
        })
}

/// No universal quantifier and no negated relational atom after
/// normalization.
fn monotone(q: &Query) -> bool {
    fn rec(f: &Formula) -> bool {
        match f {
            Formula::Atom(Atom::Rel { negated, .. }) => !negated,
            Formula::Atom(_) => true,
            Formula::And(l, r) | Formula::Or(l, r) => rec(l) && rec(r),
            Formula::Exists(_, c) => rec(c),
            Formula::Not(_) | Formula::Forall(..) => false,
        }
    }
    rec(&normalize_query(q).formula)
}

fn has_forall(q: &Query) -> bool {
    fn rec(f: &Formula) -> bool {
        match f {
            Formula::Atom(_) => false,
            Formula::And(l, r) | Formula::Or(l, r) => rec(l) || rec(r),
            Formula::Exists(_, c) | Formula::Not(c) => rec(c),
            Formula::Forall(..) => true,
        }
    }
    rec(&normalize_query(q).formula)
}

fn small_chase(s: &Schema, q: &Query) -> (SyntaxTree, Vec<CInstance>) {
    let t = build_syntax_tree(q);
    let cfg = ChaseConfig { variant: Variant::DisjNaive, limit: ChaseConfig::default_limit(&t).min(5), timeout: None };
    let r = chase(s, &t, &cfg).unwrap();
    let out = r.solution.into_iter().map(|(i, _)| i).collect();
    (t, out)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn normalization_preserves_answers(seed in any::<u64>()) {
        let s = beers();
        let mut r = rng(seed);
        let q = random_safe_query(&s, &mut r, None);
        let n = normalize_query(&q);
        prop_assert_eq!(normalize_query(&n), n.clone());
        for _ in 0..4 {
            let k = random_ground(&s, &mut r);
            prop_assert_eq!(eval_ground(&s, &q, &k), eval_ground(&s, &n, &k));
        }
    }

    #[test]
    fn difference_is_set_difference(seed in any::<u64>()) {
        let s = beers();
        let mut r = rng(seed);
        let free = r.gen_bool(0.5);
        let q1 = random_safe_query(&s, &mut r, Some(free));
        let q2 = random_safe_query(&s, &mut r, Some(free));
        let d = difference_query(&q1, &q2).unwrap();
        for _ in 0..4 {
            let k = random_ground(&s, &mut r);
            let expected: BTreeSet<_> = eval_ground(&s, &q1, &k).difference(&eval_ground(&s, &q2, &k)).cloned().collect();
            prop_assert_eq!(eval_ground(&s, &d, &k), expected);
        }
    }

    #[test]
    fn disjunction_cases_partition_models(seed in any::<u64>()) {
        let s = beers();
        let mut r = rng(seed);
        let t = or_rooted(&s, &mut r);
        let cases = expand_disjunction(&t.root).unwrap();
        for c in &cases {
            prop_assert_eq!(leaf_ids(c), leaf_ids(&t.root));
        }
        for _ in 0..4 {
            let k = random_ground(&s, &mut r);
            let whole = eval_tree(&s, &t, &k);
            let parts: Vec<_> = cases.iter().map(|c| eval_tree(&s, &t.with_root(c.clone()), &k)).collect();
            let union: BTreeSet<_> = parts.iter().flatten().cloned().collect();
            prop_assert_eq!(&union, &whole);
            for row in &whole {
                prop_assert_eq!(parts.iter().filter(|p| p.contains(row)).count(), 1);
            }
        }
    }

    #[test]
    fn conjunctive_trees_imply_their_source(seed in any::<u64>()) {
        let s = beers();
        let mut r = rng(seed);
        let q = normalize_query(&random_safe_query(&s, &mut r, None));
        let t = build_syntax_tree(&q);
        let conj = disjtree_to_conjtrees(&t.root);
        for c in &conj {
            prop_assert_eq!(leaf_ids(c), leaf_ids(&t.root));
        }
        prop_assert_eq!(leaf_ids(&negate_tree(&t.root)), leaf_ids(&t.root));
        if let Some(or) = first_or(&t.root) {
            for c in expand_disjunction(or).unwrap() {
                prop_assert_eq!(leaf_ids(&c), leaf_ids(or));
            }
        }
        for _ in 0..4 {
            let k = random_ground(&s, &mut r);
            let whole = eval_tree(&s, &t, &k);
            for c in &conj {
                prop_assert!(eval_tree(&s, &t.with_root(c.clone()), &k).is_subset(&whole));
            }
        }
    }

    #[test]
    fn coverage_is_empty_without_answers(seed in any::<u64>()) {
        let s = beers();
        let mut r = rng(seed);
        let q = random_safe_query(&s, &mut r, None);
        let k = random_ground(&s, &mut r);
        let (cov, answers) = (cov_ground(&s, &q, &k), eval_ground(&s, &q, &k));
        if answers.is_empty() {
            prop_assert!(cov.is_empty());
        }
        // A universal quantifier over an empty domain holds without a true leaf.
        if !has_forall(&q) {
            prop_assert_eq!(cov.is_empty(), answers.is_empty());
        }
    }

    #[test]
    fn positive_existential_queries_are_monotone(seed in any::<u64>()) {
        let s = beers();
        let mut r = rng(seed);
        let q = random_safe_query(&s, &mut r, None);
        prop_assume!(monotone(&q));
        let k = random_ground(&s, &mut r);
        let mut bigger = k.clone();
        let extra = random_ground(&s, &mut r);
        for (rel, rows) in extra.tables.iter().enumerate() {
            bigger.tables[rel].extend(rows.iter().take(1).cloned());
        }
        prop_assert!(eval_ground(&s, &q, &k).is_subset(&eval_ground(&s, &q, &bigger)));
    }

    #[test]
    fn canonical_key_ignores_renaming(seed in any::<u64>()) {
        let s = beers();
        let mut r = rng(seed);
        let i = random_instance(&s, &mut r);
        prop_assert_eq!(canonical_key(&i), canonical_key(&random_renaming(&i, &mut r)));
        let mut grown = i.clone();
        let likes = s.relation_id("Likes").unwrap();
        let row = vec![Cell::Null(grown.fresh_null(s.domain_id("drinker").unwrap())), Cell::Const(Value::str("Amstel"))];
        grown.tables[likes].push(row);
        prop_assert_ne!(canonical_key(&i), canonical_key(&grown));
    }

    #[test]
    fn solver_agrees_with_worlds(seed in any::<u64>()) {
        let s = beers();
        let mut r = rng(seed);
        let i = random_instance(&s, &mut r);
        let consistent = is_consistent(&s, &i);
        if let Some(ws) = worlds(&s, None, &i) {
            prop_assert_eq!(consistent, !ws.is_empty());
        }
        match witness(&s, &i) {
            Some(mu) => prop_assert!(consistent && condition_holds(&s, &i, &mu)),
            None => prop_assert!(!consistent),
        }
        if !i.condition.is_empty() {
            let mut weaker = i.clone();
            weaker.condition.remove(r.gen_range(0..i.condition.len()));
            prop_assert!(consistent <= is_consistent(&s, &weaker));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chase_output_is_sound_and_stable(seed in any::<u64>()) {
        let s = beers();
        let mut r = rng(seed);
        let q = random_safe_query(&s, &mut r, None);
        let (t, first) = small_chase(&s, &q);
        let (_, second) = small_chase(&s, &q);
        prop_assert_eq!(format!("{first:?}"), format!("{second:?}"));
        for i in &first {
            for fk in &s.foreign_keys {
                for row in &i.tables[fk.from_relation] {
                    let v = &row[fk.from_attribute];
                    prop_assert!(i.tables[fk.to_relation].iter().any(|t| &t[fk.to_attribute] == v));
                }
            }
            let cov = cov_cinstance(&s, &t, i).unwrap();
            if let Some(ws) = worlds(&s, Some(&t), i) {
                prop_assert!(!ws.is_empty());
                for k in &ws {
                    prop_assert!(!eval_tree(&s, &t, k).is_empty());
                    prop_assert!(cov.is_subset(&cov_tree(&s, &t, k)));
                }
            }
        }
    }
}
