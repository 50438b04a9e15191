//! Possible worlds of a c-instance.
//!
//! [`enumerate_worlds`] maps every null into an explicit finite pool.
//! [`for_each_adequate_world`] instead enumerates one world per
//! distinguishable configuration: for numeric domains every weak order of
//! the nulls relative to the relevant constants, for string domains every
//! choice of constant, shared fresh value or fresh value with a given
//! longest LIKE prefix.

use std::collections::{BTreeMap, BTreeSet};

use num::{BigInt, BigRational};

use crate::cinstance::{CInstance, Cell, Cond, CondOp, GroundInstance, NullId};
use crate::query::{Atom, CmpOp, Query, Term};
use crate::schema::{DomainId, DomainKind, Schema};
use crate::tree::SyntaxTree;
use crate::value::Value;

pub type NullMapping = BTreeMap<NullId, Value>;

/// Constants and LIKE prefixes a world has to distinguish, per domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorldContext {
    pub constants: Vec<BTreeSet<Value>>,
    pub prefixes: Vec<BTreeSet<String>>,
    /// Domains some query variable ranges over or some condition mentions.
    pub referenced: Vec<bool>,
}

fn cond_domain(c: &Cond) -> Option<DomainId> {
    c.cells().into_iter().find_map(|x| x.as_null()).map(|n| n.domain)
}

impl WorldContext {
    pub fn new(schema: &Schema, i: &CInstance, q: Option<&Query>) -> WorldContext {
        match q {
            Some(q) => WorldContext::build(schema, i, q.formula.atoms(), &q.var_domains),
            None => WorldContext::build(schema, i, Vec::new(), &BTreeMap::new()),
        }
    }

    pub fn for_tree(schema: &Schema, i: &CInstance, t: &SyntaxTree) -> WorldContext {
        let atoms = t.root.leaves().into_iter().map(|(a, _, _)| a).collect();
        WorldContext::build(schema, i, atoms, &t.var_domains)
    }

    fn build(
        schema: &Schema,
        i: &CInstance,
        atoms: Vec<&Atom>,
        var_domains: &BTreeMap<String, DomainId>,
    ) -> WorldContext {
        let nd = schema.domains.len();
        let mut ctx = WorldContext {
            constants: vec![BTreeSet::new(); nd],
            prefixes: vec![BTreeSet::new(); nd],
            referenced: vec![false; nd],
        };
        for (rel, row) in i.tuples() {
            for (pos, c) in row.iter().enumerate() {
                if let Cell::Const(v) = c {
                    ctx.constants[schema.attr_domain(rel, pos)].insert(v.clone());
                }
            }
        }
        for cond in &i.condition {
            match cond {
                Cond::NegFact { rel, args } => {
                    for (pos, c) in args.iter().enumerate() {
                        let d = schema.attr_domain(*rel, pos);
                        ctx.referenced[d] = true;
                        if let Cell::Const(v) = c {
                            ctx.constants[d].insert(v.clone());
                        }
                    }
                }
                Cond::Like { cell, prefix, .. } => {
                    if let Some(d) = cond_domain(cond) {
                        ctx.referenced[d] = true;
                        ctx.prefixes[d].insert(prefix.clone());
                        if let Cell::Const(v) = cell {
                            ctx.constants[d].insert(v.clone());
                        }
                    }
                }
                Cond::Cmp { lhs, rhs, .. } => {
                    if let Some(d) = cond_domain(cond) {
                        ctx.referenced[d] = true;
                        for c in [lhs, rhs] {
                            if let Cell::Const(v) = c {
                                ctx.constants[d].insert(v.clone());
                            }
                        }
                    }
                }
            }
        }
        {
            for d in var_domains.values() {
                ctx.referenced[*d] = true;
            }
            for atom in atoms {
                match atom {
                    Atom::Rel { rel, terms, .. } => {
                        for (pos, t) in terms.iter().enumerate() {
                            let d = schema.attr_domain(*rel, pos);
                            ctx.referenced[d] = true;
                            if let Term::Const(v) = t {
                                ctx.constants[d].insert(v.clone());
                            }
                        }
                    }
                    Atom::Cmp { lhs, op, rhs, .. } => {
                        let d = [lhs, rhs].iter().find_map(|t| match t {
                            Term::Var(v) => var_domains.get(v).copied(),
                            Term::Const(_) => None,
                        });
                        let Some(d) = d else { continue };
                        if *op == CmpOp::Like {
                            if let Term::Const(Value::Str(p)) = rhs {
                                match p.strip_suffix('%') {
                                    Some(prefix) => {
                                        ctx.prefixes[d].insert(prefix.to_string());
                                    }
                                    None => {
                                        ctx.constants[d].insert(Value::Str(p.clone()));
                                    }
                                }
                            }
                        } else {
                            for t in [lhs, rhs] {
                                if let Term::Const(v) = t {
                                    ctx.constants[d].insert(v.clone());
                                }
                            }
                        }
                    }
                }
            }
        }
        ctx
    }
}

/// Whether `mu` satisfies the condition in the world `k = mu(i)`.
pub fn cond_holds(c: &Cond, mu: &NullMapping, k: &GroundInstance) -> bool {
    let val = |x: &Cell| -> Value {
        match x {
            Cell::Const(v) => v.clone(),
            Cell::Null(n) => mu[n].clone(),
        }
    };
    match c {
        Cond::Cmp { lhs, op, rhs } => op.holds(&val(lhs), &val(rhs)),
        Cond::Like { cell, prefix, negated } => match val(cell) {
            Value::Str(s) => s.starts_with(prefix.as_str()) != *negated,
            Value::Num(_) => false,
        },
        Cond::NegFact { rel, args } => {
            let row: Vec<Value> = args.iter().map(val).collect();
            !k.contains(*rel, &row)
        }
    }
}

/// The ground instance `mu(i)`. Its quantification domain is the image of
/// every cell of `i`, including those only in the condition.
pub fn apply_mapping(schema: &Schema, i: &CInstance, mu: &NullMapping) -> GroundInstance {
    let val = |c: &Cell| match c {
        Cell::Const(v) => v.clone(),
        Cell::Null(n) => mu[n].clone(),
    };
    GroundInstance {
        tables: i.tables.iter().map(|rows| rows.iter().map(|r| r.iter().map(val).collect()).collect()).collect(),
        extra: (0..schema.domains.len()).map(|d| i.chase_domain(schema, d).iter().map(val).collect()).collect(),
    }
}

/// No two tuples of a relation agree on its primary key.
pub fn respects_keys(schema: &Schema, k: &GroundInstance) -> bool {
    k.tables.iter().enumerate().all(|(rel, rows)| {
        let key = &schema.relation(rel).key;
        if key.is_empty() {
            return true;
        }
        let mut seen = BTreeSet::new();
        rows.iter().all(|r| seen.insert(key.iter().map(|&p| &r[p]).collect::<Vec<_>>()))
    })
}

fn world_if_valid(schema: &Schema, i: &CInstance, mu: &NullMapping) -> Option<GroundInstance> {
    let k = apply_mapping(schema, i, mu);
    (i.condition.iter().all(|c| cond_holds(c, mu, &k)) && respects_keys(schema, &k)).then_some(k)
}

/// Every world `mu(i)` for total maps `mu` into `pool` (indexed by domain)
/// with the condition and the primary keys true, without duplicates.
pub fn enumerate_worlds(schema: &Schema, i: &CInstance, pool: &[Vec<Value>]) -> Vec<GroundInstance> {
    let nulls: Vec<NullId> = i.nulls().into_iter().collect();
    let local: Vec<&Cond> = i.condition.iter().filter(|c| !matches!(c, Cond::NegFact { .. })).collect();
    let mut out = BTreeSet::new();
    let mut mu = NullMapping::new();
    fn rec(
        schema: &Schema,
        i: &CInstance,
        pool: &[Vec<Value>],
        nulls: &[NullId],
        local: &[&Cond],
        mu: &mut NullMapping,
        out: &mut BTreeSet<GroundInstance>,
    ) {
        let Some((&n, rest)) = nulls.split_first() else {
            if let Some(k) = world_if_valid(schema, i, mu) {
                out.insert(k);
            }
            return;
        };
        for v in &pool[n.domain] {
            mu.insert(n, v.clone());
            let ok = local.iter().all(|c| {
                let ready = c.cells().iter().all(|x| x.as_null().is_none_or(|m| mu.contains_key(&m)));
                !ready || cond_holds(c, mu, &GroundInstance { tables: Vec::new(), extra: Vec::new() })
            });
            if ok {
                rec(schema, i, pool, rest, local, mu, out);
            }
        }
        mu.remove(&n);
    }
    rec(schema, i, pool, &nulls, &local, &mut mu, &mut out);
    out.into_iter().collect()
}

fn fresh_numbers(kind: DomainKind, consts: &BTreeSet<Value>, m: usize) -> Vec<Value> {
    let cs: Vec<BigRational> = consts.iter().filter_map(|v| v.as_num().cloned()).collect();
    let one = BigRational::from_integer(BigInt::from(1));
    let mut out = Vec::new();
    if cs.is_empty() {
        return (1..=m as i64).map(Value::int).collect();
    }
    for j in 1..=m {
        out.push(Value::Num(&cs[0] - &one * BigRational::from_integer(BigInt::from(j))));
        out.push(Value::Num(&cs[cs.len() - 1] + &one * BigRational::from_integer(BigInt::from(j))));
    }
    for w in cs.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if kind == DomainKind::Integer {
            let mut x: BigInt = a.floor().to_integer() + BigInt::from(1);
            let mut k = 0;
            while BigRational::from_integer(x.clone()) < *b && k < m {
                out.push(Value::Num(BigRational::from_integer(x.clone())));
                x += 1;
                k += 1;
            }
        } else {
            for j in 1..=m {
                let t = BigRational::new(BigInt::from(j), BigInt::from(m + 1));
                out.push(Value::Num(a + (b - a) * t));
            }
        }
    }
    out
}

fn witness_string(t: &str, prefixes: &BTreeSet<String>, consts: &BTreeSet<Value>, counter: &mut usize) -> String {
    let blocked: BTreeSet<char> = prefixes
        .iter()
        .filter(|p| p.len() > t.len() && p.starts_with(t))
        .filter_map(|p| p[t.len()..].chars().next())
        .collect();
    let c = ['~', '_', 'z', 'q', 'x', '0'].into_iter().find(|c| !blocked.contains(c)).expect("finitely many blocked");
    loop {
        *counter += 1;
        let s = format!("{t}{c}{counter}");
        if !consts.contains(&Value::Str(s.clone())) {
            return s;
        }
    }
}

/// A finite pool realizing every order type and prefix type: the context
/// constants plus, per gap or prefix type, one fresh value per null + 1.
pub fn adequate_pool(schema: &Schema, i: &CInstance, ctx: &WorldContext) -> Vec<Vec<Value>> {
    let nulls = i.nulls();
    (0..schema.domains.len())
        .map(|d| {
            let m = nulls.iter().filter(|n| n.domain == d).count() + 1;
            let consts = &ctx.constants[d];
            let mut vals: BTreeSet<Value> = consts.clone();
            let kind = schema.domain(d).kind;
            if kind.is_numeric() {
                vals.extend(fresh_numbers(kind, consts, m));
            } else {
                let mut counter = 0;
                let types = std::iter::once(String::new()).chain(ctx.prefixes[d].iter().cloned());
                for t in types {
                    for _ in 0..m {
                        vals.insert(Value::Str(witness_string(&t, &ctx.prefixes[d], consts, &mut counter)));
                    }
                }
            }
            vals.into_iter().collect()
        })
        .collect()
}

#[derive(Clone, Debug)]
enum NumSlot {
    Const(usize),
    Block,
}

fn local_conds(i: &CInstance, d: DomainId) -> Vec<&Cond> {
    i.condition.iter().filter(|c| !matches!(c, Cond::NegFact { .. }) && cond_domain(c) == Some(d)).collect()
}

/// All weak orders of `nulls` relative to `consts`, realized as values.
fn numeric_assignments(kind: DomainKind, nulls: &[NullId], consts: &BTreeSet<Value>, conds: &[&Cond]) -> Vec<NullMapping> {
    let cs: Vec<BigRational> = consts.iter().filter_map(|v| v.as_num().cloned()).collect();
    let mut slots: Vec<(NumSlot, Vec<NullId>)> = (0..cs.len()).map(|j| (NumSlot::Const(j), Vec::new())).collect();
    let mut out = Vec::new();

    fn position(slots: &[(NumSlot, Vec<NullId>)], cs: &[BigRational], c: &Cell) -> Option<usize> {
        match c {
            Cell::Null(n) => slots.iter().position(|(_, m)| m.contains(n)),
            Cell::Const(Value::Num(v)) => {
                let j = cs.iter().position(|x| x == v)?;
                slots.iter().position(|(s, _)| matches!(s, NumSlot::Const(k) if *k == j))
            }
            Cell::Const(_) => None,
        }
    }

    fn consistent(slots: &[(NumSlot, Vec<NullId>)], cs: &[BigRational], conds: &[&Cond]) -> bool {
        conds.iter().all(|c| match c {
            Cond::Cmp { lhs, op, rhs } => match (position(slots, cs, lhs), position(slots, cs, rhs)) {
                (Some(a), Some(b)) => match op {
                    CondOp::Eq => a == b,
                    CondOp::Ne => a != b,
                    CondOp::Lt => a < b,
                    CondOp::Le => a <= b,
                },
                _ => true,
            },
            _ => true,
        })
    }

    fn realize(kind: DomainKind, slots: &[(NumSlot, Vec<NullId>)], cs: &[BigRational]) -> Option<NullMapping> {
        let mut mu = NullMapping::new();
        let const_pos: Vec<usize> =
            slots.iter().enumerate().filter(|(_, (s, _))| matches!(s, NumSlot::Const(_))).map(|(p, _)| p).collect();
        let mut p = 0;
        while p < slots.len() {
            if matches!(slots[p].0, NumSlot::Const(_)) {
                p += 1;
                continue;
            }
            let start = p;
            while p < slots.len() && matches!(slots[p].0, NumSlot::Block) {
                p += 1;
            }
            let k = p - start;
            let before = const_pos.iter().rev().find(|&&c| c < start).map(|&c| match slots[c].0 {
                NumSlot::Const(j) => cs[j].clone(),
                NumSlot::Block => unreachable!(),
            });
            let after = const_pos.iter().find(|&&c| c >= p).map(|&c| match slots[c].0 {
                NumSlot::Const(j) => cs[j].clone(),
                NumSlot::Block => unreachable!(),
            });
            let int = |x: i64| BigRational::from_integer(BigInt::from(x));
            for j in 0..k {
                let v = match (&before, &after) {
                    (None, None) => int(j as i64 + 1),
                    (Some(a), None) => a.floor() + int(j as i64 + 1),
                    (None, Some(b)) => b.ceil() - int((k - j) as i64),
                    (Some(a), Some(b)) => {
                        if kind == DomainKind::Integer {
                            let v = a.floor() + int(j as i64 + 1);
                            if v >= *b {
                                return None;
                            }
                            v
                        } else {
                            a + (b - a) * BigRational::new(BigInt::from(j + 1), BigInt::from(k + 1))
                        }
                    }
                };
                for n in &slots[start + j].1 {
                    mu.insert(*n, Value::Num(v.clone()));
                }
            }
        }
        for (s, members) in slots {
            if let NumSlot::Const(j) = s {
                for n in members {
                    mu.insert(*n, Value::Num(cs[*j].clone()));
                }
            }
        }
        Some(mu)
    }

    fn rec(
        kind: DomainKind,
        nulls: &[NullId],
        cs: &[BigRational],
        conds: &[&Cond],
        slots: &mut Vec<(NumSlot, Vec<NullId>)>,
        out: &mut Vec<NullMapping>,
    ) {
        let Some((&n, rest)) = nulls.split_first() else {
            if let Some(mu) = realize(kind, slots, cs) {
                out.push(mu);
            }
            return;
        };
        for p in 0..slots.len() {
            slots[p].1.push(n);
            if consistent(slots, cs, conds) {
                rec(kind, rest, cs, conds, slots, out);
            }
            slots[p].1.pop();
        }
        for p in 0..=slots.len() {
            slots.insert(p, (NumSlot::Block, vec![n]));
            if consistent(slots, cs, conds) {
                rec(kind, rest, cs, conds, slots, out);
            }
            slots.remove(p);
        }
    }
    rec(kind, nulls, &cs, conds, &mut slots, &mut out);
    out
}

#[derive(Clone, Debug)]
enum StrGroup {
    Const(String),
    /// A fresh value whose longest matched prefix is the given one.
    Fresh(String),
}

fn string_assignments(
    nulls: &[NullId],
    consts: &BTreeSet<Value>,
    prefixes: &BTreeSet<String>,
    conds: &[&Cond],
) -> Vec<NullMapping> {
    let cs: Vec<String> = consts.iter().filter_map(|v| v.as_str().map(str::to_string)).collect();
    let types: Vec<String> = std::iter::once(String::new()).chain(prefixes.iter().cloned()).collect();
    let mut groups: Vec<(StrGroup, Vec<NullId>)> = Vec::new();
    let mut out = Vec::new();

    fn group_of(groups: &[(StrGroup, Vec<NullId>)], c: &Cell) -> Option<Result<usize, String>> {
        match c {
            Cell::Null(n) => groups.iter().position(|(_, m)| m.contains(n)).map(Ok),
            Cell::Const(Value::Str(s)) => Some(Err(s.clone())),
            Cell::Const(_) => None,
        }
    }

    fn same(groups: &[(StrGroup, Vec<NullId>)], a: &Result<usize, String>, b: &Result<usize, String>) -> bool {
        let text = |x: &Result<usize, String>| match x {
            Ok(g) => match &groups[*g].0 {
                StrGroup::Const(s) => Ok(s.clone()),
                StrGroup::Fresh(_) => Err(*g),
            },
            Err(s) => Ok(s.clone()),
        };
        text(a) == text(b)
    }

    fn consistent(groups: &[(StrGroup, Vec<NullId>)], conds: &[&Cond]) -> bool {
        conds.iter().all(|c| match c {
            Cond::Cmp { lhs, op, rhs } => match (group_of(groups, lhs), group_of(groups, rhs)) {
                (Some(a), Some(b)) => match op {
                    CondOp::Eq => same(groups, &a, &b),
                    CondOp::Ne => !same(groups, &a, &b),
                    _ => true,
                },
                _ => true,
            },
            Cond::Like { cell, prefix, negated } => match group_of(groups, cell) {
                Some(Ok(g)) => {
                    let matched = match &groups[g].0 {
                        StrGroup::Const(s) => s.starts_with(prefix.as_str()),
                        StrGroup::Fresh(t) => t.starts_with(prefix.as_str()),
                    };
                    matched != *negated
                }
                Some(Err(s)) => s.starts_with(prefix.as_str()) != *negated,
                None => true,
            },
            Cond::NegFact { .. } => true,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn rec(
        nulls: &[NullId],
        cs: &[String],
        types: &[String],
        prefixes: &BTreeSet<String>,
        consts: &BTreeSet<Value>,
        conds: &[&Cond],
        groups: &mut Vec<(StrGroup, Vec<NullId>)>,
        out: &mut Vec<NullMapping>,
    ) {
        let Some((&n, rest)) = nulls.split_first() else {
            let mut mu = NullMapping::new();
            let mut counter = 0;
            for (g, members) in groups.iter() {
                let v = match g {
                    StrGroup::Const(s) => s.clone(),
                    StrGroup::Fresh(t) => witness_string(t, prefixes, consts, &mut counter),
                };
                for m in members {
                    mu.insert(*m, Value::Str(v.clone()));
                }
            }
            out.push(mu);
            return;
        };
        let try_with = |groups: &mut Vec<(StrGroup, Vec<NullId>)>, out: &mut Vec<NullMapping>| {
            if consistent(groups, conds) {
                rec(rest, cs, types, prefixes, consts, conds, groups, out);
            }
        };
        for g in 0..groups.len() {
            groups[g].1.push(n);
            try_with(groups, out);
            groups[g].1.pop();
        }
        for c in cs {
            if groups.iter().any(|(g, _)| matches!(g, StrGroup::Const(s) if s == c)) {
                continue;
            }
            groups.push((StrGroup::Const(c.clone()), vec![n]));
            try_with(groups, out);
            groups.pop();
        }
        for t in types {
            groups.push((StrGroup::Fresh(t.clone()), vec![n]));
            try_with(groups, out);
            groups.pop();
        }
    }
    rec(nulls, &cs, &types, prefixes, consts, conds, &mut groups, &mut out);
    out
}

/// Distinct fresh values for domains the query cannot observe.
fn distinct_assignment(kind: DomainKind, nulls: &[NullId], consts: &BTreeSet<Value>) -> NullMapping {
    let mut mu = NullMapping::new();
    if kind.is_numeric() {
        let top = consts.iter().filter_map(|v| v.as_num()).max().map(|m| m.floor().to_integer()).unwrap_or_default();
        for (j, n) in nulls.iter().enumerate() {
            mu.insert(*n, Value::Num(BigRational::from_integer(&top + BigInt::from(j + 1))));
        }
    } else {
        let mut counter = 0;
        for n in nulls {
            mu.insert(*n, Value::Str(witness_string("", &BTreeSet::new(), consts, &mut counter)));
        }
    }
    mu
}

/// Calls `f` on each world of one representative per configuration, in a
/// deterministic order and without duplicates. Stops early when `f`
/// returns `false`. Returns the number of worlds visited.
pub fn for_each_adequate_world(
    schema: &Schema,
    i: &CInstance,
    ctx: &WorldContext,
    mut f: impl FnMut(&GroundInstance) -> bool,
) -> usize {
    let nulls = i.nulls();
    let mut per_domain: Vec<Vec<NullMapping>> = Vec::new();
    for d in 0..schema.domains.len() {
        let ns: Vec<NullId> = nulls.iter().filter(|n| n.domain == d).copied().collect();
        if ns.is_empty() {
            continue;
        }
        let kind = schema.domain(d).kind;
        let choices = if !ctx.referenced[d] {
            vec![distinct_assignment(kind, &ns, &ctx.constants[d])]
        } else if kind.is_numeric() {
            numeric_assignments(kind, &ns, &ctx.constants[d], &local_conds(i, d))
        } else {
            string_assignments(&ns, &ctx.constants[d], &ctx.prefixes[d], &local_conds(i, d))
        };
        if choices.is_empty() {
            return 0;
        }
        per_domain.push(choices);
    }
    let mut seen: BTreeSet<GroundInstance> = BTreeSet::new();
    let mut idx = vec![0usize; per_domain.len()];
    let mut visited = 0;
    loop {
        let mut mu = NullMapping::new();
        for (d, &j) in idx.iter().enumerate() {
            mu.extend(per_domain[d][j].iter().map(|(k, v)| (*k, v.clone())));
        }
        if let Some(k) = world_if_valid(schema, i, &mu) {
            if seen.insert(k.clone()) {
                visited += 1;
                if !f(&k) {
                    return visited;
                }
            }
        }
        let mut d = 0;
        loop {
            if d == idx.len() {
                return visited;
            }
            idx[d] += 1;
            if idx[d] < per_domain[d].len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// One satisfying null mapping, if the instance is consistent.
pub fn witness(schema: &Schema, i: &CInstance) -> Option<NullMapping> {
    let ctx = WorldContext::new(schema, i, None);
    let all_referenced = WorldContext { referenced: vec![true; schema.domains.len()], ..ctx };
    let nulls = i.nulls();
    let mut per_domain: Vec<Vec<NullMapping>> = Vec::new();
    for d in 0..schema.domains.len() {
        let ns: Vec<NullId> = nulls.iter().filter(|n| n.domain == d).copied().collect();
        if ns.is_empty() {
            continue;
        }
        let kind = schema.domain(d).kind;
        let conds = local_conds(i, d);
        per_domain.push(if kind.is_numeric() {
            numeric_assignments(kind, &ns, &all_referenced.constants[d], &conds)
        } else {
            string_assignments(&ns, &all_referenced.constants[d], &all_referenced.prefixes[d], &conds)
        });
    }
    let mut found = None;
    let mut idx = vec![0usize; per_domain.len()];
    if per_domain.iter().any(Vec::is_empty) {
        return None;
    }
    loop {
        let mut mu = NullMapping::new();
        for (d, &j) in idx.iter().enumerate() {
            mu.extend(per_domain[d][j].iter().map(|(k, v)| (*k, v.clone())));
        }
        if world_if_valid(schema, i, &mu).is_some() {
            found = Some(mu);
            break;
        }
        let mut d = 0;
        loop {
            if d == idx.len() {
                return found;
            }
            idx[d] += 1;
            if idx[d] < per_domain[d].len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
    found
}
