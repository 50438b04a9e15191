//! Canonical keys of c-instances, invariant under renaming labeled nulls.
//!
//! Colour refinement over null occurrences, with individualization of the
//! first ambiguous colour class and the lexicographically least
//! serialization over all branches.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::cinstance::{CInstance, Cell, Cond, NullId};

type Colors = BTreeMap<NullId, usize>;

fn cell_text(c: &Cell, colors: &Colors) -> String {
    match c {
        Cell::Null(n) => format!("n{}.{}", n.domain, colors[n]),
        Cell::Const(v) => format!("k{v}"),
    }
}

fn cond_text(c: &Cond, colors: &Colors) -> String {
    match c {
        Cond::Cmp { lhs, op, rhs } => {
            let (mut a, mut b) = (cell_text(lhs, colors), cell_text(rhs, colors));
            if matches!(op, crate::cinstance::CondOp::Eq | crate::cinstance::CondOp::Ne) && b < a {
                std::mem::swap(&mut a, &mut b);
            }
            format!("C{a}{}{b}", op.symbol())
        }
        Cond::Like { cell, prefix, negated } => format!("L{}{}{prefix:?}", cell_text(cell, colors), u8::from(*negated)),
        Cond::NegFact { rel, args } => {
            let args: Vec<String> = args.iter().map(|a| cell_text(a, colors)).collect();
            format!("N{rel}({})", args.join(","))
        }
    }
}

/// One refinement pass; returns the new colouring.
fn refine_once(i: &CInstance, nulls: &[NullId], colors: &Colors) -> Colors {
    let mut sig: BTreeMap<NullId, Vec<String>> = nulls.iter().map(|n| (*n, Vec::new())).collect();
    for (rel, row) in i.tuples() {
        let body: Vec<String> = row.iter().map(|c| cell_text(c, colors)).collect();
        let body = body.join(",");
        for (pos, c) in row.iter().enumerate() {
            if let Cell::Null(n) = c {
                sig.get_mut(n).unwrap().push(format!("T{rel}@{pos}:{body}"));
            }
        }
    }
    for cond in &i.condition {
        let text = cond_text(cond, colors);
        let symmetric = matches!(cond, Cond::Cmp { op: crate::cinstance::CondOp::Eq | crate::cinstance::CondOp::Ne, .. });
        for (pos, c) in cond.cells().into_iter().enumerate() {
            if let Cell::Null(n) = c {
                let pos = if symmetric { "s".to_string() } else { pos.to_string() };
                sig.get_mut(n).unwrap().push(format!("{pos}:{text}"));
            }
        }
    }
    let keyed: BTreeMap<NullId, (usize, Vec<String>)> = sig
        .into_iter()
        .map(|(n, mut s)| {
            s.sort();
            (n, (colors[&n], s))
        })
        .collect();
    let ranks: BTreeSet<&(usize, Vec<String>)> = keyed.values().collect();
    let rank: BTreeMap<&(usize, Vec<String>), usize> = ranks.into_iter().enumerate().map(|(r, k)| (k, r)).collect();
    keyed.iter().map(|(n, k)| (*n, rank[k])).collect()
}

fn class_count(colors: &Colors) -> usize {
    colors.values().collect::<BTreeSet<_>>().len()
}

fn refine(i: &CInstance, nulls: &[NullId], mut colors: Colors) -> Colors {
    loop {
        let next = refine_once(i, nulls, &colors);
        if class_count(&next) == class_count(&colors) {
            return next;
        }
        colors = next;
    }
}

fn serialize(i: &CInstance, colors: &Colors) -> String {
    let mut out = String::new();
    for (rel, rows) in i.tables.iter().enumerate() {
        let mut rows: Vec<String> =
            rows.iter().map(|r| r.iter().map(|c| cell_text(c, colors)).collect::<Vec<_>>().join(",")).collect();
        rows.sort();
        let _ = write!(out, "R{rel}[{}]", rows.join(";"));
    }
    let mut conds: Vec<String> = i.condition.iter().map(|c| cond_text(c, colors)).collect();
    conds.sort();
    conds.dedup();
    let _ = write!(out, "|{}", conds.join(";"));
    out
}

fn search(i: &CInstance, nulls: &[NullId], colors: Colors) -> String {
    let colors = refine(i, nulls, colors);
    let mut cells: BTreeMap<usize, Vec<NullId>> = BTreeMap::new();
    for (n, c) in &colors {
        cells.entry(*c).or_default().push(*n);
    }
    let Some((_, members)) = cells.iter().find(|(_, m)| m.len() > 1) else {
        return serialize(i, &colors);
    };
    members
        .iter()
        .map(|v| {
            let split: Colors = colors.iter().map(|(n, c)| (*n, 2 * c + usize::from(n != v))).collect();
            search(i, nulls, split)
        })
        .min()
        .expect("class has members")
}

/// Key equal for two instances iff they are equal up to renaming nulls
/// within their domains.
pub fn canonical_key(i: &CInstance) -> String {
    canonical_key_pinned(i, &[])
}

/// Like [`canonical_key`], but the listed nulls keep their identity: an
/// isomorphism must map the k-th pinned null of one instance to the k-th
/// pinned null of the other.
pub fn canonical_key_pinned(i: &CInstance, pinned: &[NullId]) -> String {
    let nulls: Vec<NullId> = i.nulls().into_iter().collect();
    let mut initial: BTreeMap<(usize, usize), Vec<NullId>> = BTreeMap::new();
    for n in &nulls {
        let pin = pinned.iter().position(|p| p == n).unwrap_or(usize::MAX);
        initial.entry((n.domain, pin)).or_default().push(*n);
    }
    let colors: Colors =
        initial.values().enumerate().flat_map(|(c, ns)| ns.iter().map(move |n| (*n, c))).collect();
    let mut key = search(i, &nulls, colors);
    for (k, p) in pinned.iter().enumerate() {
        if !nulls.contains(p) {
            let _ = write!(key, "|unused{k}.{}", p.domain);
        }
    }
    key
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cinstance::tests::null;
    use crate::cinstance::CondOp;
    use crate::query::tests::beers;
    use crate::value::Value;

    fn sample(order: [u32; 3]) -> CInstance {
        let s = beers();
        let mut i = CInstance::new(&s);
        let serves = s.relation_id("Serves").unwrap();
        let bar = s.domain_id("bar").unwrap();
        let beer = s.domain_id("beer").unwrap();
        let price = s.domain_id("price").unwrap();
        i.tables[serves].push(vec![null(bar, order[0]), null(beer, 1), null(price, order[1])]);
        i.tables[serves].push(vec![null(bar, order[2]), null(beer, 1), null(price, order[2])]);
        i.condition.push(Cond::Cmp { lhs: null(price, order[2]), op: CondOp::Lt, rhs: null(price, order[1]) });
        i
    }

    #[test]
    fn renaming_invariance() {
        assert_eq!(canonical_key(&sample([1, 2, 3])), canonical_key(&sample([7, 5, 9])));
    }

    #[test]
    fn different_structure_different_key() {
        let a = sample([1, 2, 3]);
        let mut b = a.clone();
        if let Cond::Cmp { op, .. } = &mut b.condition[0] {
            *op = CondOp::Le;
        }
        assert_ne!(canonical_key(&a), canonical_key(&b));
        let mut c = a.clone();
        c.condition[0] = Cond::Cmp { lhs: null(5, 9), op: CondOp::Lt, rhs: Cell::Const(Value::int(3)) };
        assert_ne!(canonical_key(&a), canonical_key(&c));
    }

    #[test]
    fn symmetric_instances_need_branching() {
        let s = beers();
        let likes = s.relation_id("Likes").unwrap();
        let mut a = CInstance::new(&s);
        a.tables[likes].push(vec![null(0, 1), null(1, 1)]);
        a.tables[likes].push(vec![null(0, 2), null(1, 2)]);
        a.tables[likes].push(vec![null(0, 1), null(1, 2)]);
        let mut b = CInstance::new(&s);
        b.tables[likes].push(vec![null(0, 2), null(1, 1)]);
        b.tables[likes].push(vec![null(0, 1), null(1, 2)]);
        b.tables[likes].push(vec![null(0, 2), null(1, 2)]);
        assert_eq!(canonical_key(&a), canonical_key(&b));
        let mut c = CInstance::new(&s);
        c.tables[likes].push(vec![null(0, 1), null(1, 1)]);
        c.tables[likes].push(vec![null(0, 2), null(1, 2)]);
        c.tables[likes].push(vec![null(0, 2), null(1, 1)]);
        c.tables[likes][2] = vec![null(0, 3), null(1, 1)];
        assert_ne!(canonical_key(&a), canonical_key(&c));
    }

    #[test]
    fn pinning_distinguishes_roles() {
        let s = beers();
        let likes = s.relation_id("Likes").unwrap();
        let mut a = CInstance::new(&s);
        a.tables[likes].push(vec![null(0, 1), null(1, 1)]);
        a.tables[likes].push(vec![null(0, 2), null(1, 1)]);
        let d1 = NullId { domain: 0, n: 1 };
        let d2 = NullId { domain: 0, n: 2 };
        assert_eq!(canonical_key(&a), canonical_key(&a.clone()));
        assert_eq!(canonical_key_pinned(&a, &[d1]), canonical_key_pinned(&a, &[d2]));
        let mut b = a.clone();
        b.condition.push(Cond::Like { cell: null(0, 1), prefix: "Eve".into(), negated: false });
        assert_ne!(canonical_key_pinned(&b, &[d1]), canonical_key_pinned(&b, &[d2]));
    }

    #[test]
    fn empty_instance_key_is_stable() {
        let s = beers();
        assert_eq!(canonical_key(&CInstance::new(&s)), canonical_key(&CInstance::new(&s)));
    }
}
