//! Syntax trees with stable leaf ids and the rewrites the chase relies on.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::query::{normalize_query, Atom, Formula, Query};
use crate::schema::DomainId;

pub type LeafId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QuantKind {
    Exists,
    Forall,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConnKind {
    And,
    Or,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    /// `flipped` marks a leaf whose atom is the negation of the original
    /// query leaf with the same id.
    Leaf { id: LeafId, atom: Atom, flipped: bool },
    Quant { kind: QuantKind, var: String, child: Box<Node> },
    Conn { kind: ConnKind, left: Box<Node>, right: Box<Node> },
}

impl Node {
    pub fn and(left: Node, right: Node) -> Node {
        Node::Conn { kind: ConnKind::And, left: Box::new(left), right: Box::new(right) }
    }

    pub fn leaves(&self) -> Vec<(&Atom, LeafId, bool)> {
        let mut out = Vec::new();
        fn walk<'a>(n: &'a Node, out: &mut Vec<(&'a Atom, LeafId, bool)>) {
            match n {
                Node::Leaf { id, atom, flipped } => out.push((atom, *id, *flipped)),
                Node::Quant { child, .. } => walk(child, out),
                Node::Conn { left, right, .. } => {
                    walk(left, out);
                    walk(right, out);
                }
            }
        }
        walk(self, &mut out);
        out
    }

    pub fn has_quantifier(&self) -> bool {
        match self {
            Node::Leaf { .. } => false,
            Node::Quant { .. } => true,
            Node::Conn { left, right, .. } => left.has_quantifier() || right.has_quantifier(),
        }
    }

    pub fn has_disjunction(&self) -> bool {
        match self {
            Node::Leaf { .. } => false,
            Node::Quant { child, .. } => child.has_disjunction(),
            Node::Conn { kind, left, right } => {
                *kind == ConnKind::Or || left.has_disjunction() || right.has_disjunction()
            }
        }
    }

    /// Free variables of the subtree in first-occurrence order.
    pub fn free_vars(&self) -> Vec<String> {
        fn walk(n: &Node, bound: &mut Vec<String>, out: &mut Vec<String>) {
            match n {
                Node::Leaf { atom, .. } => {
                    for v in atom.vars() {
                        if !bound.iter().any(|b| b == v) && !out.iter().any(|o| o == v) {
                            out.push(v.to_string());
                        }
                    }
                }
                Node::Quant { var, child, .. } => {
                    bound.push(var.clone());
                    walk(child, bound, out);
                    bound.pop();
                }
                Node::Conn { left, right, .. } => {
                    walk(left, bound, out);
                    walk(right, bound, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut Vec::new(), &mut out);
        out
    }
}

/// A syntax tree plus the typing needed to chase it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyntaxTree {
    pub root: Node,
    pub leaf_count: usize,
    pub output_vars: Vec<String>,
    pub var_domains: BTreeMap<String, DomainId>,
}

impl SyntaxTree {
    pub fn with_root(&self, root: Node) -> SyntaxTree {
        SyntaxTree {
            root,
            leaf_count: self.leaf_count,
            output_vars: self.output_vars.clone(),
            var_domains: self.var_domains.clone(),
        }
    }

    /// Atom text of each original leaf, indexed by leaf id.
    pub fn leaf_legend(&self) -> Vec<String> {
        let mut legend = vec![String::new(); self.leaf_count];
        for (atom, id, flipped) in self.root.leaves() {
            if id < legend.len() {
                let a = if flipped { atom.with_negation_flipped() } else { atom.clone() };
                legend[id] = a.to_string();
            }
        }
        legend
    }
}

/// A quantifier-free conjunction; each literal keeps its source leaf.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Literal {
    pub id: LeafId,
    pub flipped: bool,
    pub atom: Atom,
}

pub type Conjunction = Vec<Literal>;

/// Builds the syntax tree of a query; the query is normalized first.
pub fn build_syntax_tree(q: &Query) -> SyntaxTree {
    let q = normalize_query(q);
    fn build(f: &Formula, next: &mut LeafId) -> Node {
        match f {
            Formula::Atom(a) => {
                let id = *next;
                *next += 1;
                Node::Leaf { id, atom: a.clone(), flipped: false }
            }
            Formula::And(l, r) | Formula::Or(l, r) => {
                let kind = if matches!(f, Formula::And(..)) { ConnKind::And } else { ConnKind::Or };
                let left = Box::new(build(l, next));
                let right = Box::new(build(r, next));
                Node::Conn { kind, left, right }
            }
            Formula::Exists(v, c) | Formula::Forall(v, c) => {
                let kind = if matches!(f, Formula::Exists(..)) { QuantKind::Exists } else { QuantKind::Forall };
                Node::Quant { kind, var: v.clone(), child: Box::new(build(c, next)) }
            }
            Formula::Not(_) => unreachable!("normalized formulas carry negation on atoms"),
        }
    }
    let mut next = 0;
    let root = build(&q.formula, &mut next);
    SyntaxTree { root, leaf_count: next, output_vars: q.output_vars.clone(), var_domains: q.var_domains.clone() }
}

/// Logical negation with negation kept on the leaves.
pub fn negate_tree(n: &Node) -> Node {
    match n {
        Node::Leaf { id, atom, flipped } => {
            Node::Leaf { id: *id, atom: atom.with_negation_flipped(), flipped: !*flipped }
        }
        Node::Quant { kind, var, child } => Node::Quant {
            kind: match kind {
                QuantKind::Exists => QuantKind::Forall,
                QuantKind::Forall => QuantKind::Exists,
            },
            var: var.clone(),
            child: Box::new(negate_tree(child)),
        },
        Node::Conn { kind, left, right } => Node::Conn {
            kind: match kind {
                ConnKind::And => ConnKind::Or,
                ConnKind::Or => ConnKind::And,
            },
            left: Box::new(negate_tree(left)),
            right: Box::new(negate_tree(right)),
        },
    }
}

/// `A ∨ B` becomes `A ∧ B`, `A ∧ ¬B` and `¬A ∧ B`, in that order.
pub fn expand_disjunction(n: &Node) -> Result<[Node; 3]> {
    match n {
        Node::Conn { kind: ConnKind::Or, left, right } => {
            let (a, b) = ((**left).clone(), (**right).clone());
            Ok([
                Node::and(a.clone(), b.clone()),
                Node::and(a.clone(), negate_tree(&b)),
                Node::and(negate_tree(&a), b),
            ])
        }
        _ => Err(Error::Tree("expand_disjunction needs a root disjunction".into())),
    }
}

/// Recursively replaces every disjunction by its three conjunctive cases.
pub fn disjtree_to_conjtrees(n: &Node) -> Vec<Node> {
    match n {
        Node::Leaf { .. } => vec![n.clone()],
        Node::Quant { kind, var, child } => disjtree_to_conjtrees(child)
            .into_iter()
            .map(|c| Node::Quant { kind: *kind, var: var.clone(), child: Box::new(c) })
            .collect(),
        Node::Conn { kind: ConnKind::And, left, right } => {
            let ls = disjtree_to_conjtrees(left);
            let rs = disjtree_to_conjtrees(right);
            let mut out = Vec::with_capacity(ls.len() * rs.len());
            for l in &ls {
                for r in &rs {
                    out.push(Node::and(l.clone(), r.clone()));
                }
            }
            out
        }
        Node::Conn { kind: ConnKind::Or, .. } => {
            let cases = expand_disjunction(n).expect("root is a disjunction");
            cases.iter().flat_map(disjtree_to_conjtrees).collect()
        }
    }
}

/// Flattens a quantifier-free tree into the conjunctions of its
/// disjunction-free expansions.
pub fn tree_to_conjunctions(n: &Node) -> Result<Vec<Conjunction>> {
    if n.has_quantifier() {
        return Err(Error::Tree("tree_to_conjunctions needs a quantifier-free tree".into()));
    }
    Ok(disjtree_to_conjtrees(n)
        .iter()
        .map(|t| {
            t.leaves()
                .into_iter()
                .map(|(atom, id, flipped)| Literal { id, flipped, atom: atom.clone() })
                .collect()
        })
        .collect())
}

/// The four query-complexity measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QueryMetrics {
    pub node_count: usize,
    /// Number of nodes on the longest root-to-leaf path.
    pub height: usize,
    /// Universal nodes plus disjunctions below some universal node.
    pub universal_plus_or_below: usize,
    pub quantifier_count: usize,
}

pub fn complexity_metrics(t: &SyntaxTree) -> QueryMetrics {
    fn walk(n: &Node, under_forall: bool, m: &mut QueryMetrics) -> usize {
        m.node_count += 1;
        match n {
            Node::Leaf { .. } => 1,
            Node::Quant { kind, child, .. } => {
                m.quantifier_count += 1;
                let forall = *kind == QuantKind::Forall;
                if forall {
                    m.universal_plus_or_below += 1;
                }
                1 + walk(child, under_forall || forall, m)
            }
            Node::Conn { kind, left, right } => {
                if *kind == ConnKind::Or && under_forall {
                    m.universal_plus_or_below += 1;
                }
                1 + walk(left, under_forall, m).max(walk(right, under_forall, m))
            }
        }
    }
    let mut m = QueryMetrics { node_count: 0, height: 0, universal_plus_or_below: 0, quantifier_count: 0 };
    m.height = walk(&t.root, false, &mut m);
    m
}

/// Indented text dump, one node per line.
pub fn dump_tree(n: &Node) -> String {
    fn walk(n: &Node, depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth);
        match n {
            Node::Leaf { id, atom, .. } => {
                let _ = writeln!(out, "{pad}[{id}] {atom}");
            }
            Node::Quant { kind, var, child } => {
                let sym = if *kind == QuantKind::Exists { "∃" } else { "∀" };
                let _ = writeln!(out, "{pad}{sym}{var}");
                walk(child, depth + 1, out);
            }
            Node::Conn { kind, left, right } => {
                let _ = writeln!(out, "{pad}{}", if *kind == ConnKind::And { "∧" } else { "∨" });
                walk(left, depth + 1, out);
                walk(right, depth + 1, out);
            }
        }
    }
    let mut out = String::new();
    walk(n, 0, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::tests::{beers, Q_A, Q_B};
    use crate::query::{difference_query, parse_query};

    pub(crate) fn diff_tree() -> SyntaxTree {
        let s = beers();
        let qa = parse_query(Q_A, &s).unwrap();
        let qb = parse_query(Q_B, &s).unwrap();
        build_syntax_tree(&difference_query(&qb, &qa).unwrap())
    }

    fn tree_of(text: &str) -> SyntaxTree {
        build_syntax_tree(&parse_query(text, &beers()).unwrap())
    }

    #[test]
    fn difference_tree_shape() {
        let t = diff_tree();
        assert_eq!(t.leaf_count, 10);
        let legend = t.leaf_legend();
        assert_eq!(legend[0], "Likes(d1, b1)");
        assert_eq!(legend[5], "¬Likes(d2, b1)");
        assert_eq!(legend[6], "¬(d2 LIKE 'Eve %')");
        assert_eq!(legend[7], "¬Serves(x1, b1, p3)");
        assert_eq!(legend[9], "p3 < p4");
        let ids: Vec<LeafId> = t.root.leaves().iter().map(|l| l.1).collect();
        assert_eq!(ids, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn metrics_of_difference_query() {
        let m = complexity_metrics(&diff_tree());
        assert_eq!((m.node_count, m.height, m.universal_plus_or_below, m.quantifier_count), (27, 8, 5, 8));
    }

    #[test]
    fn metrics_of_small_trees() {
        let leaf = tree_of("{ (d, b) | Likes(d, b) }");
        let m = complexity_metrics(&leaf);
        assert_eq!((m.node_count, m.height, m.universal_plus_or_below, m.quantifier_count), (1, 1, 0, 0));
        let ex = tree_of("{ (d) | exists b Likes(d, b) }");
        let m = complexity_metrics(&ex);
        assert_eq!((m.node_count, m.height, m.universal_plus_or_below, m.quantifier_count), (2, 2, 0, 1));
    }

    #[test]
    fn disjunction_is_left_associated() {
        let t = tree_of("{ (d, b) | Likes(d, b) or Likes(d, b) or Likes(d, b) }");
        match &t.root {
            Node::Conn { kind: ConnKind::Or, left, right } => {
                assert!(matches!(**left, Node::Conn { kind: ConnKind::Or, .. }));
                assert!(matches!(**right, Node::Leaf { id: 2, .. }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negation_walkthrough_subtree() {
        let t = tree_of("{ (b1, p3) | (exists x Serves(x, b1, p3)) and exists x3, p4 (Serves(x3, b1, p4) and p3 < p4) }");
        let Node::Conn { right, .. } = &t.root else { panic!() };
        let neg = negate_tree(right);
        let text = dump_tree(&neg);
        assert_eq!(text, "∀x3\n  ∀p4\n    ∨\n      [1] ¬Serves(x3, b1, p4)\n      [2] p3 >= p4\n");
        assert_eq!(negate_tree(&neg), **right);
    }

    #[test]
    fn expand_requires_disjunction() {
        let t = tree_of("{ (d, b) | Likes(d, b) }");
        assert!(expand_disjunction(&t.root).is_err());
        let t = tree_of("{ (d, b) | Likes(d, b) or Likes(d, b) }");
        let cases = expand_disjunction(&t.root).unwrap();
        let flipped: Vec<Vec<bool>> =
            cases.iter().map(|c| c.leaves().iter().map(|l| l.2).collect()).collect();
        assert_eq!(flipped, vec![vec![false, false], vec![false, true], vec![true, false]]);
    }

    #[test]
    fn conjtree_counts() {
        let none = tree_of("{ (d, b) | Likes(d, b) and Likes(d, b) }");
        assert_eq!(disjtree_to_conjtrees(&none.root), vec![none.root.clone()]);
        let two = tree_of(
            "{ (d, b) | (Likes(d, b) or Likes(d, b)) and (Likes(d, b) or Likes(d, b)) }",
        );
        assert_eq!(disjtree_to_conjtrees(&two.root).len(), 9);
        let nested = tree_of("{ (d, b) | Likes(d, b) or (Likes(d, b) or Likes(d, b)) }");
        assert_eq!(disjtree_to_conjtrees(&nested.root).len(), 7);
        let diff = diff_tree();
        let trees = disjtree_to_conjtrees(&diff.root);
        // Negated copies of conjunctions add disjunctions of their own.
        assert_eq!(trees.len(), 29);
        assert!(trees.iter().all(|t| !t.has_disjunction()));
    }

    #[test]
    fn conjunction_flattening() {
        let t = tree_of("{ (d, b) | Likes(d, b) and d LIKE 'Eve%' and exists x, p Serves(x, b, p) }");
        let Node::Conn { left, .. } = &t.root else { panic!() };
        let conj = tree_to_conjunctions(left).unwrap();
        assert_eq!(conj.len(), 1);
        assert_eq!(conj[0].len(), 2);
        assert!(tree_to_conjunctions(&t.root).is_err());
        let or = tree_of("{ (d, b) | Likes(d, b) or d LIKE 'Eve%' }");
        assert_eq!(tree_to_conjunctions(&or.root).unwrap().len(), 3);
    }

    #[test]
    fn leaf_ids_survive_rewrites() {
        let t = diff_tree();
        let mut orig: Vec<LeafId> = t.root.leaves().iter().map(|l| l.1).collect();
        orig.sort();
        for n in disjtree_to_conjtrees(&t.root) {
            let mut ids: Vec<LeafId> = n.leaves().iter().map(|l| l.1).collect();
            ids.sort();
            assert_eq!(ids, orig);
        }
    }
}
