//! Query evaluation on ground instances, symbolic satisfaction on
//! c-instances, and coverage of both.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::cinstance::{atom_image, AtomImage, CInstance, Cell, Cond, GroundInstance, Homomorphism};
use crate::error::{Error, Result};
use crate::query::{Atom, Query, Term};
use crate::schema::{DomainId, Schema};
use crate::solver;
use crate::tree::{build_syntax_tree, ConnKind, LeafId, Node, QuantKind, SyntaxTree};
use crate::value::Value;
use crate::worlds::{enumerate_worlds, for_each_adequate_world, WorldContext};

pub type Coverage = BTreeSet<LeafId>;
pub type Assignment = BTreeMap<String, Value>;

fn term_value(t: &Term, env: &Assignment) -> Value {
    match t {
        Term::Var(v) => env.get(v).cloned().unwrap_or_else(|| panic!("variable {v} unassigned")),
        Term::Const(c) => c.clone(),
    }
}

/// Truth of a single atom under a total assignment of its variables.
pub fn atom_holds(atom: &Atom, env: &Assignment, k: &GroundInstance) -> bool {
    match atom {
        Atom::Rel { rel, terms, negated, .. } => {
            let row: Vec<Value> = terms.iter().map(|t| term_value(t, env)).collect();
            k.contains(*rel, &row) != *negated
        }
        Atom::Cmp { lhs, op, rhs, negated } => {
            let c = Cond::cmp(Cell::Const(term_value(lhs, env)), *op, Cell::Const(term_value(rhs, env)), *negated);
            c.static_truth().expect("ground comparisons are decided")
        }
    }
}

struct Ground<'a> {
    schema: &'a Schema,
    t: &'a SyntaxTree,
    k: &'a GroundInstance,
    domains: RefCell<HashMap<usize, Vec<Value>>>,
}

impl Ground<'_> {
    fn values(&self, var: &str) -> Vec<Value> {
        let d = self.t.var_domains[var];
        self.domains.borrow_mut().entry(d).or_insert_with(|| self.k.domain_values(self.schema, d)).clone()
    }

    fn holds(&self, n: &Node, env: &mut Assignment) -> bool {
        match n {
            Node::Leaf { atom, .. } => atom_holds(atom, env, self.k),
            Node::Conn { kind: ConnKind::And, left, right } => self.holds(left, env) && self.holds(right, env),
            Node::Conn { kind: ConnKind::Or, left, right } => self.holds(left, env) || self.holds(right, env),
            Node::Quant { kind, var, child } => {
                let saved = env.get(var).cloned();
                let mut result = *kind == QuantKind::Forall;
                for v in self.values(var) {
                    env.insert(var.clone(), v);
                    if self.holds(child, env) != result {
                        result = !result;
                        break;
                    }
                }
                restore(env, var, saved);
                result
            }
        }
    }

    fn cover(&self, n: &Node, env: &mut Assignment, out: &mut Coverage) {
        match n {
            Node::Leaf { id, atom, .. } => {
                if atom_holds(atom, env, self.k) {
                    out.insert(*id);
                }
            }
            Node::Conn { left, right, .. } => {
                self.cover(left, env, out);
                self.cover(right, env, out);
            }
            Node::Quant { var, child, .. } => {
                let saved = env.get(var).cloned();
                for v in self.values(var) {
                    env.insert(var.clone(), v);
                    self.cover(child, env, out);
                }
                restore(env, var, saved);
            }
        }
    }

    /// Output assignments that satisfy the tree.
    fn answers(&self) -> Vec<Assignment> {
        let mut out = Vec::new();
        let vars = &self.t.output_vars;
        let pools: Vec<Vec<Value>> = vars.iter().map(|v| self.values(v)).collect();
        let mut env = Assignment::new();
        fn rec(g: &Ground<'_>, vars: &[String], pools: &[Vec<Value>], env: &mut Assignment, out: &mut Vec<Assignment>) {
            let Some((v, rest)) = vars.split_first() else {
                if g.holds(&g.t.root, env) {
                    out.push(env.clone());
                }
                return;
            };
            for c in &pools[0] {
                env.insert(v.clone(), c.clone());
                rec(g, rest, &pools[1..], env, out);
            }
            env.remove(v);
        }
        rec(self, vars, &pools, &mut env, &mut out);
        out
    }
}

fn restore(env: &mut Assignment, var: &str, saved: Option<Value>) {
    match saved {
        Some(v) => env.insert(var.to_string(), v),
        None => env.remove(var),
    };
}

fn ground<'a>(schema: &'a Schema, t: &'a SyntaxTree, k: &'a GroundInstance) -> Ground<'a> {
    Ground { schema, t, k, domains: RefCell::new(HashMap::new()) }
}

/// Output tuples of the tree on `k`, in sorted order.
pub fn eval_tree(schema: &Schema, t: &SyntaxTree, k: &GroundInstance) -> BTreeSet<Vec<Value>> {
    let g = ground(schema, t, k);
    g.answers().into_iter().map(|env| t.output_vars.iter().map(|v| env[v].clone()).collect()).collect()
}

/// Output tuples of `q` on `k`; quantifiers range over the constants of
/// `k` of the variable's domain.
pub fn eval_ground(schema: &Schema, q: &Query, k: &GroundInstance) -> BTreeSet<Vec<Value>> {
    eval_tree(schema, &build_syntax_tree(q), k)
}

/// Leaves covered by `k`: for each satisfying output assignment, a leaf
/// counts when true under some extension of it over the constants of `k`.
pub fn cov_tree(schema: &Schema, t: &SyntaxTree, k: &GroundInstance) -> Coverage {
    let g = ground(schema, t, k);
    let mut out = Coverage::new();
    for mut env in g.answers() {
        g.cover(&t.root, &mut env, &mut out);
    }
    out
}

pub fn cov_ground(schema: &Schema, q: &Query, k: &GroundInstance) -> Coverage {
    cov_tree(schema, &build_syntax_tree(q), k)
}

struct Symbolic<'a> {
    schema: &'a Schema,
    var_domains: &'a BTreeMap<String, DomainId>,
    i: &'a CInstance,
    entailed: RefCell<HashMap<Cond, bool>>,
    present: RefCell<HashMap<(usize, Vec<Cell>), bool>>,
}

impl Symbolic<'_> {
    fn leaf(&self, atom: &Atom, h: &Homomorphism) -> bool {
        match atom_image(atom, h).expect("tree variables are bound") {
            AtomImage::Tuple(rel, row) => {
                let key = (rel, row);
                if let Some(&b) = self.present.borrow().get(&key) {
                    return b;
                }
                let b = solver::tuple_entailed(self.schema, self.i, rel, &key.1);
                self.present.borrow_mut().insert(key, b);
                b
            }
            AtomImage::Cond(c) => {
                if let Some(&b) = self.entailed.borrow().get(&c) {
                    return b;
                }
                let b = solver::entails(self.schema, self.i, &c);
                self.entailed.borrow_mut().insert(c, b);
                b
            }
        }
    }

    fn sat(&self, n: &Node, h: &mut Homomorphism) -> bool {
        match n {
            Node::Leaf { atom, .. } => self.leaf(atom, h),
            Node::Conn { kind: ConnKind::And, left, right } => self.sat(left, h) && self.sat(right, h),
            Node::Conn { kind: ConnKind::Or, left, right } => self.sat(left, h) || self.sat(right, h),
            Node::Quant { kind, var, child } => {
                let members = self.i.chase_domain(self.schema, self.var_domains[var]);
                let saved = h.get(var).cloned();
                let mut result = *kind == QuantKind::Forall;
                for m in members {
                    h.insert(var.clone(), m);
                    if self.sat(child, h) != result {
                        result = !result;
                        break;
                    }
                }
                match saved {
                    Some(c) => h.insert(var.clone(), c),
                    None => h.remove(var),
                };
                result
            }
        }
    }
}

/// Symbolic satisfaction: every world of `i` satisfies the tree under some
/// extension of `h`. Free variables outside `h` are read existentially;
/// quantifiers range over the cells filling the variable's domain in `i`;
/// a leaf is true when every world of `i` makes its image true.
pub fn tree_sat(schema: &Schema, t: &SyntaxTree, i: &CInstance, h: &Homomorphism) -> bool {
    node_sat(schema, &t.var_domains, &t.root, i, h)
}

/// [`tree_sat`] for a subtree, typed by `var_domains`.
pub fn node_sat(
    schema: &Schema,
    var_domains: &BTreeMap<String, DomainId>,
    node: &Node,
    i: &CInstance,
    h: &Homomorphism,
) -> bool {
    let mut root = node.clone();
    for v in node.free_vars().into_iter().rev() {
        if !h.contains_key(&v) {
            root = Node::Quant { kind: QuantKind::Exists, var: v, child: Box::new(root) };
        }
    }
    let s = Symbolic {
        schema,
        var_domains,
        i,
        entailed: RefCell::new(HashMap::new()),
        present: RefCell::new(HashMap::new()),
    };
    s.sat(&root, &mut h.clone())
}

/// Leaves covered by every world of `i` (enumerated one per configuration
/// the query can distinguish).
pub fn cov_cinstance(schema: &Schema, t: &SyntaxTree, i: &CInstance) -> Result<Coverage> {
    let ctx = WorldContext::for_tree(schema, i, t);
    let mut acc: Option<Coverage> = None;
    for_each_adequate_world(schema, i, &ctx, |k| {
        let c = cov_tree(schema, t, k);
        let next: Coverage = match &acc {
            None => c,
            Some(a) => a.intersection(&c).copied().collect(),
        };
        let keep_going = !next.is_empty();
        acc = Some(next);
        keep_going
    });
    acc.ok_or_else(|| Error::NoWorld("the condition has no satisfying mapping".into()))
}

/// [`cov_cinstance`] over the worlds of an explicit value pool.
pub fn cov_cinstance_pool(schema: &Schema, t: &SyntaxTree, i: &CInstance, pool: &[Vec<Value>]) -> Result<Coverage> {
    let mut acc: Option<Coverage> = None;
    for k in enumerate_worlds(schema, i, pool) {
        let c = cov_tree(schema, t, &k);
        acc = Some(match acc {
            None => c,
            Some(a) => a.intersection(&c).copied().collect(),
        });
    }
    acc.ok_or_else(|| Error::NoWorld("the condition has no satisfying mapping".into()))
}

/// Comparison of the coverage tracked during the chase with the coverage
/// computed from the worlds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverageReport {
    pub tracked: Coverage,
    pub semantic: Coverage,
    pub tracked_only: Coverage,
    pub semantic_only: Coverage,
}

impl CoverageReport {
    pub fn agrees(&self) -> bool {
        self.tracked == self.semantic
    }
}

pub fn tracked_vs_semantic(schema: &Schema, t: &SyntaxTree, i: &CInstance) -> Result<CoverageReport> {
    let semantic = cov_cinstance(schema, t, i)?;
    let tracked = i.tracked.clone();
    Ok(CoverageReport {
        tracked_only: tracked.difference(&semantic).copied().collect(),
        semantic_only: semantic.difference(&tracked).copied().collect(),
        tracked,
        semantic,
    })
}
