//! Conditional instances: v-tables over labeled nulls and constants with one
//! global condition, plus ground instances and their documents.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde_json::{json, Map, Value as Json};

use crate::error::{Error, Result};
use crate::query::{Atom, CmpOp, Term};
use crate::schema::{DomainId, DomainKind, RelId, Schema};
use crate::tree::{Conjunction, LeafId};
use crate::value::Value;

/// A labeled null, rendered `<domain>#<n>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NullId {
    pub domain: DomainId,
    pub n: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cell {
    Null(NullId),
    Const(Value),
}

impl Cell {
    pub fn as_null(&self) -> Option<NullId> {
        match self {
            Cell::Null(n) => Some(*n),
            Cell::Const(_) => None,
        }
    }

    pub fn render(&self, schema: &Schema) -> String {
        match self {
            Cell::Null(n) => format!("{}#{}", schema.domain(n.domain).name, n.n),
            Cell::Const(v) => v.to_string(),
        }
    }
}

/// Order and equality operators of normalized comparisons.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CondOp {
    Eq,
    Ne,
    Lt,
    Le,
}

impl CondOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CondOp::Eq => "=",
            CondOp::Ne => "≠",
            CondOp::Lt => "<",
            CondOp::Le => "≤",
        }
    }

    pub fn holds(self, a: &Value, b: &Value) -> bool {
        match self {
            CondOp::Eq => a == b,
            CondOp::Ne => a != b,
            CondOp::Lt => a < b,
            CondOp::Le => a <= b,
        }
    }
}

/// An atomic condition in normal form: `>`/`≥` are flipped to `<`/`≤`,
/// negated comparisons use the complementary operator, `=`/`≠` operands
/// are sorted and exact-literal LIKE becomes equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cond {
    Cmp { lhs: Cell, op: CondOp, rhs: Cell },
    Like { cell: Cell, prefix: String, negated: bool },
    NegFact { rel: RelId, args: Vec<Cell> },
}

impl Cond {
    pub fn cmp(lhs: Cell, op: CmpOp, rhs: Cell, negated: bool) -> Cond {
        if op == CmpOp::Like {
            let Cell::Const(Value::Str(pattern)) = rhs else {
                panic!("LIKE pattern must be a string constant");
            };
            return match pattern.strip_suffix('%') {
                Some(prefix) => Cond::Like { cell: lhs, prefix: prefix.to_string(), negated },
                None => Cond::cmp(lhs, CmpOp::Eq, Cell::Const(Value::Str(pattern)), negated),
            };
        }
        let op = if negated { op.complement().expect("order operators have complements") } else { op };
        let (lhs, op, rhs) = match op {
            CmpOp::Eq => (lhs, CondOp::Eq, rhs),
            CmpOp::Ne => (lhs, CondOp::Ne, rhs),
            CmpOp::Lt => (lhs, CondOp::Lt, rhs),
            CmpOp::Le => (lhs, CondOp::Le, rhs),
            CmpOp::Gt => (rhs, CondOp::Lt, lhs),
            CmpOp::Ge => (rhs, CondOp::Le, lhs),
            CmpOp::Like => unreachable!(),
        };
        Cond::Cmp { lhs, op, rhs }.normalized()
    }

    /// Re-sorts symmetric operands; needed after renaming nulls.
    pub fn normalized(self) -> Cond {
        match self {
            Cond::Cmp { lhs, op: op @ (CondOp::Eq | CondOp::Ne), rhs } if rhs < lhs => Cond::Cmp { lhs: rhs, op, rhs: lhs },
            other => other,
        }
    }

    /// The condition's logical negation, when it is itself atomic.
    pub fn negation(&self) -> Option<Cond> {
        match self {
            Cond::Cmp { lhs, op, rhs } => Some(
                match op {
                    CondOp::Eq => Cond::Cmp { lhs: lhs.clone(), op: CondOp::Ne, rhs: rhs.clone() },
                    CondOp::Ne => Cond::Cmp { lhs: lhs.clone(), op: CondOp::Eq, rhs: rhs.clone() },
                    CondOp::Lt => Cond::Cmp { lhs: rhs.clone(), op: CondOp::Le, rhs: lhs.clone() },
                    CondOp::Le => Cond::Cmp { lhs: rhs.clone(), op: CondOp::Lt, rhs: lhs.clone() },
                }
                .normalized(),
            ),
            Cond::Like { cell, prefix, negated } => {
                Some(Cond::Like { cell: cell.clone(), prefix: prefix.clone(), negated: !negated })
            }
            Cond::NegFact { .. } => None,
        }
    }

    pub fn cells(&self) -> Vec<&Cell> {
        match self {
            Cond::Cmp { lhs, rhs, .. } => vec![lhs, rhs],
            Cond::Like { cell, .. } => vec![cell],
            Cond::NegFact { args, .. } => args.iter().collect(),
        }
    }

    pub fn map_cells(&self, f: &mut impl FnMut(&Cell) -> Cell) -> Cond {
        match self {
            Cond::Cmp { lhs, op, rhs } => Cond::Cmp { lhs: f(lhs), op: *op, rhs: f(rhs) }.normalized(),
            Cond::Like { cell, prefix, negated } => {
                Cond::Like { cell: f(cell), prefix: prefix.clone(), negated: *negated }
            }
            Cond::NegFact { rel, args } => Cond::NegFact { rel: *rel, args: args.iter().map(f).collect() },
        }
    }

    /// Truth value when no null is involved or the operands coincide.
    pub fn static_truth(&self) -> Option<bool> {
        match self {
            Cond::Cmp { lhs, op, rhs } => match (lhs, rhs) {
                (Cell::Const(a), Cell::Const(b)) => Some(op.holds(a, b)),
                _ if lhs == rhs => Some(matches!(op, CondOp::Eq | CondOp::Le)),
                _ => None,
            },
            Cond::Like { cell: Cell::Const(Value::Str(s)), prefix, negated } => Some(s.starts_with(prefix.as_str()) != *negated),
            _ => None,
        }
    }

    pub fn render(&self, schema: &Schema) -> String {
        match self {
            Cond::Cmp { lhs, op, rhs } => format!("{} {} {}", lhs.render(schema), op.symbol(), rhs.render(schema)),
            Cond::Like { cell, prefix, negated } => {
                let lit = Value::Str(format!("{prefix}%"));
                if *negated {
                    format!("¬({} LIKE {lit})", cell.render(schema))
                } else {
                    format!("{} LIKE {lit}", cell.render(schema))
                }
            }
            Cond::NegFact { rel, args } => {
                let args: Vec<String> = args.iter().map(|c| c.render(schema)).collect();
                format!("¬{}({})", schema.relation(*rel).name, args.join(", "))
            }
        }
    }
}

/// Variable bindings from query variables to cells.
pub type Homomorphism = BTreeMap<String, Cell>;

/// A conditional instance. Tables are indexed by relation id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CInstance {
    pub tables: Vec<Vec<Vec<Cell>>>,
    pub condition: Vec<Cond>,
    /// Number of nulls allocated so far, per domain.
    pub registry: Vec<u32>,
    pub tracked: BTreeSet<LeafId>,
}

impl CInstance {
    pub fn new(schema: &Schema) -> CInstance {
        CInstance {
            tables: vec![Vec::new(); schema.relations.len()],
            condition: Vec::new(),
            registry: vec![0; schema.domains.len()],
            tracked: BTreeSet::new(),
        }
    }

    pub fn fresh_null(&mut self, domain: DomainId) -> NullId {
        self.registry[domain] += 1;
        NullId { domain, n: self.registry[domain] }
    }

    pub fn size(&self) -> usize {
        self.tuple_count() + self.condition.len()
    }

    pub fn tuple_count(&self) -> usize {
        self.tables.iter().map(Vec::len).sum()
    }

    pub fn tuples(&self) -> impl Iterator<Item = (RelId, &Vec<Cell>)> {
        self.tables.iter().enumerate().flat_map(|(r, t)| t.iter().map(move |row| (r, row)))
    }

    pub fn contains_tuple(&self, rel: RelId, row: &[Cell]) -> bool {
        self.tables[rel].iter().any(|t| t == row)
    }

    /// Inserts a tuple and everything its foreign keys demand.
    pub fn insert_tuple(&mut self, schema: &Schema, rel: RelId, row: Vec<Cell>) {
        if self.contains_tuple(rel, &row) {
            return;
        }
        self.tables[rel].push(row.clone());
        self.anchor(schema, rel, &row);
    }

    /// Makes sure every foreign key of `row` points at some tuple.
    fn anchor(&mut self, schema: &Schema, rel: RelId, row: &[Cell]) {
        let fks: Vec<_> = schema.fks_from(rel).cloned().collect();
        for fk in fks {
            let key = &row[fk.from_attribute];
            if self.tables[fk.to_relation].iter().any(|t| &t[fk.to_attribute] == key) {
                continue;
            }
            let target = schema.relation(fk.to_relation);
            let new_row: Vec<Cell> = (0..target.arity())
                .map(|i| {
                    if i == fk.to_attribute {
                        key.clone()
                    } else {
                        Cell::Null(self.fresh_null(target.attributes[i].domain))
                    }
                })
                .collect();
            self.insert_tuple(schema, fk.to_relation, new_row);
        }
    }

    /// Appends a condition unless it is already present, trivially true or
    /// implied by a LIKE on the same cell. A longer positive prefix replaces
    /// a shorter one, and a shorter negative prefix replaces a longer one.
    pub fn add_condition(&mut self, schema: &Schema, cond: Cond) {
        if cond.static_truth() == Some(true) || self.condition.contains(&cond) {
            return;
        }
        if let Cond::Like { cell, prefix, negated } = &cond {
            // `stronger(a, b)`: the LIKE with prefix `a` implies the one with prefix `b`.
            let stronger = |a: &str, b: &str| if *negated { b.starts_with(a) } else { a.starts_with(b) };
            let same_kind = |c: &Cond| match c {
                Cond::Like { cell: c2, prefix: p2, negated: n2 } if c2 == cell && n2 == negated => Some(p2.clone()),
                _ => None,
            };
            if self.condition.iter().filter_map(same_kind).any(|p2| stronger(&p2, prefix)) {
                return;
            }
            self.condition.retain(|c| same_kind(c).is_none_or(|p2| !stronger(prefix, &p2)));
        }
        if let Cond::NegFact { rel, args } = &cond {
            let (rel, args) = (*rel, args.clone());
            self.condition.push(cond);
            self.anchor(schema, rel, &args);
        } else {
            self.condition.push(cond);
        }
    }

    /// Cells occurring anywhere, nulls and constants.
    pub fn cells(&self) -> BTreeSet<&Cell> {
        let mut out: BTreeSet<&Cell> = self.tuples().flat_map(|(_, r)| r.iter()).collect();
        out.extend(self.condition.iter().flat_map(|c| c.cells()));
        out
    }

    /// Nulls occurring anywhere in tables or conditions.
    pub fn nulls(&self) -> BTreeSet<NullId> {
        self.cells().into_iter().filter_map(Cell::as_null).collect()
    }

    /// Cells that fill some attribute of `domain` in a table.
    pub fn active_domain(&self, schema: &Schema, domain: DomainId) -> Vec<Cell> {
        let mut out = BTreeSet::new();
        for (rel, row) in self.tuples() {
            for (i, c) in row.iter().enumerate() {
                if schema.attr_domain(rel, i) == domain {
                    out.insert(c.clone());
                }
            }
        }
        out.into_iter().collect()
    }

    /// Cells of `domain` occurring anywhere in the instance: table cells,
    /// condition operands and nulls introduced for it.
    pub fn chase_domain(&self, schema: &Schema, domain: DomainId) -> Vec<Cell> {
        let mut out: BTreeSet<Cell> = self.active_domain(schema, domain).into_iter().collect();
        for cond in &self.condition {
            match cond {
                Cond::NegFact { rel, args } => {
                    for (i, c) in args.iter().enumerate() {
                        if schema.attr_domain(*rel, i) == domain {
                            out.insert(c.clone());
                        }
                    }
                }
                _ => {
                    let cells = cond.cells();
                    let typed = cells.iter().find_map(|c| c.as_null()).map(|n| n.domain);
                    if typed == Some(domain) {
                        out.extend(cells.into_iter().cloned());
                    }
                }
            }
        }
        out.into_iter().collect()
    }

    /// Occurrence count of each null over table cells and conditions.
    fn occurrences(&self) -> BTreeMap<NullId, (usize, bool)> {
        let mut occ: BTreeMap<NullId, (usize, bool)> = BTreeMap::new();
        for (_, row) in self.tuples() {
            for c in row {
                if let Some(n) = c.as_null() {
                    occ.entry(n).or_default().0 += 1;
                }
            }
        }
        for cond in &self.condition {
            for c in cond.cells() {
                if let Some(n) = c.as_null() {
                    occ.entry(n).or_default().1 = true;
                }
            }
        }
        occ
    }

    /// Nulls printed as `∗`: one cell and no condition.
    pub fn dont_cares(&self) -> BTreeSet<NullId> {
        self.occurrences().into_iter().filter(|(_, (cells, cond))| *cells == 1 && !cond).map(|(n, _)| n).collect()
    }

    /// Tuples implied by foreign keys alone: the key is referenced by another
    /// tuple and every other cell is a don't-care.
    pub fn implied_anchor_count(&self, schema: &Schema) -> usize {
        let dc = self.dont_cares();
        let mut count = 0;
        for (rel, row) in self.tuples() {
            let implied = schema.foreign_keys.iter().filter(|fk| fk.to_relation == rel).any(|fk| {
                let key = &row[fk.to_attribute];
                let others_free = row
                    .iter()
                    .enumerate()
                    .all(|(i, c)| i == fk.to_attribute || c.as_null().is_some_and(|n| dc.contains(&n)));
                others_free && self.tables[fk.from_relation].iter().any(|t| &t[fk.from_attribute] == key)
            });
            if implied {
                count += 1;
            }
        }
        count
    }

    /// Size charged against the search limit: implied anchor tuples are free.
    pub fn budget_size(&self, schema: &Schema) -> usize {
        self.size() - self.implied_anchor_count(schema)
    }

    pub fn render_text(&self, schema: &Schema) -> String {
        let dc = self.dont_cares();
        let cell = |c: &Cell| match c {
            Cell::Null(n) if dc.contains(n) => "∗".to_string(),
            other => other.render(schema),
        };
        let mut out = String::new();
        for (rel, def) in schema.relations.iter().enumerate() {
            let header: Vec<&str> = def.attributes.iter().map(|a| a.name.as_str()).collect();
            let rows: Vec<Vec<String>> = self.tables[rel].iter().map(|r| r.iter().map(&cell).collect()).collect();
            let widths: Vec<usize> = (0..def.arity())
                .map(|i| rows.iter().map(|r| r[i].chars().count()).chain([header[i].chars().count()]).max().unwrap_or(0))
                .collect();
            let line = |cells: &[&str]| -> String {
                let padded: Vec<String> =
                    cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}", w = *w)).collect();
                format!("  {}", padded.join(" | ")).trim_end().to_string()
            };
            let _ = writeln!(out, "{}", def.name);
            let _ = writeln!(out, "{}", line(&header));
            for r in &rows {
                let cells: Vec<&str> = r.iter().map(String::as_str).collect();
                let _ = writeln!(out, "{}", line(&cells));
            }
        }
        let _ = writeln!(out, "Global condition");
        if self.condition.is_empty() {
            let _ = writeln!(out, "  true");
        }
        for c in &self.condition {
            let _ = writeln!(out, "  {}", c.render(schema));
        }
        out
    }

    /// Structured document of the instance.
    pub fn to_json(&self, schema: &Schema) -> Json {
        let mut tables = Map::new();
        for (rel, def) in schema.relations.iter().enumerate() {
            let rows: Vec<Json> =
                self.tables[rel].iter().map(|r| Json::Array(r.iter().map(|c| cell_json(schema, c)).collect())).collect();
            tables.insert(def.name.clone(), Json::Array(rows));
        }
        let detail: Vec<Json> = self.condition.iter().map(|c| cond_json(schema, c)).collect();
        json!({
            "tables": tables,
            "condition": self.condition.iter().map(|c| c.render(schema)).collect::<Vec<_>>(),
            "condition_detail": detail,
            "size": self.size(),
            "registry": self.registry,
        })
    }

    /// Inverse of [`CInstance::to_json`].
    pub fn from_json(schema: &Schema, doc: &Json) -> Result<CInstance> {
        let bad = |m: &str| Error::InstanceFormat(m.to_string());
        let mut inst = CInstance::new(schema);
        let tables = doc.get("tables").and_then(Json::as_object).ok_or_else(|| bad("missing `tables`"))?;
        for (name, rows) in tables {
            let rel = schema.relation_id(name)?;
            for row in rows.as_array().ok_or_else(|| bad("table must be a list"))? {
                let row = row.as_array().ok_or_else(|| bad("row must be a list"))?;
                if row.len() != schema.relation(rel).arity() {
                    return Err(bad(&format!("row of `{name}` has wrong arity")));
                }
                let cells = row.iter().map(|c| cell_from_json(schema, c)).collect::<Result<Vec<_>>>()?;
                inst.tables[rel].push(cells);
            }
        }
        if let Some(conds) = doc.get("condition_detail").and_then(Json::as_array) {
            for c in conds {
                inst.condition.push(cond_from_json(schema, c)?);
            }
        }
        for n in inst.nulls() {
            inst.registry[n.domain] = inst.registry[n.domain].max(n.n);
        }
        if let Some(reg) = doc.get("registry").and_then(Json::as_array) {
            for (d, v) in reg.iter().enumerate().take(inst.registry.len()) {
                let v = v.as_u64().ok_or_else(|| bad("registry entries are counts"))? as u32;
                inst.registry[d] = inst.registry[d].max(v);
            }
        }
        Ok(inst)
    }
}

fn cell_json(schema: &Schema, c: &Cell) -> Json {
    match c {
        Cell::Null(_) => json!({ "null": c.render(schema) }),
        Cell::Const(Value::Str(s)) => json!({ "str": s }),
        Cell::Const(Value::Num(n)) => json!({ "num": crate::value::format_rational(n) }),
    }
}

fn cell_from_json(schema: &Schema, c: &Json) -> Result<Cell> {
    let bad = |m: String| Error::InstanceFormat(m);
    if let Some(name) = c.get("null").and_then(Json::as_str) {
        let (dom, n) = name.rsplit_once('#').ok_or_else(|| bad(format!("malformed null `{name}`")))?;
        let domain = schema.domain_id(dom)?;
        let n = n.parse().map_err(|_| bad(format!("malformed null `{name}`")))?;
        return Ok(Cell::Null(NullId { domain, n }));
    }
    if let Some(s) = c.get("str").and_then(Json::as_str) {
        return Ok(Cell::Const(Value::Str(s.to_string())));
    }
    if let Some(s) = c.get("num").and_then(Json::as_str) {
        return Value::parse_decimal(s)
            .or_else(|| parse_fraction(s))
            .map(Cell::Const)
            .ok_or_else(|| bad(format!("malformed number `{s}`")));
    }
    Err(bad(format!("unrecognized cell {c}")))
}

fn parse_fraction(s: &str) -> Option<Value> {
    let (p, q) = s.split_once('/')?;
    let p: num::BigInt = p.parse().ok()?;
    let q: num::BigInt = q.parse().ok()?;
    if q == num::BigInt::from(0) {
        return None;
    }
    Some(Value::Num(num::BigRational::new(p, q)))
}

fn cond_json(schema: &Schema, c: &Cond) -> Json {
    match c {
        Cond::Cmp { lhs, op, rhs } => {
            json!({ "lhs": cell_json(schema, lhs), "op": op.symbol(), "rhs": cell_json(schema, rhs) })
        }
        Cond::Like { cell, prefix, negated } => {
            json!({ "cell": cell_json(schema, cell), "prefix": prefix, "negated": negated })
        }
        Cond::NegFact { rel, args } => json!({
            "not_fact": schema.relation(*rel).name,
            "args": args.iter().map(|a| cell_json(schema, a)).collect::<Vec<_>>(),
        }),
    }
}

fn cond_from_json(schema: &Schema, c: &Json) -> Result<Cond> {
    let bad = |m: &str| Error::InstanceFormat(m.to_string());
    if let Some(op) = c.get("op").and_then(Json::as_str) {
        let op = match op {
            "=" => CondOp::Eq,
            "≠" => CondOp::Ne,
            "<" => CondOp::Lt,
            "≤" => CondOp::Le,
            _ => return Err(bad("unknown condition operator")),
        };
        let lhs = cell_from_json(schema, c.get("lhs").ok_or_else(|| bad("missing lhs"))?)?;
        let rhs = cell_from_json(schema, c.get("rhs").ok_or_else(|| bad("missing rhs"))?)?;
        return Ok(Cond::Cmp { lhs, op, rhs }.normalized());
    }
    if let Some(prefix) = c.get("prefix").and_then(Json::as_str) {
        let cell = cell_from_json(schema, c.get("cell").ok_or_else(|| bad("missing cell"))?)?;
        let negated = c.get("negated").and_then(Json::as_bool).unwrap_or(false);
        return Ok(Cond::Like { cell, prefix: prefix.to_string(), negated });
    }
    if let Some(rel) = c.get("not_fact").and_then(Json::as_str) {
        let rel = schema.relation_id(rel)?;
        let args = c
            .get("args")
            .and_then(Json::as_array)
            .ok_or_else(|| bad("missing args"))?
            .iter()
            .map(|a| cell_from_json(schema, a))
            .collect::<Result<Vec<_>>>()?;
        return Ok(Cond::NegFact { rel, args });
    }
    Err(bad("unrecognized condition"))
}

fn image(h: &Homomorphism, t: &Term) -> Result<Cell> {
    match t {
        Term::Var(v) => h.get(v).cloned().ok_or_else(|| Error::Unmapped(v.clone())),
        Term::Const(c) => Ok(Cell::Const(c.clone())),
    }
}

/// The condition or tuple an atom denotes under `h`.
pub enum AtomImage {
    Tuple(RelId, Vec<Cell>),
    Cond(Cond),
}

pub fn atom_image(atom: &Atom, h: &Homomorphism) -> Result<AtomImage> {
    Ok(match atom {
        Atom::Rel { rel, terms, negated, .. } => {
            let args = terms.iter().map(|t| image(h, t)).collect::<Result<Vec<_>>>()?;
            if *negated {
                AtomImage::Cond(Cond::NegFact { rel: *rel, args })
            } else {
                AtomImage::Tuple(*rel, args)
            }
        }
        Atom::Cmp { lhs, op, rhs, negated } => AtomImage::Cond(Cond::cmp(image(h, lhs)?, *op, image(h, rhs)?, *negated)),
    })
}

/// Adds the image of a conjunction under `h`: tuples (with foreign-key
/// closure) for positive relational literals, conditions for the rest.
pub fn add_to_ins(schema: &Schema, i: &CInstance, conj: &Conjunction, h: &Homomorphism) -> Result<CInstance> {
    let mut out = i.clone();
    for lit in conj {
        match atom_image(&lit.atom, h)? {
            AtomImage::Tuple(rel, row) => out.insert_tuple(schema, rel, row),
            AtomImage::Cond(c) => out.add_condition(schema, c),
        }
        if !lit.flipped {
            out.tracked.insert(lit.id);
        }
    }
    Ok(out)
}

/// Union of two instances from one lineage.
pub fn merge_instances(a: &CInstance, b: &CInstance) -> Result<CInstance> {
    if a.tables.len() != b.tables.len() || a.registry.len() != b.registry.len() {
        return Err(Error::Registry("instances over different schemas".into()));
    }
    let mut out = a.clone();
    for (rel, rows) in b.tables.iter().enumerate() {
        for row in rows {
            if !out.contains_tuple(rel, row) {
                out.tables[rel].push(row.clone());
            }
        }
    }
    for c in &b.condition {
        if !out.condition.contains(c) {
            out.condition.push(c.clone());
        }
    }
    for (d, n) in b.registry.iter().enumerate() {
        out.registry[d] = out.registry[d].max(*n);
    }
    out.tracked.extend(b.tracked.iter().copied());
    Ok(out)
}

/// A database without nulls; tables are sets of constant tuples.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundInstance {
    pub tables: Vec<BTreeSet<Vec<Value>>>,
    /// Values quantifiers range over besides those in tables, per domain.
    /// A possible world keeps here the images of nulls that occur only in
    /// the global condition.
    pub extra: Vec<BTreeSet<Value>>,
}

impl GroundInstance {
    pub fn empty(schema: &Schema) -> GroundInstance {
        GroundInstance { tables: vec![BTreeSet::new(); schema.relations.len()], extra: vec![BTreeSet::new(); schema.domains.len()] }
    }

    pub fn contains(&self, rel: RelId, row: &[Value]) -> bool {
        self.tables[rel].contains(row)
    }

    /// Constants of `domain` in tables or in `extra`, sorted.
    pub fn domain_values(&self, schema: &Schema, domain: DomainId) -> Vec<Value> {
        let mut out: BTreeSet<Value> = self.extra.get(domain).cloned().unwrap_or_default();
        for (rel, rows) in self.tables.iter().enumerate() {
            for row in rows {
                for (i, v) in row.iter().enumerate() {
                    if schema.attr_domain(rel, i) == domain {
                        out.insert(v.clone());
                    }
                }
            }
        }
        out.into_iter().collect()
    }

    /// Reads `{ "tables": { "Rel": [[const, ...], ...] } }`.
    pub fn from_json(schema: &Schema, doc: &Json) -> Result<GroundInstance> {
        let bad = |m: String| Error::InstanceFormat(m);
        let mut k = GroundInstance::empty(schema);
        let tables = doc.get("tables").and_then(Json::as_object).ok_or_else(|| bad("missing `tables`".into()))?;
        for (name, rows) in tables {
            let rel = schema.relation_id(name)?;
            let def = schema.relation(rel);
            for row in rows.as_array().ok_or_else(|| bad(format!("`{name}` must be a list")))? {
                let row = row.as_array().ok_or_else(|| bad(format!("row of `{name}` must be a list")))?;
                if row.len() != def.arity() {
                    return Err(bad(format!("row of `{name}` has {} values, expected {}", row.len(), def.arity())));
                }
                let mut vals = Vec::with_capacity(row.len());
                for (i, v) in row.iter().enumerate() {
                    let kind = schema.domain(def.attributes[i].domain).kind;
                    vals.push(json_const(kind, v).ok_or_else(|| bad(format!("bad value {v} in `{name}`")))?);
                }
                k.tables[rel].insert(vals);
            }
        }
        Ok(k)
    }

    pub fn parse(schema: &Schema, text: &str) -> Result<GroundInstance> {
        let doc: Json = serde_json::from_str(text).map_err(|e| Error::InstanceFormat(e.to_string()))?;
        GroundInstance::from_json(schema, &doc)
    }

    pub fn to_json(&self, schema: &Schema) -> Json {
        let mut tables = Map::new();
        for (rel, rows) in self.tables.iter().enumerate() {
            let rows: Vec<Json> = rows
                .iter()
                .map(|r| {
                    Json::Array(
                        r.iter()
                            .map(|v| match v {
                                Value::Str(s) => Json::String(s.clone()),
                                Value::Num(n) => Json::String(crate::value::format_rational(n)),
                            })
                            .collect(),
                    )
                })
                .collect();
            tables.insert(schema.relation(rel).name.clone(), Json::Array(rows));
        }
        json!({ "tables": tables })
    }
}

fn json_const(kind: DomainKind, v: &Json) -> Option<Value> {
    match (kind, v) {
        (DomainKind::String, Json::String(s)) => Some(Value::Str(s.clone())),
        (DomainKind::String, _) => None,
        (_, Json::Number(n)) => Value::parse_decimal(&n.to_string()),
        (_, Json::String(s)) => Value::parse_decimal(s).or_else(|| parse_fraction(s)),
        _ => None,
    }
    .filter(|val| kind != DomainKind::Integer || val.is_integer())
}

impl fmt::Display for NullId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.domain, self.n)
    }
}
