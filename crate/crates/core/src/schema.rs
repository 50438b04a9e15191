//! Relational schemas: named domains, relations over typed attributes and
//! foreign keys between them.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Integer,
    Rational,
    String,
}

impl DomainKind {
    pub fn is_numeric(self) -> bool {
        !matches!(self, DomainKind::String)
    }

    fn parse(text: &str) -> Result<DomainKind> {
        match text {
            "integer" => Ok(DomainKind::Integer),
            "rational" => Ok(DomainKind::Rational),
            "string" => Ok(DomainKind::String),
            other => Err(Error::UnknownKind(other.to_string())),
        }
    }
}

/// Index of a domain inside its schema.
pub type DomainId = usize;
/// Index of a relation inside its schema.
pub type RelId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainDef {
    pub name: String,
    pub kind: DomainKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttributeDef {
    pub name: String,
    pub domain: DomainId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationDef {
    pub name: String,
    pub attributes: Vec<AttributeDef>,
    /// Positions of the primary key; empty when the relation has none.
    pub key: Vec<usize>,
}

impl RelationDef {
    pub fn arity(&self) -> usize {
        self.attributes.len()
    }
}

/// `from_relation.from_attribute` references `to_relation.to_attribute`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForeignKey {
    pub from_relation: RelId,
    pub from_attribute: usize,
    pub to_relation: RelId,
    pub to_attribute: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schema {
    pub domains: Vec<DomainDef>,
    pub relations: Vec<RelationDef>,
    pub foreign_keys: Vec<ForeignKey>,
    rel_index: HashMap<String, RelId>,
    dom_index: HashMap<String, DomainId>,
}

#[derive(Serialize, Deserialize, Default)]
struct SchemaDoc {
    #[serde(default)]
    domains: Vec<DomainDoc>,
    #[serde(default)]
    relations: Vec<RelationDoc>,
    #[serde(default)]
    foreign_keys: Vec<ForeignKeyDoc>,
}

#[derive(Serialize, Deserialize)]
struct DomainDoc {
    name: String,
    kind: String,
}

#[derive(Serialize, Deserialize)]
struct RelationDoc {
    name: String,
    attrs: Vec<AttrDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    key: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct AttrDoc {
    name: String,
    domain: String,
}

#[derive(Serialize, Deserialize)]
struct ForeignKeyDoc {
    from_rel: String,
    from_attr: String,
    to_rel: String,
    to_attr: String,
}

/// Loads a schema from TOML, or from JSON when the text starts with `{`.
pub fn load_schema(text: &str) -> Result<Schema> {
    let doc: SchemaDoc = if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| Error::SchemaFormat(e.to_string()))?
    } else {
        toml::from_str(text).map_err(|e| Error::SchemaFormat(e.to_string()))?
    };
    Schema::from_doc(doc)
}

impl Schema {
    fn from_doc(doc: SchemaDoc) -> Result<Schema> {
        let mut domains = Vec::new();
        let mut dom_index = HashMap::new();
        for d in doc.domains {
            if dom_index.contains_key(&d.name) {
                return Err(Error::Duplicate { kind: "domain", name: d.name });
            }
            dom_index.insert(d.name.clone(), domains.len());
            domains.push(DomainDef { name: d.name, kind: DomainKind::parse(&d.kind)? });
        }
        let mut relations = Vec::new();
        let mut rel_index = HashMap::new();
        for r in doc.relations {
            if rel_index.contains_key(&r.name) {
                return Err(Error::Duplicate { kind: "relation", name: r.name });
            }
            if r.attrs.is_empty() {
                return Err(Error::EmptyRelation(r.name));
            }
            let mut seen = HashSet::new();
            let mut attributes = Vec::new();
            for a in r.attrs {
                if !seen.insert(a.name.clone()) {
                    return Err(Error::Duplicate { kind: "attribute", name: format!("{}.{}", r.name, a.name) });
                }
                let domain = *dom_index.get(&a.domain).ok_or_else(|| Error::UnknownDomain(a.domain.clone()))?;
                attributes.push(AttributeDef { name: a.name, domain });
            }
            let mut key = Vec::new();
            for k in &r.key {
                let pos = attributes.iter().position(|a| &a.name == k).ok_or_else(|| Error::UnknownAttribute {
                    relation: r.name.clone(),
                    attribute: k.clone(),
                })?;
                if key.contains(&pos) {
                    return Err(Error::Duplicate { kind: "key attribute", name: format!("{}.{k}", r.name) });
                }
                key.push(pos);
            }
            rel_index.insert(r.name.clone(), relations.len());
            relations.push(RelationDef { name: r.name, attributes, key });
        }
        let mut schema = Schema { domains, relations, foreign_keys: Vec::new(), rel_index, dom_index };
        for fk in doc.foreign_keys {
            let from_relation = schema.relation_id(&fk.from_rel)?;
            let to_relation = schema.relation_id(&fk.to_rel)?;
            let from_attribute = schema.attribute_index(from_relation, &fk.from_attr)?;
            let to_attribute = schema.attribute_index(to_relation, &fk.to_attr)?;
            let d1 = schema.relations[from_relation].attributes[from_attribute].domain;
            let d2 = schema.relations[to_relation].attributes[to_attribute].domain;
            if d1 != d2 {
                return Err(Error::ForeignKeyDomain {
                    from: format!("{}.{}", fk.from_rel, fk.from_attr),
                    to: format!("{}.{}", fk.to_rel, fk.to_attr),
                });
            }
            schema.foreign_keys.push(ForeignKey { from_relation, from_attribute, to_relation, to_attribute });
        }
        schema.check_acyclic()?;
        Ok(schema)
    }

    fn check_acyclic(&self) -> Result<()> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; self.relations.len()];
        fn visit(s: &Schema, r: RelId, state: &mut [u8]) -> Result<()> {
            state[r] = 1;
            for fk in s.foreign_keys.iter().filter(|fk| fk.from_relation == r) {
                match state[fk.to_relation] {
                    1 => return Err(Error::CyclicForeignKeys(s.relations[fk.to_relation].name.clone())),
                    0 => visit(s, fk.to_relation, state)?,
                    _ => {}
                }
            }
            state[r] = 2;
            Ok(())
        }
        for r in 0..self.relations.len() {
            if state[r] == 0 {
                visit(self, r, &mut state)?;
            }
        }
        Ok(())
    }

    pub fn relation_id(&self, name: &str) -> Result<RelId> {
        self.rel_index.get(name).copied().ok_or_else(|| Error::UnknownRelation(name.to_string()))
    }

    pub fn domain_id(&self, name: &str) -> Result<DomainId> {
        self.dom_index.get(name).copied().ok_or_else(|| Error::UnknownDomain(name.to_string()))
    }

    pub fn relation(&self, id: RelId) -> &RelationDef {
        &self.relations[id]
    }

    pub fn domain(&self, id: DomainId) -> &DomainDef {
        &self.domains[id]
    }

    fn attribute_index(&self, rel: RelId, name: &str) -> Result<usize> {
        let r = &self.relations[rel];
        r.attributes.iter().position(|a| a.name == name).ok_or_else(|| Error::UnknownAttribute {
            relation: r.name.clone(),
            attribute: name.to_string(),
        })
    }

    /// The domain governing `relation[position]`.
    pub fn domain_of(&self, relation: &str, position: usize) -> Result<&DomainDef> {
        let rel = self.relation(self.relation_id(relation)?);
        let attr = rel.attributes.get(position).ok_or_else(|| Error::PositionOutOfRange {
            relation: rel.name.clone(),
            position,
            arity: rel.arity(),
        })?;
        Ok(&self.domains[attr.domain])
    }

    pub fn attr_domain(&self, rel: RelId, position: usize) -> DomainId {
        self.relations[rel].attributes[position].domain
    }

    /// Foreign keys leaving `rel`.
    pub fn fks_from(&self, rel: RelId) -> impl Iterator<Item = &ForeignKey> {
        self.foreign_keys.iter().filter(move |fk| fk.from_relation == rel)
    }

    /// Serializes back to the TOML document format.
    pub fn to_toml(&self) -> String {
        let doc = SchemaDoc {
            domains: self
                .domains
                .iter()
                .map(|d| DomainDoc {
                    name: d.name.clone(),
                    kind: match d.kind {
                        DomainKind::Integer => "integer",
                        DomainKind::Rational => "rational",
                        DomainKind::String => "string",
                    }
                    .to_string(),
                })
                .collect(),
            relations: self
                .relations
                .iter()
                .map(|r| RelationDoc {
                    name: r.name.clone(),
                    attrs: r
                        .attributes
                        .iter()
                        .map(|a| AttrDoc { name: a.name.clone(), domain: self.domains[a.domain].name.clone() })
                        .collect(),
                    key: r.key.iter().map(|&k| r.attributes[k].name.clone()).collect(),
                })
                .collect(),
            foreign_keys: self
                .foreign_keys
                .iter()
                .map(|fk| ForeignKeyDoc {
                    from_rel: self.relations[fk.from_relation].name.clone(),
                    from_attr: self.relations[fk.from_relation].attributes[fk.from_attribute].name.clone(),
                    to_rel: self.relations[fk.to_relation].name.clone(),
                    to_attr: self.relations[fk.to_relation].attributes[fk.to_attribute].name.clone(),
                })
                .collect(),
        };
        toml::to_string(&doc).expect("schema document serializes")
    }

    /// Relation names mapped to ids, in name order.
    pub fn relations_by_name(&self) -> BTreeMap<&str, RelId> {
        self.relations.iter().enumerate().map(|(i, r)| (r.name.as_str(), i)).collect()
    }
}
