//! Entities, entity sets and schemas.
//!
//! The interchange format for an entity set is a JSON object keyed by
//! decimal index strings. Each value is a flat object of string values in
//! which `"entity name"` and `"type"` are reserved:
//!
//! ```json
//! {
//!     "0": { "entity name": "Microsoft", "type": "corporation", "cofounder": "Bill Gates" }
//! }
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use indexmap::IndexMap;
use serde::de::{self, Deserialize, Deserializer, MapAccess, Visitor};
use serde::ser::{Serialize, SerializeMap, Serializer};
use serde_json::Value;

use crate::error::{Error, Result};

/// Key holding the entity identifier in the interchange format.
pub const NAME_KEY: &str = "entity name";
/// Key holding the entity type in the interchange format.
pub const TYPE_KEY: &str = "type";

pub fn is_reserved_key(key: &str) -> bool {
    key == NAME_KEY || key == TYPE_KEY
}

/// A named entity with an optional type and text-valued properties.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityRecord {
    name: String,
    entity_type: Option<String>,
    properties: IndexMap<String, String>,
}

impl EntityRecord {
    /// Creates a record without type or properties. The name is stored
    /// verbatim but must contain a non-whitespace character.
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(Error::EmptyName { index: String::new() });
        }
        Ok(Self {
            name,
            entity_type: None,
            properties: IndexMap::new(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn entity_type(&self) -> Option<&str> {
        self.entity_type.as_deref()
    }

    pub fn properties(&self) -> &IndexMap<String, String> {
        &self.properties
    }

    pub fn property(&self, key: &str) -> Option<&str> {
        self.properties.get(key).map(String::as_str)
    }

    pub fn set_type(&mut self, entity_type: Option<String>) {
        self.entity_type = entity_type;
    }

    /// Inserts a property. Reserved keys and keys already present are rejected.
    pub fn insert_property(&mut self, key: impl Into<String>, value: impl Into<String>) -> Result<()> {
        let key = key.into();
        if is_reserved_key(&key) {
            return Err(Error::ReservedKey(key));
        }
        if self.properties.contains_key(&key) {
            return Err(Error::DuplicateKey {
                index: self.name.clone(),
                key,
            });
        }
        self.properties.insert(key, value.into());
        Ok(())
    }

    /// Replaces the value of an existing property, returning the old value.
    pub fn replace_property(&mut self, key: &str, value: impl Into<String>) -> Option<String> {
        self.properties
            .get_mut(key)
            .map(|slot| std::mem::replace(slot, value.into()))
    }

    pub fn with_type(mut self, entity_type: impl Into<String>) -> Self {
        self.entity_type = Some(entity_type.into());
        self
    }

    /// Builder form of [`insert_property`](Self::insert_property).
    ///
    /// # Panics
    ///
    /// Panics if the key is reserved or already present.
    pub fn with_property(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        if let Err(e) = self.insert_property(key, value) {
            panic!("{e}");
        }
        self
    }
}

/// An entity collection. List order is the fixed indexing used by the
/// similarity matrix and assignment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EntitySet {
    entities: Vec<EntityRecord>,
}

impl EntitySet {
    pub fn new(entities: Vec<EntityRecord>) -> Self {
        Self { entities }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&EntityRecord> {
        self.entities.get(index)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, EntityRecord> {
        self.entities.iter()
    }

    pub fn records(&self) -> &[EntityRecord] {
        &self.entities
    }

    pub fn records_mut(&mut self) -> &mut [EntityRecord] {
        &mut self.entities
    }

    pub fn push(&mut self, record: EntityRecord) {
        self.entities.push(record);
    }

    pub fn into_records(self) -> Vec<EntityRecord> {
        self.entities
    }
}

impl FromIterator<EntityRecord> for EntitySet {
    fn from_iter<T: IntoIterator<Item = EntityRecord>>(iter: T) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a EntitySet {
    type Item = &'a EntityRecord;
    type IntoIter = std::slice::Iter<'a, EntityRecord>;

    fn into_iter(self) -> Self::IntoIter {
        self.entities.iter()
    }
}

/// Parses the interchange format into an [`EntitySet`], ordered by
/// ascending numeric index.
pub fn parse_entity_set(document: &str) -> Result<EntitySet> {
    let raw: RawDocument = serde_json::from_str(document).map_err(|e| {
        if e.is_data() {
            Error::MalformedDocument(e.to_string())
        } else {
            Error::Json(e)
        }
    })?;
    raw.into_entity_set()
}

/// Serializes to the compact interchange format.
pub fn serialize_entity_set(set: &EntitySet) -> String {
    serde_json::to_string(set).expect("string maps always serialize")
}

/// Serializes to the interchange format with indentation.
pub fn serialize_entity_set_pretty(set: &EntitySet) -> String {
    serde_json::to_string_pretty(set).expect("string maps always serialize")
}

impl Serialize for EntityRecord {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let len = 1 + usize::from(self.entity_type.is_some()) + self.properties.len();
        let mut map = serializer.serialize_map(Some(len))?;
        map.serialize_entry(NAME_KEY, &self.name)?;
        if let Some(t) = &self.entity_type {
            map.serialize_entry(TYPE_KEY, t)?;
        }
        for (k, v) in &self.properties {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl Serialize for EntitySet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.entities.len()))?;
        for (i, e) in self.entities.iter().enumerate() {
            map.serialize_entry(&i.to_string(), e)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for EntitySet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        RawDocument::deserialize(deserializer)?
            .into_entity_set()
            .map_err(de::Error::custom)
    }
}

/// Key/value pairs in document order, duplicates retained so they can be
/// reported instead of silently collapsed.
struct Pairs<T>(Vec<(String, T)>);

impl<'de, T: Deserialize<'de>> Deserialize<'de> for Pairs<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct PairsVisitor<T>(std::marker::PhantomData<T>);

        impl<'de, T: Deserialize<'de>> Visitor<'de> for PairsVisitor<T> {
            type Value = Pairs<T>;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a JSON object")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> std::result::Result<Self::Value, A::Error> {
                let mut out = Vec::with_capacity(access.size_hint().unwrap_or(0));
                while let Some((k, v)) = access.next_entry::<String, T>()? {
                    out.push((k, v));
                }
                Ok(Pairs(out))
            }
        }

        deserializer.deserialize_map(PairsVisitor(std::marker::PhantomData))
    }
}

struct RawDocument(Vec<(String, Pairs<Value>)>);

impl<'de> Deserialize<'de> for RawDocument {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        Pairs::<Pairs<Value>>::deserialize(deserializer).map(|p| RawDocument(p.0))
    }
}

impl RawDocument {
    fn into_entity_set(self) -> Result<EntitySet> {
        let mut by_index: BTreeMap<u64, EntityRecord> = BTreeMap::new();
        for (index, Pairs(fields)) in self.0 {
            if index.is_empty() || !index.bytes().all(|b| b.is_ascii_digit()) {
                return Err(Error::InvalidIndex(index));
            }
            let position: u64 = index.parse().map_err(|_| Error::InvalidIndex(index.clone()))?;
            if by_index.contains_key(&position) {
                return Err(Error::DuplicateIndex(index));
            }
            let record = record_from_fields(&index, fields)?;
            by_index.insert(position, record);
        }
        Ok(EntitySet::new(by_index.into_values().collect()))
    }
}

fn record_from_fields(index: &str, fields: Vec<(String, Value)>) -> Result<EntityRecord> {
    let mut name = None;
    let mut entity_type = None;
    let mut properties = IndexMap::with_capacity(fields.len());
    for (key, value) in fields {
        let Value::String(value) = value else {
            return Err(Error::NonStringValue {
                index: index.to_string(),
                key,
            });
        };
        let slot = match key.as_str() {
            NAME_KEY => &mut name,
            TYPE_KEY => &mut entity_type,
            _ => {
                if properties.contains_key(&key) {
                    return Err(Error::DuplicateKey {
                        index: index.to_string(),
                        key,
                    });
                }
                properties.insert(key, value);
                continue;
            }
        };
        if slot.replace(value).is_some() {
            return Err(Error::DuplicateKey {
                index: index.to_string(),
                key,
            });
        }
    }
    let name = name.ok_or_else(|| Error::MissingName {
        index: index.to_string(),
    })?;
    if name.trim().is_empty() {
        return Err(Error::EmptyName {
            index: index.to_string(),
        });
    }
    Ok(EntityRecord {
        name,
        entity_type,
        properties,
    })
}

/// Permitted entity types and property keys.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    pub entity_types: BTreeSet<String>,
    pub property_keys: BTreeSet<String>,
    /// Whether callers should treat violations as errors.
    pub strict: bool,
}

impl Schema {
    pub fn new<T, K>(entity_types: T, property_keys: K, strict: bool) -> Self
    where
        T: IntoIterator,
        T::Item: Into<String>,
        K: IntoIterator,
        K::Item: Into<String>,
    {
        Self {
            entity_types: entity_types.into_iter().map(Into::into).collect(),
            property_keys: property_keys.into_iter().map(Into::into).collect(),
            strict,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    UnknownEntityType(String),
    UnknownPropertyKey(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Position of the offending record in the set.
    pub entity: usize,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ViolationKind::UnknownEntityType(t) => {
                write!(f, "entity {}: type `{t}` is not in the schema", self.entity)
            }
            ViolationKind::UnknownPropertyKey(k) => {
                write!(f, "entity {}: property key `{k}` is not in the schema", self.entity)
            }
        }
    }
}

/// Lists every out-of-schema entity type and property key. Records without
/// a type are not flagged.
pub fn validate(set: &EntitySet, schema: &Schema) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, record) in set.iter().enumerate() {
        if let Some(t) = record.entity_type() {
            if !schema.entity_types.contains(t) {
                out.push(Violation {
                    entity: i,
                    kind: ViolationKind::UnknownEntityType(t.to_string()),
                });
            }
        }
        for key in record.properties().keys() {
            if !schema.property_keys.contains(key) {
                out.push(Violation {
                    entity: i,
                    kind: ViolationKind::UnknownPropertyKey(key.clone()),
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document() {
        let set = parse_entity_set("{}").unwrap();
        assert!(set.is_empty());
        assert_eq!(serialize_entity_set(&set), "{}");
    }

    #[test]
    fn orders_by_numeric_index() {
        let set =
            parse_entity_set(r#"{"10": {"entity name": "c"}, "2": {"entity name": "b"}, "0": {"entity name": "a"}}"#)
                .unwrap();
        let names: Vec<_> = set.iter().map(EntityRecord::name).collect();
        assert_eq!(names, ["a", "b", "c"]);
    }

    #[test]
    fn lifts_reserved_keys() {
        let set = parse_entity_set(
            r#"{"0": {"type": "corporation", "entity name": "Microsoft", "cofounder": "Bill Gates"}}"#,
        )
        .unwrap();
        let e = &set.records()[0];
        assert_eq!(e.name(), "Microsoft");
        assert_eq!(e.entity_type(), Some("corporation"));
        assert_eq!(e.properties().len(), 1);
        assert_eq!(e.property("cofounder"), Some("Bill Gates"));
    }

    #[test]
    fn missing_type_is_absent() {
        let set = parse_entity_set(r#"{"0": {"entity name": "x"}}"#).unwrap();
        assert_eq!(set.records()[0].entity_type(), None);
    }

    #[test]
    fn serializes_reserved_keys_first() {
        let set = EntitySet::new(vec![EntityRecord::new("Microsoft")
            .unwrap()
            .with_type("corporation")
            .with_property("cofounder", "Bill Gates")]);
        assert_eq!(
            serialize_entity_set(&set),
            r#"{"0":{"entity name":"Microsoft","type":"corporation","cofounder":"Bill Gates"}}"#
        );
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse_entity_set("[1, 2]"), Err(Error::MalformedDocument(_))));
        assert!(matches!(parse_entity_set("{"), Err(Error::Json(_))));
        assert!(matches!(
            parse_entity_set(r#"{"0": {"type": "human"}}"#),
            Err(Error::MissingName { .. })
        ));
        assert!(matches!(
            parse_entity_set(r#"{"0": {"entity name": "  "}}"#),
            Err(Error::EmptyName { .. })
        ));
        assert!(matches!(
            parse_entity_set(r#"{"0": {"entity name": "a", "age": 3}}"#),
            Err(Error::NonStringValue { .. })
        ));
        assert!(matches!(
            parse_entity_set(r#"{"0": {"entity name": "a"}, "0": {"entity name": "b"}}"#),
            Err(Error::DuplicateIndex(_))
        ));
        assert!(matches!(
            parse_entity_set(r#"{"0": {"entity name": "a"}, "00": {"entity name": "b"}}"#),
            Err(Error::DuplicateIndex(_))
        ));
        assert!(matches!(
            parse_entity_set(r#"{"first": {"entity name": "a"}}"#),
            Err(Error::InvalidIndex(_))
        ));
        assert!(matches!(
            parse_entity_set(r#"{"0": {"entity name": "a", "k": "1", "k": "2"}}"#),
            Err(Error::DuplicateKey { .. })
        ));
        assert!(matches!(
            parse_entity_set(r#"{"0": {"entity name": "a", "entity name": "b"}}"#),
            Err(Error::DuplicateKey { .. })
        ));
        assert!(matches!(
            parse_entity_set(r#"{"0": "a"}"#),
            Err(Error::MalformedDocument(_))
        ));
    }

    #[test]
    fn reserved_keys_rejected_in_properties() {
        let mut e = EntityRecord::new("a").unwrap();
        assert!(matches!(e.insert_property("type", "x"), Err(Error::ReservedKey(_))));
        assert!(matches!(
            e.insert_property("entity name", "x"),
            Err(Error::ReservedKey(_))
        ));
        e.insert_property("Type", "x").unwrap();
    }

    #[test]
    fn validate_against_schema() {
        let schema = Schema::new(["human"], ["country"], true);
        let ok = EntitySet::new(vec![EntityRecord::new("a")
            .unwrap()
            .with_type("human")
            .with_property("country", "x")]);
        assert!(validate(&ok, &schema).is_empty());

        let bad = EntitySet::new(vec![EntityRecord::new("a")
            .unwrap()
            .with_type("robot")
            .with_property("favorite color", "x")]);
        let v = validate(&bad, &schema);
        assert_eq!(v.len(), 2);
        assert_eq!(v[0].kind, ViolationKind::UnknownEntityType("robot".into()));
        assert_eq!(v[1].kind, ViolationKind::UnknownPropertyKey("favorite color".into()));

        assert!(validate(&EntitySet::empty(), &schema).is_empty());
    }
}
