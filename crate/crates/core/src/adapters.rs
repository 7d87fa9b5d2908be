//! Triplet datasets and their conversion into entity sets.
//!
//! Accepted JSONL layouts, one sample per line:
//!
//! * `nyt`: `{"sentText": .., "entityMentions": [{"text", "label"}],
//!   "relationMentions": [{"em1Text", "em2Text", "label"}]}`. The subject
//!   type is the label of the entity mention whose text equals `em1Text`.
//! * `conll04`: `{"tokens": [..], "entities": [{"type", "start", "end"}],
//!   "relations": [{"type", "head", "tail"}]}` with token spans end-exclusive
//!   and `head`/`tail` indexing `entities`.
//! * `rebel`: `{"text": .., "triples": [{"subject": {"surfaceform"},
//!   "predicate": {"surfaceform"}, "object": {"surfaceform"}}]}`. REBEL
//!   carries no types, so subjects get the policy default.
//!
//! Every layout accepts an optional `"id"` (string or integer); otherwise
//! the 0-based sample position is used. Unknown fields are ignored.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::Deserialize;

use crate::corpus::{jsonl_lines, Sample};
use crate::entity::{is_reserved_key, EntityRecord, EntitySet, Schema};
use crate::error::{Error, Result};
use crate::metric::RELATION_KEY_PREFIX;

/// Sentinel type for subjects whose source provides none.
pub const UNKNOWN_TYPE: &str = "unknown";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TripletRecord {
    pub subject: String,
    pub relation: String,
    pub object: String,
    pub subject_type: Option<String>,
}

impl TripletRecord {
    pub fn new(
        subject: impl Into<String>,
        relation: impl Into<String>,
        object: impl Into<String>,
        subject_type: Option<String>,
    ) -> Result<Self> {
        let t = Self {
            subject: subject.into(),
            relation: relation.into(),
            object: object.into(),
            subject_type,
        };
        for (field, value) in [
            ("subject", &t.subject),
            ("relation", &t.relation),
            ("object", &t.object),
        ] {
            if value.trim().is_empty() {
                return Err(Error::InvalidTriplet(format!("empty {field}")));
            }
        }
        Ok(t)
    }
}

/// Entity type for subjects that carry none.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum TypePolicy {
    /// Leave the type absent.
    #[default]
    Absent,
    /// Use the given type.
    Fixed(String),
}

impl TypePolicy {
    pub fn unknown() -> Self {
        Self::Fixed(UNKNOWN_TYPE.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConversionWarning {
    /// A second object for an existing (subject, relation) was dropped.
    ConflictingObject {
        subject: String,
        relation: String,
        kept: String,
        dropped: String,
    },
    /// A second type for an existing subject was dropped.
    ConflictingType {
        subject: String,
        kept: String,
        dropped: String,
    },
    /// The relation collided with a reserved key and was renamed.
    ReservedRelation {
        subject: String,
        relation: String,
        renamed: String,
    },
}

impl fmt::Display for ConversionWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ConflictingObject {
                subject,
                relation,
                kept,
                dropped,
            } => write!(f, "`{subject}` / `{relation}`: kept `{kept}`, dropped `{dropped}`"),
            Self::ConflictingType { subject, kept, dropped } => {
                write!(f, "`{subject}`: kept type `{kept}`, dropped `{dropped}`")
            }
            Self::ReservedRelation {
                subject,
                relation,
                renamed,
            } => write!(f, "`{subject}`: relation `{relation}` renamed to `{renamed}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Conversion {
    pub entities: EntitySet,
    pub warnings: Vec<ConversionWarning>,
}

/// Groups triplets by exact subject string, in order of first appearance.
/// Each relation becomes a property key and each object its value.
pub fn convert_triplets(triplets: &[TripletRecord], policy: &TypePolicy) -> Conversion {
    struct Pending {
        entity_type: Option<String>,
        properties: IndexMap<String, String>,
    }

    let mut subjects: IndexMap<&str, Pending> = IndexMap::new();
    let mut warnings = Vec::new();
    for t in triplets {
        let entry = subjects.entry(&t.subject).or_insert_with(|| Pending {
            entity_type: None,
            properties: IndexMap::new(),
        });
        if let Some(ty) = &t.subject_type {
            match &entry.entity_type {
                None => entry.entity_type = Some(ty.clone()),
                Some(kept) if kept != ty => warnings.push(ConversionWarning::ConflictingType {
                    subject: t.subject.clone(),
                    kept: kept.clone(),
                    dropped: ty.clone(),
                }),
                Some(_) => {}
            }
        }
        let key = if is_reserved_key(&t.relation) {
            let renamed = format!("{RELATION_KEY_PREFIX}{}", t.relation);
            warnings.push(ConversionWarning::ReservedRelation {
                subject: t.subject.clone(),
                relation: t.relation.clone(),
                renamed: renamed.clone(),
            });
            renamed
        } else {
            t.relation.clone()
        };
        match entry.properties.get(&key) {
            None => {
                entry.properties.insert(key, t.object.clone());
            }
            Some(kept) if *kept != t.object => warnings.push(ConversionWarning::ConflictingObject {
                subject: t.subject.clone(),
                relation: t.relation.clone(),
                kept: kept.clone(),
                dropped: t.object.clone(),
            }),
            Some(_) => {}
        }
    }

    let entities = subjects
        .into_iter()
        .map(|(subject, pending)| {
            let mut e = EntityRecord::new(subject).expect("triplet subjects are non-empty");
            e.set_type(pending.entity_type.or_else(|| match policy {
                TypePolicy::Absent => None,
                TypePolicy::Fixed(t) => Some(t.clone()),
            }));
            for (k, v) in pending.properties {
                e.insert_property(k, v).expect("keys are unique and unreserved");
            }
            e
        })
        .collect();
    Conversion { entities, warnings }
}

/// Flattens an entity set back into (name, key, value) triplets. The type
/// is not a relation and is not emitted.
pub fn entity_set_to_triplets(set: &EntitySet) -> Vec<TripletRecord> {
    set.iter()
        .flat_map(|e| {
            e.properties().iter().filter_map(move |(k, v)| {
                TripletRecord::new(e.name(), k.as_str(), v.as_str(), e.entity_type().map(str::to_string)).ok()
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TripletFormat {
    Nyt,
    Conll04,
    Rebel,
}

impl TripletFormat {
    /// Type policy applied to subjects without a type.
    pub fn default_type_policy(self) -> TypePolicy {
        match self {
            Self::Nyt | Self::Conll04 => TypePolicy::Absent,
            Self::Rebel => TypePolicy::unknown(),
        }
    }
}

impl FromStr for TripletFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nyt" => Ok(Self::Nyt),
            "conll04" => Ok(Self::Conll04),
            "rebel" => Ok(Self::Rebel),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripletSample {
    pub id: String,
    pub text: Option<String>,
    pub triplets: Vec<TripletRecord>,
}

impl TripletSample {
    /// Converts into an entity-centric corpus sample.
    pub fn into_sample(self, policy: &TypePolicy) -> (Sample, Vec<ConversionWarning>) {
        let Conversion { entities, warnings } = convert_triplets(&self.triplets, policy);
        (Sample::new(self.id, self.text, entities), warnings)
    }
}

pub fn read_triplet_file(path: impl AsRef<Path>, format: TripletFormat) -> Result<Vec<TripletSample>> {
    let path = path.as_ref();
    let input = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_triplet_jsonl(&input, format, &path.display().to_string())
}

/// Parses triplet JSONL from memory. `origin` labels error messages.
pub fn parse_triplet_jsonl(input: &str, format: TripletFormat, origin: &str) -> Result<Vec<TripletSample>> {
    jsonl_lines(input)
        .enumerate()
        .map(|(position, (line, text))| {
            parse_line(text, format, position).map_err(|message| Error::Line {
                path: origin.to_string(),
                line,
                message,
            })
        })
        .collect()
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SampleId {
    Text(String),
    Number(i64),
}

fn sample_id(id: Option<SampleId>, position: usize) -> String {
    match id {
        Some(SampleId::Text(s)) => s,
        Some(SampleId::Number(n)) => n.to_string(),
        None => position.to_string(),
    }
}

fn triplet(subject: String, relation: String, object: String, ty: Option<String>) -> Result<TripletRecord, String> {
    TripletRecord::new(subject, relation, object, ty).map_err(|e| e.to_string())
}

fn from_line<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, String> {
    serde_json::from_str(text).map_err(|e| e.to_string())
}

fn parse_line(text: &str, format: TripletFormat, position: usize) -> Result<TripletSample, String> {
    match format {
        TripletFormat::Nyt => nyt(from_line(text)?, position),
        TripletFormat::Conll04 => conll04(from_line(text)?, position),
        TripletFormat::Rebel => rebel(from_line(text)?, position),
    }
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct NytLine {
    id: Option<SampleId>,
    sent_text: String,
    #[serde(default)]
    entity_mentions: Vec<NytEntity>,
    relation_mentions: Vec<NytRelation>,
}

#[derive(Deserialize)]
struct NytEntity {
    text: String,
    label: String,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct NytRelation {
    em1_text: String,
    em2_text: String,
    label: String,
}

fn nyt(line: NytLine, position: usize) -> Result<TripletSample, String> {
    let triplets = line
        .relation_mentions
        .into_iter()
        .map(|r| {
            let ty = line
                .entity_mentions
                .iter()
                .find(|e| e.text == r.em1_text)
                .map(|e| e.label.clone());
            triplet(r.em1_text, r.label, r.em2_text, ty)
        })
        .collect::<Result<_, _>>()?;
    Ok(TripletSample {
        id: sample_id(line.id, position),
        text: Some(line.sent_text),
        triplets,
    })
}

#[derive(Deserialize)]
struct ConllLine {
    id: Option<SampleId>,
    tokens: Vec<String>,
    entities: Vec<ConllEntity>,
    relations: Vec<ConllRelation>,
}

#[derive(Deserialize)]
struct ConllEntity {
    #[serde(rename = "type")]
    entity_type: String,
    start: usize,
    end: usize,
}

#[derive(Deserialize)]
struct ConllRelation {
    #[serde(rename = "type")]
    relation: String,
    head: usize,
    tail: usize,
}

fn conll04(line: ConllLine, position: usize) -> Result<TripletSample, String> {
    let span = |index: usize| -> Result<(String, &str), String> {
        let e = line
            .entities
            .get(index)
            .ok_or_else(|| format!("relation refers to missing entity {index}"))?;
        if e.start >= e.end || e.end > line.tokens.len() {
            return Err(format!("entity span {}..{} out of range", e.start, e.end));
        }
        Ok((line.tokens[e.start..e.end].join(" "), e.entity_type.as_str()))
    };
    let triplets = line
        .relations
        .iter()
        .map(|r| {
            let (subject, ty) = span(r.head)?;
            let (object, _) = span(r.tail)?;
            triplet(subject, r.relation.clone(), object, Some(ty.to_string()))
        })
        .collect::<Result<_, _>>()?;
    Ok(TripletSample {
        id: sample_id(line.id, position),
        text: Some(line.tokens.join(" ")),
        triplets,
    })
}

#[derive(Deserialize)]
struct RebelLine {
    id: Option<SampleId>,
    text: String,
    triples: Vec<RebelTriple>,
}

#[derive(Deserialize)]
struct RebelTriple {
    subject: SurfaceForm,
    predicate: SurfaceForm,
    object: SurfaceForm,
}

#[derive(Deserialize)]
struct SurfaceForm {
    surfaceform: String,
}

fn rebel(line: RebelLine, position: usize) -> Result<TripletSample, String> {
    let triplets = line
        .triples
        .into_iter()
        .map(|t| {
            triplet(
                t.subject.surfaceform,
                t.predicate.surfaceform,
                t.object.surfaceform,
                None,
            )
        })
        .collect::<Result<_, _>>()?;
    Ok(TripletSample {
        id: sample_id(line.id, position),
        text: Some(line.text),
        triplets,
    })
}

pub const WIKIDATA_ENTITY_TYPES: [&str; 10] = [
    "talk",
    "system",
    "spatio-temporal entity",
    "product",
    "natural object",
    "human",
    "geographical feature",
    "corporate body",
    "concrete object",
    "artificial object",
];

pub const WIKIDATA_PROPERTY_KEYS: [&str; 10] = [
    "capital",
    "family name",
    "place of death",
    "part of",
    "location",
    "country",
    "given name",
    "languages spoken, written or signed",
    "occupation",
    "named after",
];

/// The ten entity types and ten property keys of the Wikidata-based
/// dataset (name and type excluded). Not strict.
pub fn builtin_wikidata_schema() -> Schema {
    Schema::new(WIKIDATA_ENTITY_TYPES, WIKIDATA_PROPERTY_KEYS, false)
}
