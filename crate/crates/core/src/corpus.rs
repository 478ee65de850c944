//! Hierarchical corpus: work → functional units → recursive commentary
//! layers, plus witnesses and their readings.
//!
//! Every mutating method validates completely before it touches any state,
//! so a failed call leaves the corpus unchanged.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::collation::{nfc, tokenize};
use crate::evidence::{EvidenceAnnotation, EvidenceTaxonomy, NewAnnotation, TokenSpan};

pub const DEFAULT_SIBLING_LIMIT: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("id `{0}` already exists")]
    DuplicateId(String),
    #[error("unknown work `{0}`")]
    UnknownWork(String),
    #[error("malformed id `{0}`: expected dotted decimal such as 1.1.1.2")]
    MalformedId(String),
    #[error("unit kind {kind} is not allowed at `{unit}`")]
    KindMismatch { unit: String, kind: String },
    #[error("no node at path `{0}`")]
    UnknownPath(String),
    #[error("malformed path `{0}`")]
    MalformedPath(String),
    #[error("malformed label `{0}`: labels are non-empty and contain no whitespace, `/` or `~`")]
    MalformedLabel(String),
    #[error("label `{label}` already used under `{parent}`")]
    DuplicateLabel { parent: String, label: String },
    #[error("`{parent}` already has the maximum of {limit} layers")]
    SiblingLimitExceeded { parent: String, limit: usize },
    #[error("revision conflict on `{path}`: expected {expected}, current {current}")]
    RevisionConflict { path: String, expected: u64, current: u64 },
    #[error("unknown unit `{0}`")]
    UnknownUnit(String),
    #[error("unit `{0}` exists in more than one work; qualify it with the work id")]
    AmbiguousUnit(String),
    #[error("unknown witness `{0}`")]
    UnknownWitness(String),
    #[error("witness `{witness}` already has a reading for `{unit}`")]
    DuplicateReading { unit: String, witness: String },
    #[error("commentary-derived witnesses are generated, not entered")]
    ReservedWitnessKind,
    #[error("malformed date range `{0}`: expected YYYY or YYYY/YYYY")]
    MalformedDate(String),
    #[error("malformed taxonomy: {0}")]
    MalformedTaxonomy(String),
    #[error("subtype `{subtype}` listed twice under {kind}")]
    DuplicateSubtype { kind: String, subtype: String },
    #[error("span [{start},{end}) is out of range for `{unit}` ({token_count} tokens)")]
    SpanOutOfRange { unit: String, start: usize, end: usize, token_count: usize },
    #[error("subtype {subtype:?} is not valid for evidence kind {kind}")]
    SubtypeMismatch { kind: String, subtype: Option<String> },
    #[error("no layer labelled `{0}`")]
    UnknownLayerLabel(String),
    #[error("unknown annotation `{0}`")]
    UnknownAnnotation(String),
    #[error("taxonomy change would orphan subtype `{subtype}` used by annotation `{annotation}`")]
    TaxonomyInUse { annotation: String, subtype: String },
}

impl CorpusError {
    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        use CorpusError::*;
        match self {
            DuplicateId(_) => "DuplicateId",
            UnknownWork(_) => "UnknownWork",
            MalformedId(_) => "MalformedId",
            KindMismatch { .. } => "KindMismatch",
            UnknownPath(_) => "UnknownPath",
            MalformedPath(_) => "MalformedPath",
            MalformedLabel(_) => "MalformedLabel",
            DuplicateLabel { .. } => "DuplicateLabel",
            SiblingLimitExceeded { .. } => "SiblingLimitExceeded",
            RevisionConflict { .. } => "RevisionConflict",
            UnknownUnit(_) => "UnknownUnit",
            AmbiguousUnit(_) => "AmbiguousUnit",
            UnknownWitness(_) => "UnknownWitness",
            DuplicateReading { .. } => "DuplicateReading",
            ReservedWitnessKind => "ReservedWitnessKind",
            MalformedDate(_) => "MalformedDate",
            MalformedTaxonomy(_) => "MalformedTaxonomy",
            DuplicateSubtype { .. } => "DuplicateSubtype",
            SpanOutOfRange { .. } => "SpanOutOfRange",
            SubtypeMismatch { .. } => "SubtypeMismatch",
            UnknownLayerLabel(_) => "UnknownLayerLabel",
            UnknownAnnotation(_) => "UnknownAnnotation",
            TaxonomyInUse { .. } => "TaxonomyInUse",
        }
    }

    /// True for "does not exist" errors.
    pub fn is_not_found(&self) -> bool {
        matches!(
            self,
            CorpusError::UnknownWork(_)
                | CorpusError::UnknownPath(_)
                | CorpusError::UnknownUnit(_)
                | CorpusError::UnknownWitness(_)
                | CorpusError::UnknownLayerLabel(_)
                | CorpusError::UnknownAnnotation(_)
        )
    }
}

/// Dotted-decimal functional unit id such as `1.1.1.2`.
///
/// Ordering is numeric segment by segment, so `1.1.9 < 1.1.10` and a unit
/// sorts directly before its own sub-sections.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UnitId {
    text: String,
    segments: Vec<u64>,
}

impl UnitId {
    pub fn segments(&self) -> &[u64] {
        &self.segments
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    /// Ids formed by dropping trailing segments, nearest first.
    pub fn ancestors(&self) -> impl Iterator<Item = UnitId> + '_ {
        (1..self.segments.len()).rev().map(move |n| {
            let segments = self.segments[..n].to_vec();
            let text = segments.iter().map(u64::to_string).collect::<Vec<_>>().join(".");
            UnitId { text, segments }
        })
    }
}

impl FromStr for UnitId {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || CorpusError::MalformedId(s.to_owned());
        if s.is_empty() {
            return Err(malformed());
        }
        let segments = s
            .split('.')
            .map(|seg| {
                if seg.is_empty() || !seg.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(malformed());
                }
                seg.parse::<u64>().map_err(|_| malformed())
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(UnitId { text: s.to_owned(), segments })
    }
}

impl Ord for UnitId {
    fn cmp(&self, other: &Self) -> Ordering {
        self.segments
            .cmp(&other.segments)
            .then_with(|| self.text.cmp(&other.text))
    }
}

impl PartialOrd for UnitId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for UnitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl Serialize for UnitId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.text)
    }
}

impl<'de> Deserialize<'de> for UnitId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnitKind {
    Sutra,
    IntroductionMeaning,
    Examples,
    OtherOccurrences,
    Other(String),
}

impl UnitKind {
    /// Section position a kind is bound to within a four-segment id.
    fn section_index(&self) -> Option<u64> {
        match self {
            UnitKind::IntroductionMeaning => Some(1),
            UnitKind::Examples => Some(2),
            UnitKind::OtherOccurrences => Some(3),
            _ => None,
        }
    }

    fn check_placement(&self, id: &UnitId) -> Result<(), CorpusError> {
        let depth = id.segments().len();
        let ok = match self {
            UnitKind::Sutra => depth == 3,
            UnitKind::Other(_) => true,
            section => depth == 4 && section.section_index() == id.segments().last().copied(),
        };
        if ok {
            Ok(())
        } else {
            Err(CorpusError::KindMismatch { unit: id.to_string(), kind: self.to_string() })
        }
    }
}

impl fmt::Display for UnitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnitKind::Sutra => f.write_str("Sutra"),
            UnitKind::IntroductionMeaning => f.write_str("IntroductionMeaning"),
            UnitKind::Examples => f.write_str("Examples"),
            UnitKind::OtherOccurrences => f.write_str("OtherOccurrences"),
            UnitKind::Other(name) => write!(f, "Other({name})"),
        }
    }
}

impl FromStr for UnitKind {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "Sutra" | "sutra" => UnitKind::Sutra,
            "IntroductionMeaning" | "introduction-meaning" => UnitKind::IntroductionMeaning,
            "Examples" | "examples" => UnitKind::Examples,
            "OtherOccurrences" | "other-occurrences" => UnitKind::OtherOccurrences,
            other => match other.strip_prefix("Other(").and_then(|r| r.strip_suffix(')')) {
                Some(name) if !name.is_empty() => UnitKind::Other(name.to_owned()),
                _ => return Err(CorpusError::MalformedId(format!("unit kind {other}"))),
            },
        })
    }
}

/// Address of a node: a work, a unit of that work, or a layer reached from
/// the unit through a chain of labels. Rendered as `KV/1.1.1/Ny/Tp`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodePath {
    pub work: String,
    pub unit: Option<UnitId>,
    pub layers: Vec<String>,
}

impl NodePath {
    pub fn work(work: impl Into<String>) -> Self {
        NodePath { work: work.into(), unit: None, layers: Vec::new() }
    }

    pub fn unit(work: impl Into<String>, unit: UnitId) -> Self {
        NodePath { work: work.into(), unit: Some(unit), layers: Vec::new() }
    }

    pub fn child(&self, label: impl Into<String>) -> Self {
        let mut p = self.clone();
        p.layers.push(label.into());
        p
    }

    pub fn parent(&self) -> Option<NodePath> {
        let mut p = self.clone();
        if p.layers.pop().is_some() {
            Some(p)
        } else if p.unit.take().is_some() {
            Some(p)
        } else {
            None
        }
    }

    pub fn is_layer(&self) -> bool {
        !self.layers.is_empty()
    }

    /// Label of the layer this path points at, if any.
    pub fn label(&self) -> Option<&str> {
        self.layers.last().map(String::as_str)
    }

    /// Renders the path with `sep` between segments.
    pub fn render(&self, sep: char) -> String {
        let mut out = self.work.clone();
        if let Some(unit) = &self.unit {
            out.push(sep);
            out.push_str(unit.as_str());
        }
        for label in &self.layers {
            out.push(sep);
            out.push_str(label);
        }
        out
    }

    /// Parses a path whose segments are separated by `sep`.
    pub fn parse_with(s: &str, sep: char) -> Result<Self, CorpusError> {
        let malformed = || CorpusError::MalformedPath(s.to_owned());
        let mut parts = s.split(sep);
        let work = parts.next().filter(|w| !w.is_empty()).ok_or_else(malformed)?;
        validate_label(work).map_err(|_| malformed())?;
        let unit = match parts.next() {
            Some(u) => Some(u.parse::<UnitId>().map_err(|_| malformed())?),
            None => None,
        };
        let layers = parts
            .map(|l| validate_label(l).map(|_| l.to_owned()).map_err(|_| malformed()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(NodePath { work: work.to_owned(), unit, layers })
    }

    /// URL form: segments joined with `~` so that the path fits one URL
    /// segment.
    pub fn to_url_segment(&self) -> String {
        self.render('~')
    }

    pub fn from_url_segment(s: &str) -> Result<Self, CorpusError> {
        Self::parse_with(s, '~')
    }
}

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render('/'))
    }
}

impl FromStr for NodePath {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse_with(s, '/')
    }
}

impl Serialize for NodePath {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NodePath {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Labels and work ids: non-empty, no whitespace, no control characters,
/// no `/` or `~`.
pub fn validate_label(label: &str) -> Result<(), CorpusError> {
    let bad = label.is_empty()
        || label
            .chars()
            .any(|c| c.is_whitespace() || c.is_control() || c == '/' || c == '~');
    if bad {
        Err(CorpusError::MalformedLabel(label.to_owned()))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub label: String,
    pub text: String,
    pub revision: u64,
    pub depth: u32,
    #[serde(default)]
    pub annotations: Vec<EvidenceAnnotation>,
    /// Sub-commentaries, kept sorted by label.
    #[serde(default)]
    pub layers: Vec<Layer>,
}

impl Layer {
    pub fn child(&self, label: &str) -> Option<&Layer> {
        self.layers.iter().find(|l| l.label == label)
    }

    /// Pre-order walk over this layer and all of its descendants.
    pub fn walk<'a>(&'a self, path: NodePath, visit: &mut dyn FnMut(&NodePath, &'a Layer)) {
        visit(&path, self);
        for child in &self.layers {
            child.walk(path.child(&child.label), visit);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum WitnessKind {
    Manuscript,
    PrintedEdition,
    CommentaryDerived,
}

impl FromStr for WitnessKind {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Manuscript" | "manuscript" => Ok(WitnessKind::Manuscript),
            "PrintedEdition" | "printed-edition" | "edition" => Ok(WitnessKind::PrintedEdition),
            "CommentaryDerived" => Ok(WitnessKind::CommentaryDerived),
            other => Err(CorpusError::MalformedId(format!("witness kind {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub id: String,
    pub siglum: String,
    pub kind: WitnessKind,
    /// Year or inclusive year range, `1450` or `1400/1500`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<String>,
}

fn validate_date(date: &str) -> Result<(), CorpusError> {
    let parse_year = |y: &str| -> Option<i32> {
        let digits = y.strip_prefix('-').unwrap_or(y);
        if digits.is_empty() || digits.len() > 4 || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        y.parse().ok()
    };
    let mut parts = date.split('/');
    let from = parts.next().and_then(parse_year);
    let to = match parts.next() {
        Some(t) => parse_year(t),
        None => from,
    };
    match (from, to, parts.next()) {
        (Some(a), Some(b), None) if a <= b => Ok(()),
        _ => Err(CorpusError::MalformedDate(date.to_owned())),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reading {
    pub witness_id: String,
    pub unit_id: UnitId,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalUnit {
    pub id: UnitId,
    pub kind: UnitKind,
    pub base_text: String,
    pub token_count: usize,
    /// Sorted by witness id.
    #[serde(default)]
    pub readings: Vec<Reading>,
    /// Commentaries on this unit, sorted by label.
    #[serde(default)]
    pub layers: Vec<Layer>,
}

impl FunctionalUnit {
    pub fn reading(&self, witness_id: &str) -> Option<&Reading> {
        self.readings.iter().find(|r| r.witness_id == witness_id)
    }

    pub fn layer(&self, label: &str) -> Option<&Layer> {
        self.layers.iter().find(|l| l.label == label)
    }

    /// Pre-order walk over every layer attached to this unit.
    pub fn walk_layers<'a>(&'a self, work_id: &str, visit: &mut dyn FnMut(&NodePath, &'a Layer)) {
        let base = NodePath::unit(work_id, self.id.clone());
        for layer in &self.layers {
            layer.walk(base.child(&layer.label), visit);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Work {
    pub id: String,
    pub title: String,
    pub script: String,
    /// Sorted in dotted-decimal order.
    #[serde(default)]
    pub units: Vec<FunctionalUnit>,
}

impl Work {
    pub fn unit(&self, id: &UnitId) -> Result<&FunctionalUnit, CorpusError> {
        self.units
            .binary_search_by(|u| u.id.cmp(id))
            .map(|i| &self.units[i])
            .map_err(|_| CorpusError::UnknownUnit(id.to_string()))
    }

    fn unit_mut(&mut self, id: &UnitId) -> Result<&mut FunctionalUnit, CorpusError> {
        match self.units.binary_search_by(|u| u.id.cmp(id)) {
            Ok(i) => Ok(&mut self.units[i]),
            Err(_) => Err(CorpusError::UnknownUnit(id.to_string())),
        }
    }

    /// Pre-order walk over every layer of every unit, in unit order.
    pub fn walk_layers<'a>(&'a self, visit: &mut dyn FnMut(&NodePath, &'a Layer)) {
        for unit in &self.units {
            unit.walk_layers(&self.id, visit);
        }
    }

    pub fn has_layer_label(&self, label: &str) -> bool {
        let mut found = false;
        self.walk_layers(&mut |_, l| found |= l.label == label);
        found
    }

    /// Distinct layer labels in first-seen (pre-order) order.
    pub fn layer_labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = Vec::new();
        self.walk_layers(&mut |_, l| {
            if !labels.contains(&l.label) {
                labels.push(l.label.clone());
            }
        });
        labels
    }
}

/// A node returned by [`Corpus::resolve`].
#[derive(Debug, Clone, Copy)]
pub enum NodeRef<'a> {
    Work(&'a Work),
    Unit(&'a FunctionalUnit),
    Layer(&'a Layer),
}

impl<'a> NodeRef<'a> {
    /// Depth of the node in the layer hierarchy; works and units are 0.
    pub fn depth(&self) -> u32 {
        match self {
            NodeRef::Layer(l) => l.depth,
            _ => 0,
        }
    }

    fn child_layers(&self) -> &'a [Layer] {
        match self {
            NodeRef::Work(_) => &[],
            NodeRef::Unit(u) => &u.layers,
            NodeRef::Layer(l) => &l.layers,
        }
    }
}

/// Complete corpus state.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    works: BTreeMap<String, Work>,
    witnesses: BTreeMap<String, Witness>,
    taxonomy: EvidenceTaxonomy,
    sibling_limit: usize,
    next_annotation: u64,
}

impl Default for Corpus {
    fn default() -> Self {
        Self::new(DEFAULT_SIBLING_LIMIT)
    }
}

impl Corpus {
    pub fn new(sibling_limit: usize) -> Self {
        Corpus {
            works: BTreeMap::new(),
            witnesses: BTreeMap::new(),
            taxonomy: EvidenceTaxonomy::default(),
            sibling_limit,
            next_annotation: 1,
        }
    }

    /// Assembles a corpus from already validated parts.
    pub(crate) fn from_parts(
        works: BTreeMap<String, Work>,
        witnesses: BTreeMap<String, Witness>,
        taxonomy: EvidenceTaxonomy,
        sibling_limit: usize,
    ) -> Self {
        let mut max_id = 0;
        for work in works.values() {
            work.walk_layers(&mut |_, layer| {
                for a in &layer.annotations {
                    if let Some(n) = a.id.strip_prefix('a').and_then(|n| n.parse::<u64>().ok()) {
                        max_id = max_id.max(n);
                    }
                }
            });
        }
        Corpus { works, witnesses, taxonomy, sibling_limit, next_annotation: max_id + 1 }
    }

    pub fn sibling_limit(&self) -> usize {
        self.sibling_limit
    }

    pub fn taxonomy(&self) -> &EvidenceTaxonomy {
        &self.taxonomy
    }

    pub fn works(&self) -> impl Iterator<Item = &Work> {
        self.works.values()
    }

    pub fn work(&self, id: &str) -> Result<&Work, CorpusError> {
        self.works.get(id).ok_or_else(|| CorpusError::UnknownWork(id.to_owned()))
    }

    pub fn witnesses(&self) -> impl Iterator<Item = &Witness> {
        self.witnesses.values()
    }

    pub fn witness(&self, id: &str) -> Result<&Witness, CorpusError> {
        self.witnesses.get(id).ok_or_else(|| CorpusError::UnknownWitness(id.to_owned()))
    }

    pub fn is_empty(&self) -> bool {
        self.works.is_empty() && self.witnesses.is_empty()
    }

    /// Finds the work holding `unit` when the caller did not name one.
    pub fn find_unit(&self, unit: &UnitId) -> Result<&Work, CorpusError> {
        let mut hits = self.works.values().filter(|w| w.unit(unit).is_ok());
        match (hits.next(), hits.next()) {
            (Some(w), None) => Ok(w),
            (Some(_), Some(_)) => Err(CorpusError::AmbiguousUnit(unit.to_string())),
            (None, _) => Err(CorpusError::UnknownUnit(unit.to_string())),
        }
    }

    pub fn resolve(&self, path: &NodePath) -> Result<NodeRef<'_>, CorpusError> {
        let unknown = || CorpusError::UnknownPath(path.to_string());
        let work = self.works.get(&path.work).ok_or_else(unknown)?;
        let Some(unit_id) = &path.unit else {
            return Ok(NodeRef::Work(work));
        };
        let unit = work.unit(unit_id).map_err(|_| unknown())?;
        let mut node = NodeRef::Unit(unit);
        for label in &path.layers {
            let next = node.child_layers().iter().find(|l| &l.label == label).ok_or_else(unknown)?;
            node = NodeRef::Layer(next);
        }
        Ok(node)
    }

    /// Resolves a path string such as `KV/1.1.1/Ny/Tp`.
    pub fn resolve_path(&self, path: &str) -> Result<NodeRef<'_>, CorpusError> {
        let parsed: NodePath = path.parse().map_err(|_| CorpusError::UnknownPath(path.to_owned()))?;
        self.resolve(&parsed)
    }

    pub fn layer(&self, path: &NodePath) -> Result<&Layer, CorpusError> {
        match self.resolve(path)? {
            NodeRef::Layer(l) => Ok(l),
            _ => Err(CorpusError::UnknownPath(path.to_string())),
        }
    }

    fn layer_mut(&mut self, path: &NodePath) -> Result<&mut Layer, CorpusError> {
        let unknown = || CorpusError::UnknownPath(path.to_string());
        let (first, rest) = path.layers.split_first().ok_or_else(unknown)?;
        let unit_id = path.unit.as_ref().ok_or_else(unknown)?;
        let work = self.works.get_mut(&path.work).ok_or_else(unknown)?;
        let unit = work.unit_mut(unit_id).map_err(|_| unknown())?;
        let mut layer = unit.layers.iter_mut().find(|l| &l.label == first).ok_or_else(unknown)?;
        for label in rest {
            layer = layer.layers.iter_mut().find(|l| &l.label == label).ok_or_else(unknown)?;
        }
        Ok(layer)
    }

    pub fn create_work(&mut self, id: &str, title: &str, script: &str) -> Result<Work, CorpusError> {
        validate_label(id)?;
        if self.works.contains_key(id) {
            return Err(CorpusError::DuplicateId(id.to_owned()));
        }
        let work = Work { id: id.to_owned(), title: nfc(title), script: script.to_owned(), units: Vec::new() };
        self.works.insert(id.to_owned(), work.clone());
        Ok(work)
    }

    pub fn add_unit(
        &mut self,
        work_id: &str,
        unit_id: &str,
        kind: UnitKind,
        base_text: &str,
    ) -> Result<FunctionalUnit, CorpusError> {
        let work = self.works.get_mut(work_id).ok_or_else(|| CorpusError::UnknownWork(work_id.to_owned()))?;
        let id: UnitId = unit_id.parse()?;
        kind.check_placement(&id)?;
        let slot = match work.units.binary_search_by(|u| u.id.cmp(&id)) {
            Ok(_) => return Err(CorpusError::DuplicateId(format!("{work_id}/{id}"))),
            Err(slot) => slot,
        };
        let base_text = nfc(base_text);
        let token_count = tokenize(&base_text, &work.script).len();
        let unit = FunctionalUnit { id, kind, base_text, token_count, readings: Vec::new(), layers: Vec::new() };
        work.units.insert(slot, unit.clone());
        Ok(unit)
    }

    pub fn add_layer(&mut self, parent: &NodePath, label: &str, text: &str) -> Result<Layer, CorpusError> {
        validate_label(label)?;
        let limit = self.sibling_limit;
        let node = self.resolve(parent)?;
        if matches!(node, NodeRef::Work(_)) {
            return Err(CorpusError::UnknownPath(parent.to_string()));
        }
        let depth = node.depth() + 1;
        let siblings = node.child_layers();
        if siblings.iter().any(|l| l.label == label) {
            return Err(CorpusError::DuplicateLabel { parent: parent.to_string(), label: label.to_owned() });
        }
        if siblings.len() >= limit {
            return Err(CorpusError::SiblingLimitExceeded { parent: parent.to_string(), limit });
        }

        let layer = Layer {
            label: label.to_owned(),
            text: nfc(text),
            revision: 1,
            depth,
            annotations: Vec::new(),
            layers: Vec::new(),
        };
        let children = if parent.is_layer() {
            &mut self.layer_mut(parent)?.layers
        } else {
            let unit_id = parent.unit.as_ref().expect("resolved unit path");
            let work = self.works.get_mut(&parent.work).expect("resolved work");
            &mut work.unit_mut(unit_id)?.layers
        };
        let slot = children.partition_point(|l| l.label.as_str() < label);
        children.insert(slot, layer.clone());
        Ok(layer)
    }

    /// Compare-and-set edit of a layer's text.
    pub fn edit_layer(&mut self, path: &NodePath, new_text: &str, expected_revision: u64) -> Result<Layer, CorpusError> {
        let layer = self.layer_mut(path)?;
        if layer.revision != expected_revision {
            return Err(CorpusError::RevisionConflict {
                path: path.to_string(),
                expected: expected_revision,
                current: layer.revision,
            });
        }
        layer.text = nfc(new_text);
        layer.revision += 1;
        Ok(layer.clone())
    }

    pub fn add_witness(&mut self, witness: Witness) -> Result<Witness, CorpusError> {
        validate_label(&witness.id)?;
        if witness.kind == WitnessKind::CommentaryDerived {
            return Err(CorpusError::ReservedWitnessKind);
        }
        if let Some(date) = &witness.date {
            validate_date(date)?;
        }
        if self.witnesses.contains_key(&witness.id) {
            return Err(CorpusError::DuplicateId(witness.id));
        }
        let witness = Witness { siglum: nfc(&witness.siglum), ..witness };
        self.witnesses.insert(witness.id.clone(), witness.clone());
        Ok(witness)
    }

    pub fn record_reading(
        &mut self,
        work_id: &str,
        unit_id: &UnitId,
        witness_id: &str,
        text: &str,
    ) -> Result<Reading, CorpusError> {
        let work = self.works.get_mut(work_id).ok_or_else(|| CorpusError::UnknownWork(work_id.to_owned()))?;
        let unit = work.unit_mut(unit_id)?;
        if !self.witnesses.contains_key(witness_id) {
            return Err(CorpusError::UnknownWitness(witness_id.to_owned()));
        }
        let slot = match unit.readings.binary_search_by(|r| r.witness_id.as_str().cmp(witness_id)) {
            Ok(_) => {
                return Err(CorpusError::DuplicateReading {
                    unit: unit_id.to_string(),
                    witness: witness_id.to_owned(),
                })
            }
            Err(slot) => slot,
        };
        let reading = Reading { witness_id: witness_id.to_owned(), unit_id: unit_id.clone(), text: nfc(text) };
        unit.readings.insert(slot, reading.clone());
        Ok(reading)
    }

    /// Stores a new evidence annotation on the layer at `new.source`.
    pub fn annotate(&mut self, new: NewAnnotation) -> Result<EvidenceAnnotation, CorpusError> {
        self.layer(&new.source)?;
        let work = self.work(&new.source.work)?;
        let unit = work.unit(&new.target_unit)?;
        let span = TokenSpan { start: new.start, end: new.end };
        if span.start >= span.end || span.end > unit.token_count {
            return Err(CorpusError::SpanOutOfRange {
                unit: unit.id.to_string(),
                start: span.start,
                end: span.end,
                token_count: unit.token_count,
            });
        }
        self.taxonomy.check(new.kind, new.subtype.as_deref())?;

        let annotation = EvidenceAnnotation {
            id: format!("a{}", self.next_annotation),
            source: new.source.clone(),
            target_unit: new.target_unit,
            span,
            kind: new.kind,
            subtype: new.subtype,
            quoted_form: new.quoted_form.as_deref().map(nfc),
            note: new.note,
        };
        self.layer_mut(&new.source)?.annotations.push(annotation.clone());
        self.next_annotation += 1;
        Ok(annotation)
    }

    pub fn delete_annotation(&mut self, source: &NodePath, id: &str) -> Result<EvidenceAnnotation, CorpusError> {
        let layer = self.layer_mut(source)?;
        let idx = layer
            .annotations
            .iter()
            .position(|a| a.id == id)
            .ok_or_else(|| CorpusError::UnknownAnnotation(id.to_owned()))?;
        Ok(layer.annotations.remove(idx))
    }

    /// Installs a new taxonomy, refusing changes that would orphan a
    /// subtype already in use.
    pub fn set_taxonomy(&mut self, taxonomy: EvidenceTaxonomy) -> Result<(), CorpusError> {
        for work in self.works.values() {
            let mut orphan = None;
            work.walk_layers(&mut |_, layer| {
                for a in &layer.annotations {
                    if orphan.is_none() && taxonomy.check(a.kind, a.subtype.as_deref()).is_err() {
                        orphan = Some(CorpusError::TaxonomyInUse {
                            annotation: a.id.clone(),
                            subtype: a.subtype.clone().unwrap_or_default(),
                        });
                    }
                }
            });
            if let Some(err) = orphan {
                return Err(err);
            }
        }
        self.taxonomy = taxonomy;
        Ok(())
    }

    /// Every node path in the corpus, works first, in document order.
    pub fn all_paths(&self) -> Vec<NodePath> {
        let mut out = Vec::new();
        for work in self.works.values() {
            out.push(NodePath::work(&work.id));
            for unit in &work.units {
                out.push(NodePath::unit(&work.id, unit.id.clone()));
                unit.walk_layers(&work.id, &mut |p, _| out.push(p.clone()));
            }
        }
        out
    }

    /// Annotations of every layer labelled `label` in `work_id` that target
    /// `unit`.
    pub fn annotations_on<'a>(&'a self, work: &'a Work, unit: &UnitId, label: &str) -> Vec<&'a EvidenceAnnotation> {
        let mut out = Vec::new();
        work.walk_layers(&mut |_, layer| {
            if layer.label == label {
                out.extend(layer.annotations.iter().filter(|a| &a.target_unit == unit));
            }
        });
        out
    }
}
