//! Evidence taxonomy, token-anchored annotations and the reports built on
//! them.
//!
//! A base-text token counts as *supported* by a commentary when at least one
//! annotation from a layer with that commentary's label covers it and the
//! annotation's kind is not [`EvidenceKind::Default`]. Sub-commentaries
//! annotate the work's base-text tokens directly, just like commentaries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::collation::{align, tokenize, AlignOp};
use crate::corpus::{Corpus, CorpusError, NodePath, UnitId, Work, WitnessKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EvidenceKind {
    Direct,
    Indirect,
    Both,
    Default,
}

impl EvidenceKind {
    /// Whether annotations of this kind count towards support.
    pub fn is_supporting(self) -> bool {
        self != EvidenceKind::Default
    }
}

impl fmt::Display for EvidenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for EvidenceKind {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Direct" | "direct" => Ok(EvidenceKind::Direct),
            "Indirect" | "indirect" => Ok(EvidenceKind::Indirect),
            "Both" | "both" => Ok(EvidenceKind::Both),
            "Default" | "default" => Ok(EvidenceKind::Default),
            other => Err(CorpusError::SubtypeMismatch { kind: other.to_owned(), subtype: None }),
        }
    }
}

/// Subtype names for direct and indirect evidence.
///
/// The shipped defaults are placeholders meant to be replaced through
/// `taxonomy.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceTaxonomy {
    #[serde(rename = "Direct", default)]
    pub direct: Vec<String>,
    #[serde(rename = "Indirect", default)]
    pub indirect: Vec<String>,
}

impl Default for EvidenceTaxonomy {
    fn default() -> Self {
        EvidenceTaxonomy {
            direct: vec!["full-quotation".into(), "pratīka".into()],
            indirect: vec!["paraphrase".into(), "gloss".into()],
        }
    }
}

impl EvidenceTaxonomy {
    pub fn empty() -> Self {
        EvidenceTaxonomy { direct: Vec::new(), indirect: Vec::new() }
    }

    pub fn subtypes(&self, kind: EvidenceKind) -> &[String] {
        match kind {
            EvidenceKind::Direct => &self.direct,
            EvidenceKind::Indirect => &self.indirect,
            EvidenceKind::Both | EvidenceKind::Default => &[],
        }
    }

    /// Checks that `subtype` is admissible for `kind`.
    pub fn check(&self, kind: EvidenceKind, subtype: Option<&str>) -> Result<(), CorpusError> {
        match subtype {
            None => Ok(()),
            Some(s) if self.subtypes(kind).iter().any(|x| x == s) => Ok(()),
            Some(s) => Err(CorpusError::SubtypeMismatch { kind: kind.to_string(), subtype: Some(s.to_owned()) }),
        }
    }

    fn validate(&self) -> Result<(), CorpusError> {
        for (kind, names) in [("Direct", &self.direct), ("Indirect", &self.indirect)] {
            let mut seen = BTreeSet::new();
            for name in names {
                if name.trim().is_empty() {
                    return Err(CorpusError::MalformedTaxonomy(format!("empty subtype under {kind}")));
                }
                if !seen.insert(name) {
                    return Err(CorpusError::DuplicateSubtype { kind: kind.to_owned(), subtype: name.clone() });
                }
            }
        }
        Ok(())
    }
}

/// Parses and validates a taxonomy document of the form
/// `{"Direct": [...], "Indirect": [...]}`. Missing keys mean no subtypes.
pub fn load_taxonomy(document: &str) -> Result<EvidenceTaxonomy, CorpusError> {
    let value: serde_json::Value =
        serde_json::from_str(document).map_err(|e| CorpusError::MalformedTaxonomy(e.to_string()))?;
    taxonomy_from_value(&value)
}

pub fn taxonomy_from_value(value: &serde_json::Value) -> Result<EvidenceTaxonomy, CorpusError> {
    let map = value
        .as_object()
        .ok_or_else(|| CorpusError::MalformedTaxonomy("expected an object".into()))?;
    let mut taxonomy = EvidenceTaxonomy::empty();
    for (key, names) in map {
        let slot = match key.as_str() {
            "Direct" => &mut taxonomy.direct,
            "Indirect" => &mut taxonomy.indirect,
            "Both" | "Default" => {
                return Err(CorpusError::MalformedTaxonomy(format!("{key} evidence carries no subtypes")))
            }
            other => return Err(CorpusError::MalformedTaxonomy(format!("unknown evidence kind `{other}`"))),
        };
        let list = names
            .as_array()
            .ok_or_else(|| CorpusError::MalformedTaxonomy(format!("{key} must be a list")))?;
        for name in list {
            let name = name
                .as_str()
                .ok_or_else(|| CorpusError::MalformedTaxonomy(format!("{key} subtypes must be strings")))?;
            slot.push(name.to_owned());
        }
    }
    taxonomy.validate()?;
    Ok(taxonomy)
}

/// Half-open interval `[start, end)` over a unit's base-text tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TokenSpan {
    pub start: usize,
    pub end: usize,
}

impl TokenSpan {
    pub fn indices(self) -> std::ops::Range<usize> {
        self.start..self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceAnnotation {
    pub id: String,
    pub source: NodePath,
    pub target_unit: UnitId,
    pub span: TokenSpan,
    pub kind: EvidenceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subtype: Option<String>,
    /// The wording as it appears in the commentary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quoted_form: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Input for [`Corpus::annotate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewAnnotation {
    pub source: NodePath,
    pub target_unit: UnitId,
    pub start: usize,
    pub end: usize,
    pub kind: EvidenceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subtype: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quoted_form: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl NewAnnotation {
    pub fn new(source: NodePath, target_unit: UnitId, start: usize, end: usize, kind: EvidenceKind) -> Self {
        NewAnnotation { source, target_unit, start, end, kind, subtype: None, quoted_form: None, note: None }
    }

    pub fn subtype(mut self, subtype: impl Into<String>) -> Self {
        self.subtype = Some(subtype.into());
        self
    }

    pub fn quoted(mut self, quoted_form: impl Into<String>) -> Self {
        self.quoted_form = Some(quoted_form.into());
        self
    }
}

/// Base-text token indices of `unit` covered by supporting annotations from
/// layers labelled `label`.
pub fn covered_tokens(work: &Work, unit: &UnitId, label: &str) -> BTreeSet<usize> {
    let mut covered = BTreeSet::new();
    work.walk_layers(&mut |_, layer| {
        if layer.label != label {
            return;
        }
        for a in &layer.annotations {
            if &a.target_unit == unit && a.kind.is_supporting() {
                covered.extend(a.span.indices());
            }
        }
    });
    covered
}

/// Whether a layer labelled `label` hangs off any of `units` or off one of
/// their ancestor units.
fn label_in_scope(work: &Work, units: &[UnitId], label: &str) -> bool {
    units.iter().any(|u| {
        std::iter::once(u.clone()).chain(u.ancestors()).any(|id| {
            let Ok(unit) = work.unit(&id) else { return false };
            let mut found = false;
            unit.walk_layers(&work.id, &mut |_, l| found |= l.label == label);
            found
        })
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportStats {
    pub layer_label: String,
    pub unit_ids: Vec<UnitId>,
    pub total_tokens: usize,
    pub supported_token_indices: BTreeMap<UnitId, BTreeSet<usize>>,
    pub supported_count: usize,
}

impl SupportStats {
    pub fn percentage(&self) -> f64 {
        if self.total_tokens == 0 {
            0.0
        } else {
            100.0 * self.supported_count as f64 / self.total_tokens as f64
        }
    }
}

impl fmt::Display for SupportStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{} ({:.1}%)", self.supported_count, self.total_tokens, self.percentage())
    }
}

/// Counts the distinct base-text tokens of `unit_ids` supported by the
/// commentary `layer_label`.
pub fn support_report(
    corpus: &Corpus,
    work_id: &str,
    unit_ids: &[UnitId],
    layer_label: &str,
) -> Result<SupportStats, CorpusError> {
    let work = corpus.work(work_id)?;
    let mut ids: Vec<UnitId> = Vec::with_capacity(unit_ids.len());
    for id in unit_ids {
        work.unit(id)?;
        if !ids.contains(id) {
            ids.push(id.clone());
        }
    }
    if !label_in_scope(work, &ids, layer_label) {
        return Err(CorpusError::UnknownLayerLabel(layer_label.to_owned()));
    }

    let mut total_tokens = 0;
    let mut supported = BTreeMap::new();
    for id in &ids {
        total_tokens += work.unit(id)?.token_count;
        supported.insert(id.clone(), covered_tokens(work, id, layer_label));
    }
    let supported_count = supported.values().map(BTreeSet::len).sum();
    Ok(SupportStats {
        layer_label: layer_label.to_owned(),
        unit_ids: ids,
        total_tokens,
        supported_token_indices: supported,
        supported_count,
    })
}

/// One place where a commentary quotes the base text differently.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variation {
    /// Base-text token index; for an addition, the index it precedes.
    pub token_index: usize,
    /// Empty when the commentary adds a word.
    pub base_form: String,
    /// Empty when the commentary omits the word.
    pub quoted_form: String,
    pub annotation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerTransmission {
    pub label: String,
    pub supported_count: usize,
    pub uniform: bool,
    pub variations: Vec<Variation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransmissionReport {
    pub unit_id: UnitId,
    pub token_count: usize,
    pub manuscript_readings: usize,
    pub layers: Vec<LayerTransmission>,
    pub archetype_hints: Vec<String>,
}

impl TransmissionReport {
    pub fn layer(&self, label: &str) -> Option<&LayerTransmission> {
        self.layers.iter().find(|l| l.label == label)
    }
}

/// Per-commentary uniformity of the quoted wording for one unit, plus
/// `post-<label>` archetype hints for commentaries that are silent on a unit
/// the manuscripts do attest.
pub fn transmission_report(corpus: &Corpus, work_id: &str, unit_id: &UnitId) -> Result<TransmissionReport, CorpusError> {
    let work = corpus.work(work_id)?;
    let unit = work.unit(unit_id)?;
    let base = tokenize(&unit.base_text, &work.script);

    // Commentaries on this unit and its ancestors, outermost first, then any
    // other commentary that annotates the unit from elsewhere.
    let mut labels: Vec<String> = Vec::new();
    let mut chain: Vec<UnitId> = unit_id.ancestors().collect();
    chain.reverse();
    chain.push(unit_id.clone());
    for id in &chain {
        if let Ok(u) = work.unit(id) {
            u.walk_layers(&work.id, &mut |_, l| {
                if !labels.contains(&l.label) {
                    labels.push(l.label.clone());
                }
            });
        }
    }
    work.walk_layers(&mut |_, l| {
        if !labels.contains(&l.label) && l.annotations.iter().any(|a| &a.target_unit == unit_id) {
            labels.push(l.label.clone());
        }
    });

    let manuscript_readings = unit
        .readings
        .iter()
        .filter(|r| corpus.witness(&r.witness_id).map(|w| w.kind == WitnessKind::Manuscript).unwrap_or(false))
        .count();

    let mut layers = Vec::with_capacity(labels.len());
    let mut archetype_hints = Vec::new();
    for label in labels {
        let supported_count = covered_tokens(work, unit_id, &label).len();
        let mut variations = Vec::new();
        for a in corpus.annotations_on(work, unit_id, &label) {
            let Some(quoted) = &a.quoted_form else { continue };
            let spanned = &base.tokens[a.span.indices()];
            let quoted = tokenize(quoted, &work.script).tokens;
            let mut next_base = 0;
            for op in align(spanned, &quoted).ops {
                let (token_index, base_form, quoted_form) = match op {
                    AlignOp::Match { a: i, .. } => {
                        next_base = i + 1;
                        continue;
                    }
                    AlignOp::Substitute { a: i, b: j } => {
                        next_base = i + 1;
                        (i, spanned[i].clone(), quoted[j].clone())
                    }
                    AlignOp::Delete { a: i } => {
                        next_base = i + 1;
                        (i, spanned[i].clone(), String::new())
                    }
                    AlignOp::Insert { b: j } => (next_base, String::new(), quoted[j].clone()),
                };
                variations.push(Variation {
                    token_index: a.span.start + token_index,
                    base_form,
                    quoted_form,
                    annotation: a.id.clone(),
                });
            }
        }
        if supported_count == 0 && manuscript_readings > 0 {
            archetype_hints.push(format!("post-{label}"));
        }
        layers.push(LayerTransmission { label, supported_count, uniform: variations.is_empty(), variations });
    }

    Ok(TransmissionReport {
        unit_id: unit_id.clone(),
        token_count: unit.token_count,
        manuscript_readings,
        layers,
        archetype_hints,
    })
}
