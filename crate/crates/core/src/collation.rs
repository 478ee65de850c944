//! Word-level collation: tokenization, token edit distance and alignment.
//!
//! A "word" is a maximal run of characters between separators. Separators
//! are Unicode whitespace, the Devanagari danda (U+0964) and double danda
//! (U+0965), and ASCII punctuation. All text is NFC-normalized before it is
//! split, so canonically equivalent spellings produce identical tokens.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::corpus::{Corpus, CorpusError, UnitId, Witness, WitnessKind};
use crate::evidence;

const DANDA: char = '\u{0964}';
const DOUBLE_DANDA: char = '\u{0965}';

/// An ordered list of NFC-normalized, non-empty word tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    /// Path or witness id the tokens were taken from, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl TokenSequence {
    pub fn new<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            tokens: tokens.into_iter().map(Into::into).collect(),
            source: None,
        }
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = Some(source.into());
        self
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn as_slice(&self) -> &[String] {
        &self.tokens
    }
}

impl fmt::Display for TokenSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tokens.join(" "))
    }
}

pub fn is_separator(c: char) -> bool {
    c.is_whitespace() || c == DANDA || c == DOUBLE_DANDA || c.is_ascii_punctuation()
}

/// NFC normalization used for every piece of text entering the corpus.
pub fn nfc(text: &str) -> String {
    text.nfc().collect()
}

/// Splits `text` into word tokens.
///
/// The script tag is accepted for future script-specific rules; every
/// script currently uses the same separator set.
pub fn tokenize(text: &str, _script: &str) -> TokenSequence {
    let normalized = nfc(text);
    let tokens = normalized
        .split(is_separator)
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect();
    TokenSequence { tokens, source: None }
}

/// Token-level Levenshtein distance with unit costs.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `edit_distance / max(|a|, |b|)`, with two empty sequences at distance 0.
pub fn normalized_distance<T: PartialEq>(a: &[T], b: &[T]) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 0.0;
    }
    edit_distance(a, b) as f64 / longest as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op")]
pub enum AlignOp {
    Match { a: usize, b: usize },
    Substitute { a: usize, b: usize },
    /// Token `b` of the second sequence has no counterpart in the first.
    Insert { b: usize },
    /// Token `a` of the first sequence has no counterpart in the second.
    Delete { a: usize },
}

impl AlignOp {
    pub fn cost(self) -> usize {
        match self {
            AlignOp::Match { .. } => 0,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alignment {
    pub ops: Vec<AlignOp>,
}

impl Alignment {
    pub fn cost(&self) -> usize {
        self.ops.iter().map(|op| op.cost()).sum()
    }

    /// Rebuilds the second sequence from the first by replaying the ops.
    pub fn apply<T: Clone>(&self, a: &[T], b: &[T]) -> Vec<T> {
        self.ops
            .iter()
            .filter_map(|op| match *op {
                AlignOp::Match { a: i, .. } => Some(a[i].clone()),
                AlignOp::Substitute { b: j, .. } | AlignOp::Insert { b: j } => Some(b[j].clone()),
                AlignOp::Delete { .. } => None,
            })
            .collect()
    }
}

/// One cost-optimal alignment of `a` onto `b`.
///
/// The traceback runs from the end of both sequences and, among equally
/// cheap predecessors, prefers Match, then Substitute, then Delete, then
/// Insert.
pub fn align<T: PartialEq>(a: &[T], b: &[T]) -> Alignment {
    let (n, m) = (a.len(), b.len());
    let width = m + 1;
    let mut table = vec![0usize; (n + 1) * width];
    for i in 0..=n {
        table[i * width] = i;
    }
    for j in 0..=m {
        table[j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = table[(i - 1) * width + j - 1] + usize::from(a[i - 1] != b[j - 1]);
            let del = table[(i - 1) * width + j] + 1;
            let ins = table[i * width + j - 1] + 1;
            table[i * width + j] = sub.min(del).min(ins);
        }
    }

    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = table[i * width + j];
        if i > 0 && j > 0 {
            let diag = table[(i - 1) * width + j - 1];
            if a[i - 1] == b[j - 1] && diag == here {
                ops.push(AlignOp::Match { a: i - 1, b: j - 1 });
                i -= 1;
                j -= 1;
                continue;
            }
            if a[i - 1] != b[j - 1] && diag + 1 == here {
                ops.push(AlignOp::Substitute { a: i - 1, b: j - 1 });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && table[(i - 1) * width + j] + 1 == here {
            ops.push(AlignOp::Delete { a: i - 1 });
            i -= 1;
        } else {
            ops.push(AlignOp::Insert { b: j - 1 });
            j -= 1;
        }
    }
    ops.reverse();
    Alignment { ops }
}

/// The base text as witnessed by one commentary: for every unit in scope,
/// the base tokens that commentary's evidence supports, in base order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PseudoWitness {
    pub witness: Witness,
    pub sequences: BTreeMap<UnitId, TokenSequence>,
}

/// Derives the pseudo-witness of every layer labelled `layer_label` in
/// `work_id`. `scope` of `None` means every unit of the work.
pub fn pseudo_witness(
    corpus: &Corpus,
    layer_label: &str,
    work_id: &str,
    scope: Option<&[UnitId]>,
) -> Result<PseudoWitness, CorpusError> {
    let work = corpus.work(work_id)?;
    if !work.has_layer_label(layer_label) {
        return Err(CorpusError::UnknownLayerLabel(layer_label.to_owned()));
    }
    let units: Vec<&UnitId> = match scope {
        Some(ids) => {
            for id in ids {
                work.unit(id)?;
            }
            ids.iter().collect()
        }
        None => work.units.iter().map(|u| &u.id).collect(),
    };

    let mut sequences = BTreeMap::new();
    for unit_id in units {
        let unit = work.unit(unit_id)?;
        let covered = evidence::covered_tokens(work, unit_id, layer_label);
        let tokens = tokenize(&unit.base_text, &work.script);
        let kept = covered.iter().map(|&i| tokens.tokens[i].clone());
        let seq = TokenSequence::new(kept).with_source(format!("{work_id}/{unit_id}/{layer_label}"));
        sequences.insert(unit_id.clone(), seq);
    }

    Ok(PseudoWitness {
        witness: Witness {
            id: layer_label.to_owned(),
            siglum: layer_label.to_owned(),
            kind: WitnessKind::CommentaryDerived,
            date: None,
        },
        sequences,
    })
}
