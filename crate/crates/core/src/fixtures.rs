//! Reference corpora, expressed as command sequences so they can be fed to
//! a [`Corpus`] directly, to a [`Store`](crate::store::Store), or through
//! the HTTP API.
//!
//! The Kāśikāvṛtti fixtures reproduce two worked cases: sutra 1.1.1, where
//! the Nyāsa supports 24 of the 25 words of the first two sections and the
//! Padamañjarī supports 12, and sutra 2.1.22, where the Nyāsa supports nine
//! words and its sub-commentary the Tantrapradīpa one of those nine. The
//! third section of each sutra is attested by a manuscript but left without
//! commentary support. Commentary texts are placeholders; only the
//! annotated spans matter.

use crate::corpus::{Corpus, NodePath, UnitKind, Witness, WitnessKind};
use crate::evidence::{EvidenceKind, NewAnnotation};
use crate::store::{apply, export_corpus, Command, InterchangeDocument, StoreError};

pub const KV_1_1_1_SUTRA: &str = "वृद्धिः आत् ऐच्";
pub const KV_1_1_1_1: &str = "वृद्धिशब्दः सञ्ज्ञात्वेन [विधीयते] प्रत्येकम् आदैचाम् वर्णानाम् सामान्येन तद्भावितानाम् [अतद्भावितानाम्] च तपरकरणम् [ऐजर्थम्] तात् अपि परः तपरः इति खट्वैडकादिषु [त्रिमात्रचतुर्मात्रप्रसङ्गनिवृत्तये]";
pub const KV_1_1_1_2: &str = "आश्वलायनः ऐतिकायनः औपगवः औपमन्यवः शालीयः मालीयः";
pub const KV_1_1_1_3: &str = "वृद्धिप्रदेशाः सिचि वृद्धिः परस्मैपदेषु इति एवमादयः";

pub const KV_2_1_22_SUTRA: &str = "तत्पुरुषः";
pub const KV_2_1_22_1: &str = "तत्पुरुषः इति संज्ञा ऽधिक्रियते प्राग् बहुव्रीहेः। यानित ऊर्ध्वम् अनुक्रमिष्यामः, तत्पुरुषसंज्ञास्ते वेदितव्याः।";
pub const KV_2_1_22_2: &str = "वक्ष्यति, द्वितीय श्रितातीतपतित इति। कष्टश्रितः। पूर्वाचार्यसंज्ञा चेयं महती, तदङ्गीकरणौपाधेरपि तदीयस्य परिग्रहार्थम्, उत्तरपदार्थप्रधानस् तत्पुरुषः इति।";
pub const KV_2_1_22_3: &str = "तत्पुरुषप्रदेशाः तत्पुरुषे कृति बहुलम् इत्येवम् आदयः।";

fn path(s: &str) -> NodePath {
    s.parse().expect("fixture path")
}

fn unit(id: &str, kind: UnitKind, text: &str) -> Command {
    Command::AddUnit { work: "KV".into(), unit: id.into(), kind, base_text: text.into() }
}

fn layer(parent: &str, label: &str, text: &str) -> Command {
    Command::AddLayer { parent: path(parent), label: label.into(), text: text.into() }
}

fn reading(unit: &str, witness: &str, text: &str) -> Command {
    Command::RecordReading {
        work: "KV".into(),
        unit: unit.parse().expect("fixture unit"),
        witness: witness.into(),
        text: text.into(),
    }
}

fn witness(id: &str, kind: WitnessKind) -> Command {
    Command::AddWitness(Witness { id: id.into(), siglum: id.into(), kind, date: None })
}

/// Annotation whose quoted form is exactly the base wording it spans.
fn quoting(source: &str, unit: &str, text: &str, start: usize, end: usize, kind: EvidenceKind) -> NewAnnotation {
    let tokens = crate::collation::tokenize(text, "Deva");
    let quoted = tokens.tokens[start..end].join(" ");
    NewAnnotation::new(path(source), unit.parse().expect("fixture unit"), start, end, kind).quoted(quoted)
}

fn annotate(a: NewAnnotation) -> Command {
    Command::Annotate(a)
}

/// The KV work and its one manuscript.
pub fn kv_base() -> Vec<Command> {
    vec![
        Command::CreateWork { id: "KV".into(), title: "Kāśikāvṛtti".into(), script: "Deva".into() },
        witness("ms-A", WitnessKind::Manuscript),
    ]
}

fn kv_1_1_1_entries() -> Vec<Command> {
    let (s1, s2) = ("1.1.1.1", "1.1.1.2");
    vec![
        unit("1.1.1", UnitKind::Sutra, KV_1_1_1_SUTRA),
        unit(s1, UnitKind::IntroductionMeaning, KV_1_1_1_1),
        unit(s2, UnitKind::Examples, KV_1_1_1_2),
        unit("1.1.1.3", UnitKind::OtherOccurrences, KV_1_1_1_3),
        reading("1.1.1", "ms-A", KV_1_1_1_SUTRA),
        reading(s1, "ms-A", KV_1_1_1_1),
        reading(s2, "ms-A", KV_1_1_1_2),
        reading("1.1.1.3", "ms-A", KV_1_1_1_3),
        layer("KV/1.1.1", "Ny", "Nyāsa on 1.1.1 (placeholder text)"),
        layer("KV/1.1.1", "Pm", "Padamañjarī on 1.1.1 (placeholder text)"),
        // Ny: 4 + 14 + 6 = 24 tokens; only the last word of 1.1.1.1 is left out.
        annotate(quoting("KV/1.1.1/Ny", s1, KV_1_1_1_1, 0, 4, EvidenceKind::Direct).subtype("pratīka")),
        annotate(NewAnnotation::new(path("KV/1.1.1/Ny"), s1.parse().unwrap(), 4, 18, EvidenceKind::Indirect).subtype("paraphrase")),
        annotate(quoting("KV/1.1.1/Ny", s2, KV_1_1_1_2, 0, 6, EvidenceKind::Direct).subtype("full-quotation")),
        // A repeated span changes nothing.
        annotate(quoting("KV/1.1.1/Ny", s2, KV_1_1_1_2, 2, 4, EvidenceKind::Both)),
        // Pm: 6 + 6 = 12 tokens.
        annotate(quoting("KV/1.1.1/Pm", s1, KV_1_1_1_1, 0, 6, EvidenceKind::Direct).subtype("full-quotation")),
        annotate(quoting("KV/1.1.1/Pm", s2, KV_1_1_1_2, 0, 6, EvidenceKind::Indirect).subtype("gloss")),
        // Unclassified evidence is not counted.
        annotate(NewAnnotation::new(path("KV/1.1.1/Pm"), s1.parse().unwrap(), 6, 10, EvidenceKind::Default)),
    ]
}

fn kv_2_1_22_entries() -> Vec<Command> {
    let (s1, s2) = ("2.1.22.1", "2.1.22.2");
    vec![
        unit("2.1.22", UnitKind::Sutra, KV_2_1_22_SUTRA),
        unit(s1, UnitKind::IntroductionMeaning, KV_2_1_22_1),
        unit(s2, UnitKind::Examples, KV_2_1_22_2),
        unit("2.1.22.3", UnitKind::OtherOccurrences, KV_2_1_22_3),
        reading("2.1.22", "ms-A", KV_2_1_22_SUTRA),
        reading(s1, "ms-A", KV_2_1_22_1),
        reading(s2, "ms-A", KV_2_1_22_2),
        reading("2.1.22.3", "ms-A", KV_2_1_22_3),
        layer("KV/2.1.22", "Ny", "Nyāsa on 2.1.22 (placeholder text)"),
        layer("KV/2.1.22/Ny", "Tp", "Tantrapradīpa on the Nyāsa (placeholder text)"),
        // Ny: 6 + 3 = 9 tokens.
        annotate(quoting("KV/2.1.22/Ny", s1, KV_2_1_22_1, 0, 6, EvidenceKind::Direct).subtype("full-quotation")),
        annotate(NewAnnotation::new(path("KV/2.1.22/Ny"), s2.parse().unwrap(), 4, 7, EvidenceKind::Indirect).subtype("paraphrase")),
        // Tp: the first word only.
        annotate(quoting("KV/2.1.22/Ny/Tp", s1, KV_2_1_22_1, 0, 1, EvidenceKind::Direct).subtype("pratīka")),
    ]
}

/// KV sutra 1.1.1 with Ny and Pm evidence.
pub fn kv_1_1_1() -> Vec<Command> {
    let mut cmds = kv_base();
    cmds.extend(kv_1_1_1_entries());
    cmds
}

/// KV sutra 2.1.22 with Ny and its sub-commentary Tp.
pub fn kv_2_1_22() -> Vec<Command> {
    let mut cmds = kv_base();
    cmds.extend(kv_2_1_22_entries());
    cmds
}

/// Both KV sutras in one work.
pub fn kv_all() -> Vec<Command> {
    let mut cmds = kv_base();
    cmds.extend(kv_1_1_1_entries());
    cmds.extend(kv_2_1_22_entries());
    cmds
}

/// Both KV sutras plus further manuscripts and a printed edition with
/// invented variant readings, enough to draw a stemma.
pub fn kv_stemma() -> Vec<Command> {
    let mut cmds = kv_all();
    cmds.push(witness("ms-B", WitnessKind::Manuscript));
    cmds.push(witness("ms-C", WitnessKind::Manuscript));
    cmds.push(witness("ed-1", WitnessKind::PrintedEdition));
    let drop_last = |t: &str| {
        let mut words: Vec<&str> = t.split_whitespace().collect();
        words.pop();
        words.join(" ")
    };
    let swap_first = |t: &str, w: &str| {
        let mut words: Vec<&str> = t.split_whitespace().collect();
        words[0] = w;
        words.join(" ")
    };
    for (unit_id, text) in [
        ("1.1.1", KV_1_1_1_SUTRA),
        ("1.1.1.1", KV_1_1_1_1),
        ("1.1.1.2", KV_1_1_1_2),
        ("2.1.22", KV_2_1_22_SUTRA),
        ("2.1.22.1", KV_2_1_22_1),
        ("2.1.22.2", KV_2_1_22_2),
    ] {
        cmds.push(reading(unit_id, "ms-B", &drop_last(text)));
        cmds.push(reading(unit_id, "ms-C", &drop_last(&swap_first(text, "इति"))));
        cmds.push(reading(unit_id, "ed-1", text));
    }
    cmds.push(reading("1.1.1.3", "ms-B", KV_1_1_1_3));
    cmds.push(reading("2.1.22.3", "ed-1", KV_2_1_22_3));
    cmds
}

/// Three witnesses of a single four-word unit whose raw token distances are
/// d(A,B)=2, d(A,C)=4, d(B,C)=4.
pub fn three_taxon() -> Vec<Command> {
    let reading = |w: &str, text: &str| Command::RecordReading {
        work: "DEMO".into(),
        unit: "1.1.1".parse().unwrap(),
        witness: w.into(),
        text: text.into(),
    };
    vec![
        Command::CreateWork { id: "DEMO".into(), title: "Three-witness demo".into(), script: "Latn".into() },
        Command::AddUnit { work: "DEMO".into(), unit: "1.1.1".into(), kind: UnitKind::Sutra, base_text: "a b c d".into() },
        witness("A", WitnessKind::Manuscript),
        witness("B", WitnessKind::Manuscript),
        witness("C", WitnessKind::Manuscript),
        reading("A", "a b c d"),
        reading("B", "x y c d"),
        reading("C", "m n o p"),
    ]
}

/// Applies `commands` to an empty corpus.
pub fn build(commands: &[Command]) -> Result<Corpus, StoreError> {
    let mut corpus = Corpus::default();
    for c in commands {
        apply(&mut corpus, c)?;
    }
    Ok(corpus)
}

/// Interchange document of the corpus `commands` build, ready for `tht import`.
pub fn document(commands: &[Command]) -> Result<InterchangeDocument, StoreError> {
    Ok(export_corpus(&build(commands)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collation::tokenize;

    #[test]
    fn section_token_counts() {
        let count = |t| tokenize(t, "Deva").len();
        assert_eq!(count(KV_1_1_1_SUTRA), 3);
        assert_eq!(count(KV_1_1_1_1) + count(KV_1_1_1_2), 25);
        assert_eq!(count(KV_1_1_1_3), 6);
        assert_eq!(count(KV_2_1_22_1), 11);
        assert_eq!(count(KV_2_1_22_2), 14);
    }

    #[test]
    fn fixtures_build() {
        build(&kv_1_1_1()).unwrap();
        build(&kv_2_1_22()).unwrap();
        build(&kv_stemma()).unwrap();
        build(&three_taxon()).unwrap();
    }
}
