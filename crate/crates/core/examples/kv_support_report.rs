//! Word-level support of the Kāśikāvṛtti by its commentaries.
//!
//! Of the 25 words in the first two sections of sutra 1.1.1 the Nyāsa
//! supports 24 and the Padamañjarī 12. For 2.1.22 the sub-commentary
//! Tantrapradīpa supports one of the nine words the Nyāsa supports.

use textual_history::{evidence, fixtures, UnitId};

fn ids(list: &[&str]) -> Vec<UnitId> {
    list.iter().map(|s| s.parse().expect("unit id")).collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = fixtures::build(&fixtures::kv_all())?;

    let sections = ids(&["1.1.1.1", "1.1.1.2"]);
    for label in ["Ny", "Pm"] {
        let stats = evidence::support_report(&corpus, "KV", &sections, label)?;
        println!("1.1.1 {label:<3} {stats}");
    }

    let sections = ids(&["2.1.22.1", "2.1.22.2"]);
    for label in ["Ny", "Tp"] {
        let stats = evidence::support_report(&corpus, "KV", &sections, label)?;
        println!("2.1.22 {label:<3} {stats}");
    }

    // Which words did Ny leave out?
    let work = corpus.work("KV")?;
    for id in ids(&["1.1.1.1", "1.1.1.2"]) {
        let unit = work.unit(&id)?;
        let covered = evidence::covered_tokens(work, &id, "Ny");
        let tokens = textual_history::tokenize(&unit.base_text, &work.script);
        for (i, token) in tokens.as_slice().iter().enumerate() {
            if !covered.contains(&i) {
                println!("unsupported by Ny: {id} #{i} {token}");
            }
        }
    }
    Ok(())
}
