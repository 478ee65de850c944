//! Quotation uniformity and archetype hints.
//!
//! The third section of each sutra is attested by the manuscript but no
//! commentary quotes it, which suggests the section entered the text after
//! those commentaries were written.

use textual_history::evidence::{self, EvidenceKind, NewAnnotation};
use textual_history::{fixtures, Command, NodePath, Store, StoreConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut store = Store::in_memory(StoreConfig::default());
    for command in fixtures::kv_all() {
        store.execute("fixture", command)?;
    }

    // Pm quotes the first example with a different wording.
    let quote = NewAnnotation::new(NodePath::unit("KV", "1.1.1".parse()?).child("Pm"), "1.1.1.2".parse()?, 0, 2, EvidenceKind::Direct)
        .subtype("full-quotation")
        .quoted("आश्वलायनः ऐतिकायनिः");
    store.execute("editor", Command::Annotate(quote))?;

    let corpus = store.snapshot();
    for unit in ["1.1.1.2", "1.1.1.3", "2.1.22.3"] {
        let report = evidence::transmission_report(&corpus, "KV", &unit.parse()?)?;
        print!("{}", textual_history::cli::render_transmission(&report));
        println!();
    }
    Ok(())
}
