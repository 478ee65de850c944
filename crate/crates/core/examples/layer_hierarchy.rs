//! Commentaries, sub-commentaries, the sibling limit and optimistic edits.

use textual_history::{Corpus, CorpusError, NodePath, UnitKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut corpus = Corpus::new(3);
    corpus.create_work("KV", "Kāśikāvṛtti", "Deva")?;
    corpus.add_unit("KV", "2.1.22", UnitKind::Sutra, "तत्पुरुषः")?;

    let sutra = NodePath::unit("KV", "2.1.22".parse()?);
    let ny = corpus.add_layer(&sutra, "Ny", "")?;
    let tp = corpus.add_layer(&sutra.child("Ny"), "Tp", "")?;
    println!("Ny depth {}, Tp depth {}", ny.depth, tp.depth);

    for label in ["Pm", "Bm", "Extra"] {
        match corpus.add_layer(&sutra, label, "") {
            Ok(layer) => println!("added {label} at depth {}", layer.depth),
            Err(e @ CorpusError::SiblingLimitExceeded { .. }) => println!("refused {label}: {e}"),
            Err(e) => return Err(e.into()),
        }
    }

    let path = sutra.child("Ny");
    let edited = corpus.edit_layer(&path, "first draft", 1)?;
    println!("{path} now at revision {}", edited.revision);
    if let Err(e) = corpus.edit_layer(&path, "stale draft", 1) {
        println!("stale edit rejected: {e}");
    }

    println!("url form of {}: {}", sutra.child("Ny").child("Tp"), sutra.child("Ny").child("Tp").to_url_segment());
    for p in corpus.all_paths() {
        println!("  {p}");
    }
    Ok(())
}
