//! Manuscripts and commentary pseudo-witnesses in one tree.
//!
//! A commentary becomes a taxon made of the base-text words its evidence
//! covers, so commentaries can be placed among the manuscripts.

use textual_history::phylogeny::{self, SourceSelector, TreeMethod, TreeRequest, UnitScope};
use textual_history::{collation, fixtures};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = fixtures::build(&fixtures::kv_stemma())?;
    let scope: Vec<_> = ["1.1.1", "1.1.1.1", "1.1.1.2"].iter().map(|s| s.parse()).collect::<Result<_, _>>()?;

    let ny = collation::pseudo_witness(&corpus, "Ny", "KV", Some(&scope))?;
    for (unit, seq) in &ny.sequences {
        println!("Ny pseudo-witness {unit}: {} tokens", seq.len());
    }

    for (sources, method) in [
        (SourceSelector::ManuscriptsOnly, TreeMethod::Upgma),
        (SourceSelector::ManuscriptsAndCommentaries, TreeMethod::Upgma),
        (SourceSelector::ManuscriptsAndCommentaries, TreeMethod::NeighborJoining),
        (SourceSelector::CommentariesOnly, TreeMethod::Upgma),
    ] {
        let request = TreeRequest { sources, method, units: UnitScope::Units(scope.clone()), ..TreeRequest::default() };
        let result = phylogeny::build_tree(&corpus, "KV", &request)?;
        println!("{:<13} {:<5} {}", sources.as_str(), method.as_str(), result.newick);
        for w in result.warnings {
            println!("  warning: {w}");
        }
    }
    Ok(())
}
