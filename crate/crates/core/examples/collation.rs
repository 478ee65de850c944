//! Tokenization, token alignment and token edit distance.

use textual_history::collation::{align, edit_distance, normalized_distance, tokenize, AlignOp};

fn main() {
    let base = tokenize("तत्पुरुषः इति संज्ञा ऽधिक्रियते प्राग् बहुव्रीहेः।", "Deva");
    let other = tokenize("तत्पुरुष इति संज्ञा अधिक्रियते प्राक् बहुव्रीहेः ।", "Deva");
    println!("base   ({} tokens): {base}", base.len());
    println!("other  ({} tokens): {other}", other.len());

    let a = base.as_slice();
    let b = other.as_slice();
    println!("edit distance: {}", edit_distance(a, b));
    println!("normalized:    {:.6}", normalized_distance(a, b));

    for op in &align(a, b).ops {
        match *op {
            AlignOp::Match { a: i, .. } => println!("  = {}", a[i]),
            AlignOp::Substitute { a: i, b: j } => println!("  ~ {} -> {}", a[i], b[j]),
            AlignOp::Delete { a: i } => println!("  - {}", a[i]),
            AlignOp::Insert { b: j } => println!("  + {}", b[j]),
        }
    }
}
