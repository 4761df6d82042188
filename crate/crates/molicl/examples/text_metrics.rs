//! Scoring: BLEU with brevity penalty, ROUGE variants, METEOR-lite with
//! Porter stemming, and binary F1 with its zero-denominator convention.
//!
//! Run: `cargo run --example text_metrics`

use molicl::metrics::{bleu, f1_binary, meteor_lite, porter_stem, rouge, RougeVariant};

fn main() {
    let candidate = "the cat sat";
    let reference = "the cat sat down";
    println!("candidate: {candidate:?}  reference: {reference:?}");
    println!(
        "  bleu-2   {:.4} (perfect precisions, brevity penalty exp(1-4/3))",
        bleu(candidate, reference, 2)
    );
    println!("  bleu-4   {:.4}", bleu(candidate, reference, 4));
    println!(
        "  rouge-1  {:.4}",
        rouge(candidate, reference, RougeVariant::Rouge1)
    );
    println!(
        "  rouge-2  {:.4}",
        rouge(candidate, reference, RougeVariant::Rouge2)
    );
    println!(
        "  rouge-L  {:.4}",
        rouge(candidate, reference, RougeVariant::RougeL)
    );
    println!("  meteor   {:.4}", meteor_lite(candidate, reference));

    println!("\nword order only hurts rouge-L and meteor:");
    println!(
        "  rouge-L(a b c, a c b) = {:.4}",
        rouge("a b c", "a c b", RougeVariant::RougeL)
    );
    println!(
        "  meteor(cats sitting, cat sat) = {:.4} (stem match on cats/cat)",
        meteor_lite("cats sitting", "cat sat")
    );

    println!("\nPorter stems:");
    for word in ["cats", "sitting", "molecules", "aromatic", "relational"] {
        println!("  {word} -> {}", porter_stem(word));
    }

    // F1 returns 0 rather than NaN when a predictor never fires
    let labels = [true, false, true, false];
    let all_negative = vec![Some(false); 4];
    let score = f1_binary(&all_negative, &labels).unwrap();
    println!(
        "\nall-negative predictions on mixed labels: F1 = {}",
        score.f1
    );
    let mixed = [Some(true), Some(true), Some(false), None];
    let score = f1_binary(&mixed, &labels).unwrap();
    println!(
        "mixed predictions: F1 = {:.3} (tp {} fp {} fn {}, unparseable counts as wrong)",
        score.f1, score.true_positives, score.false_positives, score.false_negatives
    );
}
