//! Validate analytic gradients of the full encoder + contrastive loss
//! against central finite differences.
//!
//! Run: `cargo run --example gradient_check`

use molicl::encoder::{bind_encoder, encode_on_tape, graph_inputs, init_params, EncoderConfig};
use molicl::molgraph::{parse_smiles, EDGE_FEATURE_WIDTH, NODE_FEATURE_WIDTH};
use molicl::numerics::{finite_diff_check, Tensor2};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = EncoderConfig {
        hidden_dim: 8,
        heads_layer1: 2,
        out_dim: 4,
        attn_negative_slope: 0.2,
    };
    let graph = parse_smiles("CC(=O)Oc1ccccc1")?;
    let mut store = init_params(&cfg, NODE_FEATURE_WIDTH, EDGE_FEATURE_WIDTH, 42)?;

    // loss: temperature-scaled softmax over one positive and two negatives
    let positive = vec![0.9, -0.1, 0.3, 0.2];
    let negatives = vec![vec![-0.5, 0.8, 0.1, 0.0], vec![0.2, 0.2, -0.9, 0.4]];
    let report = finite_diff_check(
        &mut store,
        |tape, s| {
            let vars = bind_encoder(tape, s, &cfg);
            let gi = graph_inputs(tape, &graph).unwrap();
            let z = encode_on_tape(tape, &vars, &gi);
            let tau_inv = 10.0;
            let p = tape.constant(Tensor2::row_vector(&positive));
            let dp = tape.dot(z, p);
            let mut logits = vec![tape.scale(dp, tau_inv)];
            for n in &negatives {
                let nv = tape.constant(Tensor2::row_vector(n));
                let dn = tape.dot(z, nv);
                logits.push(tape.scale(dn, tau_inv));
            }
            let row = tape.concat_cols(&logits);
            let probs = tape.softmax_row(row);
            let sel = tape.constant(Tensor2::row_vector(&[1.0, 0.0, 0.0]));
            let p0 = tape.dot(probs, sel);
            let lg = tape.log(p0);
            tape.scale(lg, -1.0)
        },
        1e-5,
        1e-4,
    )?;
    println!("{report}");
    assert!(report.all_pass());
    println!(
        "\nall {} parameter tensors within tolerance",
        report.entries.len()
    );
    Ok(())
}
