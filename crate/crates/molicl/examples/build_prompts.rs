//! Prompt assembly: the zero-shot instruction template, multi-shot
//! input/output blocks in reverse retrieval order, and the mock backend.
//!
//! Run: `cargo run --example build_prompts`

use molicl::promptllm::{build_prompt, complete, parse_label, Backend, Demonstration, Task};

fn main() {
    // zero-shot: instruction template, no demonstrations
    let zero = build_prompt(Task::Caption, &[], "CCO");
    println!(
        "zero-shot captioning prompt:\n---\n{}\n---\n",
        zero.rendered_text
    );

    // multi-shot: no instructions, most similar demonstration rendered last
    let retrieved = vec![
        Demonstration {
            input: "CCCCCO".into(),
            output: "A primary alcohol bearing a hydroxyl group on a chain of 5 carbons.".into(),
        },
        Demonstration {
            input: "CCCCCCCO".into(),
            output: "A primary alcohol bearing a hydroxyl group on a chain of 7 carbons.".into(),
        },
    ];
    let few = build_prompt(Task::Caption, &retrieved, "CCCCCCO");
    println!(
        "two-shot captioning prompt:\n---\n{}\n---\n",
        few.rendered_text
    );

    // the mock backend copies the nearest demonstration's caption
    println!(
        "mock completion: {}\n",
        complete(&few, &Backend::Mock).unwrap()
    );

    // classification prompts use Answer: fields and majority voting
    let votes = vec![
        Demonstration {
            input: "CCCCCCN".into(),
            output: "Yes".into(),
        },
        Demonstration {
            input: "CCCCCCCCN".into(),
            output: "Yes".into(),
        },
        Demonstration {
            input: "CCCCCCO".into(),
            output: "No".into(),
        },
    ];
    let prop = build_prompt(Task::Property, &votes, "CCCCCN");
    println!("property prompt:\n---\n{}\n---", prop.rendered_text);
    println!("mock vote: {}", complete(&prop, &Backend::Mock).unwrap());

    // completions are reduced to labels by a keyword scan
    for text in ["Yes, it is permeable", "LOW yield expected", "maybe"] {
        println!(
            "parse_label({text:?}) = {:?}",
            parse_label(text, Task::Property)
        );
    }
}
