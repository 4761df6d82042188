//! The two HTTP interfaces — the embedding service and the chat-completions
//! backend — exercised against a local stub server, so this runs offline.
//!
//! Run: `cargo run --example http_backends`

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;

use molicl::promptllm::{build_prompt, complete, Backend, HttpBackend, Task};
use molicl::textemb::{fetch_embeddings, EmbedEndpoint};

/// Answer exactly one HTTP request with a JSON body.
fn serve_one(listener: TcpListener, body: String) -> std::thread::JoinHandle<String> {
    std::thread::spawn(move || {
        let (mut stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut content_length = 0usize;
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            if let Some(rest) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                content_length = rest.trim().parse().unwrap();
            }
            if line == "\r\n" {
                break;
            }
        }
        let mut request_body = vec![0u8; content_length];
        reader.read_exact(&mut request_body).unwrap();
        let response = format!(
            "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\n\r\n{}",
            body.len(),
            body
        );
        stream.write_all(response.as_bytes()).unwrap();
        String::from_utf8(request_body).unwrap()
    })
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // embedding service: POST {"texts": [...]} -> {"embeddings": [[...]]}
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let url = format!("http://{}", listener.local_addr()?);
    let handle = serve_one(
        listener,
        r#"{"embeddings": [[3.0, 4.0, 0.0], [0.0, 1.0, 0.0]]}"#.to_string(),
    );
    let texts = vec!["an alcohol".to_string(), "an alkane".to_string()];
    let vectors = fetch_embeddings(&texts, &EmbedEndpoint::new(&url))?;
    println!("embedding request body: {}", handle.join().unwrap());
    println!("normalized vectors back: {vectors:?}");

    // chat completions: POST {model, messages, temperature, max_tokens}
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let url = format!("http://{}", listener.local_addr()?);
    let handle = serve_one(
        listener,
        r#"{"choices": [{"message": {"role": "assistant", "content": "An aliphatic alcohol."}}]}"#
            .to_string(),
    );
    let bundle = build_prompt(Task::Caption, &[], "CCO");
    let backend = Backend::Http(HttpBackend::new(&url, "toy-model"));
    let completion = complete(&bundle, &backend)?;
    let sent = handle.join().unwrap();
    let sent_json: serde_json::Value = serde_json::from_str(&sent)?;
    println!("\nchat request model: {}", sent_json["model"]);
    println!("chat request temperature: {}", sent_json["temperature"]);
    println!("completion: {completion}");
    Ok(())
}
