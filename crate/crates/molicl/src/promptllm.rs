//! Prompt assembly and completion backends.
//!
//! Zero-shot prompts carry an instruction header; multi-shot prompts carry
//! no instructions, just input/output demonstration blocks. Demonstrations
//! are placed in reverse retrieval order, so the most similar one sits last,
//! adjacent to the query block.
//!
//! The mock backend turns end-to-end evaluation into a pure function of
//! retrieval quality: captioning copies the output of the demonstration
//! nearest the query, classification takes a majority vote with ties going
//! to the nearest demonstration.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::tokenize;

/// The three task families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Caption,
    Property,
    Yield,
}

impl Task {
    /// Field label used for demonstration outputs in prompts.
    pub fn output_field(&self) -> &'static str {
        match self {
            Task::Caption => "Caption",
            Task::Property | Task::Yield => "Answer",
        }
    }

    fn zero_shot_instruction(&self) -> &'static str {
        match self {
            Task::Caption => {
                "You are an expert chemist. Given the molecular SMILES, your task is to predict \
                 the molecule description using your experienced molecular knowledge."
            }
            Task::Property => {
                "You are an expert chemist. Given the molecular SMILES, your task is to predict \
                 whether the molecule has the queried property using your experienced molecular \
                 knowledge. Answer with Yes or No."
            }
            Task::Yield => {
                "You are an expert chemist. Given the reaction SMILES, your task is to predict \
                 whether the reaction yield is high or low using your experienced molecular \
                 knowledge. Answer with High or Low."
            }
        }
    }

    /// Render a binary label the way demonstrations and the mock backend
    /// spell it for this task.
    pub fn render_label(&self, label: bool) -> &'static str {
        match (self, label) {
            (Task::Yield, true) => "High",
            (Task::Yield, false) => "Low",
            (_, true) => "Yes",
            (_, false) => "No",
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(match self {
            Task::Caption => "caption",
            Task::Property => "property",
            Task::Yield => "yield",
        })
    }
}

/// One in-context example as placed in the prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demonstration {
    pub input: String,
    pub output: String,
}

/// A fully rendered prompt plus its structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptBundle {
    pub task: Task,
    /// Present only for zero-shot prompts.
    pub instruction: Option<String>,
    /// Demonstrations in placed order: reverse retrieval order, most
    /// similar last.
    pub demonstrations: Vec<Demonstration>,
    pub query: String,
    pub rendered_text: String,
}

/// Assemble a prompt from demonstrations in retrieval order (most similar
/// first). With no demonstrations the task's zero-shot instruction template
/// is used; with demonstrations there are no instructions at all.
pub fn build_prompt(
    task: Task,
    demonstrations_in_retrieval_order: &[Demonstration],
    query: &str,
) -> PromptBundle {
    let field = task.output_field();
    let mut placed: Vec<Demonstration> = demonstrations_in_retrieval_order.to_vec();
    placed.reverse();

    let mut rendered = String::new();
    let instruction = if placed.is_empty() {
        let text = task.zero_shot_instruction();
        rendered.push_str(text);
        rendered.push_str("\n\n");
        Some(text.to_string())
    } else {
        for demo in &placed {
            rendered.push_str(&format!(
                "SMILES:{}\n{}:{}\n\n",
                demo.input, field, demo.output
            ));
        }
        None
    };
    rendered.push_str(&format!("SMILES:{query}\n{field}:"));

    PromptBundle {
        task,
        instruction,
        demonstrations: placed,
        query: query.to_string(),
        rendered_text: rendered,
    }
}

/// Recover `(input, output)` demonstration pairs from rendered prompt text.
/// The trailing query block (empty output) and any instruction header are
/// ignored.
pub fn parse_rendered(text: &str, task: Task) -> Vec<(String, String)> {
    let field_prefix = format!("{}:", task.output_field());
    let mut pairs = Vec::new();
    for block in text.split("\n\n") {
        let mut input = None;
        let mut output = None;
        for line in block.lines() {
            if let Some(rest) = line.strip_prefix("SMILES:") {
                input = Some(rest.to_string());
            } else if let Some(rest) = line.strip_prefix(&field_prefix) {
                output = Some(rest.to_string());
            }
        }
        if let (Some(i), Some(o)) = (input, output) {
            if !o.is_empty() {
                pairs.push((i, o));
            }
        }
    }
    pairs
}

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("backend failed after {attempts} attempts: {message}")]
    Backend { attempts: usize, message: String },
    #[error("backend returned an empty completion")]
    EmptyCompletion,
    #[error("format error: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for PromptError {
    fn from(e: std::io::Error) -> Self {
        PromptError::Io(e.to_string())
    }
}

/// Chat-completions HTTP settings. The API key normally arrives through an
/// environment variable named in the experiment config.
#[derive(Debug, Clone)]
pub struct HttpBackend {
    pub url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub max_retries: usize,
    pub backoff_ms: u64,
    pub timeout_ms: u64,
}

impl HttpBackend {
    pub fn new(url: impl Into<String>, model: impl Into<String>) -> HttpBackend {
        HttpBackend {
            url: url.into(),
            model: model.into(),
            api_key: None,
            temperature: 0.0,
            max_tokens: 512,
            max_retries: 3,
            backoff_ms: 200,
            timeout_ms: 60_000,
        }
    }
}

/// Completion backends.
#[derive(Debug, Clone)]
pub enum Backend {
    Mock,
    Http(HttpBackend),
}

/// Obtain a completion for a prompt.
pub fn complete(bundle: &PromptBundle, backend: &Backend) -> Result<String, PromptError> {
    match backend {
        Backend::Mock => Ok(mock_complete(bundle)),
        Backend::Http(http) => http_complete(bundle, http),
    }
}

fn mock_complete(bundle: &PromptBundle) -> String {
    // the nearest demonstration is rendered last
    let nearest = match bundle.demonstrations.last() {
        Some(d) => d,
        None => return "unknown".to_string(),
    };
    match bundle.task {
        Task::Caption => nearest.output.clone(),
        Task::Property | Task::Yield => {
            let mut positives = 0usize;
            let mut negatives = 0usize;
            for demo in &bundle.demonstrations {
                match parse_label(&demo.output, bundle.task) {
                    Some(true) => positives += 1,
                    Some(false) => negatives += 1,
                    None => {}
                }
            }
            let verdict = match positives.cmp(&negatives) {
                std::cmp::Ordering::Greater => true,
                std::cmp::Ordering::Less => false,
                std::cmp::Ordering::Equal => {
                    parse_label(&nearest.output, bundle.task).unwrap_or(false)
                }
            };
            bundle.task.render_label(verdict).to_string()
        }
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: String,
}

fn http_complete(bundle: &PromptBundle, http: &HttpBackend) -> Result<String, PromptError> {
    let body = serde_json::json!({
        "model": http.model,
        "messages": [{"role": "user", "content": bundle.rendered_text}],
        "temperature": http.temperature,
        "max_tokens": http.max_tokens,
    });
    let attempts = http.max_retries + 1;
    let mut last_error = String::new();
    for attempt in 0..attempts {
        if attempt > 0 {
            std::thread::sleep(Duration::from_millis(
                http.backoff_ms << (attempt - 1).min(8),
            ));
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(http.timeout_ms)))
            .build()
            .into();
        let mut request = agent.post(&http.url);
        if let Some(key) = &http.api_key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        match request.send_json(&body) {
            Ok(mut response) => {
                let parsed: ChatResponse = response
                    .body_mut()
                    .read_json()
                    .map_err(|e| PromptError::Format(format!("bad response body: {e}")))?;
                let content = parsed
                    .choices
                    .first()
                    .map(|c| c.message.content.clone())
                    .ok_or_else(|| PromptError::Format("response has no choices".into()))?;
                if content.is_empty() {
                    return Err(PromptError::EmptyCompletion);
                }
                return Ok(content);
            }
            Err(e) => last_error = e.to_string(),
        }
    }
    Err(PromptError::Backend {
        attempts,
        message: last_error,
    })
}

/// Scan a completion for the first binary keyword: yes/true/high/1 is
/// positive, no/false/low/0 is negative. `None` means unparseable, which
/// scoring treats as incorrect.
pub fn parse_label(completion: &str, task: Task) -> Option<bool> {
    let _ = task; // both classification tasks share the keyword sets
    for token in tokenize(completion) {
        match token.as_str() {
            "yes" | "true" | "high" | "1" => return Some(true),
            "no" | "false" | "low" | "0" => return Some(false),
            _ => {}
        }
    }
    None
}

#[derive(Serialize, Deserialize)]
struct PromptLine<'a> {
    id: &'a str,
    task: Task,
    prompt: &'a str,
}

/// Export prompts as one JSON object per line for offline LLM runs.
pub fn export_prompts(bundles: &[(String, PromptBundle)], path: &Path) -> Result<(), PromptError> {
    let mut w = BufWriter::new(File::create(path)?);
    for (id, bundle) in bundles {
        let line = serde_json::to_string(&PromptLine {
            id,
            task: bundle.task,
            prompt: &bundle.rendered_text,
        })
        .map_err(|e| PromptError::Format(e.to_string()))?;
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct CompletionLine {
    id: String,
    completion: String,
}

/// Import completions from the same one-object-per-line format:
/// `{"id": ..., "completion": ...}`.
pub fn import_completions(path: &Path) -> Result<BTreeMap<String, String>, PromptError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = BTreeMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: CompletionLine = serde_json::from_str(&line)
            .map_err(|e| PromptError::Format(format!("line {}: {e}", lineno + 1)))?;
        out.insert(parsed.id, parsed.completion);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demos(pairs: &[(&str, &str)]) -> Vec<Demonstration> {
        pairs
            .iter()
            .map(|(i, o)| Demonstration {
                input: i.to_string(),
                output: o.to_string(),
            })
            .collect()
    }

    #[test]
    fn zero_shot_caption_prompt_uses_the_instruction_template() {
        let bundle = build_prompt(Task::Caption, &[], "CCO");
        assert!(bundle
            .rendered_text
            .starts_with("You are an expert chemist."));
        assert!(bundle.rendered_text.ends_with("SMILES:CCO\nCaption:"));
        assert!(bundle.instruction.is_some());
        assert!(bundle.demonstrations.is_empty());
    }

    #[test]
    fn multi_shot_prompts_have_no_instructions() {
        let bundle = build_prompt(Task::Caption, &demos(&[("C", "methane")]), "CC");
        assert!(bundle.instruction.is_none());
        assert!(!bundle.rendered_text.contains("expert chemist"));
        let zero = build_prompt(Task::Caption, &[], "CC");
        assert!(zero.instruction.is_some());
    }

    #[test]
    fn demonstrations_render_in_reverse_retrieval_order() {
        let retrieval_order = demos(&[("most", "m"), ("second", "s")]);
        let bundle = build_prompt(Task::Caption, &retrieval_order, "Q");
        // placed order: second first, most-similar last
        assert_eq!(bundle.demonstrations[0].input, "second");
        assert_eq!(bundle.demonstrations[1].input, "most");
        let second_pos = bundle.rendered_text.find("SMILES:second").unwrap();
        let most_pos = bundle.rendered_text.find("SMILES:most").unwrap();
        let query_pos = bundle.rendered_text.find("SMILES:Q").unwrap();
        assert!(second_pos < most_pos && most_pos < query_pos);
    }

    #[test]
    fn reverse_order_holds_for_all_k() {
        for k in 0..6 {
            let retrieval: Vec<Demonstration> = (0..k)
                .map(|i| Demonstration {
                    input: format!("s{i}"),
                    output: format!("o{i}"),
                })
                .collect();
            let bundle = build_prompt(Task::Property, &retrieval, "q");
            let placed: Vec<&str> = bundle
                .demonstrations
                .iter()
                .map(|d| d.input.as_str())
                .collect();
            let expected: Vec<String> = (0..k).rev().map(|i| format!("s{i}")).collect();
            assert_eq!(
                placed,
                expected.iter().map(|s| s.as_str()).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn rendered_prompt_round_trips_through_the_parser() {
        let retrieval = demos(&[("CCO", "an alcohol"), ("CC", "an alkane")]);
        let bundle = build_prompt(Task::Caption, &retrieval, "C");
        let parsed = parse_rendered(&bundle.rendered_text, Task::Caption);
        let placed: Vec<(String, String)> = bundle
            .demonstrations
            .iter()
            .map(|d| (d.input.clone(), d.output.clone()))
            .collect();
        assert_eq!(parsed, placed);
    }

    #[test]
    fn mock_caption_copies_the_nearest_demonstration() {
        let retrieval = demos(&[("near", "nearest caption"), ("far", "far caption")]);
        let bundle = build_prompt(Task::Caption, &retrieval, "Q");
        let completion = complete(&bundle, &Backend::Mock).unwrap();
        assert_eq!(completion, "nearest caption");
    }

    #[test]
    fn mock_classification_takes_the_majority() {
        let retrieval = demos(&[("a", "Yes"), ("b", "No"), ("c", "No")]);
        let bundle = build_prompt(Task::Property, &retrieval, "Q");
        assert_eq!(complete(&bundle, &Backend::Mock).unwrap(), "No");
    }

    #[test]
    fn mock_classification_breaks_ties_toward_the_nearest() {
        // retrieval order: nearest first; it says Yes, the other says No
        let retrieval = demos(&[("near", "Yes"), ("far", "No")]);
        let bundle = build_prompt(Task::Property, &retrieval, "Q");
        assert_eq!(complete(&bundle, &Backend::Mock).unwrap(), "Yes");

        let retrieval = demos(&[("near", "Low"), ("far", "High")]);
        let bundle = build_prompt(Task::Yield, &retrieval, "Q");
        assert_eq!(complete(&bundle, &Backend::Mock).unwrap(), "Low");
    }

    #[test]
    fn mock_zero_shot_returns_a_floor_answer() {
        let bundle = build_prompt(Task::Caption, &[], "Q");
        assert_eq!(complete(&bundle, &Backend::Mock).unwrap(), "unknown");
    }

    #[test]
    fn parse_label_keyword_scan() {
        assert_eq!(
            parse_label("Yes, it is permeable", Task::Property),
            Some(true)
        );
        assert_eq!(parse_label("LOW yield expected", Task::Yield), Some(false));
        assert_eq!(parse_label("maybe", Task::Property), None);
        assert_eq!(parse_label("The answer is 1.", Task::Property), Some(true));
        assert_eq!(
            parse_label("false alarm, actually yes", Task::Property),
            Some(false)
        );
        assert_eq!(parse_label("", Task::Property), None);
    }

    #[test]
    fn unreachable_http_backend_fails_after_retries() {
        let bundle = build_prompt(Task::Caption, &[], "C");
        let mut http = HttpBackend::new("http://127.0.0.1:9", "test-model");
        http.max_retries = 2;
        http.backoff_ms = 1;
        http.timeout_ms = 300;
        let err = complete(&bundle, &Backend::Http(http)).unwrap_err();
        match err {
            PromptError::Backend { attempts, .. } => assert_eq!(attempts, 3),
            other => panic!("expected Backend error, got {other:?}"),
        }
    }

    #[test]
    fn prompt_export_and_completion_import_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let prompts_path = dir.path().join("prompts.jsonl");
        let completions_path = dir.path().join("completions.jsonl");

        let bundles = vec![
            ("q0".to_string(), build_prompt(Task::Caption, &[], "C")),
            (
                "q1".to_string(),
                build_prompt(Task::Caption, &demos(&[("CC", "an alkane")]), "CCC"),
            ),
        ];
        export_prompts(&bundles, &prompts_path).unwrap();
        let text = std::fs::read_to_string(&prompts_path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().next().unwrap().contains("\"id\":\"q0\""));

        let mut w = String::new();
        w.push_str("{\"id\":\"q0\",\"completion\":\"a molecule\"}\n");
        w.push_str("{\"id\":\"q1\",\"completion\":\"an alkane\"}\n");
        std::fs::write(&completions_path, w).unwrap();
        let map = import_completions(&completions_path).unwrap();
        assert_eq!(map.len(), 2);
        assert_eq!(map["q1"], "an alkane");
    }
}
