//! ReAct completion parsing.

use serde_json::Value;
use thiserror::Error;

/// The tool name the JSON-blob dialect uses to end a loop.
pub const FINAL_ANSWER_ACTION: &str = "Final Answer";

const FINAL_MARKER: &str = "Final Answer:";
const THOUGHT_MARKER: &str = "Thought:";
const ACTION_MARKER: &str = "Action:";
const ACTION_INPUT_MARKER: &str = "Action Input:";

#[derive(Debug, Clone, PartialEq)]
pub enum ParsedAction {
    /// A tool or agent invocation; whether it is a delegation is decided
    /// by the dispatcher, not the parser.
    Invoke { name: String, input: Value },
    Final(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedOutput {
    pub thought: Option<String>,
    pub action: ParsedAction,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("no action or final answer found")]
    NoAction,
    #[error("malformed action blob: {0}")]
    MalformedBlob(String),
    #[error("multiple actions in one response; only a SINGLE action is allowed")]
    MultipleActions,
}

impl ParseError {
    /// Observation fed back to the model after a parse failure.
    pub fn corrective_observation(&self) -> String {
        format!(
            "Invalid or incomplete response: {self}. Reply with a Thought, then either exactly one \
             ```json``` blob with \"action\" and \"action_input\" keys, or `Final Answer:` followed by the answer."
        )
    }
}

/// A fenced block: byte offset of the opening fence and its body.
struct Fence<'a> {
    start: usize,
    body: &'a str,
}

fn fences(text: &str) -> Vec<Fence<'_>> {
    let mut out = Vec::new();
    let mut pos = 0;
    while let Some(rel) = text[pos..].find("```") {
        let start = pos + rel;
        let after = start + 3;
        // optional language tag on the fence line
        let tag_len = text[after..]
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_' || c == '-'))
            .unwrap_or(text.len() - after);
        let body_start = after + tag_len;
        // a JSON body may itself contain backticks inside strings; close the
        // fence only after the value ends
        let skip = if looks_like_blob(&text[body_start..]) {
            let mut values = serde_json::Deserializer::from_str(&text[body_start..]).into_iter::<Value>();
            match values.next() {
                Some(Ok(_)) => values.byte_offset(),
                _ => 0,
            }
        } else {
            0
        };
        match text[body_start + skip..].find("```") {
            Some(end_rel) => {
                let end = body_start + skip + end_rel;
                out.push(Fence { start, body: &text[body_start..end] });
                pos = end + 3;
            }
            None => {
                // unterminated fence: take the rest
                out.push(Fence { start, body: &text[body_start..] });
                break;
            }
        }
    }
    out
}

fn looks_like_blob(body: &str) -> bool {
    matches!(body.trim_start().chars().next(), Some('{') | Some('['))
}

fn is_action_object(v: &Value) -> bool {
    v.as_object().is_some_and(|o| o.contains_key("action"))
}

fn blob_action(body: &str) -> Result<ParsedAction, ParseError> {
    let v: Value = serde_json::from_str(body.trim()).map_err(|e| ParseError::MalformedBlob(e.to_string()))?;
    let obj = match v {
        Value::Array(_) => return Err(ParseError::MultipleActions),
        Value::Object(o) => o,
        _ => return Err(ParseError::MalformedBlob("expected a JSON object".into())),
    };
    let name = match obj.get("action") {
        Some(Value::String(s)) if !s.trim().is_empty() => s.trim().to_string(),
        Some(_) => return Err(ParseError::MalformedBlob("`action` must be a non-empty string".into())),
        None => return Err(ParseError::MalformedBlob("missing `action` key".into())),
    };
    let input = obj
        .get("action_input")
        .cloned()
        .ok_or_else(|| ParseError::MalformedBlob("missing `action_input` key".into()))?;
    if let Value::Array(items) = &input {
        if items.iter().any(is_action_object) {
            return Err(ParseError::MultipleActions);
        }
    }
    if name == FINAL_ANSWER_ACTION {
        let text = match input {
            Value::String(s) => s,
            other => other.to_string(),
        };
        return Ok(ParsedAction::Final(text));
    }
    Ok(ParsedAction::Invoke { name, input })
}

/// Strips a trailing `Action:` label and whitespace from a thought span.
fn clean_thought(span: &str) -> Option<String> {
    let mut t = span.trim();
    if let Some(stripped) = t.strip_suffix(ACTION_MARKER) {
        t = stripped.trim_end();
    }
    if let Some(stripped) = t.strip_prefix(THOUGHT_MARKER) {
        t = stripped.trim();
    }
    (!t.is_empty()).then(|| t.to_string())
}

/// Plain `Action: name` / `Action Input: value` form, as emitted by some
/// conversational agents.
fn plain_action(text: &str, from: usize) -> Option<(usize, ParsedAction)> {
    let rel = text[from..].find(ACTION_MARKER)?;
    let at = from + rel;
    let rest = &text[at + ACTION_MARKER.len()..];
    let (name_line, tail) = rest.split_once('\n').unwrap_or((rest, ""));
    let name = name_line.trim();
    if name.is_empty() {
        return None;
    }
    let input_text = tail.trim_start().strip_prefix(ACTION_INPUT_MARKER)?.trim();
    let input = match serde_json::from_str::<Value>(input_text) {
        Ok(v @ Value::Object(_)) => v,
        _ => Value::String(input_text.to_string()),
    };
    if name == FINAL_ANSWER_ACTION {
        let text = match input {
            Value::String(s) => s,
            other => other.to_string(),
        };
        return Some((at, ParsedAction::Final(text)));
    }
    Some((at, ParsedAction::Invoke { name: name.to_string(), input }))
}

/// Parses one model completion into an optional thought and one action.
pub fn parse_react_output(text: &str) -> Result<ParsedOutput, ParseError> {
    let blobs: Vec<Fence<'_>> = fences(text).into_iter().filter(|f| looks_like_blob(f.body)).collect();
    let final_at = {
        // ignore markers inside fenced blocks
        let all = fences(text);
        let mut found = None;
        let mut pos = 0;
        while let Some(rel) = text[pos..].find(FINAL_MARKER) {
            let at = pos + rel;
            let inside = all.iter().any(|f| {
                let body_start = f.body.as_ptr() as usize - text.as_ptr() as usize;
                at >= body_start && at < body_start + f.body.len()
            });
            if !inside {
                found = Some(at);
                break;
            }
            pos = at + FINAL_MARKER.len();
        }
        found
    };
    let thought_start = text.find(THOUGHT_MARKER).map(|i| i + THOUGHT_MARKER.len());

    let blob_at = blobs.first().map(|f| f.start);
    let final_wins = match (final_at, blob_at) {
        (Some(f), Some(b)) => f < b,
        (Some(_), None) => true,
        _ => false,
    };

    let span_end = |end: usize| -> Option<String> {
        let begin = thought_start.filter(|&s| s <= end).unwrap_or(0);
        clean_thought(&text[begin..end])
    };

    if final_wins {
        let at = final_at.unwrap();
        let body_start = at + FINAL_MARKER.len();
        let body_end = blob_at.filter(|&b| b > body_start).unwrap_or(text.len());
        return Ok(ParsedOutput {
            thought: span_end(at),
            action: ParsedAction::Final(text[body_start..body_end].trim().to_string()),
        });
    }
    if let Some(first) = blobs.first() {
        if blobs.len() > 1 {
            return Err(ParseError::MultipleActions);
        }
        let action = blob_action(first.body)?;
        return Ok(ParsedOutput { thought: span_end(first.start), action });
    }
    if let Some((at, action)) = plain_action(text, 0) {
        return Ok(ParsedOutput { thought: span_end(at), action });
    }
    Err(ParseError::NoAction)
}

/// Renders a thought and action the way the prompt's format asks for.
/// [`parse_react_output`] inverts this for well-formed inputs.
pub fn render_react_output(thought: Option<&str>, action: &ParsedAction) -> String {
    let mut out = String::new();
    if let Some(t) = thought {
        out.push_str(THOUGHT_MARKER);
        out.push(' ');
        out.push_str(t);
        out.push('\n');
    }
    match action {
        ParsedAction::Final(text) => {
            out.push_str(FINAL_MARKER);
            out.push(' ');
            out.push_str(text);
        }
        ParsedAction::Invoke { name, input } => {
            out.push_str(&render_action_blob(name, input));
        }
    }
    out
}

pub(crate) fn render_action_blob(name: &str, input: &Value) -> String {
    let blob = serde_json::json!({"action": name, "action_input": input});
    format!(
        "{ACTION_MARKER}\n```json\n{}\n```",
        serde_json::to_string_pretty(&blob).expect("json value serializes")
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn transcript_tool_call() {
        let text = "Action:\n```json\n{\"action\": \"search_materials_structure__get\", \"action_input\": {\"formula\": \"LiTaO3\", \"limit\": 5, \"fields\": \"material_id,structure\"}}\n```";
        let p = parse_react_output(text).unwrap();
        assert_eq!(p.thought, None);
        assert_eq!(
            p.action,
            ParsedAction::Invoke {
                name: "search_materials_structure__get".into(),
                input: json!({"formula": "LiTaO3", "limit": 5, "fields": "material_id,structure"}),
            }
        );
    }

    #[test]
    fn final_answer() {
        let p = parse_react_output("Final Answer: 2.36").unwrap();
        assert_eq!(p.action, ParsedAction::Final("2.36".into()));
        let p = parse_react_output("Thought: I now know the final answer\nFinal Answer: 2.36\n").unwrap();
        assert_eq!(p.thought.as_deref(), Some("I now know the final answer"));
        assert_eq!(p.action, ParsedAction::Final("2.36".into()));
    }

    #[test]
    fn list_of_actions_rejected() {
        let text = "```json\n{\"action\": \"a\", \"action_input\": [{\"action\": \"b\", \"action_input\": {}}, {\"action\": \"c\", \"action_input\": {}}]}\n```";
        assert_eq!(parse_react_output(text), Err(ParseError::MultipleActions));
        let top = "```\n[{\"action\": \"b\", \"action_input\": {}}]\n```";
        assert_eq!(parse_react_output(top), Err(ParseError::MultipleActions));
        let two = "```json\n{\"action\": \"b\", \"action_input\": {}}\n```\n```json\n{\"action\": \"c\", \"action_input\": {}}\n```";
        assert_eq!(parse_react_output(two), Err(ParseError::MultipleActions));
    }

    #[test]
    fn final_answer_blob() {
        let text = "Action:\n```json\n{\n  \"action\": \"Final Answer\",\n  \"action_input\": \"mp-3666 is LiTaO3.\"\n}\n```";
        assert_eq!(parse_react_output(text).unwrap().action, ParsedAction::Final("mp-3666 is LiTaO3.".into()));
    }

    #[test]
    fn untagged_and_unterminated_fences() {
        let p = parse_react_output("Thought: go\n```\n{\"action\": \"t\", \"action_input\": {}}").unwrap();
        assert_eq!(p.thought.as_deref(), Some("go"));
        assert_eq!(p.action, ParsedAction::Invoke { name: "t".into(), input: json!({}) });
    }

    #[test]
    fn earlier_span_wins() {
        let blob_first = "```json\n{\"action\": \"t\", \"action_input\": 1}\n```\nFinal Answer: no";
        assert!(matches!(parse_react_output(blob_first).unwrap().action, ParsedAction::Invoke { .. }));
        let final_first = "Final Answer: yes\n```json\n{\"action\": \"t\", \"action_input\": 1}\n```";
        assert_eq!(parse_react_output(final_first).unwrap().action, ParsedAction::Final("yes".into()));
    }

    #[test]
    fn marker_inside_blob_is_not_a_final_answer() {
        let text = "```json\n{\"action\": \"t\", \"action_input\": \"Final Answer: trap\"}\n```";
        assert!(matches!(parse_react_output(text).unwrap().action, ParsedAction::Invoke { .. }));
    }

    #[test]
    fn malformed_and_missing() {
        assert!(matches!(parse_react_output("```json\n{\"action\": \n```"), Err(ParseError::MalformedBlob(_))));
        assert!(matches!(parse_react_output("```json\n{\"tool\": \"x\"}\n```"), Err(ParseError::MalformedBlob(_))));
        assert_eq!(parse_react_output("I am not sure."), Err(ParseError::NoAction));
        // a fenced code block that is not a blob is ignored
        assert_eq!(parse_react_output("```python\nprint(1)\n```"), Err(ParseError::NoAction));
    }

    #[test]
    fn plain_action_form() {
        let p = parse_react_output("Thought: Do I need to use a tool? Yes\nAction: MPSummaryExpert\nAction Input: mp-3666").unwrap();
        assert_eq!(p.thought.as_deref(), Some("Do I need to use a tool? Yes"));
        assert_eq!(p.action, ParsedAction::Invoke { name: "MPSummaryExpert".into(), input: json!("mp-3666") });
    }

    #[test]
    fn render_round_trip() {
        let a = ParsedAction::Invoke { name: "x".into(), input: json!({"k": [1, 2], "s": "```"}) };
        let text = render_react_output(Some("think"), &a);
        let p = parse_react_output(&text).unwrap();
        assert_eq!(p.thought.as_deref(), Some("think"));
        assert_eq!(p.action, a);
    }
}
