//! External-process tools: a command template rendered from the tool input,
//! run without a shell, with a timeout and artifact collection.

use std::io::Read;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::OnceLock;
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;
use wait_timeout::ChildExt;

/// Captured output is kept to this many bytes per stream while reading.
const CAPTURE_LIMIT: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessToolSpec {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// e.g. `python3 md.py --structure {structure_path} --steps {n_steps}`.
    /// `{input_json}` is the whole input as JSON; `{input}` is a string
    /// input verbatim.
    pub command_template: String,
    pub workdir: PathBuf,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    /// Off unless explicitly enabled.
    #[serde(default)]
    pub enabled: bool,
    /// Paths relative to `workdir` (placeholders allowed) reported when
    /// they exist after the run.
    #[serde(default)]
    pub artifacts: Vec<String>,
    #[serde(default = "default_tail")]
    pub tail_bytes: usize,
}

fn default_timeout() -> f64 {
    60.0
}

fn default_tail() -> usize {
    4096
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProcessOutcome {
    pub stdout_tail: String,
    pub stderr_tail: String,
    pub artifacts: Vec<PathBuf>,
    pub exit_code: i32,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProcessError {
    #[error("tool is disabled by policy")]
    Policy,
    #[error("placeholder {{{0}}} is not bound by the input")]
    UnboundPlaceholder(String),
    #[error("invalid command template: {0}")]
    Template(String),
    #[error("failed to start: {0}")]
    Spawn(String),
    #[error("timed out after {timeout_secs} s (process killed)")]
    Timeout { timeout_secs: f64, stdout_tail: String, stderr_tail: String },
    #[error("exited with status {code:?}")]
    NonZeroExit { code: Option<i32>, stdout_tail: String, stderr_tail: String },
}

impl ProcessError {
    pub fn observation(&self, tool: &str) -> String {
        match self {
            ProcessError::Timeout { stdout_tail, .. } => {
                format!("Error on {tool}: {self}. Partial output:\n{}", stdout_tail.trim_end())
            }
            ProcessError::NonZeroExit { stdout_tail, stderr_tail, .. } => format!(
                "Error on {tool}: {self}.\nstdout:\n{}\nstderr:\n{}",
                stdout_tail.trim_end(),
                stderr_tail.trim_end()
            ),
            other => format!("Error on {tool}: {other}"),
        }
    }
}

impl ProcessOutcome {
    pub fn observation(&self) -> String {
        let mut out = self.stdout_tail.trim_end().to_string();
        if out.is_empty() {
            out.push_str("(no output)");
        }
        if !self.artifacts.is_empty() {
            let names: Vec<String> = self.artifacts.iter().map(|p| p.display().to_string()).collect();
            out.push_str("\nArtifacts: ");
            out.push_str(&names.join(", "));
        }
        out
    }
}

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{([A-Za-z_][A-Za-z0-9_]*)\}").expect("static regex"))
}

fn bind(name: &str, input: &Value) -> Option<String> {
    let as_text = |v: &Value| match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    match name {
        "input_json" => Some(input.to_string()),
        "input" => Some(as_text(input)),
        key => input.get(key).map(as_text),
    }
}

fn substitute(token: &str, input: &Value) -> Result<String, ProcessError> {
    let mut out = String::with_capacity(token.len());
    let mut last = 0;
    for cap in placeholder_re().captures_iter(token) {
        let m = cap.get(0).expect("whole match");
        out.push_str(&token[last..m.start()]);
        let name = &cap[1];
        out.push_str(&bind(name, input).ok_or_else(|| ProcessError::UnboundPlaceholder(name.to_string()))?);
        last = m.end();
    }
    out.push_str(&token[last..]);
    Ok(out)
}

/// Splits the template into argv first, then fills placeholders per
/// argument, so input values can never inject extra arguments.
pub fn render_command(template: &str, input: &Value) -> Result<Vec<String>, ProcessError> {
    let tokens = shlex::split(template).ok_or_else(|| ProcessError::Template("unbalanced quotes".into()))?;
    if tokens.is_empty() {
        return Err(ProcessError::Template("empty command".into()));
    }
    tokens.iter().map(|t| substitute(t, input)).collect()
}

fn tail(bytes: &[u8], n: usize) -> String {
    let text = String::from_utf8_lossy(bytes);
    if text.len() <= n {
        return text.into_owned();
    }
    let mut start = text.len() - n;
    while !text.is_char_boundary(start) {
        start += 1;
    }
    text[start..].to_string()
}

fn reader(mut stream: impl Read + Send + 'static) -> std::thread::JoinHandle<Vec<u8>> {
    std::thread::spawn(move || {
        let mut kept = Vec::new();
        let mut buf = [0u8; 8192];
        while let Ok(n) = stream.read(&mut buf) {
            if n == 0 {
                break;
            }
            kept.extend_from_slice(&buf[..n]);
            if kept.len() > CAPTURE_LIMIT {
                kept.drain(..kept.len() - CAPTURE_LIMIT);
            }
        }
        kept
    })
}

#[cfg(unix)]
fn kill_tree(child: &mut std::process::Child) {
    // the child leads its own process group; take the whole group down
    // SAFETY: killpg has no memory-safety preconditions.
    unsafe {
        libc::killpg(child.id() as libc::pid_t, libc::SIGKILL);
    }
    let _ = child.kill();
}

#[cfg(not(unix))]
fn kill_tree(child: &mut std::process::Child) {
    let _ = child.kill();
}

pub fn run_process_tool(spec: &ProcessToolSpec, input: &Value) -> Result<ProcessOutcome, ProcessError> {
    if !spec.enabled {
        return Err(ProcessError::Policy);
    }
    let argv = render_command(&spec.command_template, input)?;
    let artifact_paths: Vec<String> = spec
        .artifacts
        .iter()
        .map(|a| substitute(a, input))
        .collect::<Result<_, _>>()?;

    let mut cmd = Command::new(&argv[0]);
    cmd.args(&argv[1..])
        .current_dir(&spec.workdir)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        cmd.process_group(0);
    }
    tracing::info!(tool = %spec.name, argv = ?argv, "starting process tool");
    let mut child = cmd.spawn().map_err(|e| ProcessError::Spawn(format!("{}: {e}", argv[0])))?;
    let out = reader(child.stdout.take().expect("piped stdout"));
    let err = reader(child.stderr.take().expect("piped stderr"));

    let timeout = Duration::from_secs_f64(spec.timeout_secs.max(0.0));
    let status = match child.wait_timeout(timeout) {
        Ok(Some(status)) => Some(status),
        Ok(None) => None,
        Err(e) => {
            kill_tree(&mut child);
            let _ = child.wait();
            return Err(ProcessError::Spawn(e.to_string()));
        }
    };
    if status.is_none() {
        kill_tree(&mut child);
        let _ = child.wait();
    }
    let stdout_tail = tail(&out.join().unwrap_or_default(), spec.tail_bytes);
    let stderr_tail = tail(&err.join().unwrap_or_default(), spec.tail_bytes);

    let Some(status) = status else {
        tracing::warn!(tool = %spec.name, "process tool timed out");
        return Err(ProcessError::Timeout { timeout_secs: spec.timeout_secs, stdout_tail, stderr_tail });
    };
    if !status.success() {
        return Err(ProcessError::NonZeroExit { code: status.code(), stdout_tail, stderr_tail });
    }
    let artifacts = artifact_paths
        .into_iter()
        .map(PathBuf::from)
        .filter(|p| spec.workdir.join(p).exists())
        .collect();
    Ok(ProcessOutcome { stdout_tail, stderr_tail, artifacts, exit_code: status.code().unwrap_or(0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn spec(template: &str, dir: &std::path::Path) -> ProcessToolSpec {
        ProcessToolSpec {
            name: "t".into(),
            description: String::new(),
            command_template: template.into(),
            workdir: dir.to_path_buf(),
            timeout_secs: 5.0,
            enabled: true,
            artifacts: vec![],
            tail_bytes: 4096,
        }
    }

    #[test]
    fn render_is_per_argument() {
        let argv = render_command("echo --x={a} '{b} c'", &json!({"a": "1 2; rm -rf /", "b": 3})).unwrap();
        assert_eq!(argv, vec!["echo", "--x=1 2; rm -rf /", "3 c"]);
        assert_eq!(render_command("echo {nope}", &json!({})), Err(ProcessError::UnboundPlaceholder("nope".into())));
        assert_eq!(render_command("run {input}", &json!("code")).unwrap(), vec!["run", "code"]);
        assert!(matches!(render_command("echo 'x", &json!({})), Err(ProcessError::Template(_))));
    }

    #[test]
    fn disabled_by_default() {
        let s: ProcessToolSpec = serde_json::from_value(json!({"name": "x", "command_template": "true", "workdir": "."})).unwrap();
        assert!(!s.enabled);
        assert_eq!(run_process_tool(&s, &json!({})), Err(ProcessError::Policy));
    }

    #[test]
    fn tail_keeps_char_boundaries() {
        assert_eq!(tail("aé".as_bytes(), 1), "");
        assert_eq!(tail(b"hello", 3), "llo");
    }

    #[cfg(unix)]
    #[test]
    fn runs_and_collects() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = spec("sh -c 'echo {msg}; echo x > out.txt'", dir.path());
        s.artifacts = vec!["out.txt".into(), "missing.txt".into()];
        let out = run_process_tool(&s, &json!({"msg": "hi"})).unwrap();
        assert_eq!(out.stdout_tail, "hi\n");
        assert_eq!(out.artifacts, vec![PathBuf::from("out.txt")]);
        assert_eq!(out.observation(), "hi\nArtifacts: out.txt");
    }

    #[cfg(unix)]
    #[test]
    fn non_zero_exit() {
        let dir = tempfile::tempdir().unwrap();
        let e = run_process_tool(&spec("sh -c 'echo partial; echo bad >&2; exit 3'", dir.path()), &json!({})).unwrap_err();
        assert_eq!(e, ProcessError::NonZeroExit { code: Some(3), stdout_tail: "partial\n".into(), stderr_tail: "bad\n".into() });
        assert!(e.observation("t").starts_with("Error on t: exited with status Some(3)"));
    }

    #[cfg(unix)]
    #[test]
    fn timeout_kills_group() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = spec("sh -c 'echo started; sleep 30 & sleep 30'", dir.path());
        s.timeout_secs = 0.3;
        let t0 = std::time::Instant::now();
        match run_process_tool(&s, &json!({})) {
            Err(ProcessError::Timeout { stdout_tail, .. }) => assert_eq!(stdout_tail, "started\n"),
            other => panic!("{other:?}"),
        }
        assert!(t0.elapsed() < Duration::from_secs(10));
    }
}
