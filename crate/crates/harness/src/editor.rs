//! Transports for image-editing models.
//!
//! HTTP contract: `POST` a JSON body `{task_id, mode, prompt, image}` where
//! `image` is a base64 PNG and `mode` is `"image"` or `"text"` (first stage
//! of a two-stage prompt). The response is `{image?, text?}`. Statuses 408,
//! 429 and 5xx are retried; other non-2xx statuses fail the sample.
//!
//! Local-command contract: `<program> <args…> <input.png> <output.png> <prompt>`
//! with `PLANBENCH_TASK_ID` and `PLANBENCH_MODE` in the environment. A zero
//! exit must leave a PNG at the output path; stdout is taken as the text reply.

use std::path::PathBuf;
use std::process::Command;
use std::time::Duration;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EditError {
    #[error("request timed out")]
    Timeout,
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("server error {status}: {message}")]
    Server { status: u16, message: String },
    #[error("request rejected with status {status}: {message}")]
    Rejected { status: u16, message: String },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("command failed: {0}")]
    Command(String),
}

impl EditError {
    pub fn retryable(&self) -> bool {
        matches!(self, EditError::Timeout | EditError::Transport(_) | EditError::Server { .. })
    }

    /// Short tag stored in sample records.
    pub fn tag(&self) -> &'static str {
        match self {
            EditError::Timeout => "timeout",
            EditError::Transport(_) => "transport",
            EditError::Server { .. } => "server",
            EditError::Rejected { .. } => "rejected",
            EditError::Malformed(_) => "malformed",
            EditError::Command(_) => "command",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditMode {
    Image,
    Text,
}

impl EditMode {
    fn as_str(self) -> &'static str {
        match self {
            EditMode::Image => "image",
            EditMode::Text => "text",
        }
    }
}

#[derive(Clone, Debug)]
pub struct EditRequest<'a> {
    pub task_id: &'a str,
    pub sample_index: u32,
    pub prompt: &'a str,
    pub image_png: &'a [u8],
    pub mode: EditMode,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EditResponse {
    pub image_png: Option<Vec<u8>>,
    pub text: Option<String>,
}

/// One model behind some transport. Implementations must be callable from many threads.
pub trait ImageEditor: Send + Sync {
    fn name(&self) -> &str;
    fn edit(&self, request: &EditRequest<'_>) -> Result<EditResponse, EditError>;
}

#[derive(Serialize)]
struct WireRequest<'a> {
    task_id: &'a str,
    mode: &'a str,
    prompt: &'a str,
    image: String,
}

#[derive(Deserialize)]
struct WireResponse {
    image: Option<String>,
    text: Option<String>,
}

const MAX_RESPONSE_BYTES: u64 = 64 * 1024 * 1024;

pub struct HttpEditor {
    name: String,
    url: String,
    agent: ureq::Agent,
}

impl HttpEditor {
    pub fn new(name: &str, url: &str, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpEditor { name: name.to_string(), url: url.to_string(), agent }
    }
}

fn map_transport(e: ureq::Error) -> EditError {
    match e {
        ureq::Error::Timeout(_) => EditError::Timeout,
        ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => EditError::Timeout,
        other => EditError::Transport(other.to_string()),
    }
}

impl ImageEditor for HttpEditor {
    fn name(&self) -> &str {
        &self.name
    }

    fn edit(&self, request: &EditRequest<'_>) -> Result<EditResponse, EditError> {
        let body = WireRequest {
            task_id: request.task_id,
            mode: request.mode.as_str(),
            prompt: request.prompt,
            image: B64.encode(request.image_png),
        };
        let mut resp = self.agent.post(&self.url).send_json(&body).map_err(map_transport)?;
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            let message = resp.body_mut().read_to_string().unwrap_or_default();
            let message: String = message.chars().take(200).collect();
            return Err(if status == 408 || status == 429 || status >= 500 {
                EditError::Server { status, message }
            } else {
                EditError::Rejected { status, message }
            });
        }
        let wire: WireResponse = resp
            .body_mut()
            .with_config()
            .limit(MAX_RESPONSE_BYTES)
            .read_json()
            .map_err(|e| match e {
                ureq::Error::Timeout(_) => EditError::Timeout,
                other => EditError::Malformed(other.to_string()),
            })?;
        let image_png = wire
            .image
            .map(|b| B64.decode(b.as_bytes()).map_err(|e| EditError::Malformed(format!("image is not base64: {e}"))))
            .transpose()?;
        Ok(EditResponse { image_png, text: wire.text })
    }
}

pub struct CommandEditor {
    name: String,
    program: PathBuf,
    args: Vec<String>,
    workdir: PathBuf,
}

impl CommandEditor {
    /// Scratch files go under `workdir`, one pair per (task, sample, mode).
    pub fn new(name: &str, program: impl Into<PathBuf>, args: Vec<String>, workdir: impl Into<PathBuf>) -> Self {
        CommandEditor { name: name.to_string(), program: program.into(), args, workdir: workdir.into() }
    }
}

impl ImageEditor for CommandEditor {
    fn name(&self) -> &str {
        &self.name
    }

    fn edit(&self, request: &EditRequest<'_>) -> Result<EditResponse, EditError> {
        std::fs::create_dir_all(&self.workdir).map_err(|e| EditError::Command(e.to_string()))?;
        let stem = format!("{}.{}.{}", request.task_id, request.sample_index, request.mode.as_str());
        let input = self.workdir.join(format!("{stem}.in.png"));
        let output = self.workdir.join(format!("{stem}.out.png"));
        std::fs::write(&input, request.image_png).map_err(|e| EditError::Command(e.to_string()))?;
        let _ = std::fs::remove_file(&output);
        let out = Command::new(&self.program)
            .args(&self.args)
            .arg(&input)
            .arg(&output)
            .arg(request.prompt)
            .env("PLANBENCH_TASK_ID", request.task_id)
            .env("PLANBENCH_MODE", request.mode.as_str())
            .output()
            .map_err(|e| EditError::Command(format!("{}: {e}", self.program.display())))?;
        if !out.status.success() {
            let stderr = String::from_utf8_lossy(&out.stderr);
            return Err(EditError::Command(format!("{} exited with {}: {}", self.program.display(), out.status, stderr.trim())));
        }
        let text = Some(String::from_utf8_lossy(&out.stdout).into_owned()).filter(|t| !t.trim().is_empty());
        let image_png = match request.mode {
            EditMode::Image => Some(std::fs::read(&output).map_err(|e| EditError::Malformed(format!("no output image: {e}")))?),
            EditMode::Text => std::fs::read(&output).ok(),
        };
        Ok(EditResponse { image_png, text })
    }
}

/// Serves pre-computed candidates from a directory: `{task_id}.{sample}.png`,
/// or `{task_id}.png` for sample 1. Missing files are rejected with status 404.
pub struct CandidateDirEditor {
    dir: PathBuf,
}

impl CandidateDirEditor {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        CandidateDirEditor { dir: dir.into() }
    }
}

impl ImageEditor for CandidateDirEditor {
    fn name(&self) -> &str {
        "candidates"
    }

    fn edit(&self, request: &EditRequest<'_>) -> Result<EditResponse, EditError> {
        let mut names = vec![format!("{}.{}.png", request.task_id, request.sample_index)];
        if request.sample_index == 1 {
            names.push(format!("{}.png", request.task_id));
        }
        for name in names {
            match std::fs::read(self.dir.join(&name)) {
                Ok(png) => return Ok(EditResponse { image_png: Some(png), text: None }),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => continue,
                Err(e) => return Err(EditError::Command(format!("{name}: {e}"))),
            }
        }
        Err(EditError::Rejected { status: 404, message: format!("no candidate for {} sample {}", request.task_id, request.sample_index) })
    }
}

/// Serializable endpoint description, as read from a run config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "transport", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EndpointConfig {
    Http {
        name: String,
        url: String,
        #[serde(default = "default_timeout")]
        timeout_secs: f64,
    },
    LocalCommand {
        name: String,
        program: PathBuf,
        #[serde(default)]
        args: Vec<String>,
    },
}

fn default_timeout() -> f64 {
    120.0
}

impl EndpointConfig {
    pub fn build(&self, workdir: &std::path::Path) -> Result<Box<dyn ImageEditor>, String> {
        match self {
            EndpointConfig::Http { name, url, timeout_secs } => {
                if !(*timeout_secs > 0.0) {
                    return Err("timeout must be positive".into());
                }
                Ok(Box::new(HttpEditor::new(name, url, Duration::from_secs_f64(*timeout_secs))))
            }
            EndpointConfig::LocalCommand { name, program, args } => {
                Ok(Box::new(CommandEditor::new(name, program, args.clone(), workdir)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn retryable_classes() {
        assert!(EditError::Timeout.retryable());
        assert!(EditError::Server { status: 503, message: String::new() }.retryable());
        assert!(!EditError::Rejected { status: 400, message: String::new() }.retryable());
        assert!(!EditError::Malformed("x".into()).retryable());
        assert!(!EditError::Command("x".into()).retryable());
    }

    #[test]
    fn endpoint_config_parses() {
        let http: EndpointConfig =
            serde_json::from_str(r#"{"transport":"http","name":"m","url":"http://127.0.0.1:9/edit"}"#).unwrap();
        assert_eq!(http, EndpointConfig::Http { name: "m".into(), url: "http://127.0.0.1:9/edit".into(), timeout_secs: 120.0 });
        let cmd: EndpointConfig =
            serde_json::from_str(r#"{"transport":"local-command","name":"c","program":"/bin/cp"}"#).unwrap();
        assert!(matches!(cmd, EndpointConfig::LocalCommand { .. }));
        assert!(serde_json::from_str::<EndpointConfig>(r#"{"transport":"ftp","name":"x"}"#).is_err());
    }

    #[cfg(unix)]
    #[test]
    fn command_editor_round_trips_through_cp() {
        let dir = tempfile::tempdir().unwrap();
        // `sh -c 'cp "$0" "$1"' in out prompt` copies the input to the output path
        let editor = CommandEditor::new("cp", "/bin/sh", vec!["-c".into(), r#"cp "$0" "$1""#.into()], dir.path());
        let req = EditRequest { task_id: "t", sample_index: 1, prompt: "p", image_png: b"png-bytes", mode: EditMode::Image };
        assert_eq!(editor.edit(&req).unwrap().image_png.unwrap(), b"png-bytes");

        let failing = CommandEditor::new("false", "/bin/sh", vec!["-c".into(), "exit 3".into()], dir.path());
        assert!(matches!(failing.edit(&req), Err(EditError::Command(_))));
    }

    #[test]
    fn candidate_dir_prefers_numbered_files() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("t.png"), b"plain").unwrap();
        std::fs::write(dir.path().join("t.2.png"), b"second").unwrap();
        let editor = CandidateDirEditor::new(dir.path());
        let get = |sample_index| {
            editor.edit(&EditRequest { task_id: "t", sample_index, prompt: "", image_png: b"", mode: EditMode::Image })
        };
        assert_eq!(get(1).unwrap().image_png.unwrap(), b"plain");
        assert_eq!(get(2).unwrap().image_png.unwrap(), b"second");
        assert!(matches!(get(3), Err(EditError::Rejected { status: 404, .. })));
    }
}
