//! Deterministic stand-in editors for tests, dry runs and calibration.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::{Arc, Mutex};

use planbench_core::dataset::Dataset;
use planbench_core::ImageBuffer;

use crate::clock::Clock;
use crate::editor::{EditError, EditMode, EditRequest, EditResponse, ImageEditor};

const FIXTURE_REASONING: &str = "<think>fixture reasoning</think>";

fn text_reply() -> EditResponse {
    EditResponse { image_png: None, text: Some(FIXTURE_REASONING.to_string()) }
}

/// Returns the input image untouched.
pub struct EchoEditor;

impl ImageEditor for EchoEditor {
    fn name(&self) -> &str {
        "echo"
    }

    fn edit(&self, request: &EditRequest<'_>) -> Result<EditResponse, EditError> {
        if request.mode == EditMode::Text {
            return Ok(text_reply());
        }
        Ok(EditResponse { image_png: Some(request.image_png.to_vec()), text: None })
    }
}

/// Returns each task's stored ground-truth image.
pub struct GroundTruthEditor {
    paths: HashMap<String, PathBuf>,
}

impl GroundTruthEditor {
    pub fn new(dataset: &Dataset) -> Self {
        let paths = (0..dataset.tasks.len()).map(|i| (dataset.tasks[i].id().to_string(), dataset.ground_truth_path(i))).collect();
        GroundTruthEditor { paths }
    }
}

impl ImageEditor for GroundTruthEditor {
    fn name(&self) -> &str {
        "ground-truth"
    }

    fn edit(&self, request: &EditRequest<'_>) -> Result<EditResponse, EditError> {
        if request.mode == EditMode::Text {
            return Ok(text_reply());
        }
        let path = self
            .paths
            .get(request.task_id)
            .ok_or_else(|| EditError::Rejected { status: 404, message: format!("unknown task {}", request.task_id) })?;
        let png = std::fs::read(path).map_err(|e| EditError::Transport(e.to_string()))?;
        Ok(EditResponse { image_png: Some(png), text: None })
    }
}

/// Returns a plain background-colored canvas.
pub struct BlankEditor {
    png: Vec<u8>,
}

impl BlankEditor {
    pub fn new(resolution: u32, color: [u8; 3]) -> Self {
        let png = ImageBuffer::filled(resolution, resolution, color).to_png().expect("blank canvas encodes");
        BlankEditor { png }
    }
}

impl ImageEditor for BlankEditor {
    fn name(&self) -> &str {
        "blank"
    }

    fn edit(&self, request: &EditRequest<'_>) -> Result<EditResponse, EditError> {
        if request.mode == EditMode::Text {
            return Ok(text_reply());
        }
        Ok(EditResponse { image_png: Some(self.png.clone()), text: None })
    }
}

/// Times out on the first `failures` calls of every (task, sample, mode), then defers to `inner`.
pub struct FlakyEditor<E> {
    inner: E,
    failures: u32,
    seen: Mutex<HashMap<(String, u32, EditMode), u32>>,
    calls: AtomicU32,
}

impl<E: ImageEditor> FlakyEditor<E> {
    pub fn new(inner: E, failures: u32) -> Self {
        FlakyEditor { inner, failures, seen: Mutex::new(HashMap::new()), calls: AtomicU32::new(0) }
    }

    /// Total calls received, failed ones included.
    pub fn calls(&self) -> u32 {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<E: ImageEditor> ImageEditor for FlakyEditor<E> {
    fn name(&self) -> &str {
        "flaky"
    }

    fn edit(&self, request: &EditRequest<'_>) -> Result<EditResponse, EditError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let attempt = {
            let mut seen = self.seen.lock().expect("fixture poisoned");
            let n = seen.entry((request.task_id.to_string(), request.sample_index, request.mode)).or_insert(0);
            *n += 1;
            *n
        };
        if attempt <= self.failures {
            return Err(EditError::Timeout);
        }
        self.inner.edit(request)
    }
}

/// Returns the ground truth on the `success_on`-th image request for each task
/// (1-based) and a blank canvas otherwise.
pub struct ScriptedEditor {
    truth: GroundTruthEditor,
    blank: BlankEditor,
    success_on: u32,
    seen: Mutex<HashMap<String, u32>>,
}

impl ScriptedEditor {
    pub fn new(dataset: &Dataset, success_on: u32) -> Self {
        let style = dataset.style();
        ScriptedEditor {
            truth: GroundTruthEditor::new(dataset),
            blank: BlankEditor::new(style.resolution, style.background),
            success_on,
            seen: Mutex::new(HashMap::new()),
        }
    }
}

impl ImageEditor for ScriptedEditor {
    fn name(&self) -> &str {
        "scripted"
    }

    fn edit(&self, request: &EditRequest<'_>) -> Result<EditResponse, EditError> {
        if request.mode == EditMode::Text {
            return Ok(text_reply());
        }
        let n = {
            let mut seen = self.seen.lock().expect("fixture poisoned");
            let n = seen.entry(request.task_id.to_string()).or_insert(0);
            *n += 1;
            *n
        };
        if n == self.success_on {
            self.truth.edit(request)
        } else {
            self.blank.edit(request)
        }
    }
}

/// Charges a fixed cost per call on `clock` before deferring to `inner`.
pub struct TimedEditor<E> {
    inner: E,
    cost: f64,
    clock: Arc<dyn Clock>,
}

impl<E: ImageEditor> TimedEditor<E> {
    pub fn new(inner: E, cost: f64, clock: Arc<dyn Clock>) -> Self {
        TimedEditor { inner, cost, clock }
    }
}

impl<E: ImageEditor> ImageEditor for TimedEditor<E> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn edit(&self, request: &EditRequest<'_>) -> Result<EditResponse, EditError> {
        self.clock.sleep(self.cost);
        self.inner.edit(request)
    }
}

/// Named fixture, as selectable from the command line.
pub fn by_name(name: &str, dataset: &Dataset) -> Option<Box<dyn ImageEditor>> {
    let style = dataset.style();
    Some(match name {
        "echo" => Box::new(EchoEditor),
        "ground-truth" => Box::new(GroundTruthEditor::new(dataset)),
        "blank" => Box::new(BlankEditor::new(style.resolution, style.background)),
        _ => return None,
    })
}

pub const FIXTURE_NAMES: [&str; 3] = ["echo", "ground-truth", "blank"];

#[cfg(test)]
mod tests {
    use super::*;

    fn req(mode: EditMode) -> EditRequest<'static> {
        EditRequest { task_id: "t", sample_index: 1, prompt: "p", image_png: b"in", mode }
    }

    #[test]
    fn echo_returns_input() {
        assert_eq!(EchoEditor.edit(&req(EditMode::Image)).unwrap().image_png.unwrap(), b"in");
        assert!(EchoEditor.edit(&req(EditMode::Text)).unwrap().text.is_some());
    }

    #[test]
    fn flaky_fails_then_recovers() {
        let f = FlakyEditor::new(EchoEditor, 2);
        assert!(f.edit(&req(EditMode::Image)).is_err());
        assert!(f.edit(&req(EditMode::Image)).is_err());
        assert!(f.edit(&req(EditMode::Image)).is_ok());
        assert_eq!(f.calls(), 3);
    }

    #[test]
    fn timed_editor_charges_the_clock() {
        let clock = Arc::new(crate::clock::ManualClock::new());
        let t = TimedEditor::new(EchoEditor, 7.5, clock.clone());
        t.edit(&req(EditMode::Image)).unwrap();
        t.edit(&req(EditMode::Image)).unwrap();
        assert_eq!(clock.now(), 15.0);
    }
}
