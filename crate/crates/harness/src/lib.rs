//! Model harness: prompts, transports, resumable sampling runs and the study API.

pub mod clock;
pub mod editor;
pub mod fixtures;
pub mod prompt;
pub mod retry;
pub mod run;
pub mod serve;

pub use clock::{Clock, ManualClock, SystemClock};
pub use editor::{EditError, EditMode, EditRequest, EditResponse, EndpointConfig, ImageEditor};
pub use prompt::PromptVariant;
pub use retry::{RateLimiter, RetryPolicy};
pub use run::{budget_run, run_eval, BudgetConfig, BudgetReport, HarnessError, RunConfig, RunOutcome, SampleRunner};
