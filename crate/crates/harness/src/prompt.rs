//! The fixed instruction prompts sent to editing models.

use std::fmt;
use std::str::FromStr;

use planbench_core::task::TaskKind;
use serde::{Deserialize, Serialize};

const MAZE: &str = "Add the blue solution path for the maze, connect start point (solid red circle) to end point (red 'X' mark). Ensure all original maze elements (walls, points, etc.) remain unchanged—only add the path.";

const QUEEN: &str = "Generate the solved board by placing one queen (represented by a solid black circle in the center of a grid cell) in each row, column, and colored region while ensuring queens do not touch in 8-neighborhood.";

const COT_SUFFIX: &str = "You should first think about the planning process in the mind. The planning process must be enclosed within <think> and </think> tags.";

const TEXT_STAGE_SUFFIX: &str = "You should first think about the planning process in the mind. The planning process is enclosed within <think> </think> tags. ";

const IMAGE_STAGE_SUFFIX: &str = "According to your thinking process, output the image only.";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptVariant {
    #[default]
    Plain,
    Cot,
    /// Text reasoning first, then an image request carrying that reasoning.
    TwoStage,
}

impl PromptVariant {
    pub const ALL: [PromptVariant; 3] = [PromptVariant::Plain, PromptVariant::Cot, PromptVariant::TwoStage];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptVariant::Plain => "plain",
            PromptVariant::Cot => "cot",
            PromptVariant::TwoStage => "two-stage",
        }
    }
}

impl fmt::Display for PromptVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PromptVariant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| format!("unknown prompt variant {s:?} (expected plain, cot or two-stage)"))
    }
}

pub fn base_instruction(kind: TaskKind) -> &'static str {
    match kind {
        TaskKind::Maze => MAZE,
        TaskKind::Queen => QUEEN,
    }
}

/// Prompt for single-call variants; for [`PromptVariant::TwoStage`] this is the text stage.
pub fn prompt(kind: TaskKind, variant: PromptVariant) -> String {
    let base = base_instruction(kind);
    match variant {
        PromptVariant::Plain => base.to_string(),
        PromptVariant::Cot => format!("{base}\n\n{COT_SUFFIX}"),
        PromptVariant::TwoStage => format!("{base}\n\n{TEXT_STAGE_SUFFIX}"),
    }
}

/// Second-stage prompt with the model's first-stage reasoning in the think slot.
pub fn image_stage_prompt(kind: TaskKind, reasoning: &str) -> String {
    let reasoning = strip_think_tags(reasoning);
    format!("{}\n\n<think>{reasoning}\n</think>\n\n{IMAGE_STAGE_SUFFIX}", base_instruction(kind))
}

/// Drops a surrounding `<think>…</think>` pair if the model already emitted one.
fn strip_think_tags(text: &str) -> &str {
    let t = text.trim();
    let t = t.strip_prefix("<think>").unwrap_or(t);
    t.strip_suffix("</think>").unwrap_or(t).trim()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cot_variants_carry_the_think_instruction() {
        for kind in [TaskKind::Maze, TaskKind::Queen] {
            assert!(!prompt(kind, PromptVariant::Plain).contains("<think>"));
            assert!(prompt(kind, PromptVariant::Cot).contains("<think> and </think>"));
            assert!(prompt(kind, PromptVariant::Cot).starts_with(base_instruction(kind)));
            assert!(prompt(kind, PromptVariant::TwoStage).contains("<think> </think>"));
        }
    }

    #[test]
    fn image_stage_fills_the_slot() {
        let p = image_stage_prompt(TaskKind::Maze, "<think>go left</think>");
        assert!(p.contains("<think>go left\n</think>"));
        assert!(p.ends_with("output the image only."));
    }

    #[test]
    fn variant_names_parse() {
        for v in PromptVariant::ALL {
            assert_eq!(v.as_str().parse::<PromptVariant>().unwrap(), v);
        }
        assert!("fancy".parse::<PromptVariant>().is_err());
    }
}
