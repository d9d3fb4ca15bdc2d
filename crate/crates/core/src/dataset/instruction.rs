//! The concise-instruction grammar: ten templates, each with a variant that
//! omits the stop clause.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{DatasetError, RegionTrace};

/// Number of instruction templates.
pub const TEMPLATE_COUNT: usize = 10;

/// Placeholders: `{st}` start type, `{si}` start id, `{gt}` goal type,
/// `{gi}` goal id, `{stop}` stop condition. The second entry of each pair is
/// used when the stop condition is empty.
const TEMPLATES: [(&str, &str); TEMPLATE_COUNT] = [
    (
        "You are in {st} {si}. Go to {gt} {gi} and stop {stop}.",
        "You are in {st} {si}. Go to {gt} {gi}.",
    ),
    (
        "Starting from {st} {si}, walk to {gt} {gi} and stop {stop}.",
        "Starting from {st} {si}, walk to {gt} {gi}.",
    ),
    (
        "Leave {st} {si} and head to {gt} {gi}. Stop {stop}.",
        "Leave {st} {si} and head to {gt} {gi}.",
    ),
    (
        "From {st} {si}, navigate to {gt} {gi}, then stop {stop}.",
        "From {st} {si}, navigate to {gt} {gi}.",
    ),
    (
        "Exit {st} {si} and find {gt} {gi}. Wait {stop}.",
        "Exit {st} {si} and find {gt} {gi}.",
    ),
    (
        "Your goal is {gt} {gi}. You start in {st} {si}. Stop {stop}.",
        "Your goal is {gt} {gi}. You start in {st} {si}.",
    ),
    (
        "Go from {st} {si} to {gt} {gi} and stop {stop}.",
        "Go from {st} {si} to {gt} {gi}.",
    ),
    (
        "Move out of {st} {si} into {gt} {gi} and halt {stop}.",
        "Move out of {st} {si} into {gt} {gi}.",
    ),
    (
        "Begin in {st} {si}. Your destination is {gt} {gi}; stop {stop}.",
        "Begin in {st} {si}. Your destination is {gt} {gi}.",
    ),
    (
        "Travel from {st} {si} until you reach {gt} {gi}, stopping {stop}.",
        "Travel from {st} {si} until you reach {gt} {gi}.",
    ),
];

/// Template text with and without the stop clause.
pub fn template_text(template_id: usize) -> Option<(&'static str, &'static str)> {
    TEMPLATES.get(template_id).copied()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instruction {
    pub template_id: usize,
    pub start_type: String,
    pub start_id: u32,
    pub goal_type: String,
    pub goal_id: u32,
    pub stop_condition: String,
    pub rendered: String,
}

impl Instruction {
    /// True when `rendered` is exactly the template filled with the fields.
    pub fn is_consistent(&self) -> bool {
        render(
            self.template_id,
            &self.start_type,
            self.start_id,
            &self.goal_type,
            self.goal_id,
            &self.stop_condition,
        )
        .is_ok_and(|r| r == self.rendered)
    }
}

fn check_type(field: &str, value: &str) -> Result<(), DatasetError> {
    let trimmed = value.trim();
    if trimmed.is_empty() || trimmed != value {
        return Err(DatasetError::InvalidInstruction(format!(
            "{field} must be non-empty without surrounding spaces"
        )));
    }
    if value.chars().any(|c| c.is_ascii_digit() || c == '.' || c == ',' || c == ';') {
        return Err(DatasetError::InvalidInstruction(format!(
            "{field} `{value}` may not contain digits or punctuation"
        )));
    }
    Ok(())
}

fn render(
    template_id: usize,
    start_type: &str,
    start_id: u32,
    goal_type: &str,
    goal_id: u32,
    stop_condition: &str,
) -> Result<String, DatasetError> {
    let (with_stop, without_stop) =
        template_text(template_id).ok_or(DatasetError::UnknownTemplate(template_id))?;
    check_type("start_type", start_type)?;
    check_type("goal_type", goal_type)?;
    if stop_condition != stop_condition.trim() || stop_condition.ends_with('.') {
        return Err(DatasetError::InvalidInstruction(
            "stop condition may not have surrounding spaces or a trailing period".into(),
        ));
    }
    let template = if stop_condition.is_empty() {
        without_stop
    } else {
        with_stop
    };
    Ok(template
        .replace("{st}", start_type)
        .replace("{si}", &start_id.to_string())
        .replace("{gt}", goal_type)
        .replace("{gi}", &goal_id.to_string())
        .replace("{stop}", stop_condition))
}

/// Fills a template. The start region is the first entry of the trace; an
/// empty stop condition selects the variant without a stop clause.
pub fn gen_instruction(
    trace: &RegionTrace,
    stop_condition: &str,
    template_id: usize,
    goal_id: u32,
    goal_type: &str,
) -> Result<Instruction, DatasetError> {
    let (start_id, start_type) = trace
        .compressed
        .first()
        .cloned()
        .ok_or(DatasetError::EmptyTrace)?;
    instruction_from_fields(template_id, &start_type, start_id, goal_type, goal_id, stop_condition)
}

pub fn instruction_from_fields(
    template_id: usize,
    start_type: &str,
    start_id: u32,
    goal_type: &str,
    goal_id: u32,
    stop_condition: &str,
) -> Result<Instruction, DatasetError> {
    let rendered = render(
        template_id,
        start_type,
        start_id,
        goal_type,
        goal_id,
        stop_condition,
    )?;
    Ok(Instruction {
        template_id,
        start_type: start_type.to_string(),
        start_id,
        goal_type: goal_type.to_string(),
        goal_id,
        stop_condition: stop_condition.to_string(),
        rendered,
    })
}

struct Compiled {
    with_stop: Regex,
    without_stop: Regex,
}

fn to_regex(template: &str) -> Regex {
    let mut pattern = String::from("^");
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        pattern.push_str(&regex::escape(&rest[..open]));
        let close = rest[open..].find('}').expect("closed placeholder") + open;
        pattern.push_str(match &rest[open + 1..close] {
            "st" => r"(?P<st>[^\d.,;]+?)",
            "gt" => r"(?P<gt>[^\d.,;]+?)",
            "si" => r"(?P<si>\d+)",
            "gi" => r"(?P<gi>\d+)",
            "stop" => r"(?P<stop>.+?)",
            other => panic!("unknown placeholder {other}"),
        });
        rest = &rest[close + 1..];
    }
    pattern.push_str(&regex::escape(rest));
    pattern.push('$');
    Regex::new(&pattern).expect("template regex compiles")
}

fn compiled() -> &'static [Compiled] {
    static CELL: OnceLock<Vec<Compiled>> = OnceLock::new();
    CELL.get_or_init(|| {
        TEMPLATES
            .iter()
            .map(|(w, wo)| Compiled {
                with_stop: to_regex(w),
                without_stop: to_regex(wo),
            })
            .collect()
    })
}

fn skeleton(template: &str) -> String {
    let mut out = String::new();
    let mut depth = false;
    for c in template.chars() {
        match c {
            '{' => depth = true,
            '}' => depth = false,
            _ if !depth => out.push(c),
            _ => {}
        }
    }
    out
}

/// Template whose fixed text is closest to `text`, with its similarity.
pub fn nearest_template(text: &str) -> (usize, f64) {
    let text_skeleton: String = text.chars().filter(|c| !c.is_ascii_digit()).collect();
    TEMPLATES
        .iter()
        .enumerate()
        .map(|(i, (w, _))| (i, strsim::normalized_levenshtein(&skeleton(w), &text_skeleton)))
        .fold((0, f64::MIN), |best, cur| if cur.1 > best.1 { cur } else { best })
}

/// Recovers the template id and every field from a rendered instruction.
pub fn parse_instruction(text: &str) -> Result<Instruction, DatasetError> {
    for (template_id, c) in compiled().iter().enumerate() {
        for (re, has_stop) in [(&c.with_stop, true), (&c.without_stop, false)] {
            let Some(caps) = re.captures(text) else {
                continue;
            };
            let id = |name: &str| caps[name].parse::<u32>().ok();
            let (Some(start_id), Some(goal_id)) = (id("si"), id("gi")) else {
                continue;
            };
            let stop = if has_stop { &caps["stop"] } else { "" };
            let parsed = instruction_from_fields(
                template_id,
                &caps["st"],
                start_id,
                &caps["gt"],
                goal_id,
                stop,
            );
            if let Ok(ins) = parsed {
                if ins.rendered == text {
                    return Ok(ins);
                }
            }
        }
    }
    let (nearest, similarity) = nearest_template(text);
    Err(DatasetError::InstructionParse {
        text: text.to_string(),
        nearest,
        nearest_text: TEMPLATES[nearest].0.to_string(),
        similarity,
    })
}
