//! The EXECUTE block grammar.
//!
//! ```text
//! block   = { any-line } marker newline { action-line | blank | fence }
//! marker  = "EXECUTE"
//! action-line = robot ":" kind "(" [ arg { "," arg } ] ")"
//! robot   = "robot" digits
//! kind    = "move" | "move_left" | "move_right" | "pick" | "place"
//!         | "leave_target" | "lift" | "do_nothing"
//! arg     = "box_" label | "goal_" label | "cell_" r "_" c
//!         | "corner_" r "_" c | "loc_" i
//! ```
//!
//! Robots left out of the block default to do-nothing unless strict mode is on.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{Action, ActionAssignment, ActionKind, Param, RobotId};

pub const EXECUTE_MARKER: &str = "EXECUTE";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Fill omitted robots `0..n` with do-nothing (or reject them in strict mode).
    pub robot_count: Option<usize>,
    pub strict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseErrorKind {
    MissingMarker,
    MalformedLine,
    UnknownRobot,
    UnknownAction,
    MissingRobots,
}

/// One problem, tied to a 1-based line of the response where possible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineDiagnostic {
    pub line: Option<usize>,
    pub kind: ParseErrorKind,
    pub message: String,
}

impl fmt::Display for LineDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq, Serialize, Deserialize)]
#[error("{}", render(.diagnostics))]
pub struct ParseError {
    pub diagnostics: Vec<LineDiagnostic>,
}

fn render(d: &[LineDiagnostic]) -> String {
    d.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("\n")
}

impl ParseError {
    pub fn kinds(&self) -> Vec<ParseErrorKind> {
        self.diagnostics.iter().map(|d| d.kind).collect()
    }
}

/// Successful parse: the raw action lines and the assignment built from them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedBlock {
    /// In block order, duplicates kept for the verifier.
    pub actions: Vec<Action>,
    pub assignment: ActionAssignment,
}

fn marker_line(line: &str) -> bool {
    line.trim().trim_matches(|c| c == '*' || c == '#' || c == '`').trim() == EXECUTE_MARKER
}

/// Whether the text contains an EXECUTE marker line.
pub fn has_marker(text: &str) -> bool {
    text.lines().any(marker_line)
}

fn line_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^(?:[-*]\s*)?([A-Za-z0-9_]+)\s*:\s*([A-Za-z_][A-Za-z0-9_]*)\s*\((.*)\)\s*[;.]?$").expect("valid regex")
    })
}

pub fn parse_execute_block(text: &str, options: &ParseOptions) -> Result<ParsedBlock, ParseError> {
    let lines: Vec<&str> = text.lines().collect();
    let Some(start) = lines.iter().position(|l| marker_line(l)) else {
        return Err(ParseError {
            diagnostics: vec![LineDiagnostic {
                line: None,
                kind: ParseErrorKind::MissingMarker,
                message: format!("no `{EXECUTE_MARKER}` line found"),
            }],
        });
    };

    let mut diagnostics = Vec::new();
    let mut actions = Vec::new();
    for (offset, raw) in lines[start + 1..].iter().enumerate() {
        let line_no = start + offset + 2;
        let line = raw.trim();
        if line.is_empty() || line.starts_with("```") {
            continue;
        }
        let diag = |kind, message| LineDiagnostic {
            line: Some(line_no),
            kind,
            message,
        };
        let Some(caps) = line_re().captures(line) else {
            diagnostics.push(diag(
                ParseErrorKind::MalformedLine,
                format!("`{line}` is not of the form `robotK: action(args)`"),
            ));
            continue;
        };
        let Some(robot) = RobotId::parse_name(&caps[1]) else {
            diagnostics.push(diag(
                ParseErrorKind::UnknownRobot,
                format!("`{}` is not a robot name (expected robot0, robot1, ...)", &caps[1]),
            ));
            continue;
        };
        let Some(kind) = ActionKind::from_name(&caps[2]) else {
            diagnostics.push(diag(ParseErrorKind::UnknownAction, format!("`{}` is not an action name", &caps[2])));
            continue;
        };
        let args = caps[3].trim();
        let mut params = Vec::new();
        let mut bad = None;
        if !args.is_empty() {
            for arg in args.split(',') {
                match arg.trim().parse::<Param>() {
                    Ok(p) => params.push(p),
                    Err(e) => {
                        bad = Some(e);
                        break;
                    }
                }
            }
        }
        if let Some(e) = bad {
            diagnostics.push(diag(ParseErrorKind::MalformedLine, format!("in `{line}`: {e}")));
            continue;
        }
        actions.push(Action::new(robot, kind, params));
    }

    if diagnostics.is_empty() && actions.is_empty() {
        diagnostics.push(LineDiagnostic {
            line: Some(start + 1),
            kind: ParseErrorKind::MalformedLine,
            message: format!("`{EXECUTE_MARKER}` is not followed by any action lines"),
        });
    }

    let mut assignment: ActionAssignment = actions.iter().cloned().collect();
    if let Some(n) = options.robot_count {
        if options.strict {
            let present: BTreeSet<RobotId> = assignment.robots().collect();
            let missing: Vec<String> = (0..n)
                .map(RobotId)
                .filter(|r| !present.contains(r))
                .map(RobotId::name)
                .collect();
            if !missing.is_empty() {
                diagnostics.push(LineDiagnostic {
                    line: None,
                    kind: ParseErrorKind::MissingRobots,
                    message: format!("no action given for {}", missing.join(", ")),
                });
            }
        } else {
            assignment = assignment.filled(n);
        }
    }

    if diagnostics.is_empty() {
        Ok(ParsedBlock { actions, assignment })
    } else {
        Err(ParseError { diagnostics })
    }
}

/// Renders an assignment as an EXECUTE block, one line per robot in id order.
pub fn format_assignment(assignment: &ActionAssignment) -> String {
    let mut out = String::from(EXECUTE_MARKER);
    for a in assignment.actions() {
        out.push('\n');
        out.push_str(&a.to_string());
    }
    out
}

/// Plan lines without the marker, as used for proposals shown to other agents.
pub fn format_plan_lines(assignment: &ActionAssignment) -> String {
    assignment
        .actions()
        .map(Action::to_string)
        .collect::<Vec<_>>()
        .join("\n")
}

/// Reads an AGREE/DISAGREE verdict. `None` when neither token appears.
pub fn parse_verdict(text: &str) -> Option<bool> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"\b(DISAGREE|AGREE)\b").expect("valid regex"));
    let first = re.captures(text)?;
    Some(&first[1] == "AGREE")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_line_block() {
        let p = parse_execute_block(
            "EXECUTE\nrobot0: move(box_blue, goal_blue)\nrobot1: do_nothing()",
            &ParseOptions::default(),
        )
        .unwrap();
        assert_eq!(p.assignment.len(), 2);
        assert_eq!(
            p.assignment.get(RobotId(0)).unwrap(),
            &Action::new(
                RobotId(0),
                ActionKind::Move,
                vec![Param::Box("blue".into()), Param::Goal("blue".into())]
            )
        );
    }

    #[test]
    fn missing_marker() {
        let e = parse_execute_block("robot0: do_nothing()", &ParseOptions::default()).unwrap_err();
        assert_eq!(e.kinds(), vec![ParseErrorKind::MissingMarker]);
    }

    #[test]
    fn diagnostics_carry_lines() {
        let text = "Plan:\nEXECUTE\nrobot0 moves box\nbot1: do_nothing()\nrobot2: fly()\nrobot3: lift(crate_1)";
        let e = parse_execute_block(text, &ParseOptions::default()).unwrap_err();
        let got: Vec<_> = e.diagnostics.iter().map(|d| (d.line, d.kind)).collect();
        assert_eq!(
            got,
            vec![
                (Some(3), ParseErrorKind::MalformedLine),
                (Some(4), ParseErrorKind::UnknownRobot),
                (Some(5), ParseErrorKind::UnknownAction),
                (Some(6), ParseErrorKind::MalformedLine),
            ]
        );
        assert!(e.to_string().starts_with("line 3:"));
    }

    #[test]
    fn fences_and_omitted_robots() {
        let text = "Sure.\n```\nEXECUTE\nrobot1: move_left()\n```";
        let opts = ParseOptions {
            robot_count: Some(3),
            strict: false,
        };
        let p = parse_execute_block(text, &opts).unwrap();
        assert_eq!(p.assignment.len(), 3);
        assert!(p.assignment.get(RobotId(0)).unwrap().is_do_nothing());
        let strict = ParseOptions { strict: true, ..opts };
        let e = parse_execute_block(text, &strict).unwrap_err();
        assert_eq!(e.kinds(), vec![ParseErrorKind::MissingRobots]);
    }

    #[test]
    fn round_trip() {
        let a: ActionAssignment = vec![
            Action::new(RobotId(2), ActionKind::LeaveTarget, vec![Param::Location(0)]),
            Action::new(RobotId(0), ActionKind::Move, vec![Param::Box("red".into()), Param::Corner(1, 2)]),
            Action::do_nothing(RobotId(1)),
        ]
        .into();
        let p = parse_execute_block(&format_assignment(&a), &ParseOptions::default()).unwrap();
        assert_eq!(p.assignment, a);
    }

    #[test]
    fn verdicts() {
        assert_eq!(parse_verdict("AGREE, looks safe"), Some(true));
        assert_eq!(parse_verdict("I DISAGREE: corner_1_1 is taken"), Some(false));
        assert_eq!(parse_verdict("fine by me"), None);
        assert_eq!(parse_verdict("DISAGREEMENT"), None);
    }
}
