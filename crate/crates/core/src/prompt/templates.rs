//! Prompt wording, kept in text files with `{{name}}` placeholders.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("template `{0}` is not defined")]
    Unknown(String),
    #[error("template `{template}` uses `{{{{{var}}}}}` but no value was given")]
    MissingVariable { template: String, var: String },
    #[error("reading templates: {0}")]
    Io(#[from] std::io::Error),
}

const BUILTIN: &[(&str, &str)] = &[
    ("task_boxnet1", include_str!("../../templates/task_boxnet1.txt")),
    ("task_boxnet2", include_str!("../../templates/task_boxnet2.txt")),
    ("task_warehouse", include_str!("../../templates/task_warehouse.txt")),
    ("task_boxlift", include_str!("../../templates/task_boxlift.txt")),
    ("persona_central", include_str!("../../templates/persona_central.txt")),
    ("persona_local", include_str!("../../templates/persona_local.txt")),
    ("comm_comment", include_str!("../../templates/comm_comment.txt")),
    ("comm_initial_plan", include_str!("../../templates/comm_initial_plan.txt")),
    ("comm_plan_proposal", include_str!("../../templates/comm_plan_proposal.txt")),
    ("comm_feedback", include_str!("../../templates/comm_feedback.txt")),
    ("history_placeholder", include_str!("../../templates/history_placeholder.txt")),
];

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{\{\s*([A-Za-z_][A-Za-z0-9_]*)\s*\}\}").expect("valid regex"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    texts: BTreeMap<String, String>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::builtin()
    }
}

impl TemplateSet {
    pub fn builtin() -> Self {
        Self {
            texts: BUILTIN
                .iter()
                .map(|(k, v)| (k.to_string(), v.trim_end().to_string()))
                .collect(),
        }
    }

    /// Built-in set with any `<name>.txt` found in `dir` overriding it.
    pub fn with_overrides(dir: &Path) -> Result<Self, TemplateError> {
        let mut set = Self::builtin();
        for (name, _) in BUILTIN {
            let path = dir.join(format!("{name}.txt"));
            if path.exists() {
                set.texts
                    .insert(name.to_string(), std::fs::read_to_string(path)?.trim_end().to_string());
            }
        }
        Ok(set)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.texts.keys().map(String::as_str)
    }

    pub fn raw(&self, name: &str) -> Result<&str, TemplateError> {
        self.texts
            .get(name)
            .map(String::as_str)
            .ok_or_else(|| TemplateError::Unknown(name.to_string()))
    }

    pub fn render(&self, name: &str, vars: &[(&str, String)]) -> Result<String, TemplateError> {
        let text = self.raw(name)?;
        let mut missing = None;
        let out = placeholder_re().replace_all(text, |caps: &regex::Captures<'_>| {
            match vars.iter().find(|(k, _)| *k == &caps[1]) {
                Some((_, v)) => v.clone(),
                None => {
                    missing.get_or_insert_with(|| caps[1].to_string());
                    String::new()
                }
            }
        });
        match missing {
            Some(var) => Err(TemplateError::MissingVariable {
                template: name.to_string(),
                var,
            }),
            None => Ok(out.into_owned()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitutes_and_reports_missing() {
        let set = TemplateSet::builtin();
        let s = set
            .render("persona_local", &[("robot", "robot2".into())])
            .unwrap();
        assert!(s.contains("planner for robot2") && !s.contains("{{"));
        assert!(matches!(
            set.render("persona_local", &[]),
            Err(TemplateError::MissingVariable { .. })
        ));
    }

    #[test]
    fn directory_overrides() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("persona_central.txt"), "Boss {{x}}\n").unwrap();
        let set = TemplateSet::with_overrides(dir.path()).unwrap();
        assert_eq!(set.render("persona_central", &[("x", "1".into())]).unwrap(), "Boss 1");
        assert_eq!(set.raw("comm_feedback").unwrap(), TemplateSet::builtin().raw("comm_feedback").unwrap());
    }
}
