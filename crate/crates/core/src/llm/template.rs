//! Prompt templates with `{placeholder}` substitution.
//!
//! The built-in templates ship with the crate as editable assets; a template
//! directory can override any of them by name. Rendering is strict in both
//! directions: unbound placeholders and unused variables are errors, so
//! call sites and templates cannot drift apart silently.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use once_cell::sync::Lazy;
use regex::Regex;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TemplateError {
    #[error("unknown template {0:?}")]
    UnknownTemplate(String),
    #[error("template {template:?} has unbound placeholder {placeholder:?}")]
    UnboundPlaceholder { template: String, placeholder: String },
    #[error("template {template:?} does not use variable {variable:?}")]
    UnusedVariable { template: String, variable: String },
}

static PLACEHOLDER: Lazy<Regex> = Lazy::new(|| Regex::new(r"\{([a-z][a-z0-9_]*)\}").unwrap());

/// Marker splitting the system section from the user section in two-part
/// templates.
pub const USER_SECTION_MARKER: &str = "===USER===";

const BUILTIN: &[(&str, &str)] = &[
    (
        "instruction_extract",
        include_str!("../../templates/instruction_extract.txt"),
    ),
    (
        "instruction_extract_retry",
        include_str!("../../templates/instruction_extract_retry.txt"),
    ),
    ("step_rewrite", include_str!("../../templates/step_rewrite.txt")),
    (
        "cluster_adjacency",
        include_str!("../../templates/cluster_adjacency.txt"),
    ),
    (
        "dialogue_generate",
        include_str!("../../templates/dialogue_generate.txt"),
    ),
    (
        "dialogue_regenerate",
        include_str!("../../templates/dialogue_regenerate.txt"),
    ),
    ("eval_hint", include_str!("../../templates/eval_hint.txt")),
    (
        "eval_hint_steps",
        include_str!("../../templates/eval_hint_steps.txt"),
    ),
    ("judge", include_str!("../../templates/judge.txt")),
    ("judge_retry", include_str!("../../templates/judge_retry.txt")),
];

#[derive(Debug, Clone)]
pub struct TemplateStore {
    templates: BTreeMap<String, String>,
}

impl TemplateStore {
    pub fn builtin() -> Self {
        TemplateStore {
            templates: BUILTIN
                .iter()
                .map(|(name, text)| (name.to_string(), text.to_string()))
                .collect(),
        }
    }

    /// Built-ins plus every `<name>.txt` in `dir`, which replaces the
    /// built-in of the same name.
    pub fn with_overrides(dir: &Path) -> std::io::Result<Self> {
        let mut store = Self::builtin();
        for entry in std::fs::read_dir(dir)? {
            let entry = entry?;
            let path = entry.path();
            if path.extension().and_then(|e| e.to_str()) == Some("txt") {
                if let Some(name) = path.file_stem().and_then(|s| s.to_str()) {
                    store
                        .templates
                        .insert(name.to_string(), std::fs::read_to_string(&path)?);
                }
            }
        }
        Ok(store)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }

    /// Substitutes every `{placeholder}` in the named template. Every
    /// placeholder must be bound and every variable must be used.
    pub fn render(
        &self,
        name: &str,
        variables: &BTreeMap<String, String>,
    ) -> Result<String, TemplateError> {
        let template = self
            .templates
            .get(name)
            .ok_or_else(|| TemplateError::UnknownTemplate(name.to_string()))?;

        let mut used: BTreeSet<&str> = BTreeSet::new();
        let mut out = String::with_capacity(template.len());
        let mut last = 0;
        for caps in PLACEHOLDER.captures_iter(template) {
            let whole = caps.get(0).unwrap();
            let key = caps.get(1).unwrap().as_str();
            let value = variables
                .get(key)
                .ok_or_else(|| TemplateError::UnboundPlaceholder {
                    template: name.to_string(),
                    placeholder: key.to_string(),
                })?;
            out.push_str(&template[last..whole.start()]);
            out.push_str(value);
            used.insert(variables.get_key_value(key).unwrap().0);
            last = whole.end();
        }
        out.push_str(&template[last..]);

        for variable in variables.keys() {
            if !used.contains(variable.as_str()) {
                return Err(TemplateError::UnusedVariable {
                    template: name.to_string(),
                    variable: variable.clone(),
                });
            }
        }
        Ok(out)
    }

    /// Renders a two-part template into `(system_text, user_text)`.
    /// Templates without a user marker render as system text with an empty
    /// user side.
    pub fn render_prompt(
        &self,
        name: &str,
        variables: &BTreeMap<String, String>,
    ) -> Result<(String, String), TemplateError> {
        let rendered = self.render(name, variables)?;
        match rendered.split_once(USER_SECTION_MARKER) {
            Some((system, user)) => Ok((
                system.trim_end().to_string(),
                user.trim_start().to_string(),
            )),
            None => Ok((rendered.trim_end().to_string(), String::new())),
        }
    }
}

/// Convenience for building variable maps.
pub fn vars<const N: usize>(pairs: [(&str, &str); N]) -> BTreeMap<String, String> {
    pairs
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}
