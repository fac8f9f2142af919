//! Reward candidates and the Python-subset parser that extracts their
//! components and tunable hyperparameters.

use std::collections::{BTreeMap, BTreeSet};

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Search-space scale of a hyperparameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

/// One named sub-term of a reward function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardComponent {
    pub name: String,
    pub body_text: String,
    pub normalized_text: String,
}

impl RewardComponent {
    pub fn new(name: impl Into<String>, body_text: impl Into<String>) -> Self {
        let body_text = body_text.into();
        let normalized_text = normalize_text(&body_text);
        Self { name: name.into(), body_text, normalized_text }
    }
}

/// A tunable reward-intensity constant found in the candidate code.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperparameterSpec {
    pub name: String,
    pub initial_value: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub scale: Scale,
}

impl HyperparameterSpec {
    pub fn new(name: impl Into<String>, initial_value: f64, lower: f64, upper: f64, scale: Scale) -> Result<Self, BoundsError> {
        let name = name.into();
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(BoundsError::InvalidRange { lower, upper });
        }
        if !(lower..=upper).contains(&initial_value) {
            return Err(BoundsError::OutOfRange { value: initial_value, lower, upper });
        }
        if scale == Scale::Log && lower <= 0.0 {
            return Err(BoundsError::NonPositiveLog { lower });
        }
        Ok(Self { name, initial_value, lower_bound: lower, upper_bound: upper, scale })
    }

    /// Maps a raw value to `[0, 1]` (log-scaled dims are mapped in log space).
    pub fn to_unit(&self, value: f64) -> f64 {
        let u = match self.scale {
            Scale::Linear => (value - self.lower_bound) / (self.upper_bound - self.lower_bound),
            Scale::Log => {
                let (lo, hi) = (self.lower_bound.ln(), self.upper_bound.ln());
                (value.max(f64::MIN_POSITIVE).ln() - lo) / (hi - lo)
            }
        };
        u.clamp(0.0, 1.0)
    }

    pub fn from_unit(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let v = match self.scale {
            Scale::Linear => self.lower_bound + u * (self.upper_bound - self.lower_bound),
            Scale::Log => {
                let (lo, hi) = (self.lower_bound.ln(), self.upper_bound.ln());
                (lo + u * (hi - lo)).exp()
            }
        };
        v.clamp(self.lower_bound, self.upper_bound)
    }
}

/// One language-model-generated reward function candidate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardFunctionSample {
    pub sample_id: usize,
    pub code_text: String,
    pub components: Vec<RewardComponent>,
    pub hyperparameters: Vec<HyperparameterSpec>,
    pub iteration: usize,
}

impl RewardFunctionSample {
    pub fn with_ids(mut self, iteration: usize, sample_id: usize) -> Self {
        self.iteration = iteration;
        self.sample_id = sample_id;
        self
    }

    pub fn initial_theta(&self) -> Vec<f64> {
        self.hyperparameters.iter().map(|h| h.initial_value).collect()
    }

    pub fn to_unit(&self, theta: &[f64]) -> Vec<f64> {
        self.hyperparameters.iter().zip(theta).map(|(h, &v)| h.to_unit(v)).collect()
    }

    pub fn from_unit(&self, unit: &[f64]) -> Vec<f64> {
        self.hyperparameters.iter().zip(unit).map(|(h, &u)| h.from_unit(u)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentStats {
    pub max: f64,
    pub mean: f64,
    pub min: f64,
}

/// Outcome of one evaluation. A record with `fitness == None` is failed and
/// never enters the surrogate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub sample_id: usize,
    pub theta: Vec<f64>,
    pub fitness: Option<f64>,
    #[serde(default)]
    pub component_stats: BTreeMap<String, ComponentStats>,
    pub wall_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl EvaluationRecord {
    pub fn success(sample_id: usize, theta: Vec<f64>, fitness: f64, component_stats: BTreeMap<String, ComponentStats>) -> Self {
        if fitness.is_finite() {
            Self { sample_id, theta, fitness: Some(fitness), component_stats, wall_time: 0.0, error: None }
        } else {
            Self::failed(sample_id, theta, format!("non-finite fitness {fitness}"))
        }
    }

    pub fn failed(sample_id: usize, theta: Vec<f64>, reason: impl Into<String>) -> Self {
        Self {
            sample_id,
            theta,
            fitness: None,
            component_stats: BTreeMap::new(),
            wall_time: 0.0,
            error: Some(reason.into()),
        }
    }

    pub fn is_failed(&self) -> bool {
        self.fitness.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsOverride {
    pub lower: f64,
    pub upper: f64,
    #[serde(default = "default_linear")]
    pub scale: Scale,
}

fn default_linear() -> Scale {
    Scale::Linear
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParseConfig {
    /// Regex matched against assignment targets to identify tunables.
    #[serde(default = "default_pattern")]
    pub hyperparameter_pattern: String,
    /// Explicit bounds by hyperparameter name; required for zero initials.
    #[serde(default)]
    pub bounds: BTreeMap<String, BoundsOverride>,
}

fn default_pattern() -> String {
    "_temp$".to_string()
}

impl Default for ParseConfig {
    fn default() -> Self {
        Self { hyperparameter_pattern: default_pattern(), bounds: BTreeMap::new() }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("no function definition found")]
    NoFunction,
    #[error("function does not return a component dictionary")]
    NoComponentDict,
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("invalid hyperparameter pattern: {0}")]
    InvalidPattern(String),
    #[error("hyperparameter `{name}`: {source}")]
    Bounds { name: String, source: BoundsError },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("initial value is zero; explicit bounds are required")]
    ZeroInitial,
    #[error("initial value {0} is not finite")]
    NonFinite(f64),
    #[error("invalid range [{lower}, {upper}]")]
    InvalidRange { lower: f64, upper: f64 },
    #[error("value {value} outside [{lower}, {upper}]")]
    OutOfRange { value: f64, lower: f64, upper: f64 },
    #[error("log scale needs a positive lower bound, got {lower}")]
    NonPositiveLog { lower: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("no literal assignment for hyperparameter `{0}`")]
pub struct SubstitutionMiss(pub String);

/// One-decade box around the initial value.
pub fn default_bounds(initial_value: f64) -> Result<(f64, f64, Scale), BoundsError> {
    if !initial_value.is_finite() {
        return Err(BoundsError::NonFinite(initial_value));
    }
    if initial_value > 0.0 {
        Ok((initial_value / 10.0, initial_value * 10.0, Scale::Log))
    } else if initial_value < 0.0 {
        Ok((initial_value * 10.0, initial_value / 10.0, Scale::Linear))
    } else {
        Err(BoundsError::ZeroInitial)
    }
}

/// Strips comments and collapses all whitespace runs to a single space.
pub fn normalize_text(text: &str) -> String {
    let lines: Vec<&str> = text.lines().collect();
    let joined = scan_statements(&lines).into_iter().map(|s| s.text).collect::<Vec<_>>().join(" ");
    joined.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Whether `ident` occurs in `text` as a whole identifier.
pub fn mentions_identifier(text: &str, ident: &str) -> bool {
    if ident.is_empty() {
        return false;
    }
    let is_word = |c: char| c.is_ascii_alphanumeric() || c == '_';
    text.match_indices(ident).any(|(i, _)| {
        let before = text[..i].chars().next_back();
        let after = text[i + ident.len()..].chars().next();
        !before.is_some_and(is_word) && !after.is_some_and(is_word)
    })
}

/// Returns the body of the first fenced code block, or `None`.
pub fn extract_code_block(response: &str) -> Option<String> {
    let start = response.find("```")?;
    let after = &response[start + 3..];
    // Skip the info string (e.g. `python`).
    let body_start = after.find('\n')? + 1;
    let body = &after[body_start..];
    let end = body.find("```").unwrap_or(body.len());
    let code = body[..end].trim_end();
    if code.trim().is_empty() {
        None
    } else {
        Some(code.to_string())
    }
}

#[derive(Debug, Clone)]
struct Stmt {
    text: String,
    start_line: usize,
}

/// Splits source lines into logical statements: comments removed, bracketed
/// and backslash continuations joined, string literals kept intact.
fn scan_statements(lines: &[&str]) -> Vec<Stmt> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut start_line = 0usize;
    let mut depth: i32 = 0;
    // (quote char, triple)
    let mut in_str: Option<(char, bool)> = None;

    for (ln, line) in lines.iter().enumerate() {
        if cur.trim().is_empty() && in_str.is_none() && depth == 0 {
            cur.clear();
            start_line = ln;
        }
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        let mut continued = false;
        while i < chars.len() {
            let c = chars[i];
            if let Some((q, triple)) = in_str {
                cur.push(c);
                if c == '\\' && i + 1 < chars.len() {
                    cur.push(chars[i + 1]);
                    i += 2;
                    continue;
                }
                if c == q {
                    if triple {
                        if i + 2 < chars.len() && chars[i + 1] == q && chars[i + 2] == q {
                            cur.push(q);
                            cur.push(q);
                            i += 3;
                            in_str = None;
                            continue;
                        }
                    } else {
                        in_str = None;
                    }
                }
                i += 1;
                continue;
            }
            match c {
                '#' => break,
                '"' | '\'' => {
                    let triple = i + 2 < chars.len() && chars[i + 1] == c && chars[i + 2] == c;
                    if triple {
                        cur.push(c);
                        cur.push(c);
                        cur.push(c);
                        i += 3;
                    } else {
                        cur.push(c);
                        i += 1;
                    }
                    in_str = Some((c, triple));
                    continue;
                }
                '(' | '[' | '{' => depth += 1,
                ')' | ']' | '}' => depth = (depth - 1).max(0),
                '\\' if i + 1 == chars.len() => {
                    continued = true;
                    i += 1;
                    continue;
                }
                _ => {}
            }
            cur.push(c);
            i += 1;
        }
        match in_str {
            Some((_, true)) => {
                cur.push('\n');
                continue;
            }
            // Unterminated single-quoted string: drop the state at end of line.
            Some((_, false)) => in_str = None,
            None => {}
        }
        if depth > 0 || continued {
            cur.push(' ');
            continue;
        }
        let text = cur.trim().to_string();
        if !text.is_empty() {
            out.push(Stmt { text, start_line });
        }
        cur.clear();
    }
    let text = cur.trim().to_string();
    if !text.is_empty() {
        out.push(Stmt { text, start_line });
    }
    out
}

fn indentation(line: &str) -> usize {
    line.chars()
        .take_while(|c| c.is_whitespace())
        .map(|c| if c == '\t' { 4 } else { 1 })
        .sum()
}

/// Splits on commas that are not nested inside brackets or strings.
fn split_top_level(text: &str, sep: char) -> Vec<String> {
    let mut parts = Vec::new();
    let mut cur = String::new();
    let mut depth = 0i32;
    let mut in_str: Option<char> = None;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if let Some(q) = in_str {
            cur.push(c);
            if c == '\\' {
                if let Some(n) = chars.next() {
                    cur.push(n);
                }
            } else if c == q {
                in_str = None;
            }
            continue;
        }
        match c {
            '"' | '\'' => in_str = Some(c),
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            _ if c == sep && depth == 0 => {
                parts.push(cur.trim().to_string());
                cur.clear();
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    if !cur.trim().is_empty() {
        parts.push(cur.trim().to_string());
    }
    parts
}

fn unquote(s: &str) -> String {
    let s = s.trim();
    let b = s.as_bytes();
    if s.len() >= 2 && (b[0] == b'"' || b[0] == b'\'') && b[s.len() - 1] == b[0] {
        s[1..s.len() - 1].to_string()
    } else {
        s.to_string()
    }
}

/// Identifiers referenced by an expression, excluding attribute names and
/// keyword-argument names.
fn referenced_identifiers(expr: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let chars: Vec<char> = expr.chars().collect();
    let mut i = 0;
    let mut in_str: Option<char> = None;
    while i < chars.len() {
        let c = chars[i];
        if let Some(q) = in_str {
            if c == '\\' {
                i += 2;
                continue;
            }
            if c == q {
                in_str = None;
            }
            i += 1;
            continue;
        }
        if c == '"' || c == '\'' {
            in_str = Some(c);
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let prev = chars[..start].iter().rev().find(|c| !c.is_whitespace());
            if prev != Some(&'.') {
                out.insert(chars[start..i].iter().collect());
            }
            continue;
        }
        if c.is_ascii_digit() {
            // Skip numeric literals such as `1e-6` so their exponent is not read as a name.
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '.' || chars[i] == '_') {
                i += 1;
            }
            continue;
        }
        i += 1;
    }
    out
}

fn parse_number(expr: &str) -> Option<f64> {
    let e = expr.trim();
    let e = e.strip_prefix('(').and_then(|s| s.strip_suffix(')')).unwrap_or(e).trim();
    let lit = Regex::new(r"^[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?$").expect("literal regex");
    if lit.is_match(e) {
        e.parse::<f64>().ok()
    } else {
        None
    }
}

struct Assignment {
    index: usize,
    lhs: String,
    augmented: bool,
    rhs: String,
    text: String,
}

/// Parses one reward-function candidate.
pub fn parse_reward_sample(code_text: &str, config: &ParseConfig) -> Result<RewardFunctionSample, ParseError> {
    let hp_pattern = Regex::new(&config.hyperparameter_pattern).map_err(|e| ParseError::InvalidPattern(e.to_string()))?;
    let lines: Vec<&str> = code_text.lines().collect();
    let stmts = scan_statements(&lines);

    let def_pos = stmts
        .iter()
        .position(|s| s.text.starts_with("def ") || s.text.starts_with("async def "))
        .ok_or(ParseError::NoFunction)?;
    let def_indent = indentation(lines[stmts[def_pos].start_line]);
    let body: Vec<&Stmt> = stmts[def_pos + 1..]
        .iter()
        .take_while(|s| indentation(lines[s.start_line]) > def_indent)
        .collect();

    let assign_re = Regex::new(r"^([A-Za-z_][A-Za-z0-9_]*)\s*(?::[^=]*)?([-+*/]?)=([^=].*)$").expect("assign regex");
    let subscript_re =
        Regex::new(r#"^([A-Za-z_][A-Za-z0-9_]*)\s*\[\s*(?:"([^"]*)"|'([^']*)')\s*\]\s*=([^=].*)$"#).expect("subscript regex");

    let mut assignments: Vec<Assignment> = Vec::new();
    let mut subscript_sets: Vec<(usize, String, String, String)> = Vec::new();
    let mut return_stmt: Option<(usize, String)> = None;
    for (index, stmt) in body.iter().enumerate() {
        let text = stmt.text.as_str();
        if let Some(rest) = text.strip_prefix("return ") {
            return_stmt = Some((index, rest.trim().to_string()));
        } else if let Some(c) = subscript_re.captures(text) {
            let key = c.get(2).or_else(|| c.get(3)).map(|m| m.as_str().to_string()).unwrap_or_default();
            subscript_sets.push((index, c[1].to_string(), key, c[4].trim().to_string()));
        } else if let Some(c) = assign_re.captures(text) {
            assignments.push(Assignment {
                index,
                lhs: c[1].to_string(),
                augmented: !c[2].is_empty(),
                rhs: c[3].trim().to_string(),
                text: text.to_string(),
            });
        }
    }

    let (return_index, return_expr) = return_stmt.ok_or(ParseError::NoComponentDict)?;
    let parts = split_top_level(&return_expr, ',');
    let dict_expr = parts.get(1).ok_or(ParseError::NoComponentDict)?.trim().to_string();

    let mut entries: Vec<(String, String)> = Vec::new();
    if dict_expr.starts_with('{') {
        entries = parse_dict_literal(&dict_expr);
    } else if is_identifier(&dict_expr) {
        let def = assignments.iter().rev().find(|a| a.index < return_index && a.lhs == dict_expr && !a.augmented);
        if let Some(def) = def {
            if def.rhs.starts_with('{') {
                entries = parse_dict_literal(&def.rhs);
            } else if let Some(inner) = def.rhs.strip_prefix("dict(").and_then(|s| s.strip_suffix(')')) {
                entries = split_top_level(inner, ',')
                    .into_iter()
                    .filter_map(|kv| kv.split_once('=').map(|(k, v)| (k.trim().to_string(), v.trim().to_string())))
                    .collect();
            }
            for (idx, target, key, value) in &subscript_sets {
                if target == &dict_expr && *idx > def.index && *idx < return_index {
                    entries.push((key.clone(), value.clone()));
                }
            }
        }
    }
    if entries.is_empty() {
        return Err(ParseError::NoComponentDict);
    }

    let mut seen = BTreeSet::new();
    let mut components = Vec::with_capacity(entries.len());
    for (key, value) in entries {
        if key.is_empty() {
            return Err(ParseError::NoComponentDict);
        }
        if !seen.insert(key.clone()) {
            return Err(ParseError::DuplicateName(key));
        }
        let body_text = component_body(&value, &assignments, return_index);
        components.push(RewardComponent::new(key, body_text));
    }

    let mut hyperparameters: Vec<HyperparameterSpec> = Vec::new();
    for a in assignments.iter().filter(|a| !a.augmented && hp_pattern.is_match(&a.lhs)) {
        let Some(value) = parse_number(&a.rhs) else { continue };
        if hyperparameters.iter().any(|h| h.name == a.lhs) {
            return Err(ParseError::DuplicateName(a.lhs.clone()));
        }
        let bounds_err = |source| ParseError::Bounds { name: a.lhs.clone(), source };
        let spec = match config.bounds.get(&a.lhs) {
            Some(o) => HyperparameterSpec::new(&a.lhs, value, o.lower, o.upper, o.scale),
            None => {
                let (lo, hi, scale) = default_bounds(value).map_err(bounds_err)?;
                HyperparameterSpec::new(&a.lhs, value, lo, hi, scale)
            }
        }
        .map_err(bounds_err)?;
        hyperparameters.push(spec);
    }

    Ok(RewardFunctionSample { sample_id: 0, code_text: code_text.to_string(), components, hyperparameters, iteration: 0 })
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_') && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_dict_literal(text: &str) -> Vec<(String, String)> {
    let inner = text.trim().trim_start_matches('{').trim_end_matches('}');
    split_top_level(inner, ',')
        .into_iter()
        .filter_map(|entry| {
            let kv = split_top_level(&entry, ':');
            if kv.len() < 2 {
                return None;
            }
            Some((unquote(&kv[0]), kv[1..].join(":").trim().to_string()))
        })
        .collect()
}

/// Defining expression plus every earlier assignment it transitively reads,
/// collected in one backward pass over straight-line code.
fn component_body(value_expr: &str, assignments: &[Assignment], before: usize) -> String {
    let mut needed = referenced_identifiers(value_expr);
    let mut picked: Vec<&Assignment> = Vec::new();
    for a in assignments.iter().rev().filter(|a| a.index < before) {
        if needed.contains(&a.lhs) {
            picked.push(a);
            if !a.augmented {
                needed.remove(&a.lhs);
            }
            needed.extend(referenced_identifiers(&a.rhs));
        }
    }
    picked.reverse();
    let mut lines: Vec<&str> = picked.iter().map(|a| a.text.as_str()).collect();
    let bare_defined = is_identifier(value_expr) && picked.iter().any(|a| a.lhs == value_expr);
    if !bare_defined {
        lines.push(value_expr);
    }
    lines.join("\n")
}

/// Formats a float as a round-trippable Python float literal.
pub fn format_float_literal(value: f64) -> String {
    let s = format!("{value}");
    if s.contains(['.', 'e', 'E', 'n', 'i']) {
        s
    } else {
        format!("{s}.0")
    }
}

/// Rewrites `name = <literal>` assignments with new values.
pub fn substitute_hyperparameters(code_text: &str, values: &[(&str, f64)]) -> Result<String, SubstitutionMiss> {
    let mut code = code_text.to_string();
    for (name, value) in values {
        let re = Regex::new(&format!(
            r"(?m)^(\s*{}\s*(?::[^=\n]*)?=\s*)\(?[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?\)?",
            regex::escape(name)
        ))
        .expect("substitution regex");
        if !re.is_match(&code) {
            return Err(SubstitutionMiss(name.to_string()));
        }
        let literal = format_float_literal(*value);
        code = re.replacen(&code, 1, |c: &regex::Captures| format!("{}{}", &c[1], literal)).into_owned();
    }
    Ok(code)
}
