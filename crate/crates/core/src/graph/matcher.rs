use std::fmt;

use regex::Regex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PatternKind {
    Exact,
    Wildcard,
    Regex,
}

impl PatternKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PatternKind::Exact => "exact",
            PatternKind::Wildcard => "wildcard",
            PatternKind::Regex => "regex",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "exact" => Some(PatternKind::Exact),
            "wildcard" => Some(PatternKind::Wildcard),
            "regex" => Some(PatternKind::Regex),
            _ => None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("invalid {kind} pattern {pattern:?}: {source}")]
pub struct PatternError {
    pub kind: &'static str,
    pub pattern: String,
    #[source]
    pub source: regex::Error,
}

/// Input matcher. Wildcard and regex patterns must match the whole input.
#[derive(Clone)]
pub struct MatchPattern {
    kind: PatternKind,
    pattern: String,
    compiled: Option<Regex>,
}

impl MatchPattern {
    pub fn exact(pattern: impl Into<String>) -> Self {
        MatchPattern {
            kind: PatternKind::Exact,
            pattern: pattern.into(),
            compiled: None,
        }
    }

    /// `*` matches any run of characters, `?` exactly one.
    pub fn wildcard(pattern: impl Into<String>) -> Self {
        let pattern = pattern.into();
        let compiled =
            Regex::new(&wildcard_to_regex(&pattern)).expect("escaped wildcard is a valid regex");
        MatchPattern {
            kind: PatternKind::Wildcard,
            pattern,
            compiled: Some(compiled),
        }
    }

    pub fn regex(pattern: impl Into<String>) -> Result<Self, PatternError> {
        let pattern = pattern.into();
        let compiled = Regex::new(&format!("^(?:{pattern})$")).map_err(|source| PatternError {
            kind: "regex",
            pattern: pattern.clone(),
            source,
        })?;
        Ok(MatchPattern {
            kind: PatternKind::Regex,
            pattern,
            compiled: Some(compiled),
        })
    }

    pub fn new(kind: PatternKind, pattern: impl Into<String>) -> Result<Self, PatternError> {
        match kind {
            PatternKind::Exact => Ok(Self::exact(pattern)),
            PatternKind::Wildcard => Ok(Self::wildcard(pattern)),
            PatternKind::Regex => Self::regex(pattern),
        }
    }

    pub fn kind(&self) -> PatternKind {
        self.kind
    }

    pub fn pattern(&self) -> &str {
        &self.pattern
    }

    pub fn matches(&self, input: &str) -> bool {
        match &self.compiled {
            None => self.pattern == input,
            Some(re) => re.is_match(input),
        }
    }
}

fn wildcard_to_regex(pattern: &str) -> String {
    let mut out = String::with_capacity(pattern.len() + 8);
    out.push_str("^(?s:");
    let mut buf = [0u8; 4];
    for c in pattern.chars() {
        match c {
            '*' => out.push_str(".*"),
            '?' => out.push('.'),
            _ => out.push_str(&regex::escape(c.encode_utf8(&mut buf))),
        }
    }
    out.push_str(")$");
    out
}

impl PartialEq for MatchPattern {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.pattern == other.pattern
    }
}

impl fmt::Debug for MatchPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({:?})", self.kind.as_str(), self.pattern)
    }
}

/// Selection/action/input triple a learner step must match.
#[derive(Debug, Clone, PartialEq)]
pub struct StepMatcher {
    pub selection: String,
    pub action: String,
    pub input: MatchPattern,
}

impl StepMatcher {
    pub fn new(
        selection: impl Into<String>,
        action: impl Into<String>,
        input: MatchPattern,
    ) -> Self {
        StepMatcher {
            selection: selection.into(),
            action: action.into(),
            input,
        }
    }

    pub fn accepts(&self, selection: &str, action: &str, input: &str) -> bool {
        self.selection == selection && self.action == action && self.input.matches(input)
    }
}
