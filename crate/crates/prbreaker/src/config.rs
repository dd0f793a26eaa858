//! Versioned run configuration: the path pattern table and the agent and
//! language vocabularies.
//!
//! The defaults below are what every export's schema hash is computed over;
//! overriding any of them through `--config` changes the hash, so models and
//! feature matrices produced under different tables can never be mixed up
//! silently.
//!
//! File format is TOML. Key reference (all keys optional, defaults apply):
//!
//! ```toml
//! version = 1
//!
//! [agents]
//! generative = ["codex", "claude", "devin", "copilot"]
//! deterministic = ["dependabot", "renovate", "greenkeeper",
//!                  "github-actions", "pre-commit-ci", "snyk"]
//!
//! # Ordered one-hot vocabulary; anything else becomes lang_other.
//! languages = ["python", "typescript", "javascript", "go", "rust",
//!              "java", "cpp", "csharp", "ruby", "php"]
//!
//! # Per-category path matchers, all case-insensitive on the full
//! # repo-relative path:
//! #   segments      whole path segment equals the value
//! #   path_contains raw substring of the path
//! #   filenames     final segment equals the value
//! #   file_prefixes final segment starts with the value
//! #   file_suffixes file stem (name minus last extension) ends with it
//! #   file_contains final segment contains the value
//! #   file_globs    single-star glob on the final segment
//! #   extensions    final extension equals the value
//! [patterns.tests]
//! segments = ["test", "tests", "__tests__"]
//! file_prefixes = ["test_"]
//! file_suffixes = ["_test"]
//! file_contains = [".spec."]
//! ```
//!
//! Composition rules applied on top of the table (fixed in code):
//! `touches_config` excludes paths that match the ci category, and
//! `touches_deps` additionally fires for every lockfile match.

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config file {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: toml::de::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Matchers for one path category. Empty fields never match.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CategoryPatterns {
    pub segments: Vec<String>,
    pub path_contains: Vec<String>,
    pub filenames: Vec<String>,
    pub file_prefixes: Vec<String>,
    pub file_suffixes: Vec<String>,
    pub file_contains: Vec<String>,
    pub file_globs: Vec<String>,
    pub extensions: Vec<String>,
}

impl CategoryPatterns {
    /// True when `path` (already lowercased) hits any matcher.
    pub fn matches(&self, path: &str) -> bool {
        let filename = path.rsplit('/').next().unwrap_or(path);
        let (stem, extension) = match filename.rfind('.') {
            Some(i) if i > 0 => (&filename[..i], &filename[i + 1..]),
            _ => (filename, ""),
        };
        if self.path_contains.iter().any(|p| path.contains(p.as_str())) {
            return true;
        }
        if !self.segments.is_empty()
            && path
                .split('/')
                .any(|s| self.segments.iter().any(|m| m == s))
        {
            return true;
        }
        if self.filenames.iter().any(|m| m == filename) {
            return true;
        }
        if self
            .file_prefixes
            .iter()
            .any(|m| filename.starts_with(m.as_str()))
        {
            return true;
        }
        if self
            .file_suffixes
            .iter()
            .any(|m| stem.ends_with(m.as_str()))
        {
            return true;
        }
        if self
            .file_contains
            .iter()
            .any(|m| filename.contains(m.as_str()))
        {
            return true;
        }
        if !extension.is_empty() && self.extensions.iter().any(|m| m == extension) {
            return true;
        }
        self.file_globs.iter().any(|g| glob_match(g, filename))
    }
}

/// Single-`*` glob on a filename: `requirements*.txt`.
fn glob_match(glob: &str, name: &str) -> bool {
    match glob.find('*') {
        None => glob == name,
        Some(i) => {
            let (prefix, suffix) = (&glob[..i], &glob[i + 1..]);
            name.len() >= prefix.len() + suffix.len()
                && name.starts_with(prefix)
                && name.ends_with(suffix)
        }
    }
}

/// The six file-type categories of the feature schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathPatternTable {
    pub tests: CategoryPatterns,
    pub ci: CategoryPatterns,
    pub config: CategoryPatterns,
    pub deps: CategoryPatterns,
    pub docs: CategoryPatterns,
    pub lockfile: CategoryPatterns,
}

impl Default for PathPatternTable {
    fn default() -> Self {
        let list = |items: &[&str]| items.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        PathPatternTable {
            tests: CategoryPatterns {
                segments: list(&["test", "tests", "__tests__"]),
                file_prefixes: list(&["test_"]),
                file_suffixes: list(&["_test"]),
                file_contains: list(&[".spec."]),
                ..Default::default()
            },
            ci: CategoryPatterns {
                path_contains: list(&[
                    ".github/workflows/",
                    ".gitlab-ci",
                    "jenkinsfile",
                    ".circleci/",
                    "azure-pipelines",
                ]),
                ..Default::default()
            },
            config: CategoryPatterns {
                extensions: list(&["yml", "yaml", "toml", "ini", "cfg", "conf", "properties"]),
                filenames: list(&["dockerfile", "makefile"]),
                ..Default::default()
            },
            deps: CategoryPatterns {
                filenames: list(&[
                    "package.json",
                    "pyproject.toml",
                    "go.mod",
                    "cargo.toml",
                    "pom.xml",
                    "build.gradle",
                ]),
                file_globs: list(&["requirements*.txt"]),
                ..Default::default()
            },
            docs: CategoryPatterns {
                segments: list(&["docs"]),
                extensions: list(&["md", "rst", "adoc", "txt"]),
                ..Default::default()
            },
            lockfile: CategoryPatterns {
                filenames: list(&[
                    "package-lock.json",
                    "yarn.lock",
                    "pnpm-lock.yaml",
                    "cargo.lock",
                    "poetry.lock",
                    "go.sum",
                    "gemfile.lock",
                ]),
                ..Default::default()
            },
        }
    }
}

/// Name patterns feeding author classification: generative agents versus the
/// deterministic-bot denylist.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentPatterns {
    pub generative: Vec<String>,
    pub deterministic: Vec<String>,
}

impl Default for AgentPatterns {
    fn default() -> Self {
        AgentPatterns {
            generative: ["codex", "claude", "devin", "copilot"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            deterministic: [
                "dependabot",
                "renovate",
                "greenkeeper",
                "github-actions",
                "pre-commit-ci",
                "snyk",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        }
    }
}

/// The whole overridable configuration surface.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToolConfig {
    pub version: u32,
    pub agents: AgentPatterns,
    /// Ordered language one-hot vocabulary; everything else maps to
    /// `lang_other`.
    pub languages: Vec<String>,
    pub patterns: PathPatternTable,
}

impl Default for ToolConfig {
    fn default() -> Self {
        ToolConfig {
            version: CONFIG_VERSION,
            agents: AgentPatterns::default(),
            languages: [
                "python",
                "typescript",
                "javascript",
                "go",
                "rust",
                "java",
                "cpp",
                "csharp",
                "ruby",
                "php",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            patterns: PathPatternTable::default(),
        }
    }
}

impl ToolConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let config: ToolConfig = toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.display().to_string(),
            source: e,
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.languages.is_empty() {
            return Err(ConfigError::Invalid("languages vocabulary is empty".into()));
        }
        if self.agents.generative.is_empty() {
            return Err(ConfigError::Invalid(
                "generative agent pattern list is empty".into(),
            ));
        }
        for pattern in &self.agents.generative {
            if self
                .agents
                .deterministic
                .iter()
                .any(|d| d.eq_ignore_ascii_case(pattern))
            {
                return Err(ConfigError::Invalid(format!(
                    "pattern {pattern:?} appears in both agent lists"
                )));
            }
        }
        Ok(())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
