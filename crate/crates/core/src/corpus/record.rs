use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{tokenize, PAGE_BREAK};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentMetadata {
    pub authoring_tool: String,
    pub year: i32,
    pub page_count: usize,
    pub publisher: String,
    pub category: String,
    pub format_version: String,
}

/// One parseable document: its embedded text layer (one string per page),
/// metadata, and optional groundtruth.
///
/// Groundtruth pages are joined by [`PAGE_BREAK`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub doc_id: String,
    pub pages: Vec<String>,
    pub metadata: DocumentMetadata,
    pub groundtruth: Option<String>,
    #[serde(default)]
    pub token_count: u64,
    /// Where the record was staged, if it came from disk.
    #[serde(skip)]
    pub source_path: Option<PathBuf>,
}

/// On-disk member layout: `{pages, metadata, groundtruth}`; the doc id is
/// the member's file stem.
#[derive(Debug, Serialize, Deserialize)]
struct MemberJson {
    pages: Vec<String>,
    metadata: DocumentMetadata,
    groundtruth: Option<String>,
}

impl DocumentRecord {
    pub fn new(
        doc_id: impl Into<String>,
        pages: Vec<String>,
        metadata: DocumentMetadata,
        groundtruth: Option<String>,
    ) -> Result<Self> {
        let token_count = groundtruth.as_deref().map_or(0, |g| tokenize(g).len() as u64);
        let record = DocumentRecord {
            doc_id: doc_id.into(),
            pages,
            metadata,
            groundtruth,
            token_count,
            source_path: None,
        };
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> Result<()> {
        if self.doc_id.is_empty() {
            return Err(Error::MalformedDocument("empty doc_id".into()));
        }
        if self.pages.is_empty() {
            return Err(Error::MalformedDocument(format!("{}: no pages", self.doc_id)));
        }
        if self.metadata.page_count != self.pages.len() {
            return Err(Error::MalformedDocument(format!(
                "{}: metadata says {} pages, record has {}",
                self.doc_id,
                self.metadata.page_count,
                self.pages.len()
            )));
        }
        if !(1900..=2100).contains(&self.metadata.year) {
            return Err(Error::MalformedDocument(format!(
                "{}: year {} out of range",
                self.doc_id, self.metadata.year
            )));
        }
        Ok(())
    }

    pub fn page_count(&self) -> usize {
        self.pages.len()
    }

    /// Groundtruth split into pages, if present.
    pub fn groundtruth_pages(&self) -> Option<Vec<&str>> {
        self.groundtruth.as_deref().map(|g| g.split(PAGE_BREAK).collect())
    }

    /// Embedded text layer flattened into one string.
    pub fn text_layer(&self) -> String {
        join_pages(&self.pages)
    }

    pub fn from_member_json(doc_id: &str, bytes: &[u8]) -> Result<Self> {
        let member: MemberJson = serde_json::from_slice(bytes)
            .map_err(|e| Error::MalformedDocument(format!("{doc_id}: {e}")))?;
        DocumentRecord::new(doc_id, member.pages, member.metadata, member.groundtruth)
    }

    pub fn to_member_json(&self) -> Result<Vec<u8>> {
        let member = MemberJson {
            pages: self.pages.clone(),
            metadata: self.metadata.clone(),
            groundtruth: self.groundtruth.clone(),
        };
        Ok(serde_json::to_vec(&member)?)
    }
}

pub fn join_pages<S: AsRef<str>>(pages: &[S]) -> String {
    let mut out = String::new();
    for (i, p) in pages.iter().enumerate() {
        if i > 0 {
            out.push(PAGE_BREAK);
        }
        out.push_str(p.as_ref());
    }
    out
}
