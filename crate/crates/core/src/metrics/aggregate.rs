use crate::error::{Error, Result};

use super::PAGE_BREAK;

/// Fraction of the document's pages for which any non-whitespace text came back.
pub fn coverage<S: AsRef<str>>(parsed_pages: &[S], total_pages: usize) -> Result<f64> {
    if total_pages == 0 {
        return Err(Error::MalformedDocument("document has zero pages".into()));
    }
    let nonempty = parsed_pages
        .iter()
        .filter(|p| p.as_ref().chars().any(|c| !c.is_whitespace()))
        .count();
    Ok(nonempty.min(total_pages) as f64 / total_pages as f64)
}

/// [`coverage`] on a flattened text whose pages are joined by [`PAGE_BREAK`].
pub fn page_coverage(text: &str, total_pages: usize) -> Result<f64> {
    let pages: Vec<&str> = text.split(PAGE_BREAK).collect();
    coverage(&pages, total_pages)
}

/// Share of tokens that belong to documents whose BLEU reaches `tau`.
pub fn accepted_tokens(per_doc: &[(u64, f64)], tau: f64) -> Result<f64> {
    if per_doc.is_empty() {
        return Err(Error::NoDocuments("accepted tokens over an empty document list".into()));
    }
    let total: u64 = per_doc.iter().map(|&(t, _)| t).sum();
    if total == 0 {
        return Err(Error::InsufficientData("documents carry no tokens".into()));
    }
    let passed: u64 = per_doc.iter().filter(|&&(_, b)| b >= tau).map(|&(t, _)| t).sum();
    Ok(passed as f64 / total as f64)
}
