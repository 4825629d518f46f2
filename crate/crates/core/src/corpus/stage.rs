//! Staging of zipped document archives into a local working directory.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, ZipArchive, ZipWriter};

use super::record::DocumentRecord;
use crate::error::{Error, Result};
use crate::hash::fnv1a64;

pub const STAGING_LOG: &str = "staging_log.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Staged,
    Skipped,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageLogEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub archive: Option<String>,
    pub status: StageStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl StageLogEntry {
    fn doc(doc_id: &str, status: StageStatus, reason: Option<String>) -> Self {
        StageLogEntry { doc_id: Some(doc_id.to_owned()), archive: None, status, reason }
    }

    fn archive(path: &Path, reason: String) -> Self {
        StageLogEntry {
            doc_id: None,
            archive: Some(path.display().to_string()),
            status: StageStatus::Error,
            reason: Some(reason),
        }
    }
}

/// Immutable view of a staged corpus, sorted by `doc_id`.
#[derive(Debug, Clone)]
pub struct StagedCorpus {
    dir: PathBuf,
    docs: Vec<Arc<DocumentRecord>>,
    hashes: Vec<u64>,
    log: Vec<StageLogEntry>,
}

impl StagedCorpus {
    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn docs(&self) -> &[Arc<DocumentRecord>] {
        &self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn log(&self) -> &[StageLogEntry] {
        &self.log
    }

    pub fn skipped(&self) -> usize {
        self.log.iter().filter(|e| e.status != StageStatus::Staged).count()
    }

    /// `(doc_id, content hash)` for every staged document.
    pub fn manifest(&self) -> Vec<(String, u64)> {
        self.docs.iter().zip(&self.hashes).map(|(d, &h)| (d.doc_id.clone(), h)).collect()
    }
}

struct ArchiveHarvest {
    members: Vec<(String, Vec<u8>, DocumentRecord)>,
    log: Vec<StageLogEntry>,
}

fn member_doc_id(name: &str) -> Option<String> {
    let base = name.rsplit('/').next()?;
    let stem = base.strip_suffix(".json")?;
    (!stem.is_empty() && stem != "." && stem != "..").then(|| stem.to_owned())
}

fn harvest(path: &Path) -> std::result::Result<ArchiveHarvest, String> {
    let file = File::open(path).map_err(|e| e.to_string())?;
    let mut archive = ZipArchive::new(file).map_err(|e| e.to_string())?;
    let mut out = ArchiveHarvest { members: Vec::new(), log: Vec::new() };
    for i in 0..archive.len() {
        let mut entry = match archive.by_index(i) {
            Ok(e) => e,
            Err(e) => {
                out.log.push(StageLogEntry {
                    doc_id: None,
                    archive: Some(format!("{}#{i}", path.display())),
                    status: StageStatus::Skipped,
                    reason: Some(e.to_string()),
                });
                continue;
            }
        };
        if entry.is_dir() {
            continue;
        }
        let name = entry.name().to_owned();
        let Some(doc_id) = member_doc_id(&name) else {
            out.log.push(StageLogEntry {
                doc_id: None,
                archive: Some(format!("{}#{name}", path.display())),
                status: StageStatus::Skipped,
                reason: Some("not a `<doc_id>.json` member".into()),
            });
            continue;
        };
        let mut bytes = Vec::new();
        if let Err(e) = entry.read_to_end(&mut bytes) {
            out.log.push(StageLogEntry::doc(&doc_id, StageStatus::Skipped, Some(e.to_string())));
            continue;
        }
        match DocumentRecord::from_member_json(&doc_id, &bytes) {
            Ok(record) => out.members.push((doc_id, bytes, record)),
            Err(e) => {
                out.log.push(StageLogEntry::doc(&doc_id, StageStatus::Skipped, Some(e.to_string())))
            }
        }
    }
    Ok(out)
}

/// Decompresses every readable document member into `local_dir/<doc_id>.json`.
///
/// Archives are read concurrently, one thread each. Unreadable archives and
/// corrupted members are logged and skipped; only a stage that yields no
/// documents at all is an error. Restaging the same archives yields the same
/// documents and content hashes.
pub fn stage_archives<P: AsRef<Path>>(archive_paths: &[P], local_dir: &Path) -> Result<StagedCorpus> {
    fs::create_dir_all(local_dir)?;
    let harvests: Vec<(PathBuf, std::result::Result<ArchiveHarvest, String>)> =
        std::thread::scope(|scope| {
            let handles: Vec<_> = archive_paths
                .iter()
                .map(|p| {
                    let p = p.as_ref().to_path_buf();
                    scope.spawn(move || {
                        let h = harvest(&p);
                        (p, h)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("staging thread panicked"))
                .collect()
        });

    let mut log = Vec::new();
    let mut chosen: BTreeMap<String, (Vec<u8>, DocumentRecord)> = BTreeMap::new();
    for (path, harvest) in harvests {
        match harvest {
            Err(reason) => {
                log::warn!("staging: cannot read archive {}: {reason}", path.display());
                log.push(StageLogEntry::archive(&path, reason));
            }
            Ok(h) => {
                log.extend(h.log);
                for (doc_id, bytes, record) in h.members {
                    if chosen.contains_key(&doc_id) {
                        log.push(StageLogEntry::doc(
                            &doc_id,
                            StageStatus::Skipped,
                            Some(format!("duplicate doc_id in {}", path.display())),
                        ));
                        continue;
                    }
                    chosen.insert(doc_id, (bytes, record));
                }
            }
        }
    }
    for entry in log.iter().filter(|e| e.status != StageStatus::Staged) {
        log::warn!(
            "staging: skipped {}: {}",
            entry.doc_id.as_deref().or(entry.archive.as_deref()).unwrap_or("?"),
            entry.reason.as_deref().unwrap_or("")
        );
    }
    if chosen.is_empty() {
        write_log(local_dir, &log)?;
        return Err(Error::NoDocuments(format!(
            "no readable documents in {} archive(s)",
            archive_paths.len()
        )));
    }

    let mut docs = Vec::with_capacity(chosen.len());
    let mut hashes = Vec::with_capacity(chosen.len());
    for (doc_id, (bytes, mut record)) in chosen {
        let target = local_dir.join(format!("{doc_id}.json"));
        fs::write(&target, &bytes)?;
        record.source_path = Some(target);
        log.push(StageLogEntry::doc(&doc_id, StageStatus::Staged, None));
        hashes.push(fnv1a64(&bytes));
        docs.push(Arc::new(record));
    }
    write_log(local_dir, &log)?;
    Ok(StagedCorpus { dir: local_dir.to_path_buf(), docs, hashes, log })
}

fn write_log(dir: &Path, log: &[StageLogEntry]) -> Result<()> {
    let mut w = BufWriter::new(File::create(dir.join(STAGING_LOG))?);
    for entry in log {
        serde_json::to_writer(&mut w, entry)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Packs documents into a deflate-compressed ZIP, one `<doc_id>.json` member each.
pub fn write_archive(path: &Path, docs: &[DocumentRecord]) -> Result<()> {
    let mut zip = ZipWriter::new(File::create(path)?);
    let options = SimpleFileOptions::default().compression_method(CompressionMethod::Deflated);
    for doc in docs {
        zip.start_file(format!("{}.json", doc.doc_id), options)?;
        zip.write_all(&doc.to_member_json()?)?;
    }
    zip.finish()?;
    Ok(())
}

/// Splits `docs` into archives of at most `per_archive` members named
/// `part-00000.zip`, `part-00001.zip`, ... under `dir`.
pub fn write_archives(dir: &Path, docs: &[DocumentRecord], per_archive: usize) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    docs.chunks(per_archive.max(1))
        .enumerate()
        .map(|(i, chunk)| {
            let path = dir.join(format!("part-{i:05}.zip"));
            write_archive(&path, chunk)?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::synth::{synth_corpus, SynthProfile};

    #[test]
    fn member_names() {
        assert_eq!(member_doc_id("a/b/doc-1.json").as_deref(), Some("doc-1"));
        assert_eq!(member_doc_id("doc.txt"), None);
        assert_eq!(member_doc_id(".json"), None);
    }

    #[test]
    fn round_trip_through_archive() {
        let dir = tempfile::tempdir().unwrap();
        let docs = synth_corpus(5, &SynthProfile::compact(), 2).unwrap();
        let zip = dir.path().join("a.zip");
        write_archive(&zip, &docs).unwrap();
        let staged = stage_archives(&[&zip], &dir.path().join("stage")).unwrap();
        assert_eq!(staged.len(), 5);
        for (s, d) in staged.docs().iter().zip(&docs) {
            assert_eq!(s.doc_id, d.doc_id);
            assert_eq!(s.pages, d.pages);
            assert!(s.source_path.as_ref().unwrap().exists());
        }
        let log = fs::read_to_string(dir.path().join("stage").join(STAGING_LOG)).unwrap();
        assert_eq!(log.lines().count(), 5);
    }

    #[test]
    fn missing_archive_is_logged_not_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let docs = synth_corpus(3, &SynthProfile::compact(), 2).unwrap();
        let zip = dir.path().join("a.zip");
        write_archive(&zip, &docs).unwrap();
        let missing = dir.path().join("missing.zip");
        let staged = stage_archives(&[zip, missing], &dir.path().join("s")).unwrap();
        assert_eq!(staged.len(), 3);
        assert_eq!(staged.skipped(), 1);
    }

    #[test]
    fn nothing_readable_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let err = stage_archives(&[dir.path().join("nope.zip")], &dir.path().join("s")).unwrap_err();
        assert!(matches!(err, Error::NoDocuments(_)));
    }
}
