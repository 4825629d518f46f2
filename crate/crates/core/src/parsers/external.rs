//! Adapter for parsers that run as external commands.
//!
//! The command template is run through `sh -c` after substituting `{input}`
//! (the staged document file) and `{output}` (a file the command must write
//! UTF-8 text to; pages separated by form feeds). Exit code 0 means success.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use wait_timeout::ChildExt;

use super::ParseStatus;
use crate::corpus::DocumentRecord;

static SCRATCH_COUNTER: AtomicU64 = AtomicU64::new(0);

fn scratch_path(stem: &str, ext: &str) -> PathBuf {
    let n = SCRATCH_COUNTER.fetch_add(1, Ordering::Relaxed);
    std::env::temp_dir().join(format!("adaparse-{}-{n}-{stem}.{ext}", std::process::id()))
}

fn shell_quote(path: &Path) -> String {
    format!("'{}'", path.display().to_string().replace('\'', r"'\''"))
}

pub fn render_command(template: &str, input: &Path, output: &Path) -> String {
    template
        .replace("{input}", &shell_quote(input))
        .replace("{output}", &shell_quote(output))
}

pub(crate) struct ExternalOutcome {
    pub status: ParseStatus,
    pub text: String,
    pub wall_seconds: f64,
    pub detail: Option<String>,
}

pub(crate) fn run_external(template: &str, doc: &DocumentRecord, timeout: Duration) -> ExternalOutcome {
    let started = Instant::now();
    let failed = |detail: String| ExternalOutcome {
        status: ParseStatus::Failed,
        text: String::new(),
        wall_seconds: started.elapsed().as_secs_f64(),
        detail: Some(detail),
    };

    let (input, scratch_input) = match &doc.source_path {
        Some(p) => (p.clone(), None),
        None => {
            let p = scratch_path(&doc.doc_id, "json");
            match doc.to_member_json().map(|b| fs::write(&p, b)) {
                Ok(Ok(())) => (p.clone(), Some(p)),
                Ok(Err(e)) => return failed(format!("cannot write input: {e}")),
                Err(e) => return failed(format!("cannot serialize input: {e}")),
            }
        }
    };
    let output = scratch_path(&doc.doc_id, "txt");
    let cleanup = || {
        if let Some(p) = &scratch_input {
            let _ = fs::remove_file(p);
        }
        let _ = fs::remove_file(&output);
    };

    let command = render_command(template, &input, &output);
    let child = Command::new("sh")
        .arg("-c")
        .arg(&command)
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn();
    let mut child = match child {
        Ok(c) => c,
        Err(e) => {
            cleanup();
            return failed(format!("spawn failed: {e}"));
        }
    };
    let outcome = match child.wait_timeout(timeout) {
        Ok(Some(status)) if status.success() => match fs::read(&output) {
            Ok(bytes) => match String::from_utf8(bytes) {
                Ok(text) => ExternalOutcome {
                    status: ParseStatus::Ok,
                    text,
                    wall_seconds: started.elapsed().as_secs_f64(),
                    detail: None,
                },
                Err(_) => failed("output is not valid UTF-8".into()),
            },
            Err(e) => failed(format!("no output file: {e}")),
        },
        Ok(Some(status)) => failed(format!("exited with {status}")),
        Ok(None) => {
            let _ = child.kill();
            let _ = child.wait();
            ExternalOutcome {
                status: ParseStatus::Timeout,
                text: String::new(),
                wall_seconds: started.elapsed().as_secs_f64(),
                detail: Some(format!("timed out after {:.1}s", timeout.as_secs_f64())),
            }
        }
        Err(e) => failed(format!("wait failed: {e}")),
    };
    cleanup();
    outcome
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn placeholders_are_quoted() {
        let cmd = render_command("tool {input} -o {output}", Path::new("/a b/x.json"), Path::new("/o.txt"));
        assert_eq!(cmd, "tool '/a b/x.json' -o '/o.txt'");
        let cmd = render_command("cat {input}", Path::new("/it's.json"), Path::new("/o"));
        assert_eq!(cmd, r"cat '/it'\''s.json'");
    }
}
