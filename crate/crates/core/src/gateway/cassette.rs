//! JSONL cassettes: one file per trial, one exchange per line.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use super::{Backend, BackendError, BackendReply, ChatExchange, ChatRequest};
use crate::util::canonical_json;

pub fn cassette_path(dir: &Path, trial_id: &str) -> PathBuf {
    dir.join(format!("{trial_id}.jsonl"))
}

/// Appends exchanges for one trial. Creating a writer truncates any earlier
/// recording of the same trial.
#[derive(Debug)]
pub struct CassetteWriter {
    out: BufWriter<File>,
}

impl CassetteWriter {
    pub fn create(dir: &Path, trial_id: &str) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            out: BufWriter::new(File::create(cassette_path(dir, trial_id))?),
        })
    }

    pub fn append(&mut self, exchange: &ChatExchange) -> std::io::Result<()> {
        writeln!(self.out, "{}", canonical_json(exchange))?;
        self.out.flush()
    }
}

pub fn read_cassette(path: &Path) -> std::io::Result<Vec<ChatExchange>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(std::io::Error::other)?);
    }
    Ok(out)
}

/// Serves recorded responses keyed by (trial id, call index).
///
/// Strict mode requires the prompt digest to match the recording; fuzzy mode
/// only requires the same role and purpose.
#[derive(Debug)]
pub struct ReplayBackend {
    dir: PathBuf,
    fuzzy: bool,
    loaded: Mutex<HashMap<String, Arc<Vec<ChatExchange>>>>,
}

impl ReplayBackend {
    pub fn new(dir: impl Into<PathBuf>, fuzzy: bool) -> Self {
        Self {
            dir: dir.into(),
            fuzzy,
            loaded: Mutex::new(HashMap::new()),
        }
    }

    fn trial(&self, trial_id: &str) -> Result<Arc<Vec<ChatExchange>>, BackendError> {
        let mut loaded = self.loaded.lock().expect("replay cache lock");
        if let Some(t) = loaded.get(trial_id) {
            return Ok(t.clone());
        }
        let path = cassette_path(&self.dir, trial_id);
        let exchanges = read_cassette(&path)
            .map_err(|e| BackendError::Fatal(format!("reading {}: {e}", path.display())))?;
        let t = Arc::new(exchanges);
        loaded.insert(trial_id.to_string(), t.clone());
        Ok(t)
    }
}

impl Backend for ReplayBackend {
    fn id(&self) -> &str {
        "cassette"
    }

    fn respond(&self, req: &ChatRequest<'_>) -> Result<BackendReply, BackendError> {
        let trial = self.trial(req.trial_id)?;
        let Some(ex) = trial.iter().find(|e| e.call_index == req.call_index) else {
            return Err(BackendError::ReplayMissing {
                trial_id: req.trial_id.to_string(),
                call_index: req.call_index,
            });
        };
        let diverged = |detail: String| BackendError::ReplayDivergence {
            trial_id: req.trial_id.to_string(),
            call_index: req.call_index,
            detail,
        };
        if self.fuzzy {
            if ex.role != req.role || ex.purpose != req.purpose {
                return Err(diverged(format!(
                    "recorded {} {} but asked {} {}",
                    ex.role,
                    ex.purpose.as_str(),
                    req.role,
                    req.purpose.as_str()
                )));
            }
        } else if ex.prompt_digest != req.digest {
            return Err(diverged(format!(
                "prompt digest {} differs from recorded {}",
                req.digest, ex.prompt_digest
            )));
        }
        Ok(BackendReply {
            text: ex.response.clone(),
            latency_ms: ex.latency_ms,
        })
    }
}
