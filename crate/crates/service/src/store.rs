//! On-disk session snapshots.
//!
//! ```text
//! <dir>/<session>/base.obj
//! <dir>/<session>/base.labels.json
//! <dir>/<session>/target.obj
//! <dir>/<session>/meta.json
//! <dir>/<session>/edits/<edit>.obj
//! ```
//!
//! Restoring rebuilds the factorization but never re-solves: the stored target and edits
//! are reused bit for bit.

use std::fs;
use std::path::{Path, PathBuf};

use forge_core::mesh::{load_labels, load_mesh, save_labels, save_mesh};
use serde::{Deserialize, Serialize};

use crate::error::{ApiError, ApiResult};
use crate::session::{Edit, EditSummary, PrecomputeReport, Session, SessionConfig};

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    config: SessionConfig,
    report: PrecomputeReport,
    edits: Vec<StoredEdit>,
}

#[derive(Debug, Serialize, Deserialize)]
struct StoredEdit {
    #[serde(flatten)]
    summary: EditSummary,
    region: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SnapshotStore {
    root: PathBuf,
}

fn io_err(path: &Path, e: std::io::Error) -> ApiError {
    ApiError::internal(format!("snapshot i/o on {}: {e}", path.display()))
}

impl SnapshotStore {
    pub fn new(root: impl Into<PathBuf>) -> ApiResult<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| io_err(&root, e))?;
        Ok(SnapshotStore { root })
    }

    fn dir(&self, id: &str) -> PathBuf {
        self.root.join(id)
    }

    /// Writes the whole session; called after creation and after each new edit.
    pub fn save(&self, session: &Session) -> ApiResult<()> {
        let dir = self.dir(&session.id);
        let edits_dir = dir.join("edits");
        fs::create_dir_all(&edits_dir).map_err(|e| io_err(&edits_dir, e))?;
        save_mesh(session.base(), dir.join("base.obj"))?;
        save_labels(&session.base().labels, &dir.join("base.labels.json"))?;
        save_mesh(&session.pair.target, dir.join("target.obj"))?;
        let mut edits = Vec::new();
        for summary in session.edit_summaries() {
            let edit = session.edit(&summary.id).expect("listed edit exists");
            save_mesh(&edit.mesh, edits_dir.join(format!("{}.obj", edit.id)))?;
            edits.push(StoredEdit {
                summary,
                region: edit.region.clone(),
            });
        }
        let meta = Meta {
            config: session.config.clone(),
            report: session.report.clone(),
            edits,
        };
        let path = dir.join("meta.json");
        let text = serde_json::to_string_pretty(&meta).map_err(|e| ApiError::internal(e.to_string()))?;
        fs::write(&path, text).map_err(|e| io_err(&path, e))
    }

    pub fn load(&self, id: &str) -> ApiResult<Session> {
        let dir = self.dir(id);
        let path = dir.join("meta.json");
        let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        let meta: Meta = serde_json::from_str(&text).map_err(|e| ApiError::internal(e.to_string()))?;
        let labels = load_labels(&dir.join("base.labels.json"))?;
        let base = load_mesh(dir.join("base.obj"), None)?.with_labels(labels.clone())?;
        let target = load_mesh(dir.join("target.obj"), None)?.with_labels(labels.clone())?;
        let session = Session::restore(id.to_string(), base, target, meta.config, meta.report)?;
        for e in meta.edits {
            let mesh = load_mesh(dir.join("edits").join(format!("{}.obj", e.summary.id)), None)?
                .with_labels(labels.clone())?;
            session.insert_edit(Edit {
                id: e.summary.id,
                regions: e.summary.regions,
                region: e.region,
                gamma: e.summary.gamma,
                mesh,
                residual_norm: e.summary.residual_norm,
            });
        }
        Ok(session)
    }

    /// Ids of all stored sessions.
    pub fn list(&self) -> ApiResult<Vec<String>> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.root).map_err(|e| io_err(&self.root, e))? {
            let entry = entry.map_err(|e| io_err(&self.root, e))?;
            if entry.path().join("meta.json").is_file() {
                ids.push(entry.file_name().to_string_lossy().into_owned());
            }
        }
        ids.sort();
        Ok(ids)
    }
}
