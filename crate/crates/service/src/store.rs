//! Directory-of-JSON storage: `matrices/<id>.json` and `runs/<id>.json`.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use cwb_core::ach::{read_matrix, write_atomic, write_matrix, AchMatrix};

use crate::error::ApiError;
use crate::run::StoredRun;

pub struct Store {
    root: PathBuf,
    locks: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
    create: tokio::sync::Mutex<()>,
}

/// Ids double as file names: ASCII letters, digits, `-`, `_`, `.` and
/// `:`, not starting with a dot.
pub fn check_id(kind: &'static str, id: &str) -> Result<(), ApiError> {
    let ok = !id.is_empty()
        && id.len() <= 128
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.' | ':'));
    if ok {
        Ok(())
    } else {
        Err(ApiError::bad_request("invalid_id", format!("invalid {kind} id {id:?}")))
    }
}

fn json_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|x| x == "json")
                && !p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with('.'))
        })
        .collect();
    out.sort();
    Ok(out)
}

impl Store {
    /// Creates the directory layout and checks that it is writable.
    pub fn open(root: impl Into<PathBuf>) -> std::io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(root.join("matrices"))?;
        fs::create_dir_all(root.join("runs"))?;
        let probe = root.join(".write-probe");
        fs::write(&probe, b"ok")?;
        fs::remove_file(&probe)?;
        Ok(Store { root, locks: Mutex::new(HashMap::new()), create: tokio::sync::Mutex::new(()) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn matrix_path(&self, id: &str) -> PathBuf {
        self.root.join("matrices").join(format!("{id}.json"))
    }

    fn run_path(&self, id: &str) -> PathBuf {
        self.root.join("runs").join(format!("{id}.json"))
    }

    fn lock_for(&self, id: &str) -> Arc<tokio::sync::Mutex<()>> {
        let mut map = self.locks.lock().unwrap_or_else(|p| p.into_inner());
        Arc::clone(map.entry(id.to_string()).or_default())
    }

    pub fn matrix(&self, id: &str) -> Result<AchMatrix, ApiError> {
        check_id("matrix", id)?;
        let path = self.matrix_path(id);
        if !path.exists() {
            return Err(ApiError::not_found("unknown_matrix", format!("no matrix {id:?}")));
        }
        Ok(read_matrix(&path)?)
    }

    pub fn matrices(&self) -> Result<Vec<AchMatrix>, ApiError> {
        json_files(&self.root.join("matrices"))?.iter().map(|p| Ok(read_matrix(p)?)).collect()
    }

    /// Stores a new matrix; `id` of `None` picks the next free `m<N>`.
    pub async fn create_matrix(&self, id: Option<String>, title: String) -> Result<AchMatrix, ApiError> {
        let _guard = self.create.lock().await;
        let id = match id {
            Some(id) => {
                check_id("matrix", &id)?;
                if self.matrix_path(&id).exists() {
                    return Err(ApiError::conflict("duplicate", format!("matrix {id:?} already exists")));
                }
                id
            }
            None => (1..).map(|n| format!("m{n}")).find(|id| !self.matrix_path(id).exists()).expect("unbounded"),
        };
        let m = AchMatrix::new(id.clone(), title);
        write_matrix(&self.matrix_path(&id), &m)?;
        Ok(m)
    }

    /// Applies one mutation under the matrix's writer lock. When `expected`
    /// is given it must equal the stored revision. A successful mutation
    /// advances the revision by exactly one.
    pub async fn update_matrix<T>(
        &self,
        id: &str,
        expected: Option<u64>,
        f: impl FnOnce(&mut AchMatrix) -> Result<T, ApiError>,
    ) -> Result<(AchMatrix, T), ApiError> {
        check_id("matrix", id)?;
        let lock = self.lock_for(id);
        let _guard = lock.lock().await;
        let mut m = self.matrix(id)?;
        let before = m.revision;
        if let Some(exp) = expected {
            if exp != before {
                return Err(ApiError::conflict(
                    "stale_revision",
                    format!("revision {exp} is stale; matrix {id:?} is at {before}"),
                ));
            }
        }
        let out = f(&mut m)?;
        m.revision = before + 1;
        write_matrix(&self.matrix_path(id), &m)?;
        Ok((m, out))
    }

    pub fn run(&self, id: &str) -> Result<StoredRun, ApiError> {
        check_id("run", id)?;
        let path = self.run_path(id);
        if !path.exists() {
            return Err(ApiError::not_found("unknown_run", format!("no run {id:?}")));
        }
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }

    pub fn runs(&self) -> Result<Vec<StoredRun>, ApiError> {
        json_files(&self.root.join("runs"))?.iter().map(|p| Ok(serde_json::from_slice(&fs::read(p)?)?)).collect()
    }

    /// Runs are immutable: writing an existing id is a conflict.
    pub fn put_run(&self, run: &StoredRun) -> Result<(), ApiError> {
        check_id("run", &run.id)?;
        let path = self.run_path(&run.id);
        if path.exists() {
            return Err(ApiError::conflict("duplicate", format!("run {:?} already exists", run.id)));
        }
        write_atomic(&path, &serde_json::to_vec(run)?)?;
        Ok(())
    }
}
