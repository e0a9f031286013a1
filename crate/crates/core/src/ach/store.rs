use std::fs::{self, File};
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use super::{AchError, AchMatrix};

/// Writes `bytes` to a sibling temp file, syncs it, then renames it over
/// `path`, so readers see either the old or the new content.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("data");
    static SEQ: AtomicU64 = AtomicU64::new(0);
    let tmp = dir.join(format!(".{name}.{}.{}.tmp", std::process::id(), SEQ.fetch_add(1, Ordering::Relaxed)));
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    if let Ok(d) = File::open(dir) {
        let _ = d.sync_all();
    }
    Ok(())
}

pub fn write_matrix(path: &Path, m: &AchMatrix) -> Result<(), AchError> {
    let json = serde_json::to_vec_pretty(m)?;
    write_atomic(path, &json)?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<AchMatrix, AchError> {
    let m: AchMatrix = serde_json::from_slice(&fs::read(path)?)?;
    m.validate()?;
    Ok(m)
}
