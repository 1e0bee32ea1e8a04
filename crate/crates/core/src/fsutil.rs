//! Crate-internal filesystem helpers shared by the artifact writers.

use std::io::Write;
use std::path::{Path, PathBuf};

/// A temp-file path in the same directory as `path` (same filesystem, so the
/// final rename is atomic).
pub(crate) fn temp_sibling(path: &Path) -> PathBuf {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    path.with_file_name(format!(".{name}.tmp"))
}

/// Lands `bytes` at `path` via a temp sibling + rename, so an interrupted
/// write can never leave a half-written artifact in place. Errors are
/// reported by callers against the destination path.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = temp_sibling(path);
    let mut file = std::fs::File::create(&tmp)?;
    file.write_all(bytes)?;
    drop(file);
    std::fs::rename(&tmp, path)
}
