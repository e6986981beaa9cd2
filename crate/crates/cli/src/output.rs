//! Artifacts are rendered in memory and written with temp file + rename so a
//! failed run leaves no partial files behind.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub const GIT_DESCRIBE: &str = env!("FERMI_LAB_GIT_DESCRIBE");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub file_name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BuildInfo {
    pub version: &'static str,
    pub git_describe: &'static str,
}

pub fn build_info() -> BuildInfo {
    BuildInfo {
        version: VERSION,
        git_describe: GIT_DESCRIBE,
    }
}

/// Writes every artifact into `dir`. All temp files are written before the
/// first rename; on error the temp files are removed.
pub fn write_atomic(dir: &Path, artifacts: &[Artifact]) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let pid = std::process::id();
    let mut staged = Vec::with_capacity(artifacts.len());
    let result = (|| {
        for a in artifacts {
            let tmp = dir.join(format!(".{}.tmp-{pid}", a.file_name));
            staged.push(tmp.clone());
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&a.bytes)?;
            f.sync_all()?;
        }
        Ok(())
    })();
    if let Err(e) = result {
        for tmp in &staged {
            let _ = fs::remove_file(tmp);
        }
        return Err(e);
    }
    let mut finals = Vec::with_capacity(artifacts.len());
    for (tmp, a) in staged.iter().zip(artifacts) {
        let path = dir.join(&a.file_name);
        fs::rename(tmp, &path)?;
        finals.push(path);
    }
    Ok(finals)
}
