use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use crate::config::RunConfig;

pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

/// Writes through a `.partial` file that is renamed on success and removed
/// on failure, so an aborted run leaves nothing behind.
pub fn write_atomic<F>(path: &Path, body: F) -> anyhow::Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> anyhow::Result<()>,
{
    let tmp = sibling(path, ".partial");
    let result = (|| {
        let mut w = BufWriter::new(File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?);
        body(&mut w)?;
        w.flush()?;
        drop(w);
        fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

#[derive(Serialize)]
struct Metadata<'a, T: Serialize> {
    command: &'a str,
    version: &'a str,
    output: String,
    config: &'a RunConfig,
    summary: T,
}

/// `<out>.meta.json` next to the data file.
pub fn write_metadata<T: Serialize>(out: &Path, command: &str, config: &RunConfig, summary: T) -> anyhow::Result<()> {
    let meta = Metadata {
        command,
        version: env!("CARGO_PKG_VERSION"),
        output: out.display().to_string(),
        config,
        summary,
    };
    write_atomic(&sibling(out, ".meta.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &meta)?;
        writeln!(w)?;
        Ok(())
    })
}
