use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};

pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));

/// A named CSV produced by an experiment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub csv: String,
}

impl Artifact {
    pub fn new(name: impl Into<String>, csv: String) -> Self {
        Self { name: name.into(), csv }
    }
}

/// Renders rows as CSV; floats should already be formatted with `to_string`
/// (shortest round-trip).
pub fn csv_string<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for r in rows {
        w.write_record(r.into_iter().collect::<Vec<_>>())
            .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv is utf-8")
}

/// Writes every artifact to `dir/<name>` plus `dir/<experiment>.json` with the
/// config echo, version and wall-clock duration. Returns the written paths.
pub fn write_outputs<C: Serialize>(
    dir: &Path,
    experiment: &str,
    artifacts: &[Artifact],
    config: &C,
    seed: u64,
    summary: serde_json::Value,
    elapsed: Duration,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for a in artifacts {
        let p = dir.join(&a.name);
        std::fs::write(&p, &a.csv).map_err(|e| Error::io(&p, e))?;
        written.push(p);
    }
    let sidecar = json!({
        "experiment": experiment,
        "version": VERSION,
        "seed": seed,
        "config": config,
        "summary": summary,
        "outputs": artifacts.iter().map(|a| a.name.clone()).collect::<Vec<_>>(),
        "duration_secs": elapsed.as_secs_f64(),
    });
    let p = dir.join(format!("{experiment}.json"));
    let text = serde_json::to_string_pretty(&sidecar)?;
    std::fs::write(&p, text + "\n").map_err(|e| Error::io(&p, e))?;
    written.push(p);
    Ok(written)
}
