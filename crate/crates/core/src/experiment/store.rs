//! Result files: CSV rows plus a JSON sidecar, always written atomically.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{ResultRecord, RunFile};
use crate::Result;

pub const CSV_HEADER: [&str; 13] = [
    "family",
    "d",
    "k",
    "N",
    "p",
    "samples",
    "seed",
    "lhs",
    "stderr",
    "rhs_max",
    "best_partition",
    "ratio",
    "runtime_ms",
];

/// Writes `bytes` to a sibling temp file, syncs it and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp-{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn csv_bytes(records: &[ResultRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.family.name().to_string(),
            r.d.to_string(),
            r.k.to_string(),
            r.n.to_string(),
            r.p.to_string(),
            r.samples.to_string(),
            r.seed.to_string(),
            r.lhs.to_string(),
            r.stderr.to_string(),
            r.rhs_max.to_string(),
            r.best_partition.clone(),
            r.ratio.to_string(),
            r.runtime_ms.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| std::io::Error::other(e.to_string()).into())
}

/// `<dir>/<stem>.json` and, if `with_csv`, `<dir>/<stem>.csv`.
pub fn write_run(dir: &Path, stem: &str, file: &RunFile, with_csv: bool) -> Result<()> {
    if with_csv {
        write_atomic(&dir.join(format!("{stem}.csv")), &csv_bytes(&file.records)?)?;
    }
    write_atomic(&dir.join(format!("{stem}.json")), &serde_json::to_vec_pretty(file)?)
}

pub fn load_run(path: &Path) -> Result<RunFile> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}
