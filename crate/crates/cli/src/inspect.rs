use std::path::Path;

use crate::error::{CliError, Result};
use crate::run::{dump_path, DumpRow};

/// Epochs with a pseudo pool dump in `dir`, ascending.
pub fn dumped_epochs(dir: &Path) -> Result<Vec<usize>> {
    let entries = std::fs::read_dir(dir).map_err(CliError::io(dir))?;
    let mut epochs: Vec<usize> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().into_string().ok()?;
            name.strip_prefix("pseudo_epoch_")?.strip_suffix(".csv")?.parse().ok()
        })
        .collect();
    epochs.sort_unstable();
    Ok(epochs)
}

/// The pseudo pool of one dumped epoch.
pub fn cmd_pseudo_inspect(dir: &Path, epoch: usize) -> Result<Vec<DumpRow>> {
    let path = dump_path(dir, epoch);
    if !path.exists() {
        return Err(CliError::EpochNotDumped {
            epoch,
            available: dumped_epochs(dir)?,
        });
    }
    let mut r = csv::Reader::from_path(&path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<DumpRow>, _>>()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// `sample_id,y_hat,p,admitted`.
pub fn write_inspect_csv<W: std::io::Write>(rows: &[DumpRow], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    let err = |e: csv::Error| CliError::Data(e.to_string());
    w.write_record(["sample_id", "y_hat", "p", "admitted"]).map_err(err)?;
    for r in rows {
        w.write_record([
            r.sample_id.to_string(),
            r.y_hat.to_string(),
            r.p.to_string(),
            r.admitted.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| CliError::Data(e.to_string()))
}
