//! Experiment report rows and atomic file output.

use std::path::Path;

use crate::error::Result;

/// One run in the fixed CSV column order.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub run_id: String,
    pub task: String,
    pub encoder: String,
    pub parallel_layers: usize,
    pub num_frequencies: usize,
    pub cheb_order: usize,
    pub width: usize,
    pub params: usize,
    pub iterations: usize,
    pub seed: u64,
    pub final_metric: f64,
    pub seconds: f64,
}

pub const REPORT_HEADER: &str =
    "run_id,task,encoder,N,M,J,D_h,params,iters,seed,final_psnr_or_iou,seconds";

impl ReportRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{:.6},{:.3}",
            self.run_id,
            self.task,
            self.encoder,
            self.parallel_layers,
            self.num_frequencies,
            self.cheb_order,
            self.width,
            self.params,
            self.iterations,
            self.seed,
            self.final_metric,
            self.seconds
        )
    }
}

/// UTF-8, LF line endings, header row first.
pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv_line());
        out.push('\n');
    }
    out
}

pub fn write_report_csv(path: impl AsRef<Path>, rows: &[ReportRow]) -> Result<()> {
    write_atomic(path, report_csv(rows).as_bytes())
}

/// Write-temp-then-rename so readers never observe partial files.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}
