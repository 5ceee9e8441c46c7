//! Runs a list of cells, each into its own subdirectory, and joins their
//! summaries into `combined.csv`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gossip_sim_core::run_scenario;
use gossip_sim_core::scenario::SweepCell;
use rayon::prelude::*;

use crate::output::{write_run, SummaryFile};

#[derive(Debug)]
pub struct CellOutcome {
    pub name: String,
    pub dir: PathBuf,
    pub result: Result<SummaryFile, String>,
}

pub fn run_sweep(cells: &[SweepCell], out: &Path, jobs: usize) -> Result<Vec<CellOutcome>> {
    if cells.is_empty() {
        bail!("sweep has no cells");
    }
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .context("building thread pool")?;
    let outcomes: Vec<CellOutcome> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let dir = out.join(&cell.name);
                let result = run_scenario(&cell.config)
                    .map_err(|e| e.to_string())
                    .and_then(|o| write_run(&dir, &cell.config, &o, false).map_err(|e| e.to_string()));
                if let Err(e) = &result {
                    let _ = fs::create_dir_all(&dir);
                    let _ = fs::write(dir.join("error.txt"), format!("{e}\n"));
                }
                CellOutcome {
                    name: cell.name.clone(),
                    dir,
                    result,
                }
            })
            .collect()
    });
    write_combined(&out.join("combined.csv"), cells, &outcomes)?;
    Ok(outcomes)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn write_combined(path: &Path, cells: &[SweepCell], outcomes: &[CellOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let axes: Vec<&str> = cells[0].axes.iter().map(|(k, _)| *k).collect();
    let mut header = vec!["cell"];
    header.extend(&axes);
    header.extend([
        "status",
        "seed",
        "mean_l15_ms",
        "mean_l85_ms",
        "mean_l100_ms",
        "delta_l_ms",
        "median_l100_ms",
        "b_n",
        "iwant_requests",
        "duplicates",
        "canceled",
    ]);
    w.write_record(&header)?;
    for (cell, o) in cells.iter().zip(outcomes) {
        let mut rec: Vec<String> = vec![cell.name.clone()];
        rec.extend(cell.axes.iter().map(|(_, v)| v.clone()));
        match &o.result {
            Ok(s) => {
                let m = &s.metrics;
                rec.push(if s.complete { "complete" } else { "incomplete" }.into());
                rec.push(s.seed.to_string());
                rec.extend([
                    opt(m.mean_l15_ms),
                    opt(m.mean_l85_ms),
                    opt(m.mean_l100_ms),
                    opt(m.delta_l_ms),
                    opt(m.median_l100_ms),
                    m.b_n.to_string(),
                    m.iwant_requests.to_string(),
                    m.duplicates.to_string(),
                    m.canceled.to_string(),
                ]);
            }
            Err(_) => {
                rec.push("error".into());
                rec.push(cell.config.seed.to_string());
                rec.extend(std::iter::repeat_n(String::new(), 9));
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
