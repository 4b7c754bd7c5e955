//! Throughput measurement with a fixed CSV column contract.

use std::time::Instant;

use dynmsf::dynamic_msf::DynamicMsf;
use dynmsf::graph::{Trace, TraceBatch};

use crate::run::RunError;
use crate::workload::insert_then_delete;

/// Column order of [`BenchRow::csv`]. Changing it breaks downstream plots.
pub const CSV_HEADER: &str = "workload,n,batch_size,workers,batches,edges,seconds,edges_per_sec,checksum";

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub workload: String,
    pub n: usize,
    /// Largest batch in the workload.
    pub batch_size: usize,
    pub workers: usize,
    pub batches: usize,
    pub edges: usize,
    pub seconds: f64,
    pub checksum: String,
}

impl BenchRow {
    pub fn edges_per_sec(&self) -> f64 {
        if self.seconds > 0.0 {
            self.edges as f64 / self.seconds
        } else {
            f64::INFINITY
        }
    }

    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:.6},{:.1},{}",
            self.workload,
            self.n,
            self.batch_size,
            self.workers,
            self.batches,
            self.edges,
            self.seconds,
            self.edges_per_sec(),
            self.checksum
        )
    }
}

/// Times the update batches of `trace` (queries are skipped).
pub fn time_trace(name: &str, trace: &Trace, workers: usize) -> Result<BenchRow, RunError> {
    let mut msf = DynamicMsf::<i64>::new(trace.n.max(1));
    if workers > 1 {
        msf.set_workers(workers);
    }
    let mut edges = 0;
    let mut batches = 0;
    let mut batch_size = 0;
    let start = Instant::now();
    for (i, b) in trace.batches.iter().enumerate() {
        if let TraceBatch::Update(b) = b {
            msf.apply(b).map_err(|source| RunError::InvalidBatch { batch: i, source })?;
            edges += b.len();
            batches += 1;
            batch_size = batch_size.max(b.len());
        }
    }
    Ok(BenchRow {
        workload: name.into(),
        n: trace.n,
        batch_size,
        workers,
        batches,
        edges,
        seconds: start.elapsed().as_secs_f64(),
        checksum: msf.checksum(),
    })
}

pub fn bench(name: &str, trace: &Trace, workers: &[usize]) -> Result<Vec<BenchRow>, RunError> {
    workers.iter().map(|&w| time_trace(name, trace, w)).collect()
}

/// Insert-then-delete sweep over batch sizes, keeping the edge total fixed.
pub fn sweep(n: usize, total_edges: usize, sizes: &[usize], workers: &[usize], seed: u64) -> Result<Vec<BenchRow>, RunError> {
    let mut rows = Vec::new();
    for &size in sizes {
        let size = size.max(1);
        let trace = insert_then_delete(n, size, (total_edges / size).max(1), seed);
        rows.extend(bench(&format!("sweep-b{size}"), &trace, workers)?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_share_checksums_across_workers() {
        let trace = insert_then_delete(200, 50, 4, 7);
        let rows = bench("t", &trace, &[1, 2]).unwrap();
        assert_eq!(rows[0].checksum, rows[1].checksum);
        assert_eq!(rows[0].edges, 400);
        assert_eq!(rows[0].csv().split(',').count(), CSV_HEADER.split(',').count());
    }

    #[test]
    fn sweep_labels_sizes() {
        let rows = sweep(100, 40, &[1, 20], &[1], 3).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].workload, "sweep-b1");
        assert_eq!(rows[1].batch_size, 20);
    }
}
