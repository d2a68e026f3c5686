//! Per-iteration run records and their CSV serialization.

use super::Algorithm;
use serde::Serialize;
use std::io::{self, Write};

/// Fixed CSV column contract for trace files.
pub const TRACE_CSV_HEADER: &str =
    "k,r,grad_norm_sq,est_norm_sq,err_norm_sq,max_staleness,U,W,V,sampled_index";

/// One recorded iteration. All quantities are measured at `x_k` before the
/// update: `r = f(x_k) − f(x*)`, the window sums `U`/`W` cover the estimator
/// norms of iterations `k−τ..k−1`, and `V = r + L·α²·W`. `sampled_index` is
/// `-1` for GD, which draws no index.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TraceRow {
    pub k: usize,
    pub r: f64,
    pub grad_norm_sq: f64,
    pub est_norm_sq: f64,
    pub err_norm_sq: f64,
    pub max_staleness: usize,
    pub u: f64,
    pub w: f64,
    pub v: f64,
    pub sampled_index: i64,
}

/// Result of one optimizer run.
#[derive(Debug, Clone)]
pub struct RunTrace {
    /// Recorded iterations `k = 0..K−1`; empty when tracing was disabled.
    pub rows: Vec<TraceRow>,
    /// `‖x_k‖` for `k = 0..=K` (only when tracing).
    pub x_norms: Vec<f64>,
    /// `f(x_K) − f(x*)` at the final iterate.
    pub final_r: f64,
    pub final_x: Vec<f64>,
    pub iterations: usize,
    pub algorithm: Algorithm,
    pub resolved_alpha: f64,
    pub resolved_tau: usize,
    /// Whether `max_staleness ≤ τ` held at every iteration.
    pub good_event_held: bool,
    pub max_staleness_overall: usize,
    pub base_seed: u64,
    pub replicate: u64,
    pub rng: &'static str,
    pub sampler_kind: String,
    pub stationary_start: bool,
    pub burn_in_freeze: bool,
}

impl RunTrace {
    /// Sub-optimality at iterate index `k ∈ [0, K]`: recorded rows for
    /// `k < K`, the final evaluation for `k = K`.
    pub fn r_at(&self, k: usize) -> Option<f64> {
        if k == self.iterations {
            Some(self.final_r)
        } else {
            self.rows.get(k).map(|row| row.r)
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{TRACE_CSV_HEADER}")?;
        for row in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                row.k,
                row.r,
                row.grad_norm_sq,
                row.est_norm_sq,
                row.err_norm_sq,
                row.max_staleness,
                row.u,
                row.w,
                row.v,
                row.sampled_index
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}
