//! Unnormalized complex FFTs on square 1D/2D row-major buffers.
//!
//! Plans come from a process-wide planner; rustfft plans are `Send + Sync`
//! and are shared read-only between threads.

use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::parallel::{self, Exec};

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut p = planner().lock().expect("fft planner poisoned");
    if inverse {
        p.plan_fft_inverse(n)
    } else {
        p.plan_fft_forward(n)
    }
}

fn rows(buf: &mut [Complex64], n: usize, fft: &Arc<dyn Fft<f64>>, exec: Exec) {
    if exec.is_parallel() && buf.len() > n {
        // One row per task; rows of small transforms are grouped to amortize
        // the scratch allocation.
        let rows_per_task = (16384 / n).max(1);
        parallel::for_each_chunk_mut(exec, buf, n * rows_per_task, |chunk| {
            let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
            fft.process_with_scratch(chunk, &mut scratch);
        });
    } else {
        fft.process(buf);
    }
}

fn transpose(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

/// In-place unnormalized transform of an `n^dim` buffer.
pub fn transform(buf: &mut [Complex64], dim: usize, n: usize, inverse: bool) {
    debug_assert_eq!(buf.len(), n.pow(dim as u32));
    let fft = plan(n, inverse);
    let exec = parallel::global();
    match dim {
        1 => fft.process(buf),
        2 => {
            rows(buf, n, &fft, exec);
            transpose(buf, n);
            rows(buf, n, &fft, exec);
            transpose(buf, n);
        }
        _ => unreachable!("dimension validated by GridSpec"),
    }
}

/// Apply a real diagonal multiplier (in FFT index order) to a real signal.
pub fn apply_real_multiplier(values: &[f64], dim: usize, n: usize, mult: &[f64]) -> Vec<f64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform(&mut buf, dim, n, false);
    for (c, m) in buf.iter_mut().zip(mult) {
        *c *= *m;
    }
    transform(&mut buf, dim, n, true);
    let norm = 1.0 / buf.len() as f64;
    buf.iter().map(|c| c.re * norm).collect()
}
