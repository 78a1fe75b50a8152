//! Offset-by-offset evaluation of the two matching metrics.

use rayon::prelude::*;

/// Offsets handed to one worker at a time.
const CHUNK: usize = 4096;

/// `Σ_n (t[n] − r[n+k])²` for one offset.
#[inline]
pub(crate) fn sse_at(test: &[f64], reference: &[f64], k: usize) -> f64 {
    test.iter()
        .zip(&reference[k..k + test.len()])
        .map(|(t, r)| {
            let d = t - r;
            d * d
        })
        .sum()
}

pub(crate) fn mse_trace(test: &[f64], reference: &[f64]) -> Vec<f64> {
    let offsets = reference.len() - test.len() + 1;
    let mut trace = vec![0.0; offsets];
    trace
        .par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(c, out)| {
            for (j, v) in out.iter_mut().enumerate() {
                *v = sse_at(test, reference, c * CHUNK + j);
            }
        });
    trace
}

/// Centered test series and its energy, shared by every CC evaluation.
pub(crate) struct CenteredTest {
    pub values: Vec<f64>,
    pub energy: f64,
}

impl CenteredTest {
    pub fn new(test: &[f64]) -> Self {
        let mean = test.iter().sum::<f64>() / test.len() as f64;
        let values: Vec<f64> = test.iter().map(|t| t - mean).collect();
        let energy = values.iter().map(|v| v * v).sum();
        Self { values, energy }
    }
}

/// For each index, the length of the run of identical values starting there.
/// A window starting at `k` is flat iff `runs[k] >= len`.
pub(crate) fn run_lengths(values: &[f64]) -> Vec<usize> {
    let mut runs = vec![1usize; values.len()];
    for i in (0..values.len().saturating_sub(1)).rev() {
        if values[i] == values[i + 1] {
            runs[i] = runs[i + 1] + 1;
        }
    }
    runs
}

/// Pearson correlation between the test and the reference window at `k`.
#[inline]
pub(crate) fn cc_at(test: &CenteredTest, reference: &[f64], k: usize) -> f64 {
    let len = test.values.len();
    let window = &reference[k..k + len];
    let mean = window.iter().sum::<f64>() / len as f64;
    let mut num = 0.0;
    let mut energy = 0.0;
    for (t, r) in test.values.iter().zip(window) {
        let d = r - mean;
        num += t * d;
        energy += d * d;
    }
    num / (test.energy * energy).sqrt()
}

/// CC for every offset; flat reference windows get `NaN`.
pub(crate) fn cc_trace(test: &CenteredTest, reference: &[f64], runs: &[usize]) -> Vec<f64> {
    let len = test.values.len();
    let offsets = reference.len() - len + 1;
    let mut trace = vec![0.0; offsets];
    trace
        .par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(c, out)| {
            for (j, v) in out.iter_mut().enumerate() {
                let k = c * CHUNK + j;
                *v = if runs[k] >= len {
                    f64::NAN
                } else {
                    cc_at(test, reference, k)
                };
            }
        });
    trace
}
