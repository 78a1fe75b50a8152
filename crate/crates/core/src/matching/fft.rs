//! FFT fast path: sliding dot products by packed overlap-save.
//!
//! Two consecutive reference blocks ride in one complex transform (one in
//! the real part, one in the imaginary part). Since the test spectrum comes
//! from a real sequence, the inverse transform returns the two block
//! correlations in the real and imaginary parts respectively.

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// `out[k] = Σ_n a[n] · r[n+k]` for `k = 0..=r.len()-a.len()`.
pub(crate) fn sliding_dot(a: &[f64], r: &[f64]) -> Vec<f64> {
    let len = a.len();
    assert!(len >= 1 && len <= r.len());
    let offsets = r.len() - len + 1;

    let mut n = (4 * len).max(4096).next_power_of_two();
    n = n.min(r.len().next_power_of_two()).max(len.next_power_of_two());
    let block = n - len + 1;

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);

    let mut kernel: Vec<Complex<f64>> = (0..n)
        .map(|i| Complex::new(if i < len { a[i] } else { 0.0 }, 0.0))
        .collect();
    forward.process(&mut kernel);
    let scale = 1.0 / n as f64;
    for k in kernel.iter_mut() {
        *k = k.conj() * scale;
    }

    let scratch_len = forward
        .get_inplace_scratch_len()
        .max(inverse.get_inplace_scratch_len());
    let mut out = vec![0.0; offsets];
    out.par_chunks_mut(2 * block).enumerate().for_each_init(
        || (vec![Complex::new(0.0, 0.0); n], vec![Complex::new(0.0, 0.0); scratch_len]),
        |(buf, scratch), (pair, chunk)| {
            let first = 2 * pair * block;
            let second = first + block;
            for (j, slot) in buf.iter_mut().enumerate() {
                let re = r.get(first + j).copied().unwrap_or(0.0);
                let im = r.get(second + j).copied().unwrap_or(0.0);
                *slot = Complex::new(re, im);
            }
            forward.process_with_scratch(buf, scratch);
            for (v, k) in buf.iter_mut().zip(&kernel) {
                *v *= k;
            }
            inverse.process_with_scratch(buf, scratch);
            let (lo, hi) = chunk.split_at_mut(chunk.len().min(block));
            for (dst, v) in lo.iter_mut().zip(buf.iter()) {
                *dst = v.re;
            }
            for (dst, v) in hi.iter_mut().zip(buf.iter()) {
                *dst = v.im;
            }
        },
    );
    out
}

/// Unevaluated sum `hi + lo` with `lo` far below an ulp of `hi`.
#[derive(Clone, Copy, Default)]
struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    /// Adds `x + x_err`, where `x_err` is the rounding error of `x`.
    fn add(self, x: f64, x_err: f64) -> Self {
        let s = self.hi + x;
        let bb = s - self.hi;
        let e = (self.hi - (s - bb)) + (x - bb);
        let lo = self.lo + x_err + e;
        let hi = s + lo;
        Self { hi, lo: lo - (hi - s) }
    }

    fn minus(self, other: Self) -> f64 {
        let d = self.hi - other.hi;
        let bb = d - self.hi;
        let e = (self.hi - (d - bb)) - (other.hi + bb);
        d + (e + self.lo - other.lo)
    }
}

/// Sums of `r` and `r²` over every window of length `len`.
///
/// Differences of double-double prefix sums: the error of each window sum is
/// a few ulps of the window sum itself, however long the series.
pub(crate) fn window_sums(r: &[f64], len: usize) -> (Vec<f64>, Vec<f64>) {
    let mut p1 = Vec::with_capacity(r.len() + 1);
    let mut p2 = Vec::with_capacity(r.len() + 1);
    let (mut a, mut b) = (DoubleDouble::default(), DoubleDouble::default());
    p1.push(a);
    p2.push(b);
    for &v in r {
        let sq = v * v;
        a = a.add(v, 0.0);
        b = b.add(sq, v.mul_add(v, -sq));
        p1.push(a);
        p2.push(b);
    }
    let offsets = r.len() - len + 1;
    let s1 = (0..offsets).map(|k| p1[k + len].minus(p1[k])).collect();
    let s2 = (0..offsets).map(|k| p2[k + len].minus(p2[k])).collect();
    (s1, s2)
}
