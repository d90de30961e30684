//! Discrete Fourier transform on the cyclic group `Z_N`.
//!
//! Convention: `fhat(k) = sum_x f(x) exp(-2 pi i k x / N)`, inverse carries the
//! `1/N`. Frequencies are indexed by `k mod N`; [`centered`] maps an index to
//! its representative in `(-N/2, N/2]`.

use rustfft::FftPlanner;

use crate::opalg::C64;

pub fn dft(f: &[C64]) -> Vec<C64> {
    let mut buf = f.to_vec();
    if buf.is_empty() {
        return buf;
    }
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

pub fn idft(fhat: &[C64]) -> Vec<C64> {
    let mut buf = fhat.to_vec();
    if buf.is_empty() {
        return buf;
    }
    let n = buf.len() as f64;
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_inverse(buf.len()).process(&mut buf);
    for z in &mut buf {
        *z /= n;
    }
    buf
}

/// Representative of `k mod n` in `(-n/2, n/2]`.
pub fn centered(k: usize, n: usize) -> i64 {
    let k = (k % n) as i64;
    let n = n as i64;
    if 2 * k > n {
        k - n
    } else {
        k
    }
}

/// Multiplies the DFT of `f` by `symbol` (indexed by `k mod N`) and transforms back.
pub fn multiply(f: &[C64], symbol: &[C64]) -> Vec<C64> {
    let mut fhat = dft(f);
    for (z, s) in fhat.iter_mut().zip(symbol) {
        *z *= s;
    }
    idft(&fhat)
}
