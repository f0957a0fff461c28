//! Mixed-radix complex FFT.
//!
//! Lengths whose prime factors are all at most [`MAX_DIRECT_RADIX`] run a
//! Stockham autosort transform (radix 4, 2, 3, 5 and a generic odd-prime
//! butterfly). Anything else goes through Bluestein's chirp-z algorithm on a
//! power-of-two inner transform.
//!
//! Transforms are unnormalized in both directions: `inverse(forward(x)) = n·x`.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

/// Largest prime handled by a direct butterfly; larger primes use Bluestein.
pub const MAX_DIRECT_RADIX: usize = 13;

/// A precomputed transform plan for one length.
#[derive(Debug, Clone)]
pub struct Fft {
    len: usize,
    kind: Kind,
}

#[derive(Debug, Clone)]
enum Kind {
    Identity,
    Stockham {
        radices: Vec<usize>,
        /// `W_N^k = exp(-2πik/N)` for `k` in `0..N`.
        twiddles: Vec<Complex64>,
    },
    Bluestein(Box<Bluestein>),
}

#[derive(Debug, Clone)]
struct Bluestein {
    inner: Fft,
    /// `exp(-iπk²/n)` for `k` in `0..n`.
    chirp: Vec<Complex64>,
    /// Forward transform of the conjugate chirp, wrapped to the inner length.
    kernel: Vec<Complex64>,
}

impl Fft {
    /// Plans a transform of length `len`. A zero length is treated as one.
    pub fn new(len: usize) -> Self {
        let len = len.max(1);
        if len == 1 {
            return Fft {
                len,
                kind: Kind::Identity,
            };
        }
        match factorize(len) {
            Some(radices) => Fft {
                len,
                kind: Kind::Stockham {
                    radices,
                    twiddles: twiddle_table(len),
                },
            },
            None => Fft {
                len,
                kind: Kind::Bluestein(Box::new(Bluestein::new(len))),
            },
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// In-place forward transform, `X[k] = Σ x[j]·exp(-2πijk/n)`.
    ///
    /// Panics if `buf.len()` differs from the planned length.
    pub fn forward(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len, "buffer length does not match plan");
        match &self.kind {
            Kind::Identity => {}
            Kind::Stockham { radices, twiddles } => stockham(buf, radices, twiddles),
            Kind::Bluestein(b) => b.forward(buf),
        }
    }

    /// In-place unnormalized inverse transform.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        for x in buf.iter_mut() {
            *x = x.conj();
        }
        self.forward(buf);
        for x in buf.iter_mut() {
            *x = x.conj();
        }
    }

    /// Inverse transform scaled by `1/n`.
    pub fn inverse_normalized(&self, buf: &mut [Complex64]) {
        self.inverse(buf);
        let scale = 1.0 / self.len as f64;
        for x in buf.iter_mut() {
            *x *= scale;
        }
    }
}

/// Smallest length `>= n` whose prime factors are 2, 3 and 5.
pub fn fast_len(n: usize) -> usize {
    let mut candidate = n.max(1);
    loop {
        let mut rest = candidate;
        for p in [2, 3, 5] {
            while rest.is_multiple_of(p) {
                rest /= p;
            }
        }
        if rest == 1 {
            return candidate;
        }
        candidate += 1;
    }
}

/// Splits `n` into Stockham radices, or `None` if a prime factor exceeds
/// [`MAX_DIRECT_RADIX`].
fn factorize(mut n: usize) -> Option<Vec<usize>> {
    let mut radices = Vec::new();
    while n.is_multiple_of(4) {
        radices.push(4);
        n /= 4;
    }
    let mut p = 2;
    while n > 1 {
        if p > MAX_DIRECT_RADIX {
            return None;
        }
        if n.is_multiple_of(p) {
            radices.push(p);
            n /= p;
        } else {
            p += 1;
        }
    }
    Some(radices)
}

/// `exp(-2πik/n)` for all `k < n`, built from a coarse × fine product so only
/// about `2·sqrt(n)` trigonometric evaluations are needed.
fn twiddle_table(n: usize) -> Vec<Complex64> {
    let block = (libm::sqrt(n as f64) as usize).max(1);
    let angle = |k: usize| -2.0 * PI * (k as f64) / (n as f64);
    let fine: Vec<Complex64> = (0..block).map(|j| Complex64::from_polar(1.0, angle(j))).collect();
    let coarse: Vec<Complex64> = (0..n.div_ceil(block))
        .map(|i| Complex64::from_polar(1.0, angle(i * block)))
        .collect();
    (0..n).map(|k| coarse[k / block] * fine[k % block]).collect()
}

fn stockham(buf: &mut [Complex64], radices: &[usize], twiddles: &[Complex64]) {
    let n = buf.len();
    let mut scratch = vec![Complex64::new(0.0, 0.0); n];
    let mut in_buf = true;
    let mut n_cur = n;
    let mut stride = 1;
    for &radix in radices {
        let (src, dst): (&[Complex64], &mut [Complex64]) = if in_buf {
            (&*buf, &mut scratch[..])
        } else {
            (&scratch[..], &mut *buf)
        };
        let m = n_cur / radix;
        match radix {
            2 => pass2(src, dst, m, stride, twiddles),
            4 => pass4(src, dst, m, stride, twiddles),
            3 => pass3(src, dst, m, stride, twiddles),
            _ => pass_generic(src, dst, radix, m, stride, twiddles),
        }
        in_buf = !in_buf;
        n_cur = m;
        stride *= radix;
    }
    if !in_buf {
        buf.copy_from_slice(&scratch);
    }
}

fn pass2(src: &[Complex64], dst: &mut [Complex64], m: usize, s: usize, tw: &[Complex64]) {
    for p in 0..m {
        let w1 = tw[p * s];
        for q in 0..s {
            let a0 = src[q + s * p];
            let a1 = src[q + s * (p + m)];
            dst[q + s * 2 * p] = a0 + a1;
            dst[q + s * (2 * p + 1)] = (a0 - a1) * w1;
        }
    }
}

fn pass4(src: &[Complex64], dst: &mut [Complex64], m: usize, s: usize, tw: &[Complex64]) {
    for p in 0..m {
        let w1 = tw[p * s];
        let w2 = tw[2 * p * s];
        let w3 = tw[3 * p * s];
        for q in 0..s {
            let a0 = src[q + s * p];
            let a1 = src[q + s * (p + m)];
            let a2 = src[q + s * (p + 2 * m)];
            let a3 = src[q + s * (p + 3 * m)];
            let t0 = a0 + a2;
            let t1 = a0 - a2;
            let t2 = a1 + a3;
            let d = a1 - a3;
            // -i·d
            let t3 = Complex64::new(d.im, -d.re);
            let base = q + s * 4 * p;
            dst[base] = t0 + t2;
            dst[base + s] = (t1 + t3) * w1;
            dst[base + 2 * s] = (t0 - t2) * w2;
            dst[base + 3 * s] = (t1 - t3) * w3;
        }
    }
}

fn pass3(src: &[Complex64], dst: &mut [Complex64], m: usize, s: usize, tw: &[Complex64]) {
    const SIN60: f64 = 0.866_025_403_784_438_6;
    for p in 0..m {
        let w1 = tw[p * s];
        let w2 = tw[2 * p * s];
        for q in 0..s {
            let a0 = src[q + s * p];
            let a1 = src[q + s * (p + m)];
            let a2 = src[q + s * (p + 2 * m)];
            let sum = a1 + a2;
            let diff = a1 - a2;
            let mid = a0 - sum * 0.5;
            // -i·(√3/2)·diff
            let rot = Complex64::new(diff.im * SIN60, -diff.re * SIN60);
            let base = q + s * 3 * p;
            dst[base] = a0 + sum;
            dst[base + s] = (mid + rot) * w1;
            dst[base + 2 * s] = (mid - rot) * w2;
        }
    }
}

fn pass_generic(
    src: &[Complex64],
    dst: &mut [Complex64],
    radix: usize,
    m: usize,
    s: usize,
    tw: &[Complex64],
) {
    let n = tw.len();
    let root_step = n / radix;
    let mut a = [Complex64::new(0.0, 0.0); MAX_DIRECT_RADIX];
    for p in 0..m {
        for q in 0..s {
            for (t, slot) in a.iter_mut().enumerate().take(radix) {
                *slot = src[q + s * (p + t * m)];
            }
            for u in 0..radix {
                let mut acc = Complex64::new(0.0, 0.0);
                for (t, &at) in a.iter().enumerate().take(radix) {
                    acc += at * tw[((t * u) % radix) * root_step];
                }
                dst[q + s * (radix * p + u)] = acc * tw[p * u * s];
            }
        }
    }
}

impl Bluestein {
    fn new(n: usize) -> Self {
        let m = (2 * n - 1).next_power_of_two();
        let inner = Fft::new(m);
        let two_n = 2 * n as u128;
        let chirp: Vec<Complex64> = (0..n)
            .map(|k| {
                let k2 = ((k as u128) * (k as u128)) % two_n;
                Complex64::from_polar(1.0, -PI * (k2 as f64) / (n as f64))
            })
            .collect();
        let mut kernel = vec![Complex64::new(0.0, 0.0); m];
        kernel[0] = chirp[0].conj();
        for k in 1..n {
            kernel[k] = chirp[k].conj();
            kernel[m - k] = chirp[k].conj();
        }
        inner.forward(&mut kernel);
        Bluestein {
            inner,
            chirp,
            kernel,
        }
    }

    fn forward(&self, buf: &mut [Complex64]) {
        let m = self.inner.len();
        let mut work = vec![Complex64::new(0.0, 0.0); m];
        for ((w, &x), &c) in work.iter_mut().zip(buf.iter()).zip(&self.chirp) {
            *w = x * c;
        }
        self.inner.forward(&mut work);
        for (w, &k) in work.iter_mut().zip(&self.kernel) {
            *w *= k;
        }
        self.inner.inverse(&mut work);
        let scale = 1.0 / m as f64;
        for ((x, &w), &c) in buf.iter_mut().zip(&work).zip(&self.chirp) {
            *x = w * c * scale;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(j, &v)| {
                        let ang = -2.0 * PI * ((j * k) % n) as f64 / n as f64;
                        v * Complex64::from_polar(1.0, ang)
                    })
                    .sum()
            })
            .collect()
    }

    fn test_signal(n: usize, seed: u64) -> Vec<Complex64> {
        let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        (0..n).map(|_| Complex64::new(next(), next())).collect()
    }

    fn max_err(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn matches_naive_dft_for_assorted_lengths() {
        for n in [1, 2, 3, 4, 5, 6, 7, 8, 12, 13, 16, 17, 20, 30, 45, 60, 64, 97, 100, 121, 243, 250] {
            let x = test_signal(n, n as u64);
            let mut y = x.clone();
            Fft::new(n).forward(&mut y);
            let expect = naive_dft(&x);
            assert!(max_err(&y, &expect) < 1e-9 * n as f64, "n = {n}");
        }
    }

    #[test]
    fn matches_rustfft_on_frame_length() {
        let n = 655_360;
        let x = test_signal(n, 3);
        let mut ours = x.clone();
        Fft::new(n).forward(&mut ours);
        let mut theirs = x;
        rustfft::FftPlanner::new().plan_fft_forward(n).process(&mut theirs);
        let scale = theirs.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(max_err(&ours, &theirs) / scale < 1e-12);
    }

    #[test]
    fn bluestein_matches_rustfft() {
        for n in [1009, 4099, 10_007] {
            let x = test_signal(n, 11);
            let mut ours = x.clone();
            Fft::new(n).forward(&mut ours);
            let mut theirs = x;
            rustfft::FftPlanner::new().plan_fft_forward(n).process(&mut theirs);
            let scale = theirs.iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(max_err(&ours, &theirs) / scale < 1e-11, "n = {n}");
        }
    }

    #[test]
    fn fast_len_is_smooth_and_minimal() {
        assert_eq!(fast_len(1), 1);
        assert_eq!(fast_len(7), 8);
        assert_eq!(fast_len(655_360), 655_360);
        assert_eq!(fast_len(655_761), 656_100);
    }

    proptest! {
        #[test]
        fn inverse_undoes_forward(n in 1usize..400, seed in any::<u64>()) {
            let x = test_signal(n, seed);
            let plan = Fft::new(n);
            let mut y = x.clone();
            plan.forward(&mut y);
            plan.inverse_normalized(&mut y);
            prop_assert!(max_err(&x, &y) < 1e-12 * (n as f64).max(8.0));
        }
    }
}
