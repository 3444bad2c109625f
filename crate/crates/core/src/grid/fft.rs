//! Cached 2D FFT plans. Plans are immutable and shared; scratch buffers are
//! owned by the caller so concurrent transforms never share mutable state.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::{Fft, FftPlanner};

use crate::C64;

pub(crate) struct Plan2d {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch_len: usize,
}

static PLANS: OnceLock<Mutex<HashMap<usize, Arc<Plan2d>>>> = OnceLock::new();

pub(crate) fn plan(n: usize) -> Arc<Plan2d> {
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut cache = cache.lock().expect("fft plan cache poisoned");
    cache
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            let forward = planner.plan_fft_forward(n);
            let inverse = planner.plan_fft_inverse(n);
            let scratch_len = forward
                .get_inplace_scratch_len()
                .max(inverse.get_inplace_scratch_len());
            Arc::new(Plan2d {
                n,
                forward,
                inverse,
                scratch_len,
            })
        })
        .clone()
}

impl Plan2d {
    /// Unitary forward transform, in place: `F = (1/n) Σ f e^{-i2π(m·j)/n}`.
    pub(crate) fn forward(&self, data: &mut [C64], scratch: &mut Vec<C64>) {
        self.run(data, scratch, true);
    }

    /// Unitary inverse transform, in place.
    pub(crate) fn inverse(&self, data: &mut [C64], scratch: &mut Vec<C64>) {
        self.run(data, scratch, false);
    }

    fn run(&self, data: &mut [C64], scratch: &mut Vec<C64>, forward: bool) {
        let n = self.n;
        debug_assert_eq!(data.len(), n * n);
        if scratch.len() < self.scratch_len {
            scratch.resize(self.scratch_len, C64::new(0.0, 0.0));
        }
        let fft = if forward { &self.forward } else { &self.inverse };
        let scratch = &mut scratch[..self.scratch_len];
        fft.process_with_scratch(data, scratch);
        transpose_square(data, n);
        fft.process_with_scratch(data, scratch);
        transpose_square(data, n);
        let scale = 1.0 / n as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }
}

fn transpose_square(data: &mut [C64], n: usize) {
    const BLOCK: usize = 32;
    for bi in (0..n).step_by(BLOCK) {
        for bj in (bi..n).step_by(BLOCK) {
            for i in bi..(bi + BLOCK).min(n) {
                let start = if bi == bj { i + 1 } else { bj };
                for j in start..(bj + BLOCK).min(n) {
                    data.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

/// Per-owner transform workspace.
pub struct Transformer {
    plan: Arc<Plan2d>,
    scratch: Vec<C64>,
}

impl Transformer {
    pub fn new(n: usize) -> Self {
        Transformer {
            plan: plan(n),
            scratch: Vec::new(),
        }
    }

    pub fn forward(&mut self, data: &mut [C64]) {
        self.plan.forward(data, &mut self.scratch);
    }

    pub fn inverse(&mut self, data: &mut [C64]) {
        self.plan.inverse(data, &mut self.scratch);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transpose_is_involution() {
        for n in [8usize, 40, 64] {
            let orig: Vec<C64> = (0..n * n).map(|i| C64::new(i as f64, -(i as f64))).collect();
            let mut data = orig.clone();
            transpose_square(&mut data, n);
            assert_eq!(data[1], orig[n]);
            assert_eq!(data[n * 3 + 5], orig[5 * n + 3]);
            transpose_square(&mut data, n);
            assert_eq!(data, orig);
        }
    }

    #[test]
    fn delta_has_flat_spectrum() {
        let n = 16;
        let mut data = vec![C64::new(0.0, 0.0); n * n];
        data[0] = C64::new(n as f64, 0.0);
        Transformer::new(n).forward(&mut data);
        for z in &data {
            assert!((z - C64::new(1.0, 0.0)).norm() < 1e-14);
        }
    }
}
