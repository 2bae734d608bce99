//! Shared fixtures for the benchmarks.

use canonstat::kernels::kernel_from_coefficients;
use canonstat::{CoefficientTensor, Kernel, Measure, MixingProcess, OrthonormalBasis, Sample};

/// Dense order-`m` tensor over indices `1..=max_index` with deterministic
/// coefficients `1 / (i_1 + … + i_m)`.
pub fn dense_tensor(m: usize, max_index: usize) -> CoefficientTensor {
    let mut entries = Vec::new();
    let mut index = vec![1; m];
    loop {
        entries.push((index.clone(), 1.0 / index.iter().sum::<usize>() as f64));
        let Some(pos) = (0..m).rev().find(|&k| index[k] < max_index) else {
            break;
        };
        index[pos] += 1;
        index[pos + 1..].iter_mut().for_each(|v| *v = 1);
    }
    CoefficientTensor::from_entries(m, entries).expect("valid indices")
}

pub fn series_kernel(tensor: &CoefficientTensor) -> Kernel {
    kernel_from_coefficients(tensor, &OrthonormalBasis::trig()).expect("trig basis covers every index")
}

pub fn uniform_sample(n: usize, seed: u64) -> Sample {
    MixingProcess::iid(Measure::Uniform).sample(seed, n)
}
