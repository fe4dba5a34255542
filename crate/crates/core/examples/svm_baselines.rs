//! Classical and quantum kernel SVMs on both benchmark datasets.
use qfmap::dataset::{adhoc_benchmark, moons_benchmark};
use qfmap::kernel::{zz_feature_map, LinearKernel, RbfKernel};
use qfmap::svm::fit_and_score;
use qfmap::{Kernel, QuantumKernel, SvmConfig};

fn main() -> qfmap::Result<()> {
    let svm = SvmConfig::default();
    let zz = QuantumKernel::exact(zz_feature_map());
    for (name, data, gamma) in [("moons", moons_benchmark(0)?, 0.5), ("adhoc", adhoc_benchmark(0)?, 8.0)] {
        let kernels: [(&str, &dyn Kernel); 3] = [
            ("linear", &LinearKernel),
            ("rbf", &RbfKernel { gamma }),
            ("qsvm-zz", &zz),
        ];
        for (kname, k) in kernels {
            let e = fit_and_score(k, &data, &svm)?;
            println!(
                "{name:<6} {kname:<8} train {:.3}  test {:.3}  support vectors {}",
                e.train_accuracy,
                e.test_accuracy,
                e.model.support_indices.len()
            );
        }
    }
    Ok(())
}
