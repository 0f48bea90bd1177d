//! Criterion benchmarks for the estimator kernels live in `benches/`.
