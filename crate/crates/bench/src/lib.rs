//! Criterion benchmarks for the simulator's hot kernels; see `benches/kernels.rs`.
