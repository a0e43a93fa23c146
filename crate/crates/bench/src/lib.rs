//! Criterion benchmarks for the simulation pipeline live under `benches/`.
