//! Criterion benchmarks for qubd-core live in `benches/`.
