//! Benchmarks for spc-core live under `benches/`.
