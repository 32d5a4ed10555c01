//! Benchmarks for the solver crate live under `benches/`.
