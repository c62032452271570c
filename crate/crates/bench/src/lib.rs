//! Benchmarks for the kriging core; see `benches/`.
