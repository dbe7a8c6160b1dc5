//! Benchmark target crate; see `benches/`.
