//! Benchmarks for the credibility toolkit. See `benches/core.rs`.
