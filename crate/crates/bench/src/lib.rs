//! Criterion benchmarks for the qfield pipelines; see `benches/pipeline.rs`.
