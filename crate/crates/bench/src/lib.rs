//! Criterion benchmarks for `hdmi-core`; see `benches/`.
