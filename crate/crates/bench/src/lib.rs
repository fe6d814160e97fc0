//! Benchmark-only crate; the criterion targets live under `benches/`.
//! Run them with `cargo bench -p ekman-bench`.
