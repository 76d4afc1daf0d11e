//! Criterion benchmarks for sample generation, matching and registration.
//! Run with `cargo bench -p psreg-bench`.
