//! Criterion benchmarks for the hot kernels of `qpar-core`: one explicit
//! solver step, the friendly-giant integral operator, and closed-form
//! evaluation. Run with `cargo bench -p qpar-bench`.
