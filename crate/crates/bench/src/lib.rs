//! Criterion benchmarks for the extlab solvers; see `benches/`.
