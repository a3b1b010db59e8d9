//! Criterion benchmarks for the codebook operators and recovery routines live in `benches/`.
