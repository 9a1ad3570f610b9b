//! Criterion benchmarks for the simulation and design routines; see `benches/`.
