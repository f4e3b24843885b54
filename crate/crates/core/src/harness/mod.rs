//! Problem generation, POP partitioning, benchmark runs and the CLI.

pub mod bench;
pub mod cli;
pub mod gen;
pub mod io;
pub mod ksp;
pub mod pop;

pub use bench::{run_benchmark, write_csv, BenchRow, Scenario, ScenarioFile, CSV_HEADER};
pub use gen::{generate_problem, sample_volume, TrafficModel, TrafficSpec};
pub use io::{load_allocation, load_problem, save_allocation, save_json, save_problem};
pub use ksp::k_shortest_paths;
pub use pop::{merge_allocations, pop_partition, ClientSplit};
