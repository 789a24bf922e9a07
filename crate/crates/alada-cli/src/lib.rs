//! IO, file formats, and run orchestration around `alada-core`: trace CSVs,
//! JSON summaries, dataset snapshots, the allocation audit, and the grid
//! sweep used by the `alada` binary.

pub mod audit;
pub mod harness;
pub mod snapshot;
pub mod trace_io;

pub use alada_core::NoopObserver;

/// Every binary and test linking this crate counts allocations through the
/// audit layer; the counters are inert until armed.
#[global_allocator]
static GLOBAL_ALLOCATOR: audit::CountingAllocator = audit::CountingAllocator;
