//! Thread-local allocation counting behind a wrapping global allocator.
//!
//! The counter is armed only around optimizer-step windows, so persistent
//! buffers allocated at setup never show up. Counting is per thread: a run
//! executing on one thread is unaffected by allocations elsewhere in the
//! process (other tests, the runtime).

use std::alloc::{GlobalAlloc, Layout, System};
use std::cell::Cell;

/// What was observed during armed windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AuditStats {
    /// Allocations at or above the armed threshold.
    pub large_count: u64,
    /// Largest single allocation seen, bytes.
    pub peak_single_bytes: usize,
    /// Total bytes requested.
    pub total_bytes: u64,
    /// Number of allocation calls.
    pub alloc_count: u64,
}

impl AuditStats {
    pub fn merge(&mut self, other: AuditStats) {
        self.large_count += other.large_count;
        self.peak_single_bytes = self.peak_single_bytes.max(other.peak_single_bytes);
        self.total_bytes += other.total_bytes;
        self.alloc_count += other.alloc_count;
    }
}

thread_local! {
    static ARMED: Cell<bool> = const { Cell::new(false) };
    static THRESHOLD: Cell<usize> = const { Cell::new(usize::MAX) };
    static STATS: Cell<AuditStats> = const {
        Cell::new(AuditStats {
            large_count: 0,
            peak_single_bytes: 0,
            total_bytes: 0,
            alloc_count: 0,
        })
    };
}

#[inline]
fn note(size: usize) {
    ARMED.with(|armed| {
        if !armed.get() {
            return;
        }
        STATS.with(|stats| {
            let mut s = stats.get();
            s.alloc_count += 1;
            s.total_bytes += size as u64;
            if size > s.peak_single_bytes {
                s.peak_single_bytes = size;
            }
            if size >= THRESHOLD.with(Cell::get) {
                s.large_count += 1;
            }
            stats.set(s);
        });
    });
}

/// System allocator wrapper feeding the thread-local audit counters.
pub struct CountingAllocator;

// SAFETY-free: defers entirely to the system allocator; the bookkeeping
// touches only const-initialized thread locals, which never allocate.
unsafe impl GlobalAlloc for CountingAllocator {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        note(layout.size());
        unsafe { System.alloc(layout) }
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        unsafe { System.dealloc(ptr, layout) }
    }

    unsafe fn alloc_zeroed(&self, layout: Layout) -> *mut u8 {
        note(layout.size());
        unsafe { System.alloc_zeroed(layout) }
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        note(new_size);
        unsafe { System.realloc(ptr, layout, new_size) }
    }
}

/// Start counting on this thread with the given large-allocation threshold.
/// Resets any previously collected stats.
pub fn arm(threshold_bytes: usize) {
    STATS.with(|s| s.set(AuditStats::default()));
    THRESHOLD.with(|t| t.set(threshold_bytes));
    ARMED.with(|a| a.set(true));
}

/// Stop counting and return what was seen since [`arm`].
pub fn disarm() -> AuditStats {
    ARMED.with(|a| a.set(false));
    STATS.with(Cell::get)
}
