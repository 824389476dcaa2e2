//! CPU time of the calling thread.

/// Seconds of CPU time consumed by the current thread.
pub fn thread_cpu_seconds() -> f64 {
    let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
    // SAFETY: `ts` is a valid, writable timespec.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
    if rc != 0 {
        return 0.0;
    }
    ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
}

/// Stopwatch over thread CPU time.
#[derive(Debug, Clone, Copy)]
pub struct CpuTimer {
    start: f64,
}

impl CpuTimer {
    pub fn start() -> Self {
        CpuTimer { start: thread_cpu_seconds() }
    }

    pub fn elapsed(&self) -> f64 {
        (thread_cpu_seconds() - self.start).max(0.0)
    }
}
