use std::thread;

use recon_core::Executor;

/// Static block partition of the index range over scoped threads. Results
/// come back in index order, so output does not depend on the thread count.
#[derive(Clone, Copy, Debug)]
pub struct Threaded {
    workers: usize,
}

impl Threaded {
    pub fn new(workers: usize) -> Self {
        Self {
            workers: workers.max(1),
        }
    }

    /// One worker per available core.
    pub fn auto() -> Self {
        Self::new(thread::available_parallelism().map_or(1, |n| n.get()))
    }

    pub fn workers(&self) -> usize {
        self.workers
    }
}

impl Executor for Threaded {
    fn map_indexed<T, F>(&self, n: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync,
    {
        let workers = (self.workers as u64).min(n).max(1);
        if workers == 1 {
            return (0..n).map(f).collect();
        }
        let block = n.div_ceil(workers);
        let f = &f;
        thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let start = w * block;
                    let end = (start + block).min(n);
                    s.spawn(move || (start..end).map(f).collect::<Vec<T>>())
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("worker panicked"))
                .collect()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use recon_core::Sequential;

    #[test]
    fn matches_sequential_order() {
        for workers in [1, 2, 3, 8] {
            for n in [0u64, 1, 5, 17, 100] {
                let a = Threaded::new(workers).map_indexed(n, |i| i * i);
                let b = Sequential.map_indexed(n, |i| i * i);
                assert_eq!(a, b, "workers={workers} n={n}");
            }
        }
    }
}
