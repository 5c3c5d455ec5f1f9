//! Trial scheduling.
//!
//! Every Monte Carlo trial is a pure function of its index, and trial
//! results are merged by addition of integer tallies. The merged total is
//! therefore identical whichever executor runs the trials and however the
//! work is split.

use std::fmt;
use std::ops::Add;
#[cfg(feature = "parallel")]
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Clone)]
pub struct Executor {
    inner: Inner,
}

#[derive(Clone)]
enum Inner {
    Serial,
    #[cfg(feature = "parallel")]
    Pool(Arc<rayon::ThreadPool>),
}

impl Executor {
    pub fn serial() -> Self {
        Self {
            inner: Inner::Serial,
        }
    }

    /// Thread pool with `workers` threads (`0` picks one per core). Falls
    /// back to serial execution when built without the `parallel` feature.
    pub fn parallel(workers: usize) -> Result<Self> {
        #[cfg(feature = "parallel")]
        {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
            Ok(Self {
                inner: Inner::Pool(Arc::new(pool)),
            })
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = workers;
            Ok(Self::serial())
        }
    }

    /// `1` worker runs inline; anything else uses a pool.
    pub fn with_workers(workers: usize) -> Result<Self> {
        if workers == 1 {
            Ok(Self::serial())
        } else {
            Self::parallel(workers)
        }
    }

    pub fn workers(&self) -> usize {
        match &self.inner {
            Inner::Serial => 1,
            #[cfg(feature = "parallel")]
            Inner::Pool(pool) => pool.current_num_threads(),
        }
    }

    /// Evaluates `trial(i)` for `i in 0..n` and sums the results.
    pub fn map_sum<T, F>(&self, n: u64, trial: F) -> Result<T>
    where
        T: Add<Output = T> + Default + Send,
        F: Fn(u64) -> Result<T> + Send + Sync,
    {
        match &self.inner {
            Inner::Serial => (0..n).try_fold(T::default(), |acc, i| Ok(acc + trial(i)?)),
            #[cfg(feature = "parallel")]
            Inner::Pool(pool) => {
                use rayon::prelude::*;
                pool.install(|| {
                    (0..n)
                        .into_par_iter()
                        .map(&trial)
                        .try_reduce(T::default, |a, b| Ok(a + b))
                })
            }
        }
    }
}

impl Default for Executor {
    fn default() -> Self {
        Self::serial()
    }
}

impl fmt::Debug for Executor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Executor")
            .field("workers", &self.workers())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serial_and_pooled_sums_agree() {
        let f = |i: u64| Ok(i * i + 1);
        let serial: u64 = Executor::serial().map_sum(10_000, f).unwrap();
        for w in [0, 2, 7] {
            let pooled: u64 = Executor::parallel(w).unwrap().map_sum(10_000, f).unwrap();
            assert_eq!(serial, pooled);
        }
        assert_eq!(Executor::with_workers(1).unwrap().workers(), 1);
    }

    #[test]
    fn errors_propagate() {
        let r: Result<u64> = Executor::parallel(3).unwrap().map_sum(100, |i| {
            if i == 42 {
                Err(Error::InvalidArgument("boom".into()))
            } else {
                Ok(i)
            }
        });
        assert!(r.is_err());
        let r: Result<u64> = Executor::serial().map_sum(100, |i| {
            if i == 42 {
                Err(Error::InvalidArgument("boom".into()))
            } else {
                Ok(i)
            }
        });
        assert!(r.is_err());
    }
}
