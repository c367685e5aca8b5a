//! Replica-parallel Monte Carlo.

use rayon::prelude::*;

use crate::error::Result;
use crate::rng::RngStream;

/// Evaluate `f` on replicas `0..n` of `stream` in parallel.
///
/// Results come back in replica order regardless of scheduling, so any
/// reduction over them is reproducible.
pub fn replicas<T, F>(stream: &RngStream, n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(RngStream) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(|i| f(stream.replica(i))).collect()
}

/// Fallible variant of [`replicas`]; the first error in replica order wins.
pub fn try_replicas<T, F>(stream: &RngStream, n: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(RngStream) -> Result<T> + Sync + Send,
{
    replicas(stream, n, f).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::pairwise_sum;
    use rand::Rng;

    #[test]
    fn order_is_replica_order() {
        let s = RngStream::new(3, 0);
        let a: Vec<f64> = replicas(&s, 1000, |r| r.rng().random());
        let b: Vec<f64> = (0..1000).map(|i| s.replica(i).rng().random()).collect();
        assert_eq!(a, b);
        assert_eq!(pairwise_sum(&a).to_bits(), pairwise_sum(&b).to_bits());
    }
}
