use super::RewardError;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Pairwise preference oracle over candidate indices.
pub trait Comparator {
    /// `true` when candidate `a` is preferred over candidate `b`.
    fn prefers(&mut self, a: usize, b: usize) -> Result<bool, RewardError>;
}

impl<F> Comparator for F
where
    F: FnMut(usize, usize) -> Result<bool, RewardError>,
{
    fn prefers(&mut self, a: usize, b: usize) -> Result<bool, RewardError> {
        self(a, b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub winner: usize,
    pub loser: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionOutcome {
    /// Candidates labeled `+1`; never empty, never all of them.
    pub plus: Vec<usize>,
    pub comparisons: Vec<ComparisonRecord>,
}

impl PartitionOutcome {
    /// `+1` / `-1` labels in candidate order.
    pub fn labels(&self, k: usize) -> Vec<f64> {
        let mut out = vec![-1.0; k];
        for &i in &self.plus {
            out[i] = 1.0;
        }
        out
    }
}

struct Recorder<'a, C: Comparator + ?Sized> {
    inner: &'a mut C,
    log: Vec<ComparisonRecord>,
}

impl<C: Comparator + ?Sized> Recorder<'_, C> {
    fn beats(&mut self, a: usize, b: usize) -> Result<bool, RewardError> {
        match self.inner.prefers(a, b) {
            Ok(won) => {
                let (winner, loser) = if won { (a, b) } else { (b, a) };
                self.log.push(ComparisonRecord { winner, loser });
                Ok(won)
            }
            Err(e) => {
                Err(RewardError::Aggregation { message: e.to_string(), completed: std::mem::take(&mut self.log) })
            }
        }
    }

    /// Splits `items` around a random pivot into (beat the pivot, the rest).
    fn split<R: Rng + ?Sized>(
        &mut self,
        items: &[usize],
        rng: &mut R,
    ) -> Result<(usize, Vec<usize>, Vec<usize>), RewardError> {
        let pivot = items[rng.random_range(0..items.len())];
        let mut win = Vec::new();
        let mut lose = Vec::new();
        for &i in items {
            if i == pivot {
                continue;
            }
            if self.beats(i, pivot)? {
                win.push(i);
            } else {
                lose.push(i);
            }
        }
        Ok((pivot, win, lose))
    }
}

/// Labels roughly the better half of `k` candidates using at most two
/// quicksort partition rounds (`<= 2(k - 1)` comparisons).
///
/// Every boundary certified by the partitions separates a group that beats
/// everything below it; the one closest to `ceil(k / 2)` is used. The best
/// candidate always lands in the `+1` group.
pub fn partition_top<C, R>(k: usize, cmp: &mut C, rng: &mut R) -> Result<PartitionOutcome, RewardError>
where
    C: Comparator + ?Sized,
    R: Rng + ?Sized,
{
    if k < 2 {
        return Err(RewardError::InvalidSpec("comparison rewards need at least two candidates".into()));
    }
    let all: Vec<usize> = (0..k).collect();
    let mut rec = Recorder { inner: cmp, log: Vec::new() };
    let (pivot, win, lose) = rec.split(&all, rng)?;
    let refine_win = win.len() > lose.len();
    // Ordered groups from best to worst; every prefix is a certified top set.
    let mut groups = vec![win, vec![pivot], lose];
    let target_group = if refine_win { 0 } else { 2 };
    if groups[target_group].len() >= 2 {
        let items = std::mem::take(&mut groups[target_group]);
        let (p2, w2, l2) = rec.split(&items, rng)?;
        groups.splice(target_group..=target_group, [w2, vec![p2], l2]);
    }
    groups.retain(|g| !g.is_empty());

    let target = k.div_ceil(2);
    let mut best: Option<(usize, usize)> = None;
    let mut size = 0;
    for (gi, g) in groups.iter().enumerate().take(groups.len() - 1) {
        size += g.len();
        let dist = size.abs_diff(target);
        if best.is_none_or(|(_, d)| dist < d) {
            best = Some((gi, dist));
        }
    }
    let (cut, _) = best.expect("a nonempty group split always leaves a boundary");
    let mut plus: Vec<usize> = groups[..=cut].iter().flatten().copied().collect();
    plus.sort_unstable();
    Ok(PartitionOutcome { plus, comparisons: rec.log })
}
