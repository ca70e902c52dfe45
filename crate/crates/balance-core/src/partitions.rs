//! Canonical set-partition enumeration and counting.
//!
//! Partitions are generated as restricted growth strings (RGS): element 0
//! always carries label 0, and each later element carries either an existing
//! label or the next unused one. RGS lexicographic order is the canonical
//! enumeration order used for tie-breaking throughout the solvers.
//!
//! The generator prunes with an exact completability test, so it never
//! visits a prefix that cannot be extended to a partition with the requested
//! cluster count and cluster sizes.

use std::ops::RangeInclusive;

use crate::instance::ClusteringSolution;

/// Cluster-count and cluster-size bounds for enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionBounds {
    pub n: usize,
    pub lambda_min: usize,
    pub lambda_max: usize,
    pub size_min: usize,
    pub size_max: usize,
}

impl PartitionBounds {
    pub fn new(n: usize, lambda: RangeInclusive<usize>, sizes: RangeInclusive<usize>) -> Self {
        PartitionBounds {
            n,
            lambda_min: *lambda.start(),
            lambda_max: *lambda.end(),
            size_min: *sizes.start(),
            size_max: *sizes.end(),
        }
    }

    /// Tightens the bounds to the feasible region; an empty region is
    /// expressed by `lambda_min > lambda_max`.
    fn normalized(mut self) -> Self {
        self.size_min = self.size_min.max(1);
        self.size_max = self.size_max.min(self.n);
        self.lambda_max = self.lambda_max.min(self.n);
        if self.size_min > self.size_max || self.n == 0 {
            self.lambda_min = 1;
            self.lambda_max = 0;
            return self;
        }
        // λ·size_max ≥ n and λ·size_min ≤ n must both be possible.
        self.lambda_min = self.lambda_min.max(self.n.div_ceil(self.size_max));
        self.lambda_max = self.lambda_max.min(self.n / self.size_min);
        self
    }
}

/// Incremental RGS state shared by the generator and the prefix splitter.
#[derive(Debug, Clone)]
struct PartState {
    bounds: PartitionBounds,
    rgs: Vec<usize>,
    sizes: Vec<u32>,
    blocks: usize,
    /// Σ over blocks of max(0, size_min − size).
    deficit: i64,
    /// Σ over blocks of (size_max − size).
    slack: i64,
}

impl PartState {
    fn new(bounds: PartitionBounds) -> Self {
        PartState {
            bounds,
            rgs: vec![0; bounds.n],
            sizes: vec![0; bounds.n],
            blocks: 0,
            deficit: 0,
            slack: 0,
        }
    }

    /// Exact test: can the current state, with `remaining` elements still
    /// unplaced, be completed within the bounds? Blocks may grow within
    /// `[size_min, size_max]` and `d` new blocks may open, each ending with
    /// a size in that interval, with the final block count in the λ range.
    fn completable(&self, remaining: usize) -> bool {
        let b = &self.bounds;
        let r = remaining as i64;
        if r < 0 {
            return false;
        }
        let g = self.blocks;
        if g > b.lambda_max {
            return false;
        }
        let smin = b.size_min as i64;
        let smax = b.size_max as i64;
        // d new blocks: deficit + d·smin ≤ r ≤ slack + d·smax.
        let mut d_lo = if r > self.slack {
            (r - self.slack + smax - 1) / smax
        } else {
            0
        };
        d_lo = d_lo.max(b.lambda_min as i64 - g as i64).max(0);
        if r < self.deficit {
            return false;
        }
        let d_hi = ((r - self.deficit) / smin).min(b.lambda_max as i64 - g as i64);
        d_lo <= d_hi
    }

    /// Whether label `value` may be placed at `pos` (size cap and RGS rule),
    /// before consulting completability.
    fn placement_allowed(&self, value: usize) -> bool {
        if value < self.blocks {
            (self.sizes[value] as usize) < self.bounds.size_max
        } else {
            value == self.blocks && self.blocks < self.bounds.lambda_max
        }
    }

    fn place(&mut self, pos: usize, value: usize) {
        debug_assert!(self.placement_allowed(value));
        if value == self.blocks {
            self.blocks += 1;
            self.deficit += self.bounds.size_min as i64;
            self.slack += self.bounds.size_max as i64;
        }
        let size = self.sizes[value];
        if (size as usize) < self.bounds.size_min {
            self.deficit -= 1;
        }
        self.slack -= 1;
        self.sizes[value] = size + 1;
        self.rgs[pos] = value;
    }

    fn unplace(&mut self, pos: usize) {
        let value = self.rgs[pos];
        let size = self.sizes[value] - 1;
        self.sizes[value] = size;
        self.slack += 1;
        if (size as usize) < self.bounds.size_min {
            self.deficit += 1;
        }
        if size == 0 && value + 1 == self.blocks {
            self.blocks -= 1;
            self.deficit -= self.bounds.size_min as i64;
            self.slack -= self.bounds.size_max as i64;
        }
    }

    /// Places the smallest feasible label at `pos`; `start` is the first
    /// label to try. Returns whether a label was placed.
    fn place_smallest(&mut self, pos: usize, start: usize) -> bool {
        let remaining = self.bounds.n - pos - 1;
        for value in start..=self.blocks {
            if !self.placement_allowed(value) {
                continue;
            }
            self.place(pos, value);
            if self.completable(remaining) {
                return true;
            }
            self.unplace(pos);
        }
        false
    }
}

/// Streaming generator of canonical partitions within bounds.
///
/// `advance` moves to the next partition in RGS lexicographic order; the
/// current labels and block sizes are exposed without allocation.
#[derive(Debug, Clone)]
pub(crate) struct PartitionGen {
    state: PartState,
    /// Positions below the floor are frozen (used to split work across
    /// workers by prefix).
    floor: usize,
    phase: Phase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Fresh,
    Active,
    Done,
}

impl PartitionGen {
    pub fn new(bounds: PartitionBounds) -> Self {
        let bounds = bounds.normalized();
        PartitionGen {
            state: PartState::new(bounds),
            floor: 0,
            phase: if bounds.lambda_min > bounds.lambda_max {
                Phase::Done
            } else {
                Phase::Fresh
            },
        }
    }

    /// A generator restricted to completions of `prefix`; `None` when the
    /// prefix itself is invalid or cannot be completed.
    pub fn with_prefix(bounds: PartitionBounds, prefix: &[usize]) -> Option<Self> {
        let bounds = bounds.normalized();
        if bounds.lambda_min > bounds.lambda_max || prefix.len() > bounds.n {
            return None;
        }
        let mut state = PartState::new(bounds);
        for (pos, &value) in prefix.iter().enumerate() {
            if !state.placement_allowed(value) {
                return None;
            }
            state.place(pos, value);
        }
        if !state.completable(bounds.n - prefix.len()) {
            return None;
        }
        Some(PartitionGen {
            state,
            floor: prefix.len(),
            phase: Phase::Fresh,
        })
    }

    pub fn rgs(&self) -> &[usize] {
        &self.state.rgs
    }

    pub fn sizes(&self) -> &[u32] {
        &self.state.sizes[..self.state.blocks]
    }

    /// Moves to the next partition; `false` when exhausted.
    pub fn advance(&mut self) -> bool {
        let n = self.state.bounds.n;
        match self.phase {
            Phase::Done => false,
            Phase::Fresh => {
                self.phase = Phase::Active;
                if self.floor == n {
                    // Fully frozen prefix: the prefix itself is the single
                    // partition (validity was checked on construction).
                    if self.state.completable(0) {
                        return true;
                    }
                    self.phase = Phase::Done;
                    return false;
                }
                for pos in self.floor..n {
                    if !self.state.place_smallest(pos, 0) {
                        self.phase = Phase::Done;
                        return false;
                    }
                }
                true
            }
            Phase::Active => {
                let mut pos = n;
                loop {
                    if pos == self.floor {
                        self.phase = Phase::Done;
                        return false;
                    }
                    pos -= 1;
                    let old = self.state.rgs[pos];
                    self.state.unplace(pos);
                    if self.state.place_smallest(pos, old + 1) {
                        break;
                    }
                }
                for p in (pos + 1)..n {
                    let placed = self.state.place_smallest(p, 0);
                    debug_assert!(placed, "completability guarantees a greedy fill");
                    if !placed {
                        self.phase = Phase::Done;
                        return false;
                    }
                }
                true
            }
        }
    }
}

/// Enumerates all valid label prefixes of `depth` in lexicographic order;
/// every partition within the bounds extends exactly one of them.
pub(crate) fn enumerate_prefixes(bounds: PartitionBounds, depth: usize) -> Vec<Vec<usize>> {
    let bounds = bounds.normalized();
    if bounds.lambda_min > bounds.lambda_max {
        return Vec::new();
    }
    let depth = depth.min(bounds.n);
    let mut out = Vec::new();
    let mut state = PartState::new(bounds);
    fn recurse(state: &mut PartState, pos: usize, depth: usize, out: &mut Vec<Vec<usize>>) {
        if pos == depth {
            out.push(state.rgs[..depth].to_vec());
            return;
        }
        let remaining = state.bounds.n - pos - 1;
        for value in 0..=state.blocks {
            if !state.placement_allowed(value) {
                continue;
            }
            state.place(pos, value);
            if state.completable(remaining) {
                recurse(state, pos + 1, depth, out);
            }
            state.unplace(pos);
        }
    }
    recurse(&mut state, 0, depth, &mut out);
    out
}

/// Exact number of partitions within the bounds, saturating at `u128::MAX`.
///
/// Counts by choosing the block containing the smallest remaining element:
/// a block of size `s` uses `C(m-1, s-1)` of the `m` remaining elements.
pub fn count_partitions(
    n: usize,
    lambda: RangeInclusive<usize>,
    sizes: RangeInclusive<usize>,
) -> u128 {
    let b = PartitionBounds::new(n, lambda, sizes).normalized();
    if b.lambda_min > b.lambda_max {
        return 0;
    }
    let choose = binomial_table(n);
    // memo[m][used]: ways to finish with m elements left and `used` blocks placed.
    let mut memo = vec![vec![None::<u128>; b.lambda_max + 2]; n + 1];
    fn rec(
        m: usize,
        used: usize,
        b: &PartitionBounds,
        choose: &[Vec<u128>],
        memo: &mut Vec<Vec<Option<u128>>>,
    ) -> u128 {
        if m == 0 {
            return u128::from(used >= b.lambda_min && used <= b.lambda_max);
        }
        if used >= b.lambda_max {
            return 0;
        }
        if let Some(v) = memo[m][used] {
            return v;
        }
        let mut total = 0u128;
        for s in b.size_min..=b.size_max.min(m) {
            let ways = choose[m - 1][s - 1];
            let rest = rec(m - s, used + 1, b, choose, memo);
            total = total.saturating_add(ways.saturating_mul(rest));
        }
        memo[m][used] = Some(total);
        total
    }
    rec(n, 0, &b, &choose, &mut memo)
}

fn binomial_table(n: usize) -> Vec<Vec<u128>> {
    let mut c = vec![vec![0u128; n + 1]; n + 1];
    for i in 0..=n {
        c[i][0] = 1;
        for j in 1..=i {
            c[i][j] = c[i - 1][j - 1].saturating_add(c[i - 1][j]);
        }
    }
    c
}

/// Iterator over all canonical partitions of an `n`-element set with the
/// cluster count in `lambda` and every cluster size in `sizes`, in RGS
/// lexicographic order. Infeasible bounds yield an empty stream.
pub fn enumerate_partitions(
    n: usize,
    lambda: RangeInclusive<usize>,
    sizes: RangeInclusive<usize>,
) -> PartitionIter {
    PartitionIter {
        gen: PartitionGen::new(PartitionBounds::new(n, lambda, sizes)),
    }
}

/// See [`enumerate_partitions`].
pub struct PartitionIter {
    gen: PartitionGen,
}

impl Iterator for PartitionIter {
    type Item = ClusteringSolution;

    fn next(&mut self) -> Option<Self::Item> {
        if self.gen.advance() {
            Some(ClusteringSolution::from_assignment(self.gen.rgs()))
        } else {
            None
        }
    }
}
