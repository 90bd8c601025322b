use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use super::{CountResult, Denominator, QCount, Verdict, WeightedCount, Witness};
use crate::error::{Error, Result};

/// Subtotal for one denominator (or one dual index).
#[derive(Debug, Clone)]
pub(crate) struct Slice {
    pub q: Denominator,
    pub lower: u64,
    pub upper: u64,
    pub w_lower: f64,
    pub w_upper: f64,
    pub witnesses: Vec<Witness>,
}

impl Slice {
    pub fn new(q: Denominator) -> Self {
        Slice {
            q,
            lower: 0,
            upper: 0,
            w_lower: 0.0,
            w_upper: 0.0,
            witnesses: Vec::new(),
        }
    }

    /// Records one point; `witness` is only built while under the cap.
    pub fn record(
        &mut self,
        verdict: Verdict,
        weight: f64,
        cap: usize,
        witness: impl FnOnce() -> Witness,
    ) {
        match verdict {
            Verdict::Reject => return,
            Verdict::Accept => {
                self.lower += 1;
                self.w_lower += weight;
            }
            Verdict::Ambiguous => {}
        }
        self.upper += 1;
        self.w_upper += weight;
        if self.witnesses.len() < cap {
            self.witnesses.push(witness());
        }
    }
}

/// Evaluates `f` on every item using `jobs` workers and returns the slices in
/// item order. The first error in item order wins.
pub(crate) fn run<T, F>(jobs: Option<usize>, items: &[T], f: F) -> Result<Vec<Slice>>
where
    T: Sync,
    F: Fn(&T) -> Result<Slice> + Sync + Send,
{
    let results: Vec<Result<Slice>> = match jobs {
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("cannot start {j} workers: {e}")))?;
            pool.install(|| items.par_iter().map(&f).collect())
        }
        None => items.par_iter().map(&f).collect(),
    };
    results.into_iter().collect()
}

/// Merges slices in order. With `aggregate`, integer denominators are summed
/// into one row per value, in increasing order.
pub(crate) fn merge(
    slices: Vec<Slice>,
    cap: usize,
    weighted: bool,
    aggregate: bool,
    started: Instant,
) -> CountResult {
    let mut witnesses = Vec::new();
    let mut lower = 0u64;
    let mut upper = 0u64;
    let mut wl = 0.0;
    let mut wu = 0.0;
    for s in &slices {
        lower += s.lower;
        upper += s.upper;
        wl += s.w_lower;
        wu += s.w_upper;
        for w in &s.witnesses {
            if witnesses.len() < cap {
                witnesses.push(w.clone());
            }
        }
    }
    let per_q: Vec<QCount> = if aggregate {
        let mut rows: BTreeMap<i64, QCount> = BTreeMap::new();
        for s in &slices {
            let key = match s.q {
                Denominator::Int(q) => q,
                Denominator::Gaussian(_) => unreachable!("aggregation applies to integer keys"),
            };
            let row = rows.entry(key).or_insert(QCount {
                q: s.q,
                count: 0,
                lower: 0,
                weight: 0.0,
            });
            row.count += s.upper;
            row.lower += s.lower;
            row.weight += s.w_upper;
        }
        rows.into_values().collect()
    } else {
        slices
            .iter()
            .map(|s| QCount {
                q: s.q,
                count: s.upper,
                lower: s.lower,
                weight: s.w_upper,
            })
            .collect()
    };
    CountResult {
        total: upper,
        lower,
        upper,
        per_q,
        witnesses,
        weighted: weighted.then_some(WeightedCount {
            total: wu,
            lower: wl,
            upper: wu,
        }),
        elapsed: started.elapsed(),
    }
}

/// Largest per-axis resolution whose full grid in `dim` dimensions stays
/// within `budget` points (at least 2).
pub(crate) fn grid_per_axis(dim: usize, budget: usize) -> usize {
    let mut k = 2usize;
    while ((k + 1) as f64).powi(dim as i32) <= budget as f64 && k < 64 {
        k += 1;
    }
    k
}

/// Row-major odometer over the integer box `Π [lo_i, hi_i]`.
pub(crate) struct BoxIter {
    lo: Vec<i64>,
    hi: Vec<i64>,
    cur: Vec<i64>,
    done: bool,
}

impl BoxIter {
    pub fn new(ranges: &[(i64, i64)]) -> Self {
        let lo: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        let hi: Vec<i64> = ranges.iter().map(|r| r.1).collect();
        let done = ranges.iter().any(|(a, b)| a > b);
        BoxIter {
            cur: lo.clone(),
            lo,
            hi,
            done,
        }
    }

    /// The current point, or `None` once the box is exhausted.
    pub fn next_point(&mut self) -> Option<&[i64]> {
        if self.done {
            return None;
        }
        Some(&self.cur)
    }

    pub fn advance(&mut self) {
        let d = self.cur.len();
        // last coordinate varies fastest
        let mut k = d;
        loop {
            if k == 0 {
                self.done = true;
                return;
            }
            k -= 1;
            if self.cur[k] < self.hi[k] {
                self.cur[k] += 1;
                for j in k + 1..d {
                    self.cur[j] = self.lo[j];
                }
                return;
            }
        }
    }
}
