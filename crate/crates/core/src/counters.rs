use std::ops::AddAssign;

/// Work done while answering one query.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReadCounters {
    /// Undo records visited in the current store.
    pub chain_steps: u64,
    /// Anchor lookups in the historical store.
    pub anchors_seeked: u64,
    /// Deltas applied while rebuilding historical versions.
    pub deltas_applied: u64,
    /// Historical entries read (anchors and deltas).
    pub hist_entries_touched: u64,
    /// Historical fetches that rebuilt at least one version.
    pub hist_reconstructions: u64,
}

impl AddAssign for ReadCounters {
    fn add_assign(&mut self, o: Self) {
        self.chain_steps += o.chain_steps;
        self.anchors_seeked += o.anchors_seeked;
        self.deltas_applied += o.deltas_applied;
        self.hist_entries_touched += o.hist_entries_touched;
        self.hist_reconstructions += o.hist_reconstructions;
    }
}
