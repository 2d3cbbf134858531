use crate::phase::{Observable, PhaseState};

/// Named observables recorded at every trajectory sample.
#[derive(Debug, Clone, Default)]
pub struct MonitorSet {
    entries: Vec<Observable>,
}

impl MonitorSet {
    pub fn new(entries: Vec<Observable>) -> Self {
        Self { entries }
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|o| o.name().to_string()).collect()
    }

    pub fn evaluate(&self, s: &PhaseState) -> Vec<f64> {
        self.entries.iter().map(|o| o.eval(s)).collect()
    }
}

/// Sampled solution of Hamilton's equations.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhaseState>,
    pub monitor_names: Vec<String>,
    /// One row per sample, columns in `monitor_names` order.
    pub monitors: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn new(monitor_names: Vec<String>) -> Self {
        Self { monitor_names, ..Default::default() }
    }

    pub fn push(&mut self, t: f64, s: PhaseState, row: Vec<f64>) {
        debug_assert!(self.times.last().is_none_or(|&last| t > last));
        debug_assert_eq!(row.len(), self.monitor_names.len());
        self.times.push(t);
        self.states.push(s);
        self.monitors.push(row);
    }

    pub(crate) fn record(&mut self, t: f64, s: PhaseState, monitors: &MonitorSet) {
        let row = monitors.evaluate(&s);
        self.push(t, s, row);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> Option<&PhaseState> {
        self.states.last()
    }

    pub fn last_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    /// Column of a named monitor.
    pub fn monitor(&self, name: &str) -> Option<Vec<f64>> {
        let col = self.monitor_names.iter().position(|n| n == name)?;
        Some(self.monitors.iter().map(|row| row[col]).collect())
    }

    /// `max_t |m(t) − m(0)| / scale` for a named monitor, with
    /// `scale = max(floor, |m(0)|)`.
    pub fn max_drift(&self, name: &str, floor: f64) -> Option<f64> {
        let col = self.monitor(name)?;
        let m0 = *col.first()?;
        let scale = m0.abs().max(floor);
        Some(col.iter().map(|m| (m - m0).abs()).fold(0.0, f64::max) / scale)
    }

    /// Structural invariants: equal lengths, strictly increasing times.
    pub fn is_well_formed(&self) -> bool {
        self.times.len() == self.states.len()
            && self.times.len() == self.monitors.len()
            && self.times.windows(2).all(|w| w[1] > w[0])
            && self.monitors.iter().all(|r| r.len() == self.monitor_names.len())
    }
}
