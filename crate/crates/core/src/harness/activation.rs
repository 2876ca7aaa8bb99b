//! Activation-time maps.

use crate::error::{DdfvError, Result};

/// First-crossing tracker fed one frame at a time.
#[derive(Debug, Clone)]
pub struct ActivationTracker {
    threshold: f64,
    prev: Option<(f64, Vec<f64>)>,
    times: Vec<Option<f64>>,
    /// Nodes above the threshold in the previous frame.
    above: Vec<bool>,
    /// Set when a node that was above the threshold drops below it.
    monotone: bool,
    monitor_from: f64,
}

impl ActivationTracker {
    pub fn new(threshold: f64) -> Self {
        Self {
            threshold,
            prev: None,
            times: Vec::new(),
            above: Vec::new(),
            monotone: true,
            monitor_from: f64::NEG_INFINITY,
        }
    }

    /// Only check the monotonicity of `{v ≥ s}` between frames at or after
    /// `t` (an over-stimulated region may relax below the threshold right
    /// after the stimulus before the front forms).
    pub fn monitor_from(mut self, t: f64) -> Self {
        self.monitor_from = t;
        self
    }

    pub fn push(&mut self, time: f64, values: &[f64]) -> Result<()> {
        let s = self.threshold;
        match &self.prev {
            None => {
                self.times = values.iter().map(|&v| (v >= s).then_some(time)).collect();
            }
            Some((t0, old)) => {
                if old.len() != values.len() {
                    return Err(DdfvError::Mismatch(format!(
                        "frame with {} values after frames with {}",
                        values.len(),
                        old.len()
                    )));
                }
                for (i, (&a, &b)) in old.iter().zip(values).enumerate() {
                    if self.times[i].is_none() && b >= s {
                        let theta = if b > a {
                            ((s - a) / (b - a)).clamp(0.0, 1.0)
                        } else {
                            1.0
                        };
                        self.times[i] = Some(t0 + theta * (time - t0));
                    }
                }
            }
        }
        let above: Vec<bool> = values.iter().map(|&v| v >= s).collect();
        let watched = self
            .prev
            .as_ref()
            .is_some_and(|(t0, _)| *t0 >= self.monitor_from);
        if watched && self.above.iter().zip(&above).any(|(&was, &is)| was && !is) {
            self.monotone = false;
        }
        self.above = above;
        self.prev = Some((time, values.to_vec()));
        Ok(())
    }

    /// Activation times so far (`None` for nodes not yet activated).
    pub fn times(&self) -> &[Option<f64>] {
        &self.times
    }

    /// Whether the set `{v ≥ s}` never lost a node between monitored frames.
    pub fn monotone(&self) -> bool {
        self.monotone
    }

    /// Fraction of nodes currently at or above the threshold.
    pub fn active_fraction(&self) -> f64 {
        if self.above.is_empty() {
            0.0
        } else {
            self.above.iter().filter(|&&a| a).count() as f64 / self.above.len() as f64
        }
    }

    pub fn into_times(self) -> Vec<Option<f64>> {
        self.times
    }
}

/// First time each node's value reaches `threshold`, linearly interpolated
/// between frames; `None` where it never does.
pub fn activation_time(
    times: &[f64],
    frames: &[Vec<f64>],
    threshold: f64,
) -> Result<Vec<Option<f64>>> {
    if times.len() != frames.len() {
        return Err(DdfvError::Mismatch(format!(
            "{} times for {} frames",
            times.len(),
            frames.len()
        )));
    }
    let mut t = ActivationTracker::new(threshold);
    for (time, f) in times.iter().zip(frames) {
        t.push(*time, f)?;
    }
    Ok(t.into_times())
}

/// The activation map as plain values, or an undefined-metric error when some
/// node never activated.
pub fn complete_map(map: &[Option<f64>]) -> Result<Vec<f64>> {
    map.iter()
        .enumerate()
        .map(|(i, t)| {
            t.ok_or_else(|| DdfvError::UndefinedMetric(format!("node {i} never activated")))
        })
        .collect()
}
