//! Physical path parameters to slot-model inputs, and throughput per second.

use crate::error::{Error, Result};
use crate::order_search::vora_swap;
use crate::swap_engine::{EvalMode, LinkSpec, PathSpec, SwapOrder};

/// Capacities at or below this are flagged: rounding is coarse there.
pub const SMALL_CAPACITY: u64 = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalLink {
    pub length_km: f64,
    pub memory_pairs: u32,
    /// Measured attempts per second; overrides the hardware model.
    pub attempt_rate_per_s: Option<f64>,
    /// Measured success probability per attempt; overrides the hardware model.
    pub success_per_attempt: Option<f64>,
}

impl PhysicalLink {
    pub fn new(length_km: f64, memory_pairs: u32) -> Self {
        Self { length_km, memory_pairs, attempt_rate_per_s: None, success_per_attempt: None }
    }

    pub fn measured(length_km: f64, attempt_rate_per_s: f64, success_per_attempt: f64) -> Self {
        Self {
            length_km,
            memory_pairs: 1,
            attempt_rate_per_s: Some(attempt_rate_per_s),
            success_per_attempt: Some(success_per_attempt),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_km > 0.0) || !self.length_km.is_finite() {
            return Err(Error::InvalidParameter(format!("link length {} km must be positive", self.length_km)));
        }
        if self.memory_pairs == 0 {
            return Err(Error::InvalidParameter("a link needs at least one memory pair".into()));
        }
        if let Some(a) = self.attempt_rate_per_s {
            if !(a > 0.0) || !a.is_finite() {
                return Err(Error::InvalidParameter(format!("attempt rate {a} must be positive")));
            }
        }
        if let Some(r) = self.success_per_attempt {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::InvalidParameter(format!("success per attempt {r} must lie in (0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HardwareProfile {
    pub attenuation_db_per_km: f64,
    pub light_speed_km_per_s: f64,
    pub detector_efficiency: f64,
    pub memory_efficiency: f64,
    /// Link round trips per generation attempt.
    pub attempt_latency_factor: f64,
    pub protocol_prefactor: f64,
}

impl Default for HardwareProfile {
    fn default() -> Self {
        Self {
            attenuation_db_per_km: 0.2,
            light_speed_km_per_s: 2e5,
            detector_efficiency: 0.95,
            memory_efficiency: 0.95,
            attempt_latency_factor: 3.5,
            protocol_prefactor: 0.5,
        }
    }
}

impl HardwareProfile {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("attenuation_db_per_km", self.attenuation_db_per_km),
            ("light_speed_km_per_s", self.light_speed_km_per_s),
            ("detector_efficiency", self.detector_efficiency),
            ("memory_efficiency", self.memory_efficiency),
            ("attempt_latency_factor", self.attempt_latency_factor),
            ("protocol_prefactor", self.protocol_prefactor),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be positive")));
            }
        }
        if self.detector_efficiency > 1.0 || self.memory_efficiency > 1.0 {
            return Err(Error::InvalidParameter("efficiencies cannot exceed 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingParams {
    pub coherence_time_s: f64,
    pub herald_delay_s: f64,
    pub app_delay_s: f64,
}

impl TimingParams {
    pub fn new(coherence_time_s: f64, herald_delay_s: f64, app_delay_s: f64) -> Result<Self> {
        let t = Self { coherence_time_s, herald_delay_s, app_delay_s };
        t.validate()?;
        Ok(t)
    }

    pub fn with_coherence(coherence_time_s: f64) -> Result<Self> {
        Self::new(coherence_time_s, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.coherence_time_s, self.herald_delay_s, self.app_delay_s];
        if all.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter("timing values must be finite and non-negative".into()));
        }
        if self.coherence_time_s <= self.herald_delay_s + self.app_delay_s {
            return Err(Error::InvalidParameter(format!(
                "coherence time {} s does not exceed the delays {} s",
                self.coherence_time_s,
                self.herald_delay_s + self.app_delay_s
            )));
        }
        Ok(())
    }

    /// Longest a generated pair can wait before it must be used.
    pub fn cutoff_s(&self) -> f64 {
        self.coherence_time_s - self.herald_delay_s - self.app_delay_s
    }
}

/// Attempts per second and success probability per attempt of one link.
pub fn link_rates(link: &PhysicalLink, hw: &HardwareProfile) -> (f64, f64) {
    let attempts = link.attempt_rate_per_s.unwrap_or_else(|| {
        link.memory_pairs as f64 * hw.light_speed_km_per_s / (hw.attempt_latency_factor * link.length_km)
    });
    let success = link.success_per_attempt.unwrap_or_else(|| {
        let eta = hw.detector_efficiency * hw.memory_efficiency;
        let loss = 10f64.powf(-hw.attenuation_db_per_km * link.length_km / 10.0);
        (hw.protocol_prefactor * eta * eta * loss).min(1.0)
    });
    (attempts, success)
}

/// Mean time until both of two exponential clocks have fired.
pub fn expected_wait_both(rate1: f64, rate2: f64) -> f64 {
    1.0 / rate1 + 1.0 / rate2 - 1.0 / (rate1 + rate2)
}

/// Slot length for a two-link path: the wait for both links, capped by the cutoff.
pub fn select_time_slot(rates: (f64, f64), timing: &TimingParams) -> f64 {
    expected_wait_both(rates.0, rates.1).min(timing.cutoff_s())
}

/// Light round trip over the whole path.
pub fn round_trip_time(links: &[PhysicalLink], hw: &HardwareProfile) -> f64 {
    let total: f64 = links.iter().map(|l| l.length_km).sum();
    2.0 * total / hw.light_speed_km_per_s
}

/// One-way propagation over the longest link, a natural heralding delay.
pub fn heralding_delay(links: &[PhysicalLink], hw: &HardwareProfile) -> f64 {
    links.iter().map(|l| l.length_km).fold(0.0, f64::max) / hw.light_speed_km_per_s
}

/// Slot length of a path: the two-link wait rule, the coherence time less the
/// round trip for longer paths, and the cutoff for a single link.
pub fn path_slot(links: &[PhysicalLink], hw: &HardwareProfile, timing: &TimingParams) -> Result<f64> {
    let slot_s = match links {
        [] => return Err(Error::InvalidPath("a path needs at least one link".into())),
        [_] => timing.cutoff_s(),
        [a, b] => {
            let ((a1, r1), (a2, r2)) = (link_rates(a, hw), link_rates(b, hw));
            select_time_slot((a1 * r1, a2 * r2), timing)
        }
        _ => timing.coherence_time_s - round_trip_time(links, hw),
    };
    if !(slot_s > 0.0) {
        return Err(Error::SlotNonpositive { slot_s });
    }
    Ok(slot_s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputEstimate {
    pub ent_per_s: f64,
    pub slot_s: f64,
    pub path: PathSpec,
    pub order: SwapOrder,
    /// Expected end-to-end entanglements per slot.
    pub ent_per_slot: f64,
    /// Links whose rounded capacity is at most [`SMALL_CAPACITY`].
    pub small_capacity_links: Vec<usize>,
}

/// Throughput in entanglements per second of a physical path.
///
/// A single link has no swaps: its rate is attempts times success, and the
/// slot reported is the cutoff.
pub fn estimate_path_throughput(
    links: &[PhysicalLink],
    swap_probs: &[f64],
    hw: &HardwareProfile,
    timing: &TimingParams,
    mode: EvalMode,
) -> Result<ThroughputEstimate> {
    if links.is_empty() {
        return Err(Error::InvalidPath("a path needs at least one link".into()));
    }
    if swap_probs.len() + 1 != links.len() {
        return Err(Error::InvalidPath(format!(
            "{} links need {} swap probabilities, got {}",
            links.len(),
            links.len() - 1,
            swap_probs.len()
        )));
    }
    links.iter().try_for_each(PhysicalLink::validate)?;
    hw.validate()?;
    timing.validate()?;

    let rates: Vec<(f64, f64)> = links.iter().map(|l| link_rates(l, hw)).collect();
    let slot_s = path_slot(links, hw, timing)?;

    let specs: Vec<LinkSpec> = rates
        .iter()
        .map(|&(a, r)| LinkSpec { capacity: ((a * slot_s).round() as u64).max(1), success: r })
        .collect();
    let small_capacity_links =
        specs.iter().enumerate().filter(|(_, l)| l.capacity <= SMALL_CAPACITY).map(|(i, _)| i).collect();
    let path = PathSpec::new(specs, swap_probs.to_vec())?;

    if links.len() == 1 {
        let (a, r) = rates[0];
        return Ok(ThroughputEstimate {
            ent_per_s: a * r,
            slot_s,
            ent_per_slot: a * r * slot_s,
            order: SwapOrder::new(Vec::new()),
            path,
            small_capacity_links,
        });
    }

    let best = vora_swap(&path, mode)?;
    let period = slot_s + timing.herald_delay_s + timing.app_delay_s;
    Ok(ThroughputEstimate {
        ent_per_s: best.score / period,
        slot_s,
        ent_per_slot: best.score,
        order: best.order,
        path,
        small_capacity_links,
    })
}
