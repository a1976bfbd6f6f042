//! Latency-coupled noise parameters: coherence times fitted to the
//! physical error rate, and a Pauli-twirled depolarizing channel for
//! the idle error a circuit of a given duration accumulates. The
//! records this module exports feed external stabilizer-simulator and
//! decoder pipelines; no decoding happens here.

use std::fmt::{self, Display, Formatter};

use serde::{Deserialize, Serialize};

use crate::compiler::ExecStats;

/// How coherence time is interpolated between the anchor points
/// p = 1e-4 -> 100 s and p = 1e-3 -> 10 s.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoherenceFit {
    /// Power law `T = 1/(100 p)`; extrapolates sensibly below 1e-4.
    LogLog,
    /// Linear in log10(p): `T = 100 - 90 (log10 p + 4)`.
    LogLinear,
}

impl Default for CoherenceFit {
    fn default() -> Self {
        Self::LogLog
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseError {
    ProbabilityOutOfRange { p: f64 },
    BadParams(String),
    NoCompiledSchedule,
}

impl Display for NoiseError {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Self::ProbabilityOutOfRange { p } => write!(f, "probability {p} outside (0, 1)"),
            Self::BadParams(msg) => write!(f, "invalid noise parameters: {msg}"),
            Self::NoCompiledSchedule => write!(f, "no compiled schedule"),
        }
    }
}

impl std::error::Error for NoiseError {}

/// Coherence time in seconds for a physical error rate, used for both
/// T1 and T2.
pub fn coherence_from_p(p: f64, fit: CoherenceFit) -> Result<f64, NoiseError> {
    if !(p > 0.0 && p < 1.0) || !p.is_finite() {
        return Err(NoiseError::ProbabilityOutOfRange { p });
    }
    Ok(match fit {
        CoherenceFit::LogLog => 0.01 / p,
        CoherenceFit::LogLinear => 100.0 - 90.0 * (p.log10() + 4.0),
    })
}

/// Inputs of the twirl: base error rate, coherence times, and the
/// circuit latency every qubit idles through.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub p_base: f64,
    /// Decay time T1, seconds.
    pub t1: f64,
    /// Dephasing time T2, seconds.
    pub t2: f64,
    /// Circuit latency, seconds.
    pub t_exec: f64,
}

impl NoiseParams {
    pub fn validate(&self) -> Result<(), NoiseError> {
        if !(0.0..=1.0).contains(&self.p_base) {
            return Err(NoiseError::BadParams(format!("p_base = {}", self.p_base)));
        }
        if self.t1 <= 0.0 || self.t2 <= 0.0 {
            return Err(NoiseError::BadParams("coherence times must be positive".into()));
        }
        if self.t2 > 2.0 * self.t1 {
            return Err(NoiseError::BadParams(format!(
                "t2 = {} exceeds 2*t1 = {}",
                self.t2,
                2.0 * self.t1
            )));
        }
        if self.t_exec < 0.0 {
            return Err(NoiseError::BadParams("t_exec must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Pauli rates of the twirled idle channel plus the combined total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepolRates {
    pub px: f64,
    pub py: f64,
    pub pz: f64,
    pub p_twirl: f64,
    /// `p_base + p_twirl`, clamped to 1 with `clamped` set when the
    /// sum overflows.
    pub p_total: f64,
    pub clamped: bool,
}

/// Pauli twirl of amplitude damping (T1) combined with pure dephasing
/// (T2) over the idle time `t_exec`:
///
/// ```text
/// px = py = (1 - e^(-t/T1)) / 4
/// pz      = (1 - e^(-t/T2)) / 2 - (1 - e^(-t/T1)) / 4
/// ```
///
/// At t = 0 all rates vanish; as t -> inf with T1 = T2 the channel
/// reaches the fully depolarized (1/4, 1/4, 1/4).
pub fn twirl_depolarize(params: &NoiseParams) -> Result<DepolRates, NoiseError> {
    params.validate()?;
    let decay = 1.0 - (-params.t_exec / params.t1).exp();
    let dephase = 1.0 - (-params.t_exec / params.t2).exp();
    let px = decay / 4.0;
    let py = px;
    let pz = dephase / 2.0 - decay / 4.0;
    let p_twirl = px + py + pz;
    let raw_total = params.p_base + p_twirl;
    let clamped = raw_total > 1.0;
    Ok(DepolRates {
        px,
        py,
        pz,
        p_twirl,
        p_total: if clamped { 1.0 } else { raw_total },
        clamped,
    })
}

/// One exported noise record, consumed by decoder pipelines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRecord {
    pub code: String,
    pub layout: String,
    pub mode: String,
    /// Circuit latency, seconds.
    pub t_exec: f64,
    pub p_base: f64,
    #[serde(rename = "T1")]
    pub t1: f64,
    #[serde(rename = "T2")]
    pub t2: f64,
    pub px: f64,
    pub py: f64,
    pub pz: f64,
    pub p_total: f64,
}

impl NoiseRecord {
    /// Conventional file name: `noise_<code>_<layout>_<mode>_<p>.json`.
    pub fn file_name(&self) -> String {
        format!("noise_{}_{}_{}_{}.json", self.code, self.layout, self.mode, self.p_base)
    }
}

/// Derive the full noise record for one compiled experiment.
pub fn export_noise_model(
    code: &str,
    layout: &str,
    mode: &str,
    stats: &ExecStats,
    p_base: f64,
    fit: CoherenceFit,
) -> Result<NoiseRecord, NoiseError> {
    if stats.component_times.is_empty() {
        return Err(NoiseError::NoCompiledSchedule);
    }
    let coherence = coherence_from_p(p_base, fit)?;
    let t_exec = stats.total_time * 1e-6;
    let rates = twirl_depolarize(&NoiseParams { p_base, t1: coherence, t2: coherence, t_exec })?;
    Ok(NoiseRecord {
        code: code.to_string(),
        layout: layout.to_string(),
        mode: mode.to_string(),
        t_exec,
        p_base,
        t1: coherence,
        t2: coherence,
        px: rates.px,
        py: rates.py,
        pz: rates.pz,
        p_total: rates.p_total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coherence_hits_both_anchors_exactly() {
        assert_eq!(coherence_from_p(1e-4, CoherenceFit::LogLog).unwrap(), 100.0);
        assert_eq!(coherence_from_p(1e-3, CoherenceFit::LogLog).unwrap(), 10.0);
        let lin4 = coherence_from_p(1e-4, CoherenceFit::LogLinear).unwrap();
        let lin3 = coherence_from_p(1e-3, CoherenceFit::LogLinear).unwrap();
        assert!((lin4 - 100.0).abs() < 1e-9);
        assert!((lin3 - 10.0).abs() < 1e-9);
    }

    #[test]
    fn coherence_log_midpoint() {
        let p = 10f64.powf(-3.5);
        let t = coherence_from_p(p, CoherenceFit::LogLog).unwrap();
        assert!((t - 10f64.powf(1.5)).abs() < 1e-9, "t = {t}");
    }

    #[test]
    fn coherence_rejects_out_of_range() {
        assert!(coherence_from_p(0.0, CoherenceFit::LogLog).is_err());
        assert!(coherence_from_p(1.0, CoherenceFit::LogLog).is_err());
        assert!(coherence_from_p(-0.1, CoherenceFit::LogLinear).is_err());
    }

    #[test]
    fn coherence_is_strictly_decreasing() {
        for fit in [CoherenceFit::LogLog, CoherenceFit::LogLinear] {
            let mut prev = f64::INFINITY;
            for exp in [-5.0f64, -4.5, -4.0, -3.5, -3.0, -2.5] {
                let t = coherence_from_p(10f64.powf(exp), fit).unwrap();
                assert!(t < prev);
                prev = t;
            }
        }
    }

    #[test]
    fn twirl_zero_time_is_noiseless() {
        let rates = twirl_depolarize(&NoiseParams { p_base: 1e-3, t1: 10.0, t2: 10.0, t_exec: 0.0 })
            .unwrap();
        assert_eq!((rates.px, rates.py, rates.pz), (0.0, 0.0, 0.0));
        assert_eq!(rates.p_total, 1e-3);
    }

    #[test]
    fn twirl_long_time_fully_depolarizes() {
        let rates = twirl_depolarize(&NoiseParams { p_base: 0.0, t1: 1.0, t2: 1.0, t_exec: 1e6 })
            .unwrap();
        assert!((rates.px - 0.25).abs() < 1e-12);
        assert!((rates.py - 0.25).abs() < 1e-12);
        assert!((rates.pz - 0.25).abs() < 1e-12);
    }

    #[test]
    fn twirl_closed_form_value() {
        let rates = twirl_depolarize(&NoiseParams { p_base: 0.0, t1: 10.0, t2: 10.0, t_exec: 0.1 })
            .unwrap();
        let expect = (1.0 - (-0.01f64).exp()) / 4.0;
        assert!((rates.px - expect).abs() < 1e-15);
        assert!((rates.px - 2.4879e-3).abs() < 1e-6);
        assert_eq!(rates.px, rates.py);
    }

    #[test]
    fn twirl_small_t_linearization() {
        // series expansion of the implemented channel:
        // p_twirl ~ t/(4 T1) + t/(2 T2)
        for (t1, t2) in [(10.0f64, 10.0f64), (50.0, 80.0), (100.0, 120.0)] {
            let t = t1.min(t2) / 100.0;
            let rates =
                twirl_depolarize(&NoiseParams { p_base: 0.0, t1, t2, t_exec: t }).unwrap();
            let linear = t / (4.0 * t1) + t / (2.0 * t2);
            let err = (rates.p_twirl - linear).abs() / linear;
            assert!(err < 0.01, "relative error {err}");
        }
    }

    #[test]
    fn twirl_monotone_in_time() {
        let (t1, t2) = (10.0, 15.0); // within t1 <= t2 <= 2 t1
        let mut prev = (0.0, 0.0, 0.0);
        for step in 1..200 {
            let t = step as f64 * 0.5;
            let r = twirl_depolarize(&NoiseParams { p_base: 0.0, t1, t2, t_exec: t }).unwrap();
            assert!(r.px >= prev.0 && r.py >= prev.1 && r.pz >= prev.2);
            assert!(r.px >= 0.0 && r.pz >= 0.0 && r.p_twirl <= 0.75 + 1e-12);
            prev = (r.px, r.py, r.pz);
        }
    }

    #[test]
    fn twirl_rejects_t2_above_twice_t1() {
        let err = twirl_depolarize(&NoiseParams { p_base: 0.0, t1: 1.0, t2: 2.5, t_exec: 1.0 })
            .unwrap_err();
        assert!(matches!(err, NoiseError::BadParams(_)));
    }

    #[test]
    fn p_total_clamps_with_flag() {
        let rates = twirl_depolarize(&NoiseParams { p_base: 0.9, t1: 1.0, t2: 1.0, t_exec: 100.0 })
            .unwrap();
        assert!(rates.clamped);
        assert_eq!(rates.p_total, 1.0);
    }

    #[test]
    fn export_rejects_empty_stats() {
        let stats = crate::compiler::ExecStats {
            total_time: 0.0,
            component_times: Default::default(),
            roadblock_count: 0,
            roadblock_us: 0.0,
            parallel_fraction: 1.0,
        };
        let err =
            export_noise_model("c", "l", "m", &stats, 1e-4, CoherenceFit::LogLog).unwrap_err();
        assert_eq!(err, NoiseError::NoCompiledSchedule);
    }
}
