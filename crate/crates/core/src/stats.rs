//! Born-rule detection statistics, seeded coincidence sampling and the derived
//! correlation, marginal and table reports.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::optics::{build_mz, build_rto, Apparatus, MachZehnder};
use crate::state::{DensityOperator, Subsystem};

/// Tolerance on probability sums and on the no-signaling audit.
pub const PROB_TOL: f64 = 1e-12;

/// Detector pairs in sampling order.
pub const OUTCOMES: [(usize, usize); 4] = [(1, 1), (1, 2), (2, 1), (2, 2)];

/// `p_jk = P(Sj & Ak)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointDistribution {
    pub p11: f64,
    pub p12: f64,
    pub p21: f64,
    pub p22: f64,
}

impl JointDistribution {
    pub fn new(p11: f64, p12: f64, p21: f64, p22: f64) -> Result<Self> {
        let d = Self { p11, p12, p21, p22 };
        let ps = d.as_array();
        if ps
            .iter()
            .any(|p| !p.is_finite() || !(-PROB_TOL..=1.0 + PROB_TOL).contains(p))
        {
            return Err(Error::InvalidDistribution(format!(
                "probabilities {ps:?} outside [0, 1]"
            )));
        }
        let total: f64 = ps.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(d)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.p11, self.p12, self.p21, self.p22]
    }

    pub fn p_same(&self) -> f64 {
        self.p11 + self.p22
    }

    pub fn p_diff(&self) -> f64 {
        self.p12 + self.p21
    }

    /// `C = P(same) − P(diff)`.
    pub fn correlation(&self) -> f64 {
        self.p_same() - self.p_diff()
    }

    pub fn marginals(&self) -> MarginalDistribution {
        MarginalDistribution {
            p_s1: self.p11 + self.p12,
            p_s2: self.p21 + self.p22,
            p_a1: self.p11 + self.p21,
            p_a2: self.p12 + self.p22,
        }
    }
}

pub fn p_same(d: &JointDistribution) -> f64 {
    d.p_same()
}

pub fn p_diff(d: &JointDistribution) -> f64 {
    d.p_diff()
}

pub fn degree_of_correlation(d: &JointDistribution) -> f64 {
    d.correlation()
}

pub fn marginals(d: &JointDistribution) -> MarginalDistribution {
    d.marginals()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalDistribution {
    pub p_s1: f64,
    pub p_s2: f64,
    pub p_a1: f64,
    pub p_a2: f64,
}

impl MarginalDistribution {
    /// Largest distance of any marginal from 1/2.
    pub fn deviation_from_uniform(&self) -> f64 {
        [self.p_s1, self.p_s2, self.p_a1, self.p_a2]
            .into_iter()
            .map(|p| (p - 0.5).abs())
            .fold(0.0, f64::max)
    }
}

/// Calibrated coincidence probabilities `|⟨j,k| U_S ⊗ U_A |source⟩|²`.
pub fn joint_probabilities(app: &Apparatus) -> JointDistribution {
    from_probabilities(app.output_state().probabilities())
}

/// Coincidence probabilities before the phase-origin shift.
pub fn raw_joint_probabilities(app: &Apparatus) -> JointDistribution {
    from_probabilities(app.raw_output_state().probabilities())
}

fn from_probabilities(p: [[f64; 2]; 2]) -> JointDistribution {
    JointDistribution {
        p11: p[0][0],
        p12: p[0][1],
        p21: p[1][0],
        p22: p[1][1],
    }
}

/// Calibrated `(P(D1), P(D2))`.
pub fn single_photon_probs(mz: &MachZehnder) -> Result<(f64, f64)> {
    let p = mz.output()?.probabilities();
    Ok((p[0], p[1]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TrialCounts {
    pub n11: u64,
    pub n12: u64,
    pub n21: u64,
    pub n22: u64,
    pub seed: u64,
    pub total: u64,
}

/// Draws `n` coincidences by inverting the cumulative distribution over
/// `(p11, p12, p21, p22)`.
///
/// Generator: ChaCha20 (`rand_chacha::ChaCha20Rng`) seeded with `seed_from_u64`, one
/// uniform `f64` in `[0, 1)` per trial built from the top 53 bits of a `u64` draw. The
/// stream is specified independently of platform and word size.
pub fn sample_trials(d: &JointDistribution, n: u64, seed: u64) -> Result<TrialCounts> {
    if n == 0 {
        return Err(Error::ZeroTrials);
    }
    let c1 = d.p11;
    let c2 = c1 + d.p12;
    let c3 = c2 + d.p21;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut counts = [0u64; 4];
    for _ in 0..n {
        let u: f64 = rng.gen();
        let k = if u < c1 {
            0
        } else if u < c2 {
            1
        } else if u < c3 {
            2
        } else {
            3
        };
        counts[k] += 1;
    }
    Ok(TrialCounts {
        n11: counts[0],
        n12: counts[1],
        n21: counts[2],
        n22: counts[3],
        seed,
        total: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationEstimate {
    pub c_hat: f64,
    /// `sqrt((1 − ĉ²)/total)`.
    pub std_err: f64,
    pub total: u64,
}

pub fn estimate_correlation(t: &TrialCounts) -> Result<CorrelationEstimate> {
    if t.total == 0 {
        return Err(Error::ZeroTrials);
    }
    let total = t.total as f64;
    let same = (t.n11 + t.n22) as f64;
    let diff = (t.n12 + t.n21) as f64;
    let c_hat = (same - diff) / total;
    let std_err = ((1.0 - c_hat * c_hat).max(0.0) / total).sqrt();
    Ok(CorrelationEstimate {
        c_hat,
        std_err,
        total: t.total,
    })
}

/// Whether an estimate covers `target` at `k` standard errors.
///
/// `PROB_TOL` is added to the half-width so that degenerate points (`C = ±1`,
/// zero standard error) are compared at the analytic accuracy.
pub fn within_std_errs(est: &CorrelationEstimate, target: f64, k: f64) -> bool {
    (est.c_hat - target).abs() <= k * est.std_err + PROB_TOL
}

/// One audited setting.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditPoint {
    pub phi_s: f64,
    pub phi_a: f64,
    pub marginals: MarginalDistribution,
    /// Reduced operators of S and A; absent when auditing bare distributions.
    pub reduced: Option<(DensityOperator, DensityOperator)>,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoSignalingReport {
    pub points: Vec<AuditPoint>,
    pub max_deviation: f64,
    /// Setting with the largest deviation, when it exceeds the tolerance.
    pub offending: Option<(f64, f64)>,
}

impl NoSignalingReport {
    pub fn passed(&self) -> bool {
        self.offending.is_none()
    }

    fn from_points(points: Vec<AuditPoint>) -> Self {
        let worst = points
            .iter()
            .max_by(|a, b| a.deviation.total_cmp(&b.deviation));
        let max_deviation = worst.map_or(0.0, |p| p.deviation);
        let offending = worst
            .filter(|p| p.deviation > PROB_TOL)
            .map(|p| (p.phi_s, p.phi_a));
        Self {
            points,
            max_deviation,
            offending,
        }
    }
}

/// Checks that every local marginal and reduced state is `1/2` at each setting.
pub fn no_signaling_audit(grid: &[(f64, f64)]) -> Result<NoSignalingReport> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument(
            "no-signaling audit needs a non-empty grid".into(),
        ));
    }
    let points = grid
        .par_iter()
        .map(|&(phi_s, phi_a)| {
            let app = build_rto(phi_s, phi_a)?;
            let marginals = joint_probabilities(&app).marginals();
            let out = app.output_state();
            let rho_s = out.partial_trace(Subsystem::S);
            let rho_a = out.partial_trace(Subsystem::A);
            let deviation = marginals
                .deviation_from_uniform()
                .max(rho_s.deviation_from_maximally_mixed())
                .max(rho_a.deviation_from_maximally_mixed());
            Ok(AuditPoint {
                phi_s,
                phi_a,
                marginals,
                reduced: Some((rho_s, rho_a)),
                deviation,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NoSignalingReport::from_points(points))
}

/// Audits externally supplied distributions, e.g. measured or corrupted ones.
pub fn audit_distributions(entries: &[((f64, f64), JointDistribution)]) -> NoSignalingReport {
    let points = entries
        .iter()
        .map(|&((phi_s, phi_a), d)| {
            let marginals = d.marginals();
            AuditPoint {
                phi_s,
                phi_a,
                marginals,
                reduced: None,
                deviation: marginals.deviation_from_uniform(),
            }
        })
        .collect();
    NoSignalingReport::from_points(points)
}

/// `n × n` grid over `[0, 2π)²`.
pub fn phase_grid(n: usize) -> Vec<(f64, f64)> {
    let step = 2.0 * PI / n as f64;
    (0..n)
        .flat_map(|i| (0..n).map(move |j| (i as f64 * step, j as f64 * step)))
        .collect()
}

/// `steps` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>> {
    if steps < 2 {
        return Err(Error::TooFewSteps(steps));
    }
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::NonFinite("sweep range"));
    }
    let h = (hi - lo) / (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            if i == steps - 1 {
                hi
            } else {
                lo + i as f64 * h
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub delta_min: f64,
    pub delta_max: f64,
    pub steps: usize,
    pub trials: u64,
    /// Point `i` is sampled with seed `base_seed + i` (wrapping).
    pub base_seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            delta_min: 0.0,
            delta_max: 2.0 * PI,
            steps: 25,
            trials: 100_000,
            base_seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub delta: f64,
    pub c_analytic: f64,
    pub c_sampled: f64,
    pub std_err: f64,
    pub joint: JointDistribution,
    pub counts: TrialCounts,
}

/// Correlation versus `Δ = φ_S − φ_A`, realized as `build_rto(Δ, 0)`.
///
/// Points are evaluated in parallel and returned in step order; the output does not
/// depend on scheduling.
pub fn correlation_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if cfg.trials == 0 {
        return Err(Error::ZeroTrials);
    }
    let deltas = linspace(cfg.delta_min, cfg.delta_max, cfg.steps)?;
    deltas
        .par_iter()
        .enumerate()
        .map(|(i, &delta)| {
            let joint = joint_probabilities(&build_rto(delta, 0.0)?);
            let counts = sample_trials(&joint, cfg.trials, cfg.base_seed.wrapping_add(i as u64))?;
            let est = estimate_correlation(&counts)?;
            Ok(SweepRow {
                delta,
                c_analytic: joint.correlation(),
                c_sampled: est.c_hat,
                std_err: est.std_err,
                joint,
                counts,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MzRow {
    pub phase: f64,
    pub p_d1: f64,
    pub p_d2: f64,
}

pub fn mz_sweep(phi_min: f64, phi_max: f64, steps: usize) -> Result<Vec<MzRow>> {
    linspace(phi_min, phi_max, steps)?
        .into_iter()
        .map(|phase| {
            let (p_d1, p_d2) = single_photon_probs(&build_mz(phase)?)?;
            Ok(MzRow { phase, p_d1, p_d2 })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table1Row {
    pub phase: f64,
    pub phase_label: &'static str,
    pub p_d1: f64,
    pub p_d2: f64,
    pub p_same: f64,
    pub p_diff: f64,
    /// Present where the commonly printed table disagrees with `(1 ± cos φ)/2`.
    pub discrepancy_note: Option<String>,
}

/// Values printed for the `π/4` and `3π/4` rows of the reference table, as
/// `(P(D1) = P(same), P(D2) = P(diff))`.
pub const PRINTED_QUARTER_ROWS: [(f64, f64, f64); 2] =
    [(FRAC_PI_4, 0.71, 0.29), (3.0 * FRAC_PI_4, 0.29, 0.71)];

/// Single-photon and entangled-pair statistics at `φ ∈ {0, π/4, π/2, 3π/4, π}`.
///
/// The entangled column is `build_rto(φ, 0)`; both columns come from the simulation.
pub fn table1() -> Result<Vec<Table1Row>> {
    const PHASES: [(f64, &str); 5] = [
        (0.0, "0"),
        (FRAC_PI_4, "pi/4"),
        (FRAC_PI_2, "pi/2"),
        (3.0 * FRAC_PI_4, "3pi/4"),
        (PI, "pi"),
    ];
    PHASES
        .iter()
        .map(|&(phase, phase_label)| {
            let (p_d1, p_d2) = single_photon_probs(&build_mz(phase)?)?;
            let joint = joint_probabilities(&build_rto(phase, 0.0)?);
            let discrepancy_note = PRINTED_QUARTER_ROWS
                .iter()
                .find(|(p, _, _)| *p == phase)
                .map(|&(_, first, second)| {
                    format!(
                        "printed table lists {:.0}%/{:.0}% here; (1+cos phi)/2 gives {:.2}%/{:.2}%; the printed value matches cos(phi) used as a probability",
                        first * 100.0,
                        second * 100.0,
                        p_d1 * 100.0,
                        p_d2 * 100.0
                    )
                });
            Ok(Table1Row {
                phase,
                phase_label,
                p_d1,
                p_d2,
                p_same: joint.p_same(),
                p_diff: joint.p_diff(),
                discrepancy_note,
            })
        })
        .collect()
}
