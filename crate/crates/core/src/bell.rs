//! CHSH analysis of the simulated two-station correlations.
//!
//! Convention: `S = E(a, b) + E(a, b') + E(a', b) − E(a', b')`, with `a, a'` the
//! settings of station S and `b, b'` those of station A.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::optics::build_rto;
use crate::stats::{estimate_correlation, joint_probabilities, sample_trials, CorrelationEstimate};

/// Local-realist bound on `|S|`.
pub const CLASSICAL_BOUND: f64 = 2.0;
/// `|S|` must exceed the classical bound by more than this to count as a violation;
/// keeps rounding at `|S| = 2` from reading as a violation.
pub const VIOLATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshSettings {
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub b_prime: f64,
}

impl ChshSettings {
    pub fn new(a: f64, a_prime: f64, b: f64, b_prime: f64) -> Result<Self> {
        if [a, a_prime, b, b_prime].iter().all(|x| x.is_finite()) {
            Ok(Self {
                a,
                a_prime,
                b,
                b_prime,
            })
        } else {
            Err(Error::NonFinite("CHSH settings"))
        }
    }

    /// `a = 0, a' = π/2, b = π/4, b' = −π/4`.
    pub fn canonical() -> Self {
        Self::family(PI / 4.0)
    }

    /// One-parameter family `a = 0, a' = 2θ, b = θ, b' = −θ`.
    pub fn family(theta: f64) -> Self {
        Self {
            a: 0.0,
            a_prime: 2.0 * theta,
            b: theta,
            b_prime: -theta,
        }
    }

    /// Setting pairs in the order `(a,b), (a,b'), (a',b), (a',b')`.
    pub fn pairs(&self) -> [(f64, f64); 4] {
        [
            (self.a, self.b),
            (self.a, self.b_prime),
            (self.a_prime, self.b),
            (self.a_prime, self.b_prime),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshResult {
    pub e_ab: f64,
    pub e_ab_prime: f64,
    pub e_a_prime_b: f64,
    pub e_a_prime_b_prime: f64,
    pub s_value: f64,
    pub violated: bool,
}

impl ChshResult {
    pub fn from_correlations([e_ab, e_ab_prime, e_a_prime_b, e_a_prime_b_prime]: [f64; 4]) -> Self {
        let s_value = e_ab + e_ab_prime + e_a_prime_b - e_a_prime_b_prime;
        Self {
            e_ab,
            e_ab_prime,
            e_a_prime_b,
            e_a_prime_b_prime,
            s_value,
            violated: is_violation(s_value),
        }
    }
}

pub fn is_violation(s_value: f64) -> bool {
    s_value.abs() > CLASSICAL_BOUND + VIOLATION_TOL
}

/// `E(φ_S, φ_A)` from the calibrated unitary pipeline.
pub fn correlation_at(phi_s: f64, phi_a: f64) -> Result<f64> {
    Ok(joint_probabilities(&build_rto(phi_s, phi_a)?).correlation())
}

pub fn chsh_statistic(settings: &ChshSettings) -> Result<ChshResult> {
    let mut e = [0.0; 4];
    for (slot, (x, y)) in e.iter_mut().zip(settings.pairs()) {
        *slot = correlation_at(x, y)?;
    }
    Ok(ChshResult::from_correlations(e))
}

/// CHSH from sampled coincidences; correlation `i` uses seed `base_seed + i`.
pub fn chsh_statistic_sampled(
    settings: &ChshSettings,
    trials: u64,
    base_seed: u64,
) -> Result<(ChshResult, [CorrelationEstimate; 4])> {
    let mut estimates = Vec::with_capacity(4);
    for (i, (x, y)) in settings.pairs().into_iter().enumerate() {
        let joint = joint_probabilities(&build_rto(x, y)?);
        let counts = sample_trials(&joint, trials, base_seed.wrapping_add(i as u64))?;
        estimates.push(estimate_correlation(&counts)?);
    }
    let estimates: [CorrelationEstimate; 4] = estimates.try_into().expect("four settings");
    let result = ChshResult::from_correlations(estimates.map(|e| e.c_hat));
    Ok((result, estimates))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshMaximum {
    pub settings: ChshSettings,
    pub s_value: f64,
}

/// Maximizes `|S|` with `a = 0` fixed.
///
/// A coarse grid of spacing `grid_step` over `[−π, π)` for `a', b, b'` is searched
/// exhaustively with correlations tabulated through the pipeline, then each coordinate
/// is refined by golden-section search within one grid step.
pub fn maximize_chsh(grid_step: f64) -> Result<ChshMaximum> {
    if !(grid_step > 0.0 && grid_step <= PI / 8.0 + 1e-15) {
        return Err(Error::InvalidArgument(format!(
            "grid step {grid_step} outside (0, π/8]"
        )));
    }
    let n = (2.0 * PI / grid_step).round() as usize;
    let grid: Vec<f64> = (0..n).map(|k| -PI + k as f64 * grid_step).collect();

    // e_zero[j] = E(0, grid[j]); table[i][j] = E(grid[i], grid[j])
    let e_zero = grid
        .iter()
        .map(|&y| correlation_at(0.0, y))
        .collect::<Result<Vec<_>>>()?;
    let table = grid
        .par_iter()
        .map(|&x| {
            grid.iter()
                .map(|&y| correlation_at(x, y))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let (best_i, best_j, best_k, _) = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = &table[i];
            let mut best = (i, 0, 0, f64::NEG_INFINITY);
            for j in 0..n {
                for k in 0..n {
                    let s = (e_zero[j] + e_zero[k] + row[j] - row[k]).abs();
                    if s > best.3 {
                        best = (i, j, k, s);
                    }
                }
            }
            best
        })
        .reduce(
            || (0, 0, 0, f64::NEG_INFINITY),
            |x, y| {
                if y.3 > x.3 || (y.3 == x.3 && (y.0, y.1, y.2) < (x.0, x.1, x.2)) {
                    y
                } else {
                    x
                }
            },
        );

    let mut coords = [grid[best_i], grid[best_j], grid[best_k]];
    let objective = |c: &[f64; 3]| -> Result<f64> {
        Ok(chsh_statistic(&ChshSettings::new(0.0, c[0], c[1], c[2])?)?
            .s_value
            .abs())
    };
    let mut best = objective(&coords)?;
    for _ in 0..4 {
        for axis in 0..3 {
            let center = coords[axis];
            let mut trial = coords;
            let mut err = None;
            let x = golden_section_max(center - grid_step, center + grid_step, 1e-10, |x| {
                trial[axis] = x;
                objective(&trial).unwrap_or_else(|e| {
                    err = Some(e);
                    f64::NEG_INFINITY
                })
            });
            if let Some(e) = err {
                return Err(e);
            }
            trial[axis] = x;
            let value = objective(&trial)?;
            if value > best {
                best = value;
                coords = trial;
            }
        }
    }
    let settings = ChshSettings::new(0.0, coords[0], coords[1], coords[2])?;
    Ok(ChshMaximum {
        settings,
        s_value: chsh_statistic(&settings)?.s_value,
    })
}

/// Maximizer of a unimodal `f` on `[lo, hi]`.
fn golden_section_max(mut lo: f64, mut hi: f64, tol: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub theta: f64,
    pub s_value: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViolationScan {
    pub rows: Vec<ScanRow>,
    /// Maximal violating θ intervals, endpoints refined by bisection.
    pub intervals: Vec<(f64, f64)>,
}

impl ViolationScan {
    pub fn max_abs_s(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.s_value.abs())
            .fold(0.0, f64::max)
    }
}

/// Endpoints are located to within this θ distance.
pub const INTERVAL_TOL: f64 = 1e-9;

/// Evaluates the canonical family on a θ grid and locates the violating intervals.
pub fn violation_scan(thetas: &[f64]) -> Result<ViolationScan> {
    if thetas.is_empty() {
        return Err(Error::InvalidArgument(
            "violation scan needs a non-empty θ grid".into(),
        ));
    }
    let s_at =
        |theta: f64| -> Result<f64> { Ok(chsh_statistic(&ChshSettings::family(theta))?.s_value) };
    let rows = thetas
        .par_iter()
        .map(|&theta| {
            if !theta.is_finite() {
                return Err(Error::NonFinite("θ grid"));
            }
            let s_value = s_at(theta)?;
            Ok(ScanRow {
                theta,
                s_value,
                violated: is_violation(s_value),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let boundary = |inside: f64, outside: f64| -> Result<f64> {
        let (mut inside, mut outside) = (inside, outside);
        while (inside - outside).abs() > INTERVAL_TOL {
            let mid = 0.5 * (inside + outside);
            if is_violation(s_at(mid)?) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        Ok(0.5 * (inside + outside))
    };

    let mut intervals = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        if !rows[i].violated {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < rows.len() && rows[i + 1].violated {
            i += 1;
        }
        let lo = if start == 0 {
            rows[0].theta
        } else {
            boundary(rows[start].theta, rows[start - 1].theta)?
        };
        let hi = if i + 1 == rows.len() {
            rows[i].theta
        } else {
            boundary(rows[i].theta, rows[i + 1].theta)?
        };
        intervals.push((lo, hi));
        i += 1;
    }
    Ok(ViolationScan { rows, intervals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, SQRT_2};

    #[test]
    fn correlation_examples() {
        assert!((correlation_at(0.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((correlation_at(0.0, FRAC_PI_4).unwrap() - FRAC_PI_4.cos()).abs() < 1e-12);
        assert!((correlation_at(FRAC_PI_3, FRAC_PI_3).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chsh_examples() {
        let r = chsh_statistic(&ChshSettings::canonical()).unwrap();
        assert!((r.s_value - 2.0 * SQRT_2).abs() < 1e-12);
        assert!(r.violated);

        let r = chsh_statistic(&ChshSettings::new(0.0, 0.0, 0.0, 0.0).unwrap()).unwrap();
        assert!((r.s_value - 2.0).abs() < 1e-12);
        assert!(!r.violated);

        // cos(−π/2) + cos 0 + cos 0 − cos(π/2) = 2
        let r =
            chsh_statistic(&ChshSettings::new(0.0, FRAC_PI_2, FRAC_PI_2, 0.0).unwrap()).unwrap();
        assert!((r.s_value - 2.0).abs() < 1e-12);
        assert!(!r.violated);

        assert!(ChshSettings::new(0.0, f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn sampled_chsh_tracks_analytic() {
        let (r, est) = chsh_statistic_sampled(&ChshSettings::canonical(), 100_000, 42).unwrap();
        let sigma = est
            .iter()
            .map(|e| e.std_err * e.std_err)
            .sum::<f64>()
            .sqrt();
        assert!((r.s_value - 2.0 * SQRT_2).abs() < 5.0 * sigma);
        assert!(r.violated);
    }

    #[test]
    fn maximize_rejects_bad_steps() {
        assert!(maximize_chsh(0.0).is_err());
        assert!(maximize_chsh(PI / 4.0).is_err());
        assert!(maximize_chsh(f64::NAN).is_err());
    }

    #[test]
    fn coarse_grid_still_violates() {
        let m = maximize_chsh(PI / 8.0).unwrap();
        assert!(m.s_value.abs() > 2.0);
        assert!(m.s_value.abs() <= 2.0 * SQRT_2 + 1e-9);
    }

    #[test]
    fn scan_examples() {
        let scan = violation_scan(&[0.0, FRAC_PI_4, FRAC_PI_2]).unwrap();
        assert!((scan.rows[0].s_value - 2.0).abs() < 1e-12 && !scan.rows[0].violated);
        assert!((scan.rows[1].s_value - 2.0 * SQRT_2).abs() < 1e-12 && scan.rows[1].violated);
        assert!(scan.rows[2].s_value.abs() < 1e-12 && !scan.rows[2].violated);
        assert_eq!(scan.intervals.len(), 1);
        assert!(violation_scan(&[]).is_err());
    }

    #[test]
    fn equal_primed_b_never_violates() {
        // b' = b collapses S to 2·E(a, b)
        let grid: Vec<f64> = (0..16).map(|k| -PI + k as f64 * PI / 8.0).collect();
        for &ap in &grid {
            for &b in &grid {
                let r = chsh_statistic(&ChshSettings::new(0.0, ap, b, b).unwrap()).unwrap();
                assert!(r.s_value.abs() <= 2.0 + 1e-12);
                assert!(!r.violated);
            }
        }
    }

    #[test]
    fn scan_intervals_mirror_about_zero() {
        let thetas = crate::stats::linspace(-PI, PI, 361).unwrap();
        let scan = violation_scan(&thetas).unwrap();
        assert!(!scan.intervals.is_empty());
        for &(lo, hi) in &scan.intervals {
            assert!(scan
                .intervals
                .iter()
                .any(|&(l, h)| (l + hi).abs() < 1e-3 && (h + lo).abs() < 1e-3));
        }
        // inner boundary solves 6c − 4c³ = 2 with c = cos θ = (√3 − 1)/2
        let edge = ((3f64.sqrt() - 1.0) / 2.0).acos();
        assert!(scan.intervals.iter().any(|&(_, h)| (h - edge).abs() < 1e-6));
    }

    #[test]
    fn golden_section_finds_peak() {
        let x = golden_section_max(0.0, 3.0, 1e-10, |x| -(x - 1.234) * (x - 1.234));
        assert!((x - 1.234).abs() < 1e-8);
    }
}
