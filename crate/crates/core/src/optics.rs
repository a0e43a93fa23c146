//! Optical elements, station circuits and the two interferometer builders.
//!
//! Each photon lives on two path modes (solid = index 0, dashed = index 1). Element
//! unitaries use one fixed convention; the fixed phase they leave in the statistics is
//! measured by [`calibrate_offset`] and removed by shifting the phase origin, never by
//! editing the element matrices.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat2, I, IDENTITY, ONE};
use crate::state::{make_measurement_state, BipartiteState, PureState};

/// Accuracy required of composed station unitaries.
pub const CIRCUIT_TOL: f64 = 1e-12;
/// Maximum misfit between the measured zero-phase statistics and the cosine form.
pub const CALIBRATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arm {
    Solid,
    Dashed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OpticalElement {
    /// Symmetric 50/50 splitter `(1/√2)[[1, i], [i, 1]]`.
    BeamSplitter,
    PhaseShifter {
        phase: f64,
        arm: Arm,
    },
    /// Common phase on both arms; unobservable, so the identity.
    Mirror,
}

impl OpticalElement {
    pub fn unitary(&self) -> Mat2 {
        match *self {
            OpticalElement::BeamSplitter => beam_splitter_unitary(),
            OpticalElement::PhaseShifter { phase, arm } => phase_shifter_unitary(phase, arm),
            OpticalElement::Mirror => IDENTITY,
        }
    }
}

pub fn beam_splitter_unitary() -> Mat2 {
    let t = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let r = I * FRAC_1_SQRT_2;
    [[t, r], [r, t]]
}

pub fn phase_shifter_unitary(phase: f64, arm: Arm) -> Mat2 {
    let shift = Complex64::from_polar(1.0, phase);
    match arm {
        Arm::Solid => linalg::diag(shift, ONE),
        Arm::Dashed => linalg::diag(ONE, shift),
    }
}

/// Ordered optics acting on one photon; the first element acts first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StationCircuit {
    elements: Vec<OpticalElement>,
}

impl StationCircuit {
    pub fn new(elements: Vec<OpticalElement>) -> Result<Self> {
        for e in &elements {
            if let OpticalElement::PhaseShifter { phase, .. } = e {
                if !phase.is_finite() {
                    return Err(Error::NonFinite("phase shifter"));
                }
            }
        }
        Ok(Self { elements })
    }

    pub fn elements(&self) -> &[OpticalElement] {
        &self.elements
    }

    /// `U_n ⋯ U_2 U_1` for elements `[e_1, …, e_n]`.
    pub fn unitary(&self) -> Mat2 {
        self.elements
            .iter()
            .fold(IDENTITY, |acc, e| linalg::mul(&e.unitary(), &acc))
    }

    /// Same circuit with every phase shifter set to zero.
    pub fn zeroed(&self) -> Self {
        self.map_phases(|_| 0.0)
    }

    fn map_phases(&self, f: impl Fn(f64) -> f64) -> Self {
        let elements = self
            .elements
            .iter()
            .map(|e| match *e {
                OpticalElement::PhaseShifter { phase, arm } => OpticalElement::PhaseShifter {
                    phase: f(phase),
                    arm,
                },
                other => other,
            })
            .collect();
        Self { elements }
    }
}

pub fn station_unitary(circuit: &StationCircuit) -> Mat2 {
    circuit.unitary()
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    let mut w = x.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    if w <= -PI + 1e-15 {
        w = PI;
    }
    w
}

/// Entangled-pair source feeding one circuit per photon.
#[derive(Debug, Clone, PartialEq)]
pub struct Apparatus {
    pub source: BipartiteState,
    pub station_s: StationCircuit,
    pub station_a: StationCircuit,
    /// Setup offset `w` in `(−π, π]`.
    pub offset_w: f64,
}

impl Apparatus {
    /// Builds an apparatus and calibrates its offset.
    pub fn new(
        source: BipartiteState,
        station_s: StationCircuit,
        station_a: StationCircuit,
    ) -> Result<Self> {
        let mut app = Self {
            source,
            station_s,
            station_a,
            offset_w: 0.0,
        };
        app.offset_w = calibrate_offset(&app)?;
        Ok(app)
    }

    /// Output state with the element matrices exactly as written.
    pub fn raw_output_state(&self) -> BipartiteState {
        self.propagate(&self.station_s.unitary(), &self.station_a.unitary())
    }

    /// Output state with the phase origin shifted by `offset_w`.
    ///
    /// The shift is a relative phase `e^{i w}` on A's dashed input mode, which moves
    /// the correlation phase `φ_S − φ_A + w` back to `φ_S − φ_A`.
    pub fn output_state(&self) -> BipartiteState {
        let origin = phase_shifter_unitary(self.offset_w, Arm::Dashed);
        let u_a = linalg::mul(&self.station_a.unitary(), &origin);
        self.propagate(&self.station_s.unitary(), &u_a)
    }

    fn propagate(&self, u_s: &Mat2, u_a: &Mat2) -> BipartiteState {
        // circuits are unitary by construction
        self.source
            .apply_local_unitaries(u_s, u_a)
            .expect("station circuits compose to unitaries")
    }
}

/// Source `(|s1 a1⟩ + |s2 a2⟩)/√2`; S's shifter on the solid arm, A's on the dashed arm.
///
/// Opposite-arm placement makes the statistics depend on `φ_S − φ_A`.
pub fn build_rto(phi_s: f64, phi_a: f64) -> Result<Apparatus> {
    let amp = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let source = make_measurement_state(amp, amp)?;
    let station_s = StationCircuit::new(vec![
        OpticalElement::PhaseShifter {
            phase: phi_s,
            arm: Arm::Solid,
        },
        OpticalElement::BeamSplitter,
    ])?;
    let station_a = StationCircuit::new(vec![
        OpticalElement::PhaseShifter {
            phase: phi_a,
            arm: Arm::Dashed,
        },
        OpticalElement::BeamSplitter,
    ])?;
    Apparatus::new(source, station_s, station_a)
}

/// Fits `w` in `P(S1 & A1) = (1/4)[1 + cos(φ_S − φ_A + w)]` from the zero-phase setup.
///
/// `cos w` comes from the zero-phase joint distribution, `sin w` from a second
/// evaluation with a `π/2` probe phase on S's solid input mode. Fails when the joint
/// distribution does not have the two-valued cosine form.
pub fn calibrate_offset(app: &Apparatus) -> Result<f64> {
    let u_s = app.station_s.zeroed().unitary();
    let u_a = app.station_a.zeroed().unitary();
    for (name, u) in [("S", &u_s), ("A", &u_a)] {
        let dev = linalg::unitarity_deviation(u);
        if dev > CIRCUIT_TOL {
            return Err(Error::Calibration(format!(
                "station {name} is not unitary ({dev:e})"
            )));
        }
    }

    let p0 = app.propagate(&u_s, &u_a).probabilities();
    check_cosine_form(&p0)?;
    let probe = linalg::mul(&u_s, &phase_shifter_unitary(FRAC_PI_2, Arm::Solid));
    let p1 = app.propagate(&probe, &u_a).probabilities();
    check_cosine_form(&p1)?;

    // p11(0) = ¼(1 + cos w), p11(π/2) = ¼(1 − sin w)
    let cos_w = 4.0 * p0[0][0] - 1.0;
    let sin_w = 1.0 - 4.0 * p1[0][0];
    let radius = cos_w.hypot(sin_w);
    if (radius - 1.0).abs() > CALIBRATION_TOL {
        return Err(Error::Calibration(format!(
            "correlation visibility {radius} is not 1; statistics are not of the form ¼[1 ± cos(Δ + w)]"
        )));
    }
    Ok(wrap_phase(sin_w.atan2(cos_w)))
}

fn check_cosine_form(p: &[[f64; 2]; 2]) -> Result<()> {
    let misfit = [
        (p[0][0] - p[1][1]).abs(),
        (p[0][1] - p[1][0]).abs(),
        (p[0][0] + p[0][1] - 0.5).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    if misfit > CALIBRATION_TOL {
        return Err(Error::Calibration(format!(
            "joint distribution {p:?} is not of the form ¼[1 ± cos(Δ + w)] (misfit {misfit:e})"
        )));
    }
    Ok(())
}

/// Single-photon Mach-Zehnder: `|path1⟩ → BS → shifter(φ, solid) → BS → D1/D2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MachZehnder {
    pub input: PureState,
    pub circuit: StationCircuit,
    pub phase: f64,
    /// Phase-origin offset `v` with raw `P(D1) = ½[1 + cos(φ + v)]`.
    pub offset: f64,
}

impl MachZehnder {
    /// Detector amplitudes for the circuit as written.
    pub fn raw_output(&self) -> Result<PureState> {
        self.input.evolve(&self.circuit.unitary(), ["D1", "D2"])
    }

    /// Detector amplitudes with the shifter origin moved by `offset`.
    pub fn output(&self) -> Result<PureState> {
        let offset = self.offset;
        let circuit = self.circuit.map_phases(|p| p - offset);
        self.input.evolve(&circuit.unitary(), ["D1", "D2"])
    }
}

pub fn build_mz(phi: f64) -> Result<MachZehnder> {
    let input = PureState::basis(0, ["path1", "path2"])?;
    let circuit = |phase| {
        StationCircuit::new(vec![
            OpticalElement::BeamSplitter,
            OpticalElement::PhaseShifter {
                phase,
                arm: Arm::Solid,
            },
            OpticalElement::BeamSplitter,
        ])
    };
    let raw_d1 = |phase| -> Result<f64> {
        Ok(input
            .evolve(&circuit(phase)?.unitary(), ["D1", "D2"])?
            .probabilities()[0])
    };
    // P(D1)(0) = ½(1 + cos v), P(D1)(π/2) = ½(1 − sin v)
    let cos_v = 2.0 * raw_d1(0.0)? - 1.0;
    let sin_v = 1.0 - 2.0 * raw_d1(FRAC_PI_2)?;
    let offset = wrap_phase(sin_v.atan2(cos_v));
    Ok(MachZehnder {
        circuit: circuit(phi)?,
        input,
        phase: phi,
        offset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ZERO;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn beam_splitter_examples() {
        let bs = beam_splitter_unitary();
        assert!(linalg::unitarity_deviation(&bs) < 1e-15);
        let out = PureState::basis(0, ["p1", "p2"])
            .unwrap()
            .evolve(&bs, ["o1", "o2"])
            .unwrap();
        assert!((out.amplitudes()[0] - Complex64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((out.amplitudes()[1] - Complex64::new(0.0, FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!((out.probabilities()[0] - 0.5).abs() < 1e-15);

        // BS·BS = [[0, i], [i, 0]]
        let twice = linalg::mul(&bs, &bs);
        let p = PureState::basis(0, ["p1", "p2"])
            .unwrap()
            .evolve(&twice, ["o1", "o2"])
            .unwrap();
        assert!(p.probabilities()[0] < 1e-30);
        assert!((p.probabilities()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn phase_shifter_examples() {
        assert_eq!(phase_shifter_unitary(0.0, Arm::Solid), IDENTITY);
        let pi = phase_shifter_unitary(PI, Arm::Solid);
        assert!(linalg::max_abs_diff(&pi, &linalg::diag(-ONE, ONE)) < 1e-15);
        let half = phase_shifter_unitary(FRAC_PI_2, Arm::Dashed);
        assert!(linalg::max_abs_diff(&half, &linalg::diag(ONE, I)) < 1e-15);
    }

    #[test]
    fn station_composition_order() {
        assert_eq!(StationCircuit::default().unitary(), IDENTITY);
        let phi = 0.3;
        let c = StationCircuit::new(vec![
            OpticalElement::PhaseShifter {
                phase: phi,
                arm: Arm::Solid,
            },
            OpticalElement::BeamSplitter,
        ])
        .unwrap();
        let expected = linalg::mul(
            &beam_splitter_unitary(),
            &phase_shifter_unitary(phi, Arm::Solid),
        );
        assert_eq!(station_unitary(&c), expected);
        assert!((linalg::det(&c.unitary()).norm() - 1.0).abs() < 1e-12);

        let with_mirror = StationCircuit::new(vec![
            OpticalElement::Mirror,
            OpticalElement::PhaseShifter {
                phase: phi,
                arm: Arm::Solid,
            },
            OpticalElement::Mirror,
            OpticalElement::BeamSplitter,
        ])
        .unwrap();
        assert_eq!(with_mirror.unitary(), expected);
    }

    #[test]
    fn non_finite_phase_is_rejected() {
        assert!(build_rto(f64::NAN, 0.0).is_err());
        assert!(StationCircuit::new(vec![OpticalElement::PhaseShifter {
            phase: f64::INFINITY,
            arm: Arm::Dashed
        }])
        .is_err());
    }

    #[test]
    fn rto_raw_offset_is_pi() {
        // BS diag(x, y) BS = ½[[x − y, i(x + y)], [i(x + y), y − x]]: raw p11 = ¼(1 − cos Δ)
        let app = build_rto(0.0, 0.0).unwrap();
        assert!((app.offset_w - PI).abs() < 1e-12);
        let raw = app.raw_output_state().probabilities();
        assert!(raw[0][0] < 1e-30 && raw[1][1] < 1e-30);
        let cal = app.output_state().probabilities();
        assert!((cal[0][0] - 0.5).abs() < 1e-15 && (cal[1][1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn wrap_phase_range() {
        assert_eq!(wrap_phase(PI), PI);
        assert_eq!(wrap_phase(-PI), PI);
        assert!((wrap_phase(3.0 * PI / 2.0) + FRAC_PI_2).abs() < 1e-15);
        assert_eq!(wrap_phase(0.0), 0.0);
    }

    #[test]
    fn calibration_rejects_non_cosine_statistics() {
        // product source: no correlation fringe at all
        let source = BipartiteState::new([[ONE, ZERO], [ZERO, ZERO]]).unwrap();
        let station = StationCircuit::new(vec![OpticalElement::BeamSplitter]).unwrap();
        let err = Apparatus::new(source, station.clone(), station).unwrap_err();
        assert!(matches!(err, Error::Calibration(_)));
    }

    #[test]
    fn calibration_tracks_a_fixed_source_phase() {
        // a relative phase of 0.4 on |s2 a2⟩ moves w by −0.4
        let amp = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let source =
            make_measurement_state(amp, Complex64::from_polar(FRAC_1_SQRT_2, 0.4)).unwrap();
        let rto = build_rto(0.0, 0.0).unwrap();
        let app = Apparatus::new(source, rto.station_s, rto.station_a).unwrap();
        assert!((app.offset_w - wrap_phase(PI - 0.4)).abs() < 1e-12);
        let p = app.output_state().probabilities();
        assert!((p[0][0] + p[1][1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mz_examples() {
        let mz = build_mz(0.0).unwrap();
        assert!((mz.offset - PI).abs() < 1e-12);
        let p = mz.output().unwrap().probabilities();
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1] < 1e-15);
        let p = build_mz(PI).unwrap().output().unwrap().probabilities();
        assert!(p[0] < 1e-15 && (p[1] - 1.0).abs() < 1e-15);
        let p = build_mz(FRAC_PI_2)
            .unwrap()
            .output()
            .unwrap()
            .probabilities();
        assert!((p[0] - 0.5).abs() < 1e-15);
        let p = build_mz(FRAC_PI_4)
            .unwrap()
            .output()
            .unwrap()
            .probabilities();
        assert!((p[0] - 0.5 * (1.0 + FRAC_PI_4.cos())).abs() < 1e-15);
    }
}
