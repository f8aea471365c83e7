//! Physical constants, calibrations, and numerical guards in one place.
//!
//! Every magic number used by the solvers lives here with a note on where
//! it comes from, so tolerances are auditable rather than scattered.

/// Avogadro constant, mol⁻¹ (CODATA, rounded to six significant figures).
pub const AVOGADRO_PER_MOL: f64 = 6.02214e23;

/// Resonance units per degree of SPR-angle shift: 1 RU = 1e-4 degrees,
/// the angular unit used by commercial SPR instruments.
pub const RU_PER_DEGREE: f64 = 1.0e4;

/// Mass calibration of dextran-chip instruments: a surface density of
/// 1 ng/mm² of immobilized protein reads as 1 kRU.
pub const KRU_PER_NG_PER_MM2: f64 = 1.0;

/// Square nanometres per square millimetre.
pub const NM2_PER_MM2: f64 = 1.0e12;

/// Square nanometres per square ångström.
pub const NM2_PER_ANGSTROM2: f64 = 1.0e-2;

/// Above this magnitude, `tan(k_z d)` is replaced by its analytic
/// thick-layer limit Z²/Z_next to avoid overflow near real phase π/2.
pub const TAN_OVERFLOW_GUARD: f64 = 1.0e12;

/// Impedance-recursion denominators below this magnitude are reported
/// as singular instead of dividing through.
pub const IMPEDANCE_DENOMINATOR_GUARD: f64 = 1.0e-30;

/// Default coarse-scan step for resonance location, degrees. One step is
/// 100 RU, comfortably finer than any SPR dip width.
pub const COARSE_STEP_DEG: f64 = 0.01;

/// Golden-section termination width, degrees. Two decades below the
/// 1e-6° contract so the parabolic polish starts from a tight bracket.
pub const ANGLE_REFINE_TOL_DEG: f64 = 1.0e-8;

/// Half-width of the final three-point parabolic fit, degrees.
pub const PARABOLIC_STEP_DEG: f64 = 1.0e-5;

/// Default resonance bracket: critical angle plus this margin, degrees.
pub const BRACKET_MARGIN_DEG: f64 = 0.1;

/// Default resonance bracket span above the critical angle, degrees.
pub const BRACKET_SPAN_DEG: f64 = 15.0;

/// Upper cap for any search bracket, degrees (grazing incidence excluded).
pub const MAX_BRACKET_DEG: f64 = 89.9;

/// Central-difference step in refractive index for bulk sensitivity.
/// Large enough that the angle response (~1e-2°) dwarfs refinement noise.
pub const SENSITIVITY_DELTA_N: f64 = 1.0e-4;

/// Largest allowed probe permittivity perturbation for depth profiles;
/// beyond this the first-order (linear-response) reading breaks down.
pub const PROFILE_MAX_DELTA_EPS: f64 = 1.0e-2;

/// Width of the Δε search bracket for shift inversion. Covers the largest
/// buffer-to-protein transition of interest (1.78 → 1.96) with margin.
pub const EPSILON_BRACKET_WIDTH: f64 = 0.2;

/// Bracket width at which the Δε bisection stops, in permittivity units.
pub const EPSILON_BRACKET_MIN: f64 = 1.0e-9;

/// Required agreement between the achieved and requested shift, RU.
pub const SHIFT_TOLERANCE_RU: f64 = 0.05;

/// Iteration cap for the Δε root search.
pub const INVERSION_MAX_ITERATIONS: u32 = 200;
