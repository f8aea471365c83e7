//! SPR curve generation and resonance analysis.
//!
//! Reflectance dips are located in two stages: a coarse scan (default
//! 0.01°, i.e. 100 RU per grid point) establishes that the bracket holds
//! exactly one interior minimum, then golden-section search plus a final
//! three-point parabolic fit refine the angle well below the 1e-6°
//! contract. The parabolic vertex makes the located angle a smooth
//! function of the stack parameters, so differences of resonance angles
//! (shifts, sensitivities, inversions) are not limited by search noise.

use num_complex::Complex64;

use crate::constants::{
    ANGLE_REFINE_TOL_DEG, BRACKET_MARGIN_DEG, BRACKET_SPAN_DEG, COARSE_STEP_DEG, MAX_BRACKET_DEG,
    PARABOLIC_STEP_DEG, PROFILE_MAX_DELTA_EPS, RU_PER_DEGREE, SENSITIVITY_DELTA_N,
};
use crate::error::{Error, Result};
use crate::numerics::{golden_section_min, linear_fit, parabolic_refine};
use crate::optics::{
    decaying_sqrt, normal_wavevector, reflectance_at, tangential_wavevector, vacuum_wavenumber,
    Layer, LayerStack,
};

/// Uniform angular sampling grid, degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleSweep {
    start_deg: f64,
    end_deg: f64,
    step_deg: f64,
}

impl AngleSweep {
    pub fn new(start_deg: f64, end_deg: f64, step_deg: f64) -> Result<Self> {
        if !start_deg.is_finite() || !end_deg.is_finite() || start_deg >= end_deg {
            return Err(Error::Domain(format!(
                "resonance::AngleSweep: need start < end, got [{start_deg}, {end_deg}]"
            )));
        }
        if !(0.0..90.0).contains(&start_deg) || end_deg >= 90.0 {
            return Err(Error::Domain(format!(
                "resonance::AngleSweep: sweep must lie in [0°, 90°), got [{start_deg}, {end_deg}]"
            )));
        }
        if !(step_deg > 0.0) {
            return Err(Error::Domain(format!(
                "resonance::AngleSweep: step must be positive, got {step_deg}"
            )));
        }
        if (end_deg - start_deg) / step_deg > 1.0e7 {
            return Err(Error::Domain(format!(
                "resonance::AngleSweep: more than 1e7 grid points ([{start_deg}, {end_deg}] step {step_deg})"
            )));
        }
        Ok(AngleSweep { start_deg, end_deg, step_deg })
    }

    pub fn start_deg(&self) -> f64 {
        self.start_deg
    }

    pub fn end_deg(&self) -> f64 {
        self.end_deg
    }

    pub fn step_deg(&self) -> f64 {
        self.step_deg
    }

    fn angles(&self) -> Vec<f64> {
        let count = ((self.end_deg - self.start_deg) / self.step_deg * (1.0 + 1e-12)).floor() as usize;
        (0..=count).map(|i| self.start_deg + i as f64 * self.step_deg).collect()
    }
}

/// Located reflectance minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance {
    pub angle_deg: f64,
    pub reflectance: f64,
}

/// Sampled reflectance-versus-angle curve with the refined dip, when one
/// exists strictly inside the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SprCurve {
    pub points: Vec<(f64, f64)>,
    pub resonance: Option<Resonance>,
}

/// A resonance-angle shift in both angular units.
///
/// `delta_ru` is derived from `delta_degrees` by the exact 1 RU = 1e-4°
/// calibration at construction, so the two fields never disagree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceShift {
    pub delta_degrees: f64,
    pub delta_ru: f64,
}

impl ResonanceShift {
    pub fn from_degrees(delta_degrees: f64) -> Self {
        ResonanceShift { delta_degrees, delta_ru: angle_shift_to_ru(delta_degrees) }
    }
}

/// Probe description for [`sensitivity_profile`]: a thin slab of permittivity
/// contrast `delta_eps` swept over `depths_nm` below the top of the sample
/// layer.
#[derive(Debug, Clone)]
pub struct DepthProbe {
    pub delta_eps: f64,
    pub slab_thickness_nm: f64,
    pub depths_nm: Vec<f64>,
}

/// Depth-sensitivity results: the probed decay profile, the exponential
/// fit to it, and the closed-form estimate for comparison.
#[derive(Debug, Clone)]
pub struct PenetrationReport {
    pub analytic_dp_nm: f64,
    pub fitted_dp_nm: f64,
    pub profile: Vec<(f64, f64)>,
    pub fit_r_squared: f64,
}

/// Exact RU calibration: Δθ[°] × 1e4.
pub fn angle_shift_to_ru(delta_degrees: f64) -> f64 {
    delta_degrees * RU_PER_DEGREE
}

/// Default search bracket above the prism/final-medium critical angle.
///
/// The resonance dip of a metal-film stack always sits above the total
/// internal reflection edge, so `[θ_c + 0.1°, θ_c + 15°]` (capped below
/// 90°) brackets it without further knowledge of the stack.
pub fn default_bracket(stack: &LayerStack) -> Result<(f64, f64)> {
    let theta_c = stack.critical_angle_deg().ok_or_else(|| {
        Error::Model(format!(
            "resonance::default_bracket: no prism/final-medium critical angle (final medium ε = {}); pass an explicit bracket",
            stack.final_medium().permittivity
        ))
    })?;
    let lo = theta_c + BRACKET_MARGIN_DEG;
    let hi = (theta_c + BRACKET_SPAN_DEG).min(MAX_BRACKET_DEG);
    if lo >= hi {
        return Err(Error::Model(format!(
            "resonance::default_bracket: critical angle {theta_c:.3}° leaves no room below 90°"
        )));
    }
    Ok((lo, hi))
}

/// Samples the reflectance curve on the sweep grid and refines the dip.
///
/// When the grid minimum sits on a sweep boundary the curve is returned
/// with `resonance: None` rather than reporting a fake edge minimum.
pub fn spr_curve(stack: &LayerStack, wavelength_nm: f64, sweep: &AngleSweep) -> Result<SprCurve> {
    let angles = sweep.angles();
    let mut points = Vec::with_capacity(angles.len());
    for &theta in &angles {
        let r = reflectance_at(stack, wavelength_nm, theta)?;
        if !(0.0..=1.0 + 1e-9).contains(&r) {
            return Err(Error::Model(format!(
                "resonance::spr_curve: reflectance {r} at {theta}° outside [0, 1+1e-9]; stack is not passive"
            )));
        }
        points.push((theta, r));
    }
    let (argmin, _) = points
        .iter()
        .enumerate()
        .fold((0usize, f64::INFINITY), |acc, (i, &(_, r))| if r < acc.1 { (i, r) } else { acc });

    let resonance = if argmin == 0 || argmin == points.len() - 1 {
        None
    } else {
        let angle = refine_minimum(stack, wavelength_nm, points[argmin - 1].0, points[argmin + 1].0)?;
        let r = reflectance_at(stack, wavelength_nm, angle)?;
        Some(Resonance { angle_deg: angle, reflectance: r })
    };
    Ok(SprCurve { points, resonance })
}

/// Locates the single reflectance minimum inside `bracket` (degrees) to an
/// absolute tolerance of 1e-6° (0.01 RU).
///
/// A coarse scan verifies the precondition: no interior minimum yields a
/// bracket error, more than one a detected-ambiguity error.
pub fn find_spr_angle(stack: &LayerStack, wavelength_nm: f64, bracket: (f64, f64)) -> Result<f64> {
    let (lo, hi) = bracket;
    if !lo.is_finite() || !hi.is_finite() || lo >= hi || lo < 0.0 || hi >= 90.0 {
        return Err(Error::Domain(format!(
            "resonance::find_spr_angle: invalid bracket [{lo}, {hi}] (need 0 ≤ lo < hi < 90)"
        )));
    }

    // Coarse scan: uniform grid no coarser than the default step, at least
    // 50 intervals across the bracket.
    let intervals = (((hi - lo) / COARSE_STEP_DEG).ceil() as usize).max(50);
    let step = (hi - lo) / intervals as f64;
    let mut values = Vec::with_capacity(intervals + 1);
    for i in 0..=intervals {
        let theta = lo + i as f64 * step;
        values.push(reflectance_at(stack, wavelength_nm, theta)?);
    }

    let mut argmin = 0usize;
    let mut minima = 0usize;
    for i in 0..values.len() {
        if values[i] < values[argmin] {
            argmin = i;
        }
        if i > 0 && i + 1 < values.len() && values[i] < values[i - 1] && values[i] < values[i + 1] {
            minima += 1;
        }
    }
    if argmin == 0 || argmin == values.len() - 1 {
        return Err(Error::Bracket(format!(
            "resonance::find_spr_angle: no interior minimum in [{lo:.4}, {hi:.4}]; \
             reflectance is smallest at the bracket edge"
        )));
    }
    if minima > 1 {
        return Err(Error::Ambiguity(format!(
            "resonance::find_spr_angle: {minima} local minima detected in [{lo:.4}, {hi:.4}]; \
             narrow the bracket"
        )));
    }

    refine_minimum(
        stack,
        wavelength_nm,
        lo + (argmin - 1) as f64 * step,
        lo + (argmin + 1) as f64 * step,
    )
}

/// Golden-section plus parabolic polish between two coarse-grid neighbours.
fn refine_minimum(stack: &LayerStack, wavelength_nm: f64, lo: f64, hi: f64) -> Result<f64> {
    let f = |theta: f64| reflectance_at(stack, wavelength_nm, theta);
    let rough = golden_section_min(f, lo, hi, ANGLE_REFINE_TOL_DEG)?;
    let polished = parabolic_refine(f, rough, PARABOLIC_STEP_DEG)?;
    Ok(polished.clamp(lo, hi))
}

/// Resonance-angle sensitivity to the refractive index n = √ε of one
/// layer, in RU per refractive-index unit, by central difference.
pub fn bulk_sensitivity(stack: &LayerStack, wavelength_nm: f64, layer_index: usize) -> Result<f64> {
    bulk_sensitivity_with_step(stack, wavelength_nm, layer_index, SENSITIVITY_DELTA_N)
}

/// [`bulk_sensitivity`] with an explicit finite-difference step, mainly for
/// convergence checks.
pub fn bulk_sensitivity_with_step(
    stack: &LayerStack,
    wavelength_nm: f64,
    layer_index: usize,
    delta_n: f64,
) -> Result<f64> {
    if layer_index == 0 {
        return Err(Error::Domain(
            "resonance::bulk_sensitivity: layer 0 is the prism; pick a non-prism layer".into(),
        ));
    }
    if layer_index >= stack.len() {
        return Err(Error::Domain(format!(
            "resonance::bulk_sensitivity: layer index {layer_index} out of range (stack has {} layers)",
            stack.len()
        )));
    }
    if !(delta_n > 0.0) {
        return Err(Error::Domain(format!(
            "resonance::bulk_sensitivity: finite-difference step must be positive, got {delta_n}"
        )));
    }
    let bracket = default_bracket(stack)?;
    let n0 = decaying_sqrt(stack.layers()[layer_index].permittivity);
    let perturbed = |sign: f64| -> Result<f64> {
        let n = n0 + Complex64::new(sign * delta_n, 0.0);
        let shifted = stack.with_permittivity(layer_index, n * n)?;
        find_spr_angle(&shifted, wavelength_nm, bracket).map_err(|e| {
            Error::Perturbation(format!(
                "resonance::bulk_sensitivity: resonance lost perturbing layer {layer_index} by Δn={}: {e}",
                sign * delta_n
            ))
        })
    };
    let theta_plus = perturbed(1.0)?;
    let theta_minus = perturbed(-1.0)?;
    Ok(angle_shift_to_ru((theta_plus - theta_minus) / (2.0 * delta_n)))
}

/// Closed-form sensing depth 1/(2·Im k_z) of the sample layer, nm,
/// evaluated at the located resonance angle.
///
/// `sample_index` designates the probed layer (in the standard five-layer
/// geometry, the layer after the dextran). The estimate treats the medium
/// beyond the dextran as homogeneous; when a finite sample layer differs
/// from the solution behind it, interface reflections steepen the true
/// decay and [`sensitivity_profile`] is the quantity to trust.
pub fn penetration_depth_analytic(
    stack: &LayerStack,
    wavelength_nm: f64,
    sample_index: usize,
) -> Result<f64> {
    if sample_index == 0 || sample_index >= stack.len() {
        return Err(Error::Domain(format!(
            "resonance::penetration_depth_analytic: sample index {sample_index} must name a non-prism layer"
        )));
    }
    let theta = find_spr_angle(stack, wavelength_nm, default_bracket(stack)?)?;
    let k0 = vacuum_wavenumber(wavelength_nm)?;
    let k = tangential_wavevector(k0, stack.prism().permittivity.re, theta.to_radians())?;
    let kz = normal_wavevector(stack.layers()[sample_index].permittivity, k0, k)?;
    if kz.im <= 0.0 {
        return Err(Error::Model(format!(
            "resonance::penetration_depth_analytic: field in layer {sample_index} is propagating \
             (Im k_z = {}) at θ = {theta:.4}°; no evanescent decay length exists",
            kz.im
        )));
    }
    Ok(1.0 / (2.0 * kz.im))
}

/// Probes how the resonance responds to a permittivity perturbation as a
/// function of depth, and fits the exponential decay constant.
///
/// For each depth `z`, a slab of thickness `slab_thickness_nm` replaces
/// whatever medium occupies `[z, z + slab)` below the top of the sample
/// layer, with its permittivity raised by `delta_eps`; the resulting
/// resonance shift (RU) is recorded. `log(shift)` is then regressed on z.
pub fn sensitivity_profile(
    stack: &LayerStack,
    wavelength_nm: f64,
    sample_index: usize,
    probe: &DepthProbe,
) -> Result<PenetrationReport> {
    if sample_index == 0 || sample_index >= stack.len() {
        return Err(Error::Domain(format!(
            "resonance::sensitivity_profile: sample index {sample_index} must name a non-prism layer"
        )));
    }
    if !(probe.delta_eps.abs() <= PROFILE_MAX_DELTA_EPS) || probe.delta_eps == 0.0 {
        return Err(Error::Domain(format!(
            "resonance::sensitivity_profile: probe contrast must satisfy 0 < |δε| ≤ {PROFILE_MAX_DELTA_EPS}, got {}",
            probe.delta_eps
        )));
    }
    if probe.depths_nm.len() < 2 {
        return Err(Error::Domain(
            "resonance::sensitivity_profile: need at least 2 probe depths".into(),
        ));
    }
    let mut min_spacing = f64::INFINITY;
    for pair in probe.depths_nm.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::Domain(
                "resonance::sensitivity_profile: probe depths must be strictly increasing".into(),
            ));
        }
        min_spacing = min_spacing.min(pair[1] - pair[0]);
    }
    if probe.depths_nm[0] < 0.0 || !probe.depths_nm.iter().all(|z| z.is_finite()) {
        return Err(Error::Domain(
            "resonance::sensitivity_profile: probe depths must be finite and ≥ 0".into(),
        ));
    }
    if !(probe.slab_thickness_nm > 0.0) || probe.slab_thickness_nm > 0.5 * min_spacing {
        return Err(Error::Domain(format!(
            "resonance::sensitivity_profile: slab thickness {} nm must be positive and well below \
             the grid spacing {min_spacing} nm",
            probe.slab_thickness_nm
        )));
    }

    let bracket = default_bracket(stack)?;
    let theta_base = find_spr_angle(stack, wavelength_nm, bracket)?;

    let mut profile = Vec::with_capacity(probe.depths_nm.len());
    for &z in &probe.depths_nm {
        let perturbed = insert_probe_slab(stack, sample_index, z, probe.slab_thickness_nm, probe.delta_eps)?;
        let theta = find_spr_angle(&perturbed, wavelength_nm, bracket).map_err(|e| {
            Error::Perturbation(format!(
                "resonance::sensitivity_profile: resonance lost with probe at z = {z} nm: {e}"
            ))
        })?;
        let shift = angle_shift_to_ru(theta - theta_base);
        if !(shift > 0.0) {
            return Err(Error::Profile(format!(
                "resonance::sensitivity_profile: non-positive shift {shift:.4} RU at z = {z} nm; \
                 the resonance does not respond monotonically to the probe"
            )));
        }
        profile.push((z, shift));
    }

    let log_shift: Vec<f64> = profile.iter().map(|&(_, s)| s.ln()).collect();
    let fit = linear_fit(&probe.depths_nm, &log_shift)?;
    if fit.slope >= 0.0 {
        return Err(Error::Profile(format!(
            "resonance::sensitivity_profile: fitted decay rate is non-negative ({:.3e}); \
             the profile does not decay with depth",
            fit.slope
        )));
    }
    Ok(PenetrationReport {
        analytic_dp_nm: penetration_depth_analytic(stack, wavelength_nm, sample_index)?,
        fitted_dp_nm: -1.0 / fit.slope,
        profile,
        fit_r_squared: fit.r_squared,
    })
}

/// Difference of the resonance angles of two stacks at one wavelength,
/// located inside the intersection of their default brackets.
pub fn scenario_shift(
    before: &LayerStack,
    after: &LayerStack,
    wavelength_nm: f64,
) -> Result<ResonanceShift> {
    let b1 = default_bracket(before)?;
    let b2 = default_bracket(after)?;
    let shared = (b1.0.max(b2.0), b1.1.min(b2.1));
    if shared.0 >= shared.1 {
        return Err(Error::Bracket(format!(
            "resonance::scenario_shift: default brackets [{:.3}, {:.3}] and [{:.3}, {:.3}] do not overlap",
            b1.0, b1.1, b2.0, b2.1
        )));
    }
    let theta_before = find_spr_angle(before, wavelength_nm, shared)
        .map_err(|e| e.with_context("resonance::scenario_shift (before stack)"))?;
    let theta_after = find_spr_angle(after, wavelength_nm, shared)
        .map_err(|e| e.with_context("resonance::scenario_shift (after stack)"))?;
    Ok(ResonanceShift::from_degrees(theta_after - theta_before))
}

/// Rebuilds the stack with a probe slab of permittivity contrast `delta_eps`
/// occupying `[z, z + slab)` measured from the top of the sample layer.
/// Whichever media the interval crosses are split; each probe piece keeps
/// the permittivity of its host plus the contrast.
fn insert_probe_slab(
    stack: &LayerStack,
    sample_index: usize,
    z: f64,
    slab_nm: f64,
    delta_eps: f64,
) -> Result<LayerStack> {
    let layers = stack.layers();
    let mut rebuilt: Vec<Layer> = layers[..sample_index].to_vec();
    let contrast = Complex64::new(delta_eps, 0.0);
    let (slab_start, slab_end) = (z, z + slab_nm);

    let mut depth = 0.0;
    for (offset, layer) in layers[sample_index..].iter().enumerate() {
        let is_last = sample_index + offset == layers.len() - 1;
        let top = depth;
        let bottom = if is_last { f64::INFINITY } else { depth + layer.thickness_nm };
        let lo = slab_start.max(top);
        let hi = slab_end.min(bottom);
        if lo < hi {
            if lo > top {
                rebuilt.push(Layer::finite(layer.name.clone(), layer.permittivity, lo - top));
            }
            rebuilt.push(Layer::finite(
                format!("{}+probe", layer.name),
                layer.permittivity + contrast,
                hi - lo,
            ));
            if is_last {
                rebuilt.push(Layer::semi_infinite(layer.name.clone(), layer.permittivity));
            } else if hi < bottom {
                rebuilt.push(Layer::finite(layer.name.clone(), layer.permittivity, bottom - hi));
            }
        } else {
            rebuilt.push(layer.clone());
        }
        depth = bottom;
        if is_last {
            break;
        }
    }
    LayerStack::new(rebuilt)
}
