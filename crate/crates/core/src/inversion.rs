//! Inverse problem: measured resonance shifts back to permittivity and
//! refractive-index changes of one layer, and refractive-index increments
//! from concentration series.
//!
//! The forward map Δε → shift is evaluated with the same deterministic
//! resonance search everywhere, so a root found on the computed map is a
//! faithful inverse of computed shifts. The search brackets Δε in
//! [0, 0.2], wide enough for a full buffer-to-protein transition.

use num_complex::Complex64;

use crate::constants::{
    EPSILON_BRACKET_MIN, EPSILON_BRACKET_WIDTH, INVERSION_MAX_ITERATIONS, SHIFT_TOLERANCE_RU,
};
use crate::error::{Error, Result};
use crate::numerics::linear_fit;
use crate::optics::LayerStack;
use crate::resonance::{angle_shift_to_ru, default_bracket, find_spr_angle};

/// Outcome of a shift inversion.
///
/// `delta_n` is derived exactly from `delta_eps` through ε = n², so
/// (n₀ + Δn)² = ε₀ + Δε holds to rounding.
#[derive(Debug, Clone, Copy)]
pub struct InversionResult {
    pub delta_eps: f64,
    pub delta_n: f64,
    pub achieved_shift_ru: f64,
    pub iterations: u32,
}

/// Measured (concentration, shift) pairs over a known buffer index.
#[derive(Debug, Clone)]
pub struct ConcentrationSeries {
    points: Vec<(f64, f64)>,
    buffer_index: f64,
}

impl ConcentrationSeries {
    pub fn new(points: Vec<(f64, f64)>, buffer_index: f64) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Fit(format!(
                "inversion::ConcentrationSeries: need ≥ 2 points, got {}",
                points.len()
            )));
        }
        if !(buffer_index > 0.0) || !buffer_index.is_finite() {
            return Err(Error::Domain(format!(
                "inversion::ConcentrationSeries: buffer index must be positive, got {buffer_index}"
            )));
        }
        for &(c, s) in &points {
            if !c.is_finite() || !s.is_finite() || c < 0.0 {
                return Err(Error::Validation(format!(
                    "inversion::ConcentrationSeries: invalid point (c = {c}, shift = {s})"
                )));
            }
        }
        for (i, &(ci, _)) in points.iter().enumerate() {
            if points.iter().skip(i + 1).any(|&(cj, _)| cj == ci) {
                return Err(Error::Validation(format!(
                    "inversion::ConcentrationSeries: duplicate concentration {ci} mg/ml"
                )));
            }
        }
        Ok(ConcentrationSeries { points, buffer_index })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn buffer_index(&self) -> f64 {
        self.buffer_index
    }
}

/// Refractive-index increment recovered from a concentration series.
#[derive(Debug, Clone, Copy)]
pub struct IncrementFit {
    /// Slope of Δn versus concentration, (mg/ml)⁻¹.
    pub dn_dc: f64,
    /// First-order permittivity increment 2·n_buffer·dn_dc, (mg/ml)⁻¹.
    pub deps_dc: f64,
    /// Standard error of `dn_dc` from the least-squares fit.
    pub dn_dc_stderr: f64,
    /// Intercept of the measured shift (RU) versus concentration: the
    /// instrument-unit baseline of the series at zero concentration.
    pub intercept_ru: f64,
}

/// Exact Δn for a permittivity step: √(ε₀+Δε) − √ε₀.
pub fn epsilon_delta_to_n_delta(eps0: f64, delta_eps: f64) -> Result<f64> {
    if !(eps0 > 0.0) {
        return Err(Error::Domain(format!(
            "inversion::epsilon_delta_to_n_delta: base permittivity must be positive, got {eps0}"
        )));
    }
    if !(eps0 + delta_eps > 0.0) {
        return Err(Error::Domain(format!(
            "inversion::epsilon_delta_to_n_delta: perturbed permittivity must stay positive \
             (ε₀ = {eps0}, Δε = {delta_eps})"
        )));
    }
    Ok((eps0 + delta_eps).sqrt() - eps0.sqrt())
}

/// Finds the Δε of `layer_index` that reproduces `target_shift_ru`.
///
/// Safeguarded bisection with secant acceleration on the computed forward
/// map, driven until the Δε bracket is below 1e-9 so round trips through
/// the forward model are exact to that resolution. The achieved shift is
/// re-evaluated at the returned Δε and must land within 0.05 RU of the
/// target.
pub fn invert_shift_to_epsilon(
    stack: &LayerStack,
    wavelength_nm: f64,
    layer_index: usize,
    target_shift_ru: f64,
) -> Result<InversionResult> {
    if layer_index == 0 || layer_index >= stack.len() {
        return Err(Error::Domain(format!(
            "inversion::invert_shift_to_epsilon: layer index {layer_index} must name a non-prism layer"
        )));
    }
    let eps0 = stack.layers()[layer_index].permittivity;
    if eps0.im != 0.0 || eps0.re <= 0.0 {
        return Err(Error::Domain(format!(
            "inversion::invert_shift_to_epsilon: layer {layer_index} permittivity {eps0} must be \
             real and positive to carry a refractive index"
        )));
    }
    if !target_shift_ru.is_finite() {
        return Err(Error::Domain(
            "inversion::invert_shift_to_epsilon: target shift must be finite".into(),
        ));
    }

    let wide = default_bracket(stack)?;
    let theta_base = find_spr_angle(stack, wavelength_nm, wide)?;
    let mut evaluations: u32 = 1;

    let shift_at = |delta: f64, narrow: Option<(f64, f64)>| -> Result<f64> {
        let shifted = stack.with_permittivity(layer_index, eps0 + Complex64::new(delta, 0.0))?;
        let theta = find_spr_angle(&shifted, wavelength_nm, narrow.unwrap_or(wide))
            .map_err(|e| e.with_context("inversion::invert_shift_to_epsilon (forward map)"))?;
        Ok(angle_shift_to_ru(theta - theta_base))
    };

    // Monotonicity probe at the bracket ends and midpoint.
    let shift_hi = shift_at(EPSILON_BRACKET_WIDTH, None)?;
    let shift_mid = shift_at(0.5 * EPSILON_BRACKET_WIDTH, None)?;
    evaluations += 2;
    if shift_hi <= 0.0 || shift_mid < -SHIFT_TOLERANCE_RU || shift_mid > shift_hi + SHIFT_TOLERANCE_RU {
        return Err(Error::Ambiguity(format!(
            "inversion::invert_shift_to_epsilon: forward map is not monotonically increasing on \
             Δε ∈ [0, {EPSILON_BRACKET_WIDTH}] (shift(mid) = {shift_mid:.2} RU, shift(max) = {shift_hi:.2} RU)"
        )));
    }

    if target_shift_ru < -SHIFT_TOLERANCE_RU {
        return Err(Error::Range(format!(
            "inversion::invert_shift_to_epsilon: target {target_shift_ru:.3} RU is below the \
             achievable range [0, {shift_hi:.1}] RU"
        )));
    }
    if target_shift_ru > shift_hi + SHIFT_TOLERANCE_RU {
        return Err(Error::Range(format!(
            "inversion::invert_shift_to_epsilon: target {target_shift_ru:.3} RU exceeds the \
             achievable range [0, {shift_hi:.1}] RU"
        )));
    }

    // All dips for Δε in the bracket lie between the two extremes.
    let theta_hi = theta_base + shift_hi / crate::constants::RU_PER_DEGREE;
    let narrow = (
        (theta_base - 0.5).max(wide.0),
        (theta_hi + 0.5).min(wide.1),
    );

    // Degenerate edges where no sign change exists inside the bracket.
    if target_shift_ru <= 0.0 {
        return finish(eps0.re, 0.0, 0.0, target_shift_ru, evaluations);
    }
    if target_shift_ru >= shift_hi {
        return finish(eps0.re, EPSILON_BRACKET_WIDTH, shift_hi, target_shift_ru, evaluations);
    }

    let mut lo = 0.0_f64;
    let mut f_lo = -target_shift_ru;
    let mut hi = EPSILON_BRACKET_WIDTH;
    let mut f_hi = shift_hi - target_shift_ru;

    while hi - lo > EPSILON_BRACKET_MIN {
        if evaluations >= INVERSION_MAX_ITERATIONS {
            return Err(Error::Convergence(format!(
                "inversion::invert_shift_to_epsilon: bracket still {:.2e} wide after \
                 {evaluations} forward evaluations",
                hi - lo
            )));
        }
        // Alternate secant and bisection steps; the bisection half keeps
        // the shrink rate geometric when the secant stalls one-sided.
        let width = hi - lo;
        let secant_ok = (f_hi - f_lo).abs() > 0.0;
        let candidate = if evaluations % 2 == 0 && secant_ok {
            let x = lo - f_lo * width / (f_hi - f_lo);
            if x > lo + 0.01 * width && x < hi - 0.01 * width {
                x
            } else {
                0.5 * (lo + hi)
            }
        } else {
            0.5 * (lo + hi)
        };
        let f_mid = shift_at(candidate, Some(narrow))? - target_shift_ru;
        evaluations += 1;
        if f_mid == 0.0 {
            return finish(eps0.re, candidate, target_shift_ru, target_shift_ru, evaluations);
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = candidate;
            f_lo = f_mid;
        } else {
            hi = candidate;
            f_hi = f_mid;
        }
    }

    let delta_eps = 0.5 * (lo + hi);
    let achieved = shift_at(delta_eps, Some(narrow))?;
    evaluations += 1;
    if (achieved - target_shift_ru).abs() > SHIFT_TOLERANCE_RU {
        return Err(Error::Convergence(format!(
            "inversion::invert_shift_to_epsilon: converged bracket yields {achieved:.4} RU, \
             {:.4} RU away from the target",
            (achieved - target_shift_ru).abs()
        )));
    }
    finish(eps0.re, delta_eps, achieved, target_shift_ru, evaluations)
}

fn finish(
    eps0: f64,
    delta_eps: f64,
    achieved: f64,
    target: f64,
    iterations: u32,
) -> Result<InversionResult> {
    if (achieved - target).abs() > SHIFT_TOLERANCE_RU {
        return Err(Error::Convergence(format!(
            "inversion::invert_shift_to_epsilon: achieved shift {achieved:.4} RU misses the \
             target {target:.4} RU by more than {SHIFT_TOLERANCE_RU} RU"
        )));
    }
    Ok(InversionResult {
        delta_eps,
        delta_n: epsilon_delta_to_n_delta(eps0, delta_eps)?,
        achieved_shift_ru: achieved,
        iterations,
    })
}

/// Inverts every point of a concentration series to Δn and fits the
/// refractive-index increment by ordinary least squares with a free
/// intercept.
pub fn fit_refractive_increment(
    series: &ConcentrationSeries,
    stack: &LayerStack,
    wavelength_nm: f64,
    layer_index: usize,
) -> Result<IncrementFit> {
    let mut concentrations = Vec::with_capacity(series.points().len());
    let mut shifts = Vec::with_capacity(series.points().len());
    let mut delta_n = Vec::with_capacity(series.points().len());
    for &(c, shift) in series.points() {
        let inverted = invert_shift_to_epsilon(stack, wavelength_nm, layer_index, shift)
            .map_err(|e| e.with_context(&format!("series point (c = {c} mg/ml, shift = {shift} RU)")))?;
        concentrations.push(c);
        shifts.push(shift);
        delta_n.push(inverted.delta_n);
    }
    let n_fit = linear_fit(&concentrations, &delta_n)?;
    let ru_fit = linear_fit(&concentrations, &shifts)?;
    Ok(IncrementFit {
        dn_dc: n_fit.slope,
        deps_dc: 2.0 * series.buffer_index() * n_fit.slope,
        dn_dc_stderr: n_fit.slope_stderr,
        intercept_ru: ru_fit.intercept,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    #[test]
    fn zero_target_inverts_to_zero() {
        let stack = presets::sarcomere_633();
        let out = invert_shift_to_epsilon(&stack, 633.0, presets::SAMPLE_LAYER, 0.0).unwrap();
        assert!(out.delta_eps.abs() <= 1e-9);
        assert_eq!(out.achieved_shift_ru, 0.0);
    }

    #[test]
    fn round_trip_recovers_forward_delta() {
        let stack = presets::sarcomere_633();
        let layer = presets::SAMPLE_LAYER;
        let truth = 5.0e-4;
        let eps0 = stack.layers()[layer].permittivity;
        let shifted = stack
            .with_permittivity(layer, eps0 + Complex64::new(truth, 0.0))
            .unwrap();
        let bracket = default_bracket(&stack).unwrap();
        let theta0 = find_spr_angle(&stack, 633.0, bracket).unwrap();
        let theta1 = find_spr_angle(&shifted, 633.0, bracket).unwrap();
        let target = angle_shift_to_ru(theta1 - theta0);
        let out = invert_shift_to_epsilon(&stack, 633.0, layer, target).unwrap();
        assert_relative_eq!(out.delta_eps, truth, max_relative = 1e-4);
        assert!((out.achieved_shift_ru - target).abs() <= 0.05);
    }

    #[test]
    fn paper_scale_shift_inverts_to_expected_band() {
        let stack = presets::sarcomere_633();
        let out = invert_shift_to_epsilon(&stack, 633.0, presets::SAMPLE_LAYER, 120.0).unwrap();
        assert!(
            (0.8e-3..=2.4e-3).contains(&out.delta_eps),
            "Δε = {:.4e}",
            out.delta_eps
        );
        assert_relative_eq!(out.delta_eps, 1.4966e-3, max_relative = 1e-3);
        // consistency (n+Δn)² = ε+Δε
        let n0 = stack.layers()[presets::SAMPLE_LAYER].permittivity.re.sqrt();
        let lhs = (n0 + out.delta_n).powi(2);
        let rhs = stack.layers()[presets::SAMPLE_LAYER].permittivity.re + out.delta_eps;
        assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
    }

    #[test]
    fn larger_targets_give_larger_deltas() {
        let stack = presets::sarcomere_633();
        let mut previous = -1.0;
        for target in [10.0, 100.0, 400.0, 1500.0, 6000.0] {
            let out = invert_shift_to_epsilon(&stack, 633.0, presets::SAMPLE_LAYER, target).unwrap();
            assert!(out.delta_eps > previous, "Δε must grow with the target");
            previous = out.delta_eps;
        }
    }

    #[test]
    fn out_of_range_targets_are_rejected() {
        let stack = presets::sarcomere_633();
        assert!(matches!(
            invert_shift_to_epsilon(&stack, 633.0, presets::SAMPLE_LAYER, -25.0),
            Err(Error::Range(_))
        ));
        assert!(matches!(
            invert_shift_to_epsilon(&stack, 633.0, presets::SAMPLE_LAYER, 1.0e6),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn prism_and_lossy_layers_are_rejected() {
        let stack = presets::sarcomere_633();
        assert!(matches!(
            invert_shift_to_epsilon(&stack, 633.0, 0, 100.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            invert_shift_to_epsilon(&stack, 633.0, 1, 100.0), // gold
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn delta_conversion_examples() {
        assert_eq!(epsilon_delta_to_n_delta(1.7689, 0.0).unwrap(), 0.0);
        // Δn = 1e-3 forward: Δε = 1.331² − 1.33² = 2.661e-3; inverted back.
        let delta_eps = 1.331f64.powi(2) - 1.33f64.powi(2);
        assert_relative_eq!(delta_eps, 2.661e-3, max_relative = 1e-12);
        let dn = epsilon_delta_to_n_delta(1.7689, delta_eps).unwrap();
        assert_relative_eq!(dn, 1.0e-3, max_relative = 1e-10);
        // small-Δ regime: Δε ≈ 2nΔn to 0.1%
        let approx_deps = 2.0 * 1.33 * 1.0e-3;
        assert!((approx_deps - delta_eps).abs() / delta_eps < 1e-3);
        assert!(matches!(epsilon_delta_to_n_delta(-1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(epsilon_delta_to_n_delta(1.0, -2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn series_validation() {
        assert!(ConcentrationSeries::new(vec![(0.5, 10.0)], 1.33).is_err());
        assert!(ConcentrationSeries::new(vec![(0.5, 10.0), (0.5, 20.0)], 1.33).is_err());
        assert!(ConcentrationSeries::new(vec![(-0.5, 10.0), (1.0, 20.0)], 1.33).is_err());
        assert!(ConcentrationSeries::new(vec![(0.5, 10.0), (1.0, 20.0)], 0.0).is_err());
        assert!(ConcentrationSeries::new(vec![(0.5, 10.0), (1.0, 20.0)], 1.33).is_ok());
    }

    /// Synthetic exactly-linear series through the real forward model.
    fn synthetic_series(stack: &LayerStack, layer: usize, slope: f64, concentrations: &[f64]) -> Vec<(f64, f64)> {
        let bracket = default_bracket(stack).unwrap();
        let theta0 = find_spr_angle(stack, 633.0, bracket).unwrap();
        let eps0 = stack.layers()[layer].permittivity.re;
        let n0 = eps0.sqrt();
        concentrations
            .iter()
            .map(|&c| {
                let n = n0 + slope * c;
                let s = stack
                    .with_permittivity(layer, Complex64::new(n * n, 0.0))
                    .unwrap();
                let theta = find_spr_angle(&s, 633.0, bracket).unwrap();
                (c, angle_shift_to_ru(theta - theta0))
            })
            .collect()
    }

    #[test]
    fn exactly_linear_series_recovers_slope() {
        let stack = presets::gold_on_water();
        let layer = 2;
        let slope = 1.85e-3;
        let points = synthetic_series(&stack, layer, slope, &[0.51, 1.70, 5.1]);
        let series = ConcentrationSeries::new(points, 1.33).unwrap();
        let fit = fit_refractive_increment(&series, &stack, 633.0, layer).unwrap();
        assert!(
            (fit.dn_dc - slope).abs() <= 1e-9,
            "dn/dc = {:.12e} (|err| = {:.2e})",
            fit.dn_dc,
            (fit.dn_dc - slope).abs()
        );
        assert_relative_eq!(fit.deps_dc, 2.0 * 1.33 * slope, max_relative = 1e-6);
        // consistency with the commonly quoted first-order increment
        assert!((fit.deps_dc - 5.0e-3).abs() / 5.0e-3 < 0.03);
        assert!(fit.dn_dc_stderr < 1e-9);
        assert!(fit.intercept_ru.abs() < 5.0);
    }

    #[test]
    fn fit_is_permutation_invariant() {
        let stack = presets::gold_on_water();
        let layer = 2;
        let points = synthetic_series(&stack, layer, 1.85e-3, &[0.51, 1.70, 5.1]);
        let mut reversed = points.clone();
        reversed.reverse();
        let a = fit_refractive_increment(
            &ConcentrationSeries::new(points, 1.33).unwrap(),
            &stack,
            633.0,
            layer,
        )
        .unwrap();
        let b = fit_refractive_increment(
            &ConcentrationSeries::new(reversed, 1.33).unwrap(),
            &stack,
            633.0,
            layer,
        )
        .unwrap();
        assert_relative_eq!(a.dn_dc, b.dn_dc, max_relative = 1e-12);
        assert_relative_eq!(a.intercept_ru, b.intercept_ru, epsilon = 1e-9);
    }

    #[test]
    fn failing_point_is_identified() {
        let stack = presets::gold_on_water();
        let series = ConcentrationSeries::new(vec![(0.51, 200.0), (1.7, 1.0e7)], 1.33).unwrap();
        let err = fit_refractive_increment(&series, &stack, 633.0, 2).unwrap_err();
        assert!(matches!(err, Error::Range(_)));
        assert!(err.to_string().contains("c = 1.7"), "context: {err}");
    }

    #[test]
    fn deps_dn_ratio_is_twice_buffer_index() {
        let stack = presets::gold_on_water();
        let points = synthetic_series(&stack, 2, 1.0e-3, &[0.5, 2.0, 4.0]);
        let series = ConcentrationSeries::new(points, 1.4142).unwrap();
        let fit = fit_refractive_increment(&series, &stack, 633.0, 2).unwrap();
        assert_relative_eq!(fit.deps_dc / fit.dn_dc, 2.0 * 1.4142, max_relative = 1e-12);
    }
}
