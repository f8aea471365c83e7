//! p-polarized reflectance of a planar layered medium.
//!
//! A stack is an ordered list of layers from the incidence side (a lossless
//! prism) to a final semi-infinite medium. For a vacuum wavelength λ and an
//! incidence angle θ measured at the prism, the model is
//!
//! ```text
//!   k0 = 2π/λ                       vacuum wavenumber
//!   k  = k0 √ε₁ sin θ               tangential wavevector (conserved)
//!   kz = √(ε k0² − k²)              normal wavevector per layer, Im ≥ 0
//!   Z  = kz / (ε k0)                p-polarization layer impedance
//! ```
//!
//! and the input impedance is folded from the final medium inward through
//! each finite layer:
//!
//! ```text
//!   Z_in = Z · (Z_next − i Z tan(kz d)) / (Z − i Z_next tan(kz d))
//! ```
//!
//! The intensity reflectance is `R = |(Z_in − Z₁)/(Z_in + Z₁)|²`. The
//! time convention is e^{−iωt}, so absorbing media carry Im ε > 0 and the
//! Im(kz) ≥ 0 branch makes evanescent and absorbed fields decay away from
//! each interface.
//!
//! All angles are degrees at the public boundary and radians internally;
//! lengths are nanometres throughout.

use num_complex::Complex64;

use crate::constants::{IMPEDANCE_DENOMINATOR_GUARD, TAN_OVERFLOW_GUARD};
use crate::error::{Error, Result};

/// Thickness marker for the two outermost media.
pub const SEMI_INFINITE: f64 = f64::INFINITY;

/// One optical layer: a label, a relative permittivity, and a thickness
/// in nm (`SEMI_INFINITE` for the boundary media).
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub name: String,
    pub permittivity: Complex64,
    pub thickness_nm: f64,
}

impl Layer {
    /// Interior layer of finite thickness.
    pub fn finite(name: impl Into<String>, permittivity: Complex64, thickness_nm: f64) -> Self {
        Layer { name: name.into(), permittivity, thickness_nm }
    }

    /// Boundary medium (prism or final solution).
    pub fn semi_infinite(name: impl Into<String>, permittivity: Complex64) -> Self {
        Layer { name: name.into(), permittivity, thickness_nm: SEMI_INFINITE }
    }

    pub fn is_semi_infinite(&self) -> bool {
        self.thickness_nm == SEMI_INFINITE
    }
}

/// A validated stack of layers, ordered from prism to final medium.
///
/// Invariants enforced at construction: at least two layers; the first and
/// last are semi-infinite and every interior layer has a finite thickness
/// ≥ 0; all permittivities are finite; the prism permittivity is real and
/// positive (a lossy prism is outside the model).
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack {
    layers: Vec<Layer>,
}

impl LayerStack {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.len() < 2 {
            return Err(Error::Domain(format!(
                "optics::LayerStack: need at least 2 layers, got {}",
                layers.len()
            )));
        }
        for (i, layer) in layers.iter().enumerate() {
            let eps = layer.permittivity;
            if !eps.re.is_finite() || !eps.im.is_finite() {
                return Err(Error::Domain(format!(
                    "optics::LayerStack: non-finite permittivity in layer {i} ({})",
                    layer.name
                )));
            }
            if layer.thickness_nm.is_nan() || layer.thickness_nm < 0.0 {
                return Err(Error::Domain(format!(
                    "optics::LayerStack: invalid thickness {} in layer {i} ({})",
                    layer.thickness_nm, layer.name
                )));
            }
        }
        let last = layers.len() - 1;
        if !layers[0].is_semi_infinite() || !layers[last].is_semi_infinite() {
            return Err(Error::Domain(
                "optics::LayerStack: first and last layers must be semi-infinite".into(),
            ));
        }
        if let Some(i) = (1..last).find(|&i| layers[i].is_semi_infinite()) {
            return Err(Error::Domain(format!(
                "optics::LayerStack: interior layer {i} ({}) must have finite thickness",
                layers[i].name
            )));
        }
        let prism = layers[0].permittivity;
        if prism.im != 0.0 || prism.re <= 0.0 {
            return Err(Error::Domain(format!(
                "optics::LayerStack: prism permittivity must be real and positive, got {prism}"
            )));
        }
        Ok(LayerStack { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        false // a validated stack always has ≥ 2 layers
    }

    pub fn prism(&self) -> &Layer {
        &self.layers[0]
    }

    pub fn final_medium(&self) -> &Layer {
        &self.layers[self.layers.len() - 1]
    }

    /// Copy of the stack with the permittivity of one layer replaced.
    pub fn with_permittivity(&self, index: usize, permittivity: Complex64) -> Result<Self> {
        if index >= self.layers.len() {
            return Err(Error::Domain(format!(
                "optics::LayerStack: layer index {index} out of range (stack has {} layers)",
                self.layers.len()
            )));
        }
        let mut layers = self.layers.clone();
        layers[index].permittivity = permittivity;
        LayerStack::new(layers)
    }

    /// Critical angle between the prism and the final medium, degrees.
    /// `None` when the final medium is absorbing or optically denser than
    /// the prism, in which case no total internal reflection edge exists.
    pub fn critical_angle_deg(&self) -> Option<f64> {
        let eps_final = self.final_medium().permittivity;
        let eps_prism = self.prism().permittivity.re;
        if eps_final.im != 0.0 || eps_final.re <= 0.0 || eps_final.re >= eps_prism {
            return None;
        }
        Some((eps_final.re / eps_prism).sqrt().asin().to_degrees())
    }
}

/// Wavelength and incidence angle for one evaluation.
///
/// The angle is stored in degrees (the unit of every public interface)
/// and converted to radians where the wavevectors are formed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalContext {
    wavelength_nm: f64,
    angle_deg: f64,
}

impl OpticalContext {
    pub fn new(wavelength_nm: f64, angle_deg: f64) -> Result<Self> {
        if !(wavelength_nm > 0.0) || !wavelength_nm.is_finite() {
            return Err(Error::Domain(format!(
                "optics::OpticalContext: wavelength must be positive and finite, got {wavelength_nm} nm"
            )));
        }
        if !(0.0..90.0).contains(&angle_deg) {
            return Err(Error::Domain(format!(
                "optics::OpticalContext: incidence angle must satisfy 0° ≤ θ < 90°, got {angle_deg}°"
            )));
        }
        Ok(OpticalContext { wavelength_nm, angle_deg })
    }

    pub fn wavelength_nm(&self) -> f64 {
        self.wavelength_nm
    }

    pub fn angle_deg(&self) -> f64 {
        self.angle_deg
    }
}

/// Vacuum wavenumber 2π/λ in rad/nm.
pub fn vacuum_wavenumber(wavelength_nm: f64) -> Result<f64> {
    if !(wavelength_nm > 0.0) || !wavelength_nm.is_finite() {
        return Err(Error::Domain(format!(
            "optics::vacuum_wavenumber: wavelength must be positive and finite, got {wavelength_nm} nm"
        )));
    }
    Ok(std::f64::consts::TAU / wavelength_nm)
}

/// Tangential wavevector k0·√ε₁·sin θ in rad/nm; θ in radians.
pub fn tangential_wavevector(k0: f64, prism_eps: f64, theta_rad: f64) -> Result<f64> {
    if !(prism_eps > 0.0) {
        return Err(Error::Domain(format!(
            "optics::tangential_wavevector: prism permittivity must be positive, got {prism_eps}"
        )));
    }
    Ok(k0 * prism_eps.sqrt() * theta_rad.sin())
}

/// Normal wavevector √(ε k0² − k²) on the decaying branch: Im(kz) ≥ 0,
/// and Re(kz) ≥ 0 when the imaginary part vanishes.
pub fn normal_wavevector(eps: Complex64, k0: f64, k: f64) -> Result<Complex64> {
    if !(k0 > 0.0) {
        return Err(Error::Domain(format!(
            "optics::normal_wavevector: k0 must be positive, got {k0}"
        )));
    }
    if k < 0.0 {
        return Err(Error::Domain(format!(
            "optics::normal_wavevector: tangential wavevector must be ≥ 0, got {k}"
        )));
    }
    Ok(decaying_sqrt(eps * (k0 * k0) - Complex64::new(k * k, 0.0)))
}

/// p-polarization layer impedance kz/(ε k0).
pub fn layer_impedance(eps: Complex64, kz: Complex64, k0: f64) -> Result<Complex64> {
    if eps.norm() == 0.0 {
        return Err(Error::Singularity(
            "optics::layer_impedance: zero permittivity".into(),
        ));
    }
    Ok(kz / (eps * k0))
}

/// Input impedance seen from the prism side, folded inward from the final
/// medium through every finite layer.
pub fn input_impedance(stack: &LayerStack, ctx: &OpticalContext) -> Result<Complex64> {
    let (_, z_in) = impedances(stack, ctx)?;
    Ok(z_in)
}

/// Intensity reflectance |(Z_in − Z₁)/(Z_in + Z₁)|².
///
/// No clamping is applied: for passive stacks a value outside
/// [0, 1 + 1e-9] indicates a defect, not something to hide.
pub fn reflectance(stack: &LayerStack, ctx: &OpticalContext) -> Result<f64> {
    let (z_prism, z_in) = impedances(stack, ctx)?;
    let den = z_in + z_prism;
    if den.norm() < IMPEDANCE_DENOMINATOR_GUARD {
        return Err(Error::Singularity(
            "optics::reflectance: prism interface impedance sum is singular".into(),
        ));
    }
    Ok(((z_in - z_prism) / den).norm_sqr())
}

/// Convenience wrapper: reflectance at a wavelength and angle in degrees.
pub fn reflectance_at(stack: &LayerStack, wavelength_nm: f64, angle_deg: f64) -> Result<f64> {
    reflectance(stack, &OpticalContext::new(wavelength_nm, angle_deg)?)
}

/// Prism impedance and input impedance at the first interior interface.
fn impedances(stack: &LayerStack, ctx: &OpticalContext) -> Result<(Complex64, Complex64)> {
    let layers = stack.layers();
    let n = layers.len();
    let k0 = vacuum_wavenumber(ctx.wavelength_nm())?;
    let k = tangential_wavevector(k0, stack.prism().permittivity.re, ctx.angle_deg().to_radians())?;

    let mut impedance = Vec::with_capacity(n);
    for (i, layer) in layers.iter().enumerate() {
        let kz = normal_wavevector(layer.permittivity, k0, k)?;
        let z = layer_impedance(layer.permittivity, kz, k0)
            .map_err(|e| e.with_context(&format!("layer {i} ({})", layer.name)))?;
        impedance.push((kz, z));
    }

    let mut z_in = impedance[n - 1].1;
    for m in (1..n - 1).rev() {
        let (kz, z) = impedance[m];
        let phase = kz * layers[m].thickness_nm;
        let t = complex_tan(phase);
        if !t.re.is_finite() || !t.im.is_finite() || t.norm() > TAN_OVERFLOW_GUARD {
            // Opaque-layer limit of the recursion.
            if z_in.norm() < IMPEDANCE_DENOMINATOR_GUARD {
                return Err(Error::Singularity(format!(
                    "optics::input_impedance: singular impedance behind layer {m} ({})",
                    layers[m].name
                )));
            }
            z_in = z * z / z_in;
        } else {
            let den = z - Complex64::i() * z_in * t;
            if den.norm() < IMPEDANCE_DENOMINATOR_GUARD {
                return Err(Error::Singularity(format!(
                    "optics::input_impedance: singular denominator at layer {m} ({})",
                    layers[m].name
                )));
            }
            z_in = z * (z_in - Complex64::i() * z * t) / den;
        }
    }
    Ok((impedance[0].1, z_in))
}

/// Principal square root steered onto the decaying branch.
pub(crate) fn decaying_sqrt(z: Complex64) -> Complex64 {
    let mut s = z.sqrt();
    if s.im < 0.0 {
        s = -s;
    }
    if s.im == 0.0 && s.re < 0.0 {
        s = -s;
    }
    s
}

/// Complex tangent, saturated to ±i for large imaginary phase where the
/// textbook formula would evaluate inf/inf.
fn complex_tan(z: Complex64) -> Complex64 {
    if z.im.abs() > 200.0 {
        return Complex64::new(0.0, z.im.signum());
    }
    z.tan()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn two_media(eps1: f64, eps2: Complex64) -> LayerStack {
        LayerStack::new(vec![
            Layer::semi_infinite("a", c(eps1, 0.0)),
            Layer::semi_infinite("b", eps2),
        ])
        .unwrap()
    }

    fn sarcomere() -> LayerStack {
        crate::presets::sarcomere_633()
    }

    #[test]
    fn vacuum_wavenumber_matches_arithmetic() {
        assert_relative_eq!(vacuum_wavenumber(633.0).unwrap(), 9.926043e-3, max_relative = 1e-6);
        assert_relative_eq!(vacuum_wavenumber(760.0).unwrap(), 8.267349e-3, max_relative = 1e-6);
    }

    #[test]
    fn vacuum_wavenumber_inverse_proportionality() {
        // Doubling λ exactly halves k0 (scaling by a power of two is exact).
        assert_eq!(vacuum_wavenumber(500.0).unwrap() / 2.0, vacuum_wavenumber(1000.0).unwrap());
    }

    #[test]
    fn vacuum_wavenumber_rejects_nonpositive() {
        assert!(matches!(vacuum_wavenumber(0.0), Err(Error::Domain(_))));
        assert!(matches!(vacuum_wavenumber(-633.0), Err(Error::Domain(_))));
    }

    #[test]
    fn tangential_wavevector_limits() {
        let k0 = vacuum_wavenumber(633.0).unwrap();
        assert_eq!(tangential_wavevector(k0, 2.30, 0.0).unwrap(), 0.0);
        let k = tangential_wavevector(k0, 2.30, std::f64::consts::FRAC_PI_2).unwrap();
        assert_relative_eq!(k / k0, 1.516575, max_relative = 1e-6);
        assert!(matches!(
            tangential_wavevector(k0, -1.0, 0.3),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn normal_wavevector_normal_incidence() {
        let k0 = vacuum_wavenumber(633.0).unwrap();
        let kz = normal_wavevector(c(2.25, 0.0), k0, 0.0).unwrap();
        assert_relative_eq!(kz.re, 1.5 * k0, max_relative = 1e-14);
        assert_eq!(kz.im, 0.0);
    }

    #[test]
    fn normal_wavevector_evanescent_branch() {
        let k0 = vacuum_wavenumber(633.0).unwrap();
        // ε k0² < k²: purely imaginary, decaying branch.
        let kz = normal_wavevector(c(1.0, 0.0), k0, 1.4 * k0).unwrap();
        assert_eq!(kz.re, 0.0);
        assert!(kz.im > 0.0);
    }

    #[test]
    fn normal_wavevector_squaring_oracle_gold() {
        let k0 = vacuum_wavenumber(633.0).unwrap();
        let eps = c(-13.2, 1.25);
        for theta in [0.0_f64, 30.0, 55.0, 72.0, 89.0] {
            let k = tangential_wavevector(k0, 2.30, theta.to_radians()).unwrap();
            let kz = normal_wavevector(eps, k0, k).unwrap();
            assert!(kz.im > 0.0, "decaying branch at θ={theta}");
            let expected = eps * k0 * k0 - c(k * k, 0.0);
            let err = (kz * kz - expected).norm() / expected.norm();
            assert!(err < 1e-12, "branch consistency at θ={theta}: rel err {err:.3e}");
        }
    }

    #[test]
    fn layer_impedance_real_normal_incidence() {
        let k0 = vacuum_wavenumber(633.0).unwrap();
        let eps = c(2.25, 0.0);
        let kz = normal_wavevector(eps, k0, 0.0).unwrap();
        let z = layer_impedance(eps, kz, k0).unwrap();
        assert_relative_eq!(z.re, 1.0 / 1.5, max_relative = 1e-14);
        assert_eq!(z.im, 0.0);
    }

    #[test]
    fn layer_impedance_is_deterministic_and_consistent() {
        let k0 = vacuum_wavenumber(633.0).unwrap();
        let eps = c(-13.2, 1.25);
        let k = tangential_wavevector(k0, 2.30, 1.2).unwrap();
        let kz = normal_wavevector(eps, k0, k).unwrap();
        let z1 = layer_impedance(eps, kz, k0).unwrap();
        let z2 = layer_impedance(eps, kz, k0).unwrap();
        assert_eq!(z1, z2);
        assert_relative_eq!((z1 * eps * k0).re, kz.re, max_relative = 1e-13);
        assert_relative_eq!((z1 * eps * k0).im, kz.im, max_relative = 1e-13);
    }

    #[test]
    fn layer_impedance_rejects_zero_permittivity() {
        let k0 = vacuum_wavenumber(633.0).unwrap();
        assert!(matches!(
            layer_impedance(c(0.0, 0.0), c(1.0, 0.0), k0),
            Err(Error::Singularity(_))
        ));
    }

    #[test]
    fn zero_thickness_interior_layers_collapse() {
        // All interior thicknesses zero: Z_in equals the final medium impedance.
        let ctx = OpticalContext::new(633.0, 40.0).unwrap();
        let stack = LayerStack::new(vec![
            Layer::semi_infinite("prism", c(2.30, 0.0)),
            Layer::finite("gold", c(-13.2, 1.25), 0.0),
            Layer::finite("dextran", c(1.78, 0.0), 0.0),
            Layer::semi_infinite("solution", c(1.96, 0.0)),
        ])
        .unwrap();
        let z_in = input_impedance(&stack, &ctx).unwrap();
        let bare = two_media(2.30, c(1.96, 0.0));
        let z_bare = input_impedance(&bare, &ctx).unwrap();
        assert_relative_eq!(z_in.re, z_bare.re, max_relative = 1e-14);
        assert_relative_eq!(z_in.im, z_bare.im, max_relative = 1e-14);
    }

    #[test]
    fn layer_matching_final_medium_is_invisible() {
        let ctx = OpticalContext::new(633.0, 65.0).unwrap();
        let with_pad = LayerStack::new(vec![
            Layer::semi_infinite("prism", c(2.30, 0.0)),
            Layer::finite("gold", c(-13.2, 1.25), 47.0),
            Layer::finite("pad", c(1.78, 0.0), 123.0),
            Layer::semi_infinite("solution", c(1.78, 0.0)),
        ])
        .unwrap();
        let without = LayerStack::new(vec![
            Layer::semi_infinite("prism", c(2.30, 0.0)),
            Layer::finite("gold", c(-13.2, 1.25), 47.0),
            Layer::semi_infinite("solution", c(1.78, 0.0)),
        ])
        .unwrap();
        let a = reflectance(&with_pad, &ctx).unwrap();
        let b = reflectance(&without, &ctx).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-12);
    }

    #[test]
    fn reflectance_homogeneous_stack_is_zero() {
        let ctx = OpticalContext::new(633.0, 37.0).unwrap();
        let stack = LayerStack::new(vec![
            Layer::semi_infinite("prism", c(2.30, 0.0)),
            Layer::finite("same", c(2.30, 0.0), 100.0),
            Layer::semi_infinite("again", c(2.30, 0.0)),
        ])
        .unwrap();
        assert!(reflectance(&stack, &ctx).unwrap() < 1e-28);
    }

    #[test]
    fn reflectance_fresnel_normal_incidence() {
        let stack = two_media(2.25, c(1.0, 0.0));
        let r = reflectance_at(&stack, 633.0, 0.0).unwrap();
        assert_relative_eq!(r, 0.04, max_relative = 1e-12);
    }

    #[test]
    fn reflectance_total_internal_reflection() {
        let stack = two_media(2.25, c(1.7689, 0.0));
        // Critical angle asin(1.33/1.5) ≈ 62.46°.
        for theta in [63.0, 70.0, 75.0, 80.0, 89.0] {
            let r = reflectance_at(&stack, 633.0, theta).unwrap();
            assert!((r - 1.0).abs() < 1e-9, "TIR at θ={theta}: R={r}");
        }
    }

    #[test]
    fn sarcomere_stack_has_deep_interior_minimum() {
        let stack = sarcomere();
        let mut best = (0.0_f64, f64::INFINITY);
        let mut theta = 55.0;
        while theta <= 75.0 {
            let r = reflectance_at(&stack, 633.0, theta).unwrap();
            if r < best.1 {
                best = (theta, r);
            }
            theta += 0.05;
        }
        assert!(best.0 > 55.0 + 0.05 && best.0 < 75.0 - 0.05, "interior minimum");
        assert!(best.1 < 0.3, "R_min = {}", best.1);
    }

    #[test]
    fn stack_validation_catches_structural_errors() {
        let sole = vec![Layer::semi_infinite("only", c(1.0, 0.0))];
        assert!(matches!(LayerStack::new(sole), Err(Error::Domain(_))));

        let interior_inf = vec![
            Layer::semi_infinite("prism", c(2.3, 0.0)),
            Layer::semi_infinite("middle", c(1.5, 0.0)),
            Layer::semi_infinite("out", c(1.0, 0.0)),
        ];
        assert!(matches!(LayerStack::new(interior_inf), Err(Error::Domain(_))));

        let lossy_prism = vec![
            Layer::semi_infinite("prism", c(2.3, 0.1)),
            Layer::semi_infinite("out", c(1.0, 0.0)),
        ];
        assert!(matches!(LayerStack::new(lossy_prism), Err(Error::Domain(_))));

        let finite_ends = vec![
            Layer::finite("prism", c(2.3, 0.0), 10.0),
            Layer::semi_infinite("out", c(1.0, 0.0)),
        ];
        assert!(matches!(LayerStack::new(finite_ends), Err(Error::Domain(_))));
    }

    #[test]
    fn context_validation() {
        assert!(OpticalContext::new(633.0, 89.99).is_ok());
        assert!(matches!(OpticalContext::new(633.0, 90.0), Err(Error::Domain(_))));
        assert!(matches!(OpticalContext::new(633.0, -0.1), Err(Error::Domain(_))));
        assert!(matches!(OpticalContext::new(0.0, 10.0), Err(Error::Domain(_))));
    }

    #[test]
    fn critical_angle() {
        let stack = two_media(2.25, c(1.7689, 0.0));
        let theta_c = stack.critical_angle_deg().unwrap();
        assert_relative_eq!(theta_c, 62.4573, max_relative = 1e-4);
        // Denser final medium: no TIR edge.
        assert!(two_media(2.25, c(3.0, 0.0)).critical_angle_deg().is_none());
        assert!(two_media(2.25, c(1.7, 0.3)).critical_angle_deg().is_none());
    }
}
