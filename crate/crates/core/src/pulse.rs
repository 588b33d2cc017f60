//! Laser pulses with a sin² envelope, in atomic units.

use core::f64::consts::PI;

use crate::{Error, Result};

/// Fine-structure constant.
pub const ALPHA: f64 = 1.0 / 137.035999084;
/// Bohr radius in nanometres.
pub const BOHR_NM: f64 = 0.0529177210903;
/// Intensity corresponding to unit field amplitude, W/cm².
pub const ATOMIC_INTENSITY_W_CM2: f64 = 3.50944758e16;

/// Photon angular frequency (a.u.) for a vacuum wavelength in nanometres.
pub fn omega_from_wavelength_nm(lambda_nm: f64) -> f64 {
    2.0 * PI / (ALPHA * (lambda_nm / BOHR_NM))
}

/// Peak intensity in atomic units for a value in W/cm².
pub fn intensity_from_w_cm2(intensity: f64) -> f64 {
    intensity / ATOMIC_INTENSITY_W_CM2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gauge {
    Length,
    Velocity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PulseShape {
    /// `A(t) = (F0 / w) f(t) sin(w t)`, `F = -dA/dt`.
    VectorPotential,
    /// `F(t) = -F0 f(t) sin(w t)`, `A = -int_0^t F`.
    Field,
    /// No field at all; the period still sets the scaling schedule.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    pub omega: f64,
    /// Peak field `F0 = sqrt(I)`.
    pub peak_field: f64,
    pub cycles: f64,
    pub shape: PulseShape,
}

impl PulseSpec {
    pub fn new(omega: f64, intensity: f64, cycles: f64, shape: PulseShape) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::InvalidSpec(alloc::format!(
                "omega must be positive, got {omega}"
            )));
        }
        if !(intensity >= 0.0) || !intensity.is_finite() {
            return Err(Error::InvalidSpec(alloc::format!(
                "intensity must be non-negative, got {intensity}"
            )));
        }
        if !(cycles > 0.0) || !cycles.is_finite() {
            return Err(Error::InvalidSpec(alloc::format!(
                "cycles must be positive, got {cycles}"
            )));
        }
        Ok(PulseSpec {
            omega,
            peak_field: libm::sqrt(intensity),
            cycles,
            shape,
        })
    }

    /// Pulse from wavelength (nm), intensity (W/cm²) and cycle count.
    pub fn from_lab(
        lambda_nm: f64,
        intensity_w_cm2: f64,
        cycles: f64,
        shape: PulseShape,
    ) -> Result<Self> {
        Self::new(
            omega_from_wavelength_nm(lambda_nm),
            intensity_from_w_cm2(intensity_w_cm2),
            cycles,
            shape,
        )
    }

    /// Pulse duration `T = 2 pi N / w`.
    pub fn duration(&self) -> f64 {
        2.0 * PI * self.cycles / self.omega
    }

    pub fn optical_cycle(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn ponderomotive_energy(&self) -> f64 {
        self.peak_field * self.peak_field / (4.0 * self.omega * self.omega)
    }

    /// The field-defined shape leaves `A(T) != 0` and is only valid in the length gauge.
    pub fn check_gauge(&self, gauge: Gauge) -> Result<()> {
        if self.shape == PulseShape::Field && gauge == Gauge::Velocity {
            return Err(Error::Configuration(
                "a field-defined pulse requires the length gauge".into(),
            ));
        }
        Ok(())
    }

    /// `sin^2(pi t / T)` on `[0, T]`, zero elsewhere.
    pub fn envelope(&self, t: f64) -> f64 {
        let tt = self.duration();
        if !(0.0..=tt).contains(&t) {
            return 0.0;
        }
        let s = libm::sin(PI * t / tt);
        s * s
    }

    fn envelope_dot(&self, t: f64) -> f64 {
        let tt = self.duration();
        if !(0.0..=tt).contains(&t) {
            return 0.0;
        }
        PI / tt * libm::sin(2.0 * PI * t / tt)
    }

    /// `(F(t), A(t))`.
    pub fn field_and_potential(&self, t: f64) -> (f64, f64) {
        let w = self.omega;
        let f0 = self.peak_field;
        let tt = self.duration();
        match self.shape {
            PulseShape::None => (0.0, 0.0),
            PulseShape::VectorPotential => {
                if !(0.0..=tt).contains(&t) {
                    return (0.0, 0.0);
                }
                let (s, c) = libm::sincos(w * t);
                let f = self.envelope(t);
                let a = f0 / w * f * s;
                let field = -(f0 / w) * (self.envelope_dot(t) * s + f * w * c);
                (field, a)
            }
            PulseShape::Field => {
                let field = if (0.0..=tt).contains(&t) {
                    -f0 * self.envelope(t) * libm::sin(w * t)
                } else {
                    0.0
                };
                (field, f0 * sin2_sin_integral(PI / tt, w, t.clamp(0.0, tt)))
            }
        }
    }
}

// int_0^t sin^2(a s) sin(w s) ds
fn sin2_sin_integral(a: f64, w: f64, t: f64) -> f64 {
    // (1 - cos(k t)) / k written so that k -> 0 is harmless
    let h = |k: f64| {
        if k == 0.0 {
            0.0
        } else {
            let s = libm::sin(0.5 * k * t);
            2.0 * s * s / k
        }
    };
    0.5 * h(w) - 0.25 * (h(w + 2.0 * a) + h(w - 2.0 * a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn three_um() -> PulseSpec {
        PulseSpec::from_lab(3000.0, 1e14, 3.0, PulseShape::VectorPotential).unwrap()
    }

    #[test]
    fn lab_units() {
        let p = three_um();
        assert!((p.omega - 0.01519).abs() < 5e-6, "{}", p.omega);
        assert!((p.optical_cycle() - 413.7).abs() < 0.05);
        assert!((p.peak_field - 5.338e-2).abs() < 5e-5);
        assert!((p.peak_field * p.peak_field - 2.849e-3).abs() < 5e-7);
        assert!((p.ponderomotive_energy() - 3.088).abs() < 1e-3);
    }

    #[test]
    fn envelope_endpoints_and_peak() {
        let p = three_um();
        let tt = p.duration();
        assert_eq!(p.envelope(0.0), 0.0);
        assert!(p.envelope(tt) < 1e-30);
        assert!((p.envelope(tt / 2.0) - 1.0).abs() < 1e-15);
        assert_eq!(p.envelope(tt * 1.1), 0.0);
        assert_eq!(p.field_and_potential(0.0), (0.0, 0.0));
    }

    #[test]
    fn vector_potential_pulse_has_zero_area() {
        let p = PulseSpec::new(0.057, 0.0028, 3.0, PulseShape::VectorPotential).unwrap();
        let tt = p.duration();
        let n = 20000;
        let h = tt / n as f64;
        let mut area = 0.0;
        for k in 0..=n {
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            area += w * h * p.field_and_potential(k as f64 * h).0;
        }
        assert!(area.abs() < 1e-10, "{area}");
        assert!(p.field_and_potential(tt).1.abs() < 1e-15);
    }

    #[test]
    fn field_pulse_keeps_its_potential() {
        let p = PulseSpec::new(0.057, 0.0028, 0.5, PulseShape::Field).unwrap();
        let tt = p.duration();
        let (f, a) = p.field_and_potential(2.0 * tt);
        assert_eq!(f, 0.0);
        assert!(a.abs() > 0.1 * p.peak_field / p.omega);
        assert_eq!(a, p.field_and_potential(tt).1);
        assert!(p.check_gauge(Gauge::Velocity).is_err());
        assert!(p.check_gauge(Gauge::Length).is_ok());
    }

    proptest! {
        #[test]
        fn field_is_minus_derivative_of_potential(
            frac in 0.001f64..0.999,
            half in proptest::bool::ANY,
            w in 0.02f64..0.5,
        ) {
            let (cycles, shape) = if half { (0.5, PulseShape::Field) } else { (3.0, PulseShape::VectorPotential) };
            let p = PulseSpec::new(w, 0.003, cycles, shape).unwrap();
            let t = frac * p.duration();
            let h = 1e-4 / w;
            let fd = -(p.field_and_potential(t + h).1 - p.field_and_potential(t - h).1) / (2.0 * h);
            let f = p.field_and_potential(t).0;
            prop_assert!((fd - f).abs() <= 1e-8 * p.peak_field.max(f.abs()) * 10.0);
        }
    }
}
