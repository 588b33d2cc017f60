//! Time-scaling factor `R(t)` and the exterior coordinate map.
//!
//! `r = xi` for `xi <= r_sigma` and `r = r_sigma + R(t) (xi - r_sigma)` beyond.
//! During the pulse `R''` follows the sin² envelope, afterwards `R` grows
//! linearly with slope `R_inf`.

use core::f64::consts::PI;

use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scale {
    pub r: f64,
    pub r_dot: f64,
    pub r_ddot: f64,
}

impl Scale {
    pub const IDENTITY: Scale = Scale {
        r: 1.0,
        r_dot: 0.0,
        r_ddot: 0.0,
    };

    pub fn xi_to_r(&self, xi: f64, r_sigma: f64) -> f64 {
        if xi <= r_sigma {
            xi
        } else {
            r_sigma + self.r * (xi - r_sigma)
        }
    }

    pub fn r_to_xi(&self, r: f64, r_sigma: f64) -> f64 {
        if r <= r_sigma {
            r
        } else {
            r_sigma + (r - r_sigma) / self.r
        }
    }

    /// `phi = m * psi` with `m = sqrt(R) exp(-i R R' (xi - r_sigma)^2 / 2)`.
    pub fn phase_factor(&self, xi: f64, r_sigma: f64, direction: Direction) -> Result<C64> {
        if !(xi > r_sigma) {
            return Err(Error::Domain(alloc::format!(
                "phase transform needs xi > r_sigma, got xi = {xi}, r_sigma = {r_sigma}"
            )));
        }
        let d = xi - r_sigma;
        let theta = -0.5 * self.r * self.r_dot * d * d;
        let m = crate::linalg::cis(theta) * libm::sqrt(self.r);
        Ok(match direction {
            Direction::Forward => m,
            Direction::Inverse => crate::linalg::cis(-theta) / libm::sqrt(self.r),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `psi -> phi`
    Forward,
    /// `phi -> psi`
    Inverse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingSchedule {
    pub r_inf: f64,
    pub pulse_t: f64,
}

impl ScalingSchedule {
    pub fn new(r_inf: f64, pulse_t: f64) -> Result<Self> {
        if !(r_inf >= 0.0) || !r_inf.is_finite() {
            return Err(Error::InvalidSpec(alloc::format!(
                "R_inf must be non-negative, got {r_inf}"
            )));
        }
        if !(pulse_t > 0.0) || !pulse_t.is_finite() {
            return Err(Error::InvalidSpec(alloc::format!(
                "pulse duration must be positive, got {pulse_t}"
            )));
        }
        Ok(ScalingSchedule { r_inf, pulse_t })
    }

    /// `R == 1` for all times.
    pub fn disabled() -> Self {
        ScalingSchedule {
            r_inf: 0.0,
            pulse_t: 1.0,
        }
    }

    pub fn is_active(&self) -> bool {
        self.r_inf > 0.0
    }

    pub fn scale(&self, t: f64) -> Scale {
        if self.r_inf == 0.0 {
            return Scale::IDENTITY;
        }
        let (ri, tt) = (self.r_inf, self.pulse_t);
        if t <= tt {
            let ph = 2.0 * PI * t / tt;
            let (s, c) = libm::sincos(ph);
            Scale {
                r: ri / (2.0 * tt) * (t * t + tt * tt / (2.0 * PI * PI) * (c - 1.0)) + 1.0,
                r_dot: ri / tt * (t - tt / (2.0 * PI) * s),
                r_ddot: ri / tt * (1.0 - c),
            }
        } else {
            Scale {
                r: ri * (t - tt) + 0.5 * tt * ri + 1.0,
                r_dot: ri,
                r_ddot: 0.0,
            }
        }
    }

    pub fn map_xi_to_r(&self, xi: f64, t: f64, r_sigma: f64) -> f64 {
        self.scale(t).xi_to_r(xi, r_sigma)
    }

    pub fn map_r_to_xi(&self, r: f64, t: f64, r_sigma: f64) -> f64 {
        self.scale(t).r_to_xi(r, r_sigma)
    }

    pub fn phase_transform(
        &self,
        xi: f64,
        t: f64,
        r_sigma: f64,
        direction: Direction,
    ) -> Result<C64> {
        self.scale(t).phase_factor(xi, r_sigma, direction)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn schedule_values() {
        let s = ScalingSchedule::new(0.01, 1241.1).unwrap();
        assert_eq!(
            s.scale(0.0),
            Scale {
                r: 1.0,
                r_dot: 0.0,
                r_ddot: 0.0
            }
        );
        let end = s.scale(1241.1);
        assert!((end.r - 7.2055).abs() < 1e-12);
        assert!((end.r_dot - 0.01).abs() < 1e-15);
        // continuity at T
        let after = s.scale(1241.1 + 1e-9);
        assert!((after.r - end.r).abs() < 1e-10 && (after.r_dot - end.r_dot).abs() < 1e-12);
        let r = s.map_xi_to_r(450.0, 1241.1, 30.0);
        assert!((r - (30.0 + 7.2055 * 420.0)).abs() < 1e-9);
        assert_eq!(s.map_xi_to_r(30.0, 500.0, 30.0), 30.0);
        assert_eq!(ScalingSchedule::disabled().scale(1e4), Scale::IDENTITY);
        assert_eq!(
            ScalingSchedule::new(0.0, 10.0).unwrap().scale(55.0),
            Scale::IDENTITY
        );
    }

    #[test]
    fn gts_map() {
        let s = ScalingSchedule::new(0.02, 300.0).unwrap();
        let sc = s.scale(450.0);
        assert!((s.map_r_to_xi(77.0, 450.0, 0.0) - 77.0 / sc.r).abs() < 1e-13);
    }

    #[test]
    fn rddot_follows_envelope() {
        let s = ScalingSchedule::new(0.03, 200.0).unwrap();
        for k in 0..50 {
            let t = 4.0 * k as f64;
            let f = libm::sin(PI * t / 200.0).powi(2);
            assert!((s.scale(t).r_ddot - 2.0 * 0.03 / 200.0 * f).abs() < 1e-15);
        }
        assert_eq!(s.scale(250.0).r_ddot, 0.0);
    }

    #[test]
    fn phase_transform_domain() {
        let s = ScalingSchedule::new(0.03, 200.0).unwrap();
        assert!(s
            .phase_transform(5.0, 10.0, 5.0, Direction::Forward)
            .is_err());
        let m = s
            .phase_transform(6.0, 0.0, 5.0, Direction::Forward)
            .unwrap();
        assert!((m - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    proptest! {
        #[test]
        fn derivatives_match_finite_differences(t in 1.0f64..399.0) {
            let s = ScalingSchedule::new(0.02, 400.0).unwrap();
            let h = 1e-3;
            let a = s.scale(t - h);
            let b = s.scale(t + h);
            let c = s.scale(t);
            prop_assert!(((b.r - a.r) / (2.0 * h) - c.r_dot).abs() <= 1e-6 * c.r_dot.abs().max(1e-6));
            prop_assert!(((b.r_dot - a.r_dot) / (2.0 * h) - c.r_ddot).abs() <= 1e-6 * c.r_ddot.abs().max(1e-6));
            prop_assert!(c.r >= 1.0 && c.r_dot >= 0.0);
        }

        #[test]
        fn map_roundtrip_and_phase(xi in 0.0f64..500.0, t in 0.0f64..2000.0, rs in 0.0f64..60.0) {
            let s = ScalingSchedule::new(0.01, 1241.1).unwrap();
            let r = s.map_xi_to_r(xi, t, rs);
            prop_assert!((s.map_r_to_xi(r, t, rs) - xi).abs() <= 1e-12 * (1.0 + xi));
            if xi > rs {
                let f = s.phase_transform(xi, t, rs, Direction::Forward).unwrap();
                let g = s.phase_transform(xi, t, rs, Direction::Inverse).unwrap();
                prop_assert!((f * g - C64::new(1.0, 0.0)).norm() < 1e-12);
                prop_assert!((f.norm() - libm::sqrt(s.scale(t).r)).abs() < 1e-12 * f.norm());
            }
        }
    }
}
