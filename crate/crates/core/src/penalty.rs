//! Bulk elastic energy `F(d)` and its force `f(d) = grad_d F(d)`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::dot3;
use crate::scalar::Real;

/// A penalty supplies the bulk energy, its gradient and the radius beyond
/// which `d . f(d) >= 0` is required.
pub trait Penalty<T: Real>: Send + Sync {
    fn energy(&self, d: [T; 3]) -> T;
    fn force(&self, d: [T; 3]) -> [T; 3];
    /// Radius `C0` of the structural condition.
    fn threshold(&self) -> T;
}

/// `F(d) = (|d|^2 - 1)^2 / (4 sigma0^2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GinzburgLandau<T> {
    sigma0: T,
    c0: T,
}

impl<T: Real> GinzburgLandau<T> {
    pub fn new(sigma0: T) -> Result<Self> {
        Self::with_threshold(sigma0, T::one())
    }

    pub fn with_threshold(sigma0: T, c0: T) -> Result<Self> {
        if !(sigma0 > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "sigma0 must be positive, got {sigma0}"
            )));
        }
        if !(c0 > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "c0 must be positive, got {c0}"
            )));
        }
        Ok(Self { sigma0, c0 })
    }

    pub fn sigma0(&self) -> T {
        self.sigma0
    }
}

impl<T: Real> Default for GinzburgLandau<T> {
    fn default() -> Self {
        Self {
            sigma0: T::one(),
            c0: T::one(),
        }
    }
}

impl<T: Real> Penalty<T> for GinzburgLandau<T> {
    #[inline]
    fn energy(&self, d: [T; 3]) -> T {
        let s = dot3(d, d) - T::one();
        s * s / (T::lit(4.0) * self.sigma0 * self.sigma0)
    }

    #[inline]
    fn force(&self, d: [T; 3]) -> [T; 3] {
        let k = (dot3(d, d) - T::one()) / (self.sigma0 * self.sigma0);
        [k * d[0], k * d[1], k * d[2]]
    }

    fn threshold(&self) -> T {
        self.c0
    }
}

/// The zero penalty, `F = 0`; turns the director equation into a heat flow.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NoPenalty;

impl<T: Real> Penalty<T> for NoPenalty {
    fn energy(&self, _d: [T; 3]) -> T {
        T::zero()
    }

    fn force(&self, _d: [T; 3]) -> [T; 3] {
        [T::zero(); 3]
    }

    fn threshold(&self) -> T {
        T::one()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StructuralReport<T> {
    /// Smallest `d . f(d)` over all probes.
    pub min_value: T,
    /// Radius at which the minimum was attained.
    pub min_radius: T,
    pub probes: usize,
    pub passed: bool,
}

/// Probes `d . f(d) >= 0` on `sample_count` pseudo-random unit directions at
/// each radius (all radii must be at least the penalty threshold).
pub fn check_structural_condition<T: Real, P: Penalty<T> + ?Sized>(
    penalty: &P,
    sample_radii: &[T],
    sample_count: usize,
) -> Result<StructuralReport<T>> {
    if sample_radii.iter().any(|&r| r < penalty.threshold()) {
        return Err(Error::InvalidArgument(format!(
            "sample radii must be at least C0 = {}",
            penalty.threshold()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_d1ec);
    let mut min_value = T::infinity();
    let mut min_radius = T::zero();
    let mut probes = 0;
    let mut passed = true;
    for &r in sample_radii {
        // rounding in |d|^2 - 1 on the threshold sphere
        let slack = T::epsilon() * T::lit(64.0) * (r * r).max(T::one()) * r * r;
        for _ in 0..sample_count.max(1) {
            let dir = random_unit(&mut rng);
            let d = [r * T::lit(dir[0]), r * T::lit(dir[1]), r * T::lit(dir[2])];
            let v = dot3(d, penalty.force(d));
            probes += 1;
            passed &= v >= -slack;
            if v < min_value {
                min_value = v;
                min_radius = r;
            }
        }
    }
    Ok(StructuralReport {
        min_value,
        min_radius,
        probes,
        passed,
    })
}

pub(crate) fn random_unit(rng: &mut impl Rng) -> [f64; 3] {
    loop {
        let v = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0f64..1.0),
        ];
        let n2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        if n2 > 1e-6 && n2 <= 1.0 {
            let n = n2.sqrt();
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `f(d) = -d` violates the structural condition everywhere.
    struct Repulsive;

    impl Penalty<f64> for Repulsive {
        fn energy(&self, d: [f64; 3]) -> f64 {
            -0.5 * dot3(d, d)
        }
        fn force(&self, d: [f64; 3]) -> [f64; 3] {
            [-d[0], -d[1], -d[2]]
        }
        fn threshold(&self) -> f64 {
            1.0
        }
    }

    #[test]
    fn energy_values() {
        let gl = GinzburgLandau::new(1.0).unwrap();
        assert_eq!(gl.energy([1.0, 0.0, 0.0]), 0.0);
        assert_eq!(gl.energy([0.0, 0.0, 0.0]), 0.25);
        let gl2 = GinzburgLandau::new(2.0).unwrap();
        assert_eq!(gl2.energy([2.0, 0.0, 0.0]), 9.0 / 16.0);
    }

    #[test]
    fn force_values() {
        let gl = GinzburgLandau::new(1.0).unwrap();
        assert_eq!(gl.force([1.0, 0.0, 0.0]), [0.0; 3]);
        assert_eq!(gl.force([2.0, 0.0, 0.0]), [6.0, 0.0, 0.0]);
        let gl3 = GinzburgLandau::new(0.3).unwrap();
        assert_eq!(gl3.force([0.0; 3]), [0.0; 3]);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(GinzburgLandau::new(0.0f64).is_err());
        assert!(GinzburgLandau::with_threshold(1.0f64, -1.0).is_err());
    }

    #[test]
    fn structural_condition_holds_for_ginzburg_landau() {
        let gl = GinzburgLandau::new(1.0f64).unwrap();
        let rep = check_structural_condition(&gl, &[1.0, 1.5, 2.0, 3.0], 64).unwrap();
        assert!(rep.passed);
        assert!(rep.min_value.abs() < 1e-12);
        assert_eq!(rep.min_radius, 1.0);

        let at_two = check_structural_condition(&gl, &[2.0], 16).unwrap();
        assert!(at_two.passed);
        assert!((at_two.min_value - 12.0).abs() < 1e-12);
    }

    #[test]
    fn structural_condition_fails_for_repulsive_force() {
        let rep = check_structural_condition(&Repulsive, &[1.0, 2.0], 8).unwrap();
        assert!(!rep.passed);
        assert!(rep.min_value < 0.0);
    }

    #[test]
    fn radii_below_threshold_rejected() {
        let gl = GinzburgLandau::new(1.0f64).unwrap();
        assert!(check_structural_condition(&gl, &[0.5], 4).is_err());
    }
}
