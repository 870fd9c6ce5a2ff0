//! Small fixed-dimension vectors tagged with their physical unit, the
//! rank-one direction projector, and the passivity energy ledger.
//!
//! Units live in the type: a [`Force`] cannot be handed to a function that
//! expects a [`Velocity`]. The numeric payload is a plain `nalgebra` vector.

use std::fmt;
use std::marker::PhantomData;
use std::ops::{Add, Index, Mul, Neg, Sub};

use nalgebra::{SMatrix, SVector, Vector3};

use crate::error::{Error, Result};

/// Squared-norm threshold (N²) below which a direction is considered absent.
pub const DIRECTION_EPS: f64 = 1e-12;

pub trait Unit: Copy + Clone + fmt::Debug + Default + PartialEq + 'static {
    const SYMBOL: &'static str;
}

macro_rules! unit {
    ($(#[$doc:meta])* $name:ident, $sym:literal) => {
        $(#[$doc])*
        #[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
        pub struct $name;

        impl Unit for $name {
            const SYMBOL: &'static str = $sym;
        }
    };
}

unit!(/// Newton.
    Newton, "N");
unit!(/// Metre per second.
    MetrePerSecond, "m/s");
unit!(/// Metre.
    Metre, "m");
unit!(/// Newton-metre.
    NewtonMetre, "N·m");
unit!(/// Radian per second.
    RadianPerSecond, "rad/s");
unit!(/// Radian.
    Radian, "rad");

/// Task-space vector of dimension `N` carrying unit `U`.
pub struct TaskVector<U: Unit, const N: usize = 3> {
    components: SVector<f64, N>,
    unit: PhantomData<U>,
}

pub type Force<const N: usize = 3> = TaskVector<Newton, N>;
pub type Velocity<const N: usize = 3> = TaskVector<MetrePerSecond, N>;
pub type Position<const N: usize = 3> = TaskVector<Metre, N>;

/// Joint-space vector of the 3-DoF device.
pub struct JointVector<U: Unit> {
    components: Vector3<f64>,
    unit: PhantomData<U>,
}

pub type Torque = JointVector<NewtonMetre>;
pub type JointRate = JointVector<RadianPerSecond>;
pub type JointAngles = JointVector<Radian>;

macro_rules! vector_common {
    ($ty:ident, $store:ty, [$($gen:tt)*], [$($args:tt)*], $n:expr) => {
        impl<$($gen)*> $ty<$($args)*> {
            pub fn new(components: [f64; $n]) -> Self {
                Self::from_vector(<$store>::from(components))
            }

            pub fn from_vector(components: $store) -> Self {
                Self { components, unit: PhantomData }
            }

            pub fn zeros() -> Self {
                Self::from_vector(<$store>::zeros())
            }

            pub fn as_vector(&self) -> &$store {
                &self.components
            }

            pub fn into_vector(self) -> $store {
                self.components
            }

            pub fn to_array(&self) -> [f64; $n] {
                self.components.into()
            }

            pub fn dot(&self, other: &Self) -> f64 {
                self.components.dot(&other.components)
            }

            pub fn norm(&self) -> f64 {
                self.components.norm()
            }

            pub fn norm_squared(&self) -> f64 {
                self.components.norm_squared()
            }

            pub fn max_abs(&self) -> f64 {
                self.components.amax()
            }

            pub fn is_finite(&self) -> bool {
                self.components.iter().all(|c| c.is_finite())
            }

            /// Fails with an invalid-input error naming `what` if any component is NaN or infinite.
            pub fn ensure_finite(&self, what: &str) -> Result<()> {
                if self.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid(format!(
                        "{what} has non-finite components: {:?}",
                        self.to_array()
                    )))
                }
            }

            pub fn unit_symbol(&self) -> &'static str {
                U::SYMBOL
            }

            pub fn map(&self, f: impl FnMut(f64) -> f64) -> Self {
                Self::from_vector(self.components.map(f))
            }

            pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
                self.components.iter().copied()
            }
        }

        impl<$($gen)*> Clone for $ty<$($args)*> {
            fn clone(&self) -> Self {
                *self
            }
        }

        impl<$($gen)*> Copy for $ty<$($args)*> {}

        impl<$($gen)*> PartialEq for $ty<$($args)*> {
            fn eq(&self, other: &Self) -> bool {
                self.components == other.components
            }
        }

        impl<$($gen)*> fmt::Debug for $ty<$($args)*> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{:?} {}", self.to_array(), U::SYMBOL)
            }
        }

        impl<$($gen)*> Index<usize> for $ty<$($args)*> {
            type Output = f64;

            fn index(&self, i: usize) -> &f64 {
                &self.components[i]
            }
        }

        impl<$($gen)*> Add for $ty<$($args)*> {
            type Output = Self;

            fn add(self, rhs: Self) -> Self {
                Self::from_vector(self.components + rhs.components)
            }
        }

        impl<$($gen)*> Sub for $ty<$($args)*> {
            type Output = Self;

            fn sub(self, rhs: Self) -> Self {
                Self::from_vector(self.components - rhs.components)
            }
        }

        impl<$($gen)*> Neg for $ty<$($args)*> {
            type Output = Self;

            fn neg(self) -> Self {
                Self::from_vector(-self.components)
            }
        }

        impl<$($gen)*> Mul<f64> for $ty<$($args)*> {
            type Output = Self;

            fn mul(self, rhs: f64) -> Self {
                Self::from_vector(self.components * rhs)
            }
        }
    };
}

vector_common!(TaskVector, SVector<f64, N>, [U: Unit, const N: usize], [U, N], N);
vector_common!(JointVector, Vector3<f64>, [U: Unit], [U], 3);

impl<U: Unit, const N: usize> TaskVector<U, N> {
    /// Reinterprets the payload under another unit. Used where a quantity is
    /// deliberately converted, e.g. a damping coefficient times a velocity.
    pub fn retag<V: Unit>(self) -> TaskVector<V, N> {
        TaskVector::from_vector(self.components)
    }
}

impl<U: Unit> JointVector<U> {
    pub fn retag<V: Unit>(self) -> JointVector<V> {
        JointVector::from_vector(self.components)
    }
}

/// Symmetric idempotent `N×N` matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projector<const N: usize = 3> {
    matrix: SMatrix<f64, N, N>,
}

impl<const N: usize> Projector<N> {
    pub fn zero() -> Self {
        Self { matrix: SMatrix::zeros() }
    }

    pub fn identity() -> Self {
        Self { matrix: SMatrix::identity() }
    }

    /// Wraps an arbitrary matrix without checking the projector properties.
    /// Callers are expected to run [`Projector::max_property_error`] on it.
    pub fn from_matrix_unchecked(matrix: SMatrix<f64, N, N>) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &SMatrix<f64, N, N> {
        &self.matrix
    }

    /// `I − F`.
    pub fn complement(&self) -> Self {
        Self { matrix: SMatrix::identity() - self.matrix }
    }

    pub fn apply<U: Unit>(&self, v: &TaskVector<U, N>) -> TaskVector<U, N> {
        TaskVector::from_vector(self.matrix * v.as_vector())
    }

    /// `vᵀ F v`.
    pub fn quadratic_form<U: Unit>(&self, v: &TaskVector<U, N>) -> f64 {
        v.as_vector().dot(&(self.matrix * v.as_vector()))
    }

    /// `‖F − Fᵀ‖∞` over entries.
    pub fn symmetry_error(&self) -> f64 {
        (self.matrix - self.matrix.transpose()).amax()
    }

    /// `‖F·F − F‖∞` over entries.
    pub fn idempotence_error(&self) -> f64 {
        (self.matrix * self.matrix - self.matrix).amax()
    }

    /// `‖(I − F)ᵀ F‖∞` over entries.
    pub fn complement_orthogonality_error(&self) -> f64 {
        (self.complement().matrix.transpose() * self.matrix).amax()
    }

    pub fn max_property_error(&self) -> f64 {
        self.symmetry_error()
            .max(self.idempotence_error())
            .max(self.complement_orthogonality_error())
    }
}

/// Projector onto the line spanned by `direction`: `F = d·dᵀ / (dᵀd)`.
///
/// A direction with `dᵀd ≤ DIRECTION_EPS` yields the zero projector, so any
/// dissipation that would have been routed along it falls to the complement.
pub fn make_projector<U: Unit, const N: usize>(direction: &TaskVector<U, N>) -> Result<Projector<N>> {
    direction.ensure_finite("projector direction")?;
    let d = direction.as_vector();
    let norm_sq = d.norm_squared();
    if norm_sq <= DIRECTION_EPS {
        return Ok(Projector::zero());
    }
    Ok(Projector { matrix: (d * d.transpose()) / norm_sq })
}

/// `I − F`.
pub fn complement<const N: usize>(projector: &Projector<N>) -> Projector<N> {
    projector.complement()
}

/// Energy bookkeeping of one passivity port, in joules.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EnergyLedger {
    /// Observed port energy including past dissipation.
    pub e_obs: f64,
    /// Cumulative energy dissipated by the controller.
    pub e_pc: f64,
    /// Deficit left undissipated after the last decision (`≤ 0`).
    pub e_res: f64,
}

impl EnergyLedger {
    /// Books `dissipated` joules against the current observation.
    pub fn settle(&self, dissipated: f64) -> Self {
        Self {
            e_obs: self.e_obs,
            e_pc: self.e_pc + dissipated,
            e_res: (self.e_obs + dissipated).min(0.0),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.e_obs.is_finite() && self.e_pc.is_finite() && self.e_res.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn axis_direction_projects_onto_axis() {
        let f = make_projector(&Force::new([1.0, 0.0, 0.0])).unwrap();
        assert_eq!(*f.matrix(), SMatrix::<f64, 3, 3>::from_diagonal(&Vector3::new(1.0, 0.0, 0.0)));
    }

    #[test]
    fn degenerate_direction_gives_zero_projector() {
        let f = make_projector(&Force::new([0.0, 0.0, 0.0])).unwrap();
        assert_eq!(f, Projector::zero());
        let tiny = make_projector(&Force::new([1e-7, 0.0, 0.0])).unwrap();
        assert_eq!(tiny, Projector::zero());
    }

    #[test]
    fn diagonal_direction() {
        let f = make_projector(&Force::new([1.0, 1.0, 0.0])).unwrap();
        let expected = SMatrix::<f64, 3, 3>::new(0.5, 0.5, 0.0, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0);
        assert!((f.matrix() - expected).amax() <= TOL);
        let c = f.complement();
        let expected_c = SMatrix::<f64, 3, 3>::new(0.5, -0.5, 0.0, -0.5, 0.5, 0.0, 0.0, 0.0, 1.0);
        assert!((c.matrix() - expected_c).amax() <= TOL);
        assert!(c.idempotence_error() <= TOL);
    }

    #[test]
    fn complement_of_axis_and_zero() {
        let f = make_projector(&Force::new([1.0, 0.0, 0.0])).unwrap();
        let c = complement(&f);
        assert_eq!(*c.matrix(), SMatrix::<f64, 3, 3>::from_diagonal(&Vector3::new(0.0, 1.0, 1.0)));
        assert_eq!(complement(&Projector::<3>::zero()), Projector::identity());
    }

    #[test]
    fn non_finite_direction_is_rejected() {
        assert!(matches!(
            make_projector(&Force::new([f64::NAN, 0.0, 1.0])),
            Err(Error::InvalidInput(_))
        ));
        assert!(make_projector(&Force::new([f64::INFINITY, 0.0, 1.0])).is_err());
    }

    #[test]
    fn ledger_settle_keeps_deficit_non_positive() {
        let l = EnergyLedger { e_obs: -0.5, e_pc: 1.0, e_res: 0.0 };
        let s = l.settle(0.2);
        assert_eq!(s.e_pc, 1.2);
        assert!((s.e_res + 0.3).abs() < 1e-15);
        let passive = EnergyLedger { e_obs: 0.4, ..Default::default() }.settle(0.0);
        assert_eq!(passive.e_res, 0.0);
    }

    fn direction() -> impl Strategy<Value = [f64; 3]> {
        prop::array::uniform3(-100.0..100.0f64)
            .prop_filter("nonzero", |d| d.iter().map(|c| c * c).sum::<f64>() > 1e-6)
    }

    proptest! {
        #[test]
        fn projector_properties_hold(d in direction()) {
            let f = make_projector(&Force::new(d)).unwrap();
            prop_assert!(f.symmetry_error() <= TOL);
            prop_assert!(f.idempotence_error() <= TOL);
            prop_assert!(f.complement_orthogonality_error() <= TOL);
            prop_assert!(f.complement().idempotence_error() <= TOL);
        }

        #[test]
        fn generating_direction_is_fixed(d in direction()) {
            let dir = Force::new(d);
            let f = make_projector(&dir).unwrap();
            prop_assert!((f.apply(&dir) - dir).norm() <= 1e-10 * dir.norm());
        }

        #[test]
        fn pythagorean_split(d in direction(), v in prop::array::uniform3(-10.0..10.0f64)) {
            let f = make_projector(&Force::new(d)).unwrap();
            let v = Velocity::new(v);
            let along = f.apply(&v).norm_squared();
            let across = f.complement().apply(&v).norm_squared();
            prop_assert!((along + across - v.norm_squared()).abs() <= 1e-9 * v.norm_squared().max(1e-300));
        }
    }
}
