//! Classification of fixed points from linearisation eigenvalues.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Eigenvalues whose real part lies within this band of zero are reported as marginal.
pub const MARGINAL_BAND: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stability {
    /// All eigenvalues have negative real part.
    Stable,
    /// Real eigenvalues of both signs.
    Saddle,
    /// Some eigenvalue has positive real part and the point is not a saddle.
    Unstable,
    /// Some eigenvalue sits on the imaginary axis to within [`MARGINAL_BAND`].
    Marginal,
}

impl Stability {
    pub fn is_stable(self) -> bool {
        self == Stability::Stable
    }

    pub fn label(self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Saddle => "saddle",
            Stability::Unstable => "unstable",
            Stability::Marginal => "marginal",
        }
    }

    pub fn from_eigenvalues(eigs: &[Complex64]) -> Self {
        if eigs.iter().any(|e| e.re.abs() <= MARGINAL_BAND) {
            return Stability::Marginal;
        }
        let positive = eigs.iter().filter(|e| e.re > 0.0).count();
        if positive == 0 {
            Stability::Stable
        } else {
            let has_negative_real = eigs.iter().any(|e| e.re < 0.0 && e.im == 0.0);
            let has_positive_real = eigs.iter().any(|e| e.re > 0.0 && e.im == 0.0);
            if has_negative_real && has_positive_real {
                Stability::Saddle
            } else {
                Stability::Unstable
            }
        }
    }
}

/// Eigenvalues of the real 2×2 matrix `[[a, b], [c, d]]`.
pub fn eigenvalues_2x2(a: f64, b: f64, c: f64, d: f64) -> [Complex64; 2] {
    let half_trace = 0.5 * (a + d);
    let det = a * d - b * c;
    let disc = half_trace * half_trace - det;
    if disc >= 0.0 {
        let r = disc.sqrt();
        [
            Complex64::new(half_trace + r, 0.0),
            Complex64::new(half_trace - r, 0.0),
        ]
    } else {
        let r = (-disc).sqrt();
        [
            Complex64::new(half_trace, r),
            Complex64::new(half_trace, -r),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn classification() {
        assert_eq!(
            Stability::from_eigenvalues(&[real(-1.0), real(-2.0)]),
            Stability::Stable
        );
        assert_eq!(
            Stability::from_eigenvalues(&[real(1.0), real(-2.0)]),
            Stability::Saddle
        );
        assert_eq!(
            Stability::from_eigenvalues(&[Complex64::new(0.5, 1.0), Complex64::new(0.5, -1.0)]),
            Stability::Unstable
        );
        assert_eq!(
            Stability::from_eigenvalues(&[real(1e-9), real(-1.0)]),
            Stability::Marginal
        );
    }

    #[test]
    fn eigenvalues_of_rotation_and_shear() {
        let e = eigenvalues_2x2(0.0, -1.0, 1.0, 0.0);
        assert_eq!(e[0], Complex64::new(0.0, 1.0));
        let e = eigenvalues_2x2(2.0, 1.0, 0.0, -3.0);
        assert_eq!(e, [real(2.0), real(-3.0)]);
    }
}
