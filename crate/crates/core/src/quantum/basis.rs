use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Amplitude, Measurement, StateVector};

/// An orthonormal measurement frame for one photon.
///
/// `Angle(theta)` denotes `{(cos t, sin t), (-sin t, cos t)}`. Rectilinear is
/// `Angle(0)` exactly; Diagonal spans the same two rays as `Angle(pi/4)` but
/// keeps the conventional vectors `d1 = (1, 1)/sqrt2`, `d2 = (1, -1)/sqrt2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Rectilinear,
    Diagonal,
    Circular,
    Angle(f64),
}

impl Basis {
    /// The two basis vectors, outcome 0 first.
    pub fn vectors(&self) -> [StateVector; 2] {
        let s = FRAC_1_SQRT_2;
        let re = |x: f64| Amplitude::new(x, 0.0);
        let im = |x: f64| Amplitude::new(0.0, x);
        let pair = |a: [Amplitude; 2], b: [Amplitude; 2]| {
            [StateVector::from_normalized(a), StateVector::from_normalized(b)]
        };
        match *self {
            Basis::Rectilinear => [StateVector::horizontal(), StateVector::vertical()],
            Basis::Diagonal => pair([re(s), re(s)], [re(s), re(-s)]),
            Basis::Circular => pair([re(s), im(s)], [im(s), re(s)]),
            Basis::Angle(theta) => {
                let (sin, cos) = theta.sin_cos();
                pair([re(cos), re(sin)], [re(-sin), re(cos)])
            }
        }
    }

    pub fn vector(&self, outcome: usize) -> StateVector {
        self.vectors()[outcome]
    }

    pub fn measurement(&self) -> Measurement {
        Measurement::from_basis(*self)
    }

    /// Polarization angle of outcome 0 for real bases; `None` for circular.
    pub fn angle(&self) -> Option<f64> {
        match *self {
            Basis::Rectilinear => Some(0.0),
            Basis::Diagonal => Some(FRAC_PI_4),
            Basis::Angle(theta) => Some(theta),
            Basis::Circular => None,
        }
    }
}

/// The two conjugate bases the protocols encode bits in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CodingBasis {
    #[serde(rename = "R")]
    Rectilinear,
    #[serde(rename = "D")]
    Diagonal,
}

impl CodingBasis {
    pub fn basis(self) -> Basis {
        match self {
            CodingBasis::Rectilinear => Basis::Rectilinear,
            CodingBasis::Diagonal => Basis::Diagonal,
        }
    }

    pub fn other(self) -> Self {
        match self {
            CodingBasis::Rectilinear => CodingBasis::Diagonal,
            CodingBasis::Diagonal => CodingBasis::Rectilinear,
        }
    }

    /// Horizontal/45-degree for 0, vertical/135-degree for 1.
    pub fn encode(self, bit: bool) -> StateVector {
        self.basis().vector(bit as usize)
    }

    pub fn from_coin(coin: bool) -> Self {
        if coin {
            CodingBasis::Diagonal
        } else {
            CodingBasis::Rectilinear
        }
    }

    pub fn letter(self) -> char {
        match self {
            CodingBasis::Rectilinear => 'R',
            CodingBasis::Diagonal => 'D',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c {
            'R' | 'r' => Some(CodingBasis::Rectilinear),
            'D' | 'd' => Some(CodingBasis::Diagonal),
            _ => None,
        }
    }
}

impl fmt::Display for CodingBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};

    use super::*;
    use crate::quantum::{inner_product, photon_from_angle};

    const NAMED: [Basis; 3] = [Basis::Rectilinear, Basis::Diagonal, Basis::Circular];

    #[test]
    fn bases_are_orthonormal() {
        let mut all = NAMED.to_vec();
        all.extend((0..10).map(|k| Basis::Angle(0.37 * k as f64 - 1.1)));
        for b in all {
            let [u, v] = b.vectors();
            assert!((inner_product(&u, &u).re - 1.0).abs() < 1e-9);
            assert!((inner_product(&v, &v).re - 1.0).abs() < 1e-9);
            assert!(inner_product(&u, &v).norm() < 1e-9, "{b:?}");
        }
    }

    #[test]
    fn every_cross_pair_of_named_bases_is_conjugate() {
        let mut checked = 0;
        for (i, x) in NAMED.iter().enumerate() {
            for (j, y) in NAMED.iter().enumerate() {
                if i == j {
                    continue;
                }
                for u in x.vectors() {
                    for v in y.vectors() {
                        assert!((inner_product(&u, &v).norm_sqr() - 0.5).abs() < 1e-9);
                        checked += 1;
                    }
                }
            }
        }
        // 6 ordered basis pairs x 4 vector pairs; 12 unordered cross pairs, each twice.
        assert_eq!(checked, 24);
    }

    #[test]
    fn rectilinear_is_angle_zero_and_diagonal_spans_angle_quarter_pi() {
        let r = Basis::Rectilinear.vectors();
        let a0 = Basis::Angle(0.0).vectors();
        for k in 0..2 {
            assert_eq!(r[k].amplitudes(), a0[k].amplitudes());
        }
        let d = Basis::Diagonal.vectors();
        let a = Basis::Angle(std::f64::consts::FRAC_PI_4).vectors();
        for k in 0..2 {
            assert!(d[k].same_ray(&a[k], 1e-12));
        }
    }

    #[test]
    fn paper_coding_map() {
        let h = CodingBasis::Rectilinear.encode(false);
        let v = CodingBasis::Rectilinear.encode(true);
        let d45 = CodingBasis::Diagonal.encode(false);
        let d135 = CodingBasis::Diagonal.encode(true);
        assert!(h.same_ray(&photon_from_angle(0.0).unwrap(), 1e-12));
        assert!(v.same_ray(&photon_from_angle(FRAC_PI_2).unwrap(), 1e-12));
        assert!(d45.same_ray(&photon_from_angle(PI / 4.0).unwrap(), 1e-12));
        assert!(d135.same_ray(&photon_from_angle(3.0 * PI / 4.0).unwrap(), 1e-12));
    }

    #[test]
    fn coding_basis_letters_round_trip() {
        for b in [CodingBasis::Rectilinear, CodingBasis::Diagonal] {
            assert_eq!(CodingBasis::from_letter(b.letter()), Some(b));
            assert_eq!(b.other().other(), b);
            assert_ne!(b.other(), b);
        }
        assert_eq!(CodingBasis::from_letter('x'), None);
    }
}
