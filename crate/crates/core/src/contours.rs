//! Non-binary gradient contours: sums of absolute gray-level differences
//! along closed loops through the 8-pixel ring of a 3x3 window.

use std::fmt;
use std::str::FromStr;

use crate::infoset::Window3x3;

/// Loop topology used to build the block feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ContourVariant {
    /// Single loop over adjacent ring pixels.
    #[default]
    G1,
    /// Two loops over every other ring pixel (even and odd slots).
    G2,
    /// One loop with stride 3.
    G3,
}

impl ContourVariant {
    pub const ALL: [ContourVariant; 3] = [ContourVariant::G1, ContourVariant::G2, ContourVariant::G3];

    pub fn as_str(self) -> &'static str {
        match self {
            ContourVariant::G1 => "G1",
            ContourVariant::G2 => "G2",
            ContourVariant::G3 => "G3",
        }
    }
}

impl fmt::Display for ContourVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ContourVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "G1" => Ok(ContourVariant::G1),
            "G2" => Ok(ContourVariant::G2),
            "G3" => Ok(ContourVariant::G3),
            other => Err(format!("unknown contour variant '{other}' (expected G1, G2 or G3)")),
        }
    }
}

// Ring index pairs (a, b) contributing |I_a - I_b|, in the order the terms are summed.
const SINGLE_LOOP: [(usize, usize); 8] = [
    (7, 0),
    (6, 7),
    (5, 6),
    (4, 5),
    (3, 4),
    (2, 3),
    (1, 2),
    (0, 1),
];
const DOUBLE_LOOP_EVEN: [(usize, usize); 4] = [(6, 0), (4, 6), (2, 4), (0, 2)];
const DOUBLE_LOOP_ODD: [(usize, usize); 4] = [(7, 1), (5, 7), (3, 5), (1, 3)];
const TRIPLE_LOOP: [(usize, usize); 8] = [
    (5, 0),
    (2, 5),
    (7, 2),
    (4, 7),
    (1, 4),
    (6, 1),
    (3, 6),
    (0, 3),
];

#[inline]
fn loop_sum(ring: &[f64; 8], pairs: &[(usize, usize)]) -> f64 {
    pairs.iter().map(|&(a, b)| (ring[a] - ring[b]).abs()).sum()
}

/// Every contour value of one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourValues {
    pub g1: f64,
    pub g20: f64,
    pub g21: f64,
    pub g2: f64,
    pub g3: f64,
}

impl ContourValues {
    pub fn of(win: &Window3x3) -> Self {
        let (g20, g21, g2) = contour_g2(win);
        Self {
            g1: contour_g1(win),
            g20,
            g21,
            g2,
            g3: contour_g3(win),
        }
    }

    pub fn select(&self, variant: ContourVariant) -> f64 {
        match variant {
            ContourVariant::G1 => self.g1,
            ContourVariant::G2 => self.g2,
            ContourVariant::G3 => self.g3,
        }
    }
}

pub fn contour_g1(win: &Window3x3) -> f64 {
    loop_sum(&win.ring, &SINGLE_LOOP)
}

/// Returns `(g20, g21, g2)` where `g2 = g20 + g21`.
pub fn contour_g2(win: &Window3x3) -> (f64, f64, f64) {
    let g20 = loop_sum(&win.ring, &DOUBLE_LOOP_EVEN);
    let g21 = loop_sum(&win.ring, &DOUBLE_LOOP_ODD);
    (g20, g21, g20 + g21)
}

pub fn contour_g3(win: &Window3x3) -> f64 {
    loop_sum(&win.ring, &TRIPLE_LOOP)
}

/// The contour value for `variant`, without computing the others.
pub fn contour(win: &Window3x3, variant: ContourVariant) -> f64 {
    match variant {
        ContourVariant::G1 => contour_g1(win),
        ContourVariant::G2 => contour_g2(win).2,
        ContourVariant::G3 => contour_g3(win),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ring(r: [f64; 8]) -> Window3x3 {
        Window3x3::new(0.5, r)
    }

    const RAMP: [f64; 8] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8];

    #[test]
    fn ramp_ring_values() {
        let w = ring(RAMP);
        assert_relative_eq!(contour_g1(&w), 1.4, epsilon = 1e-12);
        let (g20, g21, g2) = contour_g2(&w);
        assert_relative_eq!(g20, 1.2, epsilon = 1e-12);
        assert_relative_eq!(g21, 1.2, epsilon = 1e-12);
        assert_relative_eq!(g2, 2.4, epsilon = 1e-12);
        assert_relative_eq!(contour_g3(&w), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_ring_is_zero() {
        let v = ContourValues::of(&ring([0.37; 8]));
        assert_eq!(v, ContourValues { g1: 0.0, g20: 0.0, g21: 0.0, g2: 0.0, g3: 0.0 });
    }

    #[test]
    fn alternating_ring() {
        let w = ring([0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        assert_eq!(contour_g1(&w), 8.0);
        assert_eq!(contour_g2(&w), (0.0, 0.0, 0.0));
    }

    #[test]
    fn selection_matches_components() {
        let w = ring(RAMP);
        let all = ContourValues::of(&w);
        for v in ContourVariant::ALL {
            assert_eq!(all.select(v), contour(&w, v));
        }
    }

    #[test]
    fn variant_parsing() {
        assert_eq!("g2".parse::<ContourVariant>().unwrap(), ContourVariant::G2);
        assert!("G4".parse::<ContourVariant>().is_err());
        assert_eq!(ContourVariant::G3.to_string(), "G3");
    }

    fn ring_strategy() -> impl Strategy<Value = [f64; 8]> {
        proptest::array::uniform8(0.0f64..1.0)
    }

    proptest! {
        #[test]
        fn triple_loop_matches_stride_three_reading(r in ring_strategy()) {
            // Stride-3 walk from slot 0 backwards: 0 -> 5 -> 2 -> 7 -> ...
            let mut expected = 0.0;
            let mut j = 0usize;
            for _ in 0..8 {
                let next = (j + 5) % 8;
                expected += (r[next] - r[j]).abs();
                j = next;
            }
            prop_assert!((contour_g3(&ring(r)) - expected).abs() <= 1e-12);
        }

        #[test]
        fn rotation_keeps_g1_g3_and_swaps_double_loops(r in ring_strategy()) {
            let w = ring(r);
            let mut rotated = r;
            rotated.rotate_left(1);
            let w2 = ring(rotated);
            let (a20, a21, _) = contour_g2(&w);
            let (b20, b21, _) = contour_g2(&w2);
            prop_assert!((contour_g1(&w) - contour_g1(&w2)).abs() <= 1e-12);
            prop_assert!((contour_g3(&w) - contour_g3(&w2)).abs() <= 1e-12);
            prop_assert!((a20 - b21).abs() <= 1e-12);
            prop_assert!((a21 - b20).abs() <= 1e-12);
        }

        #[test]
        fn center_is_ignored(r in ring_strategy(), c1 in 0.0f64..1.0, c2 in 0.0f64..1.0) {
            let a = ContourValues::of(&Window3x3::new(c1, r));
            let b = ContourValues::of(&Window3x3::new(c2, r));
            prop_assert_eq!(a, b);
        }

        #[test]
        fn zero_iff_loop_constant(v in 0.0f64..1.0, i in 0usize..8, bump in 0.01f64..0.5) {
            let mut r = [v; 8];
            r[i] = (v + bump).min(1.0).max(v + 1e-3);
            let c = ContourValues::of(&ring(r));
            prop_assert!(c.g1 > 0.0);
            prop_assert!(c.g3 > 0.0);
            // only the sub-loop containing slot i moves
            if i % 2 == 0 {
                prop_assert!(c.g20 > 0.0);
                prop_assert_eq!(c.g21, 0.0);
            } else {
                prop_assert!(c.g21 > 0.0);
                prop_assert_eq!(c.g20, 0.0);
            }
        }
    }
}
