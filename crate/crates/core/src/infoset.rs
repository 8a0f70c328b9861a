//! Hanman fuzzifier and membership functions over a 3x3 window.

use std::fmt;
use std::str::FromStr;

/// A 3x3 neighbourhood: the center pixel and its 8-pixel ring.
///
/// The ring runs clockwise from the top-left pixel:
///
/// ```text
/// I0 I1 I2
/// I7 c  I3
/// I6 I5 I4
/// ```
///
/// Values taken from a unit-normalized image lie in `[0, 1]`; the arithmetic
/// here is valid for any finite values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window3x3 {
    pub center: f64,
    pub ring: [f64; 8],
}

/// Raster position (row-major index into the 3x3 block) of each ring slot.
pub const RING_RASTER_INDEX: [usize; 8] = [0, 1, 2, 5, 8, 7, 6, 3];

impl Window3x3 {
    pub const WIDTH: usize = 3;

    pub fn new(center: f64, ring: [f64; 8]) -> Self {
        Self { center, ring }
    }

    /// Builds a window from its 9 values in raster order.
    pub fn from_raster(v: [f64; 9]) -> Self {
        Self {
            center: v[4],
            ring: RING_RASTER_INDEX.map(|i| v[i]),
        }
    }

    /// The 9 window values in raster order.
    pub fn raster(&self) -> [f64; 9] {
        let mut v = [self.center; 9];
        for (slot, &r) in RING_RASTER_INDEX.iter().enumerate() {
            v[r] = self.ring[slot];
        }
        v
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            center: f(self.center),
            ring: self.ring.map(&f),
        }
    }
}

/// Which window statistic serves as the reference value `I(ref)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FuzzifierRef {
    #[default]
    Average,
    Maximum,
    Minimum,
}

impl FuzzifierRef {
    pub fn reference(self, win: &Window3x3) -> f64 {
        let v = win.raster();
        match self {
            FuzzifierRef::Average => v.iter().sum::<f64>() / 9.0,
            FuzzifierRef::Maximum => v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            FuzzifierRef::Minimum => v.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FuzzifierRef::Average => "avg",
            FuzzifierRef::Maximum => "max",
            FuzzifierRef::Minimum => "min",
        }
    }
}

impl fmt::Display for FuzzifierRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FuzzifierRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "avg" | "average" | "mean" => Ok(FuzzifierRef::Average),
            "max" | "maximum" => Ok(FuzzifierRef::Maximum),
            "min" | "minimum" => Ok(FuzzifierRef::Minimum),
            other => Err(format!("unknown fuzzifier reference '{other}' (expected avg, max or min)")),
        }
    }
}

/// Hanman fuzzifier `f_h = sqrt(sum d^4 / sum d^2)` with `d = I(ref) - I_ij`
/// over all 9 window values. A constant window gives `f_h = 0`.
pub fn fuzzifier(win: &Window3x3, reference: FuzzifierRef) -> f64 {
    let r = reference.reference(win);
    let (mut num, mut den) = (0.0, 0.0);
    for v in win.raster() {
        let d2 = (r - v) * (r - v);
        num += d2 * d2;
        den += d2;
    }
    if den == 0.0 {
        0.0
    } else {
        (num / den).sqrt()
    }
}

/// Exponential membership `exp(-|I_ij - I(ref)| / f_h^2)` of each window value,
/// in raster order. A constant window maps to all ones.
pub fn membership_exponential(win: &Window3x3, reference: FuzzifierRef) -> [f64; 9] {
    let fh = fuzzifier(win, reference);
    if fh == 0.0 {
        return [1.0; 9];
    }
    let r = reference.reference(win);
    let fh2 = fh * fh;
    win.raster().map(|v| (-(v - r).abs() / fh2).exp())
}

/// Gaussian membership `exp(-((I_ij - I(ref)) / (sqrt(2) f_h))^2)` of each window
/// value, in raster order. A constant window maps to all ones.
pub fn membership_gaussian(win: &Window3x3, reference: FuzzifierRef) -> [f64; 9] {
    let fh = fuzzifier(win, reference);
    if fh == 0.0 {
        return [1.0; 9];
    }
    let r = reference.reference(win);
    let scale = std::f64::consts::SQRT_2 * fh;
    win.raster().map(|v| {
        let z = (v - r) / scale;
        (-z * z).exp()
    })
}

/// Center-pixel membership `mu_w = center / f_h`, or 0 for a constant window.
///
/// Not clamped: a bright center in a very smooth window gives a large value.
pub fn membership_center(win: &Window3x3, reference: FuzzifierRef) -> f64 {
    let fh = fuzzifier(win, reference);
    if fh == 0.0 {
        0.0
    } else {
        win.center / fh
    }
}
