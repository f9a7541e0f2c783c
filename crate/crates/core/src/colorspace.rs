//! Color representations and the perceptual machinery the rest of the
//! pipeline is built on: sRGB <-> CIELAB conversion (D65, 2° observer),
//! the HyAB color difference, and the chroma/hue lens projection.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Default hue offset for the lens projection.
pub const DEFAULT_XI: f64 = PI / 8.0;

/// Chroma below which a color is treated as achromatic and its lens hue
/// pinned to the offset `xi`. Keeps the projection stable near the gray axis.
pub const EPSILON_HUE: f64 = 0.5;

// D65 reference white, 2° standard observer.
const WHITE_X: f64 = 0.95047;
const WHITE_Y: f64 = 1.0;
const WHITE_Z: f64 = 1.08883;

// CIE Lab segment boundary constants: delta = 6/29.
const DELTA_CUBED: f64 = 216.0 / 24389.0;
const KAPPA: f64 = 24389.0 / 27.0;

/// An 8-bit sRGB color.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RgbColor {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl RgbColor {
    pub fn new(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b }
    }
}

/// A color in CIELAB coordinates. `l` is lightness in [0, 100] for colors
/// converted from sRGB under D65; `a` and `b` are the opponent axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabColor {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

impl LabColor {
    pub fn new(l: f64, a: f64, b: f64) -> Self {
        Self { l, a, b }
    }

    /// Chroma: distance from the gray axis in the a/b plane.
    pub fn chroma(&self) -> f64 {
        self.a.hypot(self.b)
    }
}

/// Image of a color under the lens projection: chroma plus a hue angle
/// shifted by the offset `xi`, so `hue_shifted - xi` lies in [0, 2π).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LensPoint {
    pub chroma: f64,
    pub hue_shifted: f64,
}

fn srgb_expand(channel: u8) -> f64 {
    let c = channel as f64 / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn srgb_compress(c: f64) -> f64 {
    if c <= 0.003_130_8 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

fn lab_f(t: f64) -> f64 {
    if t > DELTA_CUBED {
        t.cbrt()
    } else {
        // t / (3 delta^2) + 4/29
        t * (841.0 / 108.0) + 4.0 / 29.0
    }
}

/// Convert an 8-bit sRGB color to CIELAB (IEC 61966-2-1 gamma, D65 white
/// point, 2° observer). Total on all inputs; black maps to exactly (0, 0, 0).
pub fn srgb_to_lab(c: RgbColor) -> LabColor {
    let r = srgb_expand(c.r);
    let g = srgb_expand(c.g);
    let b = srgb_expand(c.b);

    let x = 0.412_456_4 * r + 0.357_576_1 * g + 0.180_437_5 * b;
    let y = 0.212_672_9 * r + 0.715_152_2 * g + 0.072_175_0 * b;
    let z = 0.019_333_9 * r + 0.119_192_0 * g + 0.950_304_1 * b;

    let xr = x / WHITE_X;
    let yr = y / WHITE_Y;
    let zr = z / WHITE_Z;

    // The piecewise-linear branch written as kappa*t keeps L exactly 0 at 0.
    let l = if yr > DELTA_CUBED {
        116.0 * yr.cbrt() - 16.0
    } else {
        KAPPA * yr
    };

    LabColor {
        l,
        a: 500.0 * (lab_f(xr) - lab_f(yr)),
        b: 200.0 * (lab_f(yr) - lab_f(zr)),
    }
}

/// Inverse conversion, quantizing to the nearest 8-bit sRGB color.
/// Out-of-gamut coordinates are clamped channel-wise.
pub fn lab_to_srgb(c: LabColor) -> RgbColor {
    let fy = (c.l + 16.0) / 116.0;
    let fx = fy + c.a / 500.0;
    let fz = fy - c.b / 200.0;

    let inv_f = |f: f64| {
        let f3 = f * f * f;
        if f3 > DELTA_CUBED {
            f3
        } else {
            (f - 4.0 / 29.0) * (108.0 / 841.0)
        }
    };

    let yr = if c.l > KAPPA * DELTA_CUBED {
        fy * fy * fy
    } else {
        c.l / KAPPA
    };

    let x = inv_f(fx) * WHITE_X;
    let y = yr * WHITE_Y;
    let z = inv_f(fz) * WHITE_Z;

    let r = 3.240_454_2 * x - 1.537_138_5 * y - 0.498_531_4 * z;
    let g = -0.969_266_0 * x + 1.876_010_8 * y + 0.041_556_0 * z;
    let b = 0.055_643_4 * x - 0.204_025_9 * y + 1.057_225_2 * z;

    let quantize = |c: f64| (srgb_compress(c).clamp(0.0, 1.0) * 255.0).round() as u8;
    RgbColor::new(quantize(r), quantize(g), quantize(b))
}

/// HyAB color difference: city-block in lightness plus Euclidean in the
/// a/b plane.
pub fn hyab(m: LabColor, n: LabColor) -> f64 {
    (m.l - n.l).abs() + (m.a - n.a).hypot(m.b - n.b)
}

/// Project a CIELAB color to lens coordinates. The hue angle is the
/// two-argument angle of (a, b) mapped into [0, 2π) and shifted by `xi`;
/// near-achromatic colors (chroma < [`EPSILON_HUE`]) get hue `xi`.
pub fn lens(k: LabColor, xi: f64) -> LensPoint {
    let chroma = k.chroma();
    if chroma < EPSILON_HUE {
        return LensPoint { chroma, hue_shifted: xi };
    }
    let mut theta = k.b.atan2(k.a);
    if theta < 0.0 {
        theta += 2.0 * PI;
    }
    LensPoint { chroma, hue_shifted: xi + theta }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_close(actual: f64, expected: f64, tol: f64) {
        assert!(
            (actual - expected).abs() <= tol,
            "{actual} not within {tol} of {expected}"
        );
    }

    #[test]
    fn white_maps_to_achromatic_l100() {
        let lab = srgb_to_lab(RgbColor::new(255, 255, 255));
        assert_close(lab.l, 100.0, 0.01);
        assert!(lab.a.abs() < 0.01 && lab.b.abs() < 0.01);
    }

    #[test]
    fn black_maps_to_exact_zero() {
        let lab = srgb_to_lab(RgbColor::new(0, 0, 0));
        assert_eq!((lab.l, lab.a, lab.b), (0.0, 0.0, 0.0));
    }

    // Golden triples computed with an independent reference conversion
    // (D65 illuminant, 2° observer) and frozen here.
    #[test]
    fn primaries_match_reference_conversion() {
        let cases = [
            ((255, 0, 0), (53.240588, 80.092308, 67.202751)),
            ((0, 255, 0), (87.735099, -86.183030, 83.179703)),
            ((0, 0, 255), (32.295673, 79.185591, -107.857300)),
            ((128, 64, 200), (41.884782, 53.521302, -60.355010)),
        ];
        for ((r, g, b), (l, a, bb)) in cases {
            let lab = srgb_to_lab(RgbColor::new(r, g, b));
            assert_close(lab.l, l, 0.01);
            assert_close(lab.a, a, 0.01);
            assert_close(lab.b, bb, 0.01);
        }
    }

    #[test]
    fn hyab_hand_examples() {
        let m = LabColor::new(50.0, 10.0, 0.0);
        let n = LabColor::new(40.0, 10.0, 0.0);
        assert_eq!(hyab(m, n), 10.0);

        // 3-4-5 triangle in the a/b plane plus 3 units of lightness.
        let m = LabColor::new(50.0, 3.0, 4.0);
        let n = LabColor::new(47.0, 0.0, 0.0);
        assert_eq!(hyab(m, n), 8.0);
    }

    #[test]
    fn lens_hand_examples() {
        let p = lens(LabColor::new(50.0, 3.0, 4.0), 0.0);
        assert_eq!(p.chroma, 5.0);
        assert_close(p.hue_shifted, 4.0_f64.atan2(3.0), 1e-12);

        let p = lens(LabColor::new(50.0, 0.0, 0.0), PI / 8.0);
        assert_eq!(p.chroma, 0.0);
        assert_eq!(p.hue_shifted, PI / 8.0);

        let p = lens(LabColor::new(70.0, -5.0, 0.0), 0.0);
        assert_eq!(p.chroma, 5.0);
        assert_close(p.hue_shifted, PI, 1e-12);
    }

    #[test]
    fn srgb_round_trip_is_exact_on_grid() {
        for r in (0..=255).step_by(17) {
            for g in (0..=255).step_by(17) {
                for b in (0..=255).step_by(51) {
                    let c = RgbColor::new(r as u8, g as u8, b as u8);
                    assert_eq!(lab_to_srgb(srgb_to_lab(c)), c);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn hyab_is_symmetric_and_triangular(
            m in any::<(i16, i8, i8)>(),
            n in any::<(i16, i8, i8)>(),
            p in any::<(i16, i8, i8)>(),
        ) {
            let lab = |(l, a, b): (i16, i8, i8)| {
                LabColor::new((l as f64).rem_euclid(100.0), a as f64, b as f64)
            };
            let (m, n, p) = (lab(m), lab(n), lab(p));
            prop_assert!((hyab(m, n) - hyab(n, m)).abs() < 1e-12);
            prop_assert!(hyab(m, p) <= hyab(m, n) + hyab(n, p) + 1e-9);
            prop_assert_eq!(hyab(m, m), 0.0);
        }

        #[test]
        fn lens_hue_stays_in_shifted_range(l in 0.0..100.0f64, a in -120.0..120.0f64, b in -120.0..120.0f64, xi in -2.0..2.0f64) {
            let p = lens(LabColor::new(l, a, b), xi);
            let rel = p.hue_shifted - xi;
            prop_assert!((0.0..2.0 * PI).contains(&rel));
            prop_assert!(p.chroma >= 0.0);
        }

        #[test]
        fn lens_chroma_is_rotation_invariant(a in -100.0..100.0f64, b in -100.0..100.0f64, phi in 0.0..(2.0 * PI)) {
            let rotated = LabColor::new(50.0, a * phi.cos() - b * phi.sin(), a * phi.sin() + b * phi.cos());
            let original = LabColor::new(50.0, a, b);
            prop_assert!((lens(rotated, 0.0).chroma - lens(original, 0.0).chroma).abs() < 1e-9);
        }
    }
}
