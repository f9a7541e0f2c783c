//! Synthetic benchmark data: colored geometric primitives sampled
//! uniformly on their surfaces, random rotated views, and half-space
//! occlusion by quantile truncation.

use crate::colorspace::RgbColor;
use crate::error::{Error, Result};
use crate::geometry::{ColoredCloud, ColoredPoint};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ShapeKind {
    /// Axis-aligned box with the given x/y/z extents, centered.
    Box { extents: [f64; 3] },
    /// Cylinder along z with flat caps, centered.
    Cylinder { radius: f64, height: f64 },
    Sphere { radius: f64 },
    /// Box footprint w x d in the x-z plane with a notch of nw x nd cut
    /// from the (+x, +z) corner, extruded to height along y, centered.
    LShape { w: f64, d: f64, height: f64, nw: f64, nd: f64 },
    /// Torus around the z axis: `major` is the center-circle radius,
    /// `minor` the tube radius.
    Torus { major: f64, minor: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ColorScheme {
    Solid { color: RgbColor },
    /// `top` above the z midplane, `bottom` below.
    TwoTone { top: RgbColor, bottom: RgbColor },
    /// Alternating z bands of the given period.
    Striped { a: RgbColor, b: RgbColor, period: f64 },
}

impl ColorScheme {
    fn color_at(&self, z: f64) -> RgbColor {
        match *self {
            Self::Solid { color } => color,
            Self::TwoTone { top, bottom } => {
                if z >= 0.0 {
                    top
                } else {
                    bottom
                }
            }
            Self::Striped { a, b, period } => {
                if ((z / period).floor() as i64).rem_euclid(2) == 0 {
                    a
                } else {
                    b
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Self::X => 0,
            Self::Y => 1,
            Self::Z => 2,
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(Self::X),
            "y" | "Y" => Ok(Self::Y),
            "z" | "Z" => Ok(Self::Z),
            other => Err(Error::Config(format!("unknown axis `{other}`"))),
        }
    }
}

/// One sampleable planar or curved patch of a shape's surface.
struct Face {
    area: f64,
    sample: Box<dyn Fn(&mut ChaCha20Rng) -> [f64; 3]>,
}

fn positive(value: f64, what: &str) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Config(format!("{what} must be positive, got {value}")))
    }
}

fn box_faces(extents: [f64; 3]) -> Result<Vec<Face>> {
    let [ex, ey, ez] = extents;
    for (v, name) in [(ex, "box x extent"), (ey, "box y extent"), (ez, "box z extent")] {
        positive(v, name)?;
    }
    let (hx, hy, hz) = (ex / 2.0, ey / 2.0, ez / 2.0);
    let mut faces = Vec::new();
    for sign in [-1.0f64, 1.0] {
        faces.push(Face {
            area: ey * ez,
            sample: Box::new(move |rng| {
                [sign * hx, (rng.gen::<f64>() - 0.5) * ey, (rng.gen::<f64>() - 0.5) * ez]
            }),
        });
        faces.push(Face {
            area: ex * ez,
            sample: Box::new(move |rng| {
                [(rng.gen::<f64>() - 0.5) * ex, sign * hy, (rng.gen::<f64>() - 0.5) * ez]
            }),
        });
        faces.push(Face {
            area: ex * ey,
            sample: Box::new(move |rng| {
                [(rng.gen::<f64>() - 0.5) * ex, (rng.gen::<f64>() - 0.5) * ey, sign * hz]
            }),
        });
    }
    Ok(faces)
}

fn cylinder_faces(radius: f64, height: f64) -> Result<Vec<Face>> {
    positive(radius, "cylinder radius")?;
    positive(height, "cylinder height")?;
    let mut faces = vec![Face {
        area: TAU * radius * height,
        sample: Box::new(move |rng| {
            let theta = TAU * rng.gen::<f64>();
            [radius * theta.cos(), radius * theta.sin(), (rng.gen::<f64>() - 0.5) * height]
        }),
    }];
    for sign in [-1.0f64, 1.0] {
        faces.push(Face {
            area: PI * radius * radius,
            sample: Box::new(move |rng| {
                let rho = radius * rng.gen::<f64>().sqrt();
                let theta = TAU * rng.gen::<f64>();
                [rho * theta.cos(), rho * theta.sin(), sign * height / 2.0]
            }),
        });
    }
    Ok(faces)
}

fn sphere_faces(radius: f64) -> Result<Vec<Face>> {
    positive(radius, "sphere radius")?;
    Ok(vec![Face {
        area: 4.0 * PI * radius * radius,
        sample: Box::new(move |rng| {
            let z = 2.0 * rng.gen::<f64>() - 1.0;
            let theta = TAU * rng.gen::<f64>();
            let s = (1.0 - z * z).max(0.0).sqrt();
            [radius * s * theta.cos(), radius * s * theta.sin(), radius * z]
        }),
    }])
}

fn lshape_faces(w: f64, d: f64, height: f64, nw: f64, nd: f64) -> Result<Vec<Face>> {
    positive(w, "L-shape width")?;
    positive(d, "L-shape depth")?;
    positive(height, "L-shape height")?;
    positive(nw, "L-shape notch width")?;
    positive(nd, "L-shape notch depth")?;
    if nw >= w || nd >= d {
        return Err(Error::Config("L-shape notch must be smaller than the footprint".into()));
    }
    // Build in [0,w] x [0,height] x [0,d], then shift to center.
    let shift = [-w / 2.0, -height / 2.0, -d / 2.0];
    let at = move |x: f64, y: f64, z: f64| [x + shift[0], y + shift[1], z + shift[2]];
    let footprint_area = w * d - nw * nd;
    let rect_a = w * (d - nd);
    let mut faces = Vec::new();
    for y in [0.0, height] {
        faces.push(Face {
            area: footprint_area,
            sample: Box::new(move |rng| {
                // Split the L footprint into two rectangles.
                let (x, z) = if rng.gen::<f64>() * footprint_area < rect_a {
                    (rng.gen::<f64>() * w, rng.gen::<f64>() * (d - nd))
                } else {
                    (rng.gen::<f64>() * (w - nw), d - nd + rng.gen::<f64>() * nd)
                };
                at(x, y, z)
            }),
        });
    }
    // Side walls, one per footprint edge, counterclockwise.
    let walls: [(f64, Box<dyn Fn(f64, f64) -> [f64; 3]>); 6] = [
        (w, Box::new(move |u, v| at(u * w, v * height, 0.0))),
        (d - nd, Box::new(move |u, v| at(w, v * height, u * (d - nd)))),
        (nw, Box::new(move |u, v| at(w - nw + u * nw, v * height, d - nd))),
        (nd, Box::new(move |u, v| at(w - nw, v * height, d - nd + u * nd))),
        (w - nw, Box::new(move |u, v| at(u * (w - nw), v * height, d))),
        (d, Box::new(move |u, v| at(0.0, v * height, u * d))),
    ];
    for (length, place) in walls {
        faces.push(Face {
            area: length * height,
            sample: Box::new(move |rng| place(rng.gen(), rng.gen())),
        });
    }
    Ok(faces)
}

fn torus_faces(major: f64, minor: f64) -> Result<Vec<Face>> {
    positive(major, "torus major radius")?;
    positive(minor, "torus minor radius")?;
    if minor >= major {
        return Err(Error::Config("torus minor radius must be below the major radius".into()));
    }
    Ok(vec![Face {
        area: TAU * major * TAU * minor,
        sample: Box::new(move |rng| {
            let u = TAU * rng.gen::<f64>();
            // The tube angle is area-weighted by the local ring radius
            // major + minor*cos(v); rejection keeps the density exact.
            let v = loop {
                let v = TAU * rng.gen::<f64>();
                if rng.gen::<f64>() * (major + minor) <= major + minor * v.cos() {
                    break v;
                }
            };
            let ring = major + minor * v.cos();
            [ring * u.cos(), ring * u.sin(), minor * v.sin()]
        }),
    }])
}

/// Largest-remainder apportionment of `n` points by face area.
fn allocate(faces: &[Face], n: usize) -> Vec<usize> {
    let total: f64 = faces.iter().map(|f| f.area).sum();
    let quotas: Vec<f64> = faces.iter().map(|f| n as f64 * f.area / total).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|&q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..faces.len()).collect();
    order.sort_by(|&a, &b| {
        (quotas[b] - quotas[b].floor())
            .total_cmp(&(quotas[a] - quotas[a].floor()))
            .then(a.cmp(&b))
    });
    for &i in order.iter().take(n - assigned) {
        counts[i] += 1;
    }
    counts
}

/// Sample a colored primitive, centered at the origin, deterministic
/// under the seed.
pub fn generate_object(
    kind: ShapeKind,
    scheme: ColorScheme,
    n_points: usize,
    seed: u64,
) -> Result<ColoredCloud> {
    if n_points < 100 {
        return Err(Error::Config(format!("objects need at least 100 points, got {n_points}")));
    }
    if let ColorScheme::Striped { period, .. } = scheme {
        positive(period, "stripe period")?;
    }
    let faces = match kind {
        ShapeKind::Box { extents } => box_faces(extents)?,
        ShapeKind::Cylinder { radius, height } => cylinder_faces(radius, height)?,
        ShapeKind::Sphere { radius } => sphere_faces(radius)?,
        ShapeKind::LShape { w, d, height, nw, nd } => lshape_faces(w, d, height, nw, nd)?,
        ShapeKind::Torus { major, minor } => torus_faces(major, minor)?,
    };
    let counts = allocate(&faces, n_points);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n_points);
    for (face, count) in faces.iter().zip(counts) {
        for _ in 0..count {
            let pos = (face.sample)(&mut rng);
            points.push(ColoredPoint { pos, color: scheme.color_at(pos[2]) });
        }
    }
    Ok(ColoredCloud::new(points))
}

/// Rotation matrix of a uniformly random unit quaternion.
fn random_rotation(rng: &mut ChaCha20Rng) -> [[f64; 3]; 3] {
    let u1 = rng.gen::<f64>();
    let u2 = rng.gen::<f64>();
    let u3 = rng.gen::<f64>();
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let (x, y) = (a * (TAU * u2).sin(), a * (TAU * u2).cos());
    let (z, w) = (b * (TAU * u3).sin(), b * (TAU * u3).cos());
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - z * w), 2.0 * (x * z + y * w)],
        [2.0 * (x * y + z * w), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - x * w)],
        [2.0 * (x * z - y * w), 2.0 * (y * z + x * w), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

fn rotate(cloud: &ColoredCloud, r: &[[f64; 3]; 3]) -> ColoredCloud {
    ColoredCloud::new(
        cloud
            .points
            .iter()
            .map(|p| {
                let [x, y, z] = p.pos;
                ColoredPoint {
                    pos: [
                        r[0][0] * x + r[0][1] * y + r[0][2] * z,
                        r[1][0] * x + r[1][1] * y + r[1][2] * z,
                        r[2][0] * x + r[2][1] * y + r[2][2] * z,
                    ],
                    color: p.color,
                }
            })
            .collect(),
    )
}

/// Apply `n_views` random proper rotations to the cloud.
pub fn generate_views(cloud: &ColoredCloud, n_views: usize, seed: u64) -> Vec<ColoredCloud> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..n_views).map(|_| rotate(cloud, &random_rotation(&mut rng))).collect()
}

/// Keep the ceil((1-f) * n) points lowest along the axis, preserving the
/// input order; ties at the cut are resolved by input index.
pub fn occlude(cloud: &ColoredCloud, fraction: f64, axis: Axis) -> Result<ColoredCloud> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::Config(format!("occlusion fraction {fraction} outside [0, 1)")));
    }
    let n = cloud.len();
    let keep = ((1.0 - fraction) * n as f64).ceil() as usize;
    if keep < 100 {
        return Err(Error::Config(format!(
            "occlusion fraction {fraction} leaves {keep} of {n} points, fewer than 100"
        )));
    }
    if keep == n {
        return Ok(cloud.clone());
    }
    let k = axis.index();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        cloud.points[a].pos[k].total_cmp(&cloud.points[b].pos[k]).then(a.cmp(&b))
    });
    let mut selected = vec![false; n];
    for &i in &order[..keep] {
        selected[i] = true;
    }
    Ok(ColoredCloud::new(
        cloud.points.iter().zip(&selected).filter(|(_, &s)| s).map(|(p, _)| *p).collect(),
    ))
}

/// One fixed benchmark class: a shape paired with a color scheme.
#[derive(Debug, Clone)]
pub struct BenchmarkClass {
    pub name: &'static str,
    pub kind: ShapeKind,
    pub scheme: ColorScheme,
}

const fn rgb(r: u8, g: u8, b: u8) -> RgbColor {
    RgbColor { r, g, b }
}

/// The 8 benchmark classes: 4 shapes x 2 color schemes. Scheme colors
/// are chosen so each class lands on its own disjoint set of regions of
/// the default color network, keeping color evidence unambiguous even
/// when two classes share a shape. All four shapes have slice profiles
/// symmetric under the occlusion flip; a shape that is end-heavy along
/// its longest axis would come out of the flip reversed relative to
/// every training view.
pub fn benchmark_classes() -> Vec<BenchmarkClass> {
    vec![
        BenchmarkClass {
            name: "box_solid",
            kind: ShapeKind::Box { extents: [0.9, 0.6, 0.45] },
            scheme: ColorScheme::Solid { color: rgb(220, 30, 30) },
        },
        BenchmarkClass {
            name: "box_two_tone",
            kind: ShapeKind::Box { extents: [0.9, 0.6, 0.45] },
            scheme: ColorScheme::TwoTone { top: rgb(30, 60, 220), bottom: rgb(130, 220, 30) },
        },
        BenchmarkClass {
            name: "cylinder_solid",
            kind: ShapeKind::Cylinder { radius: 0.3, height: 0.9 },
            scheme: ColorScheme::Solid { color: rgb(30, 180, 60) },
        },
        BenchmarkClass {
            name: "cylinder_striped",
            kind: ShapeKind::Cylinder { radius: 0.3, height: 0.9 },
            scheme: ColorScheme::Striped {
                a: rgb(110, 180, 245),
                b: rgb(240, 240, 240),
                period: 0.15,
            },
        },
        BenchmarkClass {
            name: "sphere_solid",
            kind: ShapeKind::Sphere { radius: 0.42 },
            scheme: ColorScheme::Solid { color: rgb(245, 140, 20) },
        },
        BenchmarkClass {
            name: "sphere_two_tone",
            kind: ShapeKind::Sphere { radius: 0.42 },
            scheme: ColorScheme::TwoTone { top: rgb(40, 200, 220), bottom: rgb(220, 40, 160) },
        },
        BenchmarkClass {
            name: "torus_solid",
            kind: ShapeKind::Torus { major: 0.3, minor: 0.15 },
            scheme: ColorScheme::Solid { color: rgb(150, 95, 45) },
        },
        BenchmarkClass {
            name: "torus_striped",
            kind: ShapeKind::Torus { major: 0.3, minor: 0.15 },
            scheme: ColorScheme::Striped {
                a: rgb(25, 30, 120),
                b: rgb(150, 240, 190),
                period: 0.12,
            },
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkSpec {
    pub n_points: usize,
    pub train_views: usize,
    pub test_views: usize,
    /// Occlusion sweep applied to every test view.
    pub occlusion_fractions: Vec<f64>,
    /// Half-width of the per-view instance jitter: each view stretches
    /// the nominal shape by independent per-axis factors drawn from
    /// [1 - dim_jitter, 1 + dim_jitter].
    pub dim_jitter: f64,
    /// Standard deviation of per-point Gaussian position noise, in
    /// object units (shapes span roughly 0.4 to 0.9).
    pub noise: f64,
    pub seed: u64,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        Self {
            n_points: 1500,
            train_views: 60,
            test_views: 20,
            occlusion_fractions: vec![0.0, 0.15, 0.30],
            dim_jitter: 0.15,
            noise: 0.005,
            seed: 0,
        }
    }
}

/// One generated benchmark object.
#[derive(Debug, Clone)]
pub struct BenchmarkItem {
    pub label: String,
    /// `train`, or `test` splits named by occlusion fraction.
    pub split: String,
    pub view: usize,
    pub occlusion: f64,
    pub occluded: bool,
    pub cloud: ColoredCloud,
}

pub fn split_name(fraction: f64) -> String {
    format!("f{:.2}", fraction)
}

/// Stretch every point by per-axis factors, keeping colors.
fn stretch(cloud: &ColoredCloud, factors: [f64; 3]) -> ColoredCloud {
    ColoredCloud::new(
        cloud
            .points
            .iter()
            .map(|p| ColoredPoint {
                pos: [p.pos[0] * factors[0], p.pos[1] * factors[1], p.pos[2] * factors[2]],
                color: p.color,
            })
            .collect(),
    )
}

fn random_stretch(rng: &mut ChaCha20Rng, spread: f64) -> [f64; 3] {
    std::array::from_fn(|_| 1.0 - spread + 2.0 * spread * rng.gen::<f64>())
}

/// Isotropic Gaussian position noise, applied after coloring so stripe
/// and tone boundaries smear spatially the way sensor noise would.
fn add_noise(cloud: &ColoredCloud, sigma: f64, rng: &mut ChaCha20Rng) -> ColoredCloud {
    if sigma == 0.0 {
        return cloud.clone();
    }
    let normal = Normal::new(0.0, sigma).expect("sigma checked non-negative");
    ColoredCloud::new(
        cloud
            .points
            .iter()
            .map(|p| ColoredPoint {
                pos: [
                    p.pos[0] + normal.sample(rng),
                    p.pos[1] + normal.sample(rng),
                    p.pos[2] + normal.sample(rng),
                ],
                color: p.color,
            })
            .collect(),
    )
}

/// Bounding-box axis of least extent, ties to the lower index. Cutting
/// perpendicular to this axis shrinks it further, so it keeps its place
/// in the principal-axis order of the remaining shape: under the
/// quarter-turn alignment the cut lands on the strip direction and
/// truncates strips within slices instead of re-anchoring the slice
/// grid.
fn thinnest_axis(cloud: &ColoredCloud) -> Axis {
    let (lo, hi) = cloud.bounds().expect("generated objects are non-empty");
    let extents = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
    let mut best = 0;
    for k in 1..3 {
        if extents[k] < extents[best] {
            best = k;
        }
    }
    [Axis::X, Axis::Y, Axis::Z][best]
}

/// Generate the full benchmark: per class, train views unoccluded plus
/// every test view at every occlusion fraction. Every view resamples the
/// surface independently and stretches the shape by a random per-axis
/// factor, so each view is a distinct instance of its class instead of a
/// rigid copy. Occlusion truncates in the object frame before the view
/// rotation; one view keeps the same rotation across its whole occlusion
/// sweep.
pub fn generate_benchmark(spec: &BenchmarkSpec) -> Result<Vec<BenchmarkItem>> {
    if !(0.0..0.9).contains(&spec.dim_jitter) {
        return Err(Error::Config(format!("dim_jitter {} outside [0, 0.9)", spec.dim_jitter)));
    }
    if !spec.noise.is_finite() || spec.noise < 0.0 {
        return Err(Error::Config(format!("noise {} must be finite and non-negative", spec.noise)));
    }
    let mut master = ChaCha20Rng::seed_from_u64(spec.seed);
    let mut items = Vec::new();
    for class in benchmark_classes() {
        let mut train_rng = ChaCha20Rng::seed_from_u64(master.next_u64());
        let mut test_rng = ChaCha20Rng::seed_from_u64(master.next_u64());
        for view in 0..spec.train_views {
            let object =
                generate_object(class.kind, class.scheme, spec.n_points, train_rng.next_u64())?;
            let object = stretch(&object, random_stretch(&mut train_rng, spec.dim_jitter));
            let object = add_noise(&object, spec.noise, &mut train_rng);
            let cloud = generate_views(&object, 1, train_rng.next_u64()).remove(0);
            items.push(BenchmarkItem {
                label: class.name.to_string(),
                split: "train".into(),
                view,
                occlusion: 0.0,
                occluded: false,
                cloud,
            });
        }
        for view in 0..spec.test_views {
            let object =
                generate_object(class.kind, class.scheme, spec.n_points, test_rng.next_u64())?;
            let object = stretch(&object, random_stretch(&mut test_rng, spec.dim_jitter));
            let object = add_noise(&object, spec.noise, &mut test_rng);
            let axis = thinnest_axis(&object);
            let rotation_seed = test_rng.next_u64();
            for &f in &spec.occlusion_fractions {
                let cut = occlude(&object, f, axis)?;
                items.push(BenchmarkItem {
                    label: class.name.to_string(),
                    split: split_name(f),
                    view,
                    occlusion: f,
                    occluded: f > 0.0,
                    cloud: generate_views(&cut, 1, rotation_seed).remove(0),
                });
            }
        }
    }
    Ok(items)
}
