//! Synthetic multi-look covariance scenes with known class layout.
//!
//! Each pixel is the average of `looks` outer products of circular complex
//! Gaussian scattering vectors drawn from its class signature Σ (a complex
//! Wishart sample scaled by 1/n). Pixels are independent.

use alloc::string::String;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::polsar::{
    hermitian_eigen, precompute_image, HermitianMat, LabelMap, Mat3, PolSarImage, ScatteringVector,
};

/// Minimum eigenvalue of a signature relative to its trace.
pub const SIGNATURE_CONDITION: f64 = 1e-6;

/// Population covariance of one class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSignature {
    pub sigma: HermitianMat,
    pub name: String,
}

impl ClassSignature {
    pub fn new(name: impl Into<String>, sigma: HermitianMat) -> Result<Self> {
        if !sigma.is_finite() {
            return Err(Error::NonFinite("class signature"));
        }
        let min = hermitian_eigen(&sigma).values[0];
        if !(sigma.trace() > 0.0 && min >= SIGNATURE_CONDITION * sigma.trace()) {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(ClassSignature {
            sigma,
            name: name.into(),
        })
    }
}

/// Spatial arrangement of class regions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Layout {
    /// Horizontal bands of equal height, class 1 on top. Every vertical
    /// stripe of the image therefore contains every class.
    Stripes,
    /// Square tiles with classes assigned at random.
    Blocks { size: usize },
    /// Nearest-seed cells; seed `i` carries class `i mod L + 1`.
    Voronoi { seeds: usize },
    /// Voronoi cells of classes `1..L` crossed by a grid of ribbons of the
    /// last class, `line_width` pixels wide every `spacing` pixels.
    ThinLines { line_width: usize, spacing: usize },
}

impl Layout {
    pub fn name(&self) -> &'static str {
        match self {
            Layout::Stripes => "stripes",
            Layout::Blocks { .. } => "blocks",
            Layout::Voronoi { .. } => "voronoi",
            Layout::ThinLines { .. } => "thin-lines",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub width: usize,
    pub height: usize,
    pub signatures: Vec<ClassSignature>,
    pub looks: usize,
    pub layout: Layout,
    pub seed: u64,
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Empty("scene"));
        }
        if !(2..=u8::MAX as usize).contains(&self.signatures.len()) {
            return Err(Error::Config(alloc::format!(
                "a scene needs between 2 and 255 classes, got {}",
                self.signatures.len()
            )));
        }
        if self.looks < 3 {
            return Err(Error::Config(alloc::format!(
                "looks must be at least 3, got {}",
                self.looks
            )));
        }
        match self.layout {
            Layout::Blocks { size: 0 } => Err(Error::Config("block size must be positive".into())),
            Layout::Voronoi { seeds: 0 } => Err(Error::Config("voronoi layout needs seeds".into())),
            Layout::ThinLines {
                line_width,
                spacing,
            } if line_width == 0 || spacing <= line_width => Err(Error::Config(
                "ribbon spacing must exceed a positive line width".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Lower-triangular `A` with `A A† = Σ`.
pub fn cholesky(sigma: &HermitianMat) -> Result<Mat3> {
    let s = sigma.to_dense();
    let mut a = [[Complex64::new(0.0, 0.0); 3]; 3];
    for j in 0..3 {
        let mut d = s[j][j].re;
        for k in 0..j {
            d -= a[j][k].norm_sqr();
        }
        if d.is_nan() || d <= 0.0 {
            return Err(Error::NotPositiveDefinite);
        }
        let d = libm::sqrt(d);
        a[j][j] = Complex64::new(d, 0.0);
        for i in j + 1..3 {
            let mut v = s[i][j];
            for k in 0..j {
                v -= a[i][k] * a[j][k].conj();
            }
            a[i][j] = v / d;
        }
    }
    Ok(a)
}

fn circular_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

fn sample_with_factor<R: Rng + ?Sized>(a: &Mat3, looks: usize, rng: &mut R) -> HermitianMat {
    let mut acc = HermitianMat::ZERO;
    for _ in 0..looks {
        let w = [
            circular_gaussian(rng),
            circular_gaussian(rng),
            circular_gaussian(rng),
        ];
        let z = core::array::from_fn(|i| (0..=i).map(|k| a[i][k] * w[k]).sum());
        acc = acc + HermitianMat::outer(&ScatteringVector(z));
    }
    acc.scale(1.0 / looks as f64)
}

/// Averages `looks` outer products `z z†` with `z ~ CN(0, Σ)`.
pub fn sample_covariance<R: Rng + ?Sized>(
    sigma: &HermitianMat,
    looks: usize,
    rng: &mut R,
) -> Result<HermitianMat> {
    if looks == 0 {
        return Err(Error::Config("looks must be at least 1".into()));
    }
    Ok(sample_with_factor(&cholesky(sigma)?, looks, rng))
}

/// Class of every pixel, row-major, for the given layout.
pub fn layout_labels(
    width: usize,
    height: usize,
    classes: u8,
    layout: Layout,
    seed: u64,
) -> Vec<u8> {
    let l = classes as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let voronoi = |rng: &mut ChaCha8Rng, seeds: usize, cells: usize| {
        let points: Vec<(f64, f64)> = (0..seeds)
            .map(|_| {
                (
                    rng.random::<f64>() * width as f64,
                    rng.random::<f64>() * height as f64,
                )
            })
            .collect();
        let mut out = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
                let mut best = (f64::INFINITY, 0);
                for (i, &(sx, sy)) in points.iter().enumerate() {
                    let d = (px - sx) * (px - sx) + (py - sy) * (py - sy);
                    if d < best.0 {
                        best = (d, i);
                    }
                }
                out.push((best.1 % cells) as u8 + 1);
            }
        }
        out
    };
    match layout {
        Layout::Stripes => (0..height)
            .flat_map(|y| core::iter::repeat_n((y * l / height) as u8 + 1, width))
            .collect(),
        Layout::Blocks { size } => {
            let cols = width.div_ceil(size);
            let rows = height.div_ceil(size);
            let tiles: Vec<u8> = (0..cols * rows)
                .map(|_| rng.random_range(1..=classes))
                .collect();
            (0..height)
                .flat_map(|y| (0..width).map(move |x| (y / size, x / size)))
                .map(|(ty, tx)| tiles[ty * cols + tx])
                .collect()
        }
        Layout::Voronoi { seeds } => voronoi(&mut rng, seeds, l),
        Layout::ThinLines {
            line_width,
            spacing,
        } => {
            let seeds = (width * height / (spacing * spacing)).max(l - 1);
            let mut out = voronoi(&mut rng, seeds, (l - 1).max(1));
            let offset = spacing / 2;
            for y in 0..height {
                for x in 0..width {
                    if (x + offset) % spacing < line_width || (y + offset) % spacing < line_width {
                        out[y * width + x] = classes;
                    }
                }
            }
            out
        }
    }
}

/// Draws a fully labeled scene. Row `y` uses its own random stream, so the
/// result does not depend on how rows are scheduled.
pub fn generate_scene(cfg: &SceneConfig) -> Result<(PolSarImage, LabelMap)> {
    cfg.validate()?;
    let (w, h) = (cfg.width, cfg.height);
    let classes = cfg.signatures.len() as u8;
    let labels = layout_labels(w, h, classes, cfg.layout, cfg.seed);
    let factors = cfg
        .signatures
        .iter()
        .map(|s| cholesky(&s.sigma))
        .collect::<Result<Vec<_>>>()?;
    let row = |y: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(y as u64 + 1);
        labels[y * w..(y + 1) * w]
            .iter()
            .map(|&c| sample_with_factor(&factors[c as usize - 1], cfg.looks, &mut rng))
            .collect::<Vec<_>>()
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<HermitianMat>> = {
        use rayon::prelude::*;
        (0..h).into_par_iter().map(row).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<HermitianMat>> = (0..h).map(row).collect();
    let img = precompute_image(w, h, rows.concat())?;
    Ok((img, LabelMap::new(w, h, classes, labels)?))
}

fn mat(diag: [f64; 3], upper: [(f64, f64); 3], scale: f64) -> HermitianMat {
    let upper = upper.map(|(re, im)| Complex64::new(re, im));
    HermitianMat::new(diag, upper).scale(scale)
}

/// Named scene presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Five synthetic land-cover-like classes with overlapping statistics.
    FiveClass,
    /// Two classes far apart in log-Euclidean distance.
    TwoClass,
    /// Five classes sharing one signature; nothing to learn.
    Null,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::FiveClass, Preset::TwoClass, Preset::Null];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::FiveClass => "five-class",
            Preset::TwoClass => "two-class",
            Preset::Null => "null",
        }
    }

    pub fn from_name(name: &str) -> Option<Preset> {
        Preset::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn signatures(&self) -> Vec<ClassSignature> {
        match self {
            Preset::FiveClass => five_class_signatures(),
            Preset::TwoClass => two_class_signatures(),
            Preset::Null => {
                let s = five_class_signatures().swap_remove(0).sigma;
                (1..=5)
                    .map(|i| {
                        ClassSignature::new(alloc::format!("copy-{i}"), s)
                            .expect("preset is positive definite")
                    })
                    .collect()
            }
        }
    }

    /// Default layout for the preset: horizontal bands, so that every
    /// vertical stripe of the scene holds all classes in equal shares.
    pub fn layout(&self) -> Layout {
        Layout::Stripes
    }

    pub fn scene(&self, width: usize, height: usize, looks: usize, seed: u64) -> SceneConfig {
        SceneConfig {
            width,
            height,
            signatures: self.signatures(),
            looks,
            layout: self.layout(),
            seed,
        }
    }
}

/// Synthetic signatures loosely shaped after common scattering mechanisms.
/// The numbers are invented fixtures, not measurements.
pub fn five_class_signatures() -> Vec<ClassSignature> {
    let raw = [
        // Surface: co-pol dominant, HH/VV in phase.
        (
            "surface",
            mat(
                [1.0, 0.12, 0.7],
                [(0.0, 0.0), (0.45, 0.05), (0.0, 0.0)],
                1.0,
            ),
        ),
        // Dihedral: HH/VV out of phase.
        (
            "dihedral",
            mat(
                [1.2, 0.15, 0.8],
                [(0.0, 0.0), (-0.45, 0.1), (0.0, 0.0)],
                1.0,
            ),
        ),
        // Volume: strong cross-pol, weak HH/VV correlation.
        (
            "volume",
            mat(
                [1.0, 0.45, 0.9],
                [(0.02, 0.0), (0.2, 0.0), (0.0, 0.02)],
                1.0,
            ),
        ),
        // Water: low power, surface-like.
        (
            "water",
            mat(
                [1.0, 0.08, 0.8],
                [(0.0, 0.0), (0.55, 0.0), (0.0, 0.0)],
                0.35,
            ),
        ),
        // Street: mixed mechanisms, moderately bright.
        (
            "street",
            mat(
                [1.0, 0.3, 0.8],
                [(0.05, 0.05), (0.1, 0.1), (0.05, -0.05)],
                1.1,
            ),
        ),
    ];
    raw.into_iter()
        .map(|(n, s)| ClassSignature::new(n, s).expect("preset is positive definite"))
        .collect()
}

pub fn two_class_signatures() -> Vec<ClassSignature> {
    [
        (
            "bright",
            mat([4.0, 0.4, 3.0], [(0.0, 0.0), (1.5, 0.0), (0.0, 0.0)], 1.0),
        ),
        (
            "dark",
            mat(
                [0.1, 0.05, 0.1],
                [(0.0, 0.0), (-0.04, 0.0), (0.0, 0.0)],
                1.0,
            ),
        ),
    ]
    .into_iter()
    .map(|(n, s)| ClassSignature::new(n, s).expect("preset is positive definite"))
    .collect()
}
