//! Masked compositing and pluggable perceptual distances.
//!
//! Two deterministic reference backends are built in. Scores from different
//! backends are not comparable, so reports carry the backend identifier.

use std::path::{Path, PathBuf};
use std::process::Command;

use thiserror::Error;

use crate::raster::{Frame, Mask, RasterError, Rgb};

pub const REFERENCE_PERCEPTUAL: &str = "reference-perceptual";
pub const REFERENCE_DISTS: &str = "reference-dists";
pub const EXTERNAL: &str = "external";
/// Environment variable naming the external backend executable.
pub const EXTERNAL_BACKEND_ENV: &str = "REGIONBENCH_EXTERNAL_BACKEND";

pub const PYRAMID_LEVELS: usize = 3;
pub const RMS_FLOOR: f64 = 1e-8;
pub const PATCH_SIZE: usize = 16;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("unknown backend {0:?}")]
    Unknown(String),
    #[error("external backend: {0}")]
    External(String),
}

/// A frame distance with `d(x, x) = 0`, symmetry and `d >= 0`.
pub trait PerceptualBackend: Send + Sync {
    fn id(&self) -> &str;
    fn distance(&self, a: &Frame, b: &Frame) -> Result<f64, BackendError>;
}

/// `m * f + (1 - m) * c`.
pub fn composite_on_neutral(f: &Frame, m: &Mask, c: Rgb) -> Result<Frame, RasterError> {
    if f.width() != m.width() || f.height() != m.height() {
        return Err(RasterError::DimensionMismatch(f.width(), f.height(), m.width(), m.height()));
    }
    Ok(Frame::from_fn(f.width(), f.height(), |x, y| if m.get(x, y) { f.pixel(x, y) } else { c }))
}

fn check_pair(a: &Frame, b: &Frame) -> Result<(), RasterError> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(RasterError::DimensionMismatch(a.width(), a.height(), b.width(), b.height()))
    }
}

/// Single-channel plane used by the pyramid.
struct Plane {
    w: usize,
    h: usize,
    v: Vec<f64>,
}

impl Plane {
    fn channel(f: &Frame, c: usize) -> Self {
        Self {
            w: f.width(),
            h: f.height(),
            v: f.data().iter().skip(c).step_by(3).copied().collect(),
        }
    }

    fn at(&self, x: usize, y: usize) -> f64 {
        self.v[y * self.w + x]
    }

    /// 2x2 box average; an odd trailing row or column is dropped.
    fn half(&self) -> Option<Self> {
        let (w, h) = (self.w / 2, self.h / 2);
        if w == 0 || h == 0 {
            return None;
        }
        let mut v = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let s = self.at(2 * x, 2 * y)
                    + self.at(2 * x + 1, 2 * y)
                    + self.at(2 * x, 2 * y + 1)
                    + self.at(2 * x + 1, 2 * y + 1);
                v.push(0.25 * s);
            }
        }
        Some(Self { w, h, v })
    }

    /// Central differences with replicate borders.
    fn gradients(&self, x: usize, y: usize) -> (f64, f64) {
        let (xl, xr) = (x.saturating_sub(1), (x + 1).min(self.w - 1));
        let (yu, yd) = (y.saturating_sub(1), (y + 1).min(self.h - 1));
        (
            0.5 * (self.at(xr, y) - self.at(xl, y)),
            0.5 * (self.at(x, yd) - self.at(x, yu)),
        )
    }
}

/// Sums over one feature map pair: `(sum a^2, sum b^2, sum (a-b)^2)`.
#[derive(Default, Clone, Copy)]
struct FeatureSums {
    aa: f64,
    bb: f64,
    dd: f64,
}

impl FeatureSums {
    fn add(&mut self, a: f64, b: f64) {
        self.aa += a * a;
        self.bb += b * b;
        self.dd += (a - b) * (a - b);
    }

    /// Mean squared difference after scaling both maps by their joint RMS.
    fn normalized_msd(&self, n: usize) -> f64 {
        let rms = ((self.aa + self.bb) / (2 * n) as f64).sqrt().max(RMS_FLOOR);
        self.dd / n as f64 / (rms * rms)
    }
}

/// Mean normalized squared feature difference at one pyramid level.
fn level_distance(a: &[Plane; 3], b: &[Plane; 3]) -> f64 {
    let (w, h) = (a[0].w, a[0].h);
    let n = w * h;
    let mut total = 0.0;
    for c in 0..3 {
        let mut sums = [FeatureSums::default(); 3];
        for y in 0..h {
            for x in 0..w {
                let (pa, pb) = (&a[c], &b[c]);
                sums[0].add(pa.at(x, y), pb.at(x, y));
                let (gxa, gya) = pa.gradients(x, y);
                let (gxb, gyb) = pb.gradients(x, y);
                sums[1].add(gxa, gxb);
                sums[2].add(gya, gyb);
            }
        }
        total += sums.iter().map(|s| s.normalized_msd(n)).sum::<f64>();
    }
    total / 9.0
}

/// Multiscale intensity/gradient feature distance.
///
/// Each of the nine per-level feature maps (value, x-gradient, y-gradient per
/// channel) is scaled by the RMS taken jointly over both inputs, so the
/// distance is symmetric and zero only for identical inputs.
pub fn reference_perceptual_distance(a: &Frame, b: &Frame) -> Result<f64, RasterError> {
    check_pair(a, b)?;
    if a.pixel_count() == 0 {
        return Ok(0.0);
    }
    let mut pa = [0, 1, 2].map(|c| Plane::channel(a, c));
    let mut pb = [0, 1, 2].map(|c| Plane::channel(b, c));
    let mut levels = Vec::with_capacity(PYRAMID_LEVELS);
    levels.push(level_distance(&pa, &pb));
    while levels.len() < PYRAMID_LEVELS {
        let next = |p: &[Plane; 3]| -> Option<[Plane; 3]> {
            Some([p[0].half()?, p[1].half()?, p[2].half()?])
        };
        match (next(&pa), next(&pb)) {
            (Some(na), Some(nb)) => {
                pa = na;
                pb = nb;
                levels.push(level_distance(&pa, &pb));
            }
            _ => break,
        }
    }
    Ok(levels.iter().sum::<f64>() / levels.len() as f64)
}

/// Per-channel means, standard deviations and mean-subtracted values of one
/// patch.
fn patch_stats(f: &Frame, x0: usize, y0: usize, x1: usize, y1: usize) -> ([f64; 3], [f64; 3], Vec<f64>) {
    let n = ((x1 - x0) * (y1 - y0)) as f64;
    let mut mean = [0.0; 3];
    for y in y0..y1 {
        for x in x0..x1 {
            let p = f.pixel(x, y);
            for c in 0..3 {
                mean[c] += p[c];
            }
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut centered = Vec::with_capacity(3 * (x1 - x0) * (y1 - y0));
    let mut var = [0.0; 3];
    for y in y0..y1 {
        for x in x0..x1 {
            let p = f.pixel(x, y);
            for c in 0..3 {
                let d = p[c] - mean[c];
                var[c] += d * d;
                centered.push(d);
            }
        }
    }
    (mean, var.map(|v| (v / n).sqrt()), centered)
}

const CONSTANT_EPS: f64 = 1e-12;

fn patch_distance(a: &Frame, b: &Frame, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
    if (y0..y1).all(|y| (x0..x1).all(|x| a.pixel(x, y) == b.pixel(x, y))) {
        return 0.0;
    }
    let (ma, sa, ca) = patch_stats(a, x0, y0, x1, y1);
    let (mb, sb, cb) = patch_stats(b, x0, y0, x1, y1);
    let texture = (0..3)
        .map(|c| (ma[c] - mb[c]).abs() + (sa[c] - sb[c]).abs())
        .sum::<f64>()
        / 3.0;
    let na = ca.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = cb.iter().map(|v| v * v).sum::<f64>().sqrt();
    let structure = match (na <= CONSTANT_EPS, nb <= CONSTANT_EPS) {
        (true, true) => 0.0,
        (true, false) | (false, true) => 1.0,
        _ => {
            let dot: f64 = ca.iter().zip(&cb).map(|(p, q)| p * q).sum();
            (1.0 - dot / (na * nb)).max(0.0)
        }
    };
    0.5 * (texture + structure)
}

/// Patchwise structure/texture distance in `[0, 1]`.
///
/// Frames are tiled into 16x16 patches (edge tiles may be smaller). Texture
/// compares per-channel patch means and standard deviations; structure is one
/// minus the cosine of the mean-subtracted patches.
pub fn reference_structure_texture_distance(a: &Frame, b: &Frame) -> Result<f64, RasterError> {
    check_pair(a, b)?;
    let (w, h) = (a.width(), a.height());
    if w == 0 || h == 0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    let mut patches = 0usize;
    for y0 in (0..h).step_by(PATCH_SIZE) {
        for x0 in (0..w).step_by(PATCH_SIZE) {
            let (x1, y1) = ((x0 + PATCH_SIZE).min(w), (y0 + PATCH_SIZE).min(h));
            total += patch_distance(a, b, x0, y0, x1, y1);
            patches += 1;
        }
    }
    Ok((total / patches as f64).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ReferencePerceptual;

impl PerceptualBackend for ReferencePerceptual {
    fn id(&self) -> &str {
        REFERENCE_PERCEPTUAL
    }

    fn distance(&self, a: &Frame, b: &Frame) -> Result<f64, BackendError> {
        Ok(reference_perceptual_distance(a, b)?)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ReferenceStructureTexture;

impl PerceptualBackend for ReferenceStructureTexture {
    fn id(&self) -> &str {
        REFERENCE_DISTS
    }

    fn distance(&self, a: &Frame, b: &Frame) -> Result<f64, BackendError> {
        Ok(reference_structure_texture_distance(a, b)?)
    }
}

/// Runs `command <a.png> <b.png>` and parses one decimal from its stdout.
///
/// Frames are written as 8-bit PNGs, so the external scorer sees quantized
/// inputs.
#[derive(Debug, Clone)]
pub struct ExternalBackend {
    command: PathBuf,
}

impl ExternalBackend {
    pub fn new(command: impl Into<PathBuf>) -> Self {
        Self {
            command: command.into(),
        }
    }

    pub fn command(&self) -> &Path {
        &self.command
    }
}

impl PerceptualBackend for ExternalBackend {
    fn id(&self) -> &str {
        EXTERNAL
    }

    fn distance(&self, a: &Frame, b: &Frame) -> Result<f64, BackendError> {
        check_pair(a, b)?;
        let ext = |e: String| BackendError::External(e);
        let dir = tempfile::tempdir().map_err(|e| ext(e.to_string()))?;
        let (pa, pb) = (dir.path().join("a.png"), dir.path().join("b.png"));
        crate::raster::png::save_frame_png(a, &pa).map_err(|e| ext(e.to_string()))?;
        crate::raster::png::save_frame_png(b, &pb).map_err(|e| ext(e.to_string()))?;
        let out = Command::new(&self.command)
            .arg(&pa)
            .arg(&pb)
            .output()
            .map_err(|e| ext(format!("{}: {e}", self.command.display())))?;
        if !out.status.success() {
            return Err(ext(format!(
                "{} exited with {}: {}",
                self.command.display(),
                out.status,
                String::from_utf8_lossy(&out.stderr).trim()
            )));
        }
        let text = String::from_utf8_lossy(&out.stdout);
        let d: f64 = text
            .trim()
            .parse()
            .map_err(|_| ext(format!("expected one decimal on stdout, got {:?}", text.trim())))?;
        if !d.is_finite() || d < 0.0 {
            return Err(ext(format!("score {d} is not a finite non-negative number")));
        }
        Ok(d)
    }
}

/// Resolves a backend identifier. `external` takes its executable from
/// `external_command` or, failing that, from [`EXTERNAL_BACKEND_ENV`].
pub fn backend_by_name(
    name: &str,
    external_command: Option<&Path>,
) -> Result<Box<dyn PerceptualBackend>, BackendError> {
    match name {
        REFERENCE_PERCEPTUAL => Ok(Box::new(ReferencePerceptual)),
        REFERENCE_DISTS => Ok(Box::new(ReferenceStructureTexture)),
        EXTERNAL => {
            let cmd = match external_command {
                Some(p) => p.to_path_buf(),
                None => std::env::var_os(EXTERNAL_BACKEND_ENV)
                    .map(PathBuf::from)
                    .ok_or_else(|| {
                        BackendError::External(format!("no command configured and {EXTERNAL_BACKEND_ENV} is unset"))
                    })?,
            };
            Ok(Box::new(ExternalBackend::new(cmd)))
        }
        other => Err(BackendError::Unknown(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_frame(seed: u64, w: usize, h: usize) -> Frame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Frame::from_fn(w, h, |_, _| [rng.gen(), rng.gen(), rng.gen()])
    }

    #[test]
    fn composite_examples() {
        let f = random_frame(1, 6, 4);
        let c = [0.5; 3];
        assert_eq!(composite_on_neutral(&f, &Mask::full(6, 4), c).unwrap(), f);
        assert_eq!(composite_on_neutral(&f, &Mask::empty(6, 4), c).unwrap(), Frame::filled(6, 4, c));
        let left = Mask::from_fn(6, 4, |x, _| x < 3);
        let g = composite_on_neutral(&f, &left, c).unwrap();
        for y in 0..4 {
            for x in 0..6 {
                assert_eq!(g.pixel(x, y), if x < 3 { f.pixel(x, y) } else { c });
            }
        }
        assert!(composite_on_neutral(&f, &Mask::full(5, 4), c).is_err());
    }

    #[test]
    fn perceptual_constant_shift_is_luminance_only() {
        let (w, h, v) = (20, 12, 0.4);
        let a = Frame::filled(w, h, [v; 3]);
        let b = Frame::filled(w, h, [v + 0.1; 3]);
        // Hand evaluation: gradients vanish, each of the three value maps
        // contributes 0.1^2 / ((v^2 + (v+0.1)^2) / 2) on every level, and the
        // six gradient maps contribute 0.
        let value_term = 0.01 / ((0.16 + 0.25) / 2.0);
        let expected = 3.0 * value_term / 9.0;
        let d = reference_perceptual_distance(&a, &b).unwrap();
        assert!((d - expected).abs() < 1e-12, "{d} vs {expected}");
    }

    #[test]
    fn perceptual_gradient_only_difference() {
        // a is a horizontal ramp; b is its mirror image. Same value RMS, but
        // opposite x-gradients.
        let a = Frame::from_fn(8, 8, |x, _| [x as f64 / 7.0; 3]);
        let b = Frame::from_fn(8, 8, |x, _| [(7 - x) as f64 / 7.0; 3]);
        let d = reference_perceptual_distance(&a, &b).unwrap();
        assert!(d > 0.0);
        assert_eq!(reference_perceptual_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn perceptual_handles_tiny_frames() {
        let a = random_frame(2, 1, 1);
        let b = random_frame(3, 1, 1);
        assert!(reference_perceptual_distance(&a, &b).unwrap() > 0.0);
        assert!(reference_perceptual_distance(&a, &random_frame(4, 2, 1)).is_err());
    }

    #[test]
    fn structure_texture_constant_offset() {
        let a = Frame::filled(40, 24, [0.3; 3]);
        let b = Frame::filled(40, 24, [0.5; 3]);
        let d = reference_structure_texture_distance(&a, &b).unwrap();
        assert!((d - 0.1).abs() < 1e-12, "{d}");
    }

    #[test]
    fn structure_term_one_for_single_constant_patch() {
        let a = Frame::filled(16, 16, [0.5; 3]);
        let b = Frame::from_fn(16, 16, |x, _| if x < 8 { [0.4; 3] } else { [0.6; 3] });
        // means equal, std 0 vs 0.1, structure 1
        let d = reference_structure_texture_distance(&a, &b).unwrap();
        assert!((d - 0.5 * (0.1 + 1.0)).abs() < 1e-12, "{d}");
    }

    #[test]
    fn structure_texture_inverted_pattern() {
        let a = Frame::from_fn(16, 16, |x, _| if x < 8 { [0.4; 3] } else { [0.6; 3] });
        let b = Frame::from_fn(16, 16, |x, _| if x < 8 { [0.6; 3] } else { [0.4; 3] });
        // equal statistics, cosine -1, structure 2, clamped total 1
        assert_eq!(reference_structure_texture_distance(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn backend_lookup() {
        assert_eq!(backend_by_name("reference-perceptual", None).unwrap().id(), REFERENCE_PERCEPTUAL);
        assert_eq!(backend_by_name("reference-dists", None).unwrap().id(), REFERENCE_DISTS);
        assert!(matches!(backend_by_name("lpips-vgg", None), Err(BackendError::Unknown(_))));
        assert_eq!(
            backend_by_name("external", Some(Path::new("/bin/true"))).unwrap().id(),
            EXTERNAL
        );
    }

    #[cfg(unix)]
    #[test]
    fn external_backend_parses_stdout() {
        use std::os::unix::fs::PermissionsExt;
        let dir = tempfile::tempdir().unwrap();
        let script = dir.path().join("score.sh");
        std::fs::write(&script, "#!/bin/sh\n[ -f \"$1\" ] && [ -f \"$2\" ] && echo ' 0.125'\n").unwrap();
        std::fs::set_permissions(&script, std::fs::Permissions::from_mode(0o755)).unwrap();
        let f = random_frame(5, 4, 4);
        let d = ExternalBackend::new(&script).distance(&f, &f).unwrap();
        assert_eq!(d, 0.125);

        let bad = dir.path().join("bad.sh");
        std::fs::write(&bad, "#!/bin/sh\necho nope\n").unwrap();
        std::fs::set_permissions(&bad, std::fs::Permissions::from_mode(0o755)).unwrap();
        assert!(matches!(ExternalBackend::new(&bad).distance(&f, &f), Err(BackendError::External(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn reference_distances_are_metric_like(s1 in any::<u64>(), s2 in any::<u64>(), w in 1usize..40, h in 1usize..30) {
            let a = random_frame(s1, w, h);
            let b = random_frame(s2, w, h);
            for f in [reference_perceptual_distance, reference_structure_texture_distance] {
                let ab = f(&a, &b).unwrap();
                prop_assert_eq!(ab, f(&b, &a).unwrap());
                prop_assert!(ab >= 0.0);
                prop_assert_eq!(f(&a, &a).unwrap(), 0.0);
            }
            let st = reference_structure_texture_distance(&a, &b).unwrap();
            prop_assert!(st <= 1.0);
            if s1 != s2 {
                prop_assert!(reference_perceptual_distance(&a, &b).unwrap() > 0.0);
            }
        }

        #[test]
        fn single_pixel_change_is_detected(s in any::<u64>(), w in 1usize..24, h in 1usize..24, k in any::<prop::sample::Index>()) {
            let a = random_frame(s, w, h);
            let mut data = a.data().to_vec();
            let i = k.index(data.len());
            data[i] = if data[i] > 0.5 { data[i] - 0.25 } else { data[i] + 0.25 };
            let b = Frame::new(w, h, data).unwrap();
            prop_assert!(reference_perceptual_distance(&a, &b).unwrap() > 0.0);
        }
    }
}
