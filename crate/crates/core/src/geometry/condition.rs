//! Observation-backed appearance cues.
//!
//! Each supported target pixel borrows its color from a source frame where
//! the same scene point was actually observed. Candidate frames inside the
//! temporal window must pass visibility, depth and instance checks; among the
//! survivors the one with the best view-time score wins. Pixels with no valid
//! observation keep only a weak coarse prior and zero confidence.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::camera::CameraPose;
use super::projection::{compute_confidence, project_scene, Projection};
use super::regions::{decompose_regions, dynamic_mask, in_extent_mask, SceneExtent};
use super::scene::Scene;
use super::GeometryError;
use crate::raster::{Frame, Mask, RegionMasks, Rgb};

/// Parameters of cue construction and confidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeometryConfig {
    /// Depth-variation sensitivity of the confidence map, scene units.
    pub tau: f64,
    /// Weight of temporal distance in the view-time score.
    pub lambda_view: f64,
    /// Temporal search window `W`, frames.
    pub window: usize,
    /// Confidence floor kept for opposing views.
    pub alpha: f64,
    /// Sharpness of the view-agreement attenuation.
    pub gamma: f64,
    /// Odd side length of the statistics neighborhood.
    pub stats_window: usize,
    /// Depth-consistency tolerance; `None` uses 1% of the source depth range.
    pub depth_tolerance: Option<f64>,
    /// Fill color for pixels with no projected point.
    pub neutral: Rgb,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            tau: 0.05,
            lambda_view: 0.5,
            window: 8,
            alpha: 0.2,
            gamma: 2.0,
            stats_window: 5,
            depth_tolerance: None,
            neutral: [0.5; 3],
        }
    }
}

impl GeometryConfig {
    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |m: &str| Err(GeometryError::Config(m.to_string()));
        if !(self.tau > 0.0) {
            return bad("tau must be positive");
        }
        if !(self.lambda_view >= 0.0) {
            return bad("lambda_view must be non-negative");
        }
        if self.window == 0 {
            return bad("window must be at least one frame");
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad("alpha must lie in [0, 1]");
        }
        if !(self.gamma > 0.0) {
            return bad("gamma must be positive");
        }
        if self.stats_window % 2 == 0 {
            return bad("stats_window must be odd");
        }
        if matches!(self.depth_tolerance, Some(e) if !(e > 0.0)) {
            return bad("depth_tolerance must be positive");
        }
        if !self.neutral.iter().all(|c| (0.0..=1.0).contains(c)) {
            return bad("neutral color channels must lie in [0, 1]");
        }
        Ok(())
    }
}

/// `⟨d_tgt, d_src⟩ − λ |r − t| / W`.
pub fn view_time_score(
    target_dir: &Vector3<f64>,
    source_dir: &Vector3<f64>,
    r: usize,
    t: usize,
    window: usize,
    lambda_view: f64,
) -> f64 {
    debug_assert!(r.abs_diff(t) <= window);
    target_dir.dot(source_dir) - lambda_view * r.abs_diff(t) as f64 / window as f64
}

/// `c (α + (1 − α) max(0, ⟨v_src, v_tgt⟩)^γ)`.
pub fn attenuate_confidence(
    c: f64,
    v_src: &Vector3<f64>,
    v_tgt: &Vector3<f64>,
    alpha: f64,
    gamma: f64,
) -> f64 {
    let agreement = v_src.dot(v_tgt).clamp(0.0, 1.0);
    c * (alpha + (1.0 - alpha) * agreement.powf(gamma))
}

/// What one source frame recorded: colors, depth estimate and instance labels.
#[derive(Debug, Clone)]
pub struct SourceObservation {
    pub camera: CameraPose,
    pub rgb: Frame,
    /// Per-pixel depth, `f64::INFINITY` where nothing was observed.
    pub depth: Vec<f64>,
    pub instance: Vec<Option<u32>>,
}

impl SourceObservation {
    pub fn from_projection(camera: CameraPose, p: Projection) -> Self {
        Self {
            camera,
            rgb: p.coarse,
            depth: p.depth,
            instance: p.instance,
        }
    }
}

/// The unedited scene and its per-frame observations.
#[derive(Debug, Clone)]
pub struct SourceVideo {
    pub scene: Scene,
    pub frames: Vec<SourceObservation>,
}

impl SourceVideo {
    /// Renders `scene` through its own camera track.
    pub fn render(scene: Scene) -> Result<Self, GeometryError> {
        let frames = scene
            .cameras
            .iter()
            .enumerate()
            .map(|(r, cam)| {
                project_scene(&scene, cam, r, 1).map(|p| SourceObservation::from_projection(*cam, p))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { scene, frames })
    }

    /// Largest finite observed depth.
    pub fn depth_range(&self) -> f64 {
        self.frames
            .iter()
            .flat_map(|f| f.depth.iter())
            .filter(|d| d.is_finite())
            .fold(0.0, |a, &b| a.max(b))
    }
}

/// Appearance cue, confidence and support label for one target frame.
#[derive(Debug, Clone)]
pub struct ConditionField {
    pub rgb: Frame,
    pub confidence: Vec<f64>,
    pub support: Mask,
    /// Source frame each supported pixel was copied from.
    pub source_frame: Vec<Option<usize>>,
}

impl ConditionField {
    pub fn width(&self) -> usize {
        self.rgb.width()
    }

    pub fn height(&self) -> usize {
        self.rgb.height()
    }
}

/// Everything the region-aware conditioning needs for one target frame.
#[derive(Debug, Clone)]
pub struct ControlFrame {
    pub field: ConditionField,
    pub masks: RegionMasks,
    pub projection: Projection,
}

struct Candidate {
    frame: usize,
    score: f64,
    color: Rgb,
    v_src: Vector3<f64>,
}

fn local_rotation(scene: &Scene, point: usize, frame: usize) -> Matrix3<f64> {
    let id = scene.points[point].instance_id;
    scene
        .instance_transform(id, frame)
        .rotation
        .to_rotation_matrix()
        .into_inner()
}

/// Builds `(C^rgb, C^conf)` for target frame `t` of the edited scene.
pub fn build_condition_field(
    edited: &Scene,
    source: &SourceVideo,
    target: &CameraPose,
    t: usize,
    cfg: &GeometryConfig,
) -> Result<ConditionField, GeometryError> {
    cfg.validate()?;
    let projection = project_scene(edited, target, t, cfg.stats_window)?;
    Ok(condition_from_projection(edited, source, target, t, cfg, &projection))
}

fn condition_from_projection(
    edited: &Scene,
    source: &SourceVideo,
    target: &CameraPose,
    t: usize,
    cfg: &GeometryConfig,
    projection: &Projection,
) -> ConditionField {
    let (w, h) = (projection.width(), projection.height());
    let eps = cfg
        .depth_tolerance
        .unwrap_or_else(|| 0.01 * source.depth_range())
        .max(1e-12);
    let n_src = source.frames.len();
    let lo = t.saturating_sub(cfg.window);
    let hi = (t + cfg.window).min(n_src.saturating_sub(1));
    // nearest frames first, earlier frame first on equal distance
    let mut order: Vec<usize> = if n_src == 0 || lo > hi { Vec::new() } else { (lo..=hi).collect() };
    order.sort_by_key(|&r| (r.abs_diff(t), r));

    let mut rgb = Frame::filled(w, h, cfg.neutral);
    let mut confidence = vec![0.0; w * h];
    let mut support = vec![false; w * h];
    let mut source_frame = vec![None; w * h];

    for y in 0..h {
        for x in 0..w {
            let k = y * w + x;
            let Some(i) = projection.point[k] else {
                continue;
            };
            rgb.set_pixel(x, y, projection.coarse.pixel(x, y));
            let Some(p_tgt) = edited.world_position(i, t) else {
                continue;
            };
            let instance = edited.points[i].instance_id;
            let to_local_tgt = local_rotation(edited, i, t).transpose();
            let d_tgt = to_local_tgt * (p_tgt - target.center()).normalize();

            let mut best: Option<Candidate> = None;
            for &r in &order {
                let obs = &source.frames[r];
                let Some(p_src) = source.scene.world_position(i, r) else {
                    continue;
                };
                let Some(ip) = obs.camera.project(&p_src) else {
                    continue;
                };
                let Some((sx, sy)) = ip.pixel(obs.rgb.width(), obs.rgb.height()) else {
                    continue;
                };
                let sk = sy * obs.rgb.width() + sx;
                let observed = obs.depth[sk];
                if !observed.is_finite() {
                    continue;
                }
                // visibility: nothing nearer occludes the point
                if ip.depth > observed + eps {
                    continue;
                }
                // depth consistency with the source depth estimate
                if (ip.depth - observed).abs() > eps {
                    continue;
                }
                if instance > 0 && obs.instance[sk] != Some(instance) {
                    continue;
                }
                let to_local_src = local_rotation(&source.scene, i, r).transpose();
                let d_src = to_local_src * (p_src - obs.camera.center()).normalize();
                let score = view_time_score(&d_tgt, &d_src, r, t, cfg.window, cfg.lambda_view);
                if best.as_ref().map_or(true, |b| score > b.score) {
                    best = Some(Candidate {
                        frame: r,
                        score,
                        color: obs.rgb.pixel(sx, sy),
                        v_src: d_src,
                    });
                }
            }
            if let Some(c) = best {
                let base = compute_confidence(&projection.stats[k], cfg.tau, true);
                confidence[k] = attenuate_confidence(base, &c.v_src, &d_tgt, cfg.alpha, cfg.gamma);
                rgb.set_pixel(x, y, c.color);
                support[k] = true;
                source_frame[k] = Some(c.frame);
            }
        }
    }
    ConditionField {
        rgb,
        confidence,
        support: Mask::new(w, h, support).expect("shape"),
        source_frame,
    }
}

/// Projects the edited scene, builds the condition field and splits the
/// frame into Preserve/Reveal/Expand against the pre-edit extent.
pub fn build_control_frame(
    edited: &Scene,
    source: &SourceVideo,
    extent: &SceneExtent,
    target: &CameraPose,
    t: usize,
    cfg: &GeometryConfig,
) -> Result<ControlFrame, GeometryError> {
    cfg.validate()?;
    let projection = project_scene(edited, target, t, cfg.stats_window)?;
    let field = condition_from_projection(edited, source, target, t, cfg, &projection);
    let mut masks = decompose_regions(&field.support, &in_extent_mask(extent, target));
    masks.dynamic = dynamic_mask(&masks.preserve, &projection);
    Ok(ControlFrame {
        field,
        masks,
        projection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(x: f64, y: f64, z: f64) -> Vector3<f64> {
        Vector3::new(x, y, z).normalize()
    }

    #[test]
    fn view_time_examples() {
        let a = unit(0.0, 0.0, 1.0);
        assert_eq!(view_time_score(&a, &a, 3, 3, 8, 0.5), 1.0);
        assert!((view_time_score(&a, &a, 11, 3, 8, 0.5) - 0.5).abs() < 1e-15);
        assert_eq!(view_time_score(&a, &unit(1.0, 0.0, 0.0), 3, 3, 8, 0.5), 0.0);
    }

    #[test]
    fn attenuation_examples() {
        let a = unit(0.0, 0.0, 1.0);
        assert_eq!(attenuate_confidence(0.8, &a, &a, 0.2, 2.0), 0.8);
        let ortho = unit(1.0, 0.0, 0.0);
        assert!((attenuate_confidence(0.8, &ortho, &a, 0.2, 2.0) - 0.16).abs() < 1e-15);
        assert!((attenuate_confidence(0.8, &(-a), &a, 0.2, 2.0) - 0.16).abs() < 1e-15);
        // 60 degrees apart: dot 0.5, factor 0.2 + 0.8 * 0.25 = 0.4
        let sixty = unit(3f64.sqrt() / 2.0, 0.0, 0.5);
        assert!((attenuate_confidence(1.0, &sixty, &a, 0.2, 2.0) - 0.4).abs() < 1e-12);
    }

    fn arb_unit() -> impl Strategy<Value = Vector3<f64>> {
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
            .prop_filter("non-degenerate", |(x, y, z)| x * x + y * y + z * z > 1e-3)
            .prop_map(|(x, y, z)| unit(x, y, z))
    }

    proptest! {
        #[test]
        fn attenuation_bounds(c in 0.0f64..=1.0, a in arb_unit(), b in arb_unit(), alpha in 0.0f64..=1.0, gamma in 0.1f64..5.0) {
            let out = attenuate_confidence(c, &a, &b, alpha, gamma);
            prop_assert!(out >= alpha * c - 1e-15 && out <= c + 1e-15);
            prop_assert!((attenuate_confidence(c, &a, &a, alpha, gamma) - c).abs() < 1e-12);
        }

        #[test]
        fn argmax_invariant_under_uniform_scaling(
            dots in proptest::collection::vec(-1.0f64..1.0, 2..8),
            lambda in 0.0f64..2.0,
            scale in 0.1f64..10.0,
        ) {
            let t = 4usize;
            let window = 8usize;
            let score = |d: f64, r: usize, s: f64| s * d - s * lambda * r.abs_diff(t) as f64 / window as f64;
            let argmax = |s: f64| {
                let mut best = (f64::NEG_INFINITY, 0usize);
                for (r, d) in dots.iter().enumerate() {
                    let v = score(*d, r, s);
                    if v > best.0 { best = (v, r); }
                }
                best.1
            };
            // the unscaled score is exactly view_time_score
            let a = unit(0.0, 0.0, 1.0);
            for (r, d) in dots.iter().enumerate() {
                let b = unit((1.0 - d * d).max(0.0).sqrt(), 0.0, *d);
                prop_assert!((view_time_score(&a, &b, r, t, window, lambda) - score(*d, r, 1.0)).abs() < 1e-9);
            }
            prop_assert_eq!(argmax(1.0), argmax(scale));
        }
    }

    #[test]
    fn config_validation() {
        assert!(GeometryConfig::default().validate().is_ok());
        let bad = GeometryConfig {
            alpha: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
