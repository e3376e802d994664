use super::camera::CameraPose;
use super::scene::Scene;
use super::GeometryError;
use crate::raster::{Frame, Mask};

/// Windowed rendering statistics feeding the confidence map.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConfidenceStats {
    /// Fraction of in-bounds window pixels that received a point.
    pub coverage: f64,
    /// Fraction of hit window pixels carrying the window's modal instance.
    pub purity: f64,
    /// Population standard deviation of hit window depths, scene units.
    pub depth_std: f64,
}

/// Z-buffered point splat of a scene through one camera.
#[derive(Debug, Clone)]
pub struct Projection {
    pub coarse: Frame,
    /// Nearest depth per pixel; `f64::INFINITY` where nothing projected.
    pub depth: Vec<f64>,
    pub instance: Vec<Option<u32>>,
    /// Index of the winning scene point per pixel.
    pub point: Vec<Option<usize>>,
    pub hit: Mask,
    pub stats: Vec<ConfidenceStats>,
}

impl Projection {
    pub fn width(&self) -> usize {
        self.hit.width()
    }

    pub fn height(&self) -> usize {
        self.hit.height()
    }
}

/// Splats every visible scene point at `frame` into a 1-pixel footprint with
/// a z-buffer, then gathers [`ConfidenceStats`] over a `window x window`
/// neighborhood (`window` odd). Unhit pixels render black.
pub fn project_scene(
    scene: &Scene,
    cam: &CameraPose,
    frame: usize,
    window: usize,
) -> Result<Projection, GeometryError> {
    if window == 0 || window % 2 == 0 {
        return Err(GeometryError::Config(format!(
            "statistics window must be odd, got {window}"
        )));
    }
    let (w, h) = (cam.intrinsics.width, cam.intrinsics.height);
    let n = w * h;
    let mut depth = vec![f64::INFINITY; n];
    let mut point = vec![None; n];
    for i in 0..scene.points.len() {
        let Some(p) = scene.world_position(i, frame) else {
            continue;
        };
        let Some(ip) = cam.project(&p) else {
            continue;
        };
        let Some((x, y)) = ip.pixel(w, h) else {
            continue;
        };
        let k = y * w + x;
        // strict comparison keeps the lowest point index on exact depth ties
        if ip.depth < depth[k] {
            depth[k] = ip.depth;
            point[k] = Some(i);
        }
    }
    let hit_bits: Vec<bool> = point.iter().map(Option::is_some).collect();
    let instance: Vec<Option<u32>> = point
        .iter()
        .map(|p| p.map(|i| scene.points[i].instance_id))
        .collect();
    let coarse = Frame::from_fn(w, h, |x, y| match point[y * w + x] {
        Some(i) => scene.points[i].color,
        None => [0.0; 3],
    });
    let hit = Mask::new(w, h, hit_bits).expect("shape");
    let stats = window_stats(&hit, &depth, &instance, window);
    Ok(Projection {
        coarse,
        depth,
        instance,
        point,
        hit,
        stats,
    })
}

fn window_stats(
    hit: &Mask,
    depth: &[f64],
    instance: &[Option<u32>],
    window: usize,
) -> Vec<ConfidenceStats> {
    let (w, h) = (hit.width(), hit.height());
    let half = window / 2;
    let mut out = Vec::with_capacity(w * h);
    let mut labels: Vec<(u32, usize)> = Vec::new();
    let mut depths: Vec<f64> = Vec::with_capacity(window * window);
    for y in 0..h {
        for x in 0..w {
            labels.clear();
            depths.clear();
            let mut total = 0usize;
            for yy in y.saturating_sub(half)..(y + half + 1).min(h) {
                for xx in x.saturating_sub(half)..(x + half + 1).min(w) {
                    total += 1;
                    let k = yy * w + xx;
                    if let Some(id) = instance[k] {
                        depths.push(depth[k]);
                        match labels.iter_mut().find(|(l, _)| *l == id) {
                            Some((_, c)) => *c += 1,
                            None => labels.push((id, 1)),
                        }
                    }
                }
            }
            let hits = depths.len();
            if hits == 0 {
                out.push(ConfidenceStats::default());
                continue;
            }
            let modal = labels.iter().map(|(_, c)| *c).max().unwrap_or(0);
            let mean = depths.iter().sum::<f64>() / hits as f64;
            let var = depths.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / hits as f64;
            out.push(ConfidenceStats {
                coverage: hits as f64 / total as f64,
                purity: modal as f64 / hits as f64,
                depth_std: var.sqrt(),
            });
        }
    }
    out
}

/// `coverage * purity * exp(-depth_std / tau)`, clamped to `[0, 1]`;
/// exactly 0 for pixels without projected support.
pub fn compute_confidence(stats: &ConfidenceStats, tau: f64, hit: bool) -> f64 {
    debug_assert!(tau > 0.0);
    if !hit {
        return 0.0;
    }
    let c = stats.coverage * stats.purity * (-stats.depth_std / tau).exp();
    c.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Intrinsics, Pose, ScenePoint};
    use nalgebra::{Matrix3, Rotation3, Vector3};
    use proptest::prelude::*;

    fn camera(w: usize, h: usize) -> CameraPose {
        CameraPose::new(Pose::identity(), Intrinsics::simple(40.0, w, h))
    }

    fn point(p: Vector3<f64>, id: u32) -> ScenePoint {
        ScenePoint {
            position: p,
            color: [0.2, 0.4, 0.6],
            instance_id: id,
        }
    }

    #[test]
    fn single_point_window_one() {
        let cam = camera(16, 12);
        let p = cam.pixel_ray(5, 7) * 3.0;
        let scene = Scene::new(vec![point(p, 0)], vec![cam]);
        let proj = project_scene(&scene, &cam, 0, 1).unwrap();
        assert_eq!(proj.hit.count(), 1);
        assert!(proj.hit.get(5, 7));
        let s = proj.stats[7 * 16 + 5];
        assert_eq!((s.coverage, s.purity, s.depth_std), (1.0, 1.0, 0.0));
        assert_eq!(compute_confidence(&s, 0.05, true), 1.0);
        for (k, hit) in proj.hit.bits().iter().enumerate() {
            if !hit {
                assert_eq!(compute_confidence(&proj.stats[k], 0.05, false), 0.0);
            }
        }
    }

    #[test]
    fn z_buffer_keeps_nearest() {
        let cam = camera(8, 8);
        let dir = cam.pixel_ray(3, 3);
        let mut far = point(dir * 9.0, 0);
        far.color = [1.0, 0.0, 0.0];
        let mut near = point(dir * 2.0, 0);
        near.color = [0.0, 0.0, 1.0];
        let scene = Scene::new(vec![far, near], vec![cam]);
        let proj = project_scene(&scene, &cam, 0, 1).unwrap();
        assert_eq!(proj.point[3 * 8 + 3], Some(1));
        assert_eq!(proj.coarse.pixel(3, 3), [0.0, 0.0, 1.0]);
        assert!((proj.depth[3 * 8 + 3] - dir.z * 2.0).abs() < 1e-12);
    }

    /// Dense plane `n·p = d` sampled four times per pixel per axis.
    fn dense_plane(cam: &CameraPose, normal: Vector3<f64>, offset: f64, id: u32) -> Vec<ScenePoint> {
        let (w, h) = (cam.intrinsics.width, cam.intrinsics.height);
        let mut pts = Vec::new();
        for sy in 0..h * 4 {
            for sx in 0..w * 4 {
                let k = &cam.intrinsics;
                let d = Vector3::new(
                    ((sx as f64 + 0.5) / 4.0 - k.cx) / k.fx,
                    ((sy as f64 + 0.5) / 4.0 - k.cy) / k.fy,
                    1.0,
                );
                let t = offset / normal.dot(&d);
                pts.push(point(d * t, id));
            }
        }
        pts
    }

    #[test]
    fn dense_plane_full_coverage_and_purity() {
        let cam = camera(24, 18);
        let pts = dense_plane(&cam, Vector3::new(0.0, 0.0, 1.0), 4.0, 0);
        let scene = Scene::new(pts, vec![cam]);
        let proj = project_scene(&scene, &cam, 0, 5).unwrap();
        assert_eq!(proj.hit.count(), 24 * 18);
        for s in &proj.stats {
            assert_eq!(s.coverage, 1.0);
            assert_eq!(s.purity, 1.0);
            assert!(s.depth_std < 1e-12);
        }
    }

    #[test]
    fn slanted_plane_depth_std_matches_analytic_window() {
        let cam = camera(32, 24);
        let normal = Vector3::new(0.4, 0.0, 1.0).normalize();
        let offset = 4.0;
        let pts = dense_plane(&cam, normal, offset, 0);
        let scene = Scene::new(pts, vec![cam]);
        let proj = project_scene(&scene, &cam, 0, 5).unwrap();
        let k = cam.intrinsics;
        // analytic depth at a pixel center: z = d / (n · K^{-1}[u, v, 1])
        let z_at = |x: usize, y: usize| {
            let ray = Vector3::new((x as f64 + 0.5 - k.cx) / k.fx, (y as f64 + 0.5 - k.cy) / k.fy, 1.0);
            offset / normal.dot(&ray)
        };
        for (x, y) in [(10, 10), (16, 12), (20, 5)] {
            let zs: Vec<f64> = (y - 2..=y + 2)
                .flat_map(|yy| (x - 2..=x + 2).map(move |xx| (xx, yy)))
                .map(|(xx, yy)| z_at(xx, yy))
                .collect();
            let mean = zs.iter().sum::<f64>() / zs.len() as f64;
            let std = (zs.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / zs.len() as f64).sqrt();
            let got = proj.stats[y * 32 + x].depth_std;
            assert!(std > 0.01);
            assert!((got - std).abs() < 0.1 * std, "{got} vs analytic {std}");
        }
    }

    #[test]
    fn mixed_instances_lower_purity() {
        let cam = camera(9, 9);
        let mut pts = Vec::new();
        for y in 0..9 {
            for x in 0..9 {
                let id = if x < 4 { 0 } else { 1 };
                pts.push(point(cam.pixel_ray(x, y) * 3.0, id));
            }
        }
        let scene = Scene::new(pts, vec![cam]);
        let proj = project_scene(&scene, &cam, 0, 3).unwrap();
        // window around (4, 4) covers columns 3..=5: one static, two dynamic
        let s = proj.stats[4 * 9 + 4];
        assert!((s.purity - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn even_window_rejected() {
        let cam = camera(4, 4);
        let scene = Scene::new(vec![point(Vector3::new(0.0, 0.0, 1.0), 0)], vec![cam]);
        assert!(project_scene(&scene, &cam, 0, 4).is_err());
    }

    #[test]
    fn empty_projection_all_unsupported() {
        let mut cam = camera(6, 6);
        cam.pose.rotation = *Rotation3::from_axis_angle(&Vector3::y_axis(), std::f64::consts::PI).matrix();
        let scene = Scene::new(vec![point(Vector3::new(0.0, 0.0, 5.0), 0)], vec![cam]);
        let proj = project_scene(&scene, &cam, 0, 1).unwrap();
        assert_eq!(proj.hit.count(), 0);
        let _ = Matrix3::<f64>::identity();
    }

    #[test]
    fn confidence_reference_values() {
        let s = ConfidenceStats {
            coverage: 1.0,
            purity: 1.0,
            depth_std: 0.05,
        };
        assert!((compute_confidence(&s, 0.05, true) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(compute_confidence(&s, 0.05, false), 0.0);
    }

    proptest! {
        #[test]
        fn confidence_bounded_and_monotone(
            cov in 0.0f64..=1.0, pur in 0.0f64..=1.0, std in 0.0f64..10.0,
            tau in 1e-3f64..10.0, bump in 0.0f64..1.0,
        ) {
            let base = ConfidenceStats { coverage: cov, purity: pur, depth_std: std };
            let c = compute_confidence(&base, tau, true);
            prop_assert!((0.0..=1.0).contains(&c));
            let more_std = ConfidenceStats { depth_std: std + bump, ..base };
            prop_assert!(compute_confidence(&more_std, tau, true) <= c);
            let more_cov = ConfidenceStats { coverage: (cov + bump).min(1.0), ..base };
            prop_assert!(compute_confidence(&more_cov, tau, true) >= c);
            let more_pur = ConfidenceStats { purity: (pur + bump).min(1.0), ..base };
            prop_assert!(compute_confidence(&more_pur, tau, true) >= c);
        }
    }
}
