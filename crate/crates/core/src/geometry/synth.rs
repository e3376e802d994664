//! Seeded toy scenes: a textured backdrop with one moving foreground patch.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::camera::{CameraPose, Intrinsics, Pose};
use super::edit::{EditOp, EditScript};
use super::scene::{RigidTransform, Scene, ScenePoint};

pub const BACKDROP_DEPTH: f64 = 6.0;
pub const OBJECT_DEPTH: f64 = 3.0;
pub const OBJECT_INSTANCE: u32 = 1;

fn texture(x: f64, y: f64, phase: f64) -> [f64; 3] {
    [
        0.5 + 0.4 * (3.1 * x + phase).sin(),
        0.5 + 0.4 * (2.3 * y - phase).cos(),
        0.5 + 0.3 * (1.7 * (x + y)).sin(),
    ]
}

/// Dense fronto-parallel patch `[x0, x1] x [y0, y1]` at depth `z`, sampled at
/// `step` scene units.
fn patch(x0: f64, x1: f64, y0: f64, y1: f64, z: f64, step: f64, id: u32, phase: f64) -> Vec<ScenePoint> {
    let nx = ((x1 - x0) / step).ceil() as usize + 1;
    let ny = ((y1 - y0) / step).ceil() as usize + 1;
    let mut pts = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (x, y) = (x0 + i as f64 * step, y0 + j as f64 * step);
            pts.push(ScenePoint {
                position: Vector3::new(x, y, z),
                color: texture(x, y, phase),
                instance_id: id,
            });
        }
    }
    pts
}

/// Backdrop filling the first camera's view plus a moving foreground patch,
/// seen by a slowly panning camera.
pub fn synthetic_scene(seed: u64, width: usize, height: usize, frames: usize) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let focal = width as f64 * rng.gen_range(0.8..1.2);
    let k = Intrinsics::simple(focal, width, height);
    // oversample three points per pixel per axis at each depth
    let half_w = BACKDROP_DEPTH * k.cx / focal;
    let half_h = BACKDROP_DEPTH * k.cy / focal;
    let mut points = patch(
        -half_w,
        half_w,
        -half_h,
        half_h,
        BACKDROP_DEPTH,
        BACKDROP_DEPTH / focal / 3.0,
        0,
        rng.gen_range(0.0..6.0),
    );
    let obj_half = OBJECT_DEPTH * k.cx / focal * rng.gen_range(0.15..0.3);
    points.extend(patch(
        -obj_half,
        obj_half,
        -obj_half,
        obj_half,
        0.0,
        OBJECT_DEPTH / focal / 3.0,
        OBJECT_INSTANCE,
        rng.gen_range(0.0..6.0),
    ));
    let pan = rng.gen_range(-0.02..0.02);
    let cameras = (0..frames)
        .map(|t| CameraPose::new(Pose::new(nalgebra::Matrix3::identity(), Vector3::new(pan * t as f64, 0.0, 0.0)), k))
        .collect();
    let start = Vector3::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.2..0.2), OBJECT_DEPTH);
    let velocity = Vector3::new(rng.gen_range(-0.05..0.05), rng.gen_range(-0.03..0.03), 0.0);
    let mut scene = Scene::new(points, cameras);
    scene.tracks.insert(
        OBJECT_INSTANCE,
        (0..frames)
            .map(|t| RigidTransform::translation(start + velocity * t as f64))
            .collect(),
    );
    scene
}

/// A random edit of a [`synthetic_scene`]: object removal, object move,
/// retiming or a sideways camera shift.
pub fn random_edit(seed: u64, scene: &Scene) -> EditScript {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let op = match rng.gen_range(0..4) {
        0 => EditOp::RemoveInstance {
            instance_id: OBJECT_INSTANCE,
        },
        1 => EditOp::TransformInstance {
            instance_id: OBJECT_INSTANCE,
            rotation: [1.0, 0.0, 0.0, 0.0],
            translation: [rng.gen_range(-0.5..0.5), rng.gen_range(-0.3..0.3), 0.0],
        },
        2 => EditOp::RetimeInstance {
            instance_id: OBJECT_INSTANCE,
            offset: rng.gen_range(-2..=2),
        },
        _ => {
            // large enough that part of the view leaves the scene extent
            let shift = rng.gen_range(1.0..3.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let json = serde_json::json!({
                "op": "set_camera_track",
                "cameras": scene.cameras.iter().map(|c| serde_json::json!({
                    "rotation": c.pose.rotation_row_major(),
                    "center": [c.pose.center.x + shift, c.pose.center.y, c.pose.center.z],
                    "intrinsics": c.intrinsics,
                })).collect::<Vec<_>>(),
            });
            serde_json::from_value(json).expect("camera track op")
        }
    };
    EditScript(vec![op])
}
