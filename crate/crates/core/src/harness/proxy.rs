//! Proxy cases built from an unedited clip, with contestant outputs whose
//! ranking is known in advance.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::HarnessError;
use crate::control::TrajectorySet;
use crate::metrics::{CaseBundle, CaseMeta, Category};
use crate::raster::{mean_color, Frame, FrameSequence, Mask, RegionMasks};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProxyKind {
    /// Everything is Preserve; the output equals the source.
    Reconstruct,
    /// A static rectangle is withheld as Reveal.
    RevealWithhold,
    /// The view is cropped by a margin and the ring becomes Expand.
    ExpandCrop,
}

impl ProxyKind {
    pub fn name(self) -> &'static str {
        match self {
            ProxyKind::Reconstruct => "reconstruct",
            ProxyKind::RevealWithhold => "reveal",
            ProxyKind::ExpandCrop => "expand",
        }
    }
}

impl fmt::Display for ProxyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProxyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reconstruct" => Ok(ProxyKind::Reconstruct),
            "reveal" | "reveal_withhold" => Ok(ProxyKind::RevealWithhold),
            "expand" | "expand_crop" => Ok(ProxyKind::ExpandCrop),
            other => Err(format!("unknown proxy kind {other:?}")),
        }
    }
}

/// Axis-aligned pixel rectangle `[x, x + w) x [y, y + h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

/// Optional overrides; unset geometry is drawn from the seed.
#[derive(Debug, Clone, Default)]
pub struct ProxyParams {
    pub margin: Option<usize>,
    pub rect: Option<Rect>,
    pub reveal_mask: Option<Mask>,
}

/// Seeded procedural clip: a slowly panning multi-frequency texture, a few
/// moving disks and per-pixel noise.
pub fn synthetic_source_video(seed: u64, width: usize, height: usize, frames: usize) -> FrameSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let waves: Vec<[f64; 5]> = (0..9)
        .map(|_| {
            [
                rng.gen_range(0.01..0.15),
                rng.gen_range(0.01..0.15),
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(0.05..0.15),
                rng.gen_range(-2.0..2.0),
            ]
        })
        .collect();
    let disks: Vec<([f64; 3], [f64; 2], [f64; 2], f64)> = (0..4)
        .map(|_| {
            (
                [rng.gen(), rng.gen(), rng.gen()],
                [rng.gen_range(0.0..width as f64), rng.gen_range(0.0..height as f64)],
                [rng.gen_range(-4.0..4.0), rng.gen_range(-3.0..3.0)],
                rng.gen_range(0.04..0.12) * width.min(height) as f64,
            )
        })
        .collect();
    (0..frames)
        .map(|t| {
            let tf = t as f64;
            let mut noise = ChaCha8Rng::seed_from_u64(seed ^ (t as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            Frame::from_fn(width, height, |x, y| {
                let mut rgb = [0.5; 3];
                for (k, w) in waves.iter().enumerate() {
                    let arg = w[0] * (x as f64 + w[4] * tf) + w[1] * y as f64 + w[2];
                    rgb[k % 3] += w[3] * arg.sin();
                }
                for (color, start, vel, r) in &disks {
                    let (cx, cy) = (start[0] + vel[0] * tf, start[1] + vel[1] * tf);
                    let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
                    if dx * dx + dy * dy <= r * r {
                        rgb = *color;
                    }
                }
                rgb.map(|v| (v + noise.gen_range(-0.04..0.04)).clamp(0.0, 1.0))
            })
        })
        .collect()
}

fn check_source(source: &[Frame]) -> Result<(usize, usize), HarnessError> {
    if source.len() < 2 {
        return Err(HarnessError::Case(format!("{} source frames, at least 2 required", source.len())));
    }
    let (w, h) = (source[0].width(), source[0].height());
    if source.iter().any(|f| f.width() != w || f.height() != h) {
        return Err(HarnessError::Case("source frames differ in size".into()));
    }
    Ok((w, h))
}

fn bundle(
    generated: FrameSequence,
    source: &[Frame],
    ghost: FrameSequence,
    masks: Vec<RegionMasks>,
    id: String,
    category: Category,
) -> CaseBundle {
    CaseBundle {
        generated,
        preserve_ref: source.to_vec(),
        ghost_ref: Some(ghost),
        masks,
        meta: CaseMeta::new(id, category),
        trajectories: TrajectorySet::default(),
    }
}

fn reveal_region(w: usize, h: usize, params: &ProxyParams, rng: &mut ChaCha8Rng) -> Result<Mask, HarnessError> {
    if let Some(m) = &params.reveal_mask {
        if m.width() != w || m.height() != h {
            return Err(HarnessError::Config(format!(
                "reveal mask is {}x{}, frames are {w}x{h}",
                m.width(),
                m.height()
            )));
        }
        if !m.any() {
            return Err(HarnessError::Config("reveal mask is empty".into()));
        }
        return Ok(m.clone());
    }
    let r = match params.rect {
        Some(r) => r,
        None => {
            let rw = rng.gen_range((w / 8).max(1)..=(w / 3).max(1));
            let rh = rng.gen_range((h / 8).max(1)..=(h / 3).max(1));
            Rect {
                x: rng.gen_range(0..=w - rw),
                y: rng.gen_range(0..=h - rh),
                w: rw,
                h: rh,
            }
        }
    };
    if r.w == 0 || r.h == 0 || r.x + r.w > w || r.y + r.h > h {
        return Err(HarnessError::Config(format!("rectangle {r:?} exceeds the {w}x{h} frame")));
    }
    Ok(Mask::from_fn(w, h, |x, y| {
        (r.x..r.x + r.w).contains(&x) && (r.y..r.y + r.h).contains(&y)
    }))
}

/// Builds the contestant cases for one proxy.
///
/// * `reconstruct`: one case, output = source, all Preserve.
/// * `reveal`: a static region is Reveal. The ghost reference keeps the source
///   outside it and holds a stale solid color inside, chosen per frame and
///   channel as the far end of `[0, 1]` from the region's mean, so it differs
///   from the true content by at least 0.5 on average. Contestants `clean`
///   (the source) and `ghost_copy` (the ghost inside the region).
/// * `expand`: a ring of `margin` pixels is Expand. The ghost reference is the
///   interior with its edge pixels replicated outward. Contestants `oracle`
///   (the source) and `boundary_copy` (the replicated frame).
pub fn gen_proxy_case(
    source: &[Frame],
    kind: ProxyKind,
    params: &ProxyParams,
    seed: u64,
) -> Result<Vec<CaseBundle>, HarnessError> {
    let (w, h) = check_source(source)?;
    let t = source.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = |contestant: &str| format!("{kind}-{seed}-{contestant}");
    match kind {
        ProxyKind::Reconstruct => Ok(vec![bundle(
            source.to_vec(),
            source,
            source.to_vec(),
            vec![RegionMasks::all_preserve(w, h); t],
            id("reconstruct"),
            Category::CameraOnly,
        )]),
        ProxyKind::RevealWithhold => {
            let region = reveal_region(w, h, params, &mut rng)?;
            let mut masks = RegionMasks::all_preserve(w, h);
            masks.preserve = region.not();
            masks.reveal = region.clone();
            let ghost: FrameSequence = source
                .iter()
                .map(|f| {
                    let mean = mean_color(f, &region).expect("region is non-empty");
                    let stale = mean.map(|m| if m < 0.5 { 1.0 } else { 0.0 });
                    Frame::from_fn(w, h, |x, y| if region.get(x, y) { stale } else { f.pixel(x, y) })
                })
                .collect();
            // outside the region the ghost equals the source
            let ghost_copy = ghost.clone();
            Ok(vec![
                bundle(source.to_vec(), source, ghost.clone(), vec![masks.clone(); t], id("clean"), Category::CameraObject),
                bundle(ghost_copy, source, ghost, vec![masks; t], id("ghost_copy"), Category::CameraObject),
            ])
        }
        ProxyKind::ExpandCrop => {
            let margin = match params.margin {
                Some(m) => m,
                None => {
                    let s = w.min(h);
                    rng.gen_range((s / 16).max(1)..=(s / 8).max(1))
                }
            };
            if margin == 0 || 2 * margin >= w || 2 * margin >= h {
                return Err(HarnessError::Config(format!("margin {margin} does not fit a {w}x{h} frame")));
            }
            let interior = Mask::from_fn(w, h, |x, y| {
                (margin..w - margin).contains(&x) && (margin..h - margin).contains(&y)
            });
            let masks = RegionMasks {
                preserve: interior.clone(),
                reveal: Mask::empty(w, h),
                expand: interior.not(),
                dynamic: Mask::empty(w, h),
            };
            let padded: FrameSequence = source
                .iter()
                .map(|f| {
                    Frame::from_fn(w, h, |x, y| {
                        f.pixel(x.clamp(margin, w - margin - 1), y.clamp(margin, h - margin - 1))
                    })
                })
                .collect();
            Ok(vec![
                bundle(source.to_vec(), source, padded.clone(), vec![masks.clone(); t], id("oracle"), Category::CameraOnly),
                bundle(padded.clone(), source, padded, vec![masks; t], id("boundary_copy"), Category::CameraOnly),
            ])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{e_copy, r_ghost};

    #[test]
    fn expand_margin_32_pixel_count() {
        let src = vec![Frame::filled(720, 480, [0.3; 3]); 2];
        let params = ProxyParams {
            margin: Some(32),
            ..Default::default()
        };
        let cases = gen_proxy_case(&src, ProxyKind::ExpandCrop, &params, 1).unwrap();
        assert_eq!(cases.len(), 2);
        assert_eq!(cases[0].masks[0].expand.count(), 720 * 480 - 656 * 416);
        assert_eq!(cases[0].masks[0].expand.count(), 72704);
        for c in &cases {
            c.validate().unwrap();
        }
    }

    #[test]
    fn reconstruct_has_only_preserve() {
        let src = synthetic_source_video(2, 24, 16, 3);
        let cases = gen_proxy_case(&src, ProxyKind::Reconstruct, &ProxyParams::default(), 0).unwrap();
        assert_eq!(cases.len(), 1);
        let c = &cases[0];
        assert!(c.masks.iter().all(|m| !m.reveal.any() && !m.expand.any()));
        assert_eq!(c.generated, src);
        assert_eq!(c.meta.case_id, "reconstruct-0-reconstruct");
    }

    #[test]
    fn reveal_contestants_are_ordered() {
        let src = synthetic_source_video(3, 64, 48, 4);
        let cases = gen_proxy_case(&src, ProxyKind::RevealWithhold, &ProxyParams::default(), 9).unwrap();
        let (clean, copy) = (&cases[0], &cases[1]);
        clean.validate().unwrap();
        assert_eq!(r_ghost(copy, 0.18).unwrap().value, Some(1.0));
        let v = r_ghost(clean, 0.18).unwrap().value.unwrap();
        assert!(v <= (-0.5f64 / 0.18).exp() + 1e-12, "{v}");
        // outside the reveal region all three sequences agree
        let outside = clean.masks[0].preserve.clone();
        for t in 0..4 {
            for (i, _) in outside.bits().iter().enumerate().filter(|(_, b)| **b) {
                assert_eq!(copy.generated[t].pixel_at(i), src[t].pixel_at(i));
            }
        }
    }

    #[test]
    fn expand_contestants_are_ordered() {
        let src = synthetic_source_video(4, 80, 48, 3);
        let cases = gen_proxy_case(&src, ProxyKind::ExpandCrop, &ProxyParams::default(), 5).unwrap();
        let oracle = e_copy(&cases[0], 0.18, 5).unwrap().value.unwrap();
        let copy = e_copy(&cases[1], 0.18, 5).unwrap().value.unwrap();
        assert_eq!(copy, 1.0);
        assert!(oracle < copy);
    }

    #[test]
    fn supplied_geometry_is_checked() {
        let src = synthetic_source_video(1, 20, 10, 2);
        let rect = ProxyParams {
            rect: Some(Rect { x: 15, y: 0, w: 6, h: 2 }),
            ..Default::default()
        };
        assert!(matches!(gen_proxy_case(&src, ProxyKind::RevealWithhold, &rect, 0), Err(HarnessError::Config(_))));
        let margin = ProxyParams {
            margin: Some(5),
            ..Default::default()
        };
        assert!(gen_proxy_case(&src, ProxyKind::ExpandCrop, &margin, 0).is_err());
        assert!(gen_proxy_case(&src[..1], ProxyKind::Reconstruct, &ProxyParams::default(), 0).is_err());
        let mask = ProxyParams {
            reveal_mask: Some(Mask::from_fn(20, 10, |x, _| x == 3)),
            ..Default::default()
        };
        let cases = gen_proxy_case(&src, ProxyKind::RevealWithhold, &mask, 0).unwrap();
        assert_eq!(cases[0].masks[1].reveal.count(), 10);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = synthetic_source_video(7, 30, 20, 3);
        assert_eq!(a, synthetic_source_video(7, 30, 20, 3));
        assert_ne!(a, synthetic_source_video(8, 30, 20, 3));
        let c1 = gen_proxy_case(&a, ProxyKind::RevealWithhold, &ProxyParams::default(), 11).unwrap();
        let c2 = gen_proxy_case(&a, ProxyKind::RevealWithhold, &ProxyParams::default(), 11).unwrap();
        assert_eq!(c1[0].masks, c2[0].masks);
    }
}
