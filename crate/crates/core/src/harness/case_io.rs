//! On-disk case layout:
//!
//! ```text
//! <case>/generated/00000.png ...
//! <case>/preserve_ref/00000.png ...
//! <case>/ghost_ref/00000.png ...            (needed when reveal or expand is used)
//! <case>/masks/{preserve,reveal,expand}/00000.png ...
//! <case>/masks/dynamic/00000.png ...        (optional)
//! <case>/cameras_{gt,gen}.json              (optional)
//! <case>/objects_{gt,gen}.json              (optional)
//! <case>/meta.json                          (optional)
//! ```

use std::path::{Path, PathBuf};

use super::HarnessError;
use crate::control::TrajectorySet;
use crate::metrics::{CaseBundle, CaseMeta, Category};
use crate::raster::png::{load_frame_png, load_mask_png, save_frame_png, save_mask_png};
use crate::raster::{Frame, FrameSequence, Mask, RegionMasks};

const MASK_ROLES: [&str; 4] = ["preserve", "reveal", "expand", "dynamic"];

fn frame_name(t: usize) -> String {
    format!("{t:05}.png")
}

/// Sorted `*.png` files directly inside `dir`.
pub fn list_frames(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let entries = std::fs::read_dir(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let p = entry.map_err(|e| HarnessError::io(dir, e))?.path();
        if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}

/// Loads every PNG in `dir`, in file-name order.
pub fn load_frame_dir(dir: &Path) -> Result<FrameSequence, HarnessError> {
    list_frames(dir)?
        .iter()
        .map(|p| load_frame_png(p).map_err(|e| HarnessError::Case(format!("{}: {e}", p.display()))))
        .collect()
}

fn load_frames(dir: &Path, t: usize) -> Result<FrameSequence, HarnessError> {
    (0..t)
        .map(|i| {
            let p = dir.join(frame_name(i));
            if !p.exists() {
                return Err(HarnessError::Case(format!("missing frame {}", p.display())));
            }
            load_frame_png(&p).map_err(|e| HarnessError::Case(format!("{}: {e}", p.display())))
        })
        .collect()
}

fn load_masks(dir: &Path, t: usize) -> Result<Vec<Mask>, HarnessError> {
    (0..t)
        .map(|i| {
            let p = dir.join(frame_name(i));
            if !p.exists() {
                return Err(HarnessError::Case(format!("missing mask {}", p.display())));
            }
            load_mask_png(&p).map_err(|e| HarnessError::Case(format!("{}: {e}", p.display())))
        })
        .collect()
}

fn read_meta(dir: &Path) -> Result<CaseMeta, HarnessError> {
    let p = dir.join("meta.json");
    let fallback_id = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string());
    if !p.exists() {
        return Ok(CaseMeta::new(fallback_id, Category::CameraOnly));
    }
    let text = std::fs::read_to_string(&p).map_err(|e| HarnessError::io(&p, e))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Case(format!("{}: {e}", p.display())))
}

/// Reads and validates one case directory.
///
/// The frame count comes from `generated/`; every other sequence must supply
/// the same `%05d.png` names. Masks are binarized at 127.
pub fn load_case(dir: &Path) -> Result<CaseBundle, HarnessError> {
    let gen_dir = dir.join("generated");
    if !gen_dir.is_dir() {
        return Err(HarnessError::Case(format!("{} is missing generated/", dir.display())));
    }
    let t = list_frames(&gen_dir)?.len();
    if t < 2 {
        return Err(HarnessError::Case(format!("{}: {t} generated frames, at least 2 required", dir.display())));
    }
    let generated = load_frames(&gen_dir, t)?;
    let pref_dir = dir.join("preserve_ref");
    if !pref_dir.is_dir() {
        return Err(HarnessError::Case(format!("{} is missing preserve_ref/", dir.display())));
    }
    let preserve_ref = load_frames(&pref_dir, t)?;
    let ghost_dir = dir.join("ghost_ref");
    let ghost_ref = if ghost_dir.is_dir() {
        Some(load_frames(&ghost_dir, t)?)
    } else {
        None
    };

    let mut roles: Vec<Option<Vec<Mask>>> = Vec::with_capacity(4);
    for role in MASK_ROLES {
        let d = dir.join("masks").join(role);
        if d.is_dir() {
            roles.push(Some(load_masks(&d, t)?));
        } else if role == "dynamic" {
            roles.push(None);
        } else {
            return Err(HarnessError::Case(format!("{} is missing masks/{role}/", dir.display())));
        }
    }
    let dynamic = roles.pop().expect("four roles");
    let expand = roles.pop().flatten().expect("required");
    let reveal = roles.pop().flatten().expect("required");
    let preserve = roles.pop().flatten().expect("required");
    let masks = (0..t)
        .map(|i| RegionMasks {
            dynamic: dynamic
                .as_ref()
                .map_or_else(|| Mask::empty(preserve[i].width(), preserve[i].height()), |d| d[i].clone()),
            preserve: preserve[i].clone(),
            reveal: reveal[i].clone(),
            expand: expand[i].clone(),
        })
        .collect();

    let trajectories = TrajectorySet::load_dir(dir).map_err(|e| HarnessError::Case(format!("{}: {e}", dir.display())))?;
    let bundle = CaseBundle {
        generated,
        preserve_ref,
        ghost_ref,
        masks,
        meta: read_meta(dir)?,
        trajectories,
    };
    bundle
        .validate()
        .map_err(|e| HarnessError::Case(format!("{}: {e}", dir.display())))?;
    Ok(bundle)
}

fn write_frames(dir: &Path, frames: &[Frame]) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    for (t, f) in frames.iter().enumerate() {
        let p = dir.join(frame_name(t));
        save_frame_png(f, &p).map_err(|e| HarnessError::Case(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn write_masks<'a>(dir: &Path, masks: impl Iterator<Item = &'a Mask>) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    for (t, m) in masks.enumerate() {
        let p = dir.join(frame_name(t));
        save_mask_png(m, &p).map_err(|e| HarnessError::Case(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

/// Writes a bundle in the case layout. The dynamic mask directory is only
/// written when some dynamic mask is non-empty.
pub fn write_case(bundle: &CaseBundle, dir: &Path) -> Result<(), HarnessError> {
    write_frames(&dir.join("generated"), &bundle.generated)?;
    write_frames(&dir.join("preserve_ref"), &bundle.preserve_ref)?;
    if let Some(g) = &bundle.ghost_ref {
        write_frames(&dir.join("ghost_ref"), g)?;
    }
    let masks = dir.join("masks");
    write_masks(&masks.join("preserve"), bundle.masks.iter().map(|m| &m.preserve))?;
    write_masks(&masks.join("reveal"), bundle.masks.iter().map(|m| &m.reveal))?;
    write_masks(&masks.join("expand"), bundle.masks.iter().map(|m| &m.expand))?;
    if bundle.masks.iter().any(|m| m.dynamic.any()) {
        write_masks(&masks.join("dynamic"), bundle.masks.iter().map(|m| &m.dynamic))?;
    }
    bundle
        .trajectories
        .save_dir(dir)
        .map_err(|e| HarnessError::io(dir, e))?;
    let meta = serde_json::to_string_pretty(&bundle.meta).expect("meta serializes");
    let p = dir.join("meta.json");
    std::fs::write(&p, meta).map_err(|e| HarnessError::io(&p, e))?;
    Ok(())
}

/// Case directories under `root`: every immediate subdirectory holding a
/// `generated/` folder, sorted by path. `root` itself counts when it is a case.
pub fn discover_cases(root: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    if root.join("generated").is_dir() {
        return Ok(vec![root.to_path_buf()]);
    }
    let entries = std::fs::read_dir(root).map_err(|e| HarnessError::io(root, e))?;
    let mut cases = Vec::new();
    for entry in entries {
        let p = entry.map_err(|e| HarnessError::io(root, e))?.path();
        if p.join("generated").is_dir() {
            cases.push(p);
        }
    }
    cases.sort();
    Ok(cases)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_case(reveal_px: Option<(usize, usize)>) -> CaseBundle {
        let (w, h) = (6, 4);
        let f = Frame::from_fn(w, h, |x, y| [x as f64 / 5.0, y as f64 / 3.0, 0.4]);
        let mut m = RegionMasks::all_preserve(w, h);
        if let Some((x, y)) = reveal_px {
            m.reveal.set(x, y, true);
            m.preserve.set(x, y, false);
        }
        CaseBundle {
            generated: vec![f.clone(); 2],
            preserve_ref: vec![f.clone(); 2],
            ghost_ref: reveal_px.map(|_| vec![f; 2]),
            masks: vec![m; 2],
            meta: CaseMeta::new("tiny", Category::CameraObject),
            trajectories: TrajectorySet::default(),
        }
    }

    #[test]
    fn minimal_case_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let c = tiny_case(Some((2, 1)));
        write_case(&c, dir.path()).unwrap();
        let back = load_case(dir.path()).unwrap();
        assert_eq!(back.meta, c.meta);
        assert_eq!(back.frame_count(), 2);
        assert_eq!(back.masks[1].reveal, c.masks[1].reveal);
        assert!(!dir.path().join("masks/dynamic").exists());
        assert_eq!(discover_cases(dir.path()).unwrap(), vec![dir.path().to_path_buf()]);
    }

    #[test]
    fn overlapping_masks_name_the_pixel() {
        let dir = tempfile::tempdir().unwrap();
        write_case(&tiny_case(None), dir.path()).unwrap();
        // mark pixel (3, 2) as both preserve and expand
        let mut m = Mask::empty(6, 4);
        m.set(3, 2, true);
        save_mask_png(&m, &dir.path().join("masks/expand/00001.png")).unwrap();
        let err = load_case(dir.path()).unwrap_err().to_string();
        assert!(err.contains("(3, 2)"), "{err}");
        assert!(err.contains("frame 1"), "{err}");
    }

    #[test]
    fn missing_ghost_with_reveal_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_case(&tiny_case(Some((0, 0))), dir.path()).unwrap();
        std::fs::remove_dir_all(dir.path().join("ghost_ref")).unwrap();
        let err = load_case(dir.path()).unwrap_err().to_string();
        assert!(err.contains("ghost_ref"), "{err}");
    }

    #[test]
    fn missing_sequences_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        write_case(&tiny_case(None), dir.path()).unwrap();
        std::fs::remove_file(dir.path().join("preserve_ref/00001.png")).unwrap();
        assert!(load_case(dir.path()).unwrap_err().to_string().contains("00001.png"));
        std::fs::remove_dir_all(dir.path().join("masks/reveal")).unwrap();
        assert!(load_case(dir.path()).is_err());
        let empty = tempfile::tempdir().unwrap();
        assert!(load_case(empty.path()).unwrap_err().to_string().contains("generated"));
    }

    #[test]
    fn meta_defaults_to_directory_name() {
        let root = tempfile::tempdir().unwrap();
        let dir = root.path().join("case_b");
        write_case(&tiny_case(None), &dir).unwrap();
        std::fs::remove_file(dir.join("meta.json")).unwrap();
        assert_eq!(load_case(&dir).unwrap().meta.case_id, "case_b");
        write_case(&tiny_case(None), &root.path().join("case_a")).unwrap();
        std::fs::create_dir(root.path().join("not_a_case")).unwrap();
        let found = discover_cases(root.path()).unwrap();
        assert_eq!(found, vec![root.path().join("case_a"), dir]);
    }
}
