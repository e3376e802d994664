use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use super::case_io::load_case;
use super::report::{CaseEntry, CorpusReport};
use super::{EvalConfig, HarnessError};
use crate::control::{camera_errors, objmc};
use crate::metrics::{evaluate_regions, Backends, CaseBundle, Metric, MetricError, MetricReport};

/// Result for one case directory.
#[derive(Debug)]
pub struct CaseOutcome {
    pub index: usize,
    pub entry: CaseEntry,
}

/// Region metrics plus camera and object control metrics when trajectories
/// are present.
pub fn evaluate_case(case: &CaseBundle, cfg: &EvalConfig, backends: Backends<'_>) -> Result<MetricReport, MetricError> {
    let mut report = evaluate_regions(case, &cfg.region_params(), backends)?;
    let traj = &case.trajectories;
    let control = |e: crate::control::ControlError| MetricError::InvalidCase(format!("trajectories: {e}"));
    if traj.has_cameras() {
        let (rot, trans) = camera_errors(&traj.cameras_gt, &traj.cameras_gen).map_err(control)?;
        report.set(Metric::CamRotErr, Some(rot));
        report.set(Metric::CamTransErr, Some(trans));
    }
    report.set(
        Metric::ObjMc,
        objmc(&traj.objects_gt, &traj.objects_gen, cfg.lambda_objmc).map_err(control)?,
    );
    Ok(report)
}

fn fallback_id(path: &std::path::Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Evaluates every case directory with `cfg.workers` threads.
///
/// Workers pull indices from a shared counter and send entries back over a
/// channel; a failing case becomes an error entry. The report is ordered by
/// case id, so it does not depend on the worker count.
pub fn evaluate_corpus(paths: &[PathBuf], cfg: &EvalConfig) -> Result<CorpusReport, HarnessError> {
    cfg.validate()?;
    if paths.is_empty() {
        return Err(HarnessError::Case("no case directories found".into()));
    }
    let (perceptual, structure) = cfg.backends()?;
    let backends = Backends {
        perceptual: perceptual.as_ref(),
        structure: structure.as_ref(),
    };
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<CaseOutcome>();
    let workers = cfg.workers.clamp(1, paths.len());
    std::thread::scope(|s| {
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            s.spawn(move || loop {
                let index = next.fetch_add(1, Ordering::Relaxed);
                let Some(path) = paths.get(index) else { break };
                let entry = match load_case(path) {
                    Ok(case) => match evaluate_case(&case, cfg, backends) {
                        Ok(r) => CaseEntry::ok(case.meta.case_id.clone(), case.meta.category, &r),
                        Err(e) => CaseEntry::failed(case.meta.case_id.clone(), e.to_string()),
                    },
                    Err(e) => CaseEntry::failed(fallback_id(path), e.to_string()),
                };
                log::info!("{}: {}", entry.case_id, if entry.error.is_some() { "error" } else { "ok" });
                if tx.send(CaseOutcome { index, entry }).is_err() {
                    break;
                }
            });
        }
    });
    drop(tx);
    let mut outcomes: Vec<CaseOutcome> = rx.into_iter().collect();
    outcomes.sort_by_key(|o| o.index);
    Ok(CorpusReport::new(
        cfg.clone(),
        perceptual.id().to_string(),
        structure.id().to_string(),
        outcomes.into_iter().map(|o| o.entry).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{gen_proxy_case, synthetic_source_video, write_case, ProxyKind, ProxyParams};
    use crate::raster::Mask;

    fn corpus(root: &std::path::Path) -> Vec<PathBuf> {
        let src = synthetic_source_video(1, 48, 32, 3);
        let mut dirs = Vec::new();
        for (kind, seed) in [(ProxyKind::RevealWithhold, 1), (ProxyKind::Reconstruct, 2)] {
            for case in gen_proxy_case(&src, kind, &ProxyParams::default(), seed).unwrap() {
                let d = root.join(&case.meta.case_id);
                write_case(&case, &d).unwrap();
                dirs.push(d);
            }
        }
        dirs
    }

    #[test]
    fn absent_reveal_is_excluded_from_aggregate() {
        let root = tempfile::tempdir().unwrap();
        let dirs = corpus(root.path());
        let report = evaluate_corpus(&dirs, &EvalConfig::default()).unwrap();
        assert_eq!(report.cases.len(), 3);
        let agg = report.aggregate(Metric::RGhost);
        assert_eq!(agg.count, 2);
        let recon = report.cases.iter().find(|c| c.case_id.starts_with("reconstruct")).unwrap();
        assert_eq!(recon.get(Metric::PLpips), Some(0.0));
        assert_eq!(recon.get(Metric::PTempDrift), Some(0.0));
        assert_eq!(recon.get(Metric::RGhost), None);
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let root = tempfile::tempdir().unwrap();
        let dirs = corpus(root.path());
        let one = evaluate_corpus(&dirs, &EvalConfig::default()).unwrap();
        let four = evaluate_corpus(&dirs, &EvalConfig { workers: 4, ..EvalConfig::default() }).unwrap();
        assert_eq!(one.to_json(), four.to_json());
        assert_eq!(one.to_csv(), four.to_csv());
    }

    #[test]
    fn failing_case_is_recorded() {
        let root = tempfile::tempdir().unwrap();
        let mut dirs = corpus(root.path());
        // break one case: mark a preserve pixel as expand too
        let mut m = Mask::empty(48, 32);
        m.set(0, 0, true);
        crate::raster::png::save_mask_png(&m, &dirs[0].join("masks/expand/00000.png")).unwrap();
        dirs.push(root.path().join("does-not-exist"));
        let report = evaluate_corpus(&dirs, &EvalConfig { workers: 2, ..EvalConfig::default() }).unwrap();
        assert_eq!(report.failed_cases(), 2);
        assert_eq!(report.cases.len(), 4);
    }

    #[test]
    fn trajectories_feed_control_metrics() {
        use crate::geometry::Pose;
        use nalgebra::Vector3;
        let src = synthetic_source_video(2, 16, 16, 2);
        let mut case = gen_proxy_case(&src, ProxyKind::Reconstruct, &ProxyParams::default(), 0).unwrap().remove(0);
        case.trajectories.cameras_gt = vec![Pose::identity(); 2];
        case.trajectories.cameras_gen = vec![Pose::identity(), Pose::new(nalgebra::Matrix3::identity(), Vector3::new(0.0, 0.0, 2.0))];
        case.trajectories.objects_gt.insert("7".into(), vec![Vector3::zeros(); 2]);
        let cfg = EvalConfig::default();
        let backends = Backends {
            perceptual: &crate::perceptual::ReferencePerceptual,
            structure: &crate::perceptual::ReferenceStructureTexture,
        };
        let r = evaluate_case(&case, &cfg, backends).unwrap();
        assert_eq!(r.get(Metric::CamRotErr), Some(0.0));
        assert_eq!(r.get(Metric::CamTransErr), Some(1.0));
        assert_eq!(r.get(Metric::ObjMc), Some(10.0));
    }
}
