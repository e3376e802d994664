use crate::perceptual::{composite_on_neutral, PerceptualBackend};
use crate::raster::stats::masked_abs_sum;
use crate::raster::{
    dilate_mask, histogram_intersection, hsv_histogram, masked_mae, mean_color, Frame, Mask,
    RegionMasks, Rgb,
};

use super::{CaseBundle, Metric, MetricError, MetricReport};

/// Parameters shared by the region metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionParams {
    /// Scale of the ghost-resemblance exponentials.
    pub sigma: f64,
    /// Boundary band radius in pixels.
    pub boundary_radius: usize,
    /// Fill color for pixels outside the mask in perceptual composites.
    pub neutral: Rgb,
}

impl Default for RegionParams {
    fn default() -> Self {
        Self {
            sigma: 0.18,
            boundary_radius: 5,
            neutral: [0.5; 3],
        }
    }
}

/// The perceptual backend and the structure/texture backend.
#[derive(Clone, Copy)]
pub struct Backends<'a> {
    pub perceptual: &'a dyn PerceptualBackend,
    pub structure: &'a dyn PerceptualBackend,
}

/// A metric value with its per-frame contributions (`None` for skipped
/// frames; temporal metrics index the pair `(t - 1, t)` by `t`).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricOutcome {
    pub value: Option<f64>,
    pub per_frame: Vec<Option<f64>>,
}

impl MetricOutcome {
    fn from_frames(per_frame: Vec<Option<f64>>) -> Self {
        let valid: Vec<f64> = per_frame.iter().flatten().copied().collect();
        let value = if valid.is_empty() {
            None
        } else {
            Some(valid.iter().sum::<f64>() / valid.len() as f64)
        };
        Self { value, per_frame }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskSelector {
    Preserve,
    Dynamic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerRegion {
    Reveal,
    Expand,
}

fn inner_mask(m: &RegionMasks, r: InnerRegion) -> &Mask {
    match r {
        InnerRegion::Reveal => &m.reveal,
        InnerRegion::Expand => &m.expand,
    }
}

fn ghost(case: &CaseBundle) -> Result<&[Frame], MetricError> {
    case.ghost_ref
        .as_deref()
        .ok_or_else(|| MetricError::InvalidCase("ghost_ref is required for this metric".into()))
}

/// Backend distance between the neutral composites of generated and
/// reference frames, averaged over frames whose selected mask is non-empty.
pub fn p_perceptual(
    case: &CaseBundle,
    selector: MaskSelector,
    backend: &dyn PerceptualBackend,
    neutral: Rgb,
) -> Result<MetricOutcome, MetricError> {
    let mut per_frame = Vec::with_capacity(case.frame_count());
    for t in 0..case.frame_count() {
        let m = match selector {
            MaskSelector::Preserve => &case.masks[t].preserve,
            MaskSelector::Dynamic => &case.masks[t].dynamic,
        };
        if !m.any() {
            per_frame.push(None);
            continue;
        }
        let a = composite_on_neutral(&case.generated[t], m, neutral)?;
        let b = composite_on_neutral(&case.preserve_ref[t], m, neutral)?;
        per_frame.push(Some(backend.distance(&a, &b)?));
    }
    Ok(MetricOutcome::from_frames(per_frame))
}

/// Mean absolute masked difference of adjacent-frame changes, or of the
/// generated frames themselves when `reference` is `None`.
fn temporal_residual(gen: &[Frame], reference: Option<&[Frame]>, masks: &[Mask]) -> MetricOutcome {
    let mut per_frame = vec![None];
    for t in 1..gen.len() {
        let m = masks[t - 1].and(&masks[t]);
        let (g0, g1) = (gen[t - 1].data(), gen[t].data());
        let mut sum = 0.0;
        let mut n = 0usize;
        for (i, _) in m.bits().iter().enumerate().filter(|(_, &b)| b) {
            for c in 3 * i..3 * i + 3 {
                let mut d = g1[c] - g0[c];
                if let Some(r) = reference {
                    d -= r[t].data()[c] - r[t - 1].data()[c];
                }
                sum += d.abs();
            }
            n += 1;
        }
        per_frame.push((n > 0).then(|| sum / (3 * n) as f64));
    }
    MetricOutcome::from_frames(per_frame)
}

/// Drift of generated adjacent-frame residuals from the reference residuals
/// over consecutive Preserve intersections.
pub fn p_tempdrift(case: &CaseBundle) -> MetricOutcome {
    let masks: Vec<Mask> = case.masks.iter().map(|m| m.preserve.clone()).collect();
    temporal_residual(&case.generated, Some(&case.preserve_ref), &masks)
}

/// Adjacent-frame change of generated content over consecutive Expand
/// intersections.
pub fn e_temp(case: &CaseBundle) -> MetricOutcome {
    let masks: Vec<Mask> = case.masks.iter().map(|m| m.expand.clone()).collect();
    temporal_residual(&case.generated, None, &masks)
}

/// `exp(-MAE / sigma)` against the ghost reference, with the error pooled
/// over all Reveal pixels of all frames. The trace holds per-frame MAEs.
pub fn r_ghost(case: &CaseBundle, sigma: f64) -> Result<MetricOutcome, MetricError> {
    let mut per_frame = Vec::with_capacity(case.frame_count());
    let (mut sum, mut n) = (0.0, 0usize);
    if case.masks.iter().any(|m| m.reveal.any()) {
        let g = ghost(case)?;
        for t in 0..case.frame_count() {
            let (s, k) = masked_abs_sum(&case.generated[t], &g[t], &case.masks[t].reveal);
            sum += s;
            n += k;
            per_frame.push((k > 0).then(|| s / (3 * k) as f64));
        }
    } else {
        per_frame.resize(case.frame_count(), None);
    }
    let value = (n > 0).then(|| (-(sum / (3 * n) as f64) / sigma).exp());
    Ok(MetricOutcome { value, per_frame })
}

/// Inner band `M ∩ Dilate(P, r)` and preserve band `P ∩ Dilate(M, r)`.
fn bands(inner: &Mask, preserve: &Mask, r: usize) -> (Mask, Mask) {
    (
        inner.and(&dilate_mask(preserve, r)),
        preserve.and(&dilate_mask(inner, r)),
    )
}

/// L1 distance between the mean generated colors of the two boundary bands,
/// averaged over frames where both bands are non-empty.
pub fn seam_score(case: &CaseBundle, inner: InnerRegion, r: usize) -> MetricOutcome {
    let per_frame = (0..case.frame_count())
        .map(|t| {
            let m = &case.masks[t];
            let region = inner_mask(m, inner);
            if !region.any() || !m.preserve.any() {
                return None;
            }
            let (bi, bp) = bands(region, &m.preserve, r);
            let f = &case.generated[t];
            let (mi, mp) = (mean_color(f, &bi).ok()?, mean_color(f, &bp).ok()?);
            Some((0..3).map(|c| (mi[c] - mp[c]).abs()).sum())
        })
        .collect();
    MetricOutcome::from_frames(per_frame)
}

/// Per-frame `max(S_bdry, S_ghost)`, averaged over frames with a non-empty
/// Expand mask. `S_bdry` is 0 when the preserve boundary band is empty.
pub fn e_copy(case: &CaseBundle, sigma: f64, r: usize) -> Result<MetricOutcome, MetricError> {
    let mut per_frame = Vec::with_capacity(case.frame_count());
    for t in 0..case.frame_count() {
        let m = &case.masks[t];
        if !m.expand.any() {
            per_frame.push(None);
            continue;
        }
        let f = &case.generated[t];
        let band = m.preserve.and(&dilate_mask(&m.expand, r));
        let s_bdry = if band.any() {
            histogram_intersection(&hsv_histogram(f, &m.expand), &hsv_histogram(f, &band))
        } else {
            0.0
        };
        let s_ghost = (-masked_mae(f, &ghost(case)?[t], &m.expand)? / sigma).exp();
        per_frame.push(Some(s_bdry.max(s_ghost)));
    }
    Ok(MetricOutcome::from_frames(per_frame))
}

/// Runs the nine region metrics. Control metrics are left unset.
pub fn evaluate_regions(
    case: &CaseBundle,
    params: &RegionParams,
    backends: Backends<'_>,
) -> Result<MetricReport, MetricError> {
    case.validate()?;
    let mut report = MetricReport::default();
    let neutral = params.neutral;
    report.record(
        Metric::PLpips,
        p_perceptual(case, MaskSelector::Preserve, backends.perceptual, neutral)?,
    );
    report.record(
        Metric::PDists,
        p_perceptual(case, MaskSelector::Preserve, backends.structure, neutral)?,
    );
    report.record(Metric::PTempDrift, p_tempdrift(case));
    report.record(
        Metric::PDynLpips,
        p_perceptual(case, MaskSelector::Dynamic, backends.perceptual, neutral)?,
    );
    report.record(Metric::RGhost, r_ghost(case, params.sigma)?);
    report.record(Metric::RSeam, seam_score(case, InnerRegion::Reveal, params.boundary_radius));
    report.record(Metric::ETemp, e_temp(case));
    report.record(Metric::ESeam, seam_score(case, InnerRegion::Expand, params.boundary_radius));
    report.record(Metric::ECopy, e_copy(case, params.sigma, params.boundary_radius)?);
    Ok(report)
}
