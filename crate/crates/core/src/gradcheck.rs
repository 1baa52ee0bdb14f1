//! Central finite-difference check of every loss term's analytic gradient.
//!
//! Instances are random ellipsoids sampled at 8x8 with the tetrahedral rig;
//! predictions are the ground truth plus Gaussian coordinate noise and
//! uniform visibilities. Coordinates sitting within `margin * step` of a
//! non-smooth point of a term (zero distance, sign change, pixel boundary of
//! a reprojection lookup) are skipped for that term.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::camera::make_rig;
use crate::error::Result;
use crate::geoloss::{GeoLoss, GradientField, VIS_CLAMP};
use crate::grid::Mvpc;
use crate::sampler::sample_mvpc;
use crate::{shapes, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Term {
    PointDistance,
    QuasiVolume,
    MultiView,
    VisibilityCe,
}

impl Term {
    pub const ALL: [Term; 4] = [Term::PointDistance, Term::QuasiVolume, Term::MultiView, Term::VisibilityCe];

    pub fn name(&self) -> &'static str {
        match self {
            Term::PointDistance => "ptd",
            Term::QuasiVolume => "vol",
            Term::MultiView => "mv",
            Term::VisibilityCe => "vis_ce",
        }
    }

    pub fn evaluate(&self, loss: &GeoLoss, pred: &Mvpc) -> Result<(f64, GradientField)> {
        match self {
            Term::PointDistance => loss.point_distance(pred),
            Term::QuasiVolume => loss.quasi_volume(pred),
            Term::MultiView => loss.multiview(pred),
            Term::VisibilityCe => loss.visibility_ce(pred),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckConfig {
    /// Central-difference step.
    pub step: f64,
    /// Skip coordinates within `margin * step` of a kink.
    pub margin: f64,
    /// Lower bound on the relative-error denominator.
    pub rel_floor: f64,
    pub resolution: usize,
    pub views: usize,
    pub noise: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            step: 1e-5,
            margin: 10.0,
            rel_floor: 1e-6,
            resolution: 8,
            views: 4,
            noise: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermReport {
    pub term: Term,
    pub checked: usize,
    pub skipped: usize,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
}

impl TermReport {
    fn new(term: Term) -> Self {
        Self {
            term,
            checked: 0,
            skipped: 0,
            max_rel_error: 0.0,
            max_abs_error: 0.0,
        }
    }

    fn merge(&mut self, other: &TermReport) {
        self.checked += other.checked;
        self.skipped += other.skipped;
        self.max_rel_error = self.max_rel_error.max(other.max_rel_error);
        self.max_abs_error = self.max_abs_error.max(other.max_abs_error);
    }
}

/// Random ground truth and perturbed prediction for one seed.
pub fn random_instance(seed: u64, cfg: &GradCheckConfig) -> Result<(Mvpc, Mvpc)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = Vec3::new(rng.random_range(0.55..0.9), rng.random_range(0.55..0.9), rng.random_range(0.55..0.9));
    let offset = Vec3::new(rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05));
    let mut mesh = shapes::icosphere(2);
    for v in &mut mesh.vertices {
        *v = v.component_mul(&scale) + offset;
    }
    let rig = make_rig(cfg.views, cfg.resolution, cfg.resolution)?;
    let gt = sample_mvpc(&mesh, &rig)?;
    let noise = Normal::new(0.0, cfg.noise).expect("finite noise level");
    let mut pred = gt.clone();
    for view in &mut pred.views {
        for p in &mut view.points {
            *p += Vec3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng));
        }
        for v in &mut view.visibility {
            *v = rng.random_range(0.05..0.95);
        }
    }
    Ok((gt, pred))
}

fn near_integer(x: f64, tol: f64) -> bool {
    (x - x.round()).abs() < tol
}

/// Per-pixel flags: true where every coordinate of the pixel is smooth for `term`.
fn smooth_pixels(loss: &GeoLoss, pred: &Mvpc, term: Term, cfg: &GradCheckConfig) -> Vec<Vec<bool>> {
    let gt = loss.ground_truth();
    let band = cfg.margin * cfg.step;
    let mut ok: Vec<Vec<bool>> = pred.views.iter().map(|v| vec![true; v.points.len()]).collect();
    match term {
        Term::PointDistance => {
            for (k, view) in pred.views.iter().enumerate() {
                for (idx, p) in view.points.iter().enumerate() {
                    ok[k][idx] = (p - loss.targets()[k][idx]).norm() > band;
                }
            }
        }
        Term::QuasiVolume => {
            for (k, view) in pred.views.iter().enumerate() {
                for (idx, p) in view.points.iter().enumerate() {
                    let w = gt.views[k].visibility[idx];
                    if w == 0.0 {
                        continue;
                    }
                    let n = loss.normals()[k].normals[idx];
                    let term = w * (p - loss.targets()[k][idx]).dot(&n);
                    ok[k][idx] = term.abs() > band * w * n.norm();
                }
            }
        }
        Term::MultiView => {
            for mask in loss.masks() {
                let (i, j) = (mask.view_i, mask.view_j);
                let (gt_i, gt_j) = (&gt.views[i], &gt.views[j]);
                let cam_j = &gt_j.camera;
                let px_band = band / cam_j.pitch_u().min(cam_j.pitch_v());
                for (x, _) in mask.mask_i_on_i.iter().enumerate().filter(|(_, &m)| m) {
                    let p = pred.views[i].points[x];
                    let q = cam_j.project(&p);
                    if near_integer(q.u, px_band) || near_integer(q.v, px_band) {
                        ok[i][x] = false;
                        continue;
                    }
                    if let Some((r, c)) = cam_j.pixel_at(q.u, q.v) {
                        let y = gt_j.index(r, c);
                        if gt_j.is_visible(y) && (p - gt_j.points[y]).norm() <= band {
                            ok[i][x] = false;
                        }
                    }
                }
                for (x, _) in mask.mask_j_on_j.iter().enumerate().filter(|(_, &m)| m) {
                    let g = gt_j.points[x];
                    let q = gt_i.camera.project(&g);
                    if let Some((r, c)) = gt_i.camera.pixel_at(q.u, q.v) {
                        let y = gt_i.index(r, c);
                        if gt_i.is_visible(y) && (pred.views[i].points[y] - g).norm() <= band {
                            ok[i][y] = false;
                        }
                    }
                }
            }
        }
        Term::VisibilityCe => {
            for (k, view) in pred.views.iter().enumerate() {
                for (idx, &v) in view.visibility.iter().enumerate() {
                    ok[k][idx] = v > VIS_CLAMP + band && v < 1.0 - VIS_CLAMP - band;
                }
            }
        }
    }
    ok
}

fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Compares one term's analytic gradient with central differences on every
/// smooth coordinate (or visibility, for the cross-entropy term).
pub fn check_term(loss: &GeoLoss, pred: &Mvpc, term: Term, cfg: &GradCheckConfig) -> Result<TermReport> {
    let (_, analytic) = term.evaluate(loss, pred)?;
    let smooth = smooth_pixels(loss, pred, term, cfg);
    let mut report = TermReport::new(term);
    let mut probe = pred.clone();
    let h = cfg.step;
    for k in 0..pred.views.len() {
        for idx in 0..pred.views[k].points.len() {
            let channels: &[usize] = if term == Term::VisibilityCe { &[3] } else { &[0, 1, 2] };
            if !smooth[k][idx] {
                report.skipped += channels.len();
                continue;
            }
            for &c in channels {
                let mut eval_at = |delta: f64| -> Result<f64> {
                    if c == 3 {
                        probe.views[k].visibility[idx] = pred.views[k].visibility[idx] + delta;
                    } else {
                        probe.views[k].points[idx][c] = pred.views[k].points[idx][c] + delta;
                    }
                    Ok(term.evaluate(loss, &probe)?.0)
                };
                let plus = eval_at(h)?;
                let minus = eval_at(-h)?;
                probe.views[k].points[idx] = pred.views[k].points[idx];
                probe.views[k].visibility[idx] = pred.views[k].visibility[idx];
                let numeric = (plus - minus) / (2.0 * h);
                let a = if c == 3 {
                    analytic.views[k].visibility[idx]
                } else {
                    analytic.views[k].points[idx][c]
                };
                report.checked += 1;
                report.max_abs_error = report.max_abs_error.max((a - numeric).abs());
                report.max_rel_error = report.max_rel_error.max(relative_error(a, numeric, cfg.rel_floor));
            }
        }
    }
    Ok(report)
}

/// Runs every term on one random instance.
pub fn check_instance(seed: u64, cfg: &GradCheckConfig) -> Result<Vec<TermReport>> {
    let (gt, pred) = random_instance(seed, cfg)?;
    let loss = GeoLoss::with_default_masks(&gt)?;
    Term::ALL.iter().map(|&t| check_term(&loss, &pred, t, cfg)).collect()
}

/// Runs `instances` consecutive seeds starting at `seed` and aggregates the
/// worst errors per term, in [`Term::ALL`] order.
pub fn run_suite(seed: u64, instances: usize, cfg: &GradCheckConfig) -> Result<Vec<TermReport>> {
    let mut total: Vec<TermReport> = Term::ALL.iter().map(|&t| TermReport::new(t)).collect();
    for s in 0..instances as u64 {
        for (acc, r) in total.iter_mut().zip(check_instance(seed.wrapping_add(s), cfg)?) {
            acc.merge(&r);
        }
    }
    Ok(total)
}
