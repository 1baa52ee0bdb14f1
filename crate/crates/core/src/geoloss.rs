//! Geometric loss between a predicted and a ground-truth MVPC, with analytic
//! gradients with respect to predicted coordinates and visibilities.
//!
//! ```text
//! total = ptd + alpha * vol + beta * mv + vis_weight * vis_ce
//! ptd    = Σ_i Σ_x |M_i(x) - M̃_i(x)|                (M̃ = far point where invisible)
//! vol    = Σ_i Σ_x |Ṽ_i(x) (M_i(x) - M̃_i(x)) · Ñ_i(x)|
//! mv     = Σ_(i,j) Σ_{x ∈ Õ_i} |M_i(x) - M̃_j(Π_j M_i(x))|
//!                + Σ_{x ∈ Õ_j} |M̃_j(x) - M_i(Π_i M̃_j(x))|
//! vis_ce = Σ_i Σ_x BCE(clamp(v_i(x)), Ṽ_i(x))
//! ```
//!
//! `Ñ_i` is the area-weighted normal map of the full ground-truth grid mesh,
//! so pixels next to depth discontinuities or the background carry the large
//! normals of their fake edges. All sums are raw (not averaged).

use std::fmt;

use crate::error::{Error, Result};
use crate::grid::Mvpc;
use crate::mesh::{area_weighted_normals, NormalMap};
use crate::sampler::{all_overlap_masks, default_depth_tol, OverlapMask};
use crate::{Point3, Vec3};

/// Distances below this get a zero gradient.
pub const GRAD_EPS: f64 = 1e-12;
/// Predicted visibilities are clamped to `[VIS_CLAMP, 1 - VIS_CLAMP]`.
pub const VIS_CLAMP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
    pub vis_weight: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            alpha: 100.0,
            beta: 1.0,
            vis_weight: 1.0,
        }
    }
}

impl LossWeights {
    pub fn new(alpha: f64, beta: f64, vis_weight: f64) -> Result<Self> {
        let w = Self {
            alpha,
            beta,
            vis_weight,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("vis_weight", self.vis_weight)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// Point-distance only.
    pub fn ptd_only() -> Self {
        Self {
            alpha: 0.0,
            beta: 0.0,
            vis_weight: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub ptd: f64,
    pub vol: f64,
    pub mv: f64,
    pub vis_ce: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn from_parts(ptd: f64, vol: f64, mv: f64, vis_ce: f64, weights: &LossWeights) -> Self {
        Self {
            ptd,
            vol,
            mv,
            vis_ce,
            total: ptd + weights.alpha * vol + weights.beta * mv + weights.vis_weight * vis_ce,
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.ptd, self.vol, self.mv, self.vis_ce, self.total].iter().all(|v| v.is_finite())
    }

    /// Every term divided by `pixels` (reporting only).
    pub fn per_pixel(&self, pixels: usize) -> Self {
        let s = 1.0 / pixels.max(1) as f64;
        Self {
            ptd: self.ptd * s,
            vol: self.vol * s,
            mv: self.mv * s,
            vis_ce: self.vis_ce * s,
            total: self.total * s,
        }
    }
}

impl fmt::Display for LossBreakdown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ptd={} vol={} mv={} vis_ce={} total={}",
            self.ptd, self.vol, self.mv, self.vis_ce, self.total
        )
    }
}

/// Gradient of one view: per-pixel coordinate and visibility derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewGradient {
    pub points: Vec<Vec3>,
    pub visibility: Vec<f64>,
}

/// Loss gradient with the shape of the predicted MVPC.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub views: Vec<ViewGradient>,
}

impl GradientField {
    pub fn zeros_like(m: &Mvpc) -> Self {
        Self {
            views: m
                .views
                .iter()
                .map(|v| ViewGradient {
                    points: vec![Vec3::zeros(); v.points.len()],
                    visibility: vec![0.0; v.visibility.len()],
                })
                .collect(),
        }
    }

    /// `self += weight * other`.
    pub fn add_scaled(&mut self, other: &GradientField, weight: f64) {
        if weight == 0.0 {
            return;
        }
        for (a, b) in self.views.iter_mut().zip(&other.views) {
            for (x, y) in a.points.iter_mut().zip(&b.points) {
                *x += y * weight;
            }
            for (x, y) in a.visibility.iter_mut().zip(&b.visibility) {
                *x += y * weight;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.views.iter().all(|v| {
            v.points.iter().all(|p| p.iter().all(|c| c.is_finite())) && v.visibility.iter().all(|x| x.is_finite())
        })
    }
}

/// Loss evaluator bound to one ground truth. Precomputes the per-pixel
/// targets and the area-weighted normal maps once. Invisible ground-truth
/// pixels store their far point, which is therefore their target; using the
/// stored value keeps `pred == gt` an exact zero after an `f32` file round trip.
pub struct GeoLoss<'a> {
    gt: &'a Mvpc,
    targets: Vec<Vec<Point3>>,
    normals: Vec<NormalMap>,
    masks: Vec<OverlapMask>,
}

impl<'a> GeoLoss<'a> {
    pub fn new(gt: &'a Mvpc, masks: Vec<OverlapMask>) -> Result<Self> {
        let (n, pixels) = (gt.view_count(), gt.height() * gt.width());
        for m in &masks {
            for index in [m.view_i, m.view_j] {
                if index >= n {
                    return Err(Error::ViewIndexOutOfRange { index, count: n });
                }
            }
            if m.view_i == m.view_j {
                return Err(Error::SameView(m.view_i));
            }
            if m.mask_i_on_i.len() != pixels || m.mask_j_on_j.len() != pixels {
                return Err(Error::ShapeMismatch(format!(
                    "overlap mask ({}, {}) does not match {}x{} grids",
                    m.view_i,
                    m.view_j,
                    gt.height(),
                    gt.width()
                )));
            }
        }
        let mut targets = Vec::with_capacity(n);
        let mut normals = Vec::with_capacity(n);
        for view in &gt.views {
            let target = view.points.clone();
            normals.push(area_weighted_normals(view)?);
            targets.push(target);
        }
        Ok(Self {
            gt,
            targets,
            normals,
            masks,
        })
    }

    /// Evaluator with masks for every ordered view pair at the default tolerance.
    pub fn with_default_masks(gt: &'a Mvpc) -> Result<Self> {
        let masks = all_overlap_masks(gt, default_depth_tol(gt))?;
        Self::new(gt, masks)
    }

    pub fn ground_truth(&self) -> &Mvpc {
        self.gt
    }

    pub fn normals(&self) -> &[NormalMap] {
        &self.normals
    }

    pub fn masks(&self) -> &[OverlapMask] {
        &self.masks
    }

    /// Ground-truth point per pixel (far points on invisible pixels).
    pub fn targets(&self) -> &[Vec<Point3>] {
        &self.targets
    }

    pub fn point_distance(&self, pred: &Mvpc) -> Result<(f64, GradientField)> {
        self.gt.check_compatible(pred)?;
        let mut grad = GradientField::zeros_like(pred);
        let mut loss = 0.0;
        for (k, view) in pred.views.iter().enumerate() {
            for (idx, p) in view.points.iter().enumerate() {
                let diff = p - self.targets[k][idx];
                let d = diff.norm();
                loss += d;
                if d > GRAD_EPS {
                    grad.views[k].points[idx] = diff / d;
                }
            }
        }
        Ok((loss, grad))
    }

    pub fn quasi_volume(&self, pred: &Mvpc) -> Result<(f64, GradientField)> {
        self.gt.check_compatible(pred)?;
        let mut grad = GradientField::zeros_like(pred);
        let mut loss = 0.0;
        for (k, view) in pred.views.iter().enumerate() {
            let gt_vis = &self.gt.views[k].visibility;
            for (idx, p) in view.points.iter().enumerate() {
                let weight = gt_vis[idx];
                if weight == 0.0 {
                    continue;
                }
                let normal = self.normals[k].normals[idx];
                let term = weight * (p - self.targets[k][idx]).dot(&normal);
                loss += term.abs();
                if term != 0.0 {
                    grad.views[k].points[idx] = normal * (weight * term.signum());
                }
            }
        }
        Ok((loss, grad))
    }

    pub fn multiview(&self, pred: &Mvpc) -> Result<(f64, GradientField)> {
        self.gt.check_compatible(pred)?;
        let mut grad = GradientField::zeros_like(pred);
        let mut loss = 0.0;
        for mask in &self.masks {
            let (i, j) = (mask.view_i, mask.view_j);
            let (gt_i, gt_j) = (&self.gt.views[i], &self.gt.views[j]);
            let pred_i = &pred.views[i];

            for (x, _) in mask.mask_i_on_i.iter().enumerate().filter(|(_, &m)| m) {
                let p = pred_i.points[x];
                let q = gt_j.camera.project(&p);
                let Some((row, col)) = gt_j.camera.pixel_at(q.u, q.v) else {
                    continue;
                };
                let y = gt_j.index(row, col);
                if !gt_j.is_visible(y) {
                    continue;
                }
                let diff = p - gt_j.points[y];
                let d = diff.norm();
                loss += d;
                if d > GRAD_EPS {
                    grad.views[i].points[x] += diff / d;
                }
            }

            for (x, _) in mask.mask_j_on_j.iter().enumerate().filter(|(_, &m)| m) {
                let g = gt_j.points[x];
                let q = gt_i.camera.project(&g);
                let Some((row, col)) = gt_i.camera.pixel_at(q.u, q.v) else {
                    continue;
                };
                let y = gt_i.index(row, col);
                if !gt_i.is_visible(y) {
                    continue;
                }
                let diff = pred_i.points[y] - g;
                let d = diff.norm();
                loss += d;
                if d > GRAD_EPS {
                    grad.views[i].points[y] += diff / d;
                }
            }
        }
        Ok((loss, grad))
    }

    pub fn visibility_ce(&self, pred: &Mvpc) -> Result<(f64, GradientField)> {
        self.gt.check_compatible(pred)?;
        let mut grad = GradientField::zeros_like(pred);
        let mut loss = 0.0;
        for (k, view) in pred.views.iter().enumerate() {
            let gt_vis = &self.gt.views[k].visibility;
            for (idx, &raw) in view.visibility.iter().enumerate() {
                let y = gt_vis[idx];
                let v = raw.clamp(VIS_CLAMP, 1.0 - VIS_CLAMP);
                loss -= y * v.ln() + (1.0 - y) * (1.0 - v).ln();
                if raw == v {
                    grad.views[k].visibility[idx] = -y / v + (1.0 - y) / (1.0 - v);
                }
            }
        }
        Ok((loss, grad))
    }

    pub fn evaluate(&self, pred: &Mvpc, weights: &LossWeights) -> Result<(LossBreakdown, GradientField)> {
        weights.validate()?;
        let (ptd, mut grad) = self.point_distance(pred)?;
        let (vol, g_vol) = self.quasi_volume(pred)?;
        let (mv, g_mv) = self.multiview(pred)?;
        let (vis_ce, g_vis) = self.visibility_ce(pred)?;
        grad.add_scaled(&g_vol, weights.alpha);
        grad.add_scaled(&g_mv, weights.beta);
        grad.add_scaled(&g_vis, weights.vis_weight);
        Ok((LossBreakdown::from_parts(ptd, vol, mv, vis_ce, weights), grad))
    }
}

pub fn point_distance_loss(pred: &Mvpc, gt: &Mvpc) -> Result<(f64, GradientField)> {
    GeoLoss::new(gt, Vec::new())?.point_distance(pred)
}

pub fn quasi_volume_loss(pred: &Mvpc, gt: &Mvpc) -> Result<(f64, GradientField)> {
    GeoLoss::new(gt, Vec::new())?.quasi_volume(pred)
}

/// `masks` must be computed on the ground truth.
pub fn multiview_consistency_loss(pred: &Mvpc, gt: &Mvpc, masks: &[OverlapMask]) -> Result<(f64, GradientField)> {
    GeoLoss::new(gt, masks.to_vec())?.multiview(pred)
}

pub fn visibility_ce_loss(pred: &Mvpc, gt: &Mvpc) -> Result<(f64, GradientField)> {
    GeoLoss::new(gt, Vec::new())?.visibility_ce(pred)
}

pub fn geo_loss(
    pred: &Mvpc,
    gt: &Mvpc,
    weights: &LossWeights,
    masks: &[OverlapMask],
) -> Result<(LossBreakdown, GradientField)> {
    GeoLoss::new(gt, masks.to_vec())?.evaluate(pred, weights)
}
