//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mvpc_core::fitter::{fit, init_mvpc, FitConfig, InitMode};
use mvpc_core::geoloss::{quasi_volume_loss, GeoLoss, LossWeights, VIS_CLAMP};
use mvpc_core::gradcheck::{run_suite, GradCheckConfig};
use mvpc_core::grid::far_points;
use mvpc_core::io::{decode_mvpc, encode_mvpc, mvpc_file_size, read_mvpc, write_mvpc, FormatError};
use mvpc_core::mesh::{area_weighted_normals, triangulate};
use mvpc_core::metrics::{chamfer, coverage, mvpc_to_points, sample_surface, voxel_iou, voxelize};
use mvpc_core::sampler::sample_mvpc;
use mvpc_core::{make_rig, shapes, Mvpc, PointGridMap, ViewCamera, ViewRig, Vec3, VISIBILITY_THRESHOLD};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("gradient correctness", gradient_correctness),
        ("quasi-volume oracle", quasi_volume_oracle),
        ("zero at identity", zero_at_identity),
        ("fitting convergence", fitting_convergence),
        ("occluding-contour benefit", occluding_contour_benefit),
        ("coverage properties", coverage_properties),
        ("metrics self-consistency", metrics_self_consistency),
        ("format fidelity", format_fidelity),
        ("triangulation counts", triangulation_counts),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let verdict = if result.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!result.pass);
        println!(
            "criterion {} ({name}): {verdict} [{:.1}s] {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            result.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let reports = run_suite(0, 20, &GradCheckConfig::default()).expect("gradient suite runs");
    let elapsed = start.elapsed();
    let mut pass = elapsed < Duration::from_secs(30);
    let mut parts = Vec::new();
    for r in &reports {
        pass &= r.checked > 0 && r.max_rel_error < 1e-4;
        parts.push(format!("{}={:.2e} ({} coords)", r.term.name(), r.max_rel_error, r.checked));
    }
    outcome(pass, format!("20 instances, max rel error {}; {:.1}s < 30s", parts.join(", "), elapsed.as_secs_f64()))
}

/// Independent per-pixel recomputation: enumerate the (up to six) triangles
/// of each pixel's 1-ring explicitly, orient them toward the camera, and sum
/// `|(p - g) . N|` over visible ground-truth pixels.
fn brute_quasi_volume(pred: &PointGridMap, gt: &PointGridMap) -> f64 {
    let (h, w) = (gt.height() as isize, gt.width() as isize);
    let toward = -gt.camera.view_dir();
    let at = |r: isize, c: isize| gt.points[(r * w + c) as usize];
    let mut total = 0.0;
    for r in 0..h {
        for c in 0..w {
            // (quad top-left, which triangles of that quad contain (r, c)).
            let ring: [((isize, isize), &[usize]); 4] = [
                ((r - 1, c - 1), &[0, 1]), // pixel is bottom-right
                ((r - 1, c), &[0]),        // bottom-left: (TL, BL, BR)
                ((r, c - 1), &[1]),        // top-right: (TL, BR, TR)
                ((r, c), &[0, 1]),         // top-left
            ];
            let mut n = Vec3::zeros();
            for ((qr, qc), which) in ring {
                if qr < 0 || qc < 0 || qr + 1 >= h || qc + 1 >= w {
                    continue;
                }
                let (tl, tr, bl, br) = (at(qr, qc), at(qr, qc + 1), at(qr + 1, qc), at(qr + 1, qc + 1));
                for &t in which {
                    let (a, b, c) = if t == 0 { (tl, bl, br) } else { (tl, br, tr) };
                    let tri = (b - a).cross(&(c - a)) * 0.5;
                    n += if tri.dot(&toward) < 0.0 { -tri } else { tri };
                }
            }
            let idx = (r * w + c) as usize;
            total += gt.visibility[idx] * (pred.points[idx] - gt.points[idx]).dot(&n).abs();
        }
    }
    total
}

fn random_pair(rng: &mut ChaCha8Rng, h: usize, w: usize) -> (Mvpc, Mvpc) {
    let rig = make_rig(4, h, w).unwrap();
    let mut gt = Mvpc::empty(rig);
    let mut pred = gt.clone();
    for k in 0..4 {
        let far = far_points(&gt.views[k].camera);
        for idx in 0..h * w {
            let visible = rng.random_bool(0.7);
            let g = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            gt.views[k].points[idx] = if visible { g } else { far[idx] };
            gt.views[k].visibility[idx] = if visible { 1.0 } else { 0.0 };
            let d = Vec3::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
            pred.views[k].points[idx] = gt.views[k].points[idx] + d;
        }
    }
    (gt, pred)
}

fn quasi_volume_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (h, w) = (rng.random_range(2..=8), rng.random_range(2..=8));
        let (gt, pred) = random_pair(&mut rng, h, w);
        let (module, _) = quasi_volume_loss(&pred, &gt).unwrap();
        let brute: f64 = (0..4).map(|k| brute_quasi_volume(&pred.views[k], &gt.views[k])).sum();
        worst = worst.max((module - brute).abs());
    }

    // Flat 2x2 quad at z = 0 seen from +z with unit pixel pitch, lifted by delta.
    let cams: Vec<_> = [-Vec3::z(), Vec3::z(), -Vec3::x(), Vec3::x()]
        .iter()
        .map(|d| ViewCamera::looking_at_origin(*d, 2, 2).unwrap())
        .collect();
    let mut gt = Mvpc::empty(ViewRig::new(cams.clone()).unwrap());
    for row in 0..2 {
        for col in 0..2 {
            let (u, v) = ViewCamera::pixel_center(row, col);
            let idx = gt.views[0].index(row, col);
            gt.views[0].points[idx] = cams[0].backproject(u, v, cams[0].project(&Vec3::zeros()).depth);
            gt.views[0].visibility[idx] = 1.0;
        }
    }
    let delta = 0.01;
    let mut pred = gt.clone();
    for p in &mut pred.views[0].points {
        p.z += delta;
    }
    let (lifted, _) = quasi_volume_loss(&pred, &gt).unwrap();
    let lifted_err = (lifted - 3.0 * delta).abs();
    outcome(
        worst <= 1e-10 && lifted_err <= 1e-12,
        format!("100 random grids max |module - brute| = {worst:.2e} (<= 1e-10); lifted quad |L - 3δ| = {lifted_err:.2e} (<= 1e-12)"),
    )
}

fn zero_at_identity() -> Outcome {
    let mesh = shapes::icosphere(4);
    let floor = -(1.0 - VIS_CLAMP).ln();
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [4, 6, 8] {
        let gt = sample_mvpc(&mesh, &make_rig(n, 64, 64).unwrap()).unwrap();
        let loss = GeoLoss::with_default_masks(&gt).unwrap();
        let (b, _) = loss.evaluate(&gt, &LossWeights::default()).unwrap();
        let pixels = (n * 64 * 64) as f64;
        let ok = b.ptd == 0.0 && b.vol == 0.0 && b.mv == 0.0 && b.vis_ce <= pixels * floor * (1.0 + 1e-9);
        pass &= ok;
        parts.push(format!(
            "N={n}: ptd={} vol={} mv={:.4} vis_ce/pixel={:.3e}",
            b.ptd,
            b.vol,
            b.mv,
            b.vis_ce / pixels
        ));
    }
    outcome(pass, format!("{} (floor {floor:.3e}/pixel)", parts.join("; ")))
}

fn visible_chamfer(a: &Mvpc, b: &Mvpc) -> f64 {
    chamfer(&mvpc_to_points(a, VISIBILITY_THRESHOLD), &mvpc_to_points(b, VISIBILITY_THRESHOLD)).unwrap()
}

fn fitting_convergence() -> Outcome {
    let start = Instant::now();
    let gt = sample_mvpc(&shapes::icosphere(4), &make_rig(4, 32, 32).unwrap()).unwrap();
    let config = FitConfig {
        iterations: 500,
        step_size: 1e-2,
        init_mode: InitMode::NoisyGt(0.05),
        seed: 11,
        ..Default::default()
    };
    let init = init_mvpc(&gt, config.init_mode, config.seed).unwrap();
    let a = fit(&init, &gt, &config).unwrap();
    let elapsed = start.elapsed();
    let again = init_mvpc(&gt, config.init_mode, config.seed).unwrap();
    let b = fit(&again, &gt, &config).unwrap();
    let deterministic = init == again && a.history == b.history && a.result == b.result;

    let before = visible_chamfer(&init, &gt);
    let after = visible_chamfer(&a.result, &gt);
    let reduction = 1.0 - after / before;

    // Same run without the multi-view term, reported for context only.
    let no_mv = FitConfig {
        weights: LossWeights { beta: 0.0, ..config.weights },
        ..config
    };
    let c = fit(&init, &gt, &no_mv).unwrap();
    let reduction_no_mv = 1.0 - visible_chamfer(&c.result, &gt) / before;

    outcome(
        reduction >= 0.9 && deterministic && elapsed < Duration::from_secs(120),
        format!(
            "CD {before:.5} -> {after:.5}, reduction {:.1}% (>= 90%); deterministic={deterministic}; \
             {:.1}s < 120s; [context: beta=0 reduction {:.1}%]",
            100.0 * reduction,
            elapsed.as_secs_f64(),
            100.0 * reduction_no_mv
        ),
    )
}

/// Visible ground-truth pixels next to an invisible pixel or a depth jump.
fn discontinuity_pixels(gt: &Mvpc, jump: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (k, view) in gt.views.iter().enumerate() {
        let (h, w) = (view.height() as isize, view.width() as isize);
        let depth = view.depths();
        for r in 0..h {
            for c in 0..w {
                let i = (r * w + c) as usize;
                if !view.is_visible(i) {
                    continue;
                }
                let edge = [(0, 1), (1, 0), (0, -1), (-1, 0)].iter().any(|(dr, dc)| {
                    let (rr, cc) = (r + dr, c + dc);
                    if rr < 0 || cc < 0 || rr >= h || cc >= w {
                        return false;
                    }
                    let j = (rr * w + cc) as usize;
                    !view.is_visible(j) || (depth[j] - depth[i]).abs() > jump
                });
                if edge {
                    out.push((k, i));
                }
            }
        }
    }
    out
}

fn occluding_contour_benefit() -> Outcome {
    let mesh = shapes::stacked_quads(0.3, 0.3, 0.6, -0.3);
    let gt = sample_mvpc(&mesh, &make_rig(4, 32, 32).unwrap()).unwrap();
    let pixels = discontinuity_pixels(&gt, 0.1);
    let init = init_mvpc(&gt, InitMode::NoisyGt(0.05), 5).unwrap();
    let boundary_error = |alpha: f64| {
        let config = FitConfig {
            weights: LossWeights {
                alpha,
                ..LossWeights::default()
            },
            seed: 5,
            ..Default::default()
        };
        let result = fit(&init, &gt, &config).unwrap().result;
        pixels
            .iter()
            .map(|&(k, i)| (result.views[k].points[i] - gt.views[k].points[i]).norm())
            .sum::<f64>()
            / pixels.len() as f64
    };
    let (with, without) = (boundary_error(100.0), boundary_error(0.0));
    outcome(
        !pixels.is_empty() && with < without,
        format!(
            "{} discontinuity pixels, mean 3D error alpha=100: {with:.5} < alpha=0: {without:.5}",
            pixels.len()
        ),
    )
}

/// Cup used for the coverage criterion: solid block with a square cavity,
/// tilted so no rig looks straight into it.
const CUP_OUTER: f64 = 0.5;
const CUP_INNER: f64 = 0.4;
const CUP_HEIGHT: f64 = 1.0;
const CUP_DEPTH: f64 = 0.5;

fn cup_rotation() -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Vector3::x_axis(), 15f64.to_radians())
        * Rotation3::from_axis_angle(&Vector3::z_axis(), 45f64.to_radians())
}

/// Analytic coverage of the cup by midpoint quadrature. In the cup frame an
/// outer face point is visible along `d` iff `d` leaves through the face
/// (the block is convex); a rim point iff `d` points up; a cavity point iff
/// the ray reaches the rim plane strictly inside the opening.
fn cup_coverage_oracle(rig: &ViewRig, n: usize) -> f64 {
    let rot = cup_rotation();
    let dirs: Vec<Vec3> = rig.cameras().iter().map(|c| rot.inverse() * -c.view_dir()).collect();
    let (a, b) = (CUP_OUTER, CUP_INNER);
    let (z0, z1) = (-0.5 * CUP_HEIGHT, 0.5 * CUP_HEIGHT);
    let zf = z1 - CUP_DEPTH;
    let through_opening = |p: Vec3, d: &Vec3| {
        if d.z <= 0.0 {
            return false;
        }
        let t = (z1 - p.z) / d.z;
        (p.x + t * d.x).abs() < b && (p.y + t * d.y).abs() < b
    };
    enum Kind {
        Outer(Vec3),
        Rim,
        Cavity,
    }
    // (origin, edge u, edge v, kind)
    let (ex, ey, ez) = (Vec3::x(), Vec3::y(), Vec3::z());
    let w = a - b;
    let faces = [
        (Vec3::new(-a, -a, z0), ex * 2.0 * a, ey * 2.0 * a, Kind::Outer(-ez)),
        (Vec3::new(a, -a, z0), ey * 2.0 * a, ez * CUP_HEIGHT, Kind::Outer(ex)),
        (Vec3::new(-a, -a, z0), ey * 2.0 * a, ez * CUP_HEIGHT, Kind::Outer(-ex)),
        (Vec3::new(-a, a, z0), ex * 2.0 * a, ez * CUP_HEIGHT, Kind::Outer(ey)),
        (Vec3::new(-a, -a, z0), ex * 2.0 * a, ez * CUP_HEIGHT, Kind::Outer(-ey)),
        (Vec3::new(-a, -a, z1), ex * 2.0 * a, ey * w, Kind::Rim),
        (Vec3::new(-a, b, z1), ex * 2.0 * a, ey * w, Kind::Rim),
        (Vec3::new(-a, -b, z1), ex * w, ey * 2.0 * b, Kind::Rim),
        (Vec3::new(b, -b, z1), ex * w, ey * 2.0 * b, Kind::Rim),
        (Vec3::new(-b, -b, zf), ex * 2.0 * b, ey * 2.0 * b, Kind::Cavity),
        (Vec3::new(b, -b, zf), ey * 2.0 * b, ez * CUP_DEPTH, Kind::Cavity),
        (Vec3::new(-b, -b, zf), ey * 2.0 * b, ez * CUP_DEPTH, Kind::Cavity),
        (Vec3::new(-b, b, zf), ex * 2.0 * b, ez * CUP_DEPTH, Kind::Cavity),
        (Vec3::new(-b, -b, zf), ex * 2.0 * b, ez * CUP_DEPTH, Kind::Cavity),
    ];
    let (mut seen, mut total) = (0.0, 0.0);
    for (origin, eu, ev, kind) in &faces {
        let area = eu.cross(ev).norm();
        let mut count = 0usize;
        for i in 0..n {
            for j in 0..n {
                let p = origin + eu * ((i as f64 + 0.5) / n as f64) + ev * ((j as f64 + 0.5) / n as f64);
                let visible = dirs.iter().any(|d| match kind {
                    Kind::Outer(normal) => d.dot(normal) > 0.0,
                    Kind::Rim => d.z > 0.0,
                    Kind::Cavity => through_opening(p, d),
                });
                count += usize::from(visible);
            }
        }
        seen += area * count as f64 / (n * n) as f64;
        total += area;
    }
    seen / total
}

fn coverage_properties() -> Outcome {
    let sphere = shapes::icosphere(3);
    let cup = shapes::rotated(&shapes::cup(CUP_OUTER, CUP_INNER, CUP_HEIGHT, CUP_DEPTH, 4), &cup_rotation());
    let mut pass = true;
    let mut parts = Vec::new();
    let mut cup_cov = Vec::new();
    for n in [4, 6, 8] {
        let rig = make_rig(n, 8, 8).unwrap();
        let convex = coverage(&sphere, &rig, 100_000, 1).unwrap();
        let measured = coverage(&cup, &rig, 100_000, 2).unwrap();
        let oracle = cup_coverage_oracle(&rig, 400);
        let ok = convex == 1.0 && measured > 0.8 && measured < 1.0 && (measured - oracle).abs() <= 0.005;
        pass &= ok;
        cup_cov.push(measured);
        parts.push(format!("N={n}: sphere={convex} cup={measured:.4} oracle={oracle:.4}"));
    }
    let monotone = cup_cov[2] >= cup_cov[1] && cup_cov[1] >= cup_cov[0];
    outcome(
        pass && monotone,
        format!("{}; cup monotone in N={monotone}; tolerance 0.005", parts.join("; ")),
    )
}

fn metrics_self_consistency() -> Outcome {
    let mesh = shapes::icosphere(4);
    let gt = sample_mvpc(&mesh, &make_rig(6, 128, 128).unwrap()).unwrap();
    let dense: Vec<Vec3> = sample_surface(&mesh, 100_000, 9).unwrap().iter().map(|s| s.point).collect();
    let iou = voxel_iou(&voxelize(&mvpc_to_points(&gt, VISIBILITY_THRESHOLD), 32), &voxelize(&dense, 32)).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut cloud = |n: usize| -> Vec<Vec3> {
        (0..n)
            .map(|_| Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    };
    let (p, q) = (cloud(200), cloud(300));
    let mean_min = |from: &[Vec3], to: &[Vec3]| {
        from.iter()
            .map(|a| to.iter().map(|b| (a - b).norm()).fold(f64::INFINITY, f64::min))
            .sum::<f64>()
            / from.len() as f64
    };
    let brute = mean_min(&p, &q) + mean_min(&q, &p);
    let fast = chamfer(&p, &q).unwrap();
    let diff = (brute - fast).abs();
    outcome(
        iou >= 0.85 && diff <= 1e-12,
        format!("voxel IoU {iou:.4} (>= 0.85); chamfer 200x300 |tree - brute| = {diff:.2e} (<= 1e-12)"),
    )
}

fn random_f32_mvpc(rng: &mut ChaCha8Rng, n: usize, h: usize, w: usize) -> Mvpc {
    let mut m = Mvpc::empty(make_rig(n, h, w).unwrap());
    for view in &mut m.views {
        for p in &mut view.points {
            *p = Vec3::new(
                rng.random_range(-2.0f32..2.0) as f64,
                rng.random_range(-2.0f32..2.0) as f64,
                rng.random_range(-2.0f32..2.0) as f64,
            );
        }
        for v in &mut view.visibility {
            *v = rng.random_range(0.0f32..=1.0) as f64;
        }
    }
    m
}

fn bit_identical(a: &Mvpc, b: &Mvpc) -> bool {
    a.rig == b.rig
        && a.views.iter().zip(&b.views).all(|(x, y)| {
            x.points.iter().zip(&y.points).all(|(p, q)| p.iter().zip(q.iter()).all(|(s, t)| s.to_bits() == t.to_bits()))
                && x.visibility.iter().zip(&y.visibility).all(|(s, t)| s.to_bits() == t.to_bits())
        })
}

fn format_fidelity() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut round_trips = true;
    let mut sizes = true;
    for (n, h, w) in [(4, 2, 2), (6, 8, 5), (8, 16, 16)] {
        let m = random_f32_mvpc(&mut rng, n, h, w);
        let path = dir.path().join(format!("m{n}.mvpc"));
        write_mvpc(&m, &path).unwrap();
        let back = read_mvpc(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        round_trips &= bit_identical(&m, &back) && encode_mvpc(&back).unwrap() == bytes;
        sizes &= bytes.len() == mvpc_file_size(n, h, w) && bytes.len() == 16 + n * (72 + 16 * h * w);
    }

    let good = encode_mvpc(&random_f32_mvpc(&mut rng, 4, 4, 4)).unwrap();
    let mut bad_magic = good.clone();
    bad_magic[..4].copy_from_slice(b"MVPX");
    let magic_err = decode_mvpc(&bad_magic).err();
    let truncated_err = decode_mvpc(&good[..good.len() - 3]).err();
    let header_err = decode_mvpc(&good[..10]).err();
    let distinct = matches!(magic_err, Some(FormatError::NotMvpc))
        && matches!(truncated_err, Some(FormatError::UnexpectedEof))
        && matches!(header_err, Some(FormatError::UnexpectedEof));
    outcome(
        round_trips && sizes && distinct,
        format!(
            "round trip bit-identical={round_trips}; size 16 + N(72 + 16HW) holds={sizes}; \
             bad magic -> {:?}, truncated -> {:?}",
            magic_err.map(|e| e.to_string()),
            truncated_err.map(|e| e.to_string())
        ),
    )
}

fn triangulation_counts() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut counts = true;
    let mut worst = 0.0f64;
    for (h, w) in [(2, 2), (3, 7), (8, 8), (16, 9)] {
        let rig = make_rig(4, h, w).unwrap();
        let cam = rig.camera(0).clone();
        let points: Vec<Vec3> = (0..h * w)
            .map(|_| Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let grid = PointGridMap::new(cam, points, vec![1.0; h * w]).unwrap();
        let expected = 2 * (h - 1) * (w - 1);
        let full = triangulate(&grid, false).unwrap();
        let filtered = triangulate(&grid, true).unwrap();
        counts &= full.triangles.len() == expected && filtered.triangles.len() == expected;

        let normals = area_weighted_normals(&grid).unwrap();
        let lhs: Vec3 = normals.normals.iter().sum();
        let toward = -grid.camera.view_dir();
        let rhs: Vec3 = (0..full.triangles.len())
            .map(|t| {
                let n = full.area_normal(t);
                3.0 * if n.dot(&toward) < 0.0 { -n } else { n }
            })
            .sum();
        worst = worst.max((lhs - rhs).norm());
    }
    outcome(
        counts && worst <= 1e-10,
        format!("2(H-1)(W-1) triangles on 4 grid sizes={counts}; |sum N - 3 sum |T| n| = {worst:.2e} (<= 1e-10)"),
    )
}
