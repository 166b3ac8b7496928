//! Trajectory similarity, guidance-task errors and feature discriminability.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nav::{wrap_angle, Vec3};
use crate::scalar::Real;

/// Points per curve after arclength resampling.
pub const DEFAULT_RESAMPLE: usize = 200;

fn dist<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> T {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Discrete Fréchet distance under the Euclidean metric.
pub fn discrete_frechet<T: Real>(p: &[Vec3<T>], q: &[Vec3<T>]) -> Result<T> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::Input("Fréchet distance needs two non-empty curves".into()));
    }
    let m = q.len();
    let mut prev = vec![T::zero(); m];
    let mut cur = vec![T::zero(); m];
    for (i, pi) in p.iter().enumerate() {
        for j in 0..m {
            let d = dist(pi, &q[j]);
            cur[j] = match (i, j) {
                (0, 0) => d,
                (0, _) => cur[j - 1].max(d),
                (_, 0) => prev[0].max(d),
                _ => prev[j].min(prev[j - 1]).min(cur[j - 1]).max(d),
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m - 1])
}

pub fn path_length<T: Real>(points: &[Vec3<T>]) -> T {
    points.windows(2).map(|w| dist(&w[0], &w[1])).sum()
}

/// `n` points equally spaced in arclength along the polyline.
pub fn resample_arclength<T: Real>(points: &[Vec3<T>], n: usize) -> Result<Vec<Vec3<T>>> {
    let total = path_length(points);
    if points.len() < 2 || !(total > T::zero()) || n < 2 {
        return Err(Error::Alignment("cannot resample a curve of zero length".into()));
    }
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    let mut seg_start = T::zero();
    for k in 0..n {
        let s = total * T::from_usize_lossy(k) / T::from_usize_lossy(n - 1);
        loop {
            let len = dist(&points[seg], &points[seg + 1]);
            if s <= seg_start + len || seg + 2 == points.len() {
                let a = if len > T::zero() { ((s - seg_start) / len).min(T::one()).max(T::zero()) } else { T::zero() };
                let (p0, p1) = (points[seg], points[seg + 1]);
                out.push([0, 1, 2].map(|i| p0[i] + a * (p1[i] - p0[i])));
                break;
            }
            seg_start = seg_start + len;
            seg += 1;
        }
    }
    Ok(out)
}

/// Proper rigid motion `x ↦ R·x + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl RigidTransform {
    pub fn apply<T: Real>(&self, x: &Vec3<T>) -> Vec3<T> {
        let r = &self.rotation;
        [0, 1, 2].map(|i| {
            T::lit(r[i][0] * x[0].as_f64() + r[i][1] * x[1].as_f64() + r[i][2] * x[2].as_f64() + self.translation[i])
        })
    }

    pub fn determinant(&self) -> f64 {
        Matrix3::from_fn(|i, j| self.rotation[i][j]).determinant()
    }
}

fn to_na<T: Real>(p: &Vec3<T>) -> Vector3<f64> {
    Vector3::new(p[0].as_f64(), p[1].as_f64(), p[2].as_f64())
}

fn centroid(points: &[Vector3<f64>]) -> Vector3<f64> {
    points.iter().sum::<Vector3<f64>>() / points.len() as f64
}

/// Least-squares rotation and translation taking `from` onto `to`.
pub fn kabsch<T: Real>(from: &[Vec3<T>], to: &[Vec3<T>]) -> Result<RigidTransform> {
    if from.len() != to.len() || from.len() < 3 {
        return Err(Error::Alignment("alignment needs two matched sets of at least 3 points".into()));
    }
    let a: Vec<Vector3<f64>> = from.iter().map(to_na).collect();
    let b: Vec<Vector3<f64>> = to.iter().map(to_na).collect();
    let (ca, cb) = (centroid(&a), centroid(&b));
    let spread = b.iter().fold(Matrix3::zeros(), |acc, p| acc + (p - cb) * (p - cb).transpose());
    let mut ev: Vec<f64> = spread.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    let (mid, hi) = (ev[1], ev[2]);
    if !(hi > 0.0) || mid <= 1e-12 * hi {
        return Err(Error::Alignment("reference trajectory is collinear or coincident".into()));
    }
    let h = a.iter().zip(&b).fold(Matrix3::zeros(), |acc, (p, q)| acc + (p - ca) * (q - cb).transpose());
    let svd = h.svd(true, true);
    let (u, v_t) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let r = v * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * u.transpose();
    let t = cb - r * ca;
    Ok(RigidTransform { rotation: [0, 1, 2].map(|i| [0, 1, 2].map(|j| r[(i, j)])), translation: [t[0], t[1], t[2]] })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryScore {
    pub frechet: f64,
    pub path_length: f64,
    pub normalized: f64,
    pub alignment: RigidTransform,
}

pub fn align_then_score<T: Real>(reconstructed: &[Vec3<T>], truth: &[Vec3<T>]) -> Result<TrajectoryScore> {
    align_then_score_with(reconstructed, truth, DEFAULT_RESAMPLE)
}

/// Resamples both curves by arclength, aligns the reconstruction onto the
/// reference with a rigid motion and scores the discrete Fréchet distance,
/// normalized by the reference path length.
pub fn align_then_score_with<T: Real>(
    reconstructed: &[Vec3<T>],
    truth: &[Vec3<T>],
    points: usize,
) -> Result<TrajectoryScore> {
    let truth_r = resample_arclength(truth, points)?;
    let rec_r = resample_arclength(reconstructed, points)?;
    let alignment = kabsch(&rec_r, &truth_r)?;
    let moved: Vec<Vec3<f64>> = rec_r.iter().map(|p| alignment.apply(&[p[0].as_f64(), p[1].as_f64(), p[2].as_f64()])).collect();
    let truth_f: Vec<Vec3<f64>> = truth_r.iter().map(|p| p.map(|v| v.as_f64())).collect();
    let frechet = discrete_frechet(&moved, &truth_f)?;
    let path_length = path_length(truth).as_f64();
    Ok(TrajectoryScore { frechet, path_length, normalized: frechet / path_length, alignment })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceErrors {
    pub attitude_mae_deg: f64,
    pub position_mae_m: f64,
}

/// Mean absolute errors over samples and axes. Attitude differences are
/// wrapped to (-180°, 180°] before taking magnitudes.
pub fn guidance_errors<T: Real>(predictions: &[(Vec3<T>, Vec3<T>)], labels: &[(Vec3<T>, Vec3<T>)]) -> Result<GuidanceErrors> {
    if predictions.len() != labels.len() {
        return Err(Error::Input(format!("{} predictions for {} labels", predictions.len(), labels.len())));
    }
    if predictions.is_empty() {
        return Ok(GuidanceErrors { attitude_mae_deg: 0.0, position_mae_m: 0.0 });
    }
    let (mut att, mut pos) = (0.0, 0.0);
    for ((pa, pp), (la, lp)) in predictions.iter().zip(labels) {
        for i in 0..3 {
            att += wrap_angle(pa[i].as_f64() - la[i].as_f64()).abs().to_degrees();
            pos += (pp[i].as_f64() - lp[i].as_f64()).abs();
        }
    }
    let n = 3.0 * predictions.len() as f64;
    Ok(GuidanceErrors { attitude_mae_deg: att / n, position_mae_m: pos / n })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Silhouette {
    /// `None` when fewer than two classes have at least two members.
    pub score: Option<f64>,
    /// Classes left out for having a single member.
    pub excluded: Vec<usize>,
}

/// Mean silhouette coefficient with Euclidean distances.
pub fn silhouette_score(features: &[Vec<f64>], labels: &[usize]) -> Result<Silhouette> {
    if features.len() != labels.len() {
        return Err(Error::Input(format!("{} feature vectors for {} labels", features.len(), labels.len())));
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; n_classes];
    labels.iter().for_each(|&l| counts[l] += 1);
    let excluded: Vec<usize> = (0..n_classes).filter(|&c| counts[c] == 1).collect();
    let usable: Vec<usize> = (0..n_classes).filter(|&c| counts[c] >= 2).collect();
    if usable.len() < 2 {
        return Ok(Silhouette { score: None, excluded });
    }
    let idx: Vec<usize> = (0..labels.len()).filter(|&i| counts[labels[i]] >= 2).collect();
    let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let mut total = 0.0;
    for &i in &idx {
        let mut sums = vec![0.0; n_classes];
        for &j in &idx {
            if i != j {
                sums[labels[j]] += d(&features[i], &features[j]);
            }
        }
        let own = labels[i];
        let a = sums[own] / (counts[own] - 1) as f64;
        let b = usable.iter().filter(|&&c| c != own).map(|&c| sums[c] / counts[c] as f64).fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        total += if m > 0.0 { (b - a) / m } else { 0.0 };
    }
    Ok(Silhouette { score: Some(total / idx.len() as f64), excluded })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nav::Quaternion;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(p: &[Vec3<f64>], q: &[Vec3<f64>]) -> f64 {
        fn walk(p: &[Vec3<f64>], q: &[Vec3<f64>], i: usize, j: usize, leash: f64, best: &mut f64) {
            let leash = leash.max(dist(&p[i], &q[j]));
            if i + 1 == p.len() && j + 1 == q.len() {
                *best = best.min(leash);
                return;
            }
            if i + 1 < p.len() {
                walk(p, q, i + 1, j, leash, best);
            }
            if j + 1 < q.len() {
                walk(p, q, i, j + 1, leash, best);
            }
            if i + 1 < p.len() && j + 1 < q.len() {
                walk(p, q, i + 1, j + 1, leash, best);
            }
        }
        let mut best = f64::INFINITY;
        walk(p, q, 0, 0, 0.0, &mut best);
        best
    }

    fn random_curve(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec3<f64>> {
        (0..n).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect()
    }

    fn helix(n: usize) -> Vec<Vec3<f64>> {
        (0..n).map(|k| {
            let t = k as f64 / (n - 1) as f64 * 4.0;
            [t.cos(), t.sin(), 0.2 * t]
        }).collect()
    }

    #[test]
    fn frechet_basics() {
        let p = helix(30);
        assert_eq!(discrete_frechet(&p, &p).unwrap(), 0.0);
        let a: Vec<Vec3<f64>> = (0..20).map(|k| [k as f64 * 0.1, 0.0, 0.0]).collect();
        let b: Vec<Vec3<f64>> = a.iter().map(|p| [p[0], 1.0, 0.0]).collect();
        assert!((discrete_frechet(&a, &b).unwrap() - 1.0).abs() < 1e-15);
        assert!(discrete_frechet::<f64>(&[], &a).is_err());
    }

    #[test]
    fn frechet_matches_coupling_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let p = random_curve(&mut rng, 50);
            let q = random_curve(&mut rng, 50);
            let dp = discrete_frechet(&p[..8], &q[..8]).unwrap();
            assert!((dp - brute_force(&p[..8], &q[..8])).abs() < 1e-15);
            assert!(discrete_frechet(&p, &q).unwrap() >= dist(&p[0], &q[0]));
        }
    }

    #[test]
    fn rigid_copy_scores_zero() {
        let truth = helix(300);
        let q = Quaternion::from_rotation_vector([0.3, -1.1, 0.7]);
        let rec: Vec<Vec3<f64>> = truth.iter().map(|p| {
            let r = q.rotate(*p);
            [r[0] + 4.0, r[1] - 2.0, r[2] + 0.5]
        }).collect();
        let s = align_then_score(&rec, &truth).unwrap();
        assert!(s.normalized < 1e-9, "{}", s.normalized);
        assert!((s.alignment.determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_offset_is_absorbed() {
        let truth: Vec<Vec3<f64>> = (0..101).map(|k| {
            let t = k as f64 / 100.0;
            [t, 0.1 * (3.0 * t).sin(), 0.0]
        }).collect();
        let rec: Vec<Vec3<f64>> = truth.iter().map(|p| [p[0], p[1], p[2] + 0.05]).collect();
        assert!(align_then_score(&rec, &truth).unwrap().normalized < 1e-9);
    }

    #[test]
    fn degenerate_reference_is_alignment_error() {
        let line: Vec<Vec3<f64>> = (0..10).map(|k| [k as f64, 2.0 * k as f64, 0.0]).collect();
        assert!(matches!(align_then_score(&helix(10), &line), Err(Error::Alignment(_))));
        assert!(matches!(align_then_score(&helix(10), &[[1.0f64; 3]; 5]), Err(Error::Alignment(_))));
    }

    #[test]
    fn guidance_error_conventions() {
        let z = [0.0f64; 3];
        assert_eq!(guidance_errors(&[(z, z)], &[(z, z)]).unwrap(), GuidanceErrors { attitude_mae_deg: 0.0, position_mae_m: 0.0 });
        let e = guidance_errors(&[([std::f64::consts::PI, 0.0, 0.0], z)], &[(z, z)]).unwrap();
        assert!((e.attitude_mae_deg * 3.0 - 180.0).abs() < 1e-9);
        let d = |x: f64| x.to_radians();
        let e = guidance_errors(&[([d(179.0), 0.0, 0.0], z)], &[([d(-179.0), 0.0, 0.0], z)]).unwrap();
        assert!((e.attitude_mae_deg * 3.0 - 2.0).abs() < 1e-9);
        assert!(guidance_errors(&[(z, z)], &[]).is_err());
    }

    #[test]
    fn silhouette_separation_and_null() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut feats = Vec::new();
        let mut labels = Vec::new();
        for c in 0..2 {
            for _ in 0..30 {
                feats.push((0..4).map(|i| if i == 0 { 100.0 * c as f64 } else { 0.0 } + rng.random_range(-0.5..0.5)).collect::<Vec<f64>>());
                labels.push(c);
            }
        }
        assert!(silhouette_score(&feats, &labels).unwrap().score.unwrap() > 0.9);
        let noise: Vec<Vec<f64>> = (0..200).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        for _ in 0..10 {
            let lab: Vec<usize> = (0..200).map(|_| rng.random_range(0..3)).collect();
            assert!(silhouette_score(&noise, &lab).unwrap().score.unwrap().abs() < 0.1);
        }
    }

    #[test]
    fn silhouette_undefined_and_exclusions() {
        let f = vec![vec![0.0], vec![1.0], vec![5.0], vec![9.0]];
        assert_eq!(silhouette_score(&f, &[0, 0, 0, 1]).unwrap(), Silhouette { score: None, excluded: vec![1] });
        let s = silhouette_score(&f, &[0, 0, 1, 2]).unwrap();
        assert_eq!(s.score, None);
        let s = silhouette_score(&[vec![0.0], vec![0.1], vec![5.0], vec![5.1], vec![9.0]], &[0, 0, 1, 1, 2]).unwrap();
        assert_eq!(s.excluded, vec![2]);
        assert!(s.score.unwrap() > 0.9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn frechet_is_symmetric(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_curve(&mut rng, 12);
            let q = random_curve(&mut rng, 9);
            prop_assert_eq!(discrete_frechet(&p, &q).unwrap(), discrete_frechet(&q, &p).unwrap());
        }

        #[test]
        fn score_is_rigid_invariant(rv in prop::array::uniform3(-3.0f64..3.0), t in prop::array::uniform3(-10.0f64..10.0)) {
            let truth = helix(120);
            let rec: Vec<Vec3<f64>> = truth.iter().enumerate().map(|(k, p)| [p[0] + 0.05 * (k as f64 * 0.3).sin(), p[1], p[2]]).collect();
            let q = Quaternion::from_rotation_vector(rv);
            let moved: Vec<Vec3<f64>> = rec.iter().map(|p| {
                let r = q.rotate(*p);
                [r[0] + t[0], r[1] + t[1], r[2] + t[2]]
            }).collect();
            let a = align_then_score(&rec, &truth).unwrap().normalized;
            let b = align_then_score(&moved, &truth).unwrap().normalized;
            prop_assert!((a - b).abs() < 1e-9);
        }

        #[test]
        fn silhouette_scale_invariant(seed in 0u64..1000, c in 0.01f64..100.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f: Vec<Vec<f64>> = (0..30).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let lab: Vec<usize> = (0..30).map(|i| i % 3).collect();
            let g: Vec<Vec<f64>> = f.iter().map(|v| v.iter().map(|x| x * c).collect()).collect();
            let a = silhouette_score(&f, &lab).unwrap().score.unwrap();
            let b = silhouette_score(&g, &lab).unwrap().score.unwrap();
            prop_assert!((a - b).abs() < 1e-10);
        }
    }
}
