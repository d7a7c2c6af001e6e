//! Small dense symmetric linear algebra: cyclic Jacobi eigen-decomposition.

/// Eigen-decomposition of a symmetric `d x d` matrix (row-major).
///
/// Returns `(eigenvalues, eigenvectors)` where eigenvector `j` is column `j`
/// of the row-major `vectors` buffer. An input that is already diagonal is
/// returned with identity eigenvectors, exactly.
pub fn symmetric_eigen(matrix: &[f64], d: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(matrix.len(), d * d, "matrix is not {d}x{d}");
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; d * d];
    for i in 0..d {
        v[i * d + i] = 1.0;
    }
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if scale == 0.0 {
        return (vec![0.0; d], v);
    }
    for _sweep in 0..100 {
        let off: f64 = (0..d)
            .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * d + j] * a[i * d + j])
            .sum();
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = a[p * d + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * d + p];
                let aqq = a[q * d + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[k * d + p];
                    let akq = a[k * d + q];
                    a[k * d + p] = c * akp - s * akq;
                    a[k * d + q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[p * d + k];
                    let aqk = a[q * d + k];
                    a[p * d + k] = c * apk - s * aqk;
                    a[q * d + k] = s * apk + c * aqk;
                }
                for k in 0..d {
                    let vkp = v[k * d + p];
                    let vkq = v[k * d + q];
                    v[k * d + p] = c * vkp - s * vkq;
                    v[k * d + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let values = (0..d).map(|i| a[i * d + i]).collect();
    (values, v)
}

/// Factor `L` (row-major, `d x d`) with `L Lᵀ = Σ` for a symmetric PSD `Σ`.
/// Negative eigenvalues (rounding noise) are clamped to zero, so a
/// rank-deficient Σ maps standard normals into its column space only.
pub fn psd_sqrt_factor(cov: &[f64], d: usize) -> Vec<f64> {
    let (values, vectors) = symmetric_eigen(cov, d);
    let mut l = vec![0.0; d * d];
    for j in 0..d {
        let s = values[j].max(0.0).sqrt();
        if s == 0.0 {
            continue;
        }
        for i in 0..d {
            l[i * d + j] = vectors[i * d + j] * s;
        }
    }
    l
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(values: &[f64], v: &[f64], d: usize) -> Vec<f64> {
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = (0..d).map(|k| v[i * d + k] * values[k] * v[j * d + k]).sum();
            }
        }
        out
    }

    #[test]
    fn diagonal_is_exact() {
        let m = [1.0, 0.0, 0.0, 0.0];
        let (vals, vecs) = symmetric_eigen(&m, 2);
        assert_eq!(vals, vec![1.0, 0.0]);
        assert_eq!(vecs, vec![1.0, 0.0, 0.0, 1.0]);
        let l = psd_sqrt_factor(&m, 2);
        assert_eq!(l, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn reconstructs_dense_matrix() {
        let m = [4.0, 1.0, -2.0, 1.0, 3.0, 0.5, -2.0, 0.5, 5.0];
        let (vals, vecs) = symmetric_eigen(&m, 3);
        let r = reconstruct(&vals, &vecs, 3);
        for (x, y) in r.iter().zip(&m) {
            assert!((x - y).abs() < 1e-12);
        }
        let l = psd_sqrt_factor(&m, 3);
        for i in 0..3 {
            for j in 0..3 {
                let llt: f64 = (0..3).map(|k| l[i * 3 + k] * l[j * 3 + k]).sum();
                assert!((llt - m[i * 3 + j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rank_one() {
        // v vᵀ with v = (1, 2, 2)
        let v = [1.0, 2.0, 2.0];
        let m: Vec<f64> = (0..9).map(|k| v[k / 3] * v[k % 3]).collect();
        let (mut vals, _) = symmetric_eigen(&m, 3);
        vals.sort_by(f64::total_cmp);
        assert!(vals[0].abs() < 1e-12 && vals[1].abs() < 1e-12);
        assert!((vals[2] - 9.0).abs() < 1e-12);
    }
}
