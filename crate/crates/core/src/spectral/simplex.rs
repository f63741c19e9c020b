use nalgebra::DVector;

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &DVector<f64>) -> DVector<f64> {
    let n = v.len();
    if n == 0 {
        return v.clone();
    }
    let mut u: Vec<f64> = v.iter().copied().collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.map(|x| (x - theta).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &DVector<f64>, b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn feasible_point_is_unchanged() {
        assert!(close(
            &project_simplex(&DVector::from_vec(vec![0.2, 0.3, 0.5])),
            &[0.2, 0.3, 0.5]
        ));
    }

    #[test]
    fn symmetric_excess_is_split() {
        assert!(close(
            &project_simplex(&DVector::from_vec(vec![0.6, 0.6])),
            &[0.5, 0.5]
        ));
    }

    #[test]
    fn negative_coordinate_is_thresholded() {
        assert!(close(
            &project_simplex(&DVector::from_vec(vec![1.2, -0.2])),
            &[1.0, 0.0]
        ));
    }
}
