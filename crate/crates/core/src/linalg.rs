use crate::channel::ChannelMatrix;
use crate::{Complex, Real};

fn zero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

/// Singular values of `m` in descending order, via one-sided Jacobi
/// rotations on the columns of `m` (or of `m^H` when `m` is wide).
pub(crate) fn singular_values<T: Real>(m: &ChannelMatrix<T>) -> Vec<T> {
    let work = if m.rows() >= m.cols() {
        m.clone()
    } else {
        m.conj_transpose()
    };
    let (rows, cols) = work.shape();
    let mut a: Vec<Vec<Complex<T>>> = (0..cols).map(|c| work.column(c)).collect();
    let eps = T::epsilon();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha: T = a[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: T = a[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma = a[p]
                    .iter()
                    .zip(&a[q])
                    .fold(zero::<T>(), |acc, (x, y)| acc + x.conj() * y);
                let g = gamma.norm();
                if g == T::zero() || g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // rotate in the plane of columns p, q to zero their inner product
                let phase = gamma / g;
                let zeta = (beta - alpha) / (T::lit(2.0) * g);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for r in 0..rows {
                    let x = a[p][r];
                    let y = a[q][r];
                    a[p][r] = x * c - y * phase.conj() * s;
                    a[q][r] = x * phase * s + y * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<T> = a
        .iter()
        .map(|col| col.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt())
        .collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    sv.truncate(rows.min(cols));
    sv
}

/// Unit-norm dominant right singular vector by power iteration on `m^H m`.
pub(crate) fn dominant_right_singular_vector<T: Real>(m: &ChannelMatrix<T>) -> Vec<Complex<T>> {
    let n = m.cols();
    let mh = m.conj_transpose();
    let inv = T::one() / T::from_usize(n).unwrap().sqrt();
    let mut v = vec![Complex::new(inv, T::zero()); n];
    // start from the strongest row so a rank-1 matrix converges in one step
    if let Some(r) = (0..m.rows()).max_by(|&a, &b| {
        let na: T = m.row(a).iter().map(|z| z.norm_sqr()).sum();
        let nb: T = m.row(b).iter().map(|z| z.norm_sqr()).sum();
        na.partial_cmp(&nb).unwrap_or(std::cmp::Ordering::Equal)
    }) {
        let row: Vec<_> = m.row(r).iter().map(|z| z.conj()).collect();
        let norm = row.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if norm > T::zero() {
            v = row.into_iter().map(|z| z / norm).collect();
        }
    }
    for _ in 0..100 {
        let w = m.apply(&v).expect("conformable");
        let next = mh.apply(&w).expect("conformable");
        let norm = next.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if norm == T::zero() {
            break;
        }
        let next: Vec<_> = next.into_iter().map(|z| z / norm).collect();
        let overlap = next
            .iter()
            .zip(&v)
            .fold(zero::<T>(), |acc, (a, b)| acc + a.conj() * b)
            .norm();
        v = next;
        if T::one() - overlap < T::lit(1e3) * T::epsilon() {
            break;
        }
    }
    v
}
