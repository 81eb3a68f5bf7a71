use nalgebra::DMatrix;

/// The Obata operators of a metric at one point:
///
/// ```text
/// O^ij_kl  = (delta^i_k delta^j_l - g^ij g_kl) / 2
/// O*^ij_kl = (delta^i_k delta^j_l + g^ij g_kl) / 2
/// ```
///
/// They act on `(1,1)` tensors by `(O X)^i_j = O^ik_sj X^s_k`, which is
/// `(X - g^-1 X^T g) / 2`: `O` keeps the part whose lowered form is skew and
/// `O*` keeps the part whose lowered form is symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct ObataPair {
    dim: usize,
    o: Vec<f64>,
    o_star: Vec<f64>,
}

fn idx(n: usize, i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * n + j) * n + k) * n + l
}

fn apply(n: usize, t: &[f64], x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                for s in 0..n {
                    acc += t[idx(n, i, k, s, j)] * x[(s, k)];
                }
            }
            out[(i, j)] = acc;
        }
    }
    out
}

fn compose(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    // (A.B)^ik_sj = A^ip_qj B^qk_sp
    let mut out = vec![0.0; n * n * n * n];
    for i in 0..n {
        for k in 0..n {
            for s in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for p in 0..n {
                        for q in 0..n {
                            acc += a[idx(n, i, p, q, j)] * b[idx(n, q, k, s, p)];
                        }
                    }
                    out[idx(n, i, k, s, j)] = acc;
                }
            }
        }
    }
    out
}

impl ObataPair {
    /// Builds both operators from `g_ij` and its inverse `g^ij`.
    pub fn new(g: &DMatrix<f64>, g_inv: &DMatrix<f64>) -> Self {
        let n = g.nrows();
        let len = n * n * n * n;
        let mut o = vec![0.0; len];
        let mut o_star = vec![0.0; len];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let delta = if i == k && j == l { 1.0 } else { 0.0 };
                        let gg = g_inv[(i, j)] * g[(k, l)];
                        o[idx(n, i, j, k, l)] = 0.5 * (delta - gg);
                        o_star[idx(n, i, j, k, l)] = 0.5 * (delta + gg);
                    }
                }
            }
        }
        Self { dim: n, o, o_star }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `O^ij_kl`.
    pub fn o(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.o[idx(self.dim, i, j, k, l)]
    }

    /// `O*^ij_kl`.
    pub fn o_star(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.o_star[idx(self.dim, i, j, k, l)]
    }

    /// `(O X)^i_j = O^ik_sj X^s_k`.
    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        apply(self.dim, &self.o, x)
    }

    /// `(O* X)^i_j = O*^ik_sj X^s_k`.
    pub fn apply_star(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        apply(self.dim, &self.o_star, x)
    }

    /// Max deviation from the projector identities `O + O* = 1`, `O.O = O`,
    /// `O*.O* = O*`, `O.O* = 0` and `O*.O = 0`.
    pub fn projector_defect(&self) -> f64 {
        let n = self.dim;
        let oo = compose(n, &self.o, &self.o);
        let ss = compose(n, &self.o_star, &self.o_star);
        let os = compose(n, &self.o, &self.o_star);
        let so = compose(n, &self.o_star, &self.o);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let p = idx(n, i, j, k, l);
                        let delta = if i == k && j == l { 1.0 } else { 0.0 };
                        worst = worst
                            .max((self.o[p] + self.o_star[p] - delta).abs())
                            .max((oo[p] - self.o[p]).abs())
                            .max((ss[p] - self.o_star[p]).abs())
                            .max(os[p].abs())
                            .max(so[p].abs());
                    }
                }
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(g: DMatrix<f64>) -> ObataPair {
        let inv = g.clone().try_inverse().unwrap();
        ObataPair::new(&g, &inv)
    }

    #[test]
    fn one_dimensional_collapse() {
        let p = pair(DMatrix::from_element(1, 1, 3.7));
        assert!(p.o(0, 0, 0, 0).abs() < 1e-16);
        assert!((p.o_star(0, 0, 0, 0) - 1.0).abs() < 1e-16);
    }

    #[test]
    fn flat_plane_entries() {
        let p = pair(DMatrix::identity(2, 2));
        assert_eq!(p.o(0, 1, 0, 1), 0.5);
        assert_eq!(p.o(0, 1, 1, 0), 0.0);
        assert_eq!(p.o(0, 0, 0, 0), 0.0);
    }

    #[test]
    fn projector_identities_for_a_curved_metric() {
        let g = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, -0.1, 0.3, 1.5, 0.2, -0.1, 0.2, 3.0]);
        assert!(pair(g).projector_defect() < 1e-12);
    }

    #[test]
    fn action_splits_lowered_symmetric_and_skew_parts() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let p = pair(g.clone());
        let x = DMatrix::from_row_slice(2, 2, &[0.3, -1.2, 0.7, 2.0]);
        let lo = &g * p.apply(&x);
        let ls = &g * p.apply_star(&x);
        assert!((&lo + lo.transpose()).amax() < 1e-14);
        assert!((&ls - ls.transpose()).amax() < 1e-14);
        assert!((p.apply(&x) + p.apply_star(&x) - &x).amax() < 1e-14);
    }
}
