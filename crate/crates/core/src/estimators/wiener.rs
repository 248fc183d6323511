use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::CsiMatrix;
use crate::dataset::CsiDataset;
use crate::error::{Error, Result};

/// How a fitted filter is applied to a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WienerVariant {
    /// One filter per antenna, fitted on the whole training set.
    #[default]
    Global,
    /// Per-point filters: the training sample most correlated with the query
    /// supplies the single-sample LMMSE filter that is applied to it.
    Matched,
}

/// Fitted Wiener / LMMSE filter.
///
/// Filters are independent per antenna. For antenna `a` with uplink row
/// `u` and downlink row `v` (column vectors over subcarriers) the model keeps
/// `R = E[u u^H]`, `R_x = E[u v^H]` and `C = (R + σ² I)^{-1} R_x`, and predicts
/// `v̂ = C^H u`. `sigma2` is the complex noise variance per entry.
#[derive(Debug, Clone)]
pub struct WienerModel {
    variant: WienerVariant,
    sigma2: f64,
    antennas: usize,
    subcarriers: usize,
    r_ul_ul: Vec<DMatrix<Complex64>>,
    r_cross: Vec<DMatrix<Complex64>>,
    coeffs: Vec<DMatrix<Complex64>>,
    // row-major C^H per antenna, for the prediction inner loop
    coeffs_h: Vec<Vec<Complex64>>,
    train_ul: Vec<CsiMatrix>,
    train_dl: Vec<CsiMatrix>,
    train_norms: Vec<f64>,
}

/// Relative score window inside which matched candidates count as tied.
const TIE_TOLERANCE: f64 = 1e-9;

/// Fits a filter on the (uplink, downlink) pairs of `train`.
pub fn wiener_fit(train: &CsiDataset, sigma2: f64, variant: WienerVariant) -> Result<WienerModel> {
    wiener_fit_pairs(&train.uplink(), &train.downlink(), sigma2, variant)
}

/// Applies `model` to one uplink observation.
pub fn wiener_predict(model: &WienerModel, h_ul: &CsiMatrix) -> Result<CsiMatrix> {
    model.predict(h_ul)
}

/// Fits a filter on explicit pairs. See [`wiener_fit`].
pub fn wiener_fit_pairs(
    ul: &[CsiMatrix],
    dl: &[CsiMatrix],
    sigma2: f64,
    variant: WienerVariant,
) -> Result<WienerModel> {
    if ul.is_empty() {
        return Err(Error::domain("training set is empty"));
    }
    if ul.len() != dl.len() {
        return Err(Error::shape(format!("{} labels", ul.len()), format!("{} labels", dl.len())));
    }
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(Error::domain(format!("noise variance must be finite and >= 0, got {sigma2}")));
    }
    let (m, n) = ul[0].dims();
    for h in ul.iter().chain(dl) {
        h.ensure_dims(m, n)?;
    }
    let count = ul.len();
    let scale = 1.0 / count as f64;

    let mut r_ul_ul = Vec::with_capacity(m);
    let mut r_cross = Vec::with_capacity(m);
    let mut coeffs = Vec::with_capacity(m);
    let mut coeffs_h = Vec::with_capacity(m);
    for a in 0..m {
        let u: Vec<Complex64> = ul.iter().flat_map(|h| h.row(a).iter().copied()).collect();
        let v: Vec<Complex64> = dl.iter().flat_map(|h| h.row(a).iter().copied()).collect();
        let r = DMatrix::from_row_slice(n, n, &gram(&u, &u, count, n, scale));
        let rx = DMatrix::from_row_slice(n, n, &gram(&u, &v, count, n, scale));
        let c = regularized_solve(&r, &rx, sigma2).map_err(|detail| {
            Error::Numerical(format!("antenna {a}: R + σ²I is singular ({detail}), sigma2 = {sigma2}"))
        })?;
        let ch = c.adjoint();
        coeffs_h.push((0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| ch[(i, j)]).collect());
        r_ul_ul.push(r);
        r_cross.push(rx);
        coeffs.push(c);
    }

    let (train_ul, train_dl, train_norms) = match variant {
        WienerVariant::Global => (Vec::new(), Vec::new(), Vec::new()),
        WienerVariant::Matched => (ul.to_vec(), dl.to_vec(), ul.iter().map(CsiMatrix::norm).collect()),
    };
    Ok(WienerModel {
        variant,
        sigma2,
        antennas: m,
        subcarriers: n,
        r_ul_ul,
        r_cross,
        coeffs,
        coeffs_h,
        train_ul,
        train_dl,
        train_norms,
    })
}

/// `U^T conj(V) * scale` for row-major `rows x n` blocks, as an `n x n`
/// row-major matrix.
fn gram(u: &[Complex64], v: &[Complex64], rows: usize, n: usize, scale: f64) -> Vec<Complex64> {
    let v_conj: Vec<[f64; 2]> = v.iter().map(|z| [z.re, -z.im]).collect();
    let u: Vec<[f64; 2]> = u.iter().map(|z| [z.re, z.im]).collect();
    let mut out = vec![[0.0f64; 2]; n * n];
    // SAFETY: the strides describe in-bounds views of `u` (n x rows, column
    // stride n), `v_conj` (rows x n) and `out` (n x n).
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            n,
            rows,
            n,
            [scale, 0.0],
            u.as_ptr(),
            1,
            n as isize,
            v_conj.as_ptr(),
            n as isize,
            1,
            [0.0, 0.0],
            out.as_mut_ptr(),
            n as isize,
            1,
        );
    }
    out.into_iter().map(|[re, im]| Complex64::new(re, im)).collect()
}

fn regularized_solve(
    r: &DMatrix<Complex64>,
    rhs: &DMatrix<Complex64>,
    sigma2: f64,
) -> std::result::Result<DMatrix<Complex64>, String> {
    let n = r.nrows();
    let mut a = r.clone();
    for i in 0..n {
        a[(i, i)] += sigma2;
    }
    let max_diag = (0..n).map(|i| a[(i, i)].re).fold(0.0, f64::max);
    if max_diag <= 0.0 {
        return Err("zero matrix".into());
    }
    let solution = match a.clone().cholesky() {
        Some(ch) => {
            let l = ch.l_dirty();
            let min_pivot = (0..n).map(|i| l[(i, i)].re.powi(2)).fold(f64::INFINITY, f64::min);
            if min_pivot < 1e-13 * max_diag {
                return Err(format!("pivot {min_pivot:.3e} against diagonal {max_diag:.3e}"));
            }
            ch.solve(rhs)
        }
        None => a.lu().solve(rhs).ok_or_else(|| "LU factorization failed".to_string())?,
    };
    if solution.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(solution)
    } else {
        Err("non-finite coefficients".into())
    }
}

impl WienerModel {
    pub fn variant(&self) -> WienerVariant {
        self.variant
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn r_ul_ul(&self, antenna: usize) -> &DMatrix<Complex64> {
        &self.r_ul_ul[antenna]
    }

    pub fn r_cross(&self, antenna: usize) -> &DMatrix<Complex64> {
        &self.r_cross[antenna]
    }

    pub fn coeffs(&self, antenna: usize) -> &DMatrix<Complex64> {
        &self.coeffs[antenna]
    }

    /// Number of stored training pairs (matched variant only).
    pub fn stored_samples(&self) -> usize {
        self.train_ul.len()
    }

    pub fn predict(&self, h_ul: &CsiMatrix) -> Result<CsiMatrix> {
        h_ul.ensure_dims(self.antennas, self.subcarriers)?;
        match self.variant {
            WienerVariant::Global => Ok(self.predict_global(h_ul)),
            WienerVariant::Matched => Ok(self.predict_matched(h_ul)),
        }
    }

    /// Predicts a batch in parallel.
    pub fn predict_batch(&self, h_ul: &[CsiMatrix]) -> Result<Vec<CsiMatrix>> {
        h_ul.par_iter().map(|h| self.predict(h)).collect()
    }

    fn predict_global(&self, h_ul: &CsiMatrix) -> CsiMatrix {
        let n = self.subcarriers;
        let mut out = CsiMatrix::zeros(self.antennas, n);
        for a in 0..self.antennas {
            let q = h_ul.row(a);
            let ch = &self.coeffs_h[a];
            for (j, o) in out.row_mut(a).iter_mut().enumerate() {
                *o = ch[j * n..(j + 1) * n].iter().zip(q).map(|(c, x)| c * x).sum();
            }
        }
        out
    }

    /// Index of the stored uplink sample most correlated with `query`.
    /// Returns `None` for a zero query.
    pub fn matched_index(&self, query: &CsiMatrix) -> Option<usize> {
        let qn = query.norm();
        if qn == 0.0 || self.train_ul.is_empty() {
            return None;
        }
        let scores: Vec<f64> = self
            .train_ul
            .par_iter()
            .zip(&self.train_norms)
            .map(|(h, &hn)| if hn > 0.0 { h.inner(query).norm() / (hn * qn) } else { 0.0 })
            .collect();
        let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let distance = |i: usize| {
            self.train_ul[i]
                .as_slice()
                .iter()
                .zip(query.as_slice())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
        };
        scores
            .iter()
            .enumerate()
            .filter(|(_, &s)| s >= best - TIE_TOLERANCE)
            .map(|(i, _)| (i, distance(i)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .map(|(i, _)| i)
    }

    fn predict_matched(&self, h_ul: &CsiMatrix) -> CsiMatrix {
        let mut out = CsiMatrix::zeros(self.antennas, self.subcarriers);
        let Some(s) = self.matched_index(h_ul) else {
            return out;
        };
        // Single-sample LMMSE filter (h h^H + σ²I)^{-1} h g^H, applied in
        // closed form: ĝ = g · (h^H q) / (‖h‖² + σ²).
        let (ul, dl) = (&self.train_ul[s], &self.train_dl[s]);
        for a in 0..self.antennas {
            let h = ul.row(a);
            let energy: f64 = h.iter().map(|z| z.norm_sqr()).sum();
            let denom = energy + self.sigma2;
            if denom == 0.0 {
                continue;
            }
            let proj: Complex64 = h.iter().zip(h_ul.row(a)).map(|(x, q)| x.conj() * q).sum::<Complex64>() / denom;
            for (o, g) in out.row_mut(a).iter_mut().zip(dl.row(a)) {
                *o = g * proj;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn cn<R: Rng>(rng: &mut R) -> Complex64 {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    fn random_csi<R: Rng>(rng: &mut R, m: usize, n: usize) -> CsiMatrix {
        CsiMatrix::from_vec(m, n, (0..m * n).map(|_| cn(rng)).collect()).unwrap()
    }

    fn rel_err(a: &CsiMatrix, b: &CsiMatrix) -> f64 {
        a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt() / b.norm()
    }

    #[test]
    fn identity_mapping_is_reproduced() {
        let mut rng = rng_from_seed(1);
        let ul: Vec<CsiMatrix> = (0..100).map(|_| random_csi(&mut rng, 2, 8)).collect();
        for variant in [WienerVariant::Global, WienerVariant::Matched] {
            let model = wiener_fit_pairs(&ul, &ul, 0.0, variant).unwrap();
            for h in &ul[..20] {
                assert!(rel_err(&model.predict(h).unwrap(), h) <= 1e-6);
            }
        }
    }

    #[test]
    fn scalar_coefficient_matches_closed_form() {
        let mut rng = rng_from_seed(2);
        let rho = Complex64::from_polar(0.6, 0.7);
        let sigma2 = 0.3;
        let n = 100_000;
        let mut ul = Vec::with_capacity(n);
        let mut dl = Vec::with_capacity(n);
        for _ in 0..n {
            let u = cn(&mut rng);
            let d = rho * u + (1.0 - rho.norm_sqr()).sqrt() * cn(&mut rng);
            ul.push(CsiMatrix::scalar(u));
            dl.push(CsiMatrix::scalar(d));
        }
        let model = wiener_fit_pairs(&ul, &dl, sigma2, WienerVariant::Global).unwrap();
        let fitted = model.coeffs(0)[(0, 0)];
        // population value: E[u conj(d)] / (E|u|² + σ²)
        let truth = rho.conj() / (1.0 + sigma2);
        // delta-method standard error of the ratio estimator
        let pu: f64 = ul.iter().map(|h| h.as_slice()[0].norm_sqr()).sum::<f64>() / n as f64;
        let resid: Vec<Complex64> = ul
            .iter()
            .zip(&dl)
            .map(|(u, d)| {
                let (u, d) = (u.as_slice()[0], d.as_slice()[0]);
                u * d.conj() - fitted * u.norm_sqr()
            })
            .collect();
        let var = resid.iter().map(|r| r.norm_sqr()).sum::<f64>() / n as f64;
        let se = (var / n as f64).sqrt() / (pu + sigma2);
        assert!((fitted - truth).norm() < 3.0 * se, "{fitted} vs {truth}, se {se}");
    }

    #[test]
    fn huge_noise_shrinks_to_zero() {
        let mut rng = rng_from_seed(3);
        let ul: Vec<CsiMatrix> = (0..50).map(|_| random_csi(&mut rng, 1, 4)).collect();
        let model = wiener_fit_pairs(&ul, &ul, 1e12, WienerVariant::Global).unwrap();
        assert!(model.coeffs(0).iter().all(|c| c.norm() < 1e-10));
        assert!(model.predict(&ul[0]).unwrap().norm() < 1e-10);
    }

    #[test]
    fn global_filter_is_linear_and_maps_zero_to_zero() {
        let mut rng = rng_from_seed(4);
        let ul: Vec<CsiMatrix> = (0..200).map(|_| random_csi(&mut rng, 2, 6)).collect();
        let dl: Vec<CsiMatrix> = (0..200).map(|_| random_csi(&mut rng, 2, 6)).collect();
        for variant in [WienerVariant::Global, WienerVariant::Matched] {
            let model = wiener_fit_pairs(&ul, &dl, 0.1, variant).unwrap();
            assert_eq!(model.predict(&CsiMatrix::zeros(2, 6)).unwrap().norm(), 0.0);
        }
        let model = wiener_fit_pairs(&ul, &dl, 0.1, WienerVariant::Global).unwrap();
        let (x, y) = (random_csi(&mut rng, 2, 6), random_csi(&mut rng, 2, 6));
        let (alpha, beta) = (Complex64::new(0.3, -1.2), Complex64::new(-2.0, 0.5));
        let combo = CsiMatrix::from_vec(
            2,
            6,
            x.as_slice().iter().zip(y.as_slice()).map(|(a, b)| alpha * a + beta * b).collect(),
        )
        .unwrap();
        let (px, py) = (model.predict(&x).unwrap(), model.predict(&y).unwrap());
        let lhs = model.predict(&combo).unwrap();
        for ((l, a), b) in lhs.as_slice().iter().zip(px.as_slice()).zip(py.as_slice()) {
            assert!((l - (alpha * a + beta * b)).norm() < 1e-12);
        }
    }

    #[test]
    fn matched_ties_break_on_distance() {
        // Scalars all have normalized correlation 1 with any query.
        let ul: Vec<CsiMatrix> = [1.0, 2.0, 3.0].iter().map(|&v| CsiMatrix::scalar(Complex64::new(v, 0.0))).collect();
        let dl: Vec<CsiMatrix> = [10.0, 20.0, 30.0].iter().map(|&v| CsiMatrix::scalar(Complex64::new(0.0, v))).collect();
        let model = wiener_fit_pairs(&ul, &dl, 0.0, WienerVariant::Matched).unwrap();
        assert_eq!(model.matched_index(&CsiMatrix::scalar(Complex64::new(2.2, 0.1))), Some(1));
        let pred = model.predict(&CsiMatrix::scalar(Complex64::new(2.2, 0.0))).unwrap();
        assert!((pred.as_slice()[0] - Complex64::new(0.0, 22.0)).norm() < 1e-12);
    }

    #[test]
    fn singular_and_mismatched_inputs() {
        let zeros = vec![CsiMatrix::zeros(1, 3); 10];
        assert!(matches!(
            wiener_fit_pairs(&zeros, &zeros, 0.0, WienerVariant::Global),
            Err(Error::Numerical(_))
        ));
        // rank one covariance in three dimensions
        let one = vec![CsiMatrix::from_vec(1, 3, vec![Complex64::new(1.0, 0.0); 3]).unwrap(); 10];
        assert!(matches!(wiener_fit_pairs(&one, &one, 0.0, WienerVariant::Global), Err(Error::Numerical(_))));
        assert!(wiener_fit_pairs(&one, &one, 1e-3, WienerVariant::Global).is_ok());

        let model = wiener_fit_pairs(&one, &one, 1e-3, WienerVariant::Global).unwrap();
        assert!(matches!(model.predict(&CsiMatrix::zeros(1, 4)), Err(Error::Shape { .. })));
        assert!(wiener_fit_pairs(&[], &[], 0.0, WienerVariant::Global).is_err());
        assert!(wiener_fit_pairs(&one, &one, -1.0, WienerVariant::Global).is_err());
    }

    #[test]
    fn beats_any_scalar_multiplier() {
        let mut rng = rng_from_seed(5);
        let n = 100_000;
        let mix = [Complex64::new(0.8, 0.3), Complex64::new(-0.4, 0.5)];
        let mut ul = Vec::with_capacity(n);
        let mut dl = Vec::with_capacity(n);
        for _ in 0..n {
            let u = random_csi(&mut rng, 1, 2);
            let s = u.as_slice();
            let d = vec![
                mix[0] * s[0] + mix[1] * s[1] + 0.3 * cn(&mut rng),
                mix[1] * s[0] - mix[0] * s[1] + 0.3 * cn(&mut rng),
            ];
            ul.push(u);
            dl.push(CsiMatrix::from_vec(1, 2, d).unwrap());
        }
        let model = wiener_fit_pairs(&ul, &dl, 0.0, WienerVariant::Global).unwrap();
        let mse = |pred: &dyn Fn(&CsiMatrix) -> CsiMatrix| {
            ul.iter()
                .zip(&dl)
                .map(|(u, d)| {
                    let p = pred(u);
                    p.as_slice().iter().zip(d.as_slice()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>()
                })
                .sum::<f64>()
        };
        let wiener = mse(&|u| model.predict(u).unwrap());
        for alpha in [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), mix[0], mix[1], Complex64::new(0.4, 0.4)] {
            assert!(wiener <= mse(&|u| u.scaled(alpha)), "{alpha}");
        }
    }
}
