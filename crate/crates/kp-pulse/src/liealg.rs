//! Lie-algebra structure for so(n)/su(n): brackets, the Killing form
//! computed from structure constants, the metric ⟨X,Y⟩ = −½·Re Tr(XY),
//! Cartan-decomposition verification and the Goh-condition span check.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matcore::{frob_norm, CMat};

/// Relative singular-value cutoff for all span/rank decisions.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algebra {
    So(usize),
    Su(usize),
}

impl Algebra {
    pub const SO3: Algebra = Algebra::So(3);
    pub const SU3: Algebra = Algebra::Su(3);

    pub fn n(&self) -> usize {
        match *self {
            Algebra::So(n) | Algebra::Su(n) => n,
        }
    }

    /// Dimension as a real Lie algebra.
    pub fn dim(&self) -> usize {
        match *self {
            Algebra::So(n) => n * (n - 1) / 2,
            Algebra::Su(n) => n * n - 1,
        }
    }

    pub fn is_real(&self) -> bool {
        matches!(self, Algebra::So(_))
    }
}

#[derive(Debug, Clone)]
pub struct AlgebraElement {
    pub algebra: Algebra,
    pub mat: CMat,
}

impl AlgebraElement {
    /// Wraps a matrix, checking the membership invariants at 1e-12.
    pub fn new(algebra: Algebra, mat: CMat) -> Result<Self> {
        let n = algebra.n();
        if mat.nrows() != n || mat.ncols() != n {
            return Err(Error::invalid(format!(
                "algebra element must be {n}x{n}, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let scale = frob_norm(&mat).max(1.0);
        if frob_norm(&(&mat + mat.adjoint())) > 1e-12 * scale {
            return Err(Error::invalid("algebra element must be skew-Hermitian"));
        }
        if algebra.is_real() && mat.iter().any(|z| z.im.abs() > 1e-12 * scale) {
            return Err(Error::invalid("so(n) element must be real"));
        }
        if !algebra.is_real() && mat.trace().norm() > 1e-12 * scale {
            return Err(Error::invalid("su(n) element must be traceless"));
        }
        Ok(AlgebraElement { algebra, mat })
    }

    pub fn zero(algebra: Algebra) -> Self {
        let n = algebra.n();
        AlgebraElement {
            algebra,
            mat: CMat::zeros(n, n),
        }
    }

    /// Same matrix under a different tag (so(n) embeds in su(n)).
    pub fn retag(&self, algebra: Algebra) -> Result<Self> {
        AlgebraElement::new(algebra, self.mat.clone())
    }
}

/// Commutator [X,Y] = XY − YX.
pub fn bracket(x: &AlgebraElement, y: &AlgebraElement) -> Result<AlgebraElement> {
    if x.algebra != y.algebra {
        return Err(Error::invalid("bracket: algebra tag mismatch"));
    }
    Ok(AlgebraElement {
        algebra: x.algebra,
        mat: &x.mat * &y.mat - &y.mat * &x.mat,
    })
}

/// ⟨X,Y⟩ = −½·Re Tr(XY), the metric on p.
pub fn metric_inner(x: &AlgebraElement, y: &AlgebraElement) -> f64 {
    -0.5 * (&x.mat * &y.mat).trace().re
}

/// Flattens a complex matrix into the real coordinate vector used by all
/// rank computations.
fn real_coords(m: &CMat) -> Vec<f64> {
    let mut v = Vec::with_capacity(2 * m.len());
    for z in m.iter() {
        v.push(z.re);
        v.push(z.im);
    }
    v
}

fn stack_columns(mats: &[CMat]) -> DMatrix<f64> {
    let rows = 2 * mats[0].len();
    let mut b = DMatrix::zeros(rows, mats.len());
    for (j, m) in mats.iter().enumerate() {
        for (i, v) in real_coords(m).into_iter().enumerate() {
            b[(i, j)] = v;
        }
    }
    b
}

fn rank(b: &DMatrix<f64>) -> usize {
    let svd = b.clone().svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    svd.singular_values
        .iter()
        .filter(|&&s| s > RANK_TOL * smax)
        .count()
}

/// Least-squares coordinate solver over a fixed basis.
struct BasisSolver {
    svd: nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>,
    dim: usize,
}

impl BasisSolver {
    fn new(basis: &[CMat]) -> Self {
        let b = stack_columns(basis);
        BasisSolver {
            svd: b.svd(true, true),
            dim: basis.len(),
        }
    }

    /// Coordinates of `m` in the basis, plus the residual norm.
    fn solve(&self, m: &CMat) -> (Vec<f64>, f64) {
        let rhs = DMatrix::from_column_slice(2 * m.len(), 1, &real_coords(m));
        let sol = self.svd.solve(&rhs, RANK_TOL).expect("svd solve");
        let recon = self.svd.clone().recompose().expect("svd recompose") * &sol;
        let resid = (recon - &rhs).norm();
        (sol.column(0).iter().cloned().collect(), resid)
    }

    fn spans(&self, algebra_dim: usize) -> bool {
        let smax = self
            .svd
            .singular_values
            .iter()
            .cloned()
            .fold(0.0, f64::max);
        let r = self
            .svd
            .singular_values
            .iter()
            .filter(|&&s| s > RANK_TOL * smax)
            .count();
        r == algebra_dim && self.dim >= algebra_dim
    }
}

/// Killing form Kil(X,Y) = Tr(ad_X ∘ ad_Y), with ad matrices expressed in
/// the supplied basis of the algebra.
pub fn killing(x: &AlgebraElement, y: &AlgebraElement, basis: &[AlgebraElement]) -> Result<f64> {
    if basis.is_empty() {
        return Err(Error::invalid("killing: empty basis"));
    }
    let alg = basis[0].algebra;
    if x.algebra != alg || y.algebra != alg || basis.iter().any(|b| b.algebra != alg) {
        return Err(Error::invalid("killing: algebra tag mismatch"));
    }
    let mats: Vec<CMat> = basis.iter().map(|b| b.mat.clone()).collect();
    let solver = BasisSolver::new(&mats);
    if !solver.spans(alg.dim()) {
        return Err(Error::invalid("killing: basis does not span the algebra"));
    }
    let d = basis.len();
    let ad_of = |v: &AlgebraElement| -> Result<DMatrix<f64>> {
        let mut ad = DMatrix::zeros(d, d);
        for (j, b) in basis.iter().enumerate() {
            let br = bracket(v, b)?;
            let (coords, resid) = solver.solve(&br.mat);
            if resid > 1e-8 * frob_norm(&br.mat).max(1.0) {
                return Err(Error::invalid("killing: bracket escapes the basis span"));
            }
            for (i, c) in coords.iter().enumerate() {
                ad[(i, j)] = *c;
            }
        }
        Ok(ad)
    };
    let ax = ad_of(x)?;
    let ay = ad_of(y)?;
    Ok((ax * ay).trace())
}

#[derive(Debug, Clone)]
pub struct CartanDecomposition {
    pub algebra: Algebra,
    pub p_basis: Vec<AlgebraElement>,
    pub k_basis: Vec<AlgebraElement>,
}

impl CartanDecomposition {
    pub fn full_basis(&self) -> Vec<AlgebraElement> {
        let mut v = self.p_basis.clone();
        v.extend(self.k_basis.clone());
        v
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CartanReport {
    pub kk_in_k: bool,
    pub pp_in_k: bool,
    pub kp_in_p: bool,
    pub pp_spans_k: bool,
    pub kp_spans_p: bool,
}

impl CartanReport {
    pub fn all_pass(&self) -> bool {
        self.kk_in_k && self.pp_in_k && self.kp_in_p && self.pp_spans_k && self.kp_spans_p
    }
}

/// Checks [k,k]⊆k, [p,p]⊆k, [k,p]⊆p and the equalities
/// span[p,p]=k, span[k,p]=p.
pub fn verify_cartan(d: &CartanDecomposition, tol: f64) -> CartanReport {
    let p_mats: Vec<CMat> = d.p_basis.iter().map(|e| e.mat.clone()).collect();
    let k_mats: Vec<CMat> = d.k_basis.iter().map(|e| e.mat.clone()).collect();
    let p_solver = BasisSolver::new(&p_mats);
    let k_solver = BasisSolver::new(&k_mats);

    let contained = |xs: &[AlgebraElement], ys: &[AlgebraElement], solver: &BasisSolver| {
        let mut brackets = Vec::new();
        let mut ok = true;
        for x in xs {
            for y in ys {
                let b = bracket(x, y).expect("same algebra");
                if frob_norm(&b.mat) > tol {
                    brackets.push(b.mat.clone());
                }
                let (_, resid) = solver.solve(&b.mat);
                if resid > tol * frob_norm(&b.mat).max(1.0) {
                    ok = false;
                }
            }
        }
        (ok, brackets)
    };

    let (kk_in_k, _) = contained(&d.k_basis, &d.k_basis, &k_solver);
    let (pp_in_k, pp_brackets) = contained(&d.p_basis, &d.p_basis, &k_solver);
    let (kp_in_p, kp_brackets) = contained(&d.k_basis, &d.p_basis, &p_solver);

    let pp_spans_k = !pp_brackets.is_empty() && rank(&stack_columns(&pp_brackets)) == k_mats.len();
    let kp_spans_p = !kp_brackets.is_empty() && rank(&stack_columns(&kp_brackets)) == p_mats.len();

    CartanReport {
        kk_in_k,
        pp_in_k,
        kp_in_p,
        pp_spans_k,
        kp_spans_p,
    }
}

/// Dimension of span(p_basis ∪ all pairwise brackets). Equals the algebra
/// dimension exactly when the Goh condition forces the abnormal covector to
/// vanish, ruling out strict abnormal extremals.
pub fn goh_span_dim(p_basis: &[AlgebraElement]) -> usize {
    let mut mats: Vec<CMat> = p_basis.iter().map(|e| e.mat.clone()).collect();
    for i in 0..p_basis.len() {
        for j in (i + 1)..p_basis.len() {
            mats.push(bracket(&p_basis[i], &p_basis[j]).expect("same algebra").mat);
        }
    }
    rank(&stack_columns(&mats))
}

// --- shipped generators -------------------------------------------------

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Off-diagonal coupling on levels (j, j+1): entry (j,j+1)=Ω, (j+1,j)=−Ω*.
pub fn n_mat(j: usize, omega: Complex64, n: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    m[(j - 1, j)] = omega;
    m[(j, j - 1)] = -omega.conj();
    m
}

/// The (1,3) coupling: entry (1,3)=z, (3,1)=−z*.
pub fn n13_mat(z: Complex64) -> CMat {
    let mut m = CMat::zeros(3, 3);
    m[(0, 2)] = z;
    m[(2, 0)] = -z.conj();
    m
}

pub fn x1(alg: Algebra) -> AlgebraElement {
    AlgebraElement::new(alg, n_mat(1, c(1.0, 0.0), 3)).unwrap()
}
pub fn x2(alg: Algebra) -> AlgebraElement {
    AlgebraElement::new(alg, n_mat(2, c(1.0, 0.0), 3)).unwrap()
}
pub fn x3(alg: Algebra) -> AlgebraElement {
    AlgebraElement::new(alg, n13_mat(c(1.0, 0.0))).unwrap()
}
pub fn y1() -> AlgebraElement {
    AlgebraElement::new(Algebra::SU3, n_mat(1, c(0.0, 1.0), 3)).unwrap()
}
pub fn y2() -> AlgebraElement {
    AlgebraElement::new(Algebra::SU3, n_mat(2, c(0.0, 1.0), 3)).unwrap()
}
pub fn z1() -> AlgebraElement {
    x3(Algebra::SU3)
}
pub fn z2() -> AlgebraElement {
    AlgebraElement::new(Algebra::SU3, n13_mat(c(0.0, 1.0))).unwrap()
}
pub fn z3() -> AlgebraElement {
    let mut m = CMat::zeros(3, 3);
    m[(0, 0)] = c(0.0, 1.0);
    m[(1, 1)] = c(0.0, -1.0);
    AlgebraElement::new(Algebra::SU3, m).unwrap()
}
pub fn z4() -> AlgebraElement {
    let mut m = CMat::zeros(3, 3);
    m[(1, 1)] = c(0.0, 1.0);
    m[(2, 2)] = c(0.0, -1.0);
    AlgebraElement::new(Algebra::SU3, m).unwrap()
}

/// so(3) with p = {X₁, X₂}, k = {X₃}.
pub fn so3_decomposition() -> CartanDecomposition {
    CartanDecomposition {
        algebra: Algebra::SO3,
        p_basis: vec![x1(Algebra::SO3), x2(Algebra::SO3)],
        k_basis: vec![x3(Algebra::SO3)],
    }
}

/// su(3) with p = {X₁, X₂, Y₁, Y₂}, k = {Z₁, Z₂, Z₃, Z₄}.
pub fn su3_decomposition() -> CartanDecomposition {
    CartanDecomposition {
        algebra: Algebra::SU3,
        p_basis: vec![x1(Algebra::SU3), x2(Algebra::SU3), y1(), y2()],
        k_basis: vec![z1(), z2(), z3(), z4()],
    }
}

/// Measured ratio Kil(X,Y) / Tr(XY) across all basis pairs with a nonzero
/// trace form, or an error if the ratio is not constant to `tol`.
pub fn killing_trace_ratio(d: &CartanDecomposition, tol: f64) -> Result<f64> {
    let basis = d.full_basis();
    let mut ratio: Option<f64> = None;
    for i in 0..basis.len() {
        for j in i..basis.len() {
            let tr = (&basis[i].mat * &basis[j].mat).trace().re;
            if tr.abs() < 1e-12 {
                continue;
            }
            let k = killing(&basis[i], &basis[j], &basis)?;
            let r = k / tr;
            match ratio {
                None => ratio = Some(r),
                Some(r0) if (r - r0).abs() > tol => {
                    return Err(Error::invalid(format!(
                        "killing/trace ratio not constant: {r0} vs {r}"
                    )))
                }
                _ => {}
            }
        }
    }
    ratio.ok_or_else(|| Error::invalid("no basis pair with nonzero trace form"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::frob_dist;
    use proptest::prelude::*;

    #[test]
    fn bracket_so3_generators() {
        let (a, b, x3e) = (x1(Algebra::SO3), x2(Algebra::SO3), x3(Algebra::SO3));
        assert!(frob_dist(&bracket(&a, &b).unwrap().mat, &x3e.mat) < 1e-14);
        assert!(frob_norm(&bracket(&a, &a).unwrap().mat) < 1e-14);
        let minus_x2 = &b.mat * c(-1.0, 0.0);
        assert!(frob_dist(&bracket(&a, &x3e).unwrap().mat, &minus_x2) < 1e-14);
    }

    #[test]
    fn bracket_tag_mismatch_errors() {
        assert!(bracket(&x1(Algebra::SO3), &x2(Algebra::SU3)).is_err());
    }

    #[test]
    fn killing_so3_values() {
        let basis = so3_decomposition().full_basis();
        let a = x1(Algebra::SO3);
        let b = x2(Algebra::SO3);
        assert!((killing(&a, &a, &basis).unwrap() - (-2.0)).abs() < 1e-12);
        assert!(killing(&a, &b, &basis).unwrap().abs() < 1e-12);
        let zero = AlgebraElement::zero(Algebra::SO3);
        assert!(killing(&zero, &b, &basis).unwrap().abs() < 1e-14);
    }

    #[test]
    fn killing_rejects_non_spanning_basis() {
        let short = vec![x1(Algebra::SO3), x2(Algebra::SO3)];
        assert!(killing(&x1(Algebra::SO3), &x2(Algebra::SO3), &short).is_err());
    }

    #[test]
    fn metric_values() {
        assert!((metric_inner(&x1(Algebra::SO3), &x1(Algebra::SO3)) - 1.0).abs() < 1e-14);
        assert!(metric_inner(&x1(Algebra::SO3), &x2(Algebra::SO3)).abs() < 1e-14);
        assert!((metric_inner(&y1(), &y1()) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn shipped_p_bases_orthonormal() {
        for d in [so3_decomposition(), su3_decomposition()] {
            for (i, a) in d.p_basis.iter().enumerate() {
                for (j, b) in d.p_basis.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((metric_inner(a, b) - expect).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn verify_cartan_shipped() {
        for d in [so3_decomposition(), su3_decomposition()] {
            let r = verify_cartan(&d, 1e-12);
            assert!(r.all_pass(), "{r:?}");
        }
    }

    #[test]
    fn verify_cartan_swapped_fails() {
        let d = so3_decomposition();
        let swapped = CartanDecomposition {
            algebra: d.algebra,
            p_basis: d.k_basis,
            k_basis: d.p_basis,
        };
        let r = verify_cartan(&swapped, 1e-12);
        assert!(!r.all_pass());
        assert!(!r.kp_spans_p);
    }

    #[test]
    fn goh_span_dims() {
        assert_eq!(goh_span_dim(&so3_decomposition().p_basis), 3);
        assert_eq!(goh_span_dim(&su3_decomposition().p_basis), 8);
        assert_eq!(goh_span_dim(&[x1(Algebra::SO3)]), 1);
    }

    #[test]
    fn su3_killing_ratio_constant() {
        // Kil = 2n·Tr on su(n): the measured constant is 6
        let r = killing_trace_ratio(&su3_decomposition(), 1e-10).unwrap();
        assert!((r - 6.0).abs() < 1e-10, "su(3) ratio {r}");
        let r_so3 = killing_trace_ratio(&so3_decomposition(), 1e-10).unwrap();
        assert!((r_so3 - 1.0).abs() < 1e-10);
    }

    fn random_element(alg: Algebra, seed: &[f64]) -> AlgebraElement {
        let basis = match alg {
            Algebra::SO3 => so3_decomposition().full_basis(),
            Algebra::SU3 => su3_decomposition().full_basis(),
            _ => unreachable!(),
        };
        let mut m = CMat::zeros(3, 3);
        for (w, b) in seed.iter().zip(basis.iter()) {
            m += &b.mat * c(*w, 0.0);
        }
        AlgebraElement::new(alg, m).unwrap()
    }

    proptest! {
        #[test]
        fn jacobi_identity(seed in proptest::collection::vec(-2.0f64..2.0, 24)) {
            let x = random_element(Algebra::SU3, &seed[0..8]);
            let y = random_element(Algebra::SU3, &seed[8..16]);
            let z = random_element(Algebra::SU3, &seed[16..24]);
            let s = bracket(&x, &bracket(&y, &z).unwrap()).unwrap().mat
                + bracket(&y, &bracket(&z, &x).unwrap()).unwrap().mat
                + bracket(&z, &bracket(&x, &y).unwrap()).unwrap().mat;
            prop_assert!(frob_norm(&s) < 1e-12 * 100.0);
        }

        #[test]
        fn killing_invariance(seed in proptest::collection::vec(-2.0f64..2.0, 24)) {
            let basis = su3_decomposition().full_basis();
            let x = random_element(Algebra::SU3, &seed[0..8]);
            let y = random_element(Algebra::SU3, &seed[8..16]);
            let z = random_element(Algebra::SU3, &seed[16..24]);
            let lhs = killing(&bracket(&x, &y).unwrap(), &z, &basis).unwrap();
            let rhs = killing(&x, &bracket(&y, &z).unwrap(), &basis).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10 * 1e3);
        }
    }
}
