//! Hodge Laplacians and the orthogonal decomposition of edge flows.
//!
//! Unnormalized mode splits a flow into `im(B1ᵀ)`, `im(B2)` and the kernel of
//! `L1 = B1ᵀB1 + B2B2ᵀ`. Normalized mode uses the random-walk Laplacian
//! `L1ʳʷ = D2·B1ᵀ·D1⁻¹·B1 + B2·D3·B2ᵀ·D2⁻¹`; under the standard inner product
//! the gradient and curl spaces become `im(D2^{1/2}B1ᵀ)` and `im(D2^{-1/2}B2)`,
//! which stay orthogonal because `B1·B2 = 0`, and the harmonic space is the
//! kernel of the symmetrized form `D2^{-1/2}·L1ʳʷ·D2^{1/2}`.

use nalgebra::DMatrix;

use crate::complex::{EdgeFlow, OrientedComplex};
use crate::error::{Error, Result};
use crate::linalg::{
    self, conjugate_gradient, lanczos_largest, lsqr, symmetric_eigen, HouseholderQr, LanczosOptions,
    LsqrOptions,
};
use crate::scalar::Real;
use crate::sparse::CscMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    Unnormalized,
    #[default]
    Normalized,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Unnormalized => "unnormalized",
            Mode::Normalized => "normalized",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unnormalized" => Ok(Mode::Unnormalized),
            "normalized" => Ok(Mode::Normalized),
            other => Err(Error::InvalidArgument(format!("unknown mode `{other}`"))),
        }
    }
}

/// Diagonals of the degree matrices of the random-walk normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationDegrees<T> {
    /// `2·|B1|·D2·1`; vertices without edges get 1 (their `B1` row is zero).
    pub d1: Vec<T>,
    /// `max(#incident triangles, 1)` per edge.
    pub d2: Vec<T>,
    /// `1/3` per triangle.
    pub d3: Vec<T>,
}

impl<T: Real> NormalizationDegrees<T> {
    pub fn new(complex: &OrientedComplex) -> Self {
        let d2: Vec<T> = complex
            .edge_triangle_degrees()
            .into_iter()
            .map(|deg| T::from_count(deg.max(1)))
            .collect();
        let mut d1 = vec![T::zero(); complex.n0()];
        for (e, &(i, j)) in complex.edges().iter().enumerate() {
            d1[i] += d2[e];
            d1[j] += d2[e];
        }
        let two = T::lit(2.0);
        for v in d1.iter_mut() {
            *v = if *v == T::zero() { T::one() } else { two * *v };
        }
        let d3 = vec![T::one() / T::lit(3.0); complex.n2()];
        Self { d1, d2, d3 }
    }

    pub fn d2_sqrt(&self) -> Vec<T> {
        self.d2.iter().map(|v| v.sqrt()).collect()
    }

    pub fn d2_inv_sqrt(&self) -> Vec<T> {
        self.d2.iter().map(|v| T::one() / v.sqrt()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaplacianKind {
    Unnormalized,
    RandomWalk,
    Symmetrized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HodgeLaplacian<T> {
    pub kind: LaplacianKind,
    pub matrix: CscMatrix<T>,
    pub degrees: Option<NormalizationDegrees<T>>,
}

impl<T: Real> HodgeLaplacian<T> {
    /// Similar symmetric form `D2^{-1/2}·L·D2^{1/2}` of a random-walk
    /// Laplacian; other kinds are returned unchanged.
    pub fn symmetrized(&self) -> Self {
        match (&self.kind, &self.degrees) {
            (LaplacianKind::RandomWalk, Some(deg)) => {
                let m = self
                    .matrix
                    .scale(Some(&deg.d2_inv_sqrt()), Some(&deg.d2_sqrt()));
                Self {
                    kind: LaplacianKind::Symmetrized,
                    matrix: symmetrize_rounding(&m),
                    degrees: self.degrees.clone(),
                }
            }
            _ => self.clone(),
        }
    }

    /// Coordinate `(row, col, value)` lines, one stored entry per line.
    pub fn to_triplet_text(&self) -> String {
        let mut out = String::new();
        for (r, c, v) in self.matrix.triplets() {
            out.push_str(&format!("{r} {c} {v}\n"));
        }
        out
    }
}

/// Average `M` with its transpose to remove rounding asymmetry.
fn symmetrize_rounding<T: Real>(m: &CscMatrix<T>) -> CscMatrix<T> {
    let half = T::lit(0.5);
    m.add(&m.transpose()).map(|v| v * half)
}

fn real_boundaries<T: Real>(complex: &OrientedComplex) -> (CscMatrix<T>, CscMatrix<T>) {
    (
        complex.b1().map(|v| T::lit(v as f64)),
        complex.b2().map(|v| T::lit(v as f64)),
    )
}

/// Graph Laplacian `B1·B1ᵀ` (node indexed).
pub fn laplacian_l0<T: Real>(complex: &OrientedComplex) -> HodgeLaplacian<T> {
    let (b1, _) = real_boundaries::<T>(complex);
    HodgeLaplacian {
        kind: LaplacianKind::Unnormalized,
        matrix: b1.matmul(&b1.transpose()),
        degrees: None,
    }
}

/// Hodge 1-Laplacian `B1ᵀ·B1 + B2·B2ᵀ`.
pub fn laplacian_l1<T: Real>(complex: &OrientedComplex) -> HodgeLaplacian<T> {
    let (b1, b2) = real_boundaries::<T>(complex);
    let down = b1.transpose().matmul(&b1);
    let up = b2.matmul(&b2.transpose());
    HodgeLaplacian {
        kind: LaplacianKind::Unnormalized,
        matrix: down.add(&up),
        degrees: None,
    }
}

/// Random-walk normalized 1-Laplacian `D2·B1ᵀ·D1⁻¹·B1 + B2·D3·B2ᵀ·D2⁻¹`.
pub fn laplacian_l1_rw<T: Real>(complex: &OrientedComplex) -> HodgeLaplacian<T> {
    let deg = NormalizationDegrees::<T>::new(complex);
    let (b1, b2) = real_boundaries::<T>(complex);
    let d1_inv: Vec<T> = deg.d1.iter().map(|&v| T::one() / v).collect();
    let d2_inv: Vec<T> = deg.d2.iter().map(|&v| T::one() / v).collect();
    let down = b1
        .transpose()
        .scale(Some(&deg.d2), Some(&d1_inv))
        .matmul(&b1);
    let up = b2
        .scale(None, Some(&deg.d3))
        .matmul(&b2.transpose().scale(None, Some(&d2_inv)));
    HodgeLaplacian {
        kind: LaplacianKind::RandomWalk,
        matrix: down.add(&up),
        degrees: Some(deg),
    }
}

/// Operator whose kernel is the harmonic space of `mode`.
pub fn harmonic_operator<T: Real>(complex: &OrientedComplex, mode: Mode) -> HodgeLaplacian<T> {
    match mode {
        Mode::Unnormalized => laplacian_l1(complex),
        Mode::Normalized => laplacian_l1_rw(complex).symmetrized(),
    }
}

/// Generators of the gradient space (`n1 × n0`) and curl space (`n1 × n2`) of
/// a mode.
pub fn image_generators<T: Real>(
    complex: &OrientedComplex,
    mode: Mode,
) -> (CscMatrix<T>, CscMatrix<T>) {
    let (b1, b2) = real_boundaries::<T>(complex);
    let grad = b1.transpose();
    match mode {
        Mode::Unnormalized => (grad, b2),
        Mode::Normalized => {
            let deg = NormalizationDegrees::<T>::new(complex);
            (
                grad.scale(Some(&deg.d2_sqrt()), None),
                b2.scale(Some(&deg.d2_inv_sqrt()), None),
            )
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProjectionSolver {
    /// Dense spectral projectors up to `dense_cutoff` edges, LSQR beyond.
    #[default]
    Auto,
    Dense,
    Lsqr,
}

#[derive(Debug, Clone, Copy)]
pub struct DecomposeOptions<T> {
    pub mode: Mode,
    pub solver: ProjectionSolver,
    /// LSQR `atol`/`btol`.
    pub solver_tolerance: T,
    /// Relative eigenvalue cutoff separating the image from the kernel in the
    /// dense projectors.
    pub projector_tolerance: T,
    pub dense_cutoff: usize,
    /// LSQR iteration cap; `None` means `10·max(n1, 50)`.
    pub iteration_cap: Option<usize>,
}

impl<T: Real> DecomposeOptions<T> {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            solver: ProjectionSolver::Auto,
            solver_tolerance: T::lit(1e-10),
            projector_tolerance: T::lit(1e-10),
            dense_cutoff: 500,
            iteration_cap: None,
        }
    }

    pub fn with_solver(mut self, solver: ProjectionSolver) -> Self {
        self.solver = solver;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverUsed {
    Dense,
    Lsqr { gradient_iterations: usize, curl_iterations: usize },
    /// The oracle path in [`crate::synth::dense_oracle`].
    DenseQr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HodgeDecomposition<T> {
    pub gradient: EdgeFlow<T>,
    pub curl: EdgeFlow<T>,
    pub harmonic: EdgeFlow<T>,
    /// `‖f − g − r − h‖`, zero by construction; kept for audit.
    pub residual_norm: T,
    pub mode: Mode,
    pub solver: SolverUsed,
}

impl<T: Real> HodgeDecomposition<T> {
    pub(crate) fn from_parts(
        flow: &EdgeFlow<T>,
        gradient: Vec<T>,
        curl: Vec<T>,
        mode: Mode,
        solver: SolverUsed,
    ) -> Self {
        let harmonic: Vec<T> = flow
            .values
            .iter()
            .zip(&gradient)
            .zip(&curl)
            .map(|((&f, &g), &r)| f - g - r)
            .collect();
        let recon: Vec<T> = (0..flow.len())
            .map(|e| flow[e] - gradient[e] - curl[e] - harmonic[e])
            .collect();
        Self {
            gradient: EdgeFlow::new(gradient),
            curl: EdgeFlow::new(curl),
            harmonic: EdgeFlow::new(harmonic),
            residual_norm: linalg::norm(&recon),
            mode,
            solver,
        }
    }

    /// Largest componentwise difference to another decomposition.
    pub fn max_component_gap(&self, other: &Self) -> T {
        linalg::max_abs_diff(&self.gradient.values, &other.gradient.values)
            .max(linalg::max_abs_diff(&self.curl.values, &other.curl.values))
            .max(linalg::max_abs_diff(&self.harmonic.values, &other.harmonic.values))
    }
}

/// Orthogonally split `flow` into gradient, curl and harmonic parts.
pub fn decompose<T: Real>(
    flow: &EdgeFlow<T>,
    complex: &OrientedComplex,
    opts: &DecomposeOptions<T>,
) -> Result<HodgeDecomposition<T>> {
    flow.check_len(complex)?;
    let n1 = complex.n1();
    let (grad_gen, curl_gen) = image_generators::<T>(complex, opts.mode);
    let use_dense = match opts.solver {
        ProjectionSolver::Dense => true,
        ProjectionSolver::Lsqr => false,
        ProjectionSolver::Auto => n1 <= opts.dense_cutoff,
    };
    if use_dense {
        let g = spectral_projection(&grad_gen, flow.as_slice(), opts.projector_tolerance)?;
        let r = spectral_projection(&curl_gen, flow.as_slice(), opts.projector_tolerance)?;
        Ok(HodgeDecomposition::from_parts(flow, g, r, opts.mode, SolverUsed::Dense))
    } else {
        let cap = opts.iteration_cap.unwrap_or(10 * n1.max(50));
        let (g, gi) = lsqr_projection(&grad_gen, flow.as_slice(), opts.solver_tolerance, cap)?;
        let (r, ri) = lsqr_projection(&curl_gen, flow.as_slice(), opts.solver_tolerance, cap)?;
        Ok(HodgeDecomposition::from_parts(
            flow,
            g,
            r,
            opts.mode,
            SolverUsed::Lsqr {
                gradient_iterations: gi,
                curl_iterations: ri,
            },
        ))
    }
}

/// Orthogonal projection of `f` onto `im(A)` as `Σ v vᵀ f` over the
/// eigenvectors of `A Aᵀ` with eigenvalue above `rel_tol · λ_max`.
fn spectral_projection<T: Real>(a: &CscMatrix<T>, f: &[T], rel_tol: T) -> Result<Vec<T>> {
    let n = a.nrows();
    if a.ncols() == 0 || a.nnz() == 0 {
        return Ok(vec![T::zero(); n]);
    }
    let gram = a.matmul(&a.transpose()).to_dense();
    let eig = symmetric_eigen(&gram)?;
    let lmax = eig.values.last().copied().unwrap_or(T::zero());
    let cutoff = rel_tol * lmax;
    let mut out = vec![T::zero(); n];
    for (k, &lambda) in eig.values.iter().enumerate() {
        if lambda <= cutoff {
            continue;
        }
        let v = eig.vectors.column(k);
        let c: T = v.iter().zip(f).map(|(&vi, &fi)| vi * fi).sum();
        for (o, &vi) in out.iter_mut().zip(v.iter()) {
            *o += c * vi;
        }
    }
    Ok(out)
}

/// `A x*` for the least-squares solution `x*` of `min ‖A x − f‖`.
fn lsqr_projection<T: Real>(
    a: &CscMatrix<T>,
    f: &[T],
    tol: T,
    cap: usize,
) -> Result<(Vec<T>, usize)> {
    if a.ncols() == 0 || a.nnz() == 0 {
        return Ok((vec![T::zero(); a.nrows()], 0));
    }
    let out = lsqr(
        a.ncols(),
        |x| a.mul_vec(x),
        |y| a.tr_mul_vec(y),
        f,
        &LsqrOptions::with_tolerance(tol, cap),
    )?;
    Ok((a.mul_vec(&out.x), out.iterations))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenSolver {
    /// Dense up to `dense_cutoff` edges, shift-invert Lanczos beyond.
    #[default]
    Auto,
    Dense,
    ShiftInvertLanczos,
}

#[derive(Debug, Clone, Copy)]
pub struct HarmonicOptions<T> {
    pub mode: Mode,
    /// Eigenvalues `≤ eigen_tolerance · λ_max` count as zero.
    pub eigen_tolerance: T,
    /// Warn when `max retained / min rejected` eigenvalue exceeds this.
    pub gap_threshold: T,
    pub solver: EigenSolver,
    pub dense_cutoff: usize,
    pub seed: u64,
}

impl<T: Real> HarmonicOptions<T> {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            eigen_tolerance: T::lit(1e-8),
            gap_threshold: T::lit(1e-3),
            solver: EigenSolver::Auto,
            dense_cutoff: 3000,
            seed: 0,
        }
    }

    pub fn with_solver(mut self, solver: EigenSolver) -> Self {
        self.solver = solver;
        self
    }
}

/// Orthonormal basis of the harmonic space, one row per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicBasis<T: Real> {
    /// `n1 × d`, orthonormal columns.
    pub vectors: DMatrix<T>,
    /// `max retained eigenvalue / min rejected eigenvalue` (0 when either
    /// side is empty).
    pub eigenvalue_gap: T,
    /// Absolute eigenvalue cutoff used.
    pub tolerance: T,
    pub mode: Mode,
    pub warning: Option<String>,
}

impl<T: Real> HarmonicBasis<T> {
    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn n_edges(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn row(&self, e: usize) -> Vec<T> {
        self.vectors.row(e).iter().copied().collect()
    }

    /// Basis with columns right-multiplied by `q`.
    pub fn rotated(&self, q: &DMatrix<T>) -> Self {
        Self {
            vectors: &self.vectors * q,
            ..self.clone()
        }
    }
}

/// Orthonormal basis of the kernel of the mode's 1-Laplacian.
pub fn harmonic_basis<T: Real>(
    complex: &OrientedComplex,
    opts: &HarmonicOptions<T>,
) -> Result<HarmonicBasis<T>> {
    let n1 = complex.n1();
    let lap = harmonic_operator::<T>(complex, opts.mode);
    if n1 == 0 {
        return Ok(HarmonicBasis {
            vectors: DMatrix::from_element(0, 0, T::zero()),
            eigenvalue_gap: T::zero(),
            tolerance: T::zero(),
            mode: opts.mode,
            warning: None,
        });
    }
    let dense = match opts.solver {
        EigenSolver::Dense => true,
        EigenSolver::ShiftInvertLanczos => false,
        EigenSolver::Auto => n1 <= opts.dense_cutoff,
    };
    let (kernel, max_kept, min_rejected, tolerance) = if dense {
        dense_kernel(&lap.matrix, opts.eigen_tolerance)?
    } else {
        shift_invert_kernel(&lap.matrix, opts)?
    };
    let vectors = canonical_basis(kernel);
    let eigenvalue_gap = match min_rejected {
        Some(rej) if vectors.ncols() > 0 && rej > T::zero() => max_kept / rej,
        _ => T::zero(),
    };
    let warning = (eigenvalue_gap > opts.gap_threshold).then(|| {
        format!(
            "ambiguous spectral gap: retained/rejected eigenvalue ratio {eigenvalue_gap:e} exceeds {:e}",
            opts.gap_threshold
        )
    });
    Ok(HarmonicBasis {
        vectors,
        eigenvalue_gap,
        tolerance,
        mode: opts.mode,
        warning,
    })
}

type KernelParts<T> = (DMatrix<T>, T, Option<T>, T);

fn dense_kernel<T: Real>(lap: &CscMatrix<T>, rel_tol: T) -> Result<KernelParts<T>> {
    let eig = symmetric_eigen(&lap.to_dense())?;
    let n = eig.values.len();
    let lmax = eig.values[n - 1].max(T::zero());
    let cutoff = rel_tol * lmax;
    let d = eig.values.iter().take_while(|&&v| v <= cutoff).count();
    let kernel = eig.vectors.columns(0, d).into_owned();
    let max_kept = if d > 0 { eig.values[d - 1].max(T::zero()) } else { T::zero() };
    let min_rejected = (d < n).then(|| eig.values[d]);
    Ok((kernel, max_kept, min_rejected, cutoff))
}

/// Kernel by shift-invert: Krylov iteration on `(L + σI)⁻¹` with CG inner
/// solves, locking kernel vectors until a non-kernel eigenvalue appears.
fn shift_invert_kernel<T: Real>(lap: &CscMatrix<T>, opts: &HarmonicOptions<T>) -> Result<KernelParts<T>> {
    let n = lap.nrows();
    let lanczos = LanczosOptions {
        seed: opts.seed,
        ..LanczosOptions::default()
    };
    let top = lanczos_largest(|x| lap.mul_vec(x), n, 1, &[], &lanczos)?;
    let lmax = top.values[0].max(T::zero());
    let cutoff = opts.eigen_tolerance * lmax;
    let sigma = T::lit(1e-3) * lmax;
    let cg_tol = T::lit(1e-12);
    let cg_cap = 20 * n + 100;
    let shifted = |x: &[T]| -> Vec<T> {
        let mut y = lap.mul_vec(x);
        linalg::axpy(sigma, x, &mut y);
        y
    };
    let inverse = |x: &[T]| -> Vec<T> {
        conjugate_gradient(shifted, x, cg_tol, cg_cap).unwrap_or_else(|_| vec![T::nan(); x.len()])
    };

    let mut locked: Vec<Vec<T>> = Vec::new();
    let mut max_kept = T::zero();
    let mut min_rejected = None;
    let mut pass = 0u64;
    while locked.len() < n {
        let res = lanczos_largest(
            inverse,
            n,
            lanczos.block_size,
            &locked,
            &LanczosOptions {
                seed: opts.seed.wrapping_add(pass),
                tol: T::lit(1e-9),
                ..lanczos.clone()
            },
        )?;
        pass += 1;
        if res.values.iter().any(|v| v.is_nan()) {
            return Err(Error::NonConvergence {
                iterations: res.operator_applications,
                residual: f64::NAN,
            });
        }
        let mut saw_nonkernel = false;
        for c in 0..res.values.len() {
            let y: Vec<T> = res.vectors.column(c).iter().copied().collect();
            let lambda = linalg::dot(&y, &lap.mul_vec(&y));
            if lambda <= cutoff {
                max_kept = max_kept.max(lambda);
                let mut y = y;
                for q in &locked {
                    let c = linalg::dot(q, &y);
                    linalg::axpy(-c, q, &mut y);
                }
                let nrm = linalg::norm(&y);
                if nrm > T::lit(0.5) {
                    linalg::scale_in_place(T::one() / nrm, &mut y);
                    locked.push(y);
                }
            } else {
                min_rejected = Some(min_rejected.map_or(lambda, |m: T| m.min(lambda)));
                saw_nonkernel = true;
            }
        }
        if saw_nonkernel || res.values.is_empty() {
            break;
        }
    }
    let kernel = DMatrix::from_fn(n, locked.len(), |r, c| locked[c][r]);
    Ok((kernel, max_kept, min_rejected, cutoff))
}

/// Rotate an orthonormal basis `V` into the representation fixed by the
/// column-pivoted QR of `Vᵀ` (independent of the input rotation), then make
/// each column's largest-magnitude entry positive.
fn canonical_basis<T: Real>(v: DMatrix<T>) -> DMatrix<T> {
    let (n, d) = v.shape();
    if d == 0 {
        return v;
    }
    let qr = HouseholderQr::new(&v.transpose(), true);
    let q = qr.thin_q(d);
    let mut h = &v * q;
    for c in 0..d {
        let mut best = 0;
        for r in 1..n {
            if h[(r, c)].abs() > h[(best, c)].abs() * (T::one() + T::lit(1e-9)) {
                best = r;
            }
        }
        if h[(best, c)] < T::zero() {
            for r in 0..n {
                h[(r, c)] = -h[(r, c)];
            }
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::complex_from_edges;

    fn dense(h: &HodgeLaplacian<f64>) -> DMatrix<f64> {
        h.matrix.to_dense()
    }

    #[test]
    fn l0_examples() {
        let single = complex_from_edges(2, &[(0, 1)]).unwrap();
        assert_eq!(dense(&laplacian_l0(&single)), DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        let k3 = complex_from_edges(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
        let expect = DMatrix::from_fn(3, 3, |i, j| if i == j { 2.0 } else { -1.0 });
        assert_eq!(dense(&laplacian_l0(&k3)), expect);
        let empty = complex_from_edges(3, &[]).unwrap();
        assert_eq!(dense(&laplacian_l0(&empty)), DMatrix::zeros(3, 3));
    }

    #[test]
    fn l1_examples() {
        let single = complex_from_edges(2, &[(0, 1)]).unwrap();
        assert_eq!(dense(&laplacian_l1(&single)), DMatrix::from_element(1, 1, 2.0));
        let k3 = complex_from_edges(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
        assert_eq!(dense(&laplacian_l1(&k3)), DMatrix::identity(3, 3) * 3.0);
    }

    #[test]
    fn degrees_of_two_triangles_sharing_an_edge() {
        // triangles (0,1,2) and (1,2,3) share edge (1,2)
        let c = complex_from_edges(4, &[(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)]).unwrap();
        let deg = NormalizationDegrees::<f64>::new(&c);
        let shared = c.edge_index(1, 2).unwrap();
        for (e, &d) in deg.d2.iter().enumerate() {
            assert_eq!(d, if e == shared { 2.0 } else { 1.0 });
        }
        // node 1 touches (0,1), (1,2), (1,3): 2 * (1 + 2 + 1)
        assert_eq!(deg.d1[1], 8.0);
        assert!(deg.d3.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn rw_laplacian_on_triangle_free_complex() {
        let c = complex_from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let rw = laplacian_l1_rw::<f64>(&c);
        let deg = rw.degrees.as_ref().unwrap();
        assert!(deg.d2.iter().all(|&v| v == 1.0));
        // only the down term remains: B1ᵀ D1⁻¹ B1 with D1 = 2·2 on every node
        let b1 = c.b1().cast::<f64>().to_dense();
        let expect = b1.transpose() * &b1 / 4.0;
        assert!((dense(&rw) - expect).amax() < 1e-15);
    }

    #[test]
    fn rw_laplacian_is_similar_to_its_symmetrization() {
        let c = complex_from_edges(5, &[(0, 1), (0, 2), (1, 2), (1, 3), (2, 3), (3, 4)]).unwrap();
        let rw = laplacian_l1_rw::<f64>(&c);
        let sym = rw.symmetrized();
        assert!(sym.matrix.is_symmetric());
        let d = rw.degrees.as_ref().unwrap();
        let back = sym.matrix.scale(Some(&d.d2_sqrt()), Some(&d.d2_inv_sqrt()));
        assert!((dense(&rw) - back.to_dense()).amax() < 1e-14);
    }

    #[test]
    fn triplet_export() {
        let single = complex_from_edges(2, &[(0, 1)]).unwrap();
        assert_eq!(laplacian_l1::<f64>(&single).to_triplet_text(), "0 0 2\n");
    }

    #[test]
    fn filled_triangle_has_no_harmonics() {
        let k3 = complex_from_edges(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
        for mode in [Mode::Unnormalized, Mode::Normalized] {
            let hb = harmonic_basis::<f64>(&k3, &HarmonicOptions::new(mode)).unwrap();
            assert_eq!(hb.dim(), 0);
        }
    }

    #[test]
    fn four_cycle_harmonic_vector() {
        let c4 = complex_from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let hb = harmonic_basis::<f64>(&c4, &HarmonicOptions::new(Mode::Unnormalized)).unwrap();
        assert_eq!(hb.dim(), 1);
        // edges sorted: (0,1), (0,3), (1,2), (2,3); circulation 0→1→2→3→0
        let expect = [0.5, -0.5, 0.5, 0.5];
        for (e, want) in expect.iter().enumerate() {
            assert!((hb.vectors[(e, 0)] - want).abs() < 1e-12);
        }
        assert!(hb.warning.is_none());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let c4 = complex_from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let err = decompose(&EdgeFlow::new(vec![1.0; 3]), &c4, &DecomposeOptions::new(Mode::Normalized));
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }
}
