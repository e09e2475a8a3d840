//! Incidence algebra and the tree/co-tree reduction of a weighted digraph.
//!
//! For a quasi-strongly connected digraph with `N` nodes and `L` edges the
//! module builds, in a deterministic edge order with spanning-tree edges
//! first:
//!
//! - the incidence matrix `E` (`+1` at the tail, `-1` at the head of each
//!   edge column),
//! - the in-incidence matrix `E_in` (`-1` at the head only) and its
//!   weighted form `E_in_w = E_in * W`,
//! - the graph Laplacian `L_G = E_in_w * E^T` and the edge Laplacian
//!   `L_e = E^T * E_in_w`, which share their nonzero spectrum,
//! - the split `E = [E_T  E_C]`, the expansion `T` with `E_C = E_T * T`,
//!   the cut-space basis `R = [I  T]` (so `E = E_T * R`), and an
//!   orthonormal flow-space basis `theta` with `E * theta = 0`,
//! - the essential edge Laplacian `Lhat_e = E_T^T * E_in_w * R^T` whose
//!   spectrum is exactly the nonzero spectrum of `L_e`, and the coupling
//!   `Lhat_o = E_T^T * E_in_w` that maps edge-space signals into tree
//!   coordinates.
//!
//! `S_e = [R^T  theta]` is invertible with inverse `[(R R^T)^{-1} R; theta^T]`
//! and block-triangularizes the edge Laplacian:
//! `S_e^{-1} L_e S_e = [[Lhat_e, Lhat_o * theta], [0, 0]]`.
//! [`EdgeDecomposition::verify_similarity_block_form`] checks this
//! numerically and [`EdgeDecomposition::spectral_properties`] checks the
//! spectral relationships.

use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix};

use crate::graph::{Digraph, GraphError};
use crate::linalg;

/// Absolute magnitude below which an eigenvalue or singular value counts
/// as zero.
pub const ZERO_EIG_TOL: f64 = 1e-8;

/// Pairing tolerance when matching the nonzero spectra of the graph and
/// edge Laplacians as multisets.
pub const SPECTRUM_MATCH_TOL: f64 = 1e-9;

/// The incidence algebra of a quasi-strongly connected weighted digraph.
///
/// All matrices use a common edge order: the deterministic spanning tree
/// (breadth-first from the smallest root, ties by input order) occupies the
/// first `N - 1` columns, the co-tree follows, and within each part the
/// original input order is preserved. [`Self::edge_permutation`] maps
/// permuted positions back to input positions.
#[derive(Debug, Clone)]
pub struct EdgeDecomposition {
    /// 1-based root of the spanning tree (the smallest root).
    pub root: usize,
    /// `edge_permutation[k]` is the 0-based input index of permuted edge `k`.
    pub edge_permutation: Vec<usize>,
    /// 0-based tail node per permuted edge.
    pub tails: Vec<usize>,
    /// 0-based head node per permuted edge.
    pub heads: Vec<usize>,
    /// Edge weights in permuted order.
    pub weights: Vec<f64>,
    /// Incidence matrix `E`, `N x L`.
    pub incidence: DMatrix<f64>,
    /// In-incidence matrix `E_in`, `N x L`.
    pub in_incidence: DMatrix<f64>,
    /// Weighted in-incidence `E_in_w = E_in * W`, `N x L`.
    pub weighted_in_incidence: DMatrix<f64>,
    /// Graph Laplacian `L_G = E_in_w * E^T`, `N x N`.
    pub graph_laplacian: DMatrix<f64>,
    /// Edge Laplacian `L_e = E^T * E_in_w`, `L x L`.
    pub edge_laplacian: DMatrix<f64>,
    /// Tree columns `E_T`, `N x (N-1)`.
    pub tree_incidence: DMatrix<f64>,
    /// Co-tree columns `E_C`, `N x (L-N+1)`.
    pub cotree_incidence: DMatrix<f64>,
    /// Expansion `T` with `E_C = E_T * T`, `(N-1) x (L-N+1)`.
    pub tree_to_cotree: DMatrix<f64>,
    /// Cut-space basis `R = [I  T]`, `(N-1) x L`, satisfying `E = E_T * R`.
    pub cut_basis: DMatrix<f64>,
    /// Orthonormal flow-space basis `theta`, `L x (L-N+1)`, `E * theta = 0`.
    pub flow_basis: DMatrix<f64>,
    /// Essential edge Laplacian `Lhat_e = E_T^T * E_in_w * R^T`,
    /// `(N-1) x (N-1)`.
    pub essential_edge_laplacian: DMatrix<f64>,
    /// Tree coupling `Lhat_o = E_T^T * E_in_w`, `(N-1) x L`.
    pub tree_in_incidence: DMatrix<f64>,
}

/// Spectral relationships between the graph, edge, and essential
/// Laplacians. Produced by [`EdgeDecomposition::spectral_properties`].
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    /// Spectrum of `L_G`, sorted by real then imaginary part.
    pub graph_eigenvalues: Vec<Complex<f64>>,
    /// Spectrum of `L_e`, sorted by real then imaginary part.
    pub edge_eigenvalues: Vec<Complex<f64>>,
    /// Spectrum of `Lhat_e`, sorted by real then imaginary part.
    pub essential_eigenvalues: Vec<Complex<f64>>,
    /// Nonzero spectra of `L_G` and `L_e` agree as multisets within
    /// [`SPECTRUM_MATCH_TOL`].
    pub nonzero_spectra_match: bool,
    /// The nonzero spectrum of `L_e` equals the spectrum of `Lhat_e` as a
    /// multiset within [`SPECTRUM_MATCH_TOL`].
    pub essential_spectrum_matches: bool,
    /// Count of eigenvalues of `L_e` with magnitude at most
    /// [`ZERO_EIG_TOL`].
    pub zero_multiplicity: usize,
    /// Theoretical zero multiplicity `L - N + 1`.
    pub expected_zero_multiplicity: usize,
    /// Numerical rank of `L_e`.
    pub edge_rank: usize,
    /// Numerical rank of `L_e^2`.
    pub edge_rank_squared: usize,
    /// Every eigenvalue of `Lhat_e` has real part above [`ZERO_EIG_TOL`].
    pub essential_positive_stable: bool,
}

impl SpectrumReport {
    /// Whether the zero eigenvalue of `L_e` is semisimple, witnessed by
    /// `rank(L_e) == rank(L_e^2)`.
    pub fn zero_is_semisimple(&self) -> bool {
        self.edge_rank == self.edge_rank_squared
    }

    /// All structural spectral properties hold.
    pub fn all_hold(&self) -> bool {
        self.nonzero_spectra_match
            && self.essential_spectrum_matches
            && self.zero_multiplicity == self.expected_zero_multiplicity
            && self.zero_is_semisimple()
            && self.essential_positive_stable
    }
}

/// Numerical verification of the similarity transform that
/// block-triangularizes the edge Laplacian. Produced by
/// [`EdgeDecomposition::verify_similarity_block_form`].
#[derive(Debug, Clone)]
pub struct SimilarityReport {
    /// The transform `S_e = [R^T  theta]`, `L x L`.
    pub transform: DMatrix<f64>,
    /// Its closed-form inverse `[(R R^T)^{-1} R; theta^T]`.
    pub inverse: DMatrix<f64>,
    /// `max |S_e^{-1} S_e - I|`.
    pub inverse_residual: f64,
    /// The conjugated matrix `S_e^{-1} L_e S_e`.
    pub transformed: DMatrix<f64>,
    /// `max |top-left block - Lhat_e|`.
    pub upper_left_residual: f64,
    /// `max |top-right block - Lhat_o * theta|`.
    pub upper_right_residual: f64,
    /// Largest absolute entry in the bottom `L - N + 1` rows.
    pub lower_rows_magnitude: f64,
    /// `max |E - E_T * R|`: the factorization the reduction relies on.
    pub factorization_residual: f64,
}

impl SimilarityReport {
    /// All residuals are at most `tol`.
    pub fn holds_within(&self, tol: f64) -> bool {
        self.inverse_residual <= tol
            && self.upper_left_residual <= tol
            && self.upper_right_residual <= tol
            && self.lower_rows_magnitude <= tol
            && self.factorization_residual <= tol
    }
}

/// Decomposes a digraph; alias for [`EdgeDecomposition::new`].
pub fn decompose(graph: &Digraph) -> Result<EdgeDecomposition, GraphError> {
    EdgeDecomposition::new(graph)
}

impl EdgeDecomposition {
    /// Builds the full incidence algebra for `graph`.
    ///
    /// # Errors
    ///
    /// [`GraphError::NotQuasiStronglyConnected`] when no directed spanning
    /// tree exists, and numerical-factorization variants when the tree
    /// Gram solve or the flow-basis eigendecomposition fails (which does
    /// not happen for validated graphs of sane size).
    pub fn new(graph: &Digraph) -> Result<Self, GraphError> {
        let n = graph.num_nodes();
        let l = graph.num_edges();
        let root = graph
            .spanning_tree_root()
            .ok_or(GraphError::NotQuasiStronglyConnected)?;
        let tree = graph.bfs_spanning_tree(root);
        debug_assert_eq!(tree.len(), n - 1);

        let mut edge_permutation = tree.clone();
        edge_permutation.extend((0..l).filter(|k| !tree.contains(k)));

        let mut tails = Vec::with_capacity(l);
        let mut heads = Vec::with_capacity(l);
        let mut weights = Vec::with_capacity(l);
        for &orig in &edge_permutation {
            let e = &graph.edges()[orig];
            tails.push(e.tail - 1);
            heads.push(e.head - 1);
            weights.push(e.weight);
        }

        let mut incidence = DMatrix::zeros(n, l);
        let mut in_incidence = DMatrix::zeros(n, l);
        let mut weighted_in_incidence = DMatrix::zeros(n, l);
        for k in 0..l {
            incidence[(tails[k], k)] = 1.0;
            incidence[(heads[k], k)] = -1.0;
            in_incidence[(heads[k], k)] = -1.0;
            weighted_in_incidence[(heads[k], k)] = -weights[k];
        }

        let graph_laplacian = &weighted_in_incidence * incidence.transpose();
        let edge_laplacian = incidence.transpose() * &weighted_in_incidence;

        let tree_count = n - 1;
        let cotree_count = l - tree_count;
        let tree_incidence = incidence.columns(0, tree_count).into_owned();
        let cotree_incidence = incidence.columns(tree_count, cotree_count).into_owned();

        let tree_to_cotree = if cotree_count == 0 {
            DMatrix::zeros(tree_count, 0)
        } else {
            let gram = tree_incidence.transpose() * &tree_incidence;
            let rhs = tree_incidence.transpose() * &cotree_incidence;
            gram.lu()
                .solve(&rhs)
                .ok_or(GraphError::SingularTransform { context: "tree Gram system" })?
        };

        let mut cut_basis = DMatrix::zeros(tree_count, l);
        cut_basis
            .view_mut((0, 0), (tree_count, tree_count))
            .copy_from(&DMatrix::identity(tree_count, tree_count));
        cut_basis
            .view_mut((0, tree_count), (tree_count, cotree_count))
            .copy_from(&tree_to_cotree);

        let flow_basis = flow_space_basis(&incidence, cotree_count)?;

        let tree_in_incidence = tree_incidence.transpose() * &weighted_in_incidence;
        let essential_edge_laplacian = &tree_in_incidence * cut_basis.transpose();

        Ok(Self {
            root,
            edge_permutation,
            tails,
            heads,
            weights,
            incidence,
            in_incidence,
            weighted_in_incidence,
            graph_laplacian,
            edge_laplacian,
            tree_incidence,
            cotree_incidence,
            tree_to_cotree,
            cut_basis,
            flow_basis,
            essential_edge_laplacian,
            tree_in_incidence,
        })
    }

    /// Number of nodes `N`.
    pub fn num_nodes(&self) -> usize {
        self.incidence.nrows()
    }

    /// Number of edges `L`.
    pub fn num_edges(&self) -> usize {
        self.incidence.ncols()
    }

    /// Number of tree edges `N - 1`.
    pub fn tree_count(&self) -> usize {
        self.num_nodes() - 1
    }

    /// Number of co-tree edges `L - N + 1`.
    pub fn cotree_count(&self) -> usize {
        self.num_edges() - self.tree_count()
    }

    /// Computes the spectra of the three Laplacians and checks their
    /// structural relationships.
    ///
    /// # Errors
    ///
    /// [`GraphError::EigenFailure`] when a Schur reduction does not
    /// converge.
    pub fn spectral_properties(&self) -> Result<SpectrumReport, GraphError> {
        let mut graph_eigenvalues = linalg::complex_eigenvalues(&self.graph_laplacian)
            .ok_or(GraphError::EigenFailure { context: "graph Laplacian" })?;
        let mut edge_eigenvalues = linalg::complex_eigenvalues(&self.edge_laplacian)
            .ok_or(GraphError::EigenFailure { context: "edge Laplacian" })?;
        let mut essential_eigenvalues =
            linalg::complex_eigenvalues(&self.essential_edge_laplacian)
                .ok_or(GraphError::EigenFailure { context: "essential edge Laplacian" })?;
        linalg::sort_spectrum(&mut graph_eigenvalues);
        linalg::sort_spectrum(&mut edge_eigenvalues);
        linalg::sort_spectrum(&mut essential_eigenvalues);

        let nonzero = |eigs: &[Complex<f64>]| -> Vec<Complex<f64>> {
            eigs.iter()
                .copied()
                .filter(|lam| lam.norm_sqr() > ZERO_EIG_TOL * ZERO_EIG_TOL)
                .collect()
        };
        let graph_nonzero = nonzero(&graph_eigenvalues);
        let edge_nonzero = nonzero(&edge_eigenvalues);

        let zero_multiplicity = edge_eigenvalues.len() - edge_nonzero.len();
        let expected_zero_multiplicity = self.cotree_count();

        let nonzero_spectra_match =
            linalg::spectra_match(&graph_nonzero, &edge_nonzero, SPECTRUM_MATCH_TOL);
        let essential_spectrum_matches =
            linalg::spectra_match(&essential_eigenvalues, &edge_nonzero, SPECTRUM_MATCH_TOL);

        let edge_rank = linalg::rank_with_tol(&self.edge_laplacian, ZERO_EIG_TOL);
        let edge_squared = &self.edge_laplacian * &self.edge_laplacian;
        let edge_rank_squared = linalg::rank_with_tol(&edge_squared, ZERO_EIG_TOL);

        let essential_positive_stable =
            essential_eigenvalues.iter().all(|lam| lam.re > ZERO_EIG_TOL);

        Ok(SpectrumReport {
            graph_eigenvalues,
            edge_eigenvalues,
            essential_eigenvalues,
            nonzero_spectra_match,
            essential_spectrum_matches,
            zero_multiplicity,
            expected_zero_multiplicity,
            edge_rank,
            edge_rank_squared,
            essential_positive_stable,
        })
    }

    /// Builds `S_e = [R^T  theta]` and its closed-form inverse, conjugates
    /// the edge Laplacian, and measures how far the result is from the
    /// expected block-triangular form.
    ///
    /// # Errors
    ///
    /// [`GraphError::SingularTransform`] when `R R^T` cannot be inverted
    /// (it is symmetric positive definite for any valid decomposition).
    pub fn verify_similarity_block_form(&self) -> Result<SimilarityReport, GraphError> {
        let l = self.num_edges();
        let m = self.tree_count();
        let c = self.cotree_count();

        let mut transform = DMatrix::zeros(l, l);
        transform
            .view_mut((0, 0), (l, m))
            .copy_from(&self.cut_basis.transpose());
        transform.view_mut((0, m), (l, c)).copy_from(&self.flow_basis);

        let gram = &self.cut_basis * self.cut_basis.transpose();
        let gram_inv = gram
            .try_inverse()
            .ok_or(GraphError::SingularTransform { context: "cut-basis Gram matrix" })?;
        let mut inverse = DMatrix::zeros(l, l);
        inverse
            .view_mut((0, 0), (m, l))
            .copy_from(&(gram_inv * &self.cut_basis));
        inverse
            .view_mut((m, 0), (c, l))
            .copy_from(&self.flow_basis.transpose());

        let identity_residual = &inverse * &transform - DMatrix::<f64>::identity(l, l);
        let transformed = &inverse * &self.edge_laplacian * &transform;

        let upper_left = transformed.view((0, 0), (m, m)).into_owned();
        let upper_right = transformed.view((0, m), (m, c)).into_owned();
        let lower = transformed.view((m, 0), (c, l)).into_owned();
        let expected_upper_right = &self.tree_in_incidence * &self.flow_basis;

        let factorization_residual =
            linalg::max_abs(&(&self.tree_incidence * &self.cut_basis - &self.incidence));

        Ok(SimilarityReport {
            inverse_residual: linalg::max_abs(&identity_residual),
            upper_left_residual: linalg::max_abs(&(upper_left - &self.essential_edge_laplacian)),
            upper_right_residual: linalg::max_abs(&(upper_right - expected_upper_right)),
            lower_rows_magnitude: linalg::max_abs(&lower),
            factorization_residual,
            transform,
            inverse,
            transformed,
        })
    }
}

/// Orthonormal basis of the null space of `E`, computed as the
/// zero-eigenvalue eigenspace of the symmetric positive semidefinite
/// matrix `E^T E`.
fn flow_space_basis(
    incidence: &DMatrix<f64>,
    expected: usize,
) -> Result<DMatrix<f64>, GraphError> {
    let l = incidence.ncols();
    if expected == 0 {
        return Ok(DMatrix::zeros(l, 0));
    }
    let gram = incidence.transpose() * incidence;
    let eigen = gram.symmetric_eigen();
    let mut null_columns: Vec<usize> = (0..l)
        .filter(|&i| eigen.eigenvalues[i].abs() <= ZERO_EIG_TOL)
        .collect();
    if null_columns.len() != expected {
        return Err(GraphError::FlowBasisRank { expected, found: null_columns.len() });
    }
    null_columns.sort_unstable();
    let mut basis = DMatrix::zeros(l, expected);
    for (j, &col) in null_columns.iter().enumerate() {
        basis.column_mut(j).copy_from(&eigen.eigenvectors.column(col));
    }
    Ok(basis)
}
