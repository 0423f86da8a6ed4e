#ifndef ELAA_SUBSPACE_HPP
#define ELAA_SUBSPACE_HPP

#include <utility>

#include <Eigen/Core>

namespace elaa {

using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// Balanced pencil parameter floor(M / 2).
constexpr int default_pencil(int elements_per_ula) { return elements_per_ula / 2; }

/// (L+1) x (M-L) Hankel lifting, H(i, j) = y(i + j). Requires 1 <= L < M.
CMatrix hankel(const CVector& y_sub, int pencil);

///
/// Left singular subspaces of a lifted data matrix.
///
/// `signal` holds the K dominant left singular vectors, `noise` the
/// remaining rows - K, `singular_values` all min(rows, cols) values in
/// descending order.
///
struct SubspacePair {
    CMatrix signal;
    CMatrix noise;
    Eigen::VectorXd singular_values;
};

/// Requires 1 <= K < min(rows, cols).
SubspacePair split_subspaces(const CMatrix& h, int sources);

/// Subspaces of the stacked matrix [H(y1); H(y2)] (rows = 2(L+1)); keeps the
/// relative phase between the two ULAs in each signal-subspace column.
SubspacePair stacked_subspace(const CVector& y1, const CVector& y2, int pencil, int sources);

/// [U_s(H(y1)); U_s(H(y2))] from two independent SVDs. Each SVD picks its own
/// basis of the shared span, so the inter-ULA phase is not preserved; kept
/// for comparison against the stacked variant.
CMatrix concatenated_signal_subspace(const CVector& y1, const CVector& y2, int pencil, int sources);

/// Smallest K with sum_{i>K} sigma_i^2 < energy_fraction * sum sigma_i^2.
int estimate_model_order(const Eigen::VectorXd& singular_values, double energy_fraction = 1e-3);

/// Split a 2M snapshot into its ULA 1 and ULA 2 halves.
std::pair<CVector, CVector> split_ulas(const CVector& y);

} // namespace elaa

#endif
