#include "elaa/subspace.hpp"

#include <string>

#include <Eigen/SVD>

#include "elaa/errors.hpp"

namespace elaa {

CMatrix hankel(const CVector& y_sub, int pencil)
{
    const auto m = static_cast<int>(y_sub.size());
    if (pencil < 1 || pencil >= m)
        throw EstimationError(ErrorKind::InvalidArgument,
                              "pencil L=" + std::to_string(pencil) + " outside [1, " + std::to_string(m - 1) + "]");
    CMatrix h(pencil + 1, m - pencil);
    for (Eigen::Index i = 0; i < h.rows(); ++i)
        for (Eigen::Index j = 0; j < h.cols(); ++j)
            h(i, j) = y_sub(i + j);
    return h;
}

SubspacePair split_subspaces(const CMatrix& h, int sources)
{
    const auto min_dim = static_cast<int>(std::min(h.rows(), h.cols()));
    if (sources < 1 || sources >= min_dim)
        throw EstimationError(ErrorKind::InvalidArgument,
                              "source count " + std::to_string(sources) + " needs 1 <= K < " + std::to_string(min_dim));
    Eigen::JacobiSVD<CMatrix> svd(h, Eigen::ComputeFullU);
    const CMatrix& u = svd.matrixU();
    SubspacePair out;
    out.signal = u.leftCols(sources);
    out.noise = u.rightCols(u.cols() - sources);
    out.singular_values = svd.singularValues();
    return out;
}

SubspacePair stacked_subspace(const CVector& y1, const CVector& y2, int pencil, int sources)
{
    if (y1.size() != y2.size())
        throw EstimationError(ErrorKind::InvalidArgument, "ULA vectors differ in length");
    const CMatrix h1 = hankel(y1, pencil);
    const CMatrix h2 = hankel(y2, pencil);
    CMatrix stacked(h1.rows() + h2.rows(), h1.cols());
    stacked << h1, h2;
    return split_subspaces(stacked, sources);
}

CMatrix concatenated_signal_subspace(const CVector& y1, const CVector& y2, int pencil, int sources)
{
    const SubspacePair s1 = split_subspaces(hankel(y1, pencil), sources);
    const SubspacePair s2 = split_subspaces(hankel(y2, pencil), sources);
    CMatrix out(s1.signal.rows() + s2.signal.rows(), sources);
    out << s1.signal, s2.signal;
    return out;
}

int estimate_model_order(const Eigen::VectorXd& singular_values, double energy_fraction)
{
    const double total = singular_values.squaredNorm();
    if (total <= 0.0)
        return 0;
    double tail = total;
    for (Eigen::Index k = 0; k < singular_values.size(); ++k) {
        if (tail < energy_fraction * total)
            return static_cast<int>(k);
        tail -= singular_values(k) * singular_values(k);
    }
    return static_cast<int>(singular_values.size());
}

std::pair<CVector, CVector> split_ulas(const CVector& y)
{
    if (y.size() % 2 != 0 || y.size() < 4)
        throw EstimationError(ErrorKind::InvalidArgument, "snapshot length must be 2M with M >= 2");
    const Eigen::Index m = y.size() / 2;
    return {y.head(m), y.tail(m)};
}

} // namespace elaa
