#include "elaa/ss_esprit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "elaa/errors.hpp"

namespace elaa {

namespace {

using cd = std::complex<double>;

CMatrix select_rows(const CMatrix& m, const std::vector<Eigen::Index>& rows)
{
    CMatrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
    return out;
}

double condition_number(const CMatrix& m)
{
    const Eigen::VectorXd s = Eigen::JacobiSVD<CMatrix>(m).singularValues();
    if (s.size() == 0 || s(s.size() - 1) <= 0.0)
        return std::numeric_limits<double>::infinity();
    return s(0) / s(s.size() - 1);
}

double min_gap(const Eigen::VectorXcd& eig)
{
    double gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < eig.size(); ++i)
        for (Eigen::Index j = i + 1; j < eig.size(); ++j)
            gap = std::min(gap, std::abs(eig(i) - eig(j)));
    return gap;
}

} // namespace

SelectionPairs selection_pairs(const ArrayConfig& cfg, int pencil, int sources)
{
    if (pencil < sources + 1)
        throw EstimationError(ErrorKind::InvalidArgument,
                              "pencil L=" + std::to_string(pencil) + " too small for " + std::to_string(sources) +
                                  " sources (need L >= K + 1)");
    const Eigen::Index block = pencil + 1;
    SelectionPairs out;
    for (Eigen::Index b = 0; b < 2; ++b) {
        for (Eigen::Index i = 0; i < pencil; ++i) {
            out.coarse.rows_a.push_back(b * block + i);
            out.coarse.rows_b.push_back(b * block + i + 1);
        }
    }
    for (Eigen::Index i = 0; i < block; ++i) {
        out.fine.rows_a.push_back(i);
        out.fine.rows_b.push_back(block + i);
    }
    out.coarse.delta = cfg.spacing();
    out.fine.delta = cfg.center_separation();
    return out;
}

CMatrix solve_psi(const CMatrix& signal, const ShiftPair& pair)
{
    if (pair.rows_a.size() != pair.rows_b.size() || pair.rows_a.empty())
        throw EstimationError(ErrorKind::InvalidArgument, "shift pair selections differ in size");
    const CMatrix ua = select_rows(signal, pair.rows_a);
    const CMatrix ub = select_rows(signal, pair.rows_b);
    if (ua.rows() < ua.cols() || condition_number(ua) > 1e12)
        throw EstimationError(ErrorKind::IllConditioned, "selected subspace rows are rank deficient");
    const CMatrix gram = ua.adjoint() * ua;
    return gram.partialPivLu().solve(ua.adjoint() * ub);
}

CandidateSet angles_from_eigenvalues(std::span<const std::complex<double>> eigenvalues, double delta,
                                     double wavelength)
{
    if (!(delta > 0.0) || !(wavelength > 0.0))
        throw EstimationError(ErrorKind::InvalidArgument, "shift and wavelength must be positive");
    constexpr double kEdge = 1e-9;
    const double ratio = delta / wavelength;
    CandidateSet out;
    out.delta = delta;
    out.eigenvalues.assign(eigenvalues.begin(), eigenvalues.end());
    for (const cd& xi : eigenvalues) {
        if (xi == cd(0.0, 0.0))
            throw EstimationError(ErrorKind::InvalidArgument, "zero eigenvalue has no phase");
        double nu = std::arg(xi) / (2.0 * kPi);
        if (nu <= -0.5)
            nu += 1.0;
        const auto q_lo = static_cast<int>(std::ceil(-ratio * (1.0 + kEdge) - nu));
        const auto q_hi = static_cast<int>(std::floor(ratio * (1.0 + kEdge) - nu));
        std::vector<Candidate> cands;
        for (int q = q_lo; q <= q_hi; ++q) {
            const double s = (nu + q) / ratio;
            if (std::abs(s) > 1.0 + kEdge)
                continue;
            cands.push_back({std::asin(std::clamp(s, -1.0, 1.0)), q});
        }
        out.per_source.push_back(std::move(cands));
    }
    return out;
}

EigenPairing pair_eigenvalues(const CMatrix& signal, const ShiftPair& coarse, const ShiftPair& fine)
{
    const CMatrix psi_c = solve_psi(signal, coarse);
    const CMatrix psi_f = solve_psi(signal, fine);

    Eigen::ComplexEigenSolver<CMatrix> es_c(psi_c);
    Eigen::ComplexEigenSolver<CMatrix> es_f(psi_f);
    if (es_c.info() != Eigen::Success || es_f.info() != Eigen::Success)
        throw EstimationError(ErrorKind::SingularPairing, "eigendecomposition failed");

    const double gap_c = min_gap(es_c.eigenvalues());
    const double gap_f = min_gap(es_f.eigenvalues());
    const bool use_coarse = gap_c >= gap_f;
    const CMatrix& vectors = use_coarse ? es_c.eigenvectors() : es_f.eigenvectors();
    const CMatrix& other = use_coarse ? psi_f : psi_c;

    if (condition_number(vectors) > 1e12)
        throw EstimationError(ErrorKind::SingularPairing, "eigenvector matrix is singular");
    const CMatrix transformed = vectors.partialPivLu().solve(other * vectors);

    EigenPairing out;
    const Eigen::Index k = transformed.rows();
    double diag = 0.0;
    double offdiag = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
            const double e = std::norm(transformed(i, j));
            (i == j ? diag : offdiag) += e;
        }
        const cd own = use_coarse ? es_c.eigenvalues()(i) : es_f.eigenvalues()(i);
        out.coarse.push_back(use_coarse ? own : transformed(i, i));
        out.fine.push_back(use_coarse ? transformed(i, i) : own);
    }
    out.off_diagonal_ratio = diag > 0.0 ? offdiag / diag : std::numeric_limits<double>::infinity();
    out.low_quality = out.off_diagonal_ratio > 1e-2 || std::max(gap_c, gap_f) < 1e-6;
    return out;
}

DealiasResult dealias(std::span<const double> coarse_angles, const CandidateSet& fine, double tie_tolerance)
{
    if (coarse_angles.size() != fine.per_source.size())
        throw EstimationError(ErrorKind::InvalidArgument, "coarse and fine source counts differ");

    struct Pick {
        double angle;
        int alias;
        double disagreement;
        double margin;
    };
    std::vector<Pick> picks;
    for (std::size_t i = 0; i < coarse_angles.size(); ++i) {
        const auto& cands = fine.per_source[i];
        if (cands.empty())
            throw EstimationError(ErrorKind::AmbiguousDealias, "source has no visible fine candidate");
        const double c = coarse_angles[i];
        std::size_t best = 0;
        std::size_t second = cands.size();
        for (std::size_t j = 1; j < cands.size(); ++j) {
            const double dj = std::abs(cands[j].theta - c);
            if (dj < std::abs(cands[best].theta - c)) {
                second = best;
                best = j;
            } else if (second == cands.size() || dj < std::abs(cands[second].theta - c)) {
                second = j;
            }
        }
        const double d1 = std::abs(cands[best].theta - c);
        double margin = 1.0;
        if (second < cands.size()) {
            const double d2 = std::abs(cands[second].theta - c);
            const double spacing = std::abs(cands[second].theta - cands[best].theta);
            margin = spacing > 0.0 ? (d2 - d1) / spacing : 0.0;
        }
        if (margin < tie_tolerance)
            throw EstimationError(ErrorKind::AmbiguousDealias,
                                  "coarse estimate sits between two fine candidates (margin " +
                                      std::to_string(margin) + ")");
        picks.push_back({cands[best].theta, cands[best].alias, d1, margin});
    }
    std::sort(picks.begin(), picks.end(), [](const Pick& a, const Pick& b) { return a.angle < b.angle; });

    DealiasResult out;
    for (const auto& p : picks) {
        out.angles.push_back(p.angle);
        out.alias.push_back(p.alias);
        out.disagreement.push_back(p.disagreement);
        out.margin.push_back(p.margin);
    }
    return out;
}

EspritResult estimate_doa_esprit(const CVector& y, const ArrayConfig& cfg, int sources, const EspritOptions& options)
{
    const int pencil = options.pencil > 0 ? options.pencil : esprit_default_pencil(cfg.elements_per_ula());
    const auto [y1, y2] = split_ulas(y);

    const CMatrix signal = options.subspace == SubspaceMode::Stacked
                               ? stacked_subspace(y1, y2, pencil, sources).signal
                               : concatenated_signal_subspace(y1, y2, pencil, sources);
    const SelectionPairs pairs = selection_pairs(cfg, pencil, sources);
    const EigenPairing pairing = pair_eigenvalues(signal, pairs.coarse, pairs.fine);

    const CandidateSet coarse = angles_from_eigenvalues(pairing.coarse, pairs.coarse.delta, cfg.wavelength());
    std::vector<double> coarse_angles;
    for (const auto& cands : coarse.per_source) {
        if (cands.empty())
            throw EstimationError(ErrorKind::AmbiguousDealias, "coarse shift produced no visible angle");
        // Unambiguous for d <= lambda / 2; otherwise take the principal branch.
        const auto it = std::min_element(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
            return std::abs(a.alias) < std::abs(b.alias);
        });
        coarse_angles.push_back(it->theta);
    }

    const CandidateSet fine = angles_from_eigenvalues(pairing.fine, pairs.fine.delta, cfg.wavelength());
    const DealiasResult resolved = dealias(coarse_angles, fine, options.tie_tolerance);

    EspritResult out;
    out.angles = resolved.angles;
    out.coarse_angles = std::move(coarse_angles);
    std::sort(out.coarse_angles.begin(), out.coarse_angles.end());
    out.disagreement = resolved.disagreement;
    out.dealias_margin = resolved.margin;
    out.pairing_quality = pairing.off_diagonal_ratio;
    out.low_quality_pairing = pairing.low_quality;
    return out;
}

} // namespace elaa
