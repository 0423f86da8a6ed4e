#ifndef ELAA_SS_ESPRIT_HPP
#define ELAA_SS_ESPRIT_HPP

#include <complex>
#include <span>
#include <vector>

#include "elaa/geometry.hpp"
#include "elaa/signal_model.hpp"
#include "elaa/subspace.hpp"

namespace elaa {

/// ceil(M / 3). Shorter blocks than the balanced MUSIC pencil leave more
/// Hankel columns for averaging, which tightens the coarse estimate that
/// picks the fine-shift alias.
constexpr int esprit_default_pencil(int elements_per_ula) { return (elements_per_ula + 2) / 3; }

/// Two equally sized row selections of the stacked signal subspace whose
/// array responses differ by a pure translation of `delta` meters.
struct ShiftPair {
    std::vector<Eigen::Index> rows_a;
    std::vector<Eigen::Index> rows_b;
    double delta = 0.0;
};

struct SelectionPairs {
    ShiftPair coarse; // one-element shift inside each Hankel block, delta = d
    ShiftPair fine;   // top block against bottom block, delta = D_c
};

/// Row selections for a stacked subspace of 2(L+1) rows. Requires L >= K + 1.
SelectionPairs selection_pairs(const ArrayConfig& cfg, int pencil, int sources = 1);

/// Least-squares shift operator (U_a^H U_a)^{-1} U_a^H U_b.
/// Throws IllConditioned when cond(U_a) > 1e12.
CMatrix solve_psi(const CMatrix& signal, const ShiftPair& pair);

struct Candidate {
    double theta; // broadside, radians
    int alias;    // q
};

struct CandidateSet {
    std::vector<std::vector<Candidate>> per_source; // ascending q
    std::vector<std::complex<double>> eigenvalues;
    double delta = 0.0;
};

///
/// Every visible-region angle consistent with each eigenvalue's phase:
/// theta_q = asin(lambda (nu + q) / delta) with nu = arg(xi) / (2 pi) in
/// (-1/2, 1/2]. Arguments within 1e-9 outside [-1, 1] are clamped.
///
CandidateSet angles_from_eigenvalues(std::span<const std::complex<double>> eigenvalues, double delta,
                                     double wavelength);

struct EigenPairing {
    std::vector<std::complex<double>> coarse;
    std::vector<std::complex<double>> fine;
    double off_diagonal_ratio = 0.0; // off-diagonal / diagonal energy of the transformed second operator
    bool low_quality = false;
};

///
/// Associates the coarse and fine eigenvalues of each source through shared
/// eigenvectors: the operator with the wider minimum eigenvalue gap is
/// diagonalized, Psi = E Lambda E^-1, and E^-1 Psi_other E supplies the
/// partner eigenvalues on its diagonal.
///
EigenPairing pair_eigenvalues(const CMatrix& signal, const ShiftPair& coarse, const ShiftPair& fine);

struct DealiasResult {
    std::vector<double> angles;       // ascending
    std::vector<int> alias;           // chosen q per returned angle
    std::vector<double> disagreement; // |fine - coarse| per returned angle, radians
    std::vector<double> margin;       // (d2 - d1) / candidate gap, in [0, 1]
};

/// Picks, per source, the fine candidate closest to the coarse angle.
/// Throws AmbiguousDealias when the runner-up is within `tie_tolerance` of
/// the local candidate spacing.
DealiasResult dealias(std::span<const double> coarse_angles, const CandidateSet& fine, double tie_tolerance = 0.1);

enum class SubspaceMode { Stacked, PerUlaConcat };

struct EspritOptions {
    int pencil = 0; // 0 selects esprit_default_pencil(M)
    SubspaceMode subspace = SubspaceMode::Stacked;
    double tie_tolerance = 0.1;
};

struct EspritResult {
    std::vector<double> angles; // ascending, radians
    std::vector<double> coarse_angles;
    std::vector<double> disagreement;
    std::vector<double> dealias_margin;
    double pairing_quality = 0.0; // off-diagonal ratio from pair_eigenvalues
    bool low_quality_pairing = false;
};

EspritResult estimate_doa_esprit(const CVector& y, const ArrayConfig& cfg, int sources,
                                 const EspritOptions& options = {});

inline EspritResult estimate_doa_esprit(const Snapshot& snapshot, const ArrayConfig& cfg, int sources,
                                        const EspritOptions& options = {})
{
    return estimate_doa_esprit(snapshot.y, cfg, sources, options);
}

} // namespace elaa

#endif
