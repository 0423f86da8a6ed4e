#ifndef ELAA_NF_LOCALIZER_HPP
#define ELAA_NF_LOCALIZER_HPP

#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "elaa/errors.hpp"
#include "elaa/geometry.hpp"
#include "elaa/signal_model.hpp"
#include "elaa/ss_music.hpp"

namespace elaa {

struct BearingLine {
    Vec2 origin;
    Vec2 direction; // unit length
};

/// Line from ULA `ula`'s first element along the local broadside angle `theta`.
BearingLine bearing_line(const ArrayConfig& cfg, int ula, double theta);

struct Intersection {
    Vec2 position; // midpoint of the closest points
    double residual; // gap between the closest points
    double range1;
    double range2;
};

/// Least-squares closest approach of two bearing lines. Throws
/// ParallelBearings when |d1 x d2| < 1e-6 and BehindArray when either
/// range along its line is not positive.
Intersection triangulate(const BearingLine& l1, const BearingLine& l2);
Intersection triangulate(const ArrayConfig& cfg, double theta1, double theta2);

struct LocalDoas {
    std::vector<double> ula1;
    std::vector<double> ula2;
};

/// Per-ULA SS-MUSIC estimates; angles are local to each ULA's first element.
LocalDoas local_doas(const MusicEstimator& music, const CVector& y, int sources);

struct Association {
    std::vector<std::pair<int, int>> pairs; // (index into ula1, index into ula2)
    std::vector<double> scores;             // normalized correlation at selection time
};

///
/// Greedy matching pursuit over pair atoms. Each remaining (i, j) is
/// triangulated, the steering vector at the intersection (under the model
/// select_model picks for its range) is correlated with the current
/// residual, the best pair is taken and its projection removed. Pairs whose
/// bearings do not intersect in front of the array are not eligible, nor
/// are pairs after which the remaining estimates could no longer all be
/// paired in front of the array. If no complete in-front assignment exists,
/// the leftovers are paired in index order with score 0.
///
Association associate(const LocalDoas& doas, const CVector& y, const ArrayConfig& cfg);

struct LocalizedTarget {
    Vec2 position{0.0, 0.0};
    double residual = 0.0;
    double score = 0.0;
    double theta1 = 0.0;
    double theta2 = 0.0;
    int ula1_index = -1;
    int ula2_index = -1;
    std::optional<ErrorKind> error;
};

struct Localization {
    LocalDoas doas;
    std::vector<LocalizedTarget> targets; // descending association score
};

/// Full near-field pipeline. Triangulation failures are reported per
/// target; errors before association (e.g. UnderResolved) propagate.
Localization localize(const MusicEstimator& music, const CVector& y, const ArrayConfig& cfg, int sources);

/// Header: trial,target_id,x_hat,y_hat,residual,score
void write_positions_header(std::ostream& os);
void write_positions_csv(std::ostream& os, int trial, const Localization& result);

} // namespace elaa

#endif
