#include "elaa/nf_localizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include <Eigen/LU>

namespace elaa {

BearingLine bearing_line(const ArrayConfig& cfg, int ula, double theta)
{
    return {Vec2(reference_x(cfg, ula), 0.0), Vec2(std::sin(theta), std::cos(theta))};
}

Intersection triangulate(const BearingLine& l1, const BearingLine& l2)
{
    const Vec2& d1 = l1.direction;
    const Vec2& d2 = l2.direction;
    const double cross = d1.x() * d2.y() - d1.y() * d2.x();
    if (std::abs(cross) < 1e-6)
        throw EstimationError(ErrorKind::ParallelBearings, "bearing lines are (nearly) parallel");

    // Normal equations of min |c1 + r1 d1 - c2 - r2 d2|^2 over (r1, r2).
    const Vec2 dc = l2.origin - l1.origin;
    Eigen::Matrix2d gram;
    gram << d1.dot(d1), -d1.dot(d2), -d1.dot(d2), d2.dot(d2);
    const Eigen::Vector2d rhs(d1.dot(dc), -d2.dot(dc));
    const Eigen::Vector2d r = gram.inverse() * rhs;
    if (r(0) <= 0.0 || r(1) <= 0.0)
        throw EstimationError(ErrorKind::BehindArray, "bearing lines intersect behind the array");

    const Vec2 p1 = l1.origin + r(0) * d1;
    const Vec2 p2 = l2.origin + r(1) * d2;
    return {0.5 * (p1 + p2), (p1 - p2).norm(), r(0), r(1)};
}

Intersection triangulate(const ArrayConfig& cfg, double theta1, double theta2)
{
    return triangulate(bearing_line(cfg, 0, theta1), bearing_line(cfg, 1, theta2));
}

LocalDoas local_doas(const MusicEstimator& music, const CVector& y, int sources)
{
    const auto [y1, y2] = split_ulas(y);
    return {music.estimate_ula(y1, sources), music.estimate_ula(y2, sources)};
}

namespace {

// True when the unused rows and columns of `valid` admit a perfect matching.
bool completable(const std::vector<std::vector<bool>>& valid, std::vector<bool>& used1, std::vector<bool>& used2)
{
    const std::size_t k = valid.size();
    std::size_t i = 0;
    while (i < k && used1[i])
        ++i;
    if (i == k)
        return true;
    used1[i] = true;
    for (std::size_t j = 0; j < k; ++j) {
        if (used2[j] || !valid[i][j])
            continue;
        used2[j] = true;
        const bool ok = completable(valid, used1, used2);
        used2[j] = false;
        if (ok) {
            used1[i] = false;
            return true;
        }
    }
    used1[i] = false;
    return false;
}

} // namespace

Association associate(const LocalDoas& doas, const CVector& y, const ArrayConfig& cfg)
{
    if (doas.ula1.empty() || doas.ula2.empty())
        throw EstimationError(ErrorKind::InvalidArgument, "no local DOAs to associate");
    if (doas.ula1.size() != doas.ula2.size())
        throw EstimationError(ErrorKind::InvalidArgument, "ULAs resolved different numbers of targets");

    const std::size_t k = doas.ula1.size();
    const FieldRegions regions = field_regions(cfg);
    std::vector<std::vector<bool>> valid(k, std::vector<bool>(k, false));
    std::vector<std::vector<CVector>> atoms(k, std::vector<CVector>(k));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            try {
                const Target t = Target::from_position(triangulate(cfg, doas.ula1[i], doas.ula2[j]).position);
                atoms[i][j] = steering(cfg, t, select_model(regions, t.range)).entries;
                valid[i][j] = true;
            } catch (const EstimationError&) {
            }
        }
    }

    std::vector<bool> used1(k, false);
    std::vector<bool> used2(k, false);
    // Only atoms that leave a completable assignment compete, unless no
    // complete assignment exists at all.
    const bool constrained = completable(valid, used1, used2);
    CVector residual = y;
    Association out;

    for (std::size_t step = 0; step < k; ++step) {
        double best_score = -1.0;
        std::size_t best_i = k;
        std::size_t best_j = k;
        for (std::size_t i = 0; i < k; ++i) {
            if (used1[i])
                continue;
            for (std::size_t j = 0; j < k; ++j) {
                if (used2[j] || !valid[i][j])
                    continue;
                if (constrained) {
                    used1[i] = used2[j] = true;
                    const bool ok = completable(valid, used1, used2);
                    used1[i] = used2[j] = false;
                    if (!ok)
                        continue;
                }
                const CVector& atom = atoms[i][j];
                const double denom = atom.norm() * residual.norm();
                const double score = denom > 0.0 ? std::abs(atom.dot(residual)) / denom : 0.0;
                if (score > best_score) {
                    best_score = score;
                    best_i = i;
                    best_j = j;
                }
            }
        }
        if (best_i == k)
            break;
        used1[best_i] = true;
        used2[best_j] = true;
        out.pairs.emplace_back(static_cast<int>(best_i), static_cast<int>(best_j));
        out.scores.push_back(best_score);
        const CVector& atom = atoms[best_i][best_j];
        residual -= atom * (atom.dot(residual) / atom.squaredNorm());
    }

    // Leftovers have no valid intersection; pair them in index order.
    for (std::size_t i = 0, j = 0; i < k; ++i) {
        if (used1[i])
            continue;
        while (used2[j])
            ++j;
        used2[j] = true;
        out.pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
        out.scores.push_back(0.0);
    }
    return out;
}

Localization localize(const MusicEstimator& music, const CVector& y, const ArrayConfig& cfg, int sources)
{
    if (sources < 1)
        throw EstimationError(ErrorKind::InvalidArgument, "need at least one target");
    Localization out;
    out.doas = local_doas(music, y, sources);
    const Association assoc = associate(out.doas, y, cfg);

    for (std::size_t p = 0; p < assoc.pairs.size(); ++p) {
        LocalizedTarget t;
        t.ula1_index = assoc.pairs[p].first;
        t.ula2_index = assoc.pairs[p].second;
        t.theta1 = out.doas.ula1[static_cast<std::size_t>(t.ula1_index)];
        t.theta2 = out.doas.ula2[static_cast<std::size_t>(t.ula2_index)];
        t.score = assoc.scores[p];
        try {
            const Intersection hit = triangulate(cfg, t.theta1, t.theta2);
            t.position = hit.position;
            t.residual = hit.residual;
        } catch (const EstimationError& e) {
            t.error = e.kind();
        }
        out.targets.push_back(t);
    }
    std::stable_sort(out.targets.begin(), out.targets.end(),
                     [](const LocalizedTarget& a, const LocalizedTarget& b) { return a.score > b.score; });
    return out;
}

void write_positions_header(std::ostream& os)
{
    os << "trial,target_id,x_hat,y_hat,residual,score\n";
}

void write_positions_csv(std::ostream& os, int trial, const Localization& result)
{
    char buf[160];
    for (std::size_t i = 0; i < result.targets.size(); ++i) {
        const auto& t = result.targets[i];
        if (t.error) {
            std::snprintf(buf, sizeof buf, "%d,%zu,,,,%.10g\n", trial, i, t.score);
        } else {
            std::snprintf(buf, sizeof buf, "%d,%zu,%.10g,%.10g,%.6g,%.10g\n", trial, i, t.position.x(),
                          t.position.y(), t.residual, t.score);
        }
        os << buf;
    }
}

} // namespace elaa
