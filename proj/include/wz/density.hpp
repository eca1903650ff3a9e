#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "wz/classify.hpp"
#include "wz/core.hpp"
#include "wz/error.hpp"

namespace wz {

struct DensityGridSpec {
    double x_min = 0.0, x_max = 0.0;
    double y_min = 0.0, y_max = 0.0;
    double cell = 5.0;
    double bandwidth = 30.0;
    double proportion_constant = 36.5; ///< density value corresponding to 100% of vehicles

    std::size_t nx() const { return static_cast<std::size_t>(std::ceil((x_max - x_min) / cell)); }
    std::size_t ny() const { return static_cast<std::size_t>(std::ceil((y_max - y_min) / cell)); }
    double cell_x(std::size_t i) const { return x_min + (static_cast<double>(i) + 0.5) * cell; }
    double cell_y(std::size_t j) const { return y_min + (static_cast<double>(j) + 0.5) * cell; }

    std::vector<std::string> validate(const WorkZoneLayout* layout = nullptr) const {
        std::vector<std::string> v;
        if (!(cell > 0.0)) v.push_back("cell <= 0");
        if (!(bandwidth >= cell)) v.push_back("bandwidth < cell");
        if (!(x_max > x_min) || !(y_max > y_min)) v.push_back("empty extent");
        if (!(proportion_constant > 0.0)) v.push_back("proportion_constant <= 0");
        if (layout) {
            if (x_min > layout->zone_start_x - 500.0) v.push_back("extent covers less than 500 m upstream of the zone");
            if (x_max < layout->zone_end_x()) v.push_back("extent ends before the zone does");
        }
        return v;
    }

    bool same_extent(const DensityGridSpec& o) const {
        return x_min == o.x_min && x_max == o.x_max && y_min == o.y_min && y_max == o.y_max && cell == o.cell &&
               bandwidth == o.bandwidth;
    }
};

struct WeightedPoint {
    double x = 0.0;
    double y = 0.0;
    double w = 1.0;
};

struct DensityField {
    DensityGridSpec spec;
    BehaviorLabel label = BehaviorLabel::L_C;
    std::vector<double> values; ///< row-major, values[j * nx + i]

    double at(std::size_t i, std::size_t j) const { return values[j * spec.nx() + i]; }
    double& at(std::size_t i, std::size_t j) { return values[j * spec.nx() + i]; }
};

/// Quartic (biweight) kernel with unit mass on the plane once scaled by 1/h^2.
inline double quartic_kernel(double u) {
    if (u >= 1.0) return 0.0;
    const double s = 1.0 - u * u;
    return 3.0 / std::numbers::pi * s * s;
}

/// Grid kernel density estimate: sum of per-point kernels evaluated at cell
/// centers. The kernel's compact support makes the truncated sum exact.
inline DensityField kde(const std::vector<WeightedPoint>& points, const DensityGridSpec& spec,
                        BehaviorLabel label = BehaviorLabel::L_C) {
    DensityField field;
    field.spec = spec;
    field.label = label;
    const std::size_t nx = spec.nx(), ny = spec.ny();
    field.values.assign(nx * ny, 0.0);
    const double h = spec.bandwidth;
    const double inv_h2 = 1.0 / (h * h);
    for (const WeightedPoint& p : points) {
        const auto i_lo = static_cast<std::ptrdiff_t>(std::floor((p.x - h - spec.x_min) / spec.cell));
        const auto i_hi = static_cast<std::ptrdiff_t>(std::ceil((p.x + h - spec.x_min) / spec.cell));
        const auto j_lo = static_cast<std::ptrdiff_t>(std::floor((p.y - h - spec.y_min) / spec.cell));
        const auto j_hi = static_cast<std::ptrdiff_t>(std::ceil((p.y + h - spec.y_min) / spec.cell));
        for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, j_lo); j < std::min<std::ptrdiff_t>(ny, j_hi); ++j) {
            for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(0, i_lo); i < std::min<std::ptrdiff_t>(nx, i_hi); ++i) {
                const double dx = spec.cell_x(i) - p.x;
                const double dy = spec.cell_y(j) - p.y;
                const double u = std::sqrt(dx * dx + dy * dy) / h;
                if (u < 1.0) field.values[j * nx + i] += p.w * quartic_kernel(u) * inv_h2;
            }
        }
    }
    return field;
}

inline double density_to_proportion(double density, double proportion_constant = 36.5) {
    return density / proportion_constant * 100.0;
}

struct ClusterCenter {
    BehaviorLabel label = BehaviorLabel::L_C;
    double x = 0.0;
    double y = 0.0;
    double density = 0.0;
    double proportion = 0.0; ///< percent
    Region region = Region::Upstream;
};

/// Strict 8-neighborhood local maxima at or above min_peak, densest first.
inline std::vector<ClusterCenter> find_cluster_centers(const DensityField& field, const WorkZoneLayout& layout,
                                                       double min_peak = 0.1) {
    std::vector<ClusterCenter> centers;
    const std::size_t nx = field.spec.nx(), ny = field.spec.ny();
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            const double v = field.at(i, j);
            if (v < min_peak) continue;
            bool is_max = true;
            for (int dj = -1; dj <= 1 && is_max; ++dj) {
                for (int di = -1; di <= 1; ++di) {
                    if (di == 0 && dj == 0) continue;
                    const std::ptrdiff_t ni = static_cast<std::ptrdiff_t>(i) + di;
                    const std::ptrdiff_t nj = static_cast<std::ptrdiff_t>(j) + dj;
                    if (ni < 0 || nj < 0 || ni >= static_cast<std::ptrdiff_t>(nx) ||
                        nj >= static_cast<std::ptrdiff_t>(ny)) {
                        continue;
                    }
                    const double nv = field.at(ni, nj);
                    // Exact plateaus keep their first cell in scan order.
                    const bool earlier = nj < static_cast<std::ptrdiff_t>(j) ||
                                         (nj == static_cast<std::ptrdiff_t>(j) && ni < static_cast<std::ptrdiff_t>(i));
                    if (nv > v || (nv == v && earlier)) {
                        is_max = false;
                        break;
                    }
                }
            }
            if (!is_max) continue;
            ClusterCenter c;
            c.label = field.label;
            c.x = field.spec.cell_x(i);
            c.y = field.spec.cell_y(j);
            c.density = v;
            c.proportion = density_to_proportion(v, field.spec.proportion_constant);
            c.region = region_of(c.x, layout);
            centers.push_back(c);
        }
    }
    std::sort(centers.begin(), centers.end(),
              [](const ClusterCenter& a, const ClusterCenter& b) { return a.density > b.density; });
    return centers;
}

/// Reporting groups: everything upstream of the work area is folded together,
/// the termination area stands alone, the rest is diagnostic.
enum class RegionGroup { UpstreamOfWork = 0, Termination, Other };

inline const char* to_string(RegionGroup g) {
    switch (g) {
        case RegionGroup::UpstreamOfWork: return "upstream_of_work";
        case RegionGroup::Termination: return "termination";
        case RegionGroup::Other: return "other";
    }
    return "?";
}

inline RegionGroup region_group_of(Region r) {
    switch (r) {
        case Region::Upstream:
        case Region::Warning:
        case Region::UpstreamTransition:
        case Region::Buffer:
            return RegionGroup::UpstreamOfWork;
        case Region::Termination:
            return RegionGroup::Termination;
        default:
            return RegionGroup::Other;
    }
}

struct AssessmentRow {
    BehaviorLabel label = BehaviorLabel::L_C;
    RegionGroup group = RegionGroup::UpstreamOfWork;
    double max_density = 0.0;    ///< averaged over replications where present
    double proportion = 0.0;     ///< percent, from the averaged density
    int replications_present = 0;
};

struct AssessmentReport {
    std::string scenario;
    int replications = 0;
    std::vector<AssessmentRow> rows;

    const AssessmentRow* find(BehaviorLabel label, RegionGroup group) const {
        for (const auto& r : rows) {
            if (r.label == label && r.group == group) return &r;
        }
        return nullptr;
    }

    double density_or_zero(BehaviorLabel label, RegionGroup group) const {
        const AssessmentRow* r = find(label, group);
        return r ? r->max_density : 0.0;
    }
};

using LabelFields = std::map<BehaviorLabel, DensityField>;

/// Collapse per-replication density fields into the per (label, region-group)
/// maxima, averaged across all replications; a replication without the
/// combination contributes zero to the mean.
inline AssessmentReport build_report(const std::vector<LabelFields>& replications, const WorkZoneLayout& layout,
                                     double min_peak = 0.1, const std::string& scenario = "") {
    if (replications.empty()) throw Error(Errc::IncompleteRuns, "need at least one replication");
    const DensityGridSpec* ref = nullptr;
    for (const auto& rep : replications) {
        for (const auto& [label, field] : rep) {
            if (!ref) {
                ref = &field.spec;
            } else if (!ref->same_extent(field.spec)) {
                throw Error(Errc::LayoutMismatch, "density fields span differing extents");
            }
        }
    }
    std::map<std::pair<BehaviorLabel, RegionGroup>, std::pair<double, int>> acc; // sum of maxima, count
    for (const auto& rep : replications) {
        std::map<std::pair<BehaviorLabel, RegionGroup>, double> rep_max;
        for (const auto& [label, field] : rep) {
            for (const ClusterCenter& c : find_cluster_centers(field, layout, min_peak)) {
                auto key = std::make_pair(label, region_group_of(c.region));
                auto it = rep_max.find(key);
                if (it == rep_max.end() || c.density > it->second) rep_max[key] = c.density;
            }
        }
        for (const auto& [key, density] : rep_max) {
            auto& slot = acc[key];
            slot.first += density;
            slot.second += 1;
        }
    }
    AssessmentReport report;
    report.scenario = scenario;
    report.replications = static_cast<int>(replications.size());
    const double pc = ref ? ref->proportion_constant : 36.5;
    for (const auto& [key, slot] : acc) {
        AssessmentRow row;
        row.label = key.first;
        row.group = key.second;
        row.max_density = slot.first / static_cast<double>(replications.size());
        row.proportion = density_to_proportion(row.max_density, pc);
        row.replications_present = slot.second;
        report.rows.push_back(row);
    }
    return report;
}

} // namespace wz
