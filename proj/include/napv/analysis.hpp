#pragma once

// Descriptive studies over datasets and small networks: same-label pairwise
// distance distributions, 2-D activation-region maps, and NAP overlap tables.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "napv/error.hpp"
#include "napv/model.hpp"
#include "napv/nap.hpp"
#include "napv/verify.hpp"

namespace napv {

enum class Norm { l1, l2, linf };

[[nodiscard]] inline const char* to_string(Norm n) noexcept {
    switch (n) {
    case Norm::l1: return "L1";
    case Norm::l2: return "L2";
    case Norm::linf: return "Linf";
    }
    return "?";
}

[[nodiscard]] inline double distance(std::span<const double> a, std::span<const double> b, Norm norm) {
    if (a.size() != b.size()) throw DimensionError("distance between vectors of different dimension");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::abs(a[i] - b[i]);
        switch (norm) {
        case Norm::l1: acc += d; break;
        case Norm::l2: acc += d * d; break;
        case Norm::linf: acc = std::max(acc, d); break;
        }
    }
    return norm == Norm::l2 ? std::sqrt(acc) : acc;
}

struct HistogramBin {
    double lower = 0.0;
    double upper = 0.0;
    std::size_t count = 0;
};

struct DistanceStats {
    int label = 0;
    Norm norm = Norm::linf;
    std::size_t samples = 0;
    std::size_t pairs = 0;
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    std::vector<HistogramBin> histogram;
};

struct DistanceOptions {
    std::size_t bins = 100;
    std::size_t max_samples = 2000; // per label; larger labels are subsampled
    std::uint64_t seed = 0;
};

struct DistanceReport {
    std::vector<DistanceStats> labels;
    std::vector<int> skipped; // labels with fewer than two samples
};

namespace detail {

inline std::map<int, std::vector<const Vector*>> group_by_label(std::span<const LabeledSample> data,
                                                                const DistanceOptions& opts) {
    std::map<int, std::vector<const Vector*>> groups;
    for (const auto& s : data) groups[s.label].push_back(&s.x);
    std::mt19937_64 rng(opts.seed);
    for (auto& [label, members] : groups) {
        if (members.size() > opts.max_samples) {
            std::shuffle(members.begin(), members.end(), rng);
            members.resize(opts.max_samples);
        }
    }
    return groups;
}

} // namespace detail

/// Statistics over all unordered same-label pairs. Histogram bins split
/// [0, observed max] uniformly; the last bin is closed.
[[nodiscard]] inline DistanceReport pairwise_distances(std::span<const LabeledSample> data, Norm norm,
                                                       const DistanceOptions& opts = {}) {
    if (opts.bins == 0) throw DomainError("histogram needs at least one bin");
    DistanceReport report;
    for (const auto& [label, members] : detail::group_by_label(data, opts)) {
        if (members.size() < 2) {
            report.skipped.push_back(label);
            continue;
        }
        std::vector<double> values;
        values.reserve(members.size() * (members.size() - 1) / 2);
        for (std::size_t a = 0; a < members.size(); ++a) {
            for (std::size_t b = a + 1; b < members.size(); ++b) values.push_back(distance(*members[a], *members[b], norm));
        }
        DistanceStats st;
        st.label = label;
        st.norm = norm;
        st.samples = members.size();
        st.pairs = values.size();
        const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
        st.min = *lo;
        st.max = *hi;
        st.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
        const double width = st.max / static_cast<double>(opts.bins);
        for (std::size_t b = 0; b < opts.bins; ++b) {
            st.histogram.push_back({width * static_cast<double>(b), b + 1 == opts.bins ? st.max : width * static_cast<double>(b + 1), 0});
        }
        for (double v : values) {
            std::size_t b = width > 0.0 ? static_cast<std::size_t>(v / width) : 0;
            st.histogram[std::min(b, opts.bins - 1)].count += 1;
        }
        report.labels.push_back(std::move(st));
    }
    return report;
}

inline void write_distance_summary_csv(std::ostream& out, std::span<const DistanceStats> stats, bool header = true) {
    if (header) out << "label,norm,min,max,mean\n";
    out.precision(17);
    for (const auto& s : stats) out << s.label << ',' << to_string(s.norm) << ',' << s.min << ',' << s.max << ',' << s.mean << '\n';
}

inline void write_distance_histogram_csv(std::ostream& out, std::span<const DistanceStats> stats, bool header = true) {
    if (header) out << "label,bin_lo,bin_hi,count\n";
    out.precision(17);
    for (const auto& s : stats) {
        for (const auto& b : s.histogram) out << s.label << ',' << b.lower << ',' << b.upper << ',' << b.count << '\n';
    }
}

// ---------------------------------------------------------------------------
// Region map

struct RegionCell {
    double x0 = 0.0;
    double x1 = 0.0;
    std::size_t signature_id = 0;
    std::size_t label = 0;
};

struct RegionMap {
    std::vector<RegionCell> cells;           // row-major, x1 outer
    std::vector<ActivationSignature> signatures; // indexed by signature_id, in order of first appearance
};

/// Evaluates a 2-input network at the centers of a resolution x resolution grid.
[[nodiscard]] inline RegionMap linear_region_map(const Network& net, const Box& box, std::size_t resolution) {
    if (net.input_dim() != 2) throw DimensionError("region maps need a 2-input network");
    if (box.size() != 2) throw DimensionError("region map box must be 2-dimensional");
    if (resolution < 2) throw DomainError("region map resolution must be at least 2");
    RegionMap map;
    std::map<ActivationSignature, std::size_t> ids;
    const double dx = (box[0].upper - box[0].lower) / static_cast<double>(resolution);
    const double dy = (box[1].upper - box[1].lower) / static_cast<double>(resolution);
    for (std::size_t iy = 0; iy < resolution; ++iy) {
        for (std::size_t ix = 0; ix < resolution; ++ix) {
            const Vector x{box[0].lower + (static_cast<double>(ix) + 0.5) * dx, box[1].lower + (static_cast<double>(iy) + 0.5) * dy};
            auto [y, signature] = forward_with_signature(net, x);
            auto [it, inserted] = ids.try_emplace(signature, map.signatures.size());
            if (inserted) map.signatures.push_back(signature);
            map.cells.push_back({x[0], x[1], it->second, argmax(y)});
        }
    }
    return map;
}

inline void write_region_csv(std::ostream& out, const RegionMap& map) {
    out << "x0,x1,signature_id,label\n";
    out.precision(17);
    for (const auto& c : map.cells) out << c.x0 << ',' << c.x1 << ',' << c.signature_id << ',' << c.label << '\n';
}

/// "+-+" style rendering of a signature.
[[nodiscard]] inline std::string signature_string(const ActivationSignature& s) {
    std::string out;
    for (auto st : s) out += st == ActivationState::activated ? '+' : '-';
    return out;
}

// ---------------------------------------------------------------------------
// Overlap table

struct OverlapTable {
    std::vector<int> labels;
    std::vector<std::vector<double>> ratio; // ratio[row][col] = overlap_ratio(naps[col], naps[row])
    std::vector<double> column_max;         // excluding the diagonal
};

[[nodiscard]] inline OverlapTable overlap_table(const std::map<int, Nap>& naps, OverlapMode mode = OverlapMode::support) {
    if (naps.size() < 2) throw DomainError("overlap table needs at least two NAPs");
    OverlapTable t;
    std::vector<const Nap*> ordered;
    for (const auto& [label, nap] : naps) {
        if (nap.trivial()) throw DomainError("overlap table: NAP for label " + std::to_string(label) + " is trivial");
        t.labels.push_back(label);
        ordered.push_back(&nap);
    }
    const std::size_t n = ordered.size();
    t.ratio.assign(n, std::vector<double>(n, 0.0));
    t.column_max.assign(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            t.ratio[r][c] = overlap_ratio(*ordered[c], *ordered[r], mode);
            if (r != c) t.column_max[c] = std::max(t.column_max[c], t.ratio[r][c]);
        }
    }
    return t;
}

inline void write_overlap_csv(std::ostream& out, const OverlapTable& t) {
    out << "row";
    for (int l : t.labels) out << ',' << l;
    out << '\n';
    out.precision(17);
    for (std::size_t r = 0; r < t.labels.size(); ++r) {
        out << t.labels[r];
        for (double v : t.ratio[r]) out << ',' << v;
        out << '\n';
    }
    out << "max";
    for (double v : t.column_max) out << ',' << v;
    out << '\n';
}

} // namespace napv
