#pragma once

// Neural activation patterns: a pair (activated, deactivated) of disjoint
// hidden-neuron sets. `p ⪯ q` (p is at least as specific as q) holds when p's
// sets contain q's; an input follows q when its extracted pattern ⪯ q.

#include <algorithm>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "napv/error.hpp"
#include "napv/model.hpp"

namespace napv {

struct Nap {
    std::set<NeuronId> activated;
    std::set<NeuronId> deactivated;
    std::optional<int> label;
    std::optional<double> delta;

    Nap() = default;
    Nap(std::set<NeuronId> a, std::set<NeuronId> d, std::optional<int> lbl = std::nullopt,
        std::optional<double> dlt = std::nullopt)
        : activated(std::move(a)), deactivated(std::move(d)), label(lbl), delta(dlt) {
        for (NeuronId id : activated) {
            if (deactivated.contains(id)) {
                throw ValidationError("neuron " + std::to_string(id) + " is both activated and deactivated");
            }
        }
    }

    /// Number of neurons the pattern constrains.
    [[nodiscard]] std::size_t size() const noexcept { return activated.size() + deactivated.size(); }
    [[nodiscard]] bool trivial() const noexcept { return size() == 0; }

    /// Neurons with a state in this pattern, polarity dropped.
    [[nodiscard]] std::set<NeuronId> support() const {
        std::set<NeuronId> out = activated;
        out.insert(deactivated.begin(), deactivated.end());
        return out;
    }

    /// Same sets; label and delta are metadata.
    [[nodiscard]] bool same_pattern(const Nap& other) const noexcept {
        return activated == other.activated && deactivated == other.deactivated;
    }
};

/// Throws ValidationError if any neuron id is out of range for `net`.
inline void check_nap(const Network& net, const Nap& nap) {
    auto check = [&](const std::set<NeuronId>& s) {
        if (!s.empty() && *s.rbegin() >= net.hidden_count()) {
            throw ValidationError("NAP references neuron " + std::to_string(*s.rbegin()) + " but network has " +
                                  std::to_string(net.hidden_count()) + " hidden neurons");
        }
    };
    check(nap.activated);
    check(nap.deactivated);
}

[[nodiscard]] inline Nap nap_from_signature(const ActivationSignature& signature) {
    Nap nap;
    for (NeuronId k = 0; k < signature.size(); ++k) {
        (signature[k] == ActivationState::activated ? nap.activated : nap.deactivated).insert(k);
    }
    return nap;
}

/// The complete pattern of `x`: every hidden neuron lands in exactly one set.
[[nodiscard]] inline Nap extract(const Network& net, std::span<const double> x) {
    return nap_from_signature(forward_with_signature(net, x).second);
}

/// True iff `specific ⪯ abstract`.
[[nodiscard]] inline bool subsumes(const Nap& specific, const Nap& abstract) {
    return std::includes(specific.activated.begin(), specific.activated.end(), abstract.activated.begin(),
                         abstract.activated.end()) &&
           std::includes(specific.deactivated.begin(), specific.deactivated.end(), abstract.deactivated.begin(),
                         abstract.deactivated.end());
}

[[nodiscard]] inline bool follows(const ActivationSignature& signature, const Nap& nap) {
    for (NeuronId k : nap.activated) {
        if (signature.at(k) != ActivationState::activated) return false;
    }
    for (NeuronId k : nap.deactivated) {
        if (signature.at(k) != ActivationState::deactivated) return false;
    }
    return true;
}

/// Equivalent to subsumes(extract(net, x), nap) without building the pattern.
[[nodiscard]] inline bool follows(const Network& net, std::span<const double> x, const Nap& nap) {
    check_nap(net, nap);
    return follows(forward_with_signature(net, x).second, nap);
}

// ---------------------------------------------------------------------------
// Mining

struct MiningReport {
    Nap nap;
    std::vector<double> frequencies; // c_k / |S| per hidden neuron
    std::size_t sample_count = 0;
    std::size_t follower_count = 0;

    [[nodiscard]] double follower_fraction() const noexcept {
        return sample_count == 0 ? 0.0 : static_cast<double>(follower_count) / static_cast<double>(sample_count);
    }
};

namespace detail {

inline void check_delta(double delta) {
    if (!(delta > 0.5 && delta <= 1.0)) {
        throw DomainError("delta must lie in (0.5, 1.0], got " + std::to_string(delta));
    }
}

inline Nap threshold_counts(std::span<const std::size_t> counts, std::size_t n, double delta) {
    Nap nap;
    for (NeuronId k = 0; k < counts.size(); ++k) {
        const double freq = static_cast<double>(counts[k]) / static_cast<double>(n);
        if (freq >= delta) {
            nap.activated.insert(k);
        } else if (freq <= 1.0 - delta) {
            nap.deactivated.insert(k);
        }
    }
    return nap;
}

} // namespace detail

/// Per-neuron activation counts over `samples` (one integer per hidden neuron).
[[nodiscard]] inline std::vector<std::size_t> activation_counts(const Network& net,
                                                                std::span<const Vector> samples) {
    std::vector<std::size_t> counts(net.hidden_count(), 0);
    for (const Vector& x : samples) {
        const auto signature = forward_with_signature(net, x).second;
        for (NeuronId k = 0; k < signature.size(); ++k) {
            counts[k] += signature[k] == ActivationState::activated ? 1 : 0;
        }
    }
    return counts;
}

/// δ-relaxed pattern from per-neuron activation frequency. Neurons with
/// frequency strictly between 1−δ and δ stay unconstrained.
[[nodiscard]] inline MiningReport mine(const Network& net, std::span<const Vector> samples, double delta,
                                       std::optional<int> label = std::nullopt) {
    detail::check_delta(delta);
    if (samples.empty()) {
        throw DomainError("cannot mine a NAP from an empty sample set");
    }
    const auto counts = activation_counts(net, samples);
    MiningReport report;
    report.sample_count = samples.size();
    report.nap = detail::threshold_counts(counts, samples.size(), delta);
    report.nap.label = label;
    report.nap.delta = delta;
    report.frequencies.reserve(counts.size());
    for (std::size_t c : counts) {
        report.frequencies.push_back(static_cast<double>(c) / static_cast<double>(samples.size()));
    }
    for (const Vector& x : samples) {
        report.follower_count += follows(net, x, report.nap) ? 1 : 0;
    }
    return report;
}

struct LabeledSample {
    int label = 0;
    Vector x;
};

struct NapStatsRow {
    int label = 0;
    std::size_t followers_same = 0;
    std::size_t followers_other = 0;
    std::size_t total_same = 0;
};

/// Per-label follower counts: same-label samples following naps[label], and
/// other-label samples following it.
[[nodiscard]] inline std::vector<NapStatsRow> nap_stats(const Network& net, std::span<const LabeledSample> eval_set,
                                                        const std::map<int, Nap>& naps) {
    for (const auto& s : eval_set) {
        if (!naps.contains(s.label)) {
            throw ValidationError("no NAP supplied for label " + std::to_string(s.label));
        }
    }
    for (const auto& [label, nap] : naps) check_nap(net, nap);

    std::vector<NapStatsRow> rows;
    std::map<int, std::size_t> row_of;
    for (const auto& [label, nap] : naps) {
        row_of[label] = rows.size();
        rows.push_back({label, 0, 0, 0});
    }
    for (const auto& s : eval_set) {
        const auto signature = forward_with_signature(net, s.x).second;
        rows[row_of[s.label]].total_same += 1;
        for (const auto& [label, nap] : naps) {
            if (!follows(signature, nap)) continue;
            auto& row = rows[row_of[label]];
            (label == s.label ? row.followers_same : row.followers_other) += 1;
        }
    }
    return rows;
}

inline void write_stats_csv(std::ostream& out, std::span<const NapStatsRow> rows) {
    out << "label,followers_same,followers_other,total_same\n";
    for (const auto& r : rows) {
        out << r.label << ',' << r.followers_same << ',' << r.followers_other << ',' << r.total_same << '\n';
    }
}

enum class OverlapMode { support, polarity };

/// |N_a ∩ N_b| / |N_a|. In polarity mode a neuron counts only when both
/// patterns give it the same state.
[[nodiscard]] inline double overlap_ratio(const Nap& a, const Nap& b, OverlapMode mode = OverlapMode::support) {
    if (a.trivial()) {
        throw DomainError("overlap ratio is undefined for a trivial NAP");
    }
    std::size_t shared = 0;
    if (mode == OverlapMode::support) {
        const auto sb = b.support();
        for (NeuronId k : a.support()) shared += sb.contains(k) ? 1 : 0;
    } else {
        for (NeuronId k : a.activated) shared += b.activated.contains(k) ? 1 : 0;
        for (NeuronId k : a.deactivated) shared += b.deactivated.contains(k) ? 1 : 0;
    }
    return static_cast<double>(shared) / static_cast<double>(a.size());
}

// ---------------------------------------------------------------------------
// NAP file format

[[nodiscard]] inline nlohmann::json to_json(const Nap& nap) {
    nlohmann::json doc;
    doc["label"] = nap.label ? nlohmann::json(*nap.label) : nlohmann::json(nullptr);
    doc["delta"] = nap.delta ? nlohmann::json(*nap.delta) : nlohmann::json(nullptr);
    doc["neuron_indexing"] = "hidden-linear";
    doc["activated"] = std::vector<NeuronId>(nap.activated.begin(), nap.activated.end());
    doc["deactivated"] = std::vector<NeuronId>(nap.deactivated.begin(), nap.deactivated.end());
    return doc;
}

[[nodiscard]] inline Nap nap_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ParseError("nap: expected an object");
    if (doc.contains("neuron_indexing") && doc["neuron_indexing"] != "hidden-linear") {
        throw ParseError("nap: unsupported neuron_indexing " + doc["neuron_indexing"].dump());
    }
    auto ids = [&](const char* key) {
        std::set<NeuronId> out;
        if (!doc.contains(key) || !doc[key].is_array()) throw ParseError(std::string("nap: '") + key + "' must be an array");
        for (const auto& v : doc[key]) {
            if (!v.is_number_integer() || v.get<long long>() < 0) {
                throw ParseError(std::string("nap: '") + key + "' entries must be non-negative integers");
            }
            out.insert(v.get<NeuronId>());
        }
        return out;
    };
    std::optional<int> label;
    std::optional<double> delta;
    if (doc.contains("label") && !doc["label"].is_null()) {
        if (!doc["label"].is_number_integer()) throw ParseError("nap: label must be an integer or null");
        label = doc["label"].get<int>();
    }
    if (doc.contains("delta") && !doc["delta"].is_null()) {
        if (!doc["delta"].is_number()) throw ParseError("nap: delta must be a number or null");
        delta = doc["delta"].get<double>();
    }
    return Nap(ids("activated"), ids("deactivated"), label, delta);
}

/// Accepts one NAP object or an array of them.
[[nodiscard]] inline std::vector<Nap> load_naps(std::istream& in) {
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("nap: ") + e.what());
    }
    std::vector<Nap> out;
    if (doc.is_array()) {
        for (const auto& item : doc) out.push_back(nap_from_json(item));
    } else {
        out.push_back(nap_from_json(doc));
    }
    return out;
}

inline void save_nap(const Nap& nap, std::ostream& out) { out << to_json(nap).dump(2) << '\n'; }

} // namespace napv
