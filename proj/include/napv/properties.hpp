#pragma once

// The robustness-style properties built on verify_query: plain ε-robustness,
// NAP robustness, NAP-augmented robustness, and non-ambiguity of two NAPs.
// Every "unsafe" set is the negation of the property for one target label j:
// F[j] - F[i] >= 0.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "napv/error.hpp"
#include "napv/model.hpp"
#include "napv/nap.hpp"
#include "napv/verify.hpp"

namespace napv {

enum class PropertyKind { plain_robust, nap_robust, augmented_robust, non_ambiguity };

struct PropertyQuery {
    PropertyKind kind = PropertyKind::plain_robust;
    std::size_t label = 0;
    std::optional<Vector> center;
    std::optional<double> epsilon;
    std::vector<Nap> naps;
    std::vector<std::size_t> targets; // empty = every j != label

    void validate(const Network& net) const {
        if (label >= net.output_dim()) throw ValidationError("label " + std::to_string(label) + " out of range");
        if (epsilon && *epsilon < 0.0) throw DomainError("epsilon must be non-negative");
        for (std::size_t j : targets) {
            if (j >= net.output_dim()) throw ValidationError("target " + std::to_string(j) + " out of range");
        }
        for (const Nap& n : naps) check_nap(net, n);
        const bool needs_center = kind == PropertyKind::plain_robust || kind == PropertyKind::augmented_robust;
        if (needs_center && (!center || !epsilon)) throw ValidationError("query needs a center and an epsilon");
        if (kind != PropertyKind::plain_robust && kind != PropertyKind::non_ambiguity && naps.size() != 1) {
            throw ValidationError("query needs exactly one NAP");
        }
        if (kind == PropertyKind::non_ambiguity) {
            if (naps.size() != 2) throw ValidationError("non-ambiguity needs two NAPs");
            if (naps[0].label && naps[1].label && *naps[0].label == *naps[1].label) {
                throw ValidationError("non-ambiguity needs NAPs of two different labels");
            }
        }
    }
};

struct FalsifyBudget {
    std::size_t samples = 10000;
    std::size_t refine_steps = 100;
};

struct PropertyConfig {
    SearchConfig search;
    bool falsify_first = true;
    FalsifyBudget budget;
};

struct TargetOutcome {
    std::size_t target = 0;
    VerifyOutcome outcome;
};

struct PropertyResult {
    std::size_t label = 0;
    std::vector<TargetOutcome> targets;
    std::optional<bool> center_follows; // augmented queries only

    /// falsified if any target is, else unknown if any is, else verified.
    [[nodiscard]] Verdict verdict() const {
        bool unknown = false;
        for (const auto& t : targets) {
            if (t.outcome.status == Verdict::falsified) return Verdict::falsified;
            unknown = unknown || t.outcome.status == Verdict::unknown;
        }
        return unknown ? Verdict::unknown : Verdict::verified;
    }
};

[[nodiscard]] inline LinearConstraint misclassification(std::size_t label, std::size_t target) {
    return LinearConstraint({{target, 1.0}, {label, -1.0}}, Relation::greater_equal, 0.0);
}

/// `requested` if non-empty, otherwise every label except `label`.
[[nodiscard]] inline std::vector<std::size_t> resolve_targets(const Network& net, std::size_t label,
                                                              std::span<const std::size_t> requested) {
    std::vector<std::size_t> out;
    if (requested.empty()) {
        for (std::size_t j = 0; j < net.output_dim(); ++j) {
            if (j != label) out.push_back(j);
        }
        return out;
    }
    for (std::size_t j : requested) {
        if (j >= net.output_dim()) throw ValidationError("target " + std::to_string(j) + " out of range");
        if (j == label) throw ValidationError("target set must not contain the reference label");
        out.push_back(j);
    }
    return out;
}

/// The single target (label + 1) mod L.
[[nodiscard]] inline std::vector<std::size_t> next_target(const Network& net, std::size_t label) {
    return {(label + 1) % net.output_dim()};
}

// ---------------------------------------------------------------------------
// Falsifier

struct FalsifyWitness {
    Vector x;
    std::size_t target = 0;
};

/// Random search plus coordinate descent on max_j F[j] - F[i] over the region.
/// Returned witnesses pass check_witness exactly; finding none proves nothing.
[[nodiscard]] inline std::optional<FalsifyWitness> falsify(const Network& net, const Region& region, std::size_t label,
                                                           std::span<const std::size_t> targets,
                                                           const FalsifyBudget& budget = {},
                                                           const SearchConfig& cfg = {}) {
    const Box box = effective_box(net, region, cfg);
    if (box_empty(box) || targets.empty()) return std::nullopt;

    struct Scored {
        double score;
        std::size_t target;
    };
    auto score = [&](std::span<const double> x) -> std::optional<Scored> {
        const auto [y, signature] = forward_with_signature(net, x);
        if (region.nap && !follows(signature, *region.nap)) return std::nullopt;
        Scored best{-std::numeric_limits<double>::infinity(), targets[0]};
        for (std::size_t j : targets) {
            if (y[j] - y[label] > best.score) best = {y[j] - y[label], j};
        }
        return best;
    };
    auto accept = [&](const Vector& x, std::size_t j) -> std::optional<FalsifyWitness> {
        const LinearConstraint unsafe[] = {misclassification(label, j)};
        if (check_witness(net, box, region.nap, unsafe, x, cfg.lp_tolerance) == WitnessCheck::valid) {
            return FalsifyWitness{x, j};
        }
        return std::nullopt;
    };

    std::mt19937_64 rng(cfg.seed);
    std::vector<std::uniform_real_distribution<double>> coord;
    for (const auto& i : box) coord.emplace_back(i.lower, i.upper);

    Vector x(box.size());
    std::optional<Vector> best_x;
    Scored best{-std::numeric_limits<double>::infinity(), targets[0]};
    for (std::size_t s = 0; s < budget.samples; ++s) {
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = coord[i](rng);
        const auto sc = score(x);
        if (!sc) continue;
        if (sc->score >= 0.0) {
            if (auto w = accept(x, sc->target)) return w;
        }
        if (sc->score > best.score) {
            best = *sc;
            best_x = x;
        }
    }
    if (!best_x) return std::nullopt;

    double step = 0.25;
    for (std::size_t it = 0; it < budget.refine_steps; ++it) {
        bool improved = false;
        for (std::size_t i = 0; i < box.size() && !improved; ++i) {
            for (double dir : {1.0, -1.0}) {
                Vector cand = *best_x;
                const double width = box[i].upper - box[i].lower;
                cand[i] = std::clamp(cand[i] + dir * step * width, box[i].lower, box[i].upper);
                const auto sc = score(cand);
                if (sc && sc->score > best.score) {
                    best = *sc;
                    best_x = std::move(cand);
                    improved = true;
                    break;
                }
            }
        }
        if (best.score >= 0.0) {
            if (auto w = accept(*best_x, best.target)) return w;
        }
        if (!improved) step *= 0.5;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Robustness properties

namespace detail {

inline std::vector<TargetOutcome> verify_targets(const Network& net, const Region& region, std::size_t label,
                                                 std::span<const std::size_t> targets, const PropertyConfig& cfg) {
    std::vector<TargetOutcome> out;
    for (std::size_t j : targets) {
        TargetOutcome t{j, {}};
        const std::size_t one[] = {j};
        std::optional<FalsifyWitness> quick;
        if (cfg.falsify_first) quick = falsify(net, region, label, one, cfg.budget, cfg.search);
        if (quick) {
            t.outcome.status = Verdict::falsified;
            t.outcome.witness = quick->x;
            std::optional<Box> pre_clip;
            (void)effective_box(net, region, cfg.search, &pre_clip);
            t.outcome.stats.pre_clip_box = pre_clip;
        } else {
            const LinearConstraint unsafe[] = {misclassification(label, j)};
            t.outcome = verify_query(net, region, unsafe, cfg.search);
        }
        if (t.outcome.status == Verdict::falsified) t.outcome.violated_target = j;
        out.push_back(std::move(t));
    }
    return out;
}

inline void require_prediction(const Network& net, std::span<const double> x, std::size_t label) {
    const std::size_t got = predict(net, x);
    if (got != label) {
        throw ValidationError("center is predicted as " + std::to_string(got) + ", not " + std::to_string(label));
    }
}

} // namespace detail

/// ε-robustness of the prediction at x over box(x, ε) ∩ domain.
[[nodiscard]] inline PropertyResult verify_plain_robustness(const Network& net, std::span<const double> x, double eps,
                                                            std::span<const std::size_t> targets = {},
                                                            const PropertyConfig& cfg = {}) {
    if (eps < 0.0) throw DomainError("epsilon must be non-negative");
    PropertyResult result;
    result.label = predict(net, x);
    const auto resolved = resolve_targets(net, result.label, targets);
    result.targets = detail::verify_targets(net, Region{linf_ball(x, eps), std::nullopt}, result.label, resolved, cfg);
    return result;
}

/// Every domain input following `nap` is classified as `label`.
[[nodiscard]] inline PropertyResult verify_nap_robustness(const Network& net, const Nap& nap, std::size_t label,
                                                          std::span<const std::size_t> targets = {},
                                                          const PropertyConfig& cfg = {}) {
    if (label >= net.output_dim()) throw ValidationError("label " + std::to_string(label) + " out of range");
    PropertyResult result;
    result.label = label;
    const auto resolved = resolve_targets(net, label, targets);
    result.targets = detail::verify_targets(net, Region{{}, nap}, label, resolved, cfg);
    return result;
}

/// Robustness over box(x, ε) ∩ {follows nap} ∩ domain. The center need not
/// follow the NAP; whether it does is reported in `center_follows`.
[[nodiscard]] inline PropertyResult verify_augmented_robustness(const Network& net, std::span<const double> x,
                                                                double eps, const Nap& nap, std::size_t label,
                                                                std::span<const std::size_t> targets = {},
                                                                const PropertyConfig& cfg = {}) {
    if (eps < 0.0) throw DomainError("epsilon must be non-negative");
    detail::require_prediction(net, x, label);
    PropertyResult result;
    result.label = label;
    result.center_follows = follows(net, x, nap);
    const auto resolved = resolve_targets(net, label, targets);
    result.targets = detail::verify_targets(net, Region{linf_ball(x, eps), nap}, label, resolved, cfg);
    return result;
}

enum class AmbiguityStatus { non_ambiguous_trivial, non_ambiguous_verified, ambiguous, boundary_only, unknown };

[[nodiscard]] inline const char* to_string(AmbiguityStatus s) noexcept {
    switch (s) {
    case AmbiguityStatus::non_ambiguous_trivial: return "non-ambiguous-trivial";
    case AmbiguityStatus::non_ambiguous_verified: return "non-ambiguous-verified";
    case AmbiguityStatus::ambiguous: return "ambiguous";
    case AmbiguityStatus::boundary_only: return "boundary-only";
    case AmbiguityStatus::unknown: return "unknown";
    }
    return "unknown";
}

struct AmbiguityResult {
    AmbiguityStatus status = AmbiguityStatus::unknown;
    std::optional<Vector> witness;
    std::string reason;
    SearchStats stats;

    /// Verdict of "the two NAPs are non-ambiguous".
    [[nodiscard]] Verdict verdict() const {
        switch (status) {
        case AmbiguityStatus::ambiguous: return Verdict::falsified;
        case AmbiguityStatus::unknown: return Verdict::unknown;
        default: return Verdict::verified;
        }
    }
};

[[nodiscard]] inline bool intersects(const std::set<NeuronId>& a, const std::set<NeuronId>& b) {
    for (NeuronId k : a) {
        if (b.contains(k)) return true;
    }
    return false;
}

/// Can any input in `domain` follow both NAPs? An empty `domain` means the
/// configured global domain.
[[nodiscard]] inline AmbiguityResult check_non_ambiguity(const Network& net, const Nap& first, const Nap& second,
                                                         const Box& domain = {}, const SearchConfig& cfg = {}) {
    check_nap(net, first);
    check_nap(net, second);
    AmbiguityResult result;
    if (intersects(first.activated, second.deactivated) || intersects(second.activated, first.deactivated)) {
        result.status = AmbiguityStatus::non_ambiguous_trivial;
        return result;
    }
    Nap joint = first;
    joint.label.reset();
    joint.delta.reset();
    joint.activated.insert(second.activated.begin(), second.activated.end());
    joint.deactivated.insert(second.deactivated.begin(), second.deactivated.end());

    const VerifyOutcome o = verify_query(net, Region{domain, joint}, {}, cfg);
    result.stats = o.stats;
    result.witness = o.witness;
    result.reason = o.reason;
    switch (o.status) {
    case Verdict::falsified: result.status = AmbiguityStatus::ambiguous; break;
    case Verdict::unknown: result.status = AmbiguityStatus::unknown; break;
    case Verdict::verified:
        result.status = o.boundary ? AmbiguityStatus::boundary_only : AmbiguityStatus::non_ambiguous_verified;
        break;
    }
    return result;
}

/// Dispatches a query to the matching property check. Non-ambiguity results
/// are reported as a single pseudo-target equal to `label`.
[[nodiscard]] inline PropertyResult run_property(const Network& net, const PropertyQuery& q,
                                                 const PropertyConfig& cfg = {}) {
    q.validate(net);
    switch (q.kind) {
    case PropertyKind::plain_robust: {
        detail::require_prediction(net, *q.center, q.label);
        return verify_plain_robustness(net, *q.center, *q.epsilon, q.targets, cfg);
    }
    case PropertyKind::nap_robust: return verify_nap_robustness(net, q.naps[0], q.label, q.targets, cfg);
    case PropertyKind::augmented_robust:
        return verify_augmented_robustness(net, *q.center, *q.epsilon, q.naps[0], q.label, q.targets, cfg);
    case PropertyKind::non_ambiguity: {
        const auto amb = check_non_ambiguity(net, q.naps[0], q.naps[1], {}, cfg.search);
        PropertyResult r;
        r.label = q.label;
        VerifyOutcome o;
        o.status = amb.verdict();
        o.witness = amb.witness;
        o.boundary = amb.status == AmbiguityStatus::boundary_only;
        o.reason = amb.reason;
        o.stats = amb.stats;
        r.targets.push_back({q.label, o});
        return r;
    }
    }
    throw ValidationError("unknown property kind");
}

// ---------------------------------------------------------------------------
// Output

[[nodiscard]] inline std::string format_witness(const std::optional<Vector>& w) {
    if (!w) return {};
    std::ostringstream out;
    out.precision(17);
    for (std::size_t i = 0; i < w->size(); ++i) out << (i ? ";" : "") << (*w)[i];
    return out.str();
}

inline void write_targets_csv(std::ostream& out, const PropertyResult& r) {
    out << "target,outcome,time_ms,witness\n";
    for (const auto& t : r.targets) {
        out << t.target << ',' << to_string(t.outcome.status) << ',' << t.outcome.stats.time_ms << ','
            << format_witness(t.outcome.witness) << '\n';
    }
}

/// Top-level fields follow the single-query verdict record; the aggregate
/// witness is the first falsifying one.
[[nodiscard]] inline nlohmann::json to_json(const PropertyResult& r) {
    SearchStats total;
    std::optional<Vector> witness;
    bool boundary = false;
    nlohmann::json per_target = nlohmann::json::array();
    for (const auto& t : r.targets) {
        total += t.outcome.stats;
        if (!witness && t.outcome.status == Verdict::falsified) {
            witness = t.outcome.witness;
            boundary = t.outcome.boundary;
        }
        nlohmann::json item = to_json(t.outcome);
        item["target"] = t.target;
        per_target.push_back(std::move(item));
    }
    if (r.verdict() != Verdict::falsified) {
        for (const auto& t : r.targets) boundary = boundary || t.outcome.boundary;
    }
    nlohmann::json doc = {{"outcome", to_string(r.verdict())},
                          {"witness", witness ? nlohmann::json(*witness) : nlohmann::json(nullptr)},
                          {"boundary", boundary},
                          {"stats", {{"branches", total.branches}, {"lp_calls", total.lp_calls}, {"time_ms", total.time_ms}}},
                          {"label", r.label},
                          {"targets", std::move(per_target)}};
    if (r.center_follows) doc["center_follows"] = *r.center_follows;
    return doc;
}

[[nodiscard]] inline nlohmann::json to_json(const AmbiguityResult& r) {
    return {{"outcome", to_string(r.verdict())},
            {"result", to_string(r.status)},
            {"witness", r.witness ? nlohmann::json(*r.witness) : nlohmann::json(nullptr)},
            {"boundary", r.status == AmbiguityStatus::boundary_only},
            {"stats", {{"branches", r.stats.branches}, {"lp_calls", r.stats.lp_calls}, {"time_ms", r.stats.time_ms}}}};
}

} // namespace napv
