#pragma once

// Complete verification of "no input in the region satisfies all unsafe
// constraints" for ReLU networks: interval bound propagation over a partial
// phase assignment, depth-first case splits on ReLUs whose sign is undecided,
// and an LP feasibility check once every phase is fixed.
//
// LP variable layout: inputs, then hidden pre-activations, then hidden
// post-activations, then outputs.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "napv/error.hpp"
#include "napv/lp.hpp"
#include "napv/model.hpp"
#include "napv/nap.hpp"

namespace napv {

struct Interval {
    double lower = 0.0;
    double upper = 0.0;

    [[nodiscard]] bool empty() const noexcept { return lower > upper; }
    [[nodiscard]] bool contains(double v) const noexcept { return lower <= v && v <= upper; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

using Box = std::vector<Interval>;

/// [x - eps, x + eps] per coordinate.
[[nodiscard]] inline Box linf_ball(std::span<const double> center, double eps) {
    Box box;
    box.reserve(center.size());
    for (double c : center) box.push_back({c - eps, c + eps});
    return box;
}

[[nodiscard]] inline Box uniform_box(std::size_t dim, double lo, double hi) { return Box(dim, Interval{lo, hi}); }

[[nodiscard]] inline bool box_empty(const Box& box) {
    return std::any_of(box.begin(), box.end(), [](const Interval& i) { return i.empty(); });
}

[[nodiscard]] inline bool box_contains(const Box& box, std::span<const double> x) {
    if (box.size() != x.size()) return false;
    for (std::size_t i = 0; i < box.size(); ++i) {
        if (!box[i].contains(x[i])) return false;
    }
    return true;
}

[[nodiscard]] inline Box intersect(const Box& a, const Box& b) {
    Box out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = {std::max(a[i].lower, b[i].lower), std::min(a[i].upper, b[i].upper)};
    }
    return out;
}

enum class Phase : std::uint8_t { free, active, inactive };
using PhaseAssignment = std::vector<Phase>;

/// Input region: box ∩ {x follows nap}. An empty box means the global domain.
struct Region {
    Box box;
    std::optional<Nap> nap;
};

[[nodiscard]] inline PhaseAssignment phases_from_nap(const Network& net, const std::optional<Nap>& nap) {
    PhaseAssignment phases(net.hidden_count(), Phase::free);
    if (nap) {
        check_nap(net, *nap);
        for (NeuronId k : nap->activated) phases[k] = Phase::active;
        for (NeuronId k : nap->deactivated) phases[k] = Phase::inactive;
    }
    return phases;
}

struct VariableLayout {
    std::size_t inputs = 0;
    std::size_t hidden = 0;
    std::size_t outputs = 0;

    explicit VariableLayout(const Network& net)
        : inputs(net.input_dim()), hidden(net.hidden_count()), outputs(net.output_dim()) {}

    [[nodiscard]] std::size_t input(std::size_t i) const noexcept { return i; }
    [[nodiscard]] std::size_t pre(NeuronId k) const noexcept { return inputs + k; }
    [[nodiscard]] std::size_t post(NeuronId k) const noexcept { return inputs + hidden + k; }
    [[nodiscard]] std::size_t output(std::size_t j) const noexcept { return inputs + 2 * hidden + j; }
    [[nodiscard]] std::size_t count() const noexcept { return inputs + 2 * hidden + outputs; }
};

/// Active: {post = pre, pre >= 0}. Inactive: {post = 0, pre <= 0}. Free: nothing.
[[nodiscard]] inline std::vector<LinearConstraint> encode_phase_constraints(const Network& net,
                                                                            const PhaseAssignment& phases) {
    const VariableLayout layout(net);
    std::vector<LinearConstraint> out;
    for (NeuronId k = 0; k < phases.size(); ++k) {
        if (phases[k] == Phase::active) {
            out.emplace_back(std::vector<LinearTerm>{{layout.post(k), 1.0}, {layout.pre(k), -1.0}}, Relation::equal, 0.0);
            out.emplace_back(std::vector<LinearTerm>{{layout.pre(k), 1.0}}, Relation::greater_equal, 0.0);
        } else if (phases[k] == Phase::inactive) {
            out.emplace_back(std::vector<LinearTerm>{{layout.post(k), 1.0}}, Relation::equal, 0.0);
            out.emplace_back(std::vector<LinearTerm>{{layout.pre(k), 1.0}}, Relation::less_equal, 0.0);
        }
    }
    return out;
}

/// Affine layer equations: pre = W·(previous post or input) + b, output likewise.
[[nodiscard]] inline std::vector<LinearConstraint> encode_affine_layers(const Network& net) {
    const VariableLayout layout(net);
    std::vector<LinearConstraint> out;
    const auto& layers = net.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const Layer& layer = layers[l];
        const bool last = l + 1 == layers.size();
        for (std::size_t r = 0; r < layer.outputs; ++r) {
            std::vector<LinearTerm> terms;
            terms.push_back({last ? layout.output(r) : layout.pre(net.layer_offset(l) + r), 1.0});
            for (std::size_t c = 0; c < layer.inputs; ++c) {
                const std::size_t src = l == 0 ? layout.input(c) : layout.post(net.layer_offset(l - 1) + c);
                terms.push_back({src, -layer.weight(r, c)});
            }
            out.emplace_back(std::move(terms), Relation::equal, layer.bias[r]);
        }
    }
    return out;
}

struct NeuronBounds {
    std::vector<Interval> pre;
    std::vector<Interval> post;
    std::vector<Interval> output;
};

namespace detail {

inline void interval_affine(const Layer& layer, std::span<const Interval> in, std::vector<Interval>& out) {
    out.resize(layer.outputs);
    for (std::size_t r = 0; r < layer.outputs; ++r) {
        double lo = layer.bias[r];
        double hi = layer.bias[r];
        for (std::size_t c = 0; c < layer.inputs; ++c) {
            const double w = layer.weight(r, c);
            if (w >= 0.0) {
                lo += w * in[c].lower;
                hi += w * in[c].upper;
            } else {
                lo += w * in[c].upper;
                hi += w * in[c].lower;
            }
        }
        out[r] = {lo, hi};
    }
}

} // namespace detail

/// Sound pre-activation intervals for inputs in `box` consistent with `phases`,
/// optionally intersected with `limits` (one interval per hidden neuron).
/// Returns nullopt when the phases contradict the bounds beyond `tolerance`.
[[nodiscard]] inline std::optional<NeuronBounds> propagate_bounds(const Network& net, const Box& box,
                                                                  const PhaseAssignment& phases,
                                                                  std::span<const Interval> limits = {},
                                                                  double tolerance = 1e-7) {
    if (box.size() != net.input_dim()) throw DimensionError("box dimension does not match network input");
    if (phases.size() != net.hidden_count()) throw DimensionError("phase assignment does not cover hidden neurons");
    if (!limits.empty() && limits.size() != net.hidden_count()) {
        throw DimensionError("pre-activation limits do not cover hidden neurons");
    }
    if (box_empty(box)) return std::nullopt;

    NeuronBounds out;
    out.pre.reserve(net.hidden_count());
    out.post.reserve(net.hidden_count());
    std::vector<Interval> current(box.begin(), box.end());
    std::vector<Interval> next;
    const auto& layers = net.layers();
    NeuronId k = 0;
    for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
        detail::interval_affine(layers[l], current, next);
        current.clear();
        for (Interval v : next) {
            if (!limits.empty()) {
                v.lower = std::max(v.lower, limits[k].lower);
                v.upper = std::min(v.upper, limits[k].upper);
                if (v.lower > v.upper + tolerance) return std::nullopt;
            }
            Interval post;
            switch (phases[k]) {
            case Phase::active:
                if (v.upper < -tolerance) return std::nullopt;
                v.lower = std::max(v.lower, 0.0);
                v.upper = std::max(v.upper, 0.0);
                post = v;
                break;
            case Phase::inactive:
                if (v.lower > tolerance) return std::nullopt;
                v.upper = std::min(v.upper, 0.0);
                v.lower = std::min(v.lower, 0.0);
                post = {0.0, 0.0};
                break;
            case Phase::free:
                post = {std::max(v.lower, 0.0), std::max(v.upper, 0.0)};
                break;
            }
            out.pre.push_back(v);
            out.post.push_back(post);
            current.push_back(post);
            ++k;
        }
    }
    detail::interval_affine(layers.back(), current, out.output);
    return out;
}

/// Fixes free neurons whose sign is already decided by `bounds`
/// (upper <= 0 ⇒ inactive, lower >= 0 ⇒ active). Returns how many were fixed.
inline std::size_t tighten_implied(PhaseAssignment& phases, const NeuronBounds& bounds) {
    std::size_t fixed = 0;
    for (NeuronId k = 0; k < phases.size(); ++k) {
        if (phases[k] != Phase::free) continue;
        if (bounds.pre[k].upper <= 0.0) {
            phases[k] = Phase::inactive;
            ++fixed;
        } else if (bounds.pre[k].lower >= 0.0) {
            phases[k] = Phase::active;
            ++fixed;
        }
    }
    return fixed;
}

struct BranchDecision {
    NeuronId neuron = 0;
    PhaseAssignment active_child;
    PhaseAssignment inactive_child;
};

/// Picks the free neuron straddling zero with the largest min(-lower, upper);
/// ties go to the lowest id. nullopt when no free neuron straddles zero.
[[nodiscard]] inline std::optional<BranchDecision> branch(const PhaseAssignment& phases, const NeuronBounds& bounds) {
    std::optional<NeuronId> best;
    double best_score = -1.0;
    for (NeuronId k = 0; k < phases.size(); ++k) {
        if (phases[k] != Phase::free) continue;
        const Interval& v = bounds.pre[k];
        if (!(v.lower < 0.0 && v.upper > 0.0)) continue;
        const double score = std::min(-v.lower, v.upper);
        if (score > best_score) {
            best = k;
            best_score = score;
        }
    }
    if (!best) return std::nullopt;
    BranchDecision d{*best, phases, phases};
    d.active_child[*best] = Phase::active;
    d.inactive_child[*best] = Phase::inactive;
    return d;
}

// ---------------------------------------------------------------------------
// Outcomes

enum class Verdict { verified, falsified, unknown };

[[nodiscard]] inline const char* to_string(Verdict v) noexcept {
    switch (v) {
    case Verdict::verified: return "verified";
    case Verdict::falsified: return "falsified";
    case Verdict::unknown: return "unknown";
    }
    return "unknown";
}

struct SearchStats {
    std::size_t branches = 0;
    std::size_t lp_calls = 0;
    std::int64_t time_ms = 0;
    std::optional<Box> pre_clip_box; // set when the query box was clipped to the domain

    SearchStats& operator+=(const SearchStats& o) {
        branches += o.branches;
        lp_calls += o.lp_calls;
        time_ms += o.time_ms;
        return *this;
    }
};

/// `boundary` marks witnesses that only touch the region or unsafe set at an
/// activation/constraint boundary. A verified outcome with `boundary` set means
/// verified except on such a measure-zero set, with `witness` as an example.
struct VerifyOutcome {
    Verdict status = Verdict::unknown;
    std::optional<Vector> witness;
    bool boundary = false;
    std::optional<std::size_t> violated_target;
    std::string reason;
    SearchStats stats;
};

[[nodiscard]] inline nlohmann::json to_json(const VerifyOutcome& o) {
    nlohmann::json stats = {{"branches", o.stats.branches}, {"lp_calls", o.stats.lp_calls}, {"time_ms", o.stats.time_ms}};
    if (o.stats.pre_clip_box) {
        std::vector<double> lo, hi;
        for (const auto& i : *o.stats.pre_clip_box) {
            lo.push_back(i.lower);
            hi.push_back(i.upper);
        }
        stats["pre_clip_lo"] = lo;
        stats["pre_clip_hi"] = hi;
    }
    nlohmann::json doc = {{"outcome", to_string(o.status)},
                          {"witness", o.witness ? nlohmann::json(*o.witness) : nlohmann::json(nullptr)},
                          {"boundary", o.boundary},
                          {"stats", std::move(stats)}};
    if (!o.reason.empty()) doc["reason"] = o.reason;
    return doc;
}

struct SearchConfig {
    std::optional<Box> domain; // defaults to [0, 1]^d
    double timeout_s = 600.0;
    std::size_t workers = 1;
    double lp_tolerance = 1e-7;
    double strict_margin = 1e-6; // first-pass slack on strict activation and unsafe rows
    std::size_t perturbation_trials = 100;
    double perturbation_radius = 1e-6;
    std::uint64_t seed = 0;
};

enum class WitnessCheck { valid, boundary, invalid };

/// Independent re-check of a candidate counterexample with forward and the
/// strict follows predicate. Unsafe rows are over output indices; `valid`
/// needs them to hold exactly, `boundary` within `tolerance`.
[[nodiscard]] inline WitnessCheck check_witness(const Network& net, const Box& box, const std::optional<Nap>& nap,
                                                std::span<const LinearConstraint> unsafe, std::span<const double> x,
                                                double tolerance = 1e-7) {
    if (!box_contains(box, x)) return WitnessCheck::invalid;
    const auto [y, signature] = forward_with_signature(net, x);
    if (nap && !follows(signature, *nap)) return WitnessCheck::invalid;
    WitnessCheck result = WitnessCheck::valid;
    for (const auto& c : unsafe) {
        const double miss = c.violation(y);
        if (miss > tolerance) return WitnessCheck::invalid;
        if (miss > 0.0) result = WitnessCheck::boundary;
    }
    return result;
}

namespace detail {

inline Interval widen(Interval i) {
    return {i.lower - 1e-9 * (1.0 + std::abs(i.lower)), i.upper + 1e-9 * (1.0 + std::abs(i.upper))};
}

class BranchAndBound {
public:
    BranchAndBound(const Network& net, Box box, std::optional<Nap> nap, std::span<const LinearConstraint> unsafe,
                   const SearchConfig& cfg)
        : net_(net), box_(std::move(box)), nap_(std::move(nap)), unsafe_(unsafe.begin(), unsafe.end()), cfg_(cfg),
          layout_(net), start_(std::chrono::steady_clock::now()) {
        base_ = encode_affine_layers(net);
    }

    VerifyOutcome run() {
        PhaseAssignment root = phases_from_nap(net_, nap_);
        if (cfg_.workers <= 1) {
            run_sequential(std::move(root));
        } else {
            run_parallel(std::move(root));
        }
        VerifyOutcome out;
        out.stats.branches = branches_.load();
        out.stats.lp_calls = lp_calls_.load();
        out.stats.time_ms = elapsed_ms();
        if (falsified_) {
            out.status = Verdict::falsified;
            out.witness = falsified_->first;
            out.boundary = falsified_->second;
        } else if (!unknown_reason_.empty()) {
            out.status = Verdict::unknown;
            out.reason = unknown_reason_;
        } else {
            out.status = Verdict::verified;
            if (boundary_witness_) {
                out.boundary = true;
                out.witness = boundary_witness_;
            }
        }
        return out;
    }

private:
    enum class LeafResult { cleared, cleared_boundary, falsified, unstable };

    std::int64_t elapsed_ms() const {
        return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start_).count();
    }
    bool timed_out() const { return static_cast<double>(elapsed_ms()) >= cfg_.timeout_s * 1000.0; }

    // Returns the children to explore (active first) or none when the node is closed.
    std::vector<PhaseAssignment> expand(PhaseAssignment phases, std::uint64_t node_seed) {
        auto bounds = propagate_bounds(net_, box_, phases, {}, cfg_.lp_tolerance);
        if (!bounds) return {};
        if (unsafe_excluded(*bounds)) return {};
        tighten_implied(phases, *bounds);
        if (auto d = branch(phases, *bounds)) {
            ++branches_;
            std::vector<PhaseAssignment> children;
            children.push_back(std::move(d->active_child));
            children.push_back(std::move(d->inactive_child));
            return children;
        }
        solve_leaf(phases, *bounds, node_seed);
        return {};
    }

    // Interval of each unsafe row pushed back through the last affine layer.
    bool unsafe_excluded(const NeuronBounds& bounds) const {
        const Layer& last = net_.layers().back();
        std::vector<Interval> src;
        if (net_.hidden_count() == 0) {
            src = box_;
        } else {
            const std::size_t off = net_.layer_offset(net_.hidden_layer_count() - 1);
            src.assign(bounds.post.begin() + static_cast<std::ptrdiff_t>(off), bounds.post.end());
        }
        for (const auto& c : unsafe_) {
            double lo = 0.0, hi = 0.0;
            std::vector<double> combined(last.inputs, 0.0);
            for (const auto& t : c.terms) {
                lo += t.coefficient * last.bias[t.variable];
                for (std::size_t i = 0; i < last.inputs; ++i) combined[i] += t.coefficient * last.weight(t.variable, i);
            }
            hi = lo;
            for (std::size_t i = 0; i < last.inputs; ++i) {
                const double w = combined[i];
                lo += w >= 0.0 ? w * src[i].lower : w * src[i].upper;
                hi += w >= 0.0 ? w * src[i].upper : w * src[i].lower;
            }
            const double tol = cfg_.lp_tolerance * std::max(1.0, c.scale());
            const bool excluded = (c.relation == Relation::greater_equal && hi < c.rhs - tol) ||
                                  (c.relation == Relation::less_equal && lo > c.rhs + tol) ||
                                  (c.relation == Relation::equal && (hi < c.rhs - tol || lo > c.rhs + tol));
            if (excluded) return true;
        }
        return false;
    }

    LinearProgram leaf_program(const PhaseAssignment& phases, const NeuronBounds& bounds, double margin) const {
        LinearProgram lp(layout_.count());
        for (std::size_t i = 0; i < layout_.inputs; ++i) lp.bounds[layout_.input(i)] = {box_[i].lower, box_[i].upper};
        for (NeuronId k = 0; k < layout_.hidden; ++k) {
            const Interval pre = widen(bounds.pre[k]);
            const Interval post = widen(bounds.post[k]);
            lp.bounds[layout_.pre(k)] = {pre.lower, pre.upper};
            lp.bounds[layout_.post(k)] = {std::max(0.0, post.lower), post.upper};
        }
        for (std::size_t j = 0; j < layout_.outputs; ++j) {
            const Interval y = widen(bounds.output[j]);
            lp.bounds[layout_.output(j)] = {y.lower, y.upper};
        }
        lp.constraints = base_;
        for (auto& c : encode_phase_constraints(net_, phases)) lp.add(std::move(c));
        if (margin > 0.0 && nap_) {
            for (NeuronId k : nap_->activated) {
                lp.add(LinearConstraint({{layout_.pre(k), 1.0}}, Relation::greater_equal, margin));
            }
        }
        for (const auto& c : unsafe_) {
            std::vector<LinearTerm> terms;
            for (const auto& t : c.terms) terms.push_back({layout_.output(t.variable), t.coefficient});
            double rhs = c.rhs;
            if (c.relation == Relation::greater_equal) rhs += margin;
            if (c.relation == Relation::less_equal) rhs -= margin;
            lp.add(LinearConstraint(std::move(terms), c.relation, rhs));
        }
        return lp;
    }

    Vector input_part(const Vector& point) const {
        Vector x(point.begin(), point.begin() + static_cast<std::ptrdiff_t>(layout_.inputs));
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], box_[i].lower, box_[i].upper);
        return x;
    }

    WitnessCheck check(std::span<const double> x) const {
        return check_witness(net_, box_, nap_, unsafe_, x, cfg_.lp_tolerance);
    }

    std::optional<Vector> perturb(const Vector& center, std::uint64_t seed) const {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> step(-cfg_.perturbation_radius, cfg_.perturbation_radius);
        Vector x(center.size());
        for (std::size_t t = 0; t < cfg_.perturbation_trials; ++t) {
            for (std::size_t i = 0; i < x.size(); ++i) {
                x[i] = std::clamp(center[i] + step(rng), box_[i].lower, box_[i].upper);
            }
            if (check(x) == WitnessCheck::valid) return x;
        }
        return std::nullopt;
    }

    std::optional<FeasibilityResult> solve(const LinearProgram& lp) {
        ++lp_calls_;
        try {
            return solve_feasibility(lp, SolverOptions{cfg_.lp_tolerance});
        } catch (const LpInstabilityError& e) {
            report_unknown(e.what());
            return std::nullopt;
        }
    }

    void solve_leaf(const PhaseAssignment& phases, const NeuronBounds& bounds, std::uint64_t node_seed) {
        // Pass 1: strict margins, so any witness should survive the exact re-check.
        if (auto strict = solve(leaf_program(phases, bounds, cfg_.strict_margin)); strict && strict->feasible()) {
            const Vector x = input_part(strict->point);
            if (check(x) == WitnessCheck::valid) return report_falsified(x, false);
            if (auto p = perturb(x, node_seed)) return report_falsified(*p, false);
        }
        // Pass 2: closed region; anything found here sits on a boundary.
        auto closed = solve(leaf_program(phases, bounds, 0.0));
        if (!closed) return;
        if (!closed->feasible()) return;
        const Vector x = input_part(closed->point);
        const auto status = check(x);
        if (status == WitnessCheck::valid) return report_falsified(x, true);
        if (auto p = perturb(x, node_seed ^ 0x9e3779b97f4a7c15ULL)) return report_falsified(*p, false);
        std::lock_guard lock(mutex_);
        if (!boundary_witness_) boundary_witness_ = x;
    }

    void report_falsified(const Vector& x, bool boundary) {
        std::lock_guard lock(mutex_);
        if (!falsified_) falsified_ = {x, boundary};
        stop_ = true;
    }

    void report_unknown(const std::string& reason) {
        std::lock_guard lock(mutex_);
        if (unknown_reason_.empty()) unknown_reason_ = reason;
    }

    void run_sequential(PhaseAssignment root) {
        std::vector<PhaseAssignment> stack;
        stack.push_back(std::move(root));
        std::uint64_t counter = 0;
        while (!stack.empty() && !stop_) {
            if (timed_out()) {
                report_unknown("timeout");
                return;
            }
            PhaseAssignment node = std::move(stack.back());
            stack.pop_back();
            auto children = expand(std::move(node), cfg_.seed + counter++);
            for (auto it = children.rbegin(); it != children.rend(); ++it) stack.push_back(std::move(*it));
        }
    }

    void run_parallel(PhaseAssignment root) {
        std::deque<PhaseAssignment> queue;
        queue.push_back(std::move(root));
        std::size_t in_flight = 0;
        std::uint64_t counter = 0;
        std::mutex qmutex;
        std::condition_variable cv;
        auto worker = [&] {
            while (true) {
                PhaseAssignment node;
                std::uint64_t seed = 0;
                {
                    std::unique_lock lock(qmutex);
                    cv.wait(lock, [&] { return stop_ || !queue.empty() || in_flight == 0; });
                    if (stop_ || queue.empty()) {
                        cv.notify_all();
                        return;
                    }
                    node = std::move(queue.back());
                    queue.pop_back();
                    ++in_flight;
                    seed = cfg_.seed + counter++;
                }
                if (timed_out()) {
                    report_unknown("timeout");
                    stop_ = true;
                }
                std::vector<PhaseAssignment> children;
                if (!stop_) children = expand(std::move(node), seed);
                {
                    std::lock_guard lock(qmutex);
                    for (auto it = children.rbegin(); it != children.rend(); ++it) queue.push_back(std::move(*it));
                    --in_flight;
                }
                cv.notify_all();
            }
        };
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < cfg_.workers; ++i) pool.emplace_back(worker);
    }

    const Network& net_;
    Box box_;
    std::optional<Nap> nap_;
    std::vector<LinearConstraint> unsafe_;
    SearchConfig cfg_;
    VariableLayout layout_;
    std::chrono::steady_clock::time_point start_;
    std::vector<LinearConstraint> base_;

    std::atomic<std::size_t> branches_{0};
    std::atomic<std::size_t> lp_calls_{0};
    std::atomic<bool> stop_{false};
    std::mutex mutex_;
    std::optional<std::pair<Vector, bool>> falsified_;
    std::optional<Vector> boundary_witness_;
    std::string unknown_reason_;
};

} // namespace detail

/// Resolved query box: the region box (or the domain when empty) clipped to
/// the global domain. Records the original box in `pre_clip` when clipping
/// changed it.
[[nodiscard]] inline Box effective_box(const Network& net, const Region& region, const SearchConfig& cfg,
                                       std::optional<Box>* pre_clip = nullptr) {
    const Box domain = cfg.domain ? *cfg.domain : uniform_box(net.input_dim(), 0.0, 1.0);
    if (domain.size() != net.input_dim()) throw DimensionError("domain dimension does not match network input");
    if (region.box.empty()) return domain;
    if (region.box.size() != net.input_dim()) throw DimensionError("region box dimension does not match network input");
    Box clipped = intersect(region.box, domain);
    if (pre_clip != nullptr && clipped != region.box) *pre_clip = region.box;
    return clipped;
}

/// Searches the region for an input whose outputs satisfy every `unsafe` row
/// (rows are over output indices). Verified means no such input exists,
/// except possibly on activation boundaries when `boundary` is set.
[[nodiscard]] inline VerifyOutcome verify_query(const Network& net, const Region& region,
                                                std::span<const LinearConstraint> unsafe,
                                                const SearchConfig& cfg = {}) {
    for (const auto& c : unsafe) {
        for (const auto& t : c.terms) {
            if (t.variable >= net.output_dim()) {
                throw ValidationError("unsafe constraint references output " + std::to_string(t.variable) +
                                      " but network has " + std::to_string(net.output_dim()) + " outputs");
            }
        }
    }
    if (region.nap) check_nap(net, *region.nap);

    std::optional<Box> pre_clip;
    Box box = effective_box(net, region, cfg, &pre_clip);
    if (box_empty(box)) {
        VerifyOutcome out;
        out.status = Verdict::verified;
        out.stats.pre_clip_box = pre_clip;
        return out;
    }
    detail::BranchAndBound search(net, std::move(box), region.nap, unsafe, cfg);
    VerifyOutcome out = search.run();
    out.stats.pre_clip_box = pre_clip;
    return out;
}

} // namespace napv
