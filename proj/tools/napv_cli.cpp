// napv command-line driver. Exit codes: 0 verified/success, 1 falsified or
// ambiguous, 2 unknown/timeout, 3 usage or input error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "napv/analysis.hpp"
#include "napv/dataset.hpp"
#include "napv/model.hpp"
#include "napv/nap.hpp"
#include "napv/properties.hpp"
#include "napv/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFalsified = 1;
constexpr int kExitUnknown = 2;
constexpr int kExitUsage = 3;

struct Options {
    std::string model;
    std::string dataset;
    std::vector<std::string> naps;
    std::optional<double> delta;
    std::optional<double> epsilon;
    std::optional<int> label;
    std::string center;
    std::string targets = "all";
    double domain_lo = 0.0;
    double domain_hi = 1.0;
    int timeout_s = 600;
    std::size_t workers = 1;
    std::uint64_t seed = 0;
    std::string out;
    bool no_clip_check = false;
    bool csv = false;
    std::string norm = "linf";
    std::size_t bins = 100;
    std::size_t max_samples = 2000;
    std::size_t resolution = 200;
    bool polarity = false;
    std::string hist_out;
};

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::ifstream open_input(const std::string& path, const char* what) {
    if (path.empty()) throw UsageError(std::string("missing --") + what);
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open " + path);
    return in;
}

napv::Network load_model(const Options& o) {
    auto in = open_input(o.model, "model");
    return napv::load_network(in);
}

std::vector<napv::LabeledSample> load_data(const Options& o, const napv::Network& net) {
    auto in = open_input(o.dataset, "dataset");
    napv::DatasetOptions opts;
    opts.check_range = !o.no_clip_check;
    opts.expected_dim = net.input_dim();
    return napv::load_dataset(in, opts);
}

std::vector<napv::Nap> load_naps(const Options& o, const napv::Network& net) {
    if (o.naps.empty()) throw UsageError("missing --nap");
    std::vector<napv::Nap> all;
    for (const auto& path : o.naps) {
        auto in = open_input(path, "nap");
        for (auto& n : napv::load_naps(in)) {
            napv::check_nap(net, n);
            all.push_back(std::move(n));
        }
    }
    return all;
}

napv::Vector parse_vector(const std::string& text, std::size_t dim) {
    napv::Vector v;
    std::stringstream in(text);
    std::string field;
    while (std::getline(in, field, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(field, &used));
            if (used != field.size()) throw std::invalid_argument(field);
        } catch (const std::exception&) {
            throw UsageError("--center: cannot parse '" + field + "'");
        }
    }
    if (v.size() != dim) {
        throw UsageError("--center has " + std::to_string(v.size()) + " values, model expects " + std::to_string(dim));
    }
    return v;
}

napv::Vector center(const Options& o, const napv::Network& net) {
    if (o.center.empty()) throw UsageError("missing --center");
    return parse_vector(o.center, net.input_dim());
}

double epsilon(const Options& o) {
    if (!o.epsilon) throw UsageError("missing --epsilon");
    if (*o.epsilon < 0.0) throw UsageError("--epsilon must be non-negative");
    return *o.epsilon;
}

std::vector<std::size_t> targets(const Options& o, const napv::Network& net, std::size_t label) {
    if (o.targets == "all") return {};
    if (o.targets == "next") return napv::next_target(net, label);
    std::vector<std::size_t> out;
    std::stringstream in(o.targets);
    std::string field;
    while (std::getline(in, field, ',')) {
        try {
            std::size_t used = 0;
            const long v = std::stol(field, &used);
            if (used != field.size() || v < 0) throw std::invalid_argument(field);
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw UsageError("--targets: expected all, next or a comma-separated label list");
        }
    }
    return out;
}

napv::SearchConfig search_config(const Options& o, const napv::Network& net) {
    if (!(o.domain_lo <= o.domain_hi)) throw UsageError("--domain-lo must not exceed --domain-hi");
    if (o.workers == 0) throw UsageError("--workers must be positive");
    napv::SearchConfig cfg;
    cfg.domain = napv::uniform_box(net.input_dim(), o.domain_lo, o.domain_hi);
    cfg.timeout_s = o.timeout_s;
    cfg.workers = o.workers;
    cfg.seed = o.seed;
    return cfg;
}

napv::PropertyConfig property_config(const Options& o, const napv::Network& net) {
    napv::PropertyConfig cfg;
    cfg.search = search_config(o, net);
    return cfg;
}

class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw UsageError("cannot write " + path);
        }
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

private:
    std::ofstream file_;
};

void emit_json(const Options& o, const nlohmann::json& doc) {
    Output out(o.out);
    out.stream() << doc.dump(2) << '\n';
}

int exit_code(napv::Verdict v) {
    switch (v) {
    case napv::Verdict::verified: return kExitOk;
    case napv::Verdict::falsified: return kExitFalsified;
    case napv::Verdict::unknown: return kExitUnknown;
    }
    return kExitUnknown;
}

int emit_property(const Options& o, const napv::PropertyResult& r) {
    if (o.csv) {
        Output out(o.out);
        napv::write_targets_csv(out.stream(), r);
    } else {
        emit_json(o, napv::to_json(r));
    }
    return exit_code(r.verdict());
}

// ---------------------------------------------------------------------------
// Commands

int cmd_mine(const Options& o) {
    const auto net = load_model(o);
    const auto data = load_data(o, net);
    if (!o.delta) throw UsageError("missing --delta");
    std::vector<int> labels;
    if (o.label) {
        labels.push_back(*o.label);
    } else {
        std::map<int, bool> seen;
        for (const auto& s : data) seen[s.label] = true;
        for (const auto& [l, _] : seen) labels.push_back(l);
    }
    nlohmann::json docs = nlohmann::json::array();
    for (int label : labels) {
        const auto xs = napv::samples_with_label(data, label);
        if (xs.empty()) throw UsageError("no samples with label " + std::to_string(label));
        const auto report = napv::mine(net, xs, *o.delta, label);
        std::cerr << "label " << label << ": |A|=" << report.nap.activated.size() << " |D|=" << report.nap.deactivated.size()
                  << " followers " << report.follower_count << "/" << report.sample_count << '\n';
        docs.push_back(napv::to_json(report.nap));
    }
    emit_json(o, docs.size() == 1 ? docs[0] : docs);
    return kExitOk;
}

int cmd_follows(const Options& o) {
    const auto net = load_model(o);
    const auto naps = load_naps(o, net);
    if (!o.center.empty()) {
        const auto x = center(o, net);
        const auto e = napv::extract(net, x);
        nlohmann::json results = nlohmann::json::array();
        for (const auto& n : naps) {
            results.push_back({{"label", n.label ? nlohmann::json(*n.label) : nlohmann::json(nullptr)},
                               {"follows", napv::follows(net, x, n)}});
        }
        emit_json(o, {{"input", x}, {"pattern", napv::to_json(e)}, {"results", results}});
        return kExitOk;
    }
    const auto data = load_data(o, net);
    Output out(o.out);
    out.stream() << "index,label";
    for (std::size_t i = 0; i < naps.size(); ++i) out.stream() << ",nap" << i;
    out.stream() << '\n';
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto signature = napv::forward_with_signature(net, data[i].x).second;
        out.stream() << i << ',' << data[i].label;
        for (const auto& n : naps) out.stream() << ',' << (napv::follows(signature, n) ? 1 : 0);
        out.stream() << '\n';
    }
    return kExitOk;
}

std::map<int, napv::Nap> naps_by_label(const std::vector<napv::Nap>& naps) {
    std::map<int, napv::Nap> out;
    for (const auto& n : naps) {
        if (!n.label) throw UsageError("every NAP needs a label for this command");
        if (!out.emplace(*n.label, n).second) throw UsageError("two NAPs for label " + std::to_string(*n.label));
    }
    return out;
}

int cmd_stats(const Options& o) {
    const auto net = load_model(o);
    const auto data = load_data(o, net);
    const auto rows = napv::nap_stats(net, data, naps_by_label(load_naps(o, net)));
    Output out(o.out);
    napv::write_stats_csv(out.stream(), rows);
    return kExitOk;
}

int cmd_verify_robust(const Options& o) {
    const auto net = load_model(o);
    const auto x = center(o, net);
    const auto eps = epsilon(o);
    const std::size_t label = napv::predict(net, x);
    if (o.label && static_cast<std::size_t>(*o.label) != label) {
        throw UsageError("center is predicted as " + std::to_string(label) + ", not " + std::to_string(*o.label));
    }
    return emit_property(o, napv::verify_plain_robustness(net, x, eps, targets(o, net, label), property_config(o, net)));
}

const napv::Nap& single_nap(const std::vector<napv::Nap>& naps) {
    if (naps.size() != 1) throw UsageError("expected exactly one NAP, got " + std::to_string(naps.size()));
    return naps[0];
}

int cmd_verify_nap_robust(const Options& o) {
    const auto net = load_model(o);
    const auto naps = load_naps(o, net);
    const auto& nap = single_nap(naps);
    const std::optional<int> label = o.label ? o.label : nap.label;
    if (!label) throw UsageError("missing --label (the NAP file has none)");
    if (*label < 0) throw UsageError("--label must be non-negative");
    const auto l = static_cast<std::size_t>(*label);
    return emit_property(o, napv::verify_nap_robustness(net, nap, l, targets(o, net, l), property_config(o, net)));
}

int cmd_verify_augmented(const Options& o) {
    const auto net = load_model(o);
    const auto naps = load_naps(o, net);
    const auto& nap = single_nap(naps);
    const auto x = center(o, net);
    const auto eps = epsilon(o);
    const std::size_t l = o.label ? static_cast<std::size_t>(*o.label) : napv::predict(net, x);
    const auto r = napv::verify_augmented_robustness(net, x, eps, nap, l, targets(o, net, l), property_config(o, net));
    if (r.center_follows && !*r.center_follows) std::cerr << "note: center does not follow the NAP\n";
    return emit_property(o, r);
}

int cmd_check_ambiguity(const Options& o) {
    const auto net = load_model(o);
    const auto naps = load_naps(o, net);
    if (naps.size() != 2) throw UsageError("check-ambiguity needs exactly two NAPs, got " + std::to_string(naps.size()));
    if (naps[0].label && naps[1].label && *naps[0].label == *naps[1].label) {
        throw UsageError("check-ambiguity needs NAPs of two different labels");
    }
    const auto cfg = search_config(o, net);
    const auto r = napv::check_non_ambiguity(net, naps[0], naps[1], *cfg.domain, cfg);
    emit_json(o, napv::to_json(r));
    return exit_code(r.verdict());
}

napv::Norm parse_norm(const std::string& s) {
    if (s == "l1" || s == "L1") return napv::Norm::l1;
    if (s == "l2" || s == "L2") return napv::Norm::l2;
    if (s == "linf" || s == "Linf") return napv::Norm::linf;
    throw UsageError("--norm must be l1, l2, linf or all");
}

int cmd_distances(const Options& o) {
    if (o.dataset.empty()) throw UsageError("missing --dataset");
    std::ifstream in = open_input(o.dataset, "dataset");
    napv::DatasetOptions dopts;
    dopts.check_range = !o.no_clip_check;
    const auto data = napv::load_dataset(in, dopts);
    std::vector<napv::Norm> norms;
    if (o.norm == "all") {
        norms = {napv::Norm::l1, napv::Norm::l2, napv::Norm::linf};
    } else {
        norms.push_back(parse_norm(o.norm));
    }
    napv::DistanceOptions opts;
    opts.bins = o.bins;
    opts.max_samples = o.max_samples;
    opts.seed = o.seed;
    std::vector<napv::DistanceStats> all;
    for (auto norm : norms) {
        auto report = napv::pairwise_distances(data, norm, opts);
        if (norm == norms.front()) {
            for (int l : report.skipped) std::cerr << "notice: label " << l << " has fewer than two samples, skipped\n";
        }
        all.insert(all.end(), report.labels.begin(), report.labels.end());
    }
    Output out(o.out);
    napv::write_distance_summary_csv(out.stream(), all);
    if (!o.hist_out.empty()) {
        Output hist(o.hist_out);
        napv::write_distance_histogram_csv(hist.stream(), all);
    }
    return kExitOk;
}

int cmd_regions(const Options& o) {
    const auto net = load_model(o);
    const auto cfg = search_config(o, net);
    const auto map = napv::linear_region_map(net, *cfg.domain, o.resolution);
    std::cerr << map.signatures.size() << " distinct signatures\n";
    Output out(o.out);
    napv::write_region_csv(out.stream(), map);
    return kExitOk;
}

int cmd_overlap(const Options& o) {
    const auto net = load_model(o);
    const auto table = napv::overlap_table(naps_by_label(load_naps(o, net)),
                                           o.polarity ? napv::OverlapMode::polarity : napv::OverlapMode::support);
    Output out(o.out);
    napv::write_overlap_csv(out.stream(), table);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// Flag wiring

void add_model(CLI::App* c, Options& o) { c->add_option("--model", o.model, "model file")->required(); }
void add_dataset(CLI::App* c, Options& o, bool required = true) {
    auto* opt = c->add_option("--dataset", o.dataset, "dataset CSV");
    if (required) opt->required();
    c->add_flag("--no-clip-check", o.no_clip_check, "accept dataset values outside [0, 1]");
}
void add_naps(CLI::App* c, Options& o) { c->add_option("--nap", o.naps, "NAP file (repeatable)")->required(); }
void add_label(CLI::App* c, Options& o) { c->add_option("--label", o.label, "reference label"); }
void add_center(CLI::App* c, Options& o) {
    c->add_option("--center", o.center, "comma-separated input, e.g. 0.06,0.06")->required();
    c->add_option("--epsilon", o.epsilon, "L-infinity radius")->required();
}
void add_domain(CLI::App* c, Options& o) {
    c->add_option("--domain-lo", o.domain_lo, "global input domain lower bound")->capture_default_str();
    c->add_option("--domain-hi", o.domain_hi, "global input domain upper bound")->capture_default_str();
}
void add_search(CLI::App* c, Options& o) {
    add_domain(c, o);
    c->add_option("--targets", o.targets, "all, next, or comma-separated labels")->capture_default_str();
    c->add_option("--timeout-s", o.timeout_s, "per-query timeout in seconds")->capture_default_str();
    c->add_option("--workers", o.workers, "branch-and-bound worker threads")->capture_default_str();
    c->add_option("--seed", o.seed, "seed for the falsifier")->capture_default_str();
    c->add_flag("--csv", o.csv, "write the per-target table as CSV");
}
void add_out(CLI::App* c, Options& o) { c->add_option("--out", o.out, "output path (default stdout)"); }

} // namespace

int main(int argc, char** argv) {
    Options o;
    CLI::App app{"Mine and verify neural activation patterns of ReLU networks", "napv"};
    app.set_version_flag("--version", std::string("napv ") + NAPV_VERSION);
    app.require_subcommand(1);

    auto* mine = app.add_subcommand("mine", "mine delta-relaxed NAPs per label");
    add_model(mine, o);
    add_dataset(mine, o);
    mine->add_option("--delta", o.delta, "relaxation in (0.5, 1]")->required();
    add_label(mine, o);
    add_out(mine, o);

    auto* follows = app.add_subcommand("follows", "check which inputs follow the NAPs");
    add_model(follows, o);
    add_naps(follows, o);
    add_dataset(follows, o, false);
    follows->add_option("--center", o.center, "single input instead of a dataset");
    add_out(follows, o);

    auto* stats = app.add_subcommand("stats", "follower counts per label");
    add_model(stats, o);
    add_dataset(stats, o);
    add_naps(stats, o);
    add_out(stats, o);

    auto* robust = app.add_subcommand("verify-robust", "epsilon-robustness around a center");
    add_model(robust, o);
    add_center(robust, o);
    add_label(robust, o);
    add_search(robust, o);
    add_out(robust, o);

    auto* nap_robust = app.add_subcommand("verify-nap-robust", "every NAP-following input keeps the label");
    add_model(nap_robust, o);
    add_naps(nap_robust, o);
    add_label(nap_robust, o);
    add_search(nap_robust, o);
    add_out(nap_robust, o);

    auto* augmented = app.add_subcommand("verify-augmented", "robustness over the epsilon box intersected with a NAP");
    add_model(augmented, o);
    add_naps(augmented, o);
    add_center(augmented, o);
    add_label(augmented, o);
    add_search(augmented, o);
    add_out(augmented, o);

    auto* ambiguity = app.add_subcommand("check-ambiguity", "can one input follow both NAPs");
    add_model(ambiguity, o);
    add_naps(ambiguity, o);
    add_domain(ambiguity, o);
    ambiguity->add_option("--timeout-s", o.timeout_s, "timeout in seconds")->capture_default_str();
    ambiguity->add_option("--workers", o.workers, "branch-and-bound worker threads")->capture_default_str();
    ambiguity->add_option("--seed", o.seed, "perturbation seed")->capture_default_str();
    add_out(ambiguity, o);

    auto* distances = app.add_subcommand("distances", "same-label pairwise distance statistics");
    add_dataset(distances, o);
    distances->add_option("--norm", o.norm, "l1, l2, linf or all")->capture_default_str();
    distances->add_option("--bins", o.bins, "histogram bins")->capture_default_str();
    distances->add_option("--max-samples", o.max_samples, "per-label subsample cap")->capture_default_str();
    distances->add_option("--seed", o.seed, "subsampling seed")->capture_default_str();
    distances->add_option("--hist-out", o.hist_out, "histogram CSV path");
    add_out(distances, o);

    auto* regions = app.add_subcommand("regions", "activation-region grid of a 2-input network");
    add_model(regions, o);
    add_domain(regions, o);
    regions->add_option("--resolution", o.resolution, "grid cells per axis")->capture_default_str();
    add_out(regions, o);

    auto* overlap = app.add_subcommand("overlap", "overlap ratios between labeled NAPs");
    add_model(overlap, o);
    add_naps(overlap, o);
    overlap->add_flag("--polarity", o.polarity, "count a shared neuron only if both give it the same state");
    add_out(overlap, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "napv: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (mine->parsed()) return cmd_mine(o);
        if (follows->parsed()) return cmd_follows(o);
        if (stats->parsed()) return cmd_stats(o);
        if (robust->parsed()) return cmd_verify_robust(o);
        if (nap_robust->parsed()) return cmd_verify_nap_robust(o);
        if (augmented->parsed()) return cmd_verify_augmented(o);
        if (ambiguity->parsed()) return cmd_check_ambiguity(o);
        if (distances->parsed()) return cmd_distances(o);
        if (regions->parsed()) return cmd_regions(o);
        if (overlap->parsed()) return cmd_overlap(o);
    } catch (const std::exception& e) {
        std::string msg = e.what();
        for (char& ch : msg) {
            if (ch == '\n') ch = ' ';
        }
        std::cerr << "napv: error: " << msg << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
