// Walks through the XNET example: inference, pattern extraction, mining and
// the three verification queries. Usage: xnet_walkthrough [path/to/xnet.json]

#include <fstream>
#include <iostream>

#include "napv/analysis.hpp"
#include "napv/nap.hpp"
#include "napv/properties.hpp"

namespace {

void print_outcome(const char* what, const napv::PropertyResult& r) {
    std::cout << what << ": " << napv::to_string(r.verdict());
    for (const auto& t : r.targets) {
        if (t.outcome.witness) std::cout << " witness " << napv::format_witness(t.outcome.witness);
    }
    std::cout << '\n';
}

} // namespace

int main(int argc, char** argv) {
    const char* path = argc > 1 ? argv[1] : "tests/fixtures/xnet.json";
    std::ifstream in(path);
    if (!in) {
        std::cerr << "cannot open " << path << '\n';
        return 3;
    }
    const auto net = napv::load_network(in);

    const napv::Vector x{0.06, 0.06};
    const auto [y, sig] = napv::forward_with_signature(net, x);
    std::cout << "forward(0.06, 0.06) = (" << y[0] << ", " << y[1] << "), signature " << napv::signature_string(sig)
              << ", label " << napv::argmax(y) << '\n';

    const std::vector<napv::Vector> ones{{0.1, 0.9}, {0.05, 0.8}, {0.2, 0.75}};
    const auto mined = napv::mine(net, ones, 1.0, 1);
    std::cout << "mined NAP for label 1: " << napv::to_json(mined.nap).dump() << '\n';

    print_outcome("0.04-robust at (0.06, 0.06)", napv::verify_plain_robustness(net, x, 0.04));

    const napv::Nap zero_nap({0, 2}, {1}, 0);
    print_outcome("NAP ({0,2},{1}) robust for label 0", napv::verify_nap_robustness(net, zero_nap, 0));
    print_outcome("NAP ({1},{0,2}) robust for label 1", napv::verify_nap_robustness(net, mined.nap, 1));

    const auto amb = napv::check_non_ambiguity(net, napv::Nap({0}, {}, 1), napv::Nap({}, {2}, 0),
                                               napv::uniform_box(2, 0.0, 0.3));
    std::cout << "ambiguity on [0, 0.3]^2: " << napv::to_string(amb.status) << " witness "
              << napv::format_witness(amb.witness) << '\n';

    napv::write_region_csv(std::cout, napv::linear_region_map(net, napv::uniform_box(2, 0.0, 1.0), 4));
}
