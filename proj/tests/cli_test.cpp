#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "support.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

fs::path scratch() {
    static const fs::path dir = [] {
        auto p = fs::temp_directory_path() / ("napv_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

Run napv_run(const std::string& args) {
    const auto err_path = scratch() / "stderr.txt";
    const std::string cmd = std::string(NAPV_CLI_PATH) + " " + args + " 2>" + err_path.string();
    Run r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int status = ::pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = slurp(err_path);
    return r;
}

std::string xnet_path() { return testing_support::fixture("xnet.json"); }

std::string write_nap(const std::string& name, const std::string& json) {
    const auto p = scratch() / name;
    std::ofstream(p) << json;
    return p.string();
}

int expected_code(const std::string& outcome) {
    if (outcome == "verified") return 0;
    if (outcome == "falsified") return 1;
    return 2;
}

std::string strip_times(const std::string& s) {
    static const std::regex time_field("\"time_ms\":[0-9]+");
    return std::regex_replace(s, time_field, "\"time_ms\":0");
}

std::size_t line_count(const std::string& s) {
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

} // namespace

TEST(Cli, VerifyRobustVerified) {
    const auto r = napv_run("verify-robust --model " + xnet_path() + " --center 0.06,0.06 --epsilon 0.04");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto doc = nlohmann::json::parse(r.out);
    EXPECT_EQ(doc["outcome"], "verified");
    EXPECT_EQ(doc["label"], 0);
}

TEST(Cli, VerifyRobustFalsifiedWithCsv) {
    const auto r = napv_run("verify-robust --model " + xnet_path() + " --center 0.06,0.06 --epsilon 0.9 --csv");
    EXPECT_EQ(r.code, 1) << r.err;
    EXPECT_EQ(r.out.rfind("target,outcome,time_ms,witness\n1,falsified,", 0), 0u);
}

TEST(Cli, MineThreeOnes) {
    const auto r = napv_run("mine --model " + xnet_path() + " --dataset " + testing_support::fixture("three_ones.csv") +
                            " --delta 1.0 --label 1");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto doc = nlohmann::json::parse(r.out);
    EXPECT_EQ(doc["activated"], nlohmann::json::array({1}));
    EXPECT_EQ(doc["deactivated"], nlohmann::json::array({0, 2}));
    EXPECT_EQ(doc["label"], 1);
}

TEST(Cli, NapRobustFalsifiedWitness) {
    const auto nap = write_nap("nap1.json", R"({"label":1,"activated":[1],"deactivated":[0,2]})");
    const auto r = napv_run("verify-nap-robust --model " + xnet_path() + " --nap " + nap);
    ASSERT_EQ(r.code, 1) << r.err;
    const auto doc = nlohmann::json::parse(r.out);
    EXPECT_EQ(doc["outcome"], "falsified");
    ASSERT_EQ(doc["witness"].size(), 2u);
    const auto net = testing_support::xnet();
    const napv::Vector w{doc["witness"][0].get<double>(), doc["witness"][1].get<double>()};
    EXPECT_EQ(napv::predict(net, w), 0u);
    EXPECT_TRUE(napv::follows(net, w, napv::Nap({1}, {0, 2})));
}

TEST(Cli, AmbiguityBoundaryOnly) {
    const auto a = write_nap("amb_a.json", R"({"label":1,"activated":[0],"deactivated":[]})");
    const auto b = write_nap("amb_b.json", R"({"label":0,"activated":[],"deactivated":[2]})");
    const auto r = napv_run("check-ambiguity --model " + xnet_path() + " --nap " + a + " --nap " + b +
                            " --domain-lo 0 --domain-hi 0.3");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto doc = nlohmann::json::parse(r.out);
    EXPECT_EQ(doc["result"], "boundary-only");
}

TEST(Cli, ExitCodeMatchesOutcome) {
    const auto zero = write_nap("zero.json", R"({"label":0,"activated":[0,2],"deactivated":[1]})");
    const std::string cases[] = {
        "verify-robust --model " + xnet_path() + " --center 0.06,0.06 --epsilon 0.04",
        "verify-robust --model " + xnet_path() + " --center 0.06,0.06 --epsilon 0.9",
        "verify-nap-robust --model " + xnet_path() + " --nap " + zero,
        "verify-augmented --model " + xnet_path() + " --nap " + zero + " --center 0.9,0.1 --epsilon 0.5",
        "verify-robust --model " + xnet_path() + " --center 0.06,0.06 --epsilon 0.04 --timeout-s 0",
    };
    for (const auto& c : cases) {
        const auto r = napv_run(c);
        const auto doc = nlohmann::json::parse(r.out);
        EXPECT_EQ(r.code, expected_code(doc["outcome"].get<std::string>())) << c;
    }
    const auto timed = napv_run(cases[4]);
    EXPECT_EQ(timed.code, 2);
}

TEST(Cli, OutputIsDeterministic) {
    const auto nap = write_nap("det.json", R"({"label":1,"activated":[1],"deactivated":[0,2]})");
    const std::string cmds[] = {
        "verify-nap-robust --model " + xnet_path() + " --nap " + nap,
        "verify-robust --model " + xnet_path() + " --center 0.06,0.06 --epsilon 0.9 --targets all",
        "mine --model " + xnet_path() + " --dataset " + testing_support::fixture("three_ones.csv") + " --delta 1.0",
        "regions --model " + xnet_path() + " --resolution 8",
    };
    for (const auto& c : cmds) {
        const auto a = napv_run(c);
        const auto b = napv_run(c);
        EXPECT_EQ(a.code, b.code);
        EXPECT_EQ(strip_times(a.out), strip_times(b.out)) << c;
    }
}

TEST(Cli, OutFileMatchesStdout) {
    const auto path = (scratch() / "regions.csv").string();
    const auto a = napv_run("regions --model " + xnet_path() + " --resolution 4");
    const auto b = napv_run("regions --model " + xnet_path() + " --resolution 4 --out " + path);
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_EQ(slurp(path), a.out);
    EXPECT_EQ(line_count(a.out), 17u);
}

TEST(Cli, FollowsAndStats) {
    const auto nap = write_nap("f.json", R"({"label":1,"activated":[1],"deactivated":[0,2]})");
    const auto single = napv_run("follows --model " + xnet_path() + " --nap " + nap + " --center 0.1,0.9");
    ASSERT_EQ(single.code, 0) << single.err;
    EXPECT_EQ(nlohmann::json::parse(single.out)["results"][0]["follows"], true);

    const auto data = napv_run("follows --model " + xnet_path() + " --nap " + nap + " --dataset " +
                               testing_support::fixture("three_ones.csv"));
    ASSERT_EQ(data.code, 0) << data.err;
    EXPECT_EQ(data.out.rfind("index,label,nap0\n", 0), 0u);
    EXPECT_EQ(line_count(data.out), 4u);

    const auto stats = napv_run("stats --model " + xnet_path() + " --nap " + nap + " --dataset " +
                                testing_support::fixture("three_ones.csv"));
    ASSERT_EQ(stats.code, 0) << stats.err;
    EXPECT_EQ(stats.out.rfind("label,followers_same,followers_other,total_same\n1,3,0,3", 0), 0u);
}

TEST(Cli, DistancesAndOverlap) {
    const auto d = napv_run("distances --dataset " + testing_support::fixture("three_ones.csv") + " --norm all --bins 4");
    ASSERT_EQ(d.code, 0) << d.err;
    EXPECT_EQ(d.out.rfind("label,norm,min,max,mean\n", 0), 0u);
    EXPECT_EQ(line_count(d.out), 4u);

    const auto a = write_nap("ov_a.json", R"({"label":0,"activated":[0,2],"deactivated":[1]})");
    const auto b = write_nap("ov_b.json", R"({"label":1,"activated":[1],"deactivated":[0,2]})");
    const auto o = napv_run("overlap --model " + xnet_path() + " --nap " + a + " --nap " + b);
    ASSERT_EQ(o.code, 0) << o.err;
    EXPECT_EQ(o.out, "row,0,1\n0,1,1\n1,1,1\nmax,1,1\n");
    const auto p = napv_run("overlap --model " + xnet_path() + " --nap " + a + " --nap " + b + " --polarity");
    EXPECT_EQ(p.out, "row,0,1\n0,1,0\n1,0,1\nmax,0,0\n");
}

TEST(Cli, UsageErrorsExitThree) {
    const auto bad_nap = write_nap("bad.json", R"({"activated":[0],"deactivated":[0]})");
    const std::string cases[] = {
        "",
        "no-such-command",
        "verify-robust --model " + xnet_path() + " --center 0.06,0.06",
        "verify-robust --model /nonexistent.json --center 0.06,0.06 --epsilon 0.1",
        "verify-robust --model " + xnet_path() + " --center 0.06 --epsilon 0.1",
        "verify-robust --model " + xnet_path() + " --center 0.06,0.06 --epsilon 0.1 --label 1",
        "verify-robust --model " + xnet_path() + " --center 0.06,0.06 --epsilon 0.1 --targets 0",
        "mine --model " + xnet_path() + " --dataset " + testing_support::fixture("three_ones.csv") + " --delta 0.5",
        "verify-nap-robust --model " + xnet_path() + " --nap " + bad_nap + " --label 0",
        "verify-nap-robust --model " + xnet_path() + " --nap " + write_nap("nolabel.json", R"({"activated":[1]})"),
    };
    for (const auto& c : cases) {
        const auto r = napv_run(c);
        EXPECT_EQ(r.code, 3) << c;
        EXPECT_TRUE(r.out.empty()) << c;
        EXPECT_FALSE(r.err.empty()) << c;
    }
    const auto r = napv_run(cases[3]);
    EXPECT_EQ(line_count(r.err), 1u);
    EXPECT_EQ(r.err.rfind("napv: error: ", 0), 0u);
}

TEST(Cli, VersionAndHelp) {
    const auto v = napv_run("--version");
    EXPECT_EQ(v.code, 0);
    EXPECT_EQ(v.out.rfind("napv ", 0), 0u);
    const auto h = napv_run("--help");
    EXPECT_EQ(h.code, 0);
    EXPECT_NE(h.out.find("verify-nap-robust"), std::string::npos);
    const auto sub = napv_run("verify-augmented --help");
    EXPECT_EQ(sub.code, 0);
    EXPECT_NE(sub.out.find("--epsilon"), std::string::npos);
}
