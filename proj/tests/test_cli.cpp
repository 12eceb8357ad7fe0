// Command-line front end: parsing, schemas, determinism and file handling.

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <unistd.h>

#include "ffnet/cli.hpp"

using namespace ffnet;
using namespace ffnet::cli;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() /
               ("ffnet_cli_" + std::to_string(::getpid()) + "_" + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    int call(std::vector<std::string> args) {
        out_.str({});
        err_.str({});
        return run(args, out_, err_);
    }

    static std::string slurp(const std::string& p) {
        std::ifstream f(p, std::ios::binary);
        std::stringstream ss;
        ss << f.rdbuf();
        return ss.str();
    }

    std::vector<std::vector<std::string>> rows(const std::string& p) {
        std::vector<std::vector<std::string>> out;
        const std::string text = slurp(p);
        for (const auto& line : split(std::string_view(text).substr(0, text.size() - 1), '\n'))
            out.push_back(split(line, ','));
        return out;
    }

    fs::path dir_;
    std::ostringstream out_, err_;
};

} // namespace

TEST(CliFormat, ShortestRoundTrip) {
    std::mt19937_64 rng(211);
    std::uniform_real_distribution<double> U(-1e6, 1e6);
    for (int i = 0; i < 20000; ++i) {
        const double v = i % 2 ? U(rng) : std::ldexp(U(rng), static_cast<int>(i % 400) - 200);
        EXPECT_EQ(parse_number(format_number(v), "v"), v);
    }
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(format_number(2.0), "2");
}

TEST(CliRange, ParsesAndRejects) {
    const Range r = parse_range("-3:3:601", "sigma");
    EXPECT_EQ(r.lo, -3.0);
    EXPECT_EQ(r.hi, 3.0);
    EXPECT_EQ(r.n, 601);
    EXPECT_EQ(r.at(0), -3.0);
    EXPECT_EQ(r.at(600), 3.0);
    EXPECT_EQ(r.values().size(), 601u);
    for (const char* bad : {"0:1:1", "0:1:0", "1:1:5", "0:1", "0:1:2:3", "a:1:3", "0:1:2.5", "", "0:inf:3"}) {
        try {
            parse_range(bad, "r");
            ADD_FAILURE() << bad;
        } catch (const error& e) {
            EXPECT_EQ(e.code(), errc::config) << bad;
        }
    }
    const auto g = parse_range("1e-6:1e-3:8", "mu").geometric();
    ASSERT_EQ(g.size(), 8u);
    for (std::size_t i = 1; i < g.size(); ++i) EXPECT_NEAR(g[i] / g[i - 1], std::pow(10.0, 3.0 / 7.0), 1e-12);
    EXPECT_THROW(parse_range("-1:1:3", "mu").geometric(), error);
}

TEST(CliSchemas, FrozenRegistry) {
    const auto& a = csv_schemas();
    const auto& b = csv_schemas();
    EXPECT_EQ(&a, &b);
    std::set<std::string> names;
    for (const auto& s : a) names.insert(s.name);
    for (const char* n : {"basins", "bifurcation", "trajectory", "loci", "scaling", "phase-diagram"})
        EXPECT_TRUE(names.count(n)) << n;
    EXPECT_EQ(schema("basins").columns, (std::vector<std::string>{"x0", "y0", "sink_index"}));
    EXPECT_EQ(schema("bifurcation").columns,
              (std::vector<std::string>{"param", "branch_id", "amplitude", "stable", "event"}));
    EXPECT_EQ(schema("scaling").columns, (std::vector<std::string>{"mu", "amplitude", "log_mu", "log_amp"}));
    EXPECT_TRUE(schema("loci").variadic);
    EXPECT_TRUE(schema("trajectory").variadic);
    EXPECT_EQ(validate_csv(schema("basins"), "x0,y0,sink_index\n1,2,0\n"), "");
    EXPECT_NE(validate_csv(schema("basins"), "x0,y0,sink_index\r\n1,2,0\r\n"), "");
    EXPECT_NE(validate_csv(schema("basins"), "x0,y0\n1,2\n"), "");
    EXPECT_NE(validate_csv(schema("basins"), "x0,y0,sink_index\n1,2\n"), "");
}

TEST_F(CliTest, UnknownCommandListsValidOnes) {
    EXPECT_EQ(call({"frobnicate"}), 2);
    for (const auto& c : commands()) EXPECT_NE(err_.str().find(c.name), std::string::npos) << c.name;
    EXPECT_EQ(call({}), 2);
}

TEST_F(CliTest, EmptyRangeWritesNothing) {
    const std::string out = path("pd.csv");
    EXPECT_EQ(call({"phase-diagram", "--sigma", "-1:1:1", "--out", out}), 2);
    EXPECT_FALSE(fs::exists(out));
    EXPECT_FALSE(fs::exists(out + ".json"));
    EXPECT_EQ(call({"basins", "--x=0:0:10", "--out", out}), 2);
    EXPECT_FALSE(fs::exists(out));
    EXPECT_NE(err_.str().find("ConfigError"), std::string::npos);
}

TEST_F(CliTest, ExitCodesPerFamily) {
    // io: directory does not exist
    EXPECT_EQ(call({"beam", "--out", path("missing/dir/b.csv")}), 4);
    EXPECT_EQ(call({"--config", path("nope.json")}), 4);
    // numeric: an explicit step far beyond the stability limit diverges
    EXPECT_EQ(call({"simulate", "--system", "pitchfork2", "--x0", "100,100", "--dt", "1", "--out", path("t.csv")}), 3);
    // config: bad values, unknown keys, malformed JSON
    EXPECT_EQ(call({"beam", "--n", "0", "--out", path("b.csv")}), 2);
    EXPECT_EQ(call({"beam", "--n", "two", "--out", path("b.csv")}), 2);
    EXPECT_EQ(call({"loci", "--kind", "spiral", "--out", path("l.csv")}), 2);
    EXPECT_EQ(call({"beam", "--bogus", "1"}), 2);
    {
        std::ofstream(path("bad.json")) << "{\"command\": \"beam\", \"colour\": 3}";
        std::ofstream(path("broken.json")) << "{\"command\": ";
        std::ofstream(path("typed.json")) << "{\"command\": \"beam\", \"n\": \"twenty\"}";
    }
    EXPECT_EQ(call({"--config", path("bad.json")}), 2);
    EXPECT_EQ(call({"--config", path("broken.json")}), 2);
    EXPECT_EQ(call({"--config", path("typed.json")}), 2);
    EXPECT_EQ(call({"loci", "--config", path("typed.json")}), 2); // command mismatch
}

TEST_F(CliTest, EveryCommandMatchesItsSchema) {
    struct Case {
        std::vector<std::string> args;
        std::string schema;
    };
    const std::vector<Case> cases{
        {{"phase-diagram", "--sigma", "-3:3:31", "--mu", "0.01:4:20"}, "phase-diagram"},
        {{"phase-diagram", "--system", "pitchfork2", "--eps", "-1:1:11", "--mu", "-1:1:11"}, "phase-diagram-pitchfork"},
        {{"phase-diagram", "--gamma", "0.5", "--sigma", "-3:3:11", "--mu", "0.1:4:11"}, "phase-diagram"},
        {{"bifurcation", "--mu", "0.2", "--eps", "0.4", "--lambda", "0.5", "--sigma", "-2:2:101"}, "bifurcation"},
        {{"basins", "--x", "-1:1:9", "--y", "-2:2:9"}, "basins"},
        {{"loci", "--kind", "hysteresis"}, "loci"},
        {{"loci", "--kind", "bifurcation", "--gamma", "1"}, "loci"},
        {{"loci", "--kind", "saddle-node", "--eps", "-0.5:1:51"}, "loci"},
        {{"loci", "--kind", "level-set", "--x", "0.7", "--n", "50"}, "loci"},
        {{"loci", "--kind", "det-zero", "--n", "50"}, "loci"},
        {{"simulate", "--system", "hopf3", "--t-end", "5"}, "trajectory"},
        {{"simulate", "--system", "sl-reduced", "--mu", "1", "--sigma", "2.5", "--t-end", "5"}, "trajectory"},
        {{"simulate", "--system", "pitchfork3", "--t-end", "5", "--stride", "3"}, "trajectory"},
        {{"sweep", "--range", "-0.4:2:25"}, "bifurcation"},
        {{"sweep", "--param", "sigma", "--range", "0:3:16", "--mu", "0.5"}, "bifurcation"},
        {{"jump", "--mu", "0.001:0.01:4"}, "jump"},
        {{"jump", "--mode", "coupled", "--mu", "0.001:0.01:4"}, "jump"},
        {{"scaling", "--mu", "0.01:0.1:3"}, "scaling"},
        {{"beam", "--theta", "0.2"}, "beam"},
    };
    int k = 0;
    for (auto c : cases) {
        const std::string out = path("o" + std::to_string(k++) + ".csv");
        c.args.insert(c.args.end(), {"--out", out});
        ASSERT_EQ(call(c.args), 0) << c.args[0] << ": " << err_.str();
        const std::string text = slurp(out);
        EXPECT_EQ(validate_csv(schema(c.schema), text), "") << c.args[0];
        EXPECT_GT(std::count(text.begin(), text.end(), '\n'), 1) << c.args[0];
        const json side = json::parse(slurp(out + ".json"));
        EXPECT_EQ(side.at("schema"), c.schema);
        EXPECT_EQ(side.at("config").at("command"), c.args[0]);
    }
}

TEST_F(CliTest, RepeatedRunsAreByteIdentical) {
    for (const std::vector<std::string>& args :
         {std::vector<std::string>{"phase-diagram", "--sigma", "-3:3:61", "--mu", "0.01:4:40", "--gamma", "0.3"},
          std::vector<std::string>{"basins", "--mu", "0.05", "--eps", "0.8", "--x", "-1.5:1.5:15", "--y",
                                   "-1.5:1.5:15"}}) {
        auto a = args, b = args, c = args;
        a.insert(a.end(), {"--out", path("a.csv")});
        b.insert(b.end(), {"--out", path("b.csv")});
        c.insert(c.end(), {"--out", path("c.csv"), "--workers", "3"});
        ASSERT_EQ(call(a), 0) << err_.str();
        ASSERT_EQ(call(b), 0) << err_.str();
        ASSERT_EQ(call(c), 0) << err_.str();
        EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
        EXPECT_EQ(slurp(path("a.csv")), slurp(path("c.csv")));
        auto sa = json::parse(slurp(path("a.csv.json"))), sb = json::parse(slurp(path("b.csv.json")));
        sa["config"].erase("out");
        sb["config"].erase("out");
        EXPECT_EQ(sa, sb);
    }
}

TEST_F(CliTest, SidecarRoundTrip) {
    const std::vector<std::vector<std::string>> runs{
        {"loci", "--kind", "hysteresis", "--mu", "0.3", "--gamma", "0.4", "--lambda", "0.1:1.5:17"},
        {"sweep", "--param", "eps", "--range", "-0.5:1:16", "--mu", "0.3", "--sigma", "1.2"},
        {"simulate", "--system", "sl-full", "--x0", "0.3,0,0.1,-0.2", "--t-end", "3", "--sigma", "0.7"},
        {"beam", "--n", "7", "--theta", "-0.4", "--phi=-1:1:101"},
    };
    for (auto args : runs) {
        args.insert(args.end(), {"--out", path("first.csv")});
        ASSERT_EQ(call(args), 0) << err_.str();
        ASSERT_EQ(call({"--config", path("first.csv.json"), "--out", path("second.csv")}), 0) << err_.str();
        EXPECT_EQ(slurp(path("first.csv")), slurp(path("second.csv"))) << args[0];
        auto c1 = json::parse(slurp(path("first.csv.json")))["config"];
        auto c2 = json::parse(slurp(path("second.csv.json")))["config"];
        EXPECT_EQ(c2["out"], path("second.csv"));
        c1.erase("out");
        c2.erase("out");
        EXPECT_EQ(c1, c2) << args[0];
    }
    // explicit flags override the file
    ASSERT_EQ(call({"--config", path("first.csv.json"), "--n", "9", "--out", path("third.csv")}), 0);
    EXPECT_EQ(json::parse(slurp(path("third.csv.json")))["config"]["n"], 9);
    // a bare config object works too
    std::ofstream(path("bare.json")) << R"({"command": "beam", "n": 4, "phi": "-1:1:5"})";
    ASSERT_EQ(call({"--config", path("bare.json"), "--out", path("bare.csv")}), 0) << err_.str();
    EXPECT_EQ(rows(path("bare.csv")).size(), 6u);
}

TEST_F(CliTest, HysteresisLociSatisfyDefiningSystem) {
    for (double gamma : {0.0, 0.8, -2.5}) {
        const std::string out = path("h.csv");
        ASSERT_EQ(call({"loci", "--kind", "hysteresis", "--mu", "0.2", "--gamma", format_number(gamma), "--out", out}), 0);
        const auto table = rows(out);
        ASSERT_EQ(table.front(), (std::vector<std::string>{"curve_id", "p1", "p2", "aux", "lambda"}));
        std::set<std::string> ids;
        const double mu = 0.2;
        for (std::size_t i = 1; i < table.size(); ++i) {
            const auto& r = table[i];
            ids.insert(r[0]);
            const double eps = parse_number(r[1], "eps"), sigma = parse_number(r[2], "sigma");
            const double x = parse_number(r[3], "x"), lambda = parse_number(r[4], "lambda");
            // direct expansion of |mu+eps - x + i(sigma - gamma x)|^2 x - lambda^2 mu and its x-derivatives
            const double s = mu + eps, k = 1 + gamma * gamma;
            const double G = k * x * x * x - 2 * (s + sigma * gamma) * x * x + (s * s + sigma * sigma) * x - lambda * lambda * mu;
            const double Gx = 3 * k * x * x - 4 * (s + sigma * gamma) * x + (s * s + sigma * sigma);
            const double Gxx = 6 * k * x - 4 * (s + sigma * gamma);
            const double scale = std::max({1.0, k * x * x * x, s * s * x, lambda * lambda * mu});
            EXPECT_LT(std::abs(G), 1e-10 * scale) << r[0] << " lambda=" << lambda;
            EXPECT_LT(std::abs(Gx), 1e-10 * scale);
            EXPECT_LT(std::abs(Gxx), 1e-10 * scale);
            EXPECT_GT(x, 0.0);
            EXPECT_GT(s, 0.0);
        }
        if (gamma > -std::sqrt(3.0)) EXPECT_EQ(ids, (std::set<std::string>{"hysteresis_minus", "hysteresis_plus"}));
        else EXPECT_EQ(ids, (std::set<std::string>{"hysteresis_minus"}));
        if (gamma == 0.0) {
            // two branches mirrored in sigma
            const std::size_t half = (table.size() - 1) / 2;
            for (std::size_t i = 1; i <= half; ++i) {
                EXPECT_EQ(table[i][1], table[i + half][1]);
                EXPECT_NEAR(parse_number(table[i][2], "s"), -parse_number(table[i + half][2], "s"), 1e-15);
            }
        }
    }
}

TEST_F(CliTest, PhaseDiagramRowsMatchClassifier) {
    const std::string out = path("pd.csv");
    ASSERT_EQ(call({"phase-diagram", "--sigma", "-3:3:121", "--mu", "0.01:4:80", "--out", out}), 0);
    const auto table = rows(out);
    ASSERT_EQ(table.size(), 1u + 121u * 80u);
    std::set<std::string> tags;
    for (std::size_t i = 1; i < table.size(); ++i) {
        const auto& r = table[i];
        const auto reg = classify_region_sl_analytic(parse_number(r[0], "s"), parse_number(r[1], "m"));
        EXPECT_EQ(r[2], to_string(reg.tag));
        EXPECT_EQ(r[3], std::to_string(reg.n_equilibria));
        EXPECT_EQ(r[4], std::to_string(reg.n_stable));
        tags.insert(r[2]);
    }
    // row order: sigma fastest
    EXPECT_EQ(table[1][0], "-3");
    EXPECT_EQ(table[2][1], table[1][1]);
    for (const char* t : {"UniqueStable", "TwoStableOneUnstable", "UniqueUnstableTorus", "OneStableTwoUnstable"})
        EXPECT_TRUE(tags.count(t)) << t;
}

TEST_F(CliTest, SweepReportsEventsInOrder) {
    const std::string out = path("s.csv");
    ASSERT_EQ(call({"sweep", "--out", out}), 0);
    const auto table = rows(out);
    std::vector<std::string> labels;
    double prev = -INFINITY;
    for (std::size_t i = 1; i < table.size(); ++i) {
        const double p = parse_number(table[i][0], "p");
        EXPECT_GE(p, prev);
        prev = p;
        if (!table[i][4].empty()) labels.push_back(table[i][4]);
    }
    EXPECT_EQ(labels, (std::vector<std::string>{"HB", "HB", "TR", "SN"}));
    const json side = json::parse(slurp(out + ".json"));
    EXPECT_FALSE(side["summary"]["three_locked_windows"].empty());
}

TEST_F(CliTest, ScalingColumnsAreConsistent) {
    const std::string out = path("sc.csv");
    ASSERT_EQ(call({"scaling", "--mu", "1e-3:1e-2:3", "--out", out}), 0) << err_.str();
    const auto table = rows(out);
    ASSERT_EQ(table.size(), 4u);
    for (std::size_t i = 1; i < table.size(); ++i) {
        const double mu = parse_number(table[i][0], "mu"), a = parse_number(table[i][1], "a");
        EXPECT_EQ(parse_number(table[i][2], "lm"), std::log(mu));
        EXPECT_EQ(parse_number(table[i][3], "la"), std::log(a));
    }
    const json side = json::parse(slurp(out + ".json"));
    EXPECT_NEAR(side["summary"]["slope"].get<double>(), 1.0 / 6.0, 0.05);
}
