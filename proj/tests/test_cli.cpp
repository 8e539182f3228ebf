#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "mixrank/cli.hpp"

using namespace mixrank;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
    nlohmann::json json() const { return nlohmann::json::parse(out); }
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "mixrank");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
  protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("mixrank_cli_" + std::to_string(::getpid()) + "_" +
                                            ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string file(const std::string& name, const std::string& content = "") {
        const auto p = (dir_ / name).string();
        if (!content.empty()) std::ofstream(p) << content;
        return p;
    }
    static std::string slurp(const std::string& p) {
        std::ifstream f(p);
        std::stringstream ss;
        ss << f.rdbuf();
        return ss.str();
    }
    fs::path dir_;
};

const char* kU10 = "1,1,0,0\n1,0,1,0\n0,1,0,1\n0,0,1,1\n";

} // namespace

TEST_F(CliTest, Nnrank3Verdicts) {
    auto r = run({"nnrank3", "--input", file("u10.csv", kU10), "--backend", "exact"});
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(r.json()["verdict"], "out");
    EXPECT_EQ(r.json()["schema"], "1");
    EXPECT_TRUE(r.json()["witness"].is_null());
    r = run({"nnrank3", "-i", file("u42.csv", "100,100,42,42\n100,42,100,42\n42,100,42,100\n42,42,100,100\n")});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.json()["verdict"], "in");
    EXPECT_TRUE(r.json()["witness"].contains("iprime"));
    r = run({"nnrank3", "-i", file("f.csv", "0.5,0.5,0,0\n0.5,0,0.5,0\n0,0.5,0,0.5\n0,0,0.5,0.5\n")});
    EXPECT_EQ(r.json()["backend"], "float");
    EXPECT_EQ(r.json()["verdict"], "out");
    r = run({"nnrank3", "-i", file("f2.csv", "0.5,0.5,0,0\n0.5,0,0.5,0\n0,0.5,0,0.5\n0,0,0.5,0.5\n"), "--backend", "promote"});
    EXPECT_EQ(r.json()["backend"], "promote");
}

TEST_F(CliTest, FailureLogIsOptional) {
    auto r = run({"nnrank3", "-i", file("u10.csv", kU10), "--log"});
    EXPECT_EQ(r.json()["failure_log"].size(), 144u);
}

TEST_F(CliTest, UsageAndParseErrors) {
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"nnrank3"}).code, 2);
    EXPECT_EQ(run({"bogus"}).code, 2);
    EXPECT_EQ(run({"nnrank3", "-i", file("u.csv", kU10), "--backend", "fast"}).code, 2);
    auto r = run({"nnrank3", "-i", file("bad.csv", "1,2\n3,x\n")});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("line 2"), std::string::npos);
    r = run({"nnrank3", "-i", file("neg.csv", "1,-2\n3,4\n")});
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(CliTest, FamilyUabMleWritesP1) {
    const auto out = file("p.csv");
    auto r = run({"family", "uab", "--a", "1", "--b", "0", "--mle", "-o", out});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = r.json();
    EXPECT_EQ(j["t"], "4/3");
    EXPECT_EQ(j["mle"].size(), 8u);
    EXPECT_EQ(j["mle"][0]["boundary"], "boundary");
    EXPECT_EQ(j["mle"][0]["critical"], false);
    const auto p1 = read_matrix_file(file("p_1.csv")).exact;
    EXPECT_EQ(p1, canonical(RationalMatrix{{3, 3, 0, 0}, {2, 0, 4, 0}, {0, 2, 0, 4}, {1, 1, 2, 2}} / Rational(24)));
    for (int k = 1; k <= 8; ++k) EXPECT_TRUE(fs::exists(dir_ / ("p_" + std::to_string(k) + ".csv")));
    r = run({"family", "uab", "--a", "100", "--b", "42", "--mle"});
    EXPECT_EQ(r.code, 2);
}

TEST_F(CliTest, FamilyRectangleAndGreen) {
    auto r = run({"family", "rectangle", "--a", "1/4", "--b", "1/4"});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.json()["membership"], "in");
    r = run({"family", "rectangle", "--a", "1/2", "--b", "1/2"});
    EXPECT_EQ(r.code, 1);
    r = run({"family", "green", "--endpoint"});
    EXPECT_NEAR(r.json()["endpoint"][0].get<double>(), -3.161429, 1e-4);
    r = run({"family", "green", "--x", "0", "--y", "0"});
    EXPECT_EQ(r.json()["det"], "0");
    EXPECT_EQ(r.json()["rank"], 3);
}

TEST_F(CliTest, FactorizeRoundTrip) {
    const auto in = file("m.csv", "6,13,3,1\n4,16,6,2\n12,4,8,12\n5,9,10,9\n");
    auto r = run({"factorize", "-i", in, "--output-a", file("A.csv"), "--output-b", file("B.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto A = read_matrix_file(file("A.csv")).exact;
    const auto B = read_matrix_file(file("B.csv")).exact;
    EXPECT_EQ(canonical(A * B), read_matrix_file(in).exact);
    EXPECT_TRUE(all_nonnegative(A) && all_nonnegative(B));
    r = run({"factorize", "-i", file("u10.csv", kU10)});
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(r.json()["verdict"], "out");
}

TEST_F(CliTest, BoundaryAndPatterns) {
    auto r = run({"boundary", "-i", file("m.csv", "6,13,3,1\n4,16,6,2\n12,4,8,12\n5,9,10,9\n")});
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(r.json()["status"], "boundary");
    EXPECT_EQ(r.json()["reason"], "touching_witnesses");
    r = run({"boundary", "-i", file("r1.csv", "1,2\n2,4\n")});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.json()["status"], "interior");
    r = run({"patterns", "--m", "4", "--n", "4", "-o", file("pats.json")});
    EXPECT_EQ(r.json()["total"], "304");
    const auto pats = nlohmann::json::parse(slurp(file("pats.json")));
    EXPECT_EQ(pats.size(), 288u);
}

TEST_F(CliTest, EmWritesRereadableEstimate) {
    const auto out = file("P.csv");
    auto r = run({"em", "-i", file("u10.csv", kU10), "--restarts", "10", "--seed", "3", "-o", out});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.json()["schema"], "1");
    const std::string text = slurp(out);
    const auto parsed = parse_matrix_string(text);
    EXPECT_EQ(format_matrix(parsed.real), text);
    EXPECT_NEAR(parsed.real.sum(), 1.0, 1e-12);
}

TEST_F(CliTest, ExperimentWritesCsv) {
    const auto csv = file("bf.csv");
    auto r = run({"experiment", "boundary-fraction", "--matrices", "20", "--dist", "integer", "--csv", csv});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.json()["total"], 20);
    EXPECT_EQ(r.json()["non_members"], 0);
    const auto text = slurp(csv);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 21);
    r = run({"experiment", "table1", "--matrices", "2", "--restarts", "3", "--iterations", "50", "--polish", "0"});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.json()["config"]["mode"], "table1");
    EXPECT_EQ(run({"experiment", "nothing"}).code, 2);
}
