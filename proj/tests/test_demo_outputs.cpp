// Checks on the artifacts of the 33^3 demo continuation. The directory comes
// from FBP_DEMO_DIR (set by ctest after the demo runs).
#include <fbp/report.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

namespace {

namespace fs = std::filesystem;

fs::path demo_dir() {
    const char* d = std::getenv("FBP_DEMO_DIR");
    return d ? fs::path(d) : fs::path("demo_out");
}

class Demo : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        std::ifstream in(demo_dir() / "report.json");
        if (in) report_ = new fbp::Json(fbp::Json::parse(in));
    }
    static void TearDownTestSuite() { delete report_; }
    void SetUp() override {
        if (!report_) GTEST_FAIL() << "no report.json under " << demo_dir();
    }
    static fbp::ScalarField field(size_t j) {
        return fbp::read_field_csv((demo_dir() / ("u_step" + std::to_string(j + 1) + ".csv")).string()).values;
    }
    static fbp::Json* report_;
};
fbp::Json* Demo::report_ = nullptr;

TEST_F(Demo, AllStepsConverge) {
    const auto& r = *report_;
    const fbp::RunConfig cfg = [&] {
        std::map<std::string, std::string> m;
        for (const auto& [k, v] : r["config"].items()) m[k] = v.get<std::string>();
        return fbp::parse_config_map(m);
    }();
    EXPECT_EQ(r["status"], "completed") << r.value("failure", "");
    ASSERT_EQ(r["steps"].size(), 4u);
    for (const auto& s : r["steps"]) {
        EXPECT_TRUE(s["converged"].get<bool>()) << s["eps"];
        EXPECT_LE(s["residual_norm"].get<double>(), cfg.descent_tol) << s["eps"];
        EXPECT_GE(s["c_eps"].get<double>(), 0.0) << s["eps"];
    }
}

TEST_F(Demo, ReportBlocks) {
    const auto& r = *report_;
    ASSERT_TRUE(r.contains("energy_bracket"));
    EXPECT_EQ(r["energy_bracket"]["entries"].size(), 3u);
    ASSERT_TRUE(r.contains("lipschitz"));
    EXPECT_EQ(r["lipschitz"]["sups"].size(), 4u);
    EXPECT_EQ(r["verifications"].size(), 6u);
    for (const auto& [k, v] : r["verifications"].items()) {
        EXPECT_TRUE(v == "pass" || v == "fail" || v == "na") << k;
    }
}

TEST_F(Demo, FinalStepHasJumpSamples) {
    const auto& jump = (*report_)["steps"].back()["verification"]["jump"];
    EXPECT_GT(jump["count"].get<size_t>(), 0u);
    EXPECT_TRUE(fs::exists(demo_dir() / "jump_step4.csv"));
}

TEST_F(Demo, IteratesSettle) {
    const fbp::ScalarField u2 = field(1);
    const fbp::ScalarField u3 = field(2);
    const fbp::ScalarField u4 = field(3);
    EXPECT_LT((u4 - u3).max_abs(), (u3 - u2).max_abs());
}

TEST_F(Demo, IteratesAreNonnegative) {
    for (size_t j = 0; j < 4; ++j) EXPECT_GE(field(j).min(), -1e-8) << "step " << j + 1;
}

TEST_F(Demo, VerifyReproducesReport) {
    const auto v = fbp::run_verify(demo_dir().string());
    const auto& r = *report_;
    for (size_t j = 0; j < r["steps"].size(); ++j) {
        EXPECT_EQ(v.report["steps"][j]["verification"], r["steps"][j]["verification"]) << j;
    }
    EXPECT_EQ(v.report["lipschitz"], r["lipschitz"]);
    EXPECT_EQ(v.report["energy_bracket"], r["energy_bracket"]);
    EXPECT_EQ(v.report["verifications"], r["verifications"]);
}

TEST_F(Demo, TamperedNodeBreaksLipschitz) {
    const fs::path dir = fs::temp_directory_path() / "fbp_demo_tampered";
    fs::remove_all(dir);
    fs::create_directories(dir);
    for (const auto& e : fs::directory_iterator(demo_dir())) {
        if (e.is_regular_file()) fs::copy(e.path(), dir / e.path().filename());
    }
    fbp::CsvField f = fbp::read_field_csv((dir / "u_step2.csv").string());
    f.values[f.grid.size() / 2] = 1e6;
    fbp::write_field_csv((dir / "u_step2.csv").string(), f.grid, f.values);
    const auto v = fbp::run_verify(dir.string());
    EXPECT_EQ(v.report["lipschitz"]["outcome"], "fail");
    EXPECT_EQ(v.exit_code, 1);
    fs::remove_all(dir);
}

}  // namespace
