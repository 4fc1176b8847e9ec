#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "pact/pipeline.hpp"

using namespace pact;
namespace fs = std::filesystem;

namespace {

// 64x64 reconstruction grid at 0.2 mm; keeps a full sweep to a few seconds.
Json small_config(const fs::path& out) {
    Json j = default_config();
    j["geometry"]["n"] = 64;
    j["geometry"]["h"] = 2e-4;
    j["solver"]["max_iter"] = 200;
    j["method"]["lst"]["cg_maxiter"] = 300;
    j["output"]["dir"] = out.string();
    return j;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("pact_pipeline_" + name);
    fs::remove_all(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> m;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) m[fs::relative(e.path(), root).string()] = slurp(e.path());
    return m;
}

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& p) {
    std::ifstream is(p);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(is, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        if (!line.empty() && line.back() == ',') cells.push_back("");
        rows.push_back(cells);
    }
    return rows;
}

std::string config_error(const std::function<void()>& f) {
    try {
        f();
    } catch (const InvalidConfig& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Config, DefaultsParseAndCoverEveryMethod) {
    const auto c = parse_config(default_config());
    EXPECT_EQ(c.geometry.n, 128u);
    EXPECT_EQ(c.geometry.detector_set().size(), 384u);
    for (const auto& m : method_names()) {
        Json j = default_config();
        j["method"]["name"] = m;
        EXPECT_NO_THROW(parse_config(j)) << m;
    }
}

TEST(Config, ErrorsNameTheFieldPath) {
    EXPECT_NE(config_error([] { merge_config(default_config(), Json::parse(R"({"solver": {"ratoi": 1}})")); })
                  .find("solver.ratoi"),
              std::string::npos);
    Json j = default_config();
    j["solver"]["ratio"] = -1.0;
    EXPECT_NE(config_error([&] { parse_config(j); }).find("solver.ratio"), std::string::npos);
    j = default_config();
    j["geometry"]["nt"] = "many";
    EXPECT_NE(config_error([&] { parse_config(j); }).find("geometry.nt"), std::string::npos);
    j = default_config();
    j["method"]["name"] = "art";
    EXPECT_NE(config_error([&] { parse_config(j); }).find("method.name"), std::string::npos);
    j = default_config();
    j["phantom"]["file"] = "/nonexistent/vessels.pgm";
    j["phantom"]["kind"] = "vascular";
    EXPECT_NE(config_error([&] { parse_config(j); }).find("phantom.file"), std::string::npos);
    j = default_config();
    j["sweep"]["axis"] = "gamma";
    EXPECT_NE(config_error([&] { parse_config(j); }).find("sweep.axis"), std::string::npos);
}

TEST(Config, SetOverridesAndRejectsUnknownKeys) {
    Json j = default_config();
    apply_set(j, "method.tv.alpha=0.02");
    apply_set(j, "phantom.kind=smooth_disc");
    apply_set(j, "sweep.values=[1,2]");
    EXPECT_EQ(j["method"]["tv"]["alpha"].get<double>(), 0.02);
    EXPECT_EQ(j["phantom"]["kind"], "smooth_disc");
    EXPECT_EQ(j["sweep"]["values"].size(), 2u);
    EXPECT_THROW(apply_set(j, "method.tv.gamma=1"), InvalidConfig);
    EXPECT_THROW(apply_set(j, "method.tv=1"), InvalidConfig);
    EXPECT_THROW(apply_set(j, "noequals"), InvalidConfig);
    const auto c = resolve_config("", {"geometry.detectors=16", "solver.max_iter=7"});
    EXPECT_EQ(c.geometry.detector_set().size(), 16u);
    EXPECT_EQ(c.solver.stop.max_iter, 7);
}

TEST(Pipeline, MissingUpstreamNamesTheCommand) {
    const auto out = fresh_dir("deps");
    const auto c = parse_config(small_config(out));
    try {
        cmd_reconstruct(c);
        FAIL() << "expected DependencyError";
    } catch (const DependencyError& e) {
        EXPECT_NE(std::string(e.what()).find("pact simulate"), std::string::npos) << e.what();
    }
    EXPECT_THROW(cmd_simulate(c), DependencyError);
    EXPECT_THROW(cmd_evaluate(c), DependencyError);
    fs::remove_all(out);
}

TEST(Pipeline, StaleUpstreamIsDependencyError) {
    const auto out = fresh_dir("stale");
    Json j = small_config(out);
    j["geometry"]["detectors"] = 16;
    j["method"]["name"] = "fbp";
    const auto c = parse_config(j);
    cmd_phantom(c);
    cmd_simulate(c);
    j["signal"]["noise_rel"] = 0.05;
    try {
        cmd_reconstruct(parse_config(j));
        FAIL() << "expected DependencyError";
    } catch (const DependencyError& e) {
        EXPECT_NE(std::string(e.what()).find("pact simulate"), std::string::npos) << e.what();
    }
    fs::remove_all(out);
}

TEST(Pipeline, SidecarsRecordProvenance) {
    const auto out = fresh_dir("sidecar");
    Json j = small_config(out);
    j["geometry"]["detectors"] = 16;
    j["method"]["name"] = "fbp";
    j["phantom"]["seed"] = 4;
    const auto c = parse_config(j);
    const auto r = run_all(c);
    EXPECT_GT(r.psnr, 0.0);
    for (const auto& p : {out / "phantom" / "phantom.json", out / "simulate" / "simulate.json",
                          out / "reconstruct" / "fbp" / "reconstruct.json", out / "evaluate" / "fbp" / "evaluate.json"}) {
        ASSERT_TRUE(fs::exists(p)) << p;
        const Json s = Json::parse(slurp(p));
        EXPECT_EQ(s["version"], kVersion);
        EXPECT_EQ(s["config_hash"].get<std::string>().size(), 16u);
        EXPECT_EQ(s["seeds"]["phantom"], 4);
        EXPECT_EQ(s["config"], c.raw);
    }
    const auto metrics = read_csv_rows(out / "evaluate" / "fbp" / "metrics.csv");
    ASSERT_EQ(metrics.size(), 2u);
    EXPECT_EQ(metrics[0][0], "method");
    EXPECT_EQ(metrics[1][0], "fbp");
    EXPECT_TRUE(fs::exists(out / "reconstruct" / "fbp" / "u.pgm"));
    fs::remove_all(out);
}

TEST(Pipeline, StagesAreReusedWhenTheHashMatches) {
    const auto out = fresh_dir("reuse");
    Json j = small_config(out);
    j["geometry"]["detectors"] = 16;
    j["method"]["name"] = "fbp";
    const auto c = parse_config(j);
    EXPECT_FALSE(cmd_phantom(c).reused);
    EXPECT_TRUE(cmd_phantom(c).reused);
    EXPECT_FALSE(cmd_simulate(c).reused);
    EXPECT_TRUE(cmd_simulate(c).reused);
    // a method parameter does not invalidate the simulation
    j["method"]["tv"]["alpha"] = 0.5;
    EXPECT_TRUE(cmd_simulate(parse_config(j)).reused);
    j["signal"]["noise_rel"] = 0.01;
    EXPECT_FALSE(cmd_simulate(parse_config(j)).reused);
    fs::remove_all(out);
}

TEST(Pipeline, VascularEvaluationWritesRoc) {
    const auto out = fresh_dir("vascular");
    Json j = small_config(out);
    j["geometry"]["detectors"] = 64;
    j["phantom"]["kind"] = "vascular";
    j["method"]["name"] = "fbp";
    const auto r = run_all(parse_config(j));
    ASSERT_TRUE(r.auc.has_value());
    EXPECT_GT(*r.auc, 0.5);
    EXPECT_LE(*r.auc, 1.0);
    const auto roc = read_csv_rows(out / "evaluate" / "fbp" / "roc.csv");
    EXPECT_GT(roc.size(), 10u);
    EXPECT_TRUE(fs::exists(out / "phantom" / "segmentation.csv"));
    fs::remove_all(out);
}

TEST(Sweep, DetectorCountSweepEmitsNineRowsAndRerunChangesNoBytes) {
    const auto out = fresh_dir("sweep");
    const auto c = parse_config(small_config(out));
    const auto s = cmd_sweep(c);
    const auto rows = read_csv_rows(s.csv);
    ASSERT_EQ(rows.size(), 10u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"method", "detector_count", "psnr_db", "auc", "iterations"}));
    std::map<std::string, double> psnr;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        ASSERT_EQ(rows[r].size(), 5u);
        psnr[rows[r][0] + "@" + rows[r][1]] = std::stod(rows[r][2]);
    }
    EXPECT_EQ(psnr.size(), 9u);
    EXPECT_GT(psnr.at("tv@16"), psnr.at("fbp@16"));

    const auto before = snapshot(out);
    cmd_sweep(c);
    EXPECT_EQ(snapshot(out), before);
    fs::remove_all(out);
}

TEST(Sweep, IndependentRunsAreByteIdentical) {
    const auto a = fresh_dir("det_a"), b = fresh_dir("det_b");
    Json j = small_config(a);
    j["sweep"]["values"] = {16, 64};
    j["sweep"]["methods"] = {"fbp", "tv"};
    j["sweep"]["workers"] = 2;
    j["signal"]["noise_rel"] = 0.02;
    cmd_sweep(parse_config(j));
    j["output"]["dir"] = b.string();
    j["sweep"]["workers"] = 1;
    cmd_sweep(parse_config(j));
    int compared = 0;
    for (const auto& [rel, bytes] : snapshot(a)) {
        const auto ext = fs::path(rel).extension();
        if (ext != ".csv" && ext != ".pgm" && ext != ".bin") continue;
        if (rel.rfind("cache", 0) == 0) continue;
        EXPECT_EQ(slurp(b / rel), bytes) << rel;
        ++compared;
    }
    EXPECT_GT(compared, 20);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(Sweep, NeedsTwoValuesAndValidAxisValues) {
    const auto out = fresh_dir("sweep_bad");
    Json j = small_config(out);
    j["sweep"]["values"] = {16};
    EXPECT_THROW(cmd_sweep(parse_config(j)), InvalidConfig);
    j["sweep"]["values"] = {16, 2.5};
    EXPECT_THROW(cmd_sweep(parse_config(j)), InvalidConfig);
    fs::remove_all(out);
}

TEST(Sweep, TvBeatsFbpAtSixteenDetectors) {
    const auto out = fresh_dir("tv16");
    Json j = small_config(out);
    j["geometry"]["detectors"] = 16;
    j["method"]["name"] = "fbp";
    const double fbp_psnr = run_all(parse_config(j)).psnr;
    j["method"]["name"] = "tv";
    const double tv_psnr = run_all(parse_config(j)).psnr;
    EXPECT_GT(tv_psnr, fbp_psnr);
    fs::remove_all(out);
}

#ifdef PACT_CLI_PATH
namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(PACT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, ExitCodes) {
    const auto out = fresh_dir("cli");
    fs::create_directories(out);
    const fs::path cfg = out / "small.json";
    {
        Json j = small_config(out / "run");
        j["geometry"]["detectors"] = 16;
        j["method"]["name"] = "fbp";
        std::ofstream(cfg) << j.dump(2);
    }
    const std::string base = "--config " + cfg.string();
    EXPECT_EQ(run_cli("defaults"), 0);
    EXPECT_EQ(run_cli("reconstruct " + base), 3);
    EXPECT_EQ(run_cli("phantom " + base + " --set bogus.key=1"), 2);
    EXPECT_EQ(run_cli("phantom " + base + " --set solver.ratio=-1"), 2);
    EXPECT_EQ(run_cli("phantom --config " + (out / "missing.json").string()), 2);
    EXPECT_EQ(run_cli("phantom " + base + " --seed 3"), 0);
    EXPECT_EQ(run_cli("simulate " + base + " --seed 3"), 0);
    EXPECT_EQ(run_cli("reconstruct " + base + " --seed 3"), 0);
    EXPECT_EQ(run_cli("evaluate " + base + " --seed 3"), 0);
    // a different seed makes the simulation stale
    EXPECT_EQ(run_cli("reconstruct " + base + " --seed 4"), 3);
    EXPECT_EQ(run_cli("nonsense"), 2);

    const Json side = Json::parse(slurp(out / "run" / "phantom" / "phantom.json"));
    EXPECT_EQ(side["seeds"]["phantom"], 3);
    EXPECT_EQ(side["seeds"]["noise"], 3);
    fs::remove_all(out);
}

TEST(Cli, OutFlagOverridesOutputDir) {
    const auto out = fresh_dir("cli_out");
    const std::string args = "phantom --set geometry.n=64 --set geometry.h=2e-4 --out " + out.string();
    EXPECT_EQ(run_cli(args), 0);
    EXPECT_TRUE(fs::exists(out / "phantom" / "ground_truth.csv"));
    fs::remove_all(out);
}
#endif
