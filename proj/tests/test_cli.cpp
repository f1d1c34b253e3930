#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <sstream>

#include "shearspec/cli.hpp"
#include "support/fd_oracle.hpp"

using namespace shearspec;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("shearspec_cli_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

RunConfig make(const std::string& cmd, std::initializer_list<std::pair<std::string, std::string>> kv, const fs::path& out) {
    RunConfig c(cmd);
    for (const auto& [k, v] : kv) c.set(k, v);
    c.set("out", out.string());
    return c;
}

std::string slurp(const fs::path& p) {
    auto s = io::read_text(p);
    return s ? *s : std::string();
}

double value(const io::json& j) { return j.at("value").get<double>(); }

int shell(const std::string& args) {
    int st = std::system((std::string(SHEARSPEC_BIN) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

}  // namespace

TEST(Pipeline, SturmAgainstOracle) {
    fs::path out = scratch("sturm");
    auto o = cli::run(make("sturm", {{"n", "1"}, {"A", "0.06"}, {"cache", "false"}}, out), nullptr);
    ASSERT_EQ(o.exit_code, 0) << o.error;
    const auto& p = o.record.payload;
    const double lam = value(p["lambda1"]);
    EXPECT_LT(lam, 0.0);
    EXPECT_NEAR(lam, oracle::lambda_reference(1, 0.06), 1e-6 * std::abs(lam));
    EXPECT_NEAR(value(p["bound"]), -6.729, 5e-4);
    EXPECT_TRUE(p["bound"]["exact"].get<bool>());
    EXPECT_LE(lam, value(p["bound"]));
    EXPECT_TRUE(p["bound_satisfied"].get<bool>());
    // measured numbers carry their grid
    for (const auto& l : p["lambda"]) {
        EXPECT_EQ(l["N"].get<int>(), o.record.provenance["N"].get<int>());
        EXPECT_TRUE(l.contains("refinement_delta"));
    }
    EXPECT_EQ(p["lambda"].size(), 3u);
    EXPECT_LT(value(p["quotient_testfn"]), 0.0);
    EXPECT_GE(value(p["quotient_testfn"]), lam);
    auto csv = slurp(out / "sturm_eigenfunctions.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "y,phi_1,phi_2,phi_3");
    auto j = io::json::parse(slurp(out / "sturm.json"));
    EXPECT_EQ(j["input_hash"], o.record.input_hash);
    EXPECT_EQ(j["schema_version"], io::schema_version);
    fs::remove_all(out);
}

TEST(Pipeline, CouetteOrrSommerfeldIsStable) {
    fs::path out = scratch("os");
    auto o = cli::run(make("os", {{"A", "0"}, {"alpha", "1"}, {"R", "1e4"}, {"cache", "false"}}, out), nullptr);
    ASSERT_EQ(o.exit_code, 0) << o.error;
    EXPECT_LT(value(o.record.payload["max_imag_c"]), 0.0);
    auto csv = slurp(out / "os_spectrum.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "Re_c,Im_c,residual,retained_flag,refinement_delta,tail");
    fs::remove_all(out);
}

TEST(Pipeline, AmplitudeOutsideWindowWarnsAndProceeds) {
    fs::path out = scratch("window");
    auto o = cli::run(make("sturm", {{"n", "1"}, {"A", "0.2"}, {"cache", "false"}}, out), nullptr);
    ASSERT_EQ(o.exit_code, 0) << o.error;
    bool warned = false;
    for (const auto& w : o.record.warnings) warned |= w.find("in_window=false") != std::string::npos;
    EXPECT_TRUE(warned);
    EXPECT_FALSE(o.record.payload["summary"]["in_window"].get<bool>());
    EXPECT_FALSE(o.record.payload["profile"]["in_window"].get<bool>());
    EXPECT_TRUE(fs::exists(out / "sturm.json"));
    fs::remove_all(out);
}

TEST(Pipeline, DriftMatchesHeatDecay) {
    fs::path out = scratch("drift");
    auto o = cli::run(make("drift", {{"epsilon", "1e-4"}, {"t", "1"}, {"cache", "false"}}, out), nullptr);
    ASSERT_EQ(o.exit_code, 0) << o.error;
    const double k = 4.0 * std::numbers::pi;
    EXPECT_NEAR(o.record.payload["summary"]["A_t"].get<double>(), 0.06 * std::exp(-1e-4 * k * k), 1e-15);
    fs::remove_all(out);
}

TEST(Pipeline, RayleighModeAndBranch) {
    fs::path out = scratch("rayleigh");
    auto o = cli::run(make("rayleigh", {{"branch", "true"}, {"step", "0.4"}, {"max_steps", "20"}, {"cache", "false"}}, out),
                      nullptr);
    ASSERT_EQ(o.exit_code, 0) << o.error;
    const auto& c = o.record.payload["c"]["value"];
    EXPECT_NEAR(c["re"].get<double>(), 0.5, 1e-10);
    EXPECT_GT(c["im"].get<double>(), 0.08);
    auto csv = slurp(out / "rayleigh_branch.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "alpha,Re_c,Im_c,residual,refinement_delta,resolved");
    EXPECT_GT(o.record.payload["branch"]["max_growth_rate"]["value"].get<double>(), 0.0);
    fs::remove_all(out);
}

TEST(Pipeline, CatseyeArtifacts) {
    fs::path out = scratch("catseye");
    auto o = cli::run(make("catseye", {{"beta", "1e-3"}, {"cache", "false"}}, out), nullptr);
    ASSERT_EQ(o.exit_code, 0) << o.error;
    EXPECT_EQ(o.record.payload["saddles"], 1);
    EXPECT_EQ(o.record.payload["centers"], 1);
    auto cc = slurp(out / "catseye_contours.csv");
    EXPECT_EQ(cc.substr(0, cc.find('\n')), "level,segment_id,xi,y");
    auto svg = slurp(out / "catseye_streamlines.svg");
    std::istringstream in(svg);
    std::string line;
    while (std::getline(in, line))
        EXPECT_TRUE(line.rfind("<polyline", 0) == 0 || line.rfind("<text", 0) == 0 || line.rfind("<svg", 0) == 0 ||
                    line == "</svg>")
            << line;
    auto cp = io::json::parse(slurp(out / "catseye_critical.json"));
    EXPECT_EQ(cp["critical_points"].size(), 2u);
    EXPECT_TRUE(fs::exists(out / "catseye_field.csv"));
    fs::remove_all(out);
}

TEST(Pipeline, Shear3DSmallGrid) {
    fs::path out = scratch("shear3d");
    auto o = cli::run(make("shear3d", {{"Ny", "48"}, {"Nz", "8"}, {"eps", "0,1e-2"}, {"cache", "false"}}, out), nullptr);
    ASSERT_EQ(o.exit_code, 0) << o.error;
    const auto& rows = o.record.payload["rows"];
    ASSERT_EQ(rows.size(), 2u);
    for (const auto& r : rows) {
        EXPECT_FALSE(r["lost"].get<bool>());
        EXPECT_GT(r["c"]["value"]["im"].get<double>(), 0.0);
        EXPECT_TRUE(fs::exists(out / r["field_file"].get<std::string>()));
    }
    auto csv = slurp(out / "shear3d_sweep.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "eps,lost,Re_c,Im_c,defect,w14,method,max_invariant,max_equation,tail_y,tail_z,threshold");
    // a profile without an instability cannot be continued
    auto lin = cli::run(make("shear3d", {{"profile", "linear"}, {"Ny", "32"}, {"Nz", "4"}, {"cache", "false"}}, out), nullptr);
    EXPECT_EQ(lin.exit_code, cli::no_instability);
    fs::remove_all(out);
}

TEST(Cache, RepeatedRunIsServedByteIdentical) {
    fs::path out = scratch("repeat");
    auto cfg = make("os", {{"A", "0"}, {"alpha", "1"}, {"R", "1e4"}}, out);
    auto a = cli::run(cfg, nullptr);
    std::string json_a = slurp(out / "os.json"), csv_a = slurp(out / "os_spectrum.csv");
    auto b = cli::run(cfg, nullptr);
    EXPECT_FALSE(a.from_cache);
    EXPECT_TRUE(b.from_cache);
    EXPECT_EQ(a.record.payload.dump(), b.record.payload.dump());
    EXPECT_EQ(a.record.to_json().dump(), b.record.to_json().dump());
    EXPECT_EQ(slurp(out / "os.json"), json_a);
    EXPECT_EQ(slurp(out / "os_spectrum.csv"), csv_a);
    // recomputation without the cache gives the same payload
    auto c = cfg;
    c.set("cache", "false");
    EXPECT_EQ(cli::run(c, nullptr).record.payload.dump(), a.record.payload.dump());
    fs::remove_all(out);
}

TEST(Cache, ToleranceChangeIsMiss) {
    fs::path out = scratch("tol");
    auto cfg = make("os", {{"A", "0"}, {"alpha", "1"}, {"R", "1e4"}}, out);
    cli::run(cfg, nullptr);
    cfg.set("agree_tol", "1e-7");
    auto b = cli::run(cfg, nullptr);
    EXPECT_FALSE(b.from_cache);
    EXPECT_TRUE(cli::run(cfg, nullptr).from_cache);
    fs::remove_all(out);
}

TEST(Cache, StaleSchemaAndCorruptionRecompute) {
    fs::path out = scratch("stale");
    auto cfg = make("sturm", {}, out);
    auto a = cli::run(cfg, nullptr);
    fs::path rec = out / ".cache" / a.record.input_hash / "record.json";
    ASSERT_TRUE(fs::exists(rec));
    auto j = io::json::parse(slurp(rec));
    j["schema_version"] = io::schema_version - 1;
    io::write_text(rec, j.dump());
    auto b = cli::run(cfg, nullptr);
    EXPECT_FALSE(b.from_cache);
    EXPECT_EQ(b.record.payload.dump(), a.record.payload.dump());

    io::write_text(rec, "not json");
    std::ostringstream log;
    auto c = cli::run(cfg, &log);
    EXPECT_FALSE(c.from_cache);
    EXPECT_EQ(c.exit_code, 0);
    EXPECT_NE(log.str().find("corrupted cache entry"), std::string::npos);
    EXPECT_TRUE(cli::run(cfg, nullptr).from_cache);  // rewritten
    fs::remove_all(out);
}

TEST(Sweep, DeterministicMergeAcrossWorkerCounts) {
    fs::path o1 = scratch("sweep1"), o4 = scratch("sweep4");
    auto c1 = make("sweep", {{"task", "sturm"}, {"over", "A=0.045,0.06,0.075;n=1,2"}, {"workers", "1"}, {"cache", "false"}}, o1);
    auto c4 = make("sweep", {{"task", "sturm"}, {"over", "A=0.045,0.06,0.075;n=1,2"}, {"workers", "4"}, {"cache", "false"}}, o4);
    auto r1 = cli::run(c1, nullptr), r4 = cli::run(c4, nullptr);
    ASSERT_EQ(r1.exit_code, 0) << r1.error;
    EXPECT_EQ(r1.record.input_hash, r4.record.input_hash);
    EXPECT_EQ(slurp(o1 / "sweep.csv"), slurp(o4 / "sweep.csv"));
    EXPECT_EQ(r1.record.payload.dump(), r4.record.payload.dump());
    const auto& pts = r1.record.payload["points"];
    ASSERT_EQ(pts.size(), 6u);
    EXPECT_EQ(pts[0]["params"]["A"], "0.045");
    EXPECT_EQ(pts[1]["params"]["n"], "2");
    for (const auto& p : pts) EXPECT_LT(p["summary"]["lambda1"].get<double>(), p["summary"]["bound"].get<double>());
    // a point that fails validation fails the sweep as a config error
    auto bad = make("sweep", {{"task", "sturm"}, {"over", "N=16"}}, o1);
    EXPECT_EQ(cli::run(bad, nullptr).exit_code, cli::config_error);
    fs::remove_all(o1);
    fs::remove_all(o4);
}

TEST(Binary, ExitCodes) {
    fs::path out = scratch("bin");
    const std::string o = " --out " + out.string() + " --no-cache";
    EXPECT_EQ(shell("sturm --n 1 --A 0.06" + o), 0);
    EXPECT_EQ(shell("sturm --N 3" + o), 2);
    EXPECT_EQ(shell("sturm --R 10" + o), 2);
    EXPECT_EQ(shell("frobnicate"), 2);
    EXPECT_EQ(shell("rayleigh --profile linear --alpha 1" + o), 4);
    EXPECT_EQ(shell("catseye --newton --beta 0.05" + o), 3);
    EXPECT_EQ(shell("os --A 0 --alpha 1 --R 1e4" + o), 0);
    fs::remove_all(out);
}

TEST(Binary, ConfigFileAndCacheDirOverride) {
    fs::path out = scratch("bincfg"), cache = scratch("bincache");
    io::write_text(out / "run.cfg", "n = 2\nA = 0.06\n");
    std::string cmd = "SHEARSPEC_CACHE_DIR=" + cache.string() + " " + SHEARSPEC_BIN + " sturm -c " + (out / "run.cfg").string() +
                      " --A 0.045 --out " + out.string() + " >/dev/null 2>&1";
    ASSERT_EQ(std::system(cmd.c_str()), 0);
    auto j = io::json::parse(slurp(out / "sturm.json"));
    EXPECT_EQ(j["config"]["n"], "2");
    EXPECT_EQ(j["config"]["A"], "0.045");  // the flag wins over the file
    EXPECT_TRUE(fs::exists(cache / j["input_hash"].get<std::string>() / "record.json"));
    EXPECT_FALSE(fs::exists(out / ".cache"));
    fs::remove_all(out);
    fs::remove_all(cache);
}
