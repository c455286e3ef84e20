#include "geoinv/cli/app.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace geoinv;
using namespace geoinv::cli;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(GEOINV_SOURCE_DIR) / "docs" / "configs";

Json example(const std::string& kind) { return load_json(kConfigs / (kind + ".json")); }

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / "geoinv_test_cli" / name;
    fs::remove_all(p);
    return p;
}

std::vector<std::string> lines(const fs::path& p)
{
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string s; std::getline(in, s);) out.push_back(s);
    return out;
}

int run_in(const Json& cfg, const fs::path& out, std::string* err_text = nullptr, std::size_t jobs = 1)
{
    RunOptions o;
    o.out = out;
    o.jobs = jobs;
    std::ostringstream log, err;
    const int code = run_config(cfg, o, log, err);
    if (err_text) *err_text = err.str();
    return code;
}

fs::path write_config(const fs::path& dir, const Json& j)
{
    fs::create_directories(dir);
    const fs::path p = dir / "config.json";
    std::ofstream(p) << j.dump(2);
    return p;
}

}  // namespace

TEST_CASE("forward run with zero data writes a zero solution")
{
    auto cfg = example("forward");
    cfg["data"] = {{"phi", Json::object()}, {"psi", Json::object()}};
    const auto out = scratch("zero");
    REQUIRE(run_in(cfg, out) == kExitOk);
    const auto rows = lines(out / "solution.csv");
    REQUIRE(rows.size() > 1);
    CHECK(rows[0] == "node_id,x,y,value_y,value_z");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto tail = rows[i].substr(rows[i].rfind(',', rows[i].rfind(',') - 1));
        CHECK(tail == ",0,0");
    }
    CHECK(fs::exists(out / "mesh.txt"));
    CHECK(fs::exists(out / "shape.txt"));
    const auto manifest = load_json(out / "manifest.json");
    CHECK(manifest["status"] == "ok");
    CHECK(manifest["config"] == cfg);
    CHECK(manifest["kind"] == "forward");
    CHECK(manifest.contains("timings_s"));
}

TEST_CASE("stability run with the default grid")
{
    auto cfg = example("stability");
    cfg["numeric"]["h"] = 0.05;
    const auto out = scratch("stability");
    REQUIRE(run_in(cfg, out, nullptr, 2) == kExitOk);
    const auto sweep = lines(out / "sweep.csv");
    CHECK(sweep.front() == "sigma,distance,valid");
    CHECK(sweep.size() == 1 + 9);
    const auto fit = lines(out / "fit.csv");
    CHECK(fit.front() == "k_raw,k_int,C,residual,floor");
    CHECK(fit.size() == 2);
    const auto both = lines(out / "fit_by_distance.csv");
    REQUIRE(both.size() == 3);
    CHECK(both[0] == "distance,k_raw,k_int,C,residual,floor,status");
    CHECK(both[1].rfind("l2,", 0) == 0);
    CHECK(both[2].rfind("hminus_surrogate,", 0) == 0);
    // the configured mode row repeats fit.csv
    CHECK(both[1].substr(3, both[1].rfind(",ok") - 3) == fit[1]);
}

TEST_CASE("schema errors exit 2 with the key path")
{
    SUBCASE("missing coefficients block")
    {
        auto cfg = example("forward");
        cfg.erase("coefficients");
        const auto out = scratch("missing");
        std::string err;
        CHECK(run_in(cfg, out, &err) == kExitSchema);
        const auto rec = load_json(out / "error.json");
        CHECK(rec["path"] == "coefficients");
        CHECK(rec["exit_code"] == 2);
        CHECK(err.find("\"coefficients\"") != std::string::npos);
        CHECK(load_json(out / "manifest.json")["status"] == "error");
    }
    SUBCASE("unknown key")
    {
        auto cfg = example("forward");
        cfg["geometry"]["obstacle"]["radius"] = 0.3;
        const auto out = scratch("unknown");
        CHECK(run_in(cfg, out) == kExitSchema);
        CHECK(load_json(out / "error.json")["path"] == "geometry.obstacle.radius");
    }
    SUBCASE("wrong type")
    {
        auto cfg = example("forward");
        cfg["numeric"]["h"] = "fine";
        const auto out = scratch("type");
        CHECK(run_in(cfg, out) == kExitSchema);
        CHECK(load_json(out / "error.json")["path"] == "numeric.h");
    }
    SUBCASE("unknown kind")
    {
        auto cfg = example("forward");
        cfg["kind"] = "parabolic";
        const auto out = scratch("kind");
        CHECK(run_in(cfg, out) == kExitSchema);
        CHECK(load_json(out / "error.json")["path"] == "kind");
    }
    SUBCASE("invariant violation stops the run")
    {
        auto cfg = example("forward");
        cfg["geometry"]["obstacle"] = {{"center", {0, 0}}, {"mean_radius", 0.8}};
        const auto out = scratch("clearance");
        CHECK(run_in(cfg, out) == kExitSchema);
        CHECK(load_json(out / "error.json")["path"] == "geometry.obstacle");
        CHECK_FALSE(fs::exists(out / "solution.csv"));
    }
}

TEST_CASE("numerical failures exit 3 naming the module")
{
    // a tangential sweep leaves the observation at the noise floor: no order to fit
    auto cfg = example("stability");
    cfg["numeric"]["h"] = 0.05;
    cfg["deformation"] = {{"type", "rotation"}, {"rate", 1.0}};
    const auto out = scratch("unresolved");
    CHECK(run_in(cfg, out) == kExitNumerical);
    const auto rec = load_json(out / "error.json");
    CHECK(rec["module"] == "stability_lab");
    CHECK(rec["message"] == "regime unresolved");
    CHECK(fs::exists(out / "sweep.csv"));
    CHECK_FALSE(fs::exists(out / "fit.csv"));
    CHECK(lines(out / "fit_by_distance.csv")[1].find("regime unresolved") != std::string::npos);
}

TEST_CASE("validate lists violations without solving")
{
    const auto dir = scratch("validate");
    std::ostringstream os;
    SUBCASE("valid example")
    {
        CHECK(validate(kConfigs / "forward.json", std::nullopt, os) == kExitOk);
        const auto report = Json::parse(os.str());
        CHECK(report["valid"] == true);
        CHECK(report["violations"].empty());
    }
    SUBCASE("obstacle radius 0.95")
    {
        auto cfg = example("forward");
        cfg["geometry"]["obstacle"] = {{"mean_radius", 0.95}};
        cfg["geometry"]["safety"] = nullptr;
        CHECK(validate(write_config(dir, cfg), std::nullopt, os) == kExitOk);
        const auto report = Json::parse(os.str());
        CHECK(report["valid"] == false);
        REQUIRE(report["violations"].size() >= 1);
        CHECK(report["violations"][0]["message"].get<std::string>().find("clearance violation") != std::string::npos);
    }
    SUBCASE("a = B = -10 on the unit disk")
    {
        auto cfg = example("forward");
        cfg["coefficients"] = {{"a", -10}, {"b", 0}, {"A", 0}, {"B", -10}};
        CHECK(validate(write_config(dir, cfg), dir / "cache", os) == kExitOk);
        const auto report = Json::parse(os.str());
        CHECK(report["valid"] == false);
        const auto msg = report["violations"][0]["message"].get<std::string>();
        CHECK(report["violations"][0]["path"] == "coefficients");
        CHECK(msg.find("lambda* = 10") != std::string::npos);
        CHECK(msg.find("1/mu1 = 5.7") != std::string::npos);
        // mu1 is cached by geometry hash
        const auto hash = geometry_hash(geometry::OuterBoundary::unit_disk(), 0.05);
        CHECK(fs::exists(dir / "cache" / ("mu1_" + hash + ".txt")));
    }
    SUBCASE("oversized sigma is an error for a single solve and a warning for a sweep")
    {
        auto cfg = example("pullback-check");
        cfg["numeric"]["sigma"] = 5.0;
        validate(write_config(dir, cfg), std::nullopt, os);
        auto report = Json::parse(os.str());
        CHECK(report["valid"] == false);
        CHECK(report["violations"][0]["path"] == "numeric.sigma");

        auto sweep = example("stability");
        sweep["numeric"]["sigma_grid"] = {0.01, 5.0};
        std::ostringstream os2;
        validate(write_config(dir, sweep), std::nullopt, os2);
        report = Json::parse(os2.str());
        CHECK(report["valid"] == true);
        CHECK(report["violations"][0]["severity"] == "warning");
    }
    SUBCASE("unreadable file")
    {
        CHECK(validate(dir / "absent.json", std::nullopt, os) == kExitSchema);
    }
}

TEST_CASE("mu1 cache")
{
    const auto dir = scratch("cache");
    const auto disk = geometry::OuterBoundary::unit_disk();
    const double first = cached_mu1(disk, 0.1, dir);
    const auto file = dir / ("mu1_" + geometry_hash(disk, 0.1) + ".txt");
    REQUIRE(fs::exists(file));
    // a planted value proves the second call reads the cache
    std::ofstream(file) << "0.5\n";
    CHECK(cached_mu1(disk, 0.1, dir) == 0.5);
    CHECK(first == doctest::Approx(1.0 / 5.7832).epsilon(0.03));
    CHECK(geometry_hash(disk, 0.1) != geometry_hash(disk, 0.05));
    CHECK(geometry_hash(disk, 0.1).size() == 16);
}

TEST_CASE("plan expands the cartesian product")
{
    const auto out = scratch("plan");
    std::ostringstream log, err;
    REQUIRE(plan(kConfigs / "plan.json", out, log, err) == kExitOk);
    const auto index = lines(out / "plan.csv");
    CHECK(index.front() == "index,file,discriminate.other.mean_radius,data.phi.constant");
    CHECK(index.size() == 1 + 6);
    const auto p4 = load_json(out / "plan_004.json");
    CHECK(p4["discriminate"]["other"]["mean_radius"] == 0.33);
    CHECK(p4["data"]["phi"]["constant"] == 1);
    CHECK_FALSE(p4.contains("plan"));
    CHECK(p4["output"] == "out/plan/plan_004");
    CHECK_NOTHROW(parse_config(p4));

    auto bad = example("plan");
    bad["plan"]["vary"][0]["values"] = Json::array();
    std::ostringstream e2;
    CHECK(plan(write_config(out / "bad", bad), out / "bad_out", log, e2) == kExitSchema);
    CHECK(e2.str().find("plan.vary[0].values") != std::string::npos);
}

TEST_CASE("seed override and repeat runs")
{
    auto cfg = example("carleman");
    cfg["carleman"]["samples"] = 200;
    RunOptions o;
    std::ostringstream log, err;
    o.out = scratch("seed_a");
    o.seed = 99;
    REQUIRE(run_config(cfg, o, log, err) == kExitOk);
    const auto a = lines(*o.out / "bracket.csv");
    CHECK(load_json(*o.out / "manifest.json")["seed"] == 99);
    o.out = scratch("seed_b");
    REQUIRE(run_config(cfg, o, log, err) == kExitOk);
    CHECK(lines(*o.out / "bracket.csv") == a);
    o.out = scratch("seed_c");
    o.seed = 100;
    REQUIRE(run_config(cfg, o, log, err) == kExitOk);
    CHECK(lines(*o.out / "bracket.csv") != a);
}

TEST_CASE("every example config parses")
{
    for (const auto& e : fs::directory_iterator(kConfigs)) {
        CAPTURE(e.path().string());
        CHECK_NOTHROW(parse_config(load_json(e.path())));
    }
}
