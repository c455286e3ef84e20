#include "geoinv/cli/app.hpp"

#include "geoinv/io/csv.hpp"

#include <Eigen/Core>

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>

#ifndef GEOINV_VERSION
#define GEOINV_VERSION "0.0.0"
#endif

namespace geoinv::cli {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

std::string utc_now()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

/// Where one run writes, plus what ends up in its manifest.
struct Context {
    fs::path out;
    std::size_t jobs = 1;
    std::ostream& log;
    Json outputs = Json::array();
    Json timings = Json::object();
    Json result = Json::object();

    void write(const std::string& name, const std::function<void(std::ostream&)>& body)
    {
        const fs::path p = out / name;
        fs::create_directories(p.parent_path());
        std::ofstream os(p, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + p.string());
        body(os);
        os.close();
        outputs.push_back({{"file", name}, {"bytes", fs::file_size(p)}});
        log << "  wrote " << name << '\n';
    }

    template <typename F>
    auto timed(const std::string& stage, F&& f)
    {
        const auto t0 = Clock::now();
        if constexpr (std::is_void_v<decltype(f())>) {
            f();
            timings[stage] = seconds_since(t0);
        } else {
            auto r = f();
            timings[stage] = seconds_since(t0);
            return r;
        }
    }
};

double mesh_l2(const geometry::TriangleMesh& mesh, const fem::Vector& v)
{
    const fem::SparseMatrix m = fem::mass_matrix(mesh);
    return std::sqrt(std::max(0.0, v.dot(m * v)));
}

double relative(double num, double den) { return den > 0.0 ? num / den : std::numeric_limits<double>::quiet_NaN(); }

void write_quantities(Context& ctx, const std::string& name, const std::vector<std::pair<std::string, double>>& rows)
{
    ctx.write(name, [&](std::ostream& os) { fem::write_quantities_csv(os, rows); });
}

void write_admissibility(const ExperimentConfig& c, Context& ctx)
{
    if (!c.coeffs) return;
    const double mu1 = cached_mu1(c.domain.outer, c.numeric.poincare_h, ctx.out / "cache");
    const auto v = fem::check_admissibility(*c.coeffs, mu1);
    write_quantities(ctx, "admissibility.csv",
                     {{"mu1", mu1},
                      {"inverse_mu1", v.inverse_mu1},
                      {"lambda_star", v.lambda_star},
                      {"lambda", v.lambda},
                      {"admissible", v.admissible ? 1.0 : 0.0}});
}

geometry::TriangleMesh mesh_for(const ExperimentConfig& c, double h)
{
    return geometry::build_mesh(c.domain, c.obstacle, h, c.numeric.symmetry);
}

void write_geometry(const ExperimentConfig& c, const geometry::TriangleMesh& mesh, Context& ctx)
{
    ctx.write("mesh.txt", [&](std::ostream& os) { mesh.write(os); });
    if (c.obstacle) ctx.write("shape.txt", [&](std::ostream& os) { c.obstacle->write(os); });
}

void run_forward(const ExperimentConfig& c, Context& ctx, bool with_trace)
{
    const auto mesh = ctx.timed("mesh", [&] { return mesh_for(c, c.numeric.h); });
    const auto fields = ctx.timed("solve", [&] { return fem::solve_forward(mesh, *c.coeffs, c.boundary_data()); });
    write_geometry(c, mesh, ctx);
    ctx.write("solution.csv", [&](std::ostream& os) { fem::write_solution_csv(os, mesh, fields); });
    ctx.result["vertices"] = mesh.num_vertices();
    ctx.result["triangles"] = mesh.num_triangles();
    if (!with_trace) return;
    if (c.observation.mode == reconstruction::ObservationMode::Boundary) {
        const auto t = observation::normal_trace(fields, mesh);
        ctx.write("trace.csv", [&](std::ostream& os) { observation::write_trace_csv(os, t); });
    } else {
        const auto t = observation::internal_trace(fields, mesh, c.observation.omega, c.observation.resolution, c.domain);
        ctx.write("trace.csv", [&](std::ostream& os) { observation::write_trace_csv(os, t); });
    }
}

void run_pullback(const ExperimentConfig& c, Context& ctx)
{
    const auto mu = c.deformation->build(*c.domain.safety);
    const auto data = c.boundary_data();
    std::vector<std::array<double, 6>> rows;
    ctx.timed("solve", [&] {
        for (double h : c.numeric.h_grid) {
            const auto mesh = mesh_for(c, h);
            const auto pb = fem::solve_pullback(mesh, mu, c.numeric.sigma, *c.coeffs, data, c.domain);
            // same connectivity: node v of the deformed mesh is m_sigma(x_v)
            const auto deformed = geometry::apply_deformation(mesh, mu, c.numeric.sigma);
            const auto fwd = fem::solve_forward(deformed, *c.coeffs, data);
            const double gy = mesh_l2(deformed, pb.lifted.y - fwd.y);
            const double gz = mesh_l2(deformed, pb.lifted.z - fwd.z);
            rows.push_back({h, c.numeric.sigma, gy, gz, relative(gy, mesh_l2(deformed, fwd.y)),
                            relative(gz, mesh_l2(deformed, fwd.z))});
        }
    });
    ctx.write("pullback.csv", [&](std::ostream& os) {
        io::CsvWriter csv(os, {"h", "sigma", "gap_y", "gap_z", "relative_gap_y", "relative_gap_z"});
        for (const auto& r : rows) csv.row(r[0], r[1], r[2], r[3], r[4], r[5]);
    });
}

void run_adjoint(const ExperimentConfig& c, Context& ctx)
{
    const auto& t = *c.test;
    const auto mesh = ctx.timed("mesh", [&] { return mesh_for(c, c.numeric.h); });
    const auto mu = c.deformation->build(*c.domain.safety);
    const auto test = shape_gradient::gamma_test_pairs(c.domain, t.mode + 1, t.channel).back();
    const auto rows = ctx.timed("identity", [&] {
        return shape_gradient::adjoint_identity_check(mesh, *c.coeffs, c.boundary_data(), mu, test,
                                                      c.numeric.sigma_grid);
    });
    ctx.write("identity.csv", [&](std::ostream& os) { shape_gradient::write_identity_csv(os, rows); });

    // remainder order over the nonzero sigmas
    double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
    for (const auto& r : rows) {
        if (r.sigma == 0.0 || !(std::abs(r.remainder) > 0.0)) continue;
        const double lx = std::log(std::abs(r.sigma)), ly = std::log(std::abs(r.remainder));
        sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly, n += 1;
    }
    const double slope = n >= 2 ? (n * sxy - sx * sy) / (n * sxx - sx * sx) : std::numeric_limits<double>::quiet_NaN();
    std::vector<std::pair<std::string, double>> summary{{"remainder_slope", slope}};
    for (const auto& r : rows) {
        if (r.sigma == 0.0) continue;
        // shortest round-trip form keeps the quantity names readable
        char label[32];
        const auto end = std::to_chars(label, label + sizeof label, r.sigma).ptr;
        summary.emplace_back("gap_at_" + std::string(label, end),
                                 relative(std::abs(r.lhs - r.rhs_scaled), std::abs(r.rhs_scaled)));
    }
    write_quantities(ctx, "identity_summary.csv", summary);

    const auto k = ctx.timed("sensitivity", [&] {
        const auto fwd = fem::solve_forward(mesh, *c.coeffs, c.boundary_data());
        return shape_gradient::sensitivity_matrix(
            mesh, *c.coeffs, fwd, *c.obstacle, t.p,
            shape_gradient::gamma_test_pairs(c.domain, t.test_modes, shape_gradient::Channels::Both));
    });
    ctx.write("sensitivity.csv", [&](std::ostream& os) { shape_gradient::write_sensitivity_csv(os, k); });
}

void run_reconstruct(const ExperimentConfig& c, Context& ctx)
{
    const auto problem = c.forward_problem();
    const auto& rc = c.reconstruction;
    const auto target = ctx.timed("synthesize", [&] { return reconstruction::synthesize(problem, *c.obstacle, rc); });
    const auto result = ctx.timed("reconstruct", [&] {
        return reconstruction::reconstruct(target, *c.initial, problem, rc, c.obstacle);
    });
    ctx.write("history.csv", [&](std::ostream& os) { reconstruction::write_history_csv(os, result, rc.p); });
    for (const auto& rec : result.history) {
        char name[32];
        std::snprintf(name, sizeof name, "shapes/iter_%03zu.txt", rec.iteration);
        ctx.write(name, [&](std::ostream& os) { rec.shape.write(os); });
    }
    const auto& last = result.history.back();
    ctx.write("final_shape.txt", [&](std::ostream& os) { last.shape.write(os); });
    write_quantities(ctx, "summary.csv",
                     {{"converged", result.converged ? 1.0 : 0.0},
                      {"iterations", static_cast<double>(last.iteration)},
                      {"final_residual", last.residual},
                      {"final_hausdorff", last.hausdorff},
                      {"centroid_error", (last.shape.centroid() - c.obstacle->centroid()).norm()},
                      {"rank_deficient", result.rank_deficient ? 1.0 : 0.0},
                      {"noise_floor", result.noise_floor}});
    ctx.result["stop_reason"] = result.stop_reason;
    ctx.result["converged"] = result.converged;
    ctx.result["synthetic_data"] = "same discretization as the inversion (inverse crime)";
    if (result.error) throw NumericalError(*result.error);
}

std::string distance_name(observation::DistanceMode m)
{
    return m == observation::DistanceMode::L2 ? "l2" : "hminus_surrogate";
}

void run_stability(const ExperimentConfig& c, Context& ctx)
{
    const auto setup = c.sweep_setup(ctx.jobs);
    const auto mu = c.deformation->build(*c.domain.safety);
    // both distances come from the same solves; the configured one drives fit.csv
    using observation::DistanceMode;
    const DistanceMode other =
        setup.distance == DistanceMode::L2 ? DistanceMode::HminusSurrogate : DistanceMode::L2;
    const auto curves = ctx.timed("sweep", [&] {
        return stability::observation_curves(setup, *c.obstacle, mu, c.numeric.sigma_grid, {setup.distance, other});
    });
    const auto& curve = curves.front();
    ctx.write("sweep.csv", [&](std::ostream& os) { stability::write_sweep_csv(os, curve); });
    double worst = 0.0;
    for (std::size_t i = 0; i < curve.sigma.size(); ++i)
        if (curve.valid[i]) worst = std::max(worst, curve.distance[i]);
    write_quantities(ctx, "sweep_summary.csv",
                     {{"floor", curve.floor},
                      {"resolve_floor", curve.resolve_floor},
                      {"max_distance", worst},
                      {"max_distance_over_floor", worst / curve.floor}});
    if (!c.numeric.dd_steps.empty()) {
        const auto dd = ctx.timed("divided_differences", [&] {
            return stability::divided_differences(setup, *c.obstacle, mu, c.numeric.dd_steps);
        });
        ctx.write("divided_differences.csv", [&](std::ostream& os) {
            io::CsvWriter csv(os, {"step", "first", "second", "third"});
            for (const auto& d : dd) csv.row(d.step, d.first, d.second, d.third);
        });
    }
    ctx.write("fit_by_distance.csv", [&](std::ostream& os) {
        io::CsvWriter csv(os, {"distance", "k_raw", "k_int", "C", "residual", "floor", "status"});
        for (std::size_t m = 0; m < curves.size(); ++m) {
            const auto name = m == 0 ? distance_name(setup.distance) : distance_name(other);
            try {
                const auto f = stability::fit_order(curves[m]);
                csv.row(name, f.k_raw, f.k_int, f.c, f.residual, f.floor, "ok");
            } catch (const NumericalError& e) {
                const double nan = std::numeric_limits<double>::quiet_NaN();
                csv.row(name, nan, 0, nan, nan, curves[m].floor, e.what());
            }
        }
    });
    const auto fit = stability::fit_order(curve);
    ctx.write("fit.csv", [&](std::ostream& os) { stability::write_fit_csv(os, fit); });
}

void run_discriminate(const ExperimentConfig& c, Context& ctx)
{
    const auto r = ctx.timed("discriminate", [&] {
        return stability::discrimination_test(c.sweep_setup(ctx.jobs), *c.obstacle, *c.other);
    });
    ctx.write("discrimination.csv", [&](std::ostream& os) {
        io::CsvWriter csv(os, {"hausdorff", "distance", "floor", "verdict"});
        csv.row(r.hausdorff, r.distance, r.floor, stability::to_string(r.verdict));
    });
}

void run_carleman(const ExperimentConfig& c, std::uint64_t seed, Context& ctx)
{
    const auto& s = *c.carleman;
    const auto samples = ctx.timed("bracket", [&] { return carleman::sample_bracket(s.weight, s.samples, seed); });
    ctx.write("bracket.csv", [&](std::ostream& os) { carleman::write_bracket_csv(os, samples); });
    const auto rows = ctx.timed("ratio", [&] { return carleman::carleman_ratio(s.weight, s.region, s.bump, s.h_grid); });
    ctx.write("ratio.csv", [&](std::ostream& os) { carleman::write_ratio_csv(os, rows); });

    double worst = 0.0, lowest = std::numeric_limits<double>::infinity();
    for (const auto& b : samples) {
        worst = std::max(worst, std::abs(b.bracket - b.closed_form) / std::abs(b.closed_form));
        lowest = std::min(lowest, b.bracket);
    }
    const double lb = carleman::bracket_lower_bound(s.weight);
    double growth = std::numeric_limits<double>::quiet_NaN();
    if (rows.size() >= 3) growth = rows.back().ratio / std::max(rows[0].ratio, rows[1].ratio);
    write_quantities(ctx, "carleman_summary.csv",
                     {{"samples", static_cast<double>(samples.size())},
                      {"max_relative_error", worst},
                      {"min_bracket", lowest},
                      {"lower_bound", lb},
                      {"lower_bound_holds", lowest >= lb ? 1.0 : 0.0},
                      {"ratio_growth", growth}});
}

void run_counterexample(const ExperimentConfig& c, Context& ctx)
{
    const auto r = ctx.timed("fixed_point", [&] { return stability::one_dim_counterexample(*c.counterexample); });
    ctx.write("profile.csv", [&](std::ostream& os) {
        io::CsvWriter csv(os, {"x", "y", "z"});
        for (Eigen::Index i = 0; i < r.x.size(); ++i) csv.row(r.x[i], r.y[i], r.z[i]);
    });
    write_quantities(ctx, "quantities.csv",
                     {{"y0", r.y0},
                      {"z0", r.z0},
                      {"yx0", r.yx0},
                      {"zx0", r.zx0},
                      {"residual_y", r.residual_y},
                      {"residual_z", r.residual_z},
                      {"sweeps", static_cast<double>(r.sweeps)}});
}

void run_poincare(const ExperimentConfig& c, Context& ctx)
{
    const double mu1 = ctx.timed("eigen", [&] { return cached_mu1(c.domain.outer, c.numeric.h, ctx.out / "cache"); });
    std::vector<std::pair<std::string, double>> rows{{"h", c.numeric.h}, {"mu1", mu1}, {"lambda1", 1.0 / mu1}};
    if (c.coeffs) {
        const auto v = fem::check_admissibility(*c.coeffs, mu1);
        rows.insert(rows.end(), {{"lambda_star", v.lambda_star},
                                 {"inverse_mu1", v.inverse_mu1},
                                 {"lambda", v.lambda},
                                 {"admissible", v.admissible ? 1.0 : 0.0}});
    }
    write_quantities(ctx, "quantities.csv", rows);
}

void dispatch(const ExperimentConfig& c, std::uint64_t seed, Context& ctx)
{
    if (c.kind != Kind::Poincare) write_admissibility(c, ctx);
    switch (c.kind) {
    case Kind::Forward: run_forward(c, ctx, false); break;
    case Kind::Observe: run_forward(c, ctx, true); break;
    case Kind::PullbackCheck: run_pullback(c, ctx); break;
    case Kind::AdjointCheck: run_adjoint(c, ctx); break;
    case Kind::Reconstruct: run_reconstruct(c, ctx); break;
    case Kind::Stability: run_stability(c, ctx); break;
    case Kind::Discriminate: run_discriminate(c, ctx); break;
    case Kind::Carleman: run_carleman(c, seed, ctx); break;
    case Kind::Counterexample1d: run_counterexample(c, ctx); break;
    case Kind::Poincare: run_poincare(c, ctx); break;
    }
}

Json error_record(int code, const std::string& category, const std::string& where, const std::string& message)
{
    Json e{{"status", "error"}, {"exit_code", code}, {"category", category}, {"message", message}};
    e[category == "schema" ? "path" : "module"] = where;
    return e;
}

void write_json(const fs::path& p, const Json& j)
{
    std::ofstream os(p, std::ios::binary);
    os << j.dump(2) << '\n';
}

}  // namespace

int run_config(const Json& config, const RunOptions& options, std::ostream& log, std::ostream& err,
        const std::string& config_label)
{
    const auto t0 = Clock::now();
    Json manifest{{"tool", "geoinv"},
                  {"version", GEOINV_VERSION},
                  {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION)},
                  {"compiler", __VERSION__},
                  {"config_path", config_label},
                  {"config", config},
                  {"jobs", options.jobs},
                  {"started_utc", utc_now()}};

    std::optional<fs::path> out = options.out;
    if (!out && config.is_object() && config.contains("output") && config["output"].is_string())
        out = fs::path(config["output"].get<std::string>());

    auto fail = [&](const Json& record) {
        err << record.dump() << '\n';
        if (out) {
            std::error_code ec;
            fs::create_directories(*out, ec);
            write_json(*out / "error.json", record);
            manifest["status"] = "error";
            manifest["error"] = record;
            manifest["finished_utc"] = utc_now();
            manifest["timings_s"] = Json{{"total", seconds_since(t0)}};
            write_json(*out / "manifest.json", manifest);
        }
        return record["exit_code"].get<int>();
    };

    if (!out) return fail(error_record(kExitSchema, "schema", "output", "no output directory (--out or \"output\")"));
    fs::create_directories(*out);

    Json effective = config;
    if (options.seed && effective.is_object()) effective["seed"] = *options.seed;

    ExperimentConfig c;
    Context ctx{*out, std::max<std::size_t>(options.jobs, 1), log};
    try {
        c = parse_config(effective);
        const auto vs = ctx.timed("validate", [&] { return validate_config(effective, *out / "cache"); });
        for (const auto& v : vs) {
            if (v.warning)
                log << "warning: " << v.path << ": " << v.message << '\n';
            else
                return fail(error_record(kExitSchema, "schema", v.path, v.message));
        }
    } catch (const SchemaError& e) {
        return fail(error_record(kExitSchema, "schema", e.path(), e.message()));
    } catch (const std::exception& e) {
        return fail(error_record(kExitNumerical, "numerical", "cli", e.what()));
    }
    manifest["kind"] = to_string(c.kind);
    manifest["seed"] = c.seed;

    log << "geoinv run: " << to_string(c.kind) << " -> " << out->string() << '\n';
    int code = kExitOk;
    Json record;
    try {
        dispatch(c, c.seed, ctx);
    } catch (const InvalidInput& e) {
        code = kExitSchema;
        record = error_record(code, "schema", module_of(c.kind), e.what());
    } catch (const std::exception& e) {
        code = kExitNumerical;
        record = error_record(code, "numerical", module_of(c.kind), e.what());
    }
    ctx.timings["total"] = seconds_since(t0);
    manifest["outputs"] = ctx.outputs;
    manifest["result"] = ctx.result;
    manifest["timings_s"] = ctx.timings;
    if (code != kExitOk) {
        manifest["outputs"] = ctx.outputs;
        err << record.dump() << '\n';
        write_json(*out / "error.json", record);
        manifest["status"] = "error";
        manifest["error"] = record;
    } else {
        std::error_code ec;
        fs::remove(*out / "error.json", ec);
        manifest["status"] = "ok";
    }
    manifest["finished_utc"] = utc_now();
    write_json(*out / "manifest.json", manifest);
    return code;
}

int run(const fs::path& config_path, const RunOptions& options, std::ostream& log, std::ostream& err)
{
    Json j;
    try {
        j = load_json(config_path);
    } catch (const SchemaError& e) {
        const Json record = error_record(kExitSchema, "schema", e.path(), e.message());
        err << record.dump() << '\n';
        if (options.out) {
            fs::create_directories(*options.out);
            write_json(*options.out / "error.json", record);
        }
        return kExitSchema;
    }
    return run_config(j, options, log, err, config_path.string());
}

int validate(const fs::path& config_path, const std::optional<fs::path>& cache_dir, std::ostream& out)
{
    Json report{{"config", config_path.string()}};
    Json j;
    try {
        j = load_json(config_path);
    } catch (const SchemaError& e) {
        report["valid"] = false;
        report["violations"] = Json::array({{{"path", e.path()}, {"message", e.message()}, {"severity", "error"}}});
        out << report.dump(2) << '\n';
        return kExitSchema;
    }
    const auto vs = validate_config(j, cache_dir);
    bool valid = true;
    Json list = Json::array();
    for (const auto& v : vs) {
        valid = valid && v.warning;
        list.push_back({{"path", v.path}, {"message", v.message}, {"severity", v.warning ? "warning" : "error"}});
    }
    report["valid"] = valid;
    report["violations"] = list;
    out << report.dump(2) << '\n';
    return kExitOk;
}

namespace {

Json::json_pointer pointer_of(const std::string& dotted)
{
    std::string p;
    std::stringstream ss(dotted);
    std::string part;
    while (std::getline(ss, part, '.')) p += "/" + part;
    return Json::json_pointer(p);
}

}  // namespace

int plan(const fs::path& config_path, const fs::path& out_dir, std::ostream& log, std::ostream& err)
{
    auto fail = [&](const std::string& path, const std::string& msg) {
        err << error_record(kExitSchema, "schema", path, msg).dump() << '\n';
        return kExitSchema;
    };
    Json j;
    try {
        j = load_json(config_path);
    } catch (const SchemaError& e) {
        return fail(e.path(), e.message());
    }
    if (!j.is_object() || !j.contains("plan")) return fail("plan", "missing required block");
    const Json spec = j["plan"];
    if (!spec.is_object() || !spec.contains("vary") || !spec["vary"].is_array() || spec["vary"].empty())
        return fail("plan.vary", "expected a non-empty array of {path, values}");
    for (auto it = spec.begin(); it != spec.end(); ++it)
        if (it.key() != "vary") return fail("plan." + it.key(), "unknown key");
    Json base = j;
    base.erase("plan");

    std::vector<std::string> paths;
    std::vector<Json> values;
    for (std::size_t i = 0; i < spec["vary"].size(); ++i) {
        const Json& v = spec["vary"][i];
        const std::string at = "plan.vary[" + std::to_string(i) + "]";
        if (!v.is_object() || !v.contains("path") || !v["path"].is_string()) return fail(at + ".path", "expected a string");
        if (!v.contains("values") || !v["values"].is_array() || v["values"].empty())
            return fail(at + ".values", "expected a non-empty array");
        paths.push_back(v["path"].get<std::string>());
        values.push_back(v["values"]);
    }

    fs::create_directories(out_dir);
    std::ofstream index(out_dir / "plan.csv", std::ios::binary);
    std::vector<std::string> header{"index", "file"};
    header.insert(header.end(), paths.begin(), paths.end());
    io::CsvWriter csv(index, header);

    std::vector<std::size_t> at(paths.size(), 0);
    std::size_t n = 0;
    while (true) {
        Json cfg = base;
        std::vector<std::string> cells;
        for (std::size_t k = 0; k < paths.size(); ++k) {
            try {
                cfg[pointer_of(paths[k])] = values[k][at[k]];
            } catch (const Json::exception& e) {
                return fail("plan.vary[" + std::to_string(k) + "].path", e.what());
            }
            cells.push_back(values[k][at[k]].dump());
        }
        char name[32];
        std::snprintf(name, sizeof name, "plan_%03zu.json", n);
        if (cfg.contains("output") && cfg["output"].is_string())
            cfg["output"] = (fs::path(cfg["output"].get<std::string>()) / fs::path(name).stem()).string();
        try {
            parse_config(cfg);
        } catch (const SchemaError& e) {
            return fail(std::string(name) + ":" + e.path(), e.message());
        }
        write_json(out_dir / name, cfg);
        std::vector<std::string> row{std::to_string(n), name};
        for (auto& s : cells) {
            // quote cells that carry commas (arrays, objects)
            if (s.find(',') != std::string::npos || s.find('"') != std::string::npos) {
                std::string q = "\"";
                for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
                s = q + "\"";
            }
            row.push_back(s);
        }
        csv.cells(row);
        log << name << '\n';
        ++n;
        // odometer over the value lists
        std::size_t k = 0;
        while (k < at.size() && ++at[k] == values[k].size()) at[k++] = 0;
        if (k == at.size()) break;
    }
    log << n << " configs written to " << out_dir.string() << '\n';
    return kExitOk;
}

}  // namespace geoinv::cli
