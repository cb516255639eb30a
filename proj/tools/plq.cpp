#include "plq/bench.hpp"
#include "plq/density.hpp"
#include "plq/error.hpp"
#include "plq/io.hpp"
#include "plq/kalman.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace plq;

namespace {

enum class Level { error = 0, info = 1, debug = 2 };

Level log_level() {
    const char* env = std::getenv("PLQ_LOG");
    if (!env) return Level::error;
    const std::string s(env);
    if (s == "debug") return Level::debug;
    if (s == "info") return Level::info;
    return Level::error;
}

void log(Level lvl, const std::string& msg) {
    static const Level threshold = log_level();
    static const char* names[] = {"error", "info", "debug"};
    if (lvl <= threshold) std::cerr << "[plq " << names[static_cast<int>(lvl)] << "] " << msg << '\n';
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    for (std::string cell; std::getline(ss, cell, ',');) out.push_back(std::stod(cell));
    return out;
}

struct Common {
    std::string config;
    std::string data;
    std::string out = ".";
    std::string format = "csv";
    std::string penalty = "l2";
    std::string penalty_process = "l2";
    std::string penalty_meas = "l2";
    std::string weights = "none";
    double kappa = 1.0;
    double eps = 0.0;
    double lambda = 0.0;
    double lambda2 = 1.0;
    std::uint64_t seed = 1;
    std::string y;
    std::size_t count = 400;
    double p = 0.1;
    std::string suite = "all";
    std::string init = "generic";
};

CatalogueParams params(const Common& c) {
    CatalogueParams p;
    p.kappa = c.kappa;
    p.eps = c.eps;
    p.lambda = c.lambda;
    return p;
}

SmootherSpec smoother_spec(const Common& c) {
    SmootherSpec s;
    s.process = parse_penalty_kind(c.penalty_process);
    s.measurement = parse_penalty_kind(c.penalty_meas);
    s.process_params = params(c);
    s.meas_params = params(c);
    s.weights = c.weights == "standardized" ? WeightMode::standardized : WeightMode::none;
    return s;
}

int cmd_eval(const Common& c) {
    const std::vector<double> ys = parse_list(c.y);
    const Vec y = Eigen::Map<const Vec>(ys.data(), static_cast<Eigen::Index>(ys.size()));
    QsPenalty rho;
    if (!c.config.empty()) {
        rho = io::penalty_from_json(io::load_json(c.config), fs::path(c.config).parent_path());
    } else {
        rho = make_catalogue(parse_penalty_kind(c.penalty), params(c), y.size());
    }
    std::cout << fmt_double(evaluate(rho, y)) << '\n';
    return 0;
}

int cmd_solve(const Common& c) {
    const PlqProblem p = io::problem_from_json(io::load_json(c.config), fs::path(c.config).parent_path());
    InitStrategy strategy = InitStrategy::generic;
    if (c.init == "l1_l2") strategy = InitStrategy::l1_l2;
    else if (c.init == "vapnik_huber") strategy = InitStrategy::vapnik_huber;
    const SolveResult r = solve(p, {}, strategy);
    DenseKktSystem sys(p.objective);
    const KktCertificate cert = kkt_certificate(sys, r.state);
    log(Level::info, "solved in " + std::to_string(r.stats.iterations) + " iterations");
    io::write_text(fs::path(c.out) / "y.csv", io::vector_csv("y", r.y));
    io::write_text(fs::path(c.out) / "u.csv", io::vector_csv("u", r.u));
    std::cout << "objective," << fmt_double(objective_value(p, r.y)) << '\n'
              << "iterations," << r.stats.iterations << '\n'
              << "kkt," << fmt_double(cert.worst()) << '\n';
    return 0;
}

int cmd_smooth(const Common& c) {
    const StateSpaceModel model = io::model_from_json(io::load_json(c.config), fs::path(c.config).parent_path());
    std::vector<Vec> z = io::measurements_from_csv(c.data, model.m);
    const SmootherSpec spec = smoother_spec(c);
    const bool quadratic = spec.process == PenaltyKind::l2 && spec.measurement == PenaltyKind::l2;
    const SmoothResult r = quadratic ? smooth_quadratic(model, z) : smooth_plq(model, z, spec);
    log(Level::info, "smoother iterations " + std::to_string(r.stats.iterations));
    io::write_text(fs::path(c.out) / "xhat.csv", io::xhat_csv(r.x));
    return 0;
}

int cmd_simulate(const Common& c) {
    const SimData d = simulate_expsin8(c.count, c.p, c.seed);
    std::ostringstream out;
    out << "k,t,truth,z\n";
    for (std::size_t k = 0; k < d.t.size(); ++k) {
        out << k + 1 << ',' << fmt_double(d.t[k]) << ',' << fmt_double(d.truth[k]) << ',' << fmt_double(d.z[k]) << '\n';
    }
    io::write_text(fs::path(c.out) / "sim.csv", out.str());
    return 0;
}

SimData load_sim(const std::string& path) {
    SimData d;
    for (const auto& row : io::read_csv(path)) {
        if (row.size() < 4) throw Error(ErrorCode::ParseError, "sim data needs columns k,t,truth,z");
        d.t.push_back(row[1]);
        d.truth.push_back(row[2]);
        d.z.push_back(row[3]);
    }
    return d;
}

int cmd_cv(const Common& c) {
    const SimData d = c.data.empty() ? simulate_expsin8(c.count, c.p, c.seed) : load_sim(c.data);
    SmootherSpec spec = smoother_spec(c);
    spec.process = PenaltyKind::l2;
    const CvResult cv = cross_validate(d, CvGrid::paper_default(c.seed), spec);
    io::write_text(fs::path(c.out) / "cv_surface.csv", cv_surface_csv(cv));
    const SplineFit fit = fit_spline(d, cv.train, cv.best.lambda2, [&] {
        SmootherSpec s = spec;
        s.meas_params.eps = cv.best.eps;
        return s;
    }());
    std::cout << "lambda2," << fmt_double(cv.best.lambda2) << '\n'
              << "eps," << fmt_double(cv.best.eps) << '\n'
              << "validation_error," << fmt_double(cv.best.error) << '\n'
              << "rmse_truth," << fmt_double(rmse(fit.prediction, d.truth)) << '\n';
    return 0;
}

int cmd_bench(const Common& c) {
    if (c.suite == "table1" || c.suite == "all") {
        Table1Config cfg;
        cfg.seed = c.seed;
        const auto rows = run_table1_suite(cfg);
        io::write_text(fs::path(c.out) / "table1.csv", table1_csv(rows));
        for (const auto& r : rows) {
            if (!r.error.empty()) log(Level::error, r.problem + ": " + r.error);
        }
    }
    if (c.suite == "scaling" || c.suite == "all") {
        SmootherSpec spec;
        spec.measurement = PenaltyKind::vapnik;
        spec.meas_params.eps = 0.5;
        const ScalingReport rep = bench_scaling({250, 500, 1000, 2000, 4000}, spec);
        io::write_text(fs::path(c.out) / "scaling.csv", scaling_csv(rep));
        std::cout << "slope," << fmt_double(rep.slope) << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PLQ penalties, interior-point solver and robust Kalman smoothing"};
    app.require_subcommand(1);
    Common c;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--out", c.out, "output directory");
        sub->add_option("--format", c.format, "output format")->check(CLI::IsMember({"csv"}));
        sub->add_option("--seed", c.seed, "PRNG seed");
    };
    auto add_penalty_params = [&](CLI::App* sub) {
        sub->add_option("--kappa", c.kappa, "Huber / soft-hinge threshold");
        sub->add_option("--eps", c.eps, "insensitivity width");
        sub->add_option("--lambda", c.lambda, "elastic-net weight");
    };

    auto* eval = app.add_subcommand("eval", "evaluate a penalty");
    eval->add_option("--penalty", c.penalty, "catalogue kind");
    eval->add_option("--config", c.config, "penalty JSON");
    eval->add_option("--y", c.y, "point, comma separated")->required();
    add_penalty_params(eval);

    auto* solve_cmd = app.add_subcommand("solve", "solve a PLQ problem");
    solve_cmd->add_option("--config", c.config, "problem JSON")->required();
    solve_cmd->add_option("--init", c.init, "start point")->check(CLI::IsMember({"generic", "l1_l2", "vapnik_huber"}));
    add_common(solve_cmd);

    auto* smooth = app.add_subcommand("smooth", "PLQ Kalman smoother");
    smooth->add_option("--config", c.config, "model JSON")->required();
    smooth->add_option("--data", c.data, "measurements CSV")->required();
    smooth->add_option("--penalty-process", c.penalty_process, "process penalty");
    smooth->add_option("--penalty-meas", c.penalty_meas, "measurement penalty");
    smooth->add_option("--weights", c.weights, "none or standardized")
        ->check(CLI::IsMember({"none", "standardized"}));
    add_penalty_params(smooth);
    add_common(smooth);

    auto* simulate = app.add_subcommand("simulate", "exp(sin 8t) samples with mixture noise");
    simulate->add_option("--count", c.count, "samples");
    simulate->add_option("--p", c.p, "outlier fraction");
    add_common(simulate);

    auto* cv = app.add_subcommand("cv", "cross-validate the spline smoother");
    cv->add_option("--data", c.data, "CSV from simulate");
    cv->add_option("--count", c.count, "samples when simulating");
    cv->add_option("--p", c.p, "outlier fraction when simulating");
    cv->add_option("--penalty-meas", c.penalty_meas, "measurement penalty");
    cv->add_option("--lambda2", c.lambda2, "unused; grid is fixed");
    add_penalty_params(cv);
    add_common(cv);

    auto* bench = app.add_subcommand("bench", "benchmark suites");
    bench->add_option("--suite", c.suite, "table1, scaling or all")
        ->check(CLI::IsMember({"table1", "scaling", "all"}));
    add_common(bench);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*eval) return cmd_eval(c);
        if (*solve_cmd) return cmd_solve(c);
        if (*smooth) return cmd_smooth(c);
        if (*simulate) return cmd_simulate(c);
        if (*cv) return cmd_cv(c);
        if (*bench) return cmd_bench(c);
    } catch (const Error& e) {
        log(Level::error, e.what());
        switch (e.code()) {
            case ErrorCode::BadKind:
            case ErrorCode::ParseError:
            case ErrorCode::IoError:
            case ErrorCode::BadParameter:
            case ErrorCode::DimensionMismatch:
                return 1;
            default:
                return 2;
        }
    } catch (const std::invalid_argument& e) {
        log(Level::error, std::string("bad number: ") + e.what());
        return 1;
    }
    return 1;
}
