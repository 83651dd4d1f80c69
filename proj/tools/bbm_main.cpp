// Batch front-end: wires the solver modules into reproducible experiments
// driven by a JSON config, emitting RFC-4180 CSV plus a deterministic JSON
// manifest per command (exit 0 = success, 1 = runtime/convergence failure,
// 2 = model-precondition violation).
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "bbm/asymptotics.hpp"
#include "bbm/coeffs.hpp"
#include "bbm/generator.hpp"
#include "bbm/io.hpp"
#include "bbm/offspring.hpp"
#include "bbm/sim.hpp"
#include "bbm/wave.hpp"

namespace {

using nlohmann::json;

constexpr const char* kVersion = "1.0.0";

struct Options {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<double> mu, beta, x;
    std::optional<int> workers;
    std::string regime;
};

struct Experiment {
    json cfg;
    bbm::ModelConfig model;
    double x = 1.0;
    int n_coeffs = 64;
    std::uint64_t replicates = 100000;
    std::uint64_t event_budget = 100000;
    std::uint64_t seed = 0;
    int workers = 1;
    std::string regime = "below";
};

void reject_unknown_top(const json& j) {
    static const char* allowed[] = {"model",      "x",       "n_coeffs",
                                    "replicates", "event_budget", "seed",
                                    "workers",    "regime"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok)
            throw bbm::DomainError("config: unknown key \"" + it.key() +
                                   "\"");
    }
}

Experiment load_experiment(const Options& opt) {
    std::ifstream f(opt.config_path);
    if (!f)
        throw std::runtime_error("cannot read config: " + opt.config_path);
    json cfg = json::parse(f);
    reject_unknown_top(cfg);
    if (!cfg.contains("model"))
        throw bbm::DomainError("config: \"model\" required");
    json model_json = cfg.at("model");
    if (opt.mu) model_json["mu"] = *opt.mu;
    if (opt.beta) model_json["beta"] = *opt.beta;
    Experiment ex{std::move(cfg), bbm::model_from_json(model_json)};
    ex.x = opt.x ? *opt.x : ex.cfg.value("x", 1.0);
    ex.n_coeffs = ex.cfg.value("n_coeffs", 64);
    ex.replicates = ex.cfg.value("replicates", std::uint64_t{100000});
    ex.event_budget = ex.cfg.value("event_budget", std::uint64_t{100000});
    ex.seed = opt.seed ? *opt.seed : ex.cfg.value("seed", std::uint64_t{0});
    ex.workers = opt.workers ? *opt.workers : ex.cfg.value("workers", 1);
    ex.regime = !opt.regime.empty() ? opt.regime
                                    : ex.cfg.value("regime", std::string(
                                                                 "below"));
    return ex;
}

std::string out_path(const Options& opt, const std::string& name) {
    std::filesystem::create_directories(opt.out_dir);
    return (std::filesystem::path(opt.out_dir) / name).string();
}

void write_manifest(const Options& opt, const std::string& command,
                    const Experiment& ex, json results,
                    std::vector<std::string> outputs) {
    json m;
    m["command"] = command;
    m["version"] = kVersion;
    m["model"] = bbm::model_to_json(ex.model);
    m["model_hash"] = bbm::model_hash(ex.model);
    m["seed"] = ex.seed;
    m["outputs"] = outputs;
    m["results"] = std::move(results);
    bbm::write_text_atomic(out_path(opt, command + ".manifest.json"),
                           m.dump(2) + "\n");
}

int cmd_wave(const Options& opt) {
    Experiment ex = load_experiment(opt);
    bbm::WaveProfile p = bbm::solve_profile(ex.model);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < p.xs.size(); ++i)
        rows.push_back({bbm::fmt17(p.xs[i]), bbm::fmt17(p.q_values[i]),
                        bbm::fmt17(p.qp_values[i])});
    bbm::write_csv_atomic(out_path(opt, "wave.csv"), {"x", "Q", "Qprime"},
                          rows);
    json res = {{"x0", p.x0},
                {"q", p.q},
                {"lambda_tilde", p.lambda_tilde},
                {"k_tail", p.k_tail},
                {"qprime0", p.qp0},
                {"picard_iterations", p.diag.picard_iterations},
                {"residual_fd", p.diag.residual_fd}};
    write_manifest(opt, "wave", ex, res, {"wave.csv"});
    return 0;
}

int cmd_radius(const Options& opt) {
    Experiment ex = load_experiment(opt);
    bbm::GeneratorCurve c = bbm::integrate_a(ex.model);
    const double R = bbm::radius(ex.model);
    const char* term =
        c.termination == bbm::GeneratorCurve::Termination::a_hit_zero
            ? "a_hit_zero"
            : "s_hit_rg";
    const char* reg = c.regime == bbm::GeneratorCurve::Regime::below_muc
                          ? "below"
                          : (c.regime == bbm::GeneratorCurve::Regime::at_muc
                                 ? "at"
                                 : "above");
    bbm::write_csv_atomic(
        out_path(opt, "radius.csv"),
        {"mu", "R", "a_end", "termination", "regime"},
        {{bbm::fmt17(ex.model.mu), bbm::fmt17(R), bbm::fmt17(c.a_end), term,
          reg}});
    write_manifest(opt, "radius", ex,
                   {{"R", R}, {"a_end", c.a_end}, {"regime", reg}},
                   {"radius.csv"});
    return 0;
}

int cmd_mu_c(const Options& opt) {
    Experiment ex = load_experiment(opt);
    bbm::MuCResult r = bbm::mu_c_locate(ex.model.law, ex.model.beta, 1e-6,
                                        ex.model.numerics);
    json res;
    switch (r.status) {
        case bbm::MuCResult::Status::finite:
            res["mu_c"] = r.mu_c;
            break;
        case bbm::MuCResult::Status::infinite:
            res["mu_c"] = "infinite";
            break;
        case bbm::MuCResult::Status::undecidable:
            res["mu_c"] = "undecidable";
            break;
    }
    switch (r.criterion) {
        case bbm::IntegralG::Finite:
            res["criterion"] = "integral_finite";
            break;
        case bbm::IntegralG::Infinite:
            res["criterion"] = "integral_divergent";
            break;
        case bbm::IntegralG::Undecidable:
            res["criterion"] = "undecidable";
            break;
    }
    bbm::write_csv_atomic(
        out_path(opt, "mu-c.csv"), {"mu_c", "criterion"},
        {{res["mu_c"].is_string() ? res["mu_c"].get<std::string>()
                                  : bbm::fmt17(r.mu_c),
          res["criterion"].get<std::string>()}});
    write_manifest(opt, "mu-c", ex, res, {"mu-c.csv"});
    return 0;
}

int cmd_coeffs(const Options& opt) {
    Experiment ex = load_experiment(opt);
    bbm::WaveProfile p = bbm::solve_profile(ex.model);
    bbm::CoefficientTable t = bbm::picard_coefficients(
        ex.model, &p, ex.n_coeffs, {ex.x}, ex.model.numerics.picard_tol);
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i <= t.N; ++i)
        rows.push_back({std::to_string(i), bbm::fmt17(t.values[0][i])});
    bbm::write_csv_atomic(out_path(opt, "coeffs.csv"), {"i", "q_i"}, rows);
    write_manifest(opt, "coeffs", ex,
                   {{"x", t.x_grid[0]},
                    {"N", t.N},
                    {"tail_mass_bound", t.tail_mass_bound[0]},
                    {"iterations", t.iterations}},
                   {"coeffs.csv"});
    return 0;
}

int cmd_simulate(const Options& opt) {
    Experiment ex = load_experiment(opt);
    bbm::SimConfig sc(ex.model, ex.x);
    sc.replicates = ex.replicates;
    sc.event_budget = ex.event_budget;
    sc.seed = ex.seed;
    sc.workers = ex.workers;
    bbm::SimSummary s = bbm::estimate(sc);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < s.z_counts.size(); ++i) {
        const bbm::Interval ci = s.z_ci(i, 0.99);
        rows.push_back({std::to_string(i), std::to_string(s.z_counts[i]),
                        bbm::fmt17(static_cast<double>(s.z_counts[i]) /
                                   s.replicates),
                        bbm::fmt17(ci.lo), bbm::fmt17(ci.hi)});
    }
    bbm::write_csv_atomic(out_path(opt, "simulate.csv"),
                          {"i", "count", "p_hat", "ci99_lo", "ci99_hi"},
                          rows);
    write_manifest(opt, "simulate", ex,
                   {{"x", ex.x},
                    {"replicates", s.replicates},
                    {"event_budget", s.event_budget},
                    {"seed", s.seed},
                    {"extinct_fraction", s.q_hat_low},
                    {"censored_fraction", s.censored_fraction},
                    {"q_hat_low", s.q_hat_low},
                    {"q_hat_high", s.q_hat_high}},
                   {"simulate.csv"});
    return 0;
}

int cmd_compare(const Options& opt) {
    Experiment ex = load_experiment(opt);
    bbm::WaveProfile p = bbm::solve_profile(ex.model);
    bbm::CoefficientTable t = bbm::picard_coefficients(
        ex.model, &p, ex.n_coeffs, {ex.x}, ex.model.numerics.picard_tol);
    const double rg = ex.model.law.radius_g();
    std::vector<std::vector<std::string>> rows;
    if (ex.regime == "below") {
        bbm::GeneratorCurve c = bbm::integrate_a(ex.model);
        for (int i = 10; i + 1 <= t.N && i <= 40; ++i) {
            const double computed = t.values[0][i + 1];
            const double formula =
                bbm::coefficient_asymptotic(i, ex.x, p, c);
            rows.push_back({std::to_string(i), bbm::fmt17(computed),
                            bbm::fmt17(formula),
                            bbm::fmt17(computed / formula)});
        }
    } else {
        // weighted tail sums sum_{i>=n} q_i R_G^i (i^t above the critical
        // drift, t = 0) against the matching closed form
        const bbm::TailFit tail =
            bbm::fit_g_tail(ex.model.law, ex.regime == "above" ? 3 : 0);
        // At the critical drift the weighted tail decays too slowly for a
        // truncated partial sum, so compute it as the generating-function
        // value at the radius, f_x(R_G) = Q(x0 + x), minus the accurate
        // head coefficients; above the critical drift the tail decays fast
        // and the direct partial sum avoids the cancellation error floor.
        const bool above = ex.regime == "above";
        const double f_at_rg = p.q_at(p.x0 + ex.x);
        for (int n = 8; n <= t.N / 2; n += 4) {
            double computed = above ? 0.0 : f_at_rg;
            if (above) {
                for (int i = n; i <= t.N; ++i)
                    computed += t.values[0][i] * std::pow(rg, i);
            } else {
                for (int i = 0; i < n; ++i)
                    computed -= t.values[0][i] * std::pow(rg, i);
            }
            const double formula =
                above ? bbm::supercritical_tail_sum(n, ex.x, 0.0, tail, p)
                            .first
                      : bbm::critical_drift_tail_sum(n, ex.x, tail, p);
            rows.push_back({std::to_string(n), bbm::fmt17(computed),
                            bbm::fmt17(formula),
                            bbm::fmt17(computed / formula)});
        }
    }
    bbm::write_csv_atomic(out_path(opt, "compare.csv"),
                          {"i", "computed", "formula", "ratio"}, rows);
    write_manifest(opt, "compare", ex,
                   {{"regime", ex.regime}, {"x", ex.x}}, {"compare.csv"});
    return 0;
}

int cmd_report(const Options& opt) {
    Experiment ex = load_experiment(opt);
    const std::string want = bbm::model_hash(ex.model);
    json report;
    report["model_hash"] = want;
    report["runs"] = json::array();
    for (const auto& entry :
         std::filesystem::directory_iterator(opt.out_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.size() < 14 ||
            name.substr(name.size() - 14) != ".manifest.json" ||
            name == "report.manifest.json")
            continue;
        std::ifstream f(entry.path());
        json m = json::parse(f);
        if (m.value("model_hash", std::string()) != want)
            throw std::runtime_error("report: model hash mismatch in " +
                                     name);
        report["runs"].push_back({{"command", m.value("command", "")},
                                  {"manifest", name},
                                  {"results", m.value("results", json())}});
    }
    bbm::write_text_atomic(out_path(opt, "report.json"),
                           report.dump(2) + "\n");
    write_manifest(opt, "report", ex,
                   {{"runs", report["runs"].size()}}, {"report.json"});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Absorbed-particle statistics for branching Brownian "
                 "motion restricted to extinction"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub, bool with_workers = false) {
        sub->add_option("--config", opt.config_path, "JSON experiment spec")
            ->required();
        sub->add_option("--out", opt.out_dir, "output directory");
        sub->add_option("--seed", opt.seed, "64-bit RNG seed override");
        sub->add_option("--mu", opt.mu, "drift override");
        sub->add_option("--beta", opt.beta, "branching-rate override");
        sub->add_option("--x", opt.x, "initial-distance override");
        if (with_workers)
            sub->add_option("--workers", opt.workers, "worker threads");
    };

    CLI::App* wave = app.add_subcommand("wave", "solve the wave profile");
    CLI::App* radius = app.add_subcommand("radius", "radius of convergence");
    CLI::App* muc = app.add_subcommand("mu-c", "critical drift search");
    CLI::App* coeffs = app.add_subcommand("coeffs", "coefficient table");
    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo runs");
    CLI::App* compare =
        app.add_subcommand("compare", "coefficients vs asymptotics");
    compare->alias("asymptotics");
    CLI::App* report = app.add_subcommand("report", "aggregate manifests");
    for (CLI::App* sub : {wave, radius, muc, coeffs, compare, report})
        add_common(sub);
    add_common(simulate, true);
    compare->add_option("--regime", opt.regime, "below | at | above");

    CLI11_PARSE(app, argc, argv);

    try {
        if (wave->parsed()) return cmd_wave(opt);
        if (radius->parsed()) return cmd_radius(opt);
        if (muc->parsed()) return cmd_mu_c(opt);
        if (coeffs->parsed()) return cmd_coeffs(opt);
        if (simulate->parsed()) return cmd_simulate(opt);
        if (compare->parsed()) return cmd_compare(opt);
        if (report->parsed()) return cmd_report(opt);
    } catch (const bbm::DomainError& e) {
        std::cerr << "model precondition violated: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
