// hierfdr: simulate data, fit a method, re-threshold saved posteriors, run the benchmark.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hierfdr/hierfdr.hpp"

namespace {

using hierfdr::Method;
using nlohmann::json;

struct CliError : std::runtime_error {
    std::string category;
    CliError(std::string cat, const std::string& msg) : std::runtime_error(msg), category(std::move(cat)) {}
};

json read_json_file(const std::string& path, const std::string& what) {
    std::ifstream in(path);
    if (!in) throw CliError("io", "cannot open " + what + " '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw CliError(what == "config" ? "config" : "data", what + " '" + path + "' is not valid JSON: " + e.what());
    }
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw CliError("io", "cannot write '" + path + "'");
    out << text;
    if (!out) throw CliError("io", "error while writing '" + path + "'");
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string default_csv_path(const std::string& json_path) {
    std::filesystem::path p(json_path);
    p.replace_extension(".csv");
    return p.string();
}

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw CliError("invalid-input", "alpha must lie in (0,1)");
}

// ---- simulate ----

struct SimulateOpts {
    std::string prior = "linear";
    std::string alt = "ws";
    std::size_t n = 1000, k = 100, q = 5;
    std::uint64_t seed = 0;
    double ps_sd = 3.0;
    double nonlinear_fraction = 0.3;
    double nonlinear_scale = 0.5;
    double nonlinear_gain = 10.0;
    std::string out;
};

void cmd_simulate(const SimulateOpts& o) {
    hierfdr::ScenarioConfig sc;
    try {
        sc.prior = hierfdr::parse_prior_kind(o.prior);
        sc.alt = hierfdr::parse_alt_kind(o.alt);
    } catch (const std::invalid_argument& e) {
        throw CliError("usage", e.what());
    }
    sc.n = o.n;
    sc.k = o.k;
    sc.q = o.q;
    sc.seed = o.seed;
    sc.ps_sd = o.ps_sd;
    sc.nonlinear_fraction = o.nonlinear_fraction;
    sc.nonlinear_scale = o.nonlinear_scale;
    sc.nonlinear_gain = o.nonlinear_gain;
    const auto data = hierfdr::generate(sc);
    std::ofstream out(o.out);
    if (!out) throw CliError("io", "cannot write '" + o.out + "'");
    hierfdr::write_data(out, hierfdr::to_data_file(data));
    if (!out) throw CliError("io", "error while writing '" + o.out + "'");
}

// ---- fit ----

struct FitOpts {
    std::string data;
    std::string method;
    double alpha = 0.1;
    std::uint64_t seed = 0;
    bool one_sided = false;
    double null_mu = 0.0, null_sigma = 1.0;
    hierfdr::TrainConfig train;
    int pr_sweeps = 10;
    double storey_tuning = 0.5;
    std::string out;
    std::string csv;
    std::string density_in;
    std::string density_out;
    std::string model_out;
    std::string regression_out;
};

json decision_report(Method method, const hierfdr::MethodFit& fit, double alpha, std::ostream* csv) {
    json rep = {{"method", hierfdr::to_string(method)}, {"alpha", alpha}, {"n", 0}};
    if (hierfdr::uses_posterior(method)) {
        const auto d = hierfdr::select_discoveries(fit.posterior, alpha);
        json j = hierfdr::to_json(d, fit.posterior);
        rep.update(j);
        rep["n"] = fit.posterior.size();
        if (csv) hierfdr::write_csv(*csv, d, fit.posterior);
    } else {
        auto rej = hierfdr::rejections(fit, alpha);
        std::vector<bool> flags(fit.pvalues.size(), false);
        for (auto i : rej) flags[i] = true;
        json tests = json::array();
        for (std::size_t i = 0; i < fit.pvalues.size(); ++i)
            tests.push_back({{"index", i}, {"p", fit.pvalues[i]}, {"rejected", static_cast<bool>(flags[i])}});
        rep["n"] = fit.pvalues.size();
        rep["m"] = rej.size();
        rep["expected_fdp"] = nullptr;
        rep["rejected"] = rej;
        rep["tests"] = tests;
        if (method == Method::sbh) {
            rep["storey_tuning"] = fit.storey_tuning;
            rep["storey_pi0"] = hierfdr::storey_pi0(fit.pvalues, fit.storey_tuning);
        }
        if (csv) {
            csv->precision(17);
            *csv << "index,p,rejected\n";
            for (std::size_t i = 0; i < fit.pvalues.size(); ++i)
                *csv << i << ',' << fit.pvalues[i] << ',' << (flags[i] ? 1 : 0) << '\n';
        }
    }
    return rep;
}

void cmd_fit(const FitOpts& o) {
    check_alpha(o.alpha);
    Method method;
    try {
        method = hierfdr::parse_method(o.method);
    } catch (const std::invalid_argument& e) {
        throw CliError("usage", e.what());
    }
    hierfdr::DataFile data;
    try {
        data = hierfdr::read_data(o.data);
    } catch (const hierfdr::DataFormatError& e) {
        throw CliError("data", o.data + ": " + e.what());
    } catch (const std::runtime_error& e) {
        throw CliError("io", e.what());
    }

    hierfdr::PipelineConfig pc;
    pc.null.mu = o.null_mu;
    pc.null.sigma = o.null_sigma;
    pc.train = o.train;
    pc.pr.n_sweeps = o.pr_sweeps;
    pc.two_sided = !o.one_sided;
    pc.storey_tuning = o.storey_tuning;
    pc.seed = o.seed;
    try {
        pc.null.validate();
        pc.train.validate();
        pc.pr.validate();
    } catch (const std::invalid_argument& e) {
        throw CliError("usage", e.what());
    }

    hierfdr::Pipeline pipeline(std::move(data), pc);
    if (!o.density_in.empty()) {
        try {
            pipeline.set_density(hierfdr::density_from_json(read_json_file(o.density_in, "density")));
        } catch (const json::exception& e) {
            throw CliError("data", "density '" + o.density_in + "': " + e.what());
        } catch (const std::invalid_argument& e) {
            throw CliError("data", "density '" + o.density_in + "': " + e.what());
        }
    }
    hierfdr::MethodFit fit;
    try {
        fit = pipeline.fit(method);
    } catch (const std::invalid_argument& e) {
        throw CliError("data", e.what());
    }

    std::ostringstream csv;
    json rep = decision_report(method, fit, o.alpha, &csv);
    rep["seed"] = o.seed;
    rep["two_sided"] = pc.two_sided;
    if (fit.density) {
        rep["pi0"] = fit.density->pi0 / fit.density->total_mass();
    }
    if (fit.field) {
        rep["prior"] = {{"a", fit.field->a}, {"b", fit.field->b}, {"adjusted", fit.field->adjusted}};
        if (fit.field->adjusted) {
            rep["prior"]["a_raw"] = fit.field->a_raw;
            rep["prior"]["b_raw"] = fit.field->b_raw;
        }
    }
    if (fit.regression) rep["regression"] = hierfdr::to_json(*fit.regression);
    if (fit.training) {
        rep["training"] = hierfdr::to_json(pc.train);
        json epochs = json::array();
        for (const auto& t : fit.training->traces) epochs.push_back(t.best_epoch);
        rep["training"]["best_epoch"] = epochs;
    }

    write_json(o.out, rep);
    write_text(o.csv.empty() ? default_csv_path(o.out) : o.csv, csv.str());
    if (!o.density_out.empty()) {
        if (!fit.density) throw CliError("usage", "--save-density: method " + o.method + " estimates no density");
        write_json(o.density_out, hierfdr::to_json(*fit.density));
    }
    if (!o.model_out.empty()) {
        if (!fit.training) throw CliError("usage", "--save-model: method " + o.method + " trains no network");
        json models = json::array();
        for (const auto& m : fit.training->models) models.push_back(m.to_json());
        write_json(o.model_out, {{"fold", fit.training->fold}, {"models", models}});
    }
    if (!o.regression_out.empty()) {
        if (!fit.regression) throw CliError("usage", "--save-regression: method " + o.method + " fits no regression");
        write_json(o.regression_out, hierfdr::to_json(*fit.regression));
    }
}

// ---- select ----

struct SelectOpts {
    std::string report;
    double alpha = 0.1;
    std::string out;
    std::string csv;
};

void cmd_select(const SelectOpts& o) {
    check_alpha(o.alpha);
    const json saved = read_json_file(o.report, "report");
    hierfdr::MethodFit fit;
    try {
        fit.method = hierfdr::parse_method(saved.at("method").get<std::string>());
        for (const auto& t : saved.at("tests")) {
            if (hierfdr::uses_posterior(fit.method))
                fit.posterior.push_back(t.at("w").get<double>());
            else
                fit.pvalues.push_back(t.at("p").get<double>());
        }
        if (saved.contains("storey_tuning")) fit.storey_tuning = saved.at("storey_tuning").get<double>();
    } catch (const json::exception& e) {
        throw CliError("data", "report '" + o.report + "' is malformed: " + e.what());
    } catch (const std::invalid_argument& e) {
        throw CliError("data", "report '" + o.report + "': " + e.what());
    }
    std::ostringstream csv;
    json rep = decision_report(fit.method, fit, o.alpha, &csv);
    write_json(o.out, rep);
    write_text(o.csv.empty() ? default_csv_path(o.out) : o.csv, csv.str());
}

// ---- benchmark ----

struct BenchOpts {
    std::string config;
    std::string out_dir;
    std::optional<std::size_t> trials;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
};

void cmd_benchmark(const BenchOpts& o) {
    const json j = read_json_file(o.config, "config");
    hierfdr::BenchmarkConfig cfg;
    try {
        cfg = hierfdr::benchmark_config_from_json(j);
        if (o.trials) cfg.trials = *o.trials;
        if (o.seed) cfg.seed = *o.seed;
        if (o.threads) cfg.threads = *o.threads;
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw CliError("config", e.what());
    }
    std::error_code ec;
    std::filesystem::create_directories(o.out_dir, ec);
    if (ec) throw CliError("io", "cannot create output directory '" + o.out_dir + "'");

    const auto report = hierfdr::run_benchmark(cfg);
    const std::filesystem::path dir(o.out_dir);
    write_json((dir / "report.json").string(), hierfdr::to_json(report));
    write_json((dir / "timings.json").string(), hierfdr::timings_json(report));
    hierfdr::emit_plot_data(report, dir);
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
}

int fail(const std::string& category, const std::string& message) {
    std::string flat = message;
    for (char& c : flat)
        if (c == '\n' || c == '\r') c = ' ';
    std::cerr << "error: " << category << ": " << flat << '\n';
    return category == "usage" ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Covariate-adaptive false discovery rate control"};
    app.set_version_flag("--version", std::string("hierfdr ") + hierfdr::kVersion);
    app.require_subcommand(1);

    SimulateOpts sim;
    auto* s = app.add_subcommand("simulate", "Generate a synthetic data set with ground truth");
    s->add_option("--prior", sim.prior, "constant, linear or nonlinear")->capture_default_str();
    s->add_option("--alt", sim.alt, "ws or ps")->capture_default_str();
    s->add_option("--n", sim.n, "number of tests")->capture_default_str()->check(CLI::PositiveNumber);
    s->add_option("--k", sim.k, "test-level covariates")->capture_default_str();
    s->add_option("--q", sim.q, "auxiliary features")->capture_default_str();
    s->add_option("--seed", sim.seed, "random seed")->capture_default_str();
    s->add_option("--ps-sd", sim.ps_sd, "standard deviation of the ps alternative")->capture_default_str();
    s->add_option("--nonlinear-fraction", sim.nonlinear_fraction, "average prior of the nonlinear scenario")
        ->capture_default_str();
    s->add_option("--nonlinear-scale", sim.nonlinear_scale, "scale of the linear form inside the nonlinearity")
        ->capture_default_str();
    s->add_option("--nonlinear-gain", sim.nonlinear_gain, "amplitude of the nonlinear logit")->capture_default_str();
    s->add_option("--out", sim.out, "output CSV")->required();

    FitOpts fit;
    auto* f = app.add_subcommand("fit", "Fit one method and report discoveries");
    f->add_option("--data", fit.data, "canonical CSV data file")->required();
    f->add_option("--method", fit.method, "bh, sbh, twogroups, nn-only, neurt-a or neurt-b")->required();
    f->add_option("--alpha", fit.alpha, "target FDR level")->capture_default_str();
    f->add_option("--seed", fit.seed, "random seed")->capture_default_str();
    f->add_flag("--one-sided", fit.one_sided, "one-sided p/z conversion");
    f->add_option("--null-mu", fit.null_mu, "null mean")->capture_default_str();
    f->add_option("--null-sigma", fit.null_sigma, "null standard deviation")->capture_default_str();
    f->add_option("--lr", fit.train.learning_rate, "learning rate")->capture_default_str();
    f->add_option("--momentum", fit.train.momentum, "momentum")->capture_default_str();
    f->add_option("--l2", fit.train.l2_strength, "weight penalty")->capture_default_str();
    f->add_option("--batch-size", fit.train.batch_size, "mini-batch size")->capture_default_str();
    f->add_option("--epochs", fit.train.max_epochs, "maximum epochs")->capture_default_str();
    f->add_option("--holdout", fit.train.holdout_fraction, "holdout fraction")->capture_default_str();
    f->add_option("--patience", fit.train.patience, "early-stopping patience")->capture_default_str();
    f->add_option("--output-bias", fit.train.output_bias, "initial bias of both network outputs")->capture_default_str();
    f->add_option("--folds", fit.train.folds, "cross-fitting folds (1 = none)")->capture_default_str();
    f->add_option("--grid-nodes", fit.train.lambda_grid_nodes, "lambda grid size")->capture_default_str();
    f->add_option("--pr-sweeps", fit.pr_sweeps, "predictive recursion sweeps")->capture_default_str();
    f->add_option("--storey-tuning", fit.storey_tuning, "Storey tuning parameter")->capture_default_str();
    f->add_option("--out", fit.out, "JSON report")->required();
    f->add_option("--csv", fit.csv, "CSV report (default: JSON path with .csv)");
    f->add_option("--density-in", fit.density_in, "reuse a saved alternative density");
    f->add_option("--save-density", fit.density_out, "write the estimated alternative density");
    f->add_option("--save-model", fit.model_out, "write the trained network");
    f->add_option("--save-regression", fit.regression_out, "write the auxiliary regression");

    SelectOpts sel;
    auto* se = app.add_subcommand("select", "Re-threshold a saved fit report at a new level");
    se->add_option("--report", sel.report, "JSON report written by fit")->required();
    se->add_option("--alpha", sel.alpha, "target FDR level")->required();
    se->add_option("--out", sel.out, "JSON report")->required();
    se->add_option("--csv", sel.csv, "CSV report (default: JSON path with .csv)");

    BenchOpts bench;
    auto* b = app.add_subcommand("benchmark", "Run the simulation benchmark");
    b->add_option("--config", bench.config, "benchmark JSON config")->required();
    b->add_option("--out-dir", bench.out_dir, "output directory")->required();
    b->add_option("--trials", bench.trials, "override trial count");
    b->add_option("--seed", bench.seed, "override base seed");
    b->add_option("--threads", bench.threads, "worker threads (default: $HIERFDR_THREADS or all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        const int code = fail("usage", e.what());
        std::cerr << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
        return code;
    }

    try {
        if (s->parsed()) cmd_simulate(sim);
        else if (f->parsed()) cmd_fit(fit);
        else if (se->parsed()) cmd_select(sel);
        else if (b->parsed()) cmd_benchmark(bench);
    } catch (const CliError& e) {
        return fail(e.category, e.what());
    } catch (const hierfdr::DataFormatError& e) {
        return fail("data", e.what());
    } catch (const std::invalid_argument& e) {
        return fail("invalid-input", e.what());
    } catch (const std::domain_error& e) {
        return fail("numeric", e.what());
    } catch (const std::exception& e) {
        return fail("runtime", e.what());
    }
    return 0;
}
