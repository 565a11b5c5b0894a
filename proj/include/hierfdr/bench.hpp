// Experiment matrix: methods x scenarios x alpha levels x trials, with per-cell means and
// normal-approximation 95% intervals, plus CSV/SVG plot data.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "hierfdr/dataset.hpp"
#include "hierfdr/methods.hpp"
#include "hierfdr/simulate.hpp"

namespace hierfdr {

inline constexpr const char* kThreadsEnv = "HIERFDR_THREADS";

struct BenchmarkConfig {
    std::vector<Method> methods;
    std::vector<ScenarioConfig> scenarios;  // per-scenario seeds are replaced by base_seed ^ trial
    std::vector<double> alphas;
    std::size_t trials = 10;
    std::uint64_t seed = 0;
    PipelineConfig pipeline;
    std::size_t threads = 0;  // 0: environment override, else hardware concurrency

    void validate() const {
        if (methods.empty()) throw std::invalid_argument("benchmark: no methods");
        if (scenarios.empty()) throw std::invalid_argument("benchmark: no scenarios");
        if (alphas.empty()) throw std::invalid_argument("benchmark: no alpha levels");
        if (trials == 0) throw std::invalid_argument("benchmark: trials must be positive");
        for (double a : alphas)
            if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("benchmark: alpha must lie in (0,1)");
        pipeline.train.validate();
        pipeline.pr.validate();
        pipeline.null.validate();
    }
};

struct TrialRow {
    Method method;
    PriorKind prior;
    AltKind alt;
    double alpha;
    std::size_t trial;
    bool failed = false;
    std::string error;
    double fdp = 0.0;
    double power = 0.0;
    std::size_t n_discoveries = 0;
};

struct AggregateRow {
    Method method;
    PriorKind prior;
    AltKind alt;
    double alpha;
    std::string metric;  // "fdp" or "power"
    std::size_t n_trials = 0;
    double mean = 0.0;
    std::optional<double> ci_half;  // 1.96 sd / sqrt(n); absent for a single trial
};

struct TimingRow {
    Method method;
    PriorKind prior;
    AltKind alt;
    std::size_t trial;
    double seconds;
};

struct BenchmarkReport {
    BenchmarkConfig config;
    std::vector<TrialRow> rows;
    std::vector<AggregateRow> aggregates;
    std::vector<TimingRow> timings;
    std::vector<std::string> warnings;
};

/// Thread count: explicit value, else the environment override, else hardware concurrency.
inline std::size_t resolve_threads(std::size_t requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv(kThreadsEnv)) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
        throw std::invalid_argument(std::string(kThreadsEnv) + " must be a positive integer");
    }
    return std::max<unsigned>(1, std::thread::hardware_concurrency());
}

/// Mean and 1.96 sd / sqrt(n) (sample sd) of the values; no interval when n < 2.
inline std::pair<double, std::optional<double>> mean_ci(const std::vector<double>& v) {
    if (v.empty()) return {0.0, std::nullopt};
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    if (v.size() < 2) return {mean, std::nullopt};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    return {mean, 1.96 * sd / std::sqrt(static_cast<double>(v.size()))};
}

inline std::string cell_label(Method m, PriorKind p, AltKind a, double alpha) {
    std::ostringstream os;
    os << to_string(m) << " " << to_string(p) << "/" << to_string(a) << " alpha=" << alpha;
    return os.str();
}

/// Fills aggregates and warnings from the trial rows.
inline void aggregate(BenchmarkReport& report) {
    report.aggregates.clear();
    report.warnings.clear();
    const auto& cfg = report.config;
    for (const auto& sc : cfg.scenarios) {
        for (Method m : cfg.methods) {
            for (double alpha : cfg.alphas) {
                std::vector<double> fdp, power;
                std::size_t failed = 0;
                for (const auto& r : report.rows) {
                    if (r.method != m || r.prior != sc.prior || r.alt != sc.alt || r.alpha != alpha) continue;
                    if (r.failed) {
                        ++failed;
                        continue;
                    }
                    fdp.push_back(r.fdp);
                    power.push_back(r.power);
                }
                const std::string label = cell_label(m, sc.prior, sc.alt, alpha);
                if (fdp.empty()) {
                    report.warnings.push_back(label + ": no successful trials; cell omitted");
                    continue;
                }
                if (failed > 0)
                    report.warnings.push_back(label + ": " + std::to_string(failed) + " failed trial(s) excluded");
                for (const auto& [metric, values] : {std::pair{"fdp", &fdp}, std::pair{"power", &power}}) {
                    const auto [mean, half] = mean_ci(*values);
                    report.aggregates.push_back({m, sc.prior, sc.alt, alpha, metric, values->size(), mean, half});
                }
            }
        }
    }
}

inline BenchmarkReport run_benchmark(const BenchmarkConfig& config) {
    config.validate();
    {
        std::set<std::pair<PriorKind, AltKind>> seen;
        for (const auto& sc : config.scenarios)
            if (!seen.insert({sc.prior, sc.alt}).second)
                throw std::invalid_argument("benchmark: duplicate scenario " + sc.name());
    }
    struct TaskResult {
        std::vector<TrialRow> rows;
        std::vector<TimingRow> timings;
    };
    const std::size_t n_tasks = config.scenarios.size() * config.trials;
    std::vector<TaskResult> results(n_tasks);

    auto run_task = [&](std::size_t task) {
        const auto& base = config.scenarios[task / config.trials];
        const std::size_t trial = task % config.trials;
        ScenarioConfig sc = base;
        sc.seed = config.seed ^ static_cast<std::uint64_t>(trial);
        TaskResult& out = results[task];
        std::optional<SyntheticDataset> data;
        std::string data_error;
        try {
            data = generate(sc);
        } catch (const std::exception& e) {
            data_error = std::string("data generation failed: ") + e.what();
        }
        PipelineConfig pc = config.pipeline;
        pc.seed = sc.seed;
        std::optional<Pipeline> pipeline;
        if (data) pipeline.emplace(to_data_file(*data), pc);
        for (Method m : config.methods) {
            std::optional<MethodFit> fit;
            std::string error = data_error;
            const auto t0 = std::chrono::steady_clock::now();
            if (pipeline) {
                try {
                    fit = pipeline->fit(m);
                } catch (const std::exception& e) {
                    error = e.what();
                }
            }
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            out.timings.push_back({m, sc.prior, sc.alt, trial, secs});
            for (double alpha : config.alphas) {
                TrialRow row{m, sc.prior, sc.alt, alpha, trial};
                if (fit) {
                    try {
                        const auto rej = rejections(*fit, alpha);
                        const FdpPower fp = true_fdp_power(rej, data->h);
                        row.fdp = fp.fdp;
                        row.power = fp.power;
                        row.n_discoveries = rej.size();
                    } catch (const std::exception& e) {
                        row.failed = true;
                        row.error = e.what();
                    }
                } else {
                    row.failed = true;
                    row.error = error;
                }
                out.rows.push_back(std::move(row));
            }
        }
    };

    const std::size_t n_threads = std::min(resolve_threads(config.threads), n_tasks);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t t = next++; t < n_tasks; t = next++) run_task(t);
    };
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    }

    BenchmarkReport report;
    report.config = config;
    for (auto& r : results) {
        report.rows.insert(report.rows.end(), r.rows.begin(), r.rows.end());
        report.timings.insert(report.timings.end(), r.timings.begin(), r.timings.end());
    }
    aggregate(report);
    return report;
}

// ---- serialization ----

inline nlohmann::json scenario_json(const ScenarioConfig& s) {
    return {{"prior", to_string(s.prior)}, {"alt", to_string(s.alt)}, {"n", s.n},          {"k", s.k},
            {"q", s.q},                    {"ps_sd", s.ps_sd},       {"nonlinear_fraction", s.nonlinear_fraction},
            {"nonlinear_scale", s.nonlinear_scale}, {"nonlinear_gain", s.nonlinear_gain}};
}

inline nlohmann::json to_json(const BenchmarkConfig& c) {
    nlohmann::json methods = nlohmann::json::array(), scenarios = nlohmann::json::array();
    for (Method m : c.methods) methods.push_back(to_string(m));
    for (const auto& s : c.scenarios) scenarios.push_back(scenario_json(s));
    return {{"methods", methods}, {"scenarios", scenarios}, {"alphas", c.alphas},
            {"trials", c.trials}, {"seed", c.seed},         {"pipeline", to_json(c.pipeline)}};
}

/// Report JSON. Wall times are kept out so identical configurations give identical bytes.
inline nlohmann::json to_json(const BenchmarkReport& r) {
    nlohmann::json rows = nlohmann::json::array(), aggs = nlohmann::json::array();
    for (const auto& t : r.rows) {
        nlohmann::json j = {{"method", to_string(t.method)}, {"scenario", to_string(t.prior)}, {"alt", to_string(t.alt)},
                            {"alpha", t.alpha},             {"trial", t.trial},               {"failed", t.failed}};
        if (t.failed) {
            j["error"] = t.error;
            j["fdp"] = nullptr;
            j["power"] = nullptr;
            j["n_discoveries"] = nullptr;
        } else {
            j["fdp"] = t.fdp;
            j["power"] = t.power;
            j["n_discoveries"] = t.n_discoveries;
        }
        rows.push_back(std::move(j));
    }
    for (const auto& a : r.aggregates) {
        nlohmann::json j = {{"method", to_string(a.method)}, {"scenario", to_string(a.prior)}, {"alt", to_string(a.alt)},
                            {"alpha", a.alpha},             {"metric", a.metric},             {"n_trials", a.n_trials},
                            {"mean", a.mean}};
        if (a.ci_half) {
            j["ci_half_width"] = *a.ci_half;
            j["ci_lo"] = a.mean - *a.ci_half;
            j["ci_hi"] = a.mean + *a.ci_half;
        } else {
            j["ci_half_width"] = nullptr;
            j["ci_lo"] = nullptr;
            j["ci_hi"] = nullptr;
        }
        aggs.push_back(std::move(j));
    }
    return {{"config", to_json(r.config)}, {"trials", rows}, {"aggregates", aggs}, {"warnings", r.warnings}};
}

inline nlohmann::json timings_json(const BenchmarkReport& r) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& t : r.timings)
        out.push_back({{"method", to_string(t.method)}, {"scenario", to_string(t.prior)}, {"alt", to_string(t.alt)},
                       {"trial", t.trial}, {"seconds", t.seconds}});
    return out;
}

/// Parses a benchmark config. Unknown or ill-typed keys raise an error naming the key path.
inline BenchmarkConfig benchmark_config_from_json(const nlohmann::json& j) {
    auto fail = [](const std::string& path, const std::string& what) -> std::invalid_argument {
        return std::invalid_argument("config " + path + ": " + what);
    };
    if (!j.is_object()) throw fail("$", "expected an object");
    static const std::set<std::string> known{"methods", "scenarios", "alphas", "trials", "seed", "threads",
                                             "pipeline"};
    for (const auto& [key, _] : j.items())
        if (!known.contains(key)) throw fail("$." + key, "unknown key");

    BenchmarkConfig c;
    auto get_array = [&](const char* key) -> const nlohmann::json& {
        if (!j.contains(key)) throw fail(std::string("$.") + key, "missing");
        const auto& v = j.at(key);
        if (!v.is_array() || v.empty()) throw fail(std::string("$.") + key, "expected a nonempty array");
        return v;
    };
    auto number = [&](const nlohmann::json& v, const std::string& path) {
        if (!v.is_number()) throw fail(path, "expected a number");
        return v.get<double>();
    };
    auto count = [&](const nlohmann::json& v, const std::string& path) -> std::uint64_t {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
            throw fail(path, "expected a nonnegative integer");
        return v.get<std::uint64_t>();
    };

    const auto& methods = get_array("methods");
    for (std::size_t i = 0; i < methods.size(); ++i) {
        const std::string path = "$.methods[" + std::to_string(i) + "]";
        if (!methods[i].is_string()) throw fail(path, "expected a string");
        try {
            c.methods.push_back(parse_method(methods[i].get<std::string>()));
        } catch (const std::invalid_argument& e) {
            throw fail(path, e.what());
        }
    }

    const auto& scenarios = get_array("scenarios");
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        const std::string path = "$.scenarios[" + std::to_string(i) + "]";
        const auto& s = scenarios[i];
        if (!s.is_object()) throw fail(path, "expected an object");
        ScenarioConfig sc;
        for (const auto& [key, v] : s.items()) {
            const std::string kp = path + "." + key;
            try {
                if (key == "prior") {
                    if (!v.is_string()) throw fail(kp, "expected a string");
                    sc.prior = parse_prior_kind(v.get<std::string>());
                } else if (key == "alt") {
                    if (!v.is_string()) throw fail(kp, "expected a string");
                    sc.alt = parse_alt_kind(v.get<std::string>());
                } else if (key == "n") {
                    sc.n = count(v, kp);
                } else if (key == "k") {
                    sc.k = count(v, kp);
                } else if (key == "q") {
                    sc.q = count(v, kp);
                } else if (key == "ps_sd") {
                    sc.ps_sd = number(v, kp);
                } else if (key == "nonlinear_fraction") {
                    sc.nonlinear_fraction = number(v, kp);
                } else if (key == "nonlinear_scale") {
                    sc.nonlinear_scale = number(v, kp);
                } else if (key == "nonlinear_gain") {
                    sc.nonlinear_gain = number(v, kp);
                } else {
                    throw fail(kp, "unknown key");
                }
            } catch (const std::invalid_argument& e) {
                const std::string msg = e.what();
                if (msg.rfind("config ", 0) == 0) throw;
                throw fail(kp, msg);
            }
        }
        if (!s.contains("prior")) throw fail(path + ".prior", "missing");
        if (!s.contains("alt")) throw fail(path + ".alt", "missing");
        c.scenarios.push_back(sc);
    }

    const auto& alphas = get_array("alphas");
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        const std::string path = "$.alphas[" + std::to_string(i) + "]";
        const double a = number(alphas[i], path);
        if (!(a > 0.0 && a < 1.0)) throw fail(path, "alpha must lie in (0,1)");
        c.alphas.push_back(a);
    }

    if (j.contains("trials")) c.trials = count(j.at("trials"), "$.trials");
    if (j.contains("seed")) c.seed = count(j.at("seed"), "$.seed");
    if (j.contains("threads")) c.threads = count(j.at("threads"), "$.threads");

    if (j.contains("pipeline")) {
        const auto& p = j.at("pipeline");
        if (!p.is_object()) throw fail("$.pipeline", "expected an object");
        auto& t = c.pipeline.train;
        for (const auto& [key, v] : p.items()) {
            const std::string kp = "$.pipeline." + key;
            if (key == "learning_rate") t.learning_rate = number(v, kp);
            else if (key == "momentum") t.momentum = number(v, kp);
            else if (key == "l2_strength") t.l2_strength = number(v, kp);
            else if (key == "batch_size") t.batch_size = count(v, kp);
            else if (key == "max_epochs") t.max_epochs = count(v, kp);
            else if (key == "holdout_fraction") t.holdout_fraction = number(v, kp);
            else if (key == "patience") t.patience = count(v, kp);
            else if (key == "lambda_grid_nodes") t.lambda_grid_nodes = count(v, kp);
            else if (key == "clip_norm") t.clip_norm = number(v, kp);
            else if (key == "output_bias") t.output_bias = number(v, kp);
            else if (key == "folds") t.folds = count(v, kp);
            else if (key == "hidden") {
                if (!v.is_array()) throw fail(kp, "expected an array");
                t.hidden.clear();
                for (std::size_t i = 0; i < v.size(); ++i) {
                    const auto width = count(v[i], kp + "[" + std::to_string(i) + "]");
                    if (width == 0) throw fail(kp + "[" + std::to_string(i) + "]", "layer width must be positive");
                    t.hidden.push_back(width);
                }
            } else if (key == "pr_sweeps") c.pipeline.pr.n_sweeps = static_cast<int>(count(v, kp));
            else if (key == "two_sided") {
                if (!v.is_boolean()) throw fail(kp, "expected a boolean");
                c.pipeline.two_sided = v.get<bool>();
            } else if (key == "storey_tuning") c.pipeline.storey_tuning = number(v, kp);
            else throw fail(kp, "unknown key");
        }
    }
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw fail("$", e.what());
    }
    return c;
}

// ---- plot data ----

namespace detail {

inline std::string fmt(double v, int prec = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string render_panel(const std::vector<const AggregateRow*>& rows, const std::vector<Method>& methods,
                                const std::vector<double>& alphas, const std::string& title, const std::string& metric) {
    constexpr double W = 520, H = 380, left = 60, right = 130, top = 40, bottom = 50;
    const double pw = W - left - right, ph = H - top - bottom;
    double x_lo = *std::min_element(alphas.begin(), alphas.end());
    double x_hi = *std::max_element(alphas.begin(), alphas.end());
    if (x_hi - x_lo < 1e-12) {
        x_lo -= 0.05;
        x_hi += 0.05;
    }
    double y_hi = 1.0;
    if (metric == "fdp") {
        y_hi = x_hi;
        for (const auto* r : rows) y_hi = std::max(y_hi, r->mean + r->ci_half.value_or(0.0));
        y_hi = std::min(1.0, std::ceil(y_hi * 1.1 * 20.0) / 20.0);
    }
    auto sx = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * pw; };
    auto sy = [&](double y) { return top + (1.0 - std::clamp(y, 0.0, y_hi) / y_hi) * ph; };
    static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
       << " " << H << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
       << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n"
       << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(title) << "</text>\n"
       << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
       << "\" stroke=\"black\"/>\n"
       << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
       << "\" stroke=\"black\"/>\n";
    for (double a : alphas)
        os << "<text x=\"" << fmt(sx(a)) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">" << fmt(a, 3)
           << "</text>\n";
    for (int t = 0; t <= 4; ++t) {
        const double v = y_hi * t / 4.0;
        os << "<text x=\"" << left - 6 << "\" y=\"" << fmt(sy(v) + 4) << "\" text-anchor=\"end\">" << fmt(v, 3)
           << "</text>\n";
        os << "<line x1=\"" << left << "\" y1=\"" << fmt(sy(v)) << "\" x2=\"" << left + pw << "\" y2=\"" << fmt(sy(v))
           << "\" stroke=\"#dddddd\"/>\n";
    }
    os << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">nominal level</text>\n"
       << "<text x=\"16\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << top + ph / 2
       << ")\">" << (metric == "fdp" ? "FDP" : "power") << "</text>\n";
    if (metric == "fdp")
        os << "<line x1=\"" << fmt(sx(x_lo)) << "\" y1=\"" << fmt(sy(x_lo)) << "\" x2=\"" << fmt(sx(x_hi)) << "\" y2=\""
           << fmt(sy(x_hi)) << "\" stroke=\"black\" stroke-dasharray=\"4 3\"/>\n";

    std::size_t legend_row = 0;
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        std::vector<const AggregateRow*> pts;
        for (const auto* r : rows)
            if (r->method == methods[mi]) pts.push_back(r);
        if (pts.empty()) continue;
        std::sort(pts.begin(), pts.end(), [](auto* l, auto* r) { return l->alpha < r->alpha; });
        const char* color = palette[mi % std::size(palette)];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i)
            os << (i ? " " : "") << fmt(sx(pts[i]->alpha)) << "," << fmt(sy(pts[i]->mean));
        os << "\"/>\n";
        for (const auto* p : pts) {
            if (p->ci_half)
                os << "<line x1=\"" << fmt(sx(p->alpha)) << "\" y1=\"" << fmt(sy(p->mean - *p->ci_half)) << "\" x2=\""
                   << fmt(sx(p->alpha)) << "\" y2=\"" << fmt(sy(p->mean + *p->ci_half)) << "\" stroke=\"" << color
                   << "\"/>\n";
            os << "<circle cx=\"" << fmt(sx(p->alpha)) << "\" cy=\"" << fmt(sy(p->mean)) << "\" r=\"3\" fill=\"" << color
               << "\"/>\n";
        }
        const double ly = top + 10 + 16.0 * static_cast<double>(legend_row++);
        os << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 30 << "\" y2=\"" << ly
           << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
           << "<text x=\"" << left + pw + 35 << "\" y=\"" << ly + 4 << "\">" << xml_escape(to_string(methods[mi]))
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace detail

/// Writes <prior>_<alt>.csv and <prior>_<alt>_<metric>.svg per scenario, and warnings.log.
/// Returns the paths written.
inline std::vector<std::filesystem::path> emit_plot_data(const BenchmarkReport& report, const std::filesystem::path& dir) {
    if (report.rows.empty()) throw std::invalid_argument("emit_plot_data: empty report");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw std::runtime_error("cannot create output directory '" + dir.string() + "'");
    std::vector<std::filesystem::path> written;
    auto open = [&](const std::filesystem::path& p) {
        std::ofstream out(p);
        if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
        written.push_back(p);
        return out;
    };

    const auto& cfg = report.config;
    for (const auto& sc : cfg.scenarios) {
        const std::string stem = to_string(sc.prior) + "_" + to_string(sc.alt);
        std::vector<const AggregateRow*> cell;
        for (const auto& a : report.aggregates)
            if (a.prior == sc.prior && a.alt == sc.alt) cell.push_back(&a);
        {
            auto out = open(dir / (stem + ".csv"));
            out << "method,scenario,alt,alpha,metric,mean,ci_lo,ci_hi\n";
            for (const auto* a : cell) {
                out << to_string(a->method) << ',' << to_string(a->prior) << ',' << to_string(a->alt) << ','
                    << detail::fmt(a->alpha, 17) << ',' << a->metric << ',' << detail::fmt(a->mean, 17) << ',';
                if (a->ci_half)
                    out << detail::fmt(a->mean - *a->ci_half, 17) << ',' << detail::fmt(a->mean + *a->ci_half, 17);
                else
                    out << ',';
                out << '\n';
            }
            if (!out) throw std::runtime_error("error while writing plot CSV");
        }
        for (const std::string metric : {"fdp", "power"}) {
            std::vector<const AggregateRow*> rows;
            for (const auto* a : cell)
                if (a->metric == metric) rows.push_back(a);
            auto out = open(dir / (stem + "_" + metric + ".svg"));
            out << detail::render_panel(rows, cfg.methods, cfg.alphas,
                                        to_string(sc.prior) + " / " + to_string(sc.alt) + " : " + metric, metric);
            if (!out) throw std::runtime_error("error while writing SVG");
        }
    }
    auto log = open(dir / "warnings.log");
    for (const auto& w : report.warnings) log << w << '\n';
    return written;
}

}  // namespace hierfdr
