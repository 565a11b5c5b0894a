#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "hierfdr/dataset.hpp"
#include "hierfdr/hierfdr.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

class Workdir {
public:
    explicit Workdir(const std::string& name) : dir_(fs::temp_directory_path() / ("hierfdr_cli_" + name)) {
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    ~Workdir() { fs::remove_all(dir_); }

    fs::path operator/(const std::string& f) const { return dir_ / f; }

    Run run(const std::string& args, const std::string& env = "") const {
        const std::string cmd = env + " '" + std::string(HIERFDR_CLI_PATH) + "' " + args + " >'" +
                                (dir_ / "stdout").string() + "' 2>'" + (dir_ / "stderr").string() + "'";
        const int status = std::system(cmd.c_str());
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(dir_ / "stdout"), slurp(dir_ / "stderr")};
    }

    void write(const std::string& f, const std::string& text) const { std::ofstream(dir_ / f) << text; }

private:
    fs::path dir_;
};

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

}  // namespace

TEST_CASE("version", "[cli]") {
    Workdir w("version");
    const auto r = w.run("--version");
    CHECK(r.code == 0);
    CHECK(r.out.find(std::string("hierfdr ") + hierfdr::kVersion) != std::string::npos);
}

TEST_CASE("simulate writes the canonical file", "[cli]") {
    Workdir w("simulate");
    const auto a = w / "a.csv";
    const auto b = w / "b.csv";
    REQUIRE(w.run("simulate --prior linear --alt ws --n 1000 --seed 7 --out " + a.string()).code == 0);
    REQUIRE(w.run("simulate --prior linear --alt ws --n 1000 --seed 7 --out " + b.string()).code == 0);
    CHECK(slurp(a) == slurp(b));

    const auto d = hierfdr::read_data(a.string());
    CHECK(d.size() == 1000);
    CHECK(d.x.cols == 100);
    CHECK(d.aux.cols == 5);
    CHECK(d.h);

    const auto missing = w.run("simulate --prior linear");
    CHECK(missing.code != 0);
    CHECK(missing.err.find("--out") != std::string::npos);
    CHECK(missing.err.find("error: usage:") == 0);

    const auto bad = w.run("simulate --prior cubic --out " + (w / "c.csv").string());
    CHECK(bad.code != 0);
    CHECK(bad.err.find("error: usage:") == 0);
}

TEST_CASE("bh on a p-value file", "[cli]") {
    Workdir w("bh");
    w.write("p.csv", "p\n0.01\n0.02\n0.04\n0.9\n");
    const auto out = w / "bh.json";
    const auto r = w.run("fit --data " + (w / "p.csv").string() + " --method bh --alpha 0.05 --out " + out.string());
    REQUIRE(r.code == 0);
    const auto j = read_json(out);
    CHECK(j.at("m") == 2);
    CHECK(j.at("rejected") == nlohmann::json::array({0, 1}));
    CHECK(slurp(w / "bh.csv").rfind("index,p,rejected\n", 0) == 0);
}

TEST_CASE("fit errors", "[cli]") {
    Workdir w("fiterr");
    const auto data = w / "d.csv";
    REQUIRE(w.run("simulate --n 100 --k 3 --q 0 --out " + data.string()).code == 0);
    const auto r = w.run("fit --data " + data.string() + " --method neurt-a --out " + (w / "o.json").string());
    CHECK(r.code != 0);
    CHECK(r.err.find("auxiliary covariates required") != std::string::npos);
    CHECK(r.err.find("error: data:") == 0);
    CHECK(r.err.find('\n') == r.err.size() - 1);

    const auto a = w.run("fit --data " + data.string() + " --method bh --alpha 1.5 --out " + (w / "o.json").string());
    CHECK(a.code != 0);
    CHECK(a.err.find("alpha") != std::string::npos);

    const auto m = w.run("fit --data " + (w / "none.csv").string() + " --method bh --out " + (w / "o.json").string());
    CHECK(m.code != 0);
    CHECK(m.err.find("error: io:") == 0);
}

TEST_CASE("every method accepts simulated output; select re-thresholds", "[cli]") {
    Workdir w("roundtrip");
    const auto data = w / "d.csv";
    REQUIRE(w.run("simulate --prior nonlinear --alt ps --n 300 --k 6 --q 2 --seed 3 --out " + data.string()).code == 0);
    for (const std::string m : {"bh", "sbh", "twogroups", "nn-only", "neurt-a", "neurt-b"}) {
        const auto out = w / (m + ".json");
        const auto r = w.run("fit --data " + data.string() + " --method " + m +
                             " --alpha 0.1 --epochs 5 --folds 2 --seed 4 --out " + out.string());
        REQUIRE(r.code == 0);
        const auto j = read_json(out);
        CHECK(j.at("method") == m);
        CHECK(j.at("tests").size() == 300);

        const auto sel = w / (m + "_05.json");
        REQUIRE(w.run("select --report " + out.string() + " --alpha 0.05 --out " + sel.string()).code == 0);
        CHECK(read_json(sel).at("m").get<std::size_t>() <= j.at("m").get<std::size_t>());
    }
    const auto a = read_json(w / "neurt-a.json");
    CHECK(a.at("prior").at("adjusted") == true);
    CHECK(a.contains("regression"));
    CHECK(a.at("training").at("best_epoch").size() == 2);
}

TEST_CASE("saved densities and models", "[cli]") {
    Workdir w("saved");
    const auto data = w / "d.csv";
    REQUIRE(w.run("simulate --n 200 --k 4 --q 2 --out " + data.string()).code == 0);
    const auto dens = w / "dens.json";
    const auto model = w / "model.json";
    REQUIRE(w.run("fit --data " + data.string() + " --method nn-only --epochs 3 --folds 2 --save-density " +
                  dens.string() + " --save-model " + model.string() + " --out " + (w / "a.json").string())
                .code == 0);
    const auto dj = read_json(dens);
    CHECK(dj.contains("pi_tau"));
    const auto mj = read_json(model);
    CHECK(mj.at("models").size() == 2);
    CHECK(hierfdr::MlpModel::from_json(mj.at("models")[0]).input_dim() == 4);

    REQUIRE(w.run("fit --data " + data.string() + " --method twogroups --density-in " + dens.string() + " --out " +
                  (w / "b.json").string())
                .code == 0);
    REQUIRE(w.run("fit --data " + data.string() + " --method twogroups --out " + (w / "c.json").string()).code == 0);
    CHECK(read_json(w / "b.json").at("tests") == read_json(w / "c.json").at("tests"));

    const auto bad = w.run("fit --data " + data.string() + " --method bh --save-model " + model.string() + " --out " +
                           (w / "d.json").string());
    CHECK(bad.code != 0);
}

TEST_CASE("benchmark command", "[cli]") {
    Workdir w("bench");
    w.write("cfg.json", R"({
        "methods": ["bh", "sbh", "twogroups"],
        "scenarios": [
            {"prior": "constant", "alt": "ws", "n": 200, "k": 2, "q": 1},
            {"prior": "constant", "alt": "ps", "n": 200, "k": 2, "q": 1},
            {"prior": "linear", "alt": "ws", "n": 200, "k": 2, "q": 1},
            {"prior": "linear", "alt": "ps", "n": 200, "k": 2, "q": 1},
            {"prior": "nonlinear", "alt": "ws", "n": 200, "k": 2, "q": 1},
            {"prior": "nonlinear", "alt": "ps", "n": 200, "k": 2, "q": 1}
        ],
        "alphas": [0.05, 0.1, 0.15, 0.2],
        "trials": 2,
        "seed": 5
    })");
    const auto one = w / "one";
    const auto two = w / "two";
    REQUIRE(w.run("benchmark --config " + (w / "cfg.json").string() + " --out-dir " + one.string()).code == 0);
    REQUIRE(w.run("benchmark --config " + (w / "cfg.json").string() + " --out-dir " + two.string(), "HIERFDR_THREADS=2")
                .code == 0);
    CHECK(slurp(one / "report.json") == slurp(two / "report.json"));

    std::size_t csv = 0, svg = 0;
    for (const auto& e : fs::directory_iterator(one)) {
        csv += e.path().extension() == ".csv" ? 1 : 0;
        svg += e.path().extension() == ".svg" ? 1 : 0;
    }
    CHECK(csv == 6);
    CHECK(svg == 12);

    w.write("bad.json", R"({"methods": ["bh", "adafdr"], "scenarios": [{"prior": "linear", "alt": "ws"}], "alphas": [0.1]})");
    const auto bad = w.run("benchmark --config " + (w / "bad.json").string() + " --out-dir " + (w / "three").string());
    CHECK(bad.code != 0);
    CHECK(bad.err.find("error: config:") == 0);
    CHECK(bad.err.find("$.methods[1]") != std::string::npos);
    CHECK_FALSE(fs::exists(w / "three"));

    const auto env = w.run("benchmark --config " + (w / "cfg.json").string() + " --out-dir " + (w / "four").string(),
                           "HIERFDR_THREADS=zero");
    CHECK(env.code != 0);
}
