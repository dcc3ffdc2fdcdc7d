#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "shapekit/dataset.hpp"
#include "shapekit/mc_harness.hpp"

using namespace shapekit;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

Result shapekit_cli(const std::string& args) {
    const std::string cmd = std::string(SHAPEKIT_CLI) + " " + args + " 2>/dev/null";
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, pipe)) > 0;) r.out.append(buf, n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

fs::path temp(const std::string& name) { return fs::temp_directory_path() / ("shapekit_cli_" + name); }

}  // namespace

TEST_CASE("run writes a CSV curve", "[cli]") {
    const auto r = shapekit_cli("run --preset fig2 --sweep 2,10 --trials 20 --seed 1");
    REQUIRE(r.code == 0);
    std::istringstream is(r.out);
    const MseCurve c = parse_csv(is);
    CHECK(c.rows.size() == 8);

    const auto p = temp("fig2.csv");
    REQUIRE(shapekit_cli("run --preset fig2 --sweep 2,10 --trials 20 --seed 1 --workers 1 --out " + p.string()).code ==
            0);
    CHECK(read_csv(p) == c);
    fs::remove(p);
}

TEST_CASE("dump-config round-trips through --config", "[cli]") {
    const auto r = shapekit_cli("run --preset fig5 --trials 30 --seed 9 --param L=100 --dump-config");
    REQUIRE(r.code == 0);
    const ExperimentConfig cfg = config_from_json(r.out);
    CHECK(cfg.trials == 30);
    CHECK(cfg.seed == 9);
    CHECK(*cfg.L == 100);
    const auto p = temp("cfg.json");
    {
        std::ofstream os(p);
        os << r.out;
    }
    const auto again = shapekit_cli("run --config " + p.string() + " --dump-config");
    CHECK(again.out == r.out);
    fs::remove(p);
}

TEST_CASE("exit codes", "[cli]") {
    CHECK(shapekit_cli("--help").code == 0);
    CHECK(shapekit_cli("").code == 2);
    CHECK(shapekit_cli("run --bogus").code == 2);
    CHECK(shapekit_cli("run --preset fig9").code == 2);
    CHECK(shapekit_cli("run --param lambda=0.5 --sweep 0.5").code == 2);
    CHECK(shapekit_cli("run --estimators r:tyler:nope").code == 2);
    CHECK(shapekit_cli("run --trials 5 --max-failure-rate -1").code == 3);
    CHECK(shapekit_cli("estimate --in /nonexistent.cesd").code == 1);
}

TEST_CASE("sample then estimate", "[cli]") {
    const auto p = temp("data.cesd");
    REQUIRE(shapekit_cli("sample --preset fig2 --sweep-value 10 --seed 4 --out " + p.string()).code == 0);
    const Dataset d = read_dataset(p);
    CHECK(d.dim() == 8);
    CHECK(d.size() == 40);

    // the sample matches trial 0 of the corresponding run
    const ExperimentConfig cfg = resolve([] {
        ExperimentConfig c = preset_config(Preset::fig2);
        c.seed = 4;
        return c;
    }());
    const auto idx = std::find(cfg.sweep.begin(), cfg.sweep.end(), 10.0) - cfg.sweep.begin();
    RngStream rng(derive_seed(4, static_cast<std::uint64_t>(idx)), 0);
    CHECK(experiment_dataset(cfg, 10.0, rng) == d);

    for (const std::string est : {"scm", "tyler", "r:tyler:vdw", "r:scm:t5"}) {
        const auto r = shapekit_cli("estimate --in " + p.string() + " --estimator " + est);
        INFO(est);
        REQUIRE(r.code == 0);
        CHECK(r.out.find("\"renormalized\"") != std::string::npos);
        CHECK(r.out.find("\"positive_definite\"") != std::string::npos);
    }
    CHECK(shapekit_cli("estimate --in " + p.string() + " --estimator huber").code == 2);
    fs::remove(p);
}
