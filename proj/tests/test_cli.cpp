#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "netinf/dynsim.hpp"
#include "netinf/harness.hpp"
#include "netinf/network.hpp"

using namespace netinf;
namespace fs = std::filesystem;

namespace {

struct Scratch {
    fs::path dir;
    Scratch() : dir(fs::temp_directory_path() / "netinf_cli_test")
    {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
    std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

int run(const std::string& args, const Scratch& s)
{
    const std::string cmd = std::string(NETINF_CLI) + " " + args + " > " + (s / "stdout.txt") + " 2> " +
                            (s / "stderr.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path)
{
    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

TEST_CASE("generate writes a loadable network")
{
    Scratch s;
    REQUIRE(run("--seed 3 --out " + (s / "net.json") + " generate --type er --n 6 --p 0.4", s) == 0);
    const auto net = load_network(s / "net.json");
    CHECK(net.size() == 6);

    REQUIRE(run("--seed 3 generate --type er --n 6 --p 0.4", s) == 0);
    CHECK(network_from_json(slurp(s / "stdout.txt")) == net);
}

TEST_CASE("simulate then infer with gc")
{
    Scratch s;
    REQUIRE(run("--seed 1 --out " + (s / "net.json") + " generate --n 3 --p 0.5", s) == 0);
    std::string trajs;
    for (int r = 0; r < 3; ++r) {
        const auto name = s / ("run" + std::to_string(r) + ".csv");
        REQUIRE(run("--seed " + std::to_string(10 + r) + " --out " + name + " simulate --network " + (s / "net.json") +
                        " --model mass-spring --coupling 1 --end 10 --record-every 10 --noise 0.03",
                    s) == 0);
        trajs += " --trajectory " + name;
    }
    const auto traj = load_trajectory(s / "run0.csv", ModelKind::MassSpring);
    CHECK(traj.nodes() == 3);
    CHECK(traj.samples() == 101);

    REQUIRE(run("--out " + (s / "gc.json") + " infer --method gc" + trajs + " --network " + (s / "net.json"), s) == 0);
    CHECK(load_network(s / "gc.json").size() == 3);
    const auto stats = slurp(s / "gc.stats.csv");
    CHECK(stats.rfind("source,target,F,p,significant\n", 0) == 0);
    CHECK(slurp(s / "stderr.txt").find("accuracy") != std::string::npos);
}

TEST_CASE("infer with pci writes the probability matrix")
{
    Scratch s;
    REQUIRE(run("--seed 2 --out " + (s / "net.json") + " generate --n 4 --p 0.5", s) == 0);
    REQUIRE(run("--out " + (s / "pci.json") + " infer --method pci --model mass-spring --coupling 0.1 --network " +
                    (s / "net.json"),
                s) == 0);
    CHECK(load_network(s / "pci.json").size() == 4);
    const auto probs = slurp(s / "pci.probs.csv");
    CHECK(probs.find("nan") != std::string::npos);
    CHECK(std::count(probs.begin(), probs.end(), '\n') >= 4);
}

TEST_CASE("experiment and report")
{
    Scratch s;
    {
        std::ofstream cfg(s / "cfg.json");
        cfg << R"({"model": "mass-spring", "method": "pci", "graph": {"n": 3},
                  "grid": {"n": [3, 4], "coupling": [0.1, 1]}, "trials": 2})";
    }
    REQUIRE(run("--threads 2 --out " + (s / "results.csv") + " experiment --config " + (s / "cfg.json"), s) == 0);
    const auto results = slurp(s / "results.csv");
    CHECK(results.rfind(kResultsHeader, 0) == 0);
    CHECK(results.find("# trials=8 failed=0") != std::string::npos);

    REQUIRE(run("--threads 1 --out " + (s / "again.csv") + " experiment --config " + (s / "cfg.json"), s) == 0);
    CHECK(slurp(s / "again.csv") == results);

    REQUIRE(run("--out " + (s / "report") + " report --results " + (s / "results.csv") + " --x n --y coupling", s) == 0);
    CHECK(fs::exists(s / "report/pci_mass-spring_summary.csv"));
    CHECK(slurp(s / "report/pci_mass-spring_heatmap.svg").find("<svg") != std::string::npos);
}

TEST_CASE("errors exit nonzero with a message")
{
    Scratch s;
    CHECK(run("generate --n 0", s) == 1);
    CHECK(slurp(s / "stderr.txt").find("error:") != std::string::npos);
    CHECK(run("infer --method lasso", s) != 0);
    CHECK(run("simulate --network /nonexistent.json", s) == 1);
    {
        std::ofstream cfg(s / "bad.json");
        cfg << R"({"trails": 3})";
    }
    CHECK(run("experiment --config " + (s / "bad.json"), s) == 1);
    CHECK(slurp(s / "stderr.txt").find("trails") != std::string::npos);
}
