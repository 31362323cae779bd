#include <doctest.h>

#include <cmath>
#include <sstream>

#include "netinf/error.hpp"
#include "netinf/harness.hpp"
#include "netinf/netgen.hpp"

using namespace netinf;

namespace {

DirectedNetwork complement(const DirectedNetwork& net)
{
    DirectedNetwork out(net.size());
    for (std::size_t s = 0; s < net.size(); ++s) {
        for (std::size_t t = 0; t < net.size(); ++t) {
            if (s != t && !net.causes(s, t)) {
                out.set_edge(s, t);
            }
        }
    }
    return out;
}

ExperimentConfig small_pci_config()
{
    ExperimentConfig cfg;
    cfg.model = ModelKind::MassSpring;
    cfg.method = Method::Pci;
    cfg.grid.n = {3, 4};
    cfg.grid.coupling = {0.1, 0.5};
    cfg.trials = 3;
    cfg.master_seed = 42;
    return cfg;
}

ResultRow row(const std::string& n, const std::string& acc, const std::string& status = "ok")
{
    return {{"n", n}, {"method", "pci"}, {"accuracy", acc}, {"status", status}};
}

} // namespace

TEST_CASE("accuracy extremes and relabelling")
{
    const auto truth = erdos_renyi(6, 0.5, 3);
    CHECK(accuracy(truth, truth) == 1.0);
    CHECK(accuracy(truth, complement(truth)) == 0.0);
    CHECK_THROWS_AS(accuracy(truth, DirectedNetwork(5)), ParameterError);

    const std::vector<std::size_t> perm{3, 5, 0, 1, 4, 2};
    const auto guess = erdos_renyi(6, 0.5, 4);
    CHECK(accuracy(truth.permuted(perm), guess.permuted(perm)) == accuracy(truth, guess));

    // empty prediction against ER(0.5): the expected agreement is 1 - p
    double sum = 0.0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        sum += accuracy(erdos_renyi(10, 0.5, seed), DirectedNetwork(10));
    }
    CHECK(sum / 200.0 == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("spectral distance")
{
    const auto k3 = erdos_renyi(3, 1.0, 0);
    // spectra {-1, -1, 2} and {0, 0, 0}
    CHECK(spectral_distance(k3, DirectedNetwork(3)) == doctest::Approx(4.0 / 3.0));
    CHECK(spectral_distance(k3, k3) == 0.0);
    const auto g = erdos_renyi(7, 0.4, 2);
    CHECK(spectral_distance(g, g.permuted({6, 5, 4, 3, 2, 1, 0})) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK_THROWS_AS(spectral_distance(k3, DirectedNetwork(4)), ParameterError);
}

TEST_CASE("enum names round trip")
{
    for (auto m : {ModelKind::MassSpring, ModelKind::Kuramoto}) {
        CHECK(parse_model(to_string(m)) == m);
    }
    for (auto m : {Method::Pci, Method::Gc, Method::Ccm}) {
        CHECK(parse_method(to_string(m)) == m);
    }
    for (auto o : {PerturbOrder::Random, PerturbOrder::Outdegree, PerturbOrder::Outcloseness}) {
        CHECK(parse_perturb_order(to_string(o)) == o);
    }
    for (auto t : {GraphType::ErdosRenyi, GraphType::ErdosRenyiClique, GraphType::BarabasiAlbert}) {
        CHECK(parse_graph_type(to_string(t)) == t);
    }
    CHECK_THROWS_AS(parse_method("lasso"), ParameterError);
}

TEST_CASE("config json round trip and validation")
{
    auto cfg = small_pci_config();
    cfg.gc.order = 3;
    cfg.graph.type = GraphType::ErdosRenyiClique;
    cfg.perturb_order = PerturbOrder::Outcloseness;
    cfg.perturb_count = 2;
    const auto text = config_to_json(cfg);
    CHECK(config_to_json(config_from_json(text)) == text);

    const auto minimal = config_from_json(R"({"model": "kuramoto", "method": "gc", "grid": {"coupling": [1, 5]}})");
    CHECK(minimal.model == ModelKind::Kuramoto);
    CHECK(minimal.method == Method::Gc);
    CHECK(minimal.grid.coupling == std::vector<double>{1, 5});
    CHECK(minimal.trials == 20);
    CHECK_FALSE(minimal.gc.order.has_value());

    CHECK(config_from_json(R"({"gc": {"order": "auto"}})").gc.order == std::nullopt);
    CHECK(config_from_json(R"({"gc": {"order": 4}})").gc.order == std::size_t{4});

    CHECK_THROWS_AS(config_from_json(R"({"modle": "kuramoto"})"), ParameterError);
    CHECK_THROWS_AS(config_from_json(R"({"sim": {"dtt": 0.1}})"), ParameterError);
    CHECK_THROWS_AS(config_from_json(R"({"trials": 0})"), ParameterError);
    CHECK_THROWS_AS(config_from_json(R"({"grid": {"coupling": [1, -2]}})"), ParameterError);
    CHECK_THROWS_AS(config_from_json("{"), ParameterError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ParameterError);
}

TEST_CASE("cells enumerate the grid product")
{
    const auto cells = enumerate_cells(small_pci_config());
    REQUIRE(cells.size() == 4);
    CHECK(cells[0].n == 3);
    CHECK(cells[0].coupling == 0.1);
    CHECK(cells[1].coupling == 0.5);
    CHECK(cells[2].n == 4);
    CHECK(cells[3].force == 50.0);
    CHECK(cells[3].endtime == 0.0);

    ExperimentConfig bare;
    bare.graph.n = 7;
    bare.coupling = 2.5;
    const auto one = enumerate_cells(bare);
    REQUIRE(one.size() == 1);
    CHECK(one[0].n == 7);
    CHECK(one[0].coupling == 2.5);
}

TEST_CASE("seeds")
{
    const Cell a{5, 1.0, 50.0, 0.0};
    const Cell b{5, 1.0, 50.0, 4.5};
    CHECK(trial_seed(1, a, 0) == trial_seed(1, a, 0));
    CHECK(trial_seed(1, a, 0) != trial_seed(1, a, 1));
    CHECK(trial_seed(1, a, 0) != trial_seed(2, a, 0));
    CHECK(trial_seed(1, a, 0) != trial_seed(1, b, 0));
    CHECK(mix_seed(3, 4) != mix_seed(4, 3));

    const auto w = draw_frequencies(4, 0.5, 0.0, 9);
    CHECK(w == std::vector<double>(4, 0.5));
    CHECK(draw_frequencies(4, 0.0, 1.0, 9) == draw_frequencies(4, 0.0, 1.0, 9));
    CHECK(default_gc_window(5, 5.0) == doctest::Approx(4.5));
}

TEST_CASE("trials are deterministic and independent")
{
    const auto cfg = small_pci_config();
    const Cell cell{4, 0.1, 50.0, 0.0};
    const auto r1 = run_trial(cfg, cell, 1);
    const auto r2 = run_trial(cfg, cell, 1);
    CHECK(format_record(r1) == format_record(r2));
    CHECK(r1.ok);
    CHECK(r1.accuracy >= 0.0);
    CHECK(r1.accuracy <= 1.0);
    CHECK(r1.perturbations_used == 4);
    CHECK(run_trial(cfg, cell, 2).seed != r1.seed);
    CHECK(r1.wall_secs == 0.0);
}

TEST_CASE("each method produces a scored record")
{
    auto cfg = small_pci_config();
    const Cell ms{3, 1.0, 50.0, 0.0};
    cfg.method = Method::Gc;
    CHECK(run_trial(cfg, ms, 0).ok);
    cfg.method = Method::Ccm;
    CHECK(run_trial(cfg, ms, 0).ok);

    cfg.model = ModelKind::Kuramoto;
    const Cell ku{3, 10.0, 30.0, 0.0};
    for (auto m : {Method::Pci, Method::Gc, Method::Ccm}) {
        cfg.method = m;
        const auto rec = run_trial(cfg, ku, 0);
        CHECK_MESSAGE(rec.ok, rec.status);
    }
}

TEST_CASE("a diverging simulation becomes a failed record")
{
    auto cfg = small_pci_config();
    cfg.sim.spring_coupling = SpringCoupling::Literal;
    cfg.sim.damping = 0.0;
    cfg.graph.p_conn = 1.0;
    cfg.sim.initial_scale = 1.0;
    const Cell cell{4, 1e4, 50.0, 0.0};
    const auto rec = run_trial(cfg, cell, 0);
    CHECK_FALSE(rec.ok);
    CHECK(rec.status.rfind("failed: ", 0) == 0);
    CHECK(rec.status.find(',') == std::string::npos);
    const auto line = format_record(rec);
    CHECK(line.find(",nan,nan,") != std::string::npos);
}

TEST_CASE("sweep output is ordered and thread-count independent")
{
    const auto cfg = small_pci_config();
    std::ostringstream one;
    std::ostringstream many;
    const auto recs = run_sweep(cfg, SweepOptions{1, &one});
    run_sweep(cfg, SweepOptions{4, &many});
    CHECK(recs.size() == 12);
    CHECK(one.str() == many.str());

    std::istringstream in(one.str());
    std::string first;
    std::getline(in, first);
    CHECK(first == kResultsHeader);
    CHECK(one.str().find("# trials=12 failed=0\n") != std::string::npos);

    std::istringstream back(one.str());
    const auto rows = read_results_csv(back);
    REQUIRE(rows.size() == 12);
    CHECK(rows[0] == to_row(recs[0]));
    CHECK(rows[5].at("trial") == "2");
    CHECK(rows[11].at("n") == "4");
}

TEST_CASE("malformed results rows are rejected")
{
    std::istringstream in(std::string(kResultsHeader) + "\nmass-spring,er\n");
    CHECK_THROWS_AS(read_results_csv(in), ParameterError);
}

TEST_CASE("summaries")
{
    const auto single = summarize({row("5", "0.8")}, {"n"});
    REQUIRE(single.rows.size() == 1);
    CHECK(single.rows[0].mean == doctest::Approx(0.8));
    CHECK(single.rows[0].std_dev == 0.0);

    const auto pair = summarize({row("5", "0.4"), row("5", "0.6")}, {"n"});
    CHECK(pair.rows[0].mean == doctest::Approx(0.5));
    CHECK(pair.rows[0].std_dev == doctest::Approx(0.1414).epsilon(1e-3));

    const auto grouped = summarize({row("5", "0.4"), row("10", "0.6"), row("5", "0.5")}, {"n"});
    REQUIRE(grouped.rows.size() == 2);
    CHECK(grouped.rows[0].key == std::vector<std::string>{"5"});
    CHECK(grouped.rows[0].count == 2);
    CHECK(summarize({row("5", "0.4"), row("10", "0.6")}, {"method"}).rows.size() == 1);

    const auto with_fail = summarize({row("5", "0.4"), row("5", "nan", "failed: boom")}, {"n"});
    CHECK(with_fail.rows[0].count == 1);
    CHECK(with_fail.rows[0].failed == 1);
    CHECK(with_fail.rows[0].mean == doctest::Approx(0.4));

    CHECK_THROWS_AS(summarize({}, {"n"}), ParameterError);
    CHECK_THROWS_AS(summarize({row("5", "0.4")}, {"colour"}), ParameterError);

    std::ostringstream out;
    write_summary_csv(out, pair);
    CHECK(out.str().rfind("n,mean,std,count,failed\n5,0.5,", 0) == 0);
}

TEST_CASE("heatmaps")
{
    auto table_of = [](std::vector<ResultRow> rows) { return summarize(rows, {"n", "coupling"}); };
    auto r = [](const char* n, const char* k, const char* acc) {
        return ResultRow{{"n", n}, {"coupling", k}, {"accuracy", acc}, {"status", "ok"}};
    };

    const auto single = render_heatmap(table_of({r("5", "1", "0.75")}), "n", "coupling");
    CHECK(single.find("<svg") != std::string::npos);
    CHECK(single.find(">0.75<") != std::string::npos);

    const auto flat = table_of({r("5", "1", "0.9"), r("10", "1", "0.9"), r("5", "2", "0.9"), r("10", "2", "0.9")});
    const auto svg = render_heatmap(flat, "n", "coupling");
    std::size_t fills = 0;
    std::string colour;
    bool uniform = true;
    for (auto pos = svg.find("fill=\"#", 0); pos != std::string::npos; pos = svg.find("fill=\"#", pos + 1)) {
        const auto c = svg.substr(pos + 6, 7);
        if (c == "#ffffff" || c == "#000000") {
            continue;
        }
        uniform = uniform && (colour.empty() || c == colour);
        colour = c;
        ++fills;
    }
    CHECK(fills == 4);
    CHECK(uniform);
    CHECK(svg == render_heatmap(flat, "n", "coupling"));

    // colour scale endpoints
    CHECK(render_heatmap(table_of({r("5", "1", "0.5")}), "n", "coupling").find("#f7fbff") != std::string::npos);
    CHECK(render_heatmap(table_of({r("5", "1", "1.0")}), "n", "coupling").find("#08306b") != std::string::npos);

    const auto sparse = table_of({r("5", "1", "0.6"), r("10", "2", "0.7")});
    const auto holes = render_heatmap(sparse, "n", "coupling");
    std::size_t hollow = 0;
    for (auto pos = holes.find("fill=\"none\""); pos != std::string::npos; pos = holes.find("fill=\"none\"", pos + 1)) {
        ++hollow;
    }
    CHECK(hollow == 2);
    // numeric axes sort by value, not text
    CHECK(holes.find(">5<") < holes.find(">10<"));

    CHECK_THROWS_AS(render_heatmap(flat, "n", "force"), ParameterError);
}
