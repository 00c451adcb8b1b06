#include "attnflow/config.hpp"
#include "attnflow/experiment.hpp"
#include "attnflow/figures.hpp"
#include "attnflow/io.hpp"
#include "attnflow/matrix_spec.hpp"
#include "attnflow/parallel.hpp"

#include <doctest.h>

#include <filesystem>
#include <cstdlib>
#include <limits>
#include <sstream>

using namespace attnflow;
namespace fs = std::filesystem;

namespace
{
    fs::path scratch(const std::string& name)
    {
        const fs::path p = fs::temp_directory_path() / ("attnflow_unit_" + name);
        fs::remove_all(p);
        return p;
    }

    const char* kSmallConfig = R"toml(
name = "small"
n = 6
d = 3
beta = 4.0
seeds = [3, 1, 2]
kind = "causal"
analyses = ["renyi", "clusters", "collapse"]
delta = 0.5

[matrices]
V = "diag(1,1,0)"

[integrator]
dt = 0.05
t_end = 2.0
record_every = 10
)toml";
}

TEST_CASE("format_double round-trips")
{
    for (const double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, std::numeric_limits<double>::denorm_min()})
    {
        CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
    }
}

TEST_CASE("trajectory csv round-trip")
{
    IntegratorConfig c;
    c.dt = 0.1;
    c.t_end = 1.0;
    c.record_every = 3;
    const Trajectory tr =
        integrate(SystemParams::identity(3, 2.0), ParticleState::from_points(sample_uniform_points(4, 3, 5)), c, 4);
    std::stringstream buf;
    write_trajectory_csv(buf, tr);
    const auto back = read_trajectory_csv(buf);
    REQUIRE(back.size() == tr.snapshots.size());
    for (std::size_t i = 0; i < back.size(); ++i)
    {
        CHECK(back[i].time == tr.snapshots[i].time);
        CHECK(back[i].points == tr.snapshots[i].points);
    }

    std::stringstream bad("t,token,c0,c1\n0,0,1\n");
    CHECK_THROWS_AS(read_trajectory_csv(bad), ParseError);
    std::stringstream headless("0,0,1,0\n");
    CHECK_THROWS_AS(read_trajectory_csv(headless), ParseError);
}

TEST_CASE("sidecar and report serialization")
{
    IntegratorConfig c;
    c.dt = 0.1;
    c.t_end = 0.5;
    const Trajectory tr =
        integrate(SystemParams::identity(2, 8.0, DynamicsKind::Causal2d),
                  ParticleState::from_angles((VectorXd(3) << 0.0, 0.1, 2.0).finished()), c, 11);
    const json side = trajectory_sidecar(tr);
    CHECK(side.at("seed") == 11);
    CHECK(side.at("params").at("beta") == 8.0);
    CHECK(side.at("params").at("kind") == "causal2d");
    CHECK(side.at("integrator").at("dt") == 0.1);

    const RenyiReport report = renyi_report(tr.initial().points, 0.5);
    const json r = renyi_to_json(report);
    CHECK(r.at("delta") == 0.5);
    CHECK(r.at("renyi_indices") == json::array({0, 2}));

    const json cls = classification_to_json(classify_value_matrix(parse_matrix_spec("diag(1,1,0)")));
    CHECK(cls.at("predicted_row") == "OnePointInL");
    CHECK(cls.at("status") == "conjectured");

    const MatrixXd m = parse_matrix_spec("[[1,2],[3,4.5]]");
    CHECK(matrix_from_json(matrix_to_json(m)) == m);
    CHECK_THROWS_AS(matrix_from_json(json::parse("[[1,2],[3]]")), ParseError);
}

TEST_CASE("spectra parsing")
{
    const json one = json::parse(R"({"model":"m","layer":0,"head":1,"d":2,
        "eigenvalues":[[1.5,0],[-0.5,0]],"matrix":[[1.5,0],[0,-0.5]]})");
    const auto heads = parse_spectra(one);
    REQUIRE(heads.size() == 1);
    CHECK(heads[0].model == "m");
    CHECK(heads[0].head == 1);
    CHECK(heads[0].eigenvalues[1] == std::complex<double>(-0.5, 0.0));
    REQUIRE(heads[0].matrix.has_value());
    CHECK(parse_spectra(json::array({one, one})).size() == 2);
    CHECK(parse_spectra(spectrum_to_json(heads[0]))[0].eigenvalues == heads[0].eigenvalues);

    CHECK_THROWS_AS(parse_spectra(json::parse(R"({"model":"m","layer":0,"head":1})")), ParseError);
    CHECK_THROWS_AS(parse_spectra(json::parse(R"({"model":"m","layer":0,"head":1,"d":2,"eigenvalues":[[1,0]]})")),
                    ParseError);
    CHECK_THROWS_AS(parse_spectra(json::parse(R"({"model":"m","layer":0,"head":1,"d":1,"eigenvalues":[1]})")),
                    ParseError);
    CHECK_THROWS_AS(parse_spectra(json::parse("3")), ParseError);
}

TEST_CASE("matrix spec grammar")
{
    CHECK(parse_matrix_spec("identity", 4) == MatrixXd::Identity(4, 4));
    CHECK(parse_matrix_spec("diag(1, -2, 0.5)") == Eigen::Vector3d(1, -2, 0.5).asDiagonal().toDenseMatrix());
    const MatrixXd j = parse_matrix_spec("jordan(2,3)");
    CHECK(j(0, 0) == 2.0);
    CHECK(j(0, 1) == 1.0);
    CHECK(j(1, 0) == 0.0);
    CHECK(j(2, 2) == 2.0);
    const MatrixXd b = parse_matrix_spec("blockdiag(jordan(1,2),diag(0))");
    CHECK(b.rows() == 3);
    CHECK(b(0, 1) == 1.0);
    CHECK(b(2, 2) == 0.0);
    CHECK(parse_matrix_spec("random_gaussian(7)", 3) == random_gaussian_matrix(7, 3));
    CHECK(parse_matrix_spec("random_gaussian(7, 0.5)", 3) == 0.5 * random_gaussian_matrix(7, 3));
    const MatrixXd o = parse_matrix_spec("random_orthogonal(2)", 5);
    CHECK((o.transpose() * o - MatrixXd::Identity(5, 5)).norm() < 1e-12);
    CHECK(random_gaussian_matrix(7, 3) != random_gaussian_matrix(8, 3));

    CHECK_THROWS_AS(parse_matrix_spec("diag(1,2)", 3), ParseError);
    CHECK_THROWS_AS(parse_matrix_spec("identity"), ParseError);
    CHECK_THROWS_AS(parse_matrix_spec("diag(1,"), ParseError);
    CHECK_THROWS_AS(parse_matrix_spec("[[1,2],[3]]"), ParseError);
    CHECK_THROWS_AS(parse_matrix_spec("[[1,2]]", 2), ParseError);
    CHECK_THROWS_AS(parse_matrix_spec("exp(1)"), ParseError);
    CHECK_THROWS_AS(parse_matrix_spec("diag(1) trailing"), ParseError);
}

TEST_CASE("config parsing and validation")
{
    const ExperimentConfig cfg = parse_config(kSmallConfig);
    CHECK(cfg.name == "small");
    CHECK(cfg.n == 6);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{3, 1, 2});
    CHECK(cfg.V == "diag(1,1,0)");
    CHECK(cfg.has(Analysis::Renyi));
    CHECK_FALSE(cfg.has(Analysis::Rates));
    CHECK(cfg.cluster_radius() == doctest::Approx(1.5));
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.system_params().V(2, 2) == 0.0);

    auto field_of = [](const std::string& text) {
        try
        {
            parse_config(text).validate();
        }
        catch (const ConfigError& e)
        {
            return e.field();
        }
        return std::string("none");
    };
    const std::string base = "n = 4\nd = 3\nseeds = [1]\n";
    CHECK(field_of(base) == "none");
    CHECK(field_of("n = 4\nd = 3\nseeds = []\n") == "seeds");
    CHECK(field_of("n = 4\nd = 3\nseeds = [1, 1]\n") == "seeds");
    CHECK(field_of("n = 0\nd = 3\nseeds = [1]\n") == "n");
    CHECK(field_of(base + "beta = -1.0\n") == "beta");
    CHECK(field_of(base + "bogus = 1\n") == "bogus");
    CHECK(field_of(base + "kind = \"sideways\"\n") == "kind");
    CHECK(field_of(base + "analyses = [\"renyi\"]\n") == "analyses.renyi");
    CHECK(field_of(base + "analyses = [\"rates\"]\n") == "analyses.rates");
    CHECK(field_of(base + "analyses = [\"metastability\"]\ndelta = 0.5\nc = 4.0\nepsilon = 0.5\n")
          == "analyses.metastability");
    CHECK(field_of(base + "[integrator]\ndt = 0.0\n") == "integrator");
    CHECK(field_of(base + "[integrator]\nmethod = \"leapfrog\"\n") == "integrator.method");
    CHECK(field_of("n = [\n") == "config");
    CHECK_THROWS_AS(load_config("/nonexistent/attnflow.toml"), ConfigError);

    ExperimentConfig o = cfg;
    apply_overrides(o, {.beta = 9.0, .n = 12, .seed = 5, .t_end = 3.0, .output_dir = "elsewhere"});
    CHECK(o.beta == 9.0);
    CHECK(o.n == 12);
    CHECK(o.seeds == std::vector<std::uint64_t>{5});
    CHECK(o.integrator.t_end == 3.0);
    CHECK(o.output_dir == "elsewhere");
}

TEST_CASE("quantile")
{
    CHECK(quantile({3.0, 1.0, 2.0}, 0.5) == 2.0);
    CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.1) == doctest::Approx(1.3));
    CHECK(quantile({5.0}, 0.9) == 5.0);
    CHECK_THROWS(quantile({}, 0.5));
    CHECK_THROWS(quantile({1.0}, 1.5));
}

TEST_CASE("experiment: results do not depend on the worker count")
{
    ExperimentConfig cfg = parse_config(kSmallConfig);
    const ExperimentResult serial = run_experiment(cfg, {.jobs = 1, .write_files = false});
    const ExperimentResult pooled = run_experiment(cfg, {.jobs = 3, .write_files = false});
    REQUIRE(serial.seeds.size() == 3);
    CHECK(serial.seeds[0].seed == 1);
    CHECK(serial.seeds[2].seed == 3);
    CHECK(serial.aggregate.dump() == pooled.aggregate.dump());
    for (std::size_t i = 0; i < 3; ++i)
    {
        CHECK(serial.seeds[i].analyses.dump() == pooled.seeds[i].analyses.dump());
    }
    CHECK(serial.seeds[0].series.count("consumed_renyi") == 1);
    CHECK(serial.seeds[0].scalars.count("collapse_final") == 1);
}

TEST_CASE("experiment: written outputs are reproducible")
{
    ExperimentConfig cfg = parse_config(kSmallConfig);
    const fs::path a = scratch("run_a");
    const fs::path b = scratch("run_b");
    cfg.output_dir = a.string();
    run_experiment(cfg, {.jobs = 1});
    cfg.output_dir = b.string();
    run_experiment(cfg, {.jobs = 2});
    CHECK(fs::exists(a / "manifest.json"));
    CHECK(fs::exists(a / "aggregate.json"));
    std::size_t compared = 0;
    for (const auto& entry : fs::recursive_directory_iterator(a))
    {
        if (!entry.is_regular_file() || entry.path().filename() == "manifest.json")
        {
            continue;
        }
        const fs::path twin = b / fs::relative(entry.path(), a);
        REQUIRE(fs::exists(twin));
        CHECK(read_text_file(entry.path().string()) == read_text_file(twin.string()));
        ++compared;
    }
    CHECK(compared >= 6);
    const json manifest = json::parse(read_text_file((a / "manifest.json").string()));
    CHECK(manifest.at("seeds") == json::array({1, 2, 3}));
    CHECK(manifest.at("software").at("name") == "attn-flow");
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("experiment: numerical failure names the seed")
{
    ExperimentConfig cfg = parse_config(kSmallConfig);
    cfg.V = "diag(1e300,2e300,1)";
    cfg.integrator.method = Method::Euler;
    cfg.integrator.renormalize_every_step = false;
    cfg.analyses.clear();
    try
    {
        run_experiment(cfg, {.jobs = 1, .write_files = false});
        FAIL("expected a numerical error");
    }
    catch (const NumericalError& e)
    {
        CHECK(std::string(e.what()).find("seed 1") != std::string::npos);
    }
}

TEST_CASE("parallel_for")
{
    for (const int jobs : {1, 2, 7})
    {
        std::vector<int> out(100, 0);
        parallel_for(out.size(), jobs, [&](std::size_t i) { out[i] = static_cast<int>(i * i); });
        for (std::size_t i = 0; i < out.size(); ++i)
        {
            CHECK(out[i] == static_cast<int>(i * i));
        }
        try
        {
            parallel_for(50, jobs, [](std::size_t i) {
                if (i == 13 || i == 40)
                {
                    throw std::runtime_error(std::to_string(i));
                }
            });
            FAIL("expected rethrow");
        }
        catch (const std::runtime_error& e)
        {
            CHECK(std::string(e.what()) == "13");
        }
    }
    parallel_for(0, 4, [](std::size_t) { FAIL("no calls for an empty range"); });
}

TEST_CASE("figure ids")
{
    const auto ids = figure_ids();
    CHECK(ids.size() == 7);
    CHECK(is_figure("fig1c"));
    CHECK(is_figure("fig3"));
    CHECK_FALSE(is_figure("fig4"));
    CHECK_THROWS_AS(make_figure("fig9", {}), std::invalid_argument);
}

TEST_CASE("fig3 with a handful of trials")
{
    FigureOptions opts;
    opts.out_dir = scratch("figs").string();
    opts.trials = 3;
    opts.jobs = 1;
    make_figure("fig3", opts);
    const fs::path dir = fs::path(opts.out_dir) / "fig3";
    CHECK(fs::exists(dir / "consumed.csv"));
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(fs::exists(dir / "fig3.svg"));
    const std::string csv = read_text_file((dir / "consumed.csv").string());
    CHECK(csv.rfind("t,renyi_mean,renyi_q10,renyi_q90,strong_mean,strong_q10,strong_q90\n", 0) == 0);
    const std::string svg = read_text_file((dir / "fig3.svg").string());
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
    fs::remove_all(opts.out_dir);
}
