#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "oracles.hpp"
#include "prbt/pipeline.hpp"

using namespace prbt;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

RunConfig quick() {
    RunConfig cfg;
    cfg.num_shifts = 8;
    cfg.steps = 20;
    cfg.points = 40;
    return cfg;
}

}  // namespace

TEST_CASE("two-section example reduces to its full order") {
    RunConfig cfg = quick();
    RunResult r = run_reduction(generate_ladder(2, Topology::SeriesFirst, 1, 1, 1, Formulation::Z), cfg);
    CHECK(r.index == Index::One);
    CHECK(r.method == Method::Rprbt1);
    CHECK(r.path == "state-equation");
    CHECK(r.omega0 == 1.0);
    CHECK(r.model.order() == 4);
    CHECK(r.radi.converged);
    DescriptorSystem sys = assemble_descriptor(generate_ladder(2, Topology::SeriesFirst, 1, 1, 1, Formulation::Z));
    for (cplx s : oracle::sample_points(1, 5)) CHECK(oracle::rel(r.model.eval(s), oracle::transfer(sys, s)) <= 1e-8);
}

TEST_CASE("method choice follows the index") {
    RunConfig cfg = quick();
    RunResult b = run_reduction(generate_ladder(4, Topology::ShuntFirst, 1, 1e-9, 1e-9, Formulation::Z), cfg);
    CHECK(b.index == Index::Two);
    CHECK(b.method == Method::Rprbt2);
    CHECK(b.omega0 == 1e9);
    cfg.method = Method::Rprbt1;
    RunResult p = run_reduction(generate_ladder(4, Topology::ShuntFirst, 1, 1e-9, 1e-9, Formulation::Z), cfg);
    CHECK(p.path == "projected-state");
    cfg.method = Method::Rprbt2;
    RunResult a = run_reduction(generate_ladder(4, Topology::SeriesFirst, 1, 1e-9, 1e-9, Formulation::Z), cfg);
    CHECK(a.path == "stokes-projected");
}

TEST_CASE("the hundred-section ladders have the expected index") {
    SvdCanonicalForm a = to_svd_canonical(
        frequency_scaled(assemble_descriptor(generate_ladder(100, Topology::SeriesFirst, 1, 1e-9, 1e-9, Formulation::Z)), 1e9));
    CHECK(detect_index(a) == Index::One);
    CHECK(a.sig.size() == 200);
    SvdCanonicalForm b = to_svd_canonical(
        frequency_scaled(assemble_descriptor(generate_ladder(100, Topology::ShuntFirst, 1, 1e-9, 1e-9, Formulation::Z)), 1e9));
    CHECK(detect_index(b) == Index::Two);
}

TEST_CASE("shift specifications") {
    ShiftSpec s = parse_shift_spec("sml");
    CHECK(s.strategy == ShiftStrategy::Sml);
    s = parse_shift_spec("lrg");
    CHECK(s.strategy == ShiftStrategy::Lrg);
    CHECK(s.s0 == -1e-5);
    s = parse_shift_spec("lrg:-0.25");
    CHECK(s.s0 == -0.25);
    s = parse_shift_spec("file:some/where.txt");
    CHECK(s.strategy == ShiftStrategy::UserGiven);
    CHECK(s.file == "some/where.txt");
    CHECK_THROWS(parse_shift_spec("lrg:0.5"));
    CHECK_THROWS(parse_shift_spec("big"));
    CHECK_THROWS(parse_shift_spec("file:"));
    CHECK(method_from_string("rprbt2") == Method::Rprbt2);
    CHECK_THROWS(method_from_string("rprbt3"));
}

TEST_CASE("failures name their stage") {
    RunConfig cfg = quick();
    cfg.shifts = "file:/nonexistent/shifts.txt";
    try {
        run_reduction(generate_ladder(3, Topology::SeriesFirst, 1, 1, 1, Formulation::Z), cfg);
        FAIL("expected a failure");
    } catch (const PipelineError& e) {
        CHECK(e.stage() == "riccati");
        CHECK(std::string(e.what()).rfind("riccati: ", 0) == 0);
    }
}

TEST_CASE("order requests beyond the rank are capped with a warning") {
    RunConfig cfg = quick();
    cfg.order = 50;
    RunResult r = run_reduction(generate_ladder(2, Topology::SeriesFirst, 1, 1, 1, Formulation::Z), cfg);
    CHECK(r.model.order() == 4);
    REQUIRE_FALSE(r.warnings.empty());
    CHECK(r.warnings.front().find("rank") != std::string::npos);
}

TEST_CASE("run metadata") {
    RunConfig cfg = quick();
    Netlist nl = generate_ladder(6, Topology::ShuntFirst, 1, 1e-9, 1e-9, Formulation::Z);
    RunResult r = run_reduction(nl, cfg);
    std::string text = run_metadata_json(cfg, r);
    auto j = nlohmann::json::parse(text);
    for (const char* key : {"config", "tolerances", "formulation", "index", "method", "path", "omega0", "eps_used",
                            "shifts", "riccati", "hankel", "order", "eliminated_states", "integrator", "warnings"})
        CHECK_MESSAGE(j.contains(key), key);
    CHECK(j["index"] == "index-2");
    CHECK(j["shifts"]["strategy"] == "sml");
    CHECK(j["shifts"]["values"].size() == r.shifts.values.size());
    CHECK(j["riccati"]["residual_history"].size() == r.radi.residual_history.size());
    CHECK(j["order"]["selected"] == r.model.order());
    CHECK(run_metadata_json(cfg, run_reduction(nl, cfg)) == text);
}

TEST_CASE("artifacts are complete and reproducible") {
    namespace fs = std::filesystem;
    RunConfig cfg = quick();
    Netlist nl = generate_ladder(5, Topology::SeriesFirst, 1, 1e-9, 1e-9, Formulation::Y);
    DescriptorSystem phys = assemble_descriptor(nl);
    const fs::path a = "pipeline_artifacts_a", b = "pipeline_artifacts_b";
    write_artifacts(a.string(), cfg, run_reduction(nl, cfg), phys);
    write_artifacts(b.string(), cfg, run_reduction(nl, cfg), phys);
    for (const char* f : {"model.txt", "run.json", "hankel.csv", "residuals.csv", "sweep_exact.csv",
                          "sweep_reduced.csv", "error.csv"}) {
        CHECK_MESSAGE(fs::exists(a / f), f);
        CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);
    }
    ReducedModel back = read_model_file((a / "model.txt").string());
    CHECK(back.formulation == Formulation::Y);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("model verification") {
    RunConfig cfg = quick();
    Netlist nl = generate_ladder(10, Topology::SeriesFirst, 1, 1e-9, 1e-9, Formulation::Z);
    DescriptorSystem phys = assemble_descriptor(nl);
    RunResult r = run_reduction(nl, cfg);
    auto w = log_space(1.0, 1e12, 60);
    auto checks = verify_model(r.model, phys, w);
    REQUIRE(checks.size() == 3);
    for (const auto& c : checks) CHECK_MESSAGE(c.pass, c.name);

    ReducedModel bad = r.model;
    bad.C1(0, 0) += 0.3;
    bool any_fail = false;
    for (const auto& c : verify_model(bad, phys, w)) any_fail = any_fail || !c.pass;
    CHECK(any_fail);

    CHECK_THROWS_AS(verify_model(r.model, assemble_descriptor(parse_netlist("R1 1 0 1\n.ports I 1 0\n")), w),
                    PipelineError);
}
