#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "prbt/pipeline.hpp"

using namespace prbt;

namespace {

struct SweepFlags {
    double omega_min = 1.0, omega_max = 1e12;
    int points = 200;
};

void add_sweep_flags(CLI::App* c, SweepFlags& s) {
    c->add_option("--omega-min", s.omega_min, "lowest sweep frequency, rad/s")->capture_default_str();
    c->add_option("--omega-max", s.omega_max, "highest sweep frequency, rad/s")->capture_default_str();
    c->add_option("--points", s.points, "log-spaced sweep points")->capture_default_str()->check(CLI::PositiveNumber);
}

Netlist load_netlist(const std::string& path, const std::string& form) {
    Netlist nl = read_netlist_file(path);
    if (!form.empty()) nl = with_formulation(nl, formulation_from_string(form));
    return nl;
}

int parse_order(const std::string& s) {
    if (s == "auto") return -1;
    size_t pos = 0;
    int v = std::stoi(s, &pos);
    if (pos != s.size() || v < 0) throw std::invalid_argument("order must be a nonnegative integer or auto");
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reciprocity- and passivity-preserving reduction of RLC descriptor systems"};
    app.require_subcommand(1);

    // gen
    std::string topo = "A", gR = "1", gL = "1n", gC = "1n", gform = "Z", gout;
    int sections = 2;
    auto* gen = app.add_subcommand("gen", "write a ladder netlist");
    gen->add_option("--topology", topo, "A: R-L series with shunt C, B: shunt C then R-L series")
        ->check(CLI::IsMember({"A", "B"}))
        ->capture_default_str();
    gen->add_option("--sections", sections, "number of ladder sections")->check(CLI::PositiveNumber)->capture_default_str();
    gen->add_option("--R", gR, "resistance")->capture_default_str();
    gen->add_option("--L", gL, "inductance")->capture_default_str();
    gen->add_option("--C", gC, "capacitance")->capture_default_str();
    gen->add_option("--form", gform, "Z, Y or H")->capture_default_str();
    gen->add_option("--out", gout, "output file, stdout when omitted");

    // reduce
    RunConfig cfg;
    std::string rin, rform, rmethod = "auto", rorder = "auto", rout = "out";
    SweepFlags rsw;
    auto* red = app.add_subcommand("reduce", "reduce a netlist and write the model plus run artifacts");
    red->add_option("netlist", rin, "input netlist")->required();
    red->add_option("--form", rform, "override the netlist formulation: Z, Y or H");
    red->add_option("--method", rmethod, "rprbt1, rprbt2 or auto")->capture_default_str();
    red->add_option("--shifts", cfg.shifts, "sml, lrg:<s0> or file:<path>")->capture_default_str();
    red->add_option("--num-shifts", cfg.num_shifts, "shift count")->capture_default_str()->check(CLI::PositiveNumber);
    red->add_option("--steps", cfg.steps, "RADI step limit")->capture_default_str()->check(CLI::PositiveNumber);
    red->add_option("--tol", cfg.tol, "RADI relative residual tolerance")->capture_default_str();
    red->add_option("--order", rorder, "reduced order or auto")->capture_default_str();
    red->add_option("--seed", cfg.seed, "Arnoldi start vector seed")->capture_default_str();
    red->add_option("--eps", cfg.eps, "regularization of M0 + M0^T when singular")->capture_default_str();
    red->add_option("--omega0", cfg.omega0, "frequency scale, 0 for automatic")->capture_default_str();
    red->add_option("--rank-tol", cfg.rank_tol, "rank cut for E0")->capture_default_str();
    red->add_option("--sing-tol", cfg.sing_tol, "singularity cut for A22 and friends")->capture_default_str();
    red->add_option("--dense-threshold", cfg.dense_threshold, "dense solves in the sweep up to this size")
        ->capture_default_str();
    red->add_flag("--dense-riccati", cfg.dense_riccati, "dense Schur Riccati solver instead of RADI");
    red->add_option("--out", rout, "output directory")->capture_default_str();
    add_sweep_flags(red, rsw);

    // verify
    std::string vmodel, vnet, vform;
    SweepFlags vsw;
    VerifyThresholds vt;
    auto* ver = app.add_subcommand("verify", "check a reduced model against its netlist");
    ver->add_option("model", vmodel, "model file")->required();
    ver->add_option("netlist", vnet, "netlist the model came from")->required();
    ver->add_option("--form", vform, "formulation override used at reduction time");
    ver->add_option("--reciprocity-tol", vt.reciprocity)->capture_default_str();
    ver->add_option("--passivity-tol", vt.passivity, "lowest accepted eigenvalue of G + G^*")->capture_default_str();
    ver->add_option("--error-tol", vt.error)->capture_default_str();
    ver->add_option("--error-omega-max", vt.error_omega_max, "relative error checked up to this frequency")
        ->capture_default_str();
    add_sweep_flags(ver, vsw);

    // sweep
    std::string snet, sform, smodel, sout = "sweep";
    SweepFlags ssw;
    int sdense = 64;
    auto* swp = app.add_subcommand("sweep", "frequency response of a netlist, optionally against a model");
    swp->add_option("netlist", snet, "input netlist")->required();
    swp->add_option("--form", sform, "formulation override");
    swp->add_option("--model", smodel, "reduced model to compare");
    swp->add_option("--out", sout, "output directory")->capture_default_str();
    swp->add_option("--dense-threshold", sdense)->capture_default_str();
    add_sweep_flags(swp, ssw);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            Topology t = topo == "A" ? Topology::SeriesFirst : Topology::ShuntFirst;
            Netlist nl = generate_ladder(sections, t, parse_element_value(gR), parse_element_value(gL),
                                         parse_element_value(gC), formulation_from_string(gform));
            std::string text = netlist_to_text(nl);
            if (gout.empty()) {
                std::cout << text;
            } else {
                std::ofstream f(gout, std::ios::binary);
                if (!(f << text)) throw std::runtime_error("cannot write '" + gout + "'");
            }
        } else if (*red) {
            Netlist nl = load_netlist(rin, rform);
            if (!rform.empty()) cfg.form = formulation_from_string(rform);
            cfg.method = method_from_string(rmethod);
            cfg.order = parse_order(rorder);
            cfg.omega_min = rsw.omega_min;
            cfg.omega_max = rsw.omega_max;
            cfg.points = rsw.points;
            RunResult r = run_reduction(nl, cfg);
            write_artifacts(rout, cfg, r, assemble_descriptor(nl));
            std::cout << "index " << to_string(r.index) << ", method " << to_string(r.method) << ", order "
                      << r.model.order() << " (numerical rank " << r.trunc.rank << ")\n";
            if (!r.used_dense_riccati && !r.radi.residual_history.empty())
                std::cout << "RADI residual " << fmt17(r.radi.residual_history.back()) << " after "
                          << r.radi.residual_history.size() << " steps\n";
            for (const auto& w : r.warnings) std::cout << "warning: " << w << '\n';
            std::cout << "artifacts in " << rout << '\n';
        } else if (*ver) {
            ReducedModel m = read_model_file(vmodel);
            DescriptorSystem sys = assemble_descriptor(load_netlist(vnet, vform));
            auto checks = verify_model(m, sys, log_space(vsw.omega_min, vsw.omega_max, vsw.points), vt);
            bool ok = true;
            for (const Check& c : checks) {
                std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " measured " << fmt17(c.value)
                          << " threshold " << fmt17(c.threshold) << '\n';
                ok = ok && c.pass;
            }
            return ok ? 0 : 1;
        } else if (*swp) {
            DescriptorSystem sys = assemble_descriptor(load_netlist(snet, sform));
            auto w = log_space(ssw.omega_min, ssw.omega_max, ssw.points);
            std::filesystem::create_directories(sout);
            FrequencyResponse ex = sweep_descriptor(sys, w, sdense);
            emit_csv(ex, sout + "/sweep_exact.csv");
            size_t bad = 0;
            for (char c : ex.singular) bad += c;
            if (bad) std::cerr << "warning: " << bad << " frequency points hit a singular pencil\n";
            if (!smodel.empty()) {
                ReducedModel m = read_model_file(smodel);
                if (m.ports() != sys.m()) throw std::runtime_error("model and netlist port counts differ");
                FrequencyResponse rd = sweep_reduced(m, w);
                emit_csv(rd, sout + "/sweep_reduced.csv");
                emit_csv(w, relative_error(ex, rd), sout + "/error.csv");
            }
        }
    } catch (const NetlistError& e) {
        std::cerr << "circuit: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
