#include "prbt/pipeline.hpp"

#include <Eigen/Eigenvalues>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace prbt {

const char* to_string(Method m) {
    switch (m) {
        case Method::Auto: return "auto";
        case Method::Rprbt1: return "rprbt1";
        case Method::Rprbt2: return "rprbt2";
    }
    return "?";
}

Method method_from_string(const std::string& s) {
    if (s == "auto") return Method::Auto;
    if (s == "rprbt1") return Method::Rprbt1;
    if (s == "rprbt2") return Method::Rprbt2;
    throw std::invalid_argument("unknown method '" + s + "' (auto, rprbt1, rprbt2)");
}

ShiftSpec parse_shift_spec(const std::string& s) {
    ShiftSpec sp;
    if (s == "sml") {
        sp.strategy = ShiftStrategy::Sml;
    } else if (s.rfind("lrg", 0) == 0) {
        sp.strategy = ShiftStrategy::Lrg;
        if (s.size() > 3) {
            if (s[3] != ':') throw std::invalid_argument("bad shift spec '" + s + "'");
            sp.s0 = parse_double(s.substr(4));
        }
        if (!(sp.s0 < 0)) throw std::invalid_argument("lrg shift center must be negative");
    } else if (s.rfind("file:", 0) == 0) {
        sp.strategy = ShiftStrategy::UserGiven;
        sp.file = s.substr(5);
        if (sp.file.empty()) throw std::invalid_argument("file: shift spec needs a path");
    } else {
        throw std::invalid_argument("bad shift spec '" + s + "' (sml, lrg:<s0>, file:<path>)");
    }
    return sp;
}

namespace {

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const PipelineError&) {
        throw;
    } catch (const NetlistError&) {
        throw;
    } catch (const std::exception& e) {
        throw PipelineError(name, e.what());
    }
}

// X = Q Q^T from a symmetric PSD matrix, tiny and negative eigenvalues dropped
Mat psd_factor(const Mat& X) {
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrized(X));
    const Vec& w = es.eigenvalues();
    double top = w.size() ? w.cwiseAbs().maxCoeff() : 0.0;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = w.size() - 1; i >= 0; --i)
        if (w(i) > 1e-14 * top) keep.push_back(i);
    Mat Q(X.rows(), keep.size());
    for (size_t j = 0; j < keep.size(); ++j) Q.col(j) = es.eigenvectors().col(keep[j]) * std::sqrt(w(keep[j]));
    return Q;
}

template <class Data>
ShiftSet pick_shifts(const ShiftSpec& sp, const Data& d, const RunConfig& cfg) {
    switch (sp.strategy) {
        case ShiftStrategy::Sml: return compute_shifts_sml(d, cfg.num_shifts, cfg.seed);
        case ShiftStrategy::Lrg: return compute_shifts_lrg(d, cfg.num_shifts, sp.s0, cfg.seed);
        case ShiftStrategy::UserGiven: return read_shift_file(sp.file);
    }
    return {};
}

int capped_order(const Mat& Q, const Mat& W, int requested, std::vector<std::string>& warnings) {
    if (requested < 0) return requested;
    HankelSpectrum hs = hankel_spectrum(Q, W);
    if (requested > hs.numerical_rank) {
        warnings.push_back("requested order " + std::to_string(requested) + " capped to numerical rank " +
                           std::to_string(hs.numerical_rank));
        return hs.numerical_rank;
    }
    return requested;
}

}  // namespace

RunResult run_reduction(const DescriptorSystem& physical, double omega0, const RunConfig& cfg) {
    if (!(omega0 > 0)) throw PipelineError("circuit", "frequency scale must be positive");
    const ShiftSpec sp = stage("cli", [&] { return parse_shift_spec(cfg.shifts); });
    RunResult r;
    r.formulation = physical.formulation;
    r.omega0 = omega0;
    const DescriptorSystem sys = frequency_scaled(physical, omega0);

    SvdCanonicalForm f = stage("canon", [&] { return to_svd_canonical(sys, cfg.rank_tol); });
    if (f.rank_ambiguous) r.warnings.push_back("E0 rank decision is close to the tolerance");
    r.index = stage("canon", [&] { return detect_index(f, cfg.sing_tol); });
    r.method = cfg.method;
    if (r.method == Method::Auto) r.method = r.index == Index::One ? Method::Rprbt1 : Method::Rprbt2;

    if (r.method == Method::Rprbt1) {
        StateRealization sr = stage("canon", [&] {
            if (r.index == Index::One) {
                r.path = "state-equation";
                return to_state_equation(f, cfg.sing_tol);
            }
            r.path = "projected-state";
            StokesForm st = to_stokes_form(f, cfg.sing_tol);
            return project_to_state(st, spectral_projectors(st));
        });
        if (sr.discarded_asymmetry > 1e-8)
            r.warnings.push_back("state matrix asymmetry " + fmt17(sr.discarded_asymmetry) + " discarded");
        sr = stage("canon", [&] { return eliminate_improper_artifact(sr, cfg.sing_tol); });
        r.eliminated_states = sr.eliminated_states;
        r.has_integrator = sr.has_integrator;
        if (sr.has_integrator) {
            r.int_B = sr.int_B;
            r.int_C = sr.int_C;
            r.warnings.push_back("pure integrator term kept in run metadata only, not in the reduced model");
        }
        ArePrbtData d = stage("riccati", [&] { return prbt_are_data(sr, cfg.eps); });
        r.eps_used = d.eps_used;
        const Mat Ip = sr.sig.matrix();
        Mat Q = stage("riccati", [&]() -> Mat {
            if (cfg.dense_riccati) {
                r.used_dense_riccati = true;
                return psd_factor(dense_riccati_solve(d));
            }
            r.shifts = pick_shifts(sp, d, cfg);
            Mat I = Mat::Identity(d.A.rows(), d.A.cols());
            r.radi = radi(I, d.A, d.B, d.C.transpose(), r.shifts, cfg.tol, cfg.steps);
            return cholesky_from_radi(r.radi);
        });
        r.factor_columns = Q.cols();
        int order = capped_order(Q, Ip, cfg.order, r.warnings);
        r.model = stage("reduce", [&] { return rprbt1(sr, Q, order, &r.trunc); });
    } else {
        r.path = "stokes-projected";
        StokesForm st = stage("canon", [&] { return to_stokes_form(f, cfg.sing_tol); });
        ProjectorPair pp = stage("canon", [&] { return spectral_projectors(st); });
        PolynomialPart poly = stage("canon", [&] {
            try {
                return polynomial_part(st, pp);
            } catch (const std::domain_error&) {
                r.warnings.push_back("A_bar singular, polynomial part taken from the projected coefficients");
                return polynomial_part_from_coefficients(st);
            }
        });
        if (std::max(poly.asymmetry0, poly.asymmetry1) > 1e-8)
            r.warnings.push_back("polynomial part reciprocity defect " +
                                 fmt17(std::max(poly.asymmetry0, poly.asymmetry1)) + " symmetrized away");
        GarePrbtData d = stage("riccati", [&] { return prbt_gare_data(st, pp, poly.M0, cfg.eps); });
        r.eps_used = d.eps_used;
        Mat Q = stage("riccati", [&]() -> Mat {
            if (cfg.dense_riccati) {
                r.used_dense_riccati = true;
                return psd_factor(dense_riccati_solve(d));
            }
            r.shifts = pick_shifts(sp, d, cfg);
            r.radi = radi(d.E, d.A1, d.B, d.Cfac(), r.shifts, cfg.tol, cfg.steps);
            return cholesky_from_radi(r.radi);
        });
        r.factor_columns = Q.cols();
        int order = capped_order(Q, st.Eb0, cfg.order, r.warnings);
        r.model = stage("reduce", [&] { return rprbt2(st, Q, order, poly.M0, poly.M1, &r.trunc); });
    }
    if (!r.used_dense_riccati && !r.radi.converged)
        r.warnings.push_back("RADI stopped at the step limit before reaching the residual tolerance");
    r.model = to_physical_frequency(r.model, omega0);
    return r;
}

RunResult run_reduction(const Netlist& input, const RunConfig& cfg) {
    Netlist nl = cfg.form ? stage("circuit", [&] { return with_formulation(input, *cfg.form); }) : input;
    DescriptorSystem sys = stage("circuit", [&] { return assemble_descriptor(nl); });
    double w0 = cfg.omega0 > 0 ? cfg.omega0 : auto_omega0(nl);
    return run_reduction(sys, w0, cfg);
}

namespace {

nlohmann::json mat_json(const Mat& M) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        a.push_back(row);
    }
    return a;
}

}  // namespace

std::string run_metadata_json(const RunConfig& cfg, const RunResult& r) {
    using nlohmann::json;
    json j;
    j["config"] = {
        {"form", cfg.form ? to_string(*cfg.form) : "netlist"},
        {"method", to_string(cfg.method)},
        {"shifts", cfg.shifts},
        {"num_shifts", cfg.num_shifts},
        {"steps", cfg.steps},
        {"tol", cfg.tol},
        {"order", cfg.order < 0 ? json("auto") : json(cfg.order)},
        {"seed", cfg.seed},
        {"eps", cfg.eps},
        {"omega_min", cfg.omega_min},
        {"omega_max", cfg.omega_max},
        {"points", cfg.points},
        {"omega0", cfg.omega0 > 0 ? json(cfg.omega0) : json("auto")},
        {"dense_riccati", cfg.dense_riccati},
    };
    j["tolerances"] = {
        {"rank_tol", cfg.rank_tol},
        {"sing_tol", cfg.sing_tol},
        {"radi_tol", cfg.tol},
        {"eps_trigger", 1e-12},
        {"hsv_rank_cutoff", 1e-12},
        {"hsv_tie", 1e-12},
        {"auto_order_ratio", 1e-8},
        {"dense_threshold", cfg.dense_threshold},
    };
    j["formulation"] = to_string(r.formulation);
    j["index"] = to_string(r.index);
    j["method"] = to_string(r.method);
    j["path"] = r.path;
    j["omega0"] = r.omega0;
    j["eps_used"] = r.eps_used;
    json sh = json::array();
    for (const cplx& s : r.shifts.values) sh.push_back({s.real(), s.imag()});
    j["shifts"] = {{"strategy", r.used_dense_riccati ? "none" : to_string(r.shifts.strategy)},
                   {"s0", r.shifts.s0},
                   {"arnoldi_steps", r.shifts.arnoldi_steps},
                   {"values", sh},
                   {"units", "normalized frequency"}};
    j["riccati"] = {{"solver", r.used_dense_riccati ? "dense-schur" : "radi"},
                    {"steps", r.radi.residual_history.size()},
                    {"converged", r.used_dense_riccati || r.radi.converged},
                    {"stopping_norm", "frobenius"},
                    {"initial_residual_norm", r.radi.initial_residual_norm},
                    {"residual_history", r.radi.residual_history},
                    {"factor_columns", r.factor_columns}};
    std::vector<double> hsv(r.trunc.spectrum.sigma_abs.data(),
                            r.trunc.spectrum.sigma_abs.data() + r.trunc.spectrum.sigma_abs.size());
    j["hankel"] = hsv;
    j["order"] = {{"requested", r.trunc.requested < 0 ? json("auto") : json(r.trunc.requested)},
                  {"selected", r.trunc.order},
                  {"numerical_rank", r.trunc.rank},
                  {"tie_extended", r.trunc.tie_extended}};
    j["eliminated_states"] = r.eliminated_states;
    if (r.has_integrator)
        j["integrator"] = {{"B", mat_json(r.int_B)}, {"C", mat_json(r.int_C)}};
    else
        j["integrator"] = nullptr;
    j["warnings"] = r.warnings;
    return j.dump(2) + "\n";
}

namespace {

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
    f << text;
    if (!f) throw std::runtime_error("write failed for '" + p.string() + "'");
}

}  // namespace

void write_artifacts(const std::string& dir, const RunConfig& cfg, const RunResult& r,
                     const DescriptorSystem& physical) {
    namespace fs = std::filesystem;
    stage("analyze", [&] {
        fs::path d(dir);
        fs::create_directories(d);
        write_model_file((d / "model.txt").string(), r.model);
        write_text(d / "run.json", run_metadata_json(cfg, r));

        std::ostringstream hs;
        hs << "index,sigma,sign\n";
        const HankelSpectrum& s = r.trunc.spectrum;
        for (Eigen::Index i = 0; i < s.sigma_abs.size(); ++i)
            hs << i + 1 << ',' << fmt17(s.sigma_abs(i)) << ',' << (s.signs(i) < 0 ? -1 : 1) << '\n';
        write_text(d / "hankel.csv", hs.str());

        std::ostringstream rh;
        rh << "step,residual\n";
        for (size_t i = 0; i < r.radi.residual_history.size(); ++i)
            rh << i + 1 << ',' << fmt17(r.radi.residual_history[i]) << '\n';
        write_text(d / "residuals.csv", rh.str());

        std::vector<double> w = log_space(cfg.omega_min, cfg.omega_max, cfg.points);
        FrequencyResponse ex = sweep_descriptor(physical, w, cfg.dense_threshold);
        FrequencyResponse rd = sweep_reduced(r.model, w);
        emit_csv(ex, (d / "sweep_exact.csv").string());
        emit_csv(rd, (d / "sweep_reduced.csv").string());
        emit_csv(w, relative_error(ex, rd), (d / "error.csv").string());
        return 0;
    });
}

std::vector<Check> verify_model(const ReducedModel& m, const DescriptorSystem& physical,
                                const std::vector<double>& omegas, const VerifyThresholds& t,
                                int dense_threshold) {
    if (m.ports() != physical.m())
        throw PipelineError("analyze", "model has " + std::to_string(m.ports()) + " ports, netlist has " +
                                           std::to_string(physical.m()));
    FrequencyResponse ex = sweep_descriptor(physical, omegas, dense_threshold);
    FrequencyResponse rd = sweep_reduced(m, omegas);
    std::vector<Check> out;
    Check rec{"reciprocity", check_reciprocity(rd, m.port_sign), t.reciprocity, false};
    rec.pass = rec.value <= t.reciprocity;
    out.push_back(rec);
    Check pas{"passivity", check_passivity(rd), t.passivity, false};
    pas.pass = pas.value >= t.passivity;
    out.push_back(pas);
    ErrorCurve e = relative_error(ex, rd);
    Check err{"relative_error", max_error_up_to(ex, e, t.error_omega_max), t.error, false};
    err.pass = err.value <= t.error;
    out.push_back(err);
    return out;
}

}  // namespace prbt
