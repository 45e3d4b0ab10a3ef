#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "prbt/analyze.hpp"
#include "prbt/canon.hpp"
#include "prbt/circuit.hpp"
#include "prbt/reduce.hpp"
#include "prbt/riccati.hpp"

namespace prbt {

enum class Method { Auto, Rprbt1, Rprbt2 };
const char* to_string(Method m);
Method method_from_string(const std::string& s);

// a failure inside one stage, message prefixed with the stage name
class PipelineError : public std::runtime_error {
public:
    PipelineError(const std::string& stage, const std::string& msg)
        : std::runtime_error(stage + ": " + msg), stage_(stage) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

struct ShiftSpec {
    ShiftStrategy strategy = ShiftStrategy::Sml;
    double s0 = -1e-5;
    std::string file;
};
// "sml" | "lrg:<s0>" | "file:<path>"
ShiftSpec parse_shift_spec(const std::string& s);

struct RunConfig {
    std::optional<Formulation> form;
    Method method = Method::Auto;
    std::string shifts = "sml";
    int num_shifts = 15;
    int steps = 30;
    double tol = 1e-12;
    int order = -1;  // auto
    std::uint64_t seed = 1;
    double eps = 1e-5;
    double omega_min = 1.0, omega_max = 1e12;
    int points = 200;
    double omega0 = 0.0;  // 0 picks auto_omega0
    double rank_tol = 1e-11;
    double sing_tol = 1e-10;
    int dense_threshold = 64;
    bool dense_riccati = false;  // Schur solver instead of RADI, small systems only
};

struct RunResult {
    ReducedModel model;  // physical frequency
    Formulation formulation = Formulation::Z;
    Index index = Index::One;
    Method method = Method::Rprbt1;
    std::string path;  // which canonical route fed the Riccati stage
    double omega0 = 1.0;
    double eps_used = 0.0;
    ShiftSet shifts;
    LowRankFactor radi;
    bool used_dense_riccati = false;
    Eigen::Index factor_columns = 0;
    TruncationInfo trunc;
    int eliminated_states = 0;
    bool has_integrator = false;
    Mat int_B, int_C;
    std::vector<std::string> warnings;
};

RunResult run_reduction(const DescriptorSystem& physical, double omega0, const RunConfig& cfg);
RunResult run_reduction(const Netlist& nl, const RunConfig& cfg);

std::string run_metadata_json(const RunConfig& cfg, const RunResult& r);

// model.txt, run.json, hankel.csv, residuals.csv, sweep_exact.csv,
// sweep_reduced.csv, error.csv
void write_artifacts(const std::string& dir, const RunConfig& cfg, const RunResult& r, const DescriptorSystem& physical);

struct Check {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

struct VerifyThresholds {
    double reciprocity = 1e-10;
    double passivity = -1e-8;
    double error = 1e-3;
    double error_omega_max = 1e6;
};

std::vector<Check> verify_model(const ReducedModel& m, const DescriptorSystem& physical,
                                const std::vector<double>& omegas, const VerifyThresholds& t = {},
                                int dense_threshold = 64);

}  // namespace prbt
