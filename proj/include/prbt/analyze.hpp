#pragma once

#include <string>
#include <vector>

#include "prbt/circuit.hpp"
#include "prbt/reduce.hpp"

namespace prbt {

struct FrequencyResponse {
    std::vector<double> omegas;  // rad/s, increasing
    std::vector<CMat> values;
    std::vector<char> singular;  // pencil singular at this point, value is NaN
};

std::vector<double> log_space(double lo, double hi, int n);

// Parallel over omega; the _serial variants are the reference the parallel
// versions are tested against.
FrequencyResponse sweep_descriptor(const DescriptorSystem& sys, const std::vector<double>& omegas,
                                   int dense_threshold = 64);
FrequencyResponse sweep_descriptor_serial(const DescriptorSystem& sys, const std::vector<double>& omegas,
                                          int dense_threshold = 64);
FrequencyResponse sweep_reduced(const ReducedModel& m, const std::vector<double>& omegas);
FrequencyResponse sweep_reduced_serial(const ReducedModel& m, const std::vector<double>& omegas);

struct ErrorCurve {
    std::vector<double> values;
    std::vector<char> absolute;  // reference was zero at this point
};

ErrorCurve relative_error(const FrequencyResponse& ref, const FrequencyResponse& red);
double max_error_up_to(const FrequencyResponse& ref, const ErrorCurve& e, double omega_max);
// mean error per decade [10^d, 10^(d+1)), decades without samples skipped
std::vector<std::pair<int, double>> decade_means(const std::vector<double>& omegas, const ErrorCurve& e);

// max over omega of ||P G - (P G)^T||_F / ||G||_F with P = diag(port_sign)
double check_reciprocity(const FrequencyResponse& r, const Vec& port_sign);
// min over omega of lambda_min(G + G^*)
double check_passivity(const FrequencyResponse& r);

void emit_csv(const FrequencyResponse& r, const std::string& path);
void emit_csv(const std::vector<double>& omegas, const ErrorCurve& e, const std::string& path);
std::string response_csv(const FrequencyResponse& r);
FrequencyResponse parse_response_csv(const std::string& text);
FrequencyResponse read_response_csv(const std::string& path);

}  // namespace prbt
