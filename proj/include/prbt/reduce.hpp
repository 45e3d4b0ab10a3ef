#pragma once

#include <iosfwd>
#include <string>

#include "prbt/canon.hpp"
#include "prbt/linalg.hpp"

namespace prbt {

struct HankelSpectrum {
    Vec sigma_abs;  // descending
    Vec signs;
    Mat U;          // eigenvectors, same order
    int numerical_rank = 0;
};

// eigenvalues of Q^T W Q as (|lambda|, sign), sorted by |lambda|
HankelSpectrum hankel_spectrum(const Mat& Q, const Mat& W);

struct TruncationInfo {
    int requested = -1;  // -1 is auto
    int order = 0;
    int rank = 0;
    bool tie_extended = false;
    HankelSpectrum spectrum;
};

// requested < 0 picks the smallest k with sigma_{k+1}/sigma_1 <= 1e-8
int select_order(const HankelSpectrum& hs, int requested, bool* tie_extended = nullptr);

// G(s) = C1 S1 (s Es - As)^-1 B1 + M0 + s M1
struct ReducedModel {
    Formulation formulation = Formulation::Z;
    Vec port_sign;
    Mat Es, As, S1, B1, C1, M0, M1;

    Eigen::Index order() const { return As.rows(); }
    Eigen::Index ports() const { return M0.rows(); }
    CMat eval(cplx s) const;
};

ReducedModel rprbt1(const StateRealization& sr, const Mat& Q, int order, TruncationInfo* info = nullptr);
ReducedModel rprbt2(const StokesForm& s, const Mat& Q, int order, const Mat& M0, const Mat& M1,
                    TruncationInfo* info = nullptr);

// undo s = omega0 * s_hat on a model built in normalized frequency
ReducedModel to_physical_frequency(ReducedModel m, double omega0);

void write_model(std::ostream& os, const ReducedModel& m);
void write_model_file(const std::string& path, const ReducedModel& m);
ReducedModel read_model(std::istream& is);
ReducedModel read_model_file(const std::string& path);

}  // namespace prbt
