#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "prbt/canon.hpp"
#include "prbt/linalg.hpp"

namespace prbt {

// A^T X + X A + X B B^T X + C^T C = 0 with A = A_hat - B C
struct ArePrbtData {
    Mat A, B, C, Dfac;
    Signature sig;
    double eps_used = 0.0;
};

// A1^T X E + E^T X A1 + E^T X B B^T X E + Pr^T C^T C Pr = 0
struct GarePrbtData {
    Mat E, A0, A1, B, C, Pr, Pl, Dfac;
    double eps_used = 0.0;

    Mat Cfac() const { return (C * Pr).transpose(); }
    Mat A2() const { return A0 - Pl * B * C; }
};

// D D^T = (M + M^T)^-1; eps*I is added when the sum is singular
Mat prbt_d_factor(const Mat& M0, double eps_reg, double* eps_used = nullptr);
ArePrbtData prbt_are_data(const StateRealization& sr, double eps_reg = 1e-5);
GarePrbtData prbt_gare_data(const StokesForm& s, const ProjectorPair& p, const Mat& M0, double eps_reg = 1e-5);

// Stabilizing solution of A^T X + X A + X G X + Q = 0 from the ordered
// Schur form of [[A, G], [-Q, -A^T]].
Mat dense_are_solve(const Mat& A, const Mat& G, const Mat& Q);
double are_residual(const Mat& A, const Mat& G, const Mat& Q, const Mat& X);

Mat dense_riccati_solve(const ArePrbtData& d);
Mat dense_riccati_dual(const ArePrbtData& d);  // A Y + Y A^T + Y C^T C Y + B B^T = 0
Mat dense_riccati_solve(const GarePrbtData& d);
Mat dense_riccati_dual(const GarePrbtData& d);  // A2 Y E^T + E Y A2^T + E Y C^T C Y E^T + Pl B B^T Pl^T = 0
double gare_residual(const GarePrbtData& d, const Mat& X);

enum class ShiftStrategy { Sml, Lrg, UserGiven };
const char* to_string(ShiftStrategy s);

struct ShiftSet {
    std::vector<cplx> values;
    ShiftStrategy strategy = ShiftStrategy::UserGiven;
    double s0 = 0.0;
    int arnoldi_steps = 0;
};

struct LowRankFactor {
    std::vector<CMat> V;       // one block per step
    std::vector<CMat> Ytilde;  // block diagonal of Y
    CMat K;
    std::vector<double> residual_history;
    std::vector<cplx> shifts_used;
    bool converged = false;
    double initial_residual_norm = 0.0;  // ||C C^T||_F

    CMat Z() const;
    Mat X() const;  // Re(Z Y^-1 Z^*), dense
};

// Solves with (A^T + K B^T + sigma E^T) reuse one LU per distinct shift and
// fold the feedback in through Sherman-Morrison-Woodbury.
LowRankFactor radi(const Mat& E, const Mat& A, const Mat& B, const Mat& Cfac, const ShiftSet& shifts, double tol,
                   int max_steps);

Mat cholesky_from_radi(const LowRankFactor& f);

// Ritz values of a linear operator after k Arnoldi steps with full
// reorthogonalization, started from a seeded random unit vector.
// purify > 0 first applies op that many times to the start vector.
std::vector<cplx> arnoldi_ritz(const std::function<Vec(const Vec&)>& op, Eigen::Index n, int k, std::uint64_t seed,
                               int purify = 0);

// Arnoldi on H^-1 (ARE) or H^-1 calE (GARE); stable reciprocals, smallest first.
ShiftSet compute_shifts_sml(const ArePrbtData& d, int num_shifts, std::uint64_t seed, int arnoldi_steps = 0);
ShiftSet compute_shifts_sml(const GarePrbtData& d, int num_shifts, std::uint64_t seed, int arnoldi_steps = 0);
// Arnoldi on (calE - s0 H)^-1 H mapped by 1/(1/xi + s0); with a singular E
// the equivalent operator (calE - s0 H)^-1 calE is used so the infinite
// eigenvalues drop out
ShiftSet compute_shifts_lrg(const ArePrbtData& d, int num_shifts, double s0, std::uint64_t seed, int arnoldi_steps = 0);
ShiftSet compute_shifts_lrg(const GarePrbtData& d, int num_shifts, double s0, std::uint64_t seed, int arnoldi_steps = 0);

ShiftSet read_shift_file(const std::string& path);

}  // namespace prbt
