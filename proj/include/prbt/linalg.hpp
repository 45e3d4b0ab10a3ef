#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <string>
#include <vector>

namespace prbt {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

Mat symmetrized(const Mat& m);
// ||m - m^T||_F / ||m||_F, zero for the zero matrix
double relative_asymmetry(const Mat& m);
double relative_diff(const Mat& a, const Mat& b);

// Symmetric congruence V^T S V = diag(d) with d = (+1.., -1.., 0..).
// Complete pivoting; a dominant off-diagonal entry is rotated onto the
// diagonal before elimination. Nonzero pivots are listed in order of the
// original row they came from, positive block first.
struct Congruence {
    Mat V;
    Vec d;
    int rank = 0;
    int npos = 0;
    int nneg = 0;
    Vec pivots;            // unscaled pivot values for the kept columns
    std::vector<int> origin;  // original index behind each output column
    bool ambiguous = false;   // a pivot landed within 10x of the cut
};

Congruence ldl_semidefinite(const Mat& S, double rank_tol);

// Complex Schur form M = U T U^H with the eigenvalues accepted by `select`
// moved to the leading block, keeping their relative order.
struct OrderedSchur {
    CMat U;
    CMat T;
    int nsel = 0;
};

OrderedSchur ordered_schur(const CMat& M, const std::function<bool(cplx)>& select);

// Orthonormal basis of range(A), singular values below tol*sigma_max dropped.
Mat orth(const Mat& A, double tol = 1e-10);

// 17 significant digits, scientific, locale independent.
std::string fmt17(double v);
double parse_double(const std::string& s);

}  // namespace prbt
