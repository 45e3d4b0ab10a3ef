#include "prbt/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace prbt {

Mat symmetrized(const Mat& m) { return 0.5 * (m + m.transpose()); }

double relative_asymmetry(const Mat& m) {
    double n = m.norm();
    if (n == 0.0) return 0.0;
    return (m - m.transpose()).norm() / n;
}

double relative_diff(const Mat& a, const Mat& b) {
    double n = b.norm();
    double d = (a - b).norm();
    return n > 0 ? d / n : d;
}

Congruence ldl_semidefinite(const Mat& S, double rank_tol) {
    if (S.rows() != S.cols()) throw std::invalid_argument("ldl: matrix not square");
    const Eigen::Index n = S.rows();
    double scale = S.cwiseAbs().maxCoeff();
    if (n > 0 && (S - S.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(scale, 1e-300))
        throw std::invalid_argument("ldl: matrix not symmetric");

    Mat W = S;
    Mat V = Mat::Identity(n, n);
    std::vector<char> used(n, 0);
    std::vector<std::pair<int, double>> piv;  // (index, value)
    const double alpha = (1.0 + std::sqrt(17.0)) / 8.0;
    double ref = 0.0;
    double smallest_kept = INFINITY;
    double stop_level = 0.0;

    for (Eigen::Index step = 0; step < n; ++step) {
        double mu0 = -1, mu1 = -1;
        Eigen::Index p = -1, a = -1, b = -1;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (used[i]) continue;
            double v = std::abs(W(i, i));
            if (v > mu0) { mu0 = v; p = i; }
            for (Eigen::Index j = i + 1; j < n; ++j) {
                if (used[j]) continue;
                double o = std::abs(W(i, j));
                if (o > mu1) { mu1 = o; a = i; b = j; }
            }
        }
        if (p < 0) break;
        double lvl = std::max(mu0, mu1);
        ref = std::max(ref, lvl);
        if (lvl <= rank_tol * ref || lvl == 0.0) {
            stop_level = lvl;
            break;
        }
        if (mu1 > 0 && mu0 < alpha * mu1) {
            Eigen::Matrix2d blk;
            blk << W(a, a), W(a, b), W(b, a), W(b, b);
            Eigen::JacobiRotation<double> J;
            J.makeJacobi(blk, 0, 1);
            W.applyOnTheLeft(a, b, J.adjoint());
            W.applyOnTheRight(a, b, J);
            V.applyOnTheRight(a, b, J);
            W(a, b) = W(b, a) = 0.0;
            p = std::abs(W(a, a)) >= std::abs(W(b, b)) ? a : b;
        }
        double d = W(p, p);
        Vec row = W.row(p).transpose();
        row(p) = 0.0;
        V.noalias() -= V.col(p) * (row.transpose() / d);
        Vec col = W.col(p);
        W.noalias() -= col * (col.transpose() / d);
        W.row(p).setZero();
        W.col(p).setZero();
        W(p, p) = d;
        used[p] = 1;
        piv.emplace_back(static_cast<int>(p), d);
        smallest_kept = std::min(smallest_kept, std::abs(d));
    }

    Congruence out;
    std::vector<std::pair<int, double>> pos, neg;
    for (auto& pv : piv) (pv.second > 0 ? pos : neg).push_back(pv);
    auto by_index = [](const auto& x, const auto& y) { return x.first < y.first; };
    std::sort(pos.begin(), pos.end(), by_index);
    std::sort(neg.begin(), neg.end(), by_index);
    std::vector<int> zero;
    for (Eigen::Index i = 0; i < n; ++i)
        if (!used[i]) zero.push_back(static_cast<int>(i));

    out.V.resize(n, n);
    out.d = Vec::Zero(n);
    out.npos = static_cast<int>(pos.size());
    out.nneg = static_cast<int>(neg.size());
    out.rank = out.npos + out.nneg;
    out.pivots.resize(out.rank);
    int c = 0;
    for (auto* grp : {&pos, &neg}) {
        for (auto& [idx, val] : *grp) {
            out.V.col(c) = V.col(idx) / std::sqrt(std::abs(val));
            out.d(c) = val > 0 ? 1.0 : -1.0;
            out.pivots(c) = val;
            out.origin.push_back(idx);
            ++c;
        }
    }
    for (int idx : zero) {
        out.V.col(c++) = V.col(idx);
        out.origin.push_back(idx);
    }
    if (out.rank > 0) {
        double cut = rank_tol * ref;
        out.ambiguous = smallest_kept <= 10.0 * cut || (stop_level > 0 && stop_level >= 0.1 * cut);
    }
    return out;
}

namespace {

// Swap adjacent diagonal entries k, k+1 of an upper triangular T.
void swap_adjacent(CMat& T, CMat& U, Eigen::Index k) {
    const Eigen::Index n = T.rows();
    cplx t11 = T(k, k), t22 = T(k + 1, k + 1);
    cplx f = T(k, k + 1), g = t22 - t11;
    double af = std::abs(f), ag = std::abs(g);
    if (ag == 0.0) return;
    double cs;
    cplx sn;
    if (af == 0.0) {
        cs = 0.0;
        sn = std::conj(g) / ag;
    } else {
        double nrm = std::hypot(af, ag);
        cs = af / nrm;
        sn = (f / af) * std::conj(g) / nrm;
    }
    // rows k, k+1 from column k+2 on
    for (Eigen::Index j = k + 2; j < n; ++j) {
        cplx x = T(k, j), y = T(k + 1, j);
        T(k, j) = cs * x + sn * y;
        T(k + 1, j) = cs * y - std::conj(sn) * x;
    }
    // columns k, k+1 above row k
    for (Eigen::Index i = 0; i < k; ++i) {
        cplx x = T(i, k), y = T(i, k + 1);
        T(i, k) = cs * x + std::conj(sn) * y;
        T(i, k + 1) = cs * y - sn * x;
    }
    T(k, k) = t22;
    T(k + 1, k + 1) = t11;
    for (Eigen::Index i = 0; i < n; ++i) {
        cplx x = U(i, k), y = U(i, k + 1);
        U(i, k) = cs * x + std::conj(sn) * y;
        U(i, k + 1) = cs * y - sn * x;
    }
}

}  // namespace

OrderedSchur ordered_schur(const CMat& M, const std::function<bool(cplx)>& select) {
    OrderedSchur out;
    if (M.rows() == 0) return out;
    Eigen::ComplexSchur<CMat> cs(M);
    if (cs.info() != Eigen::Success) throw std::runtime_error("complex Schur did not converge");
    out.T = cs.matrixT();
    out.U = cs.matrixU();
    const Eigen::Index n = M.rows();
    int ns = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
        if (!select(out.T(k, k))) continue;
        for (Eigen::Index j = k; j > ns; --j) swap_adjacent(out.T, out.U, j - 1);
        ++ns;
    }
    out.nsel = ns;
    return out;
}

Mat orth(const Mat& A, double tol) {
    if (A.cols() == 0 || A.rows() == 0) return Mat(A.rows(), 0);
    Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU);
    const Vec& s = svd.singularValues();
    Eigen::Index r = 0;
    double smax = s.size() ? s(0) : 0.0;
    while (r < s.size() && s(r) > tol * smax) ++r;
    return svd.matrixU().leftCols(r);
}

std::string fmt17(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, 16);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    while (b < e && *b == '+') ++b;
    auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e) throw std::invalid_argument("not a number: '" + s + "'");
    return v;
}

}  // namespace prbt
