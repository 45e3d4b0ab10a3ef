#include "prbt/reduce.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace prbt {

HankelSpectrum hankel_spectrum(const Mat& Q, const Mat& W) {
    HankelSpectrum hs;
    const Eigen::Index c = Q.cols();
    if (c == 0) {
        hs.sigma_abs = Vec(0);
        hs.signs = Vec(0);
        hs.U = Mat(0, 0);
        return hs;
    }
    Mat G = symmetrized(Q.transpose() * W * Q);
    Eigen::SelfAdjointEigenSolver<Mat> es(G);
    const Vec& lam = es.eigenvalues();
    std::vector<Eigen::Index> idx(c);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return std::abs(lam(a)) > std::abs(lam(b)); });
    hs.sigma_abs.resize(c);
    hs.signs.resize(c);
    hs.U.resize(c, c);
    for (Eigen::Index i = 0; i < c; ++i) {
        hs.sigma_abs(i) = std::abs(lam(idx[i]));
        hs.signs(i) = lam(idx[i]) < 0 ? -1.0 : 1.0;
        hs.U.col(i) = es.eigenvectors().col(idx[i]);
    }
    double top = hs.sigma_abs(0);
    while (hs.numerical_rank < c && hs.sigma_abs(hs.numerical_rank) > 1e-12 * top && top > 0) ++hs.numerical_rank;
    return hs;
}

int select_order(const HankelSpectrum& hs, int requested, bool* tie_extended) {
    const int rank = hs.numerical_rank;
    if (tie_extended) *tie_extended = false;
    int k;
    if (requested < 0) {
        k = 0;
        while (k < rank && hs.sigma_abs(k) / hs.sigma_abs(0) > 1e-8) ++k;
    } else {
        if (requested > rank)
            throw std::domain_error("requested order " + std::to_string(requested) + " exceeds the numerical rank " +
                                    std::to_string(rank));
        k = requested;
    }
    if (k > 0) {
        const double s1 = hs.sigma_abs(0);
        while (k < rank && std::abs(hs.sigma_abs(k - 1) - hs.sigma_abs(k)) <= 1e-12 * s1) {
            ++k;
            if (tie_extended) *tie_extended = true;
        }
    }
    return k;
}

CMat ReducedModel::eval(cplx s) const {
    CMat G = M0.cast<cplx>() + s * M1.cast<cplx>();
    if (order() > 0) {
        CMat P = s * Es.cast<cplx>() - As.cast<cplx>();
        G += (C1 * S1).cast<cplx>() * P.partialPivLu().solve(B1.cast<cplx>());
    }
    return G;
}

namespace {

struct Balancing {
    Mat U1;
    Vec s1, g;  // signs and |sigma|^-1/2
};

Balancing balance(const Mat& Q, const Mat& W, int order, TruncationInfo* info) {
    HankelSpectrum hs = hankel_spectrum(Q, W);
    bool tie = false;
    int k = select_order(hs, order, &tie);
    Balancing b;
    b.U1 = hs.U.leftCols(k);
    b.s1 = hs.signs.head(k);
    b.g = hs.sigma_abs.head(k).cwiseSqrt().cwiseInverse();
    if (info) {
        info->requested = order;
        info->order = k;
        info->rank = hs.numerical_rank;
        info->tie_extended = tie;
        info->spectrum = std::move(hs);
    }
    return b;
}

}  // namespace

ReducedModel rprbt1(const StateRealization& sr, const Mat& Q, int order, TruncationInfo* info) {
    const Mat Ip = sr.sig.matrix();
    Balancing b = balance(Q, Ip, order, info);
    const Mat S1 = b.s1.asDiagonal();
    Mat Tinv = b.g.asDiagonal() * b.U1.transpose() * Q.transpose();
    Mat T = Ip * Q * b.U1 * (b.s1.cwiseProduct(b.g)).asDiagonal();
    Mat A11 = Tinv * sr.Ahat() * T;

    ReducedModel m;
    m.formulation = sr.formulation;
    m.port_sign = sr.port_sign;
    m.S1 = S1;
    m.Es = S1;
    m.As = symmetrized(A11 * S1);
    m.B1 = Tinv * sr.Bhat;
    m.C1 = sr.Chat * T;
    m.M0 = sr.M0;
    m.M1 = sr.M1;
    return m;
}

ReducedModel rprbt2(const StokesForm& s, const Mat& Q, int order, const Mat& M0, const Mat& M1,
                    TruncationInfo* info) {
    Balancing b = balance(Q, s.Eb0, order, info);
    const Mat S1 = b.s1.asDiagonal();
    Mat Tb = Q * b.U1 * (b.s1.cwiseProduct(b.g)).asDiagonal();
    Mat Wb = b.g.asDiagonal() * b.U1.transpose() * Q.transpose();

    ReducedModel m;
    m.formulation = s.formulation;
    m.port_sign = s.port_sign;
    m.S1 = S1;
    m.Es = symmetrized(Wb * s.Eb0 * Tb * S1);
    m.As = symmetrized(Wb * s.Ab0 * Tb * S1);
    m.B1 = Wb * s.Bb0;
    m.C1 = s.Cb0 * Tb;
    m.M0 = M0;
    m.M1 = M1;
    return m;
}

ReducedModel to_physical_frequency(ReducedModel m, double omega0) {
    m.Es /= omega0;
    m.M1 /= omega0;
    return m;
}

}  // namespace prbt
