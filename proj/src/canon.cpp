#include "prbt/canon.hpp"

#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <stdexcept>

namespace prbt {

Signature Signature::from_counts(int r1, int r2) {
    Signature s;
    s.r1 = r1;
    s.r2 = r2;
    s.diag = Vec::Ones(r1 + r2);
    s.diag.tail(r2).setConstant(-1.0);
    return s;
}

const char* to_string(Index i) { return i == Index::One ? "index-1" : "index-2"; }

Mat reciprocal_symmetrized(const Mat& M, const Vec& port_sign, double* asym) {
    Mat S = port_sign.asDiagonal() * M;
    if (asym) *asym = relative_asymmetry(S);
    return port_sign.asDiagonal() * symmetrized(S);
}

SvdCanonicalForm to_svd_canonical(const DescriptorSystem& sys, double rank_tol) {
    Mat E = sys.E(), A = sys.A();
    Congruence cg = ldl_semidefinite(E, rank_tol);
    const Eigen::Index n = E.rows(), r = cg.rank, q = n - r;
    Mat Ac = symmetrized(cg.V.transpose() * A * cg.V);
    Mat Bc = cg.V.transpose() * sys.B0;
    Mat Cc = sys.C0 * cg.V;

    SvdCanonicalForm f;
    f.sig = Signature::from_counts(cg.npos, cg.nneg);
    f.A11 = Ac.topLeftCorner(r, r);
    f.A12 = Ac.topRightCorner(r, q);
    f.A21 = Ac.bottomLeftCorner(q, r);
    f.A22 = Ac.bottomRightCorner(q, q);
    f.B1 = Bc.topRows(r);
    f.B2 = Bc.bottomRows(q);
    f.C1 = Cc.leftCols(r);
    f.C2 = Cc.rightCols(q);
    f.V = cg.V;
    f.formulation = sys.formulation;
    f.port_sign = sys.port_sign;
    f.rank_ambiguous = cg.ambiguous;
    return f;
}

Index detect_index(const SvdCanonicalForm& f, double sing_tol) {
    if (f.A22.size() == 0) return Index::One;
    Eigen::JacobiSVD<Mat> svd(f.A22);
    const Vec& s = svd.singularValues();
    if (s(0) == 0.0) return Index::Two;
    return s(s.size() - 1) > sing_tol * s(0) ? Index::One : Index::Two;
}

namespace {

// A^-1 X from the symmetric congruence of A (A = V^-T D V^-1, D = +-1)
struct SymSolve {
    Congruence cg;
    Mat solve(const Mat& X) const { return cg.V * (cg.d.asDiagonal() * (cg.V.transpose() * X)); }
};

}  // namespace

StateRealization to_state_equation(const SvdCanonicalForm& f, double sing_tol) {
    const Eigen::Index q = f.A22.rows();
    StateRealization sr;
    sr.sig = f.sig;
    sr.formulation = f.formulation;
    sr.port_sign = f.port_sign;
    const Mat Ip = f.sig.matrix();
    Mat As = f.A11, B = f.B1, C = f.C1;
    Mat D = Mat::Zero(f.C1.rows(), f.B1.cols());
    if (q > 0) {
        SymSolve s{ldl_semidefinite(f.A22, sing_tol)};
        if (s.cg.rank < q) throw std::domain_error("A22 is singular: the system is index-2, use the Stokes path");
        As -= f.A12 * s.solve(f.A21);
        B -= f.A12 * s.solve(f.B2);
        C -= f.C2 * s.solve(f.A21);
        D = -f.C2 * s.solve(f.B2);
    }
    sr.discarded_asymmetry = relative_asymmetry(As);
    sr.As = symmetrized(As);
    sr.Bhat = Ip * B;
    sr.Chat = C;
    sr.Dhat = D;
    sr.M0 = D;
    sr.M1 = Mat::Zero(D.rows(), D.cols());
    return sr;
}

StateRealization eliminate_improper_artifact(const StateRealization& sr, double sing_tol) {
    const Eigen::Index r = sr.As.rows();
    if (r == 0) return sr;
    Congruence cg = ldl_semidefinite(sr.As, sing_tol);
    if (cg.rank == r) return sr;
    const Eigen::Index k = r - cg.rank;
    const Mat Ip = sr.sig.matrix();
    Mat N = cg.V.rightCols(k);

    Mat G = N.transpose() * Ip * N;
    Eigen::JacobiSVD<Mat> gsv(G);
    const Vec& gs = gsv.singularValues();
    if (gs(gs.size() - 1) <= sing_tol * std::max(gs(0), 1e-300)) {
        // zero eigenvalue with a Jordan chain: no clean split, keep the realization
        return sr;
    }
    Mat IN = Ip * N;
    Eigen::HouseholderQR<Mat> qr(IN);
    Mat Qfull = qr.householderQ() * Mat::Identity(r, r);
    Mat Qc = Qfull.rightCols(r - k);
    Mat Gc = symmetrized(Qc.transpose() * Ip * Qc);
    Congruence cc = ldl_semidefinite(Gc, 1e-14);
    if (cc.rank != r - k) return sr;
    Mat T1 = Qc * cc.V;

    StateRealization out = sr;
    out.sig = Signature::from_counts(cc.npos, cc.nneg);
    const Mat I2 = out.sig.matrix();
    Mat As1 = T1.transpose() * sr.As * T1;
    out.discarded_asymmetry = std::max(sr.discarded_asymmetry, relative_asymmetry(As1));
    out.As = symmetrized(As1);
    out.Bhat = I2 * T1.transpose() * Ip * sr.Bhat;
    out.Chat = sr.Chat * T1;
    out.eliminated_states = static_cast<int>(k);

    Mat C2 = sr.Chat * N;
    Mat B2 = G.partialPivLu().solve(N.transpose() * Ip * sr.Bhat);
    double cref = std::max(sr.Chat.norm(), 1e-300), bref = std::max(sr.Bhat.norm(), 1e-300);
    if (C2.norm() <= sing_tol * cref || B2.norm() <= sing_tol * bref) {
        out.has_integrator = false;
    } else {
        out.has_integrator = true;
        out.int_C = C2;
        out.int_B = B2;
    }
    return out;
}

StokesForm to_stokes_form(const SvdCanonicalForm& f, double sing_tol) {
    const Eigen::Index r = f.sig.size(), q = f.A22.rows(), m = f.B1.cols(), p = f.C1.rows();
    StokesForm s;
    s.sig = f.sig;
    s.formulation = f.formulation;
    s.port_sign = f.port_sign;
    const Mat Ip = f.sig.matrix();

    Eigen::Index rb = 0;
    Mat A12f = f.A12, B2f = f.B2, C2f = f.C2;
    Vec dsign;
    if (q > 0) {
        Congruence cg = ldl_semidefinite(f.A22, sing_tol);
        rb = cg.rank;
        A12f = f.A12 * cg.V;
        B2f = cg.V.transpose() * f.B2;
        C2f = f.C2 * cg.V;
        dsign = cg.d.head(rb);
    }
    const Eigen::Index k = q - rb;
    Mat A121 = A12f.leftCols(rb), A122 = A12f.rightCols(k);
    Mat B21 = B2f.topRows(rb), B22 = B2f.bottomRows(k);
    Mat C21 = C2f.leftCols(rb), C22 = C2f.rightCols(k);
    Mat Si = dsign.asDiagonal();  // S^-1 = S for a +-1 pivot block

    s.Ab11 = symmetrized(f.A11 - A121 * Si * A121.transpose());
    s.Ab12 = A122;
    s.Ab21 = A122.transpose();
    s.Bb1 = f.B1 - A121 * Si * B21;
    s.Bb2 = B22;
    s.Cb1 = f.C1 - C21 * Si * A121.transpose();
    s.Cb2 = C22;
    s.Db0 = rb > 0 ? Mat(-C21 * Si * B21) : Mat::Zero(p, m);
    s.algebraic = static_cast<int>(k);

    if (k > 0) {
        Mat G = s.Ab21 * Ip * s.Ab12;
        Eigen::JacobiSVD<Mat> gsv(G);
        const Vec& gs = gsv.singularValues();
        if (gs(0) == 0.0 || gs(gs.size() - 1) <= sing_tol * gs(0))
            throw std::domain_error("not a regular index-2 pencil: A21 I' A12 is singular");
        s.W = symmetrized(G.inverse());
    } else {
        s.W = Mat(0, 0);
    }

    const Eigen::Index nb = r + k;
    s.Eb0 = Mat::Zero(nb, nb);
    s.Eb0.topLeftCorner(r, r) = Ip;
    s.Ab0 = Mat::Zero(nb, nb);
    s.Ab0.topLeftCorner(r, r) = s.Ab11;
    s.Ab0.topRightCorner(r, k) = s.Ab12;
    s.Ab0.bottomLeftCorner(k, r) = s.Ab21;
    s.Bb0.resize(nb, m);
    s.Bb0 << s.Bb1, s.Bb2;
    s.Cb0.resize(p, nb);
    s.Cb0 << s.Cb1, s.Cb2;
    return s;
}

ProjectorPair spectral_projectors(const StokesForm& s) {
    const Eigen::Index r = s.r(), k = s.algebraic;
    const Mat Ip = s.sig.matrix();
    const Mat I = Mat::Identity(r, r);
    ProjectorPair p;
    if (k == 0) {
        p.Pil = I;
        p.Pir = I;
        p.Pl = I;
        p.Pr = I;
        return p;
    }
    p.Pil = I - s.Ab12 * s.W * s.Ab21 * Ip;
    p.Pir = I - Ip * s.Ab12 * s.W * s.Ab21;
    p.Pl = Mat::Zero(r + k, r + k);
    p.Pr = Mat::Zero(r + k, r + k);
    p.Pl.topLeftCorner(r, r) = p.Pil;
    p.Pl.topRightCorner(r, k) = -p.Pil * s.Ab11 * Ip * s.Ab12 * s.W;
    p.Pr.topLeftCorner(r, r) = p.Pir;
    p.Pr.bottomLeftCorner(k, r) = -s.W * s.Ab21 * Ip * s.Ab11 * p.Pir;
    return p;
}

PolynomialPart polynomial_part(const StokesForm& s, const ProjectorPair& p) {
    const Eigen::Index nb = s.Ab0.rows();
    Eigen::FullPivLU<Mat> lu(s.Ab0);
    if (!lu.isInvertible()) throw std::domain_error("polynomial part: A_bar is singular");
    const Mat I = Mat::Identity(nb, nb);
    Mat AiB = lu.solve(s.Bb0);
    Mat M0 = -s.Cb0 * (I - p.Pr) * lu.solve((I - p.Pl) * s.Bb0) + s.Db0;
    Mat M1 = -s.Cb0 * lu.solve((I - p.Pl) * s.Eb0 * (I - p.Pr) * AiB);
    PolynomialPart out;
    out.M0 = reciprocal_symmetrized(M0, s.port_sign, &out.asymmetry0);
    out.M1 = reciprocal_symmetrized(M1, s.port_sign, &out.asymmetry1);
    return out;
}

PolynomialPart polynomial_part_from_coefficients(const StokesForm& s) {
    const Mat Ip = s.sig.matrix();
    Mat M0 = s.Db0, M1 = Mat::Zero(s.Db0.rows(), s.Db0.cols());
    if (s.algebraic > 0) {
        const Mat& W = s.W;
        M0 += -s.Cb1 * Ip * s.Ab12 * W * s.Bb2 - s.Cb2 * W * s.Ab21 * Ip * s.Bb1 +
              s.Cb2 * W * s.Ab21 * Ip * s.Ab11 * Ip * s.Ab12 * W * s.Bb2;
        M1 = -s.Cb2 * W * s.Bb2;
    }
    PolynomialPart out;
    out.M0 = reciprocal_symmetrized(M0, s.port_sign, &out.asymmetry0);
    out.M1 = reciprocal_symmetrized(M1, s.port_sign, &out.asymmetry1);
    return out;
}

StateRealization project_to_state(const StokesForm& s, const ProjectorPair& p) {
    const Mat Ip = s.sig.matrix();
    StateRealization sr;
    sr.sig = s.sig;
    sr.formulation = s.formulation;
    sr.port_sign = s.port_sign;
    Mat As = p.Pil * s.Ab11 * p.Pir;
    sr.discarded_asymmetry = relative_asymmetry(As);
    sr.As = symmetrized(As);
    if (s.algebraic > 0) {
        sr.Chat = (s.Cb1 - s.Cb2 * s.W * s.Ab21 * Ip * s.Ab11) * p.Pir;
        sr.Bhat = Ip * p.Pil * (s.Bb1 - s.Ab11 * Ip * s.Ab12 * s.W * s.Bb2);
    } else {
        sr.Chat = s.Cb1;
        sr.Bhat = Ip * s.Bb1;
    }
    PolynomialPart pp = polynomial_part_from_coefficients(s);
    sr.M0 = pp.M0;
    sr.M1 = pp.M1;
    sr.Dhat = pp.M0;
    return sr;
}

}  // namespace prbt
