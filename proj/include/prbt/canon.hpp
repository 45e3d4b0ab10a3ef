#pragma once

#include <string>
#include <vector>

#include "prbt/circuit.hpp"
#include "prbt/linalg.hpp"

namespace prbt {

struct Signature {
    Vec diag;  // (+1.., -1..)
    int r1 = 0, r2 = 0;

    Eigen::Index size() const { return diag.size(); }
    Mat matrix() const { return diag.asDiagonal(); }
    static Signature from_counts(int r1, int r2);
};

struct SvdCanonicalForm {
    Signature sig;
    Mat A11, A12, A21, A22;
    Mat B1, B2, C1, C2;
    Mat V;  // V^T E0 V = diag(I'_r, 0)
    Formulation formulation = Formulation::Z;
    Vec port_sign;
    bool rank_ambiguous = false;
};

enum class Index { One, Two };
const char* to_string(Index i);

struct StateRealization {
    Signature sig;
    Mat As;  // A_hat = I'_r As
    Mat Bhat, Chat, Dhat;
    Mat M0, M1;
    Formulation formulation = Formulation::Z;
    Vec port_sign;
    double discarded_asymmetry = 0.0;
    // pure integrator term C_int * B_int / s kept when it cannot be dropped
    bool has_integrator = false;
    Mat int_B, int_C;
    int eliminated_states = 0;

    Mat Ahat() const { return sig.matrix() * As; }
};

struct StokesForm {
    Signature sig;
    Mat Ab11, Ab12, Ab21;
    Mat Bb1, Bb2, Cb1, Cb2, Db0;
    Mat Eb0, Ab0, Bb0, Cb0;
    Mat W;  // (Ab21 I'_r Ab12)^-1
    int algebraic = 0;  // size of y2
    Formulation formulation = Formulation::Z;
    Vec port_sign;

    Eigen::Index r() const { return sig.size(); }
};

struct ProjectorPair {
    Mat Pl, Pr, Pil, Pir;
};

struct PolynomialPart {
    Mat M0, M1;
    double asymmetry0 = 0.0, asymmetry1 = 0.0;
};

SvdCanonicalForm to_svd_canonical(const DescriptorSystem& sys, double rank_tol = 1e-11);
Index detect_index(const SvdCanonicalForm& f, double sing_tol = 1e-10);
StateRealization to_state_equation(const SvdCanonicalForm& f, double sing_tol = 1e-10);
StateRealization eliminate_improper_artifact(const StateRealization& sr, double sing_tol = 1e-10);
StokesForm to_stokes_form(const SvdCanonicalForm& f, double sing_tol = 1e-10);
ProjectorPair spectral_projectors(const StokesForm& s);
PolynomialPart polynomial_part(const StokesForm& s, const ProjectorPair& p);
// same M0/M1 from the projected-realization coefficients, no A_bar inverse needed
PolynomialPart polynomial_part_from_coefficients(const StokesForm& s);
StateRealization project_to_state(const StokesForm& s, const ProjectorPair& p);

// (I^o M)^T versus I^o M: the reciprocity pattern every polynomial term obeys
Mat reciprocal_symmetrized(const Mat& M, const Vec& port_sign, double* asym = nullptr);

}  // namespace prbt
