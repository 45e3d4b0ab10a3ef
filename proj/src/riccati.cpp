#include "prbt/riccati.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

namespace prbt {

const char* to_string(ShiftStrategy s) {
    switch (s) {
        case ShiftStrategy::Sml: return "sml";
        case ShiftStrategy::Lrg: return "lrg";
        case ShiftStrategy::UserGiven: return "file";
    }
    return "?";
}

Mat prbt_d_factor(const Mat& M0, double eps_reg, double* eps_used) {
    const Eigen::Index m = M0.rows();
    Mat S = M0 + M0.transpose();
    Eigen::SelfAdjointEigenSolver<Mat> es(S);
    double lmin = m ? es.eigenvalues()(0) : 0.0;
    double ref = M0.norm();
    double used = 0.0;
    if (lmin < -1e-12 * std::max(ref, 1e-300) && lmin < 0) {
        std::ostringstream os;
        os << "M0 + M0^T is indefinite (eigenvalue " << lmin << "): transfer matrix is not positive real";
        throw std::domain_error(os.str());
    }
    if (lmin <= 1e-12 * ref) {
        if (eps_reg <= 0.0) throw std::domain_error("M0 + M0^T is singular and no regularization was allowed");
        S += eps_reg * Mat::Identity(m, m);
        used = eps_reg;
    }
    if (eps_used) *eps_used = used;
    Mat Sinv = S.llt().solve(Mat::Identity(m, m));
    Eigen::LLT<Mat> llt(symmetrized(Sinv));
    if (llt.info() != Eigen::Success) throw std::domain_error("regularized M0 + M0^T is not positive definite");
    return llt.matrixL();
}

ArePrbtData prbt_are_data(const StateRealization& sr, double eps_reg) {
    ArePrbtData d;
    d.sig = sr.sig;
    d.Dfac = prbt_d_factor(sr.Dhat, eps_reg, &d.eps_used);
    d.B = sr.Bhat * d.Dfac;
    d.C = d.Dfac.transpose() * sr.Chat;
    d.A = sr.Ahat() - d.B * d.C;
    return d;
}

GarePrbtData prbt_gare_data(const StokesForm& s, const ProjectorPair& p, const Mat& M0, double eps_reg) {
    GarePrbtData d;
    d.Dfac = prbt_d_factor(M0, eps_reg, &d.eps_used);
    d.E = s.Eb0;
    d.A0 = s.Ab0;
    d.B = s.Bb0 * d.Dfac;
    d.C = d.Dfac.transpose() * s.Cb0;
    d.Pl = p.Pl;
    d.Pr = p.Pr;
    d.A1 = s.Ab0 - d.B * d.C * p.Pr;
    return d;
}

Mat dense_are_solve(const Mat& A, const Mat& G, const Mat& Q) {
    const Eigen::Index n = A.rows();
    if (n == 0) return Mat(0, 0);
    Mat H(2 * n, 2 * n);
    H << A, G, -Q, -A.transpose();
    double hn = H.norm();
    OrderedSchur os = ordered_schur(H.cast<cplx>(), [](cplx z) { return z.real() < 0; });
    if (os.nsel != n) {
        std::ostringstream msg;
        msg << "no stabilizing solution: " << os.nsel << " of " << 2 * n << " Hamiltonian eigenvalues are stable";
        throw std::domain_error(msg.str());
    }
    double gap = INFINITY;
    for (Eigen::Index i = 0; i < 2 * n; ++i) gap = std::min(gap, std::abs(os.T(i, i).real()));
    if (gap <= 1e-13 * hn) throw std::domain_error("no stabilizing solution: Hamiltonian eigenvalue on the imaginary axis");
    CMat U1 = os.U.topLeftCorner(n, n), U2 = os.U.bottomLeftCorner(n, n);
    Eigen::JacobiSVD<CMat> sv(U1);
    if (!(sv.singularValues()(n - 1) > 1e-12 * sv.singularValues()(0)))
        throw std::domain_error("no stabilizing solution: stable invariant subspace is not a graph");
    // X U1 = U2
    CMat Xc = U1.transpose().partialPivLu().solve(U2.transpose()).transpose();
    return symmetrized(Xc.real());
}

double are_residual(const Mat& A, const Mat& G, const Mat& Q, const Mat& X) {
    Mat R = A.transpose() * X + X * A + X * G * X + Q;
    double q = Q.norm();
    return q > 0 ? R.norm() / q : R.norm();
}

Mat dense_riccati_solve(const ArePrbtData& d) {
    return dense_are_solve(d.A, d.B * d.B.transpose(), d.C.transpose() * d.C);
}

Mat dense_riccati_dual(const ArePrbtData& d) {
    return dense_are_solve(d.A.transpose(), d.C.transpose() * d.C, d.B * d.B.transpose());
}

namespace {

// Solve the GARE on the deflating subspaces: X = L Xq L^T with range(L) =
// range(Pl^T), restricted pencil L^T E R invertible.
Mat projected_gare(const Mat& E, const Mat& A, const Mat& B, const Mat& C, const Mat& Pl, const Mat& Pr) {
    Mat L = orth(Pl.transpose()), R = orth(Pr);
    if (L.cols() != R.cols()) throw std::domain_error("projector ranks differ");
    Mat Eh = L.transpose() * E * R;
    Eigen::PartialPivLU<Mat> lu(Eh);
    Mat At = lu.solve(L.transpose() * A * R);
    Mat Bt = lu.solve(L.transpose() * B);
    Mat Ch = C * R;
    Mat Y = dense_are_solve(At, Bt * Bt.transpose(), Ch.transpose() * Ch);
    // Xq = Eh^-T Y Eh^-1
    Mat EhT_inv_Y = Eh.transpose().partialPivLu().solve(Y);
    Mat Xq = Eh.transpose().partialPivLu().solve(EhT_inv_Y.transpose()).transpose();
    return symmetrized(L * Xq * L.transpose());
}

}  // namespace

Mat dense_riccati_solve(const GarePrbtData& d) { return projected_gare(d.E, d.A1, d.B, d.C, d.Pl, d.Pr); }

Mat dense_riccati_dual(const GarePrbtData& d) {
    return projected_gare(d.E.transpose(), d.A2().transpose(), d.C.transpose(), d.B.transpose(), d.Pr.transpose(),
                          d.Pl.transpose());
}

double gare_residual(const GarePrbtData& d, const Mat& X) {
    Mat Cf = d.Cfac();
    Mat R = d.A1.transpose() * X * d.E + d.E.transpose() * X * d.A1 +
            d.E.transpose() * X * d.B * d.B.transpose() * X * d.E + Cf * Cf.transpose();
    double q = (Cf * Cf.transpose()).norm();
    return q > 0 ? R.norm() / q : R.norm();
}

CMat LowRankFactor::Z() const {
    Eigen::Index n = V.empty() ? 0 : V.front().rows(), cols = 0;
    for (const auto& v : V) cols += v.cols();
    CMat z(n, cols);
    Eigen::Index c = 0;
    for (const auto& v : V) {
        z.middleCols(c, v.cols()) = v;
        c += v.cols();
    }
    return z;
}

Mat LowRankFactor::X() const {
    if (V.empty()) return Mat();
    CMat x = CMat::Zero(V.front().rows(), V.front().rows());
    for (size_t i = 0; i < V.size(); ++i) x += V[i] * Ytilde[i].partialPivLu().solve(V[i].adjoint());
    return symmetrized(x.real());
}

LowRankFactor radi(const Mat& E, const Mat& A, const Mat& B, const Mat& Cfac, const ShiftSet& shifts, double tol,
                   int max_steps) {
    const Eigen::Index n = A.rows(), m = B.cols(), p = Cfac.cols();
    LowRankFactor f;
    f.K = CMat::Zero(n, m);
    f.initial_residual_norm = (Cfac.transpose() * Cfac).norm();
    if (f.initial_residual_norm == 0.0) {
        f.converged = true;
        return f;
    }
    if (shifts.values.empty()) throw std::invalid_argument("RADI needs at least one shift");
    for (cplx s : shifts.values)
        if (!(s.real() < 0)) throw std::invalid_argument("RADI shifts must have negative real part");

    const CMat At = A.transpose().cast<cplx>(), Et = E.transpose().cast<cplx>();
    const CMat Bc = B.cast<cplx>();
    const CMat Bt = Bc.transpose();
    CMat R = Cfac.cast<cplx>();
    std::map<size_t, Eigen::PartialPivLU<CMat>> cache;
    double res = 1.0;
    bool have_K = false;

    for (int it = 0; it < max_steps; ++it) {
        if (res < tol) break;
        size_t idx = static_cast<size_t>(it) % shifts.values.size();
        const cplx sigma = shifts.values[idx];
        auto found = cache.find(idx);
        if (found == cache.end()) {
            Eigen::PartialPivLU<CMat> lu(At + sigma * Et);
            if (!(lu.rcond() > 1e-15)) throw std::runtime_error("RADI: shifted matrix is singular at a shift");
            found = cache.emplace(idx, std::move(lu)).first;
        }
        const auto& lu = found->second;
        CMat X1 = lu.solve(R);
        if (have_K) {
            CMat X2 = lu.solve(f.K);
            CMat S = CMat::Identity(m, m) + Bt * X2;
            X1 -= X2 * S.partialPivLu().solve(Bt * X1);
        }
        const double sq = std::sqrt(-2.0 * sigma.real());
        CMat V = sq * X1;
        CMat VB = V.adjoint() * Bc;
        CMat Yt = CMat::Identity(p, p) + (1.0 / (2.0 * sigma.real())) * VB * VB.adjoint();
        Yt = 0.5 * (Yt + Yt.adjoint());
        CMat Yinv = Yt.partialPivLu().inverse();
        CMat EtV = Et * V;
        R += sq * EtV * Yinv;
        f.K += EtV * Yinv * VB;
        have_K = true;
        if (!R.allFinite() || !f.K.allFinite()) throw std::runtime_error("RADI: non-finite values");
        f.V.push_back(std::move(V));
        f.Ytilde.push_back(std::move(Yt));
        f.shifts_used.push_back(sigma);
        res = (R.adjoint() * R).norm() / f.initial_residual_norm;
        f.residual_history.push_back(res);
    }
    f.converged = res < tol;
    return f;
}

Mat cholesky_from_radi(const LowRankFactor& f) {
    if (f.V.empty()) return Mat();
    const Eigen::Index n = f.V.front().rows();
    CMat W = f.Z();
    Eigen::Index c = 0;
    for (size_t i = 0; i < f.V.size(); ++i) {
        Eigen::LLT<CMat> llt(f.Ytilde[i]);
        if (llt.info() != Eigen::Success) throw std::domain_error("RADI block Y~ is not positive definite");
        const Eigen::Index w = f.V[i].cols();
        CMat Wi = llt.matrixL().solve(f.V[i].adjoint()).adjoint();
        W.middleCols(c, w) = Wi;
        c += w;
    }
    std::vector<Eigen::Index> imag_cols;
    for (Eigen::Index j = 0; j < W.cols(); ++j)
        if (W.col(j).imag().cwiseAbs().maxCoeff() > 0.0) imag_cols.push_back(j);
    Mat Q(n, W.cols() + static_cast<Eigen::Index>(imag_cols.size()));
    Q.leftCols(W.cols()) = W.real();
    for (size_t k = 0; k < imag_cols.size(); ++k) Q.col(W.cols() + k) = W.col(imag_cols[k]).imag();
    return Q;
}

std::vector<cplx> arnoldi_ritz(const std::function<Vec(const Vec&)>& op, Eigen::Index n, int k, std::uint64_t seed,
                               int purify) {
    k = static_cast<int>(std::min<Eigen::Index>(k, n));
    if (k <= 0) return {};
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    Mat Vb(n, k + 1);
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = nd(rng);
    for (int i = 0; i < purify; ++i) {
        v = op(v / v.norm());
        if (v.norm() == 0.0) return {};
    }
    Vb.col(0) = v / v.norm();
    Mat H = Mat::Zero(k + 1, k);
    int kk = k;
    for (int j = 0; j < k; ++j) {
        Vec w = op(Vb.col(j));
        for (int pass = 0; pass < 2; ++pass) {
            Vec h = Vb.leftCols(j + 1).transpose() * w;
            w -= Vb.leftCols(j + 1) * h;
            H.col(j).head(j + 1) += h;
        }
        double beta = w.norm();
        H(j + 1, j) = beta;
        double scale = H.topLeftCorner(j + 1, j + 1).cwiseAbs().maxCoeff();
        if (beta <= 1e-14 * scale) {
            kk = j + 1;
            break;
        }
        Vb.col(j + 1) = w / beta;
    }
    Eigen::EigenSolver<Mat> es(H.topLeftCorner(kk, kk), false);
    std::vector<cplx> out(es.eigenvalues().data(), es.eigenvalues().data() + kk);
    return out;
}

namespace {

struct Candidate {
    cplx lambda;
    double key;
};

// Largest key first; complex pairs are taken together or not at all.
std::vector<cplx> pick_conjugate_closed(std::vector<Candidate> c, int num) {
    for (auto& x : c)
        if (std::abs(x.lambda.imag()) <= 1e-12 * std::abs(x.lambda)) x.lambda = {x.lambda.real(), 0.0};
    std::stable_sort(c.begin(), c.end(), [](const Candidate& a, const Candidate& b) {
        if (a.key != b.key) return a.key > b.key;
        return a.lambda.imag() > b.lambda.imag();
    });
    std::vector<cplx> out;
    std::vector<char> taken(c.size(), 0);
    for (size_t i = 0; i < c.size() && static_cast<int>(out.size()) < num; ++i) {
        if (taken[i]) continue;
        cplx z = c[i].lambda;
        if (z.imag() == 0.0) {
            out.push_back(z);
            taken[i] = 1;
            continue;
        }
        size_t partner = c.size();
        for (size_t j = i + 1; j < c.size(); ++j) {
            if (!taken[j] && std::abs(c[j].lambda - std::conj(z)) <= 1e-10 * std::abs(z)) {
                partner = j;
                break;
            }
        }
        taken[i] = 1;
        if (partner == c.size()) continue;
        taken[partner] = 1;
        // a lone pair may overshoot a budget of one
        if (static_cast<int>(out.size()) + 2 > num && !out.empty()) continue;
        cplx up = z.imag() > 0 ? z : std::conj(z);
        out.push_back(up);
        out.push_back(std::conj(up));
    }
    return out;
}

struct Hamiltonian {
    Mat H, calE;
    bool identity_E = true;
};

Hamiltonian hamiltonian(const Mat& A, const Mat& B, const Mat& Cf, const Mat* E) {
    const Eigen::Index n = A.rows();
    Hamiltonian h;
    h.H.resize(2 * n, 2 * n);
    h.H << A, B * B.transpose(), -Cf * Cf.transpose(), -A.transpose();
    h.calE = Mat::Identity(2 * n, 2 * n);
    if (E) {
        h.calE.topLeftCorner(n, n) = *E;
        h.calE.bottomRightCorner(n, n) = E->transpose();
        h.identity_E = false;
    }
    return h;
}

Eigen::PartialPivLU<Mat> factor_or_shift(const Mat& M) {
    Eigen::PartialPivLU<Mat> lu(M);
    if (lu.rcond() > 1e-14) return lu;
    // singular Hamiltonian: factor H - delta I, delta = -1e-8
    return Eigen::PartialPivLU<Mat>(M + 1e-8 * Mat::Identity(M.rows(), M.cols()));
}

// Ritz values -> stable shift candidates; the Krylov space is doubled while
// nothing usable comes out, up to the full dimension.
template <class Op, class Map>
ShiftSet shifts_from_ritz(const Op& op, Eigen::Index n, int num_shifts, std::uint64_t seed, int steps, Map map,
                          int purify = 0, double zero_tol = 1e-12) {
    if (steps <= 0) steps = 2 * num_shifts;
    ShiftSet s;
    for (;;) {
        auto mu = arnoldi_ritz(op, n, steps, seed, purify);
        double mmax = 0;
        for (cplx z : mu) mmax = std::max(mmax, std::abs(z));
        std::vector<Candidate> cand;
        for (cplx z : mu) {
            if (std::abs(z) <= zero_tol * mmax) continue;
            cplx lam = map(z);
            if (lam.real() < 0) cand.push_back({lam, std::abs(z)});
        }
        s.arnoldi_steps = static_cast<int>(std::min<Eigen::Index>(steps, n));
        s.values = pick_conjugate_closed(cand, num_shifts);
        if (!s.values.empty() || steps >= n) break;
        steps = static_cast<int>(std::min<Eigen::Index>(2 * steps, n));
    }
    if (s.values.empty()) throw std::runtime_error("shift computation found no stable Ritz values");
    return s;
}

ShiftSet sml_from(const Hamiltonian& h, int num_shifts, std::uint64_t seed, int steps) {
    auto lu = factor_or_shift(h.H);
    auto op = [&](const Vec& x) -> Vec { return lu.solve(h.identity_E ? x : Vec(h.calE * x)); };
    ShiftSet s = shifts_from_ritz(op, h.H.rows(), num_shifts, seed, steps, [](cplx z) { return 1.0 / z; });
    s.strategy = ShiftStrategy::Sml;
    return s;
}

ShiftSet lrg_from(const Hamiltonian& h, int num_shifts, double s0, std::uint64_t seed, int steps) {
    if (!(s0 < 0)) throw std::invalid_argument("lrg shifts need a negative expansion point s0");
    // calE is O(1) while s0 H carries the 1/eps of a regularized D, so
    // equilibrate rows and columns before factoring
    Mat M = h.calE - s0 * h.H;
    Vec dr = M.cwiseAbs().rowwise().maxCoeff();
    if ((dr.array() == 0.0).any()) throw std::runtime_error("lrg shifts: calE - s0 H is singular");
    dr = dr.cwiseInverse();
    M = dr.asDiagonal() * M;
    Vec dc = M.cwiseAbs().colwise().maxCoeff().transpose();
    if ((dc.array() == 0.0).any()) throw std::runtime_error("lrg shifts: calE - s0 H is singular");
    dc = dc.cwiseInverse();
    M = M * dc.asDiagonal();
    Eigen::PartialPivLU<Mat> lu(M);
    if (!(lu.rcond() > 1e-15)) throw std::runtime_error("lrg shifts: calE - s0 H is singular");
    auto solve = [&](const Vec& y) -> Vec { return dc.asDiagonal() * lu.solve(dr.asDiagonal() * y); };
    ShiftSet s;
    if (h.identity_E) {
        auto op = [&](const Vec& x) -> Vec { return solve(h.H * x); };
        s = shifts_from_ritz(op, h.H.rows(), num_shifts, seed, steps, [s0](cplx z) { return 1.0 / (1.0 / z + s0); });
    } else {
        // Same Krylov space through (calE - s0 H)^-1 calE = I + s0 (calE - s0 H)^-1 H,
        // whose Ritz values mu = 1 + s0 xi put the infinite eigenvalues at 0
        // instead of on top. The start vector is pushed through the operator
        // so the nilpotent part is gone before the iteration begins.
        // Rounding leaves a few polluted values near 0; |lambda s0| > 1e4 counts as infinite.
        auto op = [&](const Vec& x) -> Vec { return solve(h.calE * x); };
        auto map = [s0](cplx mu) {
            cplx lam = (mu - 1.0) / (mu * s0);
            return std::abs(lam * s0) > 1e4 ? cplx(NAN, NAN) : lam;
        };
        s = shifts_from_ritz(op, h.H.rows(), num_shifts, seed, steps, map, 3);
    }
    s.strategy = ShiftStrategy::Lrg;
    s.s0 = s0;
    return s;
}

}  // namespace

ShiftSet compute_shifts_sml(const ArePrbtData& d, int num_shifts, std::uint64_t seed, int arnoldi_steps) {
    return sml_from(hamiltonian(d.A, d.B, d.C.transpose(), nullptr), num_shifts, seed, arnoldi_steps);
}

ShiftSet compute_shifts_sml(const GarePrbtData& d, int num_shifts, std::uint64_t seed, int arnoldi_steps) {
    return sml_from(hamiltonian(d.A1, d.B, d.Cfac(), &d.E), num_shifts, seed, arnoldi_steps);
}

ShiftSet compute_shifts_lrg(const ArePrbtData& d, int num_shifts, double s0, std::uint64_t seed, int arnoldi_steps) {
    return lrg_from(hamiltonian(d.A, d.B, d.C.transpose(), nullptr), num_shifts, s0, seed, arnoldi_steps);
}

ShiftSet compute_shifts_lrg(const GarePrbtData& d, int num_shifts, double s0, std::uint64_t seed, int arnoldi_steps) {
    return lrg_from(hamiltonian(d.A1, d.B, d.Cfac(), &d.E), num_shifts, s0, seed, arnoldi_steps);
}

ShiftSet read_shift_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open shift file '" + path + "'");
    ShiftSet s;
    s.strategy = ShiftStrategy::UserGiven;
    std::string line;
    while (std::getline(in, line)) {
        auto h = line.find('#');
        if (h != std::string::npos) line.erase(h);
        std::istringstream is(line);
        std::string re, im;
        if (!(is >> re)) continue;
        double r = parse_double(re), i = 0.0;
        if (is >> im) i = parse_double(im);
        if (!(r < 0)) throw std::runtime_error("shift file: shifts need negative real parts");
        s.values.emplace_back(r, i);
    }
    if (s.values.empty()) throw std::runtime_error("shift file holds no shifts");
    return s;
}

}  // namespace prbt
