#include <doctest.h>

#include "oracles.hpp"
#include "prbt/canon.hpp"

using namespace prbt;

namespace {

Mat ints(std::initializer_list<std::initializer_list<double>> rows) {
    Mat M(rows.size(), rows.begin()->size());
    Eigen::Index i = 0;
    for (auto r : rows) {
        Eigen::Index j = 0;
        for (double v : r) M(i, j++) = v;
        ++i;
    }
    return M;
}

// two-section ladder, ports at the first and the last node
Netlist end_ports(Formulation f) {
    Netlist nl = generate_ladder(2, Topology::SeriesFirst, 1, 1, 1, Formulation::Z);
    nl.ports[1].n1 = 5;
    return with_formulation(nl, f);
}

DescriptorSystem golden_z() { return assemble_descriptor(generate_ladder(2, Topology::SeriesFirst, 1, 1, 1, Formulation::Z)); }
DescriptorSystem golden_index2() {
    return assemble_descriptor(generate_ladder(2, Topology::ShuntFirst, 1, 1, 1, Formulation::Z));
}

// Circuits with a regular pencil, split by index.
std::vector<DescriptorSystem> random_systems(Index want, int how_many) {
    std::vector<DescriptorSystem> out;
    for (std::uint64_t seed = 1; out.size() < static_cast<size_t>(how_many) && seed < 400; ++seed) {
        Formulation f = std::array{Formulation::Z, Formulation::Y, Formulation::H}[seed % 3];
        Netlist nl = oracle::random_rlc(seed, 5 + seed % 6, 4 + seed % 4, 2, f);
        DescriptorSystem sys = assemble_descriptor(nl);
        if (!oracle::regular(sys)) continue;
        SvdCanonicalForm cf = to_svd_canonical(sys);
        if (detect_index(cf) != want) continue;
        if (want == Index::Two) {
            try {
                to_stokes_form(cf);
            } catch (const std::exception&) {
                continue;
            }
        }
        out.push_back(sys);
    }
    return out;
}

Mat assembled_canonical_E(const SvdCanonicalForm& f) {
    const Eigen::Index r = f.sig.size(), n = r + f.A22.rows();
    Mat E = Mat::Zero(n, n);
    E.topLeftCorner(r, r) = f.sig.matrix();
    return E;
}

Mat assembled_canonical_A(const SvdCanonicalForm& f) {
    const Eigen::Index r = f.sig.size(), k = f.A22.rows();
    Mat A(r + k, r + k);
    A << f.A11, f.A12, f.A21, f.A22;
    return A;
}

}  // namespace

TEST_CASE("canonical form of the index-1 example") {
    SvdCanonicalForm f = to_svd_canonical(golden_z());
    CHECK(f.sig.size() == 4);
    CHECK(f.sig.r1 == 2);
    CHECK(f.sig.r2 == 2);
    CHECK(f.sig.diag == (Vec(4) << 1, 1, -1, -1).finished());
    CHECK((f.A22 - ints({{-2, 1, 0}, {1, -1, 0}, {0, 0, -1}})).norm() <= 1e-10);
    CHECK(detect_index(f) == Index::One);
    CHECK_FALSE(f.rank_ambiguous);
}

TEST_CASE("admittance and hybrid canonical forms are index-2") {
    SvdCanonicalForm y = to_svd_canonical(assemble_descriptor(end_ports(Formulation::Y)));
    SvdCanonicalForm h = to_svd_canonical(assemble_descriptor(end_ports(Formulation::H)));
    CHECK(y.sig.size() == 4);
    CHECK(h.sig.size() == 4);
    Mat A22y = ints({{-2, 1, 0, -1, 0}, {1, -1, 0, 0, 0}, {0, 0, -1, 0, 0}, {-1, 0, 0, 0, 0}, {0, 0, 0, 0, 0}});
    Mat A22h = ints({{-2, 1, 0, 0}, {1, -1, 0, 0}, {0, 0, -1, 0}, {0, 0, 0, 0}});
    CHECK((y.A22 - A22y).norm() <= 1e-10);
    CHECK((h.A22 - A22h).norm() <= 1e-10);
    CHECK(detect_index(y) == Index::Two);
    CHECK(detect_index(h) == Index::Two);
}

TEST_CASE("state equation of the index-1 example") {
    StateRealization sr = to_state_equation(to_svd_canonical(golden_z()));
    Mat A0 = ints({{0, 0, 1, -1}, {0, 0, 0, 1}, {-1, 0, -2, 0}, {1, -1, 0, -1}});
    CHECK((sr.Ahat() - A0).norm() <= 1e-10);
    CHECK((sr.Dhat - ints({{1, 1}, {1, 2}})).norm() <= 1e-10);
    CHECK((sr.M0 - sr.Dhat).norm() == 0.0);
    CHECK(sr.M1.norm() == 0.0);
    Mat C = ints({{0, 0, -1, 0}, {0, 0, -2, 0}});
    // printed output map agrees up to one overall sign
    CHECK(std::min((sr.Chat - C).norm(), (sr.Chat + C).norm()) <= 1e-10);
    CHECK((sr.Bhat - sr.sig.matrix() * sr.Chat.transpose()).norm() <= 1e-10);
}

TEST_CASE("already canonical input is read off directly") {
    DescriptorSystem sys;
    Mat E = Mat::Zero(3, 3);
    E(0, 0) = 1;
    E(1, 1) = -1;
    Mat A = -Mat::Identity(3, 3);
    A(0, 2) = A(2, 0) = 0.5;
    sys.E0 = E.sparseView();
    sys.A0 = A.sparseView();
    sys.B0 = Mat::Identity(3, 1);
    sys.C0 = sys.B0.transpose();
    sys.port_sign = Vec::Ones(1);
    SvdCanonicalForm f = to_svd_canonical(sys);
    CHECK((f.V.cwiseAbs() - Mat::Identity(3, 3)).norm() == 0.0);
    CHECK(f.A22(0, 0) == -1.0);
    CHECK(std::abs(f.A12(0, 0)) == 0.5);
}

TEST_CASE("empty algebraic part is index-1") {
    DescriptorSystem sys;
    Mat E = Mat::Identity(2, 2);
    sys.E0 = E.sparseView();
    sys.A0 = Mat(-E).sparseView();
    sys.B0 = Mat::Ones(2, 1);
    sys.C0 = sys.B0.transpose();
    sys.port_sign = Vec::Ones(1);
    SvdCanonicalForm f = to_svd_canonical(sys);
    CHECK(f.A22.size() == 0);
    CHECK(detect_index(f) == Index::One);
}

TEST_CASE("decoupled algebraic part leaves D0 at zero") {
    DescriptorSystem sys;
    Mat E = Mat::Zero(3, 3);
    E(0, 0) = 1;
    E(1, 1) = 1;
    Mat A = -Mat::Identity(3, 3);
    sys.E0 = E.sparseView();
    sys.A0 = A.sparseView();
    sys.B0 = Mat::Zero(3, 1);
    sys.B0(0, 0) = 1;
    sys.C0 = sys.B0.transpose();
    sys.port_sign = Vec::Ones(1);
    StateRealization sr = to_state_equation(to_svd_canonical(sys));
    CHECK(sr.Dhat.norm() == 0.0);
    CHECK((sr.Ahat() + Mat::Identity(2, 2)).norm() <= 1e-14);
}

TEST_CASE("canonicalization and the state equation keep the transfer function") {
    for (const auto& sys : random_systems(Index::One, 10)) {
        SvdCanonicalForm f = to_svd_canonical(sys);
        Mat V = f.V;
        StateRealization sr = to_state_equation(f);
        for (cplx s : oracle::sample_points(5, 5)) {
            CMat g = oracle::transfer(sys, s);
            Mat B(f.B1.rows() + f.B2.rows(), f.B1.cols());
            B << f.B1, f.B2;
            Mat C(f.C1.rows(), f.C1.cols() + f.C2.cols());
            C << f.C1, f.C2;
            CHECK(oracle::rel(oracle::transfer(assembled_canonical_E(f), assembled_canonical_A(f), B, C, s), g) < 1e-10);
            CHECK(oracle::rel(oracle::transfer(sr, s), g) < 1e-10);
        }
        CHECK(relative_asymmetry(f.A11) < 1e-12);
        CHECK(relative_asymmetry(f.A22) < 1e-12);
        CHECK((f.A21 - f.A12.transpose()).norm() <= 1e-12 * std::max(1.0, f.A12.norm()));
        CHECK((V.transpose() * sys.E() * V - assembled_canonical_E(f)).norm() < 1e-10);
    }
}

TEST_CASE("state equation refuses a singular A22") {
    SvdCanonicalForm f = to_svd_canonical(golden_index2());
    CHECK(detect_index(f) == Index::Two);
    CHECK_THROWS_AS(to_state_equation(f), std::domain_error);
}

TEST_CASE("index-2 example: Stokes form, projectors, polynomial part") {
    SvdCanonicalForm f = to_svd_canonical(golden_index2());
    StokesForm st = to_stokes_form(f);
    ProjectorPair p = spectral_projectors(st);
    CHECK((p.Pl - p.Pr.transpose()).norm() <= 1e-12);
    CHECK((p.Pl * p.Pl - p.Pl).norm() <= 1e-10);
    CHECK((p.Pr * p.Pr - p.Pr).norm() <= 1e-10);
    PolynomialPart pp = polynomial_part(st, p);
    CHECK((pp.M0 - ints({{0, 0}, {0, 1}})).norm() <= 1e-10);
    // port 2 sits behind an inductor, so the linear term is L at that port
    CHECK((pp.M1 - ints({{0, 0}, {0, 1}})).norm() <= 1e-10);

    StateRealization sr = project_to_state(st, p);
    Mat IpAs = ints({{-1, 0, -1, 0}, {0, 0, 1, 0}, {1, -1, -1, 0}, {0, 0, 0, 0}});
    CHECK((sr.sig.matrix() * sr.As - IpAs).norm() <= 1e-10);

    StateRealization el = eliminate_improper_artifact(sr);
    CHECK(el.As.rows() == 3);
    CHECK(el.eliminated_states == 1);
    CHECK_FALSE(el.has_integrator);
    CMat g0 = oracle::transfer(golden_index2(), cplx(0, 0));
    CHECK(oracle::rel(oracle::transfer(el, cplx(0, 0)), g0) < 1e-10);
}

TEST_CASE("Stokes form of an index-1 system degenerates to identity projectors") {
    SvdCanonicalForm f = to_svd_canonical(golden_z());
    StokesForm st = to_stokes_form(f);
    CHECK(st.algebraic == 0);
    ProjectorPair p = spectral_projectors(st);
    const Eigen::Index n = st.Eb0.rows();
    CHECK((p.Pl - Mat::Identity(n, n)).norm() <= 1e-14);
    CHECK((p.Pr - Mat::Identity(n, n)).norm() <= 1e-14);
    PolynomialPart pp = polynomial_part(st, p);
    CHECK((pp.M0 - st.Db0).norm() <= 1e-12);
    CHECK(pp.M1.norm() <= 1e-12);
    CHECK((pp.M0 - to_state_equation(f).Dhat).norm() <= 1e-10);
}

TEST_CASE("index-2 properties on random circuits") {
    auto systems = random_systems(Index::Two, 10);
    REQUIRE(systems.size() >= 5);
    for (const auto& sys : systems) {
        SvdCanonicalForm f = to_svd_canonical(sys);
        StokesForm st = to_stokes_form(f);
        ProjectorPair p = spectral_projectors(st);
        CHECK((p.Pl * p.Pl - p.Pl).norm() <= 1e-10 * std::max(1.0, p.Pl.norm()));
        CHECK((p.Pr * p.Pr - p.Pr).norm() <= 1e-10 * std::max(1.0, p.Pr.norm()));
        // the constraint block annihilates the projected states
        Mat X = Mat::Random(st.r(), 3);
        CHECK((st.Ab21 * p.Pir * X).norm() <= 1e-10 * std::max(1.0, st.Ab21.norm() * X.norm()));

        PolynomialPart pc = polynomial_part_from_coefficients(st);
        oracle::Polynomial w = oracle::weierstrass_polynomial(sys);
        double scale = std::max(1.0, w.M0.norm());
        CHECK((pc.M0 - w.M0).norm() <= 1e-8 * scale);
        CHECK((pc.M1 - w.M1).norm() <= 1e-8 * std::max(1.0, w.M1.norm()));
        Eigen::SelfAdjointEigenSolver<Mat> es(symmetrized(pc.M1));
        CHECK(es.eigenvalues().minCoeff() >= -1e-10 * std::max(1.0, pc.M1.norm()));

        StateRealization sr = project_to_state(st, p);
        for (cplx s : oracle::sample_points(9, 5)) {
            CMat g = oracle::transfer(sys, s);
            CHECK(oracle::rel(oracle::transfer(st, s), g) < 1e-10);
            CHECK(oracle::rel(oracle::transfer(sr, s), g) < 1e-8);
        }
    }
}

TEST_CASE("linear term equals the high-frequency slope") {
    DescriptorSystem sys = assemble_descriptor(generate_ladder(3, Topology::ShuntFirst, 1, 1, 1, Formulation::Z));
    StokesForm st = to_stokes_form(to_svd_canonical(sys));
    PolynomialPart pp = polynomial_part(st, spectral_projectors(st));
    // Richardson: G(s)/s = M1 + M0/s + O(1/s^2)
    cplx s1(0, 1e6), s2(0, 1e7);
    CMat g1 = oracle::transfer(sys, s1) / s1, g2 = oracle::transfer(sys, s2) / s2;
    CMat slope = (s2 * g2 - s1 * g1) / (s2 - s1);
    CHECK((slope.real() - pp.M1).norm() <= 1e-8);
}

TEST_CASE("improper artifact elimination") {
    SUBCASE("nonsingular As is left alone") {
        StateRealization sr = to_state_equation(to_svd_canonical(golden_z()));
        StateRealization el = eliminate_improper_artifact(sr);
        CHECK(el.eliminated_states == 0);
        CHECK(el.As == sr.As);
        CHECK(el.Bhat == sr.Bhat);
    }
    SUBCASE("integrator term is kept as metadata") {
        StateRealization sr;
        sr.sig = Signature::from_counts(2, 1);
        sr.As = Mat::Zero(3, 3);
        sr.As(0, 0) = -1.0;
        sr.As(2, 2) = -2.0;
        sr.Bhat = (Mat(3, 1) << 1.0, 0.5, 0.2).finished();
        sr.Chat = (sr.sig.matrix() * sr.Bhat).transpose();
        sr.Dhat = sr.M0 = Mat::Constant(1, 1, 1.0);
        sr.M1 = Mat::Zero(1, 1);
        sr.port_sign = Vec::Ones(1);
        StateRealization el = eliminate_improper_artifact(sr);
        CHECK(el.eliminated_states == 1);
        REQUIRE(el.has_integrator);
        for (cplx s : oracle::sample_points(2, 5)) CHECK(oracle::rel(oracle::transfer(el, s), oracle::transfer(sr, s)) < 1e-12);
    }
}

TEST_CASE("reciprocal symmetrization") {
    Mat M(2, 2);
    M << 1, 2, 2.5, 3;
    double asym = 0;
    Mat S = reciprocal_symmetrized(M, Vec::Ones(2), &asym);
    CHECK(S(0, 1) == S(1, 0));
    CHECK(asym > 0);
    Vec ps(2);
    ps << 1, -1;
    Mat H(2, 2);
    H << 1, 2, -2, 3;
    Mat Hs = reciprocal_symmetrized(H, ps, &asym);
    CHECK(asym == 0.0);
    CHECK(Hs == H);
}
