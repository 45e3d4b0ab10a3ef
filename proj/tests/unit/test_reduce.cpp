#include <doctest.h>

#include <sstream>

#include "oracles.hpp"
#include "prbt/reduce.hpp"
#include "prbt/riccati.hpp"

using namespace prbt;

namespace {

Mat factor(const Mat& X) {
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrized(X));
    Vec d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * d.asDiagonal();
}

HankelSpectrum spectrum_of(std::initializer_list<double> v) {
    HankelSpectrum hs;
    hs.sigma_abs = Vec::Zero(v.size());
    Eigen::Index i = 0;
    for (double x : v) hs.sigma_abs(i++) = x;
    hs.signs = Vec::Ones(hs.sigma_abs.size());
    const double top = hs.sigma_abs(0);
    while (hs.numerical_rank < hs.sigma_abs.size() && hs.sigma_abs(hs.numerical_rank) > 1e-12 * top)
        ++hs.numerical_rank;
    return hs;
}

struct Index1Case {
    StateRealization sr;
    Mat Q;
    DescriptorSystem sys;
};

Index1Case index1(const Netlist& nl) {
    Index1Case c;
    c.sys = assemble_descriptor(nl);
    c.sr = to_state_equation(to_svd_canonical(c.sys));
    c.Q = factor(dense_riccati_solve(prbt_are_data(c.sr)));
    return c;
}

double worst_error(const ReducedModel& m, const DescriptorSystem& sys, std::uint64_t seed) {
    double w = 0;
    for (cplx s : oracle::sample_points(seed, 6)) w = std::max(w, oracle::rel(m.eval(s), oracle::transfer(sys, s)));
    return w;
}

double reciprocity(const ReducedModel& m, cplx s) {
    CMat PG = m.port_sign.asDiagonal() * m.eval(s);
    return (PG - PG.transpose()).norm() / PG.norm();
}

}  // namespace

TEST_CASE("Hankel spectrum of a signed diagonal toy") {
    Mat Q = Vec((Vec(3) << 3, 2, 1).finished()).asDiagonal();
    Mat W = Vec((Vec(3) << 1, -1, 1).finished()).asDiagonal();
    HankelSpectrum hs = hankel_spectrum(Q, W);
    CHECK(hs.sigma_abs.isApprox((Vec(3) << 9, 4, 1).finished()));
    CHECK(hs.signs == (Vec(3) << 1, -1, 1).finished());
    CHECK(hs.numerical_rank == 3);
    HankelSpectrum empty = hankel_spectrum(Mat(4, 0), Mat::Identity(4, 4));
    CHECK(empty.numerical_rank == 0);
}

TEST_CASE("rank-deficient factors drop tiny eigenvalues") {
    Mat Q(3, 4);
    Q << 1, 1, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0;
    HankelSpectrum hs = hankel_spectrum(Q, Mat::Identity(3, 3));
    CHECK(hs.numerical_rank == 2);
    CHECK(hs.sigma_abs(0) == doctest::Approx(2.0));
}

TEST_CASE("order selection") {
    bool tie = true;
    CHECK(select_order(spectrum_of({1, 1e-3, 1e-7, 1e-9, 1e-11}), -1, &tie) == 3);
    CHECK_FALSE(tie);
    CHECK(select_order(spectrum_of({1, 0.5, 0.5, 1e-3}), 2, &tie) == 3);
    CHECK(tie);
    CHECK(select_order(spectrum_of({1, 0.5, 0.4}), 0, &tie) == 0);
    CHECK(select_order(spectrum_of({1, 0.5, 1e-14}), 2) == 2);
    CHECK_THROWS_AS(select_order(spectrum_of({1, 0.5, 1e-14}), 3), std::domain_error);
}

TEST_CASE("full-order index-1 model reproduces the circuit") {
    Index1Case c = index1(generate_ladder(2, Topology::SeriesFirst, 1, 1, 1, Formulation::Z));
    TruncationInfo info;
    ReducedModel m = rprbt1(c.sr, c.Q, -1, &info);
    CHECK(info.rank == 4);
    CHECK(m.order() == 4);
    CHECK(worst_error(m, c.sys, 3) <= 1e-10);
    CHECK(m.As == Mat(m.As.transpose()));
    // balanced: the reduced ARE is solved by the Hankel values
    StateRealization r;
    r.sig = Signature::from_counts(0, 0);
    r.sig.diag = m.S1.diagonal();
    r.As = m.As;
    r.Bhat = m.S1 * m.B1;
    r.Chat = m.C1 * m.S1;
    r.Dhat = r.M0 = m.M0;
    r.M1 = m.M1;
    r.port_sign = m.port_sign;
    for (cplx s : oracle::sample_points(8, 3)) CHECK(oracle::rel(oracle::transfer(r, s), m.eval(s)) <= 1e-12);
    Mat Xr = dense_riccati_solve(prbt_are_data(r));
    Mat Sigma = info.spectrum.sigma_abs.head(4).asDiagonal();
    CHECK((Xr - Sigma).norm() <= 1e-8 * Sigma.norm());
}

TEST_CASE("order-zero model keeps only the polynomial part") {
    Index1Case c = index1(generate_ladder(3, Topology::SeriesFirst, 1, 1, 1, Formulation::Z));
    ReducedModel m = rprbt1(c.sr, c.Q, 0);
    CHECK(m.order() == 0);
    CHECK(oracle::rel(m.eval(cplx(0.4, 1.3)), c.sr.M0.cast<cplx>()) == 0.0);
}

TEST_CASE("truncation error shrinks with order") {
    Index1Case c = index1(generate_ladder(8, Topology::SeriesFirst, 1, 1, 1, Formulation::Z));
    TruncationInfo info;
    rprbt1(c.sr, c.Q, -1, &info);
    double prev = INFINITY;
    for (int k = 2; k <= info.rank; k += 4) {
        double e = worst_error(rprbt1(c.sr, c.Q, k), c.sys, 5);
        CHECK(e <= prev * 1.0001);
        prev = e;
    }
    CHECK(prev <= 1e-8);
}

TEST_CASE("index-2 example reduced at full rank through the GARE") {
    DescriptorSystem sys = assemble_descriptor(generate_ladder(2, Topology::ShuntFirst, 1, 1, 1, Formulation::Z));
    StokesForm st = to_stokes_form(to_svd_canonical(sys));
    ProjectorPair p = spectral_projectors(st);
    PolynomialPart pp = polynomial_part(st, p);
    GarePrbtData d = prbt_gare_data(st, p, pp.M0, 1e-5);
    Mat Q = factor(dense_riccati_solve(d));
    TruncationInfo info;
    ReducedModel m = rprbt2(st, Q, -1, pp.M0, pp.M1, &info);
    CHECK(info.rank == 3);
    CHECK(m.order() == 3);
    CHECK(worst_error(m, sys, 4) <= 1e-6);
    CHECK(m.Es == Mat(m.Es.transpose()));
    CHECK(m.As == Mat(m.As.transpose()));
}

TEST_CASE("reduced models are reciprocal in every formulation") {
    for (Formulation f : {Formulation::Z, Formulation::Y, Formulation::H}) {
        CAPTURE(to_string(f));
        Netlist nl = generate_ladder(6, Topology::SeriesFirst, 1, 1, 1, Formulation::Z);
        nl.ports[1].n1 = nl.node_count;
        nl = with_formulation(nl, f);
        DescriptorSystem sys = assemble_descriptor(nl);
        StokesForm st = to_stokes_form(to_svd_canonical(sys));
        ProjectorPair p = spectral_projectors(st);
        PolynomialPart pp = polynomial_part(st, p);
        GarePrbtData d = prbt_gare_data(st, p, pp.M0, 1e-5);
        Mat Q = factor(dense_riccati_solve(d));
        TruncationInfo info;
        ReducedModel full = rprbt2(st, Q, -1, pp.M0, pp.M1, &info);
        ReducedModel m = rprbt2(st, Q, std::max(1, info.rank / 2), pp.M0, pp.M1);
        for (cplx s : oracle::sample_points(6, 4)) {
            CHECK(reciprocity(m, s) <= 1e-12);
            CHECK(reciprocity(full, s) <= 1e-12);
        }
        CHECK(worst_error(full, sys, 2) <= 1e-6);
    }
}

TEST_CASE("model files round-trip exactly") {
    Index1Case c = index1(generate_ladder(4, Topology::SeriesFirst, 1, 1, 1, Formulation::Z));
    ReducedModel m = rprbt1(c.sr, c.Q, 5);
    std::stringstream ss;
    write_model(ss, m);
    std::string text = ss.str();
    ReducedModel back = read_model(ss);
    CHECK(back.Es == m.Es);
    CHECK(back.As == m.As);
    CHECK(back.S1 == m.S1);
    CHECK(back.B1 == m.B1);
    CHECK(back.C1 == m.C1);
    CHECK(back.M0 == m.M0);
    CHECK(back.M1 == m.M1);
    CHECK(back.port_sign == m.port_sign);
    CHECK(back.formulation == m.formulation);
    std::stringstream again;
    write_model(again, back);
    CHECK(again.str() == text);
}

TEST_CASE("malformed model files are rejected") {
    Index1Case c = index1(generate_ladder(2, Topology::SeriesFirst, 1, 1, 1, Formulation::Z));
    std::stringstream ss;
    write_model(ss, rprbt1(c.sr, c.Q, 2));
    const std::string good = ss.str();
    auto reject = [](const std::string& text) {
        std::istringstream is(text);
        CHECK_THROWS_AS(read_model(is), std::runtime_error);
    };
    reject("");
    reject("something else\n");
    reject(good.substr(0, good.size() / 2));
    std::string bad = good;
    bad.replace(bad.find("formulation Z"), 13, "formulation Q");
    reject(bad);
    bad = good;
    bad.replace(bad.find("port_sign 1"), 11, "port_sign 2");
    reject(bad);
}

TEST_CASE("normalized models convert back to physical frequency") {
    Netlist nl = generate_ladder(3, Topology::ShuntFirst, 1, 1e-9, 1e-9, Formulation::Z);
    DescriptorSystem phys = assemble_descriptor(nl);
    DescriptorSystem scaled = frequency_scaled(phys, 1e9);
    StokesForm st = to_stokes_form(to_svd_canonical(scaled));
    ProjectorPair p = spectral_projectors(st);
    PolynomialPart pp = polynomial_part(st, p);
    Mat Q = factor(dense_riccati_solve(prbt_gare_data(st, p, pp.M0, 1e-5)));
    ReducedModel m = to_physical_frequency(rprbt2(st, Q, -1, pp.M0, pp.M1), 1e9);
    for (double w : {1e6, 1e8, 1e9, 3e9, 1e10}) {
        cplx s(0, w);
        CHECK(oracle::rel(m.eval(s), oracle::transfer(phys, s)) <= 1e-6);
    }
}
