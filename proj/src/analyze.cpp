#include "prbt/analyze.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace prbt {

std::vector<double> log_space(double lo, double hi, int n) {
    if (n <= 0) return {};
    if (!(lo > 0 && hi >= lo)) throw std::invalid_argument("log_space needs 0 < lo <= hi");
    std::vector<double> w(n);
    if (n == 1) {
        w[0] = lo;
        return w;
    }
    double a = std::log10(lo), b = std::log10(hi);
    for (int i = 0; i < n; ++i) w[i] = std::pow(10.0, a + (b - a) * i / (n - 1));
    w.front() = lo;
    w.back() = hi;
    return w;
}

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

struct DescriptorKernel {
    const DescriptorSystem& sys;
    bool dense;
    CMat E, A;
    Eigen::SparseMatrix<cplx> Es, As;

    DescriptorKernel(const DescriptorSystem& s, int threshold) : sys(s), dense(s.n() <= threshold) {
        if (dense) {
            E = s.E().cast<cplx>();
            A = s.A().cast<cplx>();
        } else {
            Es = s.E0.cast<cplx>();
            As = s.A0.cast<cplx>();
        }
    }

    bool eval(double w, CMat& out) const {
        const cplx s(0.0, w);
        const CMat B = sys.B0.cast<cplx>();
        CMat X;
        if (dense) {
            Eigen::PartialPivLU<CMat> lu(s * E - A);
            if (!(lu.rcond() > 1e-15)) return false;
            X = lu.solve(B);
        } else {
            Eigen::SparseMatrix<cplx> P = s * Es - As;
            P.makeCompressed();
            Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lu;
            lu.analyzePattern(P);
            lu.factorize(P);
            if (lu.info() != Eigen::Success) return false;
            X = lu.solve(B);
        }
        out = sys.C0.cast<cplx>() * X;
        return out.allFinite();
    }
};

void fill_point(FrequencyResponse& r, size_t i, bool ok, CMat&& v, Eigen::Index p, Eigen::Index q) {
    if (ok) {
        r.values[i] = std::move(v);
    } else {
        r.values[i] = CMat::Constant(p, q, cplx(kNaN, kNaN));
        r.singular[i] = 1;
    }
}

FrequencyResponse make_response(const std::vector<double>& omegas) {
    FrequencyResponse r;
    r.omegas = omegas;
    r.values.resize(omegas.size());
    r.singular.assign(omegas.size(), 0);
    return r;
}

bool reduced_point(const ReducedModel& m, double w, CMat& out) {
    const cplx s(0.0, w);
    out = m.M0.cast<cplx>() + s * m.M1.cast<cplx>();
    if (m.order() > 0) {
        Eigen::PartialPivLU<CMat> lu(s * m.Es.cast<cplx>() - m.As.cast<cplx>());
        if (!(lu.rcond() > 1e-15)) return false;
        out += (m.C1 * m.S1).cast<cplx>() * lu.solve(m.B1.cast<cplx>());
    }
    return out.allFinite();
}

}  // namespace

FrequencyResponse sweep_descriptor(const DescriptorSystem& sys, const std::vector<double>& omegas,
                                   int dense_threshold) {
    DescriptorKernel k(sys, dense_threshold);
    FrequencyResponse r = make_response(omegas);
    const long n = static_cast<long>(omegas.size());
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) {
        CMat v;
        bool ok = k.eval(omegas[i], v);
        fill_point(r, i, ok, std::move(v), sys.C0.rows(), sys.B0.cols());
    }
    return r;
}

FrequencyResponse sweep_descriptor_serial(const DescriptorSystem& sys, const std::vector<double>& omegas,
                                          int dense_threshold) {
    DescriptorKernel k(sys, dense_threshold);
    FrequencyResponse r = make_response(omegas);
    for (size_t i = 0; i < omegas.size(); ++i) {
        CMat v;
        bool ok = k.eval(omegas[i], v);
        fill_point(r, i, ok, std::move(v), sys.C0.rows(), sys.B0.cols());
    }
    return r;
}

FrequencyResponse sweep_reduced(const ReducedModel& m, const std::vector<double>& omegas) {
    FrequencyResponse r = make_response(omegas);
    const long n = static_cast<long>(omegas.size());
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) {
        CMat v;
        bool ok = reduced_point(m, omegas[i], v);
        fill_point(r, i, ok, std::move(v), m.ports(), m.ports());
    }
    return r;
}

FrequencyResponse sweep_reduced_serial(const ReducedModel& m, const std::vector<double>& omegas) {
    FrequencyResponse r = make_response(omegas);
    for (size_t i = 0; i < omegas.size(); ++i) {
        CMat v;
        bool ok = reduced_point(m, omegas[i], v);
        fill_point(r, i, ok, std::move(v), m.ports(), m.ports());
    }
    return r;
}

ErrorCurve relative_error(const FrequencyResponse& ref, const FrequencyResponse& red) {
    if (ref.omegas != red.omegas) throw std::invalid_argument("relative_error: sweeps use different frequencies");
    ErrorCurve e;
    e.values.resize(ref.omegas.size());
    e.absolute.assign(ref.omegas.size(), 0);
    for (size_t i = 0; i < ref.omegas.size(); ++i) {
        double d = (ref.values[i] - red.values[i]).norm();
        double g = ref.values[i].norm();
        if (g == 0.0) {
            e.values[i] = d;
            e.absolute[i] = 1;
        } else {
            e.values[i] = d / g;
        }
    }
    return e;
}

double max_error_up_to(const FrequencyResponse& ref, const ErrorCurve& e, double omega_max) {
    double mx = 0.0;
    for (size_t i = 0; i < ref.omegas.size(); ++i) {
        if (ref.omegas[i] > omega_max) continue;
        if (std::isnan(e.values[i])) return e.values[i];
        mx = std::max(mx, e.values[i]);
    }
    return mx;
}

std::vector<std::pair<int, double>> decade_means(const std::vector<double>& omegas, const ErrorCurve& e) {
    std::vector<std::pair<int, double>> out;
    int cur = 0;
    double sum = 0;
    int cnt = 0;
    for (size_t i = 0; i < omegas.size(); ++i) {
        int d = static_cast<int>(std::floor(std::log10(omegas[i]) + 1e-12));
        if (cnt > 0 && d != cur) {
            out.emplace_back(cur, sum / cnt);
            sum = 0;
            cnt = 0;
        }
        cur = d;
        sum += e.values[i];
        ++cnt;
    }
    if (cnt > 0) out.emplace_back(cur, sum / cnt);
    return out;
}

double check_reciprocity(const FrequencyResponse& r, const Vec& port_sign) {
    double mx = 0.0;
    for (size_t i = 0; i < r.values.size(); ++i) {
        if (r.singular[i]) continue;
        CMat P = port_sign.cast<cplx>().asDiagonal() * r.values[i];
        double g = r.values[i].norm();
        double d = (P - P.transpose()).norm();
        mx = std::max(mx, g > 0 ? d / g : d);
    }
    return mx;
}

double check_passivity(const FrequencyResponse& r) {
    double mn = INFINITY;
    for (size_t i = 0; i < r.values.size(); ++i) {
        if (r.singular[i]) continue;
        CMat S = r.values[i] + r.values[i].adjoint();
        Eigen::SelfAdjointEigenSolver<CMat> es(S, Eigen::EigenvaluesOnly);
        mn = std::min(mn, es.eigenvalues()(0));
    }
    return mn;
}

std::string response_csv(const FrequencyResponse& r) {
    std::ostringstream os;
    Eigen::Index p = r.values.empty() ? 0 : r.values.front().rows();
    Eigen::Index q = r.values.empty() ? 0 : r.values.front().cols();
    os << "omega";
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < q; ++j) os << ",re_G" << i + 1 << '_' << j + 1 << ",im_G" << i + 1 << '_' << j + 1;
    os << '\n';
    for (size_t k = 0; k < r.omegas.size(); ++k) {
        os << fmt17(r.omegas[k]);
        for (Eigen::Index i = 0; i < p; ++i)
            for (Eigen::Index j = 0; j < q; ++j)
                os << ',' << fmt17(r.values[k](i, j).real()) << ',' << fmt17(r.values[k](i, j).imag());
        os << '\n';
    }
    return os.str();
}

void emit_csv(const FrequencyResponse& r, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    f << response_csv(r);
    if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

void emit_csv(const std::vector<double>& omegas, const ErrorCurve& e, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    f << "omega,rel_error,absolute\n";
    for (size_t i = 0; i < omegas.size(); ++i)
        f << fmt17(omegas[i]) << ',' << fmt17(e.values[i]) << ',' << int(e.absolute[i]) << '\n';
    if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

FrequencyResponse parse_response_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("response csv: empty");
    size_t cols = 1;
    for (char c : line) cols += c == ',';
    size_t pairs = (cols - 1) / 2;
    Eigen::Index p = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(pairs))));
    if (static_cast<size_t>(p * p) != pairs || (cols - 1) % 2) throw std::runtime_error("response csv: bad header");
    FrequencyResponse r;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> v;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) v.push_back(parse_double(cell));
        if (v.size() != cols) throw std::runtime_error("response csv: ragged row");
        CMat G(p, p);
        size_t c = 1;
        for (Eigen::Index i = 0; i < p; ++i)
            for (Eigen::Index j = 0; j < p; ++j, c += 2) G(i, j) = cplx(v[c], v[c + 1]);
        r.omegas.push_back(v[0]);
        r.values.push_back(G);
        r.singular.push_back(G.allFinite() ? 0 : 1);
    }
    return r;
}

FrequencyResponse read_response_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_response_csv(ss.str());
}

}  // namespace prbt
