#include <fstream>
#include <sstream>
#include <stdexcept>

#include "prbt/reduce.hpp"

namespace prbt {

namespace {

constexpr const char* kMagic = "prbt-reduced-model";

void put_block(std::ostream& os, const char* name, const Mat& M) {
    os << name << ' ' << M.rows() << ' ' << M.cols() << '\n';
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        for (Eigen::Index j = 0; j < M.cols(); ++j) os << (j ? " " : "") << fmt17(M(i, j));
        os << '\n';
    }
}

std::string expect_word(std::istream& is, const std::string& want) {
    std::string w;
    if (!(is >> w) || w != want) throw std::runtime_error("model file: expected '" + want + "', got '" + w + "'");
    return w;
}

long read_int(std::istream& is, const char* what) {
    std::string w;
    if (!(is >> w)) throw std::runtime_error(std::string("model file: missing ") + what);
    try {
        size_t pos = 0;
        long v = std::stol(w, &pos);
        if (pos != w.size()) throw std::invalid_argument(w);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(std::string("model file: bad ") + what + " '" + w + "'");
    }
}

Mat get_block(std::istream& is, const char* name, Eigen::Index rows, Eigen::Index cols) {
    expect_word(is, name);
    long r = read_int(is, "block rows"), c = read_int(is, "block cols");
    if (r != rows || c != cols) throw std::runtime_error(std::string("model file: block ") + name + " has wrong size");
    Mat M(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) {
            std::string w;
            if (!(is >> w)) throw std::runtime_error(std::string("model file: block ") + name + " truncated");
            try {
                M(i, j) = parse_double(w);
            } catch (const std::invalid_argument&) {
                throw std::runtime_error(std::string("model file: bad number in block ") + name);
            }
        }
    return M;
}

}  // namespace

void write_model(std::ostream& os, const ReducedModel& m) {
    const Eigen::Index k = m.order(), p = m.ports();
    os << kMagic << '\n';
    os << "formulation " << to_string(m.formulation) << '\n';
    os << "k " << k << '\n';
    os << "m " << p << '\n';
    os << "port_sign";
    for (Eigen::Index i = 0; i < p; ++i) os << ' ' << (m.port_sign(i) < 0 ? -1 : 1);
    os << '\n';
    put_block(os, "Es", m.Es);
    put_block(os, "As", m.As);
    put_block(os, "S1", m.S1);
    put_block(os, "B1", m.B1);
    put_block(os, "C1", m.C1);
    put_block(os, "M0", m.M0);
    put_block(os, "M1", m.M1);
}

void write_model_file(const std::string& path, const ReducedModel& m) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write model file '" + path + "'");
    write_model(f, m);
}

ReducedModel read_model(std::istream& is) {
    expect_word(is, kMagic);
    ReducedModel m;
    expect_word(is, "formulation");
    std::string f;
    is >> f;
    try {
        m.formulation = formulation_from_string(f);
    } catch (const std::invalid_argument&) {
        throw std::runtime_error("model file: bad formulation '" + f + "'");
    }
    expect_word(is, "k");
    long k = read_int(is, "k");
    expect_word(is, "m");
    long p = read_int(is, "m");
    if (k < 0 || p <= 0) throw std::runtime_error("model file: bad dimensions");
    expect_word(is, "port_sign");
    m.port_sign.resize(p);
    for (long i = 0; i < p; ++i) {
        long s = read_int(is, "port sign");
        if (s != 1 && s != -1) throw std::runtime_error("model file: port signs must be 1 or -1");
        m.port_sign(i) = static_cast<double>(s);
    }
    m.Es = get_block(is, "Es", k, k);
    m.As = get_block(is, "As", k, k);
    m.S1 = get_block(is, "S1", k, k);
    m.B1 = get_block(is, "B1", k, p);
    m.C1 = get_block(is, "C1", p, k);
    m.M0 = get_block(is, "M0", p, p);
    m.M1 = get_block(is, "M1", p, p);
    return m;
}

ReducedModel read_model_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open model file '" + path + "'");
    return read_model(f);
}

}  // namespace prbt
