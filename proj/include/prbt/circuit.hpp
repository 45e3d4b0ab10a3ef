#pragma once

#include <Eigen/Sparse>
#include <stdexcept>
#include <string>
#include <vector>

#include "prbt/linalg.hpp"

namespace prbt {

enum class Formulation { Z, Y, H };
enum class ElementKind { R, L, C };
enum class SourceKind { Current, Voltage };
enum class Topology { SeriesFirst, ShuntFirst };

const char* to_string(Formulation f);
Formulation formulation_from_string(const std::string& s);

class NetlistError : public std::runtime_error {
public:
    NetlistError(const std::string& msg, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

struct Element {
    ElementKind kind;
    std::string name;
    int n1 = 0, n2 = 0;  // compact ids, 0 is ground
    double value = 0.0;
};

struct PortSpec {
    SourceKind kind;
    int n1 = 0, n2 = 0;
};

struct Netlist {
    std::vector<Element> elements;
    std::vector<PortSpec> ports;
    Formulation formulation = Formulation::Z;
    int node_count = 0;
    std::vector<long> node_labels;  // node_labels[i] is the user id of compact node i+1
};

struct DescriptorSystem {
    Eigen::SparseMatrix<double> E0, A0;
    Mat B0, C0;
    Formulation formulation = Formulation::Z;
    Vec port_sign;
    int nodes = 0, inductors = 0, vsources = 0;

    Eigen::Index n() const { return E0.rows(); }
    Eigen::Index m() const { return B0.cols(); }
    Mat E() const { return Mat(E0); }
    Mat A() const { return Mat(A0); }
};

// positive value with an optional k/m/u/n/p suffix
double parse_element_value(const std::string& tok);
Netlist parse_netlist(const std::string& text);
Netlist read_netlist_file(const std::string& path);
std::string netlist_to_text(const Netlist& nl);

// Retype the ports for another formulation: Z all current-driven, Y all
// voltage-driven, H first half current, second half voltage.
Netlist with_formulation(Netlist nl, Formulation f);
void validate(const Netlist& nl);

DescriptorSystem assemble_descriptor(const Netlist& nl);

Netlist generate_ladder(int sections, Topology topo, double R, double L, double C, Formulation f);

// s = omega0 * s_hat: E0 becomes omega0 * E0, everything else unchanged.
DescriptorSystem frequency_scaled(const DescriptorSystem& sys, double omega0);
// 1/sqrt(geomean(L) * geomean(C)), 1 if either kind is absent.
double auto_omega0(const Netlist& nl);

}  // namespace prbt
