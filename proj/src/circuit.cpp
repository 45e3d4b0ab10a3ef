#include "prbt/circuit.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace prbt {

const char* to_string(Formulation f) {
    switch (f) {
        case Formulation::Z: return "Z";
        case Formulation::Y: return "Y";
        case Formulation::H: return "H";
    }
    return "?";
}

Formulation formulation_from_string(const std::string& s) {
    if (s == "Z" || s == "z") return Formulation::Z;
    if (s == "Y" || s == "y") return Formulation::Y;
    if (s == "H" || s == "h") return Formulation::H;
    throw std::invalid_argument("unknown formulation '" + s + "'");
}

namespace {

std::vector<std::string> split_ws(const std::string& line) {
    std::istringstream is(line);
    std::vector<std::string> out;
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

double parse_value(const std::string& tok, int line) {
    std::string num = tok;
    double mult = 1.0;
    if (!num.empty()) {
        char c = num.back();
        switch (c) {
            case 'k': case 'K': mult = 1e3; break;
            case 'm': case 'M': mult = 1e-3; break;
            case 'u': case 'U': mult = 1e-6; break;
            case 'n': case 'N': mult = 1e-9; break;
            case 'p': case 'P': mult = 1e-12; break;
            default: break;
        }
        if (mult != 1.0) num.pop_back();
    }
    double v;
    try {
        v = parse_double(num);
    } catch (const std::invalid_argument&) {
        throw NetlistError("bad value '" + tok + "'", line);
    }
    v *= mult;
    if (!std::isfinite(v) || v <= 0.0) throw NetlistError("nonpositive value '" + tok + "'", line);
    return v;
}

long parse_node(const std::string& tok, int line) {
    if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](unsigned char c) { return std::isdigit(c); }))
        throw NetlistError("bad node id '" + tok + "'", line);
    try {
        return std::stol(tok);
    } catch (const std::exception&) {
        throw NetlistError("bad node id '" + tok + "'", line);
    }
}

}  // namespace

double parse_element_value(const std::string& tok) { return parse_value(tok, 0); }

void validate(const Netlist& nl) {
    if (nl.ports.empty()) throw NetlistError("no ports declared");
    std::vector<int> touches(nl.node_count + 1, 0), by_element(nl.node_count + 1, 0);
    for (const auto& e : nl.elements) {
        if (e.value <= 0.0 || !std::isfinite(e.value)) throw NetlistError("nonpositive value in " + e.name);
        if (e.n1 == e.n2) throw NetlistError("element " + e.name + " connects a node to itself");
        for (int nd : {e.n1, e.n2}) {
            if (nd < 0 || nd > nl.node_count) throw NetlistError("element " + e.name + " references unknown node");
            ++touches[nd];
            ++by_element[nd];
        }
    }
    for (const auto& p : nl.ports) {
        if (p.n1 == p.n2) throw NetlistError("port connects a node to itself");
        for (int nd : {p.n1, p.n2}) {
            if (nd < 0 || nd > nl.node_count) throw NetlistError("port references unknown node");
            ++touches[nd];
        }
    }
    for (int i = 1; i <= nl.node_count; ++i) {
        long label = i - 1 < static_cast<int>(nl.node_labels.size()) ? nl.node_labels[i - 1] : i;
        if (by_element[i] == 0 || touches[i] < 2)
            throw NetlistError("dangling node " + std::to_string(label));
    }
    size_t m = nl.ports.size();
    switch (nl.formulation) {
        case Formulation::Z:
            for (const auto& p : nl.ports)
                if (p.kind != SourceKind::Current) throw NetlistError("Z formulation needs current-driven ports (I)");
            break;
        case Formulation::Y:
            for (const auto& p : nl.ports)
                if (p.kind != SourceKind::Voltage) throw NetlistError("Y formulation needs voltage-driven ports (V)");
            break;
        case Formulation::H:
            if (m % 2 != 0) throw NetlistError("H formulation needs an even port count");
            for (size_t i = 0; i < m; ++i) {
                SourceKind want = i < m / 2 ? SourceKind::Current : SourceKind::Voltage;
                if (nl.ports[i].kind != want)
                    throw NetlistError("H formulation needs current ports first, then voltage ports");
            }
            break;
    }
}

Netlist parse_netlist(const std::string& text) {
    struct RawElem {
        ElementKind kind;
        std::string name;
        long n1, n2;
        double v;
        int line;
    };
    struct RawPort {
        SourceKind kind;
        long n1, n2;
        int line;
    };
    std::vector<RawElem> elems;
    std::vector<RawPort> ports;
    bool have_form = false;
    Formulation form = Formulation::Z;

    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto tok = split_ws(line);
        if (tok.empty()) continue;
        const std::string& head = tok[0];
        if (head[0] == '.') {
            std::string dir = head;
            std::transform(dir.begin(), dir.end(), dir.begin(), [](unsigned char c) { return std::tolower(c); });
            if (dir == ".ports") {
                if (tok.size() < 4 || (tok.size() - 1) % 3 != 0)
                    throw NetlistError("syntax error: .ports expects <I|V> n1 n2 triples", lineno);
                for (size_t i = 1; i < tok.size(); i += 3) {
                    SourceKind k;
                    if (tok[i] == "I" || tok[i] == "i") k = SourceKind::Current;
                    else if (tok[i] == "V" || tok[i] == "v") k = SourceKind::Voltage;
                    else throw NetlistError("syntax error: port kind must be I or V", lineno);
                    ports.push_back({k, parse_node(tok[i + 1], lineno), parse_node(tok[i + 2], lineno), lineno});
                }
            } else if (dir == ".form") {
                if (tok.size() != 2) throw NetlistError("syntax error: .form expects Z, Y or H", lineno);
                try {
                    form = formulation_from_string(tok[1]);
                } catch (const std::invalid_argument&) {
                    throw NetlistError("syntax error: .form expects Z, Y or H", lineno);
                }
                have_form = true;
            } else {
                throw NetlistError("unknown directive " + head, lineno);
            }
            continue;
        }
        ElementKind kind;
        switch (std::toupper(static_cast<unsigned char>(head[0]))) {
            case 'R': kind = ElementKind::R; break;
            case 'L': kind = ElementKind::L; break;
            case 'C': kind = ElementKind::C; break;
            default: throw NetlistError("unsupported element '" + head + "' (only R, L, C)", lineno);
        }
        if (tok.size() != 4) throw NetlistError("syntax error: expected <name> n1 n2 value", lineno);
        long a = parse_node(tok[1], lineno), b = parse_node(tok[2], lineno);
        if (a == b) throw NetlistError("element " + head + " connects a node to itself", lineno);
        elems.push_back({kind, head, a, b, parse_value(tok[3], lineno), lineno});
    }

    std::map<long, int> compact;
    for (const auto& e : elems) {
        if (e.n1) compact[e.n1] = 0;
        if (e.n2) compact[e.n2] = 0;
    }
    for (const auto& p : ports) {
        for (long nd : {p.n1, p.n2})
            if (nd && !compact.count(nd)) throw NetlistError("dangling node " + std::to_string(nd), p.line);
    }
    Netlist nl;
    int next = 1;
    for (auto& [label, id] : compact) {
        id = next++;
        nl.node_labels.push_back(label);
    }
    nl.node_count = static_cast<int>(compact.size());
    auto cid = [&](long label) { return label == 0 ? 0 : compact.at(label); };
    for (const auto& e : elems) nl.elements.push_back({e.kind, e.name, cid(e.n1), cid(e.n2), e.v});
    for (const auto& p : ports) nl.ports.push_back({p.kind, cid(p.n1), cid(p.n2)});

    if (have_form) {
        nl.formulation = form;
    } else {
        bool all_i = std::all_of(ports.begin(), ports.end(), [](auto& p) { return p.kind == SourceKind::Current; });
        bool all_v = std::all_of(ports.begin(), ports.end(), [](auto& p) { return p.kind == SourceKind::Voltage; });
        nl.formulation = all_i ? Formulation::Z : all_v ? Formulation::Y : Formulation::H;
    }
    validate(nl);
    return nl;
}

Netlist read_netlist_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw NetlistError("cannot open netlist '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_netlist(ss.str());
}

std::string netlist_to_text(const Netlist& nl) {
    auto label = [&](int id) -> long {
        if (id == 0) return 0;
        return id - 1 < static_cast<int>(nl.node_labels.size()) ? nl.node_labels[id - 1] : id;
    };
    auto shortest = [](double v) {
        char buf[64];
        auto r = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, r.ptr);
    };
    std::ostringstream os;
    for (const auto& e : nl.elements)
        os << e.name << ' ' << label(e.n1) << ' ' << label(e.n2) << ' ' << shortest(e.value) << '\n';
    os << ".ports";
    for (const auto& p : nl.ports)
        os << ' ' << (p.kind == SourceKind::Current ? 'I' : 'V') << ' ' << label(p.n1) << ' ' << label(p.n2);
    os << "\n.form " << to_string(nl.formulation) << '\n';
    return os.str();
}

Netlist with_formulation(Netlist nl, Formulation f) {
    nl.formulation = f;
    size_t m = nl.ports.size();
    for (size_t i = 0; i < m; ++i) {
        switch (f) {
            case Formulation::Z: nl.ports[i].kind = SourceKind::Current; break;
            case Formulation::Y: nl.ports[i].kind = SourceKind::Voltage; break;
            case Formulation::H: nl.ports[i].kind = i < m / 2 ? SourceKind::Current : SourceKind::Voltage; break;
        }
    }
    return nl;
}

DescriptorSystem assemble_descriptor(const Netlist& nl) {
    validate(nl);
    const int N = nl.node_count;
    int nL = 0;
    for (const auto& e : nl.elements)
        if (e.kind == ElementKind::L) ++nL;
    std::vector<const PortSpec*> iports, vports;
    for (const auto& p : nl.ports) (p.kind == SourceKind::Current ? iports : vports).push_back(&p);
    const int nV = static_cast<int>(vports.size());
    const int n = N + nL + nV;
    const int m = static_cast<int>(nl.ports.size());

    std::vector<Eigen::Triplet<double>> te, ta;
    auto stamp = [](std::vector<Eigen::Triplet<double>>& t, int a, int b, double v) {
        if (a > 0) t.emplace_back(a - 1, a - 1, v);
        if (b > 0) t.emplace_back(b - 1, b - 1, v);
        if (a > 0 && b > 0) {
            t.emplace_back(a - 1, b - 1, -v);
            t.emplace_back(b - 1, a - 1, -v);
        }
    };
    // incidence column entries: +1 at n1, -1 at n2; the blocks carry -A_L / -A_V
    auto couple = [&](int row_col, int a, int b) {
        if (a > 0) {
            ta.emplace_back(a - 1, row_col, -1.0);
            ta.emplace_back(row_col, a - 1, -1.0);
        }
        if (b > 0) {
            ta.emplace_back(b - 1, row_col, 1.0);
            ta.emplace_back(row_col, b - 1, 1.0);
        }
    };
    int li = 0;
    for (const auto& e : nl.elements) {
        switch (e.kind) {
            case ElementKind::R: stamp(ta, e.n1, e.n2, -1.0 / e.value); break;
            case ElementKind::C: stamp(te, e.n1, e.n2, e.value); break;
            case ElementKind::L: {
                int j = N + li++;
                te.emplace_back(j, j, -e.value);
                couple(j, e.n1, e.n2);
                break;
            }
        }
    }
    for (int k = 0; k < nV; ++k) couple(N + nL + k, vports[k]->n1, vports[k]->n2);

    DescriptorSystem sys;
    sys.formulation = nl.formulation;
    sys.nodes = N;
    sys.inductors = nL;
    sys.vsources = nV;
    sys.E0.resize(n, n);
    sys.A0.resize(n, n);
    sys.E0.setFromTriplets(te.begin(), te.end());
    sys.A0.setFromTriplets(ta.begin(), ta.end());
    sys.E0.prune(0.0);
    sys.A0.prune(0.0);
    sys.B0 = Mat::Zero(n, m);
    sys.C0 = Mat::Zero(m, n);
    sys.port_sign = Vec::Ones(m);

    // -A_I block for current ports; identity rows for voltage-source currents
    int col = 0;
    for (const auto* p : iports) {
        if (p->n1 > 0) sys.B0(p->n1 - 1, col) -= 1.0;
        if (p->n2 > 0) sys.B0(p->n2 - 1, col) += 1.0;
        ++col;
    }
    for (int k = 0; k < nV; ++k) sys.B0(N + nL + k, col + k) = 1.0;

    switch (nl.formulation) {
        case Formulation::Z: sys.C0 = sys.B0.transpose(); break;
        case Formulation::Y: sys.C0 = -sys.B0.transpose(); break;
        case Formulation::H: {
            int mi = static_cast<int>(iports.size());
            for (int i = mi; i < m; ++i) sys.port_sign(i) = -1.0;
            sys.C0 = sys.port_sign.asDiagonal() * sys.B0.transpose();
            break;
        }
    }
    return sys;
}

Netlist generate_ladder(int sections, Topology topo, double R, double L, double C, Formulation f) {
    if (sections < 1) throw std::invalid_argument("ladder needs at least one section");
    if (!(R > 0 && L > 0 && C > 0)) throw std::invalid_argument("ladder values must be positive");
    Netlist nl;
    int rc = 1, lc = 1, cc = 1;
    auto add = [&](ElementKind k, int a, int b, double v) {
        std::string name = k == ElementKind::R ? "R" + std::to_string(rc++)
                         : k == ElementKind::L ? "L" + std::to_string(lc++)
                                               : "C" + std::to_string(cc++);
        nl.elements.push_back({k, name, a, b, v});
    };
    add(ElementKind::R, 1, 0, R);
    for (int k = 0; k < sections; ++k) {
        int a = 2 * k + 1, b = 2 * k + 2, c = 2 * k + 3;
        if (topo == Topology::SeriesFirst) {
            add(ElementKind::R, a, b, R);
            add(ElementKind::L, b, c, L);
            add(ElementKind::C, c, 0, C);
        } else {
            add(ElementKind::C, a, 0, C);
            add(ElementKind::R, a, b, R);
            add(ElementKind::L, b, c, L);
        }
    }
    nl.node_count = 2 * sections + 1;
    for (int i = 1; i <= nl.node_count; ++i) nl.node_labels.push_back(i);
    int second = topo == Topology::SeriesFirst ? 2 : nl.node_count;
    nl.ports = {{SourceKind::Current, 1, 0}, {SourceKind::Current, second, 0}};
    return with_formulation(nl, f);
}

DescriptorSystem frequency_scaled(const DescriptorSystem& sys, double omega0) {
    DescriptorSystem s = sys;
    s.E0 *= omega0;
    return s;
}

double auto_omega0(const Netlist& nl) {
    double sl = 0, sc = 0;
    int nl_ = 0, nc = 0;
    for (const auto& e : nl.elements) {
        if (e.kind == ElementKind::L) { sl += std::log(e.value); ++nl_; }
        if (e.kind == ElementKind::C) { sc += std::log(e.value); ++nc; }
    }
    if (nl_ == 0 || nc == 0) return 1.0;
    double w = std::exp(-0.5 * (sl / nl_ + sc / nc));
    // round to a power of ten so unit-scale circuits stay exactly unscaled
    return std::pow(10.0, std::round(std::log10(w)));
}

}  // namespace prbt
