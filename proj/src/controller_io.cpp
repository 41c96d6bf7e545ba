#include "hinfpde/controller_io.hpp"

#include "hinfpde/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hinfpde {

using nlohmann::json;

namespace {

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

json rows_of(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(to_vec(m.row(i).transpose()));
    return out;
}

Eigen::MatrixXd matrix_from(const json& j, Eigen::Index rows, Eigen::Index cols, const char* name) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
        throw ConfigError(std::string("controller field '") + name + "' has the wrong number of rows");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto row = j.at(static_cast<std::size_t>(i)).get<std::vector<double>>();
        if (static_cast<Eigen::Index>(row.size()) != cols)
            throw ConfigError(std::string("controller field '") + name + "' has the wrong number of columns");
        for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = row[static_cast<std::size_t>(k)];
    }
    return m;
}

Eigen::VectorXd vector_from(const json& j, Eigen::Index n, const char* name) {
    const auto v = j.get<std::vector<double>>();
    if (static_cast<Eigen::Index>(v.size()) != n)
        throw ConfigError(std::string("controller field '") + name + "' has the wrong length");
    return Eigen::Map<const Eigen::VectorXd>(v.data(), n);
}

void check_keys(const json& j, std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError("unknown controller key '" + key + "'");
    }
}

// Real coefficients of prod (s - r_i), highest power first.
std::vector<double> poly_from_roots(const Eigen::VectorXcd& roots) {
    std::vector<cplx> c{1.0};
    for (Eigen::Index i = 0; i < roots.size(); ++i) {
        std::vector<cplx> next(c.size() + 1, 0.0);
        for (std::size_t k = 0; k < c.size(); ++k) {
            next[k] += c[k];
            next[k + 1] -= roots[i] * c[k];
        }
        c = std::move(next);
    }
    std::vector<double> out(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) out[k] = c[k].real();
    return out;
}

cplx polyval(const std::vector<double>& p, cplx s) {
    cplx v = 0.0;
    for (double c : p) v = v * s + c;
    return v;
}

std::vector<double> strip_leading_zeros(std::vector<double> p) {
    std::size_t k = 0;
    while (k + 1 < p.size() && p[k] == 0.0) ++k;
    return {p.begin() + static_cast<std::ptrdiff_t>(k), p.end()};
}

}  // namespace

json controller_to_json(const ControllerParams& x) {
    x.validate();
    const ControllerStructure& st = x.structure;
    return {{"form", "state_space"},
            {"structure",
             {{"n_k", st.n_k},
              {"n_y", st.n_y},
              {"n_u", st.n_u},
              {"eps", st.eps},
              {"has_integrator", st.has_integrator}}},
            {"a_diag", to_vec(x.a_diag)},
            {"a_sub", to_vec(x.a_sub)},
            {"a_super", to_vec(x.a_super)},
            {"b", rows_of(x.b)},
            {"c", rows_of(x.c)}};
}

ControllerParams controller_from_json(const json& j) {
    try {
        if (!j.is_object()) throw ConfigError("a controller must be a JSON object");
        const std::string form = j.value("form", std::string("state_space"));
        if (form == "transfer_function") {
            check_keys(j, {"form", "numerator", "denominator"});
            return realize_transfer_function(j.at("numerator").get<std::vector<double>>(),
                                             j.at("denominator").get<std::vector<double>>());
        }
        if (form != "state_space") throw ConfigError("controller form must be 'state_space' or 'transfer_function'");
        check_keys(j, {"form", "structure", "a_diag", "a_sub", "a_super", "b", "c"});
        const json& s = j.at("structure");
        for (const auto& [key, _] : s.items())
            if (key != "n_k" && key != "n_y" && key != "n_u" && key != "eps" && key != "has_integrator")
                throw ConfigError("unknown controller structure key '" + key + "'");
        ControllerStructure st;
        st.n_k = s.at("n_k").get<int>();
        st.n_y = s.at("n_y").get<int>();
        st.n_u = s.at("n_u").get<int>();
        st.eps = s.value("eps", 1e-3);
        st.has_integrator = s.value("has_integrator", false);
        if (st.n_k < 1 || st.n_y < 1 || st.n_u < 1) throw ConfigError("controller dimensions must be positive");
        ControllerParams x(st);
        x.a_diag = vector_from(j.at("a_diag"), st.n_k, "a_diag");
        x.a_sub = vector_from(j.at("a_sub"), st.n_k - 1, "a_sub");
        x.a_super = vector_from(j.at("a_super"), st.n_k - 1, "a_super");
        x.b = matrix_from(j.at("b"), st.n_k, st.n_y, "b");
        x.c = matrix_from(j.at("c"), st.n_u, st.n_k, "c");
        x.validate();
        return x;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed controller: ") + e.what());
    }
}

ControllerParams load_controller(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read controller '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
    }
    return controller_from_json(j);
}

void save_controller(const std::string& path, const ControllerParams& x) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write controller '" + path + "'");
    out << controller_to_json(x).dump(2) << "\n";
    if (!out) throw ConfigError("failed writing '" + path + "'");
}

ControllerParams realize_transfer_function(const std::vector<double>& numerator,
                                           const std::vector<double>& denominator) {
    const std::vector<double> num = strip_leading_zeros(numerator);
    const std::vector<double> den = strip_leading_zeros(denominator);
    if (den.size() < 2 || den.front() == 0.0) throw ConfigError("denominator must have degree >= 1");
    if (num.empty() || num.size() >= den.size()) throw ConfigError("transfer function must be strictly proper");
    for (double v : num)
        if (!std::isfinite(v)) throw ConfigError("non-finite numerator coefficient");
    for (double v : den)
        if (!std::isfinite(v)) throw ConfigError("non-finite denominator coefficient");

    const auto n = static_cast<Eigen::Index>(den.size() - 1);
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) companion(0, k) = -den[static_cast<std::size_t>(k + 1)] / den[0];
    for (Eigen::Index k = 1; k < n; ++k) companion(k, k - 1) = 1.0;
    Eigen::VectorXcd poles = Eigen::EigenSolver<Eigen::MatrixXd>(companion, false).eigenvalues();

    std::vector<cplx> p(poles.data(), poles.data() + n);
    std::sort(p.begin(), p.end(), [](cplx a, cplx b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() > b.imag();
    });
    for (std::size_t i = 0; i + 1 < p.size(); ++i)
        for (std::size_t k = i + 1; k < p.size(); ++k)
            if (std::abs(p[i] - p[k]) <= 1e-9 * std::max(1.0, std::abs(p[i])))
                throw ConfigError("repeated poles are not supported by the modal realization");

    // D'(s) for residues N(p)/D'(p)
    std::vector<double> dden(den.size() - 1);
    for (std::size_t k = 0; k + 1 < den.size(); ++k)
        dden[k] = den[k] * static_cast<double>(den.size() - 1 - k);

    ControllerStructure st;
    st.n_k = static_cast<int>(n);
    st.has_integrator = false;
    ControllerParams x(st);
    x.a_sub.setZero();
    x.a_super.setZero();
    Eigen::Index i = 0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        const cplx lam = p[k];
        const cplx r = polyval(num, lam) / polyval(dden, lam);
        if (std::abs(lam.imag()) <= 1e-12 * std::max(1.0, std::abs(lam))) {
            const double rr = r.real();
            const double g = std::sqrt(std::abs(rr));
            x.a_diag[i] = lam.real();
            x.b(i, 0) = g;
            x.c(0, i) = rr < 0 ? -g : g;
            ++i;
            continue;
        }
        if (lam.imag() < 0) continue;  // the partner of an upper half-plane pole already placed
        // r/(s-l) + conj: block [[s, w], [-w, s]] with B = [0, 1], C = [-2 Im r, 2 Re r]
        const double sig = lam.real();
        const double w = lam.imag();
        double c1 = -2.0 * r.imag();
        double c2 = 2.0 * r.real();
        const double g = std::sqrt(std::max(std::hypot(c1, c2), 1e-300));
        x.a_diag[i] = sig;
        x.a_diag[i + 1] = sig;
        x.a_super[i] = w;
        x.a_sub[i] = -w;
        x.b(i, 0) = 0.0;
        x.b(i + 1, 0) = g;
        x.c(0, i) = c1 / g;
        x.c(0, i + 1) = c2 / g;
        i += 2;
    }
    if (i != n) throw ConfigError("complex poles of a real transfer function must come in conjugate pairs");
    x.validate();
    return x;
}

PolynomialPair transfer_function(const ControllerParams& x) {
    x.validate();
    if (x.structure.n_u != 1 || x.structure.n_y != 1)
        throw ConfigError("a printable transfer function needs a SISO controller");
    const Eigen::MatrixXd A = x.state_matrix();
    const Eigen::MatrixXd ABC = A - x.b * x.c;
    // det(sI - A + BC) - det(sI - A) = C adj(sI - A) B for one input and one output
    const std::vector<double> pa = poly_from_roots(Eigen::EigenSolver<Eigen::MatrixXd>(A, false).eigenvalues());
    const std::vector<double> pb = poly_from_roots(Eigen::EigenSolver<Eigen::MatrixXd>(ABC, false).eigenvalues());
    std::vector<double> num(pa.size());
    for (std::size_t k = 0; k < pa.size(); ++k) num[k] = pb[k] - pa[k];
    num.erase(num.begin());  // the s^n terms cancel
    PolynomialPair tf;
    tf.numerator = strip_leading_zeros(num);
    tf.denominator = pa;
    if (x.structure.has_integrator) {
        std::vector<double> d(pa.size() + 1, 0.0);
        for (std::size_t k = 0; k < pa.size(); ++k) {
            d[k] += pa[k];
            d[k + 1] += x.structure.eps * pa[k];
        }
        tf.denominator = d;
    }
    return tf;
}

std::string format_transfer_function(const PolynomialPair& tf) {
    auto poly = [](const std::vector<double>& p) {
        std::ostringstream os;
        const std::size_t deg = p.size() - 1;
        bool first = true;
        for (std::size_t k = 0; k < p.size(); ++k) {
            const double c = p[k];
            if (c == 0.0) continue;
            const std::size_t e = deg - k;
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.6g", std::abs(c));
            os << (first ? (c < 0 ? "-" : "") : (c < 0 ? " - " : " + ")) << buf;
            if (e >= 1) os << " s";
            if (e >= 2) os << "^" << e;
            first = false;
        }
        if (first) os << "0";
        return os.str();
    };
    return "(" + poly(tf.numerator) + ") / (" + poly(tf.denominator) + ")";
}

}  // namespace hinfpde
