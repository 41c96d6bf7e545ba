#include "hinfpde/simulate.hpp"

#include "hinfpde/errors.hpp"
#include "hinfpde/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <sstream>

namespace hinfpde {

void BromwichOptions::validate() const {
    if (!(a > 0)) throw ConfigError("contour shift a must be positive");
    if (!(omega_max > 0)) throw ConfigError("omega_max must be positive");
    if (nodes < 3) throw ConfigError("the trapezoid rule needs at least 3 nodes");
}

namespace {

// Samples of P = (F(s) + conj F(conj s)) / 2 and M = (F(s) - conj F(conj s)) / 2
// on s_k = a + j k d_omega.
struct LineSamples {
    std::vector<cplx> P;
    std::vector<cplx> M;
    double d_omega = 0.0;
};

InversionResult invert_samples(const LineSamples& ls, const BromwichOptions& opts, const std::vector<double>& t) {
    const std::size_t n = ls.P.size();
    const double dw = ls.d_omega;
    for (double ti : t)
        if (!(ti >= 0)) throw ConfigError("time grid must be non-negative");

    double peak = 0.0;
    for (const cplx& v : ls.P) peak = std::max(peak, std::abs(v));
    if (opts.check_decay && peak > 0 && !(std::abs(ls.P.back()) < opts.decay_ratio * peak)) {
        std::ostringstream msg;
        msg << "transform has not decayed at omega_max = " << opts.omega_max << " (|F| = " << std::abs(ls.P.back())
            << ", peak " << peak << "); raise omega_max";
        throw NumericError(msg.str());
    }

    // c1/s + c2/s^2 matched at omega_max and omega_max / 2, real coefficients
    double c1 = 0.0;
    double c2 = 0.0;
    if (opts.subtract_asymptote) {
        const std::size_t k1 = n - 1;
        const std::size_t k2 = (n - 1) / 2;
        Eigen::Matrix<double, 4, 2> A;
        Eigen::Vector4d b;
        int row = 0;
        for (std::size_t k : {k1, k2}) {
            const cplx s(opts.a, static_cast<double>(k) * dw);
            const cplx e1 = 1.0 / s;
            const cplx e2 = e1 * e1;
            A.row(row) << e1.real(), e2.real();
            b[row++] = ls.P[k].real();
            A.row(row) << e1.imag(), e2.imag();
            b[row++] = ls.P[k].imag();
        }
        const Eigen::Vector2d c = A.colPivHouseholderQr().solve(b);
        c1 = c[0];
        c2 = c[1];
    }

    std::vector<double> pr(n), pi(n), mr(n), mi(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double w = (k == 0 || k + 1 == n) ? 0.5 * dw : dw;
        const cplx s(opts.a, static_cast<double>(k) * dw);
        const cplx p = ls.P[k] - (c1 / s + c2 / (s * s));
        pr[k] = w * p.real();
        pi[k] = w * p.imag();
        mr[k] = w * ls.M[k].real();
        mi[k] = w * ls.M[k].imag();
    }
    const auto& kt = kernels::active();
    std::vector<cplx> sp(t.size()), sm(t.size());
    kt.exp_sum(pr.data(), pi.data(), n, dw, t.data(), t.size(), sp.data());
    kt.exp_sum(mr.data(), mi.data(), n, dw, t.data(), t.size(), sm.data());

    InversionResult r;
    r.y.resize(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double g = std::exp(opts.a * t[i]) / M_PI;
        r.y[i] = g * sp[i].real() + c1 + c2 * t[i];
        r.imag_residue = std::max(r.imag_residue, std::abs(g * sm[i].imag()));
    }
    return r;
}

}  // namespace

InversionResult bromwich_invert(const std::function<cplx(cplx)>& F, const BromwichOptions& opts,
                                const std::vector<double>& t) {
    opts.validate();
    const auto n = static_cast<std::size_t>(opts.nodes);
    LineSamples ls;
    ls.d_omega = opts.omega_max / static_cast<double>(n - 1);
    ls.P.resize(n);
    ls.M.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double w = static_cast<double>(k) * ls.d_omega;
        const cplx up = F(cplx(opts.a, w));
        const cplx down = std::conj(F(cplx(opts.a, -w)));
        if (!std::isfinite(up.real()) || !std::isfinite(up.imag()))
            throw NumericError("transform evaluated to NaN or infinity on the contour");
        ls.P[k] = 0.5 * (up + down);
        ls.M[k] = 0.5 * (up - down);
    }
    return invert_samples(ls, opts, t);
}

std::string StepResponse::label(std::size_t c) const {
    return "u" + std::to_string(channels[c].first + 1) + "_to_y" + std::to_string(channels[c].second + 1);
}

StepResponse closed_loop_step(const std::function<CMatrix(cplx)>& plant, const std::function<CMatrix(cplx)>& K,
                              const std::vector<double>& t, const BromwichOptions& opts) {
    opts.validate();
    if (t.empty()) throw ConfigError("empty time grid");
    const auto n = static_cast<std::size_t>(opts.nodes);
    const double dw = opts.omega_max / static_cast<double>(n - 1);
    auto T_at = [&](cplx s) {
        const CMatrix L = plant(s) * K(s);
        const Eigen::Index m = L.rows();
        return CMatrix(L * (CMatrix::Identity(m, m) + L).inverse());
    };
    const CMatrix T0 = T_at(cplx(opts.a, 0.0));
    const Eigen::Index ny = T0.rows();
    const Eigen::Index nu = T0.cols();
    std::vector<CMatrix> up(n), down(n);
    std::exception_ptr failure;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(n); ++k) {
        try {
            const double w = static_cast<double>(k) * dw;
            up[static_cast<std::size_t>(k)] = T_at(cplx(opts.a, w));
            down[static_cast<std::size_t>(k)] = T_at(cplx(opts.a, -w));
        } catch (...) {
#pragma omp critical(hinfpde_step_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);

    StepResponse r;
    r.t = t;
    for (Eigen::Index i = 0; i < nu; ++i) {
        for (Eigen::Index j = 0; j < ny; ++j) {
            LineSamples ls;
            ls.d_omega = dw;
            ls.P.resize(n);
            ls.M.resize(n);
            for (std::size_t k = 0; k < n; ++k) {
                const cplx s(opts.a, static_cast<double>(k) * dw);
                const cplx fu = up[k](j, i) / s;
                const cplx fd = std::conj(down[k](j, i) / std::conj(s));
                ls.P[k] = 0.5 * (fu + fd);
                ls.M[k] = 0.5 * (fu - fd);
            }
            InversionResult inv = invert_samples(ls, opts, t);
            r.channels.emplace_back(static_cast<int>(i), static_cast<int>(j));
            r.y.push_back(std::move(inv.y));
            r.imag_residue = std::max(r.imag_residue, inv.imag_residue);
        }
    }
    return r;
}

ResponseMetrics response_metrics(const std::vector<double>& t, const std::vector<double>& y,
                                 std::optional<double> final_value) {
    if (t.size() != y.size() || t.empty()) throw ConfigError("response_metrics needs matching non-empty series");
    const std::size_t n = y.size();
    const std::size_t tail = n - std::max<std::size_t>(n / 10, 1);
    ResponseMetrics m;
    if (final_value) {
        m.final_value = *final_value;
    } else {
        double sum = 0.0;
        for (std::size_t i = tail; i < n; ++i) sum += y[i];
        m.final_value = sum / static_cast<double>(n - tail);
    }
    const double yf = m.final_value;
    const double band = 0.02 * std::abs(yf);
    for (std::size_t i = tail; i < n; ++i)
        if (std::abs(y[i] - yf) > band) m.settled = false;

    // first time y reaches level * yf, linearly interpolated
    auto crossing = [&](double level) {
        const double target = level * yf;
        const double sgn = yf >= 0 ? 1.0 : -1.0;
        if (sgn * y[0] >= sgn * target) return t[0];
        for (std::size_t i = 1; i < n; ++i) {
            if (sgn * y[i] >= sgn * target) {
                const double f = (target - y[i - 1]) / (y[i] - y[i - 1]);
                return t[i - 1] + f * (t[i] - t[i - 1]);
            }
        }
        return t.back();
    };
    const double t10 = crossing(0.1);
    m.t90 = crossing(0.9);
    m.rise_10_90 = m.t90 - t10;

    m.settling_2pct = t[0];
    for (std::size_t i = n; i-- > 0;) {
        if (std::abs(y[i] - yf) > band) {
            m.settling_2pct = i + 1 < n ? t[i + 1] : t[i];
            break;
        }
    }
    double peak = y[0];
    for (double v : y) peak = yf >= 0 ? std::max(peak, v) : std::min(peak, v);
    m.overshoot = yf != 0.0 ? std::max(0.0, (peak - yf) / yf) : 0.0;
    return m;
}

double peak_coupling(const StepResponse& r) {
    double worst = 0.0;
    for (std::size_t c = 0; c < r.channels.size(); ++c) {
        if (r.channels[c].first == r.channels[c].second) continue;
        for (double v : r.y[c]) worst = std::max(worst, std::abs(v));
    }
    return worst;
}

std::vector<double> time_grid(double t_max, int samples) {
    if (!(t_max > 0) || samples < 2) throw ConfigError("time grid needs t_max > 0 and at least 2 samples");
    std::vector<double> t(static_cast<std::size_t>(samples));
    for (int i = 0; i < samples; ++i) t[static_cast<std::size_t>(i)] = t_max * i / (samples - 1);
    return t;
}

void write_step_csv(const std::string& path, const StepResponse& r) {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw ConfigError("cannot open '" + path + "' for writing");
    std::fprintf(fp, "t");
    for (std::size_t c = 0; c < r.channels.size(); ++c) std::fprintf(fp, ",%s", r.label(c).c_str());
    std::fprintf(fp, "\n");
    for (std::size_t i = 0; i < r.t.size(); ++i) {
        std::fprintf(fp, "%.17g", r.t[i]);
        for (const auto& series : r.y) std::fprintf(fp, ",%.17g", series[i]);
        std::fprintf(fp, "\n");
    }
    if (std::fclose(fp) != 0) throw ConfigError("failed writing '" + path + "'");
}

nlohmann::json metrics_json(const StepResponse& r) {
    nlohmann::json channels = nlohmann::json::object();
    for (std::size_t c = 0; c < r.channels.size(); ++c) {
        if (r.channels[c].first != r.channels[c].second) continue;
        const ResponseMetrics m = response_metrics(r.t, r.y[c]);
        channels[r.label(c)] = {{"final_value", m.final_value}, {"rise_10_90", m.rise_10_90},
                                {"t90", m.t90},                 {"settling_2pct", m.settling_2pct},
                                {"overshoot", m.overshoot},     {"settled", m.settled}};
    }
    return nlohmann::json{{"channels", channels}, {"peak_coupling", peak_coupling(r)},
                          {"imag_residue", r.imag_residue}};
}

}  // namespace hinfpde
