#include "hinfpde/freq_grid.hpp"

#include "hinfpde/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hinfpde {

std::string to_string(Spacing s) { return s == Spacing::Linear ? "linear" : "log"; }

std::string to_string(GridRole r) {
    switch (r) {
        case GridRole::S: return "S";
        case GridRole::T: return "T";
        case GridRole::D: return "D";
    }
    return "D";
}

namespace {

std::vector<double> merge_sorted(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::vector<double> out;
    out.reserve(v.size());
    for (double w : v) {
        if (!out.empty() && w - out.back() <= kNodeMergeTol * std::abs(w)) continue;
        out.push_back(w);
    }
    return out;
}

GridRole role_from_string(const std::string& s) {
    if (s == "S") return GridRole::S;
    if (s == "T") return GridRole::T;
    if (s == "D" || s == "N") return GridRole::D;
    throw ConfigError("unknown grid role '" + s + "'");
}

}  // namespace

FrequencyGrid build_grid(std::vector<Band> bands, GridRole role) {
    if (bands.empty()) throw ConfigError("a frequency grid needs at least one band");
    std::sort(bands.begin(), bands.end(), [](const Band& a, const Band& b) { return a.lo < b.lo; });
    std::vector<double> nodes;
    for (std::size_t i = 0; i < bands.size(); ++i) {
        const Band& b = bands[i];
        if (!(b.lo > 0 && b.hi > b.lo)) throw ConfigError("band edges must satisfy 0 < lo < hi");
        if (b.count < 2) throw ConfigError("each band needs at least 2 nodes");
        if (i > 0 && b.lo < bands[i - 1].hi) throw ConfigError("frequency bands overlap");
        const int n = b.count;
        for (int k = 0; k < n; ++k) {
            const double t = static_cast<double>(k) / (n - 1);
            double w;
            if (k == 0) {
                w = b.lo;
            } else if (k == n - 1) {
                w = b.hi;
            } else if (b.spacing == Spacing::Linear) {
                w = b.lo + t * (b.hi - b.lo);
            } else {
                w = b.lo * std::pow(b.hi / b.lo, t);
            }
            nodes.push_back(w);
        }
    }
    FrequencyGrid g;
    g.role = role;
    g.bands = std::move(bands);
    g.nodes = merge_sorted(std::move(nodes));
    return g;
}

FrequencyGrid insert_nodes(const FrequencyGrid& g, const std::vector<double>& extra) {
    FrequencyGrid out = g;
    std::vector<double> all = g.nodes;
    for (double w : extra) {
        if (!(w > 0) || !std::isfinite(w)) throw ConfigError("grid nodes must be positive and finite");
        all.push_back(w);
    }
    out.nodes = merge_sorted(std::move(all));
    return out;
}

std::vector<Resonance> find_resonances(const std::function<double(double)>& magnitude, double lo, double hi,
                                       int scan) {
    if (!(lo > 0 && hi > lo) || scan < 3) throw ConfigError("resonance scan needs 0 < lo < hi and scan >= 3");
    std::vector<double> w(static_cast<std::size_t>(scan));
    std::vector<double> m(w.size());
    for (int k = 0; k < scan; ++k) {
        w[static_cast<std::size_t>(k)] = lo * std::pow(hi / lo, static_cast<double>(k) / (scan - 1));
        m[static_cast<std::size_t>(k)] = magnitude(w[static_cast<std::size_t>(k)]);
    }
    std::vector<Resonance> out;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (std::size_t k = 1; k + 1 < w.size(); ++k) {
        if (!(m[k] > m[k - 1] && m[k] >= m[k + 1])) continue;
        // golden section on log omega over the bracketing neighbours
        double a = std::log(w[k - 1]);
        double b = std::log(w[k + 1]);
        double c = b - g * (b - a);
        double d = a + g * (b - a);
        double fc = magnitude(std::exp(c));
        double fd = magnitude(std::exp(d));
        for (int it = 0; it < 80 && b - a > 1e-13; ++it) {
            if (fc > fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = magnitude(std::exp(c));
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = magnitude(std::exp(d));
            }
        }
        Resonance r;
        r.omega = std::exp(0.5 * (a + b));
        r.peak = magnitude(r.omega);
        // half-power point above the peak, by bisection out to the next scan node
        const double level = r.peak / std::sqrt(2.0);
        double lo_w = r.omega;
        double hi_w = w[k + 1];
        if (magnitude(hi_w) < level) {
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo_w + hi_w);
                (magnitude(mid) >= level ? lo_w : hi_w) = mid;
            }
            r.half_width = 0.5 * (lo_w + hi_w) - r.omega;
        } else {
            r.half_width = w[k + 1] - r.omega;  // broad peak: the scan spacing is fine enough
        }
        out.push_back(r);
    }
    return out;
}

std::vector<double> peak_cluster_nodes(const std::vector<Resonance>& peaks, double step, int half_count) {
    std::vector<double> out;
    for (const Resonance& p : peaks) {
        for (int k = -half_count; k <= half_count; ++k) {
            const double w = p.omega + k * step * p.half_width;
            if (w > 0) out.push_back(w);
        }
    }
    return out;
}

CertifyResult certify_sampling(const std::vector<double>& nodes, const std::vector<cplx>& f,
                               const FirstOrderBound& bound, const std::vector<std::uint8_t>& active) {
    if (f.size() != nodes.size()) throw ConfigError("certify_sampling: one value per node required");
    if (nodes.size() >= 2 && bound.values.size() != nodes.size() - 1)
        throw ConfigError("certify_sampling: one bound per interval required");
    CertifyResult r;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        if (!active.empty() && !active[i]) continue;
        const double lhs = bound.values[i] * (nodes[i + 1] - nodes[i]);
        const double rhs = std::abs(f[i]) + std::abs(f[i + 1]);
        if (!(lhs < rhs)) r.violations.push_back(i);
    }
    r.ok = r.violations.empty();
    return r;
}

std::vector<std::uint8_t> near_origin_mask(const std::vector<cplx>& f, double factor) {
    std::vector<std::uint8_t> mask(f.size() > 0 ? f.size() - 1 : 0, 0);
    double closest = std::numeric_limits<double>::infinity();
    for (const cplx& v : f) closest = std::min(closest, std::abs(v));
    for (std::size_t i = 0; i + 1 < f.size(); ++i)
        mask[i] = std::min(std::abs(f[i]), std::abs(f[i + 1])) < factor * closest ? 1 : 0;
    return mask;
}

FirstOrderBound numeric_first_order_bound(const ScalarEvaluator& f_eval, const std::vector<double>& nodes,
                                          const std::vector<cplx>& f, const std::vector<std::uint8_t>& active,
                                          double safety) {
    const std::size_t nint = nodes.size() > 0 ? nodes.size() - 1 : 0;
    FirstOrderBound b;
    b.values.assign(nint, 0.0);
    std::vector<double> probes;
    std::vector<std::size_t> owner;
    for (std::size_t i = 0; i < nint; ++i) {
        if (!active.empty() && !active[i]) continue;
        const double d = nodes[i + 1] - nodes[i];
        probes.push_back(nodes[i] + d / 3.0);
        probes.push_back(nodes[i] + 2.0 * d / 3.0);
        owner.push_back(i);
    }
    if (owner.empty()) return b;
    const std::vector<cplx> fp = f_eval(probes);
    if (fp.size() != probes.size()) throw NumericError("scalar evaluator returned the wrong number of values");
    for (std::size_t k = 0; k < owner.size(); ++k) {
        const std::size_t i = owner[k];
        const double w[4] = {nodes[i], probes[2 * k], probes[2 * k + 1], nodes[i + 1]};
        const cplx v[4] = {f[i], fp[2 * k], fp[2 * k + 1], f[i + 1]};
        double slope = 0.0;
        for (int q = 0; q < 3; ++q) slope = std::max(slope, std::abs(v[q + 1] - v[q]) / (w[q + 1] - w[q]));
        b.values[i] = std::max(safety * slope, std::numeric_limits<double>::min());
    }
    return b;
}

RefineResult refine_until_certified(const ScalarEvaluator& f_eval, const FrequencyGrid& grid, std::size_t max_nodes,
                                    BoundEstimator estimator) {
    if (max_nodes < grid.nodes.size()) throw ConfigError("max_nodes is below the current node count");
    if (!estimator) {
        estimator = [&f_eval](const std::vector<double>& nodes, const std::vector<cplx>& f,
                              const std::vector<std::uint8_t>& active) {
            return numeric_first_order_bound(f_eval, nodes, f, active);
        };
    }
    RefineResult r;
    r.grid = grid;
    r.f = f_eval(r.grid.nodes);
    constexpr int kMaxRounds = 64;
    for (r.rounds = 0; r.rounds < kMaxRounds; ++r.rounds) {
        const std::vector<std::uint8_t> active = near_origin_mask(r.f);
        const FirstOrderBound bound = estimator(r.grid.nodes, r.f, active);
        const CertifyResult cert = certify_sampling(r.grid.nodes, r.f, bound, active);
        if (cert.ok) {
            r.certified = true;
            return r;
        }
        const std::size_t room = max_nodes - r.grid.nodes.size();
        if (room == 0) {
            r.budget_exhausted = true;
            return r;
        }
        std::vector<double> mids;
        for (std::size_t i : cert.violations) {
            if (mids.size() == room) break;
            const double a = r.grid.nodes[i];
            const double b = r.grid.nodes[i + 1];
            const double m = 0.5 * (a + b);
            if (m - a <= kNodeMergeTol * m) continue;  // cannot split further: f vanishes here
            mids.push_back(m);
        }
        if (mids.empty()) {
            r.budget_exhausted = true;
            return r;
        }
        const std::vector<cplx> fm = f_eval(mids);
        // merge the new samples into the sorted node/value arrays
        std::vector<double> nodes;
        std::vector<cplx> vals;
        nodes.reserve(r.grid.nodes.size() + mids.size());
        vals.reserve(nodes.capacity());
        std::size_t p = 0;
        for (std::size_t q = 0; q < r.grid.nodes.size(); ++q) {
            while (p < mids.size() && mids[p] < r.grid.nodes[q]) {
                nodes.push_back(mids[p]);
                vals.push_back(fm[p]);
                ++p;
            }
            nodes.push_back(r.grid.nodes[q]);
            vals.push_back(r.f[q]);
        }
        r.grid.nodes = std::move(nodes);
        r.f = std::move(vals);
    }
    r.budget_exhausted = true;
    return r;
}

void to_json(nlohmann::json& j, const Band& b) {
    j = nlohmann::json{{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}, {"spacing", to_string(b.spacing)}};
}

void from_json(const nlohmann::json& j, Band& b) {
    for (const auto& [key, _] : j.items())
        if (key != "lo" && key != "hi" && key != "count" && key != "spacing")
            throw ConfigError("unknown band key '" + key + "'");
    b.lo = j.at("lo").get<double>();
    b.hi = j.at("hi").get<double>();
    b.count = j.at("count").get<int>();
    const std::string sp = j.value("spacing", std::string("linear"));
    if (sp == "linear") {
        b.spacing = Spacing::Linear;
    } else if (sp == "log") {
        b.spacing = Spacing::Log;
    } else {
        throw ConfigError("spacing must be 'linear' or 'log'");
    }
}

void to_json(nlohmann::json& j, const FrequencyGrid& g) {
    j = nlohmann::json{{"role", to_string(g.role)}, {"bands", g.bands}, {"nodes", g.nodes}};
}

void from_json(const nlohmann::json& j, FrequencyGrid& g) {
    g.role = role_from_string(j.value("role", std::string("D")));
    g.bands = j.at("bands").get<std::vector<Band>>();
    if (j.contains("nodes")) {
        std::vector<double> nodes = j.at("nodes").get<std::vector<double>>();
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (!(nodes[i] > 0) || (i > 0 && !(nodes[i] > nodes[i - 1])))
                throw ConfigError("grid nodes must be positive and strictly increasing");
        g.nodes = std::move(nodes);
    } else {
        g = build_grid(g.bands, g.role);
    }
}

}  // namespace hinfpde
