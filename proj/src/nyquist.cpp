#include "hinfpde/nyquist.hpp"

#include "hinfpde/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace hinfpde {

namespace {

constexpr double kMaxStepPhase = M_PI / 2.0;
constexpr std::size_t kMemoLimit = 200000;
constexpr int kPhaseRefineRounds = 12;

}  // namespace

WindingDetail winding_detail(const std::vector<double>& omega, const std::vector<cplx>& f) {
    if (omega.size() != f.size() || omega.size() < 2)
        throw ConfigError("winding number needs at least two samples, one per node");
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!(std::abs(f[i]) > 0) || !std::isfinite(std::abs(f[i]))) {
            std::ostringstream msg;
            msg << "det(I + GK) vanishes at omega = " << omega[i];
            throw MarginalStabilityError(msg.str(), omega[i]);
        }
    }
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < f.size(); ++i) {
        const double step = std::arg(f[i + 1] / f[i]);
        if (std::abs(step) > kMaxStepPhase) {
            std::ostringstream msg;
            msg << "Nyquist locus turns by more than pi/2 between omega = " << omega[i] << " and " << omega[i + 1];
            throw UndersamplingError(msg.str(), omega[i], omega[i + 1]);
        }
        sum += step;
    }
    const cplx f_hi = f.back();
    if (!(std::abs(f_hi - 1.0) < 0.5)) {
        std::ostringstream msg;
        msg << "det(I + GK) at omega_max = " << omega.back()
            << " is not close to 1; extend the Nyquist grid to higher frequencies";
        throw ConfigError(msg.str());
    }
    const cplx f_lo = f.front();
    // closing segments: conj(f_lo) -> f_lo at the origin end, f_hi -> conj(f_hi) at infinity
    const double low_gap = std::arg(f_lo / std::conj(f_lo));
    const double high_gap = std::arg(std::conj(f_hi) / f_hi);
    WindingDetail d;
    d.total_phase = 2.0 * sum + low_gap + high_gap;
    d.winding = static_cast<int>(std::lround(d.total_phase / (2.0 * M_PI)));
    return d;
}

PlantSampler::PlantSampler(std::function<CMatrix(cplx)> plant, const std::vector<double>& nodes)
    : PlantSampler(plant, sample_response(nodes, plant)) {}

PlantSampler::PlantSampler(std::function<CMatrix(cplx)> plant, SampledResponse samples)
    : plant_(std::move(plant)), grid_(std::move(samples)) {
    rows_ = grid_.rows();
    cols_ = grid_.cols();
    for (std::size_t k = 0; k < grid_.size(); ++k) grid_index_.emplace(grid_.omega(k), k);
}

CMatrix PlantSampler::at(double omega) const {
    const auto it = grid_index_.find(omega);
    if (it != grid_index_.end()) return grid_.at(it->second);
    {
        std::lock_guard<std::mutex> lock(mu_);
        const auto m = memo_.find(omega);
        if (m != memo_.end()) return m->second;
    }
    CMatrix g = plant_(cplx(0.0, omega));
    std::lock_guard<std::mutex> lock(mu_);
    if (memo_.size() >= kMemoLimit) memo_.clear();
    memo_.emplace(omega, g);
    return g;
}

std::vector<cplx> return_difference(const PlantSampler& G, const std::function<CMatrix(cplx)>& K,
                                    const std::vector<double>& nodes) {
    std::vector<cplx> f(nodes.size());
    const CMatrix eye = CMatrix::Identity(G.rows(), G.rows());
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const CMatrix L = G.at(nodes[k]) * K(cplx(0.0, nodes[k]));
        f[k] = (eye + L).determinant();
    }
    return f;
}

NyquistResult stability_gate(const PlantSampler& G, const ControllerParams& x, const GateOptions& opts) {
    return stability_gate(G, [&x](cplx s) { return controller_response(x, s); }, opts);
}

NyquistResult stability_gate(const PlantSampler& G, const std::function<CMatrix(cplx)>& K, const GateOptions& opts) {
    NyquistResult r;
    const ScalarEvaluator f_eval = [&](const std::vector<double>& w) { return return_difference(G, K, w); };
    try {
        std::vector<double> nodes = G.on_grid().omega();
        std::vector<cplx> f = f_eval(nodes);
        const std::size_t budget =
            static_cast<std::size_t>(opts.refine_factor * static_cast<double>(nodes.size()));

        // bisect steps that turn too far before any certificate work
        for (int round = 0; opts.refine && round < kPhaseRefineRounds; ++round) {
            std::vector<double> mids;
            for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
                if (f[i] == 0.0 || f[i + 1] == 0.0) break;
                if (std::abs(std::arg(f[i + 1] / f[i])) > kMaxStepPhase) mids.push_back(0.5 * (nodes[i] + nodes[i + 1]));
            }
            if (mids.empty() || nodes.size() + mids.size() > budget) break;
            const std::vector<cplx> fm = f_eval(mids);
            std::vector<double> nn;
            std::vector<cplx> nf;
            std::size_t p = 0;
            for (std::size_t q = 0; q < nodes.size(); ++q) {
                while (p < mids.size() && mids[p] < nodes[q]) {
                    nn.push_back(mids[p]);
                    nf.push_back(fm[p]);
                    ++p;
                }
                nn.push_back(nodes[q]);
                nf.push_back(f[q]);
            }
            nodes = std::move(nn);
            f = std::move(nf);
        }

        FrequencyGrid grid;
        grid.nodes = nodes;
        if (opts.refine) {
            // memoised evaluator: nodes already sampled are not recomputed
            std::map<double, cplx> known;
            for (std::size_t i = 0; i < nodes.size(); ++i) known.emplace(nodes[i], f[i]);
            const ScalarEvaluator cached = [&](const std::vector<double>& w) {
                std::vector<cplx> out(w.size());
                std::vector<double> miss;
                for (double v : w)
                    if (!known.count(v)) miss.push_back(v);
                const std::vector<cplx> fm = miss.empty() ? std::vector<cplx>{} : f_eval(miss);
                for (std::size_t i = 0; i < miss.size(); ++i) known.emplace(miss[i], fm[i]);
                for (std::size_t i = 0; i < w.size(); ++i) out[i] = known.at(w[i]);
                return out;
            };
            const RefineResult ref = refine_until_certified(cached, grid, std::max(budget, nodes.size()));
            nodes = ref.grid.nodes;
            f = ref.f;
            r.certified = ref.certified;
            if (!ref.certified) {
                const std::vector<std::uint8_t> active = near_origin_mask(f);
                const FirstOrderBound b = numeric_first_order_bound(cached, nodes, f, active);
                r.violations = certify_sampling(nodes, f, b, active).violations;
            }
        } else {
            const std::vector<std::uint8_t> active = near_origin_mask(f);
            const FirstOrderBound b = numeric_first_order_bound(f_eval, nodes, f, active);
            const CertifyResult c = certify_sampling(nodes, f, b, active);
            r.certified = c.ok;
            r.violations = c.violations;
        }

        r.omega = nodes;
        r.f = f;
        r.min_abs_f = std::numeric_limits<double>::infinity();
        for (const cplx& v : f) r.min_abs_f = std::min(r.min_abs_f, std::abs(v));
        r.min_sigma_min = std::numeric_limits<double>::infinity();
        const CMatrix eye = CMatrix::Identity(G.rows(), G.rows());
        for (double w : G.on_grid().omega()) {
            const CMatrix M = eye + G.at(w) * K(cplx(0.0, w));
            const Eigen::JacobiSVD<CMatrix> svd(M);
            r.min_sigma_min = std::min(r.min_sigma_min, svd.singularValues()(svd.singularValues().size() - 1));
        }

        const WindingDetail wd = winding_detail(nodes, f);
        r.winding = wd.winding;
        r.total_phase = wd.total_phase;
        r.stable = r.winding == opts.expected_winding && r.certified;
        if (!r.certified) r.message = "sampling certificate not established within the refinement budget";
    } catch (const MarginalStabilityError& e) {
        r.stable = false;
        r.message = e.what();
    } catch (const UndersamplingError& e) {
        r.stable = false;
        r.message = e.what();
    } catch (const DomainError& e) {
        r.stable = false;
        r.message = e.what();
    } catch (const ConfigError& e) {
        r.stable = false;
        r.message = e.what();
    }
    return r;
}

void write_nyquist_csv(const std::string& path, const std::vector<double>& omega, const std::vector<cplx>& f) {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw ConfigError("cannot open '" + path + "' for writing");
    std::fprintf(fp, "omega,re_f,im_f\n");
    for (std::size_t i = 0; i < omega.size(); ++i)
        std::fprintf(fp, "%.17g,%.17g,%.17g\n", omega[i], f[i].real(), f[i].imag());
    if (std::fclose(fp) != 0) throw ConfigError("failed writing '" + path + "'");
}

}  // namespace hinfpde
