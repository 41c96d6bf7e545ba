#include "hinfpde/synth.hpp"

#include "hinfpde/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace hinfpde {

// --- controller families ----------------------------------------------------

CMatrix TridiagonalModel::response(const Eigen::VectorXd& x, cplx s) const {
    return controller_response(ControllerParams::from_vector(st_, x), s);
}

Eigen::VectorXcd TridiagonalModel::contract(const Eigen::VectorXd& x, cplx s, const Eigen::RowVectorXcd& r,
                                            const Eigen::VectorXcd& q) const {
    const ControllerParams k = ControllerParams::from_vector(st_, x);
    cplx phi = 1.0;
    if (st_.has_integrator) phi = 1.0 / (s + st_.eps);
    // beta = R B q,  alpha = r C R  (R = (sI - A)^{-1})
    const CMatrix beta = controller_resolvent_solve(k, s, k.b.cast<cplx>() * q);
    const CMatrix alpha_t = controller_resolvent_solve(k, s, (r * k.c.cast<cplx>()).transpose(), true);
    const int n = st_.n_k;
    Eigen::VectorXcd g(static_cast<Eigen::Index>(param_count()));
    Eigen::Index p = 0;
    for (int i = 0; i < n; ++i) g[p++] = phi * alpha_t(i, 0) * beta(i, 0);
    for (int i = 0; i + 1 < n; ++i) g[p++] = phi * alpha_t(i + 1, 0) * beta(i, 0);  // A(i+1, i)
    for (int i = 0; i + 1 < n; ++i) g[p++] = phi * alpha_t(i, 0) * beta(i + 1, 0);  // A(i, i+1)
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < st_.n_y; ++j) g[p++] = phi * alpha_t(i, 0) * q[j];
    for (int i = 0; i < st_.n_u; ++i)
        for (int j = 0; j < n; ++j) g[p++] = phi * r[i] * beta(j, 0);
    return g;
}

double TridiagonalModel::radius(const Eigen::VectorXd& x) const {
    return spectral_radius(ControllerParams::from_vector(st_, x));
}

double TridiagonalModel::damping(const Eigen::VectorXd& x) const {
    return min_damping(ControllerParams::from_vector(st_, x));
}

std::vector<ControllerModel::EigenPiece> TridiagonalModel::eigen_pieces(const Eigen::VectorXd& x, double delta,
                                                                          double mu, double margin) const {
    const ControllerParams k = ControllerParams::from_vector(st_, x);
    const ControllerSpectrum sp = controller_spectrum(k);
    const int n = st_.n_k;
    std::vector<EigenPiece> out;
    auto d_lambda = [&](Eigen::Index e) {
        // d lambda / d A_ij = left(e, i) * right(j, e), restricted to the tridiagonal pattern
        Eigen::VectorXcd g = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(param_count()));
        Eigen::Index p = 0;
        for (int i = 0; i < n; ++i) g[p++] = sp.left(e, i) * sp.right(i, e);
        for (int i = 0; i + 1 < n; ++i) g[p++] = sp.left(e, i + 1) * sp.right(i, e);
        for (int i = 0; i + 1 < n; ++i) g[p++] = sp.left(e, i) * sp.right(i + 1, e);
        return g;
    };
    for (Eigen::Index e = 0; e < sp.values.size(); ++e) {
        const cplx l = sp.values[e];
        const double mag = std::abs(l);
        if (l.imag() < 0) continue;  // conjugate partner carries the same information
        if (mag >= delta - margin * delta && mag > 0) {
            const Eigen::VectorXcd dl = d_lambda(e);
            EigenPiece pc{PieceKind::Radius, mag - delta, (std::conj(l) / mag * dl.array()).real().matrix()};
            out.push_back(std::move(pc));
        }
        const double z = eigen_damping(l);
        if (z <= mu + margin && mag > 0) {
            const Eigen::VectorXcd dl = d_lambda(e);
            // zeta = -Re(l)/|l|
            const Eigen::VectorXd dre = dl.real();
            const Eigen::VectorXd dmag = (std::conj(l) / mag * dl.array()).real().matrix();
            const Eigen::VectorXd dz = -dre / mag + l.real() / (mag * mag) * dmag;
            out.push_back(EigenPiece{PieceKind::Damping, mu - z, -dz});
        }
    }
    return out;
}

CMatrix StaticGainModel::response(const Eigen::VectorXd& x, cplx) const {
    CMatrix k(n_u_, n_y_);
    for (int i = 0; i < n_u_; ++i)
        for (int j = 0; j < n_y_; ++j) k(i, j) = x[i * n_y_ + j];
    return k;
}

Eigen::VectorXcd StaticGainModel::contract(const Eigen::VectorXd&, cplx, const Eigen::RowVectorXcd& r,
                                           const Eigen::VectorXcd& q) const {
    Eigen::VectorXcd g(n_u_ * n_y_);
    for (int i = 0; i < n_u_; ++i)
        for (int j = 0; j < n_y_; ++j) g[i * n_y_ + j] = r[i] * q[j];
    return g;
}

// --- problem ------------------------------------------------------------------

void SynthesisProblem::validate() const {
    if (!plant_D) throw ConfigError("synthesis problem has no Nyquist-grid plant samples");
    if (!(gamma >= 1.0)) throw ConfigError("gamma must be at least 1");
    if (!(delta > 0.0)) throw ConfigError("delta must be positive");
    if (!(mu > 0.0 && mu < 1.0)) throw ConfigError("mu must lie in (0, 1)");
    W1.validate();
    W2.validate();
    if (G_S.size() == 0 || G_T.size() == 0) throw ConfigError("empty objective grids");
    if (G_S.band_range(band_lo, std::numeric_limits<double>::infinity()).first >= G_S.size())
        throw ConfigError("objective band restriction leaves no Omega_S node");
}

SynthesisProblem make_problem(const std::function<CMatrix(cplx)>& plant, const FrequencyGrid& omega_S,
                              const FrequencyGrid& omega_T, const FrequencyGrid& omega_D, const FirstOrderWeight& W1,
                              const FirstOrderWeight& W2, double gamma, double delta, double mu, double band_lo,
                              const ControllerStructure& structure) {
    return make_problem(plant, sample_response(omega_S.nodes, plant), sample_response(omega_T.nodes, plant),
                        sample_response(omega_D.nodes, plant), W1, W2, gamma, delta, mu, band_lo, structure);
}

SynthesisProblem make_problem(const std::function<CMatrix(cplx)>& plant, SampledResponse G_S, SampledResponse G_T,
                              SampledResponse G_D, const FirstOrderWeight& W1, const FirstOrderWeight& W2,
                              double gamma, double delta, double mu, double band_lo,
                              const ControllerStructure& structure) {
    SynthesisProblem p;
    p.plant_D = std::make_shared<PlantSampler>(plant, std::move(G_D));
    p.G_S = std::move(G_S);
    p.G_T = std::move(G_T);
    p.W1 = W1;
    p.W2 = W2;
    p.gamma = gamma;
    p.delta = delta;
    p.mu = mu;
    p.band_lo = band_lo;
    p.structure = structure;
    p.validate();
    return p;
}

namespace {

enum class MapKind { W1S, W2T, SD };

// Closed-loop data for one grid at one parameter vector.
struct GridEval {
    MapKind kind;
    const SampledResponse* G = nullptr;
    std::size_t first = 0;  // nodes before `first` are outside the band
    std::vector<CMatrix> K;
    SampledResponse M;         // S or T
    std::vector<double> sigma;  // weighted sigma_max, indexed from `first`
    double peak = 0.0;
};

GridEval eval_grid(const ControllerModel& model, const Eigen::VectorXd& x, const SampledResponse& G, MapKind kind,
                   const std::optional<FirstOrderWeight>& w, double band_lo) {
    GridEval e;
    e.kind = kind;
    e.G = &G;
    e.first = G.band_range(band_lo, std::numeric_limits<double>::infinity()).first;
    const std::size_t n = G.size();
    const Eigen::Index dim = G.rows();
    e.K.resize(n);
    std::vector<double> om(G.omega().begin() + static_cast<std::ptrdiff_t>(e.first), G.omega().end());
    e.M = SampledResponse(om, dim, dim);
    const CMatrix eye = CMatrix::Identity(dim, dim);
    for (std::size_t k = e.first; k < n; ++k) {
        e.K[k] = model.response(x, cplx(0.0, G.omega(k)));
        const CMatrix L = G.at(k) * e.K[k];
        const Eigen::PartialPivLU<CMatrix> lu(eye + L);
        if (!(lu.rcond() > 1e-14))
            throw MarginalStabilityError("I + GK is singular on the synthesis grid", G.omega(k));
        const CMatrix S = lu.inverse();
        e.M.set(k - e.first, kind == MapKind::W2T ? CMatrix(L * S) : S);
    }
    e.sigma = weighted_sigma_max(e.M, w, 0, e.M.size());
    e.peak = e.sigma.empty() ? 0.0 : *std::max_element(e.sigma.begin(), e.sigma.end());
    return e;
}

struct Evaluation {
    Eigen::VectorXd x;
    GridEval S;
    GridEval T;
    GridEval D;
    double F = 0.0;
    double rho = 0.0;
    double zeta = 0.0;
};

Evaluation evaluate(const ControllerModel& model, const Eigen::VectorXd& x, const SynthesisProblem& prob) {
    Evaluation ev;
    ev.x = x;
    ev.S = eval_grid(model, x, prob.G_S, MapKind::W1S, prob.W1, prob.band_lo);
    ev.T = eval_grid(model, x, prob.G_T, MapKind::W2T, prob.W2, 0.0);
    ev.D = eval_grid(model, x, prob.plant_D->on_grid(), MapKind::SD, std::nullopt, 0.0);
    ev.F = std::max(ev.S.peak, ev.T.peak);
    ev.rho = model.radius(x);
    ev.zeta = model.damping(x);
    return ev;
}

struct SigmaPiece {
    double sigma;
    Eigen::VectorXd gradient;
};

// Weighted singular values of S or T at node `k` (index into the grid) that
// are >= floor, each with the gradient of its singular pair. A nearly
// repeated sigma_max is not differentiable, so all close pairs are returned.
std::vector<SigmaPiece> sigma_pieces(const ControllerModel& model, const Eigen::VectorXd& x, const GridEval& g,
                                     std::size_t k, const std::optional<FirstOrderWeight>& w, double floor) {
    const double omega = g.G->omega(k);
    const cplx s(0.0, omega);
    const CMatrix G = g.G->at(k);
    const CMatrix& K = g.K[k];
    const Eigen::Index dim = G.rows();
    const CMatrix L = G * K;
    const CMatrix S = (CMatrix::Identity(dim, dim) + L).inverse();
    const CMatrix M = g.kind == MapKind::W2T ? CMatrix(L * S) : S;
    const Eigen::JacobiSVD<CMatrix> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double scale = w ? std::abs(weight_eval(*w, s)) : 1.0;
    const double sign = g.kind == MapKind::W2T ? 1.0 : -1.0;
    const Eigen::VectorXd sv = scale * svd.singularValues();
    Eigen::Index top = 1;
    while (top < sv.size() && sv[top] >= floor) ++top;
    // pair (U z, V z) gives the derivative of z' U' M V z; unit vectors z in
    // the span of close pairs sample the subdifferential, including the
    // cross terms a diagonal choice would miss
    auto piece = [&](const Eigen::VectorXcd& z) {
        const Eigen::VectorXcd u = svd.matrixU().leftCols(top) * z;
        const Eigen::VectorXcd v = svd.matrixV().leftCols(top) * z;
        const Eigen::RowVectorXcd r = u.adjoint() * S * G;
        const Eigen::VectorXcd q = S * v;
        const double value = (z.cwiseAbs2().array() * sv.head(top).array()).sum();
        return SigmaPiece{value, sign * scale * model.contract(x, s, r, q).real()};
    };
    std::vector<SigmaPiece> out;
    for (Eigen::Index j = 0; j < top; ++j) out.push_back(piece(Eigen::VectorXcd::Unit(top, j)));
    const double h = std::sqrt(0.5);
    for (Eigen::Index j = 0; j < top; ++j) {
        for (Eigen::Index k = j + 1; k < top; ++k) {
            for (const cplx ph : {cplx(1, 0), cplx(-1, 0), cplx(0, 1), cplx(0, -1)}) {
                Eigen::VectorXcd z = Eigen::VectorXcd::Zero(top);
                z[j] = h;
                z[k] = h * ph;
                out.push_back(piece(z));
            }
        }
    }
    return out;
}

Eigen::VectorXd sigma_gradient(const ControllerModel& model, const Eigen::VectorXd& x, const GridEval& g,
                               std::size_t k, const std::optional<FirstOrderWeight>& w) {
    return sigma_pieces(model, x, g, k, w, std::numeric_limits<double>::infinity()).front().gradient;
}

std::vector<std::size_t> local_maxima(const std::vector<double>& v) {
    std::vector<std::size_t> out;
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i) {
        const bool left = i == 0 || v[i] >= v[i - 1];
        const bool right = i + 1 == n || v[i] > v[i + 1];
        if (left && right) out.push_back(i);
    }
    return out;
}

struct Bundle {
    std::vector<double> v;
    std::vector<Eigen::VectorXd> g;
};

constexpr std::size_t kMaxPiecesPerMap = 200;

void add_sigma_pieces(Bundle& b, const ControllerModel& model, const Evaluation& ev, const GridEval& g,
                      const std::optional<FirstOrderWeight>& w, double threshold, double ref, double scale) {
    std::vector<std::size_t> idx;
    for (std::size_t i : local_maxima(g.sigma))
        if (g.sigma[i] >= threshold) idx.push_back(i);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t c) { return g.sigma[a] > g.sigma[c]; });
    if (idx.size() > kMaxPiecesPerMap) idx.resize(kMaxPiecesPerMap);
    for (std::size_t i : idx) {
        for (const SigmaPiece& pc : sigma_pieces(model, ev.x, g, g.first + i, w, threshold)) {
            b.v.push_back(scale * (pc.sigma - ref));
            b.g.push_back(scale * pc.gradient);
        }
    }
}

Bundle build_bundle(const ControllerModel& model, const Evaluation& ev, const SynthesisProblem& prob,
                    const SynthesisOptions& opts, bool barrier) {
    Bundle b;
    const double F = ev.F;
    const double lo = (1.0 - opts.piece_window) * F;
    add_sigma_pieces(b, model, ev, ev.S, prob.W1, lo, F, 1.0);
    add_sigma_pieces(b, model, ev, ev.T, prob.W2, lo, F, 1.0);
    // constraint pieces are scaled to the objective so that both move together
    add_sigma_pieces(b, model, ev, ev.D, std::nullopt, (1.0 - opts.piece_window) * prob.gamma, prob.gamma,
                     F / prob.gamma);
    if (barrier) {
        // keep the sensitivity peak from growing: pieces are active at the current peak
        add_sigma_pieces(b, model, ev, ev.D, std::nullopt, 0.5 * ev.D.peak, ev.D.peak, F / prob.gamma);
    }
    for (const auto& pc : model.eigen_pieces(ev.x, prob.delta, prob.mu, opts.piece_window)) {
        const double scale = pc.kind == ControllerModel::PieceKind::Radius ? F / prob.delta : F;
        b.v.push_back(scale * pc.value);
        b.g.push_back(scale * pc.gradient);
    }
    return b;
}

// Cutting planes from a rejected trial point y, shifted to the current
// point and pushed down so none of them cuts off the current value.
void add_null_step_cuts(Bundle& b, const ControllerModel& model, const Evaluation& cur, const Evaluation& trial,
                        const SynthesisProblem& prob, const SynthesisOptions& opts, double dist2) {
    const Eigen::VectorXd dx = cur.x - trial.x;
    const double F = cur.F;
    const double shift = opts.downshift * F * dist2;
    auto add = [&](const GridEval& g, const std::optional<FirstOrderWeight>& w, double floor, double ref,
                   double now, double scale) {
        std::vector<std::size_t> idx;
        for (std::size_t i : local_maxima(g.sigma))
            if (g.sigma[i] >= floor) idx.push_back(i);
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t c) { return g.sigma[a] > g.sigma[c]; });
        if (idx.size() > 8) idx.resize(8);
        for (std::size_t i : idx) {
            for (const SigmaPiece& pc : sigma_pieces(model, trial.x, g, g.first + i, w, floor)) {
                const double lin = scale * (pc.sigma + pc.gradient.dot(dx) - ref);
                b.v.push_back(std::min(lin, scale * (now - ref) - shift));
                b.g.push_back(scale * pc.gradient);
            }
        }
    };
    add(trial.S, prob.W1, std::max(F, trial.S.peak * (1.0 - 1e-3)), F, F, 1.0);
    add(trial.T, prob.W2, std::max(F, trial.T.peak * (1.0 - 1e-3)), F, F, 1.0);
    if (trial.D.peak > prob.gamma)
        add(trial.D, std::nullopt, prob.gamma, prob.gamma, cur.D.peak, F / prob.gamma);
}

// min 0.5 l'Hl - v'l over the probability simplex by a primal active-set
// method. H is positive semidefinite; a tiny ridge keeps the KKT blocks
// nonsingular when pieces are affinely dependent.
Eigen::VectorXd simplex_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& v) {
    const Eigen::Index m = v.size();
    const double ridge = 1e-13 * (H.diagonal().cwiseAbs().maxCoeff() + 1e-300);
    Eigen::VectorXd lam = Eigen::VectorXd::Zero(m);
    Eigen::Index start = 0;
    v.maxCoeff(&start);
    lam[start] = 1.0;
    std::vector<Eigen::Index> W{start};
    for (int it = 0; it < 20 * static_cast<int>(m) + 100; ++it) {
        const auto w = static_cast<Eigen::Index>(W.size());
        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(w + 1, w + 1);
        Eigen::VectorXd rhs(w + 1);
        for (Eigen::Index i = 0; i < w; ++i) {
            for (Eigen::Index j = 0; j < w; ++j) kkt(i, j) = H(W[i], W[j]);
            kkt(i, i) += ridge;
            kkt(i, w) = -1.0;
            kkt(w, i) = 1.0;
            rhs[i] = v[W[i]];
        }
        rhs[w] = 1.0;
        const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
        double alpha = 1.0;
        Eigen::Index block = -1;
        for (Eigen::Index i = 0; i < w; ++i) {
            if (sol[i] >= 0) continue;
            const double li = lam[W[i]];
            const double a_i = li / (li - sol[i]);
            if (a_i < alpha) {
                alpha = a_i;
                block = i;
            }
        }
        for (Eigen::Index i = 0; i < w; ++i) lam[W[i]] += alpha * (sol[i] - lam[W[i]]);
        if (block >= 0) {
            lam[W[block]] = 0.0;
            W.erase(W.begin() + block);
            continue;
        }
        const Eigen::VectorXd g = H * lam - v;
        const double nu = sol[w];
        Eigen::Index enter = -1;
        double worst = -1e-12 * (std::abs(nu) + v.cwiseAbs().maxCoeff() + 1e-300);
        for (Eigen::Index j = 0; j < m; ++j) {
            if (std::find(W.begin(), W.end(), j) != W.end()) continue;
            if (g[j] - nu < worst) {
                worst = g[j] - nu;
                enter = j;
            }
        }
        if (enter < 0) break;
        W.push_back(enter);
    }
    return lam;
}

struct StepModel {
    Eigen::VectorXd d;
    double predicted = 0.0;  // model decrease, >= 0
};

// min_d max_i (v_i + g_i.d) + d' D^{-1} d / (2t), solved through its dual on
// the simplex. D is a diagonal metric.
StepModel proximal_step(const Bundle& b, double t, const Eigen::VectorXd& metric) {
    const auto m = static_cast<Eigen::Index>(b.v.size());
    const Eigen::Index p = b.g.front().size();
    Eigen::MatrixXd Gm(m, p);
    Eigen::VectorXd v(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        Gm.row(i) = b.g[static_cast<std::size_t>(i)].transpose();
        v[i] = b.v[static_cast<std::size_t>(i)];
    }
    const Eigen::MatrixXd GD = Gm * metric.asDiagonal();
    const Eigen::MatrixXd Q = GD * Gm.transpose();
    const Eigen::VectorXd lam = simplex_qp(t * Q, v);
    StepModel s;
    s.d = -t * (GD.transpose() * lam);
    s.predicted = -(v + Gm * s.d).maxCoeff();
    return s;
}

struct Candidate {
    bool ok = false;
    bool gate_failed = false;
    Evaluation ev;
};

std::function<CMatrix(cplx)> model_fn(const ControllerModel& model, const Eigen::VectorXd& x) {
    return [&model, x](cplx s) { return model.response(x, s); };
}

bool hard_constraints_hold(const Evaluation& ev, const SynthesisProblem& prob) {
    return ev.D.peak <= prob.gamma && ev.rho <= prob.delta && ev.zeta >= prob.mu;
}

SynthesisReport run(const ControllerModel& model, const SynthesisProblem& prob, const Eigen::VectorXd& x0,
                    const SynthesisOptions& opts, int iter_budget) {
    SynthesisReport rep;
    Evaluation cur = evaluate(model, x0, prob);
    if (!hard_constraints_hold(cur, prob))
        throw ConfigError("initial controller violates ||S|| <= gamma, rho <= delta or zeta >= mu");
    if (!stability_gate(*prob.plant_D, model_fn(model, x0)).stable)
        throw ConfigError("initial controller fails the Nyquist stability gate");

    double t = opts.initial_step;
    int barrier_left = 0;
    rep.status = SynthesisStatus::BudgetExhausted;
    int iter = 0;
    for (; iter < iter_budget; ++iter) {
        IterationRecord rec;
        rec.iter = iter;
        Bundle bundle = build_bundle(model, cur, prob, opts, barrier_left > 0);
        rec.pieces = static_cast<int>(bundle.v.size());
        rec.barrier = barrier_left > 0;
        bool accepted = false;
        bool stationary = false;
        const double small = opts.tol * std::max(cur.F, 1e-12);
        // steps measured relative to each parameter's size: the parametrization
        // is bilinear, so the linear model holds for small relative changes
        Eigen::VectorXd metric = Eigen::VectorXd::Ones(cur.x.size());
        if (opts.relative_metric)
            metric = model.parameter_scale(cur.x, opts.metric_floor).array().square();
        // a tiny model decrease may only mean a tiny step: widen t before calling it stationary
        for (int widen = 0; widen < 12 && t < opts.max_step; ++widen) {
            if (proximal_step(bundle, t, metric).predicted > small) break;
            t = std::min(10.0 * t, opts.max_step);
        }
        for (int h = 0; h <= opts.max_halvings; ++h) {
            const StepModel step = proximal_step(bundle, t, metric);
            rec.predicted = step.predicted;
            if (!(step.predicted > small)) {
                stationary = h == 0 || step.predicted <= 0.0;
                if (stationary) break;
                t *= 0.5;
                ++rec.backtracks;
                continue;
            }
            const Eigen::VectorXd y = cur.x + step.d;
            bool ok = false;
            Evaluation trial;
            try {
                trial = evaluate(model, y, prob);
                ok = hard_constraints_hold(trial, prob) && trial.F <= cur.F - 0.1 * step.predicted;
            } catch (const MarginalStabilityError&) {
                ok = false;
            } catch (const DomainError&) {
                ok = false;
            }
            if (!ok && trial.x.size() == y.size() && opts.null_step_cuts) {
                const double dist2 = step.d.cwiseQuotient(metric.cwiseSqrt()).squaredNorm();
                add_null_step_cuts(bundle, model, cur, trial, prob, opts, dist2);
            }
            if (ok) {
                if (stability_gate(*prob.plant_D, model_fn(model, y)).stable) {
                    rec.step = t;
                    cur = std::move(trial);
                    accepted = true;
                    if (h == 0) t = std::min(2.0 * t, opts.max_step);
                    break;
                }
                ++rec.gate_failures;
                barrier_left = opts.barrier_iterations;
            }
            t *= 0.5;
            ++rec.backtracks;
        }
        if (!accepted && barrier_left > 0 && !stationary) {
            barrier_left = 0;  // retry without the barrier before giving up
            t = opts.initial_step;
            continue;
        }
        if (barrier_left > 0 && accepted) --barrier_left;
        rec.F = cur.F;
        rec.s_norm = cur.D.peak;
        rec.rho = cur.rho;
        rec.zeta = cur.zeta;
        rep.log.push_back(rec);
        if (opts.on_iteration) opts.on_iteration(rec);
        if (!accepted) {
            rep.status = SynthesisStatus::Converged;
            ++iter;
            break;
        }
    }
    rep.iterations = iter;
    rep.x = cur.x;
    rep.objective = cur.F;
    rep.s_norm = cur.D.peak;
    rep.rho = cur.rho;
    rep.zeta = cur.zeta;
    rep.feasible = hard_constraints_hold(cur, prob);
    return rep;
}

}  // namespace

ObjectiveValue objective_and_subgradient(const ControllerModel& model, const Eigen::VectorXd& x,
                                         const SynthesisProblem& prob) {
    Evaluation ev = evaluate(model, x, prob);
    ObjectiveValue out;
    out.F = ev.F;
    out.g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.param_count()));
    int ties = 0;
    const double cut = ev.F * (1.0 - 1e-8);
    for (const GridEval* g : {&ev.S, &ev.T}) {
        const std::optional<FirstOrderWeight> w = g->kind == MapKind::W1S ? prob.W1 : prob.W2;
        for (std::size_t i = 0; i < g->sigma.size(); ++i) {
            if (g->sigma[i] < cut) continue;
            out.g += sigma_gradient(model, x, *g, g->first + i, w);
            ++ties;
        }
    }
    if (ties > 1) out.g /= ties;
    return out;
}

ObjectiveValue objective_and_subgradient(const ControllerParams& x, const SynthesisProblem& prob) {
    return objective_and_subgradient(TridiagonalModel(x.structure), x.pack(), prob);
}

double sensitivity_peak(const ControllerModel& model, const Eigen::VectorXd& x, const SynthesisProblem& prob) {
    return eval_grid(model, x, prob.plant_D->on_grid(), MapKind::SD, std::nullopt, 0.0).peak;
}

std::string to_string(SynthesisStatus s) {
    switch (s) {
        case SynthesisStatus::Converged: return "converged";
        case SynthesisStatus::BudgetExhausted: return "budget_exhausted";
        case SynthesisStatus::CertificationFailed: return "certification_failed";
    }
    return "unknown";
}

SynthesisReport solve(const ControllerModel& model, const SynthesisProblem& prob, const Eigen::VectorXd& x0,
                      const SynthesisOptions& opts) {
    prob.validate();
    if (static_cast<std::size_t>(x0.size()) != model.param_count())
        throw ConfigError("initial parameter vector has the wrong length");
    SynthesisReport rep = run(model, prob, x0, opts, opts.max_iter);

    GateOptions final_gate;
    final_gate.refine_factor = 8.0;
    rep.certificate = stability_gate(*prob.plant_D, model_fn(model, rep.x), final_gate);
    if (!rep.certificate.stable && !rep.certificate.omega.empty()) {
        // one restart on the refined Nyquist grid
        SynthesisProblem refined = prob;
        refined.plant_D = std::make_shared<PlantSampler>(prob.plant_D->plant(), rep.certificate.omega);
        const int left = std::max(opts.max_iter - rep.iterations, 0);
        Eigen::VectorXd start = x0;
        if (stability_gate(*refined.plant_D, model_fn(model, rep.x)).stable) start = rep.x;
        SynthesisReport again = run(model, refined, start, opts, left);
        again.log.insert(again.log.begin(), rep.log.begin(), rep.log.end());
        again.iterations += rep.iterations;
        again.restarted = true;
        again.certificate = stability_gate(*refined.plant_D, model_fn(model, again.x), final_gate);
        rep = std::move(again);
    }
    if (!rep.certificate.stable) rep.status = SynthesisStatus::CertificationFailed;
    if (const auto* tri = dynamic_cast<const TridiagonalModel*>(&model))
        rep.params = ControllerParams::from_vector(tri->structure(), rep.x);
    return rep;
}

SynthesisReport solve(const SynthesisProblem& prob, const ControllerParams& x0, const SynthesisOptions& opts) {
    x0.validate();
    if (!(x0.structure == prob.structure)) throw ConfigError("initial controller structure differs from the problem");
    return solve(TridiagonalModel(prob.structure), prob, x0.pack(), opts);
}

ControllerParams default_initializer(const SynthesisProblem& prob, std::uint64_t seed) {
    prob.validate();
    const TridiagonalModel model(prob.structure);
    for (int attempt = 0; attempt < 10; ++attempt) {
        std::mt19937_64 rng(seed + static_cast<std::uint64_t>(attempt));
        std::uniform_real_distribution<double> mag(0.5e-3, 1.5e-3);
        std::bernoulli_distribution sign(0.5);
        ControllerParams x(prob.structure);
        x.a_diag.setConstant(-1.0);
        for (Eigen::Index i = 0; i < x.b.size(); ++i) x.b.data()[i] = (sign(rng) ? 1.0 : -1.0) * mag(rng);
        for (Eigen::Index i = 0; i < x.c.size(); ++i) x.c.data()[i] = (sign(rng) ? 1.0 : -1.0) * mag(rng);
        try {
            const Eigen::VectorXd v = x.pack();
            if (sensitivity_peak(model, v, prob) > prob.gamma) continue;
            if (stability_gate(*prob.plant_D, model_fn(model, v)).stable) return x;
        } catch (const MarginalStabilityError&) {
        }
    }
    throw ConfigError("no stabilizing initial controller found in 10 seeds; check the plant and grids");
}

nlohmann::json to_json(const IterationRecord& r) {
    return nlohmann::json{{"iter", r.iter},         {"F", r.F},
                          {"s_norm", r.s_norm},     {"rho", r.rho},
                          {"zeta", r.zeta},         {"step", r.step},
                          {"backtracks", r.backtracks}, {"gate_failures", r.gate_failures},
                          {"pieces", r.pieces},     {"predicted", r.predicted},
                          {"barrier", r.barrier}};
}

nlohmann::json report_json(const SynthesisReport& r) {
    nlohmann::json log = nlohmann::json::array();
    for (const auto& rec : r.log) log.push_back(to_json(rec));
    std::vector<double> x(r.x.data(), r.x.data() + r.x.size());
    return nlohmann::json{{"status", to_string(r.status)},
                          {"feasible", r.feasible},
                          {"objective", r.objective},
                          {"s_norm_D", r.s_norm},
                          {"rho", r.rho},
                          {"zeta", r.zeta},
                          {"iterations", r.iterations},
                          {"restarted", r.restarted},
                          {"winding", r.certificate.winding},
                          {"certified", r.certificate.certified},
                          {"min_abs_f", r.certificate.min_abs_f},
                          {"min_sigma_min", r.certificate.min_sigma_min},
                          {"x", x},
                          {"log", log}};
}

}  // namespace hinfpde
