#include "heatbesov/kernel.hpp"

#include "heatbesov/io.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

namespace heatbesov {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

SpMat lazy_walk_matrix(const DiscreteSpace& space, double laziness) {
    const auto n = static_cast<Eigen::Index>(space.size());
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t x = 0; x < space.size(); ++x) {
        const auto& nb = space.neighbors()[x];
        trip.emplace_back(static_cast<int>(x), static_cast<int>(x), 1.0 - laziness);
        for (std::size_t y : nb) {
            trip.emplace_back(static_cast<int>(x), static_cast<int>(y), laziness / static_cast<double>(nb.size()));
        }
    }
    SpMat P(n, n);
    P.setFromTriplets(trip.begin(), trip.end());
    return P;
}

// Dense P^k for each k in `steps` (sorted ascending, positive).
// Large increments use cached squarings of P^32, the remainder is stepped with the sparse P.
std::vector<Eigen::MatrixXd> walk_powers(const SpMat& P, const std::vector<long>& steps) {
    constexpr long kChunk = 32;
    const Eigen::Index n = P.rows();
    std::vector<Eigen::MatrixXd> chunk;
    Eigen::MatrixXd cur = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd tmp(n, n);
    bool identity = true;
    long cur_steps = 0;

    auto sparse_steps = [&](Eigen::MatrixXd& M, long k) {
        for (long i = 0; i < k; ++i) {
            tmp.noalias() = P * M;
            M.swap(tmp);
        }
    };

    std::vector<Eigen::MatrixXd> out;
    out.reserve(steps.size());
    for (long target : steps) {
        const long delta = target - cur_steps;
        const long hi = delta / kChunk;
        const long lo = delta % kChunk;
        for (int k = 0; (hi >> k) != 0; ++k) {
            if (((hi >> k) & 1) == 0) continue;
            while (chunk.size() <= static_cast<std::size_t>(k)) {
                if (chunk.empty()) {
                    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n);
                    sparse_steps(M, kChunk);
                    chunk.push_back(std::move(M));
                } else {
                    Eigen::MatrixXd sq = chunk.back() * chunk.back();
                    chunk.push_back(std::move(sq));
                }
            }
            if (identity) {
                cur = chunk[static_cast<std::size_t>(k)];
                identity = false;
            } else {
                tmp.noalias() = cur * chunk[static_cast<std::size_t>(k)];
                cur.swap(tmp);
            }
        }
        if (lo > 0) identity = false;
        sparse_steps(cur, lo);
        cur_steps = target;
        out.push_back(cur);
    }
    return out;
}

Eigen::MatrixXd power_to_density(Eigen::MatrixXd Pn, std::span<const double> w) {
    for (Eigen::Index y = 0; y < Pn.cols(); ++y) Pn.col(y) /= w[static_cast<std::size_t>(y)];
    Eigen::MatrixXd K = 0.5 * (Pn + Pn.transpose());
    return K;
}

Eigen::MatrixXd torus_density(const DiscreteSpace& space, double t) {
    const int side = 1 << space.level();
    const std::vector<double> g = torus_gaussian_row(side, t);
    const auto n = static_cast<Eigen::Index>(space.size());
    const auto& lat = space.lattice();
    Eigen::MatrixXd K(n, n);
    auto off = [side](std::int64_t a, std::int64_t b) { return static_cast<std::size_t>(((b - a) % side + side) % side); };
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& p = lat[static_cast<std::size_t>(i)];
            const auto& q = lat[static_cast<std::size_t>(j)];
            double v = g[off(p.a, q.a)];
            if (space.kind() == SpaceKind::torus2d) v *= g[off(p.b, q.b)];
            K(i, j) = v;
        }
    }
    return K;
}

double matrix_min(const Eigen::MatrixXd& M) { return M.minCoeff(); }

}  // namespace

std::string_view to_string(KernelModel model) {
    return model == KernelModel::gaussian_torus ? "gaussian_torus" : "lazy_walk_gasket";
}

KernelModel parse_kernel_model(std::string_view name) {
    if (name == "gaussian_torus") return KernelModel::gaussian_torus;
    if (name == "lazy_walk_gasket") return KernelModel::lazy_walk_gasket;
    throw std::invalid_argument("unknown kernel model '" + std::string(name) + "'");
}

std::vector<double> torus_gaussian_row(int n, double t) {
    if (n < 1 || !(t > 0.0)) throw std::invalid_argument("torus_gaussian_row: need n >= 1 and t > 0");
    const double pre = 1.0 / std::sqrt(2.0 * std::numbers::pi * t);
    std::vector<double> g(static_cast<std::size_t>(n));
    auto term = [&](double d) { return pre * std::exp(-d * d / (2.0 * t)); };
    for (int k = 0; k <= n / 2; ++k) {
        const double x = static_cast<double>(k) / n;
        double s = 0.0;
        for (int j = 0;; ++j) {
            const double v = term(x + j);
            s += v;
            if (v < 1e-16) break;
        }
        for (int j = 1;; ++j) {
            const double v = term(j - x);
            s += v;
            if (v < 1e-16) break;
        }
        g[static_cast<std::size_t>(k)] = s;
        if (k > 0) g[static_cast<std::size_t>(n - k)] = s;
    }
    double mass = 0.0;
    for (double v : g) mass += v;
    mass /= n;
    for (double& v : g) v /= mass;
    return g;
}

long gasket_steps(int level, double t) {
    const double scale = std::pow(5.0, level);
    return std::max(1L, std::lround(t * scale));
}

KernelSet KernelSet::make(SpacePtr space, KernelModel model, std::vector<double> times, double laziness) {
    if (!space) throw std::invalid_argument("make_kernel_set: null space");
    if (times.empty()) throw std::invalid_argument("make_kernel_set: empty time grid");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] > 0.0) || !std::isfinite(times[i])) throw std::invalid_argument("make_kernel_set: times must be positive");
        if (i > 0 && !(times[i] > times[i - 1])) throw std::invalid_argument("make_kernel_set: times must be increasing");
    }
    const bool torus = space->kind() != SpaceKind::gasket;
    if (model == KernelModel::gaussian_torus && !torus) {
        throw std::invalid_argument("make_kernel_set: gaussian_torus requires a torus space");
    }
    if (model == KernelModel::lazy_walk_gasket && torus) {
        throw std::invalid_argument("make_kernel_set: lazy_walk_gasket requires a gasket space");
    }
    if (!(laziness > 0.0 && laziness < 1.0)) throw std::invalid_argument("make_kernel_set: laziness must lie in (0, 1)");

    KernelSet ks;
    ks.space_ = std::move(space);
    ks.model_ = model;
    ks.laziness_ = laziness;
    ks.walk_dim_ = ks.space_->walk_dim();
    ks.times_ = std::move(times);

    if (model == KernelModel::gaussian_torus) {
        for (double t : ks.times_) ks.densities_.push_back(torus_density(*ks.space_, t));
    } else {
        for (double t : ks.times_) ks.steps_.push_back(gasket_steps(ks.space_->level(), t));
        std::vector<long> unique(ks.steps_);
        unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
        const SpMat P = lazy_walk_matrix(*ks.space_, laziness);
        std::vector<Eigen::MatrixXd> powers = walk_powers(P, unique);
        std::map<long, std::size_t> where;
        for (std::size_t i = 0; i < unique.size(); ++i) where[unique[i]] = i;
        for (long s : ks.steps_) ks.densities_.push_back(power_to_density(powers[where[s]], ks.space_->weights()));
    }
    for (std::size_t i = 0; i < ks.times_.size(); ++i) {
        if (matrix_min(ks.densities_[i]) > 0.0) {
            ks.positive_from_ = ks.times_[i];
            break;
        }
    }
    return ks;
}

double KernelSet::lattice_time() const noexcept { return std::exp2(-space_->level() * walk_dim_); }

double KernelSet::effective_time(double t) const {
    if (model_ == KernelModel::gaussian_torus) return t;
    return static_cast<double>(gasket_steps(space_->level(), t)) * lattice_time();
}

std::optional<std::size_t> KernelSet::find_time(double t, double rtol) const {
    for (std::size_t i = 0; i < times_.size(); ++i) {
        if (std::abs(times_[i] - t) <= rtol * t) return i;
    }
    return std::nullopt;
}

Eigen::MatrixXd KernelSet::density_at(double t) const {
    if (!(t > 0.0)) throw std::invalid_argument("density_at: time must be positive");
    if (model_ == KernelModel::gaussian_torus) return torus_density(*space_, t);
    const SpMat P = lazy_walk_matrix(*space_, laziness_);
    auto powers = walk_powers(P, {gasket_steps(space_->level(), t)});
    return power_to_density(std::move(powers.front()), space_->weights());
}

std::vector<Eigen::VectorXd> KernelSet::semigroup_orbit(std::span<const double> f, std::span<const double> times) const {
    if (f.size() != space_->size()) throw std::invalid_argument("semigroup_orbit: function length mismatch");
    const auto n = static_cast<Eigen::Index>(space_->size());
    const Eigen::Map<const Eigen::VectorXd> fv(f.data(), n);
    std::vector<Eigen::VectorXd> out(times.size());

    if (model_ == KernelModel::gaussian_torus) {
        const int side = 1 << space_->level();
        const auto& lat = space_->lattice();
        const auto w = space_->weights();
        for (std::size_t k = 0; k < times.size(); ++k) {
            const std::vector<double> g = torus_gaussian_row(side, times[k]);
            Eigen::VectorXd v(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto& p = lat[static_cast<std::size_t>(i)];
                double s = 0.0;
                for (Eigen::Index j = 0; j < n; ++j) {
                    const auto& q = lat[static_cast<std::size_t>(j)];
                    double kv = g[static_cast<std::size_t>(((q.a - p.a) % side + side) % side)];
                    if (space_->kind() == SpaceKind::torus2d) kv *= g[static_cast<std::size_t>(((q.b - p.b) % side + side) % side)];
                    s += kv * w[static_cast<std::size_t>(j)] * fv[j];
                }
                v[i] = s;
            }
            out[k] = std::move(v);
        }
        return out;
    }

    std::vector<long> steps(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) steps[k] = gasket_steps(space_->level(), times[k]);
    return walk_orbit(f, steps);
}

std::vector<Eigen::VectorXd> KernelSet::walk_orbit(std::span<const double> f, std::span<const long> steps) const {
    if (model_ != KernelModel::lazy_walk_gasket) throw std::invalid_argument("walk_orbit: gasket kernels only");
    if (f.size() != space_->size()) throw std::invalid_argument("walk_orbit: function length mismatch");
    const auto n = static_cast<Eigen::Index>(space_->size());
    std::vector<std::size_t> order(steps.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return steps[a] < steps[b]; });
    const SpMat P = lazy_walk_matrix(*space_, laziness_);
    Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(f.data(), n);
    Eigen::VectorXd tmp(n);
    std::vector<Eigen::VectorXd> out(steps.size());
    long done = 0;
    for (std::size_t k : order) {
        if (steps[k] < 0) throw std::invalid_argument("walk_orbit: negative step count");
        for (; done < steps[k]; ++done) {
            tmp.noalias() = P * v;
            v.swap(tmp);
        }
        out[k] = v;
    }
    return out;
}

AxiomReport check_axioms(const KernelSet& ks, std::size_t s_idx, std::size_t t_idx) {
    if (s_idx >= ks.time_count() || t_idx >= ks.time_count()) throw std::out_of_range("check_axioms: invalid time index");
    const double s = ks.times()[s_idx];
    const double t = ks.times()[t_idx];
    const auto st_idx = ks.find_time(s + t, 1e-12);
    if (!st_idx) throw std::invalid_argument("check_axioms: grid does not contain s + t");

    const DiscreteSpace& sp = ks.space();
    const auto n = static_cast<Eigen::Index>(sp.size());
    const Eigen::Map<const Eigen::VectorXd> w(sp.weights().data(), n);
    AxiomReport rep;
    for (std::size_t k = 0; k < ks.time_count(); ++k) {
        const Eigen::MatrixXd& K = ks.density(k);
        rep.symmetry_err = std::max(rep.symmetry_err, (K - K.transpose()).cwiseAbs().maxCoeff());
        const Eigen::VectorXd rows = K * w;
        rep.stochasticity_err = std::max(rep.stochasticity_err, (rows.array() - 1.0).abs().maxCoeff());
    }
    const Eigen::MatrixXd KsW = ks.density(s_idx) * w.asDiagonal();
    const Eigen::MatrixXd comp = KsW * ks.density(t_idx);
    rep.chapman_err = (ks.density(*st_idx) - comp).cwiseAbs().maxCoeff();
    rep.positivity_min = ks.density(ks.time_count() - 1).minCoeff();

    Eigen::VectorXd f(n);
    for (Eigen::Index i = 0; i < n; ++i) f[i] = std::cos(2.0 * std::numbers::pi * sp.coords(static_cast<std::size_t>(i))[0]);
    const Eigen::VectorXd Pf = ks.density(0) * w.cwiseProduct(f);
    rep.continuity_err = std::sqrt(((Pf - f).array().square() * w.array()).sum());
    return rep;
}

namespace {

// Minimize a convex function of one variable on [lo, hi] by golden-section search.
template <class F>
double golden_min(F&& fn, double lo, double hi) {
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = fn(c), fd = fn(d);
    for (int it = 0; it < 200 && (b - a) > 1e-10 * (1.0 + std::abs(a)); ++it) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = fn(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = fn(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

BoundFit fit_subgaussian_bounds(const KernelSet& ks, const BoundFitOptions& opt) {
    const DiscreteSpace& sp = ks.space();
    const double dw = ks.walk_dim();
    const double d = sp.hausdorff_dim();
    const double gamma = dw / (dw - 1.0);

    std::vector<double> used;
    for (double t : ks.times()) {
        if (t >= opt.t_lo && t <= opt.t_hi) used.push_back(t);
    }
    if (used.size() < 3 || used.back() / used.front() < 4.0) {
        throw std::invalid_argument("fit_subgaussian_bounds: need at least 3 times spanning 2 dyadic orders");
    }

    const std::size_t n = sp.size();
    const std::size_t sources = std::max<std::size_t>(1, std::min(opt.max_sources, n));
    std::vector<double> us, vs;
    for (std::size_t k = 0; k < ks.time_count(); ++k) {
        const double tg = ks.times()[k];
        if (tg < opt.t_lo || tg > opt.t_hi) continue;
        const double t = ks.effective_time(tg);
        const Eigen::MatrixXd& K = ks.density(k);
        for (std::size_t s = 0; s < sources; ++s) {
            const std::size_t x = s * n / sources;
            for (std::size_t y = 0; y < n; ++y) {
                const double p = K(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
                if (!(p >= 1e-300)) continue;
                us.push_back(std::pow(sp.dist(x, y) / std::pow(t, 1.0 / dw), gamma));
                vs.push_back(std::log(p * std::pow(t, d / dw)));
            }
        }
    }
    if (us.size() < 10) throw std::invalid_argument("fit_subgaussian_bounds: too few usable samples");
    const std::size_t m = us.size();

    double mu = 0.0, mv = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        mu += us[i];
        mv += vs[i];
    }
    mu /= static_cast<double>(m);
    mv /= static_cast<double>(m);
    double suv = 0.0, suu = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        suv += (us[i] - mu) * (vs[i] - mv);
        suu += (us[i] - mu) * (us[i] - mu);
    }
    const double slope = suu > 0.0 ? suv / suu : 0.0;
    const double icpt = mv - slope * mu;
    double rss = 0.0;
    for (std::size_t i = 0; i < m; ++i) rss += std::pow(vs[i] - (icpt + slope * us[i]), 2);

    auto lower_gap = [&](double c) {
        double lo = HUGE_VAL;
        for (std::size_t i = 0; i < m; ++i) lo = std::min(lo, vs[i] + c * us[i]);
        double g = 0.0;
        for (std::size_t i = 0; i < m; ++i) g += std::pow(vs[i] + c * us[i] - lo, 2);
        return g;
    };
    auto upper_gap = [&](double c) {
        double hi = -HUGE_VAL;
        for (std::size_t i = 0; i < m; ++i) hi = std::max(hi, vs[i] + c * us[i]);
        double g = 0.0;
        for (std::size_t i = 0; i < m; ++i) g += std::pow(hi - vs[i] - c * us[i], 2);
        return g;
    };
    const double c_hi = 10.0 * std::max(-slope, 0.1);
    BoundFit fit;
    fit.c2_hat = golden_min(lower_gap, 0.0, c_hi);
    fit.c4_hat = golden_min(upper_gap, 0.0, c_hi);
    double lo = HUGE_VAL, hi = -HUGE_VAL;
    for (std::size_t i = 0; i < m; ++i) {
        lo = std::min(lo, vs[i] + fit.c2_hat * us[i]);
        hi = std::max(hi, vs[i] + fit.c4_hat * us[i]);
    }
    fit.c1_hat = std::exp(lo);
    fit.c3_hat = std::exp(hi);
    fit.residual = std::sqrt(rss / static_cast<double>(m));
    fit.sample_count = m;
    return fit;
}

double on_diagonal_exponent(const KernelSet& ks, double t_lo, double t_hi) {
    std::vector<double> lx, ly;
    const auto n = static_cast<Eigen::Index>(ks.space().size());
    for (std::size_t k = 0; k < ks.time_count(); ++k) {
        const double tg = ks.times()[k];
        if (tg < t_lo || tg > t_hi) continue;
        double s = 0.0;
        for (Eigen::Index x = 0; x < n; ++x) s += std::log(ks.density(k)(x, x));
        lx.push_back(std::log(ks.effective_time(tg)));
        ly.push_back(s / static_cast<double>(n));
    }
    if (lx.size() < 2) throw std::invalid_argument("on_diagonal_exponent: need at least two grid times in range");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(lx.size());
    my /= static_cast<double>(lx.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    return sxy / sxx;
}

double exit_tail(const KernelSet& ks, std::size_t t_idx, std::size_t x, double delta) {
    if (t_idx >= ks.time_count() || x >= ks.space().size()) throw std::out_of_range("exit_tail: invalid index");
    if (!(delta >= 0.0)) throw std::invalid_argument("exit_tail: delta must be nonnegative");
    const DiscreteSpace& sp = ks.space();
    const double scaled = delta * static_cast<double>(std::int64_t{1} << sp.level());
    const double d2 = scaled * scaled;
    const Eigen::MatrixXd& K = ks.density(t_idx);
    double s = 0.0;
    for (std::size_t y = 0; y < sp.size(); ++y) {
        if (static_cast<double>(sp.lattice_dist2(x, y)) > d2) {
            s += K(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) * sp.weights()[y];
        }
    }
    return std::clamp(s, 0.0, 1.0);
}

GridFn apply_semigroup(const KernelSet& ks, std::size_t t_idx, const GridFn& f) {
    if (t_idx >= ks.time_count()) throw std::out_of_range("apply_semigroup: invalid time index");
    if (&f.space() != &ks.space()) throw std::invalid_argument("apply_semigroup: function lives on a different space");
    const auto n = static_cast<Eigen::Index>(f.size());
    const Eigen::Map<const Eigen::VectorXd> w(ks.space().weights().data(), n);
    const Eigen::Map<const Eigen::VectorXd> fv(f.values().data(), n);
    const Eigen::VectorXd out = ks.density(t_idx) * w.cwiseProduct(fv);
    return GridFn(f.space_ptr(), std::vector<double>(out.data(), out.data() + n));
}

std::string axiom_report_json(const AxiomReport& rep) {
    nlohmann::json j;
    j["symmetry_err"] = rep.symmetry_err;
    j["stochasticity_err"] = rep.stochasticity_err;
    j["chapman_err"] = rep.chapman_err;
    j["positivity_min"] = rep.positivity_min;
    j["continuity_err"] = rep.continuity_err;
    return j.dump(2);
}

std::string bound_fit_json(const BoundFit& fit) {
    nlohmann::json j;
    j["c1_hat"] = fit.c1_hat;
    j["c2_hat"] = fit.c2_hat;
    j["c3_hat"] = fit.c3_hat;
    j["c4_hat"] = fit.c4_hat;
    j["residual"] = fit.residual;
    j["sample_count"] = fit.sample_count;
    return j.dump(2);
}

std::string kernel_matrix_csv(const KernelSet& ks, std::size_t t_idx) {
    const Eigen::MatrixXd& K = ks.density(t_idx);
    std::vector<std::string> cols{"x"};
    for (Eigen::Index y = 0; y < K.cols(); ++y) cols.push_back("y" + std::to_string(y));
    CsvTable t(std::move(cols));
    for (Eigen::Index x = 0; x < K.rows(); ++x) {
        std::vector<std::string> row{format_int(static_cast<long long>(x))};
        for (Eigen::Index y = 0; y < K.cols(); ++y) row.push_back(format_double(K(x, y)));
        t.add_row(std::move(row));
    }
    return t.str();
}

}  // namespace heatbesov
