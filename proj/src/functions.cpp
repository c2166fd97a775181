#include "heatbesov/functions.hpp"

#include "heatbesov/rng.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace heatbesov {

namespace {

std::vector<double> hoelder_torus1d(const DiscreteSpace& sp, double h, double sigma, Rng& rng) {
    const std::size_t n = sp.size();
    const int N = sp.level();
    std::vector<double> v(n, 0.0);
    v[0] = sigma * rng.normal();
    for (int m = 1; m <= N; ++m) {
        const std::size_t step = std::size_t{1} << (N - m);
        const double amp = sigma * std::exp2(-m * h);
        for (std::size_t j = 1; j < (std::size_t{1} << m); j += 2) {
            const std::size_t i = j * step;
            const double avg = 0.5 * (v[i - step] + v[(i + step) % n]);
            v[i] = avg + amp * rng.normal();
        }
    }
    return v;
}

std::vector<double> hoelder_torus2d(const DiscreteSpace& sp, double h, double sigma, Rng& rng) {
    const int N = sp.level();
    const std::size_t side = std::size_t{1} << N;
    std::vector<double> v(side * side, 0.0);
    auto at = [&](std::size_t x, std::size_t y) -> double& { return v[(y % side) * side + (x % side)]; };
    at(0, 0) = sigma * rng.normal();
    for (int m = 1; m <= N; ++m) {
        const std::size_t s = std::size_t{1} << (N - m);
        const std::size_t cnt = std::size_t{1} << m;
        const double amp = sigma * std::exp2(-m * h);
        for (std::size_t jy = 0; jy < cnt; ++jy) {
            for (std::size_t jx = 0; jx < cnt; ++jx) {
                const bool ox = jx % 2 == 1, oy = jy % 2 == 1;
                if (!ox && !oy) continue;
                const std::size_t x = jx * s, y = jy * s;
                double avg;
                if (ox && oy) {
                    avg = 0.25 * (at(x - s, y - s) + at(x + s, y - s) + at(x - s, y + s) + at(x + s, y + s));
                } else if (ox) {
                    avg = 0.5 * (at(x - s, y) + at(x + s, y));
                } else {
                    avg = 0.5 * (at(x, y - s) + at(x, y + s));
                }
                at(x, y) = avg + amp * rng.normal();
            }
        }
    }
    return v;
}

std::vector<double> hoelder_gasket(const DiscreteSpace& sp, double h, double sigma, Rng& rng) {
    std::vector<double> v(sp.size(), 0.0);
    for (std::size_t i = 0; i < sp.size(); ++i) {
        const int b = sp.birth_level(i);
        if (b == 0) {
            v[i] = sigma * rng.normal();
            continue;
        }
        const Edge par = sp.midpoint_parents(i);
        v[i] = 0.5 * (v[par.u] + v[par.v]) + sigma * std::exp2(-b * h) * rng.normal();
    }
    return v;
}

std::vector<double> cell_indicator(const DiscreteSpace& sp, int l, std::int64_t idx) {
    if (l < 0 || l > sp.level()) throw std::invalid_argument("cell-indicator: cell_level must lie in [0, level]");
    const std::int64_t side = std::int64_t{1} << sp.level();
    const std::int64_t s = std::int64_t{1} << (sp.level() - l);
    const std::int64_t per_axis = std::int64_t{1} << l;
    std::vector<double> v(sp.size(), 0.0);
    switch (sp.kind()) {
        case SpaceKind::torus1d: {
            if (idx < 0 || idx >= per_axis) throw std::invalid_argument("cell-indicator: cell_index out of range");
            for (std::size_t i = 0; i < sp.size(); ++i) v[i] = sp.lattice()[i].a / s == idx ? 1.0 : 0.0;
            break;
        }
        case SpaceKind::torus2d: {
            if (idx < 0 || idx >= per_axis * per_axis) throw std::invalid_argument("cell-indicator: cell_index out of range");
            const std::int64_t cx = idx % per_axis, cy = idx / per_axis;
            for (std::size_t i = 0; i < sp.size(); ++i) {
                const LatticeCoord& c = sp.lattice()[i];
                v[i] = (c.a / s == cx && c.b / s == cy) ? 1.0 : 0.0;
            }
            break;
        }
        case SpaceKind::gasket: {
            std::int64_t cells = 1;
            for (int j = 0; j < l; ++j) cells *= 3;
            if (idx < 0 || idx >= cells) throw std::invalid_argument("cell-indicator: cell_index out of range");
            std::int64_t oa = 0, ob = 0, rest = idx, place = cells / 3;
            for (int j = 1; j <= l; ++j) {
                const std::int64_t digit = rest / place;
                rest %= place;
                place = std::max<std::int64_t>(1, place / 3);
                const std::int64_t sub = side >> j;
                if (digit == 1) oa += sub;
                if (digit == 2) ob += sub;
            }
            for (std::size_t i = 0; i < sp.size(); ++i) {
                const LatticeCoord& c = sp.lattice()[i];
                const std::int64_t da = c.a - oa, db = c.b - ob;
                v[i] = (da >= 0 && db >= 0 && da + db <= s) ? 1.0 : 0.0;
            }
            break;
        }
    }
    return v;
}

std::vector<double> read_csv_values(const std::string& path, std::size_t n) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("csv: cannot open " + path);
    std::vector<double> v(n, 0.0);
    std::vector<char> seen(n, 0);
    std::size_t count = 0;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw std::invalid_argument("csv: expected 'index,value' in " + path);
        const std::string a = line.substr(0, comma), b = line.substr(comma + 1);
        std::size_t pos = 0;
        long long idx = 0;
        double val = 0.0;
        try {
            idx = std::stoll(a, &pos);
            if (pos != a.size()) throw std::invalid_argument("index");
            val = std::stod(b, &pos);
        } catch (const std::exception&) {
            if (first) {
                first = false;
                continue;  // header row
            }
            throw std::invalid_argument("csv: malformed row '" + line + "' in " + path);
        }
        first = false;
        if (idx < 0 || static_cast<std::size_t>(idx) >= n) {
            throw std::invalid_argument("csv: length mismatch, index " + std::to_string(idx) + " outside a space of " +
                                        std::to_string(n) + " points");
        }
        if (seen[static_cast<std::size_t>(idx)]) throw std::invalid_argument("csv: duplicate index " + std::to_string(idx));
        seen[static_cast<std::size_t>(idx)] = 1;
        v[static_cast<std::size_t>(idx)] = val;
        ++count;
    }
    if (count != n) {
        throw std::invalid_argument("csv: length mismatch, " + std::to_string(count) + " rows for a space of " +
                                    std::to_string(n) + " points");
    }
    return v;
}

}  // namespace

std::string FunctionSpec::label() const {
    std::ostringstream os;
    os.precision(10);
    os << family;
    if (family == "constant") os << "(c=" << c << ")";
    if (family == "fourier-mode") os << "(k=" << k << ")";
    if (family == "cell-indicator") os << "(l=" << cell_level << ",i=" << cell_index << ")";
    if (family == "gasket-harmonic") os << "(" << boundary[0] << "," << boundary[1] << "," << boundary[2] << ")";
    if (family == "random-hoelder") os << "(h=" << h << ",seed=" << seed << ")";
    if (family == "csv") os << "(" << path << ")";
    return os.str();
}

std::vector<double> gasket_harmonic(const DiscreteSpace& sp, const std::array<double, 3>& boundary) {
    if (sp.kind() != SpaceKind::gasket) throw std::invalid_argument("gasket-harmonic: gasket only");
    const std::size_t n = sp.size();
    const std::size_t m = n - 3;  // interior unknowns are indices 3..n-1
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
    const auto& nb = sp.neighbors();
    for (std::size_t i = 3; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i - 3);
        trip.emplace_back(r, r, static_cast<double>(nb[i].size()));
        for (std::size_t j : nb[i]) {
            if (j < 3) rhs[r] += boundary[j];
            else trip.emplace_back(r, static_cast<Eigen::Index>(j - 3), -1.0);
        }
    }
    std::vector<double> v(n);
    v[0] = boundary[0];
    v[1] = boundary[1];
    v[2] = boundary[2];
    if (m == 0) return v;
    Eigen::SparseMatrix<double> L(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    L.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(L);
    if (solver.info() != Eigen::Success) throw std::runtime_error("gasket-harmonic: factorization failed");
    const Eigen::VectorXd u = solver.solve(rhs);
    for (std::size_t i = 3; i < n; ++i) v[i] = u[static_cast<Eigen::Index>(i - 3)];
    return v;
}

GridFn load_function(const SpacePtr& space, const FunctionSpec& spec) {
    if (!space) throw std::invalid_argument("load_function: null space");
    const DiscreteSpace& sp = *space;
    const std::size_t n = sp.size();
    const std::string& fam = spec.family;
    std::vector<double> v(n);
    if (fam == "constant") {
        v.assign(n, spec.c);
    } else if (fam == "linear") {
        for (std::size_t i = 0; i < n; ++i) v[i] = sp.coords(i)[0];
    } else if (fam == "fourier-mode") {
        if (sp.kind() == SpaceKind::gasket) throw std::invalid_argument("fourier-mode: torus spaces only");
        for (std::size_t i = 0; i < n; ++i) v[i] = std::sin(2.0 * std::numbers::pi * spec.k * sp.coords(i)[0]);
    } else if (fam == "cell-indicator") {
        v = cell_indicator(sp, spec.cell_level, spec.cell_index);
    } else if (fam == "gasket-harmonic") {
        v = gasket_harmonic(sp, spec.boundary);
    } else if (fam == "random-hoelder") {
        if (!(spec.h > 0.0)) throw std::invalid_argument("random-hoelder: h must be positive");
        Rng rng(spec.seed);
        switch (sp.kind()) {
            case SpaceKind::torus1d: v = hoelder_torus1d(sp, spec.h, spec.sigma, rng); break;
            case SpaceKind::torus2d: v = hoelder_torus2d(sp, spec.h, spec.sigma, rng); break;
            case SpaceKind::gasket: v = hoelder_gasket(sp, spec.h, spec.sigma, rng); break;
        }
    } else if (fam == "csv") {
        v = read_csv_values(spec.path, n);
    } else {
        throw std::invalid_argument("unknown function family '" + fam + "'");
    }
    return GridFn(space, std::move(v));
}

}  // namespace heatbesov
