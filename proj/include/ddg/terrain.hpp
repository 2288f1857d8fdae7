#pragma once

// Topographic Hamiltonian: an elevation grid over [-1,1]^2 is normalized
// to [0,1] at the nodes and interpolated with a natural bicubic spline;
// the Hamiltonian adds quadratic confinement, H(q,p) = U_top(q)
// + 0.5 (q^T q + p^T p). The spline has no dual-number route on purpose:
// this is the case where automatic differentiation is unavailable and the
// derivative-free methods earn their keep.
//
// Grid file format: UTF-8 text, '#' comment lines ignored. First data
// line: "rows cols". Then `rows` lines of `cols` decimal numbers
// separated by single spaces. Node (i, j) maps to
// (x, y) = (-1 + 2j/(cols-1), -1 + 2i/(rows-1)), row-major storage.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ddg/systems.hpp"

namespace ddg {

struct ElevationGrid {
    std::size_t rows = 0, cols = 0;
    std::vector<double> values;  // row-major

    double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }

    void validate() const {
        if (rows != cols) throw std::invalid_argument("elevation grid must be square");
        if (rows < 4) throw std::invalid_argument("elevation grid needs at least 4x4 nodes");
        if (values.size() != rows * cols) throw std::invalid_argument("elevation grid size mismatch");
        for (double v : values)
            if (!std::isfinite(v)) throw std::invalid_argument("elevation grid has non-finite value");
    }
};

struct GridParseError : std::runtime_error {
    int line;
    GridParseError(int line_no, const std::string& what)
        : std::runtime_error("grid parse error at line " + std::to_string(line_no) + ": " + what),
          line(line_no) {}
};

inline ElevationGrid load_grid(std::istream& in) {
    ElevationGrid g;
    std::string line;
    int line_no = 0;
    bool have_header = false;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        if (!have_header) {
            long long r = 0, c = 0;
            if (!(ls >> r >> c) || r <= 0 || c <= 0)
                throw GridParseError(line_no, "expected 'rows cols'");
            g.rows = static_cast<std::size_t>(r);
            g.cols = static_cast<std::size_t>(c);
            g.values.reserve(g.rows * g.cols);
            have_header = true;
            continue;
        }
        if (row >= g.rows) throw GridParseError(line_no, "more data rows than declared");
        double v;
        std::size_t count = 0;
        while (ls >> v) {
            g.values.push_back(v);
            ++count;
        }
        if (count != g.cols)
            throw GridParseError(line_no, "expected " + std::to_string(g.cols) + " values, got " +
                                              std::to_string(count));
        ++row;
    }
    if (!have_header) throw GridParseError(line_no, "missing header");
    if (row != g.rows) throw GridParseError(line_no, "fewer data rows than declared");
    g.validate();
    return g;
}

inline ElevationGrid load_grid(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open grid file: " + path);
    return load_grid(f);
}

inline void save_grid(const ElevationGrid& g, std::ostream& out) {
    out << g.rows << " " << g.cols << "\n";
    for (std::size_t i = 0; i < g.rows; ++i) {
        for (std::size_t j = 0; j < g.cols; ++j) out << (j ? " " : "") << g.at(i, j);
        out << "\n";
    }
}

/// Reproducible stand-in for real elevation data: a sum of random
/// Gaussian bumps sampled on the uniform grid.
inline ElevationGrid synth_grid(std::uint64_t seed, std::size_t size, int n_bumps) {
    if (size < 4) throw std::invalid_argument("synth_grid: size must be >= 4");
    ElevationGrid g;
    g.rows = g.cols = size;
    g.values.assign(size * size, 0.0);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> pos(-0.9, 0.9);
    std::uniform_real_distribution<double> amp(0.2, 1.0);
    std::uniform_real_distribution<double> width(0.15, 0.45);
    struct Bump {
        double cx, cy, a, w;
    };
    std::vector<Bump> bumps;
    for (int b = 0; b < n_bumps; ++b) bumps.push_back({pos(rng), pos(rng), amp(rng), width(rng)});
    for (std::size_t i = 0; i < size; ++i) {
        const double y = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(size - 1);
        for (std::size_t j = 0; j < size; ++j) {
            const double x = -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(size - 1);
            double v = 0.0;
            for (const Bump& bp : bumps) {
                const double dx = x - bp.cx, dy = y - bp.cy;
                v += bp.a * std::exp(-(dx * dx + dy * dy) / (2.0 * bp.w * bp.w));
            }
            g.values[i * size + j] = v;
        }
    }
    return g;
}

namespace detail {

/// Natural cubic spline second derivatives for uniformly spaced data:
/// M_0 = M_{m-1} = 0, interior M_{i-1} + 4 M_i + M_{i+1} = 6 (y_{i-1}
/// - 2 y_i + y_{i+1}) / d^2. Solved with the Thomas algorithm.
inline std::vector<double> spline_second_derivs(const std::vector<double>& y, double d) {
    const std::size_t m = y.size();
    std::vector<double> mm(m, 0.0);
    if (m < 3) return mm;
    const std::size_t k = m - 2;  // interior unknowns
    std::vector<double> diag(k, 4.0), rhs(k);
    for (std::size_t i = 0; i < k; ++i)
        rhs[i] = 6.0 * (y[i] - 2.0 * y[i + 1] + y[i + 2]) / (d * d);
    for (std::size_t i = 1; i < k; ++i) {
        const double w = 1.0 / diag[i - 1];
        diag[i] -= w;
        rhs[i] -= w * rhs[i - 1];
    }
    mm[k] = rhs[k - 1] / diag[k - 1];
    for (std::size_t i = k - 1; i-- > 0;) mm[i + 1] = (rhs[i] - mm[i + 2]) / diag[i];
    return mm;
}

}  // namespace detail

/// Natural bicubic spline through the normalized grid. Rows are splined
/// in x; the y-direction spline of the resulting row values is obtained
/// from precomputed column data (the spline solve is linear), so each
/// evaluation is O(1).
class TerrainPotential {
  public:
    explicit TerrainPotential(const ElevationGrid& grid) {
        grid.validate();
        m_ = grid.rows;
        raw_min_ = raw_max_ = grid.values[0];
        for (double v : grid.values) {
            raw_min_ = std::min(raw_min_, v);
            raw_max_ = std::max(raw_max_, v);
        }
        z_.assign(m_ * m_, 0.0);
        if (raw_max_ > raw_min_) {
            degenerate_ = false;
            const double scale = 1.0 / (raw_max_ - raw_min_);
            for (std::size_t k = 0; k < m_ * m_; ++k)
                z_[k] = (grid.values[k] - raw_min_) * scale;
        } else {
            degenerate_ = true;  // constant grid: U_top identically zero
        }
        spacing_ = 2.0 / static_cast<double>(m_ - 1);
        d2x_.assign(m_ * m_, 0.0);
        d2y_.assign(m_ * m_, 0.0);
        d2xy_.assign(m_ * m_, 0.0);
        std::vector<double> buf(m_);
        for (std::size_t i = 0; i < m_; ++i) {  // row splines in x
            for (std::size_t j = 0; j < m_; ++j) buf[j] = z_[i * m_ + j];
            std::vector<double> mm = detail::spline_second_derivs(buf, spacing_);
            for (std::size_t j = 0; j < m_; ++j) d2x_[i * m_ + j] = mm[j];
        }
        for (std::size_t j = 0; j < m_; ++j) {  // column splines of values and of d2x
            for (std::size_t i = 0; i < m_; ++i) buf[i] = z_[i * m_ + j];
            std::vector<double> mm = detail::spline_second_derivs(buf, spacing_);
            for (std::size_t i = 0; i < m_; ++i) d2y_[i * m_ + j] = mm[i];
            for (std::size_t i = 0; i < m_; ++i) buf[i] = d2x_[i * m_ + j];
            mm = detail::spline_second_derivs(buf, spacing_);
            for (std::size_t i = 0; i < m_; ++i) d2xy_[i * m_ + j] = mm[i];
        }
    }

    std::size_t size() const { return m_; }
    double raw_min() const { return raw_min_; }
    double raw_max() const { return raw_max_; }
    bool degenerate() const { return degenerate_; }

    double normalized_node(std::size_t i, std::size_t j) const { return z_[i * m_ + j]; }

    /// U_top at q = (qx, qy) in [-1, 1]^2.
    double eval(double qx, double qy) const {
        if (!(qx >= -1.0 && qx <= 1.0 && qy >= -1.0 && qy <= 1.0))
            throw std::domain_error("terrain potential evaluated outside [-1,1]^2");
        if (degenerate_) return 0.0;
        const auto [jx, ax, bx] = locate(qx);
        const auto [iy, ay, by] = locate(qy);
        const double wx = spacing_ * spacing_ / 6.0;
        const double cxa = (ax * ax * ax - ax) * wx;
        const double cxb = (bx * bx * bx - bx) * wx;
        auto row_value = [&](std::size_t i) {
            return ax * z_[i * m_ + jx] + bx * z_[i * m_ + jx + 1] +
                   cxa * d2x_[i * m_ + jx] + cxb * d2x_[i * m_ + jx + 1];
        };
        auto row_d2 = [&](std::size_t i) {
            return ax * d2y_[i * m_ + jx] + bx * d2y_[i * m_ + jx + 1] +
                   cxa * d2xy_[i * m_ + jx] + cxb * d2xy_[i * m_ + jx + 1];
        };
        const double v0 = row_value(iy), v1 = row_value(iy + 1);
        const double m0 = row_d2(iy), m1 = row_d2(iy + 1);
        const double wy = spacing_ * spacing_ / 6.0;
        return ay * v0 + by * v1 + (ay * ay * ay - ay) * wy * m0 + (by * by * by - by) * wy * m1;
    }

  private:
    // cell index and the two linear weights (A toward the left node)
    struct Cell {
        std::size_t idx;
        double a, b;
    };
    Cell locate(double q) const {
        double t = (q + 1.0) / spacing_;
        std::size_t idx = static_cast<std::size_t>(t);
        if (idx >= m_ - 1) idx = m_ - 2;
        const double b = t - static_cast<double>(idx);
        return {idx, 1.0 - b, b};
    }

    std::size_t m_ = 0;
    double spacing_ = 0.0;
    double raw_min_ = 0.0, raw_max_ = 0.0;
    bool degenerate_ = true;
    std::vector<double> z_, d2x_, d2y_, d2xy_;
};

inline TerrainPotential build_potential(const ElevationGrid& grid) { return TerrainPotential(grid); }

/// Total potential U(q) = U_top(q) + 0.5 q^T q.
inline double total_potential(const TerrainPotential& pot, double qx, double qy) {
    return pot.eval(qx, qy) + 0.5 * (qx * qx + qy * qy);
}

/// n = 4 system with state [q1, q2, p1, p2] and canonical structure.
/// Only plain-double evaluation: the spline is not differentiable through
/// dual scalars, so use the derivative-free methods.
inline HamiltonianSystem make_topographic(std::shared_ptr<const TerrainPotential> pot) {
    HamiltonianSystem sys;
    sys.n = 4;
    sys.energy = [pot](std::span<const double> x) {
        return pot->eval(x[0], x[1]) +
               0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]);
    };
    sys.structure = canonical_skew(4);
    return sys;
}

struct ContainmentReport {
    std::size_t checked = 0;
    std::size_t violations = 0;   // steps with U(q_n) > H0 + tolerance
    double max_excess = 0.0;      // max over steps of U(q_n) - H0 (0 if never positive)
    double max_energy_drift = 0.0;
};

/// Check confinement of the coordinate trajectory to the sublevel set
/// D(H0) = { q : U(q) <= H0 } and report the energy drift.
template <class TrajectoryT>
ContainmentReport containment_check(const TrajectoryT& traj, double h0,
                                    const TerrainPotential& pot, double tolerance = 1e-6) {
    ContainmentReport rep;
    if (traj.states.empty()) return rep;
    const double e0 = traj.energy.front();
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        const Vec& x = traj.states[k];
        const double u = total_potential(pot, x[0], x[1]);
        const double excess = u - h0;
        rep.max_excess = std::max(rep.max_excess, excess);
        if (excess > tolerance) ++rep.violations;
        rep.max_energy_drift = std::max(rep.max_energy_drift, std::abs(traj.energy[k] - e0));
        ++rep.checked;
    }
    return rep;
}

}  // namespace ddg
