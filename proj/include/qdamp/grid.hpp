#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace qdamp {

using Complex = std::complex<double>;

// Uniform 1D lattice with hard-wall (Dirichlet) boundaries. The wave function
// is identically zero at x_min and x_max, so only interior points are stored;
// interior point i sits at x_min + (i+1)*dx.
struct Grid1D {
    double x_min = 0.0;
    double x_max = 1.0;
    int n_interior = 0;
    double dx = 0.0;

    double x(int i) const { return x_min + (i + 1) * dx; }

    friend bool operator==(const Grid1D& a, const Grid1D& b) {
        return a.x_min == b.x_min && a.x_max == b.x_max && a.n_interior == b.n_interior;
    }
    friend bool operator!=(const Grid1D& a, const Grid1D& b) { return !(a == b); }
};

inline Grid1D build_grid(double x_min, double x_max, int n_interior) {
    if (!std::isfinite(x_min) || !std::isfinite(x_max))
        throw std::invalid_argument("build_grid: bounds must be finite");
    if (!(x_max > x_min))
        throw std::invalid_argument("build_grid: x_max must exceed x_min");
    if (n_interior < 8)
        throw std::invalid_argument("build_grid: n_interior must be at least 8");
    Grid1D g;
    g.x_min = x_min;
    g.x_max = x_max;
    g.n_interior = n_interior;
    g.dx = (x_max - x_min) / (n_interior + 1);
    return g;
}

// Real scalar field sampled on the interior points of a grid.
struct RealField {
    std::vector<double> values;
    Grid1D grid;

    RealField() = default;
    explicit RealField(const Grid1D& g) : values(g.n_interior, 0.0), grid(g) {}
    RealField(const Grid1D& g, std::vector<double> v) : values(std::move(v)), grid(g) {
        if (static_cast<int>(values.size()) != g.n_interior)
            throw std::invalid_argument("RealField: value count does not match grid");
    }

    int size() const { return static_cast<int>(values.size()); }
    double& operator[](int i) { return values[static_cast<size_t>(i)]; }
    double operator[](int i) const { return values[static_cast<size_t>(i)]; }
};

// Complex amplitude field (psi) on the interior points of a grid.
struct ComplexField {
    std::vector<Complex> values;
    Grid1D grid;

    ComplexField() = default;
    explicit ComplexField(const Grid1D& g) : values(g.n_interior, Complex{0.0, 0.0}), grid(g) {}
    ComplexField(const Grid1D& g, std::vector<Complex> v) : values(std::move(v)), grid(g) {
        if (static_cast<int>(values.size()) != g.n_interior)
            throw std::invalid_argument("ComplexField: value count does not match grid");
    }

    int size() const { return static_cast<int>(values.size()); }
    Complex& operator[](int i) { return values[static_cast<size_t>(i)]; }
    const Complex& operator[](int i) const { return values[static_cast<size_t>(i)]; }
};

inline void require_same_grid(const Grid1D& a, const Grid1D& b, const char* where) {
    if (a != b) throw std::invalid_argument(std::string(where) + ": grid mismatch");
}

template <class Field>
inline bool all_finite(const Field& f) {
    for (const auto& v : f.values) {
        if constexpr (std::is_same_v<Field, RealField>) {
            if (!std::isfinite(v)) return false;
        } else {
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
        }
    }
    return true;
}

// Rectangle rule, weight dx per interior point. Boundary cells carry psi = 0
// and contribute nothing, which is the quadrature under which the discrete
// Hamiltonian is exactly symmetric.
inline double integrate(const RealField& f) {
    double s = 0.0;
    for (double v : f.values) s += v;
    return f.grid.dx * s;
}

// Discrete inner product <f,g> = dx * sum conj(f_i) g_i.
inline Complex inner(const ComplexField& f, const ComplexField& g) {
    require_same_grid(f.grid, g.grid, "inner");
    Complex s{0.0, 0.0};
    for (int i = 0; i < f.size(); ++i) s += std::conj(f[i]) * g[i];
    return f.grid.dx * s;
}

inline double norm_sq(const ComplexField& f) {
    double s = 0.0;
    for (const auto& v : f.values) s += std::norm(v);
    return f.grid.dx * s;
}

inline double distance(const ComplexField& a, const ComplexField& b) {
    require_same_grid(a.grid, b.grid, "distance");
    double s = 0.0;
    for (int i = 0; i < a.size(); ++i) s += std::norm(a[i] - b[i]);
    return std::sqrt(a.grid.dx * s);
}

inline RealField density(const ComplexField& psi) {
    RealField rho(psi.grid);
    for (int i = 0; i < psi.size(); ++i) rho[i] = std::norm(psi[i]);
    return rho;
}

// Second-order central differences with ghost values psi = 0 outside the
// interior (hard wall). order is 1 or 2.
inline ComplexField differentiate(const ComplexField& f, int order) {
    if (order != 1 && order != 2)
        throw std::invalid_argument("differentiate: order must be 1 or 2");
    const int n = f.size();
    ComplexField out(f.grid);
    const double dx = f.grid.dx;
    auto at = [&](int i) { return (i < 0 || i >= n) ? Complex{0.0, 0.0} : f[i]; };
    if (order == 1) {
        const double w = 1.0 / (2.0 * dx);
        for (int i = 0; i < n; ++i) out[i] = w * (at(i + 1) - at(i - 1));
    } else {
        const double w = 1.0 / (dx * dx);
        for (int i = 0; i < n; ++i) out[i] = w * (at(i + 1) - 2.0 * f[i] + at(i - 1));
    }
    return out;
}

inline RealField differentiate(const RealField& f, int order) {
    ComplexField tmp(f.grid);
    for (int i = 0; i < f.size(); ++i) tmp[i] = Complex{f[i], 0.0};
    ComplexField d = differentiate(tmp, order);
    RealField out(f.grid);
    for (int i = 0; i < f.size(); ++i) out[i] = d[i].real();
    return out;
}

}  // namespace qdamp
