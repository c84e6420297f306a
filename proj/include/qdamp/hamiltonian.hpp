#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "qdamp/fields.hpp"
#include "qdamp/grid.hpp"

namespace qdamp {

// Discrete Hamiltonian for A = 0: three-point kinetic stencil plus a diagonal
// potential. Real symmetric tridiagonal with a constant off-diagonal.
struct HamiltonianMatrix {
    std::vector<double> diag;   // hbar^2/(m dx^2) + V_i
    double off = 0.0;           // -hbar^2/(2 m dx^2)
    Grid1D grid;
    double t = 0.0;             // time of the potential baked into diag
};

inline HamiltonianMatrix assemble_hamiltonian(const Grid1D& grid, const RealField& V,
                                              const UnitsConfig& units = {}) {
    require_same_grid(grid, V.grid, "assemble_hamiltonian");
    const double k = units.hbar * units.hbar / (units.mass * grid.dx * grid.dx);
    HamiltonianMatrix h;
    h.grid = grid;
    h.off = -0.5 * k;
    h.diag.resize(static_cast<size_t>(grid.n_interior));
    for (int i = 0; i < grid.n_interior; ++i) h.diag[static_cast<size_t>(i)] = k + V[i];
    return h;
}

inline void apply_hamiltonian(const HamiltonianMatrix& h, const Complex* psi, Complex* out) {
    const int n = static_cast<int>(h.diag.size());
    const double off = h.off;
    out[0] = h.diag[0] * psi[0] + off * psi[1];
    for (int i = 1; i < n - 1; ++i)
        out[i] = h.diag[static_cast<size_t>(i)] * psi[i] + off * (psi[i - 1] + psi[i + 1]);
    out[n - 1] = h.diag[static_cast<size_t>(n - 1)] * psi[n - 1] + off * psi[n - 2];
}

inline ComplexField apply_hamiltonian(const HamiltonianMatrix& h, const ComplexField& psi) {
    require_same_grid(h.grid, psi.grid, "apply_hamiltonian");
    ComplexField out(psi.grid);
    apply_hamiltonian(h, psi.values.data(), out.values.data());
    return out;
}

namespace detail {

// All eigenvalues of a symmetric tridiagonal matrix by QL sweeps with
// implicit shifts. diag and sub are copied; sub[i] couples rows i and i+1.
inline std::vector<double> tridiag_eigenvalues(std::vector<double> d, std::vector<double> e) {
    const int n = static_cast<int>(d.size());
    if (static_cast<int>(e.size()) != n - 1)
        throw std::invalid_argument("tridiag_eigenvalues: subdiagonal size must be n-1");
    e.push_back(0.0);
    const double eps = std::numeric_limits<double>::epsilon();
    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= eps * dd) break;
            }
            if (m != l) {
                if (iter++ == 50)
                    throw std::runtime_error("tridiag_eigenvalues: QL did not converge");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                int i;
                for (i = m - 1; i >= l; --i) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {  // negligible rotation: split and restart
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                }
                if (r == 0.0 && i >= l) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
    std::sort(d.begin(), d.end());
    return d;
}

// Deterministic start vector for inverse iteration (splitmix64 stream).
inline void seeded_start(std::vector<double>& v, int index) {
    std::uint64_t s = 0x9E3779B97F4A7C15ull + 0x61C88647ull * static_cast<std::uint64_t>(index + 1);
    for (auto& x : v) {
        s += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = s;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        z ^= z >> 31;
        x = static_cast<double>(z >> 11) * 0x1.0p-53 - 0.5;
    }
}

// Solve (T - lambda I) x = b for tridiagonal T with constant off-diagonal,
// Gaussian elimination with partial pivoting (fill-in second superdiagonal).
// b is overwritten with the solution.
inline void shifted_tridiag_solve(const std::vector<double>& diag, double off, double lambda,
                                  std::vector<double>& b, std::vector<double>& dd,
                                  std::vector<double>& du, std::vector<double>& du2,
                                  std::vector<double>& dl) {
    const int n = static_cast<int>(diag.size());
    dd.resize(diag.size());
    du.assign(diag.size(), 0.0);
    du2.assign(diag.size(), 0.0);
    dl.assign(diag.size(), off);
    for (int i = 0; i < n; ++i) dd[i] = diag[static_cast<size_t>(i)] - lambda;
    for (int i = 0; i + 1 < n; ++i) du[i] = off;

    double scale = std::abs(off);
    for (double v : dd) scale = std::max(scale, std::abs(v));
    const double tiny =
        std::numeric_limits<double>::epsilon() * scale + std::numeric_limits<double>::min();

    for (int i = 0; i + 1 < n; ++i) {
        if (std::abs(dd[i]) >= std::abs(dl[i])) {
            if (dd[i] == 0.0) dd[i] = tiny;
            const double fact = dl[i] / dd[i];
            dd[i + 1] -= fact * du[i];
            b[i + 1] -= fact * b[i];
        } else {
            const double fact = dd[i] / dl[i];
            dd[i] = dl[i];
            const double tmp = dd[i + 1];
            dd[i + 1] = du[i] - fact * tmp;
            if (i + 2 < n) {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du2[i];
            }
            du[i] = tmp;
            std::swap(b[i], b[i + 1]);
            b[i + 1] -= fact * b[i];
        }
    }
    if (dd[n - 1] == 0.0) dd[n - 1] = tiny;
    b[n - 1] /= dd[n - 1];
    if (n > 1) b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / dd[n - 2];
    for (int i = n - 3; i >= 0; --i)
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / dd[i];
}

}  // namespace detail

// Orthonormal eigenfunctions (ascending eigenvalues) of the static
// Hamiltonian under the discrete inner product <f,g> = dx * sum f_i g_i.
struct EigenBasis {
    std::vector<double> energies;
    std::vector<RealField> states;
    Grid1D grid;

    int size() const { return static_cast<int>(energies.size()); }
};

// Lowest k_max eigenpairs: QL for the full eigenvalue set, inverse iteration
// for the vectors, modified Gram-Schmidt within near-degenerate clusters.
// Eigenvectors are real with the first nonzero component positive.
inline EigenBasis solve_eigenbasis(const HamiltonianMatrix& h, int k_max) {
    const int n = static_cast<int>(h.diag.size());
    if (k_max < 1 || k_max > n)
        throw std::invalid_argument("solve_eigenbasis: k_max must be in [1, n_interior]");

    std::vector<double> sub(static_cast<size_t>(n - 1), h.off);
    std::vector<double> evals = detail::tridiag_eigenvalues(h.diag, sub);

    double hnorm = 0.0;
    for (double d : h.diag) hnorm = std::max(hnorm, std::abs(d) + 2.0 * std::abs(h.off));

    EigenBasis basis;
    basis.grid = h.grid;
    basis.energies.assign(evals.begin(), evals.begin() + k_max);
    basis.states.reserve(static_cast<size_t>(k_max));

    std::vector<double> v(static_cast<size_t>(n)), w(static_cast<size_t>(n));
    std::vector<double> dd, du, du2, dl;
    const double cluster_gap = 1e3 * std::numeric_limits<double>::epsilon() * std::max(1.0, hnorm);

    int cluster_begin = 0;
    for (int k = 0; k < k_max; ++k) {
        const double lambda = basis.energies[static_cast<size_t>(k)];
        if (k > 0 && lambda - basis.energies[static_cast<size_t>(k - 1)] > cluster_gap)
            cluster_begin = k;

        detail::seeded_start(v, k);
        double resid = std::numeric_limits<double>::infinity();
        const double target = 1e-11 * std::max(1.0, std::abs(lambda)) +
                              8.0 * std::numeric_limits<double>::epsilon() * hnorm;
        for (int pass = 0; pass < 12 && resid > target; ++pass) {
            detail::shifted_tridiag_solve(h.diag, h.off, lambda, v, dd, du, du2, dl);
            // guard against overflow when lambda sits on an eigenvalue to the
            // last bit: rescale by the largest entry before normalizing
            double vmax = 0.0;
            for (double x : v) vmax = std::max(vmax, std::abs(x));
            if (!(vmax > 0.0) || !std::isfinite(vmax)) {
                detail::seeded_start(v, k + 101 * (pass + 1));
                continue;
            }
            for (double& x : v) x /= vmax;
            // project out converged members of the same cluster
            for (int j = cluster_begin; j < k; ++j) {
                const auto& u = basis.states[static_cast<size_t>(j)].values;
                double dot = 0.0;
                for (int i = 0; i < n; ++i) dot += u[static_cast<size_t>(i)] * v[static_cast<size_t>(i)];
                dot *= h.grid.dx;
                for (int i = 0; i < n; ++i) v[static_cast<size_t>(i)] -= dot * u[static_cast<size_t>(i)];
            }
            double nrm = 0.0;
            for (double x : v) nrm += x * x;
            nrm = std::sqrt(nrm * h.grid.dx);
            if (nrm == 0.0) { detail::seeded_start(v, k + 101); continue; }
            for (double& x : v) x /= nrm;
            // residual ||H v - lambda v|| under the dx-weighted norm
            w[0] = h.diag[0] * v[0] + h.off * v[1] - lambda * v[0];
            for (int i = 1; i < n - 1; ++i)
                w[static_cast<size_t>(i)] = h.diag[static_cast<size_t>(i)] * v[static_cast<size_t>(i)] +
                                            h.off * (v[static_cast<size_t>(i - 1)] + v[static_cast<size_t>(i + 1)]) -
                                            lambda * v[static_cast<size_t>(i)];
            w[static_cast<size_t>(n - 1)] = h.diag[static_cast<size_t>(n - 1)] * v[static_cast<size_t>(n - 1)] +
                                            h.off * v[static_cast<size_t>(n - 2)] - lambda * v[static_cast<size_t>(n - 1)];
            double rs = 0.0;
            for (double x : w) rs += x * x;
            resid = std::sqrt(rs * h.grid.dx);
        }
        if (!(resid <= 1e-8 * std::max(1.0, std::abs(lambda))))
            throw std::runtime_error("solve_eigenbasis: inverse iteration did not converge for level " +
                                     std::to_string(k));
        // sign convention: first component of noticeable magnitude positive
        double vmax = 0.0;
        for (double x : v) vmax = std::max(vmax, std::abs(x));
        for (double x : v) {
            if (std::abs(x) > 1e-12 * vmax) {
                if (x < 0.0)
                    for (double& y : v) y = -y;
                break;
            }
        }
        basis.states.emplace_back(h.grid, v);
    }
    return basis;
}

struct ProjectionResult {
    std::vector<Complex> coefficients;  // C_n = <phi_n, psi>
    double residual = 0.0;              // 1 - sum |C_n|^2
};

inline ProjectionResult project_coefficients(const ComplexField& psi, const EigenBasis& basis) {
    require_same_grid(psi.grid, basis.grid, "project_coefficients");
    ProjectionResult out;
    out.coefficients.reserve(basis.states.size());
    double total = 0.0;
    for (const auto& phi : basis.states) {
        Complex c{0.0, 0.0};
        for (int i = 0; i < psi.size(); ++i) c += phi[i] * psi[i];
        c *= psi.grid.dx;
        total += std::norm(c);
        out.coefficients.push_back(c);
    }
    out.residual = 1.0 - total;
    return out;
}

// Nonlinear damping term R psi = beta * (d rho / dt) * psi.
struct DampingConfig {
    double beta = 0.0;
};

// d rho/dt evaluated through the equation of motion: because the damping term
// is a real multiplicative field, it drops out of psi* dpsi/dt + c.c., leaving
//   d rho/dt = (2/hbar) Im(psi* (H psi))   pointwise.
// This makes R psi computable without differencing psi in time.
inline void drho_dt(const HamiltonianMatrix& h, const Complex* psi, const Complex* h_psi,
                    double hbar, double* out) {
    const int n = static_cast<int>(h.diag.size());
    const double w = 2.0 / hbar;
    for (int i = 0; i < n; ++i) out[i] = w * std::imag(std::conj(psi[i]) * h_psi[i]);
}

inline RealField drho_dt(const ComplexField& psi, const HamiltonianMatrix& h,
                         const UnitsConfig& units = {}) {
    require_same_grid(psi.grid, h.grid, "drho_dt");
    ComplexField h_psi = apply_hamiltonian(h, psi);
    RealField out(psi.grid);
    drho_dt(h, psi.values.data(), h_psi.values.data(), units.hbar, out.values.data());
    return out;
}

inline ComplexField apply_damping(const DampingConfig& cfg, const ComplexField& psi,
                                  const HamiltonianMatrix& h, const UnitsConfig& units = {}) {
    RealField u = drho_dt(psi, h, units);
    ComplexField out(psi.grid);
    for (int i = 0; i < psi.size(); ++i) out[i] = cfg.beta * u[i] * psi[i];
    return out;
}

}  // namespace qdamp
