#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "mgsim/errors.hpp"
#include "mgsim/grid.hpp"
#include "mgsim/linalg.hpp"

namespace mgsim {

/// Per-unit AC power-flow problem. `injections` holds one complex power
/// (P + jQ, generation positive) per bus; the slack entry is ignored.
struct PowerFlowProblem {
    AdmittanceMatrix admittance;
    std::size_t slack_index = 0;
    std::vector<std::complex<double>> injections;

    [[nodiscard]] std::size_t size() const noexcept { return admittance.rows(); }
};

struct PowerFlowSolution {
    std::vector<double> v_mag;    ///< pu
    std::vector<double> v_angle;  ///< rad
    int iterations = 0;
    double max_mismatch = 0.0;    ///< pu
    std::complex<double> slack_injection;
    bool converged = false;
};

enum class SolverMethod { NewtonRaphson, GaussSeidel };

struct SolverOptions {
    SolverMethod method = SolverMethod::NewtonRaphson;
    double tolerance = 1e-8;
    int max_iterations = 50;

    [[nodiscard]] static SolverOptions newton_raphson() { return {}; }
    [[nodiscard]] static SolverOptions gauss_seidel() {
        return {SolverMethod::GaussSeidel, 1e-8, 5000};
    }
};

/// S_i = P_i + jQ_i at every bus for the voltage state (|V|, theta):
///   P_i = sum_k |V_i||V_k| (G_ik cos t_ik + B_ik sin t_ik)
///   Q_i = sum_k |V_i||V_k| (G_ik sin t_ik - B_ik cos t_ik),  t_ik = theta_i - theta_k
inline std::vector<std::complex<double>> compute_injections(std::span<const double> v_mag,
                                                            std::span<const double> v_angle,
                                                            const AdmittanceMatrix& y) {
    const std::size_t n = y.rows();
    if (v_mag.size() != n || v_angle.size() != n) {
        throw InvalidParameter("compute_injections: dimension mismatch");
    }
    std::vector<std::complex<double>> s(n);
    for (std::size_t i = 0; i < n; ++i) {
        double p = 0.0;
        double q = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double g = y(i, k).real();
            const double b = y(i, k).imag();
            if (g == 0.0 && b == 0.0) continue;
            const double t = v_angle[i] - v_angle[k];
            const double c = std::cos(t);
            const double sn = std::sin(t);
            const double vv = v_mag[i] * v_mag[k];
            p += vv * (g * c + b * sn);
            q += vv * (g * sn - b * c);
        }
        s[i] = {p, q};
    }
    return s;
}

namespace detail {

inline std::vector<std::size_t> pq_buses(const PowerFlowProblem& pf) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < pf.size(); ++i) {
        if (i != pf.slack_index) out.push_back(i);
    }
    return out;
}

inline void check_problem(const PowerFlowProblem& pf) {
    const std::size_t n = pf.size();
    if (pf.admittance.cols() != n || pf.injections.size() != n) {
        throw InvalidParameter("power flow: injection vector does not match admittance size");
    }
    if (n > 0 && pf.slack_index >= n) throw InvalidParameter("power flow: slack index out of range");
}

}  // namespace detail

/// Specified minus computed injections at the PQ buses, ordered
/// [dP for each PQ bus, dQ for each PQ bus].
inline std::vector<double> power_mismatch(const PowerFlowProblem& pf, std::span<const double> v_mag,
                                          std::span<const double> v_angle) {
    const auto pq = detail::pq_buses(pf);
    const auto s = compute_injections(v_mag, v_angle, pf.admittance);
    std::vector<double> f(2 * pq.size());
    for (std::size_t a = 0; a < pq.size(); ++a) {
        const std::size_t i = pq[a];
        f[a] = pf.injections[i].real() - s[i].real();
        f[pq.size() + a] = pf.injections[i].imag() - s[i].imag();
    }
    return f;
}

/// Analytic Jacobian of the computed PQ-bus injections with respect to
/// x = [theta of each PQ bus, |V| of each PQ bus]. Row order matches
/// power_mismatch; the mismatch Jacobian is the negation.
inline Matrix<double> power_flow_jacobian(const PowerFlowProblem& pf,
                                          std::span<const double> v_mag,
                                          std::span<const double> v_angle) {
    const auto pq = detail::pq_buses(pf);
    const std::size_t m = pq.size();
    const auto& y = pf.admittance;
    const auto s = compute_injections(v_mag, v_angle, y);
    Matrix<double> jac(2 * m, 2 * m);

    for (std::size_t a = 0; a < m; ++a) {
        const std::size_t i = pq[a];
        const double vi = v_mag[i];
        for (std::size_t b = 0; b < m; ++b) {
            const std::size_t k = pq[b];
            const double g = y(i, k).real();
            const double bb = y(i, k).imag();
            if (i == k) {
                const double p = s[i].real();
                const double q = s[i].imag();
                jac(a, b) = -q - bb * vi * vi;
                jac(a, m + b) = p / vi + g * vi;
                jac(m + a, b) = p - g * vi * vi;
                jac(m + a, m + b) = q / vi - bb * vi;
                continue;
            }
            if (g == 0.0 && bb == 0.0) continue;
            const double t = v_angle[i] - v_angle[k];
            const double c = std::cos(t);
            const double sn = std::sin(t);
            const double vk = v_mag[k];
            jac(a, b) = vi * vk * (g * sn - bb * c);
            jac(a, m + b) = vi * (g * c + bb * sn);
            jac(m + a, b) = -vi * vk * (g * c + bb * sn);
            jac(m + a, m + b) = vi * (g * sn - bb * c);
        }
    }
    return jac;
}

namespace detail {

inline double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (const double x : v) {
        if (!std::isfinite(x)) return x;
        m = std::max(m, std::abs(x));
    }
    return m;
}

inline void finish(const PowerFlowProblem& pf, PowerFlowSolution& sol) {
    if (pf.size() == 0) return;
    const auto s = compute_injections(sol.v_mag, sol.v_angle, pf.admittance);
    sol.slack_injection = s[pf.slack_index];
}

}  // namespace detail

/// Newton-Raphson from a flat start. Non-convergence is reported through
/// `converged`; a singular Jacobian raises SolverError.
inline PowerFlowSolution solve_newton_raphson(const PowerFlowProblem& pf,
                                              const SolverOptions& opt = SolverOptions::newton_raphson()) {
    detail::check_problem(pf);
    if (!(opt.tolerance > 0.0)) throw InvalidParameter("solver tolerance must be > 0");
    const std::size_t n = pf.size();
    const auto pq = detail::pq_buses(pf);
    const std::size_t m = pq.size();

    PowerFlowSolution sol;
    sol.v_mag.assign(n, 1.0);
    sol.v_angle.assign(n, 0.0);

    for (;;) {
        const auto f = power_mismatch(pf, sol.v_mag, sol.v_angle);
        sol.max_mismatch = detail::max_abs(f);
        if (!std::isfinite(sol.max_mismatch)) break;
        if (sol.max_mismatch <= opt.tolerance) {
            sol.converged = true;
            break;
        }
        if (sol.iterations >= opt.max_iterations) break;

        std::vector<double> dx;
        try {
            dx = solve_linear(power_flow_jacobian(pf, sol.v_mag, sol.v_angle), f);
        } catch (const SingularMatrix& e) {
            throw SolverError(std::string("Newton-Raphson: singular Jacobian (") + e.what() + ")");
        }
        for (std::size_t a = 0; a < m; ++a) {
            sol.v_angle[pq[a]] += dx[a];
            sol.v_mag[pq[a]] += dx[m + a];
        }
        ++sol.iterations;
    }
    detail::finish(pf, sol);
    return sol;
}

/// Gauss-Seidel sweeps on complex bus voltages:
///   V_i <- (conj(S_i) / conj(V_i) - sum_{k != i} Y_ik V_k) / Y_ii
/// with the slack bus held at 1 pu. Convergence is judged on the same
/// injection mismatch as Newton-Raphson.
inline PowerFlowSolution solve_gauss_seidel(const PowerFlowProblem& pf,
                                            const SolverOptions& opt = SolverOptions::gauss_seidel()) {
    detail::check_problem(pf);
    if (!(opt.tolerance > 0.0)) throw InvalidParameter("solver tolerance must be > 0");
    const std::size_t n = pf.size();
    const auto& y = pf.admittance;
    const auto pq = detail::pq_buses(pf);
    for (const auto i : pq) {
        if (y(i, i) == 0.0) {
            throw SolverError("Gauss-Seidel: zero diagonal admittance at bus index " +
                              std::to_string(i));
        }
    }

    std::vector<std::complex<double>> v(n, {1.0, 0.0});
    PowerFlowSolution sol;
    sol.v_mag.assign(n, 1.0);
    sol.v_angle.assign(n, 0.0);

    for (;;) {
        sol.max_mismatch = detail::max_abs(power_mismatch(pf, sol.v_mag, sol.v_angle));
        if (!std::isfinite(sol.max_mismatch)) break;
        if (sol.max_mismatch <= opt.tolerance) {
            sol.converged = true;
            break;
        }
        if (sol.iterations >= opt.max_iterations) break;

        for (const auto i : pq) {
            std::complex<double> acc = std::conj(pf.injections[i]) / std::conj(v[i]);
            for (std::size_t k = 0; k < n; ++k) {
                if (k != i) acc -= y(i, k) * v[k];
            }
            v[i] = acc / y(i, i);
        }
        for (std::size_t i = 0; i < n; ++i) {
            sol.v_mag[i] = std::abs(v[i]);
            sol.v_angle[i] = std::arg(v[i]);
        }
        ++sol.iterations;
    }
    detail::finish(pf, sol);
    return sol;
}

inline PowerFlowSolution solve_power_flow(const PowerFlowProblem& pf, const SolverOptions& opt) {
    return opt.method == SolverMethod::NewtonRaphson ? solve_newton_raphson(pf, opt)
                                                     : solve_gauss_seidel(pf, opt);
}

/// Total series loss sum Re(z) |I|^2 over all lines, in pu.
inline double line_losses(const Network& net, const PerUnitBase& base,
                          std::span<const double> v_mag, std::span<const double> v_angle) {
    double total = 0.0;
    for (const auto& line : net.lines) {
        const auto a = net.bus_index(line.from);
        const auto b = net.bus_index(line.to);
        if (!a || !b) throw InvalidParameter("line_losses: dangling line '" + line.id.str() + "'");
        const std::complex<double> z = line.impedance() / base.z_base();
        const auto va = std::polar(v_mag[*a], v_angle[*a]);
        const auto vb = std::polar(v_mag[*b], v_angle[*b]);
        total += z.real() * std::norm((va - vb) / z);
    }
    return total;
}

struct Dispatch {
    std::vector<std::pair<Id, double>> produced;  ///< W per generator
    double total_demand = 0.0;                    ///< W
    double grid_power = 0.0;                      ///< W, positive = import

    bool operator==(const Dispatch&) const = default;
};

/// Resolution of dispatched powers. Quantizing to a dyadic grid keeps every
/// sum and difference of dispatch values exact in double precision (up to
/// ~2^36 W in total), so the balance identity holds bit-for-bit.
inline constexpr double kDispatchQuantum = 0x1.0p-16;  // W

inline double quantize_power(double watts) noexcept {
    return std::round(watts / kDispatchQuantum) * kDispatchQuantum;
}

/// Lossless balance: every renewable dispatches its full output and the grid
/// connection covers the remainder.
inline Dispatch simple_power_distribution(std::span<const double> demands,
                                          std::span<const std::pair<Id, double>> productions) {
    Dispatch d;
    for (const double w : demands) {
        if (!(w >= 0.0)) throw InvalidParameter("simple_power_distribution: negative demand");
        d.total_demand += quantize_power(w);
    }
    double produced = 0.0;
    for (const auto& [id, w] : productions) {
        if (!(w >= 0.0)) throw InvalidParameter("simple_power_distribution: negative production");
        const double q = quantize_power(w);
        d.produced.emplace_back(id, q);
        produced += q;
    }
    d.grid_power = d.total_demand - produced;
    return d;
}

}  // namespace mgsim
