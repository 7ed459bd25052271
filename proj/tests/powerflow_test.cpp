#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mgsim/powerflow.hpp"
#include "test_support.hpp"

namespace mgsim {
namespace {

using testing::problem_from;
using testing::random_meshed;
using testing::random_radial;

AdmittanceMatrix unit_pair() {
    AdmittanceMatrix y(2, 2);
    y(0, 0) = 1; y(0, 1) = -1;
    y(1, 0) = -1; y(1, 1) = 1;
    return y;
}

// Two-bus resistive feeder: slack at 1 pu, line resistance r (pu), load p (pu).
PowerFlowProblem two_bus_problem(double r, double p) {
    PowerFlowProblem pf;
    pf.admittance = unit_pair();
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t k = 0; k < 2; ++k) pf.admittance(i, k) /= r;
    pf.slack_index = 0;
    pf.injections = {{0.0, 0.0}, {-p, 0.0}};
    return pf;
}

// Closed form of V^2 - V + p r = 0 (receiving-end voltage, upper root).
double two_bus_oracle(double r, double p) { return (1.0 + std::sqrt(1.0 - 4.0 * p * r)) / 2.0; }

TEST(ComputeInjections, FlatStartIsZero) {
    std::mt19937_64 gen(5);
    const auto y = build_admittance(random_meshed(gen, 5, 0.3), {});
    const std::vector<double> vm(5, 1.0), va(5, 0.0);
    for (const auto& s : compute_injections(vm, va, y)) {
        EXPECT_NEAR(s.real(), 0.0, 1e-9);
        EXPECT_NEAR(s.imag(), 0.0, 1e-9);
    }
}

TEST(ComputeInjections, TwoBusHandEvaluation) {
    const std::vector<double> vm = {1.0, 0.9}, va = {0.0, 0.0};
    const auto s = compute_injections(vm, va, unit_pair());
    EXPECT_NEAR(s[0].real(), 0.1, 1e-15);
    EXPECT_NEAR(s[1].real(), -0.09, 1e-15);
    EXPECT_EQ(s[0].imag(), 0.0);
}

TEST(ComputeInjections, InvariantUnderCommonAngleShift) {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> d(-0.3, 0.3);
    auto net = random_meshed(gen, 5, 0.4);
    net.lines[0].reactance = 0.2;
    const auto y = build_admittance(net, {});
    std::vector<double> vm(5), va(5), shifted(5);
    for (int i = 0; i < 5; ++i) {
        vm[i] = 1.0 + 0.1 * d(gen);
        va[i] = d(gen);
        shifted[i] = va[i] + 0.7;
    }
    const auto a = compute_injections(vm, va, y);
    const auto b = compute_injections(vm, shifted, y);
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(std::abs(a[i] - b[i]), 0.0, 1e-9 * (1 + std::abs(a[i])));
}

TEST(NewtonRaphson, ZeroInjectionsConvergeImmediately) {
    const auto pf = two_bus_problem(0.01, 0.0);
    const auto sol = solve_newton_raphson(pf);
    EXPECT_TRUE(sol.converged);
    EXPECT_EQ(sol.iterations, 0);
    EXPECT_EQ(sol.v_mag, std::vector<double>({1.0, 1.0}));
    EXPECT_EQ(sol.v_angle, std::vector<double>({0.0, 0.0}));
}

TEST(NewtonRaphson, TwoBusClosedForm) {
    const double r = 0.0013044;
    const auto sol = solve_newton_raphson(two_bus_problem(r, 0.5));
    ASSERT_TRUE(sol.converged);
    EXPECT_NEAR(sol.v_mag[1], two_bus_oracle(r, 0.5), 1e-12);
    EXPECT_NEAR(sol.v_mag[1], 0.99934742, 1e-7);
    EXPECT_NEAR(sol.v_mag[1] * 230.0, 229.85, 0.01);
    EXPECT_EQ(sol.v_mag[0], 1.0);
    EXPECT_EQ(sol.v_angle[0], 0.0);
    EXPECT_LE(sol.max_mismatch, 1e-8);
}

TEST(GaussSeidel, TwoBusClosedForm) {
    const double r = 0.0013044;
    const auto gs = solve_gauss_seidel(two_bus_problem(r, 0.5));
    ASSERT_TRUE(gs.converged);
    EXPECT_NEAR(gs.v_mag[1], two_bus_oracle(r, 0.5), 1e-9);
    const auto nr = solve_newton_raphson(two_bus_problem(r, 0.5));
    EXPECT_NEAR(gs.v_mag[1], nr.v_mag[1], 1e-6);
}

TEST(GaussSeidel, ZeroInjections) {
    const auto sol = solve_gauss_seidel(two_bus_problem(0.01, 0.0));
    EXPECT_TRUE(sol.converged);
    EXPECT_EQ(sol.iterations, 0);
}

TEST(GaussSeidel, ZeroDiagonalThrows) {
    PowerFlowProblem pf;
    pf.admittance = AdmittanceMatrix(2, 2);
    pf.injections.assign(2, {});
    EXPECT_THROW(solve_gauss_seidel(pf), SolverError);
}

TEST(NewtonRaphson, SingularJacobianThrows) {
    PowerFlowProblem pf;
    pf.admittance = AdmittanceMatrix(2, 2);
    pf.injections = {{0, 0}, {-0.1, 0}};
    EXPECT_THROW(solve_newton_raphson(pf), SolverError);
}

TEST(NewtonRaphson, VoltageCollapseReportsNonConvergence) {
    // p r = 1 > 1/4: the two-bus quadratic has no real root.
    SolverOptions opt;
    opt.max_iterations = 30;
    PowerFlowSolution sol;
    try {
        sol = solve_newton_raphson(two_bus_problem(1.0, 1.0), opt);
    } catch (const SolverError&) {
        SUCCEED();
        return;
    }
    EXPECT_FALSE(sol.converged);
    EXPECT_GT(sol.max_mismatch, opt.tolerance);
}

TEST(GaussSeidel, IterationCapReportsNonConvergence) {
    SolverOptions opt = SolverOptions::gauss_seidel();
    opt.max_iterations = 3;
    const auto sc = testing::load_bundled("case2");
    const auto sol = solve_gauss_seidel(problem_from(sc.network, sc.per_unit_base()), opt);
    EXPECT_FALSE(sol.converged);
    EXPECT_EQ(sol.iterations, 3);
}

TEST(Solvers, RejectBadProblems) {
    auto pf = two_bus_problem(0.01, 0.1);
    pf.injections.pop_back();
    EXPECT_THROW(solve_newton_raphson(pf), InvalidParameter);
    pf = two_bus_problem(0.01, 0.1);
    pf.slack_index = 5;
    EXPECT_THROW(solve_gauss_seidel(pf), InvalidParameter);
    SolverOptions opt;
    opt.tolerance = 0;
    EXPECT_THROW(solve_newton_raphson(two_bus_problem(0.01, 0.1), opt), InvalidParameter);
}

TEST(Solvers, SingleBusNetwork) {
    PowerFlowProblem pf;
    pf.admittance = AdmittanceMatrix(1, 1);
    pf.injections = {{0, 0}};
    EXPECT_TRUE(solve_newton_raphson(pf).converged);
    EXPECT_TRUE(solve_gauss_seidel(pf).converged);
}

// Central differences of compute_injections with respect to the NR unknowns.
Matrix<double> finite_difference_jacobian(const PowerFlowProblem& pf, std::vector<double> vm,
                                          std::vector<double> va, double h) {
    std::vector<std::size_t> pq;
    for (std::size_t i = 0; i < pf.size(); ++i)
        if (i != pf.slack_index) pq.push_back(i);
    const std::size_t m = pq.size();
    Matrix<double> fd(2 * m, 2 * m);
    for (std::size_t col = 0; col < 2 * m; ++col) {
        auto& x = col < m ? va[pq[col]] : vm[pq[col - m]];
        const double x0 = x;
        x = x0 + h;
        const auto plus = compute_injections(vm, va, pf.admittance);
        x = x0 - h;
        const auto minus = compute_injections(vm, va, pf.admittance);
        x = x0;
        for (std::size_t a = 0; a < m; ++a) {
            fd(a, col) = (plus[pq[a]].real() - minus[pq[a]].real()) / (2 * h);
            fd(m + a, col) = (plus[pq[a]].imag() - minus[pq[a]].imag()) / (2 * h);
        }
    }
    return fd;
}

void expect_jacobian_matches(const PowerFlowProblem& pf, const std::vector<double>& vm,
                             const std::vector<double>& va) {
    const auto jac = power_flow_jacobian(pf, vm, va);
    const auto fd = finite_difference_jacobian(pf, vm, va, 1e-6);
    for (std::size_t r = 0; r < jac.rows(); ++r) {
        for (std::size_t c = 0; c < jac.cols(); ++c) {
            const double scale = std::max(std::abs(jac(r, c)), std::abs(fd(r, c)));
            ASSERT_LE(std::abs(jac(r, c) - fd(r, c)), 1e-5 * scale + 1e-9)
                << "entry (" << r << "," << c << ") analytic " << jac(r, c) << " fd " << fd(r, c);
        }
    }
}

TEST(Jacobian, MatchesFiniteDifferencesOnRandomNetworks) {
    std::mt19937_64 gen(1234);
    std::uniform_int_distribution<int> n_dist(2, 6);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = n_dist(gen);
        auto net = random_meshed(gen, n, 0.3);
        if (trial % 2) {
            for (auto& l : net.lines) l.reactance = 0.5 * l.resistance * (1 + d(gen));
        }
        auto pf = problem_from(net, {});
        pf.slack_index = static_cast<std::size_t>(trial) % static_cast<std::size_t>(n);
        std::vector<double> vm(n), va(n);
        for (int i = 0; i < n; ++i) {
            vm[i] = 1.0 + 0.1 * d(gen);
            va[i] = 0.2 * d(gen);
        }
        expect_jacobian_matches(pf, vm, va);
    }
}

// Slack injection minus (net load + series losses), with the net load taken
// from the injections the solved state actually produces.
double slack_balance_error(const Network& net, const PerUnitBase& base, const PowerFlowProblem& pf,
                           const PowerFlowSolution& sol) {
    const auto s = compute_injections(sol.v_mag, sol.v_angle, pf.admittance);
    double net_load = 0.0;
    for (std::size_t i = 0; i < pf.size(); ++i) {
        if (i != pf.slack_index) net_load -= s[i].real();
    }
    const double losses = line_losses(net, base, sol.v_mag, sol.v_angle);
    EXPECT_GE(losses, 0.0);
    return sol.slack_injection.real() - net_load - losses;
}

TEST(NewtonRaphson, CertificatesOnRandomRadialNetworks) {
    std::mt19937_64 gen(77);
    const PerUnitBase base;
    for (int trial = 0; trial < 100; ++trial) {
        testing::RadialOptions o;
        o.with_pv = trial % 2 == 0;
        o.with_reactance = trial % 3 == 0;
        const auto net = random_radial(gen, o);
        const auto pf = problem_from(net, base);
        const auto sol = solve_newton_raphson(pf);
        ASSERT_TRUE(sol.converged);
        // Mismatch-zero certificate.
        const auto s = compute_injections(sol.v_mag, sol.v_angle, pf.admittance);
        for (std::size_t i = 0; i < pf.size(); ++i) {
            if (i == pf.slack_index) continue;
            EXPECT_LE(std::abs(s[i].real() - pf.injections[i].real()), 1e-8);
            EXPECT_LE(std::abs(s[i].imag() - pf.injections[i].imag()), 1e-8);
        }
        EXPECT_LE(std::abs(slack_balance_error(net, base, pf, sol)), 1e-10);
    }
}

TEST(Solvers, AgreeOnRandomRadialNetworks) {
    std::mt19937_64 gen(2718);
    const PerUnitBase base;
    for (int trial = 0; trial < 100; ++trial) {
        testing::RadialOptions o;
        o.with_pv = trial % 2 == 1;
        const auto net = random_radial(gen, o);
        const auto pf = problem_from(net, base);
        const auto nr = solve_newton_raphson(pf);
        const auto gs = solve_gauss_seidel(pf);
        ASSERT_TRUE(nr.converged);
        ASSERT_TRUE(gs.converged) << "trial " << trial << " mismatch " << gs.max_mismatch;
        for (std::size_t i = 0; i < pf.size(); ++i) {
            EXPECT_NEAR(nr.v_mag[i], gs.v_mag[i], 1e-6);
            EXPECT_NEAR(nr.v_angle[i], gs.v_angle[i], 1e-6);
        }
    }
}

TEST(NewtonRaphson, RadialMonotonicityWithLoadsOnly) {
    std::mt19937_64 gen(31);
    const PerUnitBase base;
    for (int trial = 0; trial < 100; ++trial) {
        const auto net = random_radial(gen);
        const auto sol = solve_newton_raphson(problem_from(net, base));
        ASSERT_TRUE(sol.converged);
        // In the generated trees every line runs parent -> child.
        for (const auto& l : net.lines) {
            const auto parent = *net.bus_index(l.from);
            const auto child = *net.bus_index(l.to);
            EXPECT_LE(sol.v_mag[child], sol.v_mag[parent] + 1e-12);
        }
    }
}

TEST(SimpleDistribution, NightImport) {
    const std::vector<double> demands = {800, 800, 800};
    const std::vector<std::pair<Id, double>> prod = {{"wind", 300}, {"pv1", 0}, {"pv2", 0}};
    const auto d = simple_power_distribution(demands, prod);
    EXPECT_EQ(d.grid_power, 2100.0);
    EXPECT_EQ(d.total_demand, 2400.0);
    ASSERT_EQ(d.produced.size(), 3u);
    EXPECT_EQ(d.produced[0].second, 300.0);
}

TEST(SimpleDistribution, Export) {
    const std::vector<double> demands = {800, 800, 800};
    const std::vector<std::pair<Id, double>> prod = {{"wind", 1500}, {"pv1", 500}, {"pv2", 500}};
    EXPECT_EQ(simple_power_distribution(demands, prod).grid_power, -100.0);
}

TEST(SimpleDistribution, NoProduction) {
    const std::vector<double> demands = {800, 450.5};
    EXPECT_EQ(simple_power_distribution(demands, {}).grid_power, 1250.5);
}

TEST(SimpleDistribution, NegativeInputsRejected) {
    const std::vector<double> bad = {-1};
    EXPECT_THROW(simple_power_distribution(bad, {}), InvalidParameter);
    const std::vector<std::pair<Id, double>> prod = {{"w", -3}};
    EXPECT_THROW(simple_power_distribution({}, prod), InvalidParameter);
}

TEST(SimpleDistribution, ConservesExactlyOnArbitraryValues) {
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> w(0.0, 3000.0);
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<double> demands(1 + trial % 5);
        for (auto& x : demands) x = w(gen);
        std::vector<std::pair<Id, double>> prod;
        for (int k = 0; k < 1 + trial % 4; ++k) prod.emplace_back(Id("g" + std::to_string(k)), w(gen));
        const auto d = simple_power_distribution(demands, prod);
        double produced = 0.0;
        for (const auto& [id, p] : d.produced) produced += p;
        ASSERT_EQ(produced + d.grid_power - d.total_demand, 0.0);
        // Summation order does not matter either.
        double rev = d.grid_power;
        for (auto it = d.produced.rbegin(); it != d.produced.rend(); ++it) rev += it->second;
        ASSERT_EQ(rev - d.total_demand, 0.0);
        for (std::size_t k = 0; k < prod.size(); ++k) {
            ASSERT_NEAR(d.produced[k].second, prod[k].second, kDispatchQuantum);
        }
    }
}

}  // namespace
}  // namespace mgsim
