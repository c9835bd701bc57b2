#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace kslab {

using Vec3 = std::array<double, 3>;

// Criticality parameter (p3 - p1)^2 - 4 p1 of a half-edge proportion vector.
double theta_param(double p1, double p2, double p3);

enum class Phase { subcritical, critical, supercritical };
Phase classify_phase(double theta, double tol = 1e-12);

// Core half-edge fraction 4 Theta / (3 + Theta) when positive. This is the
// surviving mass of the maximal solution, i.e. of a start with no degree-2
// mass, where the conserved ratio S / z^2 equals 4 / (3 + Theta). A general
// start (p1, p2, p3) survives with mass Theta / p3^2 instead.
double core_density(double theta);

// Drift of the rescaled chain, homogeneous of degree 0 in (X, Y, Z).
Vec3 phi(const Vec3& state);
// One-step second-moment limits, same scaling.
Vec3 psi(const Vec3& state);
// The drift written as a cubic polynomial in proportions (x + y + z = 1),
// grouped by powers of z; must agree with phi on the simplex.
Vec3 phi_polynomial(double x, double y, double z);

// Leaf-free reduced system. In clock time t (states x = X/S, z = Z/S):
//   dx/dt = (x - z) z / S,  dz/dt = (-2 + x - z) z / S,  dS/dt = 2(-2 + x - z),
// and in the stretched time u with du = dt / S the (x, z) pair is autonomous.
Vec3 reduced_rhs_t(double x, double z, double S);
std::array<double, 2> reduced_rhs_u(double x, double z);

struct SolutionParams {
    double b = 1.0;    // sqrt(1 + Theta / 4)
    double u0 = 0.0;   // pole offset: the solution lives on u + u0 > 0
    double theta = 0.0;
};

// The closed solution family of the reduced system in stretched time:
//   z = b^2 / sinh^2(b(u+u0)),  x = (b coth(b(u+u0)) - 1)^2 + 1 - b^2,
//   y = -2 b^2 coth^2 + 2 b coth + 2 b^2 - 1.
Vec3 closed_form(const SolutionParams& params, double u);

// Pole offset of the maximal solution (the one with y(0) = 0).
double maximal_u0(double b);

struct ClosedFormStart {
    SolutionParams params;
    double u_start = 0.0;
};

// Places a simplex initial condition on its closed-form solution: b from
// Theta, u0 from the maximal solution, u_start from y(u_start) = p2 by
// bisection (y is strictly increasing). Requires p1 > 0 and p3 > 0.
ClosedFormStart params_from_initial(double p1, double p2, double p3);

// Supercritical end state {Y, Z, S} of the maximal solution (start with no
// degree-2 mass) at the extinction time, Theta > 0:
//   Y = 4 Theta (1 - sqrt(Theta)) / (3 + Theta),
//   Z = 4 Theta^{3/2} / (3 + Theta),  S = Y + Z = 4 Theta / (3 + Theta).
// A general start rescales S to S0 * Theta / z0^2 (conservation of S / z^2);
// the proportions (1 - sqrt(Theta), sqrt(Theta)) are start-independent.
Vec3 extinction_values(double theta);

// Critical trajectory near extinction, eps = t_ext - t:
//   (X, Y, Z) ~ (3 eps^2, 4 eps, 4 sqrt(3) eps^{3/2}).
Vec3 critical_asymptotics(double eps);

struct StepControl {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double h_init = 1e-4;
    double h_max = 0.01;        // keeps the dense output accurate
    double h_floor = 1e-10;     // forced acceptance below this step size
    double h_fail = 1e-14;      // step collapse: solver failure
    double x_threshold = 1e-13; // X value treated as extinct
    std::uint64_t max_steps = 4000000;
};

// Dense numeric solution of (X, Y, Z)' = phi up to the first zero of X.
// Nodes carry derivatives for cubic Hermite evaluation in between, plus the
// running time change gamma(t) = integral of ds / S(s) as a diagnostic.
struct FluidTrajectory {
    std::vector<double> t;
    std::vector<Vec3> state;
    std::vector<Vec3> deriv;
    std::vector<double> gamma;
    double t_ext = 0.0;
    Vec3 extinction_state{};

    Vec3 eval(double at) const;
    Vec3 eval_deriv(double at) const;
    double eval_gamma(double at) const;
};

FluidTrajectory integrate(double p1, double p2, double p3, const StepControl& control = {});

}  // namespace kslab
