#include "kslab/fluid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kslab {

namespace {

void check_simplex(double p1, double p2, double p3) {
    if (!std::isfinite(p1) || !std::isfinite(p2) || !std::isfinite(p3)) {
        throw std::invalid_argument("proportions: non-finite input");
    }
    if (p1 < -1e-12 || p2 < -1e-12 || p3 < -1e-12) {
        throw std::invalid_argument("proportions: negative component");
    }
    if (std::abs(p1 + p2 + p3 - 1.0) > 1e-9) {
        throw std::invalid_argument("proportions: components must sum to 1");
    }
}

}  // namespace

double theta_param(double p1, double p2, double p3) {
    check_simplex(p1, p2, p3);
    return (p3 - p1) * (p3 - p1) - 4.0 * p1;
}

Phase classify_phase(double theta, double tol) {
    if (std::abs(theta) <= tol) return Phase::critical;
    return theta < 0.0 ? Phase::subcritical : Phase::supercritical;
}

double core_density(double theta) {
    if (theta <= 0.0) return 0.0;
    return 4.0 * theta / (3.0 + theta);
}

Vec3 phi(const Vec3& state) {
    const double s = state[0] + state[1] + state[2];
    if (!(s > 0.0)) throw std::domain_error("phi: total mass must be positive");
    const double x = state[0] / s;
    const double y = state[1] / s;
    const double z = state[2] / s;
    const double dx = -2.0 * x - y * z - 3.0 * x * x * z - 2.0 * x * y + y * y * z -
                      2.0 * x * y * z - z * z * z - 4.0 * x * z * z;
    const double dy = 2.0 * (2.0 * z * z * z - x * y - 2.0 * y * y * z - 2.0 * x * y * z -
                             2.0 * y * y + 2.0 * x * z * z);
    const double dz = 3.0 * (-y * z - y * y * z - 4.0 * y * z * z - x * x * z -
                             2.0 * x * y * z - 4.0 * x * z * z - 3.0 * z * z * z);
    return {dx, dy, dz};
}

Vec3 psi(const Vec3& state) {
    const double s = state[0] + state[1] + state[2];
    if (!(s > 0.0)) throw std::domain_error("psi: total mass must be positive");
    const double x = state[0] / s;
    const double y = state[1] / s;
    const double z = state[2] / s;
    // Leading-order E[(delta X)^2], E[(delta Y)^2], E[(delta Z)^2] of one
    // removal step, from the same transition case analysis as phi; each
    // component dominates the squared drift (Jensen).
    const double sx = 4.0 * x + 4.0 * x * y + y * z + y * y * z + 9.0 * x * x * z +
                      2.0 * x * y * z + 8.0 * x * z * z + z * z * z;
    const double sy = 4.0 * x * y + 16.0 * y * y + 16.0 * y * y * z + 8.0 * x * y * z +
                      8.0 * x * z * z + 16.0 * z * z * z;
    const double sz = 9.0 * y * z + 9.0 * y * y * z + 72.0 * y * z * z + 9.0 * x * x * z +
                      18.0 * x * y * z + 72.0 * x * z * z + 81.0 * z * z * z;
    return {sx, sy, sz};
}

Vec3 phi_polynomial(double x, double y, double z) {
    const double dx = -2.0 * x * (1.0 + y) + z * (-y + y * y - 3.0 * x * x - 2.0 * x * y) +
                      z * z * (-4.0 * x) - z * z * z;
    const double dy =
        2.0 * (-y * (x + 2.0 * y) - 2.0 * y * z * (x + y) + 2.0 * x * z * z + 2.0 * z * z * z);
    const double dz = 3.0 * (-z * (y + y * y + x * x + 2.0 * x * y) -
                             4.0 * z * z * (x + y) - 3.0 * z * z * z);
    return {dx, dy, dz};
}

Vec3 reduced_rhs_t(double x, double z, double S) {
    if (!(S > 0.0)) throw std::domain_error("reduced system: S must be positive");
    return {(x - z) * z / S, (-2.0 + x - z) * z / S, 2.0 * (-2.0 + x - z)};
}

std::array<double, 2> reduced_rhs_u(double x, double z) {
    return {(x - z) * z, (-2.0 + x - z) * z};
}

Vec3 closed_form(const SolutionParams& params, double u) {
    const double b = params.b;
    if (!(b > 0.5)) throw std::domain_error("closed_form: requires b > 1/2");
    const double w = u + params.u0;
    if (!(w > 0.0)) throw std::domain_error("closed_form: u + u0 must be positive");
    const double sh = std::sinh(b * w);
    const double co = std::cosh(b * w) / sh;  // coth
    const double z = b * b / (sh * sh);
    const double x = (b * co - 1.0) * (b * co - 1.0) + 1.0 - b * b;
    const double y = -2.0 * b * b * co * co + 2.0 * b * co + 2.0 * b * b - 1.0;
    return {x, y, z};
}

double maximal_u0(double b) {
    if (!(b > 0.5)) throw std::domain_error("maximal_u0: requires b > 1/2");
    const double root = std::sqrt(4.0 * b * b - 1.0);
    return std::log(1.0 + 2.0 * b + 2.0 * b * root / (2.0 * b - 1.0)) / (2.0 * b);
}

ClosedFormStart params_from_initial(double p1, double p2, double p3) {
    const double theta = theta_param(p1, p2, p3);
    if (!(p1 > 0.0)) {
        throw std::domain_error("params_from_initial: needs a positive leaf fraction");
    }
    if (!(p3 > 0.0)) {
        throw std::domain_error("params_from_initial: needs a positive degree-3 fraction");
    }
    ClosedFormStart out;
    out.params.theta = theta;
    out.params.b = std::sqrt(1.0 + theta / 4.0);
    out.params.u0 = maximal_u0(out.params.b);
    if (p2 < 1e-14) {
        out.u_start = 0.0;
        return out;
    }
    // y is strictly increasing with y(0) = 0 and y(inf) = 2b - 1 > p2 on any
    // valid simplex point, so the root is bracketed by doubling.
    auto offset = [&](double u) { return closed_form(out.params, u)[1] - p2; };
    double lo = 0.0;
    double hi = 1.0;
    int guard = 0;
    while (offset(hi) <= 0.0) {
        lo = hi;
        hi *= 2.0;
        if (++guard > 200) {
            throw std::domain_error("params_from_initial: degree-2 fraction out of range");
        }
    }
    for (int i = 0; i < 200 && hi - lo > 1e-16 * std::max(1.0, hi); ++i) {
        const double mid = 0.5 * (lo + hi);
        (offset(mid) <= 0.0 ? lo : hi) = mid;
    }
    out.u_start = 0.5 * (lo + hi);
    return out;
}

Vec3 extinction_values(double theta) {
    if (!(theta > 0.0)) throw std::domain_error("extinction_values: requires Theta > 0");
    const double s = 4.0 * theta / (3.0 + theta);
    const double root = std::sqrt(theta);
    return {s * (1.0 - root), s * root, s};
}

Vec3 critical_asymptotics(double eps) {
    if (eps < 0.0) throw std::domain_error("critical_asymptotics: eps must be nonnegative");
    return {3.0 * eps * eps, 4.0 * eps, 4.0 * std::sqrt(3.0) * std::pow(eps, 1.5)};
}

namespace {

// Trial evaluations inside a Runge-Kutta step can overshoot the boundary of
// the state space near total extinction. The drift extends continuously by
// clamping components at zero; the empty state is a fixed point.
Vec3 phi_clamped(Vec3 state) {
    for (int i = 0; i < 3; ++i) state[i] = std::max(state[i], 0.0);
    if (!(state[0] + state[1] + state[2] > 0.0)) return {0.0, 0.0, 0.0};
    return phi(state);
}

Vec3 rk4_step(const Vec3& y, const Vec3& f0, double h) {
    Vec3 k2in{};
    Vec3 k3in{};
    Vec3 k4in{};
    for (int i = 0; i < 3; ++i) k2in[i] = y[i] + 0.5 * h * f0[i];
    const Vec3 k2 = phi_clamped(k2in);
    for (int i = 0; i < 3; ++i) k3in[i] = y[i] + 0.5 * h * k2[i];
    const Vec3 k3 = phi_clamped(k3in);
    for (int i = 0; i < 3; ++i) k4in[i] = y[i] + h * k3[i];
    const Vec3 k4 = phi_clamped(k4in);
    Vec3 out{};
    for (int i = 0; i < 3; ++i) {
        out[i] = y[i] + h / 6.0 * (f0[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return out;
}

double hermite_component(double t0, double t1, double y0, double y1, double f0, double f1,
                         double at) {
    const double h = t1 - t0;
    if (h <= 0.0) return y1;
    const double s = (at - t0) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    return (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * h * f0 +
           (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * h * f1;
}

Vec3 hermite_state(double t0, double t1, const Vec3& y0, const Vec3& y1, const Vec3& f0,
                   const Vec3& f1, double at) {
    Vec3 out{};
    for (int i = 0; i < 3; ++i) {
        out[i] = hermite_component(t0, t1, y0[i], y1[i], f0[i], f1[i], at);
    }
    return out;
}

std::size_t locate_interval(const std::vector<double>& t, double at) {
    const auto it = std::upper_bound(t.begin(), t.end(), at);
    const std::size_t hi = static_cast<std::size_t>(it - t.begin());
    if (hi == 0) return 0;
    if (hi >= t.size()) return t.size() - 2;
    return hi - 1;
}

double sum3(const Vec3& v) { return v[0] + v[1] + v[2]; }

}  // namespace

Vec3 FluidTrajectory::eval(double at) const {
    if (t.empty()) throw std::logic_error("fluid eval: empty trajectory");
    if (t.size() == 1 || at <= t.front()) return state.front();
    if (at >= t.back()) return state.back();
    const std::size_t i = locate_interval(t, at);
    return hermite_state(t[i], t[i + 1], state[i], state[i + 1], deriv[i], deriv[i + 1], at);
}

Vec3 FluidTrajectory::eval_deriv(double at) const {
    return phi(eval(at));
}

double FluidTrajectory::eval_gamma(double at) const {
    if (t.empty()) throw std::logic_error("fluid eval: empty trajectory");
    if (t.size() == 1 || at <= t.front()) return gamma.front();
    if (at >= t.back()) return gamma.back();
    const std::size_t i = locate_interval(t, at);
    const double h = at - t[i];
    const Vec3 mid = eval(t[i] + 0.5 * h);
    const Vec3 end = eval(at);
    return gamma[i] + h / 6.0 * (1.0 / sum3(state[i]) + 4.0 / sum3(mid) + 1.0 / sum3(end));
}

FluidTrajectory integrate(double p1, double p2, double p3, const StepControl& control) {
    check_simplex(p1, p2, p3);
    if (!(p1 > 0.0)) throw std::invalid_argument("integrate: needs a positive leaf fraction");
    const double total = p1 + p2 + p3;

    FluidTrajectory traj;
    Vec3 y = {p1 / total, p2 / total, p3 / total};
    double t = 0.0;
    double g = 0.0;
    traj.t.push_back(t);
    traj.state.push_back(y);
    traj.deriv.push_back(phi(y));
    traj.gamma.push_back(g);

    if (y[0] <= control.x_threshold) {
        traj.t_ext = 0.0;
        traj.extinction_state = y;
        return traj;
    }

    double h = std::min(control.h_init, control.h_max);
    for (std::uint64_t step = 0; step < control.max_steps; ++step) {
        const Vec3 f0 = traj.deriv.back();
        const Vec3 y_big = rk4_step(y, f0, h);
        const Vec3 y_mid = rk4_step(y, f0, 0.5 * h);
        Vec3 y_new{};
        bool finite = true;
        double ratio = 0.0;
        if (std::isfinite(y_mid[0]) && std::isfinite(y_mid[1]) && std::isfinite(y_mid[2])) {
            const Vec3 y_half = rk4_step(y_mid, phi_clamped(y_mid), 0.5 * h);
            for (int i = 0; i < 3; ++i) {
                if (!std::isfinite(y_half[i]) || !std::isfinite(y_big[i])) finite = false;
            }
            if (finite) {
                for (int i = 0; i < 3; ++i) {
                    const double scale =
                        control.abs_tol +
                        control.rel_tol * std::max(std::abs(y[i]), std::abs(y_half[i]));
                    const double err = std::abs(y_half[i] - y_big[i]) / 15.0;
                    ratio = std::max(ratio, err / scale);
                    y_new[i] = y_half[i] + (y_half[i] - y_big[i]) / 15.0;
                }
            }
        } else {
            finite = false;
        }

        if (!finite || (ratio > 1.0 && h > control.h_floor)) {
            if (!finite && h <= control.h_floor) {
                throw std::runtime_error("integrate: non-finite state at the step floor");
            }
            const double shrink =
                finite ? std::max(0.1, 0.9 * std::pow(ratio, -0.2)) : 0.25;
            h = std::max(control.h_floor, h * shrink);
            if (h < control.h_fail) throw std::runtime_error("integrate: step collapse");
            continue;
        }

        // Accepted. Clamp departures below zero that sit inside tolerance;
        // a real zero crossing of X is the extinction event handled below.
        for (int i = 1; i < 3; ++i) y_new[i] = std::max(y_new[i], 0.0);

        const double t_new = t + h;

        if (y_new[0] <= control.x_threshold) {
            // Extinction inside (t, t_new]: bisect the Hermite dense output of
            // X against the threshold.
            const Vec3 f1 = phi({std::max(y_new[0], 1e-300), y_new[1], y_new[2]});
            double lo = t;
            double hi = t_new;
            for (int i = 0; i < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++i) {
                const double mid = 0.5 * (lo + hi);
                const double xv =
                    hermite_component(t, t_new, y[0], y_new[0], f0[0], f1[0], mid);
                (xv > control.x_threshold ? lo : hi) = mid;
            }
            const double t_hit = 0.5 * (lo + hi);
            Vec3 y_hit = hermite_state(t, t_new, y, y_new, f0, f1, t_hit);
            for (int i = 0; i < 3; ++i) y_hit[i] = std::max(y_hit[i], 0.0);
            const Vec3 y_between = hermite_state(t, t_new, y, y_new, f0, f1, 0.5 * (t + t_hit));
            const double g_hit =
                g + (t_hit - t) / 6.0 *
                        (1.0 / sum3(y) + 4.0 / std::max(sum3(y_between), 1e-300) +
                         1.0 / std::max(sum3(y_hit), 1e-300));
            traj.t.push_back(t_hit);
            traj.state.push_back(y_hit);
            traj.deriv.push_back(sum3(y_hit) > 1e-300 ? phi(y_hit) : Vec3{0.0, 0.0, 0.0});
            traj.gamma.push_back(g_hit);
            traj.t_ext = t_hit;
            traj.extinction_state = y_hit;
            return traj;
        }

        const double g_new =
            g + h / 6.0 * (1.0 / sum3(y) + 4.0 / std::max(sum3(y_mid), 1e-300) +
                           1.0 / sum3(y_new));

        t = t_new;
        y = y_new;
        g = g_new;
        traj.t.push_back(t);
        traj.state.push_back(y);
        traj.deriv.push_back(phi(y));
        traj.gamma.push_back(g);

        const double grow =
            ratio > 0.0 ? std::clamp(0.9 * std::pow(ratio, -0.2), 0.2, 4.0) : 4.0;
        h = std::clamp(h * grow, control.h_floor, control.h_max);
    }
    throw std::runtime_error("integrate: step limit exceeded before extinction");
}

}  // namespace kslab
