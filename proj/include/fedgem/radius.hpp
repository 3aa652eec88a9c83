#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "fedgem/core.hpp"
#include "fedgem/gmm.hpp"
#include "fedgem/rng.hpp"

namespace fedgem {

// Uncertainty-set radius subproblem for one component: the largest ε such
// that every m with ||m − M̂||² ≤ ε keeps the component objective at or above
// its value at the previous iterate θ'. For the isotropic model the whole
// problem reduces to four scalars.

/// Sufficient statistics of one radius instance.
///   W       Σ_n γ_{nk}                      responsibility mass
///   A       Σ_n γ_{nk}||x_n − M̂||²          dispersion about the maximizer
///   B       Σ_n γ_{nk}||x_n − θ'||²         dispersion about the previous iterate
///   step_sq ||M̂ − θ'||²
/// Isotropic decomposition identity: B − A = W·step_sq, hence B ≥ A.
struct RadiusInstance {
    double W = 0.0;
    double A = 0.0;
    double B = 0.0;
    double step_sq = 0.0;

    void validate() const {
        if (!(W > 0.0)) throw InvalidValue("RadiusInstance: W must be > 0");
        if (A < 0.0 || B < 0.0 || step_sq < 0.0)
            throw InvalidValue("RadiusInstance: negative dispersion");
        const double scale = std::max({1.0, A, B, W * step_sq});
        if (B - A < -1e-8 * scale)
            throw InvalidValue("RadiusInstance: B < A (maximizer must minimize dispersion)");
        if (std::abs((B - A) - W * step_sq) > 1e-8 * scale)
            throw InvalidValue("RadiusInstance: isotropic identity B - A = W*step_sq violated");
    }
};

/// Accumulate the four scalars from data, responsibilities and the two
/// iterates of component k.
inline RadiusInstance build_instance(const Dataset& data, const Responsibilities& resp,
                                     std::size_t k, const Vector& theta_prev,
                                     const Vector& maximizer) {
    RadiusInstance inst;
    for (std::size_t n = 0; n < data.size(); ++n) {
        const double g = resp(n, k);
        inst.W += g;
        inst.A += g * squared_distance(data.samples[n], maximizer);
        inst.B += g * squared_distance(data.samples[n], theta_prev);
    }
    if (!(inst.W > 0.0)) throw InvalidValue("build_instance: zero responsibility mass");
    inst.step_sq = squared_distance(maximizer, theta_prev);
    inst.validate();
    return inst;
}

/// Below this squared step the iterate is treated as converged and ε = 0.
inline constexpr double kConvergedStepSq = 1e-12;

/// Exact radius: ε* = (B − A)/W = step_sq (clamped to [0, step_sq] against
/// roundoff). Independent of the bisection path.
inline double radius_closed_form(const RadiusInstance& inst) {
    if (inst.step_sq < kConvergedStepSq) return 0.0;
    return std::clamp((inst.B - inst.A) / inst.W, 0.0, inst.step_sq);
}

/// Value of the dual constraint quadratic
///   q(α) = ε·α² + (A − B − ε·W)·α + c
/// with the corrected constant term c = W·(B − A).
inline double feasibility_quadratic(double eps, const RadiusInstance& inst, double alpha,
                                    double constant_term) {
    return eps * alpha * alpha + (inst.A - inst.B - eps * inst.W) * alpha + constant_term;
}

/// Dual feasibility of a candidate ε: does some α ≥ W certify that every
/// point of the ball keeps the objective above its previous value?
///
/// q factors as (α − W)·(ε·α − (B − A)), so q(W) = 0 for every ε; that root
/// comes from multiplying the Schur condition through by (α − W) and proves
/// nothing. At α = W the un-multiplied condition is B − A − ε·W ≥ 0, and for
/// α > W the quadratic dips nonpositive iff its vertex lies right of W. Both
/// cases collapse to the same test: vertex (B − A + ε·W)/(2ε) ≥ W.
inline bool feasibility_check(double eps, const RadiusInstance& inst) {
    if (eps <= 0.0) return inst.A <= inst.B + 1e-12 * std::max(1.0, inst.B);
    const double vertex = (inst.B - inst.A + eps * inst.W) / (2.0 * eps);
    if (vertex < inst.W) return false;
    return feasibility_quadratic(eps, inst, vertex, inst.W * (inst.B - inst.A)) <= 0.0;
}

/// Bisection on [0, step_sq] with the dual feasibility oracle: feasible
/// midpoints raise the lower bound. Returns the bracket midpoint after
/// `iters` halvings; error ≤ step_sq · 2^{−iters}.
inline double radius_bisection(const RadiusInstance& inst, std::size_t iters) {
    if (inst.step_sq < kConvergedStepSq) return 0.0;
    double lb = 0.0;
    double ub = inst.step_sq;
    for (std::size_t i = 0; i < iters; ++i) {
        const double mid = 0.5 * (lb + ub);
        if (feasibility_check(mid, inst))
            lb = mid;
        else
            ub = mid;
    }
    return 0.5 * (lb + ub);
}

/// Test-side check of the semi-infinite primal constraint: sample the closed
/// ball B(M̂, √ε) uniformly, add the two boundary points along ±(M̂ − θ'),
/// and require Q̂_k(m) ≥ Q̂_k(θ') − 1e-9 at every point. Evaluates the
/// component objective directly; shares nothing with the dual solver.
inline bool primal_violation_oracle(double eps, const Dataset& data, const Responsibilities& resp,
                                    std::size_t k, const Vector& theta_prev,
                                    const Vector& maximizer, std::size_t n_samples, Rng& rng) {
    if (eps < 0.0) throw InvalidValue("primal_violation_oracle: eps must be >= 0");
    const double q_prev = component_objective(theta_prev, data, resp, k, 1.0);
    const auto ok = [&](const Vector& m) {
        return component_objective(m, data, resp, k, 1.0) >= q_prev - 1e-9;
    };
    if (!ok(maximizer)) return false;
    if (eps == 0.0) return true;

    const std::size_t d = maximizer.size();
    const double radius = std::sqrt(eps);

    // boundary extremes along the step direction
    const double step = std::sqrt(squared_distance(maximizer, theta_prev));
    if (step > 0.0) {
        for (double sign : {1.0, -1.0}) {
            Vector m(d);
            for (std::size_t j = 0; j < d; ++j)
                m[j] = maximizer[j] + sign * radius * (maximizer[j] - theta_prev[j]) / step;
            if (!ok(m)) return false;
        }
    }

    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Vector dir(d);
    for (std::size_t s = 0; s < n_samples; ++s) {
        double norm_sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            dir[j] = gauss(rng);
            norm_sq += dir[j] * dir[j];
        }
        if (norm_sq == 0.0) continue;
        const double r = radius * std::pow(unif(rng), 1.0 / static_cast<double>(d)) / std::sqrt(norm_sq);
        Vector m(d);
        for (std::size_t j = 0; j < d; ++j) m[j] = maximizer[j] + r * dir[j];
        if (!ok(m)) return false;
    }
    return true;
}

}  // namespace fedgem
