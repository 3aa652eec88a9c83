#pragma once

#include <cmath>
#include <vector>

#include "fedgem/core.hpp"
#include "fedgem/rng.hpp"

namespace fedgem {

/// Gaussian-mechanism parameters for the client→server maximizer map.
///   rho      privacy budget ρ > 0
///   mu       failure probability μ ∈ (0, 1)
///   b_x      data-norm bound: ||x||₂ ≤ B_x for every sample
///   b_gamma  lower bound on per-component responsibility mass
struct DpParams {
    double rho = 1.0;
    double mu = 0.05;
    double b_x = 1.0;
    double b_gamma = 1.0;

    void validate() const {
        if (!(rho > 0.0)) throw InvalidValue("DpParams: rho must be > 0");
        if (!(mu > 0.0 && mu < 1.0)) throw InvalidValue("DpParams: mu must be in (0,1)");
        if (!(b_x > 0.0)) throw InvalidValue("DpParams: b_x must be > 0");
        if (!(b_gamma > 0.0)) throw InvalidValue("DpParams: b_gamma must be > 0");
    }
};

/// Noise scale making the perturbed maximizer map (ρ,μ)-differentially
/// private:  σ = √K_g · [3B_x/B_γ + 2B_x/B_γ²] · √(2 log(1.25/μ)) / ρ.
inline double gaussian_sigma(const DpParams& params, std::size_t k_g) {
    params.validate();
    const double sensitivity = std::sqrt(static_cast<double>(k_g)) *
                               (3.0 * params.b_x / params.b_gamma +
                                2.0 * params.b_x / (params.b_gamma * params.b_gamma));
    return sensitivity * std::sqrt(2.0 * std::log(1.25 / params.mu)) / params.rho;
}

/// Add i.i.d. N(0, σ²) noise to every maximizer coordinate of one client's
/// message batch (messages.size() = K_g). Radii are sent unperturbed (their
/// privatization is open).
inline std::vector<ComponentMessage> perturb_messages(std::vector<ComponentMessage> messages,
                                                      const DpParams& params, Rng& rng) {
    if (messages.empty()) return messages;
    const double sigma = gaussian_sigma(params, messages.size());
    if (sigma == 0.0) return messages;  // rho → ∞ limit
    std::normal_distribution<double> noise(0.0, sigma);
    for (ComponentMessage& m : messages)
        for (double& x : m.maximizer) x += noise(rng);
    return messages;
}

}  // namespace fedgem
