#pragma once

#include "saw/types.hpp"

namespace saw {

enum class Potential { quadratic, huber };

/// Pairwise 26-neighborhood penalty with inverse-Euclidean-distance neighbor
/// weights:
///   Phi(x) = beta * sum_j sum_{l in N(j)} kappa_jl * rho(x_j - x_l)
/// (ordered pairs, so every unordered pair is counted twice).
/// quadratic: rho(d) = d^2 / 2. huber: rho(d) = d^2 / 2 for |d| <= delta,
/// delta * (|d| - delta / 2) beyond.
struct Regularizer {
    double beta = 0.0;
    Potential potential = Potential::quadratic;
    double huber_delta = 1.0;

    double cost(const Volume& x) const;
    Volume gradient(const Volume& x) const;
    void add_gradient(const Volume& x, Volume& out) const;

    /// Directional curvature of the quadratic potential, d^T H d. For huber
    /// this is the majorizing quadratic curvature (rho'' <= 1).
    double curvature(const Volume& d) const;
};

}  // namespace saw
