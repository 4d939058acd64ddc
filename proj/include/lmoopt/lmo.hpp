#pragma once

#include "lmoopt/param_value.hpp"

#include <cstdint>

namespace lmoopt {

enum class Geometry { Euclidean, LInf, OperatorNorm };

/// How the operator-norm LMO computes the orthogonal factor. ExactSvd is the
/// default and the only path used by tight-tolerance checks; NewtonSchulz is
/// an opt-in approximation for performance experiments.
enum class OpMethod { ExactSvd, NewtonSchulz };

/// A centrally symmetric norm ball of the given radius: the set C the oracle
/// minimizes over. Other compact convex sets are out of scope; adding one
/// means adding a Geometry tag plus closed forms for lmo() and
/// support_value().
struct LmoSet {
    Geometry geometry = Geometry::Euclidean;
    double radius = 1.0;
    OpMethod op_method = OpMethod::ExactSvd;
    int ns_iterations = 5;
};

LmoSet euclidean_ball(double radius = 1.0);
LmoSet linf_ball(double radius = 1.0);
LmoSet operator_norm_ball(double radius = 1.0, OpMethod method = OpMethod::ExactSvd,
                          int ns_iterations = 5);

/// Diameter R = 2 * radius (all supported sets are centrally symmetric balls
/// containing the origin), measured in the set's own norm.
double diameter(const LmoSet& set);

/// Diameter of the set in the Euclidean (Frobenius) norm, which is the R of
/// the convergence analysis: 2r for the l2 ball, 2r sqrt(d) for the linf
/// ball, 2r sqrt(min(m, n)) for the operator-norm ball. Needs the parameter
/// shape that the set will be used with.
double euclidean_diameter(const LmoSet& set, const ParamValue& shape_like);

/// argmin over the ball of <g, v>. Closed forms per geometry:
///   Euclidean     -r * g / |g|_2
///   LInf          -r * sign(g), with sign(0) = 0
///   OperatorNorm  -r * U V^T from the thin SVD of g; singular directions
///                 with sigma <= 1e-12 * sigma_max contribute zero
/// g = 0 returns the zero element of matching shape.
ParamValue lmo(const LmoSet& set, const ParamValue& g);

/// Support function h_C(z) = sup_{v in C} <z, v>:
/// r*|z|_2 (Euclidean), r*|z|_1 (LInf), r*|z|_nuclear (OperatorNorm).
double support_value(const LmoSet& set, const ParamValue& z);

/// Regularized support function sup_{v in C} <-grad_F, v - lambda*w>,
/// split into its support and decay parts.
struct RsfValue {
    double value = 0.0;
    double support_part = 0.0; // h_C(-grad_F(w))
    double decay_part = 0.0;   // lambda * <grad_F(w), w>
};

/// With lambda = 0 this is h_C(-grad_F); with lambda > 0 it equals
/// lambda * (Frank-Wolfe gap over P = C/lambda). Callers with lambda > 0
/// should supply w in P; infeasible w triggers a warning on stderr, not an
/// error, so off-manifold diagnostic evaluation stays possible.
RsfValue rsf(const LmoSet& set, double lambda, const ParamValue& w, const ParamValue& grad_F);

/// Classical Newton-Schulz orthogonalization (X <- 1.5 X - 0.5 X X^T X after
/// Frobenius normalization): approximates the U V^T factor of M. Accuracy is
/// certified against the exact SVD path; small singular values converge
/// slowly, see the tests for the documented degraded case.
ParamValue newton_schulz_orthogonalize(const ParamValue& m, int iterations);

/// Test oracle: best of num_samples boundary-biased feasible points by
/// <g, .>. Deterministic given the seed; only used to lower-bound lmo().
ParamValue lmo_bruteforce(const LmoSet& set, const ParamValue& g, std::size_t num_samples,
                          std::uint64_t seed);

/// Norm of a point in the set's own geometry (feasibility metric).
double set_norm(const LmoSet& set, const ParamValue& v);

} // namespace lmoopt
