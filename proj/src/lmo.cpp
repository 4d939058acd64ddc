#include "lmoopt/lmo.hpp"

#include "lmoopt/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace lmoopt {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

void check_shape(const LmoSet& set, const ParamValue& g, const char* op) {
    require(set.radius > 0.0, std::string(op) + ": radius must be positive");
    if (set.geometry == Geometry::OperatorNorm)
        require(g.is_matrix(), std::string(op) + ": operator-norm ball requires a matrix argument");
    require(g.all_finite(), std::string(op) + ": non-finite argument");
}

RowMat to_eigen(const ParamValue& m) {
    RowMat a(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) a(i, j) = m.at(i, j);
    return a;
}

ParamValue from_eigen(const RowMat& a) {
    ParamValue out = ParamValue::matrix(static_cast<std::size_t>(a.rows()),
                                        static_cast<std::size_t>(a.cols()));
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = a(i, j);
    return out;
}

// -r * U V^T with null-space directions dropped (sigma <= 1e-12 * sigma_max).
ParamValue opnorm_lmo_exact(const ParamValue& g, double radius) {
    const SvdResult d = svd(g);
    const double smax = d.S.empty() ? 0.0 : d.S.front();
    ParamValue out = ParamValue::matrix(g.rows(), g.cols());
    if (smax <= 0.0) return out;
    const double cutoff = 1e-12 * smax;
    for (std::size_t i = 0; i < g.rows(); ++i) {
        for (std::size_t j = 0; j < g.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < d.S.size(); ++k)
                if (d.S[k] > cutoff) s += d.U.at(i, k) * d.V.at(j, k);
            out.at(i, j) = -radius * s;
        }
    }
    return out;
}

} // namespace

LmoSet euclidean_ball(double radius) {
    require(radius > 0.0, "euclidean_ball: radius must be positive");
    return LmoSet{Geometry::Euclidean, radius, OpMethod::ExactSvd, 5};
}

LmoSet linf_ball(double radius) {
    require(radius > 0.0, "linf_ball: radius must be positive");
    return LmoSet{Geometry::LInf, radius, OpMethod::ExactSvd, 5};
}

LmoSet operator_norm_ball(double radius, OpMethod method, int ns_iterations) {
    require(radius > 0.0, "operator_norm_ball: radius must be positive");
    require(ns_iterations >= 1, "operator_norm_ball: iterations must be positive");
    return LmoSet{Geometry::OperatorNorm, radius, method, ns_iterations};
}

double diameter(const LmoSet& set) {
    return 2.0 * set.radius;
}

double euclidean_diameter(const LmoSet& set, const ParamValue& shape_like) {
    switch (set.geometry) {
    case Geometry::Euclidean: return 2.0 * set.radius;
    case Geometry::LInf:
        return 2.0 * set.radius * std::sqrt(static_cast<double>(shape_like.size()));
    case Geometry::OperatorNorm:
        require(shape_like.is_matrix(), "euclidean_diameter: operator-norm ball needs a matrix");
        return 2.0 * set.radius *
               std::sqrt(static_cast<double>(std::min(shape_like.rows(), shape_like.cols())));
    }
    throw std::invalid_argument("euclidean_diameter: unknown geometry");
}

double set_norm(const LmoSet& set, const ParamValue& v) {
    switch (set.geometry) {
    case Geometry::Euclidean: return norm(v, Norm::L2);
    case Geometry::LInf: return norm(v, Norm::LInf);
    case Geometry::OperatorNorm: return norm(v, Norm::Spectral);
    }
    throw std::invalid_argument("set_norm: unknown geometry");
}

ParamValue lmo(const LmoSet& set, const ParamValue& g) {
    check_shape(set, g, "lmo");
    switch (set.geometry) {
    case Geometry::Euclidean: {
        const double n = norm(g, Norm::L2);
        if (n == 0.0) return ParamValue::zeros_like(g);
        return scale(g, -set.radius / n);
    }
    case Geometry::LInf: {
        ParamValue out = ParamValue::zeros_like(g);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (g[i] > 0.0) out[i] = -set.radius;
            else if (g[i] < 0.0) out[i] = set.radius;
            // sign(0) = 0 keeps the oracle single-valued
        }
        return out;
    }
    case Geometry::OperatorNorm: {
        if (norm(g, Norm::L2) == 0.0) return ParamValue::zeros_like(g);
        if (set.op_method == OpMethod::NewtonSchulz)
            return scale(newton_schulz_orthogonalize(g, set.ns_iterations), -set.radius);
        return opnorm_lmo_exact(g, set.radius);
    }
    }
    throw std::invalid_argument("lmo: unknown geometry");
}

double support_value(const LmoSet& set, const ParamValue& z) {
    check_shape(set, z, "support_value");
    switch (set.geometry) {
    case Geometry::Euclidean: return set.radius * norm(z, Norm::L2);
    case Geometry::LInf: return set.radius * norm(z, Norm::L1);
    case Geometry::OperatorNorm: return set.radius * norm(z, Norm::Nuclear);
    }
    throw std::invalid_argument("support_value: unknown geometry");
}

RsfValue rsf(const LmoSet& set, double lambda, const ParamValue& w, const ParamValue& grad_F) {
    require(lambda >= 0.0, "rsf: lambda must be nonnegative");
    require(w.same_shape(grad_F), "rsf: shape mismatch " + w.shape_string() + " vs " + grad_F.shape_string());
    if (lambda > 0.0) {
        // Feasibility means lambda * w in C; the theory assumes it but the
        // diagnostic is well-defined anywhere.
        const double feas = set_norm(set, scale(w, lambda));
        if (feas > set.radius * (1.0 + 1e-9))
            std::cerr << "lmoopt: warning: rsf evaluated at infeasible point ("
                      << feas << " > radius " << set.radius << ")\n";
    }
    RsfValue out;
    out.support_part = support_value(set, scale(grad_F, -1.0));
    out.decay_part = lambda * dot(grad_F, w);
    out.value = out.support_part + out.decay_part;
    return out;
}

ParamValue newton_schulz_orthogonalize(const ParamValue& m, int iterations) {
    require(m.is_matrix(), "newton_schulz_orthogonalize: input must be a matrix");
    require(iterations >= 1, "newton_schulz_orthogonalize: iterations must be positive");
    const double fnorm = norm(m, Norm::L2);
    require(fnorm > 0.0, "newton_schulz_orthogonalize: zero matrix");

    // Work with the wide orientation so the Gram matrix is the small one.
    const bool transposed = m.rows() > m.cols();
    RowMat x = to_eigen(m) / fnorm;
    if (transposed) x = x.transpose().eval();

    for (int k = 0; k < iterations; ++k) {
        const RowMat gram = x * x.transpose();
        x = 1.5 * x - 0.5 * (gram * x);
    }

    if (transposed) x = x.transpose().eval();
    ParamValue out = from_eigen(x);
    if (!out.all_finite()) throw std::runtime_error("newton_schulz_orthogonalize: diverged");
    return out;
}

ParamValue lmo_bruteforce(const LmoSet& set, const ParamValue& g, std::size_t num_samples,
                          std::uint64_t seed) {
    check_shape(set, g, "lmo_bruteforce");
    require(num_samples >= 1, "lmo_bruteforce: need at least one sample");

    ParamValue best = ParamValue::zeros_like(g);
    double best_ip = dot(g, best); // 0 is always feasible

    for (std::size_t s = 0; s < num_samples; ++s) {
        ParamValue cand = ParamValue::zeros_like(g);
        const bool boundary = (s % 2 == 0); // boundary-biased sampling
        switch (set.geometry) {
        case Geometry::Euclidean: {
            double n2 = 0.0;
            for (std::size_t i = 0; i < cand.size(); ++i) {
                cand[i] = rng::normal(seed, s, i, 1);
                n2 += cand[i] * cand[i];
            }
            if (n2 == 0.0) continue;
            double factor = set.radius / std::sqrt(n2);
            if (!boundary)
                factor *= std::pow(rng::uniform(seed, s, 0, 2), 1.0 / static_cast<double>(cand.size()));
            for (std::size_t i = 0; i < cand.size(); ++i) cand[i] *= factor;
            break;
        }
        case Geometry::LInf: {
            for (std::size_t i = 0; i < cand.size(); ++i) {
                if (boundary) {
                    cand[i] = (rng::counter_hash(seed, s, i, 3) & 1) ? set.radius : -set.radius;
                } else {
                    cand[i] = set.radius * (2.0 * rng::uniform(seed, s, i, 4) - 1.0);
                }
            }
            break;
        }
        case Geometry::OperatorNorm: {
            for (std::size_t i = 0; i < cand.size(); ++i)
                cand[i] = rng::normal(seed, s, i, 5);
            const SvdResult d = svd(cand);
            ParamValue pt = ParamValue::zeros_like(g);
            for (std::size_t i = 0; i < g.rows(); ++i)
                for (std::size_t j = 0; j < g.cols(); ++j) {
                    double acc = 0.0;
                    for (std::size_t k = 0; k < d.S.size(); ++k) {
                        const double sv = boundary
                            ? set.radius
                            : set.radius * rng::uniform(seed, s, k, 6);
                        acc += d.U.at(i, k) * sv * d.V.at(j, k);
                    }
                    pt.at(i, j) = acc;
                }
            cand = pt;
            break;
        }
        }
        const double ip = dot(g, cand);
        if (ip < best_ip) {
            best_ip = ip;
            best = cand;
        }
    }
    return best;
}

} // namespace lmoopt
