#pragma once

#include "lmoopt/param_value.hpp"
#include "lmoopt/rng.hpp"

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace lmoopt {

using SampleId = std::uint64_t;

/// Problem constants feeding the theorem certificates. L bounds the gradient
/// Lipschitz constant, rho the Hessian Lipschitz constant, sigma the
/// gradient-noise second moment, F_star lower-bounds the loss.
struct ProblemConstants {
    double L = 0.0;
    double rho = 0.0;
    double sigma = 0.0;
    double F_star = 0.0;
    double delta_F = 0.0; // F(w0) - F_star for the effective start point
    // True when sigma is derived from the data rather than closed form;
    // certificates on such problems carry an "estimated-sigma" caveat.
    bool sigma_is_estimate = false;
    double sigma_w0_estimate = 0.0;
};

/// Stochastic first-order oracle: full objective F, exact gradient, and
/// per-sample gradients deterministic in (w, sample id). Only sample_grad
/// counts toward the gradient-evaluation budget; exact quantities are free
/// diagnostics.
class StochasticOracle {
public:
    virtual ~StochasticOracle() = default;

    virtual double loss(const ParamValue& w) const = 0;
    virtual ParamValue full_grad(const ParamValue& w) const = 0;
    virtual double sample_loss(const ParamValue& w, SampleId id) const = 0;

    ParamValue sample_grad(const ParamValue& w, SampleId id) const {
        ++evals_;
        return do_sample_grad(w, id);
    }

    virtual bool has_hessian() const { return false; }
    /// Exact Hessian-vector product; only valid when has_hessian().
    virtual ParamValue hessian_vec(const ParamValue& w, const ParamValue& d) const;

    virtual ParamValue default_start() const = 0;
    virtual std::string name() const = 0;

    const ProblemConstants& constants() const { return constants_; }
    std::uint64_t eval_count() const { return evals_.load(); }

protected:
    virtual ParamValue do_sample_grad(const ParamValue& w, SampleId id) const = 0;

    ProblemConstants constants_;

private:
    mutable std::atomic<std::uint64_t> evals_{0};
};

enum class NoiseModel { Additive, Coordinatewise };

/// F(w) = 1/2 w^T diag(eigenvalues) w with additive or coordinate-weighted
/// gradient noise of total second moment sigma^2. L = max eigenvalue,
/// rho = 0, F* = 0.
std::unique_ptr<StochasticOracle> make_noisy_quadratic(std::size_t dim,
                                                       std::vector<double> eigenvalues,
                                                       NoiseModel noise, double sigma,
                                                       std::uint64_t seed);

/// F(w) = sum_i w_i^2/(1+w_i^2) + (coupling/2) |w|^2, a bounded-curvature
/// nonconvex testbed with L = coupling + 2 and closed-form rho.
std::unique_ptr<StochasticOracle> make_nonconvex_smooth(std::size_t dim, double coupling,
                                                        double sigma, std::uint64_t seed);

/// F(W) = 1/2 |W - M|_F^2 with a fixed random target M; exercises the
/// operator-norm geometry. L = 1, rho = 0, F* = 0.
std::unique_ptr<StochasticOracle> make_matrix_quadratic(std::size_t rows, std::size_t cols,
                                                        std::uint64_t target_seed, double sigma,
                                                        std::uint64_t seed);

/// Same problem with an explicit target matrix.
std::unique_ptr<StochasticOracle> make_matrix_quadratic_with_target(const ParamValue& target,
                                                                    double sigma,
                                                                    std::uint64_t seed);

/// Average logistic loss over a fixed synthetic dataset; a sample id selects
/// a minibatch, so the variance-reduction correction is nontrivial here.
std::unique_ptr<StochasticOracle> make_logistic_finite_sum(std::size_t num_samples,
                                                           std::size_t dim, std::size_t batch,
                                                           std::uint64_t seed);

/// The xi_t sequence: a deterministic stream of sample ids.
inline rng::SampleStream sample_stream(std::uint64_t seed) { return rng::SampleStream(seed); }

/// Problem description constructible from a config document.
enum class ProblemKind { NoisyQuadratic, NonconvexSmooth, MatrixQuadratic, LogisticFiniteSum };

struct ProblemSpec {
    ProblemKind kind = ProblemKind::NoisyQuadratic;
    std::uint64_t seed = 1;
    // noisy_quadratic / nonconvex_smooth
    std::size_t dim = 10;
    std::vector<double> eigenvalues; // empty: 1 + 3*i/(dim-1) ramp
    NoiseModel noise = NoiseModel::Additive;
    double sigma = 0.0;
    double coupling = 0.0;
    // matrix_quadratic
    std::size_t rows = 4, cols = 3;
    std::uint64_t target_seed = 1;
    // logistic_finite_sum
    std::size_t num_samples = 256, batch = 16;
    // optional start override (row-major for matrices)
    std::optional<std::vector<double>> w0;
};

std::unique_ptr<StochasticOracle> make_oracle(const ProblemSpec& spec);
ParamValue start_point(const ProblemSpec& spec, const StochasticOracle& oracle);

/// Zero value of the problem's parameter shape (cheap; no oracle needed).
ParamValue shape_of(const ProblemSpec& spec);

} // namespace lmoopt
