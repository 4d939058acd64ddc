#include "lmoopt/problems.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lmoopt {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// Tags keeping the counter-based noise draws of different problems disjoint.
constexpr std::uint64_t kTagVectorNoise = 101;
constexpr std::uint64_t kTagMatrixNoise = 102;
constexpr std::uint64_t kTagTarget = 103;
constexpr std::uint64_t kTagData = 104;
constexpr std::uint64_t kTagLabels = 105;
constexpr std::uint64_t kTagBatch = 106;

// Isotropic unit-second-moment noise direction: z / sqrt(d) with z standard
// normal, so E|noise|^2 = sigma^2 exactly (Assumption-2 boundary case).
ParamValue additive_noise(const ParamValue& like, double sigma, std::uint64_t seed, SampleId id,
                          std::uint64_t tag) {
    ParamValue n = ParamValue::zeros_like(like);
    const double s = sigma / std::sqrt(static_cast<double>(like.size()));
    for (std::size_t i = 0; i < n.size(); ++i) n[i] = s * rng::normal(seed, id, i, tag);
    return n;
}

class NoisyQuadratic final : public StochasticOracle {
public:
    NoisyQuadratic(std::vector<double> eigenvalues, NoiseModel noise, double sigma,
                   std::uint64_t seed)
        : eig_(std::move(eigenvalues)), noise_(noise), sigma_(sigma), seed_(seed) {
        require(!eig_.empty(), "make_noisy_quadratic: empty eigenvalue list");
        for (double e : eig_)
            require(e > 0.0, "make_noisy_quadratic: eigenvalues must be positive");
        require(sigma >= 0.0, "make_noisy_quadratic: sigma must be nonnegative");
        constants_.L = *std::max_element(eig_.begin(), eig_.end());
        constants_.rho = 0.0;
        constants_.sigma = sigma;
        constants_.F_star = 0.0;
        // Coordinate weights c_i with sum c_i^2 = 1: heavier noise on later
        // coordinates, still matching the stated sigma exactly.
        if (noise_ == NoiseModel::Coordinatewise) {
            const double d = static_cast<double>(eig_.size());
            weights_.resize(eig_.size());
            for (std::size_t i = 0; i < eig_.size(); ++i)
                weights_[i] = std::sqrt(2.0 * (static_cast<double>(i) + 1.0) / (d * (d + 1.0)));
        }
        constants_.delta_F = loss(default_start()) - constants_.F_star;
    }

    double loss(const ParamValue& w) const override {
        check(w);
        double s = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) s += eig_[i] * w[i] * w[i];
        return 0.5 * s;
    }

    ParamValue full_grad(const ParamValue& w) const override {
        check(w);
        ParamValue g = ParamValue::zeros_like(w);
        for (std::size_t i = 0; i < w.size(); ++i) g[i] = eig_[i] * w[i];
        return g;
    }

    double sample_loss(const ParamValue& w, SampleId id) const override {
        // f(w;xi) = F(w) + <noise(xi), w>, so grad f = grad F + noise.
        return loss(w) + dot(noise(w, id), w);
    }

    bool has_hessian() const override { return true; }
    ParamValue hessian_vec(const ParamValue& w, const ParamValue& d) const override {
        check(w);
        ParamValue out = ParamValue::zeros_like(d);
        for (std::size_t i = 0; i < d.size(); ++i) out[i] = eig_[i] * d[i];
        return out;
    }

    ParamValue default_start() const override {
        return ParamValue::vector(std::vector<double>(eig_.size(), 1.0));
    }

    std::string name() const override { return "noisy_quadratic"; }

protected:
    ParamValue do_sample_grad(const ParamValue& w, SampleId id) const override {
        return add(full_grad(w), noise(w, id));
    }

private:
    void check(const ParamValue& w) const {
        require(!w.is_matrix() && w.size() == eig_.size(),
                "noisy_quadratic: expected vector(" + std::to_string(eig_.size()) + "), got " +
                    w.shape_string());
    }

    ParamValue noise(const ParamValue& like, SampleId id) const {
        if (sigma_ == 0.0) return ParamValue::zeros_like(like);
        if (noise_ == NoiseModel::Additive)
            return additive_noise(like, sigma_, seed_, id, kTagVectorNoise);
        ParamValue n = ParamValue::zeros_like(like);
        for (std::size_t i = 0; i < n.size(); ++i)
            n[i] = sigma_ * weights_[i] * rng::normal(seed_, id, i, kTagVectorNoise);
        return n;
    }

    std::vector<double> eig_;
    NoiseModel noise_;
    double sigma_;
    std::uint64_t seed_;
    std::vector<double> weights_;
};

// Scalar pieces of the nonconvex objective phi(x) = x^2 / (1 + x^2).
//   phi'(x)   = 2x / (1+x^2)^2
//   phi''(x)  = (2 - 6x^2) / (1+x^2)^3,   range [-1/2, 2]  => L = coupling + 2
//   phi'''(x) = 24x(x^2-1) / (1+x^2)^4
// |phi'''| is maximized where 5x^4 - 10x^2 + 1 = 0, at x^2 = 1 - 2/sqrt(5),
// giving sup |phi'''| = 4.66855928415521...; the coupling term is quadratic
// and contributes nothing to the third derivative, so rho below is an upper
// bound for any coupling. The Hessian is diagonal, so its operator-norm
// Lipschitz constant w.r.t. the Euclidean norm is exactly sup |phi'''|.
constexpr double kNonconvexRho = 4.66856;

double phi(double x) { return x * x / (1.0 + x * x); }
double phi_d1(double x) {
    const double q = 1.0 + x * x;
    return 2.0 * x / (q * q);
}
double phi_d2(double x) {
    const double q = 1.0 + x * x;
    return (2.0 - 6.0 * x * x) / (q * q * q);
}

class NonconvexSmooth final : public StochasticOracle {
public:
    NonconvexSmooth(std::size_t dim, double coupling, double sigma, std::uint64_t seed)
        : dim_(dim), coupling_(coupling), sigma_(sigma), seed_(seed) {
        require(dim >= 1, "make_nonconvex_smooth: dim must be positive");
        require(coupling >= 0.0, "make_nonconvex_smooth: coupling must be nonnegative");
        require(sigma >= 0.0, "make_nonconvex_smooth: sigma must be nonnegative");
        constants_.L = coupling + 2.0;
        constants_.rho = kNonconvexRho;
        constants_.sigma = sigma;
        constants_.F_star = 0.0; // phi >= 0 and the coupling term is >= 0
        constants_.delta_F = loss(default_start()) - constants_.F_star;
    }

    double loss(const ParamValue& w) const override {
        check(w);
        double s = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) s += phi(w[i]) + 0.5 * coupling_ * w[i] * w[i];
        return s;
    }

    ParamValue full_grad(const ParamValue& w) const override {
        check(w);
        ParamValue g = ParamValue::zeros_like(w);
        for (std::size_t i = 0; i < w.size(); ++i) g[i] = phi_d1(w[i]) + coupling_ * w[i];
        return g;
    }

    double sample_loss(const ParamValue& w, SampleId id) const override {
        if (sigma_ == 0.0) return loss(w);
        return loss(w) + dot(additive_noise(w, sigma_, seed_, id, kTagVectorNoise), w);
    }

    bool has_hessian() const override { return true; }
    ParamValue hessian_vec(const ParamValue& w, const ParamValue& d) const override {
        check(w);
        ParamValue out = ParamValue::zeros_like(d);
        for (std::size_t i = 0; i < d.size(); ++i) out[i] = (phi_d2(w[i]) + coupling_) * d[i];
        return out;
    }

    ParamValue default_start() const override {
        std::vector<double> w(dim_);
        for (std::size_t i = 0; i < dim_; ++i) w[i] = (i % 2 == 0) ? 1.2 : -0.7;
        return ParamValue::vector(std::move(w));
    }

    std::string name() const override { return "nonconvex_smooth"; }

protected:
    ParamValue do_sample_grad(const ParamValue& w, SampleId id) const override {
        if (sigma_ == 0.0) return full_grad(w);
        return add(full_grad(w), additive_noise(w, sigma_, seed_, id, kTagVectorNoise));
    }

private:
    void check(const ParamValue& w) const {
        require(!w.is_matrix() && w.size() == dim_,
                "nonconvex_smooth: expected vector(" + std::to_string(dim_) + "), got " +
                    w.shape_string());
    }

    std::size_t dim_;
    double coupling_;
    double sigma_;
    std::uint64_t seed_;
};

class MatrixQuadratic final : public StochasticOracle {
public:
    MatrixQuadratic(ParamValue target, double sigma, std::uint64_t seed)
        : target_(std::move(target)), sigma_(sigma), seed_(seed) {
        require(sigma >= 0.0, "make_matrix_quadratic: sigma must be nonnegative");
        constants_.L = 1.0;
        constants_.rho = 0.0;
        constants_.sigma = sigma;
        constants_.F_star = 0.0;
        constants_.delta_F = loss(default_start()) - constants_.F_star;
    }

    double loss(const ParamValue& w) const override {
        check(w);
        double s = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double d = w[i] - target_[i];
            s += d * d;
        }
        return 0.5 * s;
    }

    ParamValue full_grad(const ParamValue& w) const override {
        check(w);
        return sub(w, target_);
    }

    double sample_loss(const ParamValue& w, SampleId id) const override {
        if (sigma_ == 0.0) return loss(w);
        return loss(w) + dot(additive_noise(w, sigma_, seed_, id, kTagMatrixNoise), w);
    }

    bool has_hessian() const override { return true; }
    ParamValue hessian_vec(const ParamValue& w, const ParamValue& d) const override {
        check(w);
        return d;
    }

    ParamValue default_start() const override {
        return ParamValue::matrix(target_.rows(), target_.cols());
    }

    std::string name() const override { return "matrix_quadratic"; }

protected:
    ParamValue do_sample_grad(const ParamValue& w, SampleId id) const override {
        if (sigma_ == 0.0) return full_grad(w);
        return add(full_grad(w), additive_noise(w, sigma_, seed_, id, kTagMatrixNoise));
    }

private:
    void check(const ParamValue& w) const {
        require(w.same_shape(target_), "matrix_quadratic: expected " + target_.shape_string() +
                                           ", got " + w.shape_string());
    }

    ParamValue target_;
    double sigma_;
    std::uint64_t seed_;
};

class LogisticFiniteSum final : public StochasticOracle {
public:
    LogisticFiniteSum(std::size_t num_samples, std::size_t dim, std::size_t batch,
                      std::uint64_t seed)
        : n_(num_samples), dim_(dim), batch_(batch), seed_(seed) {
        require(num_samples >= 1 && dim >= 1, "make_logistic_finite_sum: empty problem");
        require(batch >= 1 && batch <= num_samples,
                "make_logistic_finite_sum: batch must be in [1, num_samples]");

        // Synthetic dataset: features ~ N(0, I/dim) so |x_j| ~ 1, labels from
        // a random ground-truth direction with mild flip noise.
        features_.resize(n_ * dim_);
        labels_.resize(n_);
        std::vector<double> truth(dim_);
        for (std::size_t i = 0; i < dim_; ++i) truth[i] = rng::normal(seed, 0, i, kTagTarget);
        const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(dim_));
        double max_row_sq = 0.0, mean_row_sq = 0.0;
        for (std::size_t j = 0; j < n_; ++j) {
            double margin = 0.0, row_sq = 0.0;
            for (std::size_t i = 0; i < dim_; ++i) {
                const double x = inv_sqrt_d * rng::normal(seed, j, i, kTagData);
                features_[j * dim_ + i] = x;
                margin += x * truth[i];
                row_sq += x * x;
            }
            margin += 0.3 * rng::normal(seed, j, 0, kTagLabels);
            labels_[j] = margin >= 0.0 ? 1.0 : -1.0;
            max_row_sq = std::max(max_row_sq, row_sq);
            mean_row_sq += row_sq / static_cast<double>(n_);
        }

        // Per-sample Hessian is mean_j x_j x_j^T s(1-s) over the batch with
        // s(1-s) <= 1/4, so L = max_j |x_j|^2 / 4 bounds both F and every
        // f(.;xi); the max over rows is the documented slack over the tight
        // spectral constant.
        constants_.L = 0.25 * max_row_sq;
        // d/dz [s(1-s)] = s(1-s)(1-2s) has |.| <= 1/(6 sqrt(3)).
        constants_.rho = std::pow(max_row_sq, 1.5) / (6.0 * std::sqrt(3.0));
        // Batches are simple random samples without replacement of the
        // per-sample gradients G_j = -y_j x_j s_j with |G_j| <= |x_j|, so
        //   E|grad f - grad F|^2 <= (mean_j |x_j|^2 / b) (n - b)/(n - 1)
        // uniformly in w (zero at full batch). That bound is the certified
        // sigma; the empirical value at w0 is stored alongside for reporting.
        const double fpc =
            n_ == batch_ ? 0.0
                         : static_cast<double>(n_ - batch_) / static_cast<double>(n_ - 1);
        constants_.sigma = std::sqrt(mean_row_sq / static_cast<double>(batch_) * fpc);
        constants_.sigma_is_estimate = true;
        constants_.F_star = 0.0; // logistic loss is positive

        const ParamValue w0 = default_start();
        const ParamValue g0 = full_grad(w0);
        double acc = 0.0;
        const std::size_t probes = 2000;
        for (std::size_t s = 0; s < probes; ++s) {
            const ParamValue d = sub(grad_at(w0, s + 1), g0);
            acc += dot(d, d) / static_cast<double>(probes);
        }
        constants_.sigma_w0_estimate = std::sqrt(acc);
        constants_.delta_F = loss(w0) - constants_.F_star;
    }

    double loss(const ParamValue& w) const override {
        check(w);
        double s = 0.0;
        for (std::size_t j = 0; j < n_; ++j) s += sample_term_loss(w, j);
        return s / static_cast<double>(n_);
    }

    ParamValue full_grad(const ParamValue& w) const override {
        check(w);
        ParamValue g = ParamValue::zeros_like(w);
        for (std::size_t j = 0; j < n_; ++j) accumulate_term_grad(w, j, 1.0 / static_cast<double>(n_), g);
        return g;
    }

    double sample_loss(const ParamValue& w, SampleId id) const override {
        check(w);
        double s = 0.0;
        for (std::size_t j : batch_indices(id)) s += sample_term_loss(w, j);
        return s / static_cast<double>(batch_);
    }

    bool has_hessian() const override { return true; }
    ParamValue hessian_vec(const ParamValue& w, const ParamValue& d) const override {
        check(w);
        ParamValue out = ParamValue::zeros_like(d);
        for (std::size_t j = 0; j < n_; ++j) {
            const double m = margin(w, j);
            const double s = 1.0 / (1.0 + std::exp(m));
            const double coef = s * (1.0 - s) * row_dot(j, d) / static_cast<double>(n_);
            for (std::size_t i = 0; i < dim_; ++i) out[i] += coef * features_[j * dim_ + i];
        }
        return out;
    }

    ParamValue default_start() const override { return ParamValue::vector(dim_); }

    std::string name() const override { return "logistic_finite_sum"; }

protected:
    ParamValue do_sample_grad(const ParamValue& w, SampleId id) const override {
        return grad_at(w, id);
    }

private:
    void check(const ParamValue& w) const {
        require(!w.is_matrix() && w.size() == dim_,
                "logistic_finite_sum: expected vector(" + std::to_string(dim_) + "), got " +
                    w.shape_string());
    }

    // Deterministic b-subset of [0, n) without replacement (partial
    // Fisher-Yates driven by the counter hash).
    std::vector<std::size_t> batch_indices(SampleId id) const {
        std::vector<std::size_t> idx(n_);
        for (std::size_t i = 0; i < n_; ++i) idx[i] = i;
        for (std::size_t k = 0; k < batch_; ++k) {
            const std::size_t j =
                k + static_cast<std::size_t>(rng::counter_hash(seed_, id, k, kTagBatch) %
                                             (n_ - k));
            std::swap(idx[k], idx[j]);
        }
        idx.resize(batch_);
        // fixed accumulation order; makes the full batch bit-identical to
        // full_grad
        std::sort(idx.begin(), idx.end());
        return idx;
    }

    double row_dot(std::size_t j, const ParamValue& w) const {
        double s = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) s += features_[j * dim_ + i] * w[i];
        return s;
    }

    double margin(const ParamValue& w, std::size_t j) const { return labels_[j] * row_dot(j, w); }

    double sample_term_loss(const ParamValue& w, std::size_t j) const {
        // log(1 + exp(-m)) evaluated stably
        const double m = margin(w, j);
        return m > 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
    }

    void accumulate_term_grad(const ParamValue& w, std::size_t j, double weight,
                              ParamValue& g) const {
        const double m = margin(w, j);
        const double s = 1.0 / (1.0 + std::exp(m)); // sigmoid(-m)
        const double coef = -weight * labels_[j] * s;
        for (std::size_t i = 0; i < dim_; ++i) g[i] += coef * features_[j * dim_ + i];
    }

    ParamValue grad_at(const ParamValue& w, SampleId id) const {
        check(w);
        ParamValue g = ParamValue::zeros_like(w);
        for (std::size_t j : batch_indices(id))
            accumulate_term_grad(w, j, 1.0 / static_cast<double>(batch_), g);
        return g;
    }

    std::size_t n_, dim_, batch_;
    std::uint64_t seed_;
    std::vector<double> features_;
    std::vector<double> labels_;
};

} // namespace

ParamValue StochasticOracle::hessian_vec(const ParamValue&, const ParamValue&) const {
    throw std::logic_error("hessian_vec: oracle has no closed-form Hessian");
}

std::unique_ptr<StochasticOracle> make_noisy_quadratic(std::size_t dim,
                                                       std::vector<double> eigenvalues,
                                                       NoiseModel noise, double sigma,
                                                       std::uint64_t seed) {
    require(eigenvalues.size() == dim, "make_noisy_quadratic: dim != eigenvalue count");
    return std::make_unique<NoisyQuadratic>(std::move(eigenvalues), noise, sigma, seed);
}

std::unique_ptr<StochasticOracle> make_nonconvex_smooth(std::size_t dim, double coupling,
                                                        double sigma, std::uint64_t seed) {
    return std::make_unique<NonconvexSmooth>(dim, coupling, sigma, seed);
}

std::unique_ptr<StochasticOracle> make_matrix_quadratic(std::size_t rows, std::size_t cols,
                                                        std::uint64_t target_seed, double sigma,
                                                        std::uint64_t seed) {
    require(rows >= 1 && cols >= 1, "make_matrix_quadratic: rows/cols must be positive");
    ParamValue target = ParamValue::matrix(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            target.at(i, j) = rng::normal(target_seed, i, j, kTagTarget);
    return std::make_unique<MatrixQuadratic>(std::move(target), sigma, seed);
}

std::unique_ptr<StochasticOracle> make_matrix_quadratic_with_target(const ParamValue& target,
                                                                    double sigma,
                                                                    std::uint64_t seed) {
    require(target.is_matrix(), "make_matrix_quadratic_with_target: target must be a matrix");
    return std::make_unique<MatrixQuadratic>(target, sigma, seed);
}

std::unique_ptr<StochasticOracle> make_logistic_finite_sum(std::size_t num_samples,
                                                           std::size_t dim, std::size_t batch,
                                                           std::uint64_t seed) {
    return std::make_unique<LogisticFiniteSum>(num_samples, dim, batch, seed);
}

std::unique_ptr<StochasticOracle> make_oracle(const ProblemSpec& spec) {
    switch (spec.kind) {
    case ProblemKind::NoisyQuadratic: {
        std::vector<double> eig = spec.eigenvalues;
        if (eig.empty()) {
            eig.resize(spec.dim);
            for (std::size_t i = 0; i < spec.dim; ++i)
                eig[i] = spec.dim == 1
                             ? 1.0
                             : 1.0 + 3.0 * static_cast<double>(i) / static_cast<double>(spec.dim - 1);
        }
        const std::size_t dim = eig.size();
        return make_noisy_quadratic(dim, std::move(eig), spec.noise, spec.sigma, spec.seed);
    }
    case ProblemKind::NonconvexSmooth:
        return make_nonconvex_smooth(spec.dim, spec.coupling, spec.sigma, spec.seed);
    case ProblemKind::MatrixQuadratic:
        return make_matrix_quadratic(spec.rows, spec.cols, spec.target_seed, spec.sigma, spec.seed);
    case ProblemKind::LogisticFiniteSum:
        return make_logistic_finite_sum(spec.num_samples, spec.dim, spec.batch, spec.seed);
    }
    throw std::invalid_argument("make_oracle: unknown problem kind");
}

ParamValue shape_of(const ProblemSpec& spec) {
    switch (spec.kind) {
    case ProblemKind::NoisyQuadratic:
        return ParamValue::vector(spec.eigenvalues.empty() ? spec.dim : spec.eigenvalues.size());
    case ProblemKind::NonconvexSmooth:
    case ProblemKind::LogisticFiniteSum:
        return ParamValue::vector(spec.dim);
    case ProblemKind::MatrixQuadratic:
        return ParamValue::matrix(spec.rows, spec.cols);
    }
    throw std::invalid_argument("shape_of: unknown problem kind");
}

ParamValue start_point(const ProblemSpec& spec, const StochasticOracle& oracle) {
    const ParamValue def = oracle.default_start();
    if (!spec.w0) return def;
    require(spec.w0->size() == def.size(),
            "start_point: w0 override has " + std::to_string(spec.w0->size()) +
                " entries, problem expects " + std::to_string(def.size()));
    if (def.is_matrix()) return ParamValue::matrix(def.rows(), def.cols(), *spec.w0);
    return ParamValue::vector(*spec.w0);
}

} // namespace lmoopt
