#include "lmoopt/param_value.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lmoopt {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<const RowMat>;

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

void require_finite(const ParamValue& v, const char* what) {
    if (!v.all_finite())
        throw std::invalid_argument(std::string(what) + ": non-finite entry");
}

} // namespace

ParamValue::ParamValue(bool matrix, std::size_t rows, std::size_t cols, std::vector<double> data)
    : matrix_(matrix), rows_(rows), cols_(cols), data_(std::move(data)) {}

ParamValue ParamValue::vector(std::size_t n) {
    return ParamValue(false, n, 1, std::vector<double>(n, 0.0));
}

ParamValue ParamValue::vector(std::vector<double> data) {
    const std::size_t n = data.size();
    ParamValue v(false, n, 1, std::move(data));
    require_finite(v, "ParamValue::vector");
    return v;
}

ParamValue ParamValue::matrix(std::size_t rows, std::size_t cols) {
    require(rows >= 1 && cols >= 1, "ParamValue::matrix: empty shape");
    return ParamValue(true, rows, cols, std::vector<double>(rows * cols, 0.0));
}

ParamValue ParamValue::matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
    require(rows >= 1 && cols >= 1, "ParamValue::matrix: empty shape");
    require(data.size() == rows * cols, "ParamValue::matrix: data length != rows*cols");
    ParamValue v(true, rows, cols, std::move(data));
    require_finite(v, "ParamValue::matrix");
    return v;
}

ParamValue ParamValue::zeros_like(const ParamValue& other) {
    return ParamValue(other.matrix_, other.rows_, other.cols_,
                      std::vector<double>(other.data_.size(), 0.0));
}

bool ParamValue::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

std::string ParamValue::shape_string() const {
    if (matrix_) return "matrix(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
    return "vector(" + std::to_string(rows_) + ")";
}

double dot(const ParamValue& a, const ParamValue& b) {
    require(a.same_shape(b), "dot: shape mismatch " + a.shape_string() + " vs " + b.shape_string());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    if (!std::isfinite(s)) throw std::runtime_error("dot: non-finite result");
    return s;
}

double norm(const ParamValue& a, Norm kind) {
    switch (kind) {
    case Norm::L1: {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i]);
        return s;
    }
    case Norm::L2: {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * a[i];
        return std::sqrt(s);
    }
    case Norm::LInf: {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i]));
        return s;
    }
    case Norm::Nuclear:
    case Norm::Spectral: {
        require(a.is_matrix(), "norm: nuclear/spectral require a matrix");
        const SvdResult r = svd(a);
        if (kind == Norm::Spectral) return r.S.empty() ? 0.0 : r.S.front();
        return std::accumulate(r.S.begin(), r.S.end(), 0.0);
    }
    }
    throw std::invalid_argument("norm: unknown kind");
}

SvdResult svd(const ParamValue& m) {
    require(m.is_matrix(), "svd: input must be a matrix");
    require_finite(m, "svd");

    const auto rows = static_cast<Eigen::Index>(m.rows());
    const auto cols = static_cast<Eigen::Index>(m.cols());
    MapMat A(m.data().data(), rows, cols);

    Eigen::BDCSVD<Eigen::MatrixXd> dec(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (dec.info() != Eigen::Success)
        throw std::runtime_error("svd: decomposition did not converge");

    const Eigen::Index r = std::min(rows, cols);
    SvdResult out;
    out.U = ParamValue::matrix(m.rows(), static_cast<std::size_t>(r));
    out.V = ParamValue::matrix(m.cols(), static_cast<std::size_t>(r));
    out.S.assign(dec.singularValues().data(), dec.singularValues().data() + r);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < r; ++j)
            out.U.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = dec.matrixU()(i, j);
    for (Eigen::Index i = 0; i < cols; ++i)
        for (Eigen::Index j = 0; j < r; ++j)
            out.V.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = dec.matrixV()(i, j);
    return out;
}

ParamValue combine(std::span<const double> coeffs, std::span<const ParamValue* const> values) {
    require(coeffs.size() == values.size(), "combine: coefficient/value count mismatch");
    require(!values.empty(), "combine: empty combination");
    for (std::size_t k = 1; k < values.size(); ++k)
        require(values[0]->same_shape(*values[k]), "combine: shape mismatch at operand " + std::to_string(k));

    ParamValue out = ParamValue::zeros_like(*values[0]);
    for (std::size_t k = 0; k < values.size(); ++k) {
        const double c = coeffs[k];
        const ParamValue& v = *values[k];
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += c * v[i];
    }
    if (!out.all_finite()) throw std::runtime_error("combine: non-finite result");
    return out;
}

ParamValue combine(std::initializer_list<double> coeffs,
                   std::initializer_list<const ParamValue*> values) {
    return combine(std::span<const double>(coeffs.begin(), coeffs.size()),
                   std::span<const ParamValue* const>(values.begin(), values.size()));
}

ParamValue scale(const ParamValue& a, double c) {
    return combine({c}, {&a});
}

ParamValue add(const ParamValue& a, const ParamValue& b) {
    return combine({1.0, 1.0}, {&a, &b});
}

ParamValue sub(const ParamValue& a, const ParamValue& b) {
    return combine({1.0, -1.0}, {&a, &b});
}

} // namespace lmoopt
