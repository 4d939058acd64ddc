#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace lmoopt {

/// Dense 64-bit float vector or matrix (row-major). The carrier for
/// iterates, momentum buffers, gradients and LMO outputs. All public
/// operations reject or refuse to produce non-finite entries.
class ParamValue {
public:
    ParamValue() = default;

    static ParamValue vector(std::size_t n);
    static ParamValue vector(std::vector<double> data);
    static ParamValue matrix(std::size_t rows, std::size_t cols);
    static ParamValue matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    static ParamValue zeros_like(const ParamValue& other);

    bool is_matrix() const { return matrix_; }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    double& at(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

    bool same_shape(const ParamValue& other) const {
        return matrix_ == other.matrix_ && rows_ == other.rows_ && cols_ == other.cols_;
    }
    std::string shape_string() const;

    bool all_finite() const;

private:
    ParamValue(bool matrix, std::size_t rows, std::size_t cols, std::vector<double> data);

    bool matrix_ = false;
    std::size_t rows_ = 0;
    std::size_t cols_ = 1;
    std::vector<double> data_;
};

enum class Norm { L1, L2, LInf, Nuclear, Spectral };

/// Thin SVD of a matrix: U (m x r), singular values descending (length
/// r = min(m, n)), V (n x r), with U diag(S) V^T reconstructing the input.
struct SvdResult {
    ParamValue U;
    std::vector<double> S;
    ParamValue V;
};

/// Euclidean inner product; Frobenius inner product for matrices.
double dot(const ParamValue& a, const ParamValue& b);

double norm(const ParamValue& a, Norm kind);

/// L2 norm shortcut (Frobenius for matrices).
inline double norm(const ParamValue& a) { return norm(a, Norm::L2); }

SvdResult svd(const ParamValue& m);

/// Linear combination sum_i coeffs[i] * values[i]. All values must share a
/// shape; the coefficient list must match the value list in length.
ParamValue combine(std::span<const double> coeffs, std::span<const ParamValue* const> values);
ParamValue combine(std::initializer_list<double> coeffs,
                   std::initializer_list<const ParamValue*> values);

ParamValue scale(const ParamValue& a, double c);
ParamValue add(const ParamValue& a, const ParamValue& b);
ParamValue sub(const ParamValue& a, const ParamValue& b);

} // namespace lmoopt
