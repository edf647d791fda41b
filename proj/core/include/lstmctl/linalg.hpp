#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lstmctl {

using Vector = std::vector<double>;

// Dense row-major matrix. Sized for the small problems in this library
// (state dimension in the tens), so there is no blocking or SIMD.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }
    [[nodiscard]] std::span<double> row(std::size_t r) noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    [[nodiscard]] const std::vector<double>& data() const noexcept { return data_; }
    [[nodiscard]] std::vector<double>& data() noexcept { return data_; }

    [[nodiscard]] Matrix transposed() const;

    Matrix& operator+=(const Matrix& other);
    Matrix& operator-=(const Matrix& other);
    Matrix& operator*=(double s) noexcept;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(const Matrix& a, const Matrix& b);

/// y = M x
Vector matvec(const Matrix& m, std::span<const double> x);
/// y += M x
void matvec_acc(const Matrix& m, std::span<const double> x, std::span<double> y);
/// y += M^T x
void matvec_t_acc(const Matrix& m, std::span<const double> x, std::span<double> y);
/// M += scale * a b^T
void outer_acc(Matrix& m, std::span<const double> a, std::span<const double> b, double scale = 1.0);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);
double norm_inf(std::span<const double> v);

/// Induced infinity norm: max absolute row sum.
double norm_inf(const Matrix& m);

struct SingularPair {
    double sigma = 0.0;
    Vector u;  // left singular vector, |u| = 1
    Vector v;  // right singular vector, |v| = 1
};

/// Largest singular value and its vectors by power iteration on M^T M.
/// Deterministic: the start vector comes from a fixed seed.
SingularPair top_singular(const Matrix& m);

/// Induced 2-norm (largest singular value), relative accuracy ~1e-10.
double spectral_norm(const Matrix& m);

/// Solves A x = b by Gaussian elimination with partial pivoting.
/// Throws NumericalError if A is singular to working precision.
Vector solve_linear(Matrix a, Vector b);

/// Eigenvalues of a symmetric 2x2 matrix [[a, b], [b, c]], ascending.
std::pair<double, double> sym_eig_2x2(double a, double b, double c);

}  // namespace lstmctl
