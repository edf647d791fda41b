#include "lstmctl/linalg.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <random>
#include <string>

#include "lstmctl/errors.hpp"

namespace lstmctl {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) {
        throw DimensionError("matrix", "expected " + std::to_string(rows * cols) + " entries, got " +
                                           std::to_string(data_.size()));
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

Matrix& Matrix::operator+=(const Matrix& other) {
    if (rows_ != other.rows_ || cols_ != other.cols_) throw DimensionError("matrix", "operand shapes differ in +=");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
    if (rows_ != other.rows_ || cols_ != other.cols_) throw DimensionError("matrix", "operand shapes differ in -=");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
    return *this;
}

Matrix& Matrix::operator*=(double s) noexcept {
    for (double& v : data_) v *= s;
    return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw DimensionError("matrix", "inner dimensions differ in product");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

Vector matvec(const Matrix& m, std::span<const double> x) {
    Vector y(m.rows(), 0.0);
    matvec_acc(m, x, y);
    return y;
}

void matvec_acc(const Matrix& m, std::span<const double> x, std::span<double> y) {
    assert(x.size() == m.cols() && y.size() == m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        double s = 0.0;
        for (std::size_t c = 0; c < row.size(); ++c) s += row[c] * x[c];
        y[r] += s;
    }
}

void matvec_t_acc(const Matrix& m, std::span<const double> x, std::span<double> y) {
    assert(x.size() == m.rows() && y.size() == m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double xr = x[r];
        if (xr == 0.0) continue;
        const auto row = m.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) y[c] += row[c] * xr;
    }
}

void outer_acc(Matrix& m, std::span<const double> a, std::span<const double> b, double scale) {
    assert(a.size() == m.rows() && b.size() == m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double ar = scale * a[r];
        if (ar == 0.0) continue;
        auto row = m.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] += ar * b[c];
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double norm_inf(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double norm_inf(const Matrix& m) {
    double best = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double s = 0.0;
        for (double x : m.row(r)) s += std::abs(x);
        best = std::max(best, s);
    }
    return best;
}

SingularPair top_singular(const Matrix& m) {
    const std::size_t n = m.cols();
    SingularPair out;
    out.u.assign(m.rows(), 0.0);
    out.v.assign(n, 0.0);
    if (m.rows() == 0 || n == 0) return out;

    std::mt19937_64 rng(0x5eed1234abcdULL);
    std::uniform_real_distribution<double> dist(0.5, 1.5);
    Vector v(n);
    for (double& x : v) x = dist(rng);
    double nv = norm2(v);
    for (double& x : v) x /= nv;

    Vector mv(m.rows());
    Vector w(n);
    double lambda = 0.0;
    int stable = 0;
    constexpr int kMaxIter = 20000;
    for (int it = 0; it < kMaxIter; ++it) {
        std::fill(mv.begin(), mv.end(), 0.0);
        matvec_acc(m, v, mv);
        std::fill(w.begin(), w.end(), 0.0);
        matvec_t_acc(m, mv, w);
        const double rq = dot(v, w);  // v^T M^T M v
        if (rq <= 0.0) {
            // v is in the null space; either M = 0 or an unlucky start.
            if (norm_inf(m) == 0.0) {
                out.v[0] = 1.0;
                if (!out.u.empty()) out.u[0] = 1.0;
                return out;
            }
        }
        double res2 = 0.0;
        for (std::size_t k = 0; k < n; ++k) res2 += (w[k] - rq * v[k]) * (w[k] - rq * v[k]);
        const double change = std::abs(rq - lambda);
        lambda = rq;
        const double nw = norm2(w);
        if (nw == 0.0) break;
        for (std::size_t k = 0; k < n; ++k) v[k] = w[k] / nw;
        if (std::sqrt(res2) <= 1e-12 * rq) break;
        stable = change <= 1e-15 * rq ? stable + 1 : 0;
        if (stable >= 3) break;
    }
    // Final Rayleigh quotient on the normalized iterate.
    std::fill(mv.begin(), mv.end(), 0.0);
    matvec_acc(m, v, mv);
    const double sigma = norm2(mv);
    out.sigma = sigma;
    out.v = v;
    if (sigma > 0.0)
        for (std::size_t k = 0; k < mv.size(); ++k) out.u[k] = mv[k] / sigma;
    return out;
}

double spectral_norm(const Matrix& m) { return top_singular(m).sigma; }

Vector solve_linear(Matrix a, Vector b) {
    const std::size_t n = a.rows();
    if (a.cols() != n || b.size() != n) throw DimensionError("solve_linear", "system is not square");
    double scale = std::max(norm_inf(a), 1e-300);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        if (std::abs(a(piv, col)) <= 1e-14 * scale) throw NumericalError("solve_linear: singular matrix");
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a(col, c), a(piv, c));
            std::swap(b[col], b[piv]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
            b[r] -= f * b[col];
        }
    }
    Vector x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t c = i + 1; c < n; ++c) s -= a(i, c) * x[c];
        x[i] = s / a(i, i);
    }
    return x;
}

std::pair<double, double> sym_eig_2x2(double a, double b, double c) {
    const double mean = 0.5 * (a + c);
    const double rad = std::hypot(0.5 * (a - c), b);
    return {mean - rad, mean + rad};
}

}  // namespace lstmctl
