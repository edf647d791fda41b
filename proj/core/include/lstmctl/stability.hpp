#pragma once

#include <map>
#include <string>

#include "lstmctl/lstm.hpp"

namespace lstmctl {

// 2x2 gain matrix with nonnegative entries, e.g. the ISS matrix A or the
// incremental matrix A_delta that bound the norms of the state blocks.
struct Gain2x2 {
    double a11 = 0.0, a12 = 0.0, a21 = 0.0, a22 = 0.0;

    [[nodiscard]] Matrix to_matrix() const { return Matrix(2, 2, {a11, a12, a21, a22}); }
    [[nodiscard]] Gain2x2 operator*(const Gain2x2& o) const {
        return {a11 * o.a11 + a12 * o.a21, a11 * o.a12 + a12 * o.a22,
                a21 * o.a11 + a22 * o.a21, a21 * o.a12 + a22 * o.a22};
    }
};

enum class CertificateKind { Iss, DeltaIss };

struct WeightNorms {
    double U_f = 0.0, U_i = 0.0, U_o = 0.0, U_c = 0.0;  // induced 2-norms
};

struct CertificateReport {
    CertificateKind kind = CertificateKind::Iss;
    GateBounds bounds;
    Gain2x2 matrix;
    double spectral_radius = 0.0;
    bool jury_pass = false;
    // ISS: residuals[0] = r_iss. Delta-ISS: residuals = {r1, r2}.
    std::vector<double> residuals;
    double alpha = 0.0;  // delta-ISS only
    WeightNorms norms;

    /// Certified: jury test passes and every residual is negative.
    [[nodiscard]] bool certified() const;
};

struct CertificatePair {
    CertificateReport iss;
    CertificateReport delta_iss;
};

/// Spectral radius of a real 2x2 matrix from the closed-form characteristic roots.
double spectral_radius(const Gain2x2& a);

/// Induced 2-norm of a 2x2 matrix in closed form.
double spectral_norm(const Gain2x2& a);

WeightNorms weight_norms(const LstmParams& p);

Gain2x2 iss_matrix(const GateBounds& b, double norm_Uc);

double delta_alpha(const GateBounds& b, double norm_Uf, double norm_Uc, double norm_Ui);

Gain2x2 delta_iss_matrix(const GateBounds& b, double alpha, double norm_Uo);

// Jury criterion for 2x2 matrices: with a = -(A11 + A22) and
// b = A11 A22 - A12 A21, the matrix is Schur stable iff -1 - a < b < 1.
//
// That two-sided form drops the p(-1) > 0 row of the Jury table, which is
// only implied when a <= 0. Every nonnegative matrix (the certificate
// matrices here) has a <= 0. For a > 0 the full set |b| < 1, 1 + a + b > 0,
// 1 - a + b > 0 is evaluated instead.
bool jury_schur_2x2(const Gain2x2& a);

double iss_residual(const GateBounds& b, double norm_Uc);

struct DeltaResiduals {
    double r1 = 0.0;
    double r2 = 0.0;
};

DeltaResiduals delta_iss_residuals(const GateBounds& b, double alpha, double norm_Uo);

/// Boundary policy: spectral radii within 1e-9 of one are reported uncertified.
inline constexpr double kSchurBoundaryBand = 1e-9;

CertificatePair certify(const LstmParams& p, const InputBox& box);

const char* to_string(CertificateKind k);

}  // namespace lstmctl
