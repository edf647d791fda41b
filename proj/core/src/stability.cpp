#include "lstmctl/stability.hpp"

#include <cmath>

namespace lstmctl {

bool CertificateReport::certified() const {
    if (!jury_pass || !(spectral_radius < 1.0 - kSchurBoundaryBand)) return false;
    for (double r : residuals)
        if (!(r < 0.0)) return false;
    return true;
}

double spectral_radius(const Gain2x2& a) {
    const double tr = a.a11 + a.a22;
    const double det = a.a11 * a.a22 - a.a12 * a.a21;
    const double disc = 0.25 * tr * tr - det;
    if (disc >= 0.0) {
        const double s = std::sqrt(disc);
        return std::max(std::abs(0.5 * tr + s), std::abs(0.5 * tr - s));
    }
    // Complex pair: |lambda|^2 = det.
    return std::sqrt(det);
}

double spectral_norm(const Gain2x2& a) {
    // Largest eigenvalue of A^T A.
    const double p = a.a11 * a.a11 + a.a21 * a.a21;
    const double q = a.a11 * a.a12 + a.a21 * a.a22;
    const double r = a.a12 * a.a12 + a.a22 * a.a22;
    return std::sqrt(std::max(0.0, sym_eig_2x2(p, q, r).second));
}

WeightNorms weight_norms(const LstmParams& p) {
    return {spectral_norm(p.forget.recurrent), spectral_norm(p.input.recurrent),
            spectral_norm(p.output.recurrent), spectral_norm(p.cell.recurrent)};
}

Gain2x2 iss_matrix(const GateBounds& b, double norm_Uc) {
    return {b.sigma_f, b.sigma_i * norm_Uc, b.sigma_o * b.sigma_f, b.sigma_o * b.sigma_i * norm_Uc};
}

double delta_alpha(const GateBounds& b, double norm_Uf, double norm_Uc, double norm_Ui) {
    return 0.25 * norm_Uf * b.sigma_i * b.sigma_c / (1.0 - b.sigma_f) + b.sigma_i * norm_Uc +
           0.25 * norm_Ui * b.sigma_c;
}

Gain2x2 delta_iss_matrix(const GateBounds& b, double alpha, double norm_Uo) {
    return {b.sigma_f, alpha, b.sigma_o * b.sigma_f, alpha * b.sigma_o + 0.25 * b.sigma_x * norm_Uo};
}

bool jury_schur_2x2(const Gain2x2& m) {
    const double a = -m.a11 - m.a22;
    const double b = m.a11 * m.a22 - m.a12 * m.a21;
    if (a <= 0.0) return -1.0 - a < b && b < 1.0;
    return std::abs(b) < 1.0 && 1.0 + a + b > 0.0 && 1.0 - a + b > 0.0;
}

double iss_residual(const GateBounds& b, double norm_Uc) {
    return b.sigma_f + b.sigma_o * b.sigma_i * norm_Uc - 1.0;
}

DeltaResiduals delta_iss_residuals(const GateBounds& b, double alpha, double norm_Uo) {
    const double cross = 0.25 * b.sigma_f * b.sigma_x * norm_Uo;
    return {-1.0 + b.sigma_f + alpha * b.sigma_o + 0.25 * b.sigma_x * norm_Uo - cross, cross - 1.0};
}

CertificatePair certify(const LstmParams& p, const InputBox& box) {
    p.validate();
    const GateBounds b = gate_bounds(p, box);
    const WeightNorms n = weight_norms(p);

    CertificatePair out;
    CertificateReport& iss = out.iss;
    iss.kind = CertificateKind::Iss;
    iss.bounds = b;
    iss.norms = n;
    iss.matrix = iss_matrix(b, n.U_c);
    iss.spectral_radius = spectral_radius(iss.matrix);
    iss.jury_pass = jury_schur_2x2(iss.matrix);
    iss.residuals = {iss_residual(b, n.U_c)};

    CertificateReport& d = out.delta_iss;
    d.kind = CertificateKind::DeltaIss;
    d.bounds = b;
    d.norms = n;
    d.alpha = delta_alpha(b, n.U_f, n.U_c, n.U_i);
    d.matrix = delta_iss_matrix(b, d.alpha, n.U_o);
    d.spectral_radius = spectral_radius(d.matrix);
    d.jury_pass = jury_schur_2x2(d.matrix);
    const DeltaResiduals r = delta_iss_residuals(b, d.alpha, n.U_o);
    d.residuals = {r.r1, r.r2};
    return out;
}

const char* to_string(CertificateKind k) { return k == CertificateKind::Iss ? "ISS" : "deltaISS"; }

}  // namespace lstmctl
