#pragma once

// Independent reference implementations used only by tests. These deliberately
// avoid the library's code paths: direct summation instead of FFTs, literal
// formula transcriptions instead of the optimized loops.

#include <complex>
#include <vector>

#include "rfsim/common.hpp"
#include "rfsim/signal.hpp"

namespace oracle {

using rfsim::Complex;
using rfsim::CVec;

// Literal evaluation of the receive chain, term by term:
//   r[n] = sum_l h[l] x[n-l],
//   y[n] = eta e^{-j(n dw Ts + psi)} r[n] + kappa e^{+j(n dw Ts + psi)} conj(r[n])
inline CVec receive_chain(const CVec& x, Complex eta, Complex kappa, double d_omega_rt, double psi_rt,
                          double t_s, const CVec& taps) {
    CVec y(x.size());
    for (Eigen::Index n = 0; n < x.size(); ++n) {
        Complex r{0.0, 0.0};
        for (Eigen::Index l = 0; l < taps.size(); ++l) {
            if (n - l < 0) continue;
            r += taps[l] * x[n - l];
        }
        const double phi = n * d_omega_rt * t_s + psi_rt;
        const Complex fwd = std::exp(Complex(0.0, -phi));
        const Complex img = std::exp(Complex(0.0, +phi));
        y[n] = eta * fwd * r + kappa * img * std::conj(r);
    }
    return y;
}

// Four-term transcription of the composite IQ-imbalance coefficients.
inline std::pair<Complex, Complex> eta_kappa(double eps_t, double dphi_t, double eps_r, double dphi_r) {
    const Complex alpha_t{std::cos(dphi_t), eps_t * std::sin(dphi_t)};
    const Complex beta_t{eps_t * std::cos(dphi_t), -std::sin(dphi_t)};
    const Complex alpha_r{std::cos(dphi_r), eps_r * std::sin(dphi_r)};
    const Complex beta_r{eps_r * std::cos(dphi_r), -std::sin(dphi_r)};
    return {alpha_r * alpha_t + beta_r * std::conj(beta_t),
            alpha_r * beta_t + beta_r * std::conj(alpha_t)};
}

// O(N*L) direct DFT: X[k] = sum_n x[n] e^{-2 pi i n k / N}.
inline CVec direct_dft(const CVec& x, int n_points) {
    CVec out(n_points);
    for (int k = 0; k < n_points; ++k) {
        Complex acc{0.0, 0.0};
        for (Eigen::Index n = 0; n < x.size(); ++n)
            acc += x[n] * std::exp(Complex(0.0, -2.0 * rfsim::kPi * double(n) * double(k) / n_points));
        out[k] = acc;
    }
    return out;
}

// Textbook two-pass Pearson correlation.
inline double pearson_two_pass(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= double(n);
    mb /= double(n);
    double num = 0.0, da = 0.0, db = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (a[i] - ma) * (b[i] - mb);
        da += (a[i] - ma) * (a[i] - ma);
        db += (b[i] - mb) * (b[i] - mb);
    }
    return num / std::sqrt(da * db);
}

}  // namespace oracle
