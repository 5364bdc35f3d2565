#pragma once

#include <unsupported/Eigen/FFT>

#include "rfsim/common.hpp"

namespace rfsim {

// Unscaled forward DFT: X[k] = sum_n x[n] e^{-2*pi*i*n*k/N}.
inline CVec dft_forward(const CVec& x) {
    Eigen::FFT<double> fft;
    CVec out(x.size());
    fft.fwd(out, x);
    return out;
}

// Unitary inverse DFT: x[n] = (1/sqrt(N)) sum_k X[k] e^{+2*pi*i*n*k/N}.
// The 1/sqrt(N) scaling keeps unit-energy subcarrier symbols at unit average
// sample power, which the SNR bookkeeping relies on.
inline CVec idft_unitary(const CVec& spectrum) {
    Eigen::FFT<double> fft;
    CVec out(spectrum.size());
    fft.inv(out, spectrum);
    out *= std::sqrt(static_cast<double>(spectrum.size()));
    return out;
}

}  // namespace rfsim
