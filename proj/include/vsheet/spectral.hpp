#pragma once

// Trigonometric machinery on the uniform periodic grid x_j = 2*pi*j/N:
// FFT-backed differentiation, Krasny round-off filtering, and evaluation of
// the trigonometric interpolant (and its derivatives/antiderivative) at
// arbitrary points.
//
// Coefficient convention: c_k = (1/N) sum_j f_j exp(-i k x_j) for
// k = 0..N/2, so f(x) = Re c_0 + 2 sum_{0<k<N/2} Re(c_k e^{ikx})
// + Re(c_{N/2} e^{i(N/2)x}).
//
// Instances hold FFTW plans and scratch buffers; they are not safe for
// concurrent use. All callers in this library keep spectral work on the
// sequential path.

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "vsheet/errors.hpp"

namespace vsheet {

class Spectral {
  public:
    explicit Spectral(int n) : n_(n) {
        if (n < 4 || n % 2 != 0)
            throw Error("Spectral: grid size must be even and >= 4");
        real_ = fftw_alloc_real(n);
        spec_ = fftw_alloc_complex(n / 2 + 1);
        fwd_ = fftw_plan_dft_r2c_1d(n, real_, spec_, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_c2r_1d(n, spec_, real_, FFTW_ESTIMATE);
    }

    ~Spectral() {
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(real_);
        fftw_free(spec_);
    }

    Spectral(const Spectral&) = delete;
    Spectral& operator=(const Spectral&) = delete;

    int size() const { return n_; }

    std::vector<std::complex<double>> coefficients(const std::vector<double>& f) const {
        check_size(f);
        for (int j = 0; j < n_; ++j) real_[j] = f[j];
        fftw_execute(fwd_);
        std::vector<std::complex<double>> c(n_ / 2 + 1);
        for (int k = 0; k <= n_ / 2; ++k)
            c[k] = std::complex<double>(spec_[k][0], spec_[k][1]) / double(n_);
        return c;
    }

    std::vector<double> synthesize(const std::vector<std::complex<double>>& c) const {
        if ((int)c.size() != n_ / 2 + 1)
            throw Error("Spectral::synthesize: coefficient count mismatch");
        for (int k = 0; k <= n_ / 2; ++k) {
            spec_[k][0] = c[k].real();
            spec_[k][1] = c[k].imag();
        }
        fftw_execute(bwd_);
        return std::vector<double>(real_, real_ + n_);
    }

    /// Spectral derivative of periodic samples. Order 1 or 2; the Nyquist
    /// mode is zeroed for odd orders.
    std::vector<double> derivative(const std::vector<double>& f, int order = 1) const {
        auto c = coefficients(f);
        differentiate_coefficients(c, order, n_);
        return synthesize(c);
    }

    /// Krasny filter: zero every Fourier mode whose magnitude falls below
    /// threshold times the largest mode magnitude. threshold <= 0 is a no-op.
    void krasny_filter(std::vector<double>& f, double threshold) const {
        if (threshold <= 0.0) return;
        auto c = coefficients(f);
        double peak = 0.0;
        for (const auto& ck : c) peak = std::max(peak, std::abs(ck));
        if (peak == 0.0) return;
        const double cut = threshold * peak;
        for (auto& ck : c)
            if (std::abs(ck) < cut) ck = 0.0;
        f = synthesize(c);
    }

    static void differentiate_coefficients(std::vector<std::complex<double>>& c,
                                           int order, int n) {
        const std::complex<double> I(0.0, 1.0);
        for (int k = 0; k < (int)c.size(); ++k) {
            std::complex<double> factor = 1.0;
            for (int m = 0; m < order; ++m) factor *= I * double(k);
            c[k] *= factor;
        }
        if (order % 2 == 1) c[n / 2] = 0.0;
    }

  private:
    void check_size(const std::vector<double>& f) const {
        if ((int)f.size() != n_) throw Error("Spectral: sample count mismatch");
    }

    int n_;
    double* real_;
    fftw_complex* spec_;
    fftw_plan fwd_;
    fftw_plan bwd_;
};

/// Shared per-size transform cache. Creation is mutex-guarded; use of a
/// given instance must stay single-threaded.
inline const Spectral& spectral(int n) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<Spectral>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<Spectral>(n);
    return *slot;
}

/// Evaluate the trigonometric interpolant at arbitrary x.
inline double trig_eval(const std::vector<std::complex<double>>& c, double x) {
    double v = c[0].real();
    const int kmax = (int)c.size() - 1;
    for (int k = 1; k < kmax; ++k) {
        v += 2.0 * (c[k].real() * std::cos(k * x) - c[k].imag() * std::sin(k * x));
    }
    v += c[kmax].real() * std::cos(kmax * x) - c[kmax].imag() * std::sin(kmax * x);
    return v;
}

/// Derivative of the interpolant at arbitrary x (Nyquist dropped, as in the
/// on-grid derivative).
inline double trig_eval_derivative(const std::vector<std::complex<double>>& c, double x) {
    double v = 0.0;
    const int kmax = (int)c.size() - 1;
    for (int k = 1; k < kmax; ++k) {
        v += 2.0 * k * (-c[k].real() * std::sin(k * x) - c[k].imag() * std::cos(k * x));
    }
    return v;
}

/// Coefficients of the periodic part of the antiderivative (the k = 0 mode
/// is dropped; the caller adds mean * x itself).
inline std::vector<std::complex<double>> antiderivative_coefficients(
    const std::vector<std::complex<double>>& c) {
    std::vector<std::complex<double>> a(c.size());
    const std::complex<double> I(0.0, 1.0);
    a[0] = 0.0;
    for (int k = 1; k < (int)c.size(); ++k) a[k] = c[k] / (I * double(k));
    return a;
}

} // namespace vsheet
