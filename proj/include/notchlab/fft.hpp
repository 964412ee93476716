#pragma once

#include <complex>
#include <vector>

namespace notchlab {

using cvec = std::vector<std::complex<double>>;

// Thin wrapper around FFTW (double precision, 1-d, complex to complex).
// Plans are cached per transform size with FFTW_ESTIMATE, which picks the
// same algorithm every run, so outputs are reproducible bit for bit.

// Unnormalized forward transform, X[k] = sum_n x[n] exp(-2*pi*i*k*n/N).
cvec fft_forward(const cvec& x);

// Inverse transform scaled by 1/N so that fft_inverse(fft_forward(x)) == x
// up to rounding.
cvec fft_inverse(const cvec& X);

// In-place variants reusing the caller's buffer.
void fft_forward_inplace(cvec& x);
void fft_inverse_inplace(cvec& X);

}  // namespace notchlab
