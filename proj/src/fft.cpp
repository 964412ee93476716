#include "notchlab/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <mutex>

#include "notchlab/errors.hpp"

namespace notchlab {
namespace {

// One cached plan pair per size, executing on its own aligned buffers.
// fftw plan creation is not thread safe; the mutex also guards the shared
// buffers during execution, which is fine for this single-process toolkit.
struct PlanEntry {
    fftw_plan fwd = nullptr;
    fftw_plan inv = nullptr;
    fftw_complex* buf_in = nullptr;
    fftw_complex* buf_out = nullptr;
    std::size_t n = 0;

    ~PlanEntry() {
        if (fwd) fftw_destroy_plan(fwd);
        if (inv) fftw_destroy_plan(inv);
        if (buf_in) fftw_free(buf_in);
        if (buf_out) fftw_free(buf_out);
    }
};

std::mutex g_mutex;
std::map<std::size_t, PlanEntry> g_plans;

PlanEntry& plan_for(std::size_t n) {
    auto it = g_plans.find(n);
    if (it != g_plans.end()) return it->second;
    PlanEntry& e = g_plans[n];
    e.n = n;
    e.buf_in = fftw_alloc_complex(n);
    e.buf_out = fftw_alloc_complex(n);
    if (!e.buf_in || !e.buf_out) throw_numeric("fft: allocation failed for size " + std::to_string(n));
    e.fwd = fftw_plan_dft_1d(static_cast<int>(n), e.buf_in, e.buf_out, FFTW_FORWARD, FFTW_ESTIMATE);
    e.inv = fftw_plan_dft_1d(static_cast<int>(n), e.buf_in, e.buf_out, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!e.fwd || !e.inv) throw_numeric("fft: plan creation failed for size " + std::to_string(n));
    return e;
}

void execute(const cvec& in, cvec& out, bool forward) {
    const std::size_t n = in.size();
    if (n == 0) throw_validation("fft: empty input");
    std::lock_guard<std::mutex> lock(g_mutex);
    PlanEntry& e = plan_for(n);
    // std::complex<double> is layout compatible with fftw_complex
    std::memcpy(e.buf_in, static_cast<const void*>(in.data()), n * sizeof(fftw_complex));
    fftw_execute(forward ? e.fwd : e.inv);
    out.resize(n);
    std::memcpy(static_cast<void*>(out.data()), e.buf_out, n * sizeof(fftw_complex));
    if (!forward) {
        const double scale = 1.0 / static_cast<double>(n);
        for (auto& v : out) v *= scale;
    }
}

}  // namespace

cvec fft_forward(const cvec& x) {
    cvec out;
    execute(x, out, true);
    return out;
}

cvec fft_inverse(const cvec& X) {
    cvec out;
    execute(X, out, false);
    return out;
}

void fft_forward_inplace(cvec& x) { execute(x, x, true); }

void fft_inverse_inplace(cvec& X) { execute(X, X, false); }

}  // namespace notchlab
