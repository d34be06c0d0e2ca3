#pragma once

// RAII wrappers over FFTW guru plans for strided transforms along one or more
// axes of a row-major array.
//
// Plans are made with FFTW_ESTIMATE so the chosen algorithm, and hence every
// rounding, is the same from run to run.

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "omech/errors.hpp"

namespace omech {

/// Worker count from OMECH_THREADS; 0 or unset means single-threaded.
inline int configured_threads() {
  const char* env = std::getenv("OMECH_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 0) throw ValidationError(std::string("OMECH_THREADS is not a count: ") + env);
  return v == 0 ? 1 : int(v);
}

namespace fft {

namespace detail {
// FFTW's planner is not re-entrant.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

inline void configure_threads_locked() {
  static bool initialized = false;
  if (!initialized) {
    fftw_init_threads();
    initialized = true;
  }
  fftw_plan_with_nthreads(configured_threads());
}

struct FreeDeleter {
  void operator()(void* p) const { fftw_free(p); }
};
}  // namespace detail

/// Aligned complex scratch storage.
class Buffer {
 public:
  Buffer() = default;
  explicit Buffer(std::size_t n)
      : n_(n), data_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n == 0 ? 1 : n)))) {
    if (!data_) throw NumericalError("FFTW allocation of " + std::to_string(n) + " elements failed");
  }
  std::size_t size() const { return n_; }
  fftw_complex* raw() { return data_.get(); }
  std::complex<double>* data() { return reinterpret_cast<std::complex<double>*>(data_.get()); }
  const std::complex<double>* data() const { return reinterpret_cast<const std::complex<double>*>(data_.get()); }
  std::complex<double>& operator[](std::size_t k) { return data()[k]; }

 private:
  std::size_t n_ = 0;
  std::unique_ptr<fftw_complex, detail::FreeDeleter> data_;
};

/// Row-major shape -> FFTW iodims for the transformed axes and the loop axes.
inline void split_dims(const std::vector<std::size_t>& shape, const std::vector<std::size_t>& axes,
                       std::vector<fftw_iodim>& transformed, std::vector<fftw_iodim>& loops, int element_stride = 1) {
  std::vector<int> strides(shape.size());
  int s = 1;
  for (std::size_t d = shape.size(); d-- > 0;) {
    strides[d] = s;
    s *= int(shape[d]);
  }
  for (std::size_t d = 0; d < shape.size(); ++d) {
    const bool t = std::find(axes.begin(), axes.end(), d) != axes.end();
    const fftw_iodim dim{int(shape[d]), strides[d] * element_stride, strides[d] * element_stride};
    (t ? transformed : loops).push_back(dim);
  }
}

/// Complex DFT along a subset of axes, in place on a buffer of the full shape.
class DftPlan {
 public:
  DftPlan(const std::vector<std::size_t>& shape, const std::vector<std::size_t>& axes, int sign, Buffer& buf) {
    std::vector<fftw_iodim> t, l;
    split_dims(shape, axes, t, l);
    std::lock_guard lock(detail::planner_mutex());
    detail::configure_threads_locked();
    plan_ = fftw_plan_guru_dft(int(t.size()), t.data(), int(l.size()), l.data(), buf.raw(), buf.raw(), sign,
                               FFTW_ESTIMATE);
    if (!plan_) throw NumericalError("FFTW could not create a DFT plan");
  }
  DftPlan(const DftPlan&) = delete;
  DftPlan& operator=(const DftPlan&) = delete;
  ~DftPlan() {
    std::lock_guard lock(detail::planner_mutex());
    fftw_destroy_plan(plan_);
  }
  void execute(Buffer& buf) const { fftw_execute_dft(plan_, buf.raw(), buf.raw()); }

 private:
  fftw_plan plan_ = nullptr;
};

/// Type-I discrete sine transform along one axis, applied to the real and
/// imaginary parts of a complex buffer. Self-inverse up to 2 (n + 1).
class DstPlan {
 public:
  DstPlan(const std::vector<std::size_t>& shape, std::size_t axis, Buffer& buf) {
    std::vector<fftw_iodim> t, l;
    split_dims(shape, {axis}, t, l, 2);
    l.push_back(fftw_iodim{2, 1, 1});  // real and imaginary parts
    std::lock_guard lock(detail::planner_mutex());
    detail::configure_threads_locked();
    double* p = reinterpret_cast<double*>(buf.raw());
    const fftw_r2r_kind kind = FFTW_RODFT00;
    plan_ = fftw_plan_guru_r2r(int(t.size()), t.data(), int(l.size()), l.data(), p, p, &kind, FFTW_ESTIMATE);
    if (!plan_) throw NumericalError("FFTW could not create a DST plan");
  }
  DstPlan(const DstPlan&) = delete;
  DstPlan& operator=(const DstPlan&) = delete;
  ~DstPlan() {
    std::lock_guard lock(detail::planner_mutex());
    fftw_destroy_plan(plan_);
  }
  void execute(Buffer& buf) const {
    double* p = reinterpret_cast<double*>(buf.raw());
    fftw_execute_r2r(plan_, p, p);
  }

 private:
  fftw_plan plan_ = nullptr;
};

}  // namespace fft
}  // namespace omech
