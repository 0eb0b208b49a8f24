#ifndef NHQC_LAPACK_HPP
#define NHQC_LAPACK_HPP

#include <complex>
#include <mutex>

#define LAPACK_COMPLEX_CUSTOM
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

// OpenBLAS thread-count setter; absent when linked against reference BLAS.
extern "C" void openblas_set_num_threads(int) __attribute__((weak));

namespace nhqc {

/// Pin the BLAS backend to one thread. Point-level parallelism lives in the
/// sweep worker pool, and row contents must not depend on the backend's
/// thread count.
inline void pin_blas_single_thread() {
  static std::once_flag flag;
  std::call_once(flag, [] {
    if (&openblas_set_num_threads != nullptr) openblas_set_num_threads(1);
  });
}

}  // namespace nhqc

#endif  // NHQC_LAPACK_HPP
