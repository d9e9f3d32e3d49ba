#include "motsc/kernels/kernels.hpp"

#include <atomic>
#include <cstdlib>

#include "motsc/core/error.hpp"

namespace motsc::kernels {

#if defined(MOTSC_HAVE_AVX2)
namespace detail {
const Ops& avx2_ops_impl();
}
#endif

namespace {

bool cpu_has_avx2_fma() {
#if defined(MOTSC_HAVE_AVX2)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

std::atomic<const Ops*> g_active{nullptr};

const Ops& resolve(Backend backend) {
  switch (backend) {
    case Backend::kScalar:
      return scalar_ops();
    case Backend::kAvx2: {
      const Ops* ops = avx2_ops();
      if (!ops) throw config_error("kernels: avx2 backend unavailable on this machine");
      return *ops;
    }
    case Backend::kAuto:
    default: {
      const Ops* ops = avx2_ops();
      return ops ? *ops : scalar_ops();
    }
  }
}

const Ops& initial_backend() {
  if (const char* env = std::getenv("MOTSC_KERNELS"); env && *env) {
    return resolve(parse_backend(env));
  }
  return resolve(Backend::kAuto);
}

}  // namespace

const Ops* avx2_ops() {
#if defined(MOTSC_HAVE_AVX2)
  if (cpu_has_avx2_fma()) return &detail::avx2_ops_impl();
#endif
  return nullptr;
}

bool avx2_available() { return avx2_ops() != nullptr; }

void set_backend(Backend backend) { g_active.store(&resolve(backend)); }

Backend parse_backend(const std::string& name) {
  if (name == "auto") return Backend::kAuto;
  if (name == "scalar") return Backend::kScalar;
  if (name == "avx2") return Backend::kAvx2;
  throw config_error("kernels: unknown backend '" + name + "' (expected auto|scalar|avx2)");
}

const Ops& active() {
  const Ops* ops = g_active.load();
  if (!ops) {
    ops = &initial_backend();
    g_active.store(ops);
  }
  return *ops;
}

}  // namespace motsc::kernels
