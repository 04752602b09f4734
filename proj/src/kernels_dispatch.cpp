#include "sindex/kernels.hpp"

#include <cstdlib>
#include <string_view>

namespace sindex::kern {

#if defined(SINDEX_HAVE_AVX2_TU)
namespace detail {
extern const Backend kAvx2Backend;
}
#endif
#if defined(SINDEX_HAVE_NEON_TU)
namespace detail {
extern const Backend kNeonBackend;
}
#endif

namespace {

const Backend* avx2_if_supported() {
#if defined(SINDEX_HAVE_AVX2_TU)
  if (__builtin_cpu_supports("avx2")) {
    return &detail::kAvx2Backend;
  }
#endif
  return nullptr;
}

const Backend* neon_if_supported() {
#if defined(SINDEX_HAVE_NEON_TU)
  return &detail::kNeonBackend;
#else
  return nullptr;
#endif
}

const Backend& resolve_active() {
  const char* env = std::getenv("SINDEX_SIMD");
  const std::string_view want = env ? env : "auto";
  if (want == "scalar") {
    return scalar_backend();
  }
  if (want == "avx2") {
    if (const Backend* b = avx2_if_supported()) return *b;
    return scalar_backend();
  }
  if (want == "neon") {
    if (const Backend* b = neon_if_supported()) return *b;
    return scalar_backend();
  }
  if (const Backend* b = avx2_if_supported()) return *b;
  if (const Backend* b = neon_if_supported()) return *b;
  return scalar_backend();
}

}  // namespace

std::vector<const Backend*> available_backends() {
  std::vector<const Backend*> out{&scalar_backend()};
  if (const Backend* b = avx2_if_supported()) out.push_back(b);
  if (const Backend* b = neon_if_supported()) out.push_back(b);
  return out;
}

const Backend& active_backend() {
  static const Backend& backend = resolve_active();
  return backend;
}

}  // namespace sindex::kern
