#include "helios/core.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace helios {

namespace runtime {

std::size_t max_threads() {
  const char* env = std::getenv("HELIOS_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  long v = std::strtol(env, &end, 10);
  if (end == env || v < 1) return 1;
  return static_cast<std::size_t>(v);
}

}  // namespace runtime

std::string format_double(double v) {
  char buf[64];
  // %.17g always round-trips; prefer the shortest representation that does.
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace helios
