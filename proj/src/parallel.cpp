#include "codeprep/parallel.hpp"

#include <cstdlib>
#include <string>

namespace codeprep {

unsigned worker_count_from_env(unsigned fallback) {
  if (const char* env = std::getenv("CODEPREP_WORKERS"); env && *env) {
    try {
      const unsigned long v = std::stoul(env);
      if (v > 0) return static_cast<unsigned>(std::min(v, 256ul));
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, fallback);
}

}  // namespace codeprep
