#include "glrc/parallel.hpp"

#include <cstdlib>
#include <string>

namespace glrc {

std::size_t worker_count() {
  std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("GLRC_THREADS")) {
    try {
      const long cap = std::stol(env);
      if (cap > 0) return std::min<std::size_t>(static_cast<std::size_t>(cap), hw);
    } catch (const std::exception&) {
      // unparsable: fall back to hardware concurrency
    }
  }
  return hw;
}

}  // namespace glrc
