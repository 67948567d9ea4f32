#include "scorelab/parallel.hpp"

namespace scorelab {
namespace {

std::atomic<unsigned>& configured_threads() {
  static std::atomic<unsigned> count{std::max(1u, std::thread::hardware_concurrency())};
  return count;
}

}  // namespace

unsigned thread_count() { return configured_threads().load(); }

void set_thread_count(unsigned count) { configured_threads().store(std::max(1u, count)); }

}  // namespace scorelab
