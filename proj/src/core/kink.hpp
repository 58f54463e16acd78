#pragma once

#include <cstdint>

namespace tscnet::core {

// Records the branch pattern of piecewise ops (relu masks, max-pool argmax,
// clamps) as a running hash. The finite-difference checker compares patterns
// between perturbed evaluations to detect steps that straddle a kink.
class KinkMonitor {
  struct State {
    bool active = false;
    std::uint64_t hash = 0;
  };

  static State& state() {
    thread_local State s;
    return s;
  }

 public:
  static bool active() { return state().active; }
  static void fold(std::uint64_t v) {
    State& s = state();
    s.hash = (s.hash ^ v) * 0x100000001b3ULL;
  }

  class Scope {
   public:
    Scope() : saved_(state()) { state() = State{true, 0xcbf29ce484222325ULL}; }
    ~Scope() { state() = saved_; }
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;
    std::uint64_t signature() const { return state().hash; }

   private:
    State saved_;
  };
};

}  // namespace tscnet::core
