#pragma once

#include "lrc/signals.hpp"

namespace lrc::testing {

inline MultiSineSignal three_tone_input() {
  return MultiSineSignal({{1.0, 1.1, 0.0}, {3.0, 1.7, 0.0}, {5.0, 2.1, 0.0}});
}

inline MultiSineSignal three_tone_output() {
  return MultiSineSignal({{1.0, 2.2, -0.5}, {3.0, 1.0, 0.9}, {5.0, 1.6, 1.1}});
}

}  // namespace lrc::testing
