#pragma once

#include <vector>

namespace mixlab {

/// Mono time-domain signal.
using Signal = std::vector<double>;
/// Multi-channel time-domain signal, indexed [channel][sample].
using MultiSignal = std::vector<Signal>;

}  // namespace mixlab
