#include "nbiot/rng.hpp"

namespace nbiot {

std::string_view stream_name(Stream s) {
  switch (s) {
    case Stream::kPlacement: return "placement";
    case Stream::kTraffic: return "traffic";
    case Stream::kFading: return "fading";
    case Stream::kPreambleChoice: return "preamble-choice";
    case Stream::kSchedulingOrder: return "scheduling-order";
    case Stream::kExploration: return "exploration";
    case Stream::kReplaySampling: return "replay-sampling";
    case Stream::kInit: return "init";
  }
  return "unknown";
}

}  // namespace nbiot
