#pragma once

#include <cstdint>
#include <vector>

namespace entmux::sim {

/// Why a click happened. Diagnostic only: counting and analysis never read
/// it.
enum class PhotonOrigin : uint8_t { signal, idler, raman, dark };

/// One time-tagged detector click.
struct DetectionRecord {
    int32_t detector_id = 0;
    int64_t time_tag_ps = 0;
    PhotonOrigin origin = PhotonOrigin::signal;
};

using RecordStream = std::vector<DetectionRecord>;

/// Detector numbering: each routed slot branch carries a signal and an idler
/// detector.
inline int32_t signal_detector(int slot) { return 2 * (slot - 1); }
inline int32_t idler_detector(int slot) { return 2 * (slot - 1) + 1; }

}  // namespace entmux::sim
