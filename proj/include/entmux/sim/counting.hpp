#pragma once

#include <cstdint>
#include <map>
#include <span>

#include "entmux/sim/records.hpp"

namespace entmux::sim {

struct CoincidenceResult {
    int64_t coincidences = 0;
    int64_t accidentals = 0;
};

/// Count |tA - tB| <= window/2 matches between two time-sorted streams with
/// greedy one-to-one pairing (a click joins at most one coincidence), then
/// repeat with stream B shifted by `offset_ps` for the accidental estimate.
/// One pump period is the conventional offset. O(n) two-pointer sweep.
/// Throws std::invalid_argument if either stream is unsorted.
CoincidenceResult coincidence_count(std::span<const DetectionRecord> a,
                                    std::span<const DetectionRecord> b,
                                    int64_t window_ps, int64_t offset_ps);

/// Matched pairs only, with stream B shifted by `shift_b_ps`.
int64_t count_matches(std::span<const DetectionRecord> a,
                      std::span<const DetectionRecord> b, int64_t window_ps,
                      int64_t shift_b_ps);

/// Per-detector click totals, coincidence/accidental tallies and diagnostic
/// counters of one run.
struct CountSummary {
    std::map<int32_t, int64_t> singles;
    int64_t coincidences = 0;
    int64_t accidentals = 0;
    int64_t fourfolds = 0;
    int64_t dark_fourfolds = 0;
    // Routing diagnostics
    int64_t routed = 0;
    int64_t leaked = 0;
    int64_t unrouted = 0;
};

}  // namespace entmux::sim
