#include "entmux/sim/counting.hpp"

#include <cstdlib>
#include <stdexcept>

namespace entmux::sim {

namespace {

void require_sorted(std::span<const DetectionRecord> s, const char* name) {
    for (size_t i = 1; i < s.size(); ++i) {
        if (s[i].time_tag_ps < s[i - 1].time_tag_ps) {
            throw std::invalid_argument(std::string("record stream ") + name +
                                        " is not time-sorted");
        }
    }
}

}  // namespace

int64_t count_matches(std::span<const DetectionRecord> a,
                      std::span<const DetectionRecord> b, int64_t window_ps,
                      int64_t shift_b_ps) {
    const int64_t half = window_ps / 2;
    int64_t matches = 0;
    size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const int64_t ta = a[i].time_tag_ps;
        const int64_t tb = b[j].time_tag_ps + shift_b_ps;
        if (std::llabs(ta - tb) <= half) {
            ++matches;
            ++i;
            ++j;
        } else if (ta < tb) {
            ++i;
        } else {
            ++j;
        }
    }
    return matches;
}

CoincidenceResult coincidence_count(std::span<const DetectionRecord> a,
                                    std::span<const DetectionRecord> b,
                                    int64_t window_ps, int64_t offset_ps) {
    if (window_ps <= 0) {
        throw std::invalid_argument("coincidence window must be positive");
    }
    require_sorted(a, "A");
    require_sorted(b, "B");
    CoincidenceResult out;
    out.coincidences = count_matches(a, b, window_ps, 0);
    out.accidentals = count_matches(a, b, window_ps, offset_ps);
    return out;
}

}  // namespace entmux::sim
