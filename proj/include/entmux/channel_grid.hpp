#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace entmux {

/// A 100 GHz ITU C-band channel, identified by its grid number (e.g. C34).
struct ItuChannel {
    int index = 0;

    friend bool operator==(ItuChannel a, ItuChannel b) { return a.index == b.index; }
};

/// A correlated signal/idler channel pair, symmetric about the pump channel.
struct ChannelPair {
    int pair_index = 0;  // 1-based, counted outward from the pump
    ItuChannel signal;
    ItuChannel idler;
    double signal_wavelength_nm = 0.0;
    double idler_wavelength_nm = 0.0;
};

/// Wavelength table for a DWDM grid. Channel wavelengths are stored as data
/// (transcribed table values), never recomputed from the frequency grid, so
/// printed outputs agree digit-for-digit with the table they came from.
///
/// Immutable after construction; concurrent reads need no synchronization.
class ChannelGrid {
public:
    /// The built-in 100 GHz C-band table used by the multiplexed source:
    /// signal channels C19..C32, pump C34, idler channels C36..C49.
    static const ChannelGrid& c_band_100ghz();

    /// Parse a grid file: one `index wavelength_nm` row per channel,
    /// `#` starts a comment. Throws std::runtime_error on malformed input.
    static ChannelGrid from_file(const std::string& path);
    static ChannelGrid from_stream(std::istream& in, const std::string& origin);

    bool contains(int index) const { return table_.count(index) != 0; }

    /// Table lookup, no interpolation. Throws std::out_of_range for a
    /// channel index absent from the grid.
    double wavelength_nm(ItuChannel ch) const;

    /// The correlated pair `pair_index` steps out from `pump`: the k-th grid
    /// channel below the pump paired with the k-th above. Enforces the
    /// energy-conservation symmetry signal + idler = 2 * pump and throws
    /// std::out_of_range / std::runtime_error when the pairing leaves the
    /// table or breaks the symmetry.
    ChannelPair pair_for_index(int pair_index, ItuChannel pump) const;

    /// Largest valid pair index for this pump (14 for the built-in table).
    int max_pair_index(ItuChannel pump) const;

    /// Channel indices in ascending order.
    std::vector<int> channel_indices() const;

    ItuChannel default_pump() const { return ItuChannel{default_pump_index_}; }

private:
    std::map<int, double> table_;
    int default_pump_index_ = 34;
};

/// True iff signal.index + idler.index == 2 * pump.index.
bool energy_conservation_check(const ChannelPair& pair, ItuChannel pump);

}  // namespace entmux
