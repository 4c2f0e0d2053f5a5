#include "entmux/channel_grid.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace entmux {

namespace {

struct GridRow {
    int index;
    double wavelength_nm;
};

// 100 GHz C-band grid as used by the multiplexed source. Wavelengths are
// table data, two decimals, exactly as printed on the DWDM channel plan.
constexpr GridRow kCBand100[] = {
    {19, 1562.23}, {20, 1561.42}, {21, 1560.61}, {22, 1559.79},
    {23, 1558.98}, {24, 1558.17}, {25, 1557.36}, {26, 1556.56},
    {27, 1555.75}, {28, 1554.94}, {29, 1554.13}, {30, 1553.33},
    {31, 1552.52}, {32, 1551.72},
    {34, 1550.12},
    {36, 1548.52}, {37, 1547.72}, {38, 1546.92}, {39, 1546.12},
    {40, 1545.32}, {41, 1544.53}, {42, 1543.73}, {43, 1542.94},
    {44, 1542.14}, {45, 1541.35}, {46, 1540.56}, {47, 1539.77},
    {48, 1538.98}, {49, 1538.19},
};

}  // namespace

const ChannelGrid& ChannelGrid::c_band_100ghz() {
    static const ChannelGrid grid = [] {
        ChannelGrid g;
        for (const auto& row : kCBand100) {
            g.table_.emplace(row.index, row.wavelength_nm);
        }
        g.default_pump_index_ = 34;
        return g;
    }();
    return grid;
}

ChannelGrid ChannelGrid::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open grid file: " + path);
    }
    return from_stream(in, path);
}

ChannelGrid ChannelGrid::from_stream(std::istream& in, const std::string& origin) {
    ChannelGrid grid;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream row(line);
        int index = 0;
        double wavelength = 0.0;
        if (!(row >> index)) {
            continue;  // blank or comment-only line
        }
        std::string trailing;
        if (!(row >> wavelength) || (row >> trailing)) {
            throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                     ": expected `index wavelength_nm`");
        }
        if (wavelength <= 0.0) {
            throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                     ": wavelength must be positive");
        }
        if (!grid.table_.emplace(index, wavelength).second) {
            throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                     ": duplicate channel C" + std::to_string(index));
        }
    }
    if (grid.table_.empty()) {
        throw std::runtime_error(origin + ": grid table is empty");
    }
    // Wavelength must strictly decrease as the channel number increases.
    double prev = 0.0;
    bool first = true;
    for (const auto& [index, wl] : grid.table_) {
        if (!first && wl >= prev) {
            throw std::runtime_error(origin + ": wavelength not decreasing at C" +
                                     std::to_string(index));
        }
        prev = wl;
        first = false;
    }
    return grid;
}

double ChannelGrid::wavelength_nm(ItuChannel ch) const {
    const auto it = table_.find(ch.index);
    if (it == table_.end()) {
        throw std::out_of_range("channel C" + std::to_string(ch.index) +
                                " is not in the grid table");
    }
    return it->second;
}

ChannelPair ChannelGrid::pair_for_index(int pair_index, ItuChannel pump) const {
    if (!contains(pump.index)) {
        throw std::out_of_range("pump channel C" + std::to_string(pump.index) +
                                " is not in the grid table");
    }
    if (pair_index < 1) {
        throw std::out_of_range("pair index must be >= 1 (the pump cannot pair with itself)");
    }

    // k-th table channel below the pump and k-th above it.
    auto below = table_.lower_bound(pump.index);
    auto above = table_.upper_bound(pump.index);
    for (int step = 0; step < pair_index; ++step) {
        if (below == table_.begin()) {
            throw std::out_of_range("pair index " + std::to_string(pair_index) +
                                    " leaves the grid table below the pump");
        }
        --below;
        if (above == table_.end()) {
            throw std::out_of_range("pair index " + std::to_string(pair_index) +
                                    " leaves the grid table above the pump");
        }
        if (step + 1 < pair_index) {
            ++above;
        }
    }

    ChannelPair pair;
    pair.pair_index = pair_index;
    pair.signal = ItuChannel{below->first};
    pair.idler = ItuChannel{above->first};
    pair.signal_wavelength_nm = below->second;
    pair.idler_wavelength_nm = above->second;
    if (!energy_conservation_check(pair, pump)) {
        throw std::runtime_error("grid table pairing C" + std::to_string(pair.signal.index) +
                                 "/C" + std::to_string(pair.idler.index) +
                                 " is not symmetric about pump C" + std::to_string(pump.index));
    }
    return pair;
}

int ChannelGrid::max_pair_index(ItuChannel pump) const {
    int k = 0;
    for (;;) {
        try {
            pair_for_index(k + 1, pump);
        } catch (const std::exception&) {
            return k;
        }
        ++k;
    }
}

std::vector<int> ChannelGrid::channel_indices() const {
    std::vector<int> out;
    out.reserve(table_.size());
    for (const auto& [index, wl] : table_) {
        out.push_back(index);
    }
    return out;
}

bool energy_conservation_check(const ChannelPair& pair, ItuChannel pump) {
    return pair.signal.index + pair.idler.index == 2 * pump.index;
}

}  // namespace entmux
