#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <string>
#include <vector>

#include "navtl/core/error.hpp"

namespace navtl::rl {

struct EpisodeRecord {
    std::uint64_t step = 0;  // global step at which the episode ended
    std::uint64_t episode = 0;
    double episode_return = 0.0;
    double moving_avg = 0.0;
    double epsilon = 0.0;
    std::size_t env_index = 0;
    double loss = std::nan("");  // mean training loss during the episode, NaN if no update ran
    std::uint64_t length = 0;
};

inline std::string format_number(double v) {
    if (std::isnan(v)) return "";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// Per-episode returns with a moving average over the last `window` episodes.
class ReturnLog {
public:
    explicit ReturnLog(std::size_t window = 100) : window_(window) {
        require(window >= 1, "moving-average window must be at least 1");
    }

    std::size_t window() const { return window_; }
    const std::vector<EpisodeRecord>& records() const { return records_; }
    bool empty() const { return records_.empty(); }

    /// Mean of the last `window` returns; 0 for an empty log.
    double moving_average() const {
        if (recent_.empty()) return 0.0;
        double s = 0.0;
        for (double r : recent_) s += r;
        return s / double(recent_.size());
    }

    const EpisodeRecord& add(EpisodeRecord rec) {
        recent_.push_back(rec.episode_return);
        if (recent_.size() > window_) recent_.pop_front();
        rec.episode = records_.size();
        rec.moving_avg = moving_average();
        records_.push_back(rec);
        return records_.back();
    }

    double total_return() const {
        double s = 0.0;
        for (const auto& r : records_) s += r.episode_return;
        return s;
    }

    std::string to_csv() const {
        std::string out = "step,episode,episode_return,moving_avg,epsilon,env_index,loss\n";
        for (const auto& r : records_)
            out += std::to_string(r.step) + "," + std::to_string(r.episode) + "," + format_number(r.episode_return) +
                   "," + format_number(r.moving_avg) + "," + format_number(r.epsilon) + "," +
                   std::to_string(r.env_index) + "," + format_number(r.loss) + "\n";
        return out;
    }

    void save_csv(const std::string& path) const {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot open " + path + " for writing");
        f << to_csv();
    }

private:
    std::size_t window_;
    std::deque<double> recent_;
    std::vector<EpisodeRecord> records_;
};

}  // namespace navtl::rl
