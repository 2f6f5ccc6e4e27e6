#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace pld {

// Soft reweighting: weight = exp(-beta * loss), so higher-loss interactions
// contribute less. For BCE on positives with beta = 1 this is the model's
// predicted positive probability.
inline double rce_weight(double loss, double beta) {
    if (loss < 0.0) throw std::invalid_argument("loss must be >= 0");
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
    return std::exp(-beta * loss);
}

// Truncation ramps linearly from 0 to max_drop_rate over ramp_epochs.
struct TruncateSchedule {
    double max_drop_rate = 0.2;
    int ramp_epochs = 10;

    void validate() const {
        if (!(max_drop_rate >= 0.0 && max_drop_rate < 1.0)) {
            throw std::invalid_argument("max_drop_rate must be in [0, 1)");
        }
        if (ramp_epochs < 1) {
            throw std::invalid_argument("ramp_epochs must be >= 1");
        }
    }
};

inline double tce_drop_rate(int epoch, const TruncateSchedule& schedule) {
    schedule.validate();
    const double ramp = std::min(1.0, static_cast<double>(epoch) / schedule.ramp_epochs);
    return schedule.max_drop_rate * ramp;
}

// Keep-mask that drops the ceil(r * B) largest-loss entries; on ties the
// lower index is kept first.
inline std::vector<char> tce_mask(std::span<const double> batch_losses, int epoch,
                                  const TruncateSchedule& schedule) {
    if (batch_losses.empty()) {
        throw std::invalid_argument("tce_mask requires a nonempty batch");
    }
    const double rate = tce_drop_rate(epoch, schedule);
    const auto n = batch_losses.size();
    const auto n_drop = static_cast<size_t>(std::ceil(rate * static_cast<double>(n)));
    std::vector<char> keep(n, 1);
    if (n_drop == 0) return keep;

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    // drop priority: larger loss first, then higher index
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_drop),
                      order.end(), [&](size_t a, size_t b) {
                          if (batch_losses[a] != batch_losses[b]) {
                              return batch_losses[a] > batch_losses[b];
                          }
                          return a > b;
                      });
    for (size_t i = 0; i < n_drop; ++i) {
        keep[order[i]] = 0;
    }
    return keep;
}

} // namespace pld
