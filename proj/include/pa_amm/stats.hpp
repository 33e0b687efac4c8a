#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace pa_amm {

struct MeanEstimate {
    double mean{0.0};
    double std_error{0.0};
    std::size_t n_samples{0};
};

/// Sample mean with a batch-means standard error, which stays honest for the
/// autocorrelated series produced by the gap chain. Batches of equal size;
/// the tail that does not fill a batch still contributes to the mean.
inline MeanEstimate batch_mean(std::span<const double> xs, std::size_t n_batches = 200) {
    MeanEstimate out;
    out.n_samples = xs.size();
    if (xs.empty()) return out;
    double total = 0.0;
    for (double v : xs) total += v;
    out.mean = total / static_cast<double>(xs.size());

    if (n_batches < 2 || xs.size() < 2 * n_batches) n_batches = std::max<std::size_t>(2, xs.size() / 2);
    const std::size_t batch = xs.size() / n_batches;
    if (batch == 0) return out;
    std::vector<double> means(n_batches, 0.0);
    double grand = 0.0;
    for (std::size_t b = 0; b < n_batches; ++b) {
        double acc = 0.0;
        for (std::size_t i = b * batch; i < (b + 1) * batch; ++i) acc += xs[i];
        means[b] = acc / static_cast<double>(batch);
        grand += means[b];
    }
    grand /= static_cast<double>(n_batches);
    double ss = 0.0;
    for (double m : means) ss += (m - grand) * (m - grand);
    const double var_of_batch_mean = ss / static_cast<double>(n_batches - 1);
    out.std_error = std::sqrt(var_of_batch_mean / static_cast<double>(n_batches));
    return out;
}

}  // namespace pa_amm
