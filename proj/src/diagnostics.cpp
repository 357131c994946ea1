#include "cohere/diagnostics.hpp"

#include <cmath>
#include <stdexcept>

namespace cohere {

double rhat(const std::vector<std::vector<double>>& chains) {
    if (chains.empty()) throw std::invalid_argument("rhat: no chains");
    const std::size_t len = chains.front().size();
    for (const auto& c : chains)
        if (c.size() != len) throw std::invalid_argument("rhat: chains differ in length");
    if (len < 4) throw std::invalid_argument("rhat: at least 4 draws per chain are required");

    const std::size_t n = len / 2;
    std::vector<double> means;
    std::vector<double> vars;
    for (const auto& c : chains) {
        for (std::size_t half = 0; half < 2; ++half) {
            // Odd lengths drop the middle draw.
            const std::size_t start = half == 0 ? 0 : len - n;
            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) mean += c[start + i];
            mean /= static_cast<double>(n);
            double ss = 0.0;
            for (std::size_t i = 0; i < n; ++i) ss += (c[start + i] - mean) * (c[start + i] - mean);
            means.push_back(mean);
            vars.push_back(ss / static_cast<double>(n - 1));
        }
    }
    const double m = static_cast<double>(means.size());
    double grand = 0.0;
    for (double v : means) grand += v;
    grand /= m;
    double B = 0.0, W = 0.0;
    for (std::size_t i = 0; i < means.size(); ++i) {
        B += (means[i] - grand) * (means[i] - grand);
        W += vars[i];
    }
    const double nd = static_cast<double>(n);
    B *= nd / (m - 1.0);
    W /= m;
    const double scale = std::max(1.0, std::abs(grand));
    if (W <= 1e-300 * scale) {
        if (B <= 1e-300 * scale) return 1.0;
        throw std::domain_error("rhat: zero within-chain variance");
    }
    const double var_plus = (nd - 1.0) / nd * W + B / nd;
    return std::sqrt(var_plus / W);
}

}  // namespace cohere
