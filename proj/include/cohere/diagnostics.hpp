#pragma once

#include <vector>

namespace cohere {

/// Split potential scale reduction factor. Each chain is halved, giving 2M
/// sequences of equal length. Requires >= 4 draws per chain.
/// Returns 1 when every draw is the same constant; throws std::domain_error
/// when within-sequence variance is zero but the sequences differ.
double rhat(const std::vector<std::vector<double>>& chains);

}  // namespace cohere
