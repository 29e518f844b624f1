#include "eqrn/nn/train.hpp"

#include <algorithm>
#include <string>

namespace eqrn::nn {

void TrainConfig::validate() const {
  if (max_epochs < 1) throw DomainError("TrainConfig: max_epochs must be >= 1");
  if (batch_size < 1) throw DomainError("TrainConfig: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw DomainError("TrainConfig: learning_rate must be positive");
  if (patience < 1) throw DomainError("TrainConfig: patience must be >= 1");
  if (!(lr_decay_factor > 0.0 && lr_decay_factor < 1.0)) throw DomainError("TrainConfig: lr_decay_factor in (0,1)");
  if (n_restarts < 1) throw DomainError("TrainConfig: n_restarts must be >= 1");
}

std::vector<Index> epoch_permutation(Index n, std::uint64_t seed, int restart, int epoch) {
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(restart) + 1, static_cast<std::uint64_t>(epoch) + 1));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

}  // namespace eqrn::nn
