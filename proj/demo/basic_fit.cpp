// Sparse single-index fit: ReLU labels on a Gaussian design, solved with and
// without the bias column.

#include "blm/pgd.hpp"
#include "blm/synth.hpp"

#include <iostream>

int main() {
  using namespace blm;
  const LinkFunction relu{LinkKind::Relu, 0.0};
  const SyntheticDataset train = make_dataset(500, 800, 20, Distribution::Gaussian, relu, 42);
  const SyntheticDataset test = make_test_set(train, 500);
  const PopulationBlm pop = population_blm(train.beta, train.dist, relu, 200000, 7);

  for (bool bias : {true, false}) {
    PgdConfig config{ConstraintSpec::sparsity(800, 20)};
    config.eta = OneOverFiveN{};
    config.max_iters = 200;
    config.fit_bias = bias;
    const auto fit = pgd_fit(train.X, train.y, config, FitOracle{pop.theta_star, pop.mu_star, train.beta},
                             HeldOut{test.X, test.y});
    const auto& last = fit.trace.final();
    std::cout << (bias ? "[X 1]" : "X    ") << "  test_err " << *last.test_err << "  corr "
              << *last.corr << "  mu " << fit.params.mu << '\n';
  }
  std::cout << "population mu* " << pop.mu_star << '\n';
}
