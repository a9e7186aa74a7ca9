#include "gbstring/random_field.hpp"

#include <cmath>
#include <random>

namespace gbs {

Field random_smooth_field(const GridPtr& grid, const std::vector<IndexSlot>& slots,
                          std::uint64_t seed) {
  Field f(grid, slots);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int modes = grid->n_sigma() / 4;
  const Eigen::ArrayXXd tau = grid->tau_coords();
  const Eigen::ArrayXXd sig = grid->sigma_coords();
  const Eigen::ArrayXXd s =
      2.0 * (tau - grid->tau_min()) / (grid->tau_max() - grid->tau_min()) - 1.0;
  for (int c = 0; c < f.size(); ++c) {
    Eigen::ArrayXXd acc = Eigen::ArrayXXd::Zero(grid->n_tau(), grid->n_sigma());
    for (int k = 0; k <= modes; ++k) {
      const double amp = std::exp(-static_cast<double>(k));
      for (int trig = 0; trig < (k == 0 ? 1 : 2); ++trig) {
        Eigen::ArrayXXd poly = Eigen::ArrayXXd::Zero(grid->n_tau(), grid->n_sigma());
        Eigen::ArrayXXd power = Eigen::ArrayXXd::Ones(grid->n_tau(), grid->n_sigma());
        for (int d = 0; d <= 3; ++d) {
          poly += u(rng) * power;
          power *= s;
        }
        const Eigen::ArrayXXd wave = trig == 0 ? (k * sig).cos().eval() : (k * sig).sin().eval();
        acc += amp * poly * wave;
      }
    }
    f[c] = acc;
  }
  const double m = f.max_abs();
  if (m > 0.0) f *= 1.0 / m;
  return f;
}

}  // namespace gbs
