#include "pkld/common.hpp"

namespace pkld {

Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x9e3779b9u};
  return Rng(seq);
}

Vector standard_normal(Rng& rng, Eigen::Index p) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector out(p);
  for (Eigen::Index i = 0; i < p; ++i) out[i] = normal(rng);
  return out;
}

Vector symmetric_eigenvalues(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

}  // namespace pkld
