#include "hybridsim/ensemble.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

namespace hybridsim {

namespace {

constexpr double kWeightSumTol = 1e-10;

/// 53-bit uniform in [0, 1). Pinned to the raw engine output so draws do not
/// depend on the standard library's distribution internals.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Box-Muller. Consumes exactly two engine outputs per call.
double standard_normal(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  while (u1 == 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Eigen::Index classical_dof(const HybridDensitySpec& density) {
  if (const auto* delta = std::get_if<DeltaClassicalDensity>(&density.classical)) {
    return delta->q.size();
  }
  return std::get<GaussianClassicalDensity>(density.classical).mean_q.size();
}

}  // namespace

void HybridDensitySpec::validate() const {
  if (const auto* delta = std::get_if<DeltaClassicalDensity>(&classical)) {
    if (delta->q.size() == 0 || delta->q.size() != delta->p.size()) {
      throw std::invalid_argument("delta density needs matching nonempty q and p");
    }
    if (!delta->q.allFinite() || !delta->p.allFinite()) {
      throw std::invalid_argument("delta density has non-finite coordinates");
    }
  } else {
    const auto& g = std::get<GaussianClassicalDensity>(classical);
    const Eigen::Index k = g.mean_q.size();
    if (k == 0 || g.mean_p.size() != k) {
      throw std::invalid_argument("gaussian density needs matching nonempty means");
    }
    if (!g.mean_q.allFinite() || !g.mean_p.allFinite()) {
      throw std::invalid_argument("gaussian density has non-finite means");
    }
    if (g.covariance.rows() != 2 * k || g.covariance.cols() != 2 * k) {
      throw std::invalid_argument("gaussian covariance must be 2k x 2k over stacked (q, p)");
    }
    const double scale = std::max(1.0, g.covariance.cwiseAbs().maxCoeff());
    if ((g.covariance - g.covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw std::invalid_argument("gaussian covariance is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<RealMatrix> eig(g.covariance);
    if (eig.info() != Eigen::Success) {
      throw std::runtime_error("covariance eigendecomposition failed");
    }
    if (eig.eigenvalues().minCoeff() < -1e-12 * scale) {
      throw std::invalid_argument("gaussian covariance is not positive semidefinite");
    }
  }

  if (quantum.empty()) {
    throw std::invalid_argument("quantum mixture must have at least one component");
  }
  const Eigen::Index dim = quantum.front().omega.dim();
  double weight_sum = 0.0;
  for (const auto& component : quantum) {
    if (!(component.weight >= 0.0)) {
      throw std::invalid_argument("mixture weights must be nonnegative");
    }
    if (component.omega.dim() != dim) {
      throw std::invalid_argument("mixture components must share one dimension");
    }
    if (std::abs(component.omega.amplitudes().norm() - 1.0) > kNormTol) {
      throw std::invalid_argument("mixture component is not normalized");
    }
    weight_sum += component.weight;
  }
  if (std::abs(weight_sum - 1.0) > kWeightSumTol) {
    throw std::invalid_argument("mixture weights must sum to 1, got " +
                                std::to_string(weight_sum));
  }
}

std::vector<HybridState> sample(const HybridDensitySpec& density, int n, unsigned long seed) {
  density.validate();
  if (n < 1) throw std::invalid_argument("sample count must be positive");

  std::mt19937_64 rng(seed);
  const Eigen::Index k = classical_dof(density);

  // Square root of the covariance for the Gaussian case. Eigendecomposition
  // rather than Cholesky so singular (e.g. delta-in-p) covariances work.
  RealMatrix root;
  if (const auto* g = std::get_if<GaussianClassicalDensity>(&density.classical)) {
    Eigen::SelfAdjointEigenSolver<RealMatrix> eig(g->covariance);
    root = eig.eigenvectors() *
           eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
           eig.eigenvectors().transpose();
  }

  // Cumulative mixture weights for component selection by a single uniform.
  std::vector<double> cumulative(density.quantum.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < density.quantum.size(); ++j) {
    acc += density.quantum[j].weight;
    cumulative[j] = acc;
  }
  cumulative.back() = 1.0;

  // Draw order per sample: the 2k classical normals (Gaussian case only),
  // then one uniform for the mixture component (only when there is a choice).
  std::vector<HybridState> samples;
  samples.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    ClassicalPoint point;
    if (const auto* delta = std::get_if<DeltaClassicalDensity>(&density.classical)) {
      point.q = delta->q;
      point.p = delta->p;
    } else {
      const auto& g = std::get<GaussianClassicalDensity>(density.classical);
      RealVector z(2 * k);
      for (Eigen::Index j = 0; j < 2 * k; ++j) z[j] = standard_normal(rng);
      const RealVector shift = root * z;
      point.q = g.mean_q + shift.head(k);
      point.p = g.mean_p + shift.tail(k);
    }

    std::size_t component = 0;
    if (density.quantum.size() > 1) {
      const double u = uniform01(rng);
      while (component + 1 < cumulative.size() && u >= cumulative[component]) ++component;
    }

    samples.push_back(HybridState{point, density.quantum[component].omega});
  }
  return samples;
}

std::vector<TrajectoryRecord> evolve_ensemble(const HybridHamiltonianSpec& spec,
                                              const std::vector<HybridState>& samples,
                                              const IntegratorConfig& config,
                                              int max_threads) {
  if (samples.empty()) throw std::invalid_argument("ensemble has no samples");
  config.validate();

  if (max_threads < 0) throw std::invalid_argument("max_threads must be nonnegative");
  unsigned int n_threads = max_threads > 0 ? static_cast<unsigned int>(max_threads)
                                           : std::thread::hardware_concurrency();
  if (n_threads == 0) n_threads = 1;
  n_threads = std::min<unsigned int>(n_threads, static_cast<unsigned int>(samples.size()));

  std::vector<TrajectoryRecord> results(samples.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= samples.size()) return;
      try {
        results[i] = integrate(spec, samples[i], config);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

EnsembleResult estimate_observable(const std::vector<TrajectoryRecord>& trajectories,
                                   const std::vector<HybridObservable>& observables) {
  if (trajectories.empty()) throw std::invalid_argument("no trajectories");
  if (observables.empty()) throw std::invalid_argument("no observables");

  const std::size_t n_records = trajectories.front().times.size();
  for (const auto& trajectory : trajectories) {
    if (trajectory.times.size() != n_records) {
      throw std::invalid_argument("trajectories have mismatched time grids");
    }
    for (std::size_t r = 0; r < n_records; ++r) {
      if (trajectory.times[r] != trajectories.front().times[r]) {
        throw std::invalid_argument("trajectories have mismatched time grids");
      }
    }
  }

  const std::size_t n = trajectories.size();
  EnsembleResult result;
  result.times = trajectories.front().times;
  result.sample_count = static_cast<int>(n);
  result.degenerate_samples = (n == 1);
  result.means.assign(observables.size(), std::vector<double>(n_records, 0.0));
  result.stderrs.assign(observables.size(), std::vector<double>(n_records, 0.0));

  std::vector<double> values(n);
  for (std::size_t j = 0; j < observables.size(); ++j) {
    for (std::size_t r = 0; r < n_records; ++r) {
      for (std::size_t i = 0; i < n; ++i) {
        values[i] = observables[j].evaluate(trajectories[i].states[r]);
      }
      // Mean anchored at the first sample: identical samples reproduce the
      // anchor bit for bit and the spread terms vanish exactly.
      const double anchor = values[0];
      double spread = 0.0;
      for (std::size_t i = 0; i < n; ++i) spread += values[i] - anchor;
      const double mean = anchor + spread / static_cast<double>(n);
      result.means[j][r] = mean;
      if (n > 1) {
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = values[i] - mean;
          ss += d * d;
        }
        result.stderrs[j][r] =
            std::sqrt(ss / (static_cast<double>(n) * static_cast<double>(n - 1)));
      }
    }
  }
  return result;
}

EnsembleResult estimate_observable(const std::vector<TrajectoryRecord>& trajectories,
                                   const HybridObservable& observable) {
  return estimate_observable(trajectories, std::vector<HybridObservable>{observable});
}

}  // namespace hybridsim
