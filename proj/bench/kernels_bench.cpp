// Serial reference vs OpenMP kernels. Run with OMP_NUM_THREADS set to the
// thread count of interest.

#include "ecomp/envelope.hpp"
#include "ecomp/kernels.hpp"
#include "ecomp/netdyn.hpp"
#include "ecomp/signal.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

using namespace ecomp;

namespace {

Matrix random_points(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(n, d);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < d; ++c)
      m(r, c) = u(rng);
  return m;
}

Exec exec_of(const benchmark::State &s) { return s.range(1) ? Exec::parallel : Exec::serial; }

void BM_Fir(benchmark::State &state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> x(n);
  for (std::size_t k = 0; k < n; ++k)
    x[k] = std::sin(0.01 * static_cast<double>(k));
  const auto taps = design_lowpass(10.0, 100.0, 5.0);
  std::vector<double> out(n);
  for (auto _ : state) {
    kernels::fir_centered(x, taps, out, exec_of(state));
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

void BM_Gram(benchmark::State &state) {
  const auto x = random_points(state.range(0), 5, 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(kernels::gram_matrix(x, 0.5, exec_of(state)));
}

void BM_RbfDecision(benchmark::State &state) {
  const auto probes = random_points(state.range(0), 5, 2);
  const auto centers = random_points(200, 5, 3);
  std::vector<double> coef(200, 1.0 / 200.0);
  std::vector<double> out(static_cast<std::size_t>(probes.rows()));
  for (auto _ : state) {
    kernels::rbf_decision(probes, centers, coef, 0.5, 0.1, out, exec_of(state));
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_SpaceFilling(benchmark::State &state) {
  const auto x = random_points(state.range(0), 5, 4);
  for (auto _ : state)
    benchmark::DoNotOptimize(space_filling_subset(x, 100, 0, exec_of(state)));
}

void BM_HullMembership(benchmark::State &state) {
  const auto pts = random_points(2000, 3, 5);
  const auto hull = hull_3d(pts);
  const auto probes = random_points(state.range(0), 3, 6);
  for (auto _ : state)
    benchmark::DoNotOptimize(hull_contains_batch(hull, probes, 1e-9, exec_of(state)));
}

void BM_NormalEquations(benchmark::State &state) {
  const auto x = random_points(state.range(0), 5, 7);
  auto net = MlpModel::random(5, 8, 8);
  net.input_scaling = ScalingInfo::identity(5);
  net.output_scaling = ScalingInfo::identity(1);
  const auto p = net.param_count();
  for (auto _ : state) {
    auto ne = kernels::accumulate_normal_equations(
        static_cast<std::size_t>(x.rows()), p,
        [&](std::size_t b, std::size_t e, Eigen::MatrixXd &jac, Eigen::VectorXd &res) {
          for (std::size_t r = b; r < e; ++r) {
            const auto row = static_cast<Eigen::Index>(r - b);
            Eigen::RowVectorXd j(p);
            res(row) = mlp_scaled_eval(net, x.row(static_cast<Eigen::Index>(r)).data(), j.data());
            jac.row(row) = j;
          }
        },
        exec_of(state));
    benchmark::DoNotOptimize(ne.sse);
  }
}

} // namespace

BENCHMARK(BM_Fir)->ArgsProduct({{100000, 1000000}, {0, 1}});
BENCHMARK(BM_Gram)->ArgsProduct({{400, 1000}, {0, 1}});
BENCHMARK(BM_RbfDecision)->ArgsProduct({{20000}, {0, 1}});
BENCHMARK(BM_SpaceFilling)->ArgsProduct({{4000}, {0, 1}});
BENCHMARK(BM_HullMembership)->ArgsProduct({{100000}, {0, 1}});
BENCHMARK(BM_NormalEquations)->ArgsProduct({{20000}, {0, 1}});

BENCHMARK_MAIN();
