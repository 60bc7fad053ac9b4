#include <benchmark/benchmark.h>

#include "mcpl/harness.hpp"
#include "mcpl/lda.hpp"
#include "mcpl/rng.hpp"
#include "mcpl/solver.hpp"

namespace {

using namespace mcpl;

double normal(Rng& rng) {
  double u1 = rng.next_double();
  while (u1 <= 0.0) u1 = rng.next_double();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.14159265358979323846 * rng.next_double());
}

struct Problem {
  LabeledDataset labeled;
  UnlabeledSet unlabeled;
  LdaModel sup;
};

Problem make_problem(int d, int k, int m) {
  Rng rng(12345);
  Problem p;
  const int n = 2 * d + k;
  p.labeled.features.resize(n, d);
  p.labeled.labels.resize(static_cast<std::size_t>(n));
  p.labeled.class_count = k;
  auto sample = [&](int cls, Eigen::Index row, Eigen::MatrixXd& into) {
    for (int j = 0; j < d; ++j)
      into(row, j) = normal(rng) + (j == 0 ? 3.0 * cls : 0.0);
  };
  for (int i = 0; i < n; ++i) {
    const int cls = i % k;
    p.labeled.labels[static_cast<std::size_t>(i)] = cls + 1;
    sample(cls, i, p.labeled.features);
  }
  p.unlabeled.features.resize(m, d);
  for (int i = 0; i < m; ++i)
    sample(static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(k))),
           i, p.unlabeled.features);
  p.sup = fit_supervised(p.labeled);
  return p;
}

void BM_FitWeighted(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const Problem p = make_problem(8, 2, m);
  const SoftLabels q = SoftLabels::uniform(m, 2);
  for (auto _ : state) {
    const LdaModel model = fit_weighted(p.labeled, p.unlabeled, q);
    benchmark::DoNotOptimize(model.covariance.data());
  }
}
BENCHMARK(BM_FitWeighted)->Arg(10)->Arg(100)->Arg(1000);

void BM_PessimisticGain(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const Problem p = make_problem(8, 2, m);
  const LdaModel theta =
      fit_weighted(p.labeled, p.unlabeled, SoftLabels::uniform(m, 2));
  for (auto _ : state) {
    const auto g = pessimistic_gain(theta, p.sup, p.labeled, p.unlabeled);
    benchmark::DoNotOptimize(g.value);
  }
}
BENCHMARK(BM_PessimisticGain)->Arg(10)->Arg(100)->Arg(1000);

void BM_Solve(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const Problem p = make_problem(4, 2, m);
  for (auto _ : state) {
    const SolveResult r = solve(p.labeled, p.unlabeled, p.sup);
    benchmark::DoNotOptimize(r.gain);
  }
}
BENCHMARK(BM_Solve)->Arg(10)->Arg(100)->Arg(681);

void BM_ProjectSimplex(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  Rng rng(7);
  Eigen::VectorXd v(k);
  for (int i = 0; i < k; ++i) v(i) = 4.0 * (rng.next_double() - 0.5);
  for (auto _ : state) {
    const Eigen::VectorXd x = project_simplex(v);
    benchmark::DoNotOptimize(x.data());
  }
}
BENCHMARK(BM_ProjectSimplex)->Arg(2)->Arg(10)->Arg(26);

void BM_PermutationTest(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(9);
  std::vector<double> a(static_cast<std::size_t>(n)),
      b(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    a[static_cast<std::size_t>(i)] = normal(rng) + 0.2;
    b[static_cast<std::size_t>(i)] = normal(rng);
  }
  for (auto _ : state) {
    const double p = permutation_test(a, b, 10000, 42);
    benchmark::DoNotOptimize(p);
  }
}
BENCHMARK(BM_PermutationTest)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
