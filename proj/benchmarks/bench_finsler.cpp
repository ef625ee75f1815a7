#include <benchmark/benchmark.h>

#include "finsler/deform.hpp"
#include "finsler/holonomy.hpp"
#include "finsler/spectral.hpp"
#include "finsler/zoo.hpp"

using namespace finsler;

namespace {

const CatalogEntry& klein_entry() {
  static CatalogEntry entry = catalog_get("klein", 2);
  return entry;
}

const SprayGeometry& klein_geometry() {
  static SprayGeometry geo = SprayGeometry::geodesic(klein_entry().metric);
  return geo;
}

ChartPoint probe() { return klein_entry().probes.front(); }

}  // namespace

static void BM_ParseKlein(benchmark::State& state) {
  const std::string& src = klein_entry().source;
  for (auto _ : state) {
    Expr e = parse(src, 2);
    benchmark::DoNotOptimize(e);
  }
}
BENCHMARK(BM_ParseKlein);

static void BM_EnergyJetOrder2(benchmark::State& state) {
  Expr E = klein_geometry().energy();
  ChartPoint p = probe();
  for (auto _ : state) {
    JetValue jet = evaluate_jet(E, p, 2);
    benchmark::DoNotOptimize(jet);
  }
}
BENCHMARK(BM_EnergyJetOrder2);

static void BM_SprayValues(benchmark::State& state) {
  const SprayGeometry& geo = klein_geometry();
  ChartPoint p = probe();
  for (auto _ : state) {
    Eigen::VectorXd g = geo.spray_values(p);
    benchmark::DoNotOptimize(g);
  }
}
BENCHMARK(BM_SprayValues);

static void BM_JacobiEndomorphism(benchmark::State& state) {
  const SprayGeometry& geo = klein_geometry();
  ChartPoint p = probe();
  for (auto _ : state) {
    Eigen::MatrixXd phi = geo.jacobi(p);
    benchmark::DoNotOptimize(phi);
  }
}
BENCHMARK(BM_JacobiEndomorphism);

static void BM_PrincipalCurvatures(benchmark::State& state) {
  const SprayGeometry& geo = klein_geometry();
  ChartPoint p = probe();
  for (auto _ : state) {
    SpectralData data = principal_curvatures(geo, p);
    benchmark::DoNotOptimize(data);
  }
}
BENCHMARK(BM_PrincipalCurvatures);

static void BM_HolonomyClosure(benchmark::State& state) {
  const SprayGeometry& geo = klein_geometry();
  ChartPoint p = probe();
  int depth = static_cast<int>(state.range(0));
  for (auto _ : state) {
    DistributionSpan span = holonomy_rank(geo, p, depth);
    benchmark::DoNotOptimize(span);
  }
}
BENCHMARK(BM_HolonomyClosure)->Arg(2)->Arg(3);

static void BM_DeformedClosureFullRank(benchmark::State& state) {
  const SprayGeometry& geo = klein_geometry();
  DeformedSpray d = deform_spray(geo, geo.finsler().F, 2.0);
  ChartPoint p = probe();
  for (auto _ : state) {
    DistributionSpan span = holonomy_rank(d.deformed_geometry, p, 4);
    benchmark::DoNotOptimize(span);
  }
}
BENCHMARK(BM_DeformedClosureFullRank);

BENCHMARK_MAIN();
