#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "varwave/diagnostics.hpp"
#include "varwave/well.hpp"

using namespace varwave;

namespace {

struct Setup {
  Mesh mesh;
  DiscreteOperators ops;
  LawSet laws;
};

Setup setup_1d(int cells, bool nonlinear) {
  Setup s;
  s.mesh = build_mesh(MeshSpec::interval(1.0, cells));
  s.ops = assemble_operators(s.mesh, CoefficientField::identity(1));
  s.laws.mu = TimeWeight::constant(1.0);
  s.laws.damping = nonlinear ? DampingLaw::polynomial(1.0) : DampingLaw::none();
  s.laws.source = SourceLaw{2.0, nonlinear};
  return s;
}

State sine_state(const DiscreteOperators& ops, double amplitude) {
  State st;
  st.u.resize(ops.n_free);
  st.v = Eigen::VectorXd::Zero(ops.n_free);
  for (int i = 0; i < ops.n_free; ++i)
    st.u[i] = amplitude * std::sin(std::numbers::pi * ops.coords(i, 0));
  return st;
}

}  // namespace

static void BM_Assemble1D(benchmark::State& state) {
  const Mesh mesh = build_mesh(MeshSpec::interval(1.0, static_cast<int>(state.range(0))));
  const CoefficientField field = CoefficientField::scalar_profile(1, 1.0, 1.0);
  for (auto _ : state)
    benchmark::DoNotOptimize(assemble_operators(mesh, field));
}
BENCHMARK(BM_Assemble1D)->Arg(64)->Arg(512)->Arg(4096);

static void BM_Assemble2D(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Mesh mesh = build_mesh(MeshSpec::rectangle(1.0, 1.0, n, n));
  const CoefficientField field = CoefficientField::scalar_profile(2, 1.0, 1.0);
  for (auto _ : state)
    benchmark::DoNotOptimize(assemble_operators(mesh, field));
}
BENCHMARK(BM_Assemble2D)->Arg(16)->Arg(64);

static void BM_StepLinear(benchmark::State& state) {
  const Setup s = setup_1d(static_cast<int>(state.range(0)), false);
  Stepper stepper(s.ops, s.laws);
  State st = sine_state(s.ops, 0.3);
  for (auto _ : state) {
    auto result = stepper.advance(st, 1e-3);
    st = result.next;
    benchmark::DoNotOptimize(st.u.data());
  }
}
BENCHMARK(BM_StepLinear)->Arg(64)->Arg(512)->Arg(4096);

static void BM_StepBoundaryNewton(benchmark::State& state) {
  const Setup s = setup_1d(static_cast<int>(state.range(0)), true);
  Stepper stepper(s.ops, s.laws);
  State st = sine_state(s.ops, 0.3);
  for (auto _ : state) {
    auto result = stepper.advance(st, 1e-3);
    st = result.next;
    benchmark::DoNotOptimize(st.u.data());
  }
}
BENCHMARK(BM_StepBoundaryNewton)->Arg(64)->Arg(512)->Arg(4096);

static void BM_Step2D(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Setup s;
  s.mesh = build_mesh(MeshSpec::rectangle(1.0, 1.0, n, n));
  s.ops = assemble_operators(s.mesh, CoefficientField::identity(2));
  s.laws.mu = TimeWeight::constant(1.0);
  s.laws.damping = DampingLaw::polynomial(1.0);
  s.laws.source = SourceLaw{2.0, true};
  Stepper stepper(s.ops, s.laws);
  State st;
  st.u.resize(s.ops.n_free);
  st.v = Eigen::VectorXd::Zero(s.ops.n_free);
  for (int i = 0; i < s.ops.n_free; ++i)
    st.u[i] = 0.2 * std::sin(std::numbers::pi * s.ops.coords(i, 0)) *
              std::sin(std::numbers::pi * s.ops.coords(i, 1));
  for (auto _ : state) {
    auto result = stepper.advance(st, 1e-3);
    st = result.next;
    benchmark::DoNotOptimize(st.u.data());
  }
}
BENCHMARK(BM_Step2D)->Arg(16)->Arg(48);

static void BM_EstimateK0(benchmark::State& state) {
  const Setup s = setup_1d(static_cast<int>(state.range(0)), true);
  for (auto _ : state)
    benchmark::DoNotOptimize(estimate_K0(s.ops, 2.0, 8, 1e-10, 7));
}
BENCHMARK(BM_EstimateK0)->Arg(64)->Arg(512);

static void BM_EnergyRecord(benchmark::State& state) {
  const Setup s = setup_1d(static_cast<int>(state.range(0)), true);
  const State st = sine_state(s.ops, 0.3);
  for (auto _ : state)
    benchmark::DoNotOptimize(energy(s.ops, s.laws, st));
}
BENCHMARK(BM_EnergyRecord)->Arg(64)->Arg(4096);

BENCHMARK_MAIN();
