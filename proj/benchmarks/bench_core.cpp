#include "test_support.hpp"

#include "loadscale/forecast.hpp"
#include "loadscale/grouping.hpp"
#include "loadscale/metrics.hpp"
#include "loadscale/scaling_law.hpp"
#include "loadscale/synth.hpp"
#include "loadscale/theory.hpp"

#include <benchmark/benchmark.h>

using namespace loadscale;

namespace {

void BM_FitSar(benchmark::State &state) {
	const auto series = testing::simulate_sar({0.5, 0.1, 0.05}, {0.3}, 24, 672, 5.0, 1.0, 1);
	const SarSpec spec{static_cast<int>(state.range(0)), 1, 24};
	for (auto _ : state) {
		benchmark::DoNotOptimize(fit_sar(series, spec));
	}
}
BENCHMARK(BM_FitSar)->Arg(1)->Arg(3);

void BM_RollingSeasonalMean(benchmark::State &state) {
	const LoadSeries series(testing::simulate_sar({0.5}, {0.3}, 24, 1440, 5.0, 1.0, 2));
	ForecasterSpec f{"mean", SeasonalNaiveSpec{24, 28}, 1};
	for (auto _ : state) {
		benchmark::DoNotOptimize(rolling_forecast(series, f, 1, 672, 672));
	}
}
BENCHMARK(BM_RollingSeasonalMean);

void BM_FitScalingLaw(benchmark::State &state) {
	std::vector<ErrorPoint> pts;
	for (const auto &[w, err] : testing::scaling_curve(45.44, 1.522, 0.88, 1.0, 1e5, static_cast<std::size_t>(state.range(0)))) {
		pts.push_back(ErrorPoint{"g", 1, w, err, Metric::Mape, 1});
	}
	for (auto _ : state) {
		benchmark::DoNotOptimize(fit_scaling_law(pts));
	}
}
BENCHMARK(BM_FitScalingLaw)->Arg(20)->Arg(220);

void BM_SynthPopulation(benchmark::State &state) {
	const DeviationModel dev{RandomPair{0.05, 1.0, 0.1}};
	for (auto _ : state) {
		benchmark::DoNotOptimize(synth_population(static_cast<std::size_t>(state.range(0)), 60, ProfileParams{}, dev, 3));
	}
}
BENCHMARK(BM_SynthPopulation)->Arg(100)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_AggregateSeries(benchmark::State &state) {
	const auto pop = synth_population(2000, 60, ProfileParams{}, DeviationModel{FiniteK{0, 0.0, 0.1}}, 4);
	const auto groups = sample_groups(pop.dataset, {static_cast<std::size_t>(state.range(0))}, 1, 5);
	for (auto _ : state) {
		benchmark::DoNotOptimize(aggregate_series(pop.dataset, groups.front()));
	}
}
BENCHMARK(BM_AggregateSeries)->Arg(10)->Arg(1000);

void BM_McVariance(benchmark::State &state) {
	const DeviationModel dev{FiniteK{4, 0.2, 1.0}};
	for (auto _ : state) {
		benchmark::DoNotOptimize(mc_variance(dev, 100, 1000, 6));
	}
}
BENCHMARK(BM_McVariance)->Unit(benchmark::kMillisecond);

void BM_Evaluate(benchmark::State &state) {
	const auto x = testing::simulate_sar({0.5}, {0.3}, 24, 768, 5.0, 1.0, 7);
	auto xh = x;
	for (double &v : xh) {
		v *= 1.01;
	}
	for (auto _ : state) {
		benchmark::DoNotOptimize(evaluate(x, xh));
	}
}
BENCHMARK(BM_Evaluate);

} // namespace

BENCHMARK_MAIN();
