#pragma once

#include "loadscale/csv_io.hpp"
#include "loadscale/forecast.hpp"
#include "loadscale/grouping.hpp"
#include "loadscale/metrics.hpp"
#include "loadscale/scaling_law.hpp"
#include "loadscale/synth.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace loadscale::app {

class ConfigError : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

/// Raised when a stage fails; partial results are already on disk.
class ExperimentError : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

struct SynthSource {
	std::size_t customers = 2000;
	std::size_t days = 60;
	ProfileParams profile;
	DeviationModel deviation;
};

struct CsvSource {
	std::filesystem::path path;
	CsvSchema schema;
};

struct FitConfig {
	std::optional<double> fixed_p;
	std::size_t bootstrap = 0; ///< replicates; 0 disables the interval
	double level = 0.95;
	double regime_factor = 10.0;
};

struct TheoryConfig {
	std::optional<ProfileParams> profile;     ///< defaults to the synth source
	std::optional<DeviationModel> deviation; ///< defaults to the synth source
	std::vector<std::size_t> sizes{1, 10, 100, 1000};
	std::size_t variance_trials = 10000;
	std::size_t cv_trials = 100; ///< 0 skips the CV check
	std::size_t cycles = 1;
	std::size_t eval_days = 7;
};

struct ExperimentConfig {
	std::uint64_t seed = 0;
	std::variant<SynthSource, CsvSource> data = SynthSource{};
	std::vector<std::size_t> sizes{1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000};
	std::size_t replicates = 20;
	std::vector<ForecasterSpec> forecasters;
	std::vector<std::size_t> horizons{1};
	std::size_t window = 672;
	std::vector<Metric> metrics{Metric::Mape, Metric::Cv};
	FitConfig fit;
	TheoryConfig theory;
	std::filesystem::path output = "out";
	unsigned threads = 1;

	[[nodiscard]] std::size_t max_horizon() const;
};

/// Parses a JSON config. Relative CSV paths resolve against `base_dir`.
[[nodiscard]] ExperimentConfig parse_config(const nlohmann::json &doc, const std::filesystem::path &base_dir = {});
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path &path);

/// Canonical form with defaults filled in; `output` and `threads` are left out
/// because they never change results.
[[nodiscard]] nlohmann::json canonical_json(const ExperimentConfig &config);
/// 16 hex digits of FNV-1a 64 over the canonical JSON text.
[[nodiscard]] std::string config_hash(const ExperimentConfig &config);

struct MetricRow {
	std::string model;
	std::string group_id;
	std::size_t size = 0;
	double w = 0.0;
	std::size_t horizon = 1;
	MetricReport report;
};

struct CurvePoint {
	std::string model;
	Metric metric = Metric::Mape;
	std::size_t horizon = 1;
	std::string group_id;
	std::size_t size = 0;
	double w = 0.0;
	double err = 0.0;
};

struct FitRow {
	std::string model;
	ScalingFit fit;
	std::optional<double> w_star;
};

/// Dataset from the configured source, hourly.
[[nodiscard]] Dataset load_source(const ExperimentConfig &config);
[[nodiscard]] std::vector<Group> draw_groups(const ExperimentConfig &config, const Dataset &dataset);
/// Rolling forecasts for every (forecaster, group); rows come back ordered by
/// forecaster, group, horizon as listed in the config. Throws ExperimentError
/// naming the first failing task; rows of the tasks that succeeded are still
/// returned through `partial`.
[[nodiscard]] std::vector<MetricRow> run_forecasts(const ExperimentConfig &config, const Dataset &dataset,
                                                   const std::vector<Group> &groups,
                                                   std::vector<MetricRow> *partial = nullptr);
[[nodiscard]] std::vector<CurvePoint> curve_points(const ExperimentConfig &config, const std::vector<MetricRow> &rows);
[[nodiscard]] std::vector<FitRow> fit_curves(const ExperimentConfig &config, const std::vector<CurvePoint> &points);

// File layer. Every file starts with "# config_hash=<hash>".
inline constexpr const char *kLoadsFile = "loads.csv";
inline constexpr const char *kGroupsFile = "groups.csv";
inline constexpr const char *kMetricsFile = "metrics.csv";
inline constexpr const char *kCurveFile = "curve.csv";
inline constexpr const char *kFitsFile = "fits.csv";
inline constexpr const char *kManifestFile = "manifest.json";
inline constexpr const char *kFailedFile = "FAILED";

/// Reads the hash comment from the first line of a result file.
[[nodiscard]] std::string read_hash(const std::filesystem::path &path);

void write_metrics(std::ostream &out, const std::vector<MetricRow> &rows);
void write_curve(std::ostream &out, const std::vector<CurvePoint> &points);
[[nodiscard]] std::vector<CurvePoint> read_curve(std::istream &in);
void write_fits(std::ostream &out, const std::vector<FitRow> &rows);
[[nodiscard]] std::vector<FitRow> read_fits(std::istream &in);

// Stages over a result directory. Each checks that its inputs carry the hash
// of `config`.
void stage_synth(const ExperimentConfig &config, const std::filesystem::path &dir);
void stage_groups(const ExperimentConfig &config, const std::filesystem::path &dir);
void stage_forecast(const ExperimentConfig &config, const std::filesystem::path &dir);
void stage_fit(const ExperimentConfig &config, const std::filesystem::path &dir);
/// Writes theory_variance.csv and theory_envelope.csv.
void stage_theory(const ExperimentConfig &config, const std::filesystem::path &dir);

/// The whole pipeline in memory, writing groups, metrics, curve, fits and the
/// manifest. On failure, writes what finished plus a FAILED marker, then
/// rethrows.
void run_experiment(const ExperimentConfig &config, const std::filesystem::path &dir);

/// Merges fits files (all from one config hash) sorted by sqrt(alpha1).
void write_report(std::ostream &out, const std::vector<std::filesystem::path> &fits_files);

} // namespace loadscale::app
