#include "experiment.hpp"

#include "loadscale/parallel.hpp"
#include "loadscale/rng.hpp"
#include "loadscale/theory.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace loadscale::app {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kGroupStream = 3;
constexpr std::uint64_t kBootstrapStream = 6ULL << 40;
constexpr std::uint64_t kVarianceStream = 7ULL << 40;
constexpr std::uint64_t kCvCheckStream = 8ULL << 40;

void check_keys(const json &obj, const std::string &where, std::initializer_list<const char *> allowed) {
	if (!obj.is_object()) {
		throw ConfigError(where + ": expected an object");
	}
	for (const auto &[key, value] : obj.items()) {
		if (std::none_of(allowed.begin(), allowed.end(), [&](const char *a) { return key == a; })) {
			throw ConfigError(where + ": unknown key '" + key + "'");
		}
	}
}

template <class T>
T get_or(const json &obj, const char *key, T fallback, const std::string &where) {
	const auto it = obj.find(key);
	if (it == obj.end() || it->is_null()) {
		return fallback;
	}
	try {
		if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
			if (!it->is_number_integer() || (!it->is_number_unsigned() && it->get<std::int64_t>() < 0)) {
				throw ConfigError(where + "." + key + ": expected a non-negative integer");
			}
		}
		return it->get<T>();
	} catch (const json::exception &e) {
		throw ConfigError(where + "." + key + ": " + e.what());
	}
}

ProfileParams parse_profile(const json &j, const std::string &where) {
	check_keys(j, where, {"t_day", "mean_mu", "profile_var", "fourier_terms"});
	ProfileParams p;
	p.t_day = get_or(j, "t_day", p.t_day, where);
	p.mean_mu = get_or(j, "mean_mu", p.mean_mu, where);
	p.profile_var = get_or(j, "profile_var", p.profile_var, where);
	p.fourier_terms = get_or(j, "fourier_terms", p.fourier_terms, where);
	p.validate();
	return p;
}

DeviationModel parse_deviation(const json &j, const std::string &where) {
	check_keys(j, where, {"model", "k_neighbors", "rho", "sigma", "gamma", "persistence"});
	const auto model = get_or<std::string>(j, "model", "finite_k", where);
	DeviationModel d;
	if (model == "finite_k") {
		if (j.contains("gamma")) {
			throw ConfigError(where + ": gamma applies to random_pair only");
		}
		d.kind = FiniteK{get_or(j, "k_neighbors", 0, where), get_or(j, "rho", 0.0, where), get_or(j, "sigma", 1.0, where)};
	} else if (model == "random_pair") {
		if (j.contains("k_neighbors")) {
			throw ConfigError(where + ": k_neighbors applies to finite_k only");
		}
		d.kind = RandomPair{get_or(j, "gamma", 0.0, where), get_or(j, "rho", 0.0, where), get_or(j, "sigma", 1.0, where)};
	} else {
		throw ConfigError(where + ".model: expected finite_k or random_pair, got '" + model + "'");
	}
	d.persistence = get_or(j, "persistence", 0.0, where);
	d.validate();
	return d;
}

json profile_json(const ProfileParams &p) {
	return {{"t_day", p.t_day}, {"mean_mu", p.mean_mu}, {"profile_var", p.profile_var}, {"fourier_terms", p.fourier_terms}};
}

json deviation_json(const DeviationModel &d) {
	json j;
	if (const auto *fk = std::get_if<FiniteK>(&d.kind)) {
		j = {{"model", "finite_k"}, {"k_neighbors", fk->k_neighbors}, {"rho", fk->rho}, {"sigma", fk->sigma}};
	} else {
		const auto &rp = std::get<RandomPair>(d.kind);
		j = {{"model", "random_pair"}, {"gamma", rp.gamma}, {"rho", rp.rho}, {"sigma", rp.sigma}};
	}
	j["persistence"] = d.persistence;
	return j;
}

ForecasterSpec parse_forecaster(const json &j, const std::string &where) {
	if (!j.is_object()) {
		throw ConfigError(where + ": expected an object");
	}
	ForecasterSpec f;
	f.name = get_or<std::string>(j, "name", "", where);
	if (f.name.empty() || f.name.find_first_of(",\n\r\"#") != std::string::npos) {
		throw ConfigError(where + ".name: must be non-empty and free of commas, quotes and '#'");
	}
	const auto type = get_or<std::string>(j, "type", "", where);
	f.refit_every = get_or(j, "refit_every", 1, where);
	if (f.refit_every < 1) {
		throw ConfigError(where + ".refit_every: must be at least 1");
	}
	if (type == "seasonal_naive") {
		check_keys(j, where, {"name", "type", "refit_every", "season", "cycles"});
		SeasonalNaiveSpec s;
		s.season = get_or(j, "season", s.season, where);
		s.cycles = get_or(j, "cycles", s.cycles, where);
		if (s.season < 1 || s.cycles < 1) {
			throw ConfigError(where + ": season and cycles must be positive");
		}
		f.kind = s;
	} else if (type == "sar") {
		check_keys(j, where, {"name", "type", "refit_every", "ar_order", "seasonal_ar_order", "season"});
		SarSpec s;
		s.ar_order = get_or(j, "ar_order", s.ar_order, where);
		s.seasonal_ar_order = get_or(j, "seasonal_ar_order", s.seasonal_ar_order, where);
		s.season = get_or(j, "season", s.season, where);
		s.validate();
		f.kind = s;
	} else if (type == "ffnn") {
		check_keys(j, where,
		           {"name", "type", "refit_every", "input_lags", "seasonal_lag", "season", "hidden_units", "epochs",
		            "learning_rate", "seed"});
		FfnnSpec s;
		s.input_lags = get_or(j, "input_lags", s.input_lags, where);
		s.include_seasonal_lag = get_or(j, "seasonal_lag", s.include_seasonal_lag, where);
		s.season = get_or(j, "season", s.season, where);
		s.hidden_units = get_or(j, "hidden_units", s.hidden_units, where);
		s.epochs = get_or(j, "epochs", s.epochs, where);
		s.learning_rate = get_or(j, "learning_rate", s.learning_rate, where);
		s.seed = get_or(j, "seed", s.seed, where);
		s.validate();
		f.kind = s;
	} else {
		throw ConfigError(where + ".type: expected seasonal_naive, sar or ffnn, got '" + type + "'");
	}
	return f;
}

json forecaster_json(const ForecasterSpec &f) {
	json j{{"name", f.name}, {"refit_every", f.refit_every}};
	if (const auto *s = std::get_if<SeasonalNaiveSpec>(&f.kind)) {
		j["type"] = "seasonal_naive";
		j["season"] = s->season;
		j["cycles"] = s->cycles;
	} else if (const auto *s = std::get_if<SarSpec>(&f.kind)) {
		j["type"] = "sar";
		j["ar_order"] = s->ar_order;
		j["seasonal_ar_order"] = s->seasonal_ar_order;
		j["season"] = s->season;
	} else {
		const auto &n = std::get<FfnnSpec>(f.kind);
		j["type"] = "ffnn";
		j["input_lags"] = n.input_lags;
		j["seasonal_lag"] = n.include_seasonal_lag;
		j["season"] = n.season;
		j["hidden_units"] = n.hidden_units;
		j["epochs"] = n.epochs;
		j["learning_rate"] = n.learning_rate;
		j["seed"] = n.seed;
	}
	return j;
}

std::vector<std::size_t> positive_list(const json &obj, const char *key, std::vector<std::size_t> fallback,
                                       const std::string &where) {
	auto v = get_or(obj, key, fallback, where);
	if (v.empty() || std::any_of(v.begin(), v.end(), [](std::size_t x) { return x == 0; })) {
		throw ConfigError(where + "." + key + ": expected a non-empty list of positive integers");
	}
	if (std::set<std::size_t>(v.begin(), v.end()).size() != v.size()) {
		throw ConfigError(where + "." + key + ": duplicate entries");
	}
	return v;
}

const SynthSource *synth_source(const ExperimentConfig &config) {
	return std::get_if<SynthSource>(&config.data);
}

std::string hash_line(const ExperimentConfig &config) {
	return "# config_hash=" + config_hash(config) + "\n";
}

template <class Fn>
void write_file(const fs::path &path, const ExperimentConfig &config, Fn &&body) {
	std::ofstream out(path, std::ios::binary | std::ios::trunc);
	if (!out) {
		throw std::runtime_error("cannot write " + path.string());
	}
	out << hash_line(config);
	body(out);
	out.flush();
	if (!out) {
		throw std::runtime_error("write failed for " + path.string());
	}
}

std::ifstream open_checked(const fs::path &path, const ExperimentConfig &config) {
	const std::string hash = read_hash(path);
	if (hash != config_hash(config)) {
		throw ConfigError(path.string() + " was produced by a different configuration (hash " + hash + ", expected " +
		                  config_hash(config) + ")");
	}
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw std::runtime_error("cannot open " + path.string());
	}
	return in;
}

std::string opt_number(const std::optional<double> &v) {
	return v ? format_number(*v) : std::string{};
}

std::optional<double> parse_opt_number(std::string_view field) {
	if (field.empty()) {
		return std::nullopt;
	}
	return parse_number(field);
}

std::size_t parse_count(std::string_view field, const std::string &where) {
	const double v = parse_number(field);
	if (v < 0.0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
		throw DataError(where + ": expected a non-negative integer, got '" + std::string(field) + "'");
	}
	return static_cast<std::size_t>(v);
}

// Data rows of a result CSV: comment and header lines dropped.
std::vector<std::vector<std::string>> read_rows(std::istream &in, std::string_view header) {
	std::vector<std::vector<std::string>> rows;
	std::string line;
	bool seen_header = false;
	std::size_t line_no = 0;
	while (std::getline(in, line)) {
		++line_no;
		if (!line.empty() && line.back() == '\r') {
			line.pop_back();
		}
		if (line.empty() || line.front() == '#') {
			continue;
		}
		if (!seen_header) {
			if (line != header) {
				throw DataError("line " + std::to_string(line_no) + ": expected header '" + std::string(header) + "'");
			}
			seen_header = true;
			continue;
		}
		std::vector<std::string> fields;
		for (auto f : split_csv_line(line)) {
			fields.emplace_back(f);
		}
		rows.push_back(std::move(fields));
	}
	if (!seen_header) {
		throw DataError("missing header '" + std::string(header) + "'");
	}
	return rows;
}

constexpr std::string_view kMetricsHeader = "model,group_id,size,w,horizon,mape,cv,mse,skipped_zero_targets";
constexpr std::string_view kCurveHeader = "model,metric,horizon,group_id,size,w,err";
constexpr std::string_view kFitsHeader = "model,metric,horizon,sqrt_alpha0,sqrt_alpha1,p,w_star,ci_lo,ci_hi,sse";

void write_manifest(const ExperimentConfig &config, const fs::path &dir) {
	json manifest{{"config_hash", config_hash(config)},
	              {"seed", config.seed},
	              {"config", canonical_json(config)},
	              {"files", {kGroupsFile, kMetricsFile, kCurveFile, kFitsFile}}};
	std::ofstream out(dir / kManifestFile, std::ios::binary | std::ios::trunc);
	out << manifest.dump(2) << "\n";
	if (!out) {
		throw std::runtime_error("cannot write " + (dir / kManifestFile).string());
	}
}

void mark_failed(const fs::path &dir, const std::string &message) {
	std::ofstream out(dir / kFailedFile, std::ios::trunc);
	out << message << "\n";
}

void prepare_dir(const fs::path &dir) {
	fs::create_directories(dir);
	fs::remove(dir / kFailedFile);
}

Dataset read_loads(const ExperimentConfig &config, const fs::path &dir) {
	auto in = open_checked(dir / kLoadsFile, config);
	return parse_load_csv(in).dataset;
}

std::vector<Group> read_groups(const ExperimentConfig &config, const fs::path &dir, const Dataset &dataset) {
	auto in = open_checked(dir / kGroupsFile, config);
	return read_group_manifest(in, dataset);
}

void write_groups(const ExperimentConfig &config, const fs::path &dir, const Dataset &dataset,
                  const std::vector<Group> &groups) {
	write_file(dir / kGroupsFile, config, [&](std::ostream &out) { write_group_manifest(out, dataset, groups); });
}

void write_forecast_outputs(const ExperimentConfig &config, const fs::path &dir, const std::vector<MetricRow> &rows) {
	write_file(dir / kMetricsFile, config, [&](std::ostream &out) { write_metrics(out, rows); });
	write_file(dir / kCurveFile, config, [&](std::ostream &out) { write_curve(out, curve_points(config, rows)); });
}

std::vector<MetricRow> forecast_or_flush(const ExperimentConfig &config, const fs::path &dir, const Dataset &dataset,
                                         const std::vector<Group> &groups) {
	std::vector<MetricRow> partial;
	try {
		return run_forecasts(config, dataset, groups, &partial);
	} catch (const ExperimentError &) {
		write_forecast_outputs(config, dir, partial);
		throw;
	}
}

template <class Fn>
void guarded(const fs::path &dir, Fn &&fn) {
	prepare_dir(dir);
	try {
		fn();
	} catch (const std::exception &e) {
		mark_failed(dir, e.what());
		throw;
	}
}

} // namespace

std::size_t ExperimentConfig::max_horizon() const {
	return *std::max_element(horizons.begin(), horizons.end());
}

ExperimentConfig parse_config(const json &doc, const fs::path &base_dir) {
	check_keys(doc, "config",
	           {"seed", "data", "groups", "forecasters", "horizons", "window", "metrics", "fit", "theory", "output",
	            "threads"});
	ExperimentConfig c;
	if (!doc.contains("seed")) {
		throw ConfigError("config: seed is mandatory");
	}
	c.seed = get_or<std::uint64_t>(doc, "seed", 0, "config");

	const json data = doc.value("data", json::object());
	check_keys(data, "data", {"synth", "csv"});
	if (data.contains("synth") == data.contains("csv")) {
		throw ConfigError("data: exactly one of 'synth' or 'csv' is required");
	}
	if (data.contains("synth")) {
		const json &s = data["synth"];
		check_keys(s, "data.synth", {"customers", "days", "profile", "deviation"});
		SynthSource src;
		src.customers = get_or(s, "customers", src.customers, "data.synth");
		src.days = get_or(s, "days", src.days, "data.synth");
		if (src.customers == 0 || src.days == 0) {
			throw ConfigError("data.synth: customers and days must be positive");
		}
		src.profile = parse_profile(s.value("profile", json::object()), "data.synth.profile");
		src.deviation = parse_deviation(s.value("deviation", json::object()), "data.synth.deviation");
		c.data = src;
	} else {
		const json &s = data["csv"];
		check_keys(s, "data.csv", {"path", "id_column", "timestamp_column", "kwh_column"});
		CsvSource src;
		const auto path = get_or<std::string>(s, "path", "", "data.csv");
		if (path.empty()) {
			throw ConfigError("data.csv.path is required");
		}
		src.path = fs::path(path).is_absolute() ? fs::path(path) : (base_dir / path).lexically_normal();
		src.schema.id_column = get_or(s, "id_column", src.schema.id_column, "data.csv");
		src.schema.timestamp_column = get_or(s, "timestamp_column", src.schema.timestamp_column, "data.csv");
		src.schema.kwh_column = get_or(s, "kwh_column", src.schema.kwh_column, "data.csv");
		c.data = src;
	}

	const json groups = doc.value("groups", json::object());
	check_keys(groups, "groups", {"sizes", "replicates"});
	c.sizes = positive_list(groups, "sizes", c.sizes, "groups");
	c.replicates = get_or(groups, "replicates", c.replicates, "groups");
	if (c.replicates == 0) {
		throw ConfigError("groups.replicates must be positive");
	}
	const json forecasters = doc.value("forecasters", json::array());
	if (!forecasters.is_array() || forecasters.empty()) {
		throw ConfigError("forecasters: expected a non-empty list");
	}
	std::set<std::string> names;
	for (std::size_t i = 0; i < forecasters.size(); ++i) {
		auto f = parse_forecaster(forecasters[i], "forecasters[" + std::to_string(i) + "]");
		if (!names.insert(f.name).second) {
			throw ConfigError("forecasters: duplicate name '" + f.name + "'");
		}
		c.forecasters.push_back(std::move(f));
	}

	c.horizons = positive_list(doc, "horizons", c.horizons, "config");
	c.window = get_or(doc, "window", c.window, "config");
	for (const auto &f : c.forecasters) {
		if (c.window < f.min_window()) {
			throw ConfigError("window " + std::to_string(c.window) + " is too small for forecaster '" + f.name +
			                  "' (needs " + std::to_string(f.min_window()) + ")");
		}
	}
	if (const auto *src = synth_source(c)) {
		const auto length = src->days * static_cast<std::size_t>(src->profile.t_day);
		if (length < c.window + c.max_horizon()) {
			throw ConfigError("synthetic series of " + std::to_string(length) + " hours is too short for window " +
			                  std::to_string(c.window) + " plus horizon " + std::to_string(c.max_horizon()));
		}
	}

	if (doc.contains("metrics")) {
		c.metrics.clear();
		for (const auto &m : doc["metrics"]) {
			if (!m.is_string()) {
				throw ConfigError("metrics: expected strings");
			}
			try {
				c.metrics.push_back(parse_metric(m.get<std::string>()));
			} catch (const std::exception &e) {
				throw ConfigError(std::string("metrics: ") + e.what());
			}
		}
		if (c.metrics.empty() || std::set<Metric>(c.metrics.begin(), c.metrics.end()).size() != c.metrics.size()) {
			throw ConfigError("metrics: expected a non-empty list without duplicates");
		}
	}

	const json fit = doc.value("fit", json::object());
	check_keys(fit, "fit", {"fixed_p", "bootstrap", "level", "regime_factor"});
	if (fit.contains("fixed_p") && !fit["fixed_p"].is_null()) {
		c.fit.fixed_p = get_or(fit, "fixed_p", 1.0, "fit");
		if (!(*c.fit.fixed_p > 0.0 && *c.fit.fixed_p <= 2.0)) {
			throw ConfigError("fit.fixed_p must lie in (0, 2]");
		}
	}
	c.fit.bootstrap = get_or(fit, "bootstrap", c.fit.bootstrap, "fit");
	if (c.fit.bootstrap != 0 && c.fit.bootstrap < 100) {
		throw ConfigError("fit.bootstrap: use 0 or at least 100 replicates");
	}
	c.fit.level = get_or(fit, "level", c.fit.level, "fit");
	c.fit.regime_factor = get_or(fit, "regime_factor", c.fit.regime_factor, "fit");
	if (!(c.fit.level > 0.0 && c.fit.level < 1.0) || !(c.fit.regime_factor > 1.0)) {
		throw ConfigError("fit: level must lie in (0, 1) and regime_factor exceed 1");
	}

	const json theory = doc.value("theory", json::object());
	check_keys(theory, "theory", {"profile", "deviation", "sizes", "variance_trials", "cv_trials", "cycles", "eval_days"});
	if (theory.contains("profile")) {
		c.theory.profile = parse_profile(theory["profile"], "theory.profile");
	}
	if (theory.contains("deviation")) {
		c.theory.deviation = parse_deviation(theory["deviation"], "theory.deviation");
	}
	c.theory.sizes = positive_list(theory, "sizes", c.theory.sizes, "theory");
	c.theory.variance_trials = get_or(theory, "variance_trials", c.theory.variance_trials, "theory");
	c.theory.cv_trials = get_or(theory, "cv_trials", c.theory.cv_trials, "theory");
	c.theory.cycles = get_or(theory, "cycles", c.theory.cycles, "theory");
	c.theory.eval_days = get_or(theory, "eval_days", c.theory.eval_days, "theory");

	c.output = get_or<std::string>(doc, "output", c.output.string(), "config");
	c.threads = get_or(doc, "threads", c.threads, "config");
	if (c.threads == 0) {
		c.threads = 1;
	}
	return c;
}

ExperimentConfig load_config(const fs::path &path) {
	std::ifstream in(path);
	if (!in) {
		throw ConfigError("cannot open config " + path.string());
	}
	json doc;
	try {
		doc = json::parse(in, nullptr, true, true);
	} catch (const json::parse_error &e) {
		throw ConfigError(path.string() + ": " + e.what());
	}
	return parse_config(doc, path.parent_path());
}

json canonical_json(const ExperimentConfig &c) {
	json j;
	j["seed"] = c.seed;
	if (const auto *s = synth_source(c)) {
		j["data"] = {{"synth",
		              {{"customers", s->customers},
		               {"days", s->days},
		               {"profile", profile_json(s->profile)},
		               {"deviation", deviation_json(s->deviation)}}}};
	} else {
		const auto &src = std::get<CsvSource>(c.data);
		j["data"] = {{"csv",
		              {{"path", src.path.generic_string()},
		               {"id_column", src.schema.id_column},
		               {"timestamp_column", src.schema.timestamp_column},
		               {"kwh_column", src.schema.kwh_column}}}};
	}
	j["groups"] = {{"sizes", c.sizes}, {"replicates", c.replicates}};
	j["forecasters"] = json::array();
	for (const auto &f : c.forecasters) {
		j["forecasters"].push_back(forecaster_json(f));
	}
	j["horizons"] = c.horizons;
	j["window"] = c.window;
	j["metrics"] = json::array();
	for (Metric m : c.metrics) {
		j["metrics"].push_back(std::string(to_string(m)));
	}
	j["fit"] = {{"fixed_p", c.fit.fixed_p ? json(*c.fit.fixed_p) : json(nullptr)},
	            {"bootstrap", c.fit.bootstrap},
	            {"level", c.fit.level},
	            {"regime_factor", c.fit.regime_factor}};
	json theory{{"sizes", c.theory.sizes},
	            {"variance_trials", c.theory.variance_trials},
	            {"cv_trials", c.theory.cv_trials},
	            {"cycles", c.theory.cycles},
	            {"eval_days", c.theory.eval_days}};
	if (c.theory.profile) {
		theory["profile"] = profile_json(*c.theory.profile);
	}
	if (c.theory.deviation) {
		theory["deviation"] = deviation_json(*c.theory.deviation);
	}
	j["theory"] = theory;
	return j;
}

std::string config_hash(const ExperimentConfig &config) {
	std::uint64_t h = 0xcbf29ce484222325ULL;
	for (unsigned char ch : canonical_json(config).dump()) {
		h ^= ch;
		h *= 0x100000001b3ULL;
	}
	char buf[17];
	std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
	return buf;
}

Dataset load_source(const ExperimentConfig &config) {
	if (const auto *s = synth_source(config)) {
		return synth_population(s->customers, s->days, s->profile, s->deviation, config.seed).dataset;
	}
	const auto &src = std::get<CsvSource>(config.data);
	auto result = parse_load_csv(src.path, src.schema);
	for (const auto &id : result.rejected_ids) {
		std::fprintf(stderr, "warning: customer %s dropped (gaps in the time axis)\n", id.c_str());
	}
	return to_hourly(result.dataset);
}

std::vector<Group> draw_groups(const ExperimentConfig &config, const Dataset &dataset) {
	for (std::size_t s : config.sizes) {
		if (s > dataset.size()) {
			throw ConfigError("group size " + std::to_string(s) + " exceeds the " + std::to_string(dataset.size()) +
			                  " customers in the data");
		}
	}
	return sample_groups(dataset, config.sizes, config.replicates, mix_seed(config.seed, kGroupStream));
}

std::vector<MetricRow> run_forecasts(const ExperimentConfig &config, const Dataset &dataset,
                                     const std::vector<Group> &groups, std::vector<MetricRow> *partial) {
	if (dataset.length() < config.window + config.max_horizon()) {
		throw ConfigError("series of " + std::to_string(dataset.length()) + " hours is too short for window " +
		                  std::to_string(config.window) + " plus horizon " + std::to_string(config.max_horizon()));
	}
	const std::size_t tasks = config.forecasters.size() * groups.size();
	std::vector<std::vector<MetricRow>> results(tasks);
	std::vector<std::string> failures(tasks);
	parallel_for(tasks, config.threads, [&](std::size_t task) {
		const auto &forecaster = config.forecasters[task / groups.size()];
		const auto &group = groups[task % groups.size()];
		try {
			const auto agg = aggregate_series(dataset, group);
			const auto runs =
			    rolling_forecast_horizons(agg.series, forecaster, config.max_horizon(), config.window, config.window);
			std::vector<MetricRow> rows;
			for (std::size_t h : config.horizons) {
				const auto &run = runs[h - 1];
				rows.push_back(MetricRow{forecaster.name, group.id, group.size, group.mean_w, h,
				                         evaluate(run.targets, run.predictions)});
			}
			results[task] = std::move(rows);
		} catch (const std::exception &e) {
			failures[task] = "forecaster '" + forecaster.name + "', group " + group.id + ", window " +
			                 std::to_string(config.window) + ": " + e.what();
		}
	});

	std::vector<MetricRow> rows;
	std::string first_failure;
	for (std::size_t task = 0; task < tasks; ++task) {
		if (!failures[task].empty()) {
			if (first_failure.empty()) {
				first_failure = failures[task];
			}
			continue;
		}
		for (auto &r : results[task]) {
			rows.push_back(std::move(r));
		}
	}
	if (!first_failure.empty()) {
		if (partial) {
			*partial = std::move(rows);
		}
		throw ExperimentError(first_failure);
	}
	return rows;
}

std::vector<CurvePoint> curve_points(const ExperimentConfig &config, const std::vector<MetricRow> &rows) {
	std::vector<CurvePoint> points;
	for (const auto &f : config.forecasters) {
		for (Metric m : config.metrics) {
			for (std::size_t h : config.horizons) {
				for (const auto &r : rows) {
					if (r.model == f.name && r.horizon == h) {
						points.push_back(CurvePoint{r.model, m, h, r.group_id, r.size, r.w,
						                            m == Metric::Mape ? r.report.mape : r.report.cv});
					}
				}
			}
		}
	}
	return points;
}

std::vector<FitRow> fit_curves(const ExperimentConfig &config, const std::vector<CurvePoint> &points) {
	FitOptions options;
	options.fixed_p = config.fit.fixed_p;
	std::vector<FitRow> out;
	for (const auto &f : config.forecasters) {
		for (Metric m : config.metrics) {
			for (std::size_t h : config.horizons) {
				std::vector<ErrorPoint> pts;
				for (const auto &c : points) {
					if (c.model == f.name && c.metric == m && c.horizon == h) {
						pts.push_back(ErrorPoint{c.group_id, c.size, c.w, c.err, m, h});
					}
				}
				const std::string what = "fit for '" + f.name + "', " + std::string(to_string(m)) + ", horizon " +
				                         std::to_string(h);
				if (pts.empty()) {
					throw ExperimentError(what + ": no curve points");
				}
				FitRow row{f.name, {}, std::nullopt};
				try {
					row.fit = fit_scaling_law(pts, options);
					if (config.fit.bootstrap > 0) {
						BootstrapOptions b;
						b.replicates = config.fit.bootstrap;
						b.level = config.fit.level;
						b.seed = mix_seed(config.seed, kBootstrapStream + out.size());
						b.threads = config.threads;
						b.fit = options;
						row.fit.ci_sqrt_alpha1 = bootstrap_ci(pts, b);
					}
				} catch (const std::exception &e) {
					throw ExperimentError(what + ": " + e.what());
				}
				if (row.fit.alpha0 > 0.0 && row.fit.alpha1 > 0.0) {
					row.w_star = critical_load(row.fit);
				}
				out.push_back(std::move(row));
			}
		}
	}
	return out;
}

std::string read_hash(const fs::path &path) {
	std::ifstream in(path);
	if (!in) {
		throw std::runtime_error("cannot open " + path.string());
	}
	std::string line;
	std::getline(in, line);
	constexpr std::string_view prefix = "# config_hash=";
	if (line.rfind(prefix, 0) != 0) {
		throw DataError(path.string() + " has no config hash line");
	}
	return line.substr(prefix.size());
}

void write_metrics(std::ostream &out, const std::vector<MetricRow> &rows) {
	out << kMetricsHeader << "\n";
	for (const auto &r : rows) {
		out << r.model << ',' << r.group_id << ',' << r.size << ',' << format_number(r.w) << ',' << r.horizon << ','
		    << format_number(r.report.mape) << ',' << format_number(r.report.cv) << ',' << format_number(r.report.mse)
		    << ',' << r.report.skipped_zero_targets << "\n";
	}
}

void write_curve(std::ostream &out, const std::vector<CurvePoint> &points) {
	out << kCurveHeader << "\n";
	for (const auto &p : points) {
		out << p.model << ',' << to_string(p.metric) << ',' << p.horizon << ',' << p.group_id << ',' << p.size << ','
		    << format_number(p.w) << ',' << format_number(p.err) << "\n";
	}
}

std::vector<CurvePoint> read_curve(std::istream &in) {
	std::vector<CurvePoint> points;
	for (const auto &f : read_rows(in, kCurveHeader)) {
		if (f.size() != 7) {
			throw DataError("curve row with " + std::to_string(f.size()) + " fields");
		}
		points.push_back(CurvePoint{f[0], parse_metric(f[1]), parse_count(f[2], "horizon"), f[3],
		                            parse_count(f[4], "size"), parse_number(f[5]), parse_number(f[6])});
	}
	return points;
}

void write_fits(std::ostream &out, const std::vector<FitRow> &rows) {
	out << kFitsHeader << "\n";
	for (const auto &r : rows) {
		const auto &fit = r.fit;
		std::optional<double> lo;
		std::optional<double> hi;
		if (fit.ci_sqrt_alpha1) {
			lo = fit.ci_sqrt_alpha1->first;
			hi = fit.ci_sqrt_alpha1->second;
		}
		out << r.model << ',' << to_string(fit.metric) << ',' << fit.horizon << ',' << format_number(fit.sqrt_alpha0())
		    << ',' << format_number(fit.sqrt_alpha1()) << ',' << format_number(fit.p_exp) << ',' << opt_number(r.w_star)
		    << ',' << opt_number(lo) << ',' << opt_number(hi) << ',' << format_number(fit.sse) << "\n";
	}
}

std::vector<FitRow> read_fits(std::istream &in) {
	std::vector<FitRow> rows;
	for (const auto &f : read_rows(in, kFitsHeader)) {
		if (f.size() != 10) {
			throw DataError("fits row with " + std::to_string(f.size()) + " fields");
		}
		FitRow r;
		r.model = f[0];
		r.fit = ScalingFit::from_roots(parse_number(f[3]), parse_number(f[4]), parse_number(f[5]), parse_metric(f[1]));
		r.fit.horizon = parse_count(f[2], "horizon");
		r.w_star = parse_opt_number(f[6]);
		const auto lo = parse_opt_number(f[7]);
		const auto hi = parse_opt_number(f[8]);
		if (lo && hi) {
			r.fit.ci_sqrt_alpha1 = std::make_pair(*lo, *hi);
		}
		r.fit.sse = parse_number(f[9]);
		rows.push_back(std::move(r));
	}
	return rows;
}

void stage_synth(const ExperimentConfig &config, const fs::path &dir) {
	guarded(dir, [&] {
		const auto dataset = load_source(config);
		write_file(dir / kLoadsFile, config, [&](std::ostream &out) { write_load_csv(out, dataset); });
	});
}

void stage_groups(const ExperimentConfig &config, const fs::path &dir) {
	guarded(dir, [&] {
		const auto dataset = read_loads(config, dir);
		write_groups(config, dir, dataset, draw_groups(config, dataset));
	});
}

void stage_forecast(const ExperimentConfig &config, const fs::path &dir) {
	guarded(dir, [&] {
		const auto dataset = read_loads(config, dir);
		const auto groups = read_groups(config, dir, dataset);
		write_forecast_outputs(config, dir, forecast_or_flush(config, dir, dataset, groups));
	});
}

void stage_fit(const ExperimentConfig &config, const fs::path &dir) {
	guarded(dir, [&] {
		auto in = open_checked(dir / kCurveFile, config);
		const auto fits = fit_curves(config, read_curve(in));
		write_file(dir / kFitsFile, config, [&](std::ostream &out) { write_fits(out, fits); });
		write_manifest(config, dir);
	});
}

void stage_theory(const ExperimentConfig &config, const fs::path &dir) {
	guarded(dir, [&] {
		const auto *src = synth_source(config);
		if (!src && !(config.theory.profile && config.theory.deviation)) {
			throw ConfigError("theory: profile and deviation are required when the data source is a CSV file");
		}
		const ProfileParams profile = config.theory.profile ? *config.theory.profile : src->profile;
		const DeviationModel deviation = config.theory.deviation ? *config.theory.deviation : src->deviation;
		const auto &sizes = config.theory.sizes;

		std::vector<double> mc(sizes.size(), 0.0);
		if (config.theory.variance_trials > 0) {
			parallel_for(sizes.size(), config.threads, [&](std::size_t i) {
				mc[i] = mc_variance(deviation, sizes[i], config.theory.variance_trials,
				                    mix_seed(config.seed, kVarianceStream + i));
			});
		}
		write_file(dir / "theory_variance.csv", config, [&](std::ostream &out) {
			out << "n,closed_form,monte_carlo,kappa,sigma_prime_sq\n";
			for (std::size_t i = 0; i < sizes.size(); ++i) {
				out << sizes[i] << ',' << format_number(variance_of_sum(deviation, sizes[i])) << ','
				    << (config.theory.variance_trials > 0 ? format_number(mc[i]) : std::string{}) << ','
				    << format_number(deviation.kappa()) << ',' << format_number(deviation.sigma_prime_sq()) << "\n";
			}
		});

		CvCheckConfig check{profile, deviation, config.theory.cycles, config.theory.eval_days};
		const auto env = seasonal_mean_envelope(profile, deviation, config.theory.cycles);
		write_file(dir / "theory_envelope.csv", config, [&](std::ostream &out) {
			out << "n,mc_cv,envelope,holds\n";
			for (std::size_t i = 0; i < sizes.size(); ++i) {
				out << sizes[i] << ',';
				if (config.theory.cv_trials > 0) {
					const auto r = mc_cv_check(check, sizes[i], config.theory.cv_trials,
					                           mix_seed(config.seed, kCvCheckStream + i), config.threads);
					out << format_number(r.mean_cv) << ',' << format_number(r.envelope) << ','
					    << (r.holds ? "true" : "false") << "\n";
				} else {
					out << ',' << format_number(cv_envelope(env, sizes[i])) << ",\n";
				}
			}
		});
	});
}

void run_experiment(const ExperimentConfig &config, const fs::path &dir) {
	guarded(dir, [&] {
		const auto dataset = load_source(config);
		const auto groups = draw_groups(config, dataset);
		write_groups(config, dir, dataset, groups);
		const auto rows = forecast_or_flush(config, dir, dataset, groups);
		write_forecast_outputs(config, dir, rows);
		const auto fits = fit_curves(config, curve_points(config, rows));
		write_file(dir / kFitsFile, config, [&](std::ostream &out) { write_fits(out, fits); });
		write_manifest(config, dir);
	});
}

void write_report(std::ostream &out, const std::vector<fs::path> &fits_files) {
	if (fits_files.empty()) {
		throw ConfigError("report: no fits files given");
	}
	struct Entry {
		std::vector<std::string> fields;
		double sqrt_alpha1 = 0.0;
	};
	std::string hash;
	std::vector<Entry> entries;
	for (const auto &path : fits_files) {
		const auto h = read_hash(path);
		if (hash.empty()) {
			hash = h;
		} else if (h != hash) {
			throw ConfigError("report: " + path.string() + " comes from config " + h + ", others from " + hash);
		}
		std::ifstream in(path, std::ios::binary);
		for (auto &f : read_rows(in, kFitsHeader)) {
			if (f.size() != 10) {
				throw DataError(path.string() + ": fits row with " + std::to_string(f.size()) + " fields");
			}
			const double key = parse_number(f[4]);
			entries.push_back(Entry{std::move(f), key});
		}
	}
	// Rank within each (metric, horizon) block.
	std::stable_sort(entries.begin(), entries.end(), [](const Entry &a, const Entry &b) {
		const auto ha = parse_number(a.fields[2]);
		const auto hb = parse_number(b.fields[2]);
		if (a.fields[1] != b.fields[1]) {
			return a.fields[1] > b.fields[1];
		}
		if (ha != hb) {
			return ha < hb;
		}
		return a.sqrt_alpha1 < b.sqrt_alpha1;
	});
	out << "# config_hash=" << hash << "\n";
	out << "metric,horizon,rank,model,sqrt_alpha1,ci_lo,ci_hi,sqrt_alpha0,p,w_star,sse\n";
	std::size_t rank = 0;
	for (std::size_t i = 0; i < entries.size(); ++i) {
		const auto &f = entries[i].fields;
		rank = (i == 0 || f[1] != entries[i - 1].fields[1] || f[2] != entries[i - 1].fields[2]) ? 1 : rank + 1;
		out << f[1] << ',' << f[2] << ',' << rank << ',' << f[0] << ',' << f[4] << ',' << f[7] << ',' << f[8] << ','
		    << f[3] << ',' << f[5] << ',' << f[6] << ',' << f[9] << "\n";
	}
}

} // namespace loadscale::app
