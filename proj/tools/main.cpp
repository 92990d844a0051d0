#include "experiment.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>

namespace app = loadscale::app;
namespace fs = std::filesystem;

namespace {

struct CommonOptions {
	std::string config;
	std::optional<std::uint64_t> seed;
	std::string out;
	std::optional<unsigned> threads;
};

void add_common(CLI::App *cmd, CommonOptions &opts) {
	cmd->add_option("--config", opts.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
	cmd->add_option("--seed", opts.seed, "Override the config seed");
	cmd->add_option("--out", opts.out, "Result directory (default: config 'output')");
	cmd->add_option("--threads", opts.threads, "Worker threads")->check(CLI::PositiveNumber);
}

app::ExperimentConfig resolve(const CommonOptions &opts) {
	auto config = app::load_config(opts.config);
	if (opts.seed) {
		config.seed = *opts.seed;
	}
	if (!opts.out.empty()) {
		config.output = opts.out;
	}
	if (opts.threads) {
		config.threads = *opts.threads;
	}
	return config;
}

} // namespace

int main(int argc, char **argv) {
	CLI::App cli{"Aggregation-level forecast error experiments"};
	cli.require_subcommand(1);

	CommonOptions opts;
	struct Stage {
		const char *name;
		const char *help;
		void (*fn)(const app::ExperimentConfig &, const fs::path &);
	};
	const Stage stages[] = {
	    {"synth", "Materialise the configured data source as loads.csv", app::stage_synth},
	    {"groups", "Sample customer groups from loads.csv into groups.csv", app::stage_groups},
	    {"forecast", "Rolling forecasts per group: metrics.csv and curve.csv", app::stage_forecast},
	    {"fit", "Fit the scaling law to curve.csv: fits.csv and manifest.json", app::stage_fit},
	    {"theory", "Variance and CV envelope tables for the deviation model", app::stage_theory},
	    {"run", "All stages end to end, in memory", app::run_experiment},
	};
	std::vector<std::pair<CLI::App *, const Stage *>> commands;
	for (const auto &stage : stages) {
		auto *cmd = cli.add_subcommand(stage.name, stage.help);
		add_common(cmd, opts);
		commands.emplace_back(cmd, &stage);
	}

	std::vector<std::string> report_inputs;
	std::string report_out;
	auto *report = cli.add_subcommand("report", "Rank fits by irreducible error");
	report->add_option("inputs", report_inputs, "fits.csv files or result directories")->required();
	report->add_option("--out", report_out, "Write report.csv into this directory instead of stdout");

	CLI11_PARSE(cli, argc, argv);

	try {
		if (report->parsed()) {
			std::vector<fs::path> files;
			for (const auto &in : report_inputs) {
				files.push_back(fs::is_directory(in) ? fs::path(in) / app::kFitsFile : fs::path(in));
			}
			if (report_out.empty()) {
				app::write_report(std::cout, files);
			} else {
				fs::create_directories(report_out);
				std::ofstream out(fs::path(report_out) / "report.csv", std::ios::binary | std::ios::trunc);
				app::write_report(out, files);
			}
			return 0;
		}
		for (const auto &[cmd, stage] : commands) {
			if (cmd->parsed()) {
				const auto config = resolve(opts);
				stage->fn(config, config.output);
				std::fprintf(stderr, "%s: wrote %s (config %s)\n", stage->name, config.output.string().c_str(),
				             app::config_hash(config).c_str());
			}
		}
	} catch (const std::exception &e) {
		std::fprintf(stderr, "error: %s\n", e.what());
		return 1;
	}
	return 0;
}
