#include "ntkcv/cli.hpp"

#include "ntkcv/error.hpp"
#include "ntkcv/experiments.hpp"
#include "ntkcv/hashing.hpp"
#include "ntkcv/seeding.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iomanip>

#ifndef NTKCV_VERSION
#define NTKCV_VERSION "0.0.0"
#endif

namespace ntkcv {

namespace {

struct CommonArgs {
  std::string config_file;
  std::string preset;
  std::string out;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config_file, "key = value configuration file");
  sub->add_option("--preset", args.preset, "named preset (see `presets list`)");
  sub->add_option("--out", args.out, "output directory");
  sub->allow_extras();
  sub->footer("Any configuration key may be given as --key value or --key=value (see `config keys`).");
}

// defaults < preset < file < flags
Config build_config(const CLI::App* sub, const CommonArgs& args) {
  Config cfg = args.preset.empty() ? Config() : Config::from_preset(args.preset);
  if (!args.config_file.empty()) cfg.merge_file(args.config_file);
  const auto extras = sub->remaining();
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& tok = extras[i];
    if (tok.rfind("--", 0) != 0) throw ValidationError("unexpected argument '" + tok + "'");
    const std::string body = tok.substr(2);
    const auto eq = body.find('=');
    if (eq != std::string::npos) {
      cfg.set(body.substr(0, eq), body.substr(eq + 1));
    } else {
      if (i + 1 >= extras.size()) throw ValidationError("option '" + tok + "' needs a value");
      cfg.set(body, extras[++i]);
    }
  }
  if (!args.out.empty()) cfg.set("out", args.out);
  return cfg;
}

std::filesystem::path out_dir(const Config& cfg, const std::string& command) {
  const auto& out = cfg.get("out");
  return out.empty() ? std::filesystem::path("runs") / command : std::filesystem::path(out);
}

nlohmann::json run_meta(const std::string& command, const Config& cfg,
                        const std::vector<std::filesystem::path>& inputs) {
  nlohmann::json j;
  j["command"] = command;
  j["version"] = NTKCV_VERSION;
  j["config"] = cfg.values();
  j["master_seed"] = cfg.get_u64("master_seed");
  j["seed"] = cfg.get_u64("seed");
  j["inputs"] = nlohmann::json::array();
  for (const auto& p : inputs)
    j["inputs"].push_back({{"file", p.filename().string()}, {"git_blob_sha1", git_blob_hash_file(p)}});
  return j;
}

void write_common(const std::filesystem::path& dir, const std::string& command, const Config& cfg,
                  const std::vector<std::filesystem::path>& inputs) {
  write_text_file(dir / "config.txt", cfg.to_text());
  write_text_file(dir / "run_meta.json", run_meta(command, cfg, inputs).dump(2) + "\n");
}

// Pool rows used by the single-run commands.
Dataset pool_subset(const Dataset& pool, const Config& cfg) {
  const std::size_t n = cfg.get_u64("subset_size");
  if (n == 0) return pool;
  if (n > pool.size())
    throw ValidationError("subset_size " + std::to_string(n) + " exceeds pool size " +
                          std::to_string(pool.size()));
  return pool.subset(select_random(pool.size(), n, derive_seed(cfg.get_u64("seed"), SeedStream::subset))
                         .chosen_indices);
}

int cmd_ntk(const Config& cfg, std::ostream& out) {
  const PreparedData data = prepare_data(cfg);
  const Dataset ds = pool_subset(data.pool, cfg);
  const NetworkSpec spec = network_spec_from(cfg, ds.input_width());
  const NetworkState state = init_network(spec, derive_seed(cfg.get_u64("seed"), SeedStream::init));
  const std::size_t ntk_max = cfg.get_u64("ntk_max");
  const auto rows = static_cast<Eigen::Index>(ntk_max == 0 ? ds.size() : std::min(ntk_max, ds.size()));
  const Eigen::MatrixXd inputs = ds.inputs.topRows(rows);
  const NtkMatrix ntk = compute_ntk(state, inputs);
  nlohmann::json j = to_json(spectrum_report(ntk));
  j["samples"] = rows;
  j["param_count"] = spec.param_count();

  const auto dir = out_dir(cfg, "ntk");
  std::filesystem::create_directories(dir);
  write_ntk_csv(dir / "ntk.csv", ntk);
  write_text_file(dir / "spectrum.json", j.dump(2) + "\n");
  write_common(dir, "ntk", cfg, data.input_files);
  out << j.dump(2) << "\n";
  return 0;
}

int cmd_select(const Config& cfg, std::ostream& out) {
  std::vector<std::filesystem::path> files;
  Dataset ds = load_configured_dataset(cfg, &files);
  ds = standardize(ds).train;
  const std::size_t size = cfg.get_u64("size");
  const auto method = parse_selection_method(cfg.get("method"));
  const std::uint64_t seed = derive_seed(cfg.get_u64("seed"), SeedStream::select);
  SelectionResult result;
  nlohmann::json j;
  if (method == SelectionMethod::rnd) {
    RndConfig rc;
    rc.embedding_spec = network_spec_from(cfg, ds.input_width(), "embedding");
    rc.target_size = size;
    rc.retrain_epochs = static_cast<int>(cfg.get_int("retrain_epochs"));
    rc.retrain_lr = cfg.get_double("retrain_lr");
    rc.seed = seed;
    const auto& mode = cfg.get("selection_mode");
    if (mode == "threshold") {
      rc.mode = SelectionMode::threshold;
    } else if (mode != "greedy") {
      throw ValidationError("selection_mode must be greedy|threshold");
    }
    rc.threshold = cfg.get_double("threshold");
    result = select_rnd(ds.inputs, rc);
    j = to_json(result);
    j["config"] = to_json(rc);
  } else {
    if (size == 0 || size > ds.size())
      throw ValidationError("size must be in [1, " + std::to_string(ds.size()) + "], got " +
                            std::to_string(size));
    result = select_random(ds.size(), size, seed);
    j = to_json(result);
  }
  j["pool_size"] = ds.size();
  const auto dir = out_dir(cfg, "select");
  write_text_file(dir / "selection.json", j.dump(2) + "\n");
  write_common(dir, "select", cfg, files);
  out << j.dump(2) << "\n";
  return 0;
}

int cmd_train(const Config& cfg, std::ostream& out) {
  const PreparedData data = prepare_data(cfg);
  const Dataset ds = pool_subset(data.pool, cfg);
  const NetworkSpec spec = network_spec_from(cfg, ds.input_width());
  TrainConfig tc = train_config_from(cfg, ds.task);
  const std::uint64_t seed = cfg.get_u64("seed");
  NetworkState state = init_network(spec, derive_seed(seed, SeedStream::init));
  const std::size_t ntk_max = cfg.get_u64("ntk_max");
  const auto rows = static_cast<Eigen::Index>(ntk_max == 0 ? ds.size() : std::min(ntk_max, ds.size()));
  const SpectrumReport start = collective_variables(state, ds.inputs.topRows(rows));
  tc.seed = derive_seed(seed, SeedStream::train);
  auto [trained, outcome] = train(std::move(state), ds, data.test, tc);

  nlohmann::json j = outcome.to_json();
  j["starting_entropy"] = start.entropy;
  j["starting_trace"] = start.trace;
  j["max_eig_ratio"] = start.max_eig_ratio;
  j["dataset_size"] = ds.size();
  j["test_size"] = data.test.size();
  const auto dir = out_dir(cfg, "train");
  write_text_file(dir / "train.json", j.dump(2) + "\n");
  write_common(dir, "train", cfg, data.input_files);
  out << "dataset_size " << ds.size() << "  starting_entropy " << start.entropy << "  starting_trace "
      << start.trace << "\nmin_test_loss " << outcome.min_test_loss << "  final_test_loss "
      << outcome.final_test_loss;
  if (outcome.max_accuracy) out << "  max_accuracy " << *outcome.max_accuracy << "%";
  if (outcome.diverged) out << "  (diverged at epoch " << outcome.epochs_completed << ")";
  out << "\nwrote " << (dir / "train.json").string() << "\n";
  return 0;
}

int cmd_correlation(const Config& cfg, std::ostream& out) {
  const PreparedData data = prepare_data(cfg);
  const auto settings = CorrelationSettings::from(cfg, data);
  const auto result = run_correlation_experiment(data, settings);
  const auto dir = out_dir(cfg, "exp-correlation");
  write_text_file(dir / "records.csv", records_csv(result.records));
  const auto cj = result.correlation_json();
  write_text_file(dir / "correlation.json", cj.dump(2) + "\n");
  write_common(dir, "exp-correlation", cfg, data.input_files);

  out << "runs " << result.records.size() << ", diverged " << result.diverged_count << "\n";
  if (result.correlation) {
    const auto& m = *result.correlation;
    const std::size_t e = 0;
    for (std::size_t v = 1; v < m.variable_names.size(); ++v) {
      out << "r(starting_entropy, " << m.variable_names[v] << ") = ";
      if (m.entries[e][v]) {
        out << std::fixed << std::setprecision(3) << *m.entries[e][v] << std::defaultfloat;
      } else {
        out << "undefined";
      }
      out << "\n";
    }
  } else {
    out << result.insufficient_reason << "\n";
  }
  out << "wrote " << dir.string() << "\n";
  return 0;
}

int cmd_compare(const Config& cfg, std::ostream& out) {
  const PreparedData data = prepare_data(cfg);
  const auto settings = ComparisonSettings::from(cfg, data);
  const auto result = run_rnd_comparison(data, settings);
  const auto dir = out_dir(cfg, "exp-rnd-compare");
  write_text_file(dir / "records.csv", records_csv(result.records));
  write_text_file(dir / "comparison.csv", comparison_csv(result.points));
  write_common(dir, "exp-rnd-compare", cfg, data.input_files);
  out << comparison_csv(result.points) << "wrote " << dir.string() << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"NTK entropy and RND data selection experiments"};
  app.set_version_flag("--version", NTKCV_VERSION);
  app.require_subcommand(1);

  struct Command {
    std::string name;
    std::string help;
    int (*run)(const Config&, std::ostream&);
  };
  const std::vector<Command> commands = {
      {"ntk", "empirical NTK and its spectrum for a freshly initialized network", cmd_ntk},
      {"select", "choose a subset of a dataset with RND or uniformly at random", cmd_select},
      {"train", "one seeded training run", cmd_train},
      {"exp-correlation", "correlate starting NTK entropy/trace with training outcomes", cmd_correlation},
      {"exp-rnd-compare", "RND-selected versus randomly selected training sets", cmd_compare},
  };
  std::vector<CommonArgs> args(commands.size());
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    subs.push_back(app.add_subcommand(commands[i].name, commands[i].help));
    add_common(subs.back(), args[i]);
  }
  auto* presets = app.add_subcommand("presets", "list named presets");
  presets->add_subcommand("list", "list named presets");
  auto* config = app.add_subcommand("config", "configuration keys");
  auto* keys = config->add_subcommand("keys", "list every key with its default");
  config->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (presets->parsed()) {
      for (const auto& p : Config::presets()) out << std::left << std::setw(16) << p.name << p.description << "\n";
      return 0;
    }
    if (keys->parsed()) {
      for (const auto& [k, h] : Config::key_help()) out << std::left << std::setw(28) << k << h << "\n";
      return 0;
    }
    for (std::size_t i = 0; i < commands.size(); ++i)
      if (subs[i]->parsed()) return commands[i].run(build_config(subs[i], args[i]), out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace ntkcv
