#include "ntkcv/experiments.hpp"

#include "ntkcv/error.hpp"
#include "ntkcv/seeding.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <random>
#include <thread>

namespace ntkcv {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const std::vector<std::string>& record_columns() {
  static const std::vector<std::string> cols = {
      "run_id",         "seed",          "dataset_name",    "dataset_size",  "parametrization",
      "starting_entropy", "starting_trace", "max_eig_ratio", "min_test_loss", "final_test_loss",
      "min_train_loss", "max_accuracy",  "diverged"};
  return cols;
}

std::string records_csv(const std::vector<ExperimentRecord>& records) {
  std::string out;
  for (std::size_t c = 0; c < record_columns().size(); ++c) {
    if (c) out += ',';
    out += record_columns()[c];
  }
  out += '\n';
  for (const auto& r : records) {
    out += r.run_id + ',' + std::to_string(r.seed) + ',' + r.dataset_name + ',' +
           std::to_string(r.dataset_size) + ',' + std::string(to_string(r.parametrization)) + ',' +
           format_double(r.starting_entropy) + ',' + format_double(r.starting_trace) + ',' +
           format_double(r.max_eig_ratio) + ',' + format_double(r.min_test_loss) + ',' +
           format_double(r.final_test_loss) + ',' + format_double(r.min_train_loss) + ',' +
           (r.max_accuracy ? format_double(*r.max_accuracy) : std::string()) + ',' +
           (r.diverged ? "true" : "false") + '\n';
  }
  return out;
}

Dataset load_configured_dataset(const Config& cfg, std::vector<std::filesystem::path>* files) {
  const std::string name = cfg.get("dataset");
  const std::filesystem::path data_dir = cfg.get("data_dir");
  const auto note = [&](const std::filesystem::path& p) {
    if (files) files->push_back(p);
  };

  if (name == "mnist") {
    const std::filesystem::path images = cfg.get("images_path").empty()
                                             ? data_dir / "mnist" / "mnist5k-images-idx3-ubyte.gz"
                                             : std::filesystem::path(cfg.get("images_path"));
    const std::filesystem::path labels = cfg.get("labels_path").empty()
                                             ? data_dir / "mnist" / "mnist5k-labels-idx1-ubyte.gz"
                                             : std::filesystem::path(cfg.get("labels_path"));
    note(images);
    note(labels);
    return load_mnist_idx(images, labels, cfg.get_u64("mnist_subset"), cfg.get_u64("data_seed"));
  }
  if (name == "clusters")
    return make_synthetic_clusters(static_cast<int>(cfg.get_int("clusters_k")),
                                   static_cast<int>(cfg.get_int("per_cluster")),
                                   cfg.get_double("separation"), cfg.get_double("noise"),
                                   cfg.get_u64("data_seed"));
  if (name == "synthetic-linear")
    return make_synthetic_linear(cfg.get_u64("linear_samples"),
                                 static_cast<int>(cfg.get_int("linear_features")),
                                 cfg.get_double("noise"), cfg.get_u64("data_seed"));

  CsvSchema schema;
  std::filesystem::path path = cfg.get("data_path");
  if (name == "fuel" || name == "gait" || name == "concrete") {
    schema = named_schema(name);
    if (path.empty()) {
      if (name == "fuel") path = data_dir / "fuel" / "auto-mpg.csv";
      if (name == "gait") path = data_dir / "gait" / "gait.csv";
      if (name == "concrete") path = data_dir / "concrete" / "slump_test.csv";
    }
  } else if (name == "csv") {
    if (path.empty()) throw ValidationError("dataset = csv needs data_path");
    schema.name = path.stem().string();
  } else {
    throw ValidationError("unknown dataset '" + name + "'");
  }
  if (!cfg.get("task").empty())
    schema.task = cfg.get("task") == "classification" ? Task::classification : Task::regression;
  const bool columns_overridden = !cfg.get("target_columns").empty() ||
                                  !cfg.get("feature_columns").empty() ||
                                  !cfg.get("ignored_columns").empty();
  if (!cfg.get("target_columns").empty()) schema.target_columns = cfg.get_list("target_columns");
  if (!cfg.get("feature_columns").empty()) schema.feature_columns = cfg.get_list("feature_columns");
  if (!cfg.get("ignored_columns").empty()) schema.ignored_columns = cfg.get_list("ignored_columns");
  if (columns_overridden) schema.expected_columns.reset();
  const auto& missing = cfg.get("missing");
  if (missing == "drop") {
    schema.missing = MissingPolicy::drop;
  } else if (missing == "mean") {
    schema.missing = MissingPolicy::mean;
  } else {
    throw ValidationError("missing must be drop|mean");
  }
  note(path);
  return load_csv_tabular(path, schema);
}

PreparedData prepare_data(const Config& cfg) {
  PreparedData out;
  const Dataset ds = load_configured_dataset(cfg, &out.input_files);
  auto [pool, test] = split(ds, {cfg.get_u64("test_count"), cfg.get_u64("split_seed")});
  auto standardized = standardize(pool, {test});
  out.pool = std::move(standardized.train);
  out.test = std::move(standardized.others.front());
  out.stats = std::move(standardized.stats);
  return out;
}

NetworkSpec network_spec_from(const Config& cfg, int input_width, std::string_view widths_key) {
  NetworkSpec spec;
  spec.layer_widths.push_back(input_width);
  auto widths = cfg.get_int_list(widths_key);
  if (widths.empty() && widths_key != "architecture") widths = cfg.get_int_list("architecture");
  spec.layer_widths.insert(spec.layer_widths.end(), widths.begin(), widths.end());
  spec.activation = parse_activation(cfg.get("activation"));
  std::string param = cfg.get("parametrization");
  if (widths_key == "embedding" && !cfg.get("embedding_parametrization").empty())
    param = cfg.get("embedding_parametrization");
  spec.parametrization = parse_parametrization(param);
  spec.bias = cfg.get_bool("bias");
  spec.validate();
  return spec;
}

TrainConfig train_config_from(const Config& cfg, Task task) {
  TrainConfig t;
  t.epochs = static_cast<int>(cfg.get_int("epochs"));
  t.batch_size = cfg.get_u64("batch_size");
  t.adam.learning_rate = cfg.get_double("learning_rate");
  t.adam.beta1 = cfg.get_double("beta1");
  t.adam.beta2 = cfg.get_double("beta2");
  t.adam.epsilon = cfg.get_double("epsilon");
  t.eval_every = static_cast<int>(cfg.get_int("eval_every"));
  const auto& loss = cfg.get("loss");
  t.loss = loss.empty() ? (task == Task::regression ? LossKind::mse : LossKind::softmax_cross_entropy)
                        : parse_loss_kind(loss);
  t.validate();
  return t;
}

void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

ExperimentRecord run_training_job(const NetworkSpec& spec, const TrainConfig& train_cfg,
                                  const Dataset& train_set, const Dataset& test_set,
                                  std::uint64_t run_seed, std::size_t ntk_max,
                                  const NtkOptions& ntk) {
  NetworkState state = init_network(spec, derive_seed(run_seed, SeedStream::init));

  const Eigen::Index ntk_rows =
      static_cast<Eigen::Index>(std::min(ntk_max == 0 ? train_set.size() : ntk_max, train_set.size()));
  if (state.optimizer_steps != 0) throw Error("starting NTK requested on a trained network");
  const SpectrumReport start = collective_variables(state, train_set.inputs.topRows(ntk_rows), ntk);

  TrainConfig cfg = train_cfg;
  cfg.seed = derive_seed(run_seed, SeedStream::train);
  auto [trained, outcome] = train(std::move(state), train_set, test_set, cfg);

  ExperimentRecord r;
  r.seed = run_seed;
  r.dataset_name = train_set.name;
  r.dataset_size = train_set.size();
  r.parametrization = spec.parametrization;
  r.starting_entropy = start.entropy;
  r.starting_trace = start.trace;
  r.max_eig_ratio = start.max_eig_ratio;
  r.min_test_loss = outcome.min_test_loss;
  r.final_test_loss = outcome.final_test_loss;
  r.min_train_loss = outcome.min_train_loss;
  r.max_accuracy = outcome.max_accuracy;
  r.diverged = outcome.diverged;
  return r;
}

CorrelationSettings CorrelationSettings::from(const Config& cfg, const PreparedData& data) {
  CorrelationSettings s;
  s.spec = network_spec_from(cfg, data.pool.input_width());
  s.train = train_config_from(cfg, data.pool.task);
  s.runs = cfg.get_u64("runs");
  s.size_min = cfg.get_u64("size_min");
  s.size_max = cfg.get_u64("size_max");
  s.ntk_max = cfg.get_u64("ntk_max");
  s.master_seed = cfg.get_u64("master_seed");
  s.workers = static_cast<unsigned>(cfg.get_u64("workers"));
  return s;
}

std::vector<std::string> correlation_variables(Task task) {
  std::vector<std::string> v = {"starting_entropy", "starting_trace",  "dataset_size",
                                "min_test_loss",    "final_test_loss", "min_train_loss"};
  if (task == Task::classification) v.push_back("max_accuracy");
  return v;
}

nlohmann::json CorrelationResult::correlation_json() const {
  nlohmann::json j;
  if (correlation) {
    j = correlation->to_json();
  } else {
    j["variables"] = nlohmann::json::array();
    j["matrix"] = nlohmann::json::array();
  }
  j["insufficient_data"] = !correlation.has_value();
  if (!correlation) j["reason"] = insufficient_reason;
  j["runs_total"] = records.size();
  j["runs_used"] = records.size() - diverged_count;
  j["runs_diverged"] = diverged_count;
  return j;
}

CorrelationResult run_correlation_experiment(const PreparedData& data, const CorrelationSettings& s) {
  if (s.runs == 0) throw ValidationError("runs must be >= 1");
  if (s.size_min < 1 || s.size_min > s.size_max)
    throw ValidationError("need 1 <= size_min <= size_max");
  if (s.size_min > data.pool.size())
    throw ValidationError("size_min " + std::to_string(s.size_min) + " exceeds pool size " +
                          std::to_string(data.pool.size()));
  if (s.spec.input_width() != data.pool.input_width() || s.spec.output_width() != data.pool.output_width())
    throw ValidationError("architecture does not match the dataset's input/output widths");
  const std::size_t size_max = std::min(s.size_max, data.pool.size());

  CorrelationResult result;
  result.records.resize(s.runs);
  parallel_for(s.runs, s.workers, [&](std::size_t i) {
    const std::uint64_t run_seed = derive_seed(s.master_seed, i);
    std::mt19937_64 size_rng(derive_seed(run_seed, SeedStream::size));
    const std::size_t size = std::uniform_int_distribution<std::size_t>(s.size_min, size_max)(size_rng);
    const auto chosen =
        select_random(data.pool.size(), size, derive_seed(run_seed, SeedStream::subset)).chosen_indices;
    ExperimentRecord r = run_training_job(s.spec, s.train, data.pool.subset(chosen), data.test,
                                          run_seed, s.ntk_max);
    char id[32];
    std::snprintf(id, sizeof id, "corr-%04zu", i);
    r.run_id = id;
    result.records[i] = std::move(r);
  });

  const auto vars = correlation_variables(data.pool.task);
  std::vector<std::vector<double>> columns(vars.size());
  for (const auto& r : result.records) {
    if (r.diverged) {
      ++result.diverged_count;
      continue;
    }
    const double values[] = {r.starting_entropy, r.starting_trace,  static_cast<double>(r.dataset_size),
                             r.min_test_loss,    r.final_test_loss, r.min_train_loss,
                             r.max_accuracy.value_or(0.0)};
    for (std::size_t v = 0; v < vars.size(); ++v) columns[v].push_back(values[v]);
  }
  if (result.diverged_count == result.records.size())
    throw UndefinedResult("all " + std::to_string(result.records.size()) + " runs diverged");
  const std::size_t used = result.records.size() - result.diverged_count;
  if (used < 2) {
    result.insufficient_reason = "correlation needs at least 2 non-diverged runs, got " + std::to_string(used);
  } else {
    result.correlation = correlation_matrix(vars, columns);
  }
  return result;
}

const std::vector<std::string>& comparison_columns() {
  static const std::vector<std::string> cols = {
      "dataset_size",          "method",
      "ensemble_count",        "min_test_loss_mean",
      "min_test_loss_se",      "final_test_loss_mean",
      "final_test_loss_se",    "starting_entropy_mean",
      "starting_entropy_se",   "starting_trace_mean",
      "starting_trace_se"};
  return cols;
}

std::string comparison_csv(const std::vector<ComparisonPoint>& points) {
  std::string out;
  for (std::size_t c = 0; c < comparison_columns().size(); ++c) {
    if (c) out += ',';
    out += comparison_columns()[c];
  }
  out += '\n';
  for (const auto& p : points) {
    out += std::to_string(p.dataset_size) + ',' + std::string(to_string(p.method)) + ',' +
           std::to_string(p.ensemble_count);
    for (const Summary* s : {&p.min_test_loss, &p.final_test_loss, &p.starting_entropy, &p.starting_trace})
      out += ',' + format_double(s->mean) + ',' + format_double(s->standard_error);
    out += '\n';
  }
  return out;
}

ComparisonSettings ComparisonSettings::from(const Config& cfg, const PreparedData& data) {
  ComparisonSettings s;
  s.spec = network_spec_from(cfg, data.pool.input_width());
  s.train = train_config_from(cfg, data.pool.task);
  for (int size : cfg.get_int_list("sizes")) {
    if (size < 1) throw ValidationError("sizes must be positive");
    s.sizes.push_back(static_cast<std::size_t>(size));
  }
  s.ensemble = cfg.get_u64("ensemble");
  s.rnd.embedding_spec = network_spec_from(cfg, data.pool.input_width(), "embedding");
  s.rnd.retrain_epochs = static_cast<int>(cfg.get_int("retrain_epochs"));
  s.rnd.retrain_lr = cfg.get_double("retrain_lr");
  const auto& mode = cfg.get("selection_mode");
  if (mode == "greedy") {
    s.rnd.mode = SelectionMode::greedy;
  } else if (mode == "threshold") {
    s.rnd.mode = SelectionMode::threshold;
  } else {
    throw ValidationError("selection_mode must be greedy|threshold");
  }
  s.rnd.threshold = cfg.get_double("threshold");
  s.ntk_max = cfg.get_u64("ntk_max");
  s.master_seed = cfg.get_u64("master_seed");
  s.workers = static_cast<unsigned>(cfg.get_u64("workers"));
  return s;
}

std::uint64_t comparison_run_seed(std::uint64_t master_seed, std::size_t size, std::size_t rep) {
  return derive_seed(derive_seed(master_seed, 0xC0DE0000ULL + size), rep);
}

ComparisonResult run_rnd_comparison(const PreparedData& data, const ComparisonSettings& s) {
  if (s.sizes.empty()) throw ValidationError("no target sizes given");
  if (s.ensemble == 0) throw ValidationError("ensemble must be >= 1");
  for (std::size_t size : s.sizes)
    if (size > data.pool.size())
      throw ValidationError("target size " + std::to_string(size) + " exceeds pool size " +
                            std::to_string(data.pool.size()));
  if (s.spec.input_width() != data.pool.input_width() || s.spec.output_width() != data.pool.output_width())
    throw ValidationError("architecture does not match the dataset's input/output widths");
  s.rnd.embedding_spec.validate();

  constexpr SelectionMethod methods[] = {SelectionMethod::rnd, SelectionMethod::random};
  const std::size_t per_size = 2 * s.ensemble;
  ComparisonResult result;
  result.records.resize(s.sizes.size() * per_size);

  parallel_for(result.records.size(), s.workers, [&](std::size_t job) {
    const std::size_t size = s.sizes[job / per_size];
    const SelectionMethod method = methods[(job % per_size) / s.ensemble];
    const std::size_t rep = job % s.ensemble;
    const std::uint64_t run_seed = comparison_run_seed(s.master_seed, size, rep);
    const std::uint64_t select_seed = derive_seed(run_seed, SeedStream::select);

    SelectionResult chosen;
    if (method == SelectionMethod::rnd) {
      RndConfig cfg = s.rnd;
      cfg.target_size = size;
      cfg.seed = select_seed;
      chosen = select_rnd(data.pool.inputs, cfg);
    } else {
      chosen = select_random(data.pool.size(), size, select_seed);
    }
    ExperimentRecord r = run_training_job(s.spec, s.train, data.pool.subset(chosen.chosen_indices),
                                          data.test, run_seed, s.ntk_max);
    char id[64];
    std::snprintf(id, sizeof id, "%s-s%zu-r%02zu", method == SelectionMethod::rnd ? "rnd" : "random",
                  size, rep);
    r.run_id = id;
    result.records[job] = std::move(r);
  });

  for (std::size_t si = 0; si < s.sizes.size(); ++si) {
    for (std::size_t mi = 0; mi < 2; ++mi) {
      std::vector<double> min_test, final_test, entropy, trace;
      for (std::size_t rep = 0; rep < s.ensemble; ++rep) {
        const auto& r = result.records[si * per_size + mi * s.ensemble + rep];
        if (r.diverged) continue;
        min_test.push_back(r.min_test_loss);
        final_test.push_back(r.final_test_loss);
        entropy.push_back(r.starting_entropy);
        trace.push_back(r.starting_trace);
      }
      ComparisonPoint p;
      p.dataset_size = s.sizes[si];
      p.method = methods[mi];
      p.ensemble_count = min_test.size();
      const auto summarize = [](const std::vector<double>& v) {
        if (v.empty()) return Summary{std::nan(""), std::nan("")};
        return Summary{mean(v), standard_error(v)};
      };
      p.min_test_loss = summarize(min_test);
      p.final_test_loss = summarize(final_test);
      p.starting_entropy = summarize(entropy);
      p.starting_trace = summarize(trace);
      result.points.push_back(p);
    }
  }
  return result;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
}

}  // namespace ntkcv
