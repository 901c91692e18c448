#include "ntkcv/config.hpp"

#include "ntkcv/error.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#ifndef NTKCV_DEFAULT_DATA_DIR
#define NTKCV_DEFAULT_DATA_DIR "data"
#endif

namespace ntkcv {

namespace {

struct KeyDef {
  const char* key;
  const char* default_value;
  const char* help;
};

// clang-format off
const KeyDef kKeys[] = {
  {"dataset", "fuel", "fuel | mnist | gait | concrete | csv | clusters | synthetic-linear"},
  {"data_dir", NTKCV_DEFAULT_DATA_DIR, "directory holding the dataset snapshots"},
  {"data_path", "", "CSV file (defaults to the named dataset's snapshot)"},
  {"images_path", "", "MNIST IDX images (defaults to the bundled 5k subset)"},
  {"labels_path", "", "MNIST IDX labels"},
  {"mnist_subset", "0", "images drawn from the IDX file before splitting (0 = all)"},
  {"task", "", "regression | classification (csv datasets)"},
  {"target_columns", "", "comma list overriding the schema's target columns"},
  {"feature_columns", "", "comma list overriding the schema's feature columns"},
  {"ignored_columns", "", "comma list of columns to skip"},
  {"missing", "drop", "missing-value policy: drop | mean"},
  {"test_count", "120", "rows held out as the fixed test set"},
  {"split_seed", "0", "seed of the pool/test split"},
  {"architecture", "128,128,1", "layer widths after the input layer"},
  {"activation", "relu", "relu | linear"},
  {"parametrization", "lecun", "lecun | ntk"},
  {"bias", "true", "dense layers carry bias terms"},
  {"loss", "", "mse | cross_entropy (default by task)"},
  {"epochs", "100", "training epochs per run"},
  {"batch_size", "32", "mini-batch size (0 = full batch)"},
  {"learning_rate", "0.001", "ADAM learning rate"},
  {"beta1", "0.9", "ADAM beta1"},
  {"beta2", "0.999", "ADAM beta2"},
  {"epsilon", "1e-8", "ADAM epsilon"},
  {"eval_every", "1", "epochs between test evaluations"},
  {"master_seed", "0", "seed all run seeds are derived from"},
  {"workers", "0", "concurrent runs (0 = hardware concurrency)"},
  {"runs", "200", "correlation experiment: number of runs"},
  {"size_min", "16", "correlation experiment: smallest training-set size"},
  {"size_max", "200", "correlation experiment: largest training-set size"},
  {"ntk_max", "512", "largest sample count used for an NTK"},
  {"sizes", "8,16,32", "rnd comparison: target sizes"},
  {"ensemble", "20", "rnd comparison: repetitions per size and method"},
  {"embedding", "", "RND embedding widths after the input (default: architecture)"},
  {"embedding_parametrization", "", "RND embedding parametrization (default: parametrization)"},
  {"retrain_epochs", "50", "RND predictor ADAM steps per selected point"},
  {"retrain_lr", "0.001", "RND predictor learning rate"},
  {"selection_mode", "greedy", "greedy | threshold"},
  {"threshold", "0", "distance threshold for selection_mode = threshold"},
  {"method", "rnd", "select: rnd | random"},
  {"size", "0", "select: number of points to choose"},
  {"subset_size", "0", "ntk/train: pool points used (0 = whole pool)"},
  {"seed", "0", "ntk/select/train: run seed"},
  {"clusters_k", "4", "clusters: number of blobs"},
  {"per_cluster", "10", "clusters: points per blob"},
  {"separation", "10", "clusters: distance between neighbouring centers"},
  {"noise", "0.1", "clusters / synthetic-linear: noise standard deviation"},
  {"data_seed", "0", "seed of generated datasets"},
  {"linear_samples", "400", "synthetic-linear: rows"},
  {"linear_features", "4", "synthetic-linear: input features"},
  {"out", "", "output directory (default runs/<command>)"},
};
// clang-format on

struct Preset {
  const char* name;
  const char* description;
  const char* settings;
};

// clang-format off
const Preset kPresets[] = {
  {"fuel-dense", "correlation study, fuel efficiency, (D128, D128, D1), LeCun init",
   "dataset = fuel\narchitecture = 128,128,1\nparametrization = lecun\ntest_count = 120\n"
   "runs = 200\nsize_min = 16\nsize_max = 200\nepochs = 100\nbatch_size = 32\n"},
  {"fuel-dense-ntk", "correlation study, fuel efficiency, (D128, D128, D1), NTK parametrization",
   "dataset = fuel\narchitecture = 128,128,1\nparametrization = ntk\ntest_count = 120\n"
   "runs = 200\nsize_min = 16\nsize_max = 200\nepochs = 100\nbatch_size = 32\n"},
  {"mnist-dense", "correlation study / single runs, MNIST, (D128, D128, D10), LeCun init",
   "dataset = mnist\narchitecture = 128,128,10\nparametrization = lecun\ntest_count = 500\n"
   "runs = 200\nsize_min = 100\nsize_max = 2000\nepochs = 20\nbatch_size = 32\nntk_max = 256\n"},
  {"fuel", "RND vs random, fuel efficiency, (D32, D32, D32, D1), NTK parametrization",
   "dataset = fuel\narchitecture = 32,32,32,1\nparametrization = ntk\ntest_count = 120\n"
   "sizes = 8,16,32\nensemble = 20\nepochs = 300\nbatch_size = 0\nretrain_lr = 0.01\n"},
  {"gait", "RND vs random, gait classification, (D32, D32, D16), NTK parametrization",
   "dataset = gait\narchitecture = 32,32,16\nparametrization = ntk\ntest_count = 10\n"
   "sizes = 4,8,16\nensemble = 20\nepochs = 300\nbatch_size = 0\nretrain_lr = 0.01\n"},
  {"concrete", "RND vs random, concrete slump, (D32, D32, D32, D3), NTK parametrization",
   "dataset = concrete\narchitecture = 32,32,32,3\nparametrization = ntk\ntest_count = 10\n"
   "sizes = 8,16,32\nensemble = 20\nepochs = 300\nbatch_size = 0\nretrain_lr = 0.01\n"},
  {"clusters", "RND behaviour on 4 separated 2D blobs",
   "dataset = clusters\nclusters_k = 4\nper_cluster = 10\nseparation = 10\nnoise = 0.1\n"
   "architecture = 32,32,4\nembedding = 32,32,16\nparametrization = ntk\ntest_count = 8\n"
   "sizes = 4,8,16\nensemble = 20\nepochs = 100\nbatch_size = 0\nretrain_lr = 0.01\n"},
  {"linear", "correlation study on synthetic linear-regression data",
   "dataset = synthetic-linear\nlinear_samples = 400\nlinear_features = 4\nnoise = 0.1\n"
   "architecture = 16,1\nparametrization = lecun\ntest_count = 100\nruns = 50\n"
   "size_min = 8\nsize_max = 120\nepochs = 50\nbatch_size = 16\n"},
};
// clang-format on

const KeyDef* find_key(const std::string& key) {
  for (const auto& k : kKeys)
    if (key == k.key) return &k;
  return nullptr;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

std::string Config::normalize_key(std::string_view key) {
  std::string k = trim(key);
  std::replace(k.begin(), k.end(), '-', '_');
  return k;
}

Config::Config() {
  for (const auto& k : kKeys) values_[k.key] = k.default_value;
}

Config Config::from_preset(std::string_view name) {
  for (const auto& p : kPresets) {
    if (name == p.name) {
      Config c;
      c.merge_text(p.settings, std::string("preset ") + p.name);
      return c;
    }
  }
  throw ValidationError("unknown preset '" + std::string(name) + "' (see `presets list`)");
}

std::vector<PresetInfo> Config::presets() {
  std::vector<PresetInfo> out;
  for (const auto& p : kPresets) out.push_back({p.name, p.description});
  return out;
}

std::vector<std::pair<std::string, std::string>> Config::key_help() {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : kKeys)
    out.emplace_back(k.key, std::string(k.help) + " [default: " + k.default_value + "]");
  return out;
}

void Config::set(std::string_view key, std::string value) {
  const std::string k = normalize_key(key);
  if (!find_key(k)) throw ValidationError("unknown configuration key '" + std::string(key) + "'");
  values_[k] = trim(value);
}

void Config::merge_text(std::string_view text, std::string_view origin) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError(std::string(origin) + ":" + std::to_string(line_no) +
                            ": expected `key = value`");
    try {
      set(line.substr(0, eq), line.substr(eq + 1));
    } catch (const ValidationError& e) {
      throw ValidationError(std::string(origin) + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void Config::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  merge_text(ss.str(), path.string());
}

const std::string& Config::get(std::string_view key) const {
  const auto it = values_.find(normalize_key(key));
  if (it == values_.end()) throw ValidationError("unknown configuration key '" + std::string(key) + "'");
  return it->second;
}

long long Config::get_int(std::string_view key) const {
  const auto& v = get(key);
  long long out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ValidationError("key '" + std::string(key) + "' expects an integer, got '" + v + "'");
  return out;
}

std::uint64_t Config::get_u64(std::string_view key) const {
  const auto& v = get(key);
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ValidationError("key '" + std::string(key) + "' expects a non-negative integer, got '" + v + "'");
  return out;
}

double Config::get_double(std::string_view key) const {
  const auto& v = get(key);
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ValidationError("key '" + std::string(key) + "' expects a number, got '" + v + "'");
  return out;
}

bool Config::get_bool(std::string_view key) const {
  const auto& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ValidationError("key '" + std::string(key) + "' expects true|false, got '" + v + "'");
}

std::vector<std::string> Config::get_list(std::string_view key) const {
  std::vector<std::string> out;
  std::stringstream ss(get(key));
  std::string item;
  while (std::getline(ss, item, ','))
    if (!trim(item).empty()) out.push_back(trim(item));
  return out;
}

std::vector<int> Config::get_int_list(std::string_view key) const {
  std::vector<int> out;
  for (const auto& item : get_list(key)) {
    int v = 0;
    auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || p != item.data() + item.size())
      throw ValidationError("key '" + std::string(key) + "' expects a comma list of integers");
    out.push_back(v);
  }
  return out;
}

std::string Config::to_text() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

}  // namespace ntkcv
