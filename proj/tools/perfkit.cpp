// perfkit: simulate phantoms, fit kinetic models, summarise and compare fits.
//
// Exit status: 0 success, 1 runtime failure, 2 usage or configuration error.

#include "perfkit/diagnostics.hpp"
#include "perfkit/errors.hpp"
#include "perfkit/io.hpp"
#include "perfkit/phantom.hpp"
#include "perfkit/sampler.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

namespace pk = perfkit;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_dir(const fs::path& dir, const char* flag) {
  if (!fs::is_directory(dir)) throw UsageError(std::string(flag) + ": directory does not exist: " + dir.string());
}

pk::RunConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  return pk::read_config(path);
}

std::mutex g_log_mutex;

// Forwards complete lines to stderr with a prefix, one lock per line.
class PrefixBuf : public std::stringbuf {
 public:
  explicit PrefixBuf(std::string prefix) : prefix_(std::move(prefix)) {}
  int sync() override {
    std::string text = str();
    const auto cut = text.rfind('\n');
    if (cut == std::string::npos) return 0;
    {
      std::lock_guard lock(g_log_mutex);
      std::istringstream lines(text.substr(0, cut + 1));
      for (std::string line; std::getline(lines, line);) std::cerr << prefix_ << line << '\n';
    }
    str(text.substr(cut + 1));
    return 0;
  }

 private:
  std::string prefix_;
};

class PrefixStream : public std::ostream {
 public:
  explicit PrefixStream(std::string prefix) : std::ostream(&buf_), buf_(std::move(prefix)) { setf(std::ios::unitbuf); }
  ~PrefixStream() override { buf_.pubsync(); }

 private:
  PrefixBuf buf_;
};

std::size_t thread_cap(std::size_t chains) {
  std::size_t cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PERFKIT_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v < 1) throw std::invalid_argument("");
      cap = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      throw UsageError(std::string("PERFKIT_THREADS must be a positive integer, got '") + env + "'");
    }
  }
  return std::min(cap, chains);
}

std::string voxel_label(const pk::Dataset& ds, std::size_t i) {
  return "row " + std::to_string(i / ds.nx) + ", col " + std::to_string(i % ds.nx);
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int run_simulate(const SimulateArgs& a) {
  pk::RunConfig cfg = load_config(a.config);
  require_dir(a.out, "--out");
  if (a.seed) cfg.phantom.seed = *a.seed;
  const pk::Phantom ph = pk::generate_phantom(cfg.phantom);
  pk::write_dataset(ph.dataset, a.out);
  pk::write_truth(ph.truth, a.out);
  pk::write_text(fs::path(a.out) / "config.json", pk::config_to_json(cfg).dump(2) + "\n");
  std::cerr << "simulate: wrote " << ph.dataset.nx << "x" << ph.dataset.ny << " phantom with " << ph.dataset.num_times()
            << " time points to " << a.out << '\n';
  return 0;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  std::string data;
  std::string model;
  std::string prior;
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::size_t chains = 1;
};

json acceptance_stats(const pk::SampleStore& store) {
  const auto ids = pk::model_params(store.model);
  const std::size_t np = store.num_params;
  std::size_t in_band = 0;
  double lo = 1.0, hi = 0.0, sum = 0.0;
  json per_param = json::object();
  for (std::size_t p = 0; p < np; ++p) {
    double s = 0.0;
    for (std::size_t k = 0; k < store.voxels.size(); ++k) s += store.acceptance[k * np + p];
    per_param[std::string(pk::param_name(ids[p]))] = s / static_cast<double>(store.voxels.size());
  }
  for (double r : store.acceptance) {
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    sum += r;
    in_band += r >= 0.10 && r <= 0.35;
  }
  const double n = static_cast<double>(store.acceptance.size());
  return {{"mean", sum / n},
          {"min", lo},
          {"max", hi},
          {"fraction_in_0.10_0.35", static_cast<double>(in_band) / n},
          {"per_parameter_mean", per_param}};
}

int run_fit(const FitArgs& a) {
  pk::RunConfig cfg = load_config(a.config);
  require_dir(a.out, "--out");
  cfg.fit.model = *pk::parse_model_kind(a.model);
  cfg.fit.prior = *pk::parse_prior_mode(a.prior);
  if (a.seed) cfg.fit.sampler.seed = *a.seed;
  try {
    cfg.fit.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const pk::Dataset ds = pk::read_dataset(a.data);
  std::optional<pk::GroundTruth> truth;
  if (fs::exists(fs::path(a.data) / "truth.csv")) {
    truth = pk::read_truth(a.data);
    if (truth->nx != ds.nx || truth->ny != ds.ny) throw pk::DimensionError("truth.csv grid does not match the dataset");
  }

  const std::uint64_t seed = cfg.fit.sampler.seed;
  const std::size_t chains = a.chains;
  const auto start = std::chrono::steady_clock::now();

  const pk::Sampler sampler(ds, cfg.fit);
  std::vector<pk::SampleStore> stores(chains);
  std::vector<std::exception_ptr> errors(chains);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next++) < chains;) {
      try {
        PrefixStream progress("chain " + std::to_string(k) + ": ");
        stores[k] = sampler.run(seed + k, &progress);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const std::size_t workers = thread_cap(chains);
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (std::size_t k = 0; k < chains; ++k) {
    if (!errors[k]) continue;
    try {
      std::rethrow_exception(errors[k]);
    } catch (const pk::SamplerError& e) {
      throw std::runtime_error("chain " + std::to_string(k) + ": sampler failure at voxel (" + voxel_label(ds, e.voxel()) +
                               "): " + e.what());
    }
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  for (std::size_t k = 0; k < chains; ++k) {
    const fs::path dir = fs::path(a.out) / ("chain_" + std::to_string(k));
    fs::create_directories(dir);
    pk::write_samples(stores[k], dir);
  }
  const pk::SampleStore pooled = chains == 1 ? stores[0] : pk::SampleStore::pool(stores);
  const pk::FitSummary summary = pk::summarize_fit(pooled, ds);
  const fs::path maps = fs::path(a.out) / "maps";
  fs::create_directories(maps);
  pk::write_maps(summary, truth ? &*truth : nullptr, maps);

  std::vector<std::uint64_t> chain_seeds;
  for (std::size_t k = 0; k < chains; ++k) chain_seeds.push_back(seed + k);
  const json run = {{"command", "fit"},
                    {"data", a.data},
                    {"model", std::string(pk::model_name(cfg.fit.model))},
                    {"prior", std::string(pk::prior_mode_name(cfg.fit.prior))},
                    {"seed", seed},
                    {"chains", chains},
                    {"chain_seeds", chain_seeds},
                    {"nx", ds.nx},
                    {"ny", ds.ny},
                    {"masked_voxels", ds.masked_count()},
                    {"stored_draws_per_chain", cfg.fit.sampler.stored_draws()},
                    {"wall_clock_seconds", seconds},
                    {"acceptance", acceptance_stats(pooled)},
                    {"global_pd", summary.global_pd},
                    {"global_dic", summary.global_dic},
                    {"median_tau_eps", summary.median_tau_eps},
                    {"config", pk::config_to_json(cfg)}};
  pk::write_text(fs::path(a.out) / "run_summary.json", run.dump(2) + "\n");
  std::cerr << "fit: " << chains << " chain(s) in " << seconds << " s; global pD " << summary.global_pd << ", DIC "
            << summary.global_dic << '\n';
  return 0;
}

// ---------------------------------------------------------------- summarize / compare

json read_run_summary(const fs::path& fit_dir) {
  const fs::path path = fit_dir / "run_summary.json";
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return json::parse(in);
}

std::optional<double> median_of(std::vector<double> values) {
  std::erase_if(values, [](double v) { return std::isnan(v); });
  if (values.empty()) return std::nullopt;
  return pk::median(std::move(values));
}

std::string cell(std::optional<double> v) { return v ? pk::format_number(*v) : std::string(); }

// Block label per voxel; everything is "all" without truth.
std::vector<std::string> block_labels(const std::optional<pk::GroundTruth>& truth, std::size_t n) {
  std::vector<std::string> out(n, "all");
  if (truth)
    for (std::size_t i = 0; i < n; ++i) out[i] = std::string(1, truth->block[i]);
  return out;
}

std::vector<std::string> scopes(const std::vector<std::string>& labels) {
  std::vector<std::string> out(labels.begin(), labels.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (out.size() != 1 || out[0] != "all") out.push_back("all");
  return out;
}

const std::vector<double>* truth_field(const pk::GroundTruth& t, const std::string& name) {
  static const std::map<std::string, std::vector<double> pk::GroundTruth::*> fields = {
      {"k_ep1", &pk::GroundTruth::k_ep1},       {"k_ep2", &pk::GroundTruth::k_ep2},
      {"K_trans1", &pk::GroundTruth::k_trans1}, {"K_trans2", &pk::GroundTruth::k_trans2},
      {"v_t1", &pk::GroundTruth::v_t1},         {"v_t2", &pk::GroundTruth::v_t2}};
  const auto it = fields.find(name);
  return it == fields.end() ? nullptr : &(t.*(it->second));
}

// Compartment 1 or 2 of a parameter name, used to skip compartments absent from the truth.
const std::vector<double>& compartment_k_trans(const pk::GroundTruth& t, const std::string& name) {
  return name.back() == '2' ? t.k_trans2 : t.k_trans1;
}

int run_summarize(const std::string& fit, const std::string& truth_dir) {
  require_dir(fit, "--fit");
  const json run = read_run_summary(fit);
  const auto model = pk::parse_model_kind(run.at("model").get<std::string>());
  if (!model) throw std::runtime_error("run_summary.json: unknown model");
  const fs::path maps = fs::path(fit) / "maps";

  std::optional<pk::GroundTruth> truth;
  if (!truth_dir.empty()) {
    require_dir(truth_dir, "--truth");
    truth = pk::read_truth(truth_dir);
  }

  std::cout << "block,quantity,median,median_rel_error\n";
  std::map<std::string, pk::MapGrid> grids;
  for (const auto& name : pk::map_names(*model)) {
    grids[name] = pk::read_map(maps / (name + ".csv"));
    const auto& g = grids[name];
    if (truth && (g.nx != truth->nx || g.ny != truth->ny))
      throw pk::DimensionError("truth grid does not match map " + name);
  }
  const std::size_t n = grids.begin()->second.values.size();
  const auto labels = block_labels(truth, n);
  for (const auto& scope : scopes(labels)) {
    for (const auto& name : pk::map_names(*model)) {
      const auto& g = grids[name];
      std::vector<double> est, rel;
      const std::vector<double>* tv = truth ? truth_field(*truth, name) : nullptr;
      for (std::size_t i = 0; i < n; ++i) {
        if (scope != "all" && labels[i] != scope) continue;
        est.push_back(g.values[i]);
        if (tv && !std::isnan(g.values[i]) && compartment_k_trans(*truth, name)[i] > 0.0 && (*tv)[i] != 0.0)
          rel.push_back(std::abs(g.values[i] - (*tv)[i]) / std::abs((*tv)[i]));
      }
      std::cout << scope << ',' << name << ',' << cell(median_of(est)) << ',' << cell(median_of(rel)) << '\n';
    }
  }
  std::cout << "all,global_pD," << pk::format_number(run.at("global_pd").get<double>()) << ",\n";
  std::cout << "all,global_DIC," << pk::format_number(run.at("global_dic").get<double>()) << ",\n";
  return 0;
}

int run_compare(const std::string& fit_a, const std::string& fit_b, const std::string& truth_dir) {
  require_dir(fit_a, "--fit-a");
  require_dir(fit_b, "--fit-b");
  auto load = [](const std::string& fit, const char* name) { return pk::read_map(fs::path(fit) / "maps" / name); };
  const pk::MapGrid sse_a = load(fit_a, "SSE.csv"), sse_b = load(fit_b, "SSE.csv");
  const pk::MapGrid dic_a = load(fit_a, "DIC.csv"), dic_b = load(fit_b, "DIC.csv");
  if (sse_a.nx != sse_b.nx || sse_a.ny != sse_b.ny) throw UsageError("fits cover different grids");
  for (std::size_t i = 0; i < sse_a.values.size(); ++i)
    if (std::isnan(sse_a.values[i]) != std::isnan(sse_b.values[i])) throw UsageError("fits use different masks");

  std::optional<pk::GroundTruth> truth;
  if (!truth_dir.empty()) {
    require_dir(truth_dir, "--truth");
    truth = pk::read_truth(truth_dir);
    if (truth->nx != sse_a.nx || truth->ny != sse_a.ny) throw UsageError("truth grid does not match the fits");
  }
  const std::size_t n = sse_a.values.size();
  const auto labels = block_labels(truth, n);

  std::cout << "scope,row,col,sse_a,sse_b,sse_delta,sse_ratio,dic_a,dic_b,dic_delta\n";
  std::vector<std::array<double, 7>> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double sa = sse_a.values[i], sb = sse_b.values[i], da = dic_a.values[i], db = dic_b.values[i];
    rows[i] = {sa, sb, sb - sa, sa > 0.0 ? sb / sa : std::nan(""), da, db, db - da};
    if (std::isnan(sa)) continue;
    std::cout << "voxel," << i / sse_a.nx << ',' << i % sse_a.nx;
    for (double v : rows[i]) std::cout << ',' << cell(std::isnan(v) ? std::nullopt : std::optional<double>(v));
    std::cout << '\n';
  }
  for (const auto& scope : scopes(labels)) {
    std::cout << (scope == "all" ? std::string("all") : "block:" + scope) << ",,";
    for (std::size_t c = 0; c < 7; ++c) {
      std::vector<double> col;
      for (std::size_t i = 0; i < n; ++i)
        if (scope == "all" || labels[i] == scope) col.push_back(rows[i][c]);
      std::cout << ',' << cell(median_of(col));
    }
    std::cout << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian kinetic model fitting for DCE-MRI concentration data"};
  app.require_subcommand(1, 1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate the synthetic phantom");
  simulate->add_option("--config", sim.config, "Configuration JSON")->check(CLI::ExistingFile);
  simulate->add_option("--out", sim.out, "Existing output directory")->required();
  simulate->add_option("--seed", sim.seed, "Overrides phantom.seed");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Run MCMC and write samples, maps and a run summary");
  fit->add_option("--data", fa.data, "Dataset directory")->required();
  fit->add_option("--model", fa.model, "Kinetic model")->required()->check(CLI::IsMember({"1comp", "2comp", "exttofts"}));
  fit->add_option("--prior", fa.prior, "Prior mode")->required()->check(CLI::IsMember({"voxelwise", "spatial"}));
  fit->add_option("--config", fa.config, "Configuration JSON")->check(CLI::ExistingFile);
  fit->add_option("--out", fa.out, "Existing output directory")->required();
  fit->add_option("--seed", fa.seed, "Overrides sampler.seed; chain k uses seed + k");
  fit->add_option("--chains", fa.chains, "Independent chains, pooled in the maps")->check(CLI::PositiveNumber);

  std::string sum_fit, sum_truth;
  auto* summarize = app.add_subcommand("summarize", "Per-block and global medians of a fit's maps");
  summarize->add_option("--fit", sum_fit, "Fit output directory")->required();
  summarize->add_option("--truth", sum_truth, "Directory holding truth.csv");

  std::string cmp_a, cmp_b, cmp_truth;
  auto* compare = app.add_subcommand("compare", "Per-voxel and per-block SSE/DIC differences (b - a) as CSV");
  compare->add_option("--fit-a", cmp_a, "First fit directory")->required();
  compare->add_option("--fit-b", cmp_b, "Second fit directory")->required();
  compare->add_option("--truth", cmp_truth, "Directory holding truth.csv, for block labels");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*fit) return run_fit(fa);
    if (*summarize) return run_summarize(sum_fit, sum_truth);
    return run_compare(cmp_a, cmp_b, cmp_truth);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const pk::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
}
