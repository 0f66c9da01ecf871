#include "perfkit/io.hpp"

#include "perfkit/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string_view>

namespace perfkit {

using nlohmann::json;

namespace {

std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<double> to_double(std::string_view text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<std::size_t> to_index(std::string_view text) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

// Reads a file into lines, stripping one trailing '\r' is not done: LF only.
std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string(), 1, "<document>", e.what());
  }
}

std::string format_time_header(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", t);
  return buf;
}

double parse_cell(const std::string& file, std::size_t line, std::string_view field, std::string_view text) {
  const auto v = to_double(text);
  if (!v) throw ParseError(file, line, std::string(field), "expected a finite number, got '" + std::string(text) + "'");
  return *v;
}

std::size_t parse_index(const std::string& file, std::size_t line, std::string_view field, std::string_view text) {
  const auto v = to_index(text);
  if (!v) throw ParseError(file, line, std::string(field), "expected a non-negative integer, got '" + std::string(text) + "'");
  return *v;
}

// Strict reader for one JSON object: every lookup is checked, and finish()
// rejects keys that were never requested.
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void real(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(key_path(key), "expected a number");
      out = v->get<double>();
      if (!std::isfinite(out)) throw ConfigError(key_path(key), "must be finite");
    }
  }

  void positive(const std::string& key, double& out) {
    real(key, out);
    if (!(out > 0.0)) throw ConfigError(key_path(key), "must be positive");
  }

  void non_negative(const std::string& key, double& out) {
    real(key, out);
    if (!(out >= 0.0)) throw ConfigError(key_path(key), "must be >= 0");
  }

  template <typename Int>
  void count(const std::string& key, Int& out, Int min_value) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer() || v->get<long long>() < static_cast<long long>(min_value))
        throw ConfigError(key_path(key), "expected an integer >= " + std::to_string(min_value));
      out = v->get<Int>();
    }
  }

  void text(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(key_path(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  std::optional<Section> child(const std::string& key) {
    if (const json* v = find(key)) return Section(*v, key_path(key));
    return std::nullopt;
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items())
      if (!seen_.count(key)) throw ConfigError(key_path(key), "unknown key");
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_aif(Section& s, AifParams& aif) {
  s.positive("dose", aif.dose);
  s.positive("a1", aif.a1);
  s.positive("a2", aif.a2);
  s.positive("m1", aif.m1);
  s.positive("m2", aif.m2);
  s.non_negative("t0", aif.t0);
  s.finish();
}

json aif_to_json(const AifParams& aif) {
  return {{"dose", aif.dose}, {"a1", aif.a1}, {"a2", aif.a2}, {"m1", aif.m1}, {"m2", aif.m2}, {"t0", aif.t0}};
}

constexpr const char* kTruthHeader = "row,col,block,k_ep1,k_ep2,K_trans1,K_trans2,v_t1,v_t2";

}  // namespace

std::size_t Dataset::masked_count() const {
  std::size_t n = 0;
  for (auto m : mask) n += m != 0;
  return n;
}

void Dataset::validate() const {
  if (nx == 0 || ny == 0) throw DimensionError("dataset extents must be >= 1");
  if (mask.size() != nx * ny) throw DimensionError("mask length does not match nx * ny");
  if (grid.size() < 2) throw DimensionError("dataset needs at least two time points");
  if (observed.size() != nx * ny * grid.size()) throw DimensionError("observation matrix does not match nx * ny * T");
  aif.validate();
  for (double v : observed)
    if (!std::isfinite(v)) throw std::invalid_argument("observations must be finite");
  if (masked_count() == 0) throw EmptyMaskError();
}

std::string format_number(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("refusing to write a non-finite number");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

void write_dataset(const Dataset& ds, const fs::path& dir) {
  ds.validate();
  {
    std::ostringstream csv;
    csv << "row,col,mask";
    for (double t : ds.grid.times()) csv << ",t=" << format_time_header(t);
    csv << '\n';
    for (std::size_t r = 0; r < ds.ny; ++r)
      for (std::size_t c = 0; c < ds.nx; ++c) {
        const std::size_t i = r * ds.nx + c;
        csv << r << ',' << c << ',' << (ds.mask[i] ? 1 : 0);
        for (double y : ds.series(i)) csv << ',' << format_number(y);
        csv << '\n';
      }
    write_text(dir / "dataset.csv", csv.str());
  }
  json meta = {{"nx", ds.nx},
               {"ny", ds.ny},
               {"times", std::vector<double>(ds.grid.times().begin(), ds.grid.times().end())},
               {"aif", aif_to_json(ds.aif)}};
  write_text(dir / "dataset.json", meta.dump(2) + "\n");
}

Dataset read_dataset(const fs::path& dir) {
  const fs::path meta_path = dir / "dataset.json";
  const fs::path csv_path = dir / "dataset.csv";
  const std::string meta_name = meta_path.string();
  const std::string csv_name = csv_path.string();

  Dataset ds;
  const json meta = read_json(meta_path);
  try {
    Section s(meta, "");
    std::size_t nx = 0, ny = 0;
    s.count("nx", nx, std::size_t{1});
    s.count("ny", ny, std::size_t{1});
    if (nx == 0 || ny == 0) throw ConfigError("nx/ny", "missing grid extents");
    ds.nx = nx;
    ds.ny = ny;
    const json* times = s.find("times");
    if (!times || !times->is_array()) throw ConfigError("times", "expected an array of acquisition times");
    std::vector<double> t;
    for (const auto& v : *times) {
      if (!v.is_number()) throw ConfigError("times", "expected numbers");
      t.push_back(v.get<double>());
    }
    ds.grid = TimeGrid(std::move(t));
    if (auto aif = s.child("aif")) read_aif(*aif, ds.aif);
    s.finish();
  } catch (const ConfigError& e) {
    throw ParseError(meta_name, 1, e.key(), e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(meta_name, 1, "times", e.what());
  }

  const auto lines = read_lines(csv_path);
  if (lines.empty()) throw ParseError(csv_name, 1, "header", "empty file");
  const auto header = split(lines[0]);
  const std::size_t nt = ds.grid.size();
  if (header.size() < 3 || header[0] != "row" || header[1] != "col" || header[2] != "mask")
    throw ParseError(csv_name, 1, "header", "expected 'row,col,mask,t=...'");
  if (header.size() - 3 != nt)
    throw DimensionError(csv_name + ":1: header has " + std::to_string(header.size() - 3) + " time columns, metadata has " +
                         std::to_string(nt));
  for (std::size_t j = 0; j < nt; ++j) {
    const std::string expected = "t=" + format_time_header(ds.grid[j]);
    if (header[3 + j] != expected)
      throw ParseError(csv_name, 1, std::string(header[3 + j]), "does not match metadata time " + expected);
  }

  const std::size_t n = ds.nx * ds.ny;
  if (lines.size() - 1 != n)
    throw DimensionError(csv_name + ": expected " + std::to_string(n) + " voxel rows, found " +
                         std::to_string(lines.size() - 1));
  ds.mask.assign(n, 0);
  ds.observed.assign(n * nt, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t line_no = i + 2;
    const auto cells = split(lines[i + 1]);
    if (cells.size() != 3 + nt)
      throw DimensionError(csv_name + ":" + std::to_string(line_no) + ": row has " + std::to_string(cells.size() - 3) +
                           " data columns, expected " + std::to_string(nt));
    const std::size_t r = parse_index(csv_name, line_no, "row", cells[0]);
    const std::size_t c = parse_index(csv_name, line_no, "col", cells[1]);
    if (r != i / ds.nx || c != i % ds.nx)
      throw ParseError(csv_name, line_no, "row", "voxels must be listed in row-major order");
    if (cells[2] != "0" && cells[2] != "1") throw ParseError(csv_name, line_no, "mask", "expected 0 or 1");
    ds.mask[i] = cells[2] == "1" ? 1 : 0;
    for (std::size_t j = 0; j < nt; ++j)
      ds.observed[i * nt + j] = parse_cell(csv_name, line_no, header[3 + j], cells[3 + j]);
  }
  ds.validate();
  return ds;
}

void write_truth(const GroundTruth& gt, const fs::path& dir) {
  std::ostringstream csv;
  csv << kTruthHeader << '\n';
  for (std::size_t r = 0; r < gt.ny; ++r)
    for (std::size_t c = 0; c < gt.nx; ++c) {
      const std::size_t i = r * gt.nx + c;
      csv << r << ',' << c << ',' << gt.block[i];
      for (const auto* v : {&gt.k_ep1, &gt.k_ep2, &gt.k_trans1, &gt.k_trans2, &gt.v_t1, &gt.v_t2})
        csv << ',' << format_number((*v)[i]);
      csv << '\n';
    }
  write_text(dir / "truth.csv", csv.str());
}

GroundTruth read_truth(const fs::path& dir) {
  const fs::path path = dir / "truth.csv";
  const std::string name = path.string();
  const auto lines = read_lines(path);
  if (lines.empty() || lines[0] != kTruthHeader) throw ParseError(name, 1, "header", std::string("expected '") + kTruthHeader + "'");
  GroundTruth gt;
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t l = 1; l < lines.size(); ++l) {
    const auto cells = split(lines[l]);
    if (cells.size() != 9) throw DimensionError(name + ":" + std::to_string(l + 1) + ": expected 9 columns");
    const std::size_t r = parse_index(name, l + 1, "row", cells[0]);
    const std::size_t c = parse_index(name, l + 1, "col", cells[1]);
    if (cells[2].size() != 1) throw ParseError(name, l + 1, "block", "expected a single-character label");
    coords.emplace_back(r, c);
    gt.block.push_back(cells[2][0]);
    const char* fields[] = {"k_ep1", "k_ep2", "K_trans1", "K_trans2", "v_t1", "v_t2"};
    std::vector<double>* targets[] = {&gt.k_ep1, &gt.k_ep2, &gt.k_trans1, &gt.k_trans2, &gt.v_t1, &gt.v_t2};
    for (int f = 0; f < 6; ++f) targets[f]->push_back(parse_cell(name, l + 1, fields[f], cells[3 + f]));
  }
  if (coords.empty()) throw DimensionError(name + ": no voxels");
  gt.ny = coords.back().first + 1;
  gt.nx = coords.back().second + 1;
  for (std::size_t i = 0; i < coords.size(); ++i)
    if (coords[i].first != i / gt.nx || coords[i].second != i % gt.nx)
      throw ParseError(name, i + 2, "row", "voxels must be listed in row-major order");
  if (coords.size() != gt.nx * gt.ny) throw DimensionError(name + ": incomplete grid");
  return gt;
}

bool MapGrid::operator==(const MapGrid& other) const {
  if (nx != other.nx || ny != other.ny || values.size() != other.values.size()) return false;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const bool a = std::isnan(values[i]);
    const bool b = std::isnan(other.values[i]);
    if (a != b || (!a && values[i] != other.values[i])) return false;
  }
  return true;
}

void write_map(const MapGrid& map, const fs::path& path) {
  if (map.values.size() != map.nx * map.ny) throw DimensionError("map size does not match its grid");
  std::ostringstream out;
  for (std::size_t r = 0; r < map.ny; ++r) {
    for (std::size_t c = 0; c < map.nx; ++c) {
      if (c) out << ',';
      const double v = map.values[r * map.nx + c];
      if (!std::isnan(v)) out << format_number(v);
    }
    out << '\n';
  }
  write_text(path, out.str());
}

MapGrid read_map(const fs::path& path) {
  const std::string name = path.string();
  const auto lines = read_lines(path);
  if (lines.empty()) throw DimensionError(name + ": empty map");
  MapGrid map;
  map.ny = lines.size();
  for (std::size_t r = 0; r < lines.size(); ++r) {
    const auto cells = split(lines[r]);
    if (r == 0) map.nx = cells.size();
    if (cells.size() != map.nx)
      throw DimensionError(name + ":" + std::to_string(r + 1) + ": expected " + std::to_string(map.nx) + " cells");
    for (std::size_t c = 0; c < cells.size(); ++c)
      map.values.push_back(cells[c].empty() ? std::numeric_limits<double>::quiet_NaN()
                                            : parse_cell(name, r + 1, "col " + std::to_string(c), cells[c]));
  }
  return map;
}

std::vector<std::string> map_names(ModelKind model) {
  std::vector<std::string> names = {"k_ep1", "K_trans1", "v_t1"};
  if (model == ModelKind::TwoComp) names.insert(names.end(), {"k_ep2", "K_trans2", "v_t2"});
  if (model == ModelKind::ExtTofts) names.push_back("v_p");
  names.insert(names.end(), {"SSE", "pD", "DIC", "median_deviance", "acceptance"});
  return names;
}

void write_maps(const FitSummary& s, const GroundTruth* truth, const fs::path& dir) {
  auto emit = [&](const std::string& name, const std::vector<double>& values) {
    write_map(MapGrid{s.nx, s.ny, values}, dir / (name + ".csv"));
  };
  auto emit_estimate = [&](const std::string& name, const Estimate& e) {
    emit(name, e.median);
    emit(name + ".q10", e.q10);
    emit(name + ".q90", e.q90);
  };
  emit_estimate("k_ep1", s.k_ep1);
  emit_estimate("K_trans1", s.k_trans1);
  emit("v_t1", s.v_t1);
  if (s.model == ModelKind::TwoComp) {
    emit_estimate("k_ep2", s.k_ep2);
    emit_estimate("K_trans2", s.k_trans2);
    emit("v_t2", s.v_t2);
  }
  if (s.model == ModelKind::ExtTofts) emit_estimate("v_p", s.v_p);
  emit("SSE", s.sse);
  emit("pD", s.pd);
  emit("DIC", s.dic);
  emit("median_deviance", s.median_deviance);
  emit("acceptance", s.mean_acceptance);
  const auto ids = model_params(s.model);
  for (std::size_t p = 0; p < ids.size(); ++p) emit("acceptance." + std::string(param_name(ids[p])), s.acceptance[p]);

  if (truth) {
    if (truth->nx != s.nx || truth->ny != s.ny) throw DimensionError("truth grid does not match the fit");
    emit("true_k_ep1", truth->k_ep1);
    emit("true_k_ep2", truth->k_ep2);
    emit("true_K_trans1", truth->k_trans1);
    emit("true_K_trans2", truth->k_trans2);
    emit("true_v_t1", truth->v_t1);
    emit("true_v_t2", truth->v_t2);
  }
}

void write_samples(const SampleStore& store, const fs::path& dir) {
  const auto ids = model_params(store.model);
  const std::size_t np = store.num_params;
  {
    std::ostringstream out;
    out << "draw,voxel";
    for (ParamId id : ids) out << ',' << param_name(id);
    out << ",deviance\n";
    for (std::size_t d = 0; d < store.draws; ++d)
      for (std::size_t k = 0; k < store.voxels.size(); ++k) {
        out << d << ',' << store.voxels[k];
        for (std::size_t p = 0; p < np; ++p) out << ',' << format_number(store.param_draws(k, p)[d]);
        out << ',' << format_number(store.deviance_draws(k)[d]) << '\n';
      }
    write_text(dir / "samples.csv", out.str());
  }
  {
    std::ostringstream out;
    out << "draw,tau_eps";
    const bool spatial = !store.tau_field.empty();
    if (spatial)
      for (ParamId id : ids) out << ",tau_" << param_name(id);
    out << '\n';
    for (std::size_t d = 0; d < store.draws; ++d) {
      out << d << ',' << format_number(store.tau_eps[d]);
      if (spatial)
        for (std::size_t p = 0; p < np; ++p) out << ',' << format_number(store.tau_field_draws(p)[d]);
      out << '\n';
    }
    write_text(dir / "globals.csv", out.str());
  }
  {
    std::ostringstream out;
    out << "voxel";
    for (ParamId id : ids) out << ',' << param_name(id);
    out << '\n';
    for (std::size_t k = 0; k < store.voxels.size(); ++k) {
      out << store.voxels[k];
      for (std::size_t p = 0; p < np; ++p) out << ',' << format_number(store.acceptance[k * np + p]);
      out << '\n';
    }
    write_text(dir / "acceptance.csv", out.str());
  }
}

SampleStore read_samples(const fs::path& dir) {
  const fs::path samples_path = dir / "samples.csv";
  const std::string name = samples_path.string();
  const auto lines = read_lines(samples_path);
  if (lines.empty()) throw ParseError(name, 1, "header", "empty file");
  const auto header = split(lines[0]);
  if (header.size() < 4 || header[0] != "draw" || header[1] != "voxel" || header.back() != "deviance")
    throw ParseError(name, 1, "header", "expected 'draw,voxel,<parameters>,deviance'");

  SampleStore store;
  std::vector<std::string> param_cols(header.begin() + 2, header.end() - 1);
  bool matched = false;
  for (ModelKind kind : {ModelKind::OneComp, ModelKind::TwoComp, ModelKind::ExtTofts}) {
    const auto ids = model_params(kind);
    if (ids.size() != param_cols.size()) continue;
    bool same = true;
    for (std::size_t p = 0; p < ids.size(); ++p) same = same && param_name(ids[p]) == param_cols[p];
    if (same) {
      store.model = kind;
      matched = true;
    }
  }
  if (!matched) throw ParseError(name, 1, "header", "parameter columns match no model");
  const std::size_t np = param_cols.size();
  store.num_params = np;

  // First pass: voxel list from draw 0.
  std::vector<std::vector<std::string_view>> rows;
  rows.reserve(lines.size() - 1);
  for (std::size_t l = 1; l < lines.size(); ++l) {
    rows.push_back(split(lines[l]));
    if (rows.back().size() != header.size())
      throw DimensionError(name + ":" + std::to_string(l + 1) + ": expected " + std::to_string(header.size()) + " columns");
  }
  for (const auto& row : rows) {
    if (row[0] != "0") break;
    store.voxels.push_back(parse_index(name, store.voxels.size() + 2, "voxel", row[1]));
  }
  const std::size_t nk = store.voxels.size();
  if (nk == 0 || rows.size() % nk != 0) throw DimensionError(name + ": incomplete draws");
  store.draws = rows.size() / nk;
  const std::size_t nd = store.draws;
  store.params.assign(nk * np * nd, 0.0);
  store.deviance.assign(nk * nd, 0.0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t d = r / nk;
    const std::size_t k = r % nk;
    const auto& row = rows[r];
    if (parse_index(name, r + 2, "draw", row[0]) != d || parse_index(name, r + 2, "voxel", row[1]) != store.voxels[k])
      throw ParseError(name, r + 2, "draw", "rows out of order");
    for (std::size_t p = 0; p < np; ++p) store.params[(k * np + p) * nd + d] = parse_cell(name, r + 2, param_cols[p], row[2 + p]);
    store.deviance[k * nd + d] = parse_cell(name, r + 2, "deviance", row[2 + np]);
  }

  const fs::path globals_path = dir / "globals.csv";
  const std::string gname = globals_path.string();
  const auto glines = read_lines(globals_path);
  if (glines.size() != nd + 1) throw DimensionError(gname + ": draw count differs from samples.csv");
  const auto gheader = split(glines[0]);
  const bool spatial = gheader.size() > 2;
  if (spatial && gheader.size() != 2 + np) throw ParseError(gname, 1, "header", "unexpected precision columns");
  store.prior = spatial ? PriorMode::Spatial : PriorMode::Voxelwise;
  store.tau_eps.assign(nd, 0.0);
  if (spatial) store.tau_field.assign(np * nd, 0.0);
  for (std::size_t d = 0; d < nd; ++d) {
    const auto cells = split(glines[d + 1]);
    if (cells.size() != gheader.size()) throw DimensionError(gname + ":" + std::to_string(d + 2) + ": wrong column count");
    store.tau_eps[d] = parse_cell(gname, d + 2, "tau_eps", cells[1]);
    if (spatial)
      for (std::size_t p = 0; p < np; ++p) store.tau_field[p * nd + d] = parse_cell(gname, d + 2, gheader[2 + p], cells[2 + p]);
  }

  const fs::path acc_path = dir / "acceptance.csv";
  const std::string aname = acc_path.string();
  const auto alines = read_lines(acc_path);
  if (alines.size() != nk + 1) throw DimensionError(aname + ": voxel count differs from samples.csv");
  store.acceptance.assign(nk * np, 0.0);
  for (std::size_t k = 0; k < nk; ++k) {
    const auto cells = split(alines[k + 1]);
    if (cells.size() != np + 1) throw DimensionError(aname + ":" + std::to_string(k + 2) + ": wrong column count");
    for (std::size_t p = 0; p < np; ++p) store.acceptance[k * np + p] = parse_cell(aname, k + 2, param_cols[p], cells[1 + p]);
  }
  return store;
}

RunConfig parse_config(const json& doc) {
  RunConfig cfg;
  Section root(doc, "");

  if (auto model = root.child("model")) {
    std::string kind(model_name(cfg.fit.model));
    std::string prior(prior_mode_name(cfg.fit.prior));
    model->text("kind", kind);
    model->text("prior", prior);
    const auto k = parse_model_kind(kind);
    if (!k) throw ConfigError(model->key_path("kind"), "expected 1comp, 2comp or exttofts");
    const auto p = parse_prior_mode(prior);
    if (!p) throw ConfigError(model->key_path("prior"), "expected voxelwise or spatial");
    cfg.fit.model = *k;
    cfg.fit.prior = *p;
    model->finish();
  }

  if (auto priors = root.child("priors")) {
    if (auto vw = priors->child("voxelwise")) {
      auto& v = cfg.fit.voxelwise;
      vw->real("mu_theta1", v.mu_theta1);
      vw->real("mu_theta2", v.mu_theta2);
      vw->real("mu_gamma1", v.mu_gamma1);
      vw->real("mu_gamma2", v.mu_gamma2);
      vw->real("mu_logit_vp", v.mu_logit_vp);
      vw->positive("tau_theta1", v.tau_theta1);
      vw->positive("tau_theta2", v.tau_theta2);
      vw->positive("tau_gamma1", v.tau_gamma1);
      vw->positive("tau_gamma2", v.tau_gamma2);
      vw->positive("tau_logit_vp", v.tau_logit_vp);
      vw->finish();
    }
    if (auto sp = priors->child("spatial")) {
      auto& s = cfg.fit.spatial;
      sp->positive("a_theta1", s.a_theta1);
      sp->positive("b_theta1", s.b_theta1);
      sp->positive("a_theta2", s.a_theta2);
      sp->positive("b_theta2", s.b_theta2);
      sp->positive("a_gamma1", s.a_gamma1);
      sp->positive("b_gamma1", s.b_gamma1);
      sp->positive("a_gamma2", s.a_gamma2);
      sp->positive("b_gamma2", s.b_gamma2);
      sp->positive("a_logit_vp", s.a_logit_vp);
      sp->positive("b_logit_vp", s.b_logit_vp);
      sp->finish();
    }
    priors->finish();
  }

  if (auto sampler = root.child("sampler")) {
    auto& s = cfg.fit.sampler;
    sampler->count("burn_in", s.burn_in, std::size_t{1});
    sampler->count("iterations", s.iterations, std::size_t{1});
    sampler->count("thin", s.thin, std::size_t{1});
    sampler->positive("target_acceptance", s.target_acceptance);
    if (!(s.target_acceptance < 1.0)) throw ConfigError(sampler->key_path("target_acceptance"), "must be < 1");
    sampler->count("adapt_window", s.adapt_window, std::size_t{1});
    sampler->positive("initial_proposal_sd", s.initial_proposal_sd);
    sampler->count("seed", s.seed, std::uint64_t{0});
    sampler->count("progress_interval", s.progress_interval, std::size_t{1});
    if (s.stored_draws() == 0) throw ConfigError(sampler->key_path("iterations"), "stores no draws (iterations < thin)");
    sampler->finish();
  }

  if (auto noise = root.child("noise")) {
    noise->positive("expected_peak", cfg.fit.noise.expected_peak);
    noise->positive("target_snr", cfg.fit.noise.target_snr);
    noise->finish();
  }

  if (auto ph = root.child("phantom")) {
    auto& p = cfg.phantom;
    ph->count("nx", p.nx, std::size_t{1});
    ph->count("ny", p.ny, std::size_t{1});
    ph->count("num_times", p.num_times, std::size_t{2});
    ph->positive("dt", p.dt);
    if (auto aif = ph->child("aif")) read_aif(*aif, p.aif);
    ph->non_negative("sigma", p.sigma);
    ph->positive("jitter_lo", p.jitter_lo);
    ph->positive("jitter_hi", p.jitter_hi);
    if (p.jitter_hi < p.jitter_lo) throw ConfigError(ph->key_path("jitter_hi"), "must be >= jitter_lo");
    ph->positive("k_ep_slow", p.k_ep_slow);
    ph->positive("k_ep_fast", p.k_ep_fast);
    ph->positive("ramp_max", p.ramp_max);
    ph->positive("volume_two_comp", p.volume_two_comp);
    ph->count("seed", p.seed, std::uint64_t{0});
    ph->finish();
  }

  root.finish();
  return cfg;
}

RunConfig read_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), "cannot open configuration file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string(), e.what());
  }
  return parse_config(doc);
}

json config_to_json(const RunConfig& cfg) {
  const auto& f = cfg.fit;
  const auto& v = f.voxelwise;
  const auto& s = f.spatial;
  const auto& p = cfg.phantom;
  return {
      {"model", {{"kind", std::string(model_name(f.model))}, {"prior", std::string(prior_mode_name(f.prior))}}},
      {"priors",
       {{"voxelwise",
         {{"mu_theta1", v.mu_theta1},
          {"mu_theta2", v.mu_theta2},
          {"mu_gamma1", v.mu_gamma1},
          {"mu_gamma2", v.mu_gamma2},
          {"mu_logit_vp", v.mu_logit_vp},
          {"tau_theta1", v.tau_theta1},
          {"tau_theta2", v.tau_theta2},
          {"tau_gamma1", v.tau_gamma1},
          {"tau_gamma2", v.tau_gamma2},
          {"tau_logit_vp", v.tau_logit_vp}}},
        {"spatial",
         {{"a_theta1", s.a_theta1},
          {"b_theta1", s.b_theta1},
          {"a_theta2", s.a_theta2},
          {"b_theta2", s.b_theta2},
          {"a_gamma1", s.a_gamma1},
          {"b_gamma1", s.b_gamma1},
          {"a_gamma2", s.a_gamma2},
          {"b_gamma2", s.b_gamma2},
          {"a_logit_vp", s.a_logit_vp},
          {"b_logit_vp", s.b_logit_vp}}}}},
      {"sampler",
       {{"burn_in", f.sampler.burn_in},
        {"iterations", f.sampler.iterations},
        {"thin", f.sampler.thin},
        {"target_acceptance", f.sampler.target_acceptance},
        {"adapt_window", f.sampler.adapt_window},
        {"initial_proposal_sd", f.sampler.initial_proposal_sd},
        {"seed", f.sampler.seed},
        {"progress_interval", f.sampler.progress_interval}}},
      {"noise", {{"expected_peak", f.noise.expected_peak}, {"target_snr", f.noise.target_snr}}},
      {"phantom",
       {{"nx", p.nx},
        {"ny", p.ny},
        {"num_times", p.num_times},
        {"dt", p.dt},
        {"aif", aif_to_json(p.aif)},
        {"sigma", p.sigma},
        {"jitter_lo", p.jitter_lo},
        {"jitter_hi", p.jitter_hi},
        {"k_ep_slow", p.k_ep_slow},
        {"k_ep_fast", p.k_ep_fast},
        {"ramp_max", p.ramp_max},
        {"volume_two_comp", p.volume_two_comp},
        {"seed", p.seed}}},
  };
}

}  // namespace perfkit
