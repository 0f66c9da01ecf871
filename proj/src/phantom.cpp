#include "perfkit/phantom.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace perfkit {

namespace {

std::size_t scaled(std::size_t boundary, std::size_t extent) {
  return static_cast<std::size_t>(std::lround(static_cast<double>(boundary) * static_cast<double>(extent) / 25.0));
}

struct BaseParams {
  double k_ep1, k_ep2, k_trans1, k_trans2;
};

BaseParams base_params(const PhantomConfig& cfg, const Block& b, std::size_t row, std::size_t col) {
  const double v = cfg.volume_two_comp;
  switch (b.kind) {
    case BlockKind::TwoComp:
      return {cfg.k_ep_slow, cfg.k_ep_fast, cfg.k_ep_slow * v, cfg.k_ep_fast * v};
    case BlockKind::TwoCompRamp: {
      const double cr = 0.5 * static_cast<double>(b.row_begin + b.row_end - 1);
      const double cc = 0.5 * static_cast<double>(b.col_begin + b.col_end - 1);
      const double dmax = std::hypot(static_cast<double>(b.row_end - 1) - cr, static_cast<double>(b.col_begin) - cc);
      const double d = std::hypot(static_cast<double>(row) - cr, static_cast<double>(col) - cc);
      const double frac = dmax > 0.0 ? std::min(d / dmax, 1.0) : 0.0;
      const double k1 = cfg.k_ep_slow + (cfg.ramp_max - cfg.k_ep_slow) * frac;
      return {k1, cfg.k_ep_fast, k1 * v, cfg.k_ep_fast * v};
    }
    case BlockKind::OneCompSlow:
      return {cfg.k_ep_slow, cfg.k_ep_fast, cfg.k_ep_slow, 0.0};
    case BlockKind::OneCompFast:
      return {cfg.k_ep_slow, cfg.k_ep_fast, 0.0, cfg.k_ep_fast};
  }
  throw std::logic_error("unknown block kind");
}

}  // namespace

std::vector<Block> default_layout(std::size_t nx, std::size_t ny) {
  const std::size_t r_a = scaled(8, ny);
  const std::size_t r_mid = scaled(12, ny);
  const std::size_t r_d = scaled(18, ny);
  const std::size_t c_mid = scaled(12, nx);
  return {
      {'A', BlockKind::TwoComp, 0, r_a, 0, c_mid},
      {'B', BlockKind::TwoComp, 0, r_mid, c_mid, nx},
      {'C', BlockKind::TwoCompRamp, r_a, ny, 0, c_mid},
      {'D', BlockKind::OneCompSlow, r_mid, r_d, c_mid, nx},
      {'E', BlockKind::OneCompFast, r_d, ny, c_mid, nx},
  };
}

void PhantomConfig::validate() const {
  if (nx == 0 || ny == 0) throw std::invalid_argument("phantom grid must be non-empty");
  if (num_times < 2) throw std::invalid_argument("phantom needs at least two time points");
  if (!(dt > 0.0)) throw std::invalid_argument("phantom dt must be positive");
  aif.validate();
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("phantom noise sigma must be >= 0");
  if (!(jitter_lo > 0.0) || !(jitter_lo <= jitter_hi)) throw std::invalid_argument("jitter bounds need 0 < lo <= hi");
  if (!(k_ep_slow > 0.0) || !(k_ep_fast > 0.0) || !(ramp_max > 0.0) || !(volume_two_comp > 0.0))
    throw std::invalid_argument("phantom kinetic constants must be positive");
}

Phantom generate_phantom(const PhantomConfig& config) {
  config.validate();
  const std::vector<Block> layout = config.layout.empty() ? default_layout(config.nx, config.ny) : config.layout;
  const std::size_t n = config.nx * config.ny;
  const std::size_t nt = config.num_times;

  Phantom out;
  Dataset& ds = out.dataset;
  ds.nx = config.nx;
  ds.ny = config.ny;
  ds.mask.assign(n, 1);
  ds.grid = TimeGrid::uniform(nt, config.dt);
  ds.aif = config.aif;
  ds.observed.assign(n * nt, 0.0);

  GroundTruth& gt = out.truth;
  gt.nx = config.nx;
  gt.ny = config.ny;
  for (auto* v : {&gt.k_ep1, &gt.k_ep2, &gt.k_trans1, &gt.k_trans2, &gt.v_t1, &gt.v_t2}) v->assign(n, 0.0);
  gt.block.assign(n, '.');

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> jitter(config.jitter_lo, config.jitter_hi);
  std::normal_distribution<double> noise(0.0, 1.0);

  for (std::size_t row = 0; row < config.ny; ++row) {
    for (std::size_t col = 0; col < config.nx; ++col) {
      const std::size_t i = row * config.nx + col;
      const Block* block = nullptr;
      for (const auto& b : layout)
        if (b.contains(row, col)) {
          block = &b;
          break;
        }
      if (!block) throw std::invalid_argument("phantom layout leaves a voxel uncovered");

      BaseParams p = base_params(config, *block, row, col);
      p.k_ep1 *= jitter(rng);
      p.k_ep2 *= jitter(rng);
      p.k_trans1 *= jitter(rng);
      p.k_trans2 *= jitter(rng);

      gt.block[i] = block->label;
      gt.k_ep1[i] = p.k_ep1;
      gt.k_ep2[i] = p.k_ep2;
      gt.k_trans1[i] = p.k_trans1;
      gt.k_trans2[i] = p.k_trans2;
      gt.v_t1[i] = p.k_trans1 / p.k_ep1;
      gt.v_t2[i] = p.k_trans2 / p.k_ep2;

      auto y = ds.series(i);
      for (std::size_t j = 0; j < nt; ++j) {
        const double t = ds.grid[j];
        y[j] = conv_exp(config.aif, p.k_trans1, p.k_ep1, t) + conv_exp(config.aif, p.k_trans2, p.k_ep2, t);
        y[j] += config.sigma * noise(rng);  // drawn even when sigma is 0 so the stream is fixed
      }
    }
  }
  return out;
}

}  // namespace perfkit
