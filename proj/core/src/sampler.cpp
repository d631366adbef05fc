#include "cgmc/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cgmc/rng.hpp"
#include "cgmc/stats.hpp"

namespace cgmc {

ObservableSpec observable_from_string(const std::string& text) {
  if (text == "magnetization") return ObservableSpec::magnetization();
  if (text == "energy") return ObservableSpec::energy();
  if (text == "block_profile") return ObservableSpec::block_profile();
  if (text.rfind("two_point:", 0) == 0) {
    const int r = std::stoi(text.substr(10));
    if (r < 1) throw ConfigError("two_point distance must be >= 1");
    return ObservableSpec::two_point(r);
  }
  throw ConfigError("unknown observable '" + text + "'");
}

void ChainConfig::validate() const {
  if (steps == 0) throw ConfigError("chain needs steps > 0");
  if (burn_in >= steps) throw ConfigError("chain burn_in must be smaller than steps");
  if (thin == 0) throw ConfigError("chain thin must be >= 1");
}

namespace {

std::vector<std::string> observable_names(const std::vector<ObservableSpec>& specs,
                                          const LatticeGeometry& geo) {
  std::vector<std::string> names;
  for (const auto& spec : specs) {
    switch (spec.kind) {
      case ObservableSpec::Kind::Magnetization: names.emplace_back("magnetization"); break;
      case ObservableSpec::Kind::Energy: names.emplace_back("energy"); break;
      case ObservableSpec::Kind::TwoPoint:
        names.push_back("two_point_" + std::to_string(spec.distance));
        break;
      case ObservableSpec::Kind::BlockProfile:
        for (int k = 0; k < geo.n_cells; ++k) names.push_back("block_" + std::to_string(k));
        break;
    }
  }
  return names;
}

class ColumnStats {
 public:
  ColumnStats(std::vector<std::string> names, std::uint64_t expected) : names_(std::move(names)) {
    stats_.reserve(names_.size());
    for (std::size_t i = 0; i < names_.size(); ++i) stats_.emplace_back(expected);
  }

  void add_row(std::span<const double> values) {
    for (std::size_t i = 0; i < stats_.size(); ++i) stats_[i].add(values[i]);
  }

  std::vector<ObservableStats> finish() const {
    std::vector<ObservableStats> out;
    out.reserve(stats_.size());
    for (std::size_t i = 0; i < stats_.size(); ++i) {
      ObservableStats s;
      s.name = names_[i];
      s.mean = stats_[i].mean();
      s.std_error = stats_[i].std_error();
      s.tau_int = stats_[i].tau_int();
      s.count = stats_[i].count();
      out.push_back(std::move(s));
    }
    return out;
  }

 private:
  std::vector<std::string> names_;
  std::vector<BatchMeans> stats_;
};

}  // namespace

std::vector<std::string> micro_observable_names(const std::vector<ObservableSpec>& specs,
                                                const LatticeGeometry& geo) {
  return observable_names(specs, geo);
}

std::vector<std::string> cg_observable_names(const std::vector<ObservableSpec>& specs,
                                             const LatticeGeometry& geo) {
  return observable_names(specs, geo);
}

MicroChainResult run_micro_chain(const ModelSpec& model, const LatticeGeometry& geo,
                                 const ChainConfig& cfg, const RowSink& sink) {
  cfg.validate();
  const int n = geo.n_sites;
  const double coupling = model.short_range.coupling;
  const double beta = model.beta;
  CounterRng rng(cfg.seed, /*stream=*/1);

  SpinConfiguration sigma;
  sigma.spins.resize(static_cast<std::size_t>(n));
  long long spin_sum = 0;
  for (auto& s : sigma.spins) {
    s = static_cast<Spin>(rng.spin());
    spin_sum += s;
  }
  std::vector<int> block(static_cast<std::size_t>(geo.n_cells), 0);
  for (int k = 0; k < geo.n_cells; ++k) {
    int sum = 0;
    for (int i = 0; i < geo.cell_size; ++i) sum += sigma[geo.cell_begin(k) + i];
    block[static_cast<std::size_t>(k)] = sum;
  }

  // kernel row restricted to its support
  std::vector<double> row;
  int reach = 0;
  if (model.long_range) {
    const auto table = tabulate_kernel(*model.long_range, geo);
    row = table.values;
    for (int r = 1; r <= table.max_distance(); ++r) {
      if (table.at(r) != 0.0) reach = r;
    }
  }

  double energy = h_total(sigma, model, geo);
  const auto names = observable_names(cfg.observables, geo);
  ColumnStats stats(names, cfg.retained());
  std::vector<double> values(names.size());

  std::uint64_t accepted = 0;
  for (std::uint64_t t = 1; t <= cfg.steps; ++t) {
    const int x = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n)));
    const Spin sx = sigma[x];
    const int left = sigma[(x + n - 1) % n];
    const int right = sigma[(x + 1) % n];
    double delta = -2.0 * coupling * sx * (left + right);
    if (reach > 0) {
      double field = 0.0;
      for (int r = 1; r <= reach; ++r) {
        const double j = row[static_cast<std::size_t>(r - 1)];
        if (j == 0.0) continue;
        if (2 * r == n) {
          field += j * sigma[(x + r) % n];  // antipodal partner appears once
        } else {
          field += j * (sigma[(x + r) % n] + sigma[(x + n - r % n) % n]);
        }
      }
      delta += 2.0 * sx * field;
    }
    if (delta <= 0.0 || rng.uniform() < std::exp(-beta * delta)) {
      sigma[x] = static_cast<Spin>(-sx);
      spin_sum -= 2 * sx;
      block[static_cast<std::size_t>(geo.cell_of(x))] -= 2 * sx;
      energy += delta;
      ++accepted;
    }
    if (t > cfg.burn_in && (t - cfg.burn_in) % cfg.thin == 0) {
      std::size_t col = 0;
      for (const auto& spec : cfg.observables) {
        switch (spec.kind) {
          case ObservableSpec::Kind::Magnetization:
            values[col++] = static_cast<double>(spin_sum) / n;
            break;
          case ObservableSpec::Kind::Energy:
            values[col++] = energy / n;
            break;
          case ObservableSpec::Kind::TwoPoint: {
            const int r = spec.distance;
            long long corr = 0;
            for (int y = 0; y < n; ++y) corr += sigma[y] * sigma[(y + r) % n];
            values[col++] = static_cast<double>(corr) / n;
            break;
          }
          case ObservableSpec::Kind::BlockProfile:
            for (int k = 0; k < geo.n_cells; ++k) {
              values[col++] = block[static_cast<std::size_t>(k)];
            }
            break;
        }
      }
      stats.add_row(values);
      if (sink) sink(t, values);
    }
  }

  MicroChainResult result;
  result.stats.observables = stats.finish();
  result.stats.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(cfg.steps);
  result.stats.retained = cfg.retained();
  result.final_state = std::move(sigma);
  result.energy_drift = std::abs(energy - h_total(result.final_state, model, geo));
  return result;
}

CgChainResult run_cg_chain_collect(const CoarseHamiltonian& cgh, const LatticeGeometry& geo,
                                   const ChainConfig& cfg,
                                   const std::function<void(const CoarseConfiguration&)>& on_sample,
                                   const RowSink& sink) {
  cfg.validate();
  const int q = geo.cell_size;
  const int m = geo.n_cells;
  const int n = geo.n_sites;
  CounterRng rng(cfg.seed, /*stream=*/2);

  // initial state drawn from the block prior
  CoarseConfiguration eta;
  eta.blocks.resize(static_cast<std::size_t>(m));
  long long block_sum = 0;
  for (auto& e : eta.blocks) {
    int sum = 0;
    for (int i = 0; i < q; ++i) sum += rng.spin();
    e = sum;
    block_sum += sum;
  }

  double energy = h_cg0(eta, cgh, geo);
  const auto names = observable_names(cfg.observables, geo);
  ColumnStats stats(names, cfg.retained());
  std::vector<double> values(names.size());

  std::uint64_t accepted = 0;
  for (std::uint64_t t = 1; t <= cfg.steps; ++t) {
    const int k = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(m)));
    const int direction = (rng() >> 63) ? +2 : -2;
    const int proposed = eta[k] + direction;
    if (proposed >= -q && proposed <= q) {
      const double delta = h_cg0_delta(eta, k, proposed, cgh, geo);
      const double log_ratio = cell_log_prior(q, proposed) - cell_log_prior(q, eta[k]) -
                               cgh.beta * delta;
      if (log_ratio >= 0.0 || rng.uniform() < std::exp(log_ratio)) {
        block_sum += proposed - eta[k];
        eta[k] = proposed;
        energy += delta;
        ++accepted;
      }
    }
    if (t > cfg.burn_in && (t - cfg.burn_in) % cfg.thin == 0) {
      std::size_t col = 0;
      for (const auto& spec : cfg.observables) {
        switch (spec.kind) {
          case ObservableSpec::Kind::Magnetization:
            values[col++] = static_cast<double>(block_sum) / n;
            break;
          case ObservableSpec::Kind::Energy:
            values[col++] = energy / n;
            break;
          case ObservableSpec::Kind::TwoPoint: {
            const int r = spec.distance;
            double corr = 0.0;
            for (int kk = 0; kk < m; ++kk) {
              corr += static_cast<double>(eta[kk]) * eta[(kk + r) % m];
            }
            values[col++] = corr / (static_cast<double>(m) * q * q);
            break;
          }
          case ObservableSpec::Kind::BlockProfile:
            for (int kk = 0; kk < m; ++kk) values[col++] = eta[kk];
            break;
        }
      }
      stats.add_row(values);
      if (sink) sink(t, values);
      if (on_sample) on_sample(eta);
    }
  }

  CgChainResult result;
  result.stats.observables = stats.finish();
  result.stats.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(cfg.steps);
  result.stats.retained = cfg.retained();
  result.final_state = eta;
  result.energy_drift = std::abs(energy - h_cg0(eta, cgh, geo));
  return result;
}

CgChainResult run_cg_chain(const CoarseHamiltonian& cgh, const LatticeGeometry& geo,
                           const ChainConfig& cfg, const RowSink& sink) {
  return run_cg_chain_collect(cgh, geo, cfg, {}, sink);
}

ConstrainedChainResult run_constrained_cell_chain_weighted(int q, int eta,
                                                           const EdgeLogFactors& edges,
                                                           const ModelSpec& model,
                                                           const ChainConfig& cfg,
                                                           const CellSink& sink) {
  cfg.validate();
  if (!block_value_admissible(q, eta)) {
    throw DomainError("block value " + std::to_string(eta) + " is not admissible for q=" +
                      std::to_string(q));
  }
  const double coupling = model.short_range.coupling;
  const double beta = model.beta;
  CounterRng rng(cfg.seed, /*stream=*/3);

  // deterministic initial slice member: minus block then plus block
  std::vector<Spin> cell(static_cast<std::size_t>(q), Spin{-1});
  const int n_plus = (eta + q) / 2;
  const int n_minus = q - n_plus;
  std::fill(cell.end() - n_plus, cell.end(), Spin{+1});

  std::vector<int> plus_sites, minus_sites;
  std::vector<int> slot(static_cast<std::size_t>(q));  // site -> index in its list
  for (int i = 0; i < q; ++i) {
    auto& list = cell[static_cast<std::size_t>(i)] > 0 ? plus_sites : minus_sites;
    slot[static_cast<std::size_t>(i)] = static_cast<int>(list.size());
    list.push_back(i);
  }

  const auto log_weight = [&](const std::vector<Spin>& c) {
    long long bonds = 0;
    for (int i = 0; i + 1 < q; ++i) bonds += c[static_cast<std::size_t>(i)] * c[static_cast<std::size_t>(i + 1)];
    return -beta * coupling * static_cast<double>(bonds) + edges.left(c.front()) +
           edges.right(c.back());
  };

  const bool degenerate = n_plus == 0 || n_minus == 0;
  double current_lw = log_weight(cell);
  std::uint64_t accepted = 0;
  std::uint64_t proposals = 0;
  std::uint64_t retained = 0;
  for (std::uint64_t t = 1; t <= cfg.steps; ++t) {
    if (!degenerate) {
      ++proposals;
      const int pi = static_cast<int>(rng.uniform_int(plus_sites.size()));
      const int mi = static_cast<int>(rng.uniform_int(minus_sites.size()));
      const int i = plus_sites[static_cast<std::size_t>(pi)];
      const int j = minus_sites[static_cast<std::size_t>(mi)];
      cell[static_cast<std::size_t>(i)] = Spin{-1};
      cell[static_cast<std::size_t>(j)] = Spin{+1};
      const double proposed_lw = log_weight(cell);
      const double log_ratio = proposed_lw - current_lw;
      if (log_ratio >= 0.0 || rng.uniform() < std::exp(log_ratio)) {
        plus_sites[static_cast<std::size_t>(pi)] = j;
        minus_sites[static_cast<std::size_t>(mi)] = i;
        std::swap(slot[static_cast<std::size_t>(i)], slot[static_cast<std::size_t>(j)]);
        current_lw = proposed_lw;
        ++accepted;
      } else {
        cell[static_cast<std::size_t>(i)] = Spin{+1};
        cell[static_cast<std::size_t>(j)] = Spin{-1};
      }
    }
    if (t > cfg.burn_in && (t - cfg.burn_in) % cfg.thin == 0) {
      ++retained;
      if (sink) sink(std::span<const Spin>(cell.data(), cell.size()));
    }
  }

  ConstrainedChainResult result;
  result.acceptance_rate =
      proposals == 0 ? 1.0 : static_cast<double>(accepted) / static_cast<double>(proposals);
  result.retained = retained;
  result.final_state = std::move(cell);
  return result;
}

ConstrainedChainResult run_constrained_cell_chain(int q, int eta, const oracle::BoundarySpec& bc,
                                                  const ModelSpec& model, const ChainConfig& cfg,
                                                  const CellSink& sink) {
  EdgeLogFactors edges;
  const double bk = model.beta * model.short_range.coupling;
  if (bc.left) {
    edges.log_left[0] = -bk * (*bc.left) * -1;
    edges.log_left[1] = -bk * (*bc.left) * +1;
  }
  if (bc.right) {
    edges.log_right[0] = -bk * -1 * (*bc.right);
    edges.log_right[1] = -bk * +1 * (*bc.right);
  }
  return run_constrained_cell_chain_weighted(q, eta, edges, model, cfg, sink);
}

}  // namespace cgmc
