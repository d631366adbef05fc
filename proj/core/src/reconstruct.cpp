#include "cgmc/reconstruct.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "cgmc/rng.hpp"
#include "cgmc/stats.hpp"

namespace cgmc {

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  CounterRng derive(seed, tag + 17);
  return derive();
}

/// Samples an index from unnormalized log weights with a single uniform.
std::size_t sample_log_weights(const std::vector<double>& log_w, double u) {
  double max_lw = -std::numeric_limits<double>::infinity();
  for (double lw : log_w) max_lw = std::max(max_lw, lw);
  double total = 0.0;
  for (double lw : log_w) total += std::exp(lw - max_lw);
  double target = u * total;
  for (std::size_t i = 0; i < log_w.size(); ++i) {
    target -= std::exp(log_w[i] - max_lw);
    if (target <= 0.0) return i;
  }
  return log_w.size() - 1;
}

double span_cell_energy(std::span<const Spin> c, double coupling) {
  long long bonds = 0;
  for (std::size_t i = 0; i + 1 < c.size(); ++i) bonds += c[i] * c[i + 1];
  return coupling * static_cast<double>(bonds);
}

/// log Z factors of the two neighbor cells as functions of this cell's edge
/// spins: left factor uses the left neighbor pinned on its right side, right
/// factor the right neighbor pinned on its left side.
EdgeLogFactors even_cell_edges(const CoarseConfiguration& eta, int k, const ModelSpec& model,
                               const LatticeGeometry& geo, const CapacityPolicy& caps) {
  EdgeLogFactors edges;
  const int q = geo.cell_size;
  const int prev = geo.wrap_cell(k - 1);
  const int next = geo.wrap_cell(k + 1);
  for (int si = 0; si < 2; ++si) {
    const int s = si == 0 ? -1 : +1;
    edges.log_left[si] = std::log(oracle::cell_partition_function(
        eta[prev], oracle::BoundarySpec::fixed_right(s), model, q, caps));
    edges.log_right[si] = std::log(oracle::cell_partition_function(
        eta[next], oracle::BoundarySpec::fixed_left(s), model, q, caps));
  }
  return edges;
}

EdgeLogFactors odd_cell_edges(Spin s_left, Spin s_right, const ModelSpec& model) {
  EdgeLogFactors edges;
  const double bk = model.beta * model.short_range.coupling;
  for (int si = 0; si < 2; ++si) {
    const int s = si == 0 ? -1 : +1;
    edges.log_left[si] = -bk * s_left * s;
    edges.log_right[si] = -bk * s * s_right;
  }
  return edges;
}

std::vector<Spin> draw_cell(int q, int eta_k, const EdgeLogFactors& edges, const ModelSpec& model,
                            const ReconstructionPlan& plan, std::uint64_t cell_seed,
                            const CapacityPolicy& caps) {
  if (plan.exactness == ReconstructionPlan::Exactness::ExactEnumeration) {
    const auto slice = enumerate_cell_configs(q, eta_k, caps);
    std::vector<double> log_w(slice.size());
    for (std::size_t i = 0; i < slice.size(); ++i) {
      const auto& c = slice[i];
      log_w[i] = -model.beta * span_cell_energy(c, model.short_range.coupling) +
                 edges.left(c.front()) + edges.right(c.back());
    }
    CounterRng rng(cell_seed, 11);
    return slice[sample_log_weights(log_w, rng.uniform())];
  }
  // A single draw is the state at a random time in the second half of the
  // run. A fixed stopping time would bias slices on which every proposal is
  // accepted (the walk is then periodic).
  ChainConfig cfg;
  cfg.steps = std::max<std::uint64_t>(4, plan.mc_steps);
  cfg.burn_in = std::min(plan.mc_burn_in, cfg.steps / 2);
  cfg.thin = 1;
  cfg.seed = cell_seed;
  CounterRng pick_rng(cell_seed, 23);
  const std::uint64_t pick = pick_rng.uniform_int(cfg.retained());
  std::vector<Spin> draw;
  std::uint64_t index = 0;
  run_constrained_cell_chain_weighted(q, eta_k, edges, model, cfg,
                                      [&](std::span<const Spin> c) {
                                        if (index++ == pick) draw.assign(c.begin(), c.end());
                                      });
  return draw;
}

}  // namespace

SpinConfiguration reconstruct(const CoarseConfiguration& eta, const ModelSpec& model,
                              const LatticeGeometry& geo, const ReconstructionPlan& plan,
                              std::uint64_t seed, const CapacityPolicy& caps) {
  validate_coarse(eta, geo);
  const int q = geo.cell_size;
  SpinConfiguration sigma;
  sigma.spins.assign(static_cast<std::size_t>(geo.n_sites), Spin{0});

  // pass 1: even cells, mutually independent given the block values
  for (int k = 0; k < geo.n_cells; k += 2) {
    const auto edges = even_cell_edges(eta, k, model, geo, caps);
    const auto cell =
        draw_cell(q, eta[k], edges, model, plan, derive_seed(seed, 2ull * k), caps);
    std::copy(cell.begin(), cell.end(), sigma.spins.begin() + geo.cell_begin(k));
  }
  // pass 2: odd cells conditioned on their now-fixed neighbors' edge spins
  for (int k = 1; k < geo.n_cells; k += 2) {
    const int prev = geo.wrap_cell(k - 1);
    const int next = geo.wrap_cell(k + 1);
    const Spin s_left = sigma[geo.cell_begin(prev) + q - 1];
    const Spin s_right = sigma[geo.cell_begin(next)];
    const auto edges = odd_cell_edges(s_left, s_right, model);
    const auto cell =
        draw_cell(q, eta[k], edges, model, plan, derive_seed(seed, 2ull * k + 1), caps);
    std::copy(cell.begin(), cell.end(), sigma.spins.begin() + geo.cell_begin(k));
  }
  return sigma;
}

PartialConfiguration local_reconstruct(const CoarseConfiguration& eta, const CellWindow& window,
                                       const ModelSpec& model, const LatticeGeometry& geo,
                                       const ReconstructionPlan& plan, std::uint64_t seed,
                                       const CapacityPolicy& caps) {
  validate_coarse(eta, geo);
  if (window.length < 3) {
    throw DomainError("reconstruction window must span at least 3 cells");
  }
  if (window.length > geo.n_cells) {
    throw DomainError("reconstruction window exceeds the lattice");
  }
  const int q = geo.cell_size;
  const bool whole = window.length == geo.n_cells;

  std::vector<Spin> scratch(static_cast<std::size_t>(geo.n_sites), Spin{0});
  const auto draw_even = [&](int cell_index) {
    const int k = geo.wrap_cell(cell_index);
    const auto edges = even_cell_edges(eta, k, model, geo, caps);
    const auto cell =
        draw_cell(q, eta[k], edges, model, plan, derive_seed(seed, 2ull * k), caps);
    std::copy(cell.begin(), cell.end(), scratch.begin() + geo.cell_begin(k));
  };
  const auto draw_odd = [&](int cell_index) {
    const int k = geo.wrap_cell(cell_index);
    const int prev = geo.wrap_cell(k - 1);
    const int next = geo.wrap_cell(k + 1);
    const auto edges = odd_cell_edges(scratch[static_cast<std::size_t>(geo.cell_begin(prev) + q - 1)],
                                      scratch[static_cast<std::size_t>(geo.cell_begin(next))], model);
    const auto cell =
        draw_cell(q, eta[k], edges, model, plan, derive_seed(seed, 2ull * k + 1), caps);
    std::copy(cell.begin(), cell.end(), scratch.begin() + geo.cell_begin(k));
  };

  // even pass over the window plus a one-cell halo (halo only when needed)
  const int lo = whole ? window.begin : window.begin - 1;
  const int hi = whole ? window.begin + window.length - 1 : window.begin + window.length;
  for (int c = lo; c <= hi; ++c) {
    if (geo.wrap_cell(c) % 2 == 0) draw_even(c);
  }
  for (int c = window.begin; c < window.begin + window.length; ++c) {
    if (geo.wrap_cell(c) % 2 == 1) draw_odd(c);
  }

  PartialConfiguration out;
  out.window = window;
  out.spins.reserve(static_cast<std::size_t>(window.length) * q);
  for (int c = window.begin; c < window.begin + window.length; ++c) {
    const int k = geo.wrap_cell(c);
    for (int i = 0; i < q; ++i) {
      out.spins.push_back(scratch[static_cast<std::size_t>(geo.cell_begin(k) + i)]);
    }
  }
  return out;
}

std::vector<double> exact_reconstruction_law(const CoarseConfiguration& eta,
                                             const ModelSpec& model, const LatticeGeometry& geo,
                                             const CapacityPolicy& caps) {
  validate_coarse(eta, geo);
  caps.require_total(geo.n_sites);
  const int q = geo.cell_size;
  const double beta = model.beta;
  const double coupling = model.short_range.coupling;

  // per-cell probability tables
  std::vector<std::vector<std::vector<Spin>>> slices;
  std::vector<std::vector<double>> even_probs(static_cast<std::size_t>(geo.n_cells));
  // odd cells: probability per (left edge spin, right edge spin) pair
  std::vector<std::array<std::vector<double>, 4>> odd_probs(
      static_cast<std::size_t>(geo.n_cells));
  for (int k = 0; k < geo.n_cells; ++k) {
    slices.push_back(enumerate_cell_configs(q, eta[k], caps));
  }
  const auto normalize = [](std::vector<double>& log_w) {
    double max_lw = -std::numeric_limits<double>::infinity();
    for (double lw : log_w) max_lw = std::max(max_lw, lw);
    double total = 0.0;
    for (double lw : log_w) total += std::exp(lw - max_lw);
    for (double& lw : log_w) lw = std::exp(lw - max_lw) / total;
  };
  for (int k = 0; k < geo.n_cells; ++k) {
    const auto& slice = slices[static_cast<std::size_t>(k)];
    if (k % 2 == 0) {
      const auto edges = even_cell_edges(eta, k, model, geo, caps);
      std::vector<double> log_w(slice.size());
      for (std::size_t i = 0; i < slice.size(); ++i) {
        const auto& c = slice[i];
        log_w[i] = -beta * span_cell_energy(c, coupling) + edges.left(c.front()) +
                   edges.right(c.back());
      }
      normalize(log_w);
      even_probs[static_cast<std::size_t>(k)] = std::move(log_w);
    } else {
      for (int sl = 0; sl < 2; ++sl) {
        for (int sr = 0; sr < 2; ++sr) {
          const auto edges = odd_cell_edges(sl == 0 ? Spin{-1} : Spin{+1},
                                            sr == 0 ? Spin{-1} : Spin{+1}, model);
          std::vector<double> log_w(slice.size());
          for (std::size_t i = 0; i < slice.size(); ++i) {
            const auto& c = slice[i];
            log_w[i] = -beta * span_cell_energy(c, coupling) + edges.left(c.front()) +
                       edges.right(c.back());
          }
          normalize(log_w);
          odd_probs[static_cast<std::size_t>(k)][static_cast<std::size_t>(2 * sl + sr)] =
              std::move(log_w);
        }
      }
    }
  }

  // odometer over the per-cell slices, accumulating joint probabilities
  std::vector<double> law(static_cast<std::size_t>(1) << geo.n_sites, 0.0);
  std::vector<std::size_t> pick(static_cast<std::size_t>(geo.n_cells), 0);
  SpinConfiguration sigma;
  sigma.spins.assign(static_cast<std::size_t>(geo.n_sites), Spin{0});
  for (int k = 0; k < geo.n_cells; ++k) {
    const auto& c = slices[static_cast<std::size_t>(k)][0];
    std::copy(c.begin(), c.end(), sigma.spins.begin() + geo.cell_begin(k));
  }
  while (true) {
    double p = 1.0;
    for (int k = 0; k < geo.n_cells; k += 2) {
      p *= even_probs[static_cast<std::size_t>(k)][pick[static_cast<std::size_t>(k)]];
    }
    for (int k = 1; k < geo.n_cells; k += 2) {
      const int prev = geo.wrap_cell(k - 1);
      const int next = geo.wrap_cell(k + 1);
      const Spin s_left = sigma[geo.cell_begin(prev) + q - 1];
      const Spin s_right = sigma[geo.cell_begin(next)];
      const std::size_t which = static_cast<std::size_t>(2 * (s_left > 0 ? 1 : 0) +
                                                         (s_right > 0 ? 1 : 0));
      p *= odd_probs[static_cast<std::size_t>(k)][which][pick[static_cast<std::size_t>(k)]];
    }
    law[oracle::spin_state_index(sigma)] = p;

    int k = 0;
    while (k < geo.n_cells) {
      auto& pk = pick[static_cast<std::size_t>(k)];
      const auto& slice = slices[static_cast<std::size_t>(k)];
      if (++pk < slice.size()) {
        std::copy(slice[pk].begin(), slice[pk].end(), sigma.spins.begin() + geo.cell_begin(k));
        break;
      }
      pk = 0;
      std::copy(slice[0].begin(), slice[0].end(), sigma.spins.begin() + geo.cell_begin(k));
      ++k;
    }
    if (k == geo.n_cells) break;
  }
  return law;
}

std::vector<double> exact_composite_law(const ModelSpec& model, const LatticeGeometry& geo,
                                        const CoarseHamiltonian& cgh,
                                        const CapacityPolicy& caps) {
  caps.require_total(geo.n_sites);
  const auto h_table = h_cg0_table(cgh, geo);
  // normalized coarse Gibbs weights of the assembled Hamiltonian
  std::vector<double> log_w(h_table.size());
  LogSumExp lse;
  for_each_coarse_config(geo, [&](const CoarseConfiguration& eta) {
    const auto i = coarse_index(eta, geo);
    log_w[i] = coarse_prior_log_weight(eta, geo) - model.beta * h_table[i];
    lse.add(log_w[i]);
  });
  const double log_z = lse.value();

  std::vector<double> law(static_cast<std::size_t>(1) << geo.n_sites, 0.0);
  for_each_coarse_config(geo, [&](const CoarseConfiguration& eta) {
    const double w = std::exp(log_w[coarse_index(eta, geo)] - log_z);
    const auto nu = exact_reconstruction_law(eta, model, geo, caps);
    for (std::size_t i = 0; i < law.size(); ++i) law[i] += w * nu[i];
  });
  return law;
}

RoundtripReport roundtrip_check(const ModelSpec& model, const LatticeGeometry& geo,
                                const ReconstructionPlan& plan, const ChainConfig& cfg,
                                const CapacityPolicy& caps) {
  caps.require_total(geo.n_sites);
  const auto cgh = CoarseHamiltonian::build_exact(model, geo, caps);
  const auto gibbs = oracle::exact_gibbs_probabilities(model, geo, caps);
  const auto composite = exact_composite_law(model, geo, cgh, caps);

  RoundtripReport report;
  for (std::size_t i = 0; i < gibbs.size(); ++i) {
    report.analytic_total_variation += 0.5 * std::abs(composite[i] - gibbs[i]);
  }

  // exact reference observables
  double exact_m = 0.0, exact_e = 0.0;
  {
    std::size_t i = 0;
    for_each_spin_config(
        geo.n_sites,
        [&](const SpinConfiguration& s) {
          long long mag = 0;
          for (int x = 0; x < geo.n_sites; ++x) mag += s[x];
          exact_m += gibbs[i] * static_cast<double>(mag) / geo.n_sites;
          exact_e += gibbs[i] * h_total(s, model, geo) / geo.n_sites;
          ++i;
        },
        caps);
  }

  std::vector<std::uint64_t> histogram(gibbs.size(), 0);
  BatchMeans mag_stats(cfg.retained());
  BatchMeans energy_stats(cfg.retained());
  std::uint64_t draw_index = 0;
  run_cg_chain_collect(cgh, geo, cfg, [&](const CoarseConfiguration& eta) {
    const auto sigma =
        reconstruct(eta, model, geo, plan, derive_seed(cfg.seed, 0x5eed + draw_index), caps);
    ++draw_index;
    ++histogram[oracle::spin_state_index(sigma)];
    long long mag = 0;
    for (int x = 0; x < geo.n_sites; ++x) mag += sigma[x];
    mag_stats.add(static_cast<double>(mag) / geo.n_sites);
    energy_stats.add(h_total(sigma, model, geo) / geo.n_sites);
  });

  report.draws = draw_index;
  const double n = static_cast<double>(draw_index);
  for (std::size_t i = 0; i < gibbs.size(); ++i) {
    report.total_variation += 0.5 * std::abs(histogram[i] / n - gibbs[i]);
    report.tv_noise_scale +=
        0.5 * std::sqrt(2.0 * composite[i] * (1.0 - composite[i]) / (3.14159265358979 * n));
  }
  report.magnetization_gap = std::abs(mag_stats.mean() - exact_m);
  report.magnetization_stderr = mag_stats.std_error();
  report.energy_per_site_gap = std::abs(energy_stats.mean() - exact_e);
  report.energy_per_site_stderr = energy_stats.std_error();
  return report;
}

}  // namespace cgmc
